//! Casimir interaction between two spheres (and the plane-sphere limit) in the
//! plane-wave scattering basis.
//!
//! The free energy is built from the round-trip operator of an electromagnetic
//! wave bouncing between the two surfaces,
//!
//! ```text
//! F = -(k_B T / 2) Σ_n Σ_r (1/r) tr M^r(|ξ_n|),   M = R1 T R2 T,
//! ```
//!
//! evaluated on the imaginary frequency axis at the Matsubara frequencies
//! ξ_n = 2π n k_B T / ħ.  Two routes to the trace are provided:
//!
//! * [`roundtrip`] — numerical quadrature of tr M^r in the plane-wave basis,
//!   with exact Mie amplitudes ([`mie`]) or their specular-reflection
//!   asymptotics ([`wkb`]);
//! * [`pfa`] — the closed-form proximity-force limit obtained by a
//!   saddle-point evaluation of the same trace ([`saddle`]).
//!
//! Comparing the two demonstrates numerically that the proximity force
//! approximation is the specular-reflection limit of Mie scattering at short
//! separations.
//!
//! Public interfaces use SI units (m, K, rad/s, J, N).  Internally lengths are
//! scaled by the surface-to-surface gap so quadrature variables stay O(1).

pub mod constants;
pub mod geometry;
pub mod logspace;
pub mod materials;
pub mod mie;
pub mod pfa;
pub mod polarization;
pub mod quadrature;
pub mod roundtrip;
pub mod saddle;
pub mod wkb;

pub use geometry::Geometry;
pub use logspace::LogScaled;
pub use materials::{DielectricModel, FresnelPair};
pub use pfa::ThermalSpec;
pub use polarization::{PlaneWaveMode, Polarization};

/// Error type shared by all modules.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Invalid argument or state (maps to CLI exit code 2).
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative scheme or quadrature failed its convergence gate
    /// (CLI exit code 3).
    #[error("nonconvergence: {0}")]
    Nonconvergence(String),
    /// Requested computation exceeds the configured evaluation budget
    /// (CLI exit code 4).
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn nonconvergence(msg: impl Into<String>) -> Self {
        Error::Nonconvergence(msg.into())
    }
}
