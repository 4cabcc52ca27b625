//! Plane-wave modes and the polarization basis change between the fixed-axis
//! (TE/TM) basis and the scattering-plane (⊥/∥) basis.
//!
//! A mode is labelled by imaginary frequency ξ, transverse wavenumber k,
//! azimuth φ, axial propagation sign s = ±1 and polarization; the axial decay
//! rate is κ = √(ξ²/c² + k²).  Scattering at a sphere conserves polarization
//! in the scattering-plane basis, so fixed-axis matrix elements mix TE and TM
//! through four coefficients A, B, C, D that depend on both wave vectors.
//! On the saddle-point manifold (equal azimuths) the mixing disappears:
//! (A,B,C,D) = (1,0,0,0).

use crate::constants::SPEED_OF_LIGHT;
use crate::logspace::LogScaled;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    Te,
    Tm,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Te, Polarization::Tm];

    pub fn index(&self) -> usize {
        match self {
            Polarization::Te => 0,
            Polarization::Tm => 1,
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarization::Te => write!(f, "TE"),
            Polarization::Tm => write!(f, "TM"),
        }
    }
}

/// A plane-wave basis mode at imaginary frequency.
///
/// The propagation sign `s` is the up/down label of the axial wave-vector
/// component (±1).  It is named `s` rather than φ to avoid colliding with
/// the azimuth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWaveMode {
    pub xi: f64,
    pub k: f64,
    pub phi: f64,
    pub s: i8,
    pub pol: Polarization,
    kappa: f64,
}

impl PlaneWaveMode {
    pub fn new(xi: f64, k: f64, phi: f64, s: i8, pol: Polarization) -> Result<Self> {
        if !(xi >= 0.0) || !xi.is_finite() {
            return Err(Error::domain(format!("mode frequency must be >= 0, got {xi}")));
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::domain(format!("transverse wavenumber must be >= 0, got {k}")));
        }
        if s != 1 && s != -1 {
            return Err(Error::domain("propagation sign must be +1 or -1"));
        }
        let kappa = (xi / SPEED_OF_LIGHT).hypot(k);
        Ok(Self {
            xi,
            k,
            phi: phi.rem_euclid(2.0 * std::f64::consts::PI),
            s,
            pol,
            kappa,
        })
    }

    /// Axial decay rate κ = √(ξ²/c² + k²).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_polarization(&self, pol: Polarization) -> Self {
        Self { pol, ..*self }
    }

    /// The mode with wave vector negated: azimuth rotated by π, axial sign
    /// flipped.
    pub fn negated(&self) -> Self {
        Self {
            phi: (self.phi + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI),
            s: -self.s,
            ..*self
        }
    }
}

/// Basis-change coefficients for fixed-axis reflection matrix elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbcdCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// The four TE/TM basis-vector scalar products between two modes, used as an
/// independent oracle for [`abcd`].
#[derive(Clone, Copy, Debug)]
pub struct BasisDotProducts {
    pub te_te: f64,
    pub tm_tm: f64,
    pub te_tm: f64,
    pub tm_te: f64,
}

fn check_shared_frequency(mode_i: &PlaneWaveMode, mode_j: &PlaneWaveMode) -> Result<()> {
    if mode_i.xi != mode_j.xi {
        return Err(Error::domain(format!(
            "modes must share the imaginary frequency ({} vs {})",
            mode_i.xi, mode_j.xi
        )));
    }
    Ok(())
}

/// Polarization-mixing coefficients for scattering from `mode_i` into
/// `mode_j`.
///
/// The denominator ξ⁴ - c⁴[k_i k_j cos φ - s_i s_j κ_i κ_j]² vanishes when
/// the generalized scattering-angle cosine reaches ±1; the Δφ → 0 case is
/// the analytic limit (1,0,0,0), any other degeneracy is rejected.
pub fn abcd(mode_i: &PlaneWaveMode, mode_j: &PlaneWaveMode) -> Result<AbcdCoefficients> {
    check_shared_frequency(mode_i, mode_j)?;
    let c = SPEED_OF_LIGHT;
    let xi = mode_i.xi;
    let ss = (mode_i.s * mode_j.s) as f64;
    if xi == 0.0 {
        return Ok(AbcdCoefficients {
            a: -ss,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        });
    }
    let dphi = mode_j.phi - mode_i.phi;
    let (sin_phi, cos_phi) = dphi.sin_cos();
    let ch2 = {
        let h = (0.5 * dphi).cos();
        h * h // (1 + cos φ)/2, exact near φ = π
    };
    let ki = mode_i.k;
    let kj = mode_j.k;
    let (kap_i, kap_j) = (mode_i.kappa, mode_j.kappa);
    let si = mode_i.s as f64;
    let sj = mode_j.s as f64;
    // Work in wavenumber units: tm = ξ/c; A..D are dimensionless.
    let tm = xi / c;
    let tm2 = tm * tm;
    let p = ki * kj;
    let kap = kap_i * kap_j;
    if ss > 0.0 {
        // Transmission-type orientation: keep the direct forms (the trace
        // machinery only scatters between counter-propagating modes).
        let g = p * cos_phi - kap;
        let den = (tm2 - g) * (tm2 + g);
        let scale = tm2 * tm2 + g * g;
        if den.abs() <= 1e-12 * scale {
            return Err(Error::domain(
                "degenerate polarization-mixing denominator for co-propagating modes",
            ));
        }
        let a = (tm2 * tm2 * cos_phi - g * (p - kap * cos_phi)) / den;
        let b = -tm2 * p * sin_phi * sin_phi / den;
        let cc = tm * sin_phi * (p * si * kap_i * cos_phi - ki * ki * sj * kap_j) / den;
        let d = tm * sin_phi * (p * sj * kap_j * cos_phi - kj * kj * si * kap_i) / den;
        return Ok(AbcdCoefficients { a, b, c: cc, d });
    }
    // Counter-propagating modes (s_i s_j = -1): all combinations below are
    // assembled from nonnegative pieces so that near-axis and near-backward
    // configurations lose no precision.
    //   kmk = κ_iκ_j - k_ik_j,   qmk = (κ_iκ_j - tm²) - k_ik_j.
    let denom_h = kap + p;
    let sum_h = tm2 + ki * ki + kj * kj;
    let kmk = tm2 * sum_h / denom_h;
    let diff = ki * kap_i - kj * kap_j;
    let qmk = tm2 * diff * diff / ((sum_h + denom_h) * denom_h);
    let d_minus = qmk + 2.0 * p * ch2; // -(tm² - g)
    let d_plus = tm2 + kmk + 2.0 * p * ch2; // tm² + g
    let den = -(d_minus * d_plus);
    let g = p * cos_phi + kap;
    let scale = tm2 * tm2 + g * g;
    if den.abs() <= 1e-12 * scale {
        // cos Θ = -1: the coefficient split degenerates to a one-parameter
        // family; the limits along the approach paths are analytic.
        if sin_phi.abs() < 1e-9 {
            // Δφ -> 0 gives (1,0,0,0); Δφ -> π (equal k) gives (-1,0,0,0).
            return Ok(AbcdCoefficients {
                a: cos_phi.signum(),
                b: 0.0,
                c: 0.0,
                d: 0.0,
            });
        }
        if p <= 1e-10 * tm2 {
            // Both modes essentially on axis: A -> cos(Δφ).
            return Ok(AbcdCoefficients {
                a: cos_phi,
                b: 0.0,
                c: 0.0,
                d: 0.0,
            });
        }
        return Err(Error::domain(
            "degenerate polarization-mixing denominator at finite azimuth",
        ));
    }
    // A's numerator tm⁴cosφ - g(p + kap·cosφ) reduces to a two-term form in
    // which both pieces share a sign for cos φ > 0 and stay well separated
    // in scale for cos φ < 0.
    let num_a = -cos_phi * qmk * (kmk + tm2) - 4.0 * p * kap * ch2 * ch2;
    let a = num_a / den;
    let b = -tm2 * p * sin_phi * sin_phi / den;
    let cross = ki * kap_j + kj * kap_i;
    let bracket_c = tm2 * (ki * ki - kj * kj) / cross + 2.0 * kj * kap_i * ch2;
    let cc = tm * sin_phi * si * ki * bracket_c / den;
    let bracket_d = tm2 * (kj * kj - ki * ki) / cross + 2.0 * ki * kap_j * ch2;
    let d = tm * sin_phi * sj * kj * bracket_d / den;
    Ok(AbcdCoefficients { a, b, c: cc, d })
}

/// Direct evaluation of the four TE/TM basis-vector scalar products.
pub fn basis_dot_products(mode_i: &PlaneWaveMode, mode_j: &PlaneWaveMode) -> Result<BasisDotProducts> {
    check_shared_frequency(mode_i, mode_j)?;
    let xi = mode_i.xi;
    if xi == 0.0 {
        return Err(Error::domain(
            "basis dot products need xi > 0 (TM vectors carry 1/xi factors)",
        ));
    }
    let c = SPEED_OF_LIGHT;
    let dphi = mode_j.phi - mode_i.phi;
    let (sin_phi, cos_phi) = dphi.sin_cos();
    let ss = (mode_i.s * mode_j.s) as f64;
    let tm2 = (xi / c) * (xi / c);
    let tm_tm = if ss < 0.0 {
        // Stable split of -(k_ik_j + κ_iκ_j cos φ)/tm².
        let (kmk, _, ch2) = stable_kinematics(mode_i, mode_j);
        (kmk - 2.0 * mode_i.kappa * mode_j.kappa * ch2) / tm2
    } else {
        -(mode_i.k * mode_j.k - mode_i.kappa * mode_j.kappa * cos_phi) / tm2
    };
    Ok(BasisDotProducts {
        te_te: cos_phi,
        tm_tm,
        te_tm: -(c * mode_j.s as f64 * mode_j.kappa / xi) * sin_phi,
        tm_te: (c * mode_i.s as f64 * mode_i.kappa / xi) * sin_phi,
    })
}

/// Cancellation-free building blocks for counter-propagating mode pairs:
/// (κ_iκ_j - k_ik_j,  κ_iκ_j - tm² - k_ik_j,  cos²(Δφ/2)), with tm = ξ/c.
fn stable_kinematics(mode_i: &PlaneWaveMode, mode_j: &PlaneWaveMode) -> (f64, f64, f64) {
    let c = SPEED_OF_LIGHT;
    let tm2 = (mode_i.xi / c) * (mode_i.xi / c);
    let p = mode_i.k * mode_j.k;
    let kap = mode_i.kappa * mode_j.kappa;
    let denom_h = kap + p;
    let sum_h = tm2 + mode_i.k * mode_i.k + mode_j.k * mode_j.k;
    let kmk = tm2 * sum_h / denom_h;
    let diff = mode_i.k * mode_i.kappa - mode_j.k * mode_j.kappa;
    let qmk = tm2 * diff * diff / ((sum_h + denom_h) * denom_h);
    let h = (0.5 * (mode_j.phi - mode_i.phi)).cos();
    (kmk, qmk, h * h)
}

/// Generalized scattering-angle cosine K̂_i·K̂_j; equals the backscattering
/// form -(c²/ξ²)(k_i·k_j + κ_iκ_j) ≤ -1 for opposite propagation signs.
pub fn cos_theta_general(mode_i: &PlaneWaveMode, mode_j: &PlaneWaveMode) -> f64 {
    let c = SPEED_OF_LIGHT;
    let tm2 = (mode_i.xi / c) * (mode_i.xi / c);
    if mode_i.s != mode_j.s {
        let (_, qmk, ch2) = stable_kinematics(mode_i, mode_j);
        -1.0 - (qmk + 2.0 * mode_i.k * mode_j.k * ch2) / tm2
    } else {
        let dphi = mode_j.phi - mode_i.phi;
        -(mode_i.k * mode_j.k * dphi.cos() - mode_i.kappa * mode_j.kappa) / tm2
    }
}

/// Supplier of reflection matrix elements for arbitrary mode pairs; the
/// trait's single method returns ⟨out|R|in⟩ as a log-scaled value.
pub trait ReflectionElements {
    fn element(&self, out: &PlaneWaveMode, inc: &PlaneWaveMode) -> Result<LogScaled>;
}

/// Result of a reciprocity test on one mode pair.
#[derive(Clone, Copy, Debug)]
pub struct ReciprocityCheck {
    pub passed: bool,
    pub residual: f64,
}

const RECIPROCITY_TOL: f64 = 1e-10;

/// Verifies κ_i⟨K_i,p_i|R|K_j,p_j⟩ = κ_j(-1)^{p_i+p_j}⟨-K_j,p_j|R|-K_i,p_i⟩
/// over all four polarization combinations; the residual is the worst
/// relative violation.
pub fn check_reciprocity<E: ReflectionElements>(
    mode_i: &PlaneWaveMode,
    mode_j: &PlaneWaveMode,
    elements: &E,
) -> Result<ReciprocityCheck> {
    check_shared_frequency(mode_i, mode_j)?;
    let mut residual: f64 = 0.0;
    for pi in Polarization::BOTH {
        for pj in Polarization::BOTH {
            let sign = if pi == pj { 1.0 } else { -1.0 };
            let out = mode_i.with_polarization(pi);
            let inc = mode_j.with_polarization(pj);
            let lhs = elements.element(&out, &inc)?.scale(mode_i.kappa);
            let out_rev = mode_j.negated().with_polarization(pj);
            let inc_rev = mode_i.negated().with_polarization(pi);
            let rhs = elements
                .element(&out_rev, &inc_rev)?
                .scale(sign * mode_j.kappa);
            let r = match (lhs.is_zero(), rhs.is_zero()) {
                (true, true) => 0.0,
                (false, false) => lhs.relative_to(&rhs),
                _ => 1.0,
            };
            residual = residual.max(r);
        }
    }
    Ok(ReciprocityCheck {
        passed: residual < RECIPROCITY_TOL,
        residual,
    })
}
