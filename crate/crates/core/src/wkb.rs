//! Specular-reflection (WKB) asymptotics of the Mie amplitudes and of the
//! sphere reflection matrix elements.
//!
//! For large size parameters the direct-reflection term dominates and
//!
//! ```text
//! S_p(Θ) ≈ (1/2)(ξR/c) r_p((π-Θ)/2) exp(2(ξR/c) sin(Θ/2)),
//! ```
//!
//! i.e. the sphere reflects like its tangent plane at incidence angle
//! (π-Θ)/2, with cos((π-Θ)/2) = sin(Θ/2) ≥ 1 continued to the imaginary
//! axis.  The matrix element inherits the same exponential,
//!
//! ```text
//! <k_j p_j|R|k_i p_i> ≈ (πR/κ_j) exp(2(ξR/c) sin(Θ/2)) ρ_{p_j,p_i},
//! ```
//!
//! with the 2×2 polarization table ρ assembled from the Fresnel
//! coefficients and the basis-change coefficients A, B, C, D.  The exponent
//! grows like exp(2κR) and is therefore kept as a separate field: only the
//! combination with the translation factors exp(-κ(L+R1+R2)) is bounded, and
//! the trace quadrature folds them analytically before exponentiating.

use crate::logspace::LogScaled;
use crate::materials::{fresnel_at, DielectricModel};
use crate::mie::{scattering_angle, ScatteringKinematics, SizeParameter};
use crate::polarization::{abcd, PlaneWaveMode, Polarization};
use crate::{Error, Result};

/// WKB reflection element split into bounded polarization factors, the
/// unbounded exponent 2(ξR/c) sin(Θ/2), and the πR/κ_out prefactor.
#[derive(Clone, Copy, Debug)]
pub struct WkbReflection {
    /// ρ[out polarization][in polarization], TE = 0, TM = 1.
    pub rho: [[f64; 2]; 2],
    /// 2(ξR/c)·sin(Θ/2) = R·phase_rate; dimensionless.
    pub exponent: f64,
    /// πR/κ_out in m².
    pub prefactor: f64,
}

impl WkbReflection {
    /// The full matrix element as a log-scaled value.
    pub fn element(&self, out_pol: Polarization, in_pol: Polarization) -> LogScaled {
        let rho = self.rho[out_pol.index()][in_pol.index()];
        LogScaled::from_value(rho * self.prefactor) * LogScaled::new(1, self.exponent)
    }
}

/// WKB scattering amplitude per Fresnel-weighted specular reflection.
///
/// Vanishes linearly in ξ at zero frequency; matrix elements there use
/// [`reflection_element`], whose 1/ξ prefactor cancels the zero.
pub fn amplitude(
    p: Polarization,
    kin: &ScatteringKinematics,
    x: SizeParameter,
    model: &DielectricModel,
) -> Result<LogScaled> {
    if kin.is_zero_frequency() || x.0 == 0.0 {
        return Ok(LogScaled::ZERO);
    }
    let xi = kin.xi_over_c * crate::constants::SPEED_OF_LIGHT;
    let fres = fresnel_at(model, xi, kin.phase_rate / 2.0)?;
    let r_p = match p {
        Polarization::Te => fres.r_te,
        Polarization::Tm => fres.r_tm,
    };
    Ok(LogScaled::from_value(0.5 * x.0 * r_p) * LogScaled::new(1, 2.0 * x.0 * kin.sin_half_theta))
}

/// WKB reflection matrix element for a sphere of radius `radius`.
///
/// Modes must share ξ and have opposite propagation signs.
pub fn reflection_element(
    mode_in: &PlaneWaveMode,
    mode_out: &PlaneWaveMode,
    radius: f64,
    model: &DielectricModel,
) -> Result<WkbReflection> {
    if mode_in.xi != mode_out.xi {
        return Err(Error::domain("reflection requires a shared frequency"));
    }
    if mode_in.s == mode_out.s {
        return Err(Error::domain(
            "reflection requires opposite propagation signs",
        ));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain("radius must be positive and finite"));
    }
    let kin = scattering_angle(
        mode_in.k,
        mode_out.k,
        mode_out.phi - mode_in.phi,
        mode_in.kappa(),
        mode_out.kappa(),
        mode_in.xi,
    )?;
    let coeffs = abcd(mode_in, mode_out)?;
    let fres = fresnel_at(model, mode_in.xi, kin.phase_rate / 2.0)?;
    let (rte, rtm) = (fres.r_te, fres.r_tm);
    let mut rho = [[0.0; 2]; 2];
    let te = Polarization::Te.index();
    let tm = Polarization::Tm.index();
    rho[tm][tm] = coeffs.a * rtm + coeffs.b * rte;
    rho[te][te] = coeffs.a * rte + coeffs.b * rtm;
    rho[tm][te] = -(coeffs.c * rte + coeffs.d * rtm);
    rho[te][tm] = coeffs.c * rtm + coeffs.d * rte;
    Ok(WkbReflection {
        rho,
        exponent: radius * kin.phase_rate,
        prefactor: std::f64::consts::PI * radius / mode_out.kappa(),
    })
}
