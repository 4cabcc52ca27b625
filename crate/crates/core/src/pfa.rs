//! Proximity-force limit of the Casimir interaction: the saddle-point trace,
//! the dilogarithm free energy, the Lifshitz parallel-plate force, the
//! Poisson-summation thermal correction, and effective-area estimates.
//!
//! The saddle-point evaluation of the round-trip trace collapses to
//!
//! ```text
//! tr M_p^r ≈ (R_eff/2r) ∫_{|ξ_n|/c}^∞ dκ [r_p^(1) r_p^(2) e^{-2κL}]^r ,
//! ```
//!
//! whose Mercator sum over r is a dilogarithm,
//!
//! ```text
//! F ≈ -(k_B T R_eff/4) Σ_n Σ_p ∫ dκ Li₂(r_p^(1) r_p^(2) e^{-2κL}),
//! ```
//!
//! and whose L-derivative is 2πR_eff times the parallel-plate free energy
//! per area (the familiar proximity-force rule).  All κ-integrals substitute
//! u = 2κL so the integrand decays on scale one; the u-quadrature uses
//! graded panels because the integrands develop an integrable logarithmic
//! endpoint at zero frequency for unit reflectivity.

use crate::constants::{matsubara_frequency, thermal_wavelength, BOLTZMANN, HBAR, SPEED_OF_LIGHT};
use crate::geometry::Geometry;
use crate::materials::{fresnel_at, DielectricModel};
use crate::quadrature::{integrate_decay, wynn_epsilon, GaussLegendre, NeumaierSum};
use crate::{Error, Result};

/// Thermal state: temperature and the derived Matsubara grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalSpec {
    pub temperature: f64,
}

impl ThermalSpec {
    pub fn new(temperature: f64) -> Result<Self> {
        if temperature >= 0.0 && temperature.is_finite() {
            Ok(Self { temperature })
        } else {
            Err(Error::domain(format!(
                "temperature must be >= 0, got {temperature}"
            )))
        }
    }

    /// ξ_n = 2πn k_B T/ħ.
    pub fn matsubara(&self, n: u32) -> f64 {
        matsubara_frequency(n, self.temperature)
    }

    /// λ_T = ħc/(k_B T); infinite at T = 0.
    pub fn lambda_t(&self) -> f64 {
        thermal_wavelength(self.temperature)
    }

    pub fn is_zero(&self) -> bool {
        self.temperature == 0.0
    }
}

// ---------------------------------------------------------------------------
// Dilogarithm
// ---------------------------------------------------------------------------

const PI2_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Li₂(x) on [-1, 1] to ~1e-14 absolute: power series for |x| ≤ 1/2, the
/// reflection identity Li₂(x) + Li₂(1-x) = π²/6 - ln x ln(1-x) toward +1,
/// and the Landen transform Li₂(x) = -Li₂(x/(x-1)) - ln²(1-x)/2 toward -1.
pub fn dilog(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("dilog domain is [-1, 1], got {x}")));
    }
    Ok(dilog_inner(x))
}

fn dilog_series(x: f64) -> f64 {
    debug_assert!(x.abs() <= 0.5 + 1e-12);
    let mut term = x;
    let mut sum = 0.0;
    let mut k = 1.0_f64;
    loop {
        sum += term / (k * k);
        k += 1.0;
        term *= x;
        if term.abs() / (k * k) < 1e-18 || k > 200.0 {
            return sum;
        }
    }
}

fn dilog_inner(x: f64) -> f64 {
    if x == 1.0 {
        PI2_6
    } else if x == -1.0 {
        -PI2_6 / 2.0
    } else if x.abs() <= 0.5 {
        dilog_series(x)
    } else if x > 0.5 {
        PI2_6 - x.ln() * (1.0 - x).ln() - dilog_series(1.0 - x)
    } else {
        let y = x / (x - 1.0); // in (1/3, 1/2) for x in (-1, -1/2)
        let l = (1.0 - x).ln();
        -dilog_series(y) - 0.5 * l * l
    }
}

// ---------------------------------------------------------------------------
// Lifshitz building blocks
// ---------------------------------------------------------------------------

/// Reflectivity products r_p^(1) r_p^(2) at (ξ, κ) for both polarizations.
fn reflectivity_products(
    model1: &DielectricModel,
    model2: &DielectricModel,
    xi: f64,
    kappa: f64,
) -> Result<(f64, f64)> {
    let f1 = fresnel_at(model1, xi, kappa)?;
    let f2 = fresnel_at(model2, xi, kappa)?;
    Ok((f1.r_te * f2.r_te, f1.r_tm * f2.r_tm))
}

const KAPPA_TOL: f64 = 1e-12;

/// One κ-integral ∫_{ξ/c}^∞ dκ g(ξ, κ) with u = 2κL substitution and the
/// graded-panel rule; `g` receives (κ, u) with u = 2κL - 2ξL/c offset away.
fn kappa_integral(
    xi: f64,
    gap: f64,
    mut integrand: impl FnMut(f64, f64) -> f64,
) -> (f64, f64) {
    let u0 = 2.0 * xi * gap / SPEED_OF_LIGHT;
    let (val, err) = integrate_decay(
        |v| {
            let kappa = (u0 + v) / (2.0 * gap);
            integrand(kappa, u0 + v)
        },
        KAPPA_TOL,
    );
    (val / (2.0 * gap), err / (2.0 * gap))
}

/// Saddle-point round-trip trace
/// tr M^r = (R_eff/2r) Σ_p ∫ dκ [r_p^(1) r_p^(2) e^{-2κL}]^r.
pub fn tr_m_r_pfa(
    r: usize,
    xi: f64,
    gap: f64,
    r_eff: f64,
    model1: &DielectricModel,
    model2: &DielectricModel,
) -> Result<f64> {
    if r < 1 {
        return Err(Error::domain("round-trip order r must be >= 1"));
    }
    if !(gap > 0.0 && r_eff > 0.0) {
        return Err(Error::domain("gap and effective radius must be positive"));
    }
    let mut failure = None;
    let (integral, _) = kappa_integral(xi, gap, |kappa, u| {
        match reflectivity_products(model1, model2, xi, kappa) {
            Ok((te, tm)) => {
                let e = (-u).exp();
                (te * e).powi(r as i32) + (tm * e).powi(r as i32)
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r_eff / (2.0 * r as f64) * integral)
}

/// Matsubara summation with the truncation rule: stop once the n-term drops
/// below 1e-10 of the accumulated sum AND ξ_n exceeds 10c/(2L).  Returns the
/// sum, the accumulated quadrature error estimate, and the last n used.
fn matsubara_sum(
    thermal: &ThermalSpec,
    gap: f64,
    mut term: impl FnMut(u32, f64) -> Result<(f64, f64)>,
) -> Result<(f64, f64, u32)> {
    let mut sum = NeumaierSum::new();
    let mut err = 0.0;
    let xi_cut = 10.0 * SPEED_OF_LIGHT / (2.0 * gap);
    let mut n = 0u32;
    loop {
        let xi = thermal.matsubara(n);
        let weight = if n == 0 { 1.0 } else { 2.0 };
        let (value, value_err) = term(n, xi)?;
        let t = weight * value;
        sum.add(t);
        err += weight * value_err;
        if n > 0 && xi > xi_cut && t.abs() < 1e-10 * sum.total().abs() {
            // Truncation-error contribution on top of the quadrature one.
            return Ok((sum.total(), err + t.abs(), n));
        }
        n += 1;
        if n > 2_000_000 {
            return Err(Error::nonconvergence(
                "Matsubara sum exceeded 2e6 terms without meeting the gate",
            ));
        }
    }
}

/// Free energy plus its error estimate and Matsubara depth.
#[derive(Clone, Copy, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub est_error: f64,
    pub n_max_used: u32,
}

/// Casimir free energy in the proximity-force limit (T > 0), Joules.
pub fn free_energy(
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<f64> {
    Ok(free_energy_info(geom, model1, model2, thermal)?.value)
}

/// As [`free_energy`], with quadrature/truncation diagnostics.
pub fn free_energy_info(
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<Evaluation> {
    if thermal.is_zero() {
        return Err(Error::domain(
            "free_energy requires T > 0; use free_energy_zero_t",
        ));
    }
    let gap = geom.gap();
    let (sum, err, n_max) = matsubara_sum(thermal, gap, |_, xi| {
        let mut failure = None;
        let pair = kappa_integral(xi, gap, |kappa, u| {
            match reflectivity_products(model1, model2, xi, kappa) {
                Ok((te, tm)) => {
                    let e = (-u).exp();
                    dilog_inner(te * e) + dilog_inner(tm * e)
                }
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(pair),
        }
    })?;
    let prefactor = -BOLTZMANN * thermal.temperature * geom.r_eff() / 4.0;
    Ok(Evaluation {
        value: prefactor * sum,
        est_error: prefactor.abs() * err,
        n_max_used: n_max,
    })
}

/// Zero-temperature Casimir free energy in the proximity-force limit:
/// the Matsubara sum becomes (ħ/π)∫_0^∞ dξ over the same κ-integrand.
pub fn free_energy_zero_t(
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
) -> Result<f64> {
    let gap = geom.gap();
    let xi_scale = SPEED_OF_LIGHT / (2.0 * gap);
    let mut failure = None;
    let (outer, _) = integrate_decay(
        |w| {
            if failure.is_some() {
                return 0.0;
            }
            let xi = xi_scale * w;
            let (val, _) = kappa_integral(xi, gap, |kappa, u| {
                match reflectivity_products(model1, model2, xi, kappa) {
                    Ok((te, tm)) => {
                        let e = (-u).exp();
                        dilog_inner(te * e) + dilog_inner(tm * e)
                    }
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            });
            val
        },
        1e-12,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(-HBAR * xi_scale / std::f64::consts::PI * geom.r_eff() / 4.0 * outer)
}

/// Parallel-plate free energy per area F_PP(L, T), J/m²:
///
/// ```text
/// F_PP = (k_B T/2) Σ_n Σ_p ∫_{|ξ_n|/c}^∞ (dκ/2π) κ ln(1 - r_p^(1) r_p^(2) e^{-2κL}).
/// ```
/// At T = 0 the sum becomes (ħ/2π)∫dξ of the same κ-integral.
pub fn lifshitz_plate_free_energy(
    gap: f64,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<f64> {
    Ok(lifshitz_plate_info(gap, model1, model2, thermal)?.value)
}

fn lifshitz_plate_info(
    gap: f64,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<Evaluation> {
    if !(gap > 0.0) {
        return Err(Error::domain("gap must be positive"));
    }
    if thermal.is_zero() {
        let xi_scale = SPEED_OF_LIGHT / (2.0 * gap);
        let mut failure = None;
        let mut inner_err: f64 = 0.0;
        let (outer, outer_err) = integrate_decay(
            |w| {
                if failure.is_some() {
                    return 0.0;
                }
                let xi = xi_scale * w;
                match log_kappa_integral(gap, xi, model1, model2) {
                    Ok((v, e)) => {
                        inner_err = inner_err.max(e);
                        v
                    }
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            1e-12,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        // (k_B T/2) Σ_{n=-∞..∞} -> (ħ/2π) ∫_0^∞ dξ.
        let prefactor = HBAR * xi_scale / (2.0 * std::f64::consts::PI);
        return Ok(Evaluation {
            value: prefactor * outer,
            est_error: prefactor * (outer_err + inner_err),
            n_max_used: 0,
        });
    }
    let (sum, err, n_max) = matsubara_sum(thermal, gap, |_, xi| {
        log_kappa_integral(gap, xi, model1, model2)
    })?;
    let prefactor = BOLTZMANN * thermal.temperature / 2.0;
    Ok(Evaluation {
        value: prefactor * sum,
        est_error: prefactor * err,
        n_max_used: n_max,
    })
}

/// Σ_p ∫_{ξ/c}^∞ (dκ/2π) κ ln(1 - r_p r_p e^{-2κL}) with its quadrature
/// error estimate.
fn log_kappa_integral(
    gap: f64,
    xi: f64,
    model1: &DielectricModel,
    model2: &DielectricModel,
) -> Result<(f64, f64)> {
    let mut failure = None;
    let (val, err) = kappa_integral(xi, gap, |kappa, u| {
        match reflectivity_products(model1, model2, xi, kappa) {
            Ok((te, tm)) => {
                let e = (-u).exp();
                kappa * ((-te * e).ln_1p() + (-tm * e).ln_1p())
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((
            val / (2.0 * std::f64::consts::PI),
            err / (2.0 * std::f64::consts::PI),
        )),
    }
}

/// Casimir force in the proximity-force limit: F = 2π R_eff F_PP(L, T),
/// Newtons (negative = attraction).
pub fn force(
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<f64> {
    Ok(force_info(geom, model1, model2, thermal)?.value)
}

/// As [`force`], with quadrature/truncation diagnostics.
pub fn force_info(
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<Evaluation> {
    let fpp = lifshitz_plate_info(geom.gap(), model1, model2, thermal)?;
    let scale = 2.0 * std::f64::consts::PI * geom.r_eff();
    Ok(Evaluation {
        value: scale * fpp.value,
        est_error: scale * fpp.est_error,
        n_max_used: fpp.n_max_used,
    })
}

// ---------------------------------------------------------------------------
// Thermal correction by Poisson summation
// ---------------------------------------------------------------------------

/// δF(L, T) = F(L, T) - F(L, 0) evaluated directly from the Poisson-summed
/// representation
///
/// ```text
/// δF = 2ħ R_eff Σ_{m≥1} Σ_p ∫_0^∞ dξ cos(m λ_T ξ/c)
///        ∫_{ξ/c}^∞ (dκ/2π) κ ln(1 - r_p^(1) r_p^(2) e^{-2κL}),
/// ```
///
/// with each ξ-integral split at the cosine zeros and the alternating
/// half-period sums accelerated by Wynn's epsilon algorithm.
pub fn thermal_correction(
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<f64> {
    Ok(thermal_correction_with_error(geom, model1, model2, thermal)?.0)
}

/// As [`thermal_correction`], also returning a rough error estimate from the
/// m-sum truncation.
pub fn thermal_correction_with_error(
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    thermal: &ThermalSpec,
) -> Result<(f64, f64)> {
    if thermal.is_zero() {
        return Ok((0.0, 0.0));
    }
    let gap = geom.gap();
    let lambda_t = thermal.lambda_t();
    // Cache the inner κ-integral g(ξ) on graded interpolation panels; every
    // oscillatory node then costs a barycentric evaluation.
    let xi_cut = 40.0 * SPEED_OF_LIGHT / (2.0 * gap);
    let cache =
        PanelInterpolant::build(
            |xi| log_kappa_integral(gap, xi, model1, model2).map(|(v, _)| v),
            xi_cut,
        )?;
    // m-terms decay like 1/m² (set by the cusp of g at ξ = 0), so the m-sum
    // is itself extrapolated from its partial sums.
    let mut m_partials = Vec::with_capacity(M_MAX);
    let mut m_sum = NeumaierSum::new();
    for m in 1..=M_MAX {
        let beta = m as f64 * lambda_t / SPEED_OF_LIGHT;
        let term = oscillatory_cos_integral(beta, xi_cut, |xi| cache.eval(xi))?;
        m_sum.add(term);
        m_partials.push(m_sum.total());
        let total = m_sum.total().abs();
        if m >= 6 && term.abs() < 1e-9 * total.max(1e-300) {
            break;
        }
    }
    let accelerated = wynn_epsilon(&m_partials);
    let short = wynn_epsilon(&m_partials[..m_partials.len().saturating_sub(3).max(1)]);
    let prefactor = 2.0 * HBAR * geom.r_eff();
    Ok((
        prefactor * accelerated,
        prefactor * (accelerated - short).abs(),
    ))
}

const M_MAX: usize = 48;

/// ∫_0^∞ cos(βξ) g(ξ) dξ for a smooth decaying envelope g: half-period
/// panels between consecutive cosine zeros, alternating partial sums
/// extrapolated with Wynn's epsilon once stable.
fn oscillatory_cos_integral(
    beta: f64,
    support: f64,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let gl = GaussLegendre::new(16);
    let half_period = std::f64::consts::PI / beta;
    let mut partials = Vec::with_capacity(128);
    let mut acc = NeumaierSum::new();
    let mut lo = 0.0;
    let mut hi = 0.5 * half_period;
    let mut best = f64::NAN;
    for j in 0..2000 {
        let panel = gl.integrate(lo, hi, |xi| (beta * xi).cos() * g(xi));
        acc.add(panel);
        partials.push(acc.total());
        lo = hi;
        hi += half_period;
        // Once past the support the raw sum has converged.
        if lo > support {
            return Ok(acc.total());
        }
        if j >= 24 && j % 4 == 0 {
            let window = 24;
            let tail = &partials[partials.len() - window..];
            let w = wynn_epsilon(tail);
            if !best.is_nan() && (w - best).abs() <= 1e-10 * best.abs().max(1e-300) {
                return Ok(w);
            }
            best = w;
        }
    }
    if best.is_nan() {
        Err(Error::nonconvergence(
            "oscillatory xi-integral failed to stabilize",
        ))
    } else {
        Ok(best)
    }
}

/// Piecewise Chebyshev-node Lagrange interpolant on panels graded toward
/// zero, for caching smooth-but-cusped decaying integrands.
struct PanelInterpolant {
    panels: Vec<Panel>,
    cut: f64,
}

struct Panel {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

const PANEL_ORDER: usize = 16;

impl PanelInterpolant {
    fn build(mut f: impl FnMut(f64) -> Result<f64>, cut: f64) -> Result<Self> {
        let mut edges = vec![0.0];
        let mut e = cut * 1e-8;
        while e < cut {
            edges.push(e);
            e *= 4.0;
        }
        edges.push(cut);
        let mut panels = Vec::with_capacity(edges.len() - 1);
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let mut nodes = Vec::with_capacity(PANEL_ORDER);
            let mut values = Vec::with_capacity(PANEL_ORDER);
            let mut weights = Vec::with_capacity(PANEL_ORDER);
            for i in 0..PANEL_ORDER {
                // Chebyshev points of the second kind with barycentric
                // weights (-1)^i δ_i.
                let theta = std::f64::consts::PI * i as f64 / (PANEL_ORDER - 1) as f64;
                let x = 0.5 * (lo + hi) - 0.5 * (hi - lo) * theta.cos();
                nodes.push(x);
                values.push(f(x)?);
                let delta = if i == 0 || i == PANEL_ORDER - 1 { 0.5 } else { 1.0 };
                weights.push(if i % 2 == 0 { delta } else { -delta });
            }
            panels.push(Panel {
                lo,
                hi,
                nodes,
                values,
                weights,
            });
        }
        Ok(Self { panels, cut })
    }

    fn eval(&self, x: f64) -> f64 {
        if x >= self.cut {
            return 0.0;
        }
        let panel = match self
            .panels
            .binary_search_by(|p| p.hi.partial_cmp(&x).unwrap())
        {
            Ok(i) => &self.panels[(i + 1).min(self.panels.len() - 1)],
            Err(i) => &self.panels[i.min(self.panels.len() - 1)],
        };
        debug_assert!(x >= panel.lo - 1e-12 * self.cut && x <= panel.hi + 1e-12 * self.cut);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..PANEL_ORDER {
            let dx = x - panel.nodes[i];
            if dx == 0.0 {
                return panel.values[i];
            }
            let w = panel.weights[i] / dx;
            num += w * panel.values[i];
            den += w;
        }
        num / den
    }
}

// ---------------------------------------------------------------------------
// Effective area
// ---------------------------------------------------------------------------

/// Order-of-magnitude estimates of the sphere section that contributes in
/// the proximity-force regime.  All order-one coefficients are set to
/// exactly 1 by convention; the fields are scalings, not equalities.
#[derive(Clone, Copy, Debug)]
pub struct EffectiveAreaEstimate {
    /// Gaussian width of the transverse-wavenumber change, (L R)^(-1/2).
    pub delta_k: f64,
    /// Half-opening angle of the contributing cap, (L/R)^(1/2).
    pub theta_cap: f64,
    /// Transverse cap size, (R L)^(1/2).
    pub cap_diameter: f64,
    /// Contributing area at zero temperature, R·L.
    pub area: f64,
    /// Area relevant for thermal corrections, R·λ_T (infinite at T = 0).
    pub area_thermal: f64,
}

/// Effective-area estimates from the Gaussian width of the saddle-point
/// integrand; R is the smaller sphere radius (it dominates the deviation
/// from the specular manifold).
pub fn effective_area(geom: &Geometry, thermal: &ThermalSpec) -> Result<EffectiveAreaEstimate> {
    let r = if geom.is_plane_sphere() {
        geom.r1()
    } else {
        geom.r1().min(geom.r2())
    };
    let gap = geom.gap();
    Ok(EffectiveAreaEstimate {
        delta_k: 1.0 / (gap * r).sqrt(),
        theta_cap: (gap / r).sqrt(),
        cap_diameter: (r * gap).sqrt(),
        area: r * gap,
        area_thermal: r * thermal.lambda_t(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PERFECT: DielectricModel = DielectricModel::PerfectReflector;
    const ZETA3: f64 = 1.2020569031595942854;

    #[test]
    fn dilog_reference_values() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(1.0).unwrap() - PI2_6).abs() < 1e-15);
        assert!((dilog(-1.0).unwrap() + PI2_6 / 2.0).abs() < 1e-15);
        // Li2(1/2) = π²/12 - ln²2/2.
        let half = dilog(0.5).unwrap();
        let expected = PI2_6 / 2.0 - 0.5 * std::f64::consts::LN_2.powi(2);
        assert!((half - expected).abs() < 1e-15);
        // Frozen 30-digit reference values across the branch switches.
        let cases = [
            (0.999, 1.6370226052761177),
            (-0.999, -0.82177378964724064),
            (0.49999, 0.58222666358277136),
            (0.50001, 0.58225438946999478),
            (-0.49999, -0.44840609760705764),
            (-0.50001, -0.44842231621138205),
        ];
        for (x, reference) in cases {
            assert!(
                (dilog(x).unwrap() - reference).abs() < 1e-14,
                "x = {x}: {} vs {reference}",
                dilog(x).unwrap()
            );
        }
        assert!(dilog(1.1).is_err());
        assert!(dilog(-1.1).is_err());
    }

    #[test]
    fn pfa_trace_perfect_reflector_closed_form() {
        // xi = 0, perfect reflectors: tr M^r = 2 · R_eff/(4 L r²).
        let gap = 1.0e-6;
        let r_eff = 20.0e-6;
        for r in [1usize, 2, 5] {
            let t = tr_m_r_pfa(r, 0.0, gap, r_eff, &PERFECT, &PERFECT).unwrap();
            let expected = 2.0 * r_eff / (4.0 * gap * (r * r) as f64);
            assert!(
                (t / expected - 1.0).abs() < 1e-12,
                "r = {r}: {t} vs {expected}"
            );
        }
        // Vacuum on one side kills it.
        let vac = DielectricModel::Dielectric { eps0: 1.0 };
        assert_eq!(tr_m_r_pfa(1, 0.0, gap, r_eff, &PERFECT, &vac).unwrap(), 0.0);
    }

    #[test]
    fn pfa_trace_r1_equals_leading_dilog_term() {
        // The r = 1 trace equals the first term of the Li₂ series of the
        // free-energy integrand by construction; check through the n = 0
        // free-energy assembled from traces.
        let gap = 0.5e-6;
        let r_eff = 10.0e-6;
        let model = DielectricModel::Dielectric { eps0: 3.0 };
        let t1 = tr_m_r_pfa(1, 0.0, gap, r_eff, &model, &model).unwrap();
        // Σ_r tr_r/r against the dilog integral at xi = 0.
        let mut mercator = 0.0;
        for r in 1..=60 {
            mercator += tr_m_r_pfa(r, 0.0, gap, r_eff, &model, &model).unwrap() / r as f64;
        }
        let (dilog_val, _) = kappa_integral(0.0, gap, |kappa, u| {
            let (te, tm) = reflectivity_products(&model, &model, 0.0, kappa).unwrap();
            let e = (-u).exp();
            dilog_inner(te * e) + dilog_inner(tm * e)
        });
        let dilog_total = r_eff / 2.0 * dilog_val;
        assert!((mercator / dilog_total - 1.0).abs() < 1e-10);
        assert!(t1 < mercator && mercator < 1.07 * t1); // series dominated by r = 1
    }

    #[test]
    fn high_temperature_free_energy_limits() {
        // λ_T/L = 0.01: only n = 0 survives; F -> -k_B T R_eff ζ(3)/(4L)
        // for perfect reflectors and half that for Drude.
        let gap = 1.0e-6;
        let lambda_t = 0.01 * gap;
        let temperature = HBAR * SPEED_OF_LIGHT / (BOLTZMANN * lambda_t);
        let thermal = ThermalSpec::new(temperature).unwrap();
        let geom = Geometry::sphere_sphere(40.0e-6, 40.0e-6, gap).unwrap();
        let f = free_energy(&geom, &PERFECT, &PERFECT, &thermal).unwrap();
        let expected = -BOLTZMANN * temperature * geom.r_eff() * ZETA3 / (4.0 * gap);
        assert!((f / expected - 1.0).abs() < 1e-6, "{f} vs {expected}");
        let drude = DielectricModel::Drude {
            plasma_frequency: 1.4e16,
            relaxation_rate: 5.0e13,
        };
        let f_drude = free_energy(&geom, &drude, &drude, &thermal).unwrap();
        assert!(
            (f_drude / (0.5 * expected) - 1.0).abs() < 1e-6,
            "{f_drude} vs {}",
            0.5 * expected
        );
    }

    #[test]
    fn zero_temperature_free_energy_and_force_closed_forms() {
        // Perfect reflectors: F = -π³ħc R_eff/(720 L²), F' = -π³ħc R_eff/(360 L³).
        let gap = 1.0e-6;
        let geom = Geometry::plane_sphere(50.0e-6, gap).unwrap();
        let f = free_energy_zero_t(&geom, &PERFECT, &PERFECT).unwrap();
        let pi3 = std::f64::consts::PI.powi(3);
        let expected = -pi3 * HBAR * SPEED_OF_LIGHT * geom.r_eff() / (720.0 * gap * gap);
        assert!((f / expected - 1.0).abs() < 1e-8, "{f} vs {expected}");
        let thermal = ThermalSpec::new(0.0).unwrap();
        let force_val = force(&geom, &PERFECT, &PERFECT, &thermal).unwrap();
        let expected_force =
            -pi3 * HBAR * SPEED_OF_LIGHT * geom.r_eff() / (360.0 * gap * gap * gap);
        assert!(
            (force_val / expected_force - 1.0).abs() < 1e-8,
            "{force_val} vs {expected_force}"
        );
    }

    #[test]
    fn high_temperature_force_limit() {
        // n = 0 only: F = -k_B T R_eff ζ(3)/(4 L²) for perfect reflectors.
        let gap = 1.0e-6;
        let lambda_t = 0.005 * gap;
        let temperature = HBAR * SPEED_OF_LIGHT / (BOLTZMANN * lambda_t);
        let thermal = ThermalSpec::new(temperature).unwrap();
        let geom = Geometry::plane_sphere(30.0e-6, gap).unwrap();
        let f = force(&geom, &PERFECT, &PERFECT, &thermal).unwrap();
        let expected = -BOLTZMANN * temperature * geom.r_eff() * ZETA3 / (4.0 * gap * gap);
        assert!((f / expected - 1.0).abs() < 1e-6, "{f} vs {expected}");
    }

    #[test]
    fn free_energy_is_negative_and_decays_with_gap() {
        let thermal = ThermalSpec::new(300.0).unwrap();
        let geom_near = Geometry::plane_sphere(50.0e-6, 0.5e-6).unwrap();
        let geom_far = Geometry::plane_sphere(50.0e-6, 1.0e-6).unwrap();
        let f_near = free_energy(&geom_near, &PERFECT, &PERFECT, &thermal).unwrap();
        let f_far = free_energy(&geom_far, &PERFECT, &PERFECT, &thermal).unwrap();
        assert!(f_near < f_far && f_far < 0.0);
        let force_near = force(&geom_near, &PERFECT, &PERFECT, &thermal).unwrap();
        let force_far = force(&geom_far, &PERFECT, &PERFECT, &thermal).unwrap();
        assert!(force_near.abs() > force_far.abs());
    }

    #[test]
    fn material_strength_ordering() {
        // |F|(Drude) ≤ |F|(Plasma) ≤ |F|(Perfect) at equal (L, T).
        let thermal = ThermalSpec::new(300.0).unwrap();
        let geom = Geometry::plane_sphere(20.0e-6, 0.2e-6).unwrap();
        let wp = 1.37e16;
        let plasma = DielectricModel::Plasma {
            plasma_frequency: wp,
        };
        let drude = DielectricModel::Drude {
            plasma_frequency: wp,
            relaxation_rate: 5.3e13,
        };
        let f_perfect = force(&geom, &PERFECT, &PERFECT, &thermal).unwrap().abs();
        let f_plasma = force(&geom, &plasma, &plasma, &thermal).unwrap().abs();
        let f_drude = force(&geom, &drude, &drude, &thermal).unwrap().abs();
        assert!(f_drude < f_plasma, "{f_drude} vs {f_plasma}");
        assert!(f_plasma < f_perfect, "{f_plasma} vs {f_perfect}");
    }

    #[test]
    fn plane_sphere_is_the_large_radius_limit() {
        let thermal = ThermalSpec::new(300.0).unwrap();
        let r1 = 20.0e-6;
        let gap = 0.5e-6;
        let nearly_plane = Geometry::sphere_sphere(r1, 1.0e6 * r1, gap).unwrap();
        let plane = Geometry::plane_sphere(r1, gap).unwrap();
        let f1 = free_energy(&nearly_plane, &PERFECT, &PERFECT, &thermal).unwrap();
        let f2 = free_energy(&plane, &PERFECT, &PERFECT, &thermal).unwrap();
        assert!((f1 / f2 - 1.0).abs() < 1e-5);
        let g1 = force(&nearly_plane, &PERFECT, &PERFECT, &thermal).unwrap();
        let g2 = force(&plane, &PERFECT, &PERFECT, &thermal).unwrap();
        assert!((g1 / g2 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn thermal_correction_vanishes_toward_zero_temperature() {
        let geom = Geometry::plane_sphere(20.0e-6, 1.0e-6).unwrap();
        let plasma = DielectricModel::Plasma {
            plasma_frequency: 1.37e16,
        };
        let d300 = thermal_correction(&geom, &plasma, &plasma, &ThermalSpec::new(300.0).unwrap())
            .unwrap();
        let d30 =
            thermal_correction(&geom, &plasma, &plasma, &ThermalSpec::new(30.0).unwrap()).unwrap();
        let d3 =
            thermal_correction(&geom, &plasma, &plasma, &ThermalSpec::new(3.0).unwrap()).unwrap();
        assert!(d300.abs() > d30.abs());
        assert!(d30.abs() > d3.abs());
        assert_eq!(
            thermal_correction(&geom, &plasma, &plasma, &ThermalSpec::new(0.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn thermal_correction_matches_direct_matsubara_difference() {
        // Plasma, λ_T/L = 50: δF agrees with F(L,T) - F(L,0) to 1e-4 relative.
        let gap = 1.0e-6;
        let lambda_t = 50.0 * gap;
        let temperature = HBAR * SPEED_OF_LIGHT / (BOLTZMANN * lambda_t);
        let thermal = ThermalSpec::new(temperature).unwrap();
        let geom = Geometry::plane_sphere(20.0e-6, gap).unwrap();
        let plasma = DielectricModel::Plasma {
            plasma_frequency: 1.37e16,
        };
        let delta = thermal_correction(&geom, &plasma, &plasma, &thermal).unwrap();
        let f_t = force(&geom, &plasma, &plasma, &thermal).unwrap();
        let f_0 = force(&geom, &plasma, &plasma, &ThermalSpec::new(0.0).unwrap()).unwrap();
        let direct = f_t - f_0;
        assert!(
            (delta / direct - 1.0).abs() < 1e-4,
            "poisson {delta} vs direct {direct}"
        );
    }

    #[test]
    fn thermal_correction_scale_is_thermal_not_gap() {
        // For L ≪ λ_T the correction's wavenumber support sits at 1/λ_T, so
        // δF barely responds to the gap while the zero-temperature force
        // scales like 1/L³.
        let lambda_t = 50.0e-6;
        let temperature = HBAR * SPEED_OF_LIGHT / (BOLTZMANN * lambda_t);
        let thermal = ThermalSpec::new(temperature).unwrap();
        let plasma = DielectricModel::Plasma {
            plasma_frequency: 1.37e16,
        };
        let zero = ThermalSpec::new(0.0).unwrap();
        let near = Geometry::plane_sphere(20.0e-6, 0.25e-6).unwrap();
        let far = Geometry::plane_sphere(20.0e-6, 1.0e-6).unwrap();
        let d_near = thermal_correction(&near, &plasma, &plasma, &thermal).unwrap();
        let d_far = thermal_correction(&far, &plasma, &plasma, &thermal).unwrap();
        let f_near = force(&near, &plasma, &plasma, &zero).unwrap();
        let f_far = force(&far, &plasma, &plasma, &zero).unwrap();
        // Quartering the gap multiplies the vacuum force by ~64 but moves
        // the thermal correction only at the O(L/λ_T) level.
        assert!((f_near / f_far).abs() > 30.0, "{f_near} vs {f_far}");
        assert!(
            (d_near / d_far - 1.0).abs() < 0.25,
            "δF gap-sensitive: {d_near} vs {d_far}"
        );
    }

    #[test]
    fn effective_area_reference_numbers() {
        // L = 1 µm, R = 100 µm: cap diameter 10 µm.
        let geom = Geometry::plane_sphere(100.0e-6, 1.0e-6).unwrap();
        let est = effective_area(&geom, &ThermalSpec::new(300.0).unwrap()).unwrap();
        assert!((est.cap_diameter - 10.0e-6).abs() < 1e-12);
        assert!((est.theta_cap - 0.1).abs() < 1e-12);
        assert!((est.area - 1.0e-10).abs() < 1e-22);
        // λ_T at 300 K ≈ 7.64 µm enters the thermal area.
        assert!((est.area_thermal / (100.0e-6 * 7.638e-6) - 1.0).abs() < 1e-3);
        // The centimeter-scale lens: sqrt(R λ_T) ≈ 1 mm.
        let lens = Geometry::plane_sphere(0.156, 1.0e-6).unwrap();
        let est = effective_area(&lens, &ThermalSpec::new(300.0).unwrap()).unwrap();
        let transverse = (est.area_thermal).sqrt();
        assert!(
            transverse > 0.5e-3 && transverse < 2.0e-3,
            "sqrt(R λ_T) = {transverse}"
        );
    }
}
