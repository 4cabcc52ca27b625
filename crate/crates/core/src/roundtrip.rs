//! Numerical evaluation of round-trip traces tr M^r in the plane-wave basis.
//!
//! A round trip alternates reflection at the two objects with translations
//! e^{-κ(L+R1+R2)} along the axis.  The reflection elements grow like
//! e^{2(ξR/c) sin(Θ/2)} with the sphere radius, so every kernel entry is
//! assembled in log space and folded with the translation before
//! exponentiating: the bond between modes (in, out) at a sphere of radius R
//! carries
//!
//! ```text
//! exp(2(ξR/c) sin(Θ/2) - (κ_in + κ_out)(R + L/2)) = exp(-R η - (κ_in+κ_out) L/2),
//! η = κ_in + κ_out - phase_rate ≥ 0,
//! ```
//!
//! which is bounded up to algebraic prefactors; over a full cycle the
//! per-bond folds reproduce exactly one translation factor per mode.
//!
//! Two-bounce traces (a single sphere-sphere round trip, or a double round
//! trip against a plane) integrate in saddle-adapted coordinates — radial
//! mean, radial difference, azimuth difference — with Gauss panels scaled to
//! the local Gaussian ridge, which stays resolvable at any R/L.  Higher
//! orders discretize each k-integral on Gauss-Laguerre-type nodes in u = κL
//! and each azimuth on a uniform periodic grid, turning the traces into
//! powers of cyclic kernels that depend on the azimuth difference only.

use crate::constants::SPEED_OF_LIGHT;
use crate::geometry::Geometry;
use crate::logspace::LogScaled;
use crate::materials::{fresnel_at, DielectricModel};
use crate::mie::{
    scattering_amplitudes, scattering_amplitudes_zero_freq, scattering_angle, SizeParameter,
};
use crate::polarization::{abcd, PlaneWaveMode, Polarization, ReflectionElements};
use crate::quadrature::{ExpWeightedRule, NeumaierSum};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Which reflection amplitudes feed the trace: the exact Mie partial-wave
/// sums or their specular-reflection (WKB) asymptotics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmplitudeKind {
    Exact,
    Wkb,
}

/// Monotone map for the semi-infinite radial integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialMap {
    /// Gauss-Laguerre nodes in u - ξL/c with the given decay rate.
    ExponentialCluster { rate: f64 },
}

/// Node counts for the radial and azimuthal quadratures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub n_k: usize,
    pub n_phi: usize,
    pub map: RadialMap,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_k: 64,
            n_phi: 64,
            map: RadialMap::ExponentialCluster { rate: 2.0 },
        }
    }
}

impl QuadratureSpec {
    pub fn new(n_k: usize, n_phi: usize) -> Result<Self> {
        let spec = Self {
            n_k,
            n_phi,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Node counts sized to the saddle-point ridge of a given aspect ratio
    /// R/L: the azimuthal Gaussian narrows like (R/L)^(-1/2), so n_phi grows
    /// like its inverse.
    pub fn for_aspect_ratio(r_over_l: f64) -> Self {
        let width = 2.0 / r_over_l.max(1.0).sqrt();
        let n_phi = ((2.0 * std::f64::consts::PI / width * 10.0) as usize)
            .next_power_of_two()
            .clamp(64, 1024);
        Self {
            n_k: 96,
            n_phi,
            map: RadialMap::ExponentialCluster { rate: 2.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_k < 8 || self.n_phi < 8 {
            return Err(Error::domain("quadrature needs n_k >= 8 and n_phi >= 8"));
        }
        if self.n_k > 400 {
            return Err(Error::domain("n_k > 400 exceeds the radial rule's range"));
        }
        Ok(())
    }

    fn halved(&self) -> Self {
        Self {
            n_k: (self.n_k / 2).max(8),
            n_phi: (self.n_phi / 2).max(8),
            map: self.map,
        }
    }
}

/// Per-reflection exponent deficit η = κ_i + κ_j - phase_rate ≥ 0 (units
/// 1/m; the round-trip exponent carries -R η per bond).  Vanishes exactly on
/// the saddle-point manifold k_i = k_j, Δφ = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaExponent {
    pub eta: f64,
}

/// Cancellation-safe η via
/// [(k_i-k_j)² + 4 k_ik_j sin²(Δφ/2)] / [κ_i + κ_j + phase_rate].
pub fn eta(mode_i: &PlaneWaveMode, mode_j: &PlaneWaveMode) -> Result<EtaExponent> {
    if mode_i.xi != mode_j.xi {
        return Err(Error::domain("eta requires a shared frequency"));
    }
    let kin = scattering_angle(
        mode_i.k,
        mode_j.k,
        mode_j.phi - mode_i.phi,
        mode_i.kappa(),
        mode_j.kappa(),
        mode_i.xi,
    )?;
    let s = (0.5 * (mode_j.phi - mode_i.phi)).sin();
    let dk = mode_i.k - mode_j.k;
    let numerator = dk * dk + 4.0 * mode_i.k * mode_j.k * s * s;
    let denominator = mode_i.kappa() + mode_j.kappa() + kin.phase_rate;
    if denominator == 0.0 {
        return Ok(EtaExponent { eta: 0.0 });
    }
    Ok(EtaExponent {
        eta: numerator / denominator,
    })
}

// ---------------------------------------------------------------------------
// Reflection elements
// ---------------------------------------------------------------------------

/// Reflection matrix elements of one sphere, exact or WKB.
pub struct SphereReflection<'a> {
    pub radius: f64,
    pub model: &'a DielectricModel,
    pub kind: AmplitudeKind,
    /// Relative truncation tolerance of the partial-wave sums.
    pub tol: f64,
}

impl<'a> SphereReflection<'a> {
    pub fn new(radius: f64, model: &'a DielectricModel, kind: AmplitudeKind) -> Self {
        Self {
            radius,
            model,
            kind,
            tol: 1e-9,
        }
    }
}

/// The four exact fixed-axis elements from the scattering-plane amplitudes:
///
/// ```text
/// <TM|R|TM> =  pref (A S2 + B S1),   <TE|R|TE> =  pref (A S1 + B S2),
/// <TM|R|TE> = -pref (C S1 + D S2),   <TE|R|TM> =  pref (C S2 + D S1),
/// ```
/// with pref = 2πc/(ξ κ_out), or 2π/κ_out against lim (c/ξ)S_p at ξ = 0.
fn combine_exact(
    coeffs: &crate::polarization::AbcdCoefficients,
    s1: LogScaled,
    s2: LogScaled,
    pref: f64,
    out_pol: Polarization,
    in_pol: Polarization,
) -> LogScaled {
    use Polarization::{Te, Tm};
    let a = LogScaled::from_value(coeffs.a);
    let b = LogScaled::from_value(coeffs.b);
    let c = LogScaled::from_value(coeffs.c);
    let d = LogScaled::from_value(coeffs.d);
    let elem = match (out_pol, in_pol) {
        (Tm, Tm) => a * s2 + b * s1,
        (Te, Te) => a * s1 + b * s2,
        (Tm, Te) => -(c * s1 + d * s2),
        (Te, Tm) => c * s2 + d * s1,
    };
    elem.scale(pref)
}

impl SphereReflection<'_> {
    /// All four polarization elements of one (in, out) mode pair, sharing
    /// the kinematics, basis-change coefficients, and amplitude evaluation.
    /// Indexing: `[out polarization][in polarization]`, TE = 0.
    pub fn element_block(
        &self,
        inc: &PlaneWaveMode,
        out: &PlaneWaveMode,
    ) -> Result<[[LogScaled; 2]; 2]> {
        if inc.xi != out.xi {
            return Err(Error::domain("reflection requires a shared frequency"));
        }
        if inc.s == out.s {
            return Err(Error::domain(
                "reflection requires opposite propagation signs",
            ));
        }
        let mut block = [[LogScaled::ZERO; 2]; 2];
        match self.kind {
            AmplitudeKind::Wkb => {
                let w = crate::wkb::reflection_element(inc, out, self.radius, self.model)?;
                for (op, out_pol) in Polarization::BOTH.iter().enumerate() {
                    for (ip, in_pol) in Polarization::BOTH.iter().enumerate() {
                        block[op][ip] = w.element(*out_pol, *in_pol);
                    }
                }
            }
            AmplitudeKind::Exact => {
                let xi = inc.xi;
                let kin = scattering_angle(
                    inc.k,
                    out.k,
                    out.phi - inc.phi,
                    inc.kappa(),
                    out.kappa(),
                    xi,
                )?;
                let coeffs = abcd(inc, out)?;
                let (s1, s2, pref) = if xi > 0.0 {
                    let x = SizeParameter::new(xi * self.radius / SPEED_OF_LIGHT)?;
                    let (s1, s2) = scattering_amplitudes(&kin, x, self.model, self.tol)?;
                    (
                        s1,
                        s2,
                        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (xi * out.kappa()),
                    )
                } else {
                    let (s1, s2) =
                        scattering_amplitudes_zero_freq(&kin, self.radius, self.model)?;
                    (s1, s2, 2.0 * std::f64::consts::PI / out.kappa())
                };
                for (op, out_pol) in Polarization::BOTH.iter().enumerate() {
                    for (ip, in_pol) in Polarization::BOTH.iter().enumerate() {
                        block[op][ip] = combine_exact(&coeffs, s1, s2, pref, *out_pol, *in_pol);
                    }
                }
            }
        }
        Ok(block)
    }
}

impl ReflectionElements for SphereReflection<'_> {
    fn element(&self, out: &PlaneWaveMode, inc: &PlaneWaveMode) -> Result<LogScaled> {
        let block = self.element_block(inc, out)?;
        Ok(block[out.pol.index()][inc.pol.index()])
    }
}

// ---------------------------------------------------------------------------
// Cyclic kernels
// ---------------------------------------------------------------------------

/// Radial quadrature grid in SI units.
struct RadialGrid {
    ks: Vec<f64>,
    kappas: Vec<f64>,
    /// Measure k dk /(2π) per node, i.e. u_a w_a / (2π L²).
    measure: Vec<f64>,
}

fn radial_grid(xi: f64, gap: f64, quad: &QuadratureSpec) -> RadialGrid {
    let RadialMap::ExponentialCluster { rate } = quad.map;
    let rule = ExpWeightedRule::new(quad.n_k, rate);
    let t = xi * gap / SPEED_OF_LIGHT;
    let mut ks = Vec::with_capacity(quad.n_k);
    let mut kappas = Vec::with_capacity(quad.n_k);
    let mut measure = Vec::with_capacity(quad.n_k);
    for (v, w) in rule.nodes.iter().zip(&rule.weights) {
        let u = t + v;
        ks.push((v * (v + 2.0 * t)).sqrt() / gap);
        kappas.push(u / gap);
        measure.push(u * w / (2.0 * std::f64::consts::PI * gap * gap));
    }
    RadialGrid {
        ks,
        kappas,
        measure,
    }
}

/// Kernel over (radial node, azimuth, polarization) indices that depends on
/// the azimuth difference only: data[a_out][a_in][δ][p_out][p_in].
struct CyclicKernel {
    n_k: usize,
    n_phi: usize,
    data: Vec<f64>,
}

impl CyclicKernel {
    fn zeros(n_k: usize, n_phi: usize) -> Self {
        Self {
            n_k,
            n_phi,
            data: vec![0.0; n_k * n_k * n_phi * 4],
        }
    }

    #[inline]
    fn idx(&self, a_out: usize, a_in: usize, delta: usize, p_out: usize, p_in: usize) -> usize {
        (((a_out * self.n_k + a_in) * self.n_phi + delta) * 2 + p_out) * 2 + p_in
    }

    /// Operator product self∘other under the radial measure.
    fn compose(&self, other: &CyclicKernel, measure: &[f64]) -> CyclicKernel {
        let n_k = self.n_k;
        let n_phi = self.n_phi;
        let mut out = CyclicKernel::zeros(n_k, n_phi);
        for a2 in 0..n_k {
            for a0 in 0..n_k {
                for big_delta in 0..n_phi {
                    let mut block = [0.0f64; 4];
                    for a1 in 0..n_k {
                        let m = measure[a1] / n_phi as f64;
                        for delta in 0..n_phi {
                            let delta2 = (big_delta + n_phi - delta) % n_phi;
                            let base1 = self.idx(a2, a1, delta, 0, 0);
                            let base2 = other.idx(a1, a0, delta2, 0, 0);
                            let g1 = &self.data[base1..base1 + 4];
                            let g2 = &other.data[base2..base2 + 4];
                            // 2x2 polarization block product.
                            block[0] += m * (g1[0] * g2[0] + g1[1] * g2[2]);
                            block[1] += m * (g1[0] * g2[1] + g1[1] * g2[3]);
                            block[2] += m * (g1[2] * g2[0] + g1[3] * g2[2]);
                            block[3] += m * (g1[2] * g2[1] + g1[3] * g2[3]);
                        }
                    }
                    let base = out.idx(a2, a0, big_delta, 0, 0);
                    out.data[base..base + 4].copy_from_slice(&block);
                }
            }
        }
        out
    }

    /// tr(self) under the measure.
    fn trace(&self, measure: &[f64]) -> f64 {
        let mut sum = NeumaierSum::new();
        for a in 0..self.n_k {
            for p in 0..2 {
                sum.add(self.data[self.idx(a, a, 0, p, p)] * measure[a]);
            }
        }
        sum.total()
    }

    /// tr(self·other) under the measure, without materializing the product.
    fn pair_trace(&self, other: &CyclicKernel, measure: &[f64]) -> f64 {
        self.pair_trace_filtered(other, measure, None)
    }

    /// As `pair_trace`, optionally keeping only polarization-conserving
    /// (Some(true)) or polarization-mixing (Some(false)) paths.
    fn pair_trace_filtered(
        &self,
        other: &CyclicKernel,
        measure: &[f64],
        conserving: Option<bool>,
    ) -> f64 {
        let n_phi = self.n_phi;
        let mut sum = NeumaierSum::new();
        for a0 in 0..self.n_k {
            for a1 in 0..self.n_k {
                let mm = measure[a0] * measure[a1] / n_phi as f64;
                let mut acc = 0.0;
                for delta in 0..n_phi {
                    let delta2 = (n_phi - delta) % n_phi;
                    let base1 = self.idx(a1, a0, delta, 0, 0);
                    let base2 = other.idx(a0, a1, delta2, 0, 0);
                    let g1 = &self.data[base1..base1 + 4];
                    let g2 = &other.data[base2..base2 + 4];
                    let diag = g1[0] * g2[0] + g1[3] * g2[3];
                    let cross = g1[1] * g2[2] + g1[2] * g2[1];
                    acc += match conserving {
                        None => diag + cross,
                        Some(true) => diag,
                        Some(false) => cross,
                    };
                }
                sum.add(mm * acc);
            }
        }
        sum.total()
    }
}

/// Builds the cyclic kernel of one sphere: reflection elements folded with
/// the translation share exp(-(κ_in+κ_out)·fold_length), optionally times
/// the plane's diagonal Fresnel factor at the incoming mode (plane-sphere
/// combined kernel).
#[allow(clippy::too_many_arguments)]
fn build_sphere_kernel(
    radius: f64,
    model: &DielectricModel,
    kind: AmplitudeKind,
    tol: f64,
    xi: f64,
    grid: &RadialGrid,
    n_phi: usize,
    fold_length: f64,
    s_in: i8,
    s_out: i8,
    plane: Option<&DielectricModel>,
) -> Result<CyclicKernel> {
    let n_k = grid.ks.len();
    let mut kernel = CyclicKernel::zeros(n_k, n_phi);
    let refl = SphereReflection {
        radius,
        model,
        kind,
        tol,
    };
    for a_out in 0..n_k {
        for a_in in 0..n_k {
            let mode_in = PlaneWaveMode::new(xi, grid.ks[a_in], 0.0, s_in, Polarization::Te)?;
            let plane_fres = match plane {
                Some(pm) => {
                    let f = fresnel_at(pm, xi, grid.kappas[a_in])?;
                    [f.r_te, f.r_tm]
                }
                None => [1.0, 1.0],
            };
            let fold = LogScaled::new(
                1,
                -(grid.kappas[a_in] + grid.kappas[a_out]) * fold_length,
            );
            for delta in 0..n_phi {
                let dphi = 2.0 * std::f64::consts::PI * delta as f64 / n_phi as f64;
                let mode_out =
                    PlaneWaveMode::new(xi, grid.ks[a_out], dphi, s_out, Polarization::Te)?;
                if xi == 0.0 && grid.ks[a_in] * grid.ks[a_out] == 0.0 {
                    continue; // doubly-grazing corner carries no weight
                }
                let block = refl.element_block(&mode_in, &mode_out)?;
                for op in 0..2 {
                    for ip in 0..2 {
                        let folded = block[op][ip] * fold;
                        // Exponent safety: after η-folding only algebraic
                        // prefactors may remain.
                        debug_assert!(
                            folded.is_zero() || folded.log_magnitude < 60.0,
                            "unfolded exponent {} at a_out={a_out} a_in={a_in} delta={delta}",
                            folded.log_magnitude
                        );
                        let idx = kernel.idx(a_out, a_in, delta, op, ip);
                        kernel.data[idx] = folded.value() * plane_fres[ip];
                    }
                }
            }
        }
    }
    Ok(kernel)
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

const BUDGET_OPS: f64 = 4.0e9;
const COMPOSE_OPS: f64 = 4.0e10;

fn check_budget(r: usize, quad: &QuadratureSpec, composes: usize) -> Result<()> {
    let nk = quad.n_k as f64;
    let np = quad.n_phi as f64;
    let stated = r as f64 * nk * nk * np * np;
    if stated > BUDGET_OPS {
        return Err(Error::BudgetExceeded(format!(
            "r·n_k²·n_phi² = {stated:.3e} exceeds the {BUDGET_OPS:.1e} evaluation budget"
        )));
    }
    let compose_cost = composes as f64 * 8.0 * nk * nk * nk * np * np;
    if compose_cost > COMPOSE_OPS {
        return Err(Error::BudgetExceeded(format!(
            "kernel products need {compose_cost:.3e} operations (budget {COMPOSE_OPS:.1e}); reduce n_k/n_phi or r"
        )));
    }
    Ok(())
}

/// tr M^r for the sphere-sphere geometry.
///
/// r = 1 uses saddle-adapted coordinates (radial mean s, radial difference
/// d, azimuth difference Δφ) with node spacing tied to the local Gaussian
/// ridge width ~ (R/L)^(-1/2); the shared-grid cyclic-kernel path (r ≥ 2)
/// cannot resolve that ridge for large R/L within any affordable node
/// count.
pub fn trace_m_r(
    r: usize,
    xi: f64,
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    quad: &QuadratureSpec,
    kind: AmplitudeKind,
) -> Result<f64> {
    if r < 1 {
        return Err(Error::domain("round-trip order r must be >= 1"));
    }
    if geom.is_plane_sphere() {
        return Err(Error::domain(
            "trace_m_r is the sphere-sphere path; use trace_m_r_plane_sphere",
        ));
    }
    quad.validate()?;
    if r == 1 {
        let (total, _) = adapted_two_bounce(
            xi, geom.gap(),
            geom.r1(), model1, geom.r2(), model2,
            None, quad, kind, false,
        )?;
        return Ok(total);
    }
    check_budget(r, quad, r - 1)?;
    let grid = radial_grid(xi, geom.gap(), quad);
    let half_gap = 0.5 * geom.gap();
    let k1 = build_sphere_kernel(
        geom.r1(),
        model1,
        kind,
        1e-9,
        xi,
        &grid,
        quad.n_phi,
        geom.r1() + half_gap,
        1,
        -1,
        None,
    )?;
    let k2 = build_sphere_kernel(
        geom.r2(),
        model2,
        kind,
        1e-9,
        xi,
        &grid,
        quad.n_phi,
        geom.r2() + half_gap,
        -1,
        1,
        None,
    )?;
    let p = k1.compose(&k2, &grid.measure);
    trace_of_power(&p, r, &grid.measure)
}

/// Splits the single-round-trip sphere-sphere trace into
/// polarization-conserving and polarization-mixing contributions.
pub fn trace_m_r_polarization_parts(
    xi: f64,
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    quad: &QuadratureSpec,
    kind: AmplitudeKind,
) -> Result<(f64, f64)> {
    if geom.is_plane_sphere() {
        return Err(Error::domain(
            "polarization split is a sphere-sphere diagnostic",
        ));
    }
    quad.validate()?;
    let (_, parts) = adapted_two_bounce(
        xi, geom.gap(),
        geom.r1(), model1, geom.r2(), model2,
        None, quad, kind, true,
    )?;
    parts.ok_or_else(|| Error::domain("internal: split requested but not produced"))
}

/// Two-bounce trace in saddle-adapted coordinates:
///
/// ```text
/// tr = (1/(8π³L⁴)) Σ_{p1 p2} ∫ ds ∫ dd ∫ dΔφ u1 u2
///          E_a[p2,p1](u1 -> u2, Δφ) E_b[p1,p2](u2 -> u1, -Δφ) · plane factors,
/// ```
///
/// with u_{1,2} = s ± d/2 and per-direction Gauss panels covering the
/// Gaussian ridge (±8 widths) plus its algebraic tails.  This serves both
/// the sphere-sphere single round trip (no plane factors) and the
/// plane-sphere double round trip, where both bounces happen at the same
/// sphere and each mode also reflects once off the plane.
#[allow(clippy::too_many_arguments)]
fn adapted_two_bounce(
    xi: f64,
    gap: f64,
    radius_a: f64,
    model_a: &DielectricModel,
    radius_b: f64,
    model_b: &DielectricModel,
    plane: Option<&DielectricModel>,
    quad: &QuadratureSpec,
    kind: AmplitudeKind,
    split: bool,
) -> Result<(f64, Option<(f64, f64)>)> {
    let t = xi * gap / SPEED_OF_LIGHT;
    let radii_sum = (radius_a + radius_b) / gap;
    let refl1 = SphereReflection {
        radius: radius_a,
        model: model_a,
        kind,
        tol: 1e-9,
    };
    let refl2 = SphereReflection {
        radius: radius_b,
        model: model_b,
        kind,
        tol: 1e-9,
    };
    // With a plane in the cycle each bond also spans the gap to the plane:
    // the per-element translation share is then L + R instead of R + L/2.
    let (fold1, fold2) = if plane.is_some() {
        (radius_a + gap, radius_b + gap)
    } else {
        (radius_a + 0.5 * gap, radius_b + 0.5 * gap)
    };
    let RadialMap::ExponentialCluster { rate } = quad.map;
    let s_rule = ExpWeightedRule::new(quad.n_k, rate);
    // The ridge panel spans ±8 Gaussian widths; a fixed Gauss order resolves
    // it regardless of how narrow the ridge is in absolute terms.
    let gl_ridge = GaussLegendreCache::new((quad.n_phi / 8).clamp(24, 48));
    let gl_tail = GaussLegendreCache::new((quad.n_phi / 16).clamp(12, 24));
    let mut total = NeumaierSum::new();
    let mut diag_sum = NeumaierSum::new();
    let mut cross_sum = NeumaierSum::new();
    for (vs, ws) in s_rule.nodes.iter().zip(&s_rule.weights) {
        let s = t + vs;
        let k_mid2 = vs * (vs + 2.0 * t); // k̃² at d = 0
        if k_mid2 <= 0.0 {
            continue;
        }
        // Ridge widths of the folded round-trip Gaussian: the exponent along
        // the radial difference is R̃·s·d²/(4k̃²), along the azimuth
        // R̃·k̃²·φ²/(4s).
        let w_d = (2.0 * (k_mid2 / (s * radii_sum)).sqrt()).max(1e-12);
        let w_phi = (2.0 * (s / (radii_sum * k_mid2)).sqrt()).min(std::f64::consts::PI);
        let d_edge = 2.0 * vs;
        let d_panels = symmetric_panels(8.0 * w_d, d_edge);
        let phi_panels = half_panels(8.0 * w_phi, std::f64::consts::PI);
        let mut s_val = 0.0;
        let mut s_diag = 0.0;
        let mut s_cross = 0.0;
        for (d_lo, d_hi, d_is_ridge) in &d_panels {
            let d_rule = if *d_is_ridge { &gl_ridge } else { &gl_tail };
            for (xd, wd) in d_rule.scaled(*d_lo, *d_hi) {
                let u1 = s + 0.5 * xd;
                let u2 = s - 0.5 * xd;
                if u1 <= t || u2 <= t {
                    continue;
                }
                for (p_lo, p_hi, p_is_ridge) in &phi_panels {
                    let p_rule = if *p_is_ridge { &gl_ridge } else { &gl_tail };
                    for (phi, wp) in p_rule.scaled(*p_lo, *p_hi) {
                        let (diag, cross) = round_trip_product(
                            xi, gap, t, u1, u2, phi, &refl1, &refl2, fold1, fold2, plane,
                        )?;
                        // Factor 2 from Δφ evenness.
                        let weight = wd * wp * 2.0 * u1 * u2;
                        s_val += weight * (diag + cross);
                        s_diag += weight * diag;
                        s_cross += weight * cross;
                    }
                }
            }
        }
        total.add(ws * s_val);
        diag_sum.add(ws * s_diag);
        cross_sum.add(ws * s_cross);
    }
    // Each element carries m²; the u-integrals supply the 1/L⁴.
    let scale = 1.0 / (8.0 * std::f64::consts::PI.powi(3) * gap.powi(4));
    Ok((
        scale * total.total(),
        split.then(|| (scale * diag_sum.total(), scale * cross_sum.total())),
    ))
}

/// Polarization-summed product of the two folded reflection elements for one
/// (u1, u2, Δφ) configuration, split into conserving and mixing parts; with
/// `plane` set, each mode also picks up the plane's diagonal Fresnel factor.
#[allow(clippy::too_many_arguments)]
fn round_trip_product(
    xi: f64,
    gap: f64,
    t: f64,
    u1: f64,
    u2: f64,
    phi: f64,
    refl1: &SphereReflection,
    refl2: &SphereReflection,
    fold1: f64,
    fold2: f64,
    plane: Option<&DielectricModel>,
) -> Result<(f64, f64)> {
    let k1 = ((u1 - t) * (u1 + t)).sqrt() / gap;
    let k2 = ((u2 - t) * (u2 + t)).sqrt() / gap;
    let kap1 = u1 / gap;
    let kap2 = u2 / gap;
    let fold_a = LogScaled::new(1, -(kap1 + kap2) * fold1);
    let fold_b = LogScaled::new(1, -(kap1 + kap2) * fold2);
    // Bounce a scatters (k1, 0, +) -> (k2, φ, -).  In the sphere-sphere
    // cycle bounce b runs (k2, -) -> (k1, +); with a plane in between the
    // propagation flips first, so the sphere again scatters (+) -> (-).
    // The orientations differ only in the sign-odd cross-polarization
    // elements.
    let up = PlaneWaveMode::new(xi, k1, 0.0, 1, Polarization::Te)?;
    let down = PlaneWaveMode::new(xi, k2, phi, -1, Polarization::Te)?;
    let b1 = refl1.element_block(&up, &down)?;
    let b2 = if plane.is_some() {
        let inc = PlaneWaveMode::new(xi, k2, phi, 1, Polarization::Te)?;
        let out = PlaneWaveMode::new(xi, k1, 0.0, -1, Polarization::Te)?;
        refl2.element_block(&inc, &out)?
    } else {
        refl2.element_block(&down, &up)?
    };
    let mut e1 = [[0.0f64; 2]; 2];
    let mut e2 = [[0.0f64; 2]; 2];
    for op in 0..2 {
        for ip in 0..2 {
            let v = b1[op][ip] * fold_a;
            debug_assert!(v.is_zero() || v.log_magnitude < 60.0);
            e1[op][ip] = v.value();
            let v = b2[op][ip] * fold_b;
            debug_assert!(v.is_zero() || v.log_magnitude < 60.0);
            e2[op][ip] = v.value();
        }
    }
    // Mode j carries polarization p_j; the (p1, p2) term pairs
    // E_a[p2 <- p1] with E_b[p1 <- p2] and the plane factors r_{p1}(κ1),
    // r_{p2}(κ2).
    let (f1, f2) = match plane {
        Some(pm) => {
            let fa = fresnel_at(pm, xi, kap1)?;
            let fb = fresnel_at(pm, xi, kap2)?;
            ([fa.r_te, fa.r_tm], [fb.r_te, fb.r_tm])
        }
        None => ([1.0, 1.0], [1.0, 1.0]),
    };
    let diag = e1[0][0] * e2[0][0] * f1[0] * f2[0] + e1[1][1] * e2[1][1] * f1[1] * f2[1];
    let cross = e1[1][0] * e2[0][1] * f1[0] * f2[1] + e1[0][1] * e2[1][0] * f1[1] * f2[0];
    Ok((diag, cross))
}

/// Symmetric panels covering [-edge, edge]: a ridge panel [-w, w] plus
/// geometric tail panels, each tagged ridge/tail for node-count selection.
fn symmetric_panels(w: f64, edge: f64) -> Vec<(f64, f64, bool)> {
    if w >= edge {
        return vec![(-edge, edge, true)];
    }
    let mut panels = vec![(-w, w, true)];
    let mut lo = w;
    while lo < edge {
        let hi = (8.0 * lo).min(edge);
        panels.push((lo, hi, false));
        panels.push((-hi, -lo, false));
        lo = hi;
    }
    panels
}

/// Panels covering [0, edge] with a ridge panel [0, w] plus geometric tails.
fn half_panels(w: f64, edge: f64) -> Vec<(f64, f64, bool)> {
    if w >= edge {
        return vec![(0.0, edge, true)];
    }
    let mut panels = vec![(0.0, w, true)];
    let mut lo = w;
    while lo < edge {
        let hi = (8.0 * lo).min(edge);
        panels.push((lo, hi, false));
        lo = hi;
    }
    panels
}

/// Cached Gauss-Legendre nodes with an interval-scaling iterator.
struct GaussLegendreCache {
    rule: crate::quadrature::GaussLegendre,
}

impl GaussLegendreCache {
    fn new(n: usize) -> Self {
        Self {
            rule: crate::quadrature::GaussLegendre::new(n),
        }
    }

    fn scaled(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

fn trace_of_power(p: &CyclicKernel, r: usize, measure: &[f64]) -> Result<f64> {
    match r {
        1 => Ok(p.trace(measure)),
        2 => Ok(p.pair_trace(p, measure)),
        _ => {
            let mut left = p.compose(p, measure);
            for _ in 3..r {
                left = left.compose(p, measure);
            }
            Ok(left.pair_trace(p, measure))
        }
    }
}

/// tr M^r for the plane-sphere geometry.  The plane reflects diagonally in
/// (k, φ, p), so the trace reduces to powers of a single combined kernel;
/// r = 1 collapses to a one-dimensional radial integral over the sphere's
/// specular diagonal.
pub fn trace_m_r_plane_sphere(
    r: usize,
    xi: f64,
    geom: &Geometry,
    sphere_model: &DielectricModel,
    plane_model: &DielectricModel,
    quad: &QuadratureSpec,
    kind: AmplitudeKind,
) -> Result<f64> {
    if r < 1 {
        return Err(Error::domain("round-trip order r must be >= 1"));
    }
    if !geom.is_plane_sphere() {
        return Err(Error::domain(
            "trace_m_r_plane_sphere requires a plane-sphere geometry",
        ));
    }
    quad.validate()?;
    let fold_length = geom.gap() + geom.r1();
    if r == 1 {
        // Diagonal in every quantum number:
        // Σ_p ∫ k dk/(2π) elem_p(k) r_p(κ) e^{-2κ(L+R1)}.
        // The integrand carries structure on both the gap scale and the
        // much shorter L/R scale (the onset of the specular regime), so it
        // goes through the graded-panel rule rather than the fixed grid.
        let gap = geom.gap();
        let t = xi * gap / SPEED_OF_LIGHT;
        let refl = SphereReflection {
            radius: geom.r1(),
            model: sphere_model,
            kind,
            tol: 1e-9,
        };
        let mut failure: Option<Error> = None;
        let (integral, _) = crate::quadrature::integrate_decay(
            |v| {
                if failure.is_some() {
                    return 0.0;
                }
                let u = t + v;
                let kappa = u / gap;
                let k = (v * (v + 2.0 * t)).sqrt() / gap;
                let mut point = 0.0;
                for pol in Polarization::BOTH {
                    let built = (|| -> Result<f64> {
                        let fres = fresnel_at(plane_model, xi, kappa)?;
                        let mode_in = PlaneWaveMode::new(xi, k, 0.0, 1, pol)?;
                        let mode_out = PlaneWaveMode::new(xi, k, 0.0, -1, pol)?;
                        let elem = refl.element(&mode_out, &mode_in)?;
                        let folded = elem * LogScaled::new(1, -2.0 * kappa * fold_length);
                        debug_assert!(folded.is_zero() || folded.log_magnitude < 60.0);
                        let r_p = match pol {
                            Polarization::Te => fres.r_te,
                            Polarization::Tm => fres.r_tm,
                        };
                        Ok(folded.value() * r_p)
                    })();
                    match built {
                        Ok(val) => point += val,
                        Err(e) => {
                            failure = Some(e);
                            return 0.0;
                        }
                    }
                }
                // Measure u du/(2π L²).
                point * u / (2.0 * std::f64::consts::PI * gap * gap)
            },
            1e-12,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        return Ok(integral);
    }
    if r == 2 {
        // Same (s, d, Δφ) structure as a single sphere-sphere round trip:
        // two bounces at the sphere with the plane's diagonal factors.
        let (total, _) = adapted_two_bounce(
            xi, geom.gap(),
            geom.r1(), sphere_model, geom.r1(), sphere_model,
            Some(plane_model), quad, kind, false,
        )?;
        return Ok(total);
    }
    let composes = match r {
        3 | 4 => 1,
        _ => r - 2,
    };
    check_budget(r, quad, composes)?;
    let grid = radial_grid(xi, geom.gap(), quad);
    let kernel = build_sphere_kernel(
        geom.r1(),
        sphere_model,
        kind,
        1e-9,
        xi,
        &grid,
        quad.n_phi,
        fold_length,
        1,
        -1,
        Some(plane_model),
    )?;
    match r {
        3 => {
            let p2 = kernel.compose(&kernel, &grid.measure);
            Ok(p2.pair_trace(&kernel, &grid.measure))
        }
        4 => {
            let p2 = kernel.compose(&kernel, &grid.measure);
            Ok(p2.pair_trace(&p2, &grid.measure))
        }
        _ => trace_of_power(&kernel, r, &grid.measure),
    }
}

/// Trace value with a quadrature-convergence error estimate obtained from a
/// half-resolution rerun; `est_error` is the absolute difference.
#[derive(Clone, Copy, Debug)]
pub struct TraceEstimate {
    pub value: f64,
    pub est_error: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn trace_m_r_with_error(
    r: usize,
    xi: f64,
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    quad: &QuadratureSpec,
    kind: AmplitudeKind,
) -> Result<TraceEstimate> {
    let (value, coarse) = if geom.is_plane_sphere() {
        (
            trace_m_r_plane_sphere(r, xi, geom, model1, model2, quad, kind)?,
            trace_m_r_plane_sphere(r, xi, geom, model1, model2, &quad.halved(), kind)?,
        )
    } else {
        (
            trace_m_r(r, xi, geom, model1, model2, quad, kind)?,
            trace_m_r(r, xi, geom, model1, model2, &quad.halved(), kind)?,
        )
    };
    // The graded plane-sphere r = 1 path is grid-independent; floor the
    // estimate at its panel tolerance so it never reports exactly zero.
    Ok(TraceEstimate {
        value,
        est_error: (value - coarse).abs().max(1e-12 * value.abs()),
    })
}

/// Numeric trace (with its doubling error estimate) next to the saddle-point
/// closed form for the same configuration — the proximity-force-emergence
/// comparison driven by the CLI.
#[allow(clippy::too_many_arguments)]
pub fn tr_m_r_pfa_compare(
    r: usize,
    xi: f64,
    geom: &Geometry,
    model1: &DielectricModel,
    model2: &DielectricModel,
    quad: &QuadratureSpec,
    kind: AmplitudeKind,
) -> Result<(TraceEstimate, f64)> {
    let numeric = trace_m_r_with_error(r, xi, geom, model1, model2, quad, kind)?;
    let closed = crate::pfa::tr_m_r_pfa(r, xi, geom.gap(), geom.r_eff(), model1, model2)?;
    Ok((numeric, closed))
}

// ---------------------------------------------------------------------------
// Free energy from tabulated traces
// ---------------------------------------------------------------------------

/// One tabulated trace with its quadrature error estimate.
#[derive(Clone, Copy, Debug)]
pub struct TraceEntry {
    pub trace: f64,
    pub est_error: f64,
}

/// Table of tr M^r over the Matsubara index n and round-trip order r.
#[derive(Clone, Debug, Default)]
pub struct TraceTable {
    entries: BTreeMap<(u32, u32), TraceEntry>,
}

impl TraceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: u32, r: u32, entry: TraceEntry) {
        self.entries.insert((n, r), entry);
    }

    pub fn get(&self, n: u32, r: u32) -> Option<&TraceEntry> {
        self.entries.get(&(n, r))
    }

    pub fn n_max(&self) -> Option<u32> {
        self.entries.keys().map(|k| k.0).max()
    }

    pub fn r_max(&self) -> Option<u32> {
        self.entries.keys().map(|k| k.1).max()
    }

    /// Rows (n, r, trace, est_error) in ascending (n, r) order.
    pub fn rows(&self) -> Vec<(u32, u32, f64, f64)> {
        self.entries
            .iter()
            .map(|(&(n, r), e)| (n, r, e.trace, e.est_error))
            .collect()
    }
}

/// Truncated free-energy sum with its truncation diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct TraceFreeEnergy {
    /// -(k_B T/2) Σ_n Σ_r (1/r) tr M^r, Joules.
    pub value: f64,
    /// |last-r shell| / |total|; convergence is claimed below 1e-3.
    pub truncation_ratio: f64,
    pub converged: bool,
}

const TRACE_SUM_GATE: f64 = 1e-3;

/// Assembles F = -(k_B T/2) Σ_n Σ_r (1/r) tr M^r(|ξ_n|) from a complete
/// table with n = 0..=n_max and r = 1..=r_max (±n symmetry folds into a
/// factor 2 for n ≥ 1).
pub fn free_energy_from_traces(table: &TraceTable, temperature: f64) -> Result<TraceFreeEnergy> {
    if !(temperature > 0.0) {
        return Err(Error::domain("free_energy_from_traces requires T > 0"));
    }
    let n_max = table
        .n_max()
        .ok_or_else(|| Error::domain("empty trace table"))?;
    let r_max = table.r_max().unwrap();
    let mut sum = NeumaierSum::new();
    let mut last_shell = NeumaierSum::new();
    for n in 0..=n_max {
        let weight = if n == 0 { 1.0 } else { 2.0 };
        for r in 1..=r_max {
            let entry = table.get(n, r).ok_or_else(|| {
                Error::domain(format!("trace table is missing the (n={n}, r={r}) entry"))
            })?;
            let term = weight * entry.trace / r as f64;
            sum.add(term);
            if r == r_max {
                last_shell.add(term);
            }
        }
    }
    let total = sum.total();
    let ratio = if total == 0.0 {
        0.0
    } else {
        (last_shell.total() / total).abs()
    };
    Ok(TraceFreeEnergy {
        value: -0.5 * crate::constants::BOLTZMANN * temperature * total,
        truncation_ratio: ratio,
        converged: ratio <= TRACE_SUM_GATE && r_max > 1,
    })
}

/// Zero-temperature free energy -(ħ/2π)∫dξ Σ_r (1/r) tr M^r(ξ) over the
/// whole frequency axis (twice the half-axis integral), from a
/// caller-supplied round-trip-summed trace; `xi_scale` sets the decay scale
/// of the ξ-quadrature (typically c/2L).
pub fn free_energy_zero_temperature<F>(mut trace_sum: F, xi_scale: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(xi_scale > 0.0) {
        return Err(Error::domain("xi_scale must be positive"));
    }
    let mut failure: Option<Error> = None;
    let (integral, _) = crate::quadrature::integrate_decay(
        |v| {
            if failure.is_some() {
                return 0.0;
            }
            match trace_sum(xi_scale * v) {
                Ok(val) => val,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        1e-10,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(-crate::constants::HBAR / std::f64::consts::PI * xi_scale * integral)
}
