//! Exact Mie scattering amplitudes at imaginary frequency.
//!
//! On the imaginary axis the Mie coefficients are real with definite sign and
//! are built from modified spherical Bessel functions.  With the
//! Riccati-style combinations
//!
//! ```text
//! S_l(z) = z i_l(z),  C_l(z) = z k_l(z),
//! S_l'(z) = z i_{l-1}(z) - l i_l(z),  C_l'(z) = -z k_{l-1}(z) - l k_l(z),
//! ```
//!
//! the coefficients for a homogeneous non-magnetic sphere of refractive index
//! n = √ε at size parameter x = ξR/c read
//!
//! ```text
//! a_l = (-1)^{l+1} (π/2) [n S_l(nx) S_l'(x) - S_l(x) S_l'(nx)]
//!                      / [n S_l(nx) C_l'(x) - C_l(x) S_l'(nx)],
//! b_l = (-1)^{l+1} (π/2) [S_l(nx) S_l'(x) - n S_l(x) S_l'(nx)]
//!                      / [S_l(nx) C_l'(x) - n C_l(x) S_l'(nx)],
//! ```
//! with the ε → ∞ closed forms for a perfect reflector.  The scattering
//! amplitudes are the partial-wave sums
//!
//! ```text
//! S1 = Σ_l (2l+1)/(l(l+1)) [a_l π_l(cos Θ) + b_l τ_l(cos Θ)],
//! S2 = Σ_l (2l+1)/(l(l+1)) [a_l τ_l(cos Θ) + b_l π_l(cos Θ)],
//! ```
//!
//! where cos Θ ≤ -1 for every backscattering channel of the two-sphere
//! round trip, so the angular functions grow geometrically in l and every
//! product is carried in log-scaled arithmetic.

use crate::constants::SPEED_OF_LIGHT;
use crate::logspace::{LogScaled, ScaledAccumulator};
use crate::materials::{permittivity, DielectricModel};
use crate::{Error, Result};

/// Size parameter x = ξR/c ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SizeParameter(pub f64);

impl SizeParameter {
    pub fn new(x: f64) -> Result<Self> {
        if x >= 0.0 && x.is_finite() {
            Ok(Self(x))
        } else {
            Err(Error::domain(format!("size parameter must be >= 0, got {x}")))
        }
    }
}

/// Backscattering kinematics of a mode pair at imaginary frequency.
///
/// `cos_theta` and `sin_half_theta` are finite for ξ > 0 and diverge like
/// 1/ξ² in the zero-frequency limit; `phase_rate` = (2ξ/c)·sin(Θ/2) (units
/// 1/m) stays finite for all ξ ≥ 0 and, multiplied by the sphere radius,
/// gives the specular-reflection exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringKinematics {
    pub cos_theta: f64,
    pub sin_half_theta: f64,
    pub xi_over_c: f64,
    pub phase_rate: f64,
}

impl ScatteringKinematics {
    /// Kinematics from a scattering-angle cosine (≤ -1) at frequency ξ > 0.
    pub fn from_cos_theta(cos_theta: f64, xi: f64) -> Result<Self> {
        if !(cos_theta <= -1.0) {
            return Err(Error::domain(format!(
                "imaginary-frequency backscattering needs cos theta <= -1, got {cos_theta}"
            )));
        }
        if !(xi > 0.0) {
            return Err(Error::domain("from_cos_theta requires xi > 0"));
        }
        let sin_half = ((1.0 - cos_theta) / 2.0).sqrt();
        let xi_over_c = xi / SPEED_OF_LIGHT;
        Ok(Self {
            cos_theta,
            sin_half_theta: sin_half,
            xi_over_c,
            phase_rate: 2.0 * xi_over_c * sin_half,
        })
    }

    /// Zero-frequency kinematics specified by the finite combination
    /// `phase_rate` = lim (2ξ/c) sin(Θ/2).
    pub fn zero_frequency(phase_rate: f64) -> Result<Self> {
        if !(phase_rate >= 0.0) {
            return Err(Error::domain("phase rate must be >= 0"));
        }
        Ok(Self {
            cos_theta: f64::NEG_INFINITY,
            sin_half_theta: f64::INFINITY,
            xi_over_c: 0.0,
            phase_rate,
        })
    }

    pub fn is_zero_frequency(&self) -> bool {
        self.xi_over_c == 0.0
    }
}

/// Scattering angle of a plane-wave pair per the backscattering rule
/// cos Θ = -(c²/ξ²)(k_i·k_j + κ_i κ_j).
pub fn scattering_angle(
    k_i: f64,
    k_j: f64,
    delta_phi: f64,
    kappa_i: f64,
    kappa_j: f64,
    xi: f64,
) -> Result<ScatteringKinematics> {
    let xi_over_c = xi / SPEED_OF_LIGHT;
    for (k, kappa) in [(k_i, kappa_i), (k_j, kappa_j)] {
        let expected = xi_over_c.hypot(k);
        if (kappa - expected).abs() > 1e-9 * expected.max(1e-300) {
            return Err(Error::domain(format!(
                "inconsistent mode: kappa = {kappa} but sqrt(xi^2/c^2 + k^2) = {expected}"
            )));
        }
    }
    // Cancellation-free split: κ_iκ_j + k_ik_j cos(Δφ) exceeds (ξ/c)² by
    //   qmk + 2 k_ik_j cos²(Δφ/2),  qmk = κ_iκ_j - (ξ/c)² - k_ik_j ≥ 0,
    // with qmk written as a ratio of positive products.
    let tm2 = xi_over_c * xi_over_c;
    let p = k_i * k_j;
    let kap = kappa_i * kappa_j;
    let denom_h = kap + p;
    let excess = if denom_h == 0.0 {
        0.0
    } else {
        let sum_h = tm2 + k_i * k_i + k_j * k_j;
        let diff = k_i * kappa_i - k_j * kappa_j;
        let qmk = tm2 * diff * diff / ((sum_h + denom_h) * denom_h);
        let half = (0.5 * delta_phi).cos();
        qmk + 2.0 * p * half * half
    };
    let phase_rate = (2.0 * (2.0 * tm2 + excess)).sqrt();
    if xi_over_c == 0.0 {
        return ScatteringKinematics::zero_frequency(phase_rate);
    }
    let cos_theta = -1.0 - excess / tm2;
    Ok(ScatteringKinematics {
        cos_theta,
        sin_half_theta: ((1.0 - cos_theta) / 2.0).sqrt(),
        xi_over_c,
        phase_rate,
    })
}

// ---------------------------------------------------------------------------
// Angular functions
// ---------------------------------------------------------------------------

/// Upward-recurrence iterator for (π_l, τ_l) starting at l = 1, with running
/// rescaling since both grow like (2|z|)^l for |z| > 1.
struct AngularFunctions {
    z: f64,
    ell: usize,
    pi_prev: f64,
    pi_curr: f64,
    log_shift: f64,
}

impl AngularFunctions {
    fn new(z: f64) -> Self {
        Self {
            z,
            ell: 0,
            pi_prev: 0.0,
            pi_curr: 1.0,
            log_shift: 0.0,
        }
    }
}

impl Iterator for AngularFunctions {
    /// (π_l, τ_l) for l = 1, 2, ...
    type Item = (LogScaled, LogScaled);

    fn next(&mut self) -> Option<Self::Item> {
        if self.ell == 0 {
            self.ell = 1;
        } else {
            let l = self.ell as f64;
            let pi_next = ((2.0 * l + 1.0) * self.z * self.pi_curr - (l + 1.0) * self.pi_prev) / l;
            self.pi_prev = self.pi_curr;
            self.pi_curr = pi_next;
            self.ell += 1;
            let mag = self.pi_curr.abs().max(self.pi_prev.abs());
            if mag > 1e250 {
                self.pi_prev /= mag;
                self.pi_curr /= mag;
                self.log_shift += mag.ln();
            }
        }
        let l = self.ell as f64;
        let tau = l * self.z * self.pi_curr - (l + 1.0) * self.pi_prev;
        let shift = LogScaled::new(1, self.log_shift);
        Some((
            LogScaled::from_value(self.pi_curr) * shift,
            LogScaled::from_value(tau) * shift,
        ))
    }
}

/// Angular functions π_l(z) = P_l'(z) and τ_l(z) for l ≥ 1, log-scaled.
pub fn angular_functions(ell: usize, z: f64) -> Result<(LogScaled, LogScaled)> {
    if ell < 1 {
        return Err(Error::domain("angular functions need ell >= 1"));
    }
    AngularFunctions::new(z)
        .nth(ell - 1)
        .ok_or_else(|| Error::domain("angular recurrence exhausted"))
}

// ---------------------------------------------------------------------------
// Modified spherical Bessel ladders
// ---------------------------------------------------------------------------

/// ln sinh(z) without overflow or small-z cancellation.
fn ln_sinh(z: f64) -> f64 {
    if z < 1e-4 {
        z.ln() + (z * z / 6.0 * (1.0 + z * z / 20.0)).ln_1p()
    } else if z < 350.0 {
        z.sinh().ln()
    } else {
        z - std::f64::consts::LN_2 + (-(-2.0 * z).exp()).ln_1p()
    }
}

/// ln i_l(z) for l = 0..=ell_max by downward (Miller) recurrence, seeded far
/// enough above ell_max that the contaminating k-type solution has decayed.
fn ln_modified_i(z: f64, ell_max: usize) -> Vec<f64> {
    debug_assert!(z > 0.0);
    let lf = ell_max as f64;
    let margin = ((lf * lf + 45.0 * z).sqrt() - lf).ceil() as usize + 12;
    let top = ell_max + margin;
    let mut out = vec![0.0_f64; ell_max + 1];
    let mut above = 0.0_f64; // scaled i_{l+1}
    let mut here = 1e-280_f64; // scaled i_l at l = top
    let mut shift = 0.0_f64;
    for l in (0..top).rev() {
        // i_{l} = i_{l+2} + (2l+3)/z * i_{l+1}, stepping the pair downward.
        let below = above + (2.0 * l as f64 + 3.0) / z * here;
        above = here;
        here = below;
        if here > 1e250 {
            let mag = here;
            above /= mag;
            here /= mag;
            shift += mag.ln();
        }
        if l <= ell_max {
            out[l] = here.ln() + shift;
        }
    }
    // Normalize to i_0(z) = sinh(z)/z.
    let ln_i0 = ln_sinh(z) - z.ln();
    let correction = ln_i0 - out[0];
    for v in &mut out {
        *v += correction;
    }
    out
}

/// ln k_l(z) for l = 0..=ell_max by stable upward recurrence.
fn ln_modified_k(z: f64, ell_max: usize) -> Vec<f64> {
    debug_assert!(z > 0.0);
    // Work with K_l = k_l e^z 2/π to keep the prefactor analytic; K_0 = 1/z.
    let mut out = vec![0.0_f64; ell_max + 1];
    let base = std::f64::consts::FRAC_PI_2.ln() - z;
    let mut prev = 1.0 / z;
    out[0] = base + prev.ln();
    if ell_max == 0 {
        return out;
    }
    let mut curr = (z + 1.0) / (z * z);
    out[1] = base + curr.ln();
    let mut shift = 0.0_f64;
    for l in 1..ell_max {
        let next = prev + (2.0 * l as f64 + 1.0) / z * curr;
        prev = curr;
        curr = next;
        if curr > 1e250 {
            let mag = curr;
            prev /= mag;
            curr /= mag;
            shift += mag.ln();
        }
        out[l + 1] = base + curr.ln() + shift;
    }
    out
}

/// Riccati-type combinations S_l, S_l', C_l, C_l' at one argument, for all
/// l = 1..=ell_max, derived from the i/k ladders.
struct RiccatiLadder {
    s: Vec<LogScaled>,
    s_prime: Vec<LogScaled>,
    c: Vec<LogScaled>,
    c_prime: Vec<LogScaled>,
}

impl RiccatiLadder {
    fn build(z: f64, ell_max: usize, with_k: bool) -> Self {
        let ln_i = ln_modified_i(z, ell_max);
        let ln_z = z.ln();
        let mut s = Vec::with_capacity(ell_max + 1);
        let mut s_prime = Vec::with_capacity(ell_max + 1);
        s.push(LogScaled::ZERO); // placeholder at l = 0
        s_prime.push(LogScaled::ZERO);
        for l in 1..=ell_max {
            s.push(LogScaled::new(1, ln_z + ln_i[l]));
            // S_l' = z i_{l-1} - l i_l; both positive, no severe cancellation.
            let t1 = LogScaled::new(1, ln_z + ln_i[l - 1]);
            let t2 = LogScaled::new(1, (l as f64).ln() + ln_i[l]);
            s_prime.push(t1 - t2);
        }
        let (mut c, mut c_prime) = (Vec::new(), Vec::new());
        if with_k {
            let ln_k = ln_modified_k(z, ell_max);
            c.push(LogScaled::ZERO);
            c_prime.push(LogScaled::ZERO);
            for l in 1..=ell_max {
                c.push(LogScaled::new(1, ln_z + ln_k[l]));
                // C_l' = -(z k_{l-1} + l k_l): a negative-definite sum.
                let t1 = LogScaled::new(1, ln_z + ln_k[l - 1]);
                let t2 = LogScaled::new(1, (l as f64).ln() + ln_k[l]);
                c_prime.push(-(t1 + t2));
            }
        }
        Self {
            s,
            s_prime,
            c,
            c_prime,
        }
    }
}

/// Mie coefficients a_l, b_l for l = 1..=ell_max at size parameter x.
struct MieTable {
    a: Vec<LogScaled>,
    b: Vec<LogScaled>,
}

impl MieTable {
    fn get(&self, ell: usize) -> (LogScaled, LogScaled) {
        (self.a[ell], self.b[ell])
    }
}

fn build_mie_table_perfect(x: f64, ell_max: usize) -> MieTable {
    let half_pi = LogScaled::from_value(std::f64::consts::FRAC_PI_2);
    let mut a = vec![LogScaled::ZERO; ell_max + 1];
    let mut b = vec![LogScaled::ZERO; ell_max + 1];
    let outer = RiccatiLadder::build(x, ell_max, true);
    for l in 1..=ell_max {
        let parity = if l % 2 == 1 { 1.0 } else { -1.0 };
        let sign = LogScaled::from_value(parity);
        a[l] = sign * half_pi * (outer.s_prime[l] / outer.c_prime[l]);
        b[l] = sign * half_pi * (outer.s[l] / outer.c[l]);
    }
    MieTable { a, b }
}

fn build_mie_table_material(x: f64, eps: f64, ell_max: usize) -> MieTable {
    let half_pi = LogScaled::from_value(std::f64::consts::FRAC_PI_2);
    let mut a = vec![LogScaled::ZERO; ell_max + 1];
    let mut b = vec![LogScaled::ZERO; ell_max + 1];
    if eps == 1.0 {
        return MieTable { a, b };
    }
    let n = eps.sqrt();
    let n_ls = LogScaled::from_value(n);
    let outer = RiccatiLadder::build(x, ell_max, true);
    let inner = RiccatiLadder::build(n * x, ell_max, false);
    for l in 1..=ell_max {
        let parity = if l % 2 == 1 { 1.0 } else { -1.0 };
        let sign = LogScaled::from_value(parity);
        let num_a = n_ls * inner.s[l] * outer.s_prime[l] - outer.s[l] * inner.s_prime[l];
        let den_a = n_ls * inner.s[l] * outer.c_prime[l] - outer.c[l] * inner.s_prime[l];
        let num_b = inner.s[l] * outer.s_prime[l] - n_ls * outer.s[l] * inner.s_prime[l];
        let den_b = inner.s[l] * outer.c_prime[l] - n_ls * outer.c[l] * inner.s_prime[l];
        a[l] = sign * half_pi * (num_a / den_a);
        b[l] = sign * half_pi * (num_b / den_b);
    }
    MieTable { a, b }
}

fn mie_table(x: f64, xi: f64, model: &DielectricModel, ell_max: usize) -> Result<MieTable> {
    match model {
        DielectricModel::PerfectReflector => Ok(build_mie_table_perfect(x, ell_max)),
        _ => {
            let eps = permittivity(model, xi)?;
            Ok(build_mie_table_material(x, eps, ell_max))
        }
    }
}

/// Mie coefficients (a_l, b_l) at imaginary frequency.
///
/// For material models the frequency is reconstructed from the size
/// parameter via `xi`, which must be supplied consistently; the perfect
/// reflector needs no frequency.  Errors on x ≤ 0 (the zero-frequency branch
/// is a separate operation).
pub fn mie_coefficients(
    ell: usize,
    x: SizeParameter,
    xi: f64,
    model: &DielectricModel,
) -> Result<(LogScaled, LogScaled)> {
    if ell < 1 {
        return Err(Error::domain("Mie coefficients need ell >= 1"));
    }
    if !(x.0 > 0.0) {
        return Err(Error::domain(
            "Mie coefficients need x > 0; use the zero-frequency amplitudes at xi = 0",
        ));
    }
    let table = mie_table(x.0, xi, model, ell)?;
    Ok(table.get(ell))
}

// ---------------------------------------------------------------------------
// Partial-wave sums
// ---------------------------------------------------------------------------

const PARTIAL_WAVE_CAP: usize = 10_000_000;

/// Exact scattering amplitudes (S1, S2) by adaptive partial-wave summation.
///
/// The sum starts at ceil(x sin(Θ/2)) + 10 x^(1/3) + 20 terms (the WKB
/// localization scale) and doubles until the trailing block contributes less
/// than `tol` of both amplitudes.
pub fn scattering_amplitudes(
    kin: &ScatteringKinematics,
    x: SizeParameter,
    model: &DielectricModel,
    tol: f64,
) -> Result<(LogScaled, LogScaled)> {
    if !(x.0 > 0.0) {
        return Err(Error::domain(
            "scattering_amplitudes needs x > 0; use scattering_amplitudes_zero_freq at xi = 0",
        ));
    }
    if kin.is_zero_frequency() || !kin.cos_theta.is_finite() {
        return Err(Error::domain(
            "scattering_amplitudes needs finite kinematics (xi > 0)",
        ));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain("tolerance must lie in (0, 1)"));
    }
    let xi = kin.xi_over_c * SPEED_OF_LIGHT;
    let start = (x.0 * kin.sin_half_theta).ceil() + 10.0 * x.0.cbrt() + 20.0;
    let mut l_prev = 0usize;
    let mut l_max = start as usize;
    loop {
        if l_max > PARTIAL_WAVE_CAP {
            return Err(Error::nonconvergence(format!(
                "partial-wave sum did not converge within {PARTIAL_WAVE_CAP} terms (x = {}, cos = {})",
                x.0, kin.cos_theta
            )));
        }
        let table = mie_table(x.0, xi, model, l_max)?;
        let mut acc1 = ScaledAccumulator::new();
        let mut acc2 = ScaledAccumulator::new();
        let mut blk1 = ScaledAccumulator::new();
        let mut blk2 = ScaledAccumulator::new();
        for (idx, (pi, tau)) in AngularFunctions::new(kin.cos_theta)
            .take(l_max)
            .enumerate()
        {
            let l = idx + 1;
            let lf = l as f64;
            let weight = LogScaled::from_value((2.0 * lf + 1.0) / (lf * (lf + 1.0)));
            let (a, b) = table.get(l);
            let t1 = weight * (a * pi + b * tau);
            let t2 = weight * (a * tau + b * pi);
            acc1.add(t1);
            acc2.add(t2);
            if l > l_prev {
                blk1.add(t1);
                blk2.add(t2);
            }
        }
        let s1 = acc1.total();
        let s2 = acc2.total();
        if l_prev > 0 {
            let rel = |block: LogScaled, total: LogScaled| -> f64 {
                if total.is_zero() {
                    if block.is_zero() {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    block.abs().ratio(&total.abs())
                }
            };
            if rel(blk1.total(), s1) < tol && rel(blk2.total(), s2) < tol {
                return Ok((s1, s2));
            }
        }
        l_prev = l_max;
        l_max *= 2;
    }
}

/// Exact ξ → 0 limit of the scattering amplitudes, reported as
/// lim (c/ξ) S_p so the 1/ξ pole of the reflection-element prefactor cancels
/// analytically (result in meters).
///
/// With z = R·phase_rate,
///
/// ```text
/// (c/ξ) S1 → -R [cosh z - (2/z²)(z sinh z - cosh z + 1)]   (perfect reflector,
///                                                           zero otherwise),
/// (c/ξ) S2 → +R Σ_l E_l z^(2l)/(2l)!,
/// ```
/// where E_l = 1 for perfect reflectors and metals (the sum is cosh z - 1)
/// and E_l = (ε0-1)/(ε0 + (l+1)/l) for dielectrics, whose large-l limit is
/// the zero-frequency TM Fresnel coefficient (ε0-1)/(ε0+1).
pub fn scattering_amplitudes_zero_freq(
    kin: &ScatteringKinematics,
    radius: f64,
    model: &DielectricModel,
) -> Result<(LogScaled, LogScaled)> {
    if !kin.is_zero_frequency() {
        return Err(Error::domain(
            "scattering_amplitudes_zero_freq applies at xi = 0 only",
        ));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain("radius must be positive and finite"));
    }
    model.validate()?;
    let z = radius * kin.phase_rate;
    let r_ls = LogScaled::from_value(radius);
    let s1 = match model {
        DielectricModel::PerfectReflector => -(r_ls * te_series(z)),
        _ => LogScaled::ZERO,
    };
    let s2 = match model {
        DielectricModel::Dielectric { eps0 } => r_ls * dielectric_tm_series(z, *eps0),
        _ => r_ls * cosh_minus_one(z),
    };
    Ok((s1, s2))
}

/// cosh z - 1 as a log-scaled value, stable for all z ≥ 0.
fn cosh_minus_one(z: f64) -> LogScaled {
    if z < 1e-8 {
        LogScaled::from_value(0.5 * z * z)
    } else if z < 35.0 {
        LogScaled::from_value(z.cosh() - 1.0)
    } else {
        let g = 0.5 * (1.0 + (-2.0 * z).exp()) - (-z).exp();
        LogScaled::new(1, z + g.ln())
    }
}

/// Σ_l [l/(l+1)] z^(2l)/(2l)! = cosh z - (2/z²)(z sinh z - cosh z + 1).
fn te_series(z: f64) -> LogScaled {
    if z < 0.5 {
        // Direct series; the closed form cancels badly here.
        let mut term = z * z / 2.0; // z^2/(2)!  (l = 1 before the l/(l+1) factor)
        let mut sum = 0.0_f64;
        let mut l = 1.0;
        while term > 1e-20 * sum.max(1e-300) {
            sum += term * l / (l + 1.0);
            term *= z * z / ((2.0 * l + 1.0) * (2.0 * l + 2.0));
            l += 1.0;
        }
        LogScaled::from_value(sum)
    } else if z < 35.0 {
        LogScaled::from_value(z.cosh() - 2.0 / (z * z) * (z * z.sinh() - z.cosh() + 1.0))
    } else {
        let e2 = (-2.0 * z).exp();
        let e1 = (-z).exp();
        let g = 0.5 * (1.0 + e2)
            - 2.0 / (z * z) * (0.5 * z * (1.0 - e2) - 0.5 * (1.0 + e2) + e1);
        LogScaled::new(1, z + g.ln())
    }
}

/// Σ_l E_l z^(2l)/(2l)! with E_l = (ε0-1)/(ε0 + (l+1)/l), log-accumulated
/// because the terms reach exp(z) for z up to ~10^4.
fn dielectric_tm_series(z: f64, eps0: f64) -> LogScaled {
    if eps0 == 1.0 {
        return LogScaled::ZERO;
    }
    if z == 0.0 {
        return LogScaled::ZERO;
    }
    let e_l = |l: f64| (eps0 - 1.0) / (eps0 + (l + 1.0) / l);
    let mut acc = ScaledAccumulator::new();
    let mut ln_term = 2.0 * z.ln() - 2.0_f64.ln(); // z^2/2!
    let mut l = 1.0;
    let mut ln_peak = f64::NEG_INFINITY;
    loop {
        let t = LogScaled::new(1, ln_term + e_l(l).ln());
        acc.add(t);
        ln_peak = ln_peak.max(ln_term);
        if ln_term < ln_peak - 45.0 && 2.0 * l > z {
            break;
        }
        ln_term += 2.0 * z.ln() - ((2.0 * l + 1.0) * (2.0 * l + 2.0)).ln();
        l += 1.0;
        if l > 3e7 {
            break;
        }
    }
    acc.total()
}
