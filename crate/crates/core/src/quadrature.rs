//! Quadrature rules used by the trace and free-energy integrals.
//!
//! Three kinds of integrals appear:
//!
//! * semi-infinite integrals with exponential decay and smooth integrands —
//!   handled by Gauss-Legendre nodes under the map `v = -ln(1-s)/rate`, which
//!   turns `exp(-rate·v)` into a polynomial weight;
//! * semi-infinite integrals whose integrand has a logarithmic endpoint
//!   singularity (dilogarithm / Lifshitz log integrands at zero frequency) —
//!   handled by geometrically graded panels toward the endpoint;
//! * oscillatory Poisson-summation integrals — integrated between consecutive
//!   zeros of the cosine and accelerated with Wynn's epsilon algorithm.

/// Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes nodes and weights by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi-style initial guess for the i-th positive root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            let (_, d) = legendre_with_derivative(n, 0.0);
            nodes[n / 2] = 0.0;
            weights[n / 2] = 2.0 / (d * d);
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = NeumaierSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum.add(w * f(mid + half * x));
        }
        half * sum.total()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Laguerre rule rescaled to decay rate `rate`: nodes v_i and
/// exponent-compensated weights W_i such that
///
/// ```text
/// ∫_0^∞ f(v) dv ≈ Σ W_i f(v_i)
/// ```
///
/// is exact for f = exp(-rate·v)·(polynomial of degree ≤ 2n-1).  The caller
/// passes the full integrand including its own exponential decay; the
/// compensation factor exp(x_i) lives in the weights.
#[derive(Clone, Debug)]
pub struct ExpWeightedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ExpWeightedRule {
    pub fn new(n: usize, rate: f64) -> Self {
        assert!(rate > 0.0);
        assert!((1..=400).contains(&n));
        let nf = n as f64;
        // Laguerre polynomial pair (L_n, L_{n-1}) scaled by e^{-z/2}.
        let scaled_pair = |z: f64| -> (f64, f64) {
            let mut p1 = (-0.5 * z).exp();
            let mut p2 = 0.0;
            for k in 0..n {
                let p3 = p2;
                p2 = p1;
                let kf = k as f64;
                p1 = ((2.0 * kf + 1.0 - z) * p2 - kf * p3) / (kf + 1.0);
            }
            (p1, p2)
        };
        let mut roots = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Stroud-Secrest style initial guesses.
            let mut z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => roots[0] + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = i as f64 - 1.0;
                    roots[i - 1] + (1.0 + 2.55 * ai) / (1.9 * ai) * (roots[i - 1] - roots[i - 2])
                }
            };
            let mut pair = scaled_pair(z);
            for _ in 0..100 {
                let pp = nf * (pair.0 - pair.1) / z;
                let dz = pair.0 / pp;
                z -= dz;
                pair = scaled_pair(z);
                if dz.abs() <= 1e-15 * z.max(1.0) {
                    break;
                }
            }
            let pp = nf * (pair.0 - pair.1) / z;
            // Scaled p's carry e^{-z/2} each, so this is the compensated
            // weight w_i e^{z_i} directly.
            weights.push(-1.0 / (pp * nf * pair.1));
            roots.push(z);
        }
        Self {
            nodes: roots.iter().map(|z| z / rate).collect(),
            weights: weights.iter().map(|w| w / rate).collect(),
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut sum = NeumaierSum::new();
        for (v, w) in self.nodes.iter().zip(&self.weights) {
            sum.add(w * f(*v));
        }
        sum.total()
    }
}

/// Adaptive-length panel integration of `∫_0^∞ f(v) dv` for integrands that
/// decay on scale ~1 and may carry an integrable log singularity at v = 0.
///
/// Panels are geometric toward the origin (resolving `v ln v` behaviour) and
/// doubling toward the tail, each integrated with 16- and 8-point
/// Gauss-Legendre; the difference is the error estimate.  The tail stops once
/// a panel contributes less than `rel_tol` of the running total twice in a
/// row.
pub fn integrate_decay(mut f: impl FnMut(f64) -> f64, rel_tol: f64) -> (f64, f64) {
    let gl16 = rule16();
    let gl8 = rule8();
    let mut total = NeumaierSum::new();
    let mut err = 0.0;
    let mut edges: Vec<f64> = Vec::with_capacity(64);
    // Graded region [1e-13, 1]: resolves endpoint log singularities.
    let mut e = 1e-13;
    edges.push(0.0);
    while e < 1.0 {
        edges.push(e);
        e *= 4.0;
    }
    edges.push(1.0);
    for pair in edges.windows(2) {
        let v16 = gl16.integrate(pair[0], pair[1], &mut f);
        let v8 = gl8.integrate(pair[0], pair[1], &mut f);
        total.add(v16);
        err += (v16 - v8).abs();
    }
    // Doubling tail panels [1,2], [2,4], ...
    let mut lo = 1.0;
    let mut small_count = 0;
    for _ in 0..60 {
        let hi = lo * 2.0;
        let v16 = gl16.integrate(lo, hi, &mut f);
        let v8 = gl8.integrate(lo, hi, &mut f);
        total.add(v16);
        err += (v16 - v8).abs();
        if v16.abs() <= rel_tol * total.total().abs() {
            small_count += 1;
            if small_count >= 2 {
                break;
            }
        } else {
            small_count = 0;
        }
        lo = hi;
    }
    (total.total(), err)
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns the
/// highest even-column extrapolation.  Used to accelerate the alternating
/// half-period sums of oscillatory integrals.
pub fn wynn_epsilon(partial_sums: &[f64]) -> f64 {
    let n = partial_sums.len();
    assert!(n >= 1);
    if n == 1 {
        return partial_sums[0];
    }
    let mut prev: Vec<f64> = vec![0.0; n + 1]; // epsilon_{-1} column
    let mut curr: Vec<f64> = partial_sums.to_vec();
    let mut best = *partial_sums.last().unwrap();
    for _col in 1..n {
        let mut next = Vec::with_capacity(curr.len() - 1);
        for i in 0..curr.len() - 1 {
            let denom = curr[i + 1] - curr[i];
            if denom == 0.0 {
                next.push(curr[i + 1]);
            } else {
                next.push(prev[i + 1] + 1.0 / denom);
            }
        }
        prev = curr;
        curr = next;
        if _col % 2 == 0 {
            if let Some(&v) = curr.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

/// Neumaier-compensated summation with fixed, caller-defined order.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn rule16() -> GaussLegendre {
    GaussLegendre::new(16)
}

fn rule8() -> GaussLegendre {
    GaussLegendre::new(8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        // n-point GL integrates degree 2n-1 exactly.
        let gl = GaussLegendre::new(5);
        let val = gl.integrate(-1.0, 1.0, |x| x.powi(8));
        assert!((val - 2.0 / 9.0).abs() < 1e-14);
        let val = gl.integrate(0.0, 2.0, |x| 7.0 * x.powi(9) - x.powi(3) + 1.0);
        let exact = 7.0 * 2.0_f64.powi(10) / 10.0 - 2.0_f64.powi(4) / 4.0 + 2.0;
        assert!((val - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn exp_weighted_rule_matches_gamma_integrals() {
        // Exact for exp(-rate v)·poly: ∫_0^∞ v^2 e^{-2v} dv = 2/8.
        let rule = ExpWeightedRule::new(40, 2.0);
        let val = rule.integrate(|v| v * v * (-2.0 * v).exp());
        assert!((val - 0.25).abs() < 1e-14, "val = {val}");
        // Rate mismatch: e^{-3v} = e^{-2v}·e^{-v} with analytic remainder.
        let val = rule.integrate(|v| (-3.0 * v).exp());
        assert!((val - 1.0 / 3.0).abs() < 1e-12, "val = {val}");
        // A slowly varying modulation on top of the weight.
        let val = rule.integrate(|v| (-2.0 * v).exp() / (1.0 + v));
        let exact = 0.3613286168882226; // e^2 E_1(2), frozen
        assert!((val - exact).abs() < 1e-7, "val = {val}");
    }

    #[test]
    fn exp_weighted_rule_high_order_is_stable() {
        // Large node counts push Laguerre roots to ~4n; the scaled recurrence
        // must survive and stay accurate.
        let rule = ExpWeightedRule::new(150, 1.0);
        assert!(rule.nodes.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(rule.weights.iter().all(|w| w.is_finite() && *w > 0.0));
        let val = rule.integrate(|v| v.powi(7) * (-v).exp());
        assert!((val / 5040.0 - 1.0).abs() < 1e-12, "val = {val}");
    }

    #[test]
    fn graded_panels_handle_log_singularity() {
        // ∫_0^∞ e^{-v} ln v dv = -γ.
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let (val, err) = integrate_decay(|v| (-v).exp() * v.ln(), 1e-13);
        assert!((val + EULER_GAMMA).abs() < 1e-12, "val = {val}, err = {err}");
        // Plain exponential sanity.
        let (val, _) = integrate_decay(|v| (-2.0 * v).exp(), 1e-13);
        assert!((val - 0.5).abs() < 1e-13);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // Partial sums of Σ (-1)^{k+1}/k converge to ln 2 like 1/n; Wynn
        // reaches near machine precision from a handful of terms.
        let mut sums = Vec::new();
        let mut s = 0.0;
        for k in 1..=16 {
            s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            sums.push(s);
        }
        let accel = wynn_epsilon(&sums);
        assert!((accel - 2.0_f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn neumaier_sums_cancellating_sequences() {
        let mut sum = NeumaierSum::new();
        sum.add(1.0e16);
        sum.add(1.0);
        sum.add(-1.0e16);
        assert_eq!(sum.total(), 1.0);
    }
}
