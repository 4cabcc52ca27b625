//! Saddle-point machinery for the short-distance trace evaluation: the cyclic
//! coupling matrix of 2r reflections, its eigenvalues, and the closed form
//! for the product of nonzero Hessian eigenvalues.
//!
//! The Hessian of the round-trip exponent on the saddle-point manifold is
//! block-diagonal, with both blocks proportional to a 2r×2r symmetric cyclic
//! matrix whose off-diagonal entries alternate between -(1-μ) and -μ,
//! μ = R1/(R1+R2).  Each block has exactly one zero eigenvalue corresponding
//! to the flat direction along the manifold.

use crate::{Error, Result};

/// The 2r×2r cyclic coupling matrix.
#[derive(Clone, Debug)]
pub struct SaddleMatrix {
    pub r: usize,
    pub mu: f64,
    entries: Vec<f64>,
}

impl SaddleMatrix {
    pub fn dim(&self) -> usize {
        2 * self.r
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }
}

fn validate(r: usize, mu: f64) -> Result<()> {
    if r < 1 {
        return Err(Error::domain("round-trip order r must be >= 1"));
    }
    if !(0.0..=0.5).contains(&mu) {
        return Err(Error::domain(format!("mu must lie in [0, 1/2], got {mu}")));
    }
    Ok(())
}

/// Builds the coupling matrix: unit diagonal, cyclic off-diagonal bonds
/// alternating between -(1-μ) and -μ.  For r = 1 the two bonds join the same
/// pair of sites and add up to -1.
pub fn build_m_r(r: usize, mu: f64) -> Result<SaddleMatrix> {
    validate(r, mu)?;
    let n = 2 * r;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
    }
    // Bond between sites i and i+1 (cyclic): -(1-μ) for even i, -μ for odd i.
    for i in 0..n {
        let j = (i + 1) % n;
        let bond = if i % 2 == 0 { -(1.0 - mu) } else { -mu };
        entries[i * n + j] += bond;
        entries[j * n + i] += bond;
    }
    Ok(SaddleMatrix { r, mu, entries })
}

/// Closed-form eigenvalues λ±^(j) = 1 ± √(1 - 4μ(1-μ) sin²(πj/r)),
/// j = 0..r-1, returned sorted ascending.  λ-^(0) = 0 always.
pub fn eigenvalues(r: usize, mu: f64) -> Result<Vec<f64>> {
    validate(r, mu)?;
    let mut vals = Vec::with_capacity(2 * r);
    for j in 0..r {
        let s = (std::f64::consts::PI * j as f64 / r as f64).sin();
        let root = (1.0 - 4.0 * mu * (1.0 - mu) * s * s).max(0.0).sqrt();
        vals.push(1.0 - root);
        vals.push(1.0 + root);
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

/// The identity ∏_{j=1}^{r-1} sin(πj/r) = r/2^(r-1); evaluates both sides,
/// asserts their agreement, and returns the closed form.
pub fn sine_product(r: usize) -> f64 {
    assert!(r >= 1);
    let closed = r as f64 / 2f64.powi(r as i32 - 1);
    let mut direct = 1.0;
    for j in 1..r {
        direct *= (std::f64::consts::PI * j as f64 / r as f64).sin();
    }
    debug_assert!(
        (direct - closed).abs() <= 1e-13 * closed,
        "sine product identity violated at r = {r}: {direct} vs {closed}"
    );
    closed
}

/// Inverse square root of the product of nonzero eigenvalues of the scaled
/// Hessian (R1+R2)·H:
///
/// ```text
/// (∏_{λ≠0} λ)^(-1/2) = (R_eff/4r²)(k*/κ*)(4κ*²/(k*² R1 R2))^r .
/// ```
///
/// Requires k* > 0 (the azimuthal block degenerates on axis) and μ ∈ (0, 1/2]
/// (at μ = 0 half the spectrum collapses to zero and the product changes
/// meaning — that limit produces the plane's delta functions instead).
pub fn hessian_nonzero_product(
    r: usize,
    mu: f64,
    r1: f64,
    r2: f64,
    k_star: f64,
    kappa_star: f64,
) -> Result<f64> {
    validate(r, mu)?;
    if mu == 0.0 {
        return Err(Error::domain(
            "hessian_nonzero_product needs mu > 0; the mu = 0 spectrum collapses",
        ));
    }
    if !(k_star > 0.0) {
        return Err(Error::domain("k_star must be positive"));
    }
    if !(kappa_star >= k_star) {
        return Err(Error::domain("kappa_star must be >= k_star"));
    }
    if !(r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite()) {
        return Err(Error::domain("radii must be positive and finite"));
    }
    let r_eff = r1 * r2 / (r1 + r2);
    let rf = r as f64;
    Ok(r_eff / (4.0 * rf * rf) * (k_star / kappa_star)
        * (4.0 * kappa_star * kappa_star / (k_star * k_star * r1 * r2)).powi(r as i32))
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
///
/// This is the in-repo brute-force oracle used to validate the closed-form
/// spectra; matrices here are at most 16×16.
pub fn symmetric_eigenvalues_jacobi(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let frobenius2: f64 = a.iter().map(|v| v * v).sum();
    for sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off <= 1e-30 * frobenius2 {
            break;
        }
        debug_assert!(sweep < 99, "Jacobi sweep limit reached (off = {off})");
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}
