//! Sign/log-magnitude arithmetic for quantities spanning huge exponent ranges.
//!
//! Mie amplitudes grow like exp(2x sin(Θ/2)) with size parameters x that reach
//! 10³–10⁴ here, far beyond f64 range.  [`LogScaled`] represents a real number
//! as `sign · exp(log_magnitude)` and supports exact-ish multiplication and
//! log-sum-exp addition.  [`ScaledAccumulator`] sums long series of such terms
//! relative to a running reference exponent with Neumaier compensation.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A real number stored as `sign * exp(log_magnitude)`.
///
/// `sign` is -1, 0 or +1; `log_magnitude` is the natural log of the absolute
/// value and is `-inf` exactly when `sign == 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScaled {
    pub sign: i8,
    pub log_magnitude: f64,
}

impl LogScaled {
    pub const ZERO: LogScaled = LogScaled {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };

    pub const ONE: LogScaled = LogScaled {
        sign: 1,
        log_magnitude: 0.0,
    };

    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        if sign == 0 {
            Self::ZERO
        } else {
            Self {
                sign,
                log_magnitude,
            }
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: if v > 0.0 { 1 } else { -1 },
                log_magnitude: v.abs().ln(),
            }
        }
    }

    /// Converts back to f64; overflows to ±inf and underflows to 0.
    pub fn value(&self) -> f64 {
        self.sign as f64 * self.log_magnitude.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn abs(&self) -> Self {
        Self::new(self.sign.abs(), self.log_magnitude)
    }

    /// Multiplies by a plain f64.
    pub fn scale(&self, factor: f64) -> Self {
        *self * Self::from_value(factor)
    }

    /// Integer power; `powi(0)` is one.
    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        Self::new(sign, self.log_magnitude * n as f64)
    }

    /// Ratio `self / other` as plain f64 (debug-panics on other == 0).
    pub fn ratio(&self, other: &Self) -> f64 {
        debug_assert!(!other.is_zero(), "ratio against zero");
        if self.is_zero() {
            return 0.0;
        }
        (self.sign * other.sign) as f64 * (self.log_magnitude - other.log_magnitude).exp()
    }

    /// Relative difference |self/other - 1| evaluated without overflow.
    pub fn relative_to(&self, other: &Self) -> f64 {
        (self.ratio(other) - 1.0).abs()
    }
}

impl Mul for LogScaled {
    type Output = LogScaled;
    fn mul(self, rhs: LogScaled) -> LogScaled {
        if self.sign == 0 || rhs.sign == 0 {
            return LogScaled::ZERO;
        }
        LogScaled::new(self.sign * rhs.sign, self.log_magnitude + rhs.log_magnitude)
    }
}

impl Div for LogScaled {
    type Output = LogScaled;
    fn div(self, rhs: LogScaled) -> LogScaled {
        debug_assert!(rhs.sign != 0, "division by log-scaled zero");
        if self.sign == 0 {
            return LogScaled::ZERO;
        }
        LogScaled::new(self.sign * rhs.sign, self.log_magnitude - rhs.log_magnitude)
    }
}

impl Neg for LogScaled {
    type Output = LogScaled;
    fn neg(self) -> LogScaled {
        LogScaled::new(-self.sign, self.log_magnitude)
    }
}

impl Add for LogScaled {
    type Output = LogScaled;
    fn add(self, rhs: LogScaled) -> LogScaled {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        // Work relative to the larger magnitude so the exp never overflows.
        let (big, small) = if self.log_magnitude >= rhs.log_magnitude {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = small.log_magnitude - big.log_magnitude; // <= 0
        if big.sign == small.sign {
            LogScaled::new(big.sign, big.log_magnitude + d.exp().ln_1p())
        } else {
            let m = 1.0 - d.exp();
            if m <= 0.0 {
                // Exact cancellation (d == 0 with opposite signs).
                LogScaled::ZERO
            } else {
                LogScaled::new(big.sign, big.log_magnitude + m.ln())
            }
        }
    }
}

impl Sub for LogScaled {
    type Output = LogScaled;
    fn sub(self, rhs: LogScaled) -> LogScaled {
        self + (-rhs)
    }
}

/// Accumulates a series of [`LogScaled`] terms as `mantissa · exp(reference)`.
///
/// The mantissa is an ordinary compensated f64 sum, rescaled whenever an
/// incoming term's exponent exceeds the reference.  Addition order is the
/// caller's iteration order, so reductions stay deterministic.
#[derive(Clone, Debug)]
pub struct ScaledAccumulator {
    mantissa: f64,
    compensation: f64,
    reference: f64,
}

impl Default for ScaledAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl ScaledAccumulator {
    pub fn new() -> Self {
        Self {
            mantissa: 0.0,
            compensation: 0.0,
            reference: f64::NEG_INFINITY,
        }
    }

    pub fn add(&mut self, term: LogScaled) {
        if term.sign == 0 {
            return;
        }
        if self.reference == f64::NEG_INFINITY {
            self.reference = term.log_magnitude;
        } else if term.log_magnitude > self.reference + 1.0 {
            // Rescale the running sum to the new, larger exponent.
            let shift = (self.reference - term.log_magnitude).exp();
            self.mantissa *= shift;
            self.compensation *= shift;
            self.reference = term.log_magnitude;
        }
        let t = term.sign as f64 * (term.log_magnitude - self.reference).exp();
        // Neumaier compensation.
        let s = self.mantissa + t;
        if self.mantissa.abs() >= t.abs() {
            self.compensation += (self.mantissa - s) + t;
        } else {
            self.compensation += (t - s) + self.mantissa;
        }
        self.mantissa = s;
    }

    pub fn total(&self) -> LogScaled {
        let m = self.mantissa + self.compensation;
        if m == 0.0 || self.reference == f64::NEG_INFINITY {
            return LogScaled::ZERO;
        }
        LogScaled::new(if m > 0.0 { 1 } else { -1 }, self.reference + m.abs().ln())
    }
}
