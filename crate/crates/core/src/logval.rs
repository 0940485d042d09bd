//! Signed log-magnitude scalars.
//!
//! The integrands in this crate span dynamic ranges like `exp(±4g/3)` and
//! `exp(-2g*s0(x))` with `2g*s0` up to ~700 at the domain cutoff, so sums and
//! products of sampled values cannot generally be formed in plain `f64`.
//! A [`LogVal`] stores `sign * exp(ln)` and supports exact-range addition and
//! multiplication; conversion back to `f64` is only done where the result is
//! known to be of moderate size.

/// A real number represented as `sign * exp(ln)`.
///
/// `sign == 0` encodes exact zero (with `ln == -inf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVal {
    ln: f64,
    sign: i8,
}

impl LogVal {
    pub const ZERO: LogVal = LogVal {
        ln: f64::NEG_INFINITY,
        sign: 0,
    };

    /// Build from an ordinary float. `v` must be finite.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "LogVal::from_f64 requires finite input");
        if v == 0.0 {
            Self::ZERO
        } else {
            LogVal {
                ln: v.abs().ln(),
                sign: if v > 0.0 { 1 } else { -1 },
            }
        }
    }

    /// Build from a log-magnitude and sign. `ln` may be any float including
    /// values far outside the `f64` exponent range.
    pub fn from_ln(ln: f64, sign: i8) -> Self {
        if sign == 0 || ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogVal { ln, sign }
        }
    }

    /// Positive value `exp(ln)`.
    pub fn from_ln_pos(ln: f64) -> Self {
        Self::from_ln(ln, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln_abs(&self) -> f64 {
        self.ln
    }

    /// Convert back to `f64`. Overflows to `±inf` and underflows to `±0`
    /// exactly as `exp` does; callers use this only for moderate results.
    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.ln.exp()
    }

    pub fn neg(&self) -> Self {
        LogVal {
            ln: self.ln,
            sign: -self.sign,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.sign == 0 || other.sign == 0 {
            return Self::ZERO;
        }
        LogVal {
            ln: self.ln + other.ln,
            sign: self.sign * other.sign,
        }
    }

    /// Multiply by a positive plain float (used for quadrature cell widths).
    pub fn scale_pos(&self, c: f64) -> Self {
        debug_assert!(c > 0.0);
        if self.sign == 0 {
            return Self::ZERO;
        }
        LogVal {
            ln: self.ln + c.ln(),
            sign: self.sign,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.sign == 0 {
            return *other;
        }
        if other.sign == 0 {
            return *self;
        }
        let (hi, lo) = if self.ln >= other.ln {
            (self, other)
        } else {
            (other, self)
        };
        let d = lo.ln - hi.ln; // <= 0
        if hi.sign == lo.sign {
            LogVal {
                ln: hi.ln + d.exp().ln_1p(),
                sign: hi.sign,
            }
        } else {
            // Magnitude difference; exact cancellation gives ZERO.
            let t = -d.exp();
            if t <= -1.0 {
                Self::ZERO
            } else {
                let ln = hi.ln + t.ln_1p();
                Self::from_ln(ln, hi.sign)
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

impl Default for LogVal {
    fn default() -> Self {
        Self::ZERO
    }
}

/// Running sum of `LogVal`s.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogSum(LogVal);

impl LogSum {
    pub fn new() -> Self {
        LogSum(LogVal::ZERO)
    }

    pub fn push(&mut self, v: &LogVal) {
        self.0 = self.0.add(v);
    }

    pub fn value(&self) -> LogVal {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_identities() {
        let z = LogVal::ZERO;
        let a = LogVal::from_f64(3.5);
        assert!(z.is_zero());
        assert_eq!(z.add(&a).to_f64(), 3.5);
        assert!(z.mul(&a).is_zero());
        assert_eq!(z.to_f64(), 0.0);
    }

    #[test]
    fn exact_cancellation() {
        let a = LogVal::from_f64(2.0);
        assert!(a.add(&a.neg()).is_zero());
    }

    #[test]
    fn huge_range_product() {
        // exp(900) * exp(-900) = 1, both factors unrepresentable in f64
        let a = LogVal::from_ln_pos(900.0);
        let b = LogVal::from_ln_pos(-900.0);
        assert_relative_eq!(a.mul(&b).to_f64(), 1.0, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn add_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let la = LogVal::from_f64(a);
            let lb = LogVal::from_f64(b);
            let sum = la.add(&lb).to_f64();
            // cancellation loses relative accuracy, so compare absolutely
            prop_assert!((sum - (a + b)).abs() <= 1e-9 * (a.abs() + b.abs()).max(1.0));
        }

        #[test]
        fn mul_matches_f64(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let la = LogVal::from_f64(a);
            let lb = LogVal::from_f64(b);
            let p = la.mul(&lb).to_f64();
            prop_assert!((p - a * b).abs() <= 1e-12 * (a * b).abs().max(1e-300));
        }

        #[test]
        fn sum_order_independent(xs in proptest::collection::vec(-1e3f64..1e3, 1..20)) {
            let mut s1 = LogSum::new();
            for &x in &xs {
                s1.push(&LogVal::from_f64(x));
            }
            let direct: f64 = xs.iter().sum();
            prop_assert!((s1.value().to_f64() - direct).abs() < 1e-9 * xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0));
        }
    }
}
