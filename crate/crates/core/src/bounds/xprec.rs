//! Double-double arithmetic (~106-bit significand) for the bound formulas.
//!
//! Only what the formulas need: the four operations, `sqrt`, `exp` and
//! `ln`. Results are rounded back to `f64` through [`DD::to_f64`], which is
//! within one ulp of the exact value for the magnitudes used here.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DD {
    hi: f64,
    lo: f64,
}

const LN2: DD = DD {
    hi: 6.931_471_805_599_453e-1,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    /// Exact for every `u64`.
    pub fn from_u64(x: u64) -> Self {
        let hi = x as f64;
        // |x - hi| < 2^11, so the difference is exact in both i128 and f64
        let lo = (x as i128 - hi as i128) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        DD { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn recip(self) -> Self {
        DD::ONE / self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p, e) = two_prod(ax, ax);
        let diff = self - DD { hi: p, lo: e };
        DD::from_f64(ax) + DD::from_f64(diff.hi * x * 0.5)
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DD::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DD::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * DD::from_f64(k);
        // scale by 2^-10 exactly, sum the Taylor series, square back up
        const SQUARINGS: i32 = 10;
        let scale = (-SQUARINGS as f64).exp2();
        let r = DD {
            hi: r.hi * scale,
            lo: r.lo * scale,
        };
        // expm1 form keeps the small part accurate through the squarings
        let mut term = r;
        let mut sum = r;
        for i in 2..40 {
            term = term * r / DD::from_f64(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..SQUARINGS {
            // (1+s)^2 - 1 = 2s + s^2
            sum = sum * DD::from_f64(2.0) + sum * sum;
        }
        let e = sum + DD::ONE;
        let p = k.exp2();
        DD {
            hi: e.hi * p,
            lo: e.lo * p,
        }
    }

    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "ln of a nonpositive value");
        let mut x = DD::from_f64(self.hi.ln());
        for _ in 0..2 {
            x = x + self * (-x).exp() - DD::ONE;
        }
        x
    }

    /// `self^e` for positive `self`.
    pub fn powf(self, e: DD) -> Self {
        (e * self.ln()).exp()
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b * DD::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * DD::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: DD, b: f64, rel: f64) -> bool {
        ((a.to_f64() - b) / b).abs() <= rel
    }

    #[test]
    fn from_u64_is_exact() {
        for x in [0u64, 1, (1 << 53) + 1, u64::MAX, 12_345_678_901_234_567_891] {
            let d = DD::from_u64(x);
            assert_eq!(d.hi as i128 + d.lo as i128, x as i128);
        }
    }

    #[test]
    fn arithmetic_identities() {
        let third = DD::ONE / DD::from_f64(3.0);
        let back = third * DD::from_f64(3.0) - DD::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let two = DD::from_f64(2.0).sqrt();
        assert!((two * two - DD::from_f64(2.0)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_and_ln_are_inverse() {
        for x in [1e-10, 0.5, 1.0, 2.0, 10.0, 101.0, 1e6, 1.8e19] {
            let d = DD::from_f64(x);
            let back = d.ln().exp();
            assert!(((back - d) / d).to_f64().abs() < 1e-29, "x = {x}");
        }
        assert!(close(DD::ONE.exp(), std::f64::consts::E, 1e-16));
        assert!(close(DD::from_f64(2.0).ln(), std::f64::consts::LN_2, 1e-16));
        assert_eq!(DD::ONE.ln().to_f64(), 0.0);
    }

    #[test]
    fn exact_powers_round_exactly() {
        let v = DD::from_f64(64.0).powf(DD::from_f64(5.0) / DD::from_f64(6.0));
        assert_eq!(v.to_f64(), 32.0);
        let v = DD::from_f64(1000.0).powf(DD::ONE / DD::from_f64(3.0));
        assert_eq!(v.to_f64(), 10.0);
    }
}
