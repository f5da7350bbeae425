//! Independent 256-bit oracles for the floating-point outputs.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

pub const P: usize = 256;
pub const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    cc: Consts,
}

pub fn big(x: u64) -> BigFloat {
    BigFloat::from_u64(x, P)
}

impl Oracle {
    pub fn new() -> Self {
        Oracle {
            cc: Consts::new().expect("constant cache"),
        }
    }

    pub fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(P, RM, &mut self.cc)
    }

    pub fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(P, RM, &mut self.cc)
    }

    /// `N (q^{1/√(k-2)} / N)^{2/(k(k+1))}`
    pub fn thm1(&mut self, q: u64, k: u32, n: u64) -> BigFloat {
        let k = k as u64;
        let ln_n = self.ln(&big(n));
        let ln_q = self.ln(&big(q));
        let root = big(k - 2).sqrt(P, RM);
        let e = big(2).div(&big(k * (k + 1)), P, RM);
        let inner = ln_q.div(&root, P, RM).sub(&ln_n, P, RM);
        let x = ln_n.add(&e.mul(&inner, P, RM), P, RM);
        self.exp(&x)
    }

    /// `N^{1 - 1/(k(k-1))}`
    pub fn weyl(&mut self, k: u32, n: u64) -> BigFloat {
        let k = k as u64;
        let e = big(1).sub(&big(1).div(&big(k * (k - 1)), P, RM), P, RM);
        let x = e.mul(&self.ln(&big(n)), P, RM);
        self.exp(&x)
    }

    /// `√q ln q`
    pub fn weil(&mut self, q: u64) -> BigFloat {
        big(q).sqrt(P, RM).mul(&self.ln(&big(q)), P, RM)
    }

    /// `(g - 1) √q`
    pub fn weil_complete(&mut self, q: u64, g: u64) -> BigFloat {
        big(g - 1).mul(&big(q).sqrt(P, RM), P, RM)
    }

    /// `(1+ε)/√(k-2)` and `2ε / ((1+ε) k (k+1))`
    pub fn range(&mut self, k: u32, eps: f64) -> (BigFloat, BigFloat) {
        let k = k as u64;
        let e = BigFloat::from_f64(eps, P);
        let onep = big(1).add(&e, P, RM);
        let x = onep.div(&big(k - 2).sqrt(P, RM), P, RM);
        let rho = big(2)
            .mul(&e, P, RM)
            .div(&onep.mul(&big(k * (k + 1)), P, RM), P, RM);
        (x, rho)
    }

    /// `2(k-1) / ((k-3) √(k-2))`
    pub fn crossover(&mut self, k: u32) -> BigFloat {
        let k = k as u64;
        big(2 * (k - 1)).div(&big(k - 3).mul(&big(k - 2).sqrt(P, RM), P, RM), P, RM)
    }

    /// `(cos, sin)` of `2π r / q`.
    pub fn phase(&mut self, r: u64, q: u64) -> (BigFloat, BigFloat) {
        let pi = self.cc.pi(P, RM);
        let theta = big(2).mul(&pi, P, RM).mul(&big(r), P, RM).div(&big(q), P, RM);
        (theta.cos(P, RM, &mut self.cc), theta.sin(P, RM, &mut self.cc))
    }
}

/// Nearest `f64` through a decimal rendering.
pub fn to_f64(x: &BigFloat) -> f64 {
    x.to_string().parse().expect("decimal rendering parses")
}

/// `|got - want| ≤ ulps · ulp(want)`, with the difference taken exactly.
pub fn within_ulps(got: f64, want: &BigFloat, ulps: f64) -> bool {
    let w = to_f64(want);
    let ulp = if w == 0.0 { f64::MIN_POSITIVE } else { f64::from_bits(w.abs().to_bits() + 1) - w.abs() };
    let diff = BigFloat::from_f64(got, P).sub(want, P, RM).abs();
    let tol = BigFloat::from_f64(ulps * ulp, P);
    diff.cmp(&tol).is_some_and(|c| c <= 0)
}
