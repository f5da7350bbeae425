//! Closed-form bounds for `|Σ_{M<n≤M+N} e_q(a n^k)|`, their validity
//! ranges, and the integer parameters of the induction step.
//!
//! Subpolynomial factors (`q^{o(1)}`, `N^{o(1)}`) and implicit constants are
//! taken to be 1, and logarithms are natural. The values are therefore
//! shapes to compare against measured sums, not certified inequalities.
//!
//! Real exponents are evaluated in double-double precision and rounded once.
//! Where a comparison or value can be decided in integers (perfect powers,
//! floors of `q^{1/m}` expressions, validity thresholds with rational
//! exponents) it is, so crossovers never flip on rounding.

pub mod xprec;

use std::fmt;

use num_bigint::BigUint;
use num_integer::{Integer, Roots};
use serde::Serialize;
use thiserror::Error;

use crate::modarith::{ModArithError, PrimeModulus};
use xprec::DD;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Modulus(#[from] ModArithError),
    #[error("k must be at least {min} (got {k})")]
    DegreeTooSmall { k: u32, min: u32 },
    #[error("epsilon must be positive (got {0})")]
    NonPositiveEpsilon(f64),
    #[error("N must be at least 1")]
    ZeroLength,
}

fn require_degree(k: u32, min: u32) -> Result<(), BoundsError> {
    if k < min {
        Err(BoundsError::DegreeTooSmall { k, min })
    } else {
        Ok(())
    }
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

/// `√(k-2)` when `k - 2` is a perfect square.
fn exact_sqrt(x: u64) -> Option<u64> {
    let s = x.sqrt();
    (s * s == x).then_some(s)
}

/// Integers driving the induction on `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InductionParameters {
    pub k: u32,
    /// `⌊k/2⌋`
    pub ell: u32,
    /// `⌈√(2ℓ)⌉`
    pub m: u32,
    /// `k(k+1)/2`
    pub r: u64,
    /// `⌊rN / (2 q^{1/m})⌋`
    pub u: u64,
    /// `⌊q^{1/m} / (2r)⌋`
    pub v: u64,
    /// `U = 0` or `V = 0`: the averaging step has nothing to average over.
    pub degenerate: bool,
    /// Window hypotheses (`U ≤ N`, `NU ≤ q`) that fail for this instance.
    pub unmet_hypotheses: Vec<String>,
}

impl InductionParameters {
    /// Re-checks every structural invariant from scratch against `(q, N)`;
    /// returns the violated ones.
    pub fn invariant_violations(&self, q: u64, n: u64) -> Vec<String> {
        let mut out = Vec::new();
        let k = self.k as u64;
        if self.ell as u64 != k / 2 {
            out.push(format!("ℓ = {} but ⌊k/2⌋ = {}", self.ell, k / 2));
        }
        let two_ell = 2 * self.ell as u64;
        let m = self.m as u64;
        let m_ok = m * m >= two_ell && (m == 0 || (m - 1) * (m - 1) < two_ell);
        if !m_ok {
            out.push(format!("m = {} is not ⌈√(2ℓ)⌉ for ℓ = {}", self.m, self.ell));
        }
        if self.r != k * (k + 1) / 2 {
            out.push(format!("r = {} but k(k+1)/2 = {}", self.r, k * (k + 1) / 2));
        }
        if 4 * self.u as u128 * self.v as u128 > n as u128 {
            out.push(format!("UV ≤ N/4 fails: U = {}, V = {}, N = {n}", self.u, self.v));
        }
        if two_ell > k {
            out.push(format!("2ℓ ≤ k fails: ℓ = {}", self.ell));
        }
        // V < q^{1/m}/r  ⇔  (rV)^m < q
        if (big(self.r) * big(self.v)).pow(self.m) >= big(q) {
            out.push(format!("V < q^(1/m)/r fails: V = {}, r = {}, m = {}", self.v, self.r, self.m));
        }
        out
    }
}

/// Largest `x ≥ 0` with `pred(x)`, given a monotone predicate and a float guess.
fn largest_satisfying(guess: f64, pred: impl Fn(u64) -> bool) -> u64 {
    let mut x = if guess.is_finite() && guess > 0.0 {
        guess.min(u64::MAX as f64 / 2.0) as u64
    } else {
        0
    };
    while x > 0 && !pred(x) {
        x -= 1;
    }
    while pred(x + 1) {
        x += 1;
    }
    x
}

pub fn derive_parameters(k: u32, q: u64, n: u64) -> Result<InductionParameters, BoundsError> {
    require_degree(k, 3)?;
    PrimeModulus::new(q)?;
    if n == 0 {
        return Err(BoundsError::ZeroLength);
    }
    let ell = k / 2;
    let two_ell = 2 * ell as u64;
    let mut m = two_ell.sqrt() as u32;
    if (m as u64) * (m as u64) < two_ell {
        m += 1;
    }
    let r = k as u64 * (k as u64 + 1) / 2;

    let qm = (q as f64).powf(1.0 / m as f64);
    let rn_m = (big(r) * big(n)).pow(m);
    // 2u q^{1/m} ≤ rN  ⇔  (2u)^m q ≤ (rN)^m
    let u = largest_satisfying(r as f64 * n as f64 / (2.0 * qm), |u| {
        (big(2) * big(u)).pow(m) * big(q) <= rn_m
    });
    // 2rv ≤ q^{1/m}  ⇔  (2rv)^m ≤ q
    let v = largest_satisfying(qm / (2.0 * r as f64), |v| {
        (big(2) * big(r) * big(v)).pow(m) <= big(q)
    });

    let mut unmet = Vec::new();
    if u > n {
        unmet.push(format!("U ≤ N fails: U = {u}, N = {n}"));
    }
    if n as u128 * u as u128 > q as u128 {
        unmet.push(format!("NU ≤ q fails: N = {n}, U = {u}, q = {q}"));
    }
    Ok(InductionParameters {
        k,
        ell,
        m,
        r,
        u,
        v,
        degenerate: u == 0 || v == 0,
        unmet_hypotheses: unmet,
    })
}

/// A bound value with its validity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub valid: bool,
}

/// `N (q^{1/√(k-2)} / N)^{2/(k(k+1))}`, valid for `N ≤ q^{1/2 + 1/(√k + 1)}`.
pub fn theorem1_bound(q: u64, k: u32, n: u64) -> Result<Bound, BoundsError> {
    require_degree(k, 3)?;
    PrimeModulus::new(q)?;
    let k64 = k as u64;

    let value = match exact_sqrt(k64 - 2) {
        Some(s) if n > 0 && big(n).pow(s as u32) == big(q) => n as f64,
        _ if n == 0 => 0.0,
        _ => {
            let ln_n = DD::from_u64(n).ln();
            let ln_q = DD::from_u64(q).ln();
            let root = DD::from_u64(k64 - 2).sqrt();
            let e = DD::from_f64(2.0) / DD::from_u64(k64 * (k64 + 1));
            (ln_n + e * (ln_q / root - ln_n)).exp().to_f64()
        }
    };

    let valid = match exact_sqrt(k64) {
        // exponent (s+3) / (2(s+1)):  N^{2(s+1)} ≤ q^{s+3}
        Some(s) => big(n).pow(2 * (s as u32 + 1)) <= big(q).pow(s as u32 + 3),
        None => {
            let e = DD::from_f64(0.5) + (DD::from_u64(k64).sqrt() + DD::ONE).recip();
            n == 0 || DD::from_u64(n).ln() <= e * DD::from_u64(q).ln()
        }
    };
    Ok(Bound { value, valid })
}

/// `N^{1 - 1/(k(k-1))}`, valid for `N ≤ q ≤ N^{k-1}`.
pub fn weyl_bdg_bound(q: u64, k: u32, n: u64) -> Result<Bound, BoundsError> {
    require_degree(k, 3)?;
    let d = k as u64 * (k as u64 - 1);
    let root = if d <= u32::MAX as u64 { Some(n.nth_root(d as u32)) } else { None };
    let value = match root {
        Some(b) if n > 0 && big(b).pow(d as u32) == big(n) && (b as f64).powi(d as i32 - 1) < 9.007e15 => {
            (b as f64).powi(d as i32 - 1)
        }
        _ if n == 0 => 0.0,
        _ => {
            let e = DD::ONE - DD::from_u64(d).recip();
            DD::from_u64(n).powf(e).to_f64()
        }
    };
    let valid = n <= q && big(q) <= big(n).pow(k - 1);
    Ok(Bound { value, valid })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeilBounds {
    /// `√q · ln q`, constant 1.
    pub incomplete: f64,
    /// `(gcd(k, q-1) - 1) √q`, exact for complete sums.
    pub complete: f64,
}

pub fn weil_completion_bound(q: u64, k: u32) -> Result<WeilBounds, BoundsError> {
    PrimeModulus::new(q)?;
    let root = DD::from_u64(q).sqrt();
    let g = (k as u64).gcd(&(q - 1));
    Ok(WeilBounds {
        incomplete: (root * DD::from_u64(q).ln()).to_f64(),
        complete: (DD::from_u64(g - 1) * root).to_f64(),
    })
}

/// Range exponent and saving: for `N ≥ q^{(1+ε)/√(k-2)}` the first bound
/// is at most `N^{1-ρ}` with `ρ = 2ε / ((1+ε) k (k+1))`.
pub fn nontrivial_range(k: u32, epsilon: f64) -> Result<(f64, f64), BoundsError> {
    require_degree(k, 3)?;
    if !(epsilon > 0.0) {
        return Err(BoundsError::NonPositiveEpsilon(epsilon));
    }
    let k64 = k as u64;
    let onep = DD::ONE + DD::from_f64(epsilon);
    let exponent = onep / DD::from_u64(k64 - 2).sqrt();
    let rho = DD::from_f64(2.0 * epsilon) / (onep * DD::from_u64(k64 * (k64 + 1)));
    Ok((exponent.to_f64(), rho.to_f64()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover {
    /// `N ≥ q^exponent` is where the first bound beats the Weyl-type one.
    pub exponent: f64,
    /// The exponent is at least 1, so no `N ≤ q` qualifies.
    pub empty: bool,
}

pub fn improvement_crossover(k: u32) -> Result<Crossover, BoundsError> {
    require_degree(k, 4)?;
    let k64 = k as u64;
    let e = DD::from_u64(2 * (k64 - 1)) / (DD::from_u64(k64 - 3) * DD::from_u64(k64 - 2).sqrt());
    let exponent = e.to_f64();
    Ok(Crossover {
        exponent,
        empty: exponent >= 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Trivial,
    Thm1,
    Weyl,
    Weil,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Trivial => "trivial",
            BoundKind::Thm1 => "thm1",
            BoundKind::Weyl => "weyl",
            BoundKind::Weil => "weil",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub q: u64,
    pub k: u32,
    pub n: u64,
    pub thm1: Bound,
    pub weyl: Bound,
    pub weil: f64,
    pub weil_complete: f64,
    pub trivial: f64,
    pub best: BoundKind,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
}

impl BoundReport {
    pub fn value_of(&self, kind: BoundKind) -> f64 {
        match kind {
            BoundKind::Trivial => self.trivial,
            BoundKind::Thm1 => self.thm1.value,
            BoundKind::Weyl => self.weyl.value,
            BoundKind::Weil => self.weil,
        }
    }
}

/// Evaluates every bound at `(q, k, N)`. `best` is the smallest valid one;
/// an entry must be strictly below the trivial bound `N` (and any earlier
/// entry) to win.
pub fn compare_bounds(q: u64, k: u32, n: u64, epsilon: Option<f64>) -> Result<BoundReport, BoundsError> {
    let thm1 = theorem1_bound(q, k, n)?;
    let weyl = weyl_bdg_bound(q, k, n)?;
    let weil = weil_completion_bound(q, k)?;
    let rho = epsilon.map(|e| nontrivial_range(k, e).map(|r| r.1)).transpose()?;
    let trivial = n as f64;
    let mut best = (BoundKind::Trivial, trivial);
    for (kind, value, valid) in [
        (BoundKind::Thm1, thm1.value, thm1.valid),
        (BoundKind::Weyl, weyl.value, weyl.valid),
        (BoundKind::Weil, weil.incomplete, true),
    ] {
        if valid && value < best.1 {
            best = (kind, value);
        }
    }
    Ok(BoundReport {
        q,
        k,
        n,
        thm1,
        weyl,
        weil: weil.incomplete,
        weil_complete: weil.complete,
        trivial,
        best: best.0,
        epsilon,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_formulas() {
        let p = derive_parameters(3, 101, 50).unwrap();
        assert_eq!((p.ell, p.m, p.r), (1, 2, 6));
        let p = derive_parameters(10, 1_000_003, 5000).unwrap();
        assert_eq!((p.ell, p.m, p.r), (5, 4, 55));
        assert!(matches!(derive_parameters(2, 101, 5), Err(BoundsError::DegreeTooSmall { .. })));
        assert!(derive_parameters(3, 100, 5).is_err());
        assert!(derive_parameters(3, 101, 0).is_err());
    }

    #[test]
    fn parameter_floors_are_exact() {
        // q = 10007, k = 3: m = 2, r = 6, q^{1/2} ≈ 100.035
        let p = derive_parameters(3, 10_007, 1000).unwrap();
        assert_eq!(p.v, 8); // ⌊100.035 / 12⌋
        assert_eq!(p.u, 29); // ⌊6000 / 200.07⌋
        assert!(p.invariant_violations(10_007, 1000).is_empty());
        // perfect square q^{1/m} boundary: q = 10009 is prime, √ ≈ 100.045
        let p = derive_parameters(4, 10_009, 200).unwrap();
        assert!(p.invariant_violations(10_009, 200).is_empty());
    }

    #[test]
    fn small_q_is_degenerate() {
        let p = derive_parameters(5, 101, 10).unwrap();
        assert_eq!(p.v, 0);
        assert!(p.degenerate);
    }

    #[test]
    fn power_bound_examples() {
        // k = 3: q^{1/1}/N
        let b = theorem1_bound(101, 3, 50).unwrap();
        let expect = 50.0 * (101.0f64 / 50.0).powf(1.0 / 6.0);
        assert!((b.value - expect).abs() < 1e-12);
        assert!((b.value - 56.22).abs() < 0.01);
        assert!(b.valid);
        assert!(!theorem1_bound(101, 3, 90).unwrap().valid);
        // k = 6: √4 = 2, N = √q when q = N^2 is impossible for prime q, so use k = 3, N = q
        let b = theorem1_bound(101, 3, 101).unwrap();
        assert_eq!(b.value, 101.0);
        assert!(matches!(theorem1_bound(101, 2, 5), Err(BoundsError::DegreeTooSmall { .. })));
    }

    #[test]
    fn power_bound_validity_threshold_k3() {
        // 101^{1/2 + 1/(√3+1)} ≈ 54.5
        assert!(theorem1_bound(101, 3, 54).unwrap().valid);
        assert!(!theorem1_bound(101, 3, 55).unwrap().valid);
    }

    #[test]
    fn power_bound_validity_exact_for_square_k() {
        // k = 4, s = 2: N^6 ≤ q^5
        let q = 101u64;
        let limit = (1..q).filter(|&n| (n as u128).pow(6) <= (q as u128).pow(5)).max().unwrap();
        assert!(theorem1_bound(q, 4, limit).unwrap().valid);
        assert!(!theorem1_bound(q, 4, limit + 1).unwrap().valid);
    }

    #[test]
    fn weyl_examples() {
        assert_eq!(weyl_bdg_bound(101, 3, 64).unwrap().value, 32.0);
        assert_eq!(weyl_bdg_bound(101, 3, 1).unwrap().value, 1.0);
        let b = weyl_bdg_bound(10_007, 4, 1000).unwrap();
        assert!((b.value - 562.341_325_190_349).abs() < 1e-9);
        assert!(b.valid);
        assert!(!weyl_bdg_bound(10_007, 3, 50).unwrap().valid);
        assert!(!weyl_bdg_bound(101, 3, 200).unwrap().valid);
    }

    #[test]
    fn weil_examples() {
        let w = weil_completion_bound(5, 2).unwrap();
        assert!((w.complete - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(weil_completion_bound(7, 3).unwrap().complete, 2.0 * 7f64.sqrt());
        assert_eq!(weil_completion_bound(7, 7).unwrap().complete, 0.0);
        assert_eq!(weil_completion_bound(7, 1).unwrap().complete, 0.0);
        let w = weil_completion_bound(101, 3).unwrap();
        assert!((w.incomplete - 101f64.sqrt() * 101f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn nontrivial_range_examples() {
        let (e, rho) = nontrivial_range(3, 1.0).unwrap();
        assert_eq!(e, 2.0);
        assert_eq!(rho, 1.0 / 12.0);
        let (_, rho) = nontrivial_range(6, 0.5).unwrap();
        assert!((rho - 1.0 / 63.0).abs() < 1e-17);
        let (_, tiny) = nontrivial_range(5, 1e-12).unwrap();
        assert!(tiny < 1e-12);
        assert!(nontrivial_range(5, 0.0).is_err());
        assert!(nontrivial_range(5, f64::NAN).is_err());
    }

    #[test]
    fn crossover_examples() {
        let c = improvement_crossover(5).unwrap();
        assert!((c.exponent - 8.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!(c.empty);
        let c = improvement_crossover(100).unwrap();
        assert!((c.exponent - 0.206_196).abs() < 1e-5);
        assert!(!c.empty);
        let c = improvement_crossover(10_000).unwrap();
        let shape = 2.0 / 100.0;
        assert!(c.exponent > shape && c.exponent < 1.05 * shape);
        assert!(improvement_crossover(3).is_err());
    }

    #[test]
    fn compare_small_window() {
        let r = compare_bounds(10_007, 5, 10, None).unwrap();
        assert!(!r.weyl.valid);
        assert_eq!(r.best, BoundKind::Trivial);
        let r = compare_bounds(101, 3, 101, Some(0.5)).unwrap();
        assert!(!r.thm1.valid);
        assert!((r.weil - 101f64.sqrt() * 101f64.ln()).abs() < 1e-12);
        assert!(r.rho.is_some());
    }

    #[test]
    fn best_is_the_least_valid_entry() {
        for n in [1u64, 5, 11, 50, 300, 1000, 5000, 10_007] {
            let r = compare_bounds(10_007, 5, n, None).unwrap();
            let best = r.value_of(r.best);
            for (v, ok) in [(r.thm1.value, r.thm1.valid), (r.weyl.value, r.weyl.valid), (r.weil, true), (r.trivial, true)] {
                assert!(!ok || best <= v);
            }
        }
    }
}
