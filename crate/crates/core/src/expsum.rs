//! Incomplete and complete power sums `Σ_{M<n≤M+N} e_q(a·n^k)`.
//!
//! Summation runs in ascending `n` with Neumaier compensation on each
//! component, and every value carries a rigorous bound on its accumulated
//! rounding error. Coefficient and shift scans fan out over rayon but merge
//! with a smallest-witness argmax, so their output does not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::modarith::{phase_of_residue, ModArithError, PrimeModulus, PHASE_COMPONENT_ERR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpSumError {
    #[error(transparent)]
    Modulus(#[from] ModArithError),
    #[error("coefficient a = {a} is divisible by q = {q}")]
    ZeroCoefficient { a: i128, q: u64 },
    #[error("window length N must be nonnegative (got {0})")]
    NegativeLength(i128),
    #[error("degree k must be at least 1")]
    ZeroDegree,
}

/// A complex number together with a bound on `|Δre| + |Δim|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
    pub err: f64,
}

impl ComplexValue {
    pub const ZERO: ComplexValue = ComplexValue {
        re: 0.0,
        im: 0.0,
        err: 0.0,
    };

    pub fn new(re: f64, im: f64) -> Self {
        Self::with_err(re, im, 0.0)
    }

    pub fn with_err(re: f64, im: f64, err: f64) -> Self {
        debug_assert!(err >= 0.0);
        ComplexValue { re, im, err }
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for unit-modulus phases.
///
/// The error bound is updated on every term, so it never decreases. It
/// covers the phase evaluation error of each term, the second-order
/// `O(n u²) Σ|x_i|` term of compensated summation, and the final `2u|S|`
/// rounding when the two halves are recombined.
#[derive(Debug, Clone, Default)]
pub struct PhaseAccumulator {
    re: Neumaier,
    im: Neumaier,
    err: f64,
    count: u64,
}

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

impl PhaseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, re: f64, im: f64) {
        self.count += 1;
        self.re.add(re);
        self.im.add(im);
        self.err += 2.0 * PHASE_COMPONENT_ERR
            + 4.0 * self.count as f64 * UNIT_ROUNDOFF * UNIT_ROUNDOFF * (re.abs() + im.abs());
    }

    pub fn finish(&self) -> ComplexValue {
        let re = self.re.value();
        let im = self.im.value();
        let err = self.err + 2.0 * UNIT_ROUNDOFF * (re.abs() + im.abs());
        ComplexValue::with_err(re, im, err)
    }
}

/// One instance of `Σ_{M<n≤M+N} e_q(a·n^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumSpec {
    pub a: i128,
    pub k: u32,
    pub q: PrimeModulus,
    pub m: i128,
    pub n: u64,
}

impl SumSpec {
    pub fn new(a: i128, k: u32, q: u64, m: i128, n: i128) -> Result<Self, ExpSumError> {
        let q = PrimeModulus::new(q)?;
        if k == 0 {
            return Err(ExpSumError::ZeroDegree);
        }
        if q.reduce(a) == 0 {
            return Err(ExpSumError::ZeroCoefficient { a, q: q.get() });
        }
        if n < 0 {
            return Err(ExpSumError::NegativeLength(n));
        }
        let n = u64::try_from(n).map_err(|_| ExpSumError::NegativeLength(n))?;
        Ok(SumSpec { a, k, q, m, n })
    }
}

/// Residues `a·n^k mod q` for `n = M+1, …, M+N` in summation order.
fn window_residues(a: u64, k: u32, q: PrimeModulus, m: i128, n: u64) -> impl Iterator<Item = u64> {
    let qv = q.get();
    let mut x = q.reduce(m + 1);
    (0..n).map(move |_| {
        let t = q.mul(a, q.pow(x, k as u64));
        x += 1;
        if x == qv {
            x = 0;
        }
        t
    })
}

fn sum_residues<I: IntoIterator<Item = u64>>(residues: I, q: u64) -> ComplexValue {
    let mut acc = PhaseAccumulator::new();
    for r in residues {
        let (re, im) = phase_of_residue(r, q);
        acc.push(re, im);
    }
    acc.finish()
}

pub fn incomplete_power_sum(spec: &SumSpec) -> ComplexValue {
    let a = spec.q.reduce(spec.a);
    sum_residues(
        window_residues(a, spec.k, spec.q, spec.m, spec.n),
        spec.q.get(),
    )
}

/// Full-period sum, `M = 0, N = q`.
pub fn complete_power_sum(a: i128, k: u32, q: u64) -> Result<ComplexValue, ExpSumError> {
    let spec = SumSpec::new(a, k, q, 0, q as i128)?;
    Ok(incomplete_power_sum(&spec))
}

/// Result of a maximisation scan: the largest `|S|`, its smallest witness,
/// and the sum at that witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanMax {
    pub value: f64,
    pub witness: i128,
    pub sum: ComplexValue,
}

fn better(x: ScanMax, y: ScanMax) -> ScanMax {
    if y.value > x.value || (y.value == x.value && y.witness < x.witness) {
        y
    } else {
        x
    }
}

/// Precomputed phases for every residue of a small modulus. Produces the same
/// bits as [`phase_of_residue`].
struct PhaseTable {
    q: u64,
    table: Option<Vec<(f64, f64)>>,
}

const PHASE_TABLE_LIMIT: u64 = 1 << 22;

impl PhaseTable {
    fn new(q: u64) -> Self {
        let table = (q <= PHASE_TABLE_LIMIT).then(|| (0..q).map(|r| phase_of_residue(r, q)).collect());
        PhaseTable { q, table }
    }

    #[inline]
    fn get(&self, r: u64) -> (f64, f64) {
        match &self.table {
            Some(t) => t[r as usize],
            None => phase_of_residue(r, self.q),
        }
    }

    fn sum<I: IntoIterator<Item = u64>>(&self, residues: I) -> ComplexValue {
        let mut acc = PhaseAccumulator::new();
        for r in residues {
            let (re, im) = self.get(r);
            acc.push(re, im);
        }
        acc.finish()
    }
}

/// `max_{1≤a<q} |Σ_{M<n≤M+N} e_q(a n^k)|`, smallest maximising `a` on ties.
pub fn max_abs_over_coeffs(k: u32, q: u64, m: i128, n: u64) -> Result<ScanMax, ExpSumError> {
    let modulus = PrimeModulus::new(q)?;
    if k == 0 {
        return Err(ExpSumError::ZeroDegree);
    }
    let powers: Vec<u64> = window_residues(1, k, modulus, m, n).collect();
    let phases = PhaseTable::new(q);
    let best = (1..q)
        .into_par_iter()
        .map(|a| {
            let sum = phases.sum(powers.iter().map(|&p| modulus.mul(a, p)));
            ScanMax {
                value: sum.abs(),
                witness: a as i128,
                sum,
            }
        })
        .reduce_with(better);
    Ok(best.unwrap_or(ScanMax {
        value: 0.0,
        witness: 1,
        sum: ComplexValue::ZERO,
    }))
}

/// `max_{0≤M<q} |Σ_{M<n≤M+N} e_q(a n^k)|`, smallest maximising `M` on ties.
pub fn max_abs_over_shifts(a: i128, k: u32, q: u64, n: u64) -> Result<ScanMax, ExpSumError> {
    // validates a, k, q
    let spec = SumSpec::new(a, k, q, 0, n as i128)?;
    let modulus = spec.q;
    let a = modulus.reduce(a);
    let terms: Vec<u64> = (0..q).map(|x| modulus.mul(a, modulus.pow(x, k as u64))).collect();
    let phases = PhaseTable::new(q);
    let best = (0..q)
        .into_par_iter()
        .map(|shift| {
            let start = (shift + 1) % q;
            let sum = phases.sum((0..n).map(|i| terms[((start as u128 + i as u128) % q as u128) as usize]));
            ScanMax {
                value: sum.abs(),
                witness: shift as i128,
                sum,
            }
        })
        .reduce_with(better)
        .expect("q >= 2 so the shift range is nonempty");
    Ok(best)
}
