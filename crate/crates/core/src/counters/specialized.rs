//! The concrete systems: mean value systems over ℤ and mod `q`, the
//! mixed-monomial system in `n^j u^{k-j}`, the multiplicative congruence
//! `n_1 u_1 ≡ n_2 u_2`, and the identities and structural properties they
//! satisfy.

use serde::Serialize;

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use super::engine::{fold_solutions, half_histograms, Prepared};
use super::system::{pair_grid, scalar_range, CongruenceSystem, Modulus, Point, SystemFunction};
use super::{count_for_targets, count_system, Caps, CountError, CountOptions, CountReport, HypothesisViolation};
use crate::modarith::PrimeModulus;

fn invalid<T>(msg: impl Into<String>) -> Result<T, CountError> {
    Err(CountError::InvalidParameters(msg.into()))
}

fn to_i64(v: u64, what: &str) -> Result<i64, CountError> {
    i64::try_from(v).or_else(|_| invalid(format!("{what} = {v} is too large")))
}

/// `v_1^j + … + v_r^j = v_{r+1}^j + … + v_{2r}^j`, `j = 1..k`, `1 ≤ v_i ≤ V`.
pub fn jrk_system(r: usize, k: u32, v: u64, modulus: Modulus) -> Result<CongruenceSystem, CountError> {
    if r == 0 || k == 0 || v == 0 {
        return invalid("r, k and V must all be at least 1");
    }
    let v = to_i64(v, "V")?;
    CongruenceSystem::new(
        modulus,
        scalar_range(1, v),
        (1..=k).map(SystemFunction::power).collect(),
        CongruenceSystem::split_signs(r),
        vec![0; k as usize],
    )
}

/// `J_{r,k}(V)`, the mean value count over the integers.
pub fn count_jrk_integer(r: usize, k: u32, v: u64, options: &CountOptions) -> Result<CountReport, CountError> {
    count_system(&jrk_system(r, k, v, Modulus::Integers)?, options)
}

/// `J_{r,k}(V; q)`, the same system read as congruences mod `q`.
pub fn count_jrk_mod(r: usize, k: u32, v: u64, q: u64, options: &CountOptions) -> Result<CountReport, CountError> {
    count_system(&jrk_system(r, k, v, Modulus::prime(q)?)?, options)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum ShiftStatus {
    Holds,
    Fails,
    Inapplicable(String),
}

/// Both sides of `J_{r,k}(V;q) = Σ_λ J_{r,k}(V, λ_{m+1} q, …, λ_k q)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShiftDecomposition {
    pub status: ShiftStatus,
    pub lhs: Option<u128>,
    pub rhs: Option<u128>,
    /// Shift vectors enumerated on the right-hand side.
    pub shift_vectors: u128,
    /// Part of the right-hand side coming from nonzero shift vectors.
    pub shifted_part: u128,
}

/// Checks that the congruence count splits into integer counts with the
/// equations `j ≤ m` exact and `j > m` shifted by multiples of `q`, with
/// `|λ_j| ≤ r V^j / q`. Requires `1 ≤ m ≤ k` and `V < q^{1/m}/r`, i.e.
/// `(rV)^m < q`; otherwise the instance is reported as inapplicable.
pub fn shift_decomposition_check(
    r: usize,
    k: u32,
    v: u64,
    q: u64,
    m: u32,
    caps: &Caps,
) -> Result<ShiftDecomposition, CountError> {
    let modulus = PrimeModulus::new(q)?;
    let inapplicable = |why: String| ShiftDecomposition {
        status: ShiftStatus::Inapplicable(why),
        lhs: None,
        rhs: None,
        shift_vectors: 0,
        shifted_part: 0,
    };
    if m == 0 || m > k {
        return Ok(inapplicable(format!("m = {m} must satisfy 1 ≤ m ≤ k = {k}")));
    }
    let rv = (r as u128).checked_mul(v as u128);
    let applicable = rv.and_then(|x| x.checked_pow(m)).is_some_and(|x| x < q as u128);
    if !applicable {
        return Ok(inapplicable(format!("V = {v} is not below q^(1/{m})/r for q = {q}, r = {r}")));
    }

    let mod_system = jrk_system(r, k, v, Modulus::Prime(modulus))?;
    let lhs = count_system(&mod_system, &CountOptions { caps: *caps, ..Default::default() })?.count;

    let bounds: Vec<i128> = (m + 1..=k)
        .map(|j| {
            (v as u128)
                .checked_pow(j)
                .and_then(|p| p.checked_mul(r as u128))
                .map(|x| (x / q as u128) as i128)
                .ok_or(CountError::Overflow)
        })
        .collect::<Result<_, _>>()?;
    let vectors = bounds
        .iter()
        .try_fold(1u128, |acc, b| acc.checked_mul(2 * *b as u128 + 1))
        .ok_or(CountError::Overflow)?;

    // Integer counts J(0, …, 0, λ_{m+1} q, …, λ_k q) for every shift vector
    // at once: group both half-sum histograms by (exact low part, high part
    // mod q); each matching pair contributes to exactly one λ.
    let int_system = jrk_system(r, k, v, Modulus::Integers)?;
    let p = Prepared::new(&int_system)?;
    let (left, right) = half_histograms(&p, caps)?;
    let qi = q as i128;
    let m = m as usize;
    let class = |sums: &[i128]| -> Vec<i128> {
        let mut key = sums[..m].to_vec();
        key.extend(sums[m..].iter().map(|x| x.rem_euclid(qi)));
        key
    };
    let mut groups: FxHashMap<Vec<i128>, Vec<(&[i128], u64)>> = FxHashMap::default();
    for (sums, &c) in &right {
        groups.entry(class(sums)).or_default().push((sums.as_slice(), c));
    }
    let mut per_shift: BTreeMap<Vec<i128>, u128> = BTreeMap::new();
    for (sums, &c) in &left {
        let Some(partners) = groups.get(&class(sums)) else { continue };
        for (other, d) in partners {
            let lambda: Vec<i128> = sums[m..].iter().zip(&other[m..]).map(|(a, b)| (a - b) / qi).collect();
            let slot = per_shift.entry(lambda).or_insert(0);
            *slot = slot
                .checked_add(c as u128 * *d as u128)
                .ok_or(CountError::Overflow)?;
        }
    }
    let mut rhs = 0u128;
    let mut shifted_part = 0u128;
    let mut outside = 0u128;
    for (lambda, c) in &per_shift {
        if lambda.iter().zip(&bounds).any(|(l, b)| l.abs() > *b) {
            outside += c;
            continue;
        }
        rhs = rhs.checked_add(*c).ok_or(CountError::Overflow)?;
        if lambda.iter().any(|&x| x != 0) {
            shifted_part += c;
        }
    }
    Ok(ShiftDecomposition {
        status: if lhs == rhs && outside == 0 { ShiftStatus::Holds } else { ShiftStatus::Fails },
        lhs: Some(lhs),
        rhs: Some(rhs),
        shift_vectors: vectors,
        shifted_part,
    })
}

fn window_hypotheses(n: u64, u: u64, q: u64) -> Vec<HypothesisViolation> {
    let mut out = Vec::new();
    if (n as u128) * (u as u128) > q as u128 {
        out.push(HypothesisViolation(format!("NU ≤ q fails: {n}·{u} > {q}")));
    }
    if u > n {
        out.push(HypothesisViolation(format!("U ≤ N fails: {u} > {n}")));
    }
    out
}

fn window_domain(m: i64, n: u64, u: u64) -> Result<Vec<Point>, CountError> {
    if n == 0 || u == 0 {
        return invalid("N and U must be at least 1");
    }
    let hi = m
        .checked_add(to_i64(n, "N")?)
        .ok_or(CountError::Overflow)?;
    Ok(pair_grid(m + 1, hi, 1, to_i64(u, "U")?))
}

/// `Σ_{i≤ℓ} n_i^j u_i^{k-j} ≡ Σ_{i>ℓ} n_i^j u_i^{k-j} (mod q)` for
/// `j = 0..2ℓ-1`, over `n ∈ (M, M+N]`, `u ∈ [1, U]`.
pub fn ikl_system(k: u32, ell: usize, m: i64, n: u64, u: u64, q: u64) -> Result<CongruenceSystem, CountError> {
    if ell == 0 {
        return invalid("ℓ must be at least 1");
    }
    let top = 2 * ell as u32 - 1;
    if top > k {
        return invalid(format!("2ℓ - 1 = {top} exceeds k = {k}"));
    }
    CongruenceSystem::new(
        Modulus::prime(q)?,
        window_domain(m, n, u)?,
        (0..=top).map(|j| SystemFunction::monomial(1, j, k - j)).collect(),
        CongruenceSystem::split_signs(ell),
        vec![0; top as usize + 1],
    )
}

fn ikl_hypotheses(k: u32, ell: usize, n: u64, u: u64, q: u64) -> Vec<HypothesisViolation> {
    let mut h = Vec::new();
    if 2 * ell as u64 > k as u64 {
        h.push(HypothesisViolation(format!("2ℓ ≤ k fails: 2·{ell} > {k}")));
    }
    h.extend(window_hypotheses(n, u, q));
    h
}

/// `I_{k,ℓ}(N, U)`. Hypothesis violations (`2ℓ ≤ k`, `NU ≤ q`, `U ≤ N`) are
/// recorded on the report; the count itself is exact regardless.
pub fn count_ikl(
    k: u32,
    ell: usize,
    m: i64,
    n: u64,
    u: u64,
    q: u64,
    options: &CountOptions,
) -> Result<CountReport, CountError> {
    let system = ikl_system(k, ell, m, n, u, q)?;
    let mut report = count_system(&system, options)?;
    report.hypotheses = ikl_hypotheses(k, ell, n, u, q);
    Ok(report)
}

/// Solutions of `n_1 u_1 ≡ n_2 u_2 (mod q)` over `n ∈ (M, M+N]`, `u ∈ [1, U]`.
pub fn count_mult_congruence(
    m: i64,
    n: u64,
    u: u64,
    q: u64,
    options: &CountOptions,
) -> Result<CountReport, CountError> {
    let system = CongruenceSystem::new(
        Modulus::prime(q)?,
        window_domain(m, n, u)?,
        vec![SystemFunction::monomial(1, 1, 1)],
        vec![1, -1],
        vec![0],
    )?;
    let mut report = count_system(&system, options)?;
    report.hypotheses = window_hypotheses(n, u, q);
    Ok(report)
}

const MAX_REPORTED_VIOLATIONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VandermondeReport {
    pub solutions: u128,
    pub violation_count: u128,
    /// The first few violating tuples, in enumeration order.
    pub violations: Vec<Vec<Point>>,
    pub holds: bool,
    pub hypotheses: Vec<HypothesisViolation>,
}

/// Every solution of the `I_{k,ℓ}` system should contain two indices
/// `r ≠ s` with `n_r u_s ≡ n_s u_r (mod q)`, i.e. equal ratios `n/u`.
pub fn vandermonde_pair_property(
    k: u32,
    ell: usize,
    m: i64,
    n: u64,
    u: u64,
    q: u64,
    caps: &Caps,
) -> Result<VandermondeReport, CountError> {
    let system = ikl_system(k, ell, m, n, u, q)?;
    let modulus = PrimeModulus::new(q)?;
    let domain = system.domain();
    let p = Prepared::new(&system)?;
    let has_pair = |idx: &[usize]| {
        let pts: Vec<(u64, u64)> = idx
            .iter()
            .map(|&i| {
                let (a, b) = domain[i].coords();
                (modulus.reduce(a as i128), modulus.reduce(b as i128))
            })
            .collect();
        (0..pts.len()).any(|r| {
            (r + 1..pts.len()).any(|s| modulus.mul(pts[r].0, pts[s].1) == modulus.mul(pts[s].0, pts[r].1))
        })
    };
    type Acc = (u128, u128, Vec<Vec<Point>>);
    let (solutions, violation_count, violations) = fold_solutions(
        &p,
        caps,
        || (0u128, 0u128, Vec::new()),
        |acc: &mut Acc, idx| {
            acc.0 += 1;
            if !has_pair(idx) {
                acc.1 += 1;
                if acc.2.len() < MAX_REPORTED_VIOLATIONS {
                    acc.2.push(idx.iter().map(|&i| domain[i]).collect());
                }
            }
        },
        |mut a: Acc, b: Acc| {
            a.0 += b.0;
            a.1 += b.1;
            a.2.extend(b.2);
            a.2.truncate(MAX_REPORTED_VIOLATIONS);
            a
        },
    )?;
    Ok(VandermondeReport {
        solutions,
        violation_count,
        violations,
        holds: violation_count == 0,
        hypotheses: ikl_hypotheses(k, ell, n, u, q),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsevalReport {
    /// Number of target vectors enumerated, `q^k`.
    pub targets: u128,
    /// `Σ_λ I(λ)`
    pub total: u128,
    /// `(NU)^ℓ`
    pub expected: u128,
    /// `Σ_λ I(λ)^2`
    pub sum_of_squares: u128,
    /// `I_{k,ℓ}(N,U)` when `2ℓ ≤ k < q`; it dominates `sum_of_squares`.
    pub ikl: Option<u128>,
    pub holds: bool,
}

fn binomials_mod(k: u32, q: PrimeModulus) -> Vec<u64> {
    let mut row = vec![1u64];
    for _ in 0..k {
        let mut next = vec![1u64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = q.add(row[i - 1], row[i]);
        }
        row = next;
    }
    row
}

/// Enumerates every `λ ∈ [0,q)^k` and counts the one-sided system
/// `C(k,j) Σ_{i≤ℓ} n_i^j u_i^{k-j} ≡ λ_j`, `j = 0..k-1`, checking that the
/// counts sum to `(NU)^ℓ`.
pub fn parseval_check(
    k: u32,
    ell: usize,
    m: i64,
    n: u64,
    u: u64,
    q: u64,
    caps: &Caps,
) -> Result<ParsevalReport, CountError> {
    let modulus = PrimeModulus::new(q)?;
    if ell == 0 || k == 0 {
        return invalid("k and ℓ must be at least 1");
    }
    let binom = binomials_mod(k, modulus);
    let functions = (0..k)
        .map(|j| SystemFunction::monomial(binom[j as usize] as i64, j, k - j))
        .collect();
    let system = CongruenceSystem::one_sided(
        Modulus::Prime(modulus),
        window_domain(m, n, u)?,
        functions,
        ell,
        vec![0; k as usize],
    )?;
    let targets = (q as u128)
        .checked_pow(k)
        .filter(|&t| t <= caps.enumeration)
        .ok_or(CountError::EnumerationCap {
            needed: (q as u128).checked_pow(k),
            cap: caps.enumeration,
        })?;
    let all_targets = (0..targets).map(|code| {
        let mut c = code;
        (0..k)
            .map(|_| {
                let d = (c % q as u128) as i128;
                c /= q as u128;
                d
            })
            .collect::<Vec<i128>>()
    });
    let counts = count_for_targets(&system, all_targets, caps)?;
    let total = counts.iter().try_fold(0u128, |a, &c| a.checked_add(c)).ok_or(CountError::Overflow)?;
    let sum_of_squares = counts
        .iter()
        .try_fold(0u128, |a, &c| c.checked_mul(c).and_then(|s| a.checked_add(s)))
        .ok_or(CountError::Overflow)?;
    let expected = ((n as u128) * (u as u128)).checked_pow(ell as u32).ok_or(CountError::Overflow)?;
    // with q > k every weight C(k,j) is a unit, so the squared counts solve a
    // system with at least the I_{k,ℓ} constraints
    let ikl = if 2 * ell <= k as usize && q > k as u64 {
        Some(count_ikl(k, ell, m, n, u, q, &CountOptions { caps: *caps, ..Default::default() })?.count)
    } else {
        None
    };
    let holds = total == expected && ikl.map_or(true, |i| sum_of_squares <= i);
    Ok(ParsevalReport {
        targets,
        total,
        expected,
        sum_of_squares,
        ikl,
        holds,
    })
}
