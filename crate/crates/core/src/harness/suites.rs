//! The `verify` suites. Each runs exact checks over a fixed grid, plus
//! seeded random cases where noted, and reports every violation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_integer::{Integer, Roots};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::derive_parameters;
use crate::counters::{
    count_for_targets, count_generic, count_generic_mitm, count_ikl, count_jrk_integer, count_jrk_mod,
    count_mult_congruence, ikl_system, jrk_system, parseval_check, scalar_range, shift_decomposition_check,
    spec_file::parse_system, vandermonde_pair_property, Caps, CongruenceSystem, CountOptions, Modulus, Monomial,
    ShiftStatus, SystemFunction,
};
use crate::expsum::max_abs_over_coeffs;
use crate::modarith::is_prime;

use super::calibration::{self, Family};
use super::{HarnessError, VerifyOutcome, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lemma1,
    Lemma2Shift,
    Lemma3,
    Lemma4Vandermonde,
    Weil,
    Parseval,
    Params,
    BackendEquiv,
    Calibrate,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Lemma1,
        Suite::Lemma2Shift,
        Suite::Lemma3,
        Suite::Lemma4Vandermonde,
        Suite::Weil,
        Suite::Parseval,
        Suite::Params,
        Suite::BackendEquiv,
        Suite::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2Shift => "lemma2-shift",
            Suite::Lemma3 => "lemma3",
            Suite::Lemma4Vandermonde => "lemma4-vandermonde",
            Suite::Weil => "weil",
            Suite::Parseval => "parseval",
            Suite::Params => "params",
            Suite::BackendEquiv => "backend-equiv",
            Suite::Calibrate => "calibrate",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown suite `{s}`")))
    }
}

/// Suite knobs. `None` means the suite's own default grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyParams {
    pub seed: u64,
    pub cases: Option<usize>,
    pub qmax: Option<u64>,
    pub kmax: Option<u32>,
    pub caps: Caps,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            seed: 0,
            cases: None,
            qmax: None,
            kmax: None,
            caps: Caps::default(),
        }
    }
}

struct Run {
    cases: u64,
    violations: Vec<Violation>,
    notes: Vec<String>,
}

impl Run {
    fn new() -> Self {
        Run {
            cases: 0,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, input: impl FnOnce() -> String, expected: impl fmt::Display, got: impl fmt::Display) {
        self.cases += 1;
        if !ok {
            self.violations.push(Violation {
                input: input(),
                expected: expected.to_string(),
                got: got.to_string(),
            });
        }
    }
}

fn primes_upto(hi: u64) -> Vec<u64> {
    (2..=hi).filter(|&q| is_prime(q)).collect()
}

pub fn run_verify(suite: Suite, params: &VerifyParams) -> Result<VerifyOutcome, HarnessError> {
    let start = Instant::now();
    let run = match suite {
        Suite::Lemma1 => lemma1(params)?,
        Suite::Lemma2Shift => lemma2_shift(params)?,
        Suite::Lemma3 => lemma3(params)?,
        Suite::Lemma4Vandermonde => lemma4_vandermonde(params)?,
        Suite::Weil => weil(params)?,
        Suite::Parseval => parseval(params)?,
        Suite::Params => param_invariants(params)?,
        Suite::BackendEquiv => backend_equiv(params)?,
        Suite::Calibrate => calibrate(params)?,
    };
    Ok(VerifyOutcome {
        suite,
        cases: run.cases,
        violations: run.violations,
        notes: run.notes,
        elapsed: start.elapsed(),
    })
}

fn random_table(rng: &mut ChaCha8Rng, q: u64, size: usize) -> SystemFunction {
    SystemFunction::Table((0..size).map(|_| rng.gen_range(0..q as i128)).collect())
}

/// Sign patterns `{±1}^t` in binary order, `+1` first.
fn sign_patterns(t: usize) -> impl Iterator<Item = Vec<i64>> {
    (0u32..1 << t).map(move |bits| (0..t).map(|i| if bits >> i & 1 == 0 { 1 } else { -1 }).collect())
}

/// `I(f, X, σ, λ) ≤ I(f, X)` where the right side has `σ_i = (-1)^i`, `λ = 0`.
fn lemma1(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut run = Run::new();
    let lambdas = 20;
    let primes: Vec<u64> = match params.qmax {
        Some(qmax) => primes_upto(qmax).into_iter().filter(|&q| q >= 5).collect(),
        None => vec![5, 7, 11],
    };
    for &q in &primes {
        for ell in 1..=2usize {
            for m in 1..=2usize {
                for size in 1..=6usize {
                    // two random tables and the power maps x^j on {1..|X|}
                    let mut families: Vec<Vec<SystemFunction>> = (0..2)
                        .map(|_| (0..m).map(|_| random_table(&mut rng, q, size)).collect())
                        .collect();
                    families.push((1..=m as u32).map(SystemFunction::power).collect());
                    for functions in families {
                        let domain = scalar_range(1, size as i64);
                        let reference = CongruenceSystem::new(
                            Modulus::prime(q)?,
                            domain.clone(),
                            functions.clone(),
                            CongruenceSystem::alternating_signs(ell),
                            vec![0; m],
                        )?;
                        let bound = count_generic_mitm(&reference, &params.caps)?.count;
                        let targets: Vec<Vec<i128>> = (0..lambdas)
                            .map(|_| (0..m).map(|_| rng.gen_range(0..q as i128)).collect())
                            .collect();
                        for signs in sign_patterns(2 * ell) {
                            let system = reference.with_signs_and_targets(signs.clone(), vec![0; m])?;
                            let counts = count_for_targets(&system, targets.iter().cloned(), &params.caps)?;
                            for (t, c) in targets.iter().zip(counts) {
                                run.check(
                                    c <= bound,
                                    || format!("q={q} ell={ell} m={m} |X|={size} f={functions:?} sigma={signs:?} lambda={t:?}"),
                                    format!("≤ {bound}"),
                                    c,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(run)
}

/// Every applicable `(r, k, m, V, q)` with `r ≤ 3`, `k ≤ kmax`, `m ≤ min(2, k)`.
fn lemma2_shift(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let qmax = params.qmax.unwrap_or(101);
    let kmax = params.kmax.unwrap_or(3);
    let mut shifted = 0u128;
    for q in primes_upto(qmax) {
        for r in 1..=3usize {
            for k in 1..=kmax {
                for m in 1..=k.min(2) {
                    let mut v = 1u64;
                    while ((r as u128) * v as u128).pow(m) < q as u128 {
                        let d = shift_decomposition_check(r, k, v, q, m, &params.caps)?;
                        let input = || format!("r={r} k={k} V={v} q={q} m={m}");
                        match d.status {
                            ShiftStatus::Holds => run.check(true, input, "", ""),
                            ShiftStatus::Fails => run.check(
                                false,
                                input,
                                format!("{:?}", d.lhs),
                                format!("{:?}", d.rhs),
                            ),
                            ShiftStatus::Inapplicable(why) => run.check(false, input, "applicable", why),
                        }
                        shifted += d.shifted_part;
                        v += 1;
                    }
                }
            }
        }
    }
    run.notes.push(format!("solutions carried by nonzero shifts: {shifted}"));
    Ok(run)
}

/// Direct double loop over `(n_1, u_1, n_2, u_2)`.
fn mult_oracle(n: u64, u: u64, q: u64) -> u128 {
    let mut hist = vec![0u128; q as usize];
    for a in 1..=n {
        for b in 1..=u {
            hist[(a * b % q) as usize] += 1;
        }
    }
    hist.iter().map(|c| c * c).sum()
}

fn lemma3(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let frozen = calibration::parse_fixture(calibration::FROZEN).map_err(HarnessError::Failure)?;
    let (cases, violations) = calibration::regression(Family::Mult, &frozen, &params.caps)?;
    run.cases += cases;
    run.violations.extend(violations);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let opts = CountOptions { caps: params.caps, ..Default::default() };
    let mut cases = calibration::grid()
        .into_iter()
        .filter(|c| c.family == Family::Mult)
        .map(|c| (c.q, c.n, c.u))
        .collect::<Vec<_>>();
    let primes: Vec<u64> = (5..=params.qmax.unwrap_or(600).max(5)).filter(|&q| is_prime(q)).collect();
    for _ in 0..params.cases.unwrap_or(30) {
        let q = primes[rng.gen_range(0..primes.len())];
        let n = rng.gen_range(1..=q.sqrt() * 2).min(q);
        let u = rng.gen_range(1..=(q / n).min(n));
        cases.push((q, n, u));
    }
    let on_grid = cases.len() - params.cases.unwrap_or(30);
    let (mut grid_max, mut extra_max) = (0f64, 0f64);
    for (i, (q, n, u)) in cases.into_iter().enumerate() {
        let report = count_mult_congruence(0, n, u, q, &opts)?;
        let oracle = mult_oracle(n, u, q);
        let input = || format!("q={q} N={n} U={u}");
        run.check(report.count == oracle, input, oracle, report.count);
        run.check(report.count >= (n * u) as u128, input, format!("≥ {}", n * u), report.count);
        if !report.hypotheses.is_empty() {
            run.notes.push(format!("{}: {}", input(), report.hypotheses[0]));
        }
        let ratio = report.count as f64 / ((n * u) as f64 * (q as f64).ln());
        if i < on_grid {
            grid_max = grid_max.max(ratio);
        } else {
            extra_max = extra_max.max(ratio);
        }
    }
    if let Some((_, c)) = calibration::ceilings(&frozen).into_iter().find(|(f, _)| *f == Family::Mult) {
        run.notes.push(format!("grid ratio max {grid_max} (frozen ceiling {c})"));
    }
    run.notes.push(format!("seeded extra cases ratio max {extra_max} (not regression-checked)"));
    Ok(run)
}

fn lemma4_vandermonde(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let mut cases: Vec<(u32, usize, u64, u64, u64)> = vec![(4, 2, 31, 5, 3), (6, 3, 37, 4, 2), (4, 2, 101, 6, 4)];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let primes = primes_upto(params.qmax.unwrap_or(60).max(5));
    let primes: Vec<u64> = primes.into_iter().filter(|&q| q > 3).collect();
    for _ in 0..params.cases.unwrap_or(20) {
        let k = rng.gen_range(1..=params.kmax.unwrap_or(6));
        let ell = rng.gen_range(1..=((k as usize + 1) / 2).clamp(1, 3));
        let q = primes[rng.gen_range(0..primes.len())];
        let u = rng.gen_range(1..=3u64.min(q - 1));
        let n = rng.gen_range(1..=5u64);
        cases.push((k, ell, q, n, u));
    }
    for (k, ell, q, n, u) in cases {
        let r = vandermonde_pair_property(k, ell, 0, n, u, q, &params.caps)?;
        run.check(
            r.holds,
            || format!("k={k} ell={ell} q={q} N={n} U={u} first={:?}", r.violations.first()),
            "a pair with equal ratios in every solution",
            format!("{} of {} solutions without one", r.violation_count, r.solutions),
        );
    }
    let frozen = calibration::parse_fixture(calibration::FROZEN).map_err(HarnessError::Failure)?;
    let (n, violations) = calibration::regression(Family::Ikl, &frozen, &params.caps)?;
    run.cases += n;
    run.violations.extend(violations);
    Ok(run)
}

/// `|Σ_{n mod q} e_q(a n^k)| ≤ (gcd(k, q-1) - 1) √q` for every `a`.
fn weil(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let kmax = params.kmax.unwrap_or(8);
    for q in primes_upto(params.qmax.unwrap_or(199)) {
        for k in 1..=kmax {
            let g = (k as u64).gcd(&(q - 1));
            let bound = (g - 1) as f64 * (q as f64).sqrt() + 1e-6;
            let best = max_abs_over_coeffs(k, q, 0, q)?;
            run.check(
                best.value <= bound,
                || format!("q={q} k={k} a={}", best.witness),
                format!("≤ {bound}"),
                best.value,
            );
            run.cases += q - 2;
        }
    }
    Ok(run)
}

fn parseval(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let kmax = params.kmax.unwrap_or(4);
    let mut squares_checked = 0;
    for q in primes_upto(params.qmax.unwrap_or(13)) {
        for k in 1..=kmax {
            for ell in 1..=2usize {
                for n in 1..=4u64 {
                    for u in 1..=3u64 {
                        // the window start only matters mod q; vary it by seed
                        let m = rng.gen_range(0..q as i64);
                        for start in [0, m] {
                            let r = parseval_check(k, ell, start, n, u, q, &params.caps)?;
                            squares_checked += r.ikl.is_some() as u64;
                            run.check(
                                r.holds,
                                || format!("k={k} ell={ell} q={q} M={start} N={n} U={u}"),
                                format!("total {} and squares ≤ {:?}", r.expected, r.ikl),
                                format!("total {} squares {}", r.total, r.sum_of_squares),
                            );
                        }
                    }
                }
            }
        }
    }
    run.notes.push(format!("square-sum comparisons: {squares_checked}"));
    Ok(run)
}

fn param_invariants(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let kmax = params.kmax.unwrap_or(200);
    let primes: Vec<u64> = (1001..).filter(|&q| is_prime(q)).take(100).collect();
    let exponents: Vec<f64> = (3..=10).map(|i| i as f64 / 10.0).collect();
    let mut flagged = 0u64;
    let mut degenerate = 0u64;
    for &q in &primes {
        let lengths: Vec<u64> = exponents.iter().map(|&e| super::sweep::ceil_power(q, e)).collect();
        for k in 3..=kmax {
            for &n in &lengths {
                let p = derive_parameters(k, q, n)?;
                let bad = p.invariant_violations(q, n);
                run.check(
                    bad.is_empty(),
                    || format!("k={k} q={q} N={n}"),
                    "no invariant violations",
                    bad.join("; "),
                );
                flagged += !p.unmet_hypotheses.is_empty() as u64;
                degenerate += p.degenerate as u64;
            }
        }
    }
    run.notes.push(format!("instances where U ≤ N or NU ≤ q fails: {flagged}"));
    run.notes.push(format!("degenerate instances (U = 0 or V = 0): {degenerate}"));
    Ok(run)
}

fn random_system(rng: &mut ChaCha8Rng) -> Result<CongruenceSystem, HarnessError> {
    let primes = primes_upto(31);
    let q = primes[rng.gen_range(0..primes.len())];
    let ell = rng.gen_range(1..=2usize);
    let m = rng.gen_range(1..=4usize);
    let size = rng.gen_range(1..=12usize);
    let domain: Vec<_> = sample(rng, 41, size)
        .into_iter()
        .map(|i| crate::counters::Point::Scalar(i as i64 - 20))
        .collect();
    let functions = (0..m)
        .map(|_| {
            if rng.gen_bool(0.5) {
                random_table(rng, 3 * q, size)
            } else {
                let terms = (0..rng.gen_range(1..=3))
                    .map(|_| Monomial::new(rng.gen_range(-5..=5), rng.gen_range(0..=4), 0))
                    .collect();
                SystemFunction::Polynomial(terms)
            }
        })
        .collect();
    let signs = (0..2 * ell)
        .map(|_| {
            let s = rng.gen_range(1..q as i64);
            if rng.gen_bool(0.5) {
                s
            } else {
                -s
            }
        })
        .collect();
    let targets = (0..m).map(|_| rng.gen_range(0..q as i128)).collect();
    let system = CongruenceSystem::new(Modulus::prime(q)?, domain, functions, signs, targets)?;
    // a third of the systems get a target hit by some tuple
    if rng.gen_bool(1.0 / 3.0) {
        let values = system.value_table()?;
        let mut target = vec![0i128; m];
        for &s in system.signs() {
            let x = rng.gen_range(0..size);
            for j in 0..m {
                target[j] += s as i128 * values[x * m + j];
            }
        }
        return Ok(system.with_signs_and_targets(system.signs().to_vec(), target)?);
    }
    Ok(system)
}

const GENERIC_FIXTURE: &str = "\
modulus = 31
n = 1..4
u = 1..3
pairs = 2
equation = u^4
equation = n*u^3
equation = n^2*u^2 + 3*n
signs = 1 2 -1 -2
targets = 0 1 0
";

fn fixed_systems() -> Result<Vec<(String, CongruenceSystem)>, HarnessError> {
    let mut out = vec![
        ("J(2,2,10)".into(), jrk_system(2, 2, 10, Modulus::Integers)?),
        ("J(3,2,6)".into(), jrk_system(3, 2, 6, Modulus::Integers)?),
        ("J(2,3,8)".into(), jrk_system(2, 3, 8, Modulus::Integers)?),
        ("J(2,3,5;31)".into(), jrk_system(2, 3, 5, Modulus::prime(31)?)?),
        ("J(3,3,4;11)".into(), jrk_system(3, 3, 4, Modulus::prime(11)?)?),
        ("I(4,2;31,5,3)".into(), ikl_system(4, 2, 0, 5, 3, 31)?),
        ("I(3,1;101,10,4)".into(), ikl_system(3, 1, 0, 10, 4, 101)?),
        ("I(6,3;37,3,2)".into(), ikl_system(6, 3, 0, 3, 2, 37)?),
        (
            "one-sided x^2, 3 variables".into(),
            CongruenceSystem::one_sided(Modulus::prime(7)?, scalar_range(0, 6), vec![SystemFunction::power(2)], 3, vec![3])?,
        ),
        (
            "x and x^2 on 1..5 mod 7".into(),
            CongruenceSystem::new(
                Modulus::prime(7)?,
                scalar_range(1, 5),
                vec![SystemFunction::power(1), SystemFunction::power(2)],
                vec![1, -1],
                vec![0, 0],
            )?,
        ),
    ];
    let spec = parse_system(GENERIC_FIXTURE).map_err(|e| HarnessError::Failure(e.to_string()))?;
    out.push(("spec-file fixture".into(), spec));
    Ok(out)
}

fn backend_equiv(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut systems = Vec::new();
    for i in 0..params.cases.unwrap_or(100) {
        systems.push((format!("random #{i} (seed {})", params.seed), random_system(&mut rng)?));
    }
    systems.extend(fixed_systems()?);
    let mut nonzero = 0;
    for (name, s) in &systems {
        let naive = count_generic(s, false, &params.caps)?.count;
        let mitm = count_generic_mitm(s, &params.caps)?.count;
        nonzero += (naive > 0) as u64;
        run.check(naive == mitm, || format!("{name}: {s:?}"), naive, mitm);
    }
    // the specialised entry points agree with a forced naive recount
    let naive = CountOptions::with_backend(crate::counters::Backend::Naive);
    let auto = CountOptions::default();
    for (r, k, v) in [(2usize, 2u32, 7u64), (2, 3, 6), (3, 2, 5)] {
        let a = count_jrk_integer(r, k, v, &auto)?.count;
        let b = count_jrk_integer(r, k, v, &naive)?.count;
        run.check(a == b, || format!("jr r={r} k={k} V={v}"), b, a);
        let a = count_jrk_mod(r, k, v, 13, &auto)?.count;
        let b = count_jrk_mod(r, k, v, 13, &naive)?.count;
        run.check(a == b, || format!("jrq r={r} k={k} V={v} q=13"), b, a);
    }
    let a = count_ikl(4, 2, 0, 5, 3, 31, &auto)?.count;
    let b = count_ikl(4, 2, 0, 5, 3, 31, &naive)?.count;
    run.check(a == b, || "ikl k=4 ell=2 q=31 N=5 U=3".into(), b, a);
    run.notes.push(format!("systems with at least one solution: {nonzero} of {}", systems.len()));
    Ok(run)
}

fn calibrate(params: &VerifyParams) -> Result<Run, HarnessError> {
    let mut run = Run::new();
    let entries = calibration::calibrate(&params.caps)?;
    for e in &entries {
        let c = e.case;
        let diagonal = ((c.n * c.u) as u128).pow(c.ell.max(1) as u32);
        run.check(e.count >= diagonal, || c.to_string(), format!("≥ {diagonal}"), e.count);
    }
    for (family, ceiling) in calibration::ceilings(&entries) {
        run.notes.push(format!("{family} ratio ceiling {ceiling}"));
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("lemma9".parse::<Suite>().is_err());
    }

    #[test]
    fn mult_oracle_small_cases() {
        // U = 1: n_1 ≡ n_2 with n ≤ N < q, so N solutions
        assert_eq!(mult_oracle(10, 1, 101), 10);
        // N = U = 2 mod 5: products 1,2,2,4 → 1 + 4 + 1
        assert_eq!(mult_oracle(2, 2, 5), 6);
    }

    #[test]
    fn sign_patterns_cover_all() {
        let all: Vec<_> = sign_patterns(2).collect();
        assert_eq!(all, vec![vec![1, 1], vec![-1, 1], vec![1, -1], vec![-1, -1]]);
    }

    #[test]
    fn random_systems_are_deterministic() {
        let a: Vec<_> = (0..5)
            .scan(ChaCha8Rng::seed_from_u64(3), |r, _| Some(random_system(r).unwrap()))
            .collect();
        let b: Vec<_> = (0..5)
            .scan(ChaCha8Rng::seed_from_u64(3), |r, _| Some(random_system(r).unwrap()))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn small_suites_pass() {
        let p = VerifyParams {
            cases: Some(10),
            qmax: Some(31),
            kmax: Some(4),
            ..Default::default()
        };
        for s in [Suite::Weil, Suite::BackendEquiv, Suite::Lemma2Shift] {
            let out = run_verify(s, &p).unwrap();
            assert!(out.passed(), "{}", out.render_text());
            assert!(out.cases > 0);
        }
    }
}
