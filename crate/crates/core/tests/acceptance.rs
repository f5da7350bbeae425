//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Time limits are checked against wall clock.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_integer::Integer;

use common::{to_f64, within_ulps, Oracle};
use gausslab::bounds::{compare_bounds, BoundKind};
use gausslab::counters::{count_jrk_integer, count_jrk_mod, vandermonde_pair_property, Caps, CountOptions};
use gausslab::harness::calibration::{self, Family};
use gausslab::harness::sweep::{run_sweep, LengthRule, ScanMode, SweepConfig};
use gausslab::harness::{run_verify, Suite, VerifyParams};
use gausslab::modarith::is_prime;

type Check = Result<String, String>;

fn suite(s: Suite, params: VerifyParams) -> Check {
    let out = run_verify(s, &params).map_err(|e| e.to_string())?;
    if out.passed() {
        Ok(format!("{} cases, 0 violations", out.cases))
    } else {
        Err(format!(
            "{} violations in {} cases, first: {}",
            out.violations.len(),
            out.cases,
            out.violations[0]
        ))
    }
}

fn c1_backend_equivalence() -> Check {
    suite(
        Suite::BackendEquiv,
        VerifyParams {
            seed: 7,
            cases: Some(100),
            ..Default::default()
        },
    )
}

fn c2_closed_form() -> Check {
    for v in 1..=30u64 {
        let got = count_jrk_integer(2, 2, v, &CountOptions::default())
            .map_err(|e| e.to_string())?
            .count;
        let want = 2 * (v as u128).pow(2) - v as u128;
        if got != want {
            return Err(format!("J(2,2,{v}) = {got}, expected {want}"));
        }
    }
    Ok("V = 1..30".into())
}

fn c3_mod_integer_agreement() -> Check {
    let mut n = 0;
    for r in 1..=3usize {
        for k in 1..=3u32 {
            for v in 1..=4u64 {
                let floor = r as u64 * v.pow(k);
                let q = (floor + 1..).find(|&q| is_prime(q)).unwrap();
                let opts = CountOptions::default();
                let a = count_jrk_mod(r, k, v, q, &opts).map_err(|e| e.to_string())?.count;
                let b = count_jrk_integer(r, k, v, &opts).map_err(|e| e.to_string())?.count;
                if a != b {
                    return Err(format!("r={r} k={k} V={v} q={q}: {a} mod q vs {b} over Z"));
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} instances"))
}

fn c4_sign_domination() -> Check {
    suite(Suite::Lemma1, VerifyParams::default())
}

fn c5_shift_identity() -> Check {
    suite(Suite::Lemma2Shift, VerifyParams::default())
}

fn c6_weil() -> Check {
    suite(Suite::Weil, VerifyParams::default())
}

fn c7_parseval() -> Check {
    suite(Suite::Parseval, VerifyParams::default())
}

fn c8_vandermonde() -> Check {
    let mut total = 0;
    for (k, ell, q, n, u) in [(4u32, 2usize, 31u64, 5u64, 3u64), (6, 3, 37, 4, 2), (4, 2, 101, 6, 4)] {
        let r = vandermonde_pair_property(k, ell, 0, n, u, q, &Caps::default()).map_err(|e| e.to_string())?;
        if !r.holds || r.solutions == 0 {
            return Err(format!(
                "(k,ℓ,q,N,U) = ({k},{ell},{q},{n},{u}): {} of {} solutions lack a pair",
                r.violation_count, r.solutions
            ));
        }
        total += r.solutions;
    }
    Ok(format!("{total} solutions checked"))
}

fn c9_parameters() -> Check {
    suite(Suite::Params, VerifyParams::default())
}

fn c10_calibration() -> Check {
    let frozen = calibration::parse_fixture(calibration::FROZEN)?;
    if frozen.is_empty() {
        return Err("the frozen fixture is empty".into());
    }
    let caps = Caps::default();
    let mut cases = 0;
    for family in [Family::Mult, Family::Ikl] {
        let (n, v) = calibration::regression(family, &frozen, &caps).map_err(|e| e.to_string())?;
        if let Some(first) = v.first() {
            return Err(format!("{} regressions, first: {first}", v.len()));
        }
        cases += n;
    }
    Ok(format!("{cases} grid points at or below their frozen ratios"))
}

fn sweep_rows(config: &SweepConfig, threads: usize) -> Result<String, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    pool.install(|| run_sweep(config, &mut buf)).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

fn field(row: &[&str], i: usize) -> f64 {
    row[i].parse().unwrap_or(f64::NAN)
}

fn c11_sweep_sanity() -> Check {
    let mut oracle = Oracle::new();
    let grid = SweepConfig {
        primes: vec![101, 1009, 10_007],
        degrees: vec![3, 4, 5, 6, 8],
        lengths: LengthRule::Exponents(vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
        scan: ScanMode::MaxOverCoefficients,
        ..SweepConfig::default()
    };
    let complete = SweepConfig {
        primes: (3..200).filter(|&q| is_prime(q)).collect(),
        degrees: vec![3, 4, 5, 6, 7, 8],
        lengths: LengthRule::Exponents(vec![1.0]),
        scan: ScanMode::MaxOverCoefficients,
        ..SweepConfig::default()
    };
    let fixed = SweepConfig {
        scan: ScanMode::Fixed(5),
        start: -17,
        ..grid.clone()
    };

    let mut rows = 0;
    for config in [&grid, &complete, &fixed] {
        let one = sweep_rows(config, 1)?;
        for t in [2, 3, 8] {
            if sweep_rows(config, t)? != one {
                return Err(format!("sweep output differs between 1 and {t} threads"));
            }
        }
        for line in one.lines().skip(1) {
            rows += 1;
            let row: Vec<&str> = line.split(',').collect();
            let (q, k, n): (u64, u32, u64) = (row[0].parse().unwrap(), row[1].parse().unwrap(), row[4].parse().unwrap());
            let (abs, err) = (field(&row, 7), field(&row, 8));
            if !(abs <= n as f64 + err) {
                return Err(format!("row {line}: |S| = {abs} exceeds N + err"));
            }
            if n == q {
                let g = (k as u64).gcd(&(q - 1));
                let weil = (g - 1) as f64 * (q as f64).sqrt() + 1e-6;
                if abs > weil {
                    return Err(format!("row {line}: complete sum above (gcd-1)√q"));
                }
            }
            for (col, want) in [
                (9, oracle.thm1(q, k, n)),
                (11, oracle.weyl(k, n)),
                (13, oracle.weil(q)),
            ] {
                if !within_ulps(field(&row, col), &want, 10.0) {
                    return Err(format!(
                        "row {line}: column {col} = {} vs oracle {}",
                        row[col],
                        to_f64(&want)
                    ));
                }
            }
        }
    }

    // the best-bound label changes monotonically along N for k = 5, q = 10007
    let mut labels: Vec<BoundKind> = Vec::new();
    for n in (1..=10_007u64).step_by(7) {
        let best = compare_bounds(10_007, 5, n, None).map_err(|e| e.to_string())?.best;
        if labels.last() != Some(&best) {
            if labels.contains(&best) {
                return Err(format!("best bound returns to {best} at N = {n}"));
            }
            labels.push(best);
        }
    }
    let path: Vec<String> = labels.iter().map(|b| b.to_string()).collect();
    Ok(format!("{rows} rows, 4 thread counts, regime path {}", path.join(" → ")))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Check); 11] = [
        (1, "backend equivalence", Duration::from_secs(300), c1_backend_equivalence),
        (2, "closed-form J(2,2,V) = 2V²−V", Duration::from_secs(60), c2_closed_form),
        (3, "mod/integer agreement", Duration::from_secs(120), c3_mod_integer_agreement),
        (4, "sign/target domination", Duration::from_secs(600), c4_sign_domination),
        (5, "shift decomposition identity", Duration::from_secs(600), c5_shift_identity),
        (6, "complete-sum Weil bound", Duration::from_secs(300), c6_weil),
        (7, "Parseval identity", Duration::from_secs(300), c7_parseval),
        (8, "Vandermonde pairing", Duration::from_secs(600), c8_vandermonde),
        (9, "parameter invariants", Duration::from_secs(60), c9_parameters),
        (10, "calibration regression", Duration::from_secs(600), c10_calibration),
        (11, "sweep sanity", Duration::from_secs(600), c11_sweep_sanity),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > limit => Err(format!("{msg}; took {took:.1?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(msg) => println!("criterion {id:>2} PASS  {name}: {msg} ({took:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {msg} ({took:.2?})");
            }
        }
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
