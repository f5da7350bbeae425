//! Desk-scale constants for the multiplicative congruence count and the
//! mixed-monomial count.
//!
//! The ratios `count / (NU ln q)` and `count / ((NU)^ℓ (ln q)^{ℓ-1})` are
//! measured once over a fixed grid by `verify --suite calibrate` and frozen
//! into `fixtures/calibration.csv`. Later runs recount the grid and require
//! the exact same counts and ratios no larger than the frozen ones.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::counters::{count_ikl, count_mult_congruence, Caps, CountOptions};

use super::{HarnessError, Violation};

/// The frozen fixture shipped with the crate.
pub const FROZEN: &str = include_str!("../../fixtures/calibration.csv");

pub const FIXTURE_HEADER: &str = "lemma,q,k,ell,N,U,count,ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `n_1 u_1 ≡ n_2 u_2`
    Mult,
    /// `I_{k,ℓ}(N, U)`
    Ikl,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Mult => "mult",
            Family::Ikl => "ikl",
        })
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mult" => Ok(Family::Mult),
            "ikl" => Ok(Family::Ikl),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

/// One grid point; `k` and `ell` are 0 for [`Family::Mult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CalibrationCase {
    pub family: Family,
    pub q: u64,
    pub k: u32,
    pub ell: usize,
    pub n: u64,
    pub u: u64,
}

impl fmt::Display for CalibrationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Mult => write!(f, "mult q={} N={} U={}", self.q, self.n, self.u),
            Family::Ikl => write!(
                f,
                "ikl q={} k={} ell={} N={} U={}",
                self.q, self.k, self.ell, self.n, self.u
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub case: CalibrationCase,
    pub count: u128,
    pub ratio: f64,
}

fn window_ok(q: u64, n: u64, u: u64) -> bool {
    u <= n && n * u <= q
}

/// The shipped grid, in a fixed order.
pub fn grid() -> Vec<CalibrationCase> {
    let mut out = Vec::new();
    for q in [101u64, 211, 401, 1009] {
        for n in [4u64, 8, 16, 32] {
            for u in [1u64, 2, 4, 8] {
                if window_ok(q, n, u) {
                    out.push(CalibrationCase { family: Family::Mult, q, k: 0, ell: 0, n, u });
                }
            }
        }
    }
    let shapes: [(u32, usize, &[u64]); 6] = [
        (2, 1, &[31, 101]),
        (3, 1, &[31, 101]),
        (4, 1, &[31, 101]),
        (4, 2, &[31, 101]),
        (5, 2, &[31, 101]),
        (6, 3, &[37]),
    ];
    for (k, ell, primes) in shapes {
        let (ns, us): (&[u64], &[u64]) = if ell == 3 { (&[3, 4], &[1, 2]) } else { (&[2, 3, 4, 6], &[1, 2, 3]) };
        for &q in primes {
            for &n in ns {
                for &u in us {
                    if window_ok(q, n, u) {
                        out.push(CalibrationCase { family: Family::Ikl, q, k, ell, n, u });
                    }
                }
            }
        }
    }
    out
}

/// The normalising denominator for a case.
pub fn scale(case: &CalibrationCase) -> f64 {
    let nu = (case.n * case.u) as f64;
    let lq = (case.q as f64).ln();
    match case.family {
        Family::Mult => nu * lq,
        Family::Ikl => nu.powi(case.ell as i32) * lq.powi(case.ell as i32 - 1),
    }
}

pub fn measure(case: &CalibrationCase, caps: &Caps) -> Result<CalibrationEntry, HarnessError> {
    let opts = CountOptions { caps: *caps, ..Default::default() };
    let count = match case.family {
        Family::Mult => count_mult_congruence(0, case.n, case.u, case.q, &opts)?.count,
        Family::Ikl => count_ikl(case.k, case.ell, 0, case.n, case.u, case.q, &opts)?.count,
    };
    Ok(CalibrationEntry {
        case: *case,
        count,
        ratio: count as f64 / scale(case),
    })
}

pub fn calibrate(caps: &Caps) -> Result<Vec<CalibrationEntry>, HarnessError> {
    grid().iter().map(|c| measure(c, caps)).collect()
}

pub fn to_csv(entries: &[CalibrationEntry]) -> String {
    let mut out = format!("{FIXTURE_HEADER}\n");
    for e in entries {
        let c = &e.case;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.family, c.q, c.k, c.ell, c.n, c.u, e.count, e.ratio
        ));
    }
    out
}

pub fn parse_fixture(text: &str) -> Result<Vec<CalibrationEntry>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == FIXTURE_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(format!("fixture line {}: expected 8 fields", i + 1));
        }
        let bad = |what: &str| format!("fixture line {}: bad {what}", i + 1);
        out.push(CalibrationEntry {
            case: CalibrationCase {
                family: f[0].parse()?,
                q: f[1].parse().map_err(|_| bad("q"))?,
                k: f[2].parse().map_err(|_| bad("k"))?,
                ell: f[3].parse().map_err(|_| bad("ell"))?,
                n: f[4].parse().map_err(|_| bad("N"))?,
                u: f[5].parse().map_err(|_| bad("U"))?,
            },
            count: f[6].parse().map_err(|_| bad("count"))?,
            ratio: f[7].parse().map_err(|_| bad("ratio"))?,
        });
    }
    Ok(out)
}

/// Largest frozen ratio per family.
pub fn ceilings(frozen: &[CalibrationEntry]) -> Vec<(Family, f64)> {
    let mut out: Vec<(Family, f64)> = Vec::new();
    for e in frozen {
        match out.iter_mut().find(|(f, _)| *f == e.case.family) {
            Some((_, r)) => *r = r.max(e.ratio),
            None => out.push((e.case.family, e.ratio)),
        }
    }
    out.sort_by_key(|(f, _)| *f);
    out
}

/// Recounts every grid case of `family` against `frozen`.
pub fn regression(
    family: Family,
    frozen: &[CalibrationEntry],
    caps: &Caps,
) -> Result<(u64, Vec<Violation>), HarnessError> {
    let mut cases = 0;
    let mut violations = Vec::new();
    for case in grid().into_iter().filter(|c| c.family == family) {
        cases += 1;
        let got = measure(&case, caps)?;
        match frozen.iter().find(|e| e.case == case) {
            None => violations.push(Violation {
                input: case.to_string(),
                expected: "a frozen calibration entry".into(),
                got: "none".into(),
            }),
            Some(f) => {
                if got.count != f.count {
                    violations.push(Violation {
                        input: case.to_string(),
                        expected: format!("count {}", f.count),
                        got: format!("count {}", got.count),
                    });
                }
                if got.ratio > f.ratio {
                    violations.push(Violation {
                        input: case.to_string(),
                        expected: format!("ratio ≤ {}", f.ratio),
                        got: format!("ratio {}", got.ratio),
                    });
                }
            }
        }
    }
    Ok((cases, violations))
}
