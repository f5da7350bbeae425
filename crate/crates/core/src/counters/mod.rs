//! Exact solution counts for systems of the shape
//! `Σ_{i=1}^{2ℓ} σ_i f_j(x_i) ≡ λ_j (mod q)`, `j = 1..m`, and for the
//! specialised mean value systems built on top of that shape.
//!
//! Two backends are available. The naive one walks all `|X|^{2ℓ}` tuples.
//! Meet-in-the-middle tabulates the partial sums of the first half and
//! counts collisions with the (negated) second half, at `O(|X|^ℓ)` time and
//! memory. Counts are `u128` and checked; overflow is an error.

mod engine;
pub mod spec_file;
mod specialized;
mod system;

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::modarith::ModArithError;

pub use specialized::{
    count_ikl, count_jrk_integer, count_jrk_mod, count_mult_congruence, ikl_system, jrk_system,
    parseval_check, shift_decomposition_check, vandermonde_pair_property, ParsevalReport,
    ShiftDecomposition, ShiftStatus, VandermondeReport,
};
pub use system::{
    pair_grid, scalar_range, CongruenceSystem, Modulus, Monomial, Point, SystemFunction,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error(transparent)]
    Modulus(#[from] ModArithError),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("enumeration cap exceeded: {} tuples needed, cap {cap}", needed.map(|n| n.to_string()).unwrap_or_else(|| "more than 2^128".into()))]
    EnumerationCap { needed: Option<u128>, cap: u128 },
    #[error("memory cap exceeded: {needed} table entries needed, cap {cap}")]
    MemoryCap { needed: u128, cap: u64 },
    #[error("integer overflow while evaluating the system")]
    Overflow,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// Resource limits for a count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Most tuples a single enumeration pass may visit.
    pub enumeration: u128,
    /// Most left-half tuples the collision table may hold.
    pub table_entries: u64,
    /// Most witnesses kept when collecting solutions.
    pub solutions: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enumeration: 1 << 36,
            table_entries: 1 << 24,
            solutions: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Naive,
    MeetInTheMiddle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::MeetInTheMiddle => "meet-in-the-middle",
        })
    }
}

/// Which backend to use. `Auto` prefers meet-in-the-middle and falls back
/// to naive enumeration when the table would exceed its cap, or when
/// witnesses are requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Auto,
    Naive,
    MeetInTheMiddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountOptions {
    pub caps: Caps,
    pub backend: Backend,
    pub collect: bool,
}

impl CountOptions {
    pub fn with_backend(backend: Backend) -> Self {
        CountOptions {
            backend,
            ..Default::default()
        }
    }
}

/// A hypothesis of the underlying estimate that the instance does not meet.
/// The count is still exact; the flag only says the estimate does not apply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesisViolation(pub String);

impl fmt::Display for HypothesisViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub count: u128,
    pub method: Method,
    /// Present only when collection was requested and `count ≤ caps.solutions`.
    pub solutions: Option<Vec<Vec<Point>>>,
    #[serde(skip)]
    pub elapsed: Duration,
    pub hypotheses: Vec<HypothesisViolation>,
}

/// Naive full enumeration, optionally collecting witness tuples.
pub fn count_generic(
    system: &CongruenceSystem,
    collect: bool,
    caps: &Caps,
) -> Result<CountReport, CountError> {
    let start = Instant::now();
    let p = engine::Prepared::new(system)?;
    let (count, solutions) = if collect {
        let cap = caps.solutions;
        let domain = system.domain();
        let (count, list) = engine::fold_solutions(
            &p,
            caps,
            || (0u128, Vec::new()),
            |acc: &mut (u128, Vec<Vec<Point>>), idx| {
                acc.0 += 1;
                if acc.1.len() <= cap {
                    acc.1.push(idx.iter().map(|&i| domain[i]).collect());
                }
            },
            |mut a, b| {
                a.0 += b.0;
                if a.1.len() <= cap {
                    a.1.extend(b.1);
                }
                a
            },
        )?;
        let list = (count <= cap as u128).then_some(list);
        (count, list)
    } else {
        (engine::count_naive(&p, caps)?, None)
    };
    Ok(CountReport {
        count,
        method: Method::Naive,
        solutions,
        elapsed: start.elapsed(),
        hypotheses: Vec::new(),
    })
}

/// Meet-in-the-middle count; errors with [`CountError::MemoryCap`] when the
/// half-enumeration table would be too large.
pub fn count_generic_mitm(system: &CongruenceSystem, caps: &Caps) -> Result<CountReport, CountError> {
    let start = Instant::now();
    let p = engine::Prepared::new(system)?;
    let counter = engine::MitmCounter::new(&p, caps)?;
    let count = counter.count(&p.targets)?;
    Ok(CountReport {
        count,
        method: Method::MeetInTheMiddle,
        solutions: None,
        elapsed: start.elapsed(),
        hypotheses: Vec::new(),
    })
}

/// Dispatches on `options.backend`.
pub fn count_system(system: &CongruenceSystem, options: &CountOptions) -> Result<CountReport, CountError> {
    match options.backend {
        Backend::Naive => count_generic(system, options.collect, &options.caps),
        Backend::MeetInTheMiddle => count_generic_mitm(system, &options.caps),
        Backend::Auto if options.collect => count_generic(system, true, &options.caps),
        Backend::Auto => match count_generic_mitm(system, &options.caps) {
            Err(CountError::MemoryCap { .. }) => count_generic(system, false, &options.caps),
            other => other,
        },
    }
}

/// Counts one system against many target vectors, building the collision
/// table once. Targets are reduced mod `q` when the system has a modulus.
pub fn count_for_targets(
    system: &CongruenceSystem,
    targets: impl IntoIterator<Item = Vec<i128>>,
    caps: &Caps,
) -> Result<Vec<u128>, CountError> {
    let p = engine::Prepared::new(system)?;
    let counter = engine::MitmCounter::new(&p, caps)?;
    targets
        .into_iter()
        .map(|t| {
            if t.len() != p.m {
                return Err(CountError::InvalidSystem(format!(
                    "{} targets for {} equations",
                    t.len(),
                    p.m
                )));
            }
            let t: Vec<i128> = match system.modulus() {
                Modulus::Prime(q) => t.into_iter().map(|v| q.reduce(v) as i128).collect(),
                Modulus::Integers => t,
            };
            counter.count(&t)
        })
        .collect()
}
