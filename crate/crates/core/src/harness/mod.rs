//! Verification suites, parameter sweeps, calibration, and the report
//! formats shared by the `gausslab` binary.
//!
//! Every report is available as text or as line-delimited JSON. Timing goes
//! to stderr so that stdout depends only on the inputs.

pub mod calibration;
pub mod report;
pub mod suites;
pub mod sweep;

use std::fmt;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::bounds::BoundsError;
use crate::counters::{Caps, CountError};
use crate::expsum::ExpSumError;
use crate::modarith::ModArithError;

pub use report::{sum_row, SumRow, CSV_HEADER};
pub use suites::{run_verify, Suite, VerifyParams};
pub use sweep::{run_sweep, LengthRule, ScanMode, SweepConfig};

/// Errors surfaced by the harness, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags, config or input values.
    #[error("{0}")]
    Usage(String),
    /// A resource cap was hit.
    #[error("{0}")]
    Cap(String),
    /// A check failed.
    #[error("{0}")]
    Failure(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl From<ModArithError> for HarnessError {
    fn from(e: ModArithError) -> Self {
        match e {
            ModArithError::NotPrime(_) => HarnessError::Usage("q must be prime".into()),
            other => HarnessError::Usage(other.to_string()),
        }
    }
}

impl From<ExpSumError> for HarnessError {
    fn from(e: ExpSumError) -> Self {
        match e {
            ExpSumError::Modulus(m) => m.into(),
            other => HarnessError::Usage(other.to_string()),
        }
    }
}

impl From<BoundsError> for HarnessError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Modulus(m) => m.into(),
            other => HarnessError::Usage(other.to_string()),
        }
    }
}

impl From<CountError> for HarnessError {
    fn from(e: CountError) -> Self {
        match e {
            CountError::Modulus(m) => m.into(),
            CountError::EnumerationCap { .. } | CountError::MemoryCap { .. } => HarnessError::Cap(e.to_string()),
            CountError::Overflow => HarnessError::Failure(e.to_string()),
            CountError::InvalidSystem(_) | CountError::InvalidParameters(_) => HarnessError::Usage(e.to_string()),
        }
    }
}

/// One failed check: what was run, what should have come out, what did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub input: String,
    pub expected: String,
    pub got: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected {}, got {}", self.input, self.expected, self.got)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub suite: Suite,
    pub cases: u64,
    pub violations: Vec<Violation>,
    /// Informational lines (flagged hypotheses, observed maxima).
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "suite={} cases={} violations={} status={}\n",
            self.suite,
            self.cases,
            self.violations.len(),
            if self.passed() { "pass" } else { "fail" }
        );
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        for v in &self.violations {
            out.push_str(&format!("violation: {v}\n"));
        }
        out
    }
}

/// Worker count: the explicit value, else `GAUSSLAB_THREADS`, else the
/// machine's parallelism.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize, HarnessError> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(HarnessError::Usage("thread count must be positive".into()))
        } else {
            Ok(n)
        };
    }
    if let Ok(v) = std::env::var("GAUSSLAB_THREADS") {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HarnessError::Usage(format!("GAUSSLAB_THREADS must be a positive integer, got `{v}`"))),
        };
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Installs the global worker pool. Later calls are ignored.
pub fn init_threads(flag: Option<usize>) -> Result<usize, HarnessError> {
    let n = resolve_threads(flag)?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(n)
}

/// Caps with the harness defaults, optionally overridden.
pub fn caps_with(enumeration: Option<u128>, table_entries: Option<u64>) -> Result<Caps, HarnessError> {
    let mut caps = Caps::default();
    if let Some(e) = enumeration {
        if e == 0 {
            return Err(HarnessError::Usage("enumeration cap must be positive".into()));
        }
        caps.enumeration = e;
    }
    if let Some(t) = table_entries {
        if t == 0 {
            return Err(HarnessError::Usage("table cap must be positive".into()));
        }
        caps.table_entries = t;
    }
    Ok(caps)
}
