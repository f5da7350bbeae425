//! Grid sweeps over `(q, k, N)` writing one [`SumRow`] per cell.
//!
//! Config files are flat `key = value` lines (`#` comments):
//!
//! ```text
//! primes      = 101, 103 | 100..200      # list, or every prime in a range
//! degrees     = 3, 4, 5 | 3..8
//! lengths     = 10, 50, 100              # absolute N; or
//! exponents   = 0.3, 0.5, 1.0            # N = ⌈q^e⌉ (exactly one of the two)
//! scan        = fixed | max              # max: maximise |S| over 1 ≤ a < q
//! a           = 1                        # coefficient for scan = fixed
//! start       = 0                        # window start M
//! output      = sweep.csv                # omit for stdout
//! format      = csv | json
//! max_evaluations = 17179869184         # phase evaluations per row
//! max_rows    = 1000000
//! max_seconds = 600
//! threads     = 4
//! ```

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::bounds::xprec::DD;
use crate::expsum::{incomplete_power_sum, max_abs_over_coeffs, SumSpec};
use crate::modarith::is_prime;

use super::report::{sum_row, SumRow, CSV_HEADER};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum LengthRule {
    Absolute(Vec<u64>),
    /// `N = ⌈q^e⌉`
    Exponents(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    Fixed(i128),
    MaxOverCoefficients,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub primes: Vec<u64>,
    pub degrees: Vec<u32>,
    pub lengths: LengthRule,
    pub scan: ScanMode,
    pub start: i128,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub max_evaluations: u128,
    pub max_rows: u64,
    pub max_time: Duration,
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            primes: Vec::new(),
            degrees: Vec::new(),
            lengths: LengthRule::Absolute(Vec::new()),
            scan: ScanMode::Fixed(1),
            start: 0,
            output: None,
            format: OutputFormat::Csv,
            max_evaluations: 1 << 34,
            max_rows: 1_000_000,
            max_time: Duration::from_secs(3600),
            threads: None,
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Usage(msg.into()))
}

fn parse_num<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, HarnessError> {
    s.trim()
        .parse()
        .or_else(|_| usage(format!("bad value for {what}: `{}`", s.trim())))
}

/// `a, b, c` or `lo..hi` (inclusive).
pub fn parse_u64_list(what: &str, s: &str) -> Result<Vec<u64>, HarnessError> {
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi): (u64, u64) = (parse_num(what, lo)?, parse_num(what, hi)?);
        if lo > hi {
            return usage(format!("empty range for {what}"));
        }
        if hi - lo > 10_000_000 {
            return usage(format!("range for {what} is too long"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|t| parse_num(what, t)).collect()
}

/// Primes from a list (each must be prime) or every prime in a range.
pub fn parse_primes(s: &str) -> Result<Vec<u64>, HarnessError> {
    let values = parse_u64_list("primes", s)?;
    if s.contains("..") {
        return Ok(values.into_iter().filter(|&q| is_prime(q)).collect());
    }
    match values.iter().find(|&&q| !is_prime(q)) {
        Some(_) => usage("q must be prime"),
        None => Ok(values),
    }
}

fn parse_f64_list(what: &str, s: &str) -> Result<Vec<f64>, HarnessError> {
    s.split(',').map(|t| parse_num(what, t)).collect()
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut c = SweepConfig::default();
        let mut seen = std::collections::HashSet::new();
        let mut a = None;
        let mut scan_max = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!("line {}: expected `key = value`", i + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return usage(format!("line {}: duplicate key `{key}`", i + 1));
            }
            match key {
                "primes" => c.primes = parse_primes(value)?,
                "degrees" => {
                    c.degrees = parse_u64_list(key, value)?
                        .into_iter()
                        .map(|k| u32::try_from(k).or_else(|_| usage("degree too large")))
                        .collect::<Result<_, _>>()?
                }
                "lengths" => c.lengths = LengthRule::Absolute(parse_u64_list(key, value)?),
                "exponents" => c.lengths = LengthRule::Exponents(parse_f64_list(key, value)?),
                "scan" => {
                    scan_max = match value {
                        "fixed" => false,
                        "max" => true,
                        other => return usage(format!("line {}: scan must be `fixed` or `max`, got `{other}`", i + 1)),
                    }
                }
                "a" => a = Some(parse_num::<i128>(key, value)?),
                "start" => c.start = parse_num(key, value)?,
                "output" => c.output = Some(PathBuf::from(value)),
                "format" => {
                    c.format = match value {
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        other => return usage(format!("line {}: unknown format `{other}`", i + 1)),
                    }
                }
                "max_evaluations" => c.max_evaluations = parse_num(key, value)?,
                "max_rows" => c.max_rows = parse_num(key, value)?,
                "max_seconds" => c.max_time = Duration::from_secs_f64(parse_num::<f64>(key, value)?.max(0.0)),
                "threads" => c.threads = Some(parse_num(key, value)?),
                other => return usage(format!("line {}: unknown key `{other}`", i + 1)),
            }
        }
        if seen.contains("lengths") && seen.contains("exponents") {
            return usage("give either `lengths` or `exponents`, not both");
        }
        if scan_max && a.is_some() {
            return usage("`a` only applies to scan = fixed");
        }
        c.scan = if scan_max {
            ScanMode::MaxOverCoefficients
        } else {
            ScanMode::Fixed(a.unwrap_or(1))
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.primes.is_empty() {
            return usage("no primes to sweep");
        }
        if let Some(q) = self.primes.iter().find(|&&q| !is_prime(q)) {
            return usage(format!("q must be prime (got {q})"));
        }
        if self.degrees.is_empty() {
            return usage("no degrees to sweep");
        }
        if self.degrees.contains(&0) {
            return usage("degrees must be at least 1");
        }
        match &self.lengths {
            LengthRule::Absolute(v) if v.is_empty() => return usage("no window lengths"),
            LengthRule::Exponents(v) if v.is_empty() => return usage("no window exponents"),
            LengthRule::Exponents(v) if v.iter().any(|e| !(e.is_finite() && *e >= 0.0)) => {
                return usage("exponents must be finite and nonnegative")
            }
            _ => {}
        }
        if self.max_evaluations == 0 || self.max_rows == 0 || self.max_time.is_zero() {
            return usage("all caps must be positive");
        }
        if self.threads == Some(0) {
            return usage("threads must be positive");
        }
        if let ScanMode::Fixed(a) = self.scan {
            if let Some(q) = self.primes.iter().find(|&&q| a.rem_euclid(q as i128) == 0) {
                return usage(format!("a = {a} is divisible by q = {q}"));
            }
        }
        Ok(())
    }

    /// Window lengths for one prime, ascending and deduplicated.
    pub fn lengths_for(&self, q: u64) -> Vec<u64> {
        let mut out: Vec<u64> = match &self.lengths {
            LengthRule::Absolute(v) => v.clone(),
            LengthRule::Exponents(v) => v.iter().map(|&e| ceil_power(q, e)).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Every `(q, k, N)` cell in output order.
    pub fn cells(&self) -> Vec<(u64, u32, u64)> {
        let mut primes = self.primes.clone();
        primes.sort_unstable();
        primes.dedup();
        let mut degrees = self.degrees.clone();
        degrees.sort_unstable();
        degrees.dedup();
        let mut out = Vec::new();
        for &q in &primes {
            let lengths = self.lengths_for(q);
            for &k in &degrees {
                out.extend(lengths.iter().map(|&n| (q, k, n)));
            }
        }
        out
    }
}

/// `⌈q^e⌉`, at least 1.
pub fn ceil_power(q: u64, e: f64) -> u64 {
    if e == 0.0 {
        return 1;
    }
    if e == 1.0 {
        return q;
    }
    let v = DD::from_u64(q).powf(DD::from_f64(e)).to_f64();
    (v.ceil() as u64).max(1)
}

/// Computes one row.
pub fn sweep_row(q: u64, k: u32, n: u64, scan: ScanMode, start: i128) -> Result<SumRow, HarnessError> {
    match scan {
        ScanMode::Fixed(a) => {
            let spec = SumSpec::new(a, k, q, start, n as i128)?;
            Ok(sum_row(&spec, incomplete_power_sum(&spec))?)
        }
        ScanMode::MaxOverCoefficients => {
            let best = max_abs_over_coeffs(k, q, start, n)?;
            let spec = SumSpec::new(best.witness, k, q, start, n as i128)?;
            Ok(sum_row(&spec, best.sum)?)
        }
    }
}

/// Runs the sweep, writing rows to `out` (the caller opens `config.output`).
/// Returns the number of rows written.
pub fn run_sweep(config: &SweepConfig, out: &mut dyn Write) -> Result<u64, HarnessError> {
    config.validate()?;
    let cells = config.cells();
    if cells.len() as u64 > config.max_rows {
        return Err(HarnessError::Cap(format!(
            "sweep has {} rows, cap {}",
            cells.len(),
            config.max_rows
        )));
    }
    for &(q, _, n) in &cells {
        let per_row = match config.scan {
            ScanMode::Fixed(_) => n as u128,
            ScanMode::MaxOverCoefficients => (q as u128 - 1) * n as u128,
        };
        if per_row > config.max_evaluations {
            return Err(HarnessError::Cap(format!(
                "row q = {q}, N = {n} needs {per_row} evaluations, cap {}",
                config.max_evaluations
            )));
        }
    }
    let started = Instant::now();
    if config.format == OutputFormat::Csv {
        writeln!(out, "{CSV_HEADER}")?;
    }
    let mut rows = 0;
    for (q, k, n) in cells {
        if started.elapsed() > config.max_time {
            return Err(HarnessError::Cap(format!(
                "time cap of {:?} exceeded after {rows} rows",
                config.max_time
            )));
        }
        let row = sweep_row(q, k, n, config.scan, config.start)?;
        match config.format {
            OutputFormat::Csv => writeln!(out, "{}", row.to_csv())?,
            OutputFormat::Json => writeln!(out, "{}", row.to_json())?,
        }
        rows += 1;
    }
    out.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(c: &SweepConfig) -> String {
        let mut buf = Vec::new();
        run_sweep(c, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn parses_config() {
        let c = SweepConfig::parse(
            "# demo\nprimes = 100..110\ndegrees = 3, 5\nexponents = 0.5, 1.0\nscan = max\nmax_rows = 50\n",
        )
        .unwrap();
        assert_eq!(c.primes, vec![101, 103, 107, 109]);
        assert_eq!(c.degrees, vec![3, 5]);
        assert_eq!(c.scan, ScanMode::MaxOverCoefficients);
        assert_eq!(c.lengths_for(101), vec![11, 101]);
        assert_eq!(c.cells().len(), 16);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "primes = 101\ndegrees = 3\nlengths = 5\nbogus = 1\n",
            "primes = 100\ndegrees = 3\nlengths = 5\n",
            "primes = 101\ndegrees = 3\nlengths = 5\nexponents = 0.5\n",
            "primes = 101\ndegrees = 3\n",
            "primes = 101\ndegrees = 3\nlengths = 5\nmax_rows = 0\n",
            "primes = 101\ndegrees = 3\nlengths = 5\na = 202\n",
            "primes = 101\nprimes = 103\ndegrees = 3\nlengths = 5\n",
        ] {
            assert!(SweepConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn single_cell_row_is_within_trivial_bound() {
        let c = SweepConfig::parse("primes = 101\ndegrees = 3\nlengths = 50\n").unwrap();
        let out = run(&c);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        let abs: f64 = lines[1].split(',').nth(7).unwrap().parse().unwrap();
        assert!(abs <= 50.0);
    }

    #[test]
    fn row_order_and_caps() {
        let c = SweepConfig::parse("primes = 103, 101\ndegrees = 4, 3\nlengths = 20, 10\n").unwrap();
        let cells = c.cells();
        assert_eq!(cells[0], (101, 3, 10));
        assert_eq!(cells[1], (101, 3, 20));
        assert_eq!(cells[2], (101, 4, 10));
        assert_eq!(cells.last(), Some(&(103, 4, 20)));
        let mut capped = c.clone();
        capped.max_rows = 3;
        assert!(matches!(run_sweep(&capped, &mut Vec::new()), Err(HarnessError::Cap(_))));
        let mut capped = c;
        capped.scan = ScanMode::MaxOverCoefficients;
        capped.max_evaluations = 100;
        assert!(matches!(run_sweep(&capped, &mut Vec::new()), Err(HarnessError::Cap(_))));
    }

    #[test]
    fn ceil_power_examples() {
        assert_eq!(ceil_power(101, 1.0), 101);
        assert_eq!(ceil_power(101, 0.5), 11);
        assert_eq!(ceil_power(1009, 0.3), 8);
        assert_eq!(ceil_power(7, 0.0), 1);
    }
}
