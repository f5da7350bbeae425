use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gausslab::bounds::compare_bounds;
use gausslab::counters::{
    count_ikl, count_jrk_integer, count_jrk_mod, count_mult_congruence, count_system, spec_file::parse_system,
    Backend, CountOptions, CountReport,
};
use gausslab::expsum::{incomplete_power_sum, max_abs_over_coeffs, SumSpec};
use gausslab::harness::calibration;
use gausslab::harness::sweep::{parse_primes, parse_u64_list, OutputFormat};
use gausslab::harness::{
    caps_with, init_threads, run_sweep, run_verify, sum_row, HarnessError, LengthRule, ScanMode, Suite, SweepConfig,
    VerifyParams,
};

#[derive(Parser)]
#[command(name = "gausslab", version, about = "Incomplete Gauss sums, mean value counts and bounds")]
struct Cli {
    /// Worker threads (default: GAUSSLAB_THREADS, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Line-delimited JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate Σ_{M<n≤M+N} e_q(a n^k) and every bound for the instance
    Sum(SumArgs),
    /// Exact solution counts
    Count {
        #[command(subcommand)]
        which: CountCommand,
    },
    /// Bound values, validity and the best regime for (q, k, N)
    Bounds(BoundsArgs),
    /// Run a verification suite
    Verify(VerifyArgs),
    /// Sweep a (q, k, N) grid into CSV or JSON rows
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SumArgs {
    #[arg(long)]
    q: u64,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    a: i128,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    m: i128,
    #[arg(long, allow_negative_numbers = true)]
    n: i128,
    /// Maximise |S| over 1 ≤ a < q instead of using --a
    #[arg(long)]
    max_over_a: bool,
}

#[derive(Args, Clone, Copy)]
struct CountFlags {
    /// Recount with naive enumeration and fail on any disagreement
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    backend: BackendArg,
    /// Most tuples one enumeration pass may visit
    #[arg(long)]
    max_enum: Option<u128>,
    /// Most entries in the meet-in-the-middle table
    #[arg(long)]
    max_table: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy)]
enum BackendArg {
    Auto,
    Naive,
    Mitm,
}

#[derive(Subcommand)]
enum CountCommand {
    /// J_{r,k}(V) over the integers
    Jr {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        v: u64,
        #[command(flatten)]
        flags: CountFlags,
    },
    /// J_{r,k}(V; q), the same system mod q
    Jrq {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        v: u64,
        #[arg(long)]
        q: u64,
        #[command(flatten)]
        flags: CountFlags,
    },
    /// I_{k,ℓ}(N, U), the mixed-monomial system
    Ikl {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        u: u64,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        m: i64,
        #[command(flatten)]
        flags: CountFlags,
    },
    /// n_1 u_1 ≡ n_2 u_2 (mod q)
    Mult {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        u: u64,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        m: i64,
        #[command(flatten)]
        flags: CountFlags,
    },
    /// A system read from a spec file
    Generic {
        #[arg(long)]
        spec: PathBuf,
        /// Also print the solution tuples (naive backend)
        #[arg(long)]
        collect: bool,
        #[command(flatten)]
        flags: CountFlags,
    },
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    q: u64,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    n: u64,
    /// Also report the saving ρ for this ε
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long)]
    qmax: Option<u64>,
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long)]
    max_enum: Option<u128>,
    #[arg(long)]
    max_table: Option<u64>,
    /// Where `--suite calibrate` writes the fixture (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Config file; the flags below are used when it is absent
    #[arg(long)]
    config: Option<PathBuf>,
    /// `101,103` or `100..200`
    #[arg(long)]
    primes: Option<String>,
    #[arg(long)]
    degrees: Option<String>,
    /// Absolute window lengths
    #[arg(long)]
    lengths: Option<String>,
    /// N = ⌈q^e⌉ for each listed e
    #[arg(long)]
    exponents: Option<String>,
    #[arg(long)]
    a: Option<i128>,
    /// Maximise over the coefficient a
    #[arg(long)]
    max_over_a: bool,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    start: i128,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    // sweep sets up the pool itself once its config is read
    if !matches!(cli.command, Command::Sweep(_)) {
        init_threads(cli.threads)?;
    }
    let json = cli.json;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Sum(args) => run_sum(args, json, &mut out),
        Command::Count { which } => run_count(which, json, &mut out),
        Command::Bounds(args) => run_bounds(args, json, &mut out),
        Command::Verify(args) => run_verify_cmd(args, json, &mut out),
        Command::Sweep(args) => run_sweep_cmd(args, cli.threads, json, &mut out),
    }
}

fn run_sum(args: SumArgs, json: bool, out: &mut dyn Write) -> Result<ExitCode, HarnessError> {
    let (spec, value) = if args.max_over_a {
        if args.n < 0 {
            return Err(HarnessError::Usage(format!("window length N must be nonnegative (got {})", args.n)));
        }
        let best = max_abs_over_coeffs(args.k, args.q, args.m, args.n as u64)?;
        (SumSpec::new(best.witness, args.k, args.q, args.m, args.n)?, best.sum)
    } else {
        let spec = SumSpec::new(args.a, args.k, args.q, args.m, args.n)?;
        (spec, incomplete_power_sum(&spec))
    };
    let row = sum_row(&spec, value)?;
    if json {
        writeln!(out, "{}", row.to_json())?;
    } else {
        write!(out, "{}", row.to_text())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn count_options(flags: &CountFlags, collect: bool) -> Result<CountOptions, HarnessError> {
    Ok(CountOptions {
        caps: caps_with(flags.max_enum, flags.max_table)?,
        backend: match flags.backend {
            BackendArg::Auto => Backend::Auto,
            BackendArg::Naive => Backend::Naive,
            BackendArg::Mitm => Backend::MeetInTheMiddle,
        },
        collect,
    })
}

fn run_count(which: CountCommand, json: bool, out: &mut dyn Write) -> Result<ExitCode, HarnessError> {
    let (flags, collect) = match &which {
        CountCommand::Jr { flags, .. }
        | CountCommand::Jrq { flags, .. }
        | CountCommand::Ikl { flags, .. }
        | CountCommand::Mult { flags, .. } => (*flags, false),
        CountCommand::Generic { flags, collect, .. } => (*flags, *collect),
    };
    let opts = count_options(&flags, collect)?;
    let generic = match &which {
        CountCommand::Generic { spec, .. } => {
            let text = std::fs::read_to_string(spec)
                .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", spec.display())))?;
            Some(parse_system(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", spec.display())))?)
        }
        _ => None,
    };
    let count = |o: &CountOptions| -> Result<CountReport, HarnessError> {
        Ok(match &which {
            CountCommand::Jr { r, k, v, .. } => count_jrk_integer(*r, *k, *v, o)?,
            CountCommand::Jrq { r, k, v, q, .. } => count_jrk_mod(*r, *k, *v, *q, o)?,
            CountCommand::Ikl { k, ell, q, n, u, m, .. } => count_ikl(*k, *ell, *m, *n, *u, *q, o)?,
            CountCommand::Mult { q, n, u, m, .. } => count_mult_congruence(*m, *n, *u, *q, o)?,
            CountCommand::Generic { .. } => count_system(generic.as_ref().expect("parsed above"), o)?,
        })
    };
    let report = count(&opts)?;
    let oracle = if flags.oracle {
        let naive = CountOptions {
            backend: Backend::Naive,
            collect: false,
            ..opts
        };
        let check = count(&naive)?;
        if check.count != report.count {
            return Err(HarnessError::Failure(format!(
                "oracle recount disagrees: {} ({}) vs {} (naive)",
                report.count, report.method, check.count
            )));
        }
        Some(check.count)
    } else {
        None
    };
    eprintln!("elapsed: {:.3?}", report.elapsed);
    if json {
        let mut v = serde_json::to_value(&report).expect("reports serialise");
        if let Some(c) = oracle {
            v["oracle"] = json!(c);
        }
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "count = {}", report.count)?;
        writeln!(out, "method = {}", report.method)?;
        if let Some(c) = oracle {
            writeln!(out, "oracle = {c}")?;
        }
        for h in &report.hypotheses {
            writeln!(out, "hypothesis = {h}")?;
        }
        if let Some(sols) = &report.solutions {
            for s in sols {
                let t: Vec<String> = s.iter().map(|p| p.to_string()).collect();
                writeln!(out, "solution = {}", t.join(" "))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_bounds(args: BoundsArgs, json: bool, out: &mut dyn Write) -> Result<ExitCode, HarnessError> {
    let r = compare_bounds(args.q, args.k, args.n, args.eps)?;
    let params = gausslab::bounds::derive_parameters(args.k, args.q, args.n.max(1))?;
    let crossover = gausslab::bounds::improvement_crossover(args.k).ok();
    let range = args.eps.map(|e| gausslab::bounds::nontrivial_range(args.k, e)).transpose()?;
    if json {
        let v = json!({
            "q": r.q, "k": r.k, "N": r.n,
            "thm1": r.thm1.value, "thm1_valid": r.thm1.valid,
            "weyl": r.weyl.value, "weyl_valid": r.weyl.valid,
            "weil": r.weil, "weil_complete": r.weil_complete,
            "trivial": r.trivial, "best": r.best,
            "eps": r.epsilon, "rho": r.rho,
            "range_exponent": range.map(|x| x.0),
            "crossover": crossover,
            "params": params,
        });
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "q = {}\nk = {}\nN = {}", r.q, r.k, r.n)?;
        writeln!(out, "thm1 = {} (valid: {})", r.thm1.value, r.thm1.valid)?;
        writeln!(out, "weyl = {} (valid: {})", r.weyl.value, r.weyl.valid)?;
        writeln!(out, "weil = {}", r.weil)?;
        writeln!(out, "weil_complete = {}", r.weil_complete)?;
        writeln!(out, "trivial = {}", r.trivial)?;
        writeln!(out, "best = {}", r.best)?;
        if let (Some(e), Some((x, rho))) = (r.epsilon, range) {
            writeln!(out, "nontrivial for N ≥ q^{x} with eps = {e}, saving rho = {rho}")?;
        }
        if let Some(c) = crossover {
            writeln!(out, "crossover exponent = {} (empty: {})", c.exponent, c.empty)?;
        }
        writeln!(
            out,
            "ell = {}, m = {}, r = {}, U = {}, V = {}",
            params.ell, params.m, params.r, params.u, params.v
        )?;
        for h in &params.unmet_hypotheses {
            writeln!(out, "hypothesis = {h}")?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify_cmd(args: VerifyArgs, json: bool, out: &mut dyn Write) -> Result<ExitCode, HarnessError> {
    let suite: Suite = args.suite.parse()?;
    let params = VerifyParams {
        seed: args.seed,
        cases: args.cases,
        qmax: args.qmax,
        kmax: args.kmax,
        caps: caps_with(args.max_enum, args.max_table)?,
    };
    let outcome = run_verify(suite, &params)?;
    eprintln!("elapsed: {:.3?}", outcome.elapsed);
    if suite == Suite::Calibrate && outcome.passed() {
        let csv = calibration::to_csv(&calibration::calibrate(&params.caps)?);
        match &args.out {
            Some(path) => std::fs::write(path, csv)?,
            None if !json => write!(out, "{csv}")?,
            None => {}
        }
    }
    if json {
        writeln!(out, "{}", serde_json::to_string(&outcome).expect("outcomes serialise"))?;
    } else {
        write!(out, "{}", outcome.render_text())?;
    }
    Ok(if outcome.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_sweep_cmd(args: SweepArgs, threads: Option<usize>, json: bool, out: &mut dyn Write) -> Result<ExitCode, HarnessError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
            SweepConfig::parse(&text)?
        }
        None => {
            let need = |v: &Option<String>, what: &str| {
                v.clone().ok_or_else(|| HarnessError::Usage(format!("--{what} is required without --config")))
            };
            let lengths = match (&args.lengths, &args.exponents) {
                (Some(l), None) => LengthRule::Absolute(parse_u64_list("lengths", l)?),
                (None, Some(e)) => LengthRule::Exponents(
                    e.split(',')
                        .map(|t| t.trim().parse().map_err(|_| HarnessError::Usage(format!("bad exponent `{t}`"))))
                        .collect::<Result<_, _>>()?,
                ),
                _ => return Err(HarnessError::Usage("give exactly one of --lengths and --exponents".into())),
            };
            if args.max_over_a && args.a.is_some() {
                return Err(HarnessError::Usage("--a and --max-over-a are exclusive".into()));
            }
            let config = SweepConfig {
                primes: parse_primes(&need(&args.primes, "primes")?)?,
                degrees: parse_u64_list("degrees", &need(&args.degrees, "degrees")?)?
                    .into_iter()
                    .map(|k| u32::try_from(k).map_err(|_| HarnessError::Usage("degree too large".into())))
                    .collect::<Result<_, _>>()?,
                lengths,
                scan: if args.max_over_a {
                    ScanMode::MaxOverCoefficients
                } else {
                    ScanMode::Fixed(args.a.unwrap_or(1))
                },
                start: args.start,
                ..SweepConfig::default()
            };
            config.validate()?;
            config
        }
    };
    if let Some(path) = args.out {
        config.output = Some(path);
    }
    if json {
        config.format = OutputFormat::Json;
    }
    // --threads beats the config, which beats GAUSSLAB_THREADS
    init_threads(threads.or(config.threads))?;
    let rows = match &config.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            run_sweep(&config, &mut w)?
        }
        None => run_sweep(&config, out)?,
    };
    eprintln!("rows: {rows}");
    Ok(ExitCode::SUCCESS)
}
