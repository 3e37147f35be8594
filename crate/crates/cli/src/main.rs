//! `deconv` — run and inspect the nonsmooth blind deconvolution experiments
//! from the command line.
//!
//! Subcommands: `solve` (one seeded solver run), `phase-diagram` (the
//! recovery-frequency grid as CSV plus a text heat map), `population`
//! (closed-form / gradient / Monte Carlo evaluation of the population
//! objective), `classify` (stationary-point classification of a point file),
//! and `concentration` (empirical gap between sample and population
//! objectives as the sample size grows).
//!
//! Every command is a pure function of its flags: seeds are explicit and all
//! randomness is derived from them, so repeated invocations emit identical
//! bytes. Machine formats (CSV, JSON) carry 17 significant digits and parse
//! back to the exact binary floats; human summaries round to 6.
//!
//! A `--config FILE` flag may supply any option as `key = value` lines;
//! explicit command-line flags win. The `DECONV_THREADS` environment
//! variable caps the worker pool (results do not depend on it).
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 solver ran fine but failed
//! to recover the signal.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use deconv_core::{
    classify_population_point, classify_sample_point, concentration_gap, delta_rate, fmt::g17,
    generate_measurements, init_cube, init_gaussian, monte_carlo_population, phase_grid_csv,
    population_gradient_sv, population_value_sv, run_phase_grid, run_polyak, InitKind, PhaseCell,
    PhaseGridConfig, PolyakConfig, PopulationClass, SeededRng, SignalPair, SingularPair,
    Termination,
};

#[derive(Parser)]
#[command(
    name = "deconv",
    version,
    about = "Nonsmooth blind deconvolution: solver runs, phase diagrams, landscape diagnostics",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Polyak subgradient method on one seeded random instance.
    Solve(SolveArgs),
    /// Sweep (nu, C) cells and record recovery frequencies.
    PhaseDiagram(PhaseDiagramArgs),
    /// Evaluate the population objective at a singular-value pair.
    Population {
        #[command(subcommand)]
        which: PopulationCmd,
    },
    /// Classify a point file against the stationary-point taxonomy.
    Classify(ClassifyArgs),
    /// Measure the sample-vs-population objective gap as m grows.
    Concentration(ConcentrationArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InitChoice {
    Cube,
    Gaussian,
}

impl From<InitChoice> for InitKind {
    fn from(choice: InitChoice) -> Self {
        match choice {
            InitChoice::Cube => InitKind::Cube,
            InitChoice::Gaussian => InitKind::Gaussian,
        }
    }
}

#[derive(Args)]
struct ConfigFlag {
    /// Read `key = value` defaults from this file; command-line flags win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    config: ConfigFlag,
    /// Left signal dimension.
    #[arg(long)]
    d1: usize,
    /// Right signal dimension.
    #[arg(long)]
    d2: usize,
    /// Measurement count (mutually exclusive with --C).
    #[arg(long, conflicts_with = "c")]
    m: Option<usize>,
    /// Oversampling ratio; m = C*(d1+d2).
    #[arg(long = "C")]
    c: Option<usize>,
    /// Initialization scale.
    #[arg(long)]
    nu: f64,
    /// Master seed; the instance and the starting point derive from it.
    #[arg(long)]
    seed: u64,
    /// Starting-point distribution.
    #[arg(long, value_enum)]
    init: InitChoice,
    /// Write the iterate trace (iteration, value, relative error) as CSV.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Trace stride; defaults to 1 when --trace is given, else no trace.
    #[arg(long)]
    trace_every: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Stop when the objective falls below this.
    #[arg(long, default_value_t = 1e-10)]
    f_stop: f64,
    /// Relative error at or below this counts as recovery.
    #[arg(long, default_value_t = 1e-6)]
    success_rel_err: f64,
    /// Emit the full result as one JSON object instead of a summary.
    #[arg(long, action = ArgAction::SetTrue)]
    json: bool,
}

#[derive(Args)]
struct PhaseDiagramArgs {
    #[command(flatten)]
    config: ConfigFlag,
    #[arg(long, default_value_t = 50)]
    d1: usize,
    #[arg(long, default_value_t = 25)]
    d2: usize,
    /// Smallest nu exponent: the grid uses nu = 2^k for k in this range.
    #[arg(long, default_value_t = 4)]
    nu_min_exp: i32,
    /// Largest nu exponent (inclusive).
    #[arg(long, default_value_t = 10)]
    nu_max_exp: i32,
    #[arg(long, default_value_t = 1)]
    c_min: usize,
    #[arg(long, default_value_t = 8)]
    c_max: usize,
    /// Solver runs per (nu, C) cell.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitChoice::Gaussian)]
    init: InitChoice,
    /// Destination for the cell CSV.
    #[arg(long, default_value = "phase.csv")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PopulationCmd {
    /// Closed-form value at singular values (s1, s2).
    Eval(PopulationPointArgs),
    /// Gradient with respect to (s1, s2).
    Grad(PopulationPointArgs),
    /// Monte Carlo estimate with standard error.
    Mc(PopulationMcArgs),
}

#[derive(Args)]
struct PopulationPointArgs {
    #[command(flatten)]
    config: ConfigFlag,
    #[arg(long)]
    s1: f64,
    #[arg(long)]
    s2: f64,
    #[arg(long, action = ArgAction::SetTrue)]
    json: bool,
}

#[derive(Args)]
struct PopulationMcArgs {
    #[command(flatten)]
    config: ConfigFlag,
    #[arg(long)]
    s1: f64,
    #[arg(long)]
    s2: f64,
    /// Sample count.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, action = ArgAction::SetTrue)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifyMode {
    /// Against the exact population landscape (solutions, zero, orthogonal).
    Population,
    /// Against the finite-sample certificate at rate delta.
    Sample,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    config: ConfigFlag,
    /// Point file: d1+d2 whitespace-separated reals, w block then x block.
    #[arg(long, value_name = "FILE")]
    point: PathBuf,
    #[arg(long)]
    d1: usize,
    #[arg(long)]
    d2: usize,
    #[arg(long, value_enum)]
    mode: ClassifyMode,
    /// Reference signal file (same layout); defaults to (e1, e1).
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// Relative tolerance for population-mode classification.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Constant multiplying the sample-mode thresholds.
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    /// Sample-mode rate; computed from --m or --C when omitted.
    #[arg(long)]
    delta: Option<f64>,
    /// Measurement count behind the sample-mode rate.
    #[arg(long, conflicts_with = "c")]
    m: Option<usize>,
    /// Oversampling ratio behind the sample-mode rate.
    #[arg(long = "C")]
    c: Option<usize>,
    #[arg(long, action = ArgAction::SetTrue)]
    json: bool,
}

#[derive(Args)]
struct ConcentrationArgs {
    #[command(flatten)]
    config: ConfigFlag,
    #[arg(long)]
    d1: usize,
    #[arg(long)]
    d2: usize,
    /// Measurement counts to probe, e.g. 44,176,704.
    #[arg(long, value_delimiter = ',', required = true)]
    m_list: Vec<usize>,
    /// Random probe points per gap estimate.
    #[arg(long, default_value_t = 100)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the CSV here (stdout always gets it).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes, like any other CLI filter.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let argv: Vec<String> = std::env::args().collect();
    let argv = match splice_config(argv) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code: u8 = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::PhaseDiagram(args) => cmd_phase_diagram(args),
        Command::Population { which } => cmd_population(which),
        Command::Classify(args) => cmd_classify(args),
        Command::Concentration(args) => cmd_concentration(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Honor `DECONV_THREADS` for the global worker pool. Purely a resource cap:
/// outputs are identical for every setting.
fn configure_threads() {
    if let Ok(value) = std::env::var("DECONV_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

/// Expand `--config FILE` into the token stream. File tokens are inserted
/// before the user's flags, so with clap's self-override semantics the
/// command line takes precedence.
fn splice_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, token) in argv.iter().enumerate() {
        if token == "--config" {
            path = argv.get(i + 1).cloned();
            if path.is_none() {
                return Err("--config needs a file argument".into());
            }
            break;
        }
        if let Some(rest) = token.strip_prefix("--config=") {
            path = Some(rest.to_string());
            break;
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("reading config {path}: {e}"))?;
    let mut file_tokens = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{path}:{}: expected `key = value`", lineno + 1));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(format!("{path}:{}: empty key or value", lineno + 1));
        }
        match value {
            "true" => file_tokens.push(format!("--{key}")),
            "false" => {}
            _ => {
                file_tokens.push(format!("--{key}"));
                file_tokens.push(value.to_string());
            }
        }
    }
    // Insert after the subcommand path (the leading dash-free tokens).
    let insert_at = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, t)| t.starts_with('-'))
        .map(|(i, _)| i)
        .unwrap_or(argv.len());
    let mut merged = argv;
    merged.splice(insert_at..insert_at, file_tokens);
    Ok(merged)
}

fn resolve_m(d1: usize, d2: usize, m: Option<usize>, c: Option<usize>) -> Result<usize, String> {
    match (m, c) {
        (Some(m), None) => Ok(m),
        (None, Some(c)) => Ok(c * (d1 + d2)),
        (None, None) => Err("give exactly one of --m or --C".into()),
        (Some(_), Some(_)) => Err("--m and --C are mutually exclusive".into()),
    }
}

fn check_dims(d1: usize, d2: usize) -> Result<(), String> {
    if d1 == 0 || d2 == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok(())
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::ValueTol => "value_tol",
        Termination::MaxIters => "max_iters",
        Termination::ZeroSubgradient => "zero_subgradient",
    }
}

fn cmd_solve(args: SolveArgs) -> Result<u8, String> {
    check_dims(args.d1, args.d2)?;
    let m = resolve_m(args.d1, args.d2, args.m, args.c)?;
    if m == 0 {
        return Err("need at least one measurement".into());
    }
    if args.nu <= 0.0 {
        return Err("--nu must be positive".into());
    }
    let truth = SignalPair::canonical(args.d1, args.d2);
    let ens = generate_measurements(SeededRng::derive(args.seed, &[0]), &truth, m);
    let mut init_rng = SeededRng::derive(args.seed, &[1]);
    let init = match args.init.into() {
        InitKind::Cube => init_cube(&mut init_rng, args.nu, args.d1, args.d2),
        InitKind::Gaussian => init_gaussian(&mut init_rng, args.nu, args.d1, args.d2),
    };
    let cfg = PolyakConfig {
        max_iters: args.max_iters,
        f_stop: args.f_stop,
        min_value: 0.0,
        success_rel_err: args.success_rel_err,
        trace_every: args
            .trace_every
            .unwrap_or(usize::from(args.trace.is_some())),
    };
    let result = run_polyak(&ens, &init, &cfg);
    if let Some(path) = &args.trace {
        fs::write(path, result.trace_csv()).map_err(|e| format!("writing {path:?}: {e}"))?;
    }
    if args.json {
        println!(
            "{}",
            serde_json::to_string(&result).map_err(|e| e.to_string())?
        );
    } else {
        println!("m               {m}");
        println!("iterations      {}", result.iterations);
        println!("final value     {:.5e}", result.final_value);
        println!("relative error  {:.5e}", result.relative_error);
        println!("termination     {}", termination_name(result.termination));
        println!("success         {}", result.success);
    }
    Ok(if result.success { 0 } else { 2 })
}

fn heat_row(cells: &[PhaseCell]) -> String {
    // One digit per cell: round(frequency * 9), so 0 = never, 9 = always.
    cells
        .iter()
        .map(|cell| {
            let digit = (cell.frequency * 9.0).round() as u32;
            char::from_digit(digit.min(9), 10).unwrap()
        })
        .collect()
}

fn cmd_phase_diagram(args: PhaseDiagramArgs) -> Result<u8, String> {
    check_dims(args.d1, args.d2)?;
    if args.nu_min_exp > args.nu_max_exp {
        return Err("--nu-min-exp must not exceed --nu-max-exp".into());
    }
    if args.c_min < 1 || args.c_min > args.c_max {
        return Err("need 1 <= --c-min <= --c-max".into());
    }
    if args.trials == 0 {
        return Err("--trials must be positive".into());
    }
    let exps: Vec<i32> = (args.nu_min_exp..=args.nu_max_exp).collect();
    let cfg = PhaseGridConfig {
        d1: args.d1,
        d2: args.d2,
        nu_values: exps.iter().map(|&e| 2f64.powi(e)).collect(),
        c_values: (args.c_min..=args.c_max).collect(),
        trials: args.trials,
        init_kind: args.init.into(),
        master_seed: args.seed,
        solver: PolyakConfig::default(),
    };
    let cells = run_phase_grid(&cfg);
    fs::write(&args.out, phase_grid_csv(&cells))
        .map_err(|e| format!("writing {:?}: {e}", args.out))?;

    let per_nu = cfg.c_values.len();
    println!(
        "recovery heat map (digit = frequency on a 0..9 scale), C = {}..{}",
        args.c_min, args.c_max
    );
    for (i, chunk) in cells.chunks(per_nu).enumerate() {
        println!("nu = 2^{:<3} {}", exps[i], heat_row(chunk));
    }
    println!("wrote {} cells to {}", cells.len(), args.out.display());
    Ok(0)
}

fn parse_pair(s1: f64, s2: f64) -> Result<SingularPair, String> {
    SingularPair::new(s1, s2).map_err(|e| e.to_string())
}

fn cmd_population(which: PopulationCmd) -> Result<u8, String> {
    match which {
        PopulationCmd::Eval(args) => {
            let s = parse_pair(args.s1, args.s2)?;
            let value = population_value_sv(&s);
            if args.json {
                println!(
                    "{}",
                    serde_json::json!({ "s1": s.s1, "s2": s.s2, "value": value })
                );
            } else {
                println!("{}", g17(value));
            }
        }
        PopulationCmd::Grad(args) => {
            let s = parse_pair(args.s1, args.s2)?;
            let g = population_gradient_sv(&s).map_err(|e| e.to_string())?;
            if args.json {
                println!(
                    "{}",
                    serde_json::json!({ "s1": s.s1, "s2": s.s2, "g1": g.g1, "g2": g.g2 })
                );
            } else {
                println!("g1 {}", g17(g.g1));
                println!("g2 {}", g17(g.g2));
            }
        }
        PopulationCmd::Mc(args) => {
            if args.n < 2 {
                return Err("--n must be at least 2".into());
            }
            let s = parse_pair(args.s1, args.s2)?;
            let mut rng = SeededRng::new(args.seed);
            let est = monte_carlo_population(&mut rng, s, args.n);
            if args.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "s1": s.s1, "s2": s.s2, "n": args.n, "seed": args.seed,
                        "estimate": est.estimate, "std_error": est.std_error,
                    })
                );
            } else {
                println!("estimate  {}", g17(est.estimate));
                println!("std_error {}", g17(est.std_error));
            }
        }
    }
    Ok(0)
}

/// Read a whitespace-separated point file: d1 coordinates of w, then d2 of x.
fn read_pair(path: &Path, d1: usize, d2: usize) -> Result<SignalPair, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("reading {path:?}: {e}"))?;
    let mut values = Vec::new();
    for token in text.split_whitespace() {
        values.push(
            token
                .parse::<f64>()
                .map_err(|_| format!("{path:?}: `{token}` is not a number"))?,
        );
    }
    if values.len() != d1 + d2 {
        return Err(format!(
            "{path:?}: expected {} values (d1 + d2), found {}",
            d1 + d2,
            values.len()
        ));
    }
    let x = values.split_off(d1);
    Ok(SignalPair::new(values, x))
}

fn population_class_name(class: PopulationClass) -> &'static str {
    match class {
        PopulationClass::Solution => "solution",
        PopulationClass::Zero => "zero",
        PopulationClass::OrthogonalSpurious => "orthogonal_spurious",
        PopulationClass::NonStationary => "non_stationary",
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<u8, String> {
    check_dims(args.d1, args.d2)?;
    let point = read_pair(&args.point, args.d1, args.d2)?;
    let truth = match &args.truth {
        Some(path) => read_pair(path, args.d1, args.d2)?,
        None => SignalPair::canonical(args.d1, args.d2),
    };
    match args.mode {
        ClassifyMode::Population => {
            if args.tol <= 0.0 {
                return Err("--tol must be positive".into());
            }
            let (class, witness) =
                classify_population_point(&point, &truth, args.tol).map_err(|e| e.to_string())?;
            if args.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "class": population_class_name(class),
                        "witness": witness,
                    })
                );
            } else {
                println!("class             {}", population_class_name(class));
                println!("subgradient norm  {:.5e}", witness.subgradient_norm);
                println!("overlap with w    {:.5e}", witness.truth_overlap_w);
                println!("overlap with x    {:.5e}", witness.truth_overlap_x);
                println!("product norm      {:.5e}", witness.product_norm);
            }
        }
        ClassifyMode::Sample => {
            if args.constant <= 0.0 {
                return Err("--constant must be positive".into());
            }
            let delta = match args.delta {
                Some(d) if d > 0.0 => d,
                Some(_) => return Err("--delta must be positive".into()),
                None => {
                    let m = resolve_m(args.d1, args.d2, args.m, args.c).map_err(|_| {
                        String::from("sample mode needs --delta, --m, or --C to fix the rate")
                    })?;
                    delta_rate(args.d1, args.d2, m).map_err(|e| e.to_string())?
                }
            };
            let class = classify_sample_point(&point, &truth, delta, args.constant)
                .map_err(|e| e.to_string())?;
            if args.json {
                println!("{}", serde_json::to_string(&class).map_err(|e| e.to_string())?);
            } else {
                let flags = class.flags();
                let label = if flags.is_empty() {
                    "unclassified".to_string()
                } else {
                    flags
                        .iter()
                        .map(|f| format!("{f:?}"))
                        .collect::<Vec<_>>()
                        .join(",")
                };
                println!("flags             {label}");
                println!("delta             {:.5e}", class.delta);
                println!("pair norm         {:.5e}", class.witness.pair_norm);
                println!("residual norm     {:.5e}", class.witness.residual_norm);
                println!("overlap with w    {:.5e}", class.witness.truth_overlap_w);
                println!("overlap with x    {:.5e}", class.witness.truth_overlap_x);
                println!("nu                {:.5e}", class.witness.nu);
            }
        }
    }
    Ok(0)
}

fn cmd_concentration(args: ConcentrationArgs) -> Result<u8, String> {
    check_dims(args.d1, args.d2)?;
    if args.probes == 0 {
        return Err("--probes must be positive".into());
    }
    let threshold = args.d1 + args.d2 + 1;
    if args.m_list.is_empty() {
        return Err("--m-list must not be empty".into());
    }
    for &m in &args.m_list {
        if m <= threshold {
            return Err(format!(
                "m = {m} is too small: need m > d1 + d2 + 1 = {threshold}"
            ));
        }
    }
    let truth = SignalPair::canonical(args.d1, args.d2);
    let mut probe_rng = SeededRng::derive(args.seed, &[1]);
    let probes: Vec<SignalPair> = (0..args.probes)
        .map(|_| {
            SignalPair::new(
                deconv_core::gaussian_vector(&mut probe_rng, args.d1),
                deconv_core::gaussian_vector(&mut probe_rng, args.d2),
            )
        })
        .collect();

    let mut csv = String::from("m,gap\n");
    for &m in &args.m_list {
        let ens = generate_measurements(
            SeededRng::derive(args.seed, &[0, m as u64]),
            &truth,
            m,
        );
        let gap = concentration_gap(&ens, &probes).map_err(|e| e.to_string())?;
        csv.push_str(&format!("{m},{}\n", g17(gap)));
    }
    print!("{csv}");
    if let Some(path) = &args.out {
        fs::write(path, &csv).map_err(|e| format!("writing {path:?}: {e}"))?;
    }
    Ok(0)
}
