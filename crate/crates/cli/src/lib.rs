//! Command-line front end: single runs, the benchmark matrix and SVG plots.
//!
//! Exit codes: 0 on success, 1 on configuration or input errors, 2 when a
//! training run failed (outputs are still written).

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use varipade::{builtin_case, builtin_cases, parse_structure, run_matrix, train, FamilySpec, MatrixOptions};

pub mod config;
pub mod output;
pub mod plot;

use config::{ProblemSection, RunConfig, TrainSection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    message: String,
}

impl CliError {
    pub fn config(message: impl fmt::Display) -> Self {
        Self {
            message: message.to_string(),
        }
    }

    pub fn io(message: impl fmt::Display) -> Self {
        Self::config(message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "varipade", version, about = "Solve 1-D fixed-endpoint variational problems with trained approximators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one structure on one problem.
    Run(RunArgs),
    /// Train every (case, structure) pair and write tables and loss curves.
    Bench(BenchArgs),
    /// Render a curves CSV as an SVG line plot.
    Plot(PlotArgs),
}

/// Training flags shared by `run` and `bench`; each overrides the config file.
#[derive(Debug, Args, Default)]
struct TrainFlags {
    /// `sgd` or `adam`.
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Quadrature grid size.
    #[arg(long)]
    samples: Option<usize>,
    /// Defaults to $VARIPADE_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// `midpoint` (fixed) or `resample` (fresh random points every step).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Keep both boundary exponents at 1.
    #[arg(long)]
    freeze_exponents: bool,
    /// Lower bound on trained boundary exponents (0 disables it).
    #[arg(long)]
    min_exponent: Option<f64>,
    /// Stop once the loss changes by less than 1e-12 over 100 steps.
    #[arg(long)]
    early_stop: bool,
}

impl TrainFlags {
    fn apply(&self, t: &mut TrainSection) {
        fn set<T: Clone>(dst: &mut Option<T>, src: &Option<T>) {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        set(&mut t.algorithm, &self.algorithm);
        set(&mut t.learning_rate, &self.lr);
        set(&mut t.steps, &self.steps);
        set(&mut t.samples, &self.samples);
        set(&mut t.seed, &self.seed);
        set(&mut t.grid, &self.grid);
        set(&mut t.record_every, &self.record_every);
        set(&mut t.min_exponent, &self.min_exponent);
        if self.freeze_exponents {
            t.train_exponents = Some(false);
        }
        if self.early_stop {
            t.early_stop = Some(true);
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin problem name or number (1-5).
    #[arg(long, conflicts_with = "integrand")]
    problem: Option<String>,
    /// Custom integrand in x, y and dy, e.g. "dy^2 + x*dy".
    #[arg(long, requires_all = ["x_a", "x_b", "y_a", "y_b"])]
    integrand: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_b: Option<f64>,
    /// Structure string, e.g. "Pade-[5/5]", "MLP-[[8,sigmoid]]", "Leg-10".
    #[arg(long)]
    structure: Option<String>,
    #[command(flatten)]
    train: TrainFlags,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Retry once with the next seed if training fails.
    #[arg(long)]
    retry: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Case names or numbers (default: all five).
    #[arg(long, num_args = 1..)]
    cases: Vec<String>,
    /// Structures to train on every selected case (default: each case's own list).
    #[arg(long, num_args = 1..)]
    structures: Vec<String>,
    /// Number of consecutive seeds per pair; rows report the median.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Pairs trained concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[command(flatten)]
    train: TrainFlags,
    /// Output directory.
    #[arg(long, default_value = "bench")]
    out: PathBuf,
    /// Retry a failed pair once with the next seed.
    #[arg(long)]
    retry: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SeriesArg {
    Loss,
    JGap,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Curves CSV written by `bench`.
    curves: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Logarithmic loss axis; nonpositive values are dropped.
    #[arg(long)]
    logy: bool,
    /// Column to plot.
    #[arg(long, value_enum, default_value = "loss")]
    series: SeriesArg,
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<i32, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &args.problem {
        cfg.problem = ProblemSection {
            builtin: Some(name.clone()),
            ..Default::default()
        };
    }
    if let Some(integrand) = &args.integrand {
        cfg.problem = ProblemSection {
            builtin: None,
            integrand: Some(integrand.clone()),
            x_a: args.x_a,
            x_b: args.x_b,
            y_a: args.y_a,
            y_b: args.y_b,
        };
    }
    if args.structure.is_some() {
        cfg.structure.clone_from(&args.structure);
    }
    if args.out.is_some() {
        cfg.output_dir.clone_from(&args.out);
    }
    args.train.apply(&mut cfg.train);

    let run = cfg.resolved()?;
    output::ensure_dir(&run.output_dir)?;
    let mut report = train(&run.problem.problem, &run.spec, &run.train).map_err(CliError::config)?;
    if args.retry && report.status.is_failed() {
        eprintln!("warning: {}; retrying with seed {}", report.status, run.train.seed + 1);
        let retry_cfg = varipade::TrainConfig {
            seed: run.train.seed.wrapping_add(1),
            ..run.train.clone()
        };
        report = train(&run.problem.problem, &run.spec, &retry_cfg).map_err(CliError::config)?;
    }
    let j_exact = run.problem.j_exact;
    output::write_loss_csv(&run.output_dir.join("loss.csv"), &report, j_exact)?;
    let summary = output::Summary::new(&run.problem.name, &report, j_exact, &run.echo);
    output::write_json(&run.output_dir.join("summary.json"), &summary)?;

    let rel = summary
        .relative_error
        .map(|r| format!(" relative_error={r:+.3e}"))
        .unwrap_or_default();
    println!(
        "{} {}: J={} status={}{rel} ({:.0} ms)",
        run.problem.name,
        run.spec,
        report.j_final,
        report.status,
        report.wall_time_ms
    );
    Ok(if report.status.is_failed() {
        EXIT_FAILED
    } else {
        EXIT_OK
    })
}

fn cmd_bench(args: BenchArgs) -> Result<i32, CliError> {
    if args.seeds == 0 {
        return Err(CliError::config("--seeds must be at least 1"));
    }
    if args.parallel == 0 {
        return Err(CliError::config("--parallel must be at least 1"));
    }
    let cases = if args.cases.is_empty() {
        builtin_cases::<f64>()
    } else {
        let mut picked = Vec::new();
        for name in &args.cases {
            let case = builtin_case::<f64>(name).map_err(CliError::config)?;
            if !picked.iter().any(|c: &varipade::BenchmarkCase64| c.id == case.id) {
                picked.push(case);
            }
        }
        picked
    };
    let structures: Vec<FamilySpec> = args
        .structures
        .iter()
        .map(|s| parse_structure(s).map_err(CliError::config))
        .collect::<Result<_, _>>()?;
    let mut section = TrainSection::default();
    args.train.apply(&mut section);
    let cfg = section.resolve()?;
    let opts = MatrixOptions {
        seeds: (0..args.seeds as u64).map(|k| cfg.seed.wrapping_add(k)).collect(),
        parallel: args.parallel,
        retry_on_failure: args.retry,
    };
    output::ensure_dir(&args.out)?;
    let report = run_matrix(
        &cases,
        (!structures.is_empty()).then_some(structures.as_slice()),
        &cfg,
        &opts,
    )
    .map_err(CliError::config)?;

    for table in &report.tables {
        let n = table.case_id;
        output::write_table_csv(&args.out.join(format!("table{n}.csv")), table)?;
        output::write_curves_csv(&args.out.join(format!("curves{n}.csv")), table)?;
        println!("case {n} ({}), J_exact = {}", table.slug, table.j_exact);
        for row in &table.rows {
            println!(
                "  {:28} {:>3} params  J = {:<22} rel = {:+.2e}  {}",
                row.structure.to_string(),
                row.n_params,
                row.j_final,
                row.relative_error,
                row.status()
            );
        }
    }
    Ok(if report.all_succeeded() {
        EXIT_OK
    } else {
        eprintln!("error: at least one training run failed");
        EXIT_FAILED
    })
}

fn cmd_plot(args: PlotArgs) -> Result<i32, CliError> {
    let (series, label) = match args.series {
        SeriesArg::Loss => (plot::Series::Loss, "loss"),
        SeriesArg::JGap => (plot::Series::Gap, "loss - J_exact"),
    };
    let mut curves = plot::read_curves(&args.curves, series)?;
    if args.logy {
        for (curve, dropped) in curves.clone().iter().zip(plot::drop_nonpositive(&mut curves)) {
            if dropped > 0 {
                eprintln!(
                    "warning: dropped {dropped} nonpositive value(s) of {} for the log axis",
                    curve.structure
                );
            }
        }
    }
    let svg = plot::render_svg(&curves, args.logy, label)?;
    std::fs::write(&args.out, svg).map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    Ok(EXIT_OK)
}
