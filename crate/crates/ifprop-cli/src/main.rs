//! Command-line front end: tree preparation, single-condition checking,
//! scaling benchmarks, and corpus generation.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 name collision or
//! enumeration guard, 3 I/O failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ifprop::bench::{
    generate_corpus, rows_to_csv, run_series_conditions, run_series_ranges, write_plot_files,
    BenchError, CorpusSpec, SeriesOptions,
};
use ifprop::model::VariabilityModel;
use ifprop::oracle::{check_equisat, CheckError, EquisatResult, OracleError};
use ifprop::parser::parse_condition;
use ifprop::rewrite::{rewrite_tree, strip_comments, RewriteError, RewriteOptions, SiteOutcome};
use ifprop::transform::{TransformConfig, UnknownIdentifierPolicy};
use ifprop::SigmaNamer;

const EXIT_USAGE: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "ifprop",
    version,
    about = "Convert integer-based C-preprocessor conditions to propositional formulas"
)]
struct Cli {
    /// Print the fully resolved flags (one line, re-runnable) before running.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Copy a source tree with every #if/#elif condition converted.
    Prepare(PrepareArgs),
    /// Convert one condition and verify it by exhaustive enumeration.
    Check(CheckArgs),
    /// Run a scaling series over generated corpora and write a CSV.
    Bench(BenchArgs),
    /// Generate a synthetic corpus with a matching model file.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct PrepareArgs {
    /// Variability model file.
    #[arg(long)]
    model: PathBuf,
    /// Source tree to prepare.
    #[arg(long)]
    src: PathBuf,
    /// Output tree; must be empty or absent.
    #[arg(long)]
    out: PathBuf,
    /// Combination limit before a sub-expression falls back to defined-ness.
    #[arg(long, default_value_t = 1000)]
    max_combinations: usize,
    /// Treatment of identifiers absent from the model.
    #[arg(long, value_enum, default_value_t = UndefinedIds::Unrestricted)]
    undefined_ids: UndefinedIds,
    /// Comma-separated extensions of files to rewrite.
    #[arg(long, default_value = "c,h")]
    extensions: String,
    /// Where the per-site CSV report goes.
    #[arg(long, default_value = "rewrite_report.csv")]
    report: PathBuf,
    /// File-level parallelism.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also report every site outcome on standard error.
    #[arg(short, long, default_value_t = false)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Variability model file.
    #[arg(long)]
    model: PathBuf,
    /// The condition text (without the `#if`).
    #[arg(long)]
    cond: String,
    #[arg(long, default_value_t = 1000)]
    max_combinations: usize,
    #[arg(long, value_enum, default_value_t = UndefinedIds::Unrestricted)]
    undefined_ids: UndefinedIds,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Which series to run.
    #[arg(long, value_enum)]
    series: Series,
    /// CSV output path.
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    /// Scratch directory for generated corpora.
    #[arg(long, default_value = "bench_work")]
    work_dir: PathBuf,
    /// Files per generated corpus.
    #[arg(long, default_value_t = 100)]
    files: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Timed runs per point; the median is recorded.
    #[arg(long, default_value_t = 3)]
    runs: usize,
    /// Combination limit for the ranges series; `none` removes it.
    #[arg(long, default_value = "1000")]
    limit: String,
    /// Also write one gnuplot-ready two-column file per series.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    files: usize,
    #[arg(long, default_value_t = 10)]
    conditions: usize,
    #[arg(long, default_value_t = 5)]
    vars: usize,
    #[arg(long, default_value_t = 4)]
    range_size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory; gets `src/` and `model.txt`.
    #[arg(long)]
    out: PathBuf,
    /// Make each file exercise every transformation rule.
    #[arg(long, default_value_t = false)]
    rule_coverage: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum UndefinedIds {
    Unrestricted,
    Zero,
}

impl UndefinedIds {
    fn policy(self) -> UnknownIdentifierPolicy {
        match self {
            UndefinedIds::Unrestricted => UnknownIdentifierPolicy::TreatUnrestricted,
            UndefinedIds::Zero => UnknownIdentifierPolicy::TreatZero,
        }
    }

    fn label(self) -> &'static str {
        match self {
            UndefinedIds::Unrestricted => "unrestricted",
            UndefinedIds::Zero => "zero",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Series {
    Conditions,
    Ranges,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if cli.dump_config {
        println!("{}", dump_config(&cli));
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_USAGE,
        }
    }

    fn io(message: impl std::fmt::Display) -> Self {
        CliError {
            message: message.to_string(),
            code: EXIT_IO,
        }
    }

    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<RewriteError> for CliError {
    fn from(err: RewriteError) -> Self {
        let code = match &err {
            RewriteError::Collision(_) => EXIT_GUARD,
            RewriteError::Io { .. } | RewriteError::OutDirNotEmpty { .. } => EXIT_IO,
        };
        CliError {
            message: err.to_string(),
            code,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(err: BenchError) -> Self {
        match err {
            BenchError::Rewrite(inner) => inner.into(),
            BenchError::Io { .. } => CliError {
                message: err.to_string(),
                code: EXIT_IO,
            },
            BenchError::Invalid(_) => CliError {
                message: err.to_string(),
                code: EXIT_USAGE,
            },
        }
    }
}

impl From<CheckError> for CliError {
    fn from(err: CheckError) -> Self {
        CliError {
            message: err.to_string(),
            code: EXIT_GUARD,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare(args) => prepare(args),
        Command::Check(args) => check(args),
        Command::Bench(args) => bench(args),
        Command::Gen(args) => gen(args),
    }
}

fn load_model(path: &PathBuf) -> Result<VariabilityModel, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    VariabilityModel::load(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn prepare(args: PrepareArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let options = RewriteOptions {
        transform: TransformConfig {
            max_combinations: args.max_combinations.max(1),
            unknown_identifiers: args.undefined_ids.policy(),
        },
        extensions: args
            .extensions
            .split(',')
            .map(|s| s.trim().trim_start_matches('.').to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        jobs: args.jobs.max(1),
    };
    let report = rewrite_tree(&args.src, &args.out, &model, &options)?;

    for site in &report.sites {
        let loc = format!("{}:{}", site.file.display(), site.line);
        if let SiteOutcome::SkippedWithWarning(reason) = &site.outcome {
            eprintln!("warning: {loc}: skipped: {reason}");
        }
        for warning in &site.warnings {
            eprintln!("warning: {loc}: {warning}");
        }
        if args.verbose {
            eprintln!("{loc}: {}", site.outcome.label());
        }
    }

    fs::write(&args.report, report.to_csv())
        .map_err(|e| CliError::io(format!("{}: {e}", args.report.display())))?;
    println!("{report}");
    println!("report written to {}", args.report.display());
    Ok(())
}

fn check(args: CheckArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let config = TransformConfig {
        max_combinations: args.max_combinations.max(1),
        unknown_identifiers: args.undefined_ids.policy(),
    };
    let cleaned = strip_comments(&args.cond).unwrap_or_else(|_| args.cond.clone());
    let expr = match parse_condition(cleaned.trim()) {
        Ok(expr) => expr,
        Err(reason) => {
            println!("SKIPPED ({reason})");
            return Ok(());
        }
    };
    let namer = SigmaNamer::new(&model);
    let outcome = ifprop::transform_condition(&expr, &model, &config, &namer)
        .map_err(|e| CliError::from(CheckError::from(e)))?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    println!("{}", outcome.formula.to_condition_string());

    match check_equisat(&expr, &model, &config) {
        Ok(EquisatResult::Equivalent { configs, excluded }) => {
            if excluded > 0 {
                println!("EQUIVALENT ({configs} configs, {excluded} excluded)");
            } else {
                println!("EQUIVALENT ({configs} configs)");
            }
        }
        Ok(EquisatResult::CounterExample {
            config,
            original,
            replacement,
        }) => {
            println!("COUNTEREXAMPLE: {config} (original={original}, replacement={replacement})");
        }
        Ok(EquisatResult::NotApplicable(reason)) => {
            println!("NOT APPLICABLE ({reason})");
        }
        Err(CheckError::Oracle(OracleError::GuardExceeded { product })) => {
            println!("NOT CHECKED (space of {product} configurations exceeds the guard)");
        }
        Err(err) => return Err(err.into()),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let opts = SeriesOptions {
        work_dir: args.work_dir.clone(),
        files: args.files,
        seed: args.seed,
        jobs: 1,
        runs: args.runs.max(1),
    };
    let rows = match args.series {
        Series::Conditions => run_series_conditions(&opts, 50, 1000, 50)?,
        Series::Ranges => {
            let limit = match args.limit.as_str() {
                "none" => None,
                text => Some(text.parse::<usize>().map_err(|_| {
                    CliError::usage(format!("--limit expects a number or `none`, got `{text}`"))
                })?),
            };
            run_series_ranges(&opts, 2, 18, 1, limit)?
        }
    };
    for row in &rows {
        println!(
            "{} param={} conditions={} ms={:.3} fallbacks={} max_tuples={}",
            row.series, row.param, row.total_conditions, row.ms, row.fallbacks, row.max_tuples
        );
    }
    fs::write(&args.out, rows_to_csv(&rows))
        .map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))?;
    println!("series written to {}", args.out.display());
    if let Some(plot_dir) = &args.plot_dir {
        let written = write_plot_files(&rows, plot_dir)?;
        for path in written {
            println!("plot data written to {}", path.display());
        }
    }
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), CliError> {
    let spec = CorpusSpec {
        files: args.files,
        conditions_per_file: args.conditions,
        variables: args.vars,
        range_size: args.range_size,
        seed: args.seed,
        rule_coverage: args.rule_coverage,
    };
    let corpus = generate_corpus(&spec, &args.out)?;
    println!(
        "generated {} files with {} conditions under {}",
        spec.files,
        corpus.total_conditions,
        corpus.src_dir.display()
    );
    println!("model written to {}", corpus.model_path.display());
    Ok(())
}

/// One re-runnable line with every flag resolved, defaults included.
fn dump_config(cli: &Cli) -> String {
    let mut parts: Vec<String> = vec!["--dump-config".to_string()];
    match &cli.command {
        Command::Prepare(a) => {
            parts.push("prepare".to_string());
            push_path(&mut parts, "--model", &a.model);
            push_path(&mut parts, "--src", &a.src);
            push_path(&mut parts, "--out", &a.out);
            parts.push(format!("--max-combinations={}", a.max_combinations));
            parts.push(format!("--undefined-ids={}", a.undefined_ids.label()));
            parts.push(format!("--extensions={}", a.extensions));
            push_path(&mut parts, "--report", &a.report);
            parts.push(format!("--jobs={}", a.jobs));
            if a.verbose {
                parts.push("--verbose".to_string());
            }
        }
        Command::Check(a) => {
            parts.push("check".to_string());
            push_path(&mut parts, "--model", &a.model);
            parts.push(format!("--cond={}", a.cond));
            parts.push(format!("--max-combinations={}", a.max_combinations));
            parts.push(format!("--undefined-ids={}", a.undefined_ids.label()));
        }
        Command::Bench(a) => {
            parts.push("bench".to_string());
            parts.push(format!(
                "--series={}",
                match a.series {
                    Series::Conditions => "conditions",
                    Series::Ranges => "ranges",
                }
            ));
            push_path(&mut parts, "--out", &a.out);
            push_path(&mut parts, "--work-dir", &a.work_dir);
            parts.push(format!("--files={}", a.files));
            parts.push(format!("--seed={}", a.seed));
            parts.push(format!("--runs={}", a.runs));
            parts.push(format!("--limit={}", a.limit));
            if let Some(plot_dir) = &a.plot_dir {
                push_path(&mut parts, "--plot-dir", plot_dir);
            }
        }
        Command::Gen(a) => {
            parts.push("gen".to_string());
            parts.push(format!("--files={}", a.files));
            parts.push(format!("--conditions={}", a.conditions));
            parts.push(format!("--vars={}", a.vars));
            parts.push(format!("--range-size={}", a.range_size));
            parts.push(format!("--seed={}", a.seed));
            push_path(&mut parts, "--out", &a.out);
            if a.rule_coverage {
                parts.push("--rule-coverage".to_string());
            }
        }
    }
    parts.join(" ")
}

fn push_path(parts: &mut Vec<String>, flag: &str, path: &PathBuf) {
    parts.push(format!("{flag}={}", path.display()));
}
