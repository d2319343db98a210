//! Synthetic corpora and scaling measurements.
//!
//! The generator emits C files with valid `#if`/`#endif` blocks and a matching
//! model file, deterministically from a seed. The series runners rewrite
//! generated corpora of growing size and record wall-clock, fallback counts,
//! and the largest merge the transformation considered.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{ValueRange, VariabilityModel};
use crate::rewrite::{rewrite_tree, RewriteError, RewriteOptions};

/// Shape of a generated corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSpec {
    pub files: usize,
    pub conditions_per_file: usize,
    pub variables: usize,
    /// Every variable gets the range `{1, ..., range_size}`.
    pub range_size: usize,
    pub seed: u64,
    /// Force each file to exercise every transformation rule at least once.
    pub rule_coverage: bool,
}

impl CorpusSpec {
    pub fn total_conditions(&self) -> usize {
        self.files * self.conditions_per_file
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.files == 0 || self.conditions_per_file == 0 || self.variables == 0 {
            return Err(BenchError::Invalid(
                "files, conditions, and variables must all be at least 1".to_string(),
            ));
        }
        if self.range_size < 1 {
            return Err(BenchError::Invalid("range size must be at least 1".to_string()));
        }
        if self.rule_coverage && self.conditions_per_file < RULE_TEMPLATES {
            return Err(BenchError::Invalid(format!(
                "rule coverage needs at least {RULE_TEMPLATES} conditions per file"
            )));
        }
        Ok(())
    }
}

/// Paths and sizes of a generated corpus.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub src_dir: PathBuf,
    pub model_path: PathBuf,
    pub model: VariabilityModel,
    pub total_conditions: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

const RULE_TEMPLATES: usize = 6;

/// Writes a corpus under `out`: C files in `out/src/` and `out/model.txt`.
///
/// Byte-identical for identical specs.
pub fn generate_corpus(spec: &CorpusSpec, out: &Path) -> Result<GeneratedCorpus, BenchError> {
    spec.validate()?;
    if out.exists() && fs::read_dir(out).map_err(io_err(out))?.next().is_some() {
        return Err(BenchError::Invalid(format!(
            "output directory `{}` is not empty",
            out.display()
        )));
    }
    let src_dir = out.join("src");
    fs::create_dir_all(&src_dir).map_err(io_err(&src_dir))?;

    let mut model = VariabilityModel::new();
    for i in 0..spec.variables {
        let values: Vec<i64> = (1..=spec.range_size as i64).collect();
        model
            .insert(&var_name(i), ValueRange::Finite(values))
            .expect("generated names are unique");
    }
    let model_path = out.join("model.txt");
    fs::write(&model_path, model.serialize()).map_err(io_err(&model_path))?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for file_idx in 0..spec.files {
        let contents = generate_file(spec, file_idx, &mut rng);
        let path = src_dir.join(format!("file_{file_idx:04}.c"));
        fs::write(&path, contents).map_err(io_err(&path))?;
    }

    Ok(GeneratedCorpus {
        src_dir,
        model_path,
        model,
        total_conditions: spec.total_conditions(),
    })
}

fn var_name(i: usize) -> String {
    format!("VAR_{i}")
}

fn generate_file(spec: &CorpusSpec, file_idx: usize, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "/* generated corpus file {file_idx} */");
    let _ = writeln!(out);
    for cond_idx in 0..spec.conditions_per_file {
        let template = if spec.rule_coverage && cond_idx < RULE_TEMPLATES {
            cond_idx
        } else {
            rng.gen_range(0..RULE_TEMPLATES + 1)
        };
        let condition = generate_condition(template, spec, rng);
        let _ = writeln!(out, "#if {condition}");
        let _ = writeln!(out, "static int block_{cond_idx} = {cond_idx};");
        let _ = writeln!(out, "#else");
        let _ = writeln!(out, "static int block_{cond_idx} = -1;");
        let _ = writeln!(out, "#endif");
        let _ = writeln!(out, "static int filler_{cond_idx}(void) {{ return {cond_idx}; }}");
        let _ = writeln!(out);
    }
    out
}

/// One condition per template; templates 0..5 exercise the six evaluation
/// rules in order (literal arithmetic, literal comparison, arithmetic on
/// literal and variable, comparison on variable and literal, comparison on
/// two variables, arithmetic on two variables).
fn generate_condition(template: usize, spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> String {
    let pick_var = |rng: &mut ChaCha8Rng| var_name(rng.gen_range(0..spec.variables));
    let pick_other = |rng: &mut ChaCha8Rng, not: &str| {
        if spec.variables == 1 {
            return var_name(0);
        }
        loop {
            let candidate = var_name(rng.gen_range(0..spec.variables));
            if candidate != not {
                return candidate;
            }
        }
    };
    let lit = |rng: &mut ChaCha8Rng| rng.gen_range(1..=4);
    let threshold = |rng: &mut ChaCha8Rng| rng.gen_range(1..=(2 * spec.range_size as i64));
    match template {
        0 => format!("{} * {} > {}", lit(rng), lit(rng), pick_var(rng)),
        1 => format!("({} > {}) && {} >= {}", lit(rng), lit(rng), pick_var(rng), threshold(rng)),
        2 => format!("{} + {} > {}", pick_var(rng), lit(rng), threshold(rng)),
        3 => format!("{} > {}", pick_var(rng), threshold(rng)),
        4 => {
            let a = pick_var(rng);
            let b = pick_other(rng, &a);
            format!("{a} == {b}")
        }
        5 => {
            let a = pick_var(rng);
            let b = pick_other(rng, &a);
            format!("{a} + {b} > {}", threshold(rng))
        }
        _ => {
            let a = pick_var(rng);
            let b = pick_other(rng, &a);
            let c = pick_var(rng);
            format!("({a} * {} > {b}) || defined({c})", lit(rng))
        }
    }
}

/// One measured point of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub series: String,
    pub param: usize,
    pub total_conditions: usize,
    /// Median wall-clock of the copy-and-convert runs, in milliseconds.
    pub ms: f64,
    pub fallbacks: usize,
    pub max_tuples: usize,
}

/// Knobs shared by both series.
#[derive(Debug, Clone)]
pub struct SeriesOptions {
    /// Scratch directory; corpora and rewritten trees go underneath.
    pub work_dir: PathBuf,
    pub files: usize,
    pub seed: u64,
    pub jobs: usize,
    /// Runs per point; the median is recorded.
    pub runs: usize,
}

impl SeriesOptions {
    pub fn new(work_dir: impl Into<PathBuf>) -> Self {
        SeriesOptions {
            work_dir: work_dir.into(),
            files: 100,
            seed: 42,
            jobs: 1,
            runs: 3,
        }
    }
}

/// Conditions-per-file series: 50 to 1000 in steps of 50 by default.
pub fn run_series_conditions(
    opts: &SeriesOptions,
    start: usize,
    stop: usize,
    step: usize,
) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    let mut point = start;
    while point <= stop {
        let spec = CorpusSpec {
            files: opts.files,
            conditions_per_file: point,
            variables: 5,
            range_size: 4,
            seed: opts.seed,
            rule_coverage: true,
        };
        let row = measure_point("conditions", point, &spec, opts, None)?;
        rows.push(row);
        point += step;
    }
    Ok(rows)
}

/// Range-size series: 2 to 18 in steps of 1 by default. `limit` of `None`
/// removes the combination cap.
pub fn run_series_ranges(
    opts: &SeriesOptions,
    start: usize,
    stop: usize,
    step: usize,
    limit: Option<usize>,
) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    let mut point = start;
    while point <= stop {
        let spec = CorpusSpec {
            files: opts.files,
            conditions_per_file: 10,
            variables: 5,
            range_size: point,
            seed: opts.seed,
            rule_coverage: true,
        };
        let row = measure_point("ranges", point, &spec, opts, limit)?;
        rows.push(row);
        point += step;
    }
    Ok(rows)
}

fn measure_point(
    series: &str,
    param: usize,
    spec: &CorpusSpec,
    opts: &SeriesOptions,
    limit: Option<usize>,
) -> Result<BenchRow, BenchError> {
    let point_dir = opts.work_dir.join(format!("{series}_{param}"));
    if point_dir.exists() {
        fs::remove_dir_all(&point_dir).map_err(io_err(&point_dir))?;
    }
    let corpus = generate_corpus(spec, &point_dir)?;

    let mut options = RewriteOptions {
        jobs: opts.jobs,
        ..RewriteOptions::default()
    };
    if let Some(limit) = limit {
        options.transform.max_combinations = limit;
    } else {
        options.transform.max_combinations = usize::MAX;
    }

    // output trees are removed only after the last timed run, so deletion
    // writeback cannot leak into a measurement
    let mut timings = Vec::with_capacity(opts.runs);
    let mut fallbacks = 0;
    let mut max_tuples = 0;
    for run in 0..opts.runs.max(1) {
        let out_dir = point_dir.join(format!("out_{run}"));
        let report = rewrite_tree(&corpus.src_dir, &out_dir, &corpus.model, &options)?;
        timings.push(report.duration.as_secs_f64() * 1000.0);
        fallbacks = report.fallbacks();
        max_tuples = report.max_merge_count;
    }
    timings.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let ms = timings[timings.len() / 2];

    fs::remove_dir_all(&point_dir).map_err(io_err(&point_dir))?;
    Ok(BenchRow {
        series: series.to_string(),
        param,
        total_conditions: corpus.total_conditions,
        ms,
        fallbacks,
        max_tuples,
    })
}

/// CSV with header `series,param,total_conditions,ms,fallbacks,max_tuples`.
pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("series,param,total_conditions,ms,fallbacks,max_tuples\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.3},{},{}",
            row.series, row.param, row.total_conditions, row.ms, row.fallbacks, row.max_tuples
        );
    }
    out
}

/// Writes one two-column (param, ms) file per series, plottable with gnuplot.
pub fn write_plot_files(rows: &[BenchRow], dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut series: Vec<&str> = rows.iter().map(|r| r.series.as_str()).collect();
    series.sort_unstable();
    series.dedup();
    let mut written = Vec::new();
    for name in series {
        let mut contents = String::new();
        for row in rows.iter().filter(|r| r.series == name) {
            let _ = writeln!(contents, "{} {:.3}", row.param, row.ms);
        }
        let path = dir.join(format!("{name}.dat"));
        fs::write(&path, contents).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
