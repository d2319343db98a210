//! Source-tree rewriting: copy every file, locate `#if`/`#elif` directives,
//! convert their conditions, and splice the replacements back in.
//!
//! Everything outside a rewritten directive is preserved byte for byte.
//! Directives the tool cannot convert keep their original text and are
//! reported as skipped.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;
use walkdir::WalkDir;

use crate::model::VariabilityModel;
use crate::namer::{NameCollision, SigmaNamer};
use crate::parser::{parse_condition, SkipReason};
use crate::transform::{transform_condition, TransformConfig, TransformWarning};

/// Directive kinds the scanner reports.
///
/// Only `#if` and `#elif` carry integer conditions; the other conditional
/// directives are already propositional and stay untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    If,
    Elif,
    Ifdef,
    Ifndef,
    Else,
    Endif,
}

impl SiteKind {
    fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "if" => Some(SiteKind::If),
            "elif" => Some(SiteKind::Elif),
            "ifdef" => Some(SiteKind::Ifdef),
            "ifndef" => Some(SiteKind::Ifndef),
            "else" => Some(SiteKind::Else),
            "endif" => Some(SiteKind::Endif),
            _ => None,
        }
    }

    /// Whether this directive kind is subject to rewriting.
    pub fn rewrites(self) -> bool {
        matches!(self, SiteKind::If | SiteKind::Elif)
    }

    pub fn label(self) -> &'static str {
        match self {
            SiteKind::If => "if",
            SiteKind::Elif => "elif",
            SiteKind::Ifdef => "ifdef",
            SiteKind::Ifndef => "ifndef",
            SiteKind::Else => "else",
            SiteKind::Endif => "endif",
        }
    }
}

/// One conditional directive found in a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectiveSite {
    /// 1-based physical line the directive starts on.
    pub line: usize,
    /// Number of physical lines covered (continuations joined).
    pub span: usize,
    pub kind: SiteKind,
    /// Condition text with continuations joined and comments stripped; empty
    /// for kinds that carry no rewritable condition.
    pub condition: String,
    /// Everything up to and including the directive keyword, verbatim.
    pub prefix: String,
    /// Set when the scanner itself had to give up on the site.
    pub pre_skip: Option<SkipReason>,
}

/// Per-site outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiteOutcome {
    Converted,
    ConvertedWithFallback,
    SkippedWithWarning(SkipReason),
    /// `#ifdef`/`#ifndef`/`#else`/`#endif`: nothing to rewrite.
    Untouched,
}

impl SiteOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SiteOutcome::Converted => "converted",
            SiteOutcome::ConvertedWithFallback => "converted_fallback",
            SiteOutcome::SkippedWithWarning(_) => "skipped",
            SiteOutcome::Untouched => "untouched",
        }
    }
}

/// One row of the rewrite report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteRecord {
    pub file: PathBuf,
    pub line: usize,
    pub span: usize,
    pub kind: SiteKind,
    pub outcome: SiteOutcome,
    pub warnings: Vec<TransformWarning>,
    /// Time spent parsing, converting, and serializing this site.
    pub micros: u128,
}

/// Outcome of a whole preparation run.
#[derive(Debug, Clone, Default)]
pub struct RewriteReport {
    /// All sites, sorted by file and line.
    pub sites: Vec<SiteRecord>,
    /// Wall clock of copying and converting.
    pub duration: Duration,
    /// Largest combination count any merge considered, across all sites.
    pub max_merge_count: usize,
}

impl RewriteReport {
    pub fn sites_found(&self) -> usize {
        self.sites.len()
    }

    pub fn converted(&self) -> usize {
        self.count(|o| matches!(o, SiteOutcome::Converted))
    }

    pub fn fallbacks(&self) -> usize {
        self.count(|o| matches!(o, SiteOutcome::ConvertedWithFallback))
    }

    pub fn skips(&self) -> usize {
        self.count(|o| matches!(o, SiteOutcome::SkippedWithWarning(_)))
    }

    pub fn untouched(&self) -> usize {
        self.count(|o| matches!(o, SiteOutcome::Untouched))
    }

    fn count(&self, pred: impl Fn(&SiteOutcome) -> bool) -> usize {
        self.sites.iter().filter(|s| pred(&s.outcome)).count()
    }

    /// CSV with columns `file,line,kind,outcome,reason,ms`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("file,line,kind,outcome,reason,ms\n");
        for site in &self.sites {
            let reason = match &site.outcome {
                SiteOutcome::SkippedWithWarning(reason) => reason.to_string(),
                _ => String::new(),
            };
            let ms = site.micros as f64 / 1000.0;
            out.push_str(&format!(
                "{},{},{},{},{},{:.3}\n",
                csv_field(&site.file.display().to_string()),
                site.line,
                site.kind.label(),
                site.outcome.label(),
                csv_field(&reason),
                ms
            ));
        }
        out
    }
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Collision(#[from] NameCollision),
    #[error("output directory `{path}` exists and is not empty")]
    OutDirNotEmpty { path: PathBuf },
}

impl fmt::Display for RewriteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} sites: {} converted, {} with fallback, {} skipped, {} untouched ({} ms)",
            self.sites_found(),
            self.converted(),
            self.fallbacks(),
            self.skips(),
            self.untouched(),
            self.duration.as_millis()
        )
    }
}

/// Options for a preparation run.
#[derive(Debug, Clone)]
pub struct RewriteOptions {
    pub transform: TransformConfig,
    /// File extensions (without the dot) whose directives are rewritten;
    /// everything else is copied byte-identically.
    pub extensions: Vec<String>,
    /// File-level parallelism; 1 processes files sequentially.
    pub jobs: usize,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions {
            transform: TransformConfig::default(),
            extensions: vec!["c".to_string(), "h".to_string()],
            jobs: 1,
        }
    }
}

/// A physical line: content without its terminator, plus the terminator.
struct Line<'a> {
    content: &'a [u8],
    eol: &'a [u8],
}

impl Line<'_> {
    fn continues(&self) -> bool {
        self.content.last() == Some(&b'\\') && !self.eol.is_empty()
    }
}

fn split_lines(bytes: &[u8]) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            let (content_end, eol_start) = if i > start && bytes[i - 1] == b'\r' {
                (i - 1, i - 1)
            } else {
                (i, i)
            };
            lines.push(Line {
                content: &bytes[start..content_end],
                eol: &bytes[eol_start..=i],
            });
            start = i + 1;
        }
        i += 1;
    }
    if start < bytes.len() {
        lines.push(Line {
            content: &bytes[start..],
            eol: &bytes[bytes.len()..],
        });
    }
    lines
}

/// Finds the conditional directives of a file.
///
/// A directive line is one whose first non-whitespace byte is `#`, followed by
/// optional whitespace and one of the conditional keywords. Backslash
/// continuations are joined into one logical line, and a line continued from
/// its predecessor can never start a directive.
pub fn scan_file(contents: &[u8]) -> Vec<DirectiveSite> {
    let lines = split_lines(contents);
    let mut sites = Vec::new();
    let mut i = 0;
    let mut continued = false;
    while i < lines.len() {
        let starts_logical = !continued;
        continued = lines[i].continues();
        if !starts_logical {
            i += 1;
            continue;
        }
        let Some((kind, prefix_len)) = directive_kind(lines[i].content) else {
            i += 1;
            continue;
        };
        // join the logical line
        let mut span = 1;
        while lines[i + span - 1].continues() && i + span < lines.len() {
            span += 1;
        }
        let site = build_site(&lines, i, span, kind, prefix_len);
        sites.push(site);
        // skip past the continuation lines we just consumed
        i += span;
        continued = false;
    }
    sites
}

fn build_site(
    lines: &[Line<'_>],
    start: usize,
    span: usize,
    kind: SiteKind,
    prefix_len: usize,
) -> DirectiveSite {
    let prefix = String::from_utf8_lossy(&lines[start].content[..prefix_len]).into_owned();
    let mut site = DirectiveSite {
        line: start + 1,
        span,
        kind,
        condition: String::new(),
        prefix,
        pre_skip: None,
    };
    if !kind.rewrites() {
        return site;
    }
    // splice continuations: the backslash-newline pairs are deleted
    let mut raw = Vec::new();
    for (offset, line) in lines[start..start + span].iter().enumerate() {
        let mut content = line.content;
        if offset == 0 {
            content = &content[prefix_len..];
        }
        if offset + 1 < span {
            content = &content[..content.len() - 1];
        }
        raw.extend_from_slice(content);
    }
    let raw = match String::from_utf8(raw) {
        Ok(s) => s,
        Err(_) => {
            site.pre_skip = Some(SkipReason::SyntaxError("condition is not UTF-8".to_string()));
            return site;
        }
    };
    match strip_comments(&raw) {
        Ok(condition) => site.condition = condition.trim().to_string(),
        Err(reason) => site.pre_skip = Some(reason),
    }
    site
}

/// Recognizes `#<ws><keyword>`; returns the kind and the byte length of the
/// prefix up to and including the keyword.
fn directive_kind(content: &[u8]) -> Option<(SiteKind, usize)> {
    let mut i = 0;
    while i < content.len() && (content[i] == b' ' || content[i] == b'\t') {
        i += 1;
    }
    if i >= content.len() || content[i] != b'#' {
        return None;
    }
    i += 1;
    while i < content.len() && (content[i] == b' ' || content[i] == b'\t') {
        i += 1;
    }
    let word_start = i;
    while i < content.len() && (content[i].is_ascii_alphanumeric() || content[i] == b'_') {
        i += 1;
    }
    let word = std::str::from_utf8(&content[word_start..i]).ok()?;
    SiteKind::from_keyword(word).map(|kind| (kind, i))
}

/// Replaces `/* ... */` and `// ...` comments with a single space.
pub fn strip_comments(text: &str) -> Result<String, SkipReason> {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let mut j = i + 2;
            loop {
                if j + 1 >= bytes.len() {
                    return Err(SkipReason::SyntaxError(
                        "unterminated block comment".to_string(),
                    ));
                }
                if bytes[j] == b'*' && bytes[j + 1] == b'/' {
                    break;
                }
                j += 1;
            }
            out.push(' ');
            i = j + 2;
        } else if bytes[i] == b'/' && bytes.get(i + 1) == Some(&b'/') {
            out.push(' ');
            break;
        } else {
            // text is valid UTF-8; copy char boundaries intact
            let ch = text[i..].chars().next().expect("in-bounds char");
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    Ok(out)
}

/// Rewrites one file's contents; returns the new bytes and per-site records.
pub fn rewrite_file(
    rel: &Path,
    contents: &[u8],
    model: &VariabilityModel,
    config: &TransformConfig,
    namer: &SigmaNamer,
) -> Result<(Vec<u8>, Vec<SiteRecord>, usize), NameCollision> {
    let lines = split_lines(contents);
    let sites = scan_file(contents);
    let mut out = Vec::with_capacity(contents.len());
    let mut records = Vec::with_capacity(sites.len());
    let mut max_merge = 0;

    let mut next_line = 0;
    for site in sites {
        let start = site.line - 1;
        for line in &lines[next_line..start] {
            out.extend_from_slice(line.content);
            out.extend_from_slice(line.eol);
        }

        let started = Instant::now();
        let mut warnings = Vec::new();
        let outcome = if !site.kind.rewrites() {
            SiteOutcome::Untouched
        } else if let Some(reason) = site.pre_skip.clone() {
            SiteOutcome::SkippedWithWarning(reason)
        } else {
            match parse_condition(&site.condition) {
                Err(reason) => SiteOutcome::SkippedWithWarning(reason),
                Ok(expr) => {
                    let outcome = transform_condition(&expr, model, config, namer)?;
                    warnings = outcome.warnings;
                    max_merge = max_merge.max(outcome.max_merge_count);
                    let rendered = outcome.formula.to_condition_string();
                    out.extend_from_slice(site.prefix.as_bytes());
                    out.push(b' ');
                    out.extend_from_slice(rendered.as_bytes());
                    out.extend_from_slice(lines[start + site.span - 1].eol);
                    if outcome.fallback_used {
                        SiteOutcome::ConvertedWithFallback
                    } else {
                        SiteOutcome::Converted
                    }
                }
            }
        };
        let converted = matches!(
            outcome,
            SiteOutcome::Converted | SiteOutcome::ConvertedWithFallback
        );
        if !converted {
            for line in &lines[start..start + site.span] {
                out.extend_from_slice(line.content);
                out.extend_from_slice(line.eol);
            }
        }
        next_line = start + site.span;
        records.push(SiteRecord {
            file: rel.to_path_buf(),
            line: site.line,
            span: site.span,
            kind: site.kind,
            outcome,
            warnings,
            micros: started.elapsed().as_micros(),
        });
    }
    for line in &lines[next_line..] {
        out.extend_from_slice(line.content);
        out.extend_from_slice(line.eol);
    }
    Ok((out, records, max_merge))
}

/// Copies `src_root` to `out_root`, rewriting every `#if`/`#elif` condition in
/// files whose extension is configured for rewriting.
pub fn rewrite_tree(
    src_root: &Path,
    out_root: &Path,
    model: &VariabilityModel,
    options: &RewriteOptions,
) -> Result<RewriteReport, RewriteError> {
    let started = Instant::now();
    if out_root.exists() {
        let mut entries = fs::read_dir(out_root).map_err(|source| RewriteError::Io {
            path: out_root.to_path_buf(),
            source,
        })?;
        if entries.next().is_some() {
            return Err(RewriteError::OutDirNotEmpty {
                path: out_root.to_path_buf(),
            });
        }
    }
    fs::create_dir_all(out_root).map_err(|source| RewriteError::Io {
        path: out_root.to_path_buf(),
        source,
    })?;

    let mut files = Vec::new();
    for entry in WalkDir::new(src_root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e
                .path()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| src_root.to_path_buf());
            RewriteError::Io {
                path,
                source: e.into_io_error().unwrap_or_else(|| {
                    std::io::Error::new(std::io::ErrorKind::Other, "walk failed")
                }),
            }
        })?;
        let rel = entry
            .path()
            .strip_prefix(src_root)
            .expect("walk stays under root")
            .to_path_buf();
        if entry.file_type().is_dir() {
            fs::create_dir_all(out_root.join(&rel)).map_err(|source| RewriteError::Io {
                path: out_root.join(&rel),
                source,
            })?;
        } else {
            files.push(rel);
        }
    }

    let namer = SigmaNamer::new(model);
    let work = |rel: &PathBuf| -> Result<(Vec<SiteRecord>, usize), RewriteError> {
        process_file(src_root, out_root, rel, model, options, &namer)
    };

    let results = run_jobs(&files, options.jobs, work);

    let mut report = RewriteReport::default();
    for result in results {
        let (records, max_merge) = result?;
        report.max_merge_count = report.max_merge_count.max(max_merge);
        report.sites.extend(records);
    }
    report
        .sites
        .sort_by(|a, b| a.file.cmp(&b.file).then(a.line.cmp(&b.line)));
    report.duration = started.elapsed();
    Ok(report)
}

fn process_file(
    src_root: &Path,
    out_root: &Path,
    rel: &Path,
    model: &VariabilityModel,
    options: &RewriteOptions,
    namer: &SigmaNamer,
) -> Result<(Vec<SiteRecord>, usize), RewriteError> {
    let src_path = src_root.join(rel);
    let out_path = out_root.join(rel);
    let rewriting = src_path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|ext| options.extensions.iter().any(|e| e == ext));
    if !rewriting {
        fs::copy(&src_path, &out_path).map_err(|source| RewriteError::Io {
            path: src_path,
            source,
        })?;
        return Ok((Vec::new(), 0));
    }
    let contents = fs::read(&src_path).map_err(|source| RewriteError::Io {
        path: src_path.clone(),
        source,
    })?;
    let (rewritten, records, max_merge) =
        rewrite_file(rel, &contents, model, &options.transform, namer)?;
    fs::write(&out_path, rewritten).map_err(|source| RewriteError::Io {
        path: out_path,
        source,
    })?;
    Ok((records, max_merge))
}

#[cfg(feature = "parallel")]
fn run_jobs<T, F>(files: &[PathBuf], jobs: usize, work: F) -> Vec<Result<T, RewriteError>>
where
    T: Send,
    F: Fn(&PathBuf) -> Result<T, RewriteError> + Sync,
{
    use rayon::prelude::*;
    if jobs <= 1 {
        return files.iter().map(|f| work(f)).collect();
    }
    if jobs >= rayon::current_num_threads() {
        return files.par_iter().map(|f| work(f)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| files.par_iter().map(|f| work(f)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<T, F>(files: &[PathBuf], _jobs: usize, work: F) -> Vec<Result<T, RewriteError>>
where
    F: Fn(&PathBuf) -> Result<T, RewriteError>,
{
    files.iter().map(|f| work(f)).collect()
}
