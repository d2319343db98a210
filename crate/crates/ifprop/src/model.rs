//! The variability model: which integer variables exist and which values each
//! may take.
//!
//! A model file is line based:
//!
//! ```text
//! # comment
//! VAR_A = {1, 2, 3}
//! CONST_A = {2}
//! X = 1..4
//! N = *
//! ```
//!
//! A one-value range marks the variable a constant, `*` marks it unrestricted.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Allowed values of a single variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueRange {
    /// Non-empty, strictly ascending, duplicate-free list of allowed values.
    Finite(Vec<i64>),
    /// No practical bound on the values; handled only via its defined-ness.
    Unrestricted,
}

impl ValueRange {
    /// Builds a finite range, sorting and deduplicating the input.
    pub fn finite(mut values: Vec<i64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptyRange { line: 0 });
        }
        values.sort_unstable();
        values.dedup();
        Ok(ValueRange::Finite(values))
    }
}

/// Classification of an identifier against the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarClass {
    /// Exactly one allowed value; folded to a literal before transformation.
    Constant(i64),
    /// A small finite set of allowed values.
    Restricted(Vec<i64>),
    /// No restriction on the allowed values.
    Unrestricted,
    /// The identifier does not appear in the model.
    Unknown,
}

/// The set of integer variability variables with their allowed-value ranges.
///
/// Immutable after load; safe to share across concurrent workers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariabilityModel {
    entries: BTreeMap<String, ValueRange>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}: duplicate variable `{name}`")]
    DuplicateVariable { name: String, line: usize },
    #[error("line {line}: empty value range")]
    EmptyRange { line: usize },
    #[error("line {line}: `{name}` is not a valid C identifier")]
    InvalidName { name: String, line: usize },
    #[error("line {line}: malformed entry: {detail}")]
    Malformed { line: usize, detail: String },
}

/// True for `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl VariabilityModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a variable; fails on duplicates or invalid names.
    pub fn insert(&mut self, name: &str, range: ValueRange) -> Result<(), ModelError> {
        self.insert_at(name, range, 0)
    }

    fn insert_at(&mut self, name: &str, range: ValueRange, line: usize) -> Result<(), ModelError> {
        if !is_identifier(name) {
            return Err(ModelError::InvalidName {
                name: name.to_string(),
                line,
            });
        }
        if self.entries.contains_key(name) {
            return Err(ModelError::DuplicateVariable {
                name: name.to_string(),
                line,
            });
        }
        self.entries.insert(name.to_string(), range);
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn range(&self, name: &str) -> Option<&ValueRange> {
        self.entries.get(name)
    }

    /// Variable names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Classifies an identifier: constant, restricted, unrestricted, or absent.
    pub fn classify(&self, name: &str) -> VarClass {
        match self.entries.get(name) {
            Some(ValueRange::Finite(values)) if values.len() == 1 => VarClass::Constant(values[0]),
            Some(ValueRange::Finite(values)) => VarClass::Restricted(values.clone()),
            Some(ValueRange::Unrestricted) => VarClass::Unrestricted,
            None => VarClass::Unknown,
        }
    }

    /// Parses the line-based model file format.
    pub fn load(text: &str) -> Result<Self, ModelError> {
        let mut model = VariabilityModel::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, rhs) = line.split_once('=').ok_or_else(|| ModelError::Malformed {
                line: line_no,
                detail: "expected `NAME = range`".to_string(),
            })?;
            let name = name.trim();
            let range = parse_range(rhs.trim(), line_no)?;
            model.insert_at(name, range, line_no)?;
        }
        Ok(model)
    }

    /// Canonical serialization; `load(serialize(m)) == m`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (name, range) in &self.entries {
            match range {
                ValueRange::Unrestricted => {
                    let _ = writeln!(out, "{name} = *");
                }
                ValueRange::Finite(values) => {
                    let rendered: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                    let _ = writeln!(out, "{name} = {{{}}}", rendered.join(", "));
                }
            }
        }
        out
    }
}

fn parse_range(rhs: &str, line: usize) -> Result<ValueRange, ModelError> {
    if rhs == "*" {
        return Ok(ValueRange::Unrestricted);
    }
    if let Some(body) = rhs.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| ModelError::Malformed {
                line,
                detail: "missing closing `}`".to_string(),
            })?;
        let body = body.trim();
        if body.is_empty() {
            return Err(ModelError::EmptyRange { line });
        }
        let mut values = Vec::new();
        for part in body.split(',') {
            values.push(parse_int(part.trim(), line)?);
        }
        values.sort_unstable();
        values.dedup();
        return Ok(ValueRange::Finite(values));
    }
    if let Some((lo, hi)) = rhs.split_once("..") {
        let lo = parse_int(lo.trim(), line)?;
        let hi = parse_int(hi.trim(), line)?;
        if lo > hi {
            return Err(ModelError::Malformed {
                line,
                detail: format!("range `{lo}..{hi}` is descending"),
            });
        }
        return Ok(ValueRange::Finite((lo..=hi).collect()));
    }
    Err(ModelError::Malformed {
        line,
        detail: format!("unrecognized range `{rhs}`"),
    })
}

fn parse_int(s: &str, line: usize) -> Result<i64, ModelError> {
    s.parse::<i64>().map_err(|_| ModelError::Malformed {
        line,
        detail: format!("`{s}` is not a 64-bit signed integer"),
    })
}
