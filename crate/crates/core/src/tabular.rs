//! Plain-text tables of event probabilities: columns `n p` or `n p q`,
//! whitespace- or comma-separated, `#` comments, optional single header
//! line. Indices must run contiguously from 1.
//!
//! A comment of the form `# certify: tends-to-zero` is a directive, not
//! prose: it transports the caller's analytic assertion that `p(n) -> 0`
//! through a file, so that re-classifying an emitted table does not fall
//! back to the weaker numeric check and change the verdict.

use crate::lemmas::{PairSeq, ProbSeq};
use std::io;
use thiserror::Error;

/// The `p -> 0` directive, exactly as the writer emits it.
pub const CERTIFY_DIRECTIVE: &str = "# certify: tends-to-zero";

#[derive(Debug, Error, PartialEq)]
pub enum TabularError {
    #[error("line {line}: {detail}")]
    BadRow { line: usize, detail: String },
    #[error("line {line}: index {found} out of order (expected {expected})")]
    NonContiguousIndex {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("line {line}: row has {found} columns but the table has {expected}")]
    InconsistentColumns {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("no data rows found")]
    Empty,
}

/// A parsed table: `p[i]` is `p(i+1)`, likewise for `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub p: Vec<f64>,
    pub q: Option<Vec<f64>>,
    pub certified_to_zero: bool,
}

impl ParsedTable {
    pub fn rows(&self) -> u64 {
        self.p.len() as u64
    }

    pub fn prob_seq(&self, label: impl Into<String>) -> ProbSeq {
        let seq = ProbSeq::from_table(label, self.p.clone());
        if self.certified_to_zero {
            seq.certify_tends_to_zero()
        } else {
            seq
        }
    }

    pub fn pair_seq(&self, label: impl Into<String>) -> Option<PairSeq> {
        self.q
            .as_ref()
            .map(|q| PairSeq::from_table(label, q.clone()))
    }
}

fn is_certify_directive(comment: &str) -> bool {
    let body = comment.trim_start_matches('#').trim();
    let Some(rest) = body.strip_prefix("certify:") else {
        return false;
    };
    rest.trim() == "tends-to-zero"
}

/// Parse a whole table from text. Line numbers in errors are 1-based.
pub fn parse_table(text: &str) -> Result<ParsedTable, TabularError> {
    let mut p = Vec::new();
    let mut q: Option<Vec<f64>> = None;
    let mut certified = false;
    let mut header_allowed = true;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.starts_with('#') {
            certified |= is_certify_directive(trimmed);
            continue;
        }
        let data = match raw.find('#') {
            Some(pos) => raw[..pos].trim(),
            None => raw.trim(),
        };
        if data.is_empty() {
            continue;
        }

        let fields: Vec<&str> = data
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();

        let index: u64 = match fields[0].parse() {
            Ok(v) => v,
            Err(_) if header_allowed => {
                // One non-numeric leading line is a column header.
                header_allowed = false;
                continue;
            }
            Err(_) => {
                return Err(TabularError::BadRow {
                    line,
                    detail: format!("index column {:?} is not an integer", fields[0]),
                });
            }
        };
        header_allowed = false;

        if fields.len() < 2 || fields.len() > 3 {
            return Err(TabularError::BadRow {
                line,
                detail: format!("expected 2 or 3 columns, found {}", fields.len()),
            });
        }
        let expected_cols = if p.is_empty() {
            if fields.len() == 3 {
                q = Some(Vec::new());
            }
            fields.len()
        } else if q.is_some() {
            3
        } else {
            2
        };
        if fields.len() != expected_cols {
            return Err(TabularError::InconsistentColumns {
                line,
                expected: expected_cols,
                found: fields.len(),
            });
        }

        let expected_index = p.len() as u64 + 1;
        if index != expected_index {
            return Err(TabularError::NonContiguousIndex {
                line,
                expected: expected_index,
                found: index,
            });
        }

        let parse_value = |field: &str| -> Result<f64, TabularError> {
            field.parse().map_err(|_| TabularError::BadRow {
                line,
                detail: format!("value {field:?} is not a number"),
            })
        };
        p.push(parse_value(fields[1])?);
        if let Some(q) = q.as_mut() {
            q.push(parse_value(fields[2])?);
        }
    }

    if p.is_empty() {
        return Err(TabularError::Empty);
    }
    Ok(ParsedTable {
        p,
        q,
        certified_to_zero: certified,
    })
}

/// Write a table the parser reads back verbatim: shortest round-trip float
/// formatting, one `n p [q]` row per index starting at 1.
pub fn write_table(
    out: &mut dyn io::Write,
    p: &[f64],
    q: Option<&[f64]>,
    certified_to_zero: bool,
) -> io::Result<()> {
    if let Some(q) = q {
        assert_eq!(p.len(), q.len(), "p and q columns must align");
        writeln!(out, "# n p q")?;
    } else {
        writeln!(out, "# n p")?;
    }
    if certified_to_zero {
        writeln!(out, "{CERTIFY_DIRECTIVE}")?;
    }
    for (i, &pv) in p.iter().enumerate() {
        match q {
            Some(q) => writeln!(out, "{} {} {}", i + 1, pv, q[i])?,
            None => writeln!(out, "{} {}", i + 1, pv)?,
        }
    }
    Ok(())
}
