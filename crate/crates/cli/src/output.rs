//! Shared output plumbing: the `--output-format` switch, the json-lines
//! schema stamp, and the verdict printers used by `classify` and `analyze`.

use clap::ValueEnum;
use limsup_core::{Conclusion, LemmaVerdict};
use serde_json::{json, Value};

/// Version stamp carried by every json-lines record.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Aligned human-readable text.
    Table,
    /// One self-contained JSON record per line.
    JsonLines,
}

/// Print one json-lines record, stamping the schema version.
pub fn emit(mut value: Value) {
    value["schema"] = SCHEMA_VERSION.into();
    println!("{value}");
}

pub fn conclusion_sentence(c: Conclusion) -> &'static str {
    match c {
        Conclusion::IoZero => "almost surely only finitely many of the events occur",
        Conclusion::IoOne => "almost surely infinitely many of the events occur",
        Conclusion::Unknown => "no rule applied at this horizon; the verdict is open",
    }
}

pub fn print_verdict_table(v: &LemmaVerdict) {
    println!("conditions:");
    for r in &v.condition_reports {
        let s = match r.verdict.tail_exponent {
            Some(s) => format!("{s:.4}"),
            None => "-".to_string(),
        };
        println!(
            "  {:<10} {:<13} sum {:<13.6e} s {}",
            r.id.to_string(),
            r.verdict.class.to_string(),
            r.verdict.partial_sum,
            s
        );
        println!("      {}", r.verdict.evidence);
    }
    match v.fired_by {
        Some(rule) => println!("verdict: {} (rule: {rule})", v.conclusion),
        None => println!("verdict: {}", v.conclusion),
    }
    println!("  {}", conclusion_sentence(v.conclusion));
    if !v.notes.is_empty() {
        println!("notes:");
        for n in &v.notes {
            println!("  - {n}");
        }
    }
}

pub fn emit_verdict_json(v: &LemmaVerdict) {
    for r in &v.condition_reports {
        emit(json!({
            "record": "condition",
            "id": r.id,
            "class": r.verdict.class,
            "partial_sum": r.verdict.partial_sum,
            "n_scanned": r.verdict.n_scanned,
            "tail_exponent": r.verdict.tail_exponent,
            "evidence": r.verdict.evidence,
        }));
    }
    emit(json!({
        "record": "verdict",
        "conclusion": v.conclusion,
        "rule": v.fired_by,
        "notes": v.notes,
    }));
}
