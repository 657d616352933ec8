//! JSON rendering for score and alignment reports.
//!
//! The output is byte-stable: keys are emitted in a fixed order and every
//! ratio is printed with exactly four decimal places (`null` when undefined),
//! so downstream diffs and golden files stay meaningful.

use crate::align::{Alignment, EditOp, ErrorCounts};
use crate::oracle::OracleResult;
use crate::score::{attributed_tags, PathStep, ScoreReport};

/// Formats a ratio with four decimal places, or `null` when undefined.
pub fn fmt_ratio(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "null".to_owned(),
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn counts_object(c: &ErrorCounts) -> String {
    format!(
        "{{\"substitutions\": {}, \"insertions\": {}, \"deletions\": {}, \"reference_words\": {}, \"wer\": {}}}",
        c.substitutions,
        c.insertions,
        c.deletions,
        c.reference_words,
        fmt_ratio(c.wer())
    )
}

fn token_array(tokens: &[impl AsRef<str>]) -> String {
    let items: Vec<String> = tokens.iter().map(|t| json_string(t.as_ref())).collect();
    format!("[{}]", items.join(", "))
}

fn best_path_entry(step: &PathStep, tag: &str) -> String {
    let label = match step {
        PathStep::Arc { arc, .. } => json_string(arc.label_str()),
        PathStep::Insert { .. } => "null".to_owned(),
    };
    format!(
        "{{\"arc_label\": {label}, \"tag\": {}, \"op\": {}}}",
        json_string(tag),
        json_string(step.op_name())
    )
}

fn oracle_object(oracle: &OracleResult, indent: &str) -> String {
    let min_error_path = match &oracle.min_error_path {
        None => "null".to_owned(),
        Some(mep) => format!(
            "{{\"errors\": {}, \"wer\": {}, \"path_tokens\": {}}}",
            mep.errors,
            fmt_ratio(mep.wer),
            token_array(&mep.path_tokens)
        ),
    };
    format!(
        "{{\n{indent}  \"best_errors\": {},\n{indent}  \"best_wer\": {},\n{indent}  \"best_path_tokens\": {},\n{indent}  \"candidates_examined\": {},\n{indent}  \"min_error_path\": {}\n{indent}}}",
        oracle.best_errors,
        fmt_ratio(oracle.best_wer),
        token_array(&oracle.best_path_tokens),
        oracle.candidates_examined,
        min_error_path
    )
}

/// Renders a score report. Keys, in order: `overall`, `per_tag` (V, NV,
/// GOLD), `mwer`, `gold_wer`, `denominator`, `best_path`, and `oracle` only
/// when an oracle result is supplied.
pub fn score_report_json(report: &ScoreReport, oracle: Option<&OracleResult>) -> String {
    use crate::fst::SpanTag;

    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!(
        "  \"overall\": {},\n",
        counts_object(&report.counts.overall)
    ));
    out.push_str("  \"per_tag\": {\n");
    for (i, tag) in SpanTag::ALL.iter().enumerate() {
        let sep = if i + 1 < SpanTag::ALL.len() { "," } else { "" };
        out.push_str(&format!(
            "    {}: {}{sep}\n",
            json_string(tag.name()),
            counts_object(report.counts.tag(*tag))
        ));
    }
    out.push_str("  },\n");
    out.push_str(&format!("  \"mwer\": {},\n", fmt_ratio(report.mwer)));
    out.push_str(&format!("  \"gold_wer\": {},\n", fmt_ratio(report.gold_wer)));
    out.push_str(&format!("  \"denominator\": {},\n", report.denominator));

    let tags = attributed_tags(&report.best_path);
    if report.best_path.is_empty() {
        out.push_str("  \"best_path\": []");
    } else {
        out.push_str("  \"best_path\": [\n");
        for (i, (step, tag)) in report.best_path.iter().zip(&tags).enumerate() {
            let sep = if i + 1 < report.best_path.len() { "," } else { "" };
            out.push_str(&format!("    {}{sep}\n", best_path_entry(step, tag.name())));
        }
        out.push_str("  ]");
    }

    match oracle {
        Some(o) => {
            out.push_str(",\n");
            out.push_str(&format!("  \"oracle\": {}\n", oracle_object(o, "  ")));
        }
        None => out.push('\n'),
    }
    out.push_str("}\n");
    out
}

fn op_entry(op: &EditOp) -> String {
    let reference = op
        .reference()
        .map_or("null".to_owned(), |t| json_string(t.as_str()));
    let hypothesis = op
        .hypothesis()
        .map_or("null".to_owned(), |t| json_string(t.as_str()));
    format!(
        "{{\"op\": {}, \"ref\": {reference}, \"hyp\": {hypothesis}}}",
        json_string(op.name())
    )
}

/// Renders an alignment report: `counts` then the full `ops` list.
pub fn alignment_json(alignment: &Alignment) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!(
        "  \"counts\": {},\n",
        counts_object(&alignment.counts())
    ));
    if alignment.ops().is_empty() {
        out.push_str("  \"ops\": []\n");
    } else {
        out.push_str("  \"ops\": [\n");
        for (i, op) in alignment.ops().iter().enumerate() {
            let sep = if i + 1 < alignment.ops().len() { "," } else { "" };
            out.push_str(&format!("    {}{sep}\n", op_entry(op)));
        }
        out.push_str("  ]\n");
    }
    out.push_str("}\n");
    out
}

/// Renders per-line alignment counts: aggregate `counts` then one entry per
/// input line.
pub fn alignment_lines_json(aggregate: &ErrorCounts, lines: &[ErrorCounts]) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"counts\": {},\n", counts_object(aggregate)));
    if lines.is_empty() {
        out.push_str("  \"lines\": []\n");
    } else {
        out.push_str("  \"lines\": [\n");
        for (i, c) in lines.iter().enumerate() {
            let sep = if i + 1 < lines.len() { "," } else { "" };
            out.push_str(&format!(
                "    {{\"line\": {}, \"counts\": {}}}{sep}\n",
                i + 1,
                counts_object(c)
            ));
        }
        out.push_str("  ]\n");
    }
    out.push_str("}\n");
    out
}
