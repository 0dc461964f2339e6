//! Experiment reports: one JSON record per trial, a JSON summary, and a text table.

use std::fmt::Write as _;

use crate::harness::experiment::{ExperimentSummary, TrialReport};

/// One JSON object per line.
pub fn trials_to_jsonl(trials: &[TrialReport]) -> String {
    let mut out = String::new();
    for t in trials {
        out.push_str(&serde_json::to_string(t).expect("trial serializes"));
        out.push('\n');
    }
    out
}

pub fn summary_to_json(summary: &ExperimentSummary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes") + "\n"
}

/// Fixed-width table of mean +- std per fraction and method, followed by the improvements.
pub fn format_summary(summary: &ExperimentSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} shapes, {} vertices, {} failed trials",
        summary.shapes, summary.vertex_count, summary.failed_trials
    );
    let _ = writeln!(
        s,
        "{:>6} {:>6} {:>19} {:>19} {:>19} {:>10}",
        "crop%", "method", "rms vertex (mm)", "rms surface (mm)", "max surface (mm)", "time (ms)"
    );
    for r in &summary.rows {
        let _ = writeln!(
            s,
            "{:>6.1} {:>6} {:>9.4} +- {:<6.4} {:>9.4} +- {:<6.4} {:>9.4} +- {:<6.4} {:>10.3}",
            r.fraction,
            r.method.label(),
            r.rms_vertex.mean,
            r.rms_vertex.std,
            r.rms_surface.mean,
            r.rms_surface.std,
            r.max_surface.mean,
            r.max_surface.std,
            r.total_ms.mean,
        );
    }
    for i in summary.improvements.iter().filter(|i| i.fraction.is_none()) {
        let _ = writeln!(
            s,
            "P+TPS vs {}: mean rms vertex improvement {:.4} mm, rms surface {:.4} mm",
            i.baseline.label(),
            i.rms_vertex,
            i.rms_surface
        );
    }
    s
}
