//! Report rendering: sensitivity and contingency tables as TSV (stable,
//! machine-readable) and Markdown (annotated for reading).
//!
//! Undefined cells render as `n/a`. In Markdown, the lowest standard
//! deviation within each correlation block is bold and the highest italic.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::harness::{
    ContingencyAxis, ContingencyReport, OutcomeTable, SensitivityReport, SigmaCell,
};
use crate::Result;

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

fn sigma_cell(c: &SigmaCell) -> String {
    cell(c.sigma)
}

/// Marks `value` bold if it is the minimum of `pool`, italic if it is the
/// maximum (defined values only).
fn annotate(value: Option<f64>, pool: &[Option<f64>]) -> String {
    let defined: Vec<f64> = pool.iter().copied().flatten().collect();
    let text = cell(value);
    if defined.len() < 2 {
        return text;
    }
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match value {
        Some(v) if v == min => format!("**{text}**"),
        Some(v) if v == max && max > min => format!("*{text}*"),
        _ => text,
    }
}

pub fn render_sensitivity_tsv(r: &SensitivityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "predictor\t{}", r.predictor.id());
    let _ = writeln!(out, "kappa\t{}", r.kappa);
    let metric_heads: Vec<String> = r.metric_axis.iter().map(|m| m.label()).collect();
    let _ = writeln!(
        out,
        "corr\tmodel\t{}\tsigma(theta)\texcluded",
        metric_heads.join("\t")
    );
    for (ki, kind) in r.corr_kinds.iter().enumerate() {
        for (mi, model) in r.model_axis.iter().enumerate() {
            let row: Vec<String> = r.cells[ki][mi].iter().map(|&v| cell(v)).collect();
            let sigma = &r.sigma_theta[ki][mi];
            let _ = writeln!(
                out,
                "{kind}\t{}\t{}\t{}\t{}",
                model.label(),
                row.join("\t"),
                sigma_cell(sigma),
                sigma.excluded
            );
        }
        let sig_row: Vec<String> = r.sigma_s[ki].iter().map(sigma_cell).collect();
        let _ = writeln!(out, "{kind}\tsigma(S)\t{}\t\t", sig_row.join("\t"));
        let excl_row: Vec<String> = r.sigma_s[ki]
            .iter()
            .map(|c| c.excluded.to_string())
            .collect();
        let _ = writeln!(
            out,
            "{kind}\tsigma(S):excluded\t{}\t\t",
            excl_row.join("\t")
        );
    }
    out
}

pub fn render_sensitivity_md(r: &SensitivityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Sensitivity: {}\n", r.predictor.label());
    let _ = writeln!(out, "Retrieval depth kappa = {}.\n", r.kappa);
    for (ki, kind) in r.corr_kinds.iter().enumerate() {
        let _ = writeln!(out, "## Correlation: {kind}\n");
        let heads: Vec<String> = r.metric_axis.iter().map(|m| m.label()).collect();
        let _ = writeln!(
            out,
            "| Model | {} | sigma(theta) | excluded |",
            heads.join(" | ")
        );
        let _ = writeln!(out, "|{}|", vec!["---"; r.metric_axis.len() + 3].join("|"));
        let theta_pool: Vec<Option<f64>> = r.sigma_theta[ki].iter().map(|c| c.sigma).collect();
        for (mi, model) in r.model_axis.iter().enumerate() {
            let row: Vec<String> = r.cells[ki][mi].iter().map(|&v| cell(v)).collect();
            let sigma = &r.sigma_theta[ki][mi];
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                model.label(),
                row.join(" | "),
                annotate(sigma.sigma, &theta_pool),
                sigma.excluded
            );
        }
        let s_pool: Vec<Option<f64>> = r.sigma_s[ki].iter().map(|c| c.sigma).collect();
        let sig_row: Vec<String> = r.sigma_s[ki]
            .iter()
            .map(|c| annotate(c.sigma, &s_pool))
            .collect();
        let _ = writeln!(out, "| sigma(S) | {} |  |  |", sig_row.join(" | "));
        let _ = writeln!(out);
    }
    let _ = writeln!(
        out,
        "Lowest standard deviation per block in **bold**, highest in *italics*; \
         undefined cells are n/a and excluded from sigma."
    );
    out
}

fn contingency_heads(axis: ContingencyAxis) -> (&'static str, &'static str) {
    match axis {
        ContingencyAxis::Metric => ("Model", "Metric"),
        ContingencyAxis::Model => ("Metric", "Model"),
    }
}

pub fn render_contingency_tsv(r: &ContingencyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "contingency\t{}", r.axis.id());
    let _ = writeln!(out, "rank_by\t{}", r.rank_by);
    let battery: Vec<&str> = r.battery.iter().map(|p| p.id()).collect();
    let _ = writeln!(out, "battery\t{}", battery.join(","));
    if r.primary.len() < 2 {
        let _ = writeln!(out, "(no context pairs on this axis)");
        return out;
    }
    let (group_head, primary_head) = contingency_heads(r.axis);
    let _ = writeln!(
        out,
        "{group_head}\t{primary_head}\t{}",
        r.primary[1..].join("\t")
    );
    for i in 0..r.primary.len().saturating_sub(1) {
        for (g, group) in r.groups.iter().enumerate() {
            let cols: Vec<String> = (1..r.primary.len())
                .map(|j| {
                    if j > i {
                        cell(r.cells[i][j][g])
                    } else {
                        String::new()
                    }
                })
                .collect();
            let _ = writeln!(out, "{group}\t{}\t{}", r.primary[i], cols.join("\t"));
        }
    }
    out
}

pub fn render_contingency_md(r: &ContingencyReport) -> String {
    let mut out = String::new();
    let what = match r.axis {
        ContingencyAxis::Metric => "IR metrics",
        ContingencyAxis::Model => "IR models",
    };
    let _ = writeln!(
        out,
        "# Rank contingency across {what} (outcomes ranked by {})\n",
        r.rank_by
    );
    let battery: Vec<&str> = r.battery.iter().map(|p| p.label()).collect();
    let _ = writeln!(
        out,
        "Each cell: Kendall tau between the orderings of {} predictors \
         ({}) induced by the row and column contexts.\n",
        r.battery.len(),
        battery.join(", ")
    );
    if r.primary.len() < 2 {
        let _ = writeln!(out, "No context pairs on this axis.");
        return out;
    }
    let (group_head, primary_head) = contingency_heads(r.axis);
    let _ = writeln!(
        out,
        "| {group_head} | {primary_head} | {} |",
        r.primary[1..].join(" | ")
    );
    let _ = writeln!(out, "|{}|", vec!["---"; r.primary.len() + 1].join("|"));
    for i in 0..r.primary.len().saturating_sub(1) {
        for (g, group) in r.groups.iter().enumerate() {
            let cols: Vec<String> = (1..r.primary.len())
                .map(|j| {
                    if j > i {
                        cell(r.cells[i][j][g])
                    } else {
                        String::new()
                    }
                })
                .collect();
            let _ = writeln!(out, "| {group} | {} | {} |", r.primary[i], cols.join(" | "));
        }
    }
    out
}

/// Full per-cell dump: one line per (predictor, metric, model, correlation).
pub fn render_outcomes_tsv(table: &OutcomeTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "predictor\tmetric\tmodel\tkappa\tcorrelation\tvalue");
    for ((pred, metric, model), by_corr) in table.iter() {
        for (kind, value) in by_corr {
            let _ = writeln!(
                out,
                "{pred}\t{metric}\t{model}\t{}\t{kind}\t{}",
                table.kappa,
                cell(*value)
            );
        }
    }
    out
}

/// Writes all grid reports into `dir`, returning the paths written.
pub fn write_reports(
    dir: &Path,
    sensitivity: &[SensitivityReport],
    contingency: &[ContingencyReport],
    table: &OutcomeTable,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: String, content: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, content)?;
        written.push(path);
        Ok(())
    };

    emit("outcomes.tsv".to_string(), render_outcomes_tsv(table))?;
    for r in sensitivity {
        emit(
            format!("sensitivity_{}.tsv", r.predictor.id()),
            render_sensitivity_tsv(r),
        )?;
        emit(
            format!("sensitivity_{}.md", r.predictor.id()),
            render_sensitivity_md(r),
        )?;
    }
    for r in contingency {
        let stem = format!("contingency_{}_{}", r.axis.id(), r.rank_by);
        emit(format!("{stem}.tsv"), render_contingency_tsv(r))?;
        emit(format!("{stem}.md"), render_contingency_md(r))?;
    }
    Ok(written)
}
