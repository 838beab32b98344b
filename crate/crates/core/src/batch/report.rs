use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use super::eval::AggregateReport;

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub table: String,
    pub files: Vec<PathBuf>,
    /// Methods whose scoring config differs from the first report's.
    pub mismatched_configs: Vec<String>,
}

fn cell(report: &AggregateReport, key: &str) -> String {
    match (report.mean_percent.get(key), report.std_percent.get(key)) {
        (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
        _ => "-".into(),
    }
}

/// Comparison table, one row per method sorted by mean overall score.
pub fn format_table(reports: &[AggregateReport]) -> String {
    let mut sorted: Vec<&AggregateReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        let key = |r: &AggregateReport| r.mean.get("overall").copied().unwrap_or(0.0);
        key(b).total_cmp(&key(a)).then_with(|| a.method.cmp(&b.method))
    });
    let rows: Vec<[String; 5]> = sorted
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                r.n_samples.to_string(),
                cell(r, "shape"),
                cell(r, "texture"),
                cell(r, "overall"),
            ]
        })
        .collect();
    let header = ["method", "n", "shape (%)", "texture (%)", "overall (%)"].map(String::from);
    let mut widths = header.clone().map(|h| h.chars().count());
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let line = row
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect::<Vec<_>>()
            .join("  ");
        writeln!(out, "{}", line.trim_end()).unwrap();
    }
    out
}

/// Reads aggregate JSON reports and writes the comparison table plus
/// per-method histogram and shape/texture correlation CSVs to `out_dir`.
pub fn report(inputs: &[PathBuf], out_dir: &Path) -> Result<ReportOutput> {
    if inputs.is_empty() {
        bail!("no reports given");
    }
    let reports = inputs.iter().map(|p| AggregateReport::load(p)).collect::<Result<Vec<_>>>()?;
    let mut mismatched = Vec::new();
    for r in &reports[1..] {
        if r.config != reports[0].config {
            log::warn!(
                "{} was scored with a different config than {}; scores are not comparable",
                r.method,
                reports[0].method
            );
            mismatched.push(r.method.clone());
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for r in &reports {
        let path = out_dir.join(format!("{}_histogram.csv", r.method));
        let mut w = csv::Writer::from_path(&path)?;
        let names: Vec<&String> = r.histogram.counts.keys().collect();
        let mut header = vec!["bin_lo".to_string(), "bin_hi".to_string()];
        header.extend(names.iter().map(|n| n.to_string()));
        w.write_record(&header)?;
        let bins = r.histogram.bins;
        for b in 0..bins {
            let mut rec = vec![
                (b as f64 / bins as f64).to_string(),
                ((b + 1) as f64 / bins as f64).to_string(),
            ];
            rec.extend(names.iter().map(|n| r.histogram.counts[*n][b].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        files.push(path);

        let path = out_dir.join(format!("{}_correlation.csv", r.method));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["id", "shape", "texture"])?;
        for p in &r.correlation {
            w.write_record([p.id.clone(), p.shape.to_string(), p.texture.to_string()])?;
        }
        w.flush()?;
        files.push(path);
    }
    let table = format_table(&reports);
    let path = out_dir.join("table.txt");
    fs::write(&path, &table)?;
    files.push(path);
    Ok(ReportOutput {
        table,
        files,
        mismatched_configs: mismatched,
    })
}
