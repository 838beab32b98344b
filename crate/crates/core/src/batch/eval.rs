use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{list_meshes, sample_seed, with_pool};
use crate::obj::load_mesh;
use crate::scoring::{score_pair, Diagnostic, ScoreConfig, ScoreReport};

pub const HISTOGRAM_BINS: usize = 50;

/// Ground-truth samples paired with their reconstructions by file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchManifest {
    /// `(id, ground truth, reconstruction if present)`, sorted by id.
    pub entries: Vec<(String, PathBuf, Option<PathBuf>)>,
    /// Reconstructions without a ground-truth counterpart.
    pub unmatched: Vec<String>,
}

impl BatchManifest {
    pub fn resolve(gt_dir: &Path, recon_dir: &Path) -> Result<Self> {
        let gt = list_meshes(gt_dir)?;
        let mut recon = list_meshes(recon_dir)?;
        let entries = gt
            .into_iter()
            .map(|(id, path)| {
                let r = recon.remove(&id);
                (id, path, r)
            })
            .collect();
        Ok(Self {
            entries,
            unmatched: recon.into_keys().collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    /// No reconstruction with this stem; scored 0.
    Missing,
    /// Reconstruction could not be loaded; scored 0.
    ReconError,
    /// Ground truth could not be loaded; scored 0.
    GtError,
    /// A mesh had no surface area; scored 0.
    ZeroArea,
}

/// One line of the per-sample CSV. Scores are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub id: String,
    pub status: SampleStatus,
    pub s_area: f64,
    pub s_shape: f64,
    pub s_texture: Option<f64>,
    pub s_overall: f64,
    pub h_xy: Option<f64>,
    pub h_yx: Option<f64>,
    pub ds_xy: Option<f64>,
    pub ds_yx: Option<f64>,
    pub dt_xy: Option<f64>,
    pub dt_yx: Option<f64>,
    pub notes: String,
}

/// Header of the per-sample CSV, in column order.
pub const CSV_HEADER: &str = "id,status,s_area,s_shape,s_texture,s_overall,h_xy,h_yx,ds_xy,ds_yx,dt_xy,dt_yx,notes";

impl SampleRow {
    fn from_report(id: &str, status: SampleStatus, report: &ScoreReport, notes: String) -> Self {
        let xy = report.recon_to_gt.as_ref();
        let yx = report.gt_to_recon.as_ref();
        Self {
            id: id.to_string(),
            status,
            s_area: report.area_score,
            s_shape: report.shape_score,
            s_texture: report.texture_score,
            s_overall: report.overall,
            h_xy: xy.map(|m| m.hit_rate),
            h_yx: yx.map(|m| m.hit_rate),
            ds_xy: xy.map(|m| m.mean_shape_distance),
            ds_yx: yx.map(|m| m.mean_shape_distance),
            dt_xy: xy.map(|m| m.mean_texture_distance),
            dt_yx: yx.map(|m| m.mean_texture_distance),
            notes,
        }
    }

    fn zero(id: &str, status: SampleStatus, config: &ScoreConfig, notes: String) -> Self {
        Self::from_report(id, status, &ScoreReport::zero(config, 0.0, 0.0, Vec::new()), notes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: usize,
    pub range: [f64; 2],
    pub counts: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub id: String,
    pub shape: f64,
    pub texture: f64,
}

/// Aggregate of one evaluated submission. `mean`/`std` hold fractions keyed
/// by score name; the `_percent` maps hold the same values times 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub method: String,
    pub n_samples: usize,
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
    pub mean_percent: BTreeMap<String, f64>,
    pub std_percent: BTreeMap<String, f64>,
    pub histogram: Histogram,
    pub correlation: Vec<CorrelationPoint>,
    pub flagged: Vec<String>,
    pub unmatched_reconstructions: Vec<String>,
    pub config: ScoreConfig,
    pub samples: Vec<SampleRow>,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn histogram_counts(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

impl AggregateReport {
    pub fn from_rows(method: &str, rows: Vec<SampleRow>, config: &ScoreConfig, unmatched: Vec<String>) -> Self {
        let mut columns: Vec<(&str, Vec<f64>)> = vec![
            ("area", rows.iter().map(|r| r.s_area).collect()),
            ("shape", rows.iter().map(|r| r.s_shape).collect()),
            ("overall", rows.iter().map(|r| r.s_overall).collect()),
        ];
        if config.texture {
            columns.push(("texture", rows.iter().map(|r| r.s_texture.unwrap_or(0.0)).collect()));
        }
        let (mut mean, mut std) = (BTreeMap::new(), BTreeMap::new());
        let mut counts = BTreeMap::new();
        for (name, values) in &columns {
            let (m, s) = mean_std(values);
            mean.insert(name.to_string(), m);
            std.insert(name.to_string(), s);
            if *name != "area" {
                counts.insert(name.to_string(), histogram_counts(values, HISTOGRAM_BINS));
            }
        }
        let percent = |map: &BTreeMap<String, f64>| map.iter().map(|(k, v)| (k.clone(), v * 100.0)).collect();
        let correlation = if config.texture {
            rows.iter()
                .map(|r| CorrelationPoint {
                    id: r.id.clone(),
                    shape: r.s_shape,
                    texture: r.s_texture.unwrap_or(0.0),
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            method: method.to_string(),
            n_samples: rows.len(),
            mean_percent: percent(&mean),
            std_percent: percent(&std),
            mean,
            std,
            histogram: Histogram {
                bins: HISTOGRAM_BINS,
                range: [0.0, 1.0],
                counts,
            },
            correlation,
            flagged: rows.iter().filter(|r| r.status != SampleStatus::Ok).map(|r| r.id.clone()).collect(),
            unmatched_reconstructions: unmatched,
            config: config.clone(),
            samples: rows,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub config: ScoreConfig,
    pub method: String,
    pub jobs: usize,
}

/// Output locations of an evaluation run.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub report: AggregateReport,
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Scores one pair, folding every failure into a zero-score row.
fn score_entry(id: &str, gt: &Path, recon: Option<&Path>, config: &ScoreConfig) -> SampleRow {
    let mut config = config.clone();
    config.seed = sample_seed(config.seed, id);
    let Some(recon) = recon else {
        return SampleRow::zero(id, SampleStatus::Missing, &config, "no reconstruction".into());
    };
    let gt_mesh = match load_mesh(gt) {
        Ok(b) => b.mesh,
        Err(e) => return SampleRow::zero(id, SampleStatus::GtError, &config, e.to_string()),
    };
    let recon_mesh = match load_mesh(recon) {
        Ok(b) => b.mesh,
        Err(e) => return SampleRow::zero(id, SampleStatus::ReconError, &config, e.to_string()),
    };
    match score_pair(&gt_mesh, &recon_mesh, &config) {
        Ok(report) => {
            let zero_area = report
                .diagnostics
                .iter()
                .any(|d| matches!(d, Diagnostic::ZeroAreaGroundTruth | Diagnostic::ZeroAreaReconstruction));
            let notes = report
                .diagnostics
                .iter()
                .map(|d| serde_json::to_value(d).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(";");
            let status = if zero_area { SampleStatus::ZeroArea } else { SampleStatus::Ok };
            SampleRow::from_report(id, status, &report, notes)
        }
        Err(e) => SampleRow::zero(id, SampleStatus::ReconError, &config, e.to_string()),
    }
}

/// Scores every ground-truth sample against the reconstruction with the same
/// stem and writes `<output>.csv` and `<output>.json`.
pub fn eval(gt_dir: &Path, recon_dir: &Path, output: &Path, options: &EvalOptions) -> Result<EvalOutput> {
    options.config.validate()?;
    let manifest = BatchManifest::resolve(gt_dir, recon_dir)?;
    for id in &manifest.unmatched {
        log::warn!("reconstruction {id} has no ground truth and is ignored");
    }
    let rows = with_pool(options.jobs, || {
        manifest
            .entries
            .par_iter()
            .map(|(id, gt, recon)| score_entry(id, gt, recon.as_deref(), &options.config))
            .collect::<Vec<_>>()
    })?;
    for row in rows.iter().filter(|r| r.status != SampleStatus::Ok) {
        log::warn!("{}: {:?} ({})", row.id, row.status, row.notes);
    }
    let report = AggregateReport::from_rows(&options.method, rows, &options.config, manifest.unmatched.clone());

    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let csv_path = output.with_extension("csv");
    let json_path = output.with_extension("json");
    write_rows(&csv_path, &report.samples)?;
    fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    Ok(EvalOutput {
        report,
        csv: csv_path,
        json: json_path,
    })
}

pub fn write_rows(path: &Path, rows: &[SampleRow]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    writer.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a per-sample CSV back. Floats are parsed with `str::parse`, which
/// round-trips the written values exactly.
pub fn read_rows(path: &Path) -> Result<Vec<SampleRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    if reader.headers()?.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        bail!("{} does not have the per-sample header", path.display());
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let ctx = || format!("{} row {}", path.display(), line + 2);
        let num = |i: usize| -> Result<f64> { record[i].parse().with_context(ctx) };
        let opt = |i: usize| -> Result<Option<f64>> {
            match &record[i] {
                "" => Ok(None),
                v => Ok(Some(v.parse().with_context(ctx)?)),
            }
        };
        let status = serde_json::from_value(serde_json::Value::String(record[1].to_string())).with_context(ctx)?;
        rows.push(SampleRow {
            id: record[0].to_string(),
            status,
            s_area: num(2)?,
            s_shape: num(3)?,
            s_texture: opt(4)?,
            s_overall: num(5)?,
            h_xy: opt(6)?,
            h_yx: opt(7)?,
            ds_xy: opt(8)?,
            ds_yx: opt(9)?,
            dt_xy: opt(10)?,
            dt_yx: opt(11)?,
            notes: record[12].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, shape: f64, texture: f64, overall: f64) -> SampleRow {
        SampleRow {
            id: id.into(),
            status: SampleStatus::Ok,
            s_area: 1.0,
            s_shape: shape,
            s_texture: Some(texture),
            s_overall: overall,
            h_xy: None,
            h_yx: None,
            ds_xy: None,
            ds_yx: None,
            dt_xy: None,
            dt_yx: None,
            notes: String::new(),
        }
    }

    #[test]
    fn aggregate_statistics() {
        let rows = vec![row("a", 0.2, 0.4, 0.3), row("b", 0.6, 1.0, 0.8), row("c", 1.0, 0.0, 0.5)];
        let agg = AggregateReport::from_rows("m", rows, &ScoreConfig::new(0.1, 0.1), vec![]);
        assert!((agg.mean["shape"] - 0.6).abs() < 1e-12);
        let expected_std = ((0.16 + 0.0 + 0.16) / 3.0f64).sqrt();
        assert!((agg.std["shape"] - expected_std).abs() < 1e-12);
        assert!((agg.mean_percent["overall"] - 53.333333333333336).abs() < 1e-9);
        for counts in agg.histogram.counts.values() {
            assert_eq!(counts.iter().sum::<usize>(), 3);
        }
        // 1.0 falls into the last bin, 0.0 into the first.
        assert_eq!(agg.histogram.counts["texture"][49], 1);
        assert_eq!(agg.histogram.counts["texture"][0], 1);
        assert_eq!(agg.correlation.len(), 3);
    }

    #[test]
    fn csv_round_trip_keeps_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rows.csv");
        let mut rows = vec![row("x,y", 0.1 + 0.2, 1.0 / 3.0, 0.25)];
        rows[0].h_xy = Some(0.999);
        write_rows(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(read_rows(&p).unwrap(), rows);
    }
}
