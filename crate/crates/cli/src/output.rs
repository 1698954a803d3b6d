use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use compass_core::attribution::LayerWeights;
use compass_core::metrics::AggregateReport;
use compass_core::pipeline::{MethodSpec, SampleResult};
use serde::{Deserialize, Serialize};

/// Writes `bytes` next to `path` and renames it into place, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Per-sample output of `attr`, also the input of `plot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompassRecord {
    pub sample_id: String,
    pub method: String,
    pub k: usize,
    pub probs: Vec<f64>,
    pub peak_index: usize,
    pub peak_angle_deg: f64,
    pub true_angle_deg: f64,
    pub dae: f64,
    pub ea: bool,
    pub degenerate: bool,
    pub field_degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_weights: Option<LayerWeights>,
}

impl From<&SampleResult> for CompassRecord {
    fn from(r: &SampleResult) -> Self {
        CompassRecord {
            sample_id: r.sample_id.clone(),
            method: r.method.clone(),
            k: r.compass.k(),
            probs: r.compass.probs.clone(),
            peak_index: r.compass.peak_index,
            peak_angle_deg: r.compass.peak_angle_deg,
            true_angle_deg: r.true_angle_deg,
            dae: r.metrics.dae,
            ea: r.metrics.ea,
            degenerate: r.compass.degenerate,
            field_degenerate: r.field_degenerate,
            layer_weights: r.layer_weights.clone(),
        }
    }
}

/// Config echo written as `run.json` by every command.
#[derive(Debug, Clone, Serialize)]
pub struct RunEcho<T: Serialize> {
    pub command: &'static str,
    pub engine_version: &'static str,
    pub config: T,
}

impl<T: Serialize> RunEcho<T> {
    pub fn new(command: &'static str, config: T) -> Self {
        RunEcho {
            command,
            engine_version: env!("CARGO_PKG_VERSION"),
            config,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: MethodSpec,
    pub report: AggregateReport,
}

pub const TABLE_HEADER: [&str; 8] = [
    "method", "n", "dae_mean", "dae_ci_lo", "dae_ci_hi", "ea", "ea_ci_lo", "ea_ci_hi",
];

/// Headline table, one row per method.
pub fn table_csv(rows: &[MethodReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        let o = &r.report.overall;
        w.write_record([
            r.method.label.clone(),
            o.n.to_string(),
            format!("{:.4}", o.dae_mean),
            format!("{:.4}", o.dae_ci.lower),
            format!("{:.4}", o.dae_ci.upper),
            format!("{:.4}", o.ea_rate),
            format!("{:.4}", o.ea_ci.lower),
            format!("{:.4}", o.ea_ci.upper),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Per-class and correct/incorrect breakdowns, one row per method and split.
pub fn breakdown_csv(rows: &[MethodReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "split", "n", "dae_mean", "ea", "degenerate"])?;
    for r in rows {
        let rep = &r.report;
        let mut splits: Vec<(String, &compass_core::metrics::Summary)> = rep
            .per_class
            .iter()
            .map(|(c, s)| (format!("gt_{c}"), s))
            .collect();
        if let Some(s) = &rep.correct {
            splits.push(("correct".into(), s));
        }
        if let Some(s) = &rep.incorrect {
            splits.push(("incorrect".into(), s));
        }
        for (name, s) in splits {
            w.write_record([
                r.method.label.clone(),
                name,
                s.n.to_string(),
                format!("{:.4}", s.dae_mean),
                format!("{:.4}", s.ea_rate),
                s.degenerate.to_string(),
            ])?;
        }
    }
    Ok(w.into_inner()?)
}
