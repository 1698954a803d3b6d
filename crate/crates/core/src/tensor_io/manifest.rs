//! JSON manifest describing a set of evaluation samples.
//!
//! Blob paths inside the manifest are relative to the manifest's directory.
//! Loading is eager: every blob is parsed and shape-checked before the
//! manifest is handed back, so downstream code can assume consistency.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::blob::{read_blob, TensorBlob};
use super::grid::infer_grid;
use crate::error::{Error, Result};

/// The four relation classes, in the canonical option order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionClass {
    Left,
    Right,
    Above,
    Below,
}

impl DirectionClass {
    pub const ALL: [DirectionClass; 4] = [
        DirectionClass::Left,
        DirectionClass::Right,
        DirectionClass::Above,
        DirectionClass::Below,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Canonical angle in degrees: 0 is right, 90 is up.
    pub fn angle_deg(self) -> f64 {
        match self {
            DirectionClass::Right => 0.0,
            DirectionClass::Above => 90.0,
            DirectionClass::Left => 180.0,
            DirectionClass::Below => 270.0,
        }
    }

    /// Class whose 90-degree window `[angle - 45, angle + 45)` contains `deg`.
    pub fn from_angle(deg: f64) -> Self {
        let a = (deg + 45.0).rem_euclid(360.0);
        match (a / 90.0) as usize {
            0 => DirectionClass::Right,
            1 => DirectionClass::Above,
            2 => DirectionClass::Left,
            _ => DirectionClass::Below,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DirectionClass::Left => "left",
            DirectionClass::Right => "right",
            DirectionClass::Above => "above",
            DirectionClass::Below => "below",
        }
    }
}

impl fmt::Display for DirectionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DirectionClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown direction class {s:?}"))
    }
}

pub const CLASS_ORDER: [&str; 4] = ["left", "right", "above", "below"];

/// Axis-aligned box in pixels, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x && px <= self.x + self.w && py >= self.y && py <= self.y + self.h
    }

    /// Clips the box to `[0, image_w] x [0, image_h]`. Returns the clipped box
    /// and whether anything changed; `None` if nothing is left.
    pub fn clamp_to(&self, image_w: f64, image_h: f64) -> Option<(BBox, bool)> {
        let x0 = self.x.clamp(0.0, image_w);
        let y0 = self.y.clamp(0.0, image_h);
        let x1 = (self.x + self.w).clamp(0.0, image_w);
        let y1 = (self.y + self.h).clamp(0.0, image_h);
        let out = BBox::new(x0, y0, x1 - x0, y1 - y0);
        if out.w <= 0.0 || out.h <= 0.0 {
            return None;
        }
        Some((out, out != *self))
    }
}

/// Which scalar the stored gradients were taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradTarget {
    /// Plain ground-truth logit.
    PlainGt,
    /// Plain predicted-class logit.
    PlainPred,
    /// Contrastive target resolved in ground-truth mode.
    ContrastiveGt,
    /// Contrastive target resolved in prediction mode.
    ContrastivePred,
}

impl GradTarget {
    pub fn name(self) -> &'static str {
        match self {
            GradTarget::PlainGt => "plain_gt",
            GradTarget::PlainPred => "plain_pred",
            GradTarget::ContrastiveGt => "contrastive_gt",
            GradTarget::ContrastivePred => "contrastive_pred",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRef {
    pub path: String,
    /// Half-open `[start, end)` range of the vision tokens in the sequence.
    pub vision_start: usize,
    pub vision_end: usize,
    pub last_token: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCamRef {
    pub activations: String,
    pub gradients: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlobRefs {
    /// `[L, |V|, d]` hidden states for the manifest's layer list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<String>,
    /// `[L, |V|, d]` gradients, one blob per target.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub gradients: BTreeMap<GradTarget, String>,
    /// `[L, H, T, T]` attention probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionRef>,
    /// `[S, |V|, d]` per-step gradients of the plain ground-truth logit at layer -2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ig_step_grads: Option<String>,
    /// `[C, H', W']` activations and gradients from the last vision encoder layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradcam: Option<GradCamRef>,
    /// `[3, 4]` logits: unoccluded, true sector occluded, opposite occluded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion_logits: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub image_w: u32,
    pub image_h: u32,
    pub ref_box: BBox,
    pub tgt_box: BBox,
    pub gt_class: DirectionClass,
    /// Logits in class order (left, right, above, below).
    pub logits: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_w: Option<usize>,
    /// Layer indices of the slices in the hidden/gradient blobs; falls back
    /// to the manifest provenance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<i32>>,
    #[serde(default)]
    pub blobs: BlobRefs,
}

impl SampleRecord {
    pub fn grid(&self) -> Result<(usize, usize)> {
        match (self.grid_h, self.grid_w) {
            (Some(h), Some(w)) => Ok((h, w)),
            _ => Err(Error::InvalidSample {
                sample_id: self.sample_id.clone(),
                message: "token grid dimensions are unknown".into(),
            }),
        }
    }

    pub fn num_tokens(&self) -> Result<usize> {
        self.grid().map(|(h, w)| h * w)
    }

    pub fn predicted_class(&self) -> DirectionClass {
        let mut best = 0;
        for i in 1..self.logits.len().min(4) {
            if self.logits[i] > self.logits[best] {
                best = i;
            }
        }
        DirectionClass::from_index(best).unwrap()
    }

    pub fn is_correct(&self) -> bool {
        self.predicted_class() == self.gt_class
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub model: String,
    /// Layer indices stored in hidden/gradient blobs, in slice order.
    #[serde(default)]
    pub layers: Vec<i32>,
    #[serde(default)]
    pub target_modes: Vec<GradTarget>,
}

/// Non-fatal adjustments made while loading.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadReport {
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub class_order: Vec<String>,
    #[serde(default)]
    pub provenance: Provenance,
    pub samples: Vec<SampleRecord>,
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    pub report: LoadReport,
}

/// Tensors belonging to one sample, held in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleTensors {
    pub hidden: Option<TensorBlob>,
    pub gradients: BTreeMap<GradTarget, TensorBlob>,
    pub attention: Option<TensorBlob>,
    pub ig_step_grads: Option<TensorBlob>,
    pub gradcam_act: Option<TensorBlob>,
    pub gradcam_grad: Option<TensorBlob>,
    pub occlusion_logits: Option<TensorBlob>,
}

impl Manifest {
    pub fn new(dataset: impl Into<String>, provenance: Provenance) -> Self {
        Manifest {
            dataset: dataset.into(),
            class_order: CLASS_ORDER.iter().map(|s| s.to_string()).collect(),
            provenance,
            samples: Vec::new(),
            base_dir: PathBuf::new(),
            report: LoadReport::default(),
        }
    }

    pub fn layers_for(&self, record: &SampleRecord) -> Vec<i32> {
        record
            .layers
            .clone()
            .unwrap_or_else(|| self.provenance.layers.clone())
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn get(&self, sample_id: &str) -> Option<&SampleRecord> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }

    /// Reads every tensor referenced by `record`.
    pub fn load_tensors(&self, record: &SampleRecord) -> Result<SampleTensors> {
        let b = &record.blobs;
        let load = |rel: &Option<String>| -> Result<Option<TensorBlob>> {
            rel.as_ref().map(|r| read_blob(self.resolve(r))).transpose()
        };
        let mut gradients = BTreeMap::new();
        for (target, rel) in &b.gradients {
            gradients.insert(*target, read_blob(self.resolve(rel))?);
        }
        Ok(SampleTensors {
            hidden: load(&b.hidden)?,
            gradients,
            attention: load(&b.attention.as_ref().map(|a| a.path.clone()))?,
            ig_step_grads: load(&b.ig_step_grads)?,
            gradcam_act: load(&b.gradcam.as_ref().map(|g| g.activations.clone()))?,
            gradcam_grad: load(&b.gradcam.as_ref().map(|g| g.gradients.clone()))?,
            occlusion_logits: load(&b.occlusion_logits)?,
        })
    }

    /// Serializes the manifest as pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::ManifestSyntax {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    manifest.base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    validate_manifest(&mut manifest, path)?;
    Ok(manifest)
}

fn validate_manifest(m: &mut Manifest, path: &Path) -> Result<()> {
    if m.class_order != CLASS_ORDER {
        return Err(Error::ManifestSyntax {
            path: path.to_path_buf(),
            message: format!(
                "class_order must be {CLASS_ORDER:?}, found {:?}",
                m.class_order
            ),
        });
    }
    let mut seen = HashSet::new();
    for s in &m.samples {
        if !seen.insert(s.sample_id.as_str()) {
            return Err(Error::DuplicateSampleId(s.sample_id.clone()));
        }
    }
    let mut warnings = Vec::new();
    let provenance_layers = m.provenance.layers.clone();
    let base = m.base_dir.clone();
    for s in &mut m.samples {
        validate_record(s, &base, &provenance_layers, &mut warnings)?;
    }
    m.report.warnings = warnings;
    Ok(())
}

fn invalid(s: &SampleRecord, message: impl Into<String>) -> Error {
    Error::InvalidSample {
        sample_id: s.sample_id.clone(),
        message: message.into(),
    }
}

fn validate_record(
    s: &mut SampleRecord,
    base: &Path,
    provenance_layers: &[i32],
    warnings: &mut Vec<String>,
) -> Result<()> {
    if s.logits.len() != 4 {
        return Err(Error::LogitsLength {
            sample_id: s.sample_id.clone(),
            found: s.logits.len(),
        });
    }
    if s.logits.iter().any(|z| !z.is_finite()) {
        return Err(invalid(s, "logits must be finite"));
    }
    if s.image_w == 0 || s.image_h == 0 {
        return Err(invalid(s, "image dimensions must be positive"));
    }
    let (iw, ih) = (f64::from(s.image_w), f64::from(s.image_h));
    for which in ["ref_box", "tgt_box"] {
        let b = if which == "ref_box" { s.ref_box } else { s.tgt_box };
        if !(b.w > 0.0 && b.h > 0.0) || ![b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite()) {
            return Err(invalid(s, format!("{which} must have positive finite size")));
        }
        let (clamped, changed) = b.clamp_to(iw, ih).ok_or(Error::EmptyBox {
            sample_id: s.sample_id.clone(),
            which,
        })?;
        if changed {
            warnings.push(format!(
                "{}: {which} clamped from {:?} to {:?}",
                s.sample_id, b, clamped
            ));
            if which == "ref_box" {
                s.ref_box = clamped;
            } else {
                s.tgt_box = clamped;
            }
        }
    }

    let id = s.sample_id.clone();
    let load = |name: &str, rel: &str| -> Result<TensorBlob> {
        let p = base.join(rel);
        if !p.is_file() {
            return Err(Error::DanglingBlobRef {
                sample_id: id.clone(),
                blob: name.to_string(),
                path: p,
            });
        }
        read_blob(&p)
    };

    // token count as seen by each vision-token tensor
    let mut token_counts: Vec<(String, usize)> = Vec::new();
    let layers = s.layers.clone().unwrap_or_else(|| provenance_layers.to_vec());

    let mut hidden_shape = None;
    if let Some(rel) = s.blobs.hidden.clone() {
        let t = load("hidden", &rel)?;
        if t.ndim() != 3 {
            return Err(invalid(s, format!("hidden must be [L, V, d], got {:?}", t.shape())));
        }
        if t.dims()[0] != layers.len() {
            return Err(invalid(
                s,
                format!(
                    "hidden has {} layers but the layer list has {}",
                    t.dims()[0],
                    layers.len()
                ),
            ));
        }
        token_counts.push(("hidden".into(), t.dims()[1]));
        hidden_shape = Some(t.dims());
    }
    for (target, rel) in s.blobs.gradients.clone() {
        let name = format!("gradients.{}", target.name());
        let t = load(&name, &rel)?;
        if t.ndim() != 3 {
            return Err(invalid(s, format!("{name} must be [L, V, d], got {:?}", t.shape())));
        }
        if let Some(h) = &hidden_shape {
            if &t.dims() != h {
                return Err(invalid(
                    s,
                    format!("{name} shape {:?} differs from hidden {:?}", t.shape(), h),
                ));
            }
        }
        token_counts.push((name, t.dims()[1]));
    }
    if let Some(rel) = s.blobs.ig_step_grads.clone() {
        let t = load("ig_step_grads", &rel)?;
        if t.ndim() != 3 || t.dims()[0] == 0 {
            return Err(invalid(s, format!("ig_step_grads must be [S>=1, V, d], got {:?}", t.shape())));
        }
        if let Some(h) = &hidden_shape {
            if t.dims()[1..] != h[1..] {
                return Err(invalid(s, "ig_step_grads token/feature dims differ from hidden"));
            }
        }
        token_counts.push(("ig_step_grads".into(), t.dims()[1]));
    }
    if let Some(a) = s.blobs.attention.clone() {
        let t = load("attention", &a.path)?;
        let d = t.dims();
        if t.ndim() != 4 || d[2] != d[3] || d[0] == 0 || d[1] == 0 {
            return Err(invalid(s, format!("attention must be [L, H, T, T], got {:?}", t.shape())));
        }
        if a.vision_start >= a.vision_end || a.vision_end > d[2] || a.last_token >= d[2] {
            return Err(invalid(s, "attention token indices out of range"));
        }
        token_counts.push(("attention".into(), a.vision_end - a.vision_start));
    }
    if let Some(g) = s.blobs.gradcam.clone() {
        let act = load("gradcam.activations", &g.activations)?;
        let grad = load("gradcam.gradients", &g.gradients)?;
        if act.ndim() != 3 || act.shape() != grad.shape() {
            return Err(invalid(s, "gradcam activations and gradients must share a [C, H, W] shape"));
        }
    }
    if let Some(rel) = s.blobs.occlusion_logits.clone() {
        let t = load("occlusion_logits", &rel)?;
        if t.dims() != [3, 4] {
            return Err(invalid(s, format!("occlusion_logits must be [3, 4], got {:?}", t.shape())));
        }
    }

    match (s.grid_h, s.grid_w) {
        (Some(gh), Some(gw)) => {
            if gh == 0 || gw == 0 {
                return Err(invalid(s, "grid dims must be positive"));
            }
            if let Some((blob, tokens)) = token_counts.iter().find(|(_, n)| *n != gh * gw) {
                return Err(Error::GridMismatch {
                    sample_id: s.sample_id.clone(),
                    grid_h: gh,
                    grid_w: gw,
                    tokens: *tokens,
                    blob: blob.clone(),
                });
            }
        }
        (None, None) => {
            let Some((_, tokens)) = token_counts.first().cloned() else {
                return Err(invalid(s, "no grid dims and no vision-token tensor to infer them from"));
            };
            if let Some((blob, n)) = token_counts.iter().find(|(_, n)| *n != tokens) {
                return Err(invalid(s, format!("{blob} has {n} vision tokens, expected {tokens}")));
            }
            let (gh, gw) = infer_grid(tokens, s.image_w, s.image_h)
                .ok_or_else(|| invalid(s, "cannot infer a grid for zero tokens"))?;
            warnings.push(format!(
                "{}: grid inferred as {gh}x{gw} from {tokens} tokens",
                s.sample_id
            ));
            s.grid_h = Some(gh);
            s.grid_w = Some(gw);
        }
        _ => return Err(invalid(s, "grid_h and grid_w must be given together")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_io::blob::write_blob;

    fn record(id: &str) -> SampleRecord {
        SampleRecord {
            sample_id: id.into(),
            image_w: 64,
            image_h: 64,
            ref_box: BBox::new(10.0, 10.0, 8.0, 8.0),
            tgt_box: BBox::new(40.0, 10.0, 8.0, 8.0),
            gt_class: DirectionClass::Right,
            logits: vec![0.0, 2.0, 0.5, 0.1],
            grid_h: Some(4),
            grid_w: Some(4),
            layers: None,
            blobs: BlobRefs::default(),
        }
    }

    fn write(dir: &Path, m: &Manifest) -> PathBuf {
        let p = dir.join("manifest.json");
        m.write(&p).unwrap();
        p
    }

    #[test]
    fn loads_two_samples() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("t", Provenance::default());
        m.samples.push(record("a"));
        m.samples.push(record("b"));
        let loaded = load_manifest(write(dir.path(), &m)).unwrap();
        assert_eq!(loaded.samples.len(), 2);
        assert!(loaded.report.warnings.is_empty());
    }

    #[test]
    fn grid_mismatch_names_sample() {
        let dir = tempfile::tempdir().unwrap();
        let hidden = TensorBlob::zeros(&[1, 16, 2], crate::tensor_io::DType::F32);
        write_blob(&hidden, dir.path().join("h.bin")).unwrap();
        let mut r = record("odd-one");
        r.grid_h = Some(3);
        r.grid_w = Some(5);
        r.layers = Some(vec![-2]);
        r.blobs.hidden = Some("h.bin".into());
        let mut m = Manifest::new("t", Provenance::default());
        m.samples.push(r);
        let err = load_manifest(write(dir.path(), &m)).unwrap_err();
        match err {
            Error::GridMismatch { sample_id, tokens, .. } => {
                assert_eq!(sample_id, "odd-one");
                assert_eq!(tokens, 16);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn dangling_ref() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = record("a");
        r.blobs.hidden = Some("missing.bin".into());
        let mut m = Manifest::new("t", Provenance::default());
        m.samples.push(r);
        let err = load_manifest(write(dir.path(), &m)).unwrap_err();
        assert_eq!(err.code(), "dangling_blob_ref");
    }

    #[test]
    fn duplicate_ids_and_bad_logits() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("t", Provenance::default());
        m.samples.push(record("a"));
        m.samples.push(record("a"));
        let err = load_manifest(write(dir.path(), &m)).unwrap_err();
        assert_eq!(err.code(), "duplicate_sample_id");

        let mut m = Manifest::new("t", Provenance::default());
        let mut r = record("a");
        r.logits.push(1.0);
        m.samples.push(r);
        let err = load_manifest(write(dir.path(), &m)).unwrap_err();
        assert_eq!(err.code(), "logits_length");
    }

    #[test]
    fn clamping_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = record("a");
        r.tgt_box = BBox::new(60.0, 10.0, 10.0, 8.0);
        let mut m = Manifest::new("t", Provenance::default());
        m.samples.push(r);
        let loaded = load_manifest(write(dir.path(), &m)).unwrap();
        assert_eq!(loaded.samples[0].tgt_box.w, 4.0);
        assert_eq!(loaded.report.warnings.len(), 1);
        assert!(loaded.report.warnings[0].contains("tgt_box clamped"));
    }

    #[test]
    fn grid_is_inferred_and_reported() {
        let dir = tempfile::tempdir().unwrap();
        let hidden = TensorBlob::zeros(&[1, 12, 2], crate::tensor_io::DType::F32);
        write_blob(&hidden, dir.path().join("h.bin")).unwrap();
        let mut r = record("a");
        r.image_w = 120;
        r.image_h = 90;
        r.grid_h = None;
        r.grid_w = None;
        r.layers = Some(vec![-2]);
        r.blobs.hidden = Some("h.bin".into());
        let mut m = Manifest::new("t", Provenance::default());
        m.samples.push(r);
        let loaded = load_manifest(write(dir.path(), &m)).unwrap();
        assert_eq!(loaded.samples[0].grid().unwrap(), (3, 4));
        assert!(loaded.report.warnings[0].contains("inferred"));
    }

    #[test]
    fn gradient_shape_must_match_hidden() {
        let dir = tempfile::tempdir().unwrap();
        write_blob(
            &TensorBlob::zeros(&[1, 16, 2], crate::tensor_io::DType::F32),
            dir.path().join("h.bin"),
        )
        .unwrap();
        write_blob(
            &TensorBlob::zeros(&[1, 16, 3], crate::tensor_io::DType::F32),
            dir.path().join("g.bin"),
        )
        .unwrap();
        let mut r = record("a");
        r.layers = Some(vec![-2]);
        r.blobs.hidden = Some("h.bin".into());
        r.blobs.gradients.insert(GradTarget::ContrastiveGt, "g.bin".into());
        let mut m = Manifest::new("t", Provenance::default());
        m.samples.push(r);
        let err = load_manifest(write(dir.path(), &m)).unwrap_err();
        assert_eq!(err.code(), "invalid_sample");
    }

    #[test]
    fn class_angles_and_windows() {
        assert_eq!(DirectionClass::Left.angle_deg(), 180.0);
        assert_eq!(DirectionClass::Below.angle_deg(), 270.0);
        assert_eq!(DirectionClass::from_angle(-44.9), DirectionClass::Right);
        assert_eq!(DirectionClass::from_angle(45.0), DirectionClass::Above);
        assert_eq!(DirectionClass::from_angle(314.9), DirectionClass::Below);
        for c in DirectionClass::ALL {
            assert_eq!(DirectionClass::from_angle(c.angle_deg()), c);
            assert_eq!(DirectionClass::from_index(c.index()), Some(c));
        }
    }
}
