use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::DEFAULT_LAYERS;
use crate::error::{Error, Result};
use crate::polar::{cell_center, true_direction};
use crate::tensor_io::{BBox, BlobRefs, DirectionClass, SampleRecord};

/// Shape of the relevance a synthetic sample carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFamily {
    /// All mass on the token under the target center.
    PointMass,
    /// Isotropic Gaussian around the target center.
    GaussianBlobAtB,
    /// Constant over the grid.
    Diffuse,
    /// Gaussian around the target center reflected through the reference.
    OppositeBlob,
    /// I.i.d. uniform per token.
    UniformRandom,
}

impl FieldFamily {
    pub const ALL: [FieldFamily; 5] = [
        FieldFamily::PointMass,
        FieldFamily::GaussianBlobAtB,
        FieldFamily::Diffuse,
        FieldFamily::OppositeBlob,
        FieldFamily::UniformRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldFamily::PointMass => "point_mass",
            FieldFamily::GaussianBlobAtB => "gaussian_blob",
            FieldFamily::Diffuse => "diffuse",
            FieldFamily::OppositeBlob => "opposite_blob",
            FieldFamily::UniformRandom => "uniform_random",
        }
    }
}

impl std::fmt::Display for FieldFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FieldFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FieldFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown field family {s:?}"))
    }
}

/// Gaussian spread as a fraction of the image diagonal.
pub const BLOB_SPREAD_FRAC: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub image_w: u32,
    pub image_h: u32,
    pub grid_h: usize,
    pub grid_w: usize,
    pub direction: DirectionClass,
    /// Angle of the target off the class axis, degrees, below 45 in magnitude.
    pub offset_deg: f64,
    /// Center distance as a fraction of the shorter image side.
    pub distance_frac: f64,
    /// Move the target center onto the nearest token-cell center.
    pub snap_to_grid: bool,
    pub family: FieldFamily,
    /// Amplitude of additive uniform noise on relevance targets.
    pub noise: f64,
    pub seed: u64,
    /// Class the fabricated logits favour; `None` means the ground truth.
    pub predicted: Option<DirectionClass>,
    pub hidden_dim: usize,
    /// Layers stored in the hidden and gradient stacks, in slice order.
    pub layers: Vec<i32>,
    /// Layers that carry the family's signal; the rest carry noise only.
    pub signal_layers: Vec<i32>,
    /// Weight of an opposite-side blob present in plain-logit gradients but
    /// cancelled by the contrastive target.
    pub shared_distractor: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            image_w: 420,
            image_h: 420,
            grid_h: 15,
            grid_w: 15,
            direction: DirectionClass::Right,
            offset_deg: 0.0,
            distance_frac: 0.28,
            snap_to_grid: true,
            family: FieldFamily::GaussianBlobAtB,
            noise: 0.0,
            seed: 0,
            predicted: None,
            hidden_dim: 4,
            layers: DEFAULT_LAYERS.to_vec(),
            signal_layers: DEFAULT_LAYERS.to_vec(),
            shared_distractor: 0.0,
        }
    }
}

impl SynthSpec {
    /// Ratio of the dominant to the minor axis displacement.
    pub fn displacement_ratio(&self) -> f64 {
        1.0 / self.offset_deg.to_radians().tan().abs()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.image_w == 0 || self.image_h == 0 || self.grid_h == 0 || self.grid_w == 0 {
            return bad("image and grid dims must be positive".into());
        }
        if !(self.offset_deg.abs() < 45.0) {
            return bad(format!("offset {} leaves the class window", self.offset_deg));
        }
        if !(self.distance_frac > 0.0 && self.distance_frac < 0.5) {
            return bad(format!("distance fraction {} must be in (0, 0.5)", self.distance_frac));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise {} must be nonnegative", self.noise));
        }
        if self.hidden_dim < 4 {
            return bad("hidden_dim must be at least 4".into());
        }
        if self.layers.is_empty() {
            return bad("at least one layer is required".into());
        }
        if let Some(l) = self.signal_layers.iter().find(|l| !self.layers.contains(l)) {
            return bad(format!("signal layer {l} is not stored"));
        }
        Ok(())
    }

    pub fn is_correct(&self) -> bool {
        self.predicted.map_or(true, |p| p == self.direction)
    }

    pub(crate) fn cell_size(&self) -> (f64, f64) {
        (
            f64::from(self.image_w) / self.grid_w as f64,
            f64::from(self.image_h) / self.grid_h as f64,
        )
    }

    pub fn ref_center(&self) -> (f64, f64) {
        (f64::from(self.image_w) / 2.0, f64::from(self.image_h) / 2.0)
    }

    /// Point at the configured distance and offset in the direction of `class`.
    pub fn point_towards(&self, class: DirectionClass) -> (f64, f64) {
        let (ax, ay) = self.ref_center();
        let d = self.distance_frac * f64::from(self.image_w.min(self.image_h));
        let t = (class.angle_deg() + self.offset_deg).to_radians();
        let p = (ax + d * t.cos(), ay - d * t.sin());
        if self.snap_to_grid {
            self.snap(p)
        } else {
            p
        }
    }

    fn snap(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let (cw, ch) = self.cell_size();
        let v = ((x / cw).floor() as usize).min(self.grid_w - 1);
        let u = ((y / ch).floor() as usize).min(self.grid_h - 1);
        cell_center(u, v, self.grid_h, self.grid_w, f64::from(self.image_w), f64::from(self.image_h))
    }
}

/// Logits whose argmax is `top`; the others descend in class order.
pub fn fabricate_logits(top: DirectionClass) -> Vec<f64> {
    let mut logits = vec![0.0; 4];
    logits[top.index()] = 2.0;
    let mut next = 1.0;
    for c in DirectionClass::ALL {
        if c != top {
            logits[c.index()] = next;
            next -= 0.5;
        }
    }
    logits
}

/// Boxes, class and logits for one synthetic sample. Blob references are
/// left empty.
pub fn generate_scene(spec: &SynthSpec, sample_id: impl Into<String>) -> Result<SampleRecord> {
    spec.validate()?;
    let sample_id = sample_id.into();
    let (ax, ay) = spec.ref_center();
    let (bx, by) = spec.point_towards(spec.direction);
    let (cw, ch) = spec.cell_size();
    let side = 0.5 * cw.min(ch);
    let ref_box = BBox::centered(ax, ay, side, side);
    let tgt_box = BBox::centered(bx, by, side, side);
    let (iw, ih) = (f64::from(spec.image_w), f64::from(spec.image_h));
    if tgt_box.x < 0.0 || tgt_box.y < 0.0 || tgt_box.x + tgt_box.w > iw || tgt_box.y + tgt_box.h > ih {
        return Err(Error::InvalidConfig(format!("{sample_id}: target box leaves the image")));
    }
    let angle = true_direction(&ref_box, &tgt_box)?;
    if DirectionClass::from_angle(angle) != spec.direction {
        return Err(Error::InvalidConfig(format!(
            "{sample_id}: snapped target at {angle:.2} deg is outside the {} window",
            spec.direction
        )));
    }
    Ok(SampleRecord {
        sample_id,
        image_w: spec.image_w,
        image_h: spec.image_h,
        ref_box,
        tgt_box,
        gt_class: spec.direction,
        logits: fabricate_logits(spec.predicted.unwrap_or(spec.direction)),
        grid_h: Some(spec.grid_h),
        grid_w: Some(spec.grid_w),
        layers: None,
        blobs: BlobRefs::default(),
    })
}

fn gaussian_at(spec: &SynthSpec, (px, py): (f64, f64)) -> Vec<f64> {
    let (iw, ih) = (f64::from(spec.image_w), f64::from(spec.image_h));
    let s = BLOB_SPREAD_FRAC * iw.hypot(ih);
    let mut out = Vec::with_capacity(spec.grid_h * spec.grid_w);
    for u in 0..spec.grid_h {
        for v in 0..spec.grid_w {
            let (x, y) = cell_center(u, v, spec.grid_h, spec.grid_w, iw, ih);
            out.push((-((x - px).powi(2) + (y - py).powi(2)) / (2.0 * s * s)).exp());
        }
    }
    out
}

fn nearest_cell(spec: &SynthSpec, (px, py): (f64, f64)) -> usize {
    let (iw, ih) = (f64::from(spec.image_w), f64::from(spec.image_h));
    let mut best = (f64::INFINITY, 0);
    for u in 0..spec.grid_h {
        for v in 0..spec.grid_w {
            let (x, y) = cell_center(u, v, spec.grid_h, spec.grid_w, iw, ih);
            let d = (x - px).powi(2) + (y - py).powi(2);
            if d < best.0 {
                best = (d, u * spec.grid_w + v);
            }
        }
    }
    best.1
}

/// Reflection of `p` through the reference center.
pub fn reflect(spec: &SynthSpec, (px, py): (f64, f64)) -> (f64, f64) {
    let (ax, ay) = spec.ref_center();
    (2.0 * ax - px, 2.0 * ay - py)
}

/// Noise-free relevance target for `family` anchored at `point`.
pub fn family_field(spec: &SynthSpec, family: FieldFamily, point: (f64, f64), rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = spec.grid_h * spec.grid_w;
    match family {
        FieldFamily::PointMass => {
            let mut f = vec![0.0; n];
            f[nearest_cell(spec, point)] = 1.0;
            f
        }
        FieldFamily::GaussianBlobAtB => gaussian_at(spec, point),
        FieldFamily::OppositeBlob => gaussian_at(spec, reflect(spec, point)),
        FieldFamily::Diffuse => vec![1.0; n],
        FieldFamily::UniformRandom => (0..n).map(|_| rng.gen::<f64>()).collect(),
    }
}

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn rng_for(spec: &SynthSpec, stream: u64) -> ChaCha8Rng {
    seeded(spec.seed, stream)
}
