use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar::{center_distance, compass_angle, PolarConfig};
use crate::tensor_io::{SampleRecord, TensorBlob};

/// Grey used by the extractor to paint masked pixels.
pub const FILL_RGB: [u8; 3] = [128, 128, 128];

/// How far a wedge reaches from the reference center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialExtent {
    /// Up to the radius of influence used for attribution.
    #[default]
    RadiusOfInfluence,
    /// To the image border.
    Unbounded,
}

impl std::str::FromStr for RadialExtent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "radius" | "radius_of_influence" => Ok(RadialExtent::RadiusOfInfluence),
            "unbounded" => Ok(RadialExtent::Unbounded),
            _ => Err(format!("unknown radial extent {s:?} (expected radius or unbounded)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OcclusionConfig {
    pub polar: PolarConfig,
    pub extent: RadialExtent,
}

/// Binary wedge of image pixels around the reference center.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMask {
    pub sector: usize,
    pub image_w: usize,
    pub image_h: usize,
    pub center: (f64, f64),
    /// Half-open angular span in degrees; `lo` may be negative.
    pub span_deg: (f64, f64),
    /// `None` when unbounded.
    pub radius: Option<f64>,
    /// Row-major `image_h x image_w`.
    pub pixels: Vec<bool>,
    pub count: usize,
    /// The wedge covers no pixel of the image.
    pub empty: bool,
}

impl SectorMask {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.image_w + x]
    }

    /// `[image_h, image_w]` F32 blob of zeros and ones.
    pub fn to_blob(&self) -> TensorBlob {
        let values = self.pixels.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
        TensorBlob::from_f32(&[self.image_h, self.image_w], values).expect("mask shape matches")
    }
}

/// Sector of the pixel whose top-left corner is `(x, y)`, or `None` when the
/// pixel center lies beyond `radius`. The pixel at the reference center has
/// no direction and is assigned to sector 0, as the angle convention does.
pub fn pixel_sector(
    x: usize,
    y: usize,
    center: (f64, f64),
    radius: Option<f64>,
    cfg: &PolarConfig,
) -> Option<usize> {
    let dx = x as f64 + 0.5 - center.0;
    let dy = y as f64 + 0.5 - center.1;
    if let Some(r) = radius {
        if dx.hypot(dy) > r {
            return None;
        }
    }
    Some(cfg.sector_of(compass_angle(dx, dy)))
}

pub fn build_sector_mask(
    record: &SampleRecord,
    sector: usize,
    cfg: &OcclusionConfig,
) -> Result<SectorMask> {
    let polar = &cfg.polar;
    polar.validate()?;
    if sector >= polar.k {
        return Err(Error::SectorOutOfRange { index: sector, k: polar.k });
    }
    let d_ab = center_distance(&record.ref_box, &record.tgt_box);
    if !(d_ab > 0.0) {
        return Err(Error::CoincidentCenters);
    }
    let radius = match cfg.extent {
        RadialExtent::RadiusOfInfluence => Some(polar.r_max(d_ab)),
        RadialExtent::Unbounded => None,
    };
    let (w, h) = (record.image_w as usize, record.image_h as usize);
    let center = record.ref_box.center();
    let mut pixels = vec![false; w * h];
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            if pixel_sector(x, y, center, radius, polar) == Some(sector) {
                pixels[y * w + x] = true;
                count += 1;
            }
        }
    }
    let c = polar.sector_center(sector);
    let half = polar.sector_width() / 2.0;
    Ok(SectorMask {
        sector,
        image_w: w,
        image_h: h,
        center,
        span_deg: (c - half, c + half),
        radius,
        pixels,
        count,
        empty: count == 0,
    })
}
