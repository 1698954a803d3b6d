use serde::{Deserialize, Serialize};

use super::geometry::GridGeometry;
use crate::attribution::RelevanceField;
use crate::error::{Error, Result};

/// How the Gaussian spread is derived from the radius of influence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaForm {
    /// `sigma = sigma_r * r_max`, in pixels.
    #[default]
    Scaled,
    /// `sigma = sigma_r * r_max * d_AB`, the literal product form.
    Product,
}

impl std::str::FromStr for SigmaForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "scaled" => Ok(SigmaForm::Scaled),
            "product" => Ok(SigmaForm::Product),
            _ => Err(format!("unknown sigma form {s:?} (expected scaled or product)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarConfig {
    /// Number of compass sectors.
    pub k: usize,
    pub sigma_r: f64,
    pub rho_r: f64,
    #[serde(default)]
    pub sigma_form: SigmaForm,
}

impl Default for PolarConfig {
    fn default() -> Self {
        PolarConfig {
            k: 8,
            sigma_r: 0.6,
            rho_r: 2.0,
            sigma_form: SigmaForm::Scaled,
        }
    }
}

impl PolarConfig {
    pub fn with_k(k: usize) -> Self {
        PolarConfig {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("K must be at least 2, got {}", self.k)));
        }
        if !(self.sigma_r > 0.0 && self.sigma_r.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma_r must be positive, got {}", self.sigma_r)));
        }
        if !(self.rho_r > 0.0 && self.rho_r.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho_r must be positive, got {}", self.rho_r)));
        }
        Ok(())
    }

    pub fn sector_width(&self) -> f64 {
        360.0 / self.k as f64
    }

    pub fn sector_center(&self, index: usize) -> f64 {
        index as f64 * self.sector_width()
    }

    /// Sector holding `theta_deg`. Sector `k` covers
    /// `[center - w/2, center + w/2)`, so a boundary angle belongs to the
    /// counterclockwise neighbour.
    pub fn sector_of(&self, theta_deg: f64) -> usize {
        let w = self.sector_width();
        let t = theta_deg.rem_euclid(360.0);
        ((t + w / 2.0) / w).floor() as usize % self.k
    }

    pub fn r_max(&self, d_ab: f64) -> f64 {
        self.rho_r * d_ab
    }

    pub fn sigma(&self, d_ab: f64) -> f64 {
        match self.sigma_form {
            SigmaForm::Scaled => self.sigma_r * self.r_max(d_ab),
            SigmaForm::Product => self.sigma_r * self.r_max(d_ab) * d_ab,
        }
    }

    pub fn opposite(&self, sector: usize) -> Result<usize> {
        if self.k % 2 != 0 {
            return Err(Error::InvalidConfig(format!("K={} has no antipodal sectors", self.k)));
        }
        Ok((sector + self.k / 2) % self.k)
    }
}

/// Normalized directional evidence over `K` sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompassDistribution {
    pub probs: Vec<f64>,
    pub peak_index: usize,
    pub peak_angle_deg: f64,
    /// No relevance mass reached any sector; `probs` is uniform.
    pub degenerate: bool,
}

impl CompassDistribution {
    /// Builds a distribution from sector probabilities. The peak is the first
    /// maximal sector.
    pub fn from_probs(probs: Vec<f64>, degenerate: bool) -> Self {
        let mut peak = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[peak] {
                peak = i;
            }
        }
        let k = probs.len();
        CompassDistribution {
            peak_index: peak,
            peak_angle_deg: peak as f64 * 360.0 / k as f64,
            probs,
            degenerate,
        }
    }

    pub fn uniform(k: usize) -> Self {
        Self::from_probs(vec![1.0 / k as f64; k], true)
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }
}

/// Order-independent sum: sorting first makes the result a function of the
/// multiset of terms, so permuted inputs give bitwise-equal totals.
fn canonical_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Gaussian-weighted polar binning of a relevance field around the reference.
///
/// Cells farther than `r_max` are ignored, as is a cell sitting exactly on
/// the reference center (it has no direction). Zero total mass yields the
/// uniform distribution with `degenerate` set.
pub fn compass_bin(
    field: &RelevanceField,
    geom: &GridGeometry,
    d_ab: f64,
    cfg: &PolarConfig,
) -> Result<CompassDistribution> {
    cfg.validate()?;
    if !(d_ab > 0.0) || !d_ab.is_finite() {
        return Err(Error::CoincidentCenters);
    }
    if field.grid_h != geom.grid_h || field.grid_w != geom.grid_w {
        return Err(Error::ShapeMismatch(format!(
            "field grid {}x{} vs geometry {}x{}",
            field.grid_h, field.grid_w, geom.grid_h, geom.grid_w
        )));
    }
    let r_max = cfg.r_max(d_ab);
    let two_var = 2.0 * cfg.sigma(d_ab).powi(2);
    let mut per_sector: Vec<Vec<f64>> = vec![Vec::new(); cfg.k];
    for (cell, &r) in geom.cells.iter().zip(&field.values) {
        if r == 0.0 || cell.zero_radius || cell.rho > r_max {
            continue;
        }
        let w = r * (-(cell.rho * cell.rho) / two_var).exp();
        if w > 0.0 {
            per_sector[cfg.sector_of(cell.theta_deg)].push(w);
        }
    }
    let mut sums: Vec<f64> = per_sector.iter_mut().map(|t| canonical_sum(t)).collect();
    let total = canonical_sum(&mut sums.clone());
    if !(total > 0.0) {
        return Ok(CompassDistribution::uniform(cfg.k));
    }
    sums.iter_mut().for_each(|s| *s /= total);
    Ok(CompassDistribution::from_probs(sums, false))
}

/// Mirrors a distribution about the vertical axis: the sector centered at
/// `theta` moves to the one centered at `180 - theta`. Requires even `K`.
pub fn flip_compass(dist: &CompassDistribution) -> Result<CompassDistribution> {
    let k = dist.k();
    if k % 2 != 0 {
        return Err(Error::InvalidConfig(format!("cannot mirror K={k} sectors exactly")));
    }
    let mut probs = vec![0.0; k];
    for (i, &p) in dist.probs.iter().enumerate() {
        probs[(k / 2 + k - i) % k] = p;
    }
    Ok(CompassDistribution::from_probs(probs, dist.degenerate))
}
