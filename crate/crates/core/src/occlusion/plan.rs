use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mask::{build_sector_mask, OcclusionConfig, RadialExtent, SectorMask, FILL_RGB};
use crate::error::{Error, Result};
use crate::metrics::{cos_score, log_softmax_gt, CosSummary, CosTriple};
use crate::polar::true_direction;
use crate::tensor_io::{write_blob, DirectionClass, SampleRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Ready,
    /// At least one wedge covers no pixel; re-inference would be a no-op.
    EmptyMask,
}

/// Which sectors to occlude for one sample and where their masks live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionPlan {
    pub sample_id: String,
    pub gt_class: DirectionClass,
    pub true_angle_deg: f64,
    pub true_sector: usize,
    pub opposite_sector: usize,
    pub true_mask: String,
    pub opposite_mask: String,
    pub true_mask_pixels: usize,
    pub opposite_mask_pixels: usize,
    pub status: PlanStatus,
}

/// Plan file handed to the extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanManifest {
    pub k: usize,
    pub fill_rgb: [u8; 3],
    pub extent: RadialExtent,
    /// Fields the extractor must fill per sample in its response file.
    pub response_fields: Vec<String>,
    pub samples: Vec<OcclusionPlan>,
}

/// Plan for one sample together with its two masks.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSample {
    pub plan: OcclusionPlan,
    pub true_mask: SectorMask,
    pub opposite_mask: SectorMask,
}

pub fn mask_file_name(sample_id: &str, sector: usize) -> String {
    format!("masks/{sample_id}_sector{sector}.bin")
}

pub fn build_plan(record: &SampleRecord, cfg: &OcclusionConfig) -> Result<PlannedSample> {
    let polar = &cfg.polar;
    polar.validate()?;
    let true_angle = true_direction(&record.ref_box, &record.tgt_box)?;
    let true_sector = polar.sector_of(true_angle);
    let opposite_sector = polar.opposite(true_sector)?;
    let true_mask = build_sector_mask(record, true_sector, cfg)?;
    let opposite_mask = build_sector_mask(record, opposite_sector, cfg)?;
    let status = if true_mask.empty || opposite_mask.empty {
        PlanStatus::EmptyMask
    } else {
        PlanStatus::Ready
    };
    Ok(PlannedSample {
        plan: OcclusionPlan {
            sample_id: record.sample_id.clone(),
            gt_class: record.gt_class,
            true_angle_deg: true_angle,
            true_sector,
            opposite_sector,
            true_mask: mask_file_name(&record.sample_id, true_sector),
            opposite_mask: mask_file_name(&record.sample_id, opposite_sector),
            true_mask_pixels: true_mask.count,
            opposite_mask_pixels: opposite_mask.count,
            status,
        },
        true_mask,
        opposite_mask,
    })
}

/// Writes both masks of every sample under `out_dir` and returns the plan
/// manifest. Paths in the manifest are relative to `out_dir`.
pub fn emit_plan(records: &[SampleRecord], cfg: &OcclusionConfig, out_dir: &Path) -> Result<PlanManifest> {
    let mut samples = Vec::with_capacity(records.len());
    for r in records {
        let p = build_plan(r, cfg)?;
        write_blob(&p.true_mask.to_blob(), out_dir.join(&p.plan.true_mask))?;
        write_blob(&p.opposite_mask.to_blob(), out_dir.join(&p.plan.opposite_mask))?;
        samples.push(p.plan);
    }
    Ok(PlanManifest {
        k: cfg.polar.k,
        fill_rgb: FILL_RGB,
        extent: cfg.extent,
        response_fields: ["logits_base", "logits_true_occluded", "logits_opp_occluded"]
            .map(String::from)
            .to_vec(),
        samples,
    })
}

/// Logits returned by the extractor after re-running inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionResponse {
    pub sample_id: String,
    pub logits_base: [f64; 4],
    pub logits_true_occluded: [f64; 4],
    pub logits_opp_occluded: [f64; 4],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OcclusionResponses {
    pub samples: Vec<OcclusionResponse>,
}

/// Change in ground-truth log-probability for both occlusions. The
/// ground-truth class is used regardless of the attribution target mode.
pub fn evaluate_cos(
    logits_base: &[f64; 4],
    logits_true_occluded: &[f64; 4],
    logits_opp_occluded: &[f64; 4],
    gt: DirectionClass,
) -> CosTriple {
    cos_score(
        log_softmax_gt(logits_base, gt),
        log_softmax_gt(logits_true_occluded, gt),
        log_softmax_gt(logits_opp_occluded, gt),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosRow {
    pub sample_id: String,
    pub true_sector: usize,
    pub opposite_sector: usize,
    #[serde(flatten)]
    pub triple: CosTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosTable {
    pub rows: Vec<CosRow>,
    /// Planned samples without a response.
    pub skipped: Vec<String>,
    pub summary: Option<CosSummary>,
}

/// Joins plans with responses. Samples without a response are skipped and
/// listed; a response that names no planned sample is an error.
pub fn cos_table(plans: &[OcclusionPlan], responses: &[OcclusionResponse]) -> Result<CosTable> {
    let mut by_id: BTreeMap<&str, &OcclusionResponse> = BTreeMap::new();
    for r in responses {
        if by_id.insert(r.sample_id.as_str(), r).is_some() {
            return Err(Error::DuplicateSampleId(r.sample_id.clone()));
        }
    }
    for r in responses {
        if !plans.iter().any(|p| p.sample_id == r.sample_id) {
            return Err(Error::InvalidSample {
                sample_id: r.sample_id.clone(),
                message: "response has no matching plan entry".into(),
            });
        }
        let all = r.logits_base.iter().chain(&r.logits_true_occluded).chain(&r.logits_opp_occluded);
        if all.clone().any(|z| !z.is_finite()) {
            return Err(Error::InvalidSample {
                sample_id: r.sample_id.clone(),
                message: "response logits must be finite".into(),
            });
        }
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for p in plans {
        match by_id.get(p.sample_id.as_str()) {
            Some(r) => rows.push(CosRow {
                sample_id: p.sample_id.clone(),
                true_sector: p.true_sector,
                opposite_sector: p.opposite_sector,
                triple: evaluate_cos(&r.logits_base, &r.logits_true_occluded, &r.logits_opp_occluded, p.gt_class),
            }),
            None => skipped.push(p.sample_id.clone()),
        }
    }
    let triples: Vec<CosTriple> = rows.iter().map(|r| r.triple).collect();
    Ok(CosTable {
        summary: CosSummary::from_triples(&triples),
        rows,
        skipped,
    })
}
