use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::{generate_scene, seeded, SynthSpec};
use super::stack::{attention_layout, generate_layer_stack};
use crate::error::Result;
use crate::pipeline::mix64;
use crate::tensor_io::{
    write_blob, AttentionRef, BlobRefs, DirectionClass, GradCamRef, GradTarget, Manifest,
    Provenance, SampleRecord, SampleTensors,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub spec: SynthSpec,
    pub record: SampleRecord,
    pub tensors: SampleTensors,
}

/// Relative blob paths a synthetic sample is written under.
pub fn blob_refs(sample_id: &str, vision_tokens: usize) -> BlobRefs {
    let p = |name: &str| format!("blobs/{sample_id}/{name}.bin");
    let (vision_start, vision_end, last_token) = attention_layout(vision_tokens);
    BlobRefs {
        hidden: Some(p("hidden")),
        gradients: [
            GradTarget::PlainGt,
            GradTarget::PlainPred,
            GradTarget::ContrastiveGt,
            GradTarget::ContrastivePred,
        ]
        .into_iter()
        .map(|t| (t, p(&format!("grad_{}", t.name()))))
        .collect(),
        attention: Some(AttentionRef {
            path: p("attention"),
            vision_start,
            vision_end,
            last_token,
        }),
        ig_step_grads: Some(p("ig_steps")),
        gradcam: Some(GradCamRef {
            activations: p("gradcam_act"),
            gradients: p("gradcam_grad"),
        }),
        occlusion_logits: None,
    }
}

/// Scene plus tensors; blob references point where `write_dataset` puts them.
pub fn generate_sample(spec: &SynthSpec, sample_id: &str) -> Result<SynthSample> {
    let mut record = generate_scene(spec, sample_id)?;
    let tensors = generate_layer_stack(spec, &record)?;
    record.blobs = blob_refs(sample_id, spec.grid_h * spec.grid_w);
    Ok(SynthSample {
        spec: spec.clone(),
        record,
        tensors,
    })
}

/// A batch of samples cycling through the four classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub n: usize,
    pub base: SynthSpec,
    pub seed: u64,
    /// Offsets are drawn uniformly from `[-spread, spread]` degrees.
    pub offset_spread_deg: f64,
    /// Fraction of samples whose logits favour a wrong class.
    pub mispredict_rate: f64,
}

impl BatchSpec {
    pub fn new(n: usize, base: SynthSpec, seed: u64) -> Self {
        BatchSpec {
            n,
            base,
            seed,
            offset_spread_deg: 0.0,
            mispredict_rate: 0.0,
        }
    }

    /// Per-sample ids and specs. Class `i % 4` keeps the batch balanced, and
    /// each sample's seed is derived from the master seed and its index.
    pub fn sample_specs(&self) -> Vec<(String, SynthSpec)> {
        (0..self.n)
            .map(|i| {
                let seed = mix64(self.seed ^ mix64(i as u64));
                let mut rng = seeded(seed, 7);
                let direction = DirectionClass::from_index(i % 4).unwrap();
                let offset_deg = if self.offset_spread_deg > 0.0 {
                    rng.gen_range(-self.offset_spread_deg..=self.offset_spread_deg)
                } else {
                    0.0
                };
                let predicted = if rng.gen::<f64>() < self.mispredict_rate {
                    let shift = rng.gen_range(1..4);
                    Some(DirectionClass::from_index((direction.index() + shift) % 4).unwrap())
                } else {
                    None
                };
                let spec = SynthSpec {
                    direction,
                    offset_deg,
                    predicted,
                    seed,
                    ..self.base.clone()
                };
                (format!("syn{i:05}"), spec)
            })
            .collect()
    }
}

/// Samples of a batch, generated in parallel; order follows the index.
pub fn generate_batch(batch: &BatchSpec) -> Result<Vec<SynthSample>> {
    batch
        .sample_specs()
        .par_iter()
        .map(|(id, spec)| generate_sample(spec, id))
        .collect()
}

/// Scenes only, for methods that read no tensors.
pub fn generate_scenes(batch: &BatchSpec) -> Result<Vec<SampleRecord>> {
    batch
        .sample_specs()
        .par_iter()
        .map(|(id, spec)| generate_scene(spec, id.as_str()))
        .collect()
}

/// Writes every blob and `manifest.json` under `dir`.
pub fn write_dataset(dir: &Path, dataset: &str, samples: &[SynthSample]) -> Result<Manifest> {
    let layers = samples.first().map(|s| s.spec.layers.clone()).unwrap_or_default();
    let mut manifest = Manifest::new(
        dataset,
        Provenance {
            model: "synthetic".into(),
            layers,
            target_modes: vec![
                GradTarget::PlainGt,
                GradTarget::PlainPred,
                GradTarget::ContrastiveGt,
                GradTarget::ContrastivePred,
            ],
        },
    );
    for s in samples {
        let b = &s.record.blobs;
        let t = &s.tensors;
        let mut pairs = Vec::new();
        if let (Some(p), Some(x)) = (&b.hidden, &t.hidden) {
            pairs.push((p.clone(), x));
        }
        for (target, p) in &b.gradients {
            pairs.push((p.clone(), &t.gradients[target]));
        }
        if let (Some(a), Some(x)) = (&b.attention, &t.attention) {
            pairs.push((a.path.clone(), x));
        }
        if let (Some(p), Some(x)) = (&b.ig_step_grads, &t.ig_step_grads) {
            pairs.push((p.clone(), x));
        }
        if let (Some(g), Some(a), Some(gr)) = (&b.gradcam, &t.gradcam_act, &t.gradcam_grad) {
            pairs.push((g.activations.clone(), a));
            pairs.push((g.gradients.clone(), gr));
        }
        for (rel, blob) in pairs {
            write_blob(blob, dir.join(rel))?;
        }
        let mut record = s.record.clone();
        if record.layers.is_none() && s.spec.layers != manifest.provenance.layers {
            record.layers = Some(s.spec.layers.clone());
        }
        manifest.samples.push(record);
    }
    manifest.write(dir.join("manifest.json"))?;
    manifest.base_dir = dir.to_path_buf();
    Ok(manifest)
}
