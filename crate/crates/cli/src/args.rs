use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use compass_core::attribution::{Source, TargetMode, DEFAULT_LAYERS};
use compass_core::metrics::BootstrapConfig;
use compass_core::occlusion::RadialExtent;
use compass_core::pipeline::MethodSpec;
use compass_core::polar::{PolarConfig, SigmaForm};
use compass_core::synth::FieldFamily;

#[derive(Debug, Parser)]
#[command(name = "compass", version, about = "Directional attribution for spatial-relation answers")]
pub struct Cli {
    /// Worker threads for per-sample work.
    #[arg(long, global = true, env = "COMPASS_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compass distribution per sample for one method.
    Attr(AttrArgs),
    /// Aggregate directional metrics for one or more methods.
    Eval(EvalArgs),
    /// Aggregate metrics for every method, optionally with ablations.
    BaselineSweep(SweepArgs),
    /// Occlusion plan and sector masks for re-inference.
    Occlude(OccludeArgs),
    /// Counterfactual occlusion scores from re-inference responses.
    Cos(CosArgs),
    /// Write a synthetic manifest with known directional structure.
    Synth(SynthArgs),
    /// Run the synthetic validation suite.
    Validate(ValidateArgs),
    /// Render compass records as SVG polar plots.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PolarArgs {
    /// Number of compass sectors.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 0.6)]
    pub sigma_r: f64,
    #[arg(long, default_value_t = 2.0)]
    pub rho_r: f64,
    /// `scaled` (sigma = sigma_r * r_max) or `product` (also times d_AB).
    #[arg(long, default_value = "scaled")]
    pub sigma_form: SigmaForm,
}

impl PolarArgs {
    pub fn config(&self) -> PolarConfig {
        PolarConfig {
            k: self.k,
            sigma_r: self.sigma_r,
            rho_r: self.rho_r,
            sigma_form: self.sigma_form,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// Target mode for contrastive resolution: gt or pred.
    #[arg(long, default_value = "gt")]
    pub mode: TargetMode,
    /// Stored layers to aggregate, e.g. `-2,-3,-4,-5`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = DEFAULT_LAYERS)]
    pub layers: Vec<i32>,
    /// Use plain-logit gradients instead of the contrastive target.
    #[arg(long)]
    pub no_contrast: bool,
    /// Seed for stochastic methods.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub polar: PolarArgs,
}

impl MethodArgs {
    pub fn spec(&self, source: Source) -> MethodSpec {
        let mut spec = MethodSpec::new(source);
        spec.mode = self.mode;
        spec.layers = self.layers.clone();
        spec.contrastive = !self.no_contrast;
        spec.seed = self.seed;
        spec.polar = self.polar.config();
        if source == Source::Creg && (self.no_contrast || self.mode == TargetMode::Pred) {
            let mut label = spec.label.clone();
            if self.mode == TargetMode::Pred {
                label.push_str("_pred");
            }
            if self.no_contrast {
                label.push_str("_no_contrast");
            }
            spec.label = label;
        }
        spec
    }
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    #[arg(long, default_value_t = 10_000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub bootstrap_seed: u64,
    /// Leave degenerate (uniform fallback) compasses out of the means.
    #[arg(long)]
    pub exclude_degenerate: bool,
}

impl BootstrapArgs {
    pub fn config(&self) -> BootstrapConfig {
        BootstrapConfig {
            resamples: self.resamples,
            level: self.level,
            seed: self.bootstrap_seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct AttrArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// creg, gradcam, gradnorm, ig, rollout, single_layer, random or oracle.
    #[arg(long, default_value = "creg")]
    pub method: Source,
    #[command(flatten)]
    pub method_args: MethodArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated methods, one table row each.
    #[arg(long, value_delimiter = ',', default_value = "creg")]
    pub methods: Vec<Source>,
    #[command(flatten)]
    pub method_args: MethodArgs,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Add the four-sector, single-layer and non-contrastive variants.
    #[arg(long)]
    pub ablation: bool,
    #[command(flatten)]
    pub method_args: MethodArgs,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OccludeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub polar: PolarArgs,
    /// `radius` (the attribution radius of influence) or `unbounded`.
    #[arg(long, default_value = "radius")]
    pub extent: RadialExtent,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CosArgs {
    /// Plan written by `occlude`.
    #[arg(long)]
    pub plan: PathBuf,
    /// Response file filled in by the extractor.
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value = "gaussian_blob")]
    pub family: FieldFamily,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Targets are placed up to this many degrees off the class axis.
    #[arg(long, default_value_t = 0.0)]
    pub offset_spread: f64,
    /// Keep target centers off the token-cell lattice.
    #[arg(long)]
    pub no_snap: bool,
    #[arg(long, default_value_t = 0.0)]
    pub mispredict_rate: f64,
    /// Weight of the opposite-side blob in plain-logit gradients.
    #[arg(long, default_value_t = 0.0)]
    pub distractor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A compass record file or a directory of them.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
