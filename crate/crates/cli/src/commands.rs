use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use compass_core::attribution::Source;
use compass_core::metrics::{aggregate, AggregateOptions, SampleMetrics};
use compass_core::occlusion::{cos_table, emit_plan, OcclusionConfig, OcclusionResponses, PlanManifest};
use compass_core::pipeline::{
    ablation_specs, check_inputs, evaluate_sample, missing_inputs, needs_tensors, MethodSpec,
    SampleResult,
};
use compass_core::synth::{generate_batch, run_validation_suite, write_dataset, BatchSpec, SynthSpec};
use compass_core::tensor_io::{load_manifest, Manifest, SampleTensors};
use compass_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    AttrArgs, BootstrapArgs, CosArgs, EvalArgs, OccludeArgs, PlotArgs, SweepArgs, SynthArgs,
    ValidateArgs,
};
use crate::output::{
    breakdown_csv, read_json, table_csv, write_atomic, write_json, CompassRecord, MethodReport,
    RunEcho,
};
use crate::svg::render_compass;

/// Loads and validates a manifest, rejecting one with no samples.
pub fn open_manifest(path: &Path) -> Result<Manifest> {
    let manifest = load_manifest(path)?;
    if manifest.samples.is_empty() {
        return Err(Error::EmptyInput("manifest has no samples").into());
    }
    for w in &manifest.report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(manifest)
}

/// Runs one method over every sample, in manifest order. Inputs are checked
/// for every sample before any tensor is read.
pub fn run_method(manifest: &Manifest, method: &MethodSpec) -> Result<Vec<SampleResult>> {
    method.polar.validate()?;
    check_inputs(&manifest.samples, method)?;
    let results = manifest
        .samples
        .par_iter()
        .map(|record| {
            let tensors = if needs_tensors(method) {
                manifest.load_tensors(record)?
            } else {
                SampleTensors::default()
            };
            evaluate_sample(record, &tensors, &manifest.layers_for(record), method)
        })
        .collect::<compass_core::Result<Vec<_>>>()?;
    Ok(results)
}

fn report_for(results: &[SampleResult], method: &MethodSpec, boot: &BootstrapArgs) -> Result<MethodReport> {
    let metrics: Vec<SampleMetrics> = results.iter().map(|r| r.metrics.clone()).collect();
    let opts = AggregateOptions {
        bootstrap: boot.config(),
        exclude_degenerate: boot.exclude_degenerate,
    };
    Ok(MethodReport {
        method: method.clone(),
        report: aggregate(&metrics, None, &opts)?,
    })
}

pub fn attr(args: &AttrArgs) -> Result<()> {
    let manifest = open_manifest(&args.manifest)?;
    let method = args.method_args.spec(args.method);
    let results = run_method(&manifest, &method)?;
    let dir = args.out.join("compass").join(&method.label);
    for r in &results {
        write_json(&dir.join(format!("{}.json", r.sample_id)), &CompassRecord::from(r))?;
    }
    write_json(
        &args.out.join("run.json"),
        &RunEcho::new("attr", RunConfig::new(&args.manifest, vec![method])),
    )?;
    eprintln!("wrote {} compass records to {}", results.len(), dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunConfig {
    manifest: PathBuf,
    methods: Vec<MethodSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aggregate: Option<AggregateOptions>,
}

impl RunConfig {
    fn new(manifest: &Path, methods: Vec<MethodSpec>) -> Self {
        RunConfig {
            manifest: manifest.to_path_buf(),
            methods,
            aggregate: None,
        }
    }

    fn with_bootstrap(mut self, boot: &BootstrapArgs) -> Self {
        self.aggregate = Some(AggregateOptions {
            bootstrap: boot.config(),
            exclude_degenerate: boot.exclude_degenerate,
        });
        self
    }
}

#[derive(Debug, Serialize)]
struct SkippedMethod {
    method: String,
    reason: String,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    methods: Vec<MethodReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    skipped: Vec<SkippedMethod>,
}

fn write_reports(out: &Path, report: &EvalReport) -> Result<()> {
    write_json(&out.join("report.json"), report)?;
    write_atomic(&out.join("table.csv"), &table_csv(&report.methods)?)?;
    write_atomic(&out.join("breakdown.csv"), &breakdown_csv(&report.methods)?)?;
    Ok(())
}

fn print_table(rows: &[MethodReport]) {
    println!("{:<24} {:>6} {:>9} {:>19} {:>7}", "method", "n", "dae", "95% ci", "ea");
    for r in rows {
        let o = &r.report.overall;
        println!(
            "{:<24} {:>6} {:>9.2} [{:>7.2}, {:>7.2}] {:>7.3}",
            r.method.label, o.n, o.dae_mean, o.dae_ci.lower, o.dae_ci.upper, o.ea_rate
        );
    }
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let manifest = open_manifest(&args.manifest)?;
    let specs: Vec<MethodSpec> = args.methods.iter().map(|s| args.method_args.spec(*s)).collect();
    // every method is checked before any is run
    for m in &specs {
        check_inputs(&manifest.samples, m)?;
    }
    let mut rows = Vec::new();
    for m in &specs {
        let results = run_method(&manifest, m)?;
        rows.push(report_for(&results, m, &args.bootstrap)?);
    }
    let report = EvalReport {
        methods: rows,
        skipped: Vec::new(),
    };
    write_reports(&args.out, &report)?;
    write_json(
        &args.out.join("run.json"),
        &RunEcho::new("eval", RunConfig::new(&args.manifest, specs).with_bootstrap(&args.bootstrap)),
    )?;
    print_table(&report.methods);
    Ok(())
}

/// Every method, plus the ablations of the default one. A method whose inputs
/// the manifest lacks is skipped and listed rather than failing the sweep.
pub fn sweep_specs(args: &SweepArgs) -> Vec<MethodSpec> {
    let mut specs: Vec<MethodSpec> = Source::ALL.iter().map(|s| args.method_args.spec(*s)).collect();
    if args.ablation {
        let base = args.method_args.spec(Source::Creg);
        specs.extend(ablation_specs(&base).into_iter().skip(1));
    }
    specs
}

pub fn baseline_sweep(args: &SweepArgs) -> Result<()> {
    let manifest = open_manifest(&args.manifest)?;
    let specs = sweep_specs(args);
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for m in &specs {
        let missing: Vec<String> = manifest
            .samples
            .iter()
            .find_map(|r| {
                let miss = missing_inputs(r, m);
                (!miss.is_empty()).then(|| {
                    miss.into_iter().map(|x| format!("{}: {x}", r.sample_id)).collect()
                })
            })
            .unwrap_or_default();
        if !missing.is_empty() {
            eprintln!("skipping {}: missing {}", m.label, missing.join(", "));
            skipped.push(SkippedMethod {
                method: m.label.clone(),
                reason: format!("missing {}", missing.join(", ")),
            });
            continue;
        }
        let results = run_method(&manifest, m)?;
        rows.push(report_for(&results, m, &args.bootstrap)?);
    }
    if rows.is_empty() {
        bail!("no method could run on {}", args.manifest.display());
    }
    let report = EvalReport { methods: rows, skipped };
    write_reports(&args.out, &report)?;
    write_json(
        &args.out.join("run.json"),
        &RunEcho::new(
            "baseline-sweep",
            RunConfig::new(&args.manifest, specs).with_bootstrap(&args.bootstrap),
        ),
    )?;
    print_table(&report.methods);
    Ok(())
}

pub fn occlude(args: &OccludeArgs) -> Result<()> {
    let manifest = open_manifest(&args.manifest)?;
    let cfg = OcclusionConfig {
        polar: args.polar.config(),
        extent: args.extent,
    };
    let plan = emit_plan(&manifest.samples, &cfg, &args.out)?;
    write_json(&args.out.join("plan.json"), &plan)?;
    #[derive(Serialize)]
    struct Echo<'a> {
        manifest: &'a Path,
        occlusion: OcclusionConfig,
    }
    write_json(
        &args.out.join("run.json"),
        &RunEcho::new("occlude", Echo { manifest: &args.manifest, occlusion: cfg }),
    )?;
    let empty = plan
        .samples
        .iter()
        .filter(|p| p.status != compass_core::occlusion::PlanStatus::Ready)
        .count();
    eprintln!(
        "planned {} samples ({} with an empty mask) in {}",
        plan.samples.len(),
        empty,
        args.out.display()
    );
    Ok(())
}

pub fn cos(args: &CosArgs) -> Result<()> {
    let plan: PlanManifest = read_json(&args.plan)?;
    let responses: OcclusionResponses = read_json(&args.responses)?;
    let table = cos_table(&plan.samples, &responses.samples)?;
    write_json(&args.out.join("cos.json"), &table)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sample_id", "true_sector", "opposite_sector", "delta_true", "delta_opp", "cos"])?;
    for r in &table.rows {
        w.write_record([
            r.sample_id.clone(),
            r.true_sector.to_string(),
            r.opposite_sector.to_string(),
            format!("{:.6}", r.triple.delta_true),
            format!("{:.6}", r.triple.delta_opp),
            format!("{:.6}", r.triple.cos),
        ])?;
    }
    write_atomic(&args.out.join("cos.csv"), &w.into_inner()?)?;
    #[derive(Serialize)]
    struct Echo<'a> {
        plan: &'a Path,
        responses: &'a Path,
    }
    write_json(
        &args.out.join("run.json"),
        &RunEcho::new("cos", Echo { plan: &args.plan, responses: &args.responses }),
    )?;
    match &table.summary {
        Some(s) => println!(
            "cos over {} samples: mean {:.4} (delta true {:.4}, delta opposite {:.4}); {} skipped",
            s.n,
            s.cos_mean,
            s.delta_true_mean,
            s.delta_opp_mean,
            table.skipped.len()
        ),
        None => println!("no responses matched the plan; {} skipped", table.skipped.len()),
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    if args.n == 0 {
        return Err(Error::EmptyInput("synth needs at least one sample").into());
    }
    let base = SynthSpec {
        family: args.family,
        noise: args.noise,
        snap_to_grid: !args.no_snap,
        shared_distractor: args.distractor,
        ..SynthSpec::default()
    };
    base.validate()?;
    let mut batch = BatchSpec::new(args.n, base, args.seed);
    batch.offset_spread_deg = args.offset_spread;
    batch.mispredict_rate = args.mispredict_rate;
    let samples = generate_batch(&batch)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let manifest = write_dataset(&args.out, "synthetic", &samples)?;
    write_json(&args.out.join("run.json"), &RunEcho::new("synth", &batch))?;
    eprintln!(
        "wrote {} samples to {}",
        manifest.samples.len(),
        args.out.join("manifest.json").display()
    );
    Ok(())
}

/// Returns whether every check passed.
pub fn validate(args: &ValidateArgs) -> Result<bool> {
    let report = run_validation_suite(args.n, args.seed)?;
    for c in &report.checks {
        println!(
            "{} {:<16} dae {:>7.2} ea {:.3} degenerate {:>5}  expect {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.dae_mean,
            c.ea_rate,
            c.degenerate,
            c.expectation
        );
    }
    if let Some(out) = &args.out {
        write_json(&out.join("validation.json"), &report)?;
        #[derive(Serialize)]
        struct Echo {
            n: usize,
            seed: u64,
        }
        write_json(&out.join("run.json"), &RunEcho::new("validate", Echo { n: args.n, seed: args.seed }))?;
    }
    Ok(report.all_pass())
}

/// Record files under `path`, sorted by name; `path` may be a single file.
fn record_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "json") {
                files.push(p);
            }
        }
    }
    files.sort();
    Ok(files)
}

pub fn plot(args: &PlotArgs) -> Result<()> {
    let files = record_files(&args.records)?;
    let mut written = 0;
    for f in &files {
        let Ok(record) = read_json::<CompassRecord>(f) else {
            // run.json and other non-record files
            continue;
        };
        let name = format!("{}_{}.svg", record.method, record.sample_id);
        write_atomic(&args.out.join(name), render_compass(&record).as_bytes())?;
        written += 1;
    }
    if written == 0 {
        return Err(Error::EmptyInput("no compass records found").into());
    }
    eprintln!("wrote {written} plots to {}", args.out.display());
    Ok(())
}
