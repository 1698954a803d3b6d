//! Acceptance criteria, one line per criterion. Runs without the test
//! harness so the lines always reach the output.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use compass_core::attribution::{
    baseline_rollout, creg_relevance, CregOptions, RelevanceField,
    Source, TargetMode,
};
use compass_core::metrics::{
    aggregate, bootstrap_ci, cos_score, dae, ea, expected_random_dae, flip_correlation,
    AggregateOptions, BootstrapConfig, SampleMetrics, Statistic,
};
use compass_core::occlusion::{build_sector_mask, OcclusionConfig};
use compass_core::pipeline::{ablation_specs, evaluate_sample, MethodSpec};
use compass_core::polar::{
    build_grid_geometry, compass_angle, compass_bin, flip_compass, GridGeometry, PolarConfig,
    SigmaForm,
};
use compass_core::synth::{
    evaluate_synthetic, generate_batch, generate_scenes, write_dataset, BatchSpec, FieldFamily,
    SynthSample, SynthSpec,
};
use compass_core::tensor_io::{load_manifest, BBox, BlobRefs, DirectionClass, SampleRecord, SampleTensors, TensorBlob};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn overall(results: &[SampleMetrics]) -> Result<(f64, f64), String> {
    let r = aggregate(results, None, &AggregateOptions::default()).map_err(|e| e.to_string())?;
    Ok((r.overall.dae_mean, r.overall.ea_rate))
}

fn random_baseline() -> Outcome {
    let start = Instant::now();
    let mut batch = BatchSpec::new(2000, SynthSpec { snap_to_grid: false, ..Default::default() }, 2024);
    batch.offset_spread_deg = 30.0;
    let samples: Vec<SynthSample> = generate_scenes(&batch)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|record| SynthSample { spec: batch.base.clone(), record, tensors: SampleTensors::default() })
        .collect();
    let method = MethodSpec { seed: 2024, ..MethodSpec::new(Source::Random) };
    let res = evaluate_synthetic(&samples, &method).map_err(|e| e.to_string())?;
    let metrics: Vec<_> = res.into_iter().map(|r| r.metrics).collect();
    let (d, e) = overall(&metrics)?;
    let secs = start.elapsed().as_secs_f64();
    ensure((85.0..=95.0).contains(&d), || format!("mean DAE {d:.2} outside [85, 95]"))?;
    ensure((0.22..=0.28).contains(&e), || format!("EA {e:.3} outside [0.22, 0.28]"))?;
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!("n=2000 DAE={d:.2} EA={e:.3} in {secs:.2}s"))
}

fn geometry_oracle() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cardinal = BatchSpec::new(40, SynthSpec::default(), 7);
    let mut offset = BatchSpec::new(200, SynthSpec::default(), 8);
    offset.offset_spread_deg = 30.0;
    let oracle = MethodSpec::new(Source::Oracle);
    let cfg = oracle.polar;
    let mut lines = Vec::new();
    for (name, batch) in [("cardinal", cardinal), ("offset", offset)] {
        let samples = generate_batch(&batch).map_err(|e| e.to_string())?;
        let sub = dir.path().join(name);
        write_dataset(&sub, name, &samples).map_err(|e| e.to_string())?;
        let manifest = load_manifest(sub.join("manifest.json")).map_err(|e| e.to_string())?;
        let mut metrics = Vec::new();
        for r in &manifest.samples {
            let d_ab = compass_core::polar::center_distance(&r.ref_box, &r.tgt_box);
            ensure(d_ab <= cfg.r_max(d_ab), || "target beyond r_max".into())?;
            let res = evaluate_sample(r, &SampleTensors::default(), &[], &oracle).map_err(|e| e.to_string())?;
            ensure(res.compass.peak_index == cfg.sector_of(res.true_angle_deg), || {
                format!("{}: peak sector {} misses true angle {:.2}", r.sample_id, res.compass.peak_index, res.true_angle_deg)
            })?;
            ensure(res.metrics.dae <= 22.5, || format!("{}: DAE {}", r.sample_id, res.metrics.dae))?;
            metrics.push(res.metrics);
        }
        let (d, e) = overall(&metrics)?;
        if name == "cardinal" {
            ensure(d == 0.0 && e == 1.0, || format!("cardinal DAE {d} EA {e}"))?;
        }
        ensure(e == 1.0, || format!("{name} EA {e}"))?;
        lines.push(format!("{name}: DAE={d:.3} EA={e:.3}"));
    }
    Ok(lines.join(", "))
}

fn cos_worked_example() -> Outcome {
    let t = cos_score(0.0, -0.47, -0.06);
    ensure((t.cos - 0.41).abs() < 1e-12, || format!("COS {}", t.cos))?;
    Ok(format!("COS={:+.12}", t.cos))
}

fn expected_dae() -> Outcome {
    let k = 8;
    let closed = expected_random_dae(k);
    ensure(closed == 90.0, || format!("closed form {closed}"))?;
    let cfg = PolarConfig::with_k(k);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let trials = 100_000;
    let (mut sum_sector, mut hits) = (0.0, 0usize);
    for _ in 0..trials {
        let peak = cfg.sector_center(rng.gen_range(0..k));
        sum_sector += dae(peak, 0.0);
        let truth = rng.gen_range(0.0..360.0);
        hits += ea(dae(peak, truth)) as usize;
    }
    let mc = sum_sector / trials as f64;
    let ea_rate = hits as f64 / trials as f64;
    ensure((mc - closed).abs() <= 1.0, || format!("Monte Carlo {mc:.3}"))?;
    ensure((ea_rate - 2.0 / k as f64).abs() <= 0.01, || format!("random EA {ea_rate:.4}"))?;
    Ok(format!("closed=90 MC={mc:.3} EA={ea_rate:.4}"))
}

/// Direct per-cell binning written without the engine's helpers.
fn naive_compass(values: &[f64], gh: usize, gw: usize, iw: f64, ih: f64, a: (f64, f64), d_ab: f64, cfg: &PolarConfig) -> Vec<f64> {
    let k = cfg.k;
    let width = 360.0 / k as f64;
    let r_max = cfg.rho_r * d_ab;
    let sigma = match cfg.sigma_form {
        SigmaForm::Scaled => cfg.sigma_r * r_max,
        SigmaForm::Product => cfg.sigma_r * r_max * d_ab,
    };
    let mut bins = vec![0.0; k];
    for u in 0..gh {
        for v in 0..gw {
            let x = (v as f64 + 0.5) * iw / gw as f64;
            let y = (u as f64 + 0.5) * ih / gh as f64;
            let (dx, dy) = (x - a.0, y - a.1);
            let rho = (dx * dx + dy * dy).sqrt();
            if rho == 0.0 || rho > r_max {
                continue;
            }
            let mut theta = (-dy).atan2(dx).to_degrees();
            if theta < 0.0 {
                theta += 360.0;
            }
            let mut sector = None;
            for s in 0..k {
                let lo = s as f64 * width - width / 2.0;
                let hi = lo + width;
                if (theta >= lo && theta < hi) || (theta - 360.0 >= lo && theta - 360.0 < hi) {
                    sector = Some(s);
                }
            }
            bins[sector.unwrap()] += values[u * gw + v] * (-(rho * rho) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = bins.iter().sum();
    if total == 0.0 {
        return vec![1.0 / k as f64; k];
    }
    bins.iter().map(|b| b / total).collect()
}

struct Case {
    field: RelevanceField,
    geom: GridGeometry,
    d_ab: f64,
    cfg: PolarConfig,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let gh = rng.gen_range(1..=16);
    let gw = rng.gen_range(1..=16);
    let iw = rng.gen_range(32.0..640.0);
    let ih = rng.gen_range(32.0..640.0);
    let a = (rng.gen_range(0.0..iw), rng.gen_range(0.0..ih));
    let values: Vec<f64> = (0..gh * gw).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen() }).collect();
    let field = RelevanceField::new(values, gh, gw, Source::Creg).unwrap();
    let geom = build_grid_geometry(gh, gw, iw, ih, a).unwrap();
    let cfg = PolarConfig {
        k: [4, 8, 12, 16][rng.gen_range(0..4)],
        sigma_r: rng.gen_range(0.1..1.5),
        rho_r: rng.gen_range(0.5..3.0),
        sigma_form: if rng.gen_bool(0.3) { SigmaForm::Product } else { SigmaForm::Scaled },
    };
    let d_ab = rng.gen_range(0.1..0.8) * iw.max(ih);
    Case { field, geom, d_ab, cfg }
}

fn binning_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let c = random_case(&mut rng);
        let got = compass_bin(&c.field, &c.geom, c.d_ab, &c.cfg).map_err(|e| e.to_string())?;
        let want = naive_compass(
            &c.field.values, c.field.grid_h, c.field.grid_w, c.geom.image_w, c.geom.image_h,
            c.geom.ref_center, c.d_ab, &c.cfg,
        );
        for (g, w) in got.probs.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        ensure(worst <= 1e-9, || format!("case {i}: deviation {worst:e}"))?;
    }
    Ok(format!("200 cases, max deviation {worst:.2e}"))
}

fn rollout_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let t = rng.gen_range(3..=8);
        let l = rng.gen_range(1..=3);
        let h = rng.gen_range(1..=4);
        let mut raw = Vec::with_capacity(l * h * t * t);
        for _ in 0..l * h * t {
            let row: Vec<f64> = (0..t).map(|_| rng.gen_range(-2.0f64..2.0).exp()).collect();
            let s: f64 = row.iter().sum();
            raw.extend(row.iter().map(|v| v / s));
        }
        let blob = TensorBlob::from_f64(&[l, h, t, t], raw.clone()).unwrap();
        let start = rng.gen_range(0..t - 1);
        let end = rng.gen_range(start + 1..=t);
        let last = t - 1;
        let (gh, gw) = (1, end - start);
        let got = baseline_rollout(&blob, start..end, last, gh, gw).map_err(|e| e.to_string())?;

        // full matrices, chained product from the last layer down
        let mut prod = vec![0.0; t * t];
        for i in 0..t {
            prod[i * t + i] = 1.0;
        }
        for layer in (0..l).rev() {
            let mut m = vec![0.0; t * t];
            for head in 0..h {
                for i in 0..t * t {
                    m[i] += raw[(layer * h + head) * t * t + i] / h as f64;
                }
            }
            for i in 0..t {
                for j in 0..t {
                    m[i * t + j] = 0.5 * m[i * t + j] + if i == j { 0.5 } else { 0.0 };
                }
                let s: f64 = m[i * t..(i + 1) * t].iter().sum();
                for j in 0..t {
                    m[i * t + j] /= s;
                }
            }
            let mut next = vec![0.0; t * t];
            for i in 0..t {
                for j in 0..t {
                    for q in 0..t {
                        next[i * t + j] += prod[i * t + q] * m[q * t + j];
                    }
                }
            }
            prod = next;
        }
        let row = &prod[last * t + start..last * t + end];
        let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for (g, r) in got.values.iter().zip(row) {
            let want = if hi > lo { (r - lo) / (hi - lo) } else { 0.0 };
            worst = worst.max((g - want).abs());
        }
        ensure(worst <= 1e-6, || format!("case {case}: deviation {worst:e}"))?;
    }
    Ok(format!("100 stacks, max deviation {worst:.2e}"))
}

fn flip_equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 100 {
        let mut c = random_case(&mut rng);
        c.cfg.k = [2, 4, 8, 16][rng.gen_range(0..4)];
        let orig = compass_bin(&c.field, &c.geom, c.d_ab, &c.cfg).map_err(|e| e.to_string())?;
        if orig.degenerate {
            continue;
        }
        let mirrored = compass_bin(&c.field.mirrored(), &c.geom.mirrored(), c.d_ab, &c.cfg).map_err(|e| e.to_string())?;
        let flipped = flip_compass(&orig).map_err(|e| e.to_string())?;
        ensure(mirrored == flipped, || format!("case {done}: {:?} vs {:?}", mirrored.probs, flipped.probs))?;
        let r = flip_correlation(&orig, &mirrored).map_err(|e| e.to_string())?;
        let uniform_orig = orig.probs.iter().all(|p| *p == orig.probs[0]);
        ensure(uniform_orig || r == Some(1.0), || format!("case {done}: r = {r:?}"))?;
        done += 1;
    }
    Ok("100 cases, exact bin permutation, r = 1.0".into())
}

fn mode_identity() -> Outcome {
    let mut batch = BatchSpec::new(120, SynthSpec { noise: 0.1, family: FieldFamily::GaussianBlobAtB, ..Default::default() }, 9);
    batch.mispredict_rate = 0.4;
    batch.offset_spread_deg = 30.0;
    let samples = generate_batch(&batch).map_err(|e| e.to_string())?;
    let mut correct = 0;
    for s in &samples {
        if !s.record.is_correct() {
            continue;
        }
        correct += 1;
        let run = |mode| {
            creg_relevance(&s.record, &s.tensors, &s.spec.layers, &CregOptions { mode, ..Default::default() })
                .map(|o| o.field.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                .map_err(|e| e.to_string())
        };
        ensure(run(TargetMode::Gt)? == run(TargetMode::Pred)?, || format!("{} differs between modes", s.record.sample_id))?;
    }
    let gt = MethodSpec::new(Source::Creg);
    let pred = MethodSpec { mode: TargetMode::Pred, ..gt.clone() };
    let report = |m: &MethodSpec| -> Result<_, String> {
        let res = evaluate_synthetic(&samples, m).map_err(|e| e.to_string())?;
        let metrics: Vec<_> = res.into_iter().map(|r| r.metrics).collect();
        aggregate(&metrics, None, &AggregateOptions::default()).map_err(|e| e.to_string())
    };
    let (a, b) = (report(&gt)?, report(&pred)?);
    ensure(a.correct == b.correct, || "correct-only summaries differ".into())?;
    ensure(a.incorrect != b.incorrect, || "incorrect-only summaries should differ".into())?;
    let c = a.correct.as_ref().unwrap();
    Ok(format!("{correct} correct samples bitwise equal; correct subset n={} DAE={:.1} EA={:.3} in both modes", c.n, c.dae_mean, c.ea_rate))
}

fn mask_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut checked = 0;
    for case in 0..12 {
        let a = (rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0));
        let b = (rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0));
        let k = [4, 8, 8, 16][case % 4];
        let record = SampleRecord {
            sample_id: format!("m{case}"),
            image_w: 64,
            image_h: 64,
            ref_box: BBox::centered(a.0, a.1, 2.0, 2.0),
            tgt_box: BBox::centered(b.0, b.1, 2.0, 2.0),
            gt_class: DirectionClass::Right,
            logits: vec![0.0; 4],
            grid_h: Some(8),
            grid_w: Some(8),
            layers: None,
            blobs: BlobRefs::default(),
        };
        let cfg = OcclusionConfig { polar: PolarConfig::with_k(k), ..Default::default() };
        let masks: Vec<_> = (0..k).map(|s| build_sector_mask(&record, s, &cfg)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let r_max = cfg.polar.rho_r * (b.0 - a.0).hypot(b.1 - a.1);
        let width = 360.0 / k as f64;
        for y in 0..64 {
            for x in 0..64 {
                let (dx, dy) = (x as f64 + 0.5 - a.0, y as f64 + 0.5 - a.1);
                let inside = dx.hypot(dy) <= r_max;
                let covering = masks.iter().filter(|m| m.contains(x, y)).count();
                ensure(covering == inside as usize, || format!("case {case} pixel ({x},{y}) covered {covering} times"))?;
                if inside {
                    // independent sector from the raw angle
                    let theta = compass_angle(dx, dy);
                    let s = (((theta + width / 2.0) / width).floor() as usize) % k;
                    ensure(masks[s].contains(x, y), || format!("case {case} pixel ({x},{y}) in wrong wedge"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("12 geometries, {checked} in-radius pixels each covered once"))
}

fn ablation_machinery() -> Outcome {
    let base = SynthSpec { family: FieldFamily::GaussianBlobAtB, shared_distractor: 3.0, noise: 0.02, ..Default::default() };
    let samples = generate_batch(&BatchSpec::new(80, base, 11)).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = write_dataset(dir.path(), "ablation", &samples).map_err(|e| e.to_string())?;
    let manifest = load_manifest(dir.path().join("manifest.json")).map_err(|e| e.to_string()).map(|m| {
        assert_eq!(m.samples.len(), manifest.samples.len());
        m
    })?;
    let specs = ablation_specs(&MethodSpec::new(Source::Creg));
    let mut rows = Vec::new();
    for spec in &specs {
        let mut metrics = Vec::new();
        for r in &manifest.samples {
            let t = manifest.load_tensors(r).map_err(|e| e.to_string())?;
            let res = evaluate_sample(r, &t, &manifest.layers_for(r), spec).map_err(|e| e.to_string())?;
            ensure(res.compass.k() == spec.polar.k, || "wrong sector count".into())?;
            metrics.push(res.metrics);
        }
        let (d, e) = overall(&metrics)?;
        rows.push((spec.label.clone(), d, e));
    }
    ensure(rows.len() == 4, || "expected four rows".into())?;
    for i in 0..4 {
        for j in i + 1..4 {
            ensure(rows[i].0 != rows[j].0 && specs[i] != specs[j], || "rows are not distinct".into())?;
        }
    }
    let contrastive = rows[0].1;
    let plain = rows[3].1;
    ensure(contrastive < plain, || format!("contrastive DAE {contrastive} not below plain {plain}"))?;
    Ok(rows.iter().map(|(l, d, e)| format!("{l}: DAE={d:.1} EA={e:.2}")).collect::<Vec<_>>().join("; "))
}

fn bootstrap_coverage() -> Outcome {
    let (mu, sd, n, datasets) = (3.0, 2.0, 200, 500);
    let covered: usize = (0..datasets)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
            // Box-Muller
            let data: Vec<f64> = (0..n)
                .map(|_| {
                    let u1: f64 = 1.0 - rng.gen::<f64>();
                    let u2: f64 = rng.gen();
                    mu + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                })
                .collect();
            let cfg = BootstrapConfig { seed: i as u64, ..Default::default() };
            let ci = bootstrap_ci(&data, Statistic::Mean, &cfg).unwrap();
            (ci.lower <= mu && mu <= ci.upper) as usize
        })
        .sum();
    let rate = covered as f64 / datasets as f64;
    ensure(rate >= 0.93, || format!("coverage {rate:.3}"))?;
    Ok(format!("coverage {covered}/{datasets} = {rate:.3}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("random baseline", random_baseline),
        ("geometry oracle ceiling", geometry_oracle),
        ("occlusion score worked example", cos_worked_example),
        ("expected random DAE", expected_dae),
        ("compass binning oracle", binning_oracle),
        ("rollout oracle", rollout_oracle),
        ("flip equivariance", flip_equivariance),
        ("target mode identity", mode_identity),
        ("sector mask partition", mask_partition),
        ("ablation machinery", ablation_machinery),
        ("bootstrap coverage", bootstrap_coverage),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
