use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use compass_core::attribution::{creg_relevance, normalize_min_max, CregOptions, RelevanceField, Source};
use compass_core::metrics::{dae, ea, flip_correlation, mean_correlation};
use compass_core::occlusion::{build_plan, OcclusionConfig};
use compass_core::pipeline::{compass_for, evaluate_sample, MethodSpec};
use compass_core::polar::{
    build_grid_geometry, compass_bin, flip_compass, true_direction, CompassDistribution, PolarConfig,
    SigmaForm,
};
use compass_core::synth::{generate_batch, generate_sample, BatchSpec, FieldFamily, SynthSpec};
use compass_core::tensor_io::{infer_grid, GradTarget, SampleTensors, TensorBlob};

fn polar_config() -> impl Strategy<Value = PolarConfig> {
    (
        prop::sample::select(vec![2usize, 4, 8, 12, 16]),
        0.1f64..1.5,
        0.5f64..3.0,
        prop::bool::ANY,
    )
        .prop_map(|(k, sigma_r, rho_r, product)| PolarConfig {
            k,
            sigma_r,
            rho_r,
            sigma_form: if product { SigmaForm::Product } else { SigmaForm::Scaled },
        })
}

fn field(max_side: usize) -> impl Strategy<Value = RelevanceField> {
    (1..=max_side, 1..=max_side)
        .prop_flat_map(|(h, w)| (Just(h), Just(w), prop::collection::vec(0.0f64..1.0, h * w)))
        .prop_map(|(h, w, v)| RelevanceField::new(v, h, w, Source::Creg).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn compass_is_a_distribution(
        f in field(12),
        cfg in polar_config(),
        ax in 0.0f64..1.0,
        ay in 0.0f64..1.0,
        d in 0.05f64..0.9,
    ) {
        let (iw, ih) = (320.0, 240.0);
        let geom = build_grid_geometry(f.grid_h, f.grid_w, iw, ih, (ax * iw, ay * ih)).unwrap();
        let c = compass_bin(&f, &geom, d * iw, &cfg).unwrap();
        prop_assert_eq!(c.probs.len(), cfg.k);
        prop_assert!(c.probs.iter().all(|p| *p >= 0.0 && p.is_finite()));
        prop_assert!((c.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let top = c.probs.iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(c.probs[c.peak_index], top);
        prop_assert!(c.probs[..c.peak_index].iter().all(|p| *p < top));
        prop_assert_eq!(c.peak_angle_deg, cfg.sector_center(c.peak_index));
    }

    #[test]
    fn mirroring_the_scene_flips_the_compass(
        f in field(10),
        cfg in polar_config(),
        ax in 0.0f64..1.0,
        ay in 0.0f64..1.0,
        d in 0.05f64..0.9,
    ) {
        prop_assume!(cfg.k % 2 == 0);
        let geom = build_grid_geometry(f.grid_h, f.grid_w, 200.0, 200.0, (ax * 200.0, ay * 200.0)).unwrap();
        let orig = compass_bin(&f, &geom, d * 200.0, &cfg).unwrap();
        let mirrored = compass_bin(&f.mirrored(), &geom.mirrored(), d * 200.0, &cfg).unwrap();
        prop_assert_eq!(&mirrored.probs, &flip_compass(&orig).unwrap().probs);
        // flipping twice is the identity
        prop_assert_eq!(flip_compass(&flip_compass(&orig).unwrap()).unwrap().probs, orig.probs);
    }

    #[test]
    fn dae_is_a_bounded_symmetric_distance(a in -720.0f64..720.0, b in -720.0f64..720.0, turns in -3i32..3) {
        let d = dae(a, b);
        prop_assert!((0.0..=180.0).contains(&d));
        prop_assert!((d - dae(b, a)).abs() < 1e-9);
        prop_assert!((d - dae(a + 360.0 * f64::from(turns), b)).abs() < 1e-9);
        prop_assert_eq!(ea(d), d <= 45.0);
    }

    #[test]
    fn min_max_normalization_spans_unit_interval(v in prop::collection::vec(-1e3f64..1e3, 1..64)) {
        let (n, degenerate) = normalize_min_max(&v);
        prop_assert_eq!(n.len(), v.len());
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            prop_assert!(!degenerate);
            prop_assert!(n.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!(n.iter().any(|x| *x == 0.0) && n.iter().any(|x| *x == 1.0));
        } else {
            prop_assert!(degenerate);
            prop_assert!(n.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn grid_inference_returns_a_factor_pair(tokens in 1usize..600, w in 1u32..2000, h in 1u32..2000) {
        let (gh, gw) = infer_grid(tokens, w, h).unwrap();
        prop_assert_eq!(gh * gw, tokens);
    }

    #[test]
    fn oracle_peak_matches_planned_true_sector(
        class in 0usize..4,
        offset in -30.0f64..30.0,
        k in prop::sample::select(vec![4usize, 8, 16]),
    ) {
        let spec = SynthSpec {
            direction: compass_core::tensor_io::DirectionClass::from_index(class).unwrap(),
            offset_deg: offset,
            ..SynthSpec::default()
        };
        let record = compass_core::synth::generate_scene(&spec, "p").unwrap();
        let mut method = MethodSpec::new(Source::Oracle);
        method.polar = PolarConfig::with_k(k);
        let res = evaluate_sample(&record, &SampleTensors::default(), &[], &method).unwrap();
        let plan = build_plan(&record, &OcclusionConfig { polar: method.polar, ..Default::default() }).unwrap();
        prop_assert_eq!(res.compass.peak_index, plan.plan.true_sector);
        prop_assert_eq!(plan.plan.opposite_sector, (plan.plan.true_sector + k / 2) % k);
    }

    #[test]
    fn layer_stack_reproduces_the_target_field(
        class in 0usize..4,
        family in prop::sample::select(vec![FieldFamily::PointMass, FieldFamily::GaussianBlobAtB, FieldFamily::OppositeBlob]),
    ) {
        let spec = SynthSpec {
            direction: compass_core::tensor_io::DirectionClass::from_index(class).unwrap(),
            family,
            layers: vec![-2],
            signal_layers: vec![-2],
            ..SynthSpec::default()
        };
        let s = generate_sample(&spec, "r").unwrap();
        let out = creg_relevance(&s.record, &s.tensors, &[-2], &CregOptions { layers: vec![-2], ..Default::default() }).unwrap();
        // these families draw nothing from the rng
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let target = compass_core::synth::family_field(&spec, family, spec.point_towards(spec.direction), &mut rng);
        let (want, _) = normalize_min_max(&target);
        for (g, w) in out.field.values.iter().zip(&want) {
            // blobs are f32
            prop_assert!((g - w).abs() < 1e-6, "{g} vs {w}");
        }
    }
}

#[test]
fn signal_layer_dominates_the_layer_weights() {
    let spec = SynthSpec {
        layers: vec![-2, -3],
        signal_layers: vec![-2],
        ..SynthSpec::default()
    };
    let s = generate_sample(&spec, "w").unwrap();
    let opts = CregOptions { layers: vec![-2, -3], ..Default::default() };
    let out = creg_relevance(&s.record, &s.tensors, &spec.layers, &opts).unwrap();
    assert_eq!(out.weights.layers, vec![-2, -3]);
    assert!(out.weights.weights[0] > 0.5, "{:?}", out.weights.weights);
    assert!((out.weights.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn pure_noise_gives_a_flat_compass() {
    let base = SynthSpec {
        signal_layers: vec![],
        noise: 1.0,
        ..SynthSpec::default()
    };
    let samples = generate_batch(&BatchSpec::new(200, base, 4)).unwrap();
    let method = MethodSpec::new(Source::Creg);
    let mut worst: f64 = 0.0;
    for s in &samples {
        let r = evaluate_sample(&s.record, &s.tensors, &s.spec.layers, &method).unwrap();
        if r.compass.degenerate {
            continue;
        }
        worst = worst.max(r.compass.probs.iter().copied().fold(0.0, f64::max));
    }
    // uniform would be 0.125
    assert!(worst < 0.2, "max sector mass {worst}");
}

#[test]
fn zero_gradient_is_degenerate() {
    let mut s = generate_sample(&SynthSpec::default(), "z").unwrap();
    let grad = s.tensors.gradients.get_mut(&GradTarget::ContrastiveGt).unwrap();
    *grad = TensorBlob::zeros(&grad.dims(), grad.dtype());
    let r = evaluate_sample(&s.record, &s.tensors, &s.spec.layers, &MethodSpec::new(Source::Creg)).unwrap();
    assert!(r.field_degenerate);
    assert!(r.compass.degenerate);
    assert_eq!(r.compass, CompassDistribution::uniform(8));
}

#[test]
fn independent_compasses_have_zero_mean_flip_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rs: Vec<Option<f64>> = (0..1000)
        .map(|_| {
            let draw = |rng: &mut ChaCha8Rng| {
                let v: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = v.iter().sum();
                CompassDistribution::from_probs(v.into_iter().map(|x| x / s).collect(), false)
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            flip_correlation(&a, &b).unwrap()
        })
        .collect();
    let (mean, skipped) = mean_correlation(&rs);
    assert_eq!(skipped, 0);
    let mean = mean.unwrap();
    // the sd of r for 8 points is about 0.38, so the mean's is about 0.012
    assert!(mean.abs() < 0.05, "mean r {mean}");
}

#[test]
fn compass_of_a_centered_point_mass_points_at_it() {
    let spec = SynthSpec { family: FieldFamily::PointMass, ..SynthSpec::default() };
    for class in 0..4 {
        let spec = SynthSpec {
            direction: compass_core::tensor_io::DirectionClass::from_index(class).unwrap(),
            ..spec.clone()
        };
        let s = generate_sample(&spec, "c").unwrap();
        let out = creg_relevance(&s.record, &s.tensors, &spec.layers, &CregOptions::default()).unwrap();
        assert_eq!(out.field.values.iter().filter(|v| **v > 0.0).count(), 1);
        let c = compass_for(&s.record, &out.field, &PolarConfig::default()).unwrap();
        let truth = true_direction(&s.record.ref_box, &s.record.tgt_box).unwrap();
        assert_eq!(dae(c.peak_angle_deg, truth), 0.0);
    }
}
