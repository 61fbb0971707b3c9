use std::sync::Arc;

use super::*;
use crate::io::{generate_synthetic_scene, DepthProfile, RunConfig, SceneMetadata, SynthSpec};
use crate::spectral::BottomLibrary;

fn dims(n_scenes: usize, n_pixels: usize, n_bottoms: usize) -> FitDims {
    FitDims {
        n_scenes,
        n_pixels,
        n_bottoms,
    }
}

fn sample_fit(d: FitDims) -> ModelFit {
    ModelFit {
        p: (0..d.n_scenes).map(|j| 0.05 + 0.01 * j as f64).collect(),
        g: (0..d.n_scenes).map(|j| 0.06 + 0.01 * j as f64).collect(),
        x: (0..d.n_scenes).map(|j| 0.012 + 0.002 * j as f64).collect(),
        delta: (0..d.n_scenes).map(|j| 0.0008 + 1e-4 * j as f64).collect(),
        h: (0..d.n_pixels).map(|i| 10.0 + 0.1 * i as f64).collect(),
        b: (0..d.n_bottoms)
            .map(|t| (0..d.n_pixels).map(|i| 0.1 + 0.01 * (t + i) as f64).collect())
            .collect(),
        q: (0..d.n_bottoms)
            .map(|t| (0..d.n_pixels).map(|i| 1.0 + 0.1 * (t * i) as f64).collect())
            .collect(),
        e_photic_pct: 1.0,
        iterations: 7,
        source: FitSource::Optimizer,
    }
}

#[test]
fn parameter_counts_match_the_counting_formula() {
    // (N_s, N_r) grid with N_b = 2
    let expect = [
        ((1, 1), 9),
        ((2, 1), 13),
        ((3, 1), 17),
        ((4, 1), 21),
        ((1, 9), 49),
        ((2, 9), 53),
        ((3, 9), 57),
        ((4, 9), 61),
        ((1, 25), 129),
        ((2, 25), 133),
        ((3, 25), 137),
        ((4, 25), 141),
    ];
    for ((n_s, n_r), total) in expect {
        let d = dims(n_s, n_r, 2);
        assert_eq!(d.n_total(), total, "N_s={n_s} N_r={n_r}");
        assert_eq!(pack(&sample_fit(d), d).unwrap().len(), total);
    }
}

#[test]
fn pack_unpack_roundtrip() {
    for d in [dims(1, 1, 1), dims(2, 9, 2), dims(4, 25, 3)] {
        let fit = sample_fit(d);
        let v = pack(&fit, d).unwrap();
        let back = unpack(&v, d).unwrap();
        assert_eq!(back.p, fit.p);
        assert_eq!(back.g, fit.g);
        assert_eq!(back.x, fit.x);
        assert_eq!(back.delta, fit.delta);
        assert_eq!(back.h, fit.h);
        assert_eq!(back.b, fit.b);
        assert_eq!(back.q, fit.q);
        let again = pack(&back, d).unwrap();
        assert_eq!(again, v);
    }
    // mismatched lengths are usage errors
    let d = dims(2, 9, 2);
    let mut bad = sample_fit(d);
    bad.h.pop();
    assert!(pack(&bad, d).is_err());
    assert!(unpack(&[0.0; 10], d).is_err());
}

fn scene_with_rows(rows: Vec<[f64; 4]>) -> Scene {
    let bands = Arc::new(crate::spectral::BandSet::new(vec![443.0, 483.0, 561.0, 655.0]).unwrap());
    let width = rows.len();
    let mut data = vec![0.0f32; width * 4];
    for (p, row) in rows.iter().enumerate() {
        for b in 0..4 {
            data[b * width + p] = row[b] as f32;
        }
    }
    Scene::new(
        width,
        1,
        bands,
        data,
        SceneMetadata::simple("O", 55.0, 0.0),
    )
    .unwrap()
}

#[test]
fn ordering_starts_at_the_deep_mean() {
    let deep = [0.008, 0.009, 0.006, 0.002];
    let scene = scene_with_rows(vec![
        [0.016, 0.011, 0.013, 0.004], // far
        deep,                         // the mean itself
        [0.0085, 0.0092, 0.0063, 0.0019],
    ]);
    let order = order_pixels(&scene, &deep);
    assert_eq!(order, vec![1, 2, 0]);
}

#[test]
fn ordering_is_scale_invariant_and_stable() {
    let deep = [0.008, 0.009, 0.006, 0.002];
    let double = [0.016, 0.018, 0.012, 0.004];
    let other = [0.012, 0.013, 0.0095, 0.0025];
    // a positive multiple of the mean scores the same angle as the mean
    // itself (up to f32 rounding); duplicated spectra keep raster order
    let scene = scene_with_rows(vec![other, double, other, deep]);
    let order = order_pixels(&scene, &deep);
    let mut first_two = [order[0], order[1]];
    first_two.sort_unstable();
    assert_eq!(first_two, [1, 3]);
    assert_eq!(&order[2..], &[0, 2]);
}

#[test]
fn hot_start_gate() {
    let scenes = [scene_with_rows(vec![
        [0.008, 0.009, 0.006, 0.002],
        [0.008005, 0.009003, 0.006001, 0.002],
        [0.02, 0.001, 0.015, 0.009],
    ])];
    let a = extract_region(&scenes, 0, 0).unwrap();
    let b = extract_region(&scenes, 1, 0).unwrap();
    let c = extract_region(&scenes, 2, 0).unwrap();
    // identical regions always pass
    assert!(should_hot_start(&a, &a, 1e-12));
    // zero threshold rejects everything except an exact match
    assert!(!should_hot_start(&a, &b, 0.0));
    // nearby spectra pass at the default threshold, distant ones do not
    let default = RunConfig::default().hot_start_threshold;
    assert!(should_hot_start(&a, &b, default));
    assert!(!should_hot_start(&a, &c, default));
}

#[test]
fn region_extraction_clamps_and_substitutes() {
    let mut scene = scene_with_rows(vec![
        [0.01, 0.011, 0.008, 0.002],
        [0.012, 0.013, 0.009, 0.003],
        [0.014, 0.015, 0.010, 0.004],
    ]);
    // corner pixel: the window clamps onto the edge
    let region = extract_region(std::slice::from_ref(&scene), 0, 1).unwrap();
    assert_eq!(region.pixels.len(), 9);
    assert_eq!(region.center_offset, 4);
    assert_eq!(region.pixels[region.center_offset], 0);
    assert!(region.pixels.iter().all(|&p| p < 3));
    // nodata neighbour: its spectrum falls back to the center's
    let n = scene.n_pixels();
    for b in 0..4 {
        scene.data[b * n + 1] = scene.meta.nodata;
    }
    let region = extract_region(std::slice::from_ref(&scene), 0, 1).unwrap();
    let center = &region.spectra[4 * 4..4 * 4 + 4];
    let substituted = &region.spectra[5 * 4..5 * 4 + 4];
    assert_eq!(center, substituted);
    // nodata center: no region
    assert!(extract_region(std::slice::from_ref(&scene), 1, 1).is_none());
}

fn two_scene_stack(width: usize, height: usize) -> (Vec<Scene>, BottomLibrary) {
    let lib = BottomLibrary::builtin().unwrap();
    let mut spec_a = SynthSpec::landsat_like(width, height, "A").unwrap();
    spec_a.depth = DepthProfile::Constant(9.0);
    spec_a.water = crate::forward::WaterColumn::with_shape(
        0.05, 0.06, 0.012, 0.0008, 0.015, 1.0,
    )
    .unwrap();
    let mut spec_b = spec_a.clone();
    spec_b.scene_id = "B".into();
    spec_b.sun_elevation_deg = 48.0;
    spec_b.water =
        crate::forward::WaterColumn::with_shape(0.04, 0.05, 0.010, 0.0007, 0.015, 1.0).unwrap();
    let (a, _) = generate_synthetic_scene(&spec_a, &lib).unwrap();
    let (b, _) = generate_synthetic_scene(&spec_b, &lib).unwrap();
    (vec![a, b], lib)
}

#[test]
fn cold_start_formulas() {
    let (scenes, lib) = two_scene_stack(5, 5);
    let config = RunConfig::default();
    let contexts: Vec<SceneContext> = scenes
        .iter()
        .map(|s| SceneContext::new(s.geometry().unwrap(), 0.0, 1.0))
        .collect();
    let solver = RegionSolver::new(&scenes[0].bands, contexts, &lib, &config).unwrap();
    let region = extract_region(&scenes, 12, 1).unwrap();
    let fit = solver.cold_start(&region, None);

    // P from the 440/550 band ratio of the region mean
    let mean = solver.region_mean(&region, 0);
    let expect_p = 0.072 * (mean[0] / mean[2]).powf(-1.7);
    assert!((fit.p[0] - expect_p).abs() < 1e-12);
    // G is always 1.5 P
    for j in 0..2 {
        assert!((fit.g[j] - 1.5 * fit.p[j]).abs() < 1e-15);
    }
    // X and Delta from the 640- and 750-mapped bands (both map to 655 here)
    let aw640 = crate::spectral::tables::pure_water_absorption()
        .value_at(640.0)
        .unwrap();
    assert!((fit.x[0] - 30.0 * aw640 * mean[3]).abs() < 1e-12);
    assert!((fit.delta[0] - mean[3]).abs() < 1e-15);
    // q starts at one for every type and pixel; H is absent without a prior
    assert!(fit.q.iter().all(|t| t.iter().all(|&v| v == 1.0)));
    assert!(fit.h.is_empty());
    // with an empirical prior the depths are carried through
    let fit = solver.cold_start(&region, Some(&[7.0; 9]));
    assert_eq!(fit.h, vec![7.0; 9]);
}

#[test]
fn invert_from_truth_is_a_fixed_point() {
    let (scenes, lib) = two_scene_stack(5, 5);
    let config = RunConfig::default();
    let stats: Vec<_> = scenes
        .iter()
        .map(|s| crate::empirical::deep_water_stats(s, &vec![true; 25]).unwrap())
        .collect();
    let contexts = scene_contexts(&scenes, &stats, &config).unwrap();
    // the synthetic scenes were generated with Y = 1
    let contexts: Vec<SceneContext> = contexts
        .iter()
        .map(|c| SceneContext::new(c.geometry, c.tide, 1.0))
        .collect();
    let solver = RegionSolver::new(&scenes[0].bands, contexts, &lib, &config).unwrap();
    let region = extract_region(&scenes, 12, 1).unwrap();

    // truth in the packed parameterisation: sand (library slot 1) with
    // B = 0.3; the unused slot takes the smallest admissible fraction
    let truth = ModelFit {
        p: vec![0.05, 0.04],
        g: vec![0.06, 0.05],
        x: vec![0.012, 0.010],
        delta: vec![0.0008, 0.0007],
        h: vec![9.0; 9],
        b: vec![vec![0.0; 9], vec![0.3; 9]],
        q: vec![vec![config.q_range.0; 9], vec![1.0; 9]],
        e_photic_pct: f64::NAN,
        iterations: 0,
        source: FitSource::Optimizer,
    };
    let start_error = solver.e_photic_percent(&region, &truth).unwrap();
    assert!(start_error < 1e-4, "truth scores {start_error}%");
    let fit = solver.invert(&region, &truth, 3).unwrap();
    assert!(fit.e_photic_pct <= start_error + 1e-12);
    assert!(fit.e_photic_pct < 1e-4, "{}", fit.e_photic_pct);
    for i in 0..9 {
        assert!((fit.h[i] - 9.0).abs() < 0.05, "pixel {i}: {}", fit.h[i]);
    }
}

#[test]
fn single_pixel_scene_uses_exactly_one_optimizer_call() {
    let lib = BottomLibrary::builtin().unwrap();
    let mut spec = SynthSpec::landsat_like(1, 1, "S").unwrap();
    spec.depth = DepthProfile::Constant(5.0);
    let (scene, _) = generate_synthetic_scene(&spec, &lib).unwrap();
    let mut config = RunConfig::default();
    config.simplex.max_iterations = 2000;
    let out = run_scene_stack(&[scene], &config, &lib, None, None).unwrap();
    assert_eq!(out.diagnostics.optimizer_calls, 1);
    assert_eq!(out.diagnostics.lut_hits, 0);
    assert_eq!(out.diagnostics.pixels_valid, 1);
    assert!(out.depth.valid(0, 0).is_some());
    assert_eq!(out.quality.get(0, 0), 0.0);
}

#[test]
fn lut_reuse_on_a_homogeneous_scene() {
    // A homogeneous single scene is the degenerate case: the retrieved
    // depth is not identifiable (identical spectra collapse to four
    // equations), so this checks the reuse mechanism, not accuracy.
    let lib = BottomLibrary::builtin().unwrap();
    let mut spec = SynthSpec::landsat_like(6, 6, "S").unwrap();
    spec.depth = DepthProfile::Constant(7.0);
    let (scene, _) = generate_synthetic_scene(&spec, &lib).unwrap();
    let mut config = RunConfig::default();
    config.simplex.max_iterations = 4000;
    let out = run_scene_stack(&[scene], &config, &lib, None, None).unwrap();
    let d = &out.diagnostics;
    // every pixel after the first comes from the table
    assert_eq!(d.optimizer_calls, 1, "{d:?}");
    assert_eq!(d.lut_hits, 35, "{d:?}");
    assert!(d.lut_hit_rate() > 0.95);
    // identical spectra share the stored fit verbatim
    let d0 = out.depth.valid(0, 0).unwrap();
    for pixel in 1..36 {
        assert_eq!(out.depth.valid(0, pixel).unwrap(), d0);
        assert_eq!(out.e_photic_pct.valid(0, pixel), out.e_photic_pct.valid(0, 0));
    }
    // exactly one pixel went through the optimizer path
    let sources: Vec<f32> = (0..36).map(|p| out.source.get(0, p)).collect();
    assert_eq!(sources.iter().filter(|&&s| s != 2.0).count(), 1);
}
