use std::time::Instant;
use shallows::engine::run_scene_stack;
use shallows::io::{generate_synthetic_scene, DepthProfile, RunConfig, SynthSpec};
use shallows::spectral::BottomLibrary;

fn main() {
    let lib = BottomLibrary::builtin().unwrap();
    let mut spec = SynthSpec::landsat_like(32, 32, "S0").unwrap();
    spec.depth = DepthProfile::Ramp { min: 1.0, max: 25.0 };
    spec.water = shallows::forward::WaterColumn::with_shape(0.04, 0.02, 0.004, 0.0008, 0.015, 1.0).unwrap();
    spec.bottom_type = 1; // sand
    let (scene, truth) = generate_synthetic_scene(&spec, &lib).unwrap();

    let mut config = RunConfig::default();
    config.n_bottoms = 1;
    config.bottom_library = None;
    config.y_override = Some(1.0);
    // library subset: first n_bottoms entries are taken -> need sand first
    let sand = lib.subset(&[1]).unwrap();

    let t0 = Instant::now();
    let out = run_scene_stack(&[scene], &config, &sand, None, None).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let d = &out.diagnostics;
    println!("elapsed {dt:.1}s lut_hits {} opt {} hot {} cold {} iters {} fail {}",
        d.lut_hits, d.optimizer_calls, d.hot_starts, d.cold_starts, d.iterations_total, d.failures);
    // accuracy vs truth
    let mut abs_err = Vec::new();
    let mut p_ok = 0usize; let mut g_ok = 0; let mut x_ok = 0; let mut n = 0;
    for px in 0..1024 {
        if let (Some(h), Some(ht)) = (out.depth.valid(0, px), truth.depth.valid(0, px)) {
            abs_err.push((h - ht).abs());
            n += 1;
            if let Some(p) = out.p.valid(0, px) { if (p - 0.04).abs() / 0.04 < 0.2 { p_ok += 1; } }
            if let Some(g) = out.g.valid(0, px) { if (g - 0.02).abs() / 0.02 < 0.2 { g_ok += 1; } }
            if let Some(x) = out.x.valid(0, px) { if (x - 0.004).abs() / 0.004 < 0.2 { x_ok += 1; } }
        }
    }
    let mae: f64 = abs_err.iter().sum::<f64>() / n as f64;
    abs_err.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("n {n} MAE {mae:.3} p50 {:.3} p90 {:.3} max {:.3}", abs_err[n/2], abs_err[n*9/10], abs_err[n-1]);
    println!("P within 20%: {:.1}%  G: {:.1}%  X: {:.1}%", 100.0*p_ok as f64/n as f64, 100.0*g_ok as f64/n as f64, 100.0*x_ok as f64/n as f64);
}
