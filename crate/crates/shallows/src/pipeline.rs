//! The iterative estimation framework: scene-combination runs, depth
//! averaging and alignment, attenuation averaging, the bottom-unmixing
//! second pass and the Monte-Carlo depth error.

use log::warn;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::empirical::{self, SoundingSet};
use crate::engine::{self, StackOutput};
use crate::error::{Error, Result};
use crate::forward;
use crate::io::{Raster, RunConfig, Scene};
use crate::metrics;
use crate::optim::{self, Bounds, SimplexConfig};
use crate::spectral::{tables, BottomLibrary};

/// All nonempty scene-index subsets up to `max_size`, in size-then-
/// lexicographic order.
pub fn scene_combinations(n_scenes: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=max_size.min(n_scenes) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(combo.clone());
            // advance to the next lexicographic combination
            let mut i = size;
            while i > 0 && combo[i - 1] == i - 1 + n_scenes - size {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// One modelling iteration per scene combination.
pub struct IterationSet {
    pub combinations: Vec<Vec<usize>>,
    pub results: Vec<StackOutput>,
}

/// Weighted median with the lower-of-two-middles tie rule: the smallest
/// value whose cumulative weight reaches half the total.
pub fn weighted_median(values: &[(f64, f64)]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = sorted.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut cum = 0.0;
    for (v, w) in &sorted {
        cum += w;
        if cum >= total / 2.0 {
            return Some(*v);
        }
    }
    sorted.last().map(|(v, _)| *v)
}

/// Per-pixel (weighted) median of the iteration depths. With `weighted`,
/// each combination counts with weight equal to its scene count; otherwise
/// a plain spatial median over iterations.
pub fn combined_depth(set: &IterationSet, weighted: bool) -> Result<Raster> {
    let Some(first) = set.results.first() else {
        return Err(Error::Usage("no iteration results".into()));
    };
    let (w, h) = (first.depth.width, first.depth.height);
    let mut out = Raster::nodata_filled(w, h, 1);
    let mut samples = Vec::with_capacity(set.results.len());
    for pixel in 0..w * h {
        samples.clear();
        for (combo, result) in set.combinations.iter().zip(set.results.iter()) {
            if let Some(depth) = result.depth.valid(0, pixel) {
                let weight = if weighted { combo.len() as f64 } else { 1.0 };
                samples.push((depth, weight));
            }
        }
        if let Some(median) = weighted_median(&samples) {
            out.set(0, pixel, median as f32);
        }
    }
    Ok(out)
}

/// Per-pixel addition of the tide and datum offsets.
pub fn tide_correct(raster: &Raster, tide: f64, datum_offset: f64) -> Raster {
    let mut out = raster.clone();
    let shift = (tide + datum_offset) as f32;
    let n = out.n_pixels();
    for band in 0..out.n_bands {
        for pixel in 0..n {
            let v = out.get(band, pixel);
            if v != out.nodata && v.is_finite() {
                out.set(band, pixel, v + shift);
            }
        }
    }
    out
}

/// Power-mean blend coefficients for aligning iteration depths to known
/// profiles: `H_aligned = sum(c_i a_i H_i^{b_i}) / sum(c_i)`.
#[derive(Debug, Clone)]
pub struct AlignmentCoefficients {
    pub c: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub fit_error: f64,
}

fn aligned_value(c: &[f64], a: &[f64], b: &[f64], depths: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..depths.len() {
        num += c[i] * a[i] * depths[i].powf(b[i]);
        den += c[i];
    }
    num / den
}

/// Fit the alignment against soundings (weighted relative RMS, same
/// anti-clustering weights as the empirical stage) starting from all-ones
/// coefficients. Returns `None` (with a warning) when fewer than `3n`
/// soundings land on pixels where every iteration has a positive depth.
pub fn align_depths(
    depths: &[&Raster],
    georef: &Scene,
    soundings: &SoundingSet,
    cfg: &SimplexConfig,
) -> Result<Option<(AlignmentCoefficients, Raster)>> {
    let n = depths.len();
    if n == 0 {
        return Err(Error::Usage("align_depths: no depth rasters".into()));
    }
    let (w, h) = (depths[0].width, depths[0].height);
    if depths.iter().any(|d| d.width != w || d.height != h || d.n_bands != 1) {
        return Err(Error::Usage("align_depths: rasters not co-registered".into()));
    }

    let mut samples: Vec<(Vec<f64>, f64)> = Vec::new();
    for p in &soundings.points {
        let Some((col, row)) = georef.world_to_pixel(p.x, p.y) else {
            continue;
        };
        let pixel = row * w + col;
        let stack: Option<Vec<f64>> = depths
            .iter()
            .map(|d| d.valid(0, pixel).filter(|v| *v > 0.0))
            .collect();
        if let Some(stack) = stack {
            samples.push((stack, p.depth));
        }
    }
    if samples.len() < 3 * n {
        warn!(
            "alignment skipped: {} usable soundings for {} coefficients",
            samples.len(),
            3 * n
        );
        return Ok(None);
    }

    let depths_only: Vec<f64> = samples.iter().map(|(_, d)| *d).collect();
    let mut weights = empirical::sounding_weights(&depths_only)?;
    if weights.iter().all(|v| *v <= empirical::WEIGHT_FLOOR) {
        weights = vec![1.0; weights.len()];
    }
    let weight_sum: f64 = weights.iter().sum();

    let objective = |x: &[f64]| -> f64 {
        let (c, rest) = x.split_at(n);
        let (a, b) = rest.split_at(n);
        let mut acc = 0.0;
        for ((stack, depth), weight) in samples.iter().zip(weights.iter()) {
            let aligned = aligned_value(c, a, b, stack);
            let rel = (aligned - depth) / depth;
            acc += weight * rel * rel;
        }
        (acc / weight_sum).sqrt()
    };

    let mut lower = vec![1e-3; 2 * n];
    let mut upper = vec![10.0; 2 * n];
    lower.extend(std::iter::repeat(0.5).take(n));
    upper.extend(std::iter::repeat(2.0).take(n));
    let bounds = Bounds::new(lower, upper)?;
    let start = vec![1.0; 3 * n];
    let result = optim::minimize(objective, &start, &bounds, cfg)?;
    let (c, rest) = result.x.split_at(n);
    let (a, b) = rest.split_at(n);

    let mut aligned = Raster::nodata_filled(w, h, 1);
    let mut stack = vec![0.0; n];
    'pixels: for pixel in 0..w * h {
        for (i, d) in depths.iter().enumerate() {
            match d.valid(0, pixel) {
                Some(v) if v > 0.0 => stack[i] = v,
                _ => continue 'pixels,
            }
        }
        aligned.set(0, pixel, aligned_value(c, a, b, &stack) as f32);
    }
    Ok(Some((
        AlignmentCoefficients {
            c: c.to_vec(),
            a: a.to_vec(),
            b: b.to_vec(),
            fit_error: result.f,
        },
        aligned,
    )))
}

/// Mean attenuation over iterations.
pub struct KAverage {
    /// Per-scene mean `k(lambda)` rasters (band = spectral band).
    pub per_scene: Vec<Raster>,
    /// Mean over iterations of the per-pixel minimum attenuation (over
    /// scenes in the iteration and bands).
    pub min_k: Raster,
}

fn k_at(p: f64, g: f64, x: f64, s: f64, y: f64, lambda: f64) -> Result<f64> {
    let a = tables::pure_water_absorption().value_at(lambda)?
        + forward::absorption_phi(p, lambda)?
        + forward::absorption_gelbstoff(g, lambda, s);
    let b_b = tables::pure_seawater_backscatter().value_at(lambda)?
        + forward::backscatter_particles(x, lambda, y);
    Ok(a + b_b)
}

/// Average the attenuation coefficient over all iterations, per scene and
/// band, plus the iteration-mean minimum attenuation per pixel.
pub fn average_k(set: &IterationSet, scenes: &[Scene], config: &RunConfig) -> Result<KAverage> {
    let Some(first) = set.results.first() else {
        return Err(Error::Usage("no iteration results".into()));
    };
    let (w, h) = (first.depth.width, first.depth.height);
    let n_pixels = w * h;
    let bands = scenes[0].bands.centers().to_vec();
    let n_scenes = scenes.len();

    let mut sums = vec![vec![0.0f64; n_pixels * bands.len()]; n_scenes];
    let mut counts = vec![vec![0u32; n_pixels * bands.len()]; n_scenes];
    let mut min_sum = vec![0.0f64; n_pixels];
    let mut min_count = vec![0u32; n_pixels];

    for (combo, result) in set.combinations.iter().zip(set.results.iter()) {
        for pixel in 0..n_pixels {
            let mut min_k = f64::INFINITY;
            for (slot, &scene_idx) in combo.iter().enumerate() {
                let (Some(p), Some(g), Some(x)) = (
                    result.p.valid(slot, pixel),
                    result.g.valid(slot, pixel),
                    result.x.valid(slot, pixel),
                ) else {
                    continue;
                };
                let y = result.y[slot];
                for (l, &lambda) in bands.iter().enumerate() {
                    let Ok(k) = k_at(p, g, x, config.s_slope, y, lambda) else {
                        continue;
                    };
                    sums[scene_idx][l * n_pixels + pixel] += k;
                    counts[scene_idx][l * n_pixels + pixel] += 1;
                    min_k = min_k.min(k);
                }
            }
            if min_k.is_finite() {
                min_sum[pixel] += min_k;
                min_count[pixel] += 1;
            }
        }
    }

    let per_scene = (0..n_scenes)
        .map(|j| {
            let mut r = Raster::nodata_filled(w, h, bands.len());
            for l in 0..bands.len() {
                for pixel in 0..n_pixels {
                    let c = counts[j][l * n_pixels + pixel];
                    if c > 0 {
                        r.set(l, pixel, (sums[j][l * n_pixels + pixel] / c as f64) as f32);
                    }
                }
            }
            r
        })
        .collect();
    let mut min_k = Raster::nodata_filled(w, h, 1);
    for pixel in 0..n_pixels {
        if min_count[pixel] > 0 {
            min_k.set(0, pixel, (min_sum[pixel] / min_count[pixel] as f64) as f32);
        }
    }
    Ok(KAverage { per_scene, min_k })
}

/// 3x3 median filter per band; nodata values are excluded from the window
/// and preserved where the center is nodata.
pub fn median_filter_3x3(raster: &Raster) -> Raster {
    let (w, h) = (raster.width as isize, raster.height as isize);
    let mut out = raster.clone();
    let mut window = Vec::with_capacity(9);
    for band in 0..raster.n_bands {
        for row in 0..h {
            for col in 0..w {
                let pixel = (row * w + col) as usize;
                if raster.valid(band, pixel).is_none() {
                    continue;
                }
                window.clear();
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let rr = (row + dr).clamp(0, h - 1);
                        let cc = (col + dc).clamp(0, w - 1);
                        if let Some(v) = raster.valid(band, (rr * w + cc) as usize) {
                            window.push(v);
                        }
                    }
                }
                window.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let m = window.len();
                let median = if m % 2 == 1 {
                    window[m / 2]
                } else {
                    0.5 * (window[m / 2 - 1] + window[m / 2])
                };
                out.set(band, pixel, median as f32);
            }
        }
    }
    out
}

/// Fixed inputs for the bottom-unmixing second pass: per-scene water
/// column rasters (band = scene slot, covering all scenes), the combined
/// depth raster, and the per-scene backscatter exponents.
pub struct UnmixInputs<'a> {
    pub p: &'a Raster,
    pub g: &'a Raster,
    pub x: &'a Raster,
    pub delta: &'a Raster,
    pub depth: &'a Raster,
    pub scenes: &'a [Scene],
    pub y: &'a [f64],
}

pub struct UnmixOutput {
    /// Per-type albedo magnitudes (band = type).
    pub b: Raster,
    /// Per-type mixing fractions (band = type).
    pub q: Raster,
    /// Unmixing error per pixel.
    pub e_unmixed: Raster,
}

/// Bottom albedo spectra implied by the fixed water column at one pixel:
/// `rho_modelled[scene][band]`, or `None` when any value is non-finite or
/// unphysical (deep-water blow-up).
fn pixel_rho_modelled(inputs: &UnmixInputs, pixel: usize, s_slope: f64) -> Option<Vec<f64>> {
    let n_scenes = inputs.scenes.len();
    let n_bands = inputs.scenes[0].bands.len();
    let depth = inputs.depth.valid(0, pixel)?;
    let mut out = Vec::with_capacity(n_scenes * n_bands);
    for j in 0..n_scenes {
        let scene = &inputs.scenes[j];
        let (p, g, x, delta) = (
            inputs.p.valid(j, pixel)?,
            inputs.g.valid(j, pixel)?,
            inputs.x.valid(j, pixel)?,
            inputs.delta.valid(j, pixel)?,
        );
        let water =
            forward::WaterColumn::with_shape(p, g, x, delta, s_slope, inputs.y[j]).ok()?;
        let geometry = scene.geometry().ok()?;
        let surface = scene.spectrum_at(pixel)?;
        let h_scene = (depth + scene.meta.tide_offset_m).max(0.0);
        for (l, &lambda) in scene.bands.centers().iter().enumerate() {
            let rho = forward::rho_modelled(&water, h_scene, &geometry, surface[l], lambda).ok()?;
            if !rho.is_finite() || rho.abs() > 20.0 {
                return None;
            }
            out.push(rho);
        }
    }
    Some(out)
}

fn rho_unmixed_spectrum(b: &[f64], q: &[f64], library_values: &[Vec<f64>], n_bands: usize) -> Vec<f64> {
    let q_sum: f64 = q.iter().sum();
    (0..n_bands)
        .map(|l| {
            b.iter()
                .zip(q.iter())
                .zip(library_values.iter())
                .map(|((b_t, q_t), rho)| b_t * q_t * rho[l])
                .sum::<f64>()
                / q_sum
        })
        .collect()
}

/// Fit (B, q) for a subset of library types against per-scene modelled
/// albedo spectra. Returns the packed best fit.
fn fit_bottom_subset(
    rho_modelled: &[f64],
    n_scenes: usize,
    library_values: &[Vec<f64>],
    b_init: &[f64],
    config: &RunConfig,
    cfg: &SimplexConfig,
) -> Result<(Vec<f64>, Vec<f64>, f64, usize)> {
    let n_types = library_values.len();
    let n_bands = library_values[0].len();
    let objective = |x: &[f64]| -> f64 {
        let (b, q) = x.split_at(n_types);
        if q.iter().sum::<f64>() <= 0.0 {
            return f64::INFINITY;
        }
        let unmixed_one = rho_unmixed_spectrum(b, q, library_values, n_bands);
        // the bottom is static across scenes: replicate per scene
        let mut unmixed = Vec::with_capacity(n_scenes * n_bands);
        for _ in 0..n_scenes {
            unmixed.extend(&unmixed_one);
        }
        match metrics::e_unmixed(&unmixed, rho_modelled, n_scenes, n_bands) {
            Ok(v) => v,
            Err(_) => f64::INFINITY,
        }
    };
    let mut lower = vec![config.b_range.0; n_types];
    let mut upper = vec![config.b_range.1; n_types];
    lower.extend(std::iter::repeat(config.q_range.0).take(n_types));
    upper.extend(std::iter::repeat(config.q_range.1).take(n_types));
    let bounds = Bounds::new(lower, upper)?;
    let mut start = b_init.to_vec();
    start.extend(std::iter::repeat(1.0).take(n_types));
    let result = optim::minimize(objective, &start, &bounds, cfg)?;
    let (b, q) = result.x.split_at(n_types);
    Ok((b.to_vec(), q.to_vec(), result.f, result.evaluations))
}

/// Optimise only the bottom parameters per pixel, holding the water column
/// and depths fixed.
pub fn unmix_bottom(
    inputs: &UnmixInputs,
    library: &BottomLibrary,
    config: &RunConfig,
) -> Result<UnmixOutput> {
    let (w, h) = (inputs.depth.width, inputs.depth.height);
    let n_scenes = inputs.scenes.len();
    let n_types = config.n_bottoms.min(library.len());
    let subset: Vec<usize> = (0..n_types).collect();
    let library_values = library.subset(&subset)?.resample(&inputs.scenes[0].bands)?;
    let n_bands = inputs.scenes[0].bands.len();
    let band_550 = inputs.scenes[0].bands.formula_band(550.0);

    let mut out = UnmixOutput {
        b: Raster::nodata_filled(w, h, n_types),
        q: Raster::nodata_filled(w, h, n_types),
        e_unmixed: Raster::nodata_filled(w, h, 1),
    };
    for pixel in 0..w * h {
        let Some(rho_modelled) = pixel_rho_modelled(inputs, pixel, config.s_slope) else {
            continue;
        };
        // B starts from the mean 550 nm albedo (library spectra are 1 there)
        let mut b550 = 0.0;
        for j in 0..n_scenes {
            b550 += rho_modelled[j * n_bands + band_550];
        }
        b550 = (b550 / n_scenes as f64).clamp(config.b_range.0.max(1e-3), config.b_range.1);
        let b_init = vec![b550; n_types];
        let cfg = config
            .simplex
            .reseeded(config.simplex.rng_seed ^ pixel as u64);
        match fit_bottom_subset(&rho_modelled, n_scenes, &library_values, &b_init, config, &cfg) {
            Ok((b, q, e, _)) => {
                for t in 0..n_types {
                    out.b.set(t, pixel, b[t] as f32);
                    out.q.set(t, pixel, q[t] as f32);
                }
                out.e_unmixed.set(0, pixel, e as f32);
            }
            Err(e) => warn!("unmixing failed at pixel {pixel}: {e}"),
        }
    }
    Ok(out)
}

/// Result of the exhaustive singleton/pair bottom search.
#[derive(Debug, Clone)]
pub struct BottomSearchResult {
    /// Library indices of the winning subset (one or two entries).
    pub indices: Vec<usize>,
    pub b: Vec<f64>,
    pub q: Vec<f64>,
    pub e_unmixed: f64,
    /// Candidate subsets evaluated: `k + k(k-1)/2` for a k-entry library.
    pub candidates: usize,
}

/// Evaluate every individual bottom spectrum, then every unordered pair,
/// fitting (B, q) for each candidate against the per-scene modelled albedo
/// spectra; return the best. Combinatorial, hence noticeably slower than
/// the plain parameterised fit.
pub fn exhaustive_bottom_search(
    rho_modelled: &[f64],
    n_scenes: usize,
    library: &BottomLibrary,
    bands: &crate::spectral::BandSet,
    config: &RunConfig,
    cfg: &SimplexConfig,
) -> Result<BottomSearchResult> {
    if library.is_empty() {
        return Err(Error::Usage("empty bottom library".into()));
    }
    let all_values = library.resample(bands)?;
    let k = library.len();
    let mut subsets: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
    for i in 0..k {
        for j in i + 1..k {
            subsets.push(vec![i, j]);
        }
    }
    let mut best: Option<BottomSearchResult> = None;
    let candidates = subsets.len();
    for subset in subsets {
        let values: Vec<Vec<f64>> = subset.iter().map(|&i| all_values[i].clone()).collect();
        let b_init = vec![0.2; subset.len()];
        let (b, q, e, _) =
            fit_bottom_subset(rho_modelled, n_scenes, &values, &b_init, config, cfg)?;
        if best.as_ref().map_or(true, |r| e < r.e_unmixed) {
            best = Some(BottomSearchResult {
                indices: subset,
                b,
                q,
                e_unmixed: e,
                candidates,
            });
        }
    }
    Ok(best.unwrap())
}

/// Monte-Carlo depth error: repeat the inversion under per-band uniform
/// noise at the deep-water standard deviation and report the per-pixel
/// standard deviation of the retrieved depths (times `config.error_scale`).
pub fn depth_error_estimate(
    scenes: &[Scene],
    config: &RunConfig,
    library: &BottomLibrary,
    empirical_depths: Option<&Raster>,
    deep_mask: Option<&[bool]>,
) -> Result<Raster> {
    if config.error_trials < 2 {
        return Err(Error::Usage(format!(
            "depth error estimation needs at least 2 trials, got {}",
            config.error_trials
        )));
    }
    let Some(first) = scenes.first() else {
        return Err(Error::Usage("no scenes".into()));
    };
    let mask_storage;
    let mask: &[bool] = match deep_mask {
        Some(m) => m,
        None => {
            mask_storage = engine::default_deep_mask(first);
            &mask_storage
        }
    };
    let sigmas: Vec<Vec<f64>> = scenes
        .iter()
        .map(|s| {
            empirical::deep_water_stats(s, mask).map(|st| {
                st.stddev
                    .values()
                    .iter()
                    .map(|v| v * config.noise_scale)
                    .collect()
            })
        })
        .collect::<Result<_>>()?;

    let n_pixels = first.n_pixels();
    let mut sum = vec![0.0f64; n_pixels];
    let mut sum_sq = vec![0.0f64; n_pixels];
    let mut count = vec![0u32; n_pixels];
    for trial in 0..config.error_trials {
        let mut rng =
            ChaCha8Rng::seed_from_u64(config.simplex.rng_seed ^ ((trial as u64) << 32));
        let perturbed: Vec<Scene> = scenes
            .iter()
            .zip(sigmas.iter())
            .map(|(scene, sigma)| {
                let mut s = scene.clone();
                for band in 0..s.bands.len() {
                    let amp = sigma[band];
                    for pixel in 0..n_pixels {
                        let v = s.data[band * n_pixels + pixel];
                        if v != s.meta.nodata && v.is_finite() && amp > 0.0 {
                            s.data[band * n_pixels + pixel] =
                                v + rng.gen_range(-amp..=amp) as f32;
                        }
                    }
                }
                s
            })
            .collect();
        let out = engine::run_scene_stack(&perturbed, config, library, empirical_depths, Some(mask))?;
        for pixel in 0..n_pixels {
            if let Some(depth) = out.depth.valid(0, pixel) {
                sum[pixel] += depth;
                sum_sq[pixel] += depth * depth;
                count[pixel] += 1;
            }
        }
    }

    let mut out = Raster::nodata_filled(first.width, first.height, 1);
    for pixel in 0..n_pixels {
        if count[pixel] >= 2 {
            let n = count[pixel] as f64;
            let mean = sum[pixel] / n;
            let var = (sum_sq[pixel] / n - mean * mean).max(0.0);
            out.set(0, pixel, (var.sqrt() * config.error_scale) as f32);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_enumeration() {
        let combos = scene_combinations(4, 4);
        assert_eq!(combos.len(), 15);
        let expect: Vec<Vec<usize>> = vec![
            vec![0],
            vec![1],
            vec![2],
            vec![3],
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3],
            vec![0, 1, 2],
            vec![0, 1, 3],
            vec![0, 2, 3],
            vec![1, 2, 3],
            vec![0, 1, 2, 3],
        ];
        assert_eq!(combos, expect);
        assert_eq!(scene_combinations(1, 4), vec![vec![0]]);
        // C(5,1) + C(5,2) + C(5,3) + C(5,4) = 30
        assert_eq!(scene_combinations(5, 4).len(), 30);
    }

    #[test]
    fn weighted_median_examples() {
        // singleton
        assert_eq!(weighted_median(&[(4.0, 2.0)]), Some(4.0));
        // cumulative weight reaches half at the middle value
        let v = weighted_median(&[(10.0, 1.0), (11.0, 2.0), (30.0, 1.0)]);
        assert_eq!(v, Some(11.0));
        // lower-of-two-middles tie rule
        assert_eq!(weighted_median(&[(10.0, 1.0), (20.0, 1.0)]), Some(10.0));
        assert_eq!(weighted_median(&[]), None);
    }

    #[test]
    fn weighted_median_matches_expansion_oracle() {
        // against the expanded-multiset oracle on random small instances
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..500 {
            let n = rng.gen_range(1..=10);
            let values: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        (rng.gen_range(0..40) as f64) * 0.5,
                        rng.gen_range(1..=4) as f64,
                    )
                })
                .collect();
            let got = weighted_median(&values).unwrap();
            // expand integer weights and take the lower middle
            let mut expanded: Vec<f64> = Vec::new();
            for &(v, w) in &values {
                for _ in 0..w as usize {
                    expanded.push(v);
                }
            }
            expanded.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let idx = (expanded.len() + 1) / 2 - 1;
            assert_eq!(got, expanded[idx], "trial {trial}: {values:?}");
        }
    }

    #[test]
    fn tide_correct_round_trip() {
        let mut r = Raster::filled(2, 1, 1, 17.22);
        r.set(0, 1, r.nodata);
        let corrected = tide_correct(&r, -0.5, -0.25);
        assert!((corrected.get(0, 0) - 16.47).abs() < 1e-5);
        assert_eq!(corrected.get(0, 1), r.nodata);
        let back = tide_correct(&corrected, 0.5, 0.25);
        assert!((back.get(0, 0) - 17.22).abs() < 1e-5);
        let identity = tide_correct(&r, 0.0, 0.0);
        assert_eq!(identity.get(0, 0), 17.22);
    }

    #[test]
    fn median_filter_basics() {
        // single salt pixel in a flat field is removed
        let mut r = Raster::filled(3, 3, 1, 2.0);
        r.set(0, 4, 99.0);
        let f = median_filter_3x3(&r);
        assert_eq!(f.get(0, 4), 2.0);
        // nodata center stays nodata and is skipped in neighbours' windows
        let mut r = Raster::filled(3, 3, 1, 2.0);
        r.set(0, 0, r.nodata);
        let f = median_filter_3x3(&r);
        assert_eq!(f.get(0, 0), r.nodata);
        assert_eq!(f.get(0, 4), 2.0);
    }
}
