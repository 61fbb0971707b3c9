//! Empirical log-linear depth initializer.
//!
//! Over a uniform bottom, the log of the bottom signal `r_rs - r_inf`
//! decays linearly with depth in every band, so a depth estimate of the
//! form
//!
//! ```text
//! H = h0 - sum_i h_i ln(r_rs(lambda_i) - r_inf(lambda_i))
//! ```
//!
//! can be fitted against chart soundings and evaluated everywhere. The fit
//! minimises a weighted relative RMS error, where anti-clustering weights
//! keep frequently occurring sounding depths from dominating. The result
//! seeds the full inversion with a per-pixel depth prior.

use log::warn;

use crate::error::{Error, Result};
use crate::forward::surface_to_subsurface;
use crate::io::{Raster, Scene};
use crate::metrics::sam_angle;
use crate::optim::{multi_start_minimize, Bounds, SimplexConfig};
use crate::spectral::Spectrum;

/// Raw anti-clustering weights below this floor are clamped up to it; when
/// every weight lands on the floor the fit falls back to uniform weights.
pub const WEIGHT_FLOOR: f64 = 1e-3;

/// One georeferenced depth point (depth in metres, positive down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sounding {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

/// Georeferenced depth points with derived anti-clustering weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingSet {
    pub points: Vec<Sounding>,
}

impl SoundingSet {
    pub fn new(points: Vec<Sounding>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p.depth > 0.0) || !p.depth.is_finite() {
                return Err(Error::Invalid {
                    what: "SoundingSet",
                    why: format!("sounding {i} has nonpositive depth {}", p.depth),
                });
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn depths(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.depth).collect()
    }

    /// Anti-clustering weights for the sounding depths.
    pub fn weights(&self) -> Result<Vec<f64>> {
        sounding_weights(&self.depths())
    }
}

/// Anti-clustering weights `w_i = 1 - W_i / max(W)` with
/// `W_i = sum_j exp(-(s_i - s_j)^2)`, floored at [`WEIGHT_FLOOR`].
///
/// The most frequent depth always receives the floor weight; mutually
/// distant soundings all land on the floor too (each `W_i ~ 1`), which the
/// fit detects and replaces with uniform weights.
pub fn sounding_weights(depths: &[f64]) -> Result<Vec<f64>> {
    if depths.len() < 2 {
        return Err(Error::Usage(format!(
            "sounding weights need at least 2 depths, got {}",
            depths.len()
        )));
    }
    let w_raw: Vec<f64> = depths
        .iter()
        .map(|&si| {
            depths
                .iter()
                .map(|&sj| (-(si - sj) * (si - sj)).exp())
                .sum()
        })
        .collect();
    let max = w_raw.iter().cloned().fold(f64::MIN, f64::max);
    Ok(w_raw
        .iter()
        .map(|w| (1.0 - w / max).max(WEIGHT_FLOOR))
        .collect())
}

/// Per-band mean and standard deviation over a pixel mask, in the scene's
/// stored reflectance convention (above-surface). The empirical model
/// converts to subsurface values where it needs them.
#[derive(Debug, Clone)]
pub struct DeepWaterStats {
    pub mean: Spectrum,
    pub stddev: Spectrum,
    pub n_pixels: usize,
}

/// Compute deep-water statistics over the masked pixels (population
/// standard deviation). Fewer than 30 pixels trips a warning; an empty
/// mask is an error.
pub fn deep_water_stats(scene: &Scene, mask: &[bool]) -> Result<DeepWaterStats> {
    if mask.len() != scene.n_pixels() {
        return Err(Error::Usage(format!(
            "deep mask has {} entries for {} pixels",
            mask.len(),
            scene.n_pixels()
        )));
    }
    let n_bands = scene.bands.len();
    let mut sum = vec![0.0f64; n_bands];
    let mut sum_sq = vec![0.0f64; n_bands];
    let mut count = 0usize;
    for pixel in 0..scene.n_pixels() {
        if !mask[pixel] {
            continue;
        }
        if let Some(values) = scene.spectrum_at(pixel) {
            for (b, v) in values.iter().enumerate() {
                sum[b] += v;
                sum_sq[b] += v * v;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Usage("deep-water mask selects no valid pixels".into()));
    }
    if count < 30 {
        warn!(
            "deep-water statistics from only {count} pixels (scene {}); estimates will be noisy",
            scene.meta.scene_id
        );
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let stddev: Vec<f64> = sum_sq
        .iter()
        .zip(mean.iter())
        .map(|(sq, m)| (sq / count as f64 - m * m).max(0.0).sqrt())
        .collect();
    Ok(DeepWaterStats {
        mean: Spectrum::new(scene.bands.clone(), mean)?,
        stddev: Spectrum::new(scene.bands.clone(), stddev)?,
        n_pixels: count,
    })
}

/// Ratio of blue to green attenuation estimated from the log bottom
/// signals, `ln(r(blue) - r_inf(blue)) / ln(r(green) - r_inf(green))`,
/// with blue/green mapped from 490/550 nm. Both spectra must be subsurface.
pub fn attenuation_ratio(r: &Spectrum, r_inf: &Spectrum) -> Result<f64> {
    let bands = r.bands();
    let blue = bands.formula_band(490.0);
    let green = bands.formula_band(550.0);
    let db = r.values()[blue] - r_inf.values()[blue];
    let dg = r.values()[green] - r_inf.values()[green];
    if !(db > 0.0) || !(dg > 0.0) {
        return Err(Error::Domain {
            op: "attenuation_ratio",
            why: format!("bottom signal not above deep water (blue {db}, green {dg})"),
        });
    }
    let denom = dg.ln();
    if denom.abs() < 1e-12 {
        return Err(Error::Domain {
            op: "attenuation_ratio",
            why: "green log term vanishes".into(),
        });
    }
    Ok(db.ln() / denom)
}

/// Fitted empirical coefficients: `h[0]` is the intercept, `h[1..]` one
/// coefficient per band.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCoefficients {
    pub h: Vec<f64>,
    pub fit_error: f64,
}

/// Depth from fitted coefficients and per-band subsurface values.
/// Returns `None` when a band with a nonzero coefficient has no positive
/// bottom signal.
pub fn empirical_depth(
    c: &EmpiricalCoefficients,
    r_sub: &[f64],
    r_inf_sub: &[f64],
) -> Option<f64> {
    let mut depth = c.h[0];
    for (i, (&r, &ri)) in r_sub.iter().zip(r_inf_sub.iter()).enumerate() {
        let coeff = c.h[i + 1];
        if coeff == 0.0 {
            continue;
        }
        let diff = r - ri;
        if !(diff > 0.0) {
            return None;
        }
        depth -= coeff * diff.ln();
    }
    Some(depth)
}

/// Subsurface deep-water reference per band.
fn deep_reference(stats: &DeepWaterStats) -> Result<Vec<f64>> {
    stats
        .mean
        .values()
        .iter()
        .map(|&m| surface_to_subsurface(m, 0.0))
        .collect()
}

struct FitSample {
    logs: Vec<f64>,
    depth: f64,
}

/// Fit the empirical coefficients against soundings by multi-start simplex
/// minimisation of the weighted relative RMS error.
pub fn fit_empirical(
    scene: &Scene,
    stats: &DeepWaterStats,
    soundings: &SoundingSet,
    cfg: &SimplexConfig,
) -> Result<EmpiricalCoefficients> {
    let n_bands = scene.bands.len();
    let r_inf = deep_reference(stats)?;

    let mut samples = Vec::new();
    let mut ratios = Vec::new();
    for p in &soundings.points {
        let Some((col, row)) = scene.world_to_pixel(p.x, p.y) else {
            continue;
        };
        let Some(surface) = scene.spectrum_at(row * scene.width + col) else {
            continue;
        };
        let r_sub = surface
            .iter()
            .map(|&v| surface_to_subsurface(v, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let diffs: Vec<f64> = r_sub.iter().zip(r_inf.iter()).map(|(r, ri)| r - ri).collect();
        if diffs.iter().any(|d| !(*d > 0.0)) {
            continue; // optically deep or inverted signal at this sounding
        }
        let spectrum = Spectrum::new(scene.bands.clone(), r_sub)?;
        let r_inf_spectrum = Spectrum::new(scene.bands.clone(), r_inf.clone())?;
        if let Ok(ratio) = attenuation_ratio(&spectrum, &r_inf_spectrum) {
            ratios.push(ratio);
        }
        samples.push(FitSample {
            logs: diffs.iter().map(|d| d.ln()).collect(),
            depth: p.depth,
        });
    }

    if samples.len() < n_bands + 2 {
        return Err(Error::Fit(format!(
            "only {} usable soundings for a {}-coefficient fit",
            samples.len(),
            n_bands + 1
        )));
    }

    let depths: Vec<f64> = samples.iter().map(|s| s.depth).collect();
    let mut weights = sounding_weights(&depths)?;
    if weights.iter().all(|w| *w <= WEIGHT_FLOOR) {
        weights = vec![1.0; weights.len()];
    }
    let weight_sum: f64 = weights.iter().sum();

    let objective = |h: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (sample, w) in samples.iter().zip(weights.iter()) {
            let mut predicted = h[0];
            for (log, coeff) in sample.logs.iter().zip(h[1..].iter()) {
                predicted -= coeff * log;
            }
            let rel = (predicted - sample.depth) / sample.depth;
            acc += w * rel * rel;
        }
        (acc / weight_sum).sqrt()
    };

    let mean_depth = depths.iter().sum::<f64>() / depths.len() as f64;
    let mean_logs: Vec<f64> = (0..n_bands)
        .map(|b| samples.iter().map(|s| s.logs[b]).sum::<f64>() / samples.len() as f64)
        .collect();

    let mut starts = Vec::new();
    // attenuation-seeded start: coefficients proportional to the stub k,
    // normalised so sum(h_i k_i) = 1, intercept anchored on the data
    if !ratios.is_empty() {
        let mut sorted = ratios.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ratio = sorted[sorted.len() / 2];
        if let Ok(k) = water_types::seed_attenuation(scene.bands.as_ref(), ratio) {
            let k_norm: f64 = k.iter().map(|v| v * v).sum();
            let h_coeff: Vec<f64> = k.iter().map(|v| v / k_norm).collect();
            let intercept = mean_depth
                + h_coeff
                    .iter()
                    .zip(mean_logs.iter())
                    .map(|(h, l)| h * l)
                    .sum::<f64>();
            let mut start = vec![intercept];
            start.extend(h_coeff);
            starts.push(start);
        }
    }
    // intercept-only start at the mean sounding depth
    let mut flat = vec![0.0; n_bands + 1];
    flat[0] = mean_depth;
    starts.push(flat);

    let bounds = Bounds::new(vec![-1e3; n_bands + 1], vec![1e3; n_bands + 1])?;
    let best = multi_start_minimize(objective, &starts, &bounds, cfg)?;
    Ok(EmpiricalCoefficients {
        h: best.x,
        fit_error: best.f,
    })
}

/// Evaluate fitted coefficients at every pixel of a scene. Pixels with
/// nodata or without a usable bottom signal get the nodata sentinel.
pub fn predict_depths(
    scene: &Scene,
    stats: &DeepWaterStats,
    c: &EmpiricalCoefficients,
) -> Result<Raster> {
    let r_inf = deep_reference(stats)?;
    let mut raster = Raster::nodata_filled(scene.width, scene.height, 1);
    for pixel in 0..scene.n_pixels() {
        let Some(surface) = scene.spectrum_at(pixel) else {
            continue;
        };
        let mut r_sub = Vec::with_capacity(surface.len());
        let mut ok = true;
        for &v in &surface {
            match surface_to_subsurface(v, 0.0) {
                Ok(r) => r_sub.push(r),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if let Some(depth) = empirical_depth(c, &r_sub, &r_inf) {
            raster.set(0, pixel, depth as f32);
        }
    }
    Ok(raster)
}

/// Combine per-scene depth rasters into one estimate: per-pixel temporal
/// median of the tide-corrected depths, or a mean weighted by the inverse
/// fit error of each scene.
pub fn synthesize_depths(
    rasters: &[Raster],
    fit_errors: &[f64],
    tides: &[f64],
    method: crate::io::DepthSynthesis,
) -> Result<Raster> {
    if rasters.is_empty() || rasters.len() != tides.len() || rasters.len() != fit_errors.len() {
        return Err(Error::Usage(format!(
            "synthesize_depths: {} rasters, {} fit errors, {} tides",
            rasters.len(),
            fit_errors.len(),
            tides.len()
        )));
    }
    let (w, h) = (rasters[0].width, rasters[0].height);
    if rasters.iter().any(|r| r.width != w || r.height != h || r.n_bands != 1) {
        return Err(Error::Usage(
            "synthesize_depths: rasters are not co-registered single-band grids".into(),
        ));
    }
    let mut out = Raster::nodata_filled(w, h, 1);
    let mut values = Vec::with_capacity(rasters.len());
    for pixel in 0..w * h {
        values.clear();
        for (j, raster) in rasters.iter().enumerate() {
            if let Some(v) = raster.valid(0, pixel) {
                values.push((v + tides[j], fit_errors[j]));
            }
        }
        if values.is_empty() {
            continue;
        }
        let combined = match method {
            crate::io::DepthSynthesis::Median => {
                values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2].0
                } else {
                    0.5 * (values[n / 2 - 1].0 + values[n / 2].0)
                }
            }
            crate::io::DepthSynthesis::InverseErrorMean => {
                let mut num = 0.0;
                let mut den = 0.0;
                for &(v, e) in &values {
                    let w = 1.0 / e.max(1e-12);
                    num += w * v;
                    den += w;
                }
                num / den
            }
        };
        out.set(0, pixel, combined as f32);
    }
    Ok(out)
}

/// Spectral angle between a pixel spectrum and the deep-water mean; the
/// ordering key for the inversion traversal.
pub fn angle_above_deep(pixel_spectrum: &[f64], deep_mean: &[f64]) -> Result<f64> {
    sam_angle(pixel_spectrum, deep_mean)
}

mod water_types {
    //! Minimal two-entry attenuation table for seeding the empirical fit.
    //!
    //! Full water-type classifications tabulate spectral attenuation for
    //! many oceanic and coastal classes; seeding the fit only needs a
    //! plausible spectral shape, so two synthetic end members (clear
    //! oceanic, turbid coastal) are interpolated on the observed blue/green
    //! attenuation ratio. This affects starting points only, never the
    //! fitted result.

    use crate::error::Result;
    use crate::spectral::{tables, BandSet};

    fn clear(lambda: f64) -> Result<f64> {
        Ok(tables::pure_water_absorption().value_at(lambda)?
            + tables::pure_seawater_backscatter().value_at(lambda)?
            + 0.01)
    }

    fn turbid(lambda: f64) -> Result<f64> {
        Ok(2.5
            * (tables::pure_water_absorption().value_at(lambda)?
                + tables::pure_seawater_backscatter().value_at(lambda)?)
            + 0.12)
    }

    /// Per-band attenuation seed interpolated on the blue/green ratio.
    pub fn seed_attenuation(bands: &BandSet, observed_ratio: f64) -> Result<Vec<f64>> {
        let blue = bands.centers()[bands.formula_band(490.0)];
        let green = bands.centers()[bands.formula_band(550.0)];
        let ratio_clear = clear(blue)? / clear(green)?;
        let ratio_turbid = turbid(blue)? / turbid(green)?;
        let span = ratio_turbid - ratio_clear;
        let t = if span.abs() < 1e-12 {
            0.5
        } else {
            ((observed_ratio - ratio_clear) / span).clamp(0.0, 1.0)
        };
        bands
            .centers()
            .iter()
            .map(|&l| Ok((1.0 - t) * clear(l)? + t * turbid(l)?))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::SceneMetadata;
    use crate::spectral::BandSet;
    use std::sync::Arc;

    fn four_bands() -> Arc<BandSet> {
        Arc::new(BandSet::new(vec![443.0, 483.0, 561.0, 655.0]).unwrap())
    }

    fn scene_from_planes(width: usize, height: usize, planes: Vec<Vec<f32>>) -> Scene {
        let mut data = Vec::new();
        for p in planes {
            data.extend(p);
        }
        Scene::new(
            width,
            height,
            four_bands(),
            data,
            SceneMetadata::simple("T", 55.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn deep_water_stats_constant_and_pair() {
        let n = 36;
        let planes: Vec<Vec<f32>> = (0..4).map(|b| vec![0.01 * (b + 1) as f32; n]).collect();
        let scene = scene_from_planes(6, 6, planes);
        let mask = vec![true; n];
        let stats = deep_water_stats(&scene, &mask).unwrap();
        assert_eq!(stats.n_pixels, n);
        for b in 0..4 {
            assert!((stats.mean.values()[b] - 0.01 * (b + 1) as f64).abs() < 1e-9);
            assert!(stats.stddev.values()[b] < 1e-9);
        }
        // two pixels, values 1 and 3: mean 2, population stddev 1
        let planes = vec![vec![1.0, 3.0], vec![1.0, 3.0], vec![1.0, 3.0], vec![1.0, 3.0]];
        let scene = scene_from_planes(2, 1, planes);
        let stats = deep_water_stats(&scene, &[true, true]).unwrap();
        assert!((stats.mean.values()[0] - 2.0).abs() < 1e-12);
        assert!((stats.stddev.values()[0] - 1.0).abs() < 1e-12);
        // singleton mask: stddev 0
        let stats = deep_water_stats(&scene, &[true, false]).unwrap();
        assert_eq!(stats.n_pixels, 1);
        assert_eq!(stats.stddev.values()[0], 0.0);
        // empty mask is an error
        assert!(deep_water_stats(&scene, &[false, false]).is_err());
    }

    #[test]
    fn attenuation_ratio_examples() {
        let bands = four_bands();
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        let r_inf = Spectrum::new(Arc::clone(&bands), vec![0.0; 4]).unwrap();
        let r = Spectrum::new(Arc::clone(&bands), vec![0.5, e1, e1, 0.5]).unwrap();
        assert!((attenuation_ratio(&r, &r_inf).unwrap() - 1.0).abs() < 1e-12);
        let r = Spectrum::new(Arc::clone(&bands), vec![0.5, e2, e1, 0.5]).unwrap();
        assert!((attenuation_ratio(&r, &r_inf).unwrap() - 2.0).abs() < 1e-12);
        // blue at or below the deep reference: error
        let r = Spectrum::new(Arc::clone(&bands), vec![0.5, 0.0, e1, 0.5]).unwrap();
        assert!(attenuation_ratio(&r, &r_inf).is_err());
    }

    #[test]
    fn sounding_weights_cases() {
        // 5, 5, 20: the duplicated depth takes the floor, the lone one 0.5
        let w = sounding_weights(&[5.0, 5.0, 20.0]).unwrap();
        assert_eq!(w[0], WEIGHT_FLOOR);
        assert_eq!(w[1], WEIGHT_FLOOR);
        assert!((w[2] - 0.5).abs() < 1e-9);
        // identical depths: everything floors
        let w = sounding_weights(&[7.0; 5]).unwrap();
        assert!(w.iter().all(|&x| x == WEIGHT_FLOOR));
        // mutually distant depths: every W_i ~ 1, so everything floors
        let w = sounding_weights(&[5.0, 20.0, 40.0, 60.0]).unwrap();
        assert!(w.iter().all(|&x| x == WEIGHT_FLOOR));
        assert!(sounding_weights(&[5.0]).is_err());
    }

    #[test]
    fn sounding_weights_permutation_equivariant() {
        let depths = [12.0, 5.0, 5.5, 30.0, 12.1, 11.9];
        let w = sounding_weights(&depths).unwrap();
        let mut permuted = depths;
        permuted.reverse();
        let wp = sounding_weights(&permuted).unwrap();
        for i in 0..depths.len() {
            assert!((w[i] - wp[depths.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_depth_forms() {
        // single active band: h = (0; 1,0,0,0), diff = e^-5 gives depth 5
        let c = EmpiricalCoefficients {
            h: vec![0.0, 1.0, 0.0, 0.0, 0.0],
            fit_error: 0.0,
        };
        let diffs = [(-5.0f64).exp(), 1.0, 1.0, 1.0];
        let zeros = [0.0; 4];
        let d = empirical_depth(&c, &diffs, &zeros).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
        // intercept only: constant everywhere, even on dead bands
        let c = EmpiricalCoefficients {
            h: vec![7.5, 0.0, 0.0, 0.0, 0.0],
            fit_error: 0.0,
        };
        let d = empirical_depth(&c, &[0.0, 0.0, 0.0, 0.0], &zeros).unwrap();
        assert_eq!(d, 7.5);
        // r at the deep reference in a used band: no estimate
        let c = EmpiricalCoefficients {
            h: vec![0.0, 1.0, 1.0, 0.0, 0.0],
            fit_error: 0.0,
        };
        assert!(empirical_depth(&c, &[0.5, 0.0, 1.0, 1.0], &zeros).is_none());
    }

    #[test]
    fn empirical_depth_is_affine_in_log_signal() {
        let c = EmpiricalCoefficients {
            h: vec![3.0, 0.8, -0.2, 0.5, 0.1],
            fit_error: 0.0,
        };
        let r = [0.02, 0.03, 0.015, 0.004];
        let zeros = [0.0; 4];
        let base = empirical_depth(&c, &r, &zeros).unwrap();
        for band in 0..4 {
            let mut doubled = r;
            doubled[band] *= 2.0;
            let shifted = empirical_depth(&c, &doubled, &zeros).unwrap();
            let expect = base - c.h[band + 1] * 2.0f64.ln();
            assert!((shifted - expect).abs() < 1e-12, "band {band}");
        }
    }

    #[test]
    fn synthesize_depths_median_and_weighted() {
        let mut r1 = Raster::filled(1, 1, 1, 10.0);
        let r2 = Raster::filled(1, 1, 1, 11.0);
        let r3 = Raster::filled(1, 1, 1, 30.0);
        let rasters = vec![r1.clone(), r2.clone(), r3.clone()];
        let out = synthesize_depths(
            &rasters,
            &[0.1, 0.1, 0.1],
            &[0.0; 3],
            crate::io::DepthSynthesis::Median,
        )
        .unwrap();
        assert_eq!(out.get(0, 0), 11.0);
        // reordering scenes leaves the median unchanged
        let out2 = synthesize_depths(
            &[r3.clone(), r1.clone(), r2.clone()],
            &[0.1, 0.1, 0.1],
            &[0.0; 3],
            crate::io::DepthSynthesis::Median,
        )
        .unwrap();
        assert_eq!(out2.get(0, 0), 11.0);
        // single scene with a tide offset: identity plus the offset
        let out = synthesize_depths(
            &[r2.clone()],
            &[0.5],
            &[0.25],
            crate::io::DepthSynthesis::Median,
        )
        .unwrap();
        assert!((out.get(0, 0) - 11.25).abs() < 1e-6);
        // equal errors average the depths
        let r4 = Raster::filled(1, 1, 1, 12.0);
        let out = synthesize_depths(
            &[r1.clone(), r4],
            &[0.1, 0.1],
            &[0.0, 0.0],
            crate::io::DepthSynthesis::InverseErrorMean,
        )
        .unwrap();
        assert!((out.get(0, 0) - 11.0).abs() < 1e-6);
        // nodata pixels drop out per scene
        r1.set(0, 0, r1.nodata);
        let out = synthesize_depths(
            &[r1, r2, r3],
            &[0.1, 0.1, 0.1],
            &[0.0; 3],
            crate::io::DepthSynthesis::Median,
        )
        .unwrap();
        assert!((out.get(0, 0) - 20.5).abs() < 1e-6);
        // dimension mismatch
        let a = Raster::filled(2, 1, 1, 1.0);
        let b = Raster::filled(1, 2, 1, 1.0);
        assert!(synthesize_depths(
            &[a, b],
            &[0.1, 0.1],
            &[0.0, 0.0],
            crate::io::DepthSynthesis::Median
        )
        .is_err());
    }
}
