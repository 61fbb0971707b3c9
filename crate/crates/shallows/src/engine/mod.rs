//! Per-region inversion and the scene-stack driver.
//!
//! The traversal visits pixels in order of spectral angle above the
//! deep-water mean, so spectrally similar pixels arrive consecutively.
//! Each pixel's region is first matched against the dynamic LUT; on a miss
//! the optimizer runs from a hot start (the previous pixel's water column,
//! when spectrally close) or a cold start (band-ratio formulas), with a
//! 17-depth multi-start ladder when no depth prior exists. Good fits are
//! inserted back into the LUT.

mod lut;
mod objective;

use std::sync::Mutex;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::empirical::{self, DeepWaterStats};
use crate::error::{Error, Result};
use crate::forward::{self, Geometry};
use crate::io::{Raster, RunConfig, Scene};
use crate::metrics;
use crate::optim::{self, Bounds, DEPTH_LADDER};
use crate::spectral::{tables, BandSet, BottomLibrary};

pub use lut::{DynamicLut, LutEntry, LUT_CAPACITY};

/// Per-scene quantities fixed during inversion.
#[derive(Debug, Clone, Copy)]
pub struct SceneContext {
    pub geometry: Geometry,
    /// Water-level offset to the common datum, m.
    pub tide: f64,
    /// Particle backscatter exponent for this scene.
    pub y: f64,
    inv_cos_sun: f64,
    inv_cos_view: f64,
}

impl SceneContext {
    pub fn new(geometry: Geometry, tide: f64, y: f64) -> Self {
        Self {
            geometry,
            tide,
            y,
            inv_cos_sun: geometry.inv_cos_sun(),
            inv_cos_view: geometry.inv_cos_view(),
        }
    }
}

/// Dimensions of one region fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitDims {
    pub n_scenes: usize,
    pub n_pixels: usize,
    pub n_bottoms: usize,
}

impl FitDims {
    /// Total free parameters: per-pixel depth, per-pixel albedo and
    /// fraction per bottom type, and four water-column parameters per
    /// scene.
    pub fn n_total(&self) -> usize {
        self.n_pixels + 2 * self.n_bottoms * self.n_pixels + 4 * self.n_scenes
    }
}

/// Where a pixel's parameters came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSource {
    Optimizer,
    Lut,
}

/// The full parameter set for one region fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    /// Per-scene water column parameters.
    pub p: Vec<f64>,
    pub g: Vec<f64>,
    pub x: Vec<f64>,
    pub delta: Vec<f64>,
    /// Per-pixel depth at the common datum, m. Empty means "no prior yet"
    /// and triggers the depth ladder.
    pub h: Vec<f64>,
    /// Per-type, per-pixel bottom albedo magnitudes `b[type][pixel]`.
    pub b: Vec<Vec<f64>>,
    /// Per-type, per-pixel mixing fractions.
    pub q: Vec<Vec<f64>>,
    /// Fit quality, relative percent.
    pub e_photic_pct: f64,
    pub iterations: usize,
    pub source: FitSource,
}

/// Flatten a fit into the optimizer layout: per-scene `[P, G, X, Delta]`
/// blocks, then per-pixel depths, then per-type albedo blocks, then
/// per-type fraction blocks.
pub fn pack(fit: &ModelFit, dims: FitDims) -> Result<Vec<f64>> {
    let FitDims {
        n_scenes,
        n_pixels,
        n_bottoms,
    } = dims;
    if fit.p.len() != n_scenes
        || fit.g.len() != n_scenes
        || fit.x.len() != n_scenes
        || fit.delta.len() != n_scenes
        || fit.h.len() != n_pixels
        || fit.b.len() != n_bottoms
        || fit.q.len() != n_bottoms
        || fit.b.iter().any(|v| v.len() != n_pixels)
        || fit.q.iter().any(|v| v.len() != n_pixels)
    {
        return Err(Error::Usage(format!(
            "pack: fit does not match dims {dims:?}"
        )));
    }
    let mut v = Vec::with_capacity(dims.n_total());
    for j in 0..n_scenes {
        v.extend([fit.p[j], fit.g[j], fit.x[j], fit.delta[j]]);
    }
    v.extend(&fit.h);
    for t in 0..n_bottoms {
        v.extend(&fit.b[t]);
    }
    for t in 0..n_bottoms {
        v.extend(&fit.q[t]);
    }
    Ok(v)
}

/// Inverse of [`pack`].
pub fn unpack(v: &[f64], dims: FitDims) -> Result<ModelFit> {
    if v.len() != dims.n_total() {
        return Err(Error::Usage(format!(
            "unpack: {} values for dims {dims:?} (want {})",
            v.len(),
            dims.n_total()
        )));
    }
    let FitDims {
        n_scenes,
        n_pixels,
        n_bottoms,
    } = dims;
    let mut p = Vec::with_capacity(n_scenes);
    let mut g = Vec::with_capacity(n_scenes);
    let mut x = Vec::with_capacity(n_scenes);
    let mut delta = Vec::with_capacity(n_scenes);
    for j in 0..n_scenes {
        p.push(v[4 * j]);
        g.push(v[4 * j + 1]);
        x.push(v[4 * j + 2]);
        delta.push(v[4 * j + 3]);
    }
    let h = v[4 * n_scenes..4 * n_scenes + n_pixels].to_vec();
    let b_start = 4 * n_scenes + n_pixels;
    let b = (0..n_bottoms)
        .map(|t| v[b_start + t * n_pixels..b_start + (t + 1) * n_pixels].to_vec())
        .collect();
    let q_start = b_start + n_bottoms * n_pixels;
    let q = (0..n_bottoms)
        .map(|t| v[q_start + t * n_pixels..q_start + (t + 1) * n_pixels].to_vec())
        .collect();
    Ok(ModelFit {
        p,
        g,
        x,
        delta,
        h,
        b,
        q,
        e_photic_pct: f64::NAN,
        iterations: 0,
        source: FitSource::Optimizer,
    })
}

/// One region to invert: the spatial neighbourhood of a center pixel
/// across all scenes.
#[derive(Debug, Clone)]
pub struct Region {
    pub center_pixel: usize,
    /// Raster indices of the neighbourhood (edge-clamped), row-major.
    pub pixels: Vec<usize>,
    /// Position of the center pixel within `pixels`.
    pub center_offset: usize,
    /// Measured surface reflectance, `[scene][pixel][band]`.
    pub spectra: Vec<f64>,
    /// Per-scene center spectra; the LUT key and hot-start comparator.
    pub center_key: Vec<Vec<f64>>,
}

/// Pull the `(2r+1)^2` neighbourhood of `center` from every scene.
/// Neighbour coordinates clamp at the raster edge. Returns `None` when the
/// center pixel is nodata in any scene; nodata neighbours fall back to the
/// center spectrum of their scene.
pub fn extract_region(scenes: &[Scene], center: usize, radius: usize) -> Option<Region> {
    let width = scenes[0].width as isize;
    let height = scenes[0].height as isize;
    let row = center as isize / width;
    let col = center as isize % width;
    let side = 2 * radius + 1;
    let n_pixels = side * side;
    let n_bands = scenes[0].bands.len();

    let mut pixels = Vec::with_capacity(n_pixels);
    let r = radius as isize;
    for dr in -r..=r {
        for dc in -r..=r {
            let rr = (row + dr).clamp(0, height - 1);
            let cc = (col + dc).clamp(0, width - 1);
            pixels.push((rr * width + cc) as usize);
        }
    }
    let center_offset = radius * side + radius;

    let mut spectra = Vec::with_capacity(scenes.len() * n_pixels * n_bands);
    let mut center_key = Vec::with_capacity(scenes.len());
    for scene in scenes {
        let center_spectrum = scene.spectrum_at(center)?;
        for &pixel in &pixels {
            match scene.spectrum_at(pixel) {
                Some(values) => spectra.extend(values),
                None => spectra.extend(center_spectrum.iter()),
            }
        }
        center_key.push(center_spectrum);
    }
    Some(Region {
        center_pixel: center,
        pixels,
        center_offset,
        spectra,
        center_key,
    })
}

/// Valid pixel indices sorted by ascending spectral angle between the
/// pixel's spectrum and the deep-water mean (first scene). The sort is
/// stable, so equal angles keep raster order.
pub fn order_pixels(scene: &Scene, deep_mean: &[f64]) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(scene.n_pixels());
    for pixel in 0..scene.n_pixels() {
        if let Some(spectrum) = scene.spectrum_at(pixel) {
            if let Ok(angle) = metrics::sam_angle(&spectrum, deep_mean) {
                keyed.push((angle, pixel));
            }
        }
    }
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    keyed.into_iter().map(|(_, pixel)| pixel).collect()
}

/// Hot-start gate: mean spectral angle between the per-scene center
/// spectra of two regions, below threshold.
pub fn should_hot_start(current: &Region, previous: &Region, threshold: f64) -> bool {
    keys_within(&current.center_key, &previous.center_key, threshold)
}

fn keys_within(a: &[Vec<f64>], b: &[Vec<f64>], threshold: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        match metrics::sam_angle(x, y) {
            Ok(angle) => sum += angle,
            Err(_) => return false,
        }
    }
    sum / (a.len() as f64) < threshold
}

/// Per-band tables and geometry prepared once per scene stack; everything
/// a region inversion needs besides the region itself.
pub struct RegionSolver<'a> {
    config: &'a RunConfig,
    contexts: Vec<SceneContext>,
    rho_lib: Vec<Vec<f64>>,
    a_w: Vec<f64>,
    b_bw: Vec<f64>,
    a0: Vec<f64>,
    a1: Vec<f64>,
    gelb_shape: Vec<f64>,
    bp_shape: Vec<Vec<f64>>,
    band_440: usize,
    band_490: usize,
    band_550: usize,
    band_640: usize,
    band_750: usize,
    aw_640: f64,
    n_bands: usize,
}

impl<'a> RegionSolver<'a> {
    pub fn new(
        bands: &BandSet,
        contexts: Vec<SceneContext>,
        library: &BottomLibrary,
        config: &'a RunConfig,
    ) -> Result<Self> {
        if bands.len() < 4 {
            return Err(Error::Usage(format!(
                "inversion needs at least 4 bands, scene has {}",
                bands.len()
            )));
        }
        if contexts.is_empty() {
            return Err(Error::Usage("no scenes".into()));
        }
        if config.n_bottoms > library.len() {
            return Err(Error::Usage(format!(
                "n_bottoms = {} exceeds the {}-entry bottom library",
                config.n_bottoms,
                library.len()
            )));
        }
        let indices: Vec<usize> = (0..config.n_bottoms).collect();
        let lib = library.subset(&indices)?;
        let rho_lib = lib.resample(bands)?;

        let centers = bands.centers();
        let fetch = |curve: &crate::spectral::LookupCurve| -> Result<Vec<f64>> {
            centers.iter().map(|&l| curve.value_at(l)).collect()
        };
        let a_w = fetch(tables::pure_water_absorption())?;
        let b_bw = fetch(tables::pure_seawater_backscatter())?;
        let a0 = fetch(tables::a0())?;
        let a1 = fetch(tables::a1())?;
        let gelb_shape = centers
            .iter()
            .map(|&l| (-config.s_slope * (l - 440.0)).exp())
            .collect();
        let bp_shape = contexts
            .iter()
            .map(|ctx| centers.iter().map(|&l| (440.0 / l).powf(ctx.y)).collect())
            .collect();

        Ok(Self {
            config,
            contexts,
            rho_lib,
            a_w,
            b_bw,
            a0,
            a1,
            gelb_shape,
            bp_shape,
            band_440: bands.formula_band(440.0),
            band_490: bands.formula_band(490.0),
            band_550: bands.formula_band(550.0),
            band_640: bands.formula_band(640.0),
            band_750: bands.formula_band(750.0),
            aw_640: tables::pure_water_absorption().value_at(640.0)?,
            n_bands: bands.len(),
        })
    }

    pub fn n_scenes(&self) -> usize {
        self.contexts.len()
    }

    pub fn contexts(&self) -> &[SceneContext] {
        &self.contexts
    }

    pub fn dims(&self, n_pixels: usize) -> FitDims {
        FitDims {
            n_scenes: self.contexts.len(),
            n_pixels,
            n_bottoms: self.config.n_bottoms,
        }
    }

    /// Box constraints in the packed layout.
    pub fn bounds(&self, dims: FitDims) -> Bounds {
        let c = self.config;
        let mut lower = Vec::with_capacity(dims.n_total());
        let mut upper = Vec::with_capacity(dims.n_total());
        for _ in 0..dims.n_scenes {
            lower.extend([c.p_range.0, c.g_range.0, c.x_range.0, c.delta_range.0]);
            upper.extend([c.p_range.1, c.g_range.1, c.x_range.1, c.delta_range.1]);
        }
        lower.extend(std::iter::repeat(c.h_range.0).take(dims.n_pixels));
        upper.extend(std::iter::repeat(c.h_range.1).take(dims.n_pixels));
        let n_bq = dims.n_bottoms * dims.n_pixels;
        lower.extend(std::iter::repeat(c.b_range.0).take(n_bq));
        upper.extend(std::iter::repeat(c.b_range.1).take(n_bq));
        lower.extend(std::iter::repeat(c.q_range.0).take(n_bq));
        upper.extend(std::iter::repeat(c.q_range.1).take(n_bq));
        Bounds::new(lower, upper).expect("config ranges are ordered")
    }

    fn region_objective<'r>(&'r self, region: &'r Region) -> objective::RegionObjective<'r> {
        objective::RegionObjective {
            dims: self.dims(region.pixels.len()),
            n_bands: self.n_bands,
            weights: self.config.weights,
            contexts: &self.contexts,
            measured: &region.spectra,
            a_w: &self.a_w,
            b_bw: &self.b_bw,
            a0: &self.a0,
            a1: &self.a1,
            gelb_shape: &self.gelb_shape,
            bp_shape: &self.bp_shape,
            rho_lib: &self.rho_lib,
        }
    }

    fn region_mean(&self, region: &Region, scene: usize) -> Vec<f64> {
        let n_pixels = region.pixels.len();
        let mut mean = vec![0.0; self.n_bands];
        for i in 0..n_pixels {
            let off = (scene * n_pixels + i) * self.n_bands;
            for l in 0..self.n_bands {
                mean[l] += region.spectra[off + l];
            }
        }
        for v in mean.iter_mut() {
            *v /= n_pixels as f64;
        }
        mean
    }

    /// Closed-form initial parameterisation from the region's band ratios:
    /// `P = 0.072 (R(440)/R(550))^-1.7`, `G = 1.5 P`,
    /// `X = 30 a_w(640) R(640)`, `Delta = R(750)` per scene (region means,
    /// nearest-band mapping), per-pixel `B = 0.4 R(490)` and equal mixing
    /// fractions. Depths come from the empirical raster when given;
    /// otherwise the fit starts through the depth ladder.
    pub fn cold_start(&self, region: &Region, empirical_h: Option<&[f64]>) -> ModelFit {
        let n_scenes = self.contexts.len();
        let n_pixels = region.pixels.len();
        let n_bottoms = self.config.n_bottoms;
        let mut p = Vec::with_capacity(n_scenes);
        let mut g = Vec::with_capacity(n_scenes);
        let mut x = Vec::with_capacity(n_scenes);
        let mut delta = Vec::with_capacity(n_scenes);
        for j in 0..n_scenes {
            let mean = self.region_mean(region, j);
            let ratio = mean[self.band_440] / mean[self.band_550];
            let p_j = if ratio > 0.0 && ratio.is_finite() {
                0.072 * ratio.powf(-1.7)
            } else {
                warn!(
                    "cold start: nonpositive band ratio {ratio} at pixel {}, falling back to P = 0.05",
                    region.center_pixel
                );
                0.05
            };
            p.push(p_j);
            g.push(1.5 * p_j);
            x.push(30.0 * self.aw_640 * mean[self.band_640]);
            delta.push(mean[self.band_750]);
        }

        // per-pixel albedo magnitude from the 490 nm band, averaged over
        // scenes (the bottom is temporally static)
        let mut b_pixel = vec![0.0; n_pixels];
        for i in 0..n_pixels {
            let mut acc = 0.0;
            for j in 0..n_scenes {
                acc += region.spectra[(j * n_pixels + i) * self.n_bands + self.band_490];
            }
            b_pixel[i] = 0.4 * acc / n_scenes as f64;
        }
        let b = vec![b_pixel; n_bottoms];
        let q = vec![vec![1.0; n_pixels]; n_bottoms];

        let h = match empirical_h {
            Some(values) if !values.is_empty() => {
                debug_assert_eq!(values.len(), n_pixels);
                values.to_vec()
            }
            _ => Vec::new(),
        };

        ModelFit {
            p,
            g,
            x,
            delta,
            h,
            b,
            q,
            e_photic_pct: f64::NAN,
            iterations: 0,
            source: FitSource::Optimizer,
        }
    }

    /// Hot start: water column and depths carried over from the previous
    /// fit; bottom parameters re-initialised cold (bottom continuity is not
    /// assumed between neighbours in spectral order).
    pub fn hot_start(&self, region: &Region, previous: &ModelFit) -> ModelFit {
        let mut fit = self.cold_start(region, None);
        fit.p = previous.p.clone();
        fit.g = previous.g.clone();
        fit.x = previous.x.clone();
        fit.delta = previous.delta.clone();
        if !previous.h.is_empty() {
            let mean_h = previous.h.iter().sum::<f64>() / previous.h.len() as f64;
            fit.h = vec![mean_h; region.pixels.len()];
        }
        fit
    }

    /// Minimise the combined error over the packed parameters. A start
    /// without depths runs the 17-depth ladder and keeps the best result.
    pub fn invert(&self, region: &Region, init: &ModelFit, seed: u64) -> Result<ModelFit> {
        let dims = self.dims(region.pixels.len());
        let bounds = self.bounds(dims);
        let objective = self.region_objective(region);
        let mut scratch = objective::Scratch::new(dims, self.n_bands);
        let mut f = |x: &[f64]| objective.eval(x, &mut scratch);
        let cfg = self.config.simplex.reseeded(seed);

        let result = if init.h.is_empty() {
            let mut base = init.clone();
            base.h = vec![0.0; dims.n_pixels];
            let mut x0 = pack(&base, dims)?;
            bounds.clamp(&mut x0);
            let h_offset = 4 * dims.n_scenes;
            let starts: Vec<Vec<f64>> = DEPTH_LADDER
                .iter()
                .map(|&d| {
                    let mut s = x0.clone();
                    let depth = d.clamp(self.config.h_range.0, self.config.h_range.1);
                    for v in s[h_offset..h_offset + dims.n_pixels].iter_mut() {
                        *v = depth;
                    }
                    s
                })
                .collect();
            // the ladder is itself the multi-start; one simplex run per
            // rung, then a restarted polish from the best rung (the rung
            // runs stall in the shallow valley around the optimum)
            let ladder_cfg = optim::SimplexConfig {
                restarts: 0,
                ..cfg.clone()
            };
            let coarse = optim::multi_start_minimize(&mut f, &starts, &bounds, &ladder_cfg)?;
            let mut polished = optim::minimize(&mut f, &coarse.x, &bounds, &cfg)?;
            polished.iterations += coarse.iterations;
            polished.evaluations += coarse.evaluations;
            if coarse.f < polished.f {
                polished.f = coarse.f;
                polished.x = coarse.x;
            }
            polished
        } else {
            let mut x0 = pack(init, dims)?;
            bounds.clamp(&mut x0);
            optim::minimize(&mut f, &x0, &bounds, &cfg)?
        };

        let mut fit = unpack(&result.x, dims)?;
        fit.e_photic_pct = result.f * 100.0;
        fit.iterations = result.iterations;
        fit.source = FitSource::Optimizer;
        Ok(fit)
    }

    /// Combined error of a fit on a region, relative percent.
    pub fn e_photic_percent(&self, region: &Region, fit: &ModelFit) -> Result<f64> {
        let dims = self.dims(region.pixels.len());
        let x = pack(fit, dims)?;
        let objective = self.region_objective(region);
        let mut scratch = objective::Scratch::new(dims, self.n_bands);
        let value = objective.eval(&x, &mut scratch);
        if value.is_finite() {
            Ok(value * 100.0)
        } else {
            Err(Error::Domain {
                op: "e_photic_percent",
                why: "fit outside the model domain".into(),
            })
        }
    }

    /// Modelled surface spectra for a fit, `[scene][pixel][band]`.
    pub fn modelled_spectra(&self, region: &Region, fit: &ModelFit) -> Result<Vec<f64>> {
        let dims = self.dims(region.pixels.len());
        let x = pack(fit, dims)?;
        self.region_objective(region).modelled(&x).ok_or(Error::Domain {
            op: "modelled_spectra",
            why: "fit outside the model domain".into(),
        })
    }
}

/// Write-back target: which raster band-plane gets which fit component.
#[derive(Debug)]
pub struct StackOutput {
    /// Depth at the common datum, m.
    pub depth: Raster,
    /// Fit quality, relative percent.
    pub e_photic_pct: Raster,
    pub iterations: Raster,
    /// 0 = cold optimizer, 1 = hot optimizer, 2 = LUT.
    pub source: Raster,
    /// 0 = ok, 1 = skipped (nodata), 2 = fit failed.
    pub quality: Raster,
    /// Per-scene water column parameters (band j = scene j).
    pub p: Raster,
    pub g: Raster,
    pub x: Raster,
    pub delta: Raster,
    /// Per-type bottom parameters at the center pixel (band t = type t).
    pub b: Raster,
    pub q: Raster,
    /// Backscatter exponent used per scene.
    pub y: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Machine-readable run report.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub pixels_total: usize,
    pub pixels_valid: usize,
    pub lut_hits: usize,
    pub optimizer_calls: usize,
    pub hot_starts: usize,
    pub cold_starts: usize,
    pub failures: usize,
    pub iterations_total: u64,
    pub lut_insertions: usize,
    pub lut_seconds: f64,
    pub optimizer_seconds: f64,
    pub insertion_threshold_final_pct: f64,
    pub elapsed_seconds: f64,
}

impl Diagnostics {
    /// LUT hits over modelled pixels.
    pub fn lut_hit_rate(&self) -> f64 {
        let modelled = self.lut_hits + self.optimizer_calls;
        if modelled == 0 {
            0.0
        } else {
            self.lut_hits as f64 / modelled as f64
        }
    }

    /// Pixels per second through the LUT path.
    pub fn lut_throughput(&self) -> f64 {
        if self.lut_seconds > 0.0 {
            self.lut_hits as f64 / self.lut_seconds
        } else {
            0.0
        }
    }

    /// Pixels per second through the optimizer path.
    pub fn optimizer_throughput(&self) -> f64 {
        if self.optimizer_seconds > 0.0 {
            self.optimizer_calls as f64 / self.optimizer_seconds
        } else {
            0.0
        }
    }
}

/// Deep-water pixels for a scene lacking an explicit mask: valid pixels in
/// the lowest few percent of the longest band (red attenuates fastest, so
/// deep water is darkest there), at least 30 pixels when available.
pub fn default_deep_mask(scene: &Scene) -> Vec<bool> {
    let longest = scene.bands.len() - 1;
    let mut values: Vec<(f32, usize)> = (0..scene.n_pixels())
        .filter(|&p| scene.spectrum_at(p).is_some())
        .map(|p| (scene.value(longest, p), p))
        .collect();
    let mut mask = vec![false; scene.n_pixels()];
    if values.is_empty() {
        return mask;
    }
    values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let k = (values.len() / 20).max(30).min(values.len());
    let threshold = values[k - 1].0;
    for &(v, p) in &values {
        if v <= threshold {
            mask[p] = true;
        }
    }
    mask
}

fn validate_stack(scenes: &[Scene]) -> Result<()> {
    let Some(first) = scenes.first() else {
        return Err(Error::Usage("no scenes given".into()));
    };
    for scene in scenes.iter().skip(1) {
        if scene.width != first.width || scene.height != first.height {
            return Err(Error::Usage(format!(
                "scene {} is {}x{}, expected {}x{}",
                scene.meta.scene_id, scene.width, scene.height, first.width, first.height
            )));
        }
        if scene.bands.centers() != first.bands.centers() {
            return Err(Error::Usage(format!(
                "scene {} has band centers {}, expected {}",
                scene.meta.scene_id, scene.bands, first.bands
            )));
        }
    }
    Ok(())
}

/// Per-scene contexts: geometry from the scene metadata, the backscatter
/// exponent from the deep-water mean (or the configured override).
pub fn scene_contexts(
    scenes: &[Scene],
    stats: &[DeepWaterStats],
    config: &RunConfig,
) -> Result<Vec<SceneContext>> {
    scenes
        .iter()
        .zip(stats.iter())
        .map(|(scene, stat)| {
            let y = match config.y_override {
                Some(y) => y,
                None => forward::estimate_y(&stat.mean).unwrap_or(1.0),
            };
            Ok(SceneContext::new(
                scene.geometry()?,
                scene.meta.tide_offset_m,
                y,
            ))
        })
        .collect()
}

enum PixelPath {
    Lut(ModelFit),
    Optimizer { fit: ModelFit, hot: bool },
    Failed,
}

struct PixelOutcome {
    pixel: usize,
    path: PixelPath,
    seconds: f64,
}

/// Run the full traversal over a co-registered scene stack.
///
/// `empirical_depths` (single-band, co-registered) seeds per-pixel depth
/// priors; `deep_mask` overrides the built-in deep-water heuristic.
pub fn run_scene_stack(
    scenes: &[Scene],
    config: &RunConfig,
    library: &BottomLibrary,
    empirical_depths: Option<&Raster>,
    deep_mask: Option<&[bool]>,
) -> Result<StackOutput> {
    let started = Instant::now();
    validate_stack(scenes)?;
    let first = &scenes[0];
    if let Some(r) = empirical_depths {
        if r.width != first.width || r.height != first.height || r.n_bands != 1 {
            return Err(Error::Usage(
                "empirical depth raster is not a co-registered single-band grid".into(),
            ));
        }
    }

    let mask_storage;
    let mask: &[bool] = match deep_mask {
        Some(m) => {
            if m.len() != first.n_pixels() {
                return Err(Error::Usage("deep mask does not match the raster".into()));
            }
            m
        }
        None => {
            mask_storage = default_deep_mask(first);
            &mask_storage
        }
    };

    let stats: Vec<DeepWaterStats> = scenes
        .iter()
        .map(|s| empirical::deep_water_stats(s, mask))
        .collect::<Result<_>>()?;
    let contexts = scene_contexts(scenes, &stats, config)?;
    let y: Vec<f64> = contexts.iter().map(|c| c.y).collect();
    let solver = RegionSolver::new(&first.bands, contexts, library, config)?;
    let order = order_pixels(first, stats[0].mean.values());

    let n_scenes = scenes.len();
    let radius = config.region_radius;
    let tide0 = scenes[0].meta.tide_offset_m;
    let lut = Mutex::new(DynamicLut::new(n_scenes, config.lut_match_threshold));
    let seed_base = config.simplex.rng_seed;

    let process = |prev: &mut Option<(Vec<Vec<f64>>, ModelFit)>, pixel: usize| -> PixelOutcome {
        let t0 = Instant::now();
        let Some(region) = extract_region(scenes, pixel, radius) else {
            return PixelOutcome {
                pixel,
                path: PixelPath::Failed,
                seconds: t0.elapsed().as_secs_f64(),
            };
        };
        if config.use_lut {
            let hit = lut.lock().unwrap().query(&region.center_key, tide0);
            if let Some(fit) = hit {
                let seconds = t0.elapsed().as_secs_f64();
                *prev = Some((region.center_key, fit.clone()));
                return PixelOutcome {
                    pixel,
                    path: PixelPath::Lut(fit),
                    seconds,
                };
            }
        }
        let hot = config.use_hot_start
            && prev.as_ref().map_or(false, |(key, _)| {
                keys_within(&region.center_key, key, config.hot_start_threshold)
            });
        let empirical_h: Option<Vec<f64>> = empirical_depths.and_then(|raster| {
            let values: Vec<Option<f64>> =
                region.pixels.iter().map(|&p| raster.valid(0, p)).collect();
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            if present.is_empty() {
                return None;
            }
            let mean = present.iter().sum::<f64>() / present.len() as f64;
            Some(values.into_iter().map(|v| v.unwrap_or(mean)).collect())
        });
        let init = if hot {
            solver.hot_start(&region, &prev.as_ref().unwrap().1)
        } else {
            solver.cold_start(&region, empirical_h.as_deref())
        };
        let seed = seed_base ^ (pixel as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        match solver.invert(&region, &init, seed) {
            Ok(fit) => {
                if config.use_lut {
                    lut.lock().unwrap().insert(
                        region.center_key.clone(),
                        fit.clone(),
                        tide0,
                    );
                }
                *prev = Some((region.center_key, fit.clone()));
                PixelOutcome {
                    pixel,
                    path: PixelPath::Optimizer { fit, hot },
                    seconds: t0.elapsed().as_secs_f64(),
                }
            }
            Err(e) => {
                warn!("pixel {pixel}: inversion failed: {e}");
                PixelOutcome {
                    pixel,
                    path: PixelPath::Failed,
                    seconds: t0.elapsed().as_secs_f64(),
                }
            }
        }
    };

    let outcomes: Vec<PixelOutcome> = if config.jobs <= 1 {
        let mut prev = None;
        order.iter().map(|&pixel| process(&mut prev, pixel)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            order
                .par_iter()
                .map_init(|| None, |prev, &pixel| process(prev, pixel))
                .collect()
        })
    };

    // write-back
    let (w, h) = (first.width, first.height);
    let n_bottoms = config.n_bottoms;
    let mut out = StackOutput {
        depth: Raster::nodata_filled(w, h, 1),
        e_photic_pct: Raster::nodata_filled(w, h, 1),
        iterations: Raster::nodata_filled(w, h, 1),
        source: Raster::nodata_filled(w, h, 1),
        quality: Raster::filled(w, h, 1, 1.0),
        p: Raster::nodata_filled(w, h, n_scenes),
        g: Raster::nodata_filled(w, h, n_scenes),
        x: Raster::nodata_filled(w, h, n_scenes),
        delta: Raster::nodata_filled(w, h, n_scenes),
        b: Raster::nodata_filled(w, h, n_bottoms),
        q: Raster::nodata_filled(w, h, n_bottoms),
        y,
        diagnostics: Diagnostics {
            pixels_total: first.n_pixels(),
            ..Default::default()
        },
    };
    out.diagnostics.pixels_valid = order.len();
    let center_offset = {
        let side = 2 * radius + 1;
        radius * side + radius
    };
    for outcome in outcomes {
        let pixel = outcome.pixel;
        match outcome.path {
            PixelPath::Failed => {
                out.diagnostics.failures += 1;
                out.quality.set(0, pixel, 2.0);
            }
            PixelPath::Lut(fit) => {
                out.diagnostics.lut_hits += 1;
                out.diagnostics.lut_seconds += outcome.seconds;
                write_fit(&mut out, pixel, center_offset, &fit, 2.0);
            }
            PixelPath::Optimizer { fit, hot } => {
                out.diagnostics.optimizer_calls += 1;
                out.diagnostics.optimizer_seconds += outcome.seconds;
                out.diagnostics.iterations_total += fit.iterations as u64;
                if hot {
                    out.diagnostics.hot_starts += 1;
                } else {
                    out.diagnostics.cold_starts += 1;
                }
                write_fit(&mut out, pixel, center_offset, &fit, if hot { 1.0 } else { 0.0 });
            }
        }
    }
    out.diagnostics.insertion_threshold_final_pct = lut.lock().unwrap().insertion_threshold();
    out.diagnostics.elapsed_seconds = started.elapsed().as_secs_f64();
    Ok(out)
}

fn write_fit(out: &mut StackOutput, pixel: usize, center_offset: usize, fit: &ModelFit, source: f32) {
    out.depth.set(0, pixel, fit.h[center_offset] as f32);
    out.e_photic_pct.set(0, pixel, fit.e_photic_pct as f32);
    out.iterations.set(0, pixel, fit.iterations as f32);
    out.source.set(0, pixel, source);
    out.quality.set(0, pixel, 0.0);
    for j in 0..fit.p.len() {
        out.p.set(j, pixel, fit.p[j] as f32);
        out.g.set(j, pixel, fit.g[j] as f32);
        out.x.set(j, pixel, fit.x[j] as f32);
        out.delta.set(j, pixel, fit.delta[j] as f32);
    }
    for t in 0..fit.b.len() {
        out.b.set(t, pixel, fit.b[t][center_offset] as f32);
        out.q.set(t, pixel, fit.q[t][center_offset] as f32);
    }
}

#[cfg(test)]
mod tests;
