//! Synthetic-scene generation: the forward model run over known truth
//! parameters, with optional uniform sensor noise. The desk-scale oracle
//! for every inversion stage.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forward::{
    self, BottomState, Geometry, WaterColumn,
};
use crate::io::{Raster, Scene, SceneMetadata};
use crate::spectral::{BandSet, BottomLibrary};

/// Depth assigned to the optically deep margin.
pub const DEEP_MARGIN_DEPTH_M: f64 = 400.0;

/// Truth depth layout.
#[derive(Debug, Clone)]
pub enum DepthProfile {
    /// Linear ramp from `min` (left column) to `max` (right column).
    Ramp { min: f64, max: f64 },
    Constant(f64),
    /// Explicit single-band truth raster.
    Raster(Raster),
}

/// Everything needed to synthesise one scene.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub bands: Arc<BandSet>,
    pub scene_id: String,
    pub sun_elevation_deg: f64,
    pub tide_offset_m: f64,
    pub depth: DepthProfile,
    /// Rows at the bottom of the raster forced optically deep (for
    /// deep-water statistics).
    pub deep_rows: usize,
    pub water: WaterColumn,
    /// Index into the bottom library.
    pub bottom_type: usize,
    /// Bottom albedo magnitude at 550 nm.
    pub bottom_b: f64,
    /// Uniform noise amplitude per band, 1/sr.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn landsat_like(width: usize, height: usize, scene_id: &str) -> Result<Self> {
        Ok(Self {
            width,
            height,
            bands: Arc::new(BandSet::new(vec![443.0, 483.0, 561.0, 655.0])?),
            scene_id: scene_id.to_string(),
            sun_elevation_deg: 55.0,
            tide_offset_m: 0.0,
            depth: DepthProfile::Ramp {
                min: 1.0,
                max: 25.0,
            },
            deep_rows: 0,
            water: WaterColumn::new(0.04, 0.02, 0.004, 0.0008)?,
            bottom_type: 1,
            bottom_b: 0.3,
            noise_sigma: 0.0,
            seed: 0,
        })
    }
}

/// Truth parameters stored beside a synthetic scene.
#[derive(Debug, Clone)]
pub struct SynthTruth {
    /// Per-pixel depth (m), including the deep margin.
    pub depth: Raster,
    pub water: WaterColumn,
    pub bottom_type: usize,
    pub bottom_b: f64,
    /// Pixels in the optically deep margin.
    pub deep_mask: Vec<bool>,
}

/// Run the forward model over the truth parameters.
pub fn generate_synthetic_scene(
    spec: &SynthSpec,
    library: &BottomLibrary,
) -> Result<(Scene, SynthTruth)> {
    if spec.bottom_type >= library.len() {
        return Err(Error::Usage(format!(
            "bottom type {} outside library of {}",
            spec.bottom_type,
            library.len()
        )));
    }
    if spec.deep_rows > spec.height {
        return Err(Error::Usage("more deep rows than rows".into()));
    }
    let (w, h) = (spec.width, spec.height);
    let n_pixels = w * h;
    let n_bands = spec.bands.len();
    let geometry = Geometry::from_sun_elevation_deg(spec.sun_elevation_deg, 0.0)?;

    // depth truth
    let mut depth = Raster::filled(w, h, 1, 0.0);
    let mut deep_mask = vec![false; n_pixels];
    for row in 0..h {
        for col in 0..w {
            let pixel = row * w + col;
            let deep = row >= h - spec.deep_rows;
            let value = if deep {
                deep_mask[pixel] = true;
                DEEP_MARGIN_DEPTH_M
            } else {
                match &spec.depth {
                    DepthProfile::Ramp { min, max } => {
                        if w > 1 {
                            min + (max - min) * col as f64 / (w - 1) as f64
                        } else {
                            *min
                        }
                    }
                    DepthProfile::Constant(d) => *d,
                    DepthProfile::Raster(r) => r.valid(0, pixel).ok_or(Error::Domain {
                        op: "generate_synthetic_scene",
                        why: format!("truth depth missing at pixel {pixel}"),
                    })?,
                }
            };
            if !(value >= 0.0) {
                return Err(Error::Domain {
                    op: "generate_synthetic_scene",
                    why: format!("negative truth depth {value} at pixel {pixel}"),
                });
            }
            depth.set(0, pixel, value as f32);
        }
    }

    let bottom = BottomState::new(
        {
            let mut b = vec![0.0; library.len()];
            b[spec.bottom_type] = spec.bottom_b;
            b
        },
        {
            let mut q = vec![0.0; library.len()];
            q[spec.bottom_type] = 1.0;
            q
        },
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = vec![0.0f32; n_pixels * n_bands];
    for (band, &lambda) in spec.bands.centers().iter().enumerate() {
        for pixel in 0..n_pixels {
            let h_px = depth.get(0, pixel) as f64;
            let r_sub =
                forward::subsurface_rrs(&spec.water, &bottom, h_px, &geometry, library, lambda)?;
            let mut r_surface = forward::subsurface_to_surface(r_sub, spec.water.delta)?;
            if spec.noise_sigma > 0.0 {
                r_surface += rng.gen_range(-spec.noise_sigma..=spec.noise_sigma);
            }
            data[band * n_pixels + pixel] = r_surface as f32;
        }
    }

    let meta = SceneMetadata::simple(&spec.scene_id, spec.sun_elevation_deg, spec.tide_offset_m);
    let scene = Scene::new(w, h, Arc::clone(&spec.bands), data, meta)?;
    Ok((
        scene,
        SynthTruth {
            depth,
            water: spec.water,
            bottom_type: spec.bottom_type,
            bottom_b: spec.bottom_b,
            deep_mask,
        },
    ))
}
