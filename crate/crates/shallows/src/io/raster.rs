//! Scenes and rasters: raw float32 data files with JSON sidecars.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Geometry;
use crate::spectral::BandSet;

/// Default nodata sentinel.
pub const DEFAULT_NODATA: f32 = -9999.0;

/// Acquisition metadata for one scene.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneMetadata {
    pub scene_id: String,
    /// Acquisition date, ISO-8601.
    pub date: String,
    /// Above-surface sun elevation, degrees, in (0, 90].
    pub sun_elevation_deg: f64,
    /// Water-level offset to the common vertical datum, metres.
    pub tide_offset_m: f64,
    /// Affine pixel-to-world transform
    /// `[x0, dx_col, dx_row, y0, dy_col, dy_row]`.
    pub geotransform: [f64; 6],
    pub nodata: f32,
}

impl SceneMetadata {
    /// Identity georeferencing at the given id/date; handy for synthetic
    /// scenes and tests.
    pub fn simple(scene_id: &str, sun_elevation_deg: f64, tide_offset_m: f64) -> Self {
        Self {
            scene_id: scene_id.to_string(),
            date: "1970-01-01".to_string(),
            sun_elevation_deg,
            tide_offset_m,
            geotransform: [0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            nodata: DEFAULT_NODATA,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0 < self.sun_elevation_deg && self.sun_elevation_deg <= 90.0) {
            return Err(Error::Invalid {
                what: "SceneMetadata",
                why: format!("sun elevation {} outside (0, 90]", self.sun_elevation_deg),
            });
        }
        let g = &self.geotransform;
        if (g[1] * g[5] - g[2] * g[4]).abs() < 1e-30 {
            return Err(Error::Invalid {
                what: "SceneMetadata",
                why: "geotransform is not invertible".into(),
            });
        }
        Ok(())
    }
}

/// One multispectral raster with per-band reflectance (1/sr), band-sequential
/// float32: band `b` occupies `[b*w*h, (b+1)*w*h)` in row-major pixel order.
#[derive(Debug, Clone)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub bands: Arc<BandSet>,
    pub data: Vec<f32>,
    pub meta: SceneMetadata,
}

impl Scene {
    pub fn new(
        width: usize,
        height: usize,
        bands: Arc<BandSet>,
        data: Vec<f32>,
        meta: SceneMetadata,
    ) -> Result<Self> {
        let expected = width * height * bands.len();
        if data.len() != expected {
            return Err(Error::Invalid {
                what: "Scene",
                why: format!(
                    "{}x{}x{} needs {expected} values, got {}",
                    width,
                    height,
                    bands.len(),
                    data.len()
                ),
            });
        }
        meta.validate()?;
        Ok(Self {
            width,
            height,
            bands,
            data,
            meta,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn value(&self, band: usize, pixel: usize) -> f32 {
        self.data[band * self.n_pixels() + pixel]
    }

    /// All band values at a pixel, or `None` if any band is nodata/non-finite.
    pub fn spectrum_at(&self, pixel: usize) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.bands.len());
        for band in 0..self.bands.len() {
            let v = self.value(band, pixel);
            if v == self.meta.nodata || !v.is_finite() {
                return None;
            }
            out.push(v as f64);
        }
        Some(out)
    }

    /// Subsurface viewing geometry from the scene's sun elevation (nadir
    /// view).
    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::from_sun_elevation_deg(self.meta.sun_elevation_deg, 0.0)
    }

    pub fn pixel_to_world(&self, col: usize, row: usize) -> (f64, f64) {
        let g = &self.meta.geotransform;
        let (c, r) = (col as f64, row as f64);
        (g[0] + c * g[1] + r * g[2], g[3] + c * g[4] + r * g[5])
    }

    /// Nearest pixel for a world coordinate, or `None` when outside the
    /// raster.
    pub fn world_to_pixel(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let g = &self.meta.geotransform;
        let det = g[1] * g[5] - g[2] * g[4];
        let dx = x - g[0];
        let dy = y - g[3];
        let col = (g[5] * dx - g[2] * dy) / det;
        let row = (-g[4] * dx + g[1] * dy) / det;
        let (c, r) = (col.round(), row.round());
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            None
        } else {
            Some((c as usize, r as usize))
        }
    }
}

/// A plain multi-band raster of float32 values (depths, parameters,
/// diagnostics). Band-sequential like [`Scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub n_bands: usize,
    pub data: Vec<f32>,
    pub nodata: f32,
    pub band_names: Option<Vec<String>>,
}

impl Raster {
    pub fn filled(width: usize, height: usize, n_bands: usize, value: f32) -> Self {
        Self {
            width,
            height,
            n_bands,
            data: vec![value; width * height * n_bands],
            nodata: DEFAULT_NODATA,
            band_names: None,
        }
    }

    pub fn nodata_filled(width: usize, height: usize, n_bands: usize) -> Self {
        Self::filled(width, height, n_bands, DEFAULT_NODATA)
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, band: usize, pixel: usize) -> f32 {
        self.data[band * self.n_pixels() + pixel]
    }

    #[inline]
    pub fn set(&mut self, band: usize, pixel: usize, value: f32) {
        let n = self.n_pixels();
        self.data[band * n + pixel] = value;
    }

    /// Value as f64, `None` on the nodata sentinel or non-finite values.
    #[inline]
    pub fn valid(&self, band: usize, pixel: usize) -> Option<f64> {
        let v = self.get(band, pixel);
        if v == self.nodata || !v.is_finite() {
            None
        } else {
            Some(v as f64)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Sidecar {
    Scene {
        width: usize,
        height: usize,
        band_centers_nm: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        band_names: Option<Vec<String>>,
        #[serde(flatten)]
        meta: SceneMetadata,
    },
    Raster {
        width: usize,
        height: usize,
        n_bands: usize,
        nodata: f32,
        #[serde(skip_serializing_if = "Option::is_none")]
        band_names: Option<Vec<String>>,
    },
}

fn sidecar_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("json")
}

fn write_payload(path: &Path, sidecar: &Sidecar, data: &[f32]) -> Result<()> {
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serialises");
    std::fs::write(sidecar_path(path), json).map_err(|e| Error::io(sidecar_path(path), e))?;
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_payload(path: &Path) -> Result<(Sidecar, Vec<f32>)> {
    let sidecar_file = sidecar_path(path);
    let json = std::fs::read_to_string(&sidecar_file).map_err(|e| Error::io(&sidecar_file, e))?;
    let sidecar: Sidecar = serde_json::from_str(&json).map_err(|e| Error::Parse {
        path: sidecar_file.clone(),
        line: e.line(),
        why: e.to_string(),
    })?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = match &sidecar {
        Sidecar::Scene {
            width,
            height,
            band_centers_nm,
            ..
        } => width * height * band_centers_nm.len(),
        Sidecar::Raster {
            width,
            height,
            n_bands,
            ..
        } => width * height * n_bands,
    } * 4;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected: expected as u64,
            actual: bytes.len() as u64,
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((sidecar, data))
}

pub fn write_scene(path: &Path, scene: &Scene) -> Result<()> {
    let sidecar = Sidecar::Scene {
        width: scene.width,
        height: scene.height,
        band_centers_nm: scene.bands.centers().to_vec(),
        band_names: scene.bands.names().map(|n| n.to_vec()),
        meta: scene.meta.clone(),
    };
    write_payload(path, &sidecar, &scene.data)
}

pub fn read_scene(path: &Path) -> Result<Scene> {
    match read_payload(path)? {
        (
            Sidecar::Scene {
                width,
                height,
                band_centers_nm,
                band_names,
                meta,
            },
            data,
        ) => {
            let mut bands = BandSet::new(band_centers_nm)?;
            if let Some(names) = band_names {
                bands = bands.with_names(names)?;
            }
            Scene::new(width, height, Arc::new(bands), data, meta)
        }
        _ => Err(Error::Parse {
            path: sidecar_path(path),
            line: 0,
            why: "expected a scene sidecar, found a raster".into(),
        }),
    }
}

pub fn write_raster(path: &Path, raster: &Raster) -> Result<()> {
    let sidecar = Sidecar::Raster {
        width: raster.width,
        height: raster.height,
        n_bands: raster.n_bands,
        nodata: raster.nodata,
        band_names: raster.band_names.clone(),
    };
    write_payload(path, &sidecar, &raster.data)
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    match read_payload(path)? {
        (
            Sidecar::Raster {
                width,
                height,
                n_bands,
                nodata,
                band_names,
            },
            data,
        ) => Ok(Raster {
            width,
            height,
            n_bands,
            data,
            nodata,
            band_names,
        }),
        _ => Err(Error::Parse {
            path: sidecar_path(path),
            line: 0,
            why: "expected a raster sidecar, found a scene".into(),
        }),
    }
}
