//! Wavelength grids, tabulated optical curves and band resampling.
//!
//! Curves are stored on strictly increasing wavelength knots and evaluated
//! by piecewise-linear interpolation. Band response is treated as a delta
//! function at the band center, so resampling a curve onto a band set is a
//! plain interpolation at each center.
//!
//! Curve files are two-column ASCII (`wavelength_nm value`) with `#`
//! comments; a bottom-spectra library is a directory of such files where
//! the file stem is the bottom-type name.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Wavelength (nm) at which bottom albedo spectra are normalised.
pub const ALBEDO_REFERENCE_NM: f64 = 550.0;

/// Formula wavelengths map to the nearest band center within this distance;
/// beyond it the longest-wavelength band is used instead.
pub const BAND_MAPPING_TOLERANCE_NM: f64 = 60.0;

/// A tabulated optical curve on strictly increasing wavelength knots.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupCurve {
    name: String,
    wavelengths: Vec<f64>,
    values: Vec<f64>,
}

impl LookupCurve {
    pub fn new(
        name: impl Into<String>,
        wavelengths: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if wavelengths.len() != values.len() {
            return Err(Error::Invalid {
                what: "LookupCurve",
                why: format!(
                    "'{name}': {} wavelengths but {} values",
                    wavelengths.len(),
                    values.len()
                ),
            });
        }
        if wavelengths.len() < 2 {
            return Err(Error::Invalid {
                what: "LookupCurve",
                why: format!("'{name}': needs at least 2 knots"),
            });
        }
        if !wavelengths.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invalid {
                what: "LookupCurve",
                why: format!("'{name}': wavelengths not strictly increasing"),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid {
                what: "LookupCurve",
                why: format!("'{name}': non-finite values"),
            });
        }
        Ok(Self {
            name,
            wavelengths,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn min_wavelength(&self) -> f64 {
        self.wavelengths[0]
    }

    pub fn max_wavelength(&self) -> f64 {
        *self.wavelengths.last().unwrap()
    }

    /// Piecewise-linear interpolation at `lambda`; exact at every knot.
    pub fn value_at(&self, lambda: f64) -> Result<f64> {
        if lambda < self.min_wavelength() || lambda > self.max_wavelength() {
            return Err(Error::CurveRange {
                curve: self.name.clone(),
                lambda,
                min: self.min_wavelength(),
                max: self.max_wavelength(),
            });
        }
        let idx = match self
            .wavelengths
            .binary_search_by(|w| w.partial_cmp(&lambda).unwrap())
        {
            Ok(i) => return Ok(self.values[i]),
            Err(i) => i,
        };
        let (w0, w1) = (self.wavelengths[idx - 1], self.wavelengths[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        let t = (lambda - w0) / (w1 - w0);
        Ok(v0 + t * (v1 - v0))
    }

    /// One value per band center.
    pub fn resample(&self, bands: &Arc<BandSet>) -> Result<Spectrum> {
        let values = bands
            .centers()
            .iter()
            .map(|&c| self.value_at(c))
            .collect::<Result<Vec<_>>>()?;
        Spectrum::new(Arc::clone(bands), values)
    }

    /// Parse the two-column ASCII format. `origin` is used in error messages.
    pub fn parse(name: impl Into<String>, origin: &Path, text: &str) -> Result<Self> {
        let mut wavelengths = Vec::new();
        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>, what: &str| -> Result<f64> {
                s.and_then(|t| t.parse::<f64>().ok()).ok_or(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    why: format!("cannot parse {what} in '{line}'"),
                })
            };
            wavelengths.push(parse(parts.next(), "wavelength")?);
            values.push(parse(parts.next(), "value")?);
        }
        LookupCurve::new(name, wavelengths, values)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Self::parse(name, path, &text)
    }
}

/// An ordered set of band-center wavelengths (nm).
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    centers: Vec<f64>,
    names: Option<Vec<String>>,
}

impl BandSet {
    pub fn new(centers: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Invalid {
                what: "BandSet",
                why: "no band centers".into(),
            });
        }
        if !centers.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invalid {
                what: "BandSet",
                why: format!("centers not strictly increasing: {centers:?}"),
            });
        }
        Ok(Self {
            centers,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.centers.len() {
            return Err(Error::Invalid {
                what: "BandSet",
                why: "one name per band required".into(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Index of the band center closest to `lambda` (ties go short-wave).
    pub fn nearest(&self, lambda: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &c) in self.centers.iter().enumerate() {
            let d = (c - lambda).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// Band index used when a model formula references `lambda`: the nearest
    /// center if one lies within [`BAND_MAPPING_TOLERANCE_NM`], otherwise the
    /// longest-wavelength band (e.g. 750 nm on a 4-band visible set).
    pub fn formula_band(&self, lambda: f64) -> usize {
        let i = self.nearest(lambda);
        if (self.centers[i] - lambda).abs() <= BAND_MAPPING_TOLERANCE_NM {
            i
        } else {
            self.centers.len() - 1
        }
    }
}

impl fmt::Display for BandSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.centers.iter().map(|c| format!("{c}")).collect();
        write!(f, "[{}]", s.join(", "))
    }
}

/// Values on a fixed band set; sr^-1 for reflectance, dimensionless for
/// albedo.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bands: Arc<BandSet>,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(bands: Arc<BandSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != bands.len() {
            return Err(Error::Invalid {
                what: "Spectrum",
                why: format!("{} values for {} bands", values.len(), bands.len()),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid {
                what: "Spectrum",
                why: "non-finite values".into(),
            });
        }
        Ok(Self { bands, values })
    }

    pub fn bands(&self) -> &Arc<BandSet> {
        &self.bands
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the band mapped from a formula wavelength.
    pub fn at_formula_band(&self, lambda: f64) -> f64 {
        self.values[self.bands.formula_band(lambda)]
    }
}

/// A library of bottom albedo spectra, each normalised to 1 at 550 nm.
#[derive(Debug, Clone)]
pub struct BottomLibrary {
    entries: Vec<(String, LookupCurve)>,
}

/// Normalise each curve by its value at 550 nm so that rho(550) = 1 exactly.
pub fn load_bottom_spectra(source: Vec<(String, LookupCurve)>) -> Result<BottomLibrary> {
    let mut entries = Vec::with_capacity(source.len());
    for (name, curve) in source {
        let at_ref = curve.value_at(ALBEDO_REFERENCE_NM)?;
        if !(at_ref > 0.0) {
            return Err(Error::Normalization {
                curve: name,
                value: at_ref,
            });
        }
        let values = curve.values.iter().map(|v| v / at_ref).collect();
        entries.push((
            name.clone(),
            LookupCurve::new(name, curve.wavelengths.clone(), values)?,
        ));
    }
    Ok(BottomLibrary { entries })
}

impl BottomLibrary {
    /// The embedded sand/seagrass/coral spectra.
    pub fn builtin() -> Result<Self> {
        load_bottom_spectra(tables::builtin_bottoms()?)
    }

    /// Load every curve file in a directory; the file stem is the type name.
    /// Entries are sorted by name for a stable ordering.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut source = Vec::new();
        let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in rd {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.is_file() {
                let curve = LookupCurve::from_file(&path)?;
                source.push((curve.name().to_string(), curve));
            }
        }
        if source.is_empty() {
            return Err(Error::Usage(format!(
                "no bottom spectra found in {}",
                dir.display()
            )));
        }
        source.sort_by(|a, b| a.0.cmp(&b.0));
        load_bottom_spectra(source)
    }

    /// Keep only the named subset (singleton or pair searches).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let entries = indices
            .iter()
            .map(|&i| {
                self.entries.get(i).cloned().ok_or_else(|| {
                    Error::Usage(format!("bottom type index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn curve(&self, i: usize) -> &LookupCurve {
        &self.entries[i].1
    }

    /// Per-type values at each band center: `out[type][band]`.
    pub fn resample(&self, bands: &BandSet) -> Result<Vec<Vec<f64>>> {
        self.entries
            .iter()
            .map(|(_, c)| {
                bands
                    .centers()
                    .iter()
                    .map(|&l| c.value_at(l))
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    }
}

pub mod tables {
    //! Embedded optical tables, parsed once on first use.
    //!
    //! The raw files live under `data/` with their provenance documented in
    //! the file headers; see also the book chapter on the forward model.

    use std::path::Path;
    use std::sync::OnceLock;

    use super::LookupCurve;
    use crate::error::Result;

    fn parse_static(name: &str, text: &str) -> LookupCurve {
        LookupCurve::parse(name, Path::new(name), text)
            .unwrap_or_else(|e| panic!("embedded table {name}: {e}"))
    }

    /// Pure-water absorption a_w(lambda), 1/m (Pope & Fry 1997).
    pub fn pure_water_absorption() -> &'static LookupCurve {
        static CURVE: OnceLock<LookupCurve> = OnceLock::new();
        CURVE.get_or_init(|| parse_static("a_w", include_str!("../data/a_w.txt")))
    }

    /// Pure-seawater backscattering b_bw(lambda), 1/m (Morel 1974).
    pub fn pure_seawater_backscatter() -> &'static LookupCurve {
        static CURVE: OnceLock<LookupCurve> = OnceLock::new();
        CURVE.get_or_init(|| parse_static("b_bw", include_str!("../data/b_bw.txt")))
    }

    /// Phytoplankton absorption shape coefficient a0(lambda).
    pub fn a0() -> &'static LookupCurve {
        static CURVE: OnceLock<LookupCurve> = OnceLock::new();
        CURVE.get_or_init(|| parse_static("a0", include_str!("../data/a0.txt")))
    }

    /// Phytoplankton absorption shape coefficient a1(lambda).
    pub fn a1() -> &'static LookupCurve {
        static CURVE: OnceLock<LookupCurve> = OnceLock::new();
        CURVE.get_or_init(|| parse_static("a1", include_str!("../data/a1.txt")))
    }

    pub(super) fn builtin_bottoms() -> Result<Vec<(String, LookupCurve)>> {
        let raw = [
            ("coral", include_str!("../data/bottoms/coral.txt")),
            ("sand", include_str!("../data/bottoms/sand.txt")),
            ("seagrass", include_str!("../data/bottoms/seagrass.txt")),
        ];
        raw.iter()
            .map(|(name, text)| {
                LookupCurve::parse(*name, Path::new(name), text).map(|c| (name.to_string(), c))
            })
            .collect()
    }
}
