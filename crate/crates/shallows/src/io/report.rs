//! Regression report: model depths against soundings.

use std::fmt;

use serde::Serialize;

use crate::empirical::SoundingSet;
use crate::error::{Error, Result};
use crate::io::{Raster, Scene};

/// Absolute-error thresholds (m) for the "within" table.
pub const ABSOLUTE_THRESHOLDS_M: [f64; 6] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0];

/// Relative-error thresholds (%) for the "within" table.
pub const RELATIVE_THRESHOLDS_PCT: [f64; 6] = [2.0, 5.0, 10.0, 15.0, 20.0, 25.0];

/// Agreement statistics between a model depth raster and soundings.
#[derive(Debug, Clone, Serialize)]
pub struct RegressionReport {
    /// Matched (sounding, model) pairs.
    pub n: usize,
    /// Coefficient of determination of the least-squares line.
    pub r_squared: f64,
    /// Least-squares `model = slope * sounding + intercept`.
    pub slope: f64,
    pub intercept: f64,
    /// Mean absolute error, metres.
    pub mae_m: f64,
    /// Mean relative error, percent.
    pub mean_relative_error_pct: f64,
    /// Fraction (%) of pairs with absolute error <= threshold, aligned with
    /// [`ABSOLUTE_THRESHOLDS_M`].
    pub within_absolute_pct: [f64; 6],
    /// Fraction (%) of pairs with relative error <= threshold, aligned with
    /// [`RELATIVE_THRESHOLDS_PCT`].
    pub within_relative_pct: [f64; 6],
}

/// Compare a single-band depth raster against soundings. `georef` supplies
/// the pixel/world mapping (the raster is assumed co-registered with it).
pub fn regression_report(
    depths: &Raster,
    georef: &Scene,
    soundings: &SoundingSet,
) -> Result<RegressionReport> {
    if depths.n_bands != 1 {
        return Err(Error::Usage("regression_report wants a single-band raster".into()));
    }
    if depths.width != georef.width || depths.height != georef.height {
        return Err(Error::Usage(
            "depth raster and georeference grid differ in size".into(),
        ));
    }
    let mut pairs = Vec::new();
    for p in &soundings.points {
        let Some((col, row)) = georef.world_to_pixel(p.x, p.y) else {
            continue;
        };
        if let Some(model) = depths.valid(0, row * depths.width + col) {
            pairs.push((p.depth, model));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Usage(
            "no soundings overlap valid model depths".into(),
        ));
    }

    let n = pairs.len();
    let nf = n as f64;
    let mean_x = pairs.iter().map(|(x, _)| x).sum::<f64>() / nf;
    let mean_y = pairs.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    let mut mae = 0.0;
    let mut mre = 0.0;
    let mut within_abs = [0usize; 6];
    let mut within_rel = [0usize; 6];
    for &(x, y) in &pairs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
        let abs_err = (y - x).abs();
        let rel_err = abs_err / x * 100.0;
        mae += abs_err;
        mre += rel_err;
        for (i, &t) in ABSOLUTE_THRESHOLDS_M.iter().enumerate() {
            if abs_err <= t {
                within_abs[i] += 1;
            }
        }
        for (i, &t) in RELATIVE_THRESHOLDS_PCT.iter().enumerate() {
            if rel_err <= t {
                within_rel[i] += 1;
            }
        }
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let r_squared = if sxx > 0.0 && syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else if syy == 0.0 && sxx == 0.0 {
        1.0
    } else {
        0.0
    };
    let pct = |count: [usize; 6]| {
        let mut out = [0.0; 6];
        for (o, c) in out.iter_mut().zip(count.iter()) {
            *o = *c as f64 / nf * 100.0;
        }
        out
    };
    Ok(RegressionReport {
        n,
        r_squared,
        slope,
        intercept,
        mae_m: mae / nf,
        mean_relative_error_pct: mre / nf,
        within_absolute_pct: pct(within_abs),
        within_relative_pct: pct(within_rel),
    })
}

impl fmt::Display for RegressionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N          {}", self.n)?;
        writeln!(f, "R^2        {:.4}", self.r_squared)?;
        writeln!(f, "fit        y = {:.4} x + {:.4}", self.slope, self.intercept)?;
        writeln!(f, "MAE        {:.3} m", self.mae_m)?;
        writeln!(f, "MRE        {:.2} %", self.mean_relative_error_pct)?;
        writeln!(f)?;
        for (pct, t) in self.within_absolute_pct.iter().zip(ABSOLUTE_THRESHOLDS_M) {
            writeln!(f, "{pct:6.2}% within {t:5.2} m")?;
        }
        writeln!(f)?;
        for (pct, t) in self.within_relative_pct.iter().zip(RELATIVE_THRESHOLDS_PCT) {
            writeln!(f, "{pct:6.2}% within {t:5.2} (rel % error)")?;
        }
        Ok(())
    }
}
