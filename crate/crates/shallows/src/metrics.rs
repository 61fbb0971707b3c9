//! Error metrics for the multi-scene, multi-pixel spectral fit.
//!
//! The combined objective weighs the product of a relative RMS error and a
//! spectral-angle error against a depth-continuity penalty:
//!
//! ```text
//! E = w0 * E_rms * E_sam + w1 * E_H
//! ```
//!
//! All metrics are dimensionless (SAM in radians); user-facing reports
//! multiply by 100 and speak of relative percentage error.

use crate::error::{Error, Result};

/// Measured and modelled spectra for one region across a scene stack,
/// flattened `[scene][pixel][band]`.
#[derive(Debug, Clone, Copy)]
pub struct RegionStack<'a> {
    n_scenes: usize,
    n_pixels: usize,
    n_bands: usize,
    measured: &'a [f64],
    modelled: &'a [f64],
}

impl<'a> RegionStack<'a> {
    pub fn new(
        n_scenes: usize,
        n_pixels: usize,
        n_bands: usize,
        measured: &'a [f64],
        modelled: &'a [f64],
    ) -> Result<Self> {
        let len = n_scenes * n_pixels * n_bands;
        if len == 0 || measured.len() != len || modelled.len() != len {
            return Err(Error::Usage(format!(
                "region stack wants {n_scenes}x{n_pixels}x{n_bands} = {len} values, \
                 got {} measured / {} modelled",
                measured.len(),
                modelled.len()
            )));
        }
        Ok(Self {
            n_scenes,
            n_pixels,
            n_bands,
            measured,
            modelled,
        })
    }

    fn spectrum(&self, data: &'a [f64], scene: usize, pixel: usize) -> &'a [f64] {
        let start = (scene * self.n_pixels + pixel) * self.n_bands;
        &data[start..start + self.n_bands]
    }
}

/// Weights of the combined metric. `omega0 + omega1 = 1` with the spectral
/// term dominant; `kappa` is the depth-continuity gate width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWeights {
    pub omega0: f64,
    pub omega1: f64,
    pub kappa: f64,
}

impl MetricWeights {
    pub fn new(omega0: f64, kappa: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&omega0) {
            return Err(Error::Invalid {
                what: "MetricWeights",
                why: format!("omega0 = {omega0} outside [0.5, 1]"),
            });
        }
        if !(kappa > 0.0) {
            return Err(Error::Invalid {
                what: "MetricWeights",
                why: format!("kappa = {kappa} must be positive"),
            });
        }
        Ok(Self {
            omega0,
            omega1: 1.0 - omega0,
            kappa,
        })
    }
}

impl Default for MetricWeights {
    fn default() -> Self {
        MetricWeights::new(0.85, 0.1).unwrap()
    }
}

/// Relative RMS error over the whole stack:
/// `sqrt(sum (modelled - measured)^2) / sum measured`.
pub fn e_rms(stack: &RegionStack) -> Result<f64> {
    let mut sq = 0.0;
    let mut denom = 0.0;
    for (m, d) in stack.measured.iter().zip(stack.modelled.iter()) {
        let diff = d - m;
        sq += diff * diff;
        denom += m;
    }
    if denom <= 0.0 {
        return Err(Error::DegenerateSpectrum {
            op: "e_rms",
            why: "measured spectra sum to zero".into(),
        });
    }
    Ok(sq.sqrt() / denom)
}

/// Spectral angle between two spectra, radians. The cosine is clamped to
/// [-1, 1] to absorb round-off.
pub fn sam_angle(x: &[f64], y: &[f64]) -> Result<f64> {
    let mut dot = 0.0;
    let mut nx = 0.0;
    let mut ny = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx <= 0.0 || ny <= 0.0 {
        return Err(Error::DegenerateSpectrum {
            op: "sam_angle",
            why: "zero-norm spectrum".into(),
        });
    }
    Ok((dot / (nx.sqrt() * ny.sqrt())).clamp(-1.0, 1.0).acos())
}

/// Mean spectral angle between modelled and measured spectra over all
/// (pixel, scene) pairs, radians.
pub fn e_sam(stack: &RegionStack) -> Result<f64> {
    let mut sum = 0.0;
    for j in 0..stack.n_scenes {
        for i in 0..stack.n_pixels {
            sum += sam_angle(
                stack.spectrum(stack.modelled, j, i),
                stack.spectrum(stack.measured, j, i),
            )?;
        }
    }
    Ok(sum / (stack.n_scenes * stack.n_pixels) as f64)
}

/// Depth-continuity penalty: RMS of relative deviations from the region
/// mean, counting only pixels deviating by more than `kappa` times the mean.
pub fn e_depth_continuity(h: &[f64], kappa: f64) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::Usage("empty depth vector".into()));
    }
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Domain {
            op: "e_depth_continuity",
            why: format!("mean depth {mean} must be positive"),
        });
    }
    let gate = kappa * mean;
    let mut sum = 0.0;
    for &hi in h {
        let dev = hi - mean;
        if dev.abs() > gate {
            let rel = dev / mean;
            sum += rel * rel;
        }
    }
    Ok((sum / h.len() as f64).sqrt())
}

/// The combined metric, dimensionless. Multiply by 100 for the reporting
/// convention used by the insertion thresholds.
pub fn e_photic(stack: &RegionStack, h: &[f64], w: &MetricWeights) -> Result<f64> {
    Ok(w.omega0 * e_rms(stack)? * e_sam(stack)? + w.omega1 * e_depth_continuity(h, w.kappa)?)
}

/// Bottom-unmixing metric over `n_scenes` spectra of `n_bands` bands,
/// flattened `[scene][band]`: product of the relative RMS term and the mean
/// spectral angle between the unmixed and modelled albedo spectra.
///
/// Both factors vanish on a perfect match. The SAM factor is blind to a
/// uniform scaling of the unmixed spectrum (it annihilates the product even
/// though the RMS factor sees the scale error), which is why the RMS factor
/// is kept in the product.
pub fn e_unmixed(
    rho_unmixed: &[f64],
    rho_modelled: &[f64],
    n_scenes: usize,
    n_bands: usize,
) -> Result<f64> {
    let len = n_scenes * n_bands;
    if len == 0 || rho_unmixed.len() != len || rho_modelled.len() != len {
        return Err(Error::Usage(format!(
            "e_unmixed wants {n_scenes}x{n_bands} values, got {} / {}",
            rho_unmixed.len(),
            rho_modelled.len()
        )));
    }
    let mut sq = 0.0;
    let mut denom = 0.0;
    for (u, m) in rho_unmixed.iter().zip(rho_modelled.iter()) {
        let d = u - m;
        sq += d * d;
        denom += m;
    }
    if denom <= 0.0 {
        return Err(Error::DegenerateSpectrum {
            op: "e_unmixed",
            why: "modelled albedo sums to zero".into(),
        });
    }
    let rms = sq.sqrt() / denom;
    let mut sam = 0.0;
    for j in 0..n_scenes {
        sam += sam_angle(
            &rho_unmixed[j * n_bands..(j + 1) * n_bands],
            &rho_modelled[j * n_bands..(j + 1) * n_bands],
        )?;
    }
    Ok(rms * sam / n_scenes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack<'a>(
        dims: (usize, usize, usize),
        measured: &'a [f64],
        modelled: &'a [f64],
    ) -> RegionStack<'a> {
        RegionStack::new(dims.0, dims.1, dims.2, measured, modelled).unwrap()
    }

    #[test]
    fn e_rms_hand_example() {
        let measured = [4.0, 3.0, 2.0, 1.0];
        let modelled = [5.0, 3.0, 2.0, 1.0];
        let s = stack((1, 1, 4), &measured, &modelled);
        assert!((e_rms(&s).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn e_rms_zero_on_perfect_fit_and_scales() {
        let m = [0.3, 0.2, 0.5, 0.7, 0.1, 0.9];
        let s = stack((2, 1, 3), &m, &m);
        assert_eq!(e_rms(&s).unwrap(), 0.0);

        // sqrt(sum (c d)^2) / sum (c m) = e_rms for any common scale c
        let measured = [4.0, 3.0, 2.0, 1.0];
        let modelled = [5.0, 2.5, 2.0, 1.25];
        let s1 = stack((1, 1, 4), &measured, &modelled);
        let m2: Vec<f64> = measured.iter().map(|v| v * 2.0).collect();
        let d2: Vec<f64> = modelled.iter().map(|v| v * 2.0).collect();
        let s2 = stack((1, 1, 4), &m2, &d2);
        assert!((e_rms(&s1).unwrap() - e_rms(&s2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn e_rms_rejects_zero_sum() {
        let m = [0.0, 0.0];
        let d = [0.1, 0.1];
        let s = stack((1, 1, 2), &m, &d);
        assert!(e_rms(&s).is_err());
    }

    #[test]
    fn e_sam_identities() {
        let m = [1.0, 2.0, 3.0, 4.0];
        let s = stack((1, 1, 4), &m, &m);
        assert_eq!(e_sam(&s).unwrap(), 0.0);
        // scale invariance
        let d: Vec<f64> = m.iter().map(|v| v * 7.3).collect();
        let s = stack((1, 1, 4), &m, &d);
        assert!(e_sam(&s).unwrap() < 1e-12);
        // orthogonal two-band spectra
        let m = [1.0, 0.0];
        let d = [0.0, 1.0];
        let s = stack((1, 1, 2), &m, &d);
        assert!((e_sam(&s).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        // zero-norm spectrum
        let m = [0.0, 0.0];
        let d = [1.0, 1.0];
        let s = stack((1, 1, 2), &m, &d);
        assert!(e_sam(&s).is_err());
    }

    #[test]
    fn depth_continuity_gate() {
        assert_eq!(e_depth_continuity(&[7.0; 9], 0.1).unwrap(), 0.0);
        // deviations inside the gate do not count
        assert_eq!(e_depth_continuity(&[10.0, 10.5, 9.6], 0.1).unwrap(), 0.0);
        // hand-evaluated case: 8 pixels at 10 m plus one at 12 m
        let h = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 12.0];
        let e = e_depth_continuity(&h, 0.1).unwrap();
        let expect = (16.0 / 92.0) / 3.0;
        assert!((e - expect).abs() < 1e-15, "{e} vs {expect}");
        assert!((e - 0.05798).abs() < 1e-5);
        // nonpositive mean
        assert!(e_depth_continuity(&[0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn e_photic_weight_formula() {
        // e_rms = 0.1 via the hand example; build modelled so e_sam is pi/2
        // with one pixel... simpler: verify the linear combination directly
        // on computed parts.
        let measured = [4.0, 3.0, 2.0, 1.0];
        let modelled = [5.0, 3.0, 2.0, 1.0];
        let s = stack((1, 1, 4), &measured, &modelled);
        let h = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 12.0];
        let w = MetricWeights::new(0.85, 0.1).unwrap();
        let rms = e_rms(&s).unwrap();
        let sam = e_sam(&s).unwrap();
        let eh = e_depth_continuity(&h, w.kappa).unwrap();
        let combined = e_photic(&s, &h, &w).unwrap();
        assert!((combined - (0.85 * rms * sam + 0.15 * eh)).abs() < 1e-15);
        // perfect fit, uniform depths: exactly zero
        let s0 = stack((1, 1, 4), &measured, &measured);
        assert_eq!(e_photic(&s0, &[5.0; 4], &w).unwrap(), 0.0);
        // increasing E_H with fixed spectral terms strictly increases it
        let h_worse = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 14.0];
        assert!(e_photic(&s, &h_worse, &w).unwrap() > combined);
    }

    #[test]
    fn weights_validation() {
        assert!(MetricWeights::new(0.49, 0.1).is_err());
        assert!(MetricWeights::new(0.85, 0.0).is_err());
        let w = MetricWeights::new(0.85, 0.1).unwrap();
        assert!((w.omega0 + w.omega1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn e_unmixed_cases() {
        let m = [0.2, 0.5, 0.9, 1.1];
        assert_eq!(e_unmixed(&m, &m, 1, 4).unwrap(), 0.0);
        // uniform scaling: SAM factor zero annihilates the product
        let scaled: Vec<f64> = m.iter().map(|v| v * 2.0).collect();
        assert!(e_unmixed(&scaled, &m, 1, 4).unwrap() < 1e-12);
        // non-proportional perturbation: strictly positive
        let bumped = [0.25, 0.45, 0.9, 1.1];
        assert!(e_unmixed(&bumped, &m, 1, 4).unwrap() > 0.0);
        // dimension mismatch
        assert!(e_unmixed(&m, &m, 2, 4).is_err());
    }
}
