//! The region objective: combined error over the packed parameter vector,
//! with per-band optical tables pre-fetched so an evaluation is a handful
//! of exponentials per (scene, pixel, band).

use crate::engine::{FitDims, SceneContext};
use crate::metrics::{self, MetricWeights, RegionStack};

/// Reusable evaluation buffers.
#[derive(Debug)]
pub(crate) struct Scratch {
    modelled: Vec<f64>,
    mix: Vec<f64>,
    factor_c: Vec<f64>,
    factor_b: Vec<f64>,
    r_inf: Vec<f64>,
}

impl Scratch {
    pub fn new(dims: FitDims, n_bands: usize) -> Self {
        Self {
            modelled: vec![0.0; dims.n_scenes * dims.n_pixels * n_bands],
            mix: vec![0.0; dims.n_pixels * n_bands],
            factor_c: vec![0.0; n_bands],
            factor_b: vec![0.0; n_bands],
            r_inf: vec![0.0; n_bands],
        }
    }
}

/// Everything fixed during one region fit.
pub(crate) struct RegionObjective<'a> {
    pub dims: FitDims,
    pub n_bands: usize,
    pub weights: MetricWeights,
    pub contexts: &'a [SceneContext],
    /// Measured surface reflectance, `[scene][pixel][band]`.
    pub measured: &'a [f64],
    /// Pure-water absorption per band.
    pub a_w: &'a [f64],
    /// Pure-seawater backscatter per band.
    pub b_bw: &'a [f64],
    /// Phytoplankton shape coefficients per band.
    pub a0: &'a [f64],
    pub a1: &'a [f64],
    /// `exp(-S (lambda - 440))` per band.
    pub gelb_shape: &'a [f64],
    /// `(440/lambda)^Y_j` per scene and band.
    pub bp_shape: &'a [Vec<f64>],
    /// Normalised bottom spectra per type and band.
    pub rho_lib: &'a [Vec<f64>],
}

impl RegionObjective<'_> {
    /// Fill `scratch.modelled` with the surface spectra at `x`; `false`
    /// outside the model's domain.
    fn fill_modelled(&self, x: &[f64], scratch: &mut Scratch) -> bool {
        let FitDims {
            n_scenes,
            n_pixels,
            n_bottoms,
        } = self.dims;
        let n_bands = self.n_bands;
        let h = &x[4 * n_scenes..4 * n_scenes + n_pixels];
        let b = &x[4 * n_scenes + n_pixels..4 * n_scenes + n_pixels + n_bottoms * n_pixels];
        let q = &x[4 * n_scenes + n_pixels + n_bottoms * n_pixels..];

        // bottom mix is shared across scenes
        for i in 0..n_pixels {
            let mut q_sum = 0.0;
            for t in 0..n_bottoms {
                q_sum += q[t * n_pixels + i];
            }
            if !(q_sum > 0.0) {
                return false;
            }
            for l in 0..n_bands {
                let mut num = 0.0;
                for t in 0..n_bottoms {
                    num += b[t * n_pixels + i] * q[t * n_pixels + i] * self.rho_lib[t][l];
                }
                scratch.mix[i * n_bands + l] = num / q_sum * std::f64::consts::FRAC_1_PI;
            }
        }

        for (j, ctx) in self.contexts.iter().enumerate() {
            let p = x[4 * j];
            let g = x[4 * j + 1];
            let xx = x[4 * j + 2];
            let delta = x[4 * j + 3];
            if !(p > 0.0 && g > 0.0 && xx > 0.0) {
                return false;
            }
            let ln_p = p.ln();
            let inv_sun = ctx.inv_cos_sun;
            let inv_view = ctx.inv_cos_view;
            for l in 0..n_bands {
                let a = self.a_w[l]
                    + (self.a0[l] + self.a1[l] * ln_p) * p
                    + g * self.gelb_shape[l];
                let b_b = self.b_bw[l] + xx * self.bp_shape[j][l];
                let k = a + b_b;
                if !(k > 0.0) {
                    return false;
                }
                let u = b_b / k;
                scratch.r_inf[l] = 0.084 * u + 0.170 * u * u;
                let d_c = 1.03 * (1.0 + 2.4 * u).sqrt();
                let d_b = 1.04 * (1.0 + 5.4 * u).sqrt();
                scratch.factor_c[l] = (inv_sun + d_c * inv_view) * k;
                scratch.factor_b[l] = (inv_sun + d_b * inv_view) * k;
            }
            for i in 0..n_pixels {
                let h_eff = (h[i] + ctx.tide).max(0.0);
                let out = (j * n_pixels + i) * n_bands;
                for l in 0..n_bands {
                    let e_c = (-scratch.factor_c[l] * h_eff).exp();
                    let e_b = (-scratch.factor_b[l] * h_eff).exp();
                    let r = scratch.r_inf[l] * (1.0 - e_c) + scratch.mix[i * n_bands + l] * e_b;
                    let denom = 1.0 - 1.5 * r;
                    if denom.abs() < 1e-9 {
                        return false;
                    }
                    scratch.modelled[out + l] = 0.5 * r / denom + delta;
                }
            }
        }
        true
    }

    /// Combined error at `x` (dimensionless); +inf outside the model's
    /// domain.
    pub fn eval(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        if !self.fill_modelled(x, scratch) {
            return f64::INFINITY;
        }
        let h = &x[4 * self.dims.n_scenes..4 * self.dims.n_scenes + self.dims.n_pixels];
        let Ok(stack) = RegionStack::new(
            self.dims.n_scenes,
            self.dims.n_pixels,
            self.n_bands,
            self.measured,
            &scratch.modelled,
        ) else {
            return f64::INFINITY;
        };
        match metrics::e_photic(&stack, h, &self.weights) {
            Ok(v) => v,
            Err(_) => f64::INFINITY,
        }
    }

    /// Modelled surface spectra at `x` (for diagnostics and the unmixing
    /// stage), `[scene][pixel][band]`.
    pub fn modelled(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut scratch = Scratch::new(self.dims, self.n_bands);
        if self.fill_modelled(x, &mut scratch) {
            Some(scratch.modelled)
        } else {
            None
        }
    }
}
