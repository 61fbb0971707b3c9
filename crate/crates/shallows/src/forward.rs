//! The semi-analytical forward reflectance model.
//!
//! Subsurface remote-sensing reflectance over optically shallow water is a
//! linear combination of a water-column term and a bottom term:
//!
//! ```text
//! r_rs = r_inf (1 - exp(-(1/cos(th_sun) + D_C/cos(th_view)) k H))
//!      + (rho/pi) exp(-(1/cos(th_sun) + D_B/cos(th_view)) k H)
//! ```
//!
//! where `k = a + b_b` is the attenuation coefficient, `r_inf` the
//! deep-water reflectance, `D_C`/`D_B` path-elongation factors and `rho`
//! the bottom albedo. The water-column constituents are parameterised by
//! their 440 nm values: `P` (phytoplankton absorption), `G` (gelbstoff and
//! detritus absorption) and `X` (particle backscatter). Above-surface
//! reflectance adds a spectrally-constant offset `Delta` through a rational
//! transfer function.

use crate::error::{Error, Result};
use crate::spectral::{tables, BottomLibrary, Spectrum};

/// Default gelbstoff spectral slope, nm^-1 (midpoint of the admissible
/// range).
pub const GELBSTOFF_SLOPE_DEFAULT: f64 = 0.015;

/// Admissible range of the gelbstoff slope, nm^-1.
pub const GELBSTOFF_SLOPE_RANGE: (f64, f64) = (0.011, 0.021);

/// Refractive index used for above/below-surface angle refraction.
pub const SEAWATER_REFRACTIVE_INDEX: f64 = 1.34;

/// Water-column state: constituent magnitudes at 440 nm plus the spectral
/// shape parameters `S` (gelbstoff slope) and `Y` (particle backscatter
/// exponent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterColumn {
    /// Phytoplankton absorption at 440 nm, 1/m.
    pub p: f64,
    /// Gelbstoff + detritus absorption at 440 nm, 1/m.
    pub g: f64,
    /// Particle backscatter at 440 nm, 1/m.
    pub x: f64,
    /// Spectrally-constant above-surface offset, 1/sr.
    pub delta: f64,
    /// Gelbstoff slope, 1/nm.
    pub s: f64,
    /// Particle backscatter exponent.
    pub y: f64,
}

impl WaterColumn {
    pub fn new(p: f64, g: f64, x: f64, delta: f64) -> Result<Self> {
        Self::with_shape(p, g, x, delta, GELBSTOFF_SLOPE_DEFAULT, 1.0)
    }

    pub fn with_shape(p: f64, g: f64, x: f64, delta: f64, s: f64, y: f64) -> Result<Self> {
        if !(p > 0.0 && g > 0.0 && x > 0.0) {
            return Err(Error::Invalid {
                what: "WaterColumn",
                why: format!("P, G, X must be positive (got {p}, {g}, {x})"),
            });
        }
        if !(GELBSTOFF_SLOPE_RANGE.0..=GELBSTOFF_SLOPE_RANGE.1).contains(&s) {
            return Err(Error::Invalid {
                what: "WaterColumn",
                why: format!("S = {s} outside {GELBSTOFF_SLOPE_RANGE:?}"),
            });
        }
        if !delta.is_finite() || !y.is_finite() {
            return Err(Error::Invalid {
                what: "WaterColumn",
                why: "Delta and Y must be finite".into(),
            });
        }
        Ok(Self { p, g, x, delta, s, y })
    }
}

/// Bottom state for one pixel: per-type albedo magnitudes at 550 nm and
/// mixing fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct BottomState {
    pub b: Vec<f64>,
    pub q: Vec<f64>,
}

impl BottomState {
    pub fn new(b: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if b.len() != q.len() || b.is_empty() {
            return Err(Error::Invalid {
                what: "BottomState",
                why: format!("{} albedos for {} fractions", b.len(), q.len()),
            });
        }
        if b.iter().any(|v| *v < 0.0) || q.iter().any(|v| *v < 0.0) {
            return Err(Error::Invalid {
                what: "BottomState",
                why: "negative albedo or fraction".into(),
            });
        }
        if q.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Invalid {
                what: "BottomState",
                why: "mixing fractions sum to zero".into(),
            });
        }
        Ok(Self { b, q })
    }
}

/// Subsurface illumination/viewing geometry, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Subsurface solar zenith angle.
    pub theta_sun: f64,
    /// Subsurface viewing angle from nadir.
    pub theta_view: f64,
}

impl Geometry {
    pub fn new(theta_sun: f64, theta_view: f64) -> Result<Self> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(0.0..half_pi).contains(&theta_sun) || !(0.0..half_pi).contains(&theta_view) {
            return Err(Error::Invalid {
                what: "Geometry",
                why: format!("angles ({theta_sun}, {theta_view}) outside [0, pi/2)"),
            });
        }
        Ok(Self {
            theta_sun,
            theta_view,
        })
    }

    /// Build from an above-surface sun elevation (degrees) and view zenith
    /// (degrees, 0 = nadir), refracting both through the surface.
    pub fn from_sun_elevation_deg(sun_elevation: f64, view_zenith: f64) -> Result<Self> {
        if !(0.0 < sun_elevation && sun_elevation <= 90.0) {
            return Err(Error::Invalid {
                what: "Geometry",
                why: format!("sun elevation {sun_elevation} outside (0, 90]"),
            });
        }
        let refract = |zenith_deg: f64| {
            let sin_sub = zenith_deg.to_radians().sin() / SEAWATER_REFRACTIVE_INDEX;
            sin_sub.asin()
        };
        Geometry::new(refract(90.0 - sun_elevation), refract(view_zenith))
    }

    /// `1/cos(theta_sun)`.
    pub fn inv_cos_sun(&self) -> f64 {
        1.0 / self.theta_sun.cos()
    }

    /// `1/cos(theta_view)`.
    pub fn inv_cos_view(&self) -> f64 {
        1.0 / self.theta_view.cos()
    }
}

/// `a_phi` from pre-fetched shape coefficients; the formula core shared by
/// the scalar operation and the banded fast path.
#[inline]
pub(crate) fn phi_from_coeffs(a0: f64, a1: f64, p: f64) -> f64 {
    (a0 + a1 * p.ln()) * p
}

/// Phytoplankton absorption `a_phi(P, lambda) = (a0 + a1 ln P) P`, 1/m.
pub fn absorption_phi(p: f64, lambda: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain {
            op: "absorption_phi",
            why: format!("P = {p} must be positive"),
        });
    }
    let a0 = tables::a0().value_at(lambda)?;
    let a1 = tables::a1().value_at(lambda)?;
    Ok(phi_from_coeffs(a0, a1, p))
}

/// Gelbstoff + detritus absorption `a_g(G, lambda) = G exp(-S (lambda - 440))`,
/// 1/m. Requires `G > 0`.
pub fn absorption_gelbstoff(g: f64, lambda: f64, s: f64) -> f64 {
    debug_assert!(g > 0.0);
    g * (-s * (lambda - 440.0)).exp()
}

/// Particle backscatter `b_bp(X, lambda) = X (440/lambda)^Y`, 1/m.
/// Requires `X > 0`, `lambda > 0`.
pub fn backscatter_particles(x: f64, lambda: f64, y: f64) -> f64 {
    debug_assert!(x > 0.0 && lambda > 0.0);
    x * (440.0 / lambda).powf(y)
}

/// Empirical estimate of the backscatter exponent `Y` from a surface
/// reflectance spectrum:
///
/// ```text
/// Y = 3.44 (1 - 3.17 exp(-2.01 chi)),
/// chi = (R(440) - R(750)) / (R(490) - R(750))
/// ```
///
/// Formula wavelengths map onto the spectrum's bands by nearest center.
pub fn estimate_y(r: &Spectrum) -> Result<f64> {
    let r440 = r.at_formula_band(440.0);
    let r490 = r.at_formula_band(490.0);
    let r750 = r.at_formula_band(750.0);
    let denom = r490 - r750;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateSpectrum {
            op: "estimate_y",
            why: "R(490) - R(750) is zero".into(),
        });
    }
    let chi = (r440 - r750) / denom;
    Ok(3.44 * (1.0 - 3.17 * (-2.01 * chi).exp()))
}

/// Bulk inherent optical properties at one wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iops {
    /// Total absorption, 1/m.
    pub a: f64,
    /// Total backscatter, 1/m.
    pub b_b: f64,
    /// Attenuation `k = a + b_b`, 1/m.
    pub k: f64,
    /// `u = b_b / (a + b_b)`.
    pub u: f64,
}

/// Total absorption, backscatter, attenuation and `u` for a water column.
pub fn total_iops(w: &WaterColumn, lambda: f64) -> Result<Iops> {
    let a_w = tables::pure_water_absorption().value_at(lambda)?;
    let b_bw = tables::pure_seawater_backscatter().value_at(lambda)?;
    let a = a_w + absorption_phi(w.p, lambda)? + absorption_gelbstoff(w.g, lambda, w.s);
    let b_b = b_bw + backscatter_particles(w.x, lambda, w.y);
    Ok(Iops {
        a,
        b_b,
        k: a + b_b,
        u: b_b / (a + b_b),
    })
}

/// Deep-water subsurface reflectance `r_inf(u) = 0.084 u + 0.170 u^2`.
#[inline]
pub fn deep_water_rrs(u: f64) -> f64 {
    0.084 * u + 0.170 * u * u
}

/// Path elongation factors `(D_C, D_B)` for water-column and bottom photons.
#[inline]
pub fn path_elongation(u: f64) -> (f64, f64) {
    (
        1.03 * (1.0 + 2.4 * u).sqrt(),
        1.04 * (1.0 + 5.4 * u).sqrt(),
    )
}

/// Mixed bottom albedo `rho = sum(B_i q_i rho_i) / sum(q_i)` at `lambda`.
pub fn bottom_albedo_mix(b: &BottomState, library: &BottomLibrary, lambda: f64) -> Result<f64> {
    if b.b.len() != library.len() {
        return Err(Error::Usage(format!(
            "bottom state has {} types, library has {}",
            b.b.len(),
            library.len()
        )));
    }
    let q_sum: f64 = b.q.iter().sum();
    if q_sum <= 0.0 {
        return Err(Error::Domain {
            op: "bottom_albedo_mix",
            why: "mixing fractions sum to zero".into(),
        });
    }
    let mut num = 0.0;
    for i in 0..b.b.len() {
        num += b.b[i] * b.q[i] * library.curve(i).value_at(lambda)?;
    }
    Ok(num / q_sum)
}

/// The two attenuation path factors `(1/cos(th_sun) + D/cos(th_view)) k`.
#[inline]
pub(crate) fn path_factors(geom: &Geometry, u: f64, k: f64) -> (f64, f64) {
    let (d_c, d_b) = path_elongation(u);
    (
        (geom.inv_cos_sun() + d_c * geom.inv_cos_view()) * k,
        (geom.inv_cos_sun() + d_b * geom.inv_cos_view()) * k,
    )
}

/// Subsurface remote-sensing reflectance over a bottom at depth `h`.
pub fn subsurface_rrs(
    w: &WaterColumn,
    b: &BottomState,
    h: f64,
    geom: &Geometry,
    library: &BottomLibrary,
    lambda: f64,
) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::Domain {
            op: "subsurface_rrs",
            why: format!("depth {h} must be nonnegative"),
        });
    }
    let iops = total_iops(w, lambda)?;
    let rho = bottom_albedo_mix(b, library, lambda)?;
    let r_inf = deep_water_rrs(iops.u);
    let (f_c, f_b) = path_factors(geom, iops.u, iops.k);
    Ok(r_inf * (1.0 - (-f_c * h).exp()) + rho / std::f64::consts::PI * (-f_b * h).exp())
}

/// Above-surface reflectance `R_rs = 0.5 r / (1 - 1.5 r) + Delta`.
pub fn subsurface_to_surface(r: f64, delta: f64) -> Result<f64> {
    let denom = 1.0 - 1.5 * r;
    if denom.abs() < 1e-12 {
        return Err(Error::Domain {
            op: "subsurface_to_surface",
            why: format!("1 - 1.5 r vanishes at r = {r}"),
        });
    }
    Ok(0.5 * r / denom + delta)
}

/// Subsurface reflectance `r_rs = 2 (R - Delta) / (1 + 3 (R - Delta))`.
pub fn surface_to_subsurface(r_surface: f64, delta: f64) -> Result<f64> {
    let d = r_surface - delta;
    let denom = 1.0 + 3.0 * d;
    if denom.abs() < 1e-12 {
        return Err(Error::Domain {
            op: "surface_to_subsurface",
            why: format!("1 + 3 (R - Delta) vanishes at R - Delta = {d}"),
        });
    }
    Ok(2.0 * d / denom)
}

/// Invert the reflectance model for the bottom albedo, given a fixed water
/// column and depth:
///
/// ```text
/// rho = pi exp(f_B k H) [ r_rs - r_inf (1 - exp(-f_C k H)) ]
/// ```
///
/// `r_surface` is the measured above-surface reflectance at `lambda`. The
/// leading exponential amplifies noise without bound as `k H` grows, so in
/// optically deep water the result is numerical noise blown up to arbitrary
/// magnitude; callers should flag such pixels rather than fit them.
pub fn rho_modelled(
    w: &WaterColumn,
    h: f64,
    geom: &Geometry,
    r_surface: f64,
    lambda: f64,
) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::Domain {
            op: "rho_modelled",
            why: format!("depth {h} must be nonnegative"),
        });
    }
    let r_sub = surface_to_subsurface(r_surface, w.delta)?;
    let iops = total_iops(w, lambda)?;
    let r_inf = deep_water_rrs(iops.u);
    let (f_c, f_b) = path_factors(geom, iops.u, iops.k);
    Ok(std::f64::consts::PI
        * (f_b * h).exp()
        * (r_sub - r_inf * (1.0 - (-f_c * h).exp())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::BandSet;
    use std::sync::Arc;

    fn library() -> BottomLibrary {
        BottomLibrary::builtin().unwrap()
    }

    #[test]
    fn absorption_phi_is_p_at_440() {
        for p in [0.01, 0.05, 0.1, 1.0] {
            assert_eq!(absorption_phi(p, 440.0).unwrap(), p);
        }
    }

    #[test]
    fn absorption_phi_at_knots() {
        // ln(1) = 0, so the 550 nm knot returns a0(550) exactly
        assert_eq!(absorption_phi(1.0, 550.0).unwrap(), 0.19724);
        let v = absorption_phi(0.05226967, 655.0).unwrap();
        let expect = (0.27135 + 0.02374 * 0.05226967f64.ln()) * 0.05226967;
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.010520).abs() < 5e-6, "{v}");
    }

    #[test]
    fn absorption_phi_rejects_nonpositive() {
        assert!(absorption_phi(0.0, 500.0).is_err());
        assert!(absorption_phi(-0.1, 500.0).is_err());
    }

    #[test]
    fn gelbstoff_closed_form() {
        assert_eq!(absorption_gelbstoff(0.08, 440.0, 0.019), 0.08);
        let v = absorption_gelbstoff(0.06, 540.0, 0.015);
        assert!((v - 0.06 * (-1.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.013388).abs() < 5e-7);
        let v = absorption_gelbstoff(0.06, 340.0, 0.015);
        assert!((v - 0.26890).abs() < 5e-6);
    }

    #[test]
    fn backscatter_closed_form() {
        assert_eq!(backscatter_particles(0.013, 440.0, 2.3), 0.013);
        assert!((backscatter_particles(0.01, 880.0, 1.0) - 0.005).abs() < 1e-15);
        assert!((backscatter_particles(0.01, 220.0, 2.0) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn estimate_y_limits() {
        let bands = Arc::new(BandSet::new(vec![443.0, 483.0, 561.0, 655.0]).unwrap());
        // chi = 0: R(440) == R(750)
        let s = Spectrum::new(Arc::clone(&bands), vec![0.002, 0.01, 0.005, 0.002]).unwrap();
        let y = estimate_y(&s).unwrap();
        assert!((y - 3.44 * (1.0 - 3.17)).abs() < 1e-12);
        assert!((y + 7.4648).abs() < 1e-10);
        // huge chi: Y -> 3.44
        let s = Spectrum::new(Arc::clone(&bands), vec![10.0, 0.0021, 0.005, 0.002]).unwrap();
        assert!((estimate_y(&s).unwrap() - 3.44).abs() < 1e-6);
        // chi = ln(3.17)/2.01 gives Y = 0
        let chi = 3.17f64.ln() / 2.01;
        let s = Spectrum::new(Arc::clone(&bands), vec![chi, 1.0, 0.5, 0.0]).unwrap();
        assert!(estimate_y(&s).unwrap().abs() < 1e-12);
        // degenerate denominator
        let s = Spectrum::new(bands, vec![0.01, 0.002, 0.005, 0.002]).unwrap();
        assert!(estimate_y(&s).is_err());
    }

    #[test]
    fn iops_identities() {
        let w = WaterColumn::new(0.05, 0.06, 0.014, 0.0008).unwrap();
        let mut rng_state = 123456789u64;
        let mut next = move || {
            // xorshift; plenty for a spread of test points
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let lambda = 400.0 + 350.0 * next();
            let w = WaterColumn::with_shape(
                0.001 + 0.4 * next(),
                0.001 + 0.9 * next(),
                0.0001 + 0.2 * next(),
                0.0,
                0.011 + 0.01 * next(),
                3.0 * next(),
            )
            .unwrap();
            let i = total_iops(&w, lambda).unwrap();
            assert_eq!(i.k, i.a + i.b_b);
            assert!((i.u * (i.a + i.b_b) - i.b_b).abs() < 1e-14);
            assert!(i.u > 0.0 && i.u < 1.0);
        }
        // vanishing constituents: a -> a_w, b_b -> b_bw
        let w_small = WaterColumn::with_shape(1e-12, 1e-12, 1e-12, 0.0, w.s, 1.0).unwrap();
        let i = total_iops(&w_small, 550.0).unwrap();
        assert!((i.a - tables::pure_water_absorption().value_at(550.0).unwrap()).abs() < 1e-9);
        assert!((i.b_b - tables::pure_seawater_backscatter().value_at(550.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn deep_water_rrs_values() {
        assert_eq!(deep_water_rrs(0.0), 0.0);
        assert!((deep_water_rrs(0.1) - 0.0101).abs() < 1e-15);
        assert!((deep_water_rrs(0.5) - 0.0845).abs() < 1e-15);
        // monotone increasing on [0, 1)
        let mut prev = -1.0;
        for i in 0..=100 {
            let v = deep_water_rrs(i as f64 / 101.0);
            assert!(v >= 0.0 && v > prev);
            prev = v;
        }
    }

    #[test]
    fn path_elongation_values() {
        let (dc, db) = path_elongation(0.0);
        assert_eq!((dc, db), (1.03, 1.04));
        let (dc, db) = path_elongation(1.0);
        assert!((dc - 1.03 * 3.4f64.sqrt()).abs() < 1e-12);
        assert!((db - 1.04 * 6.4f64.sqrt()).abs() < 1e-12);
        // both monotone; D_B >= D_C beyond the crossover
        let mut prev = path_elongation(0.0);
        for i in 1..=1000 {
            let u = i as f64 / 1000.0;
            let cur = path_elongation(u);
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            if u >= 0.0086 {
                assert!(cur.1 >= cur.0, "u = {u}");
            }
            prev = cur;
        }
    }

    #[test]
    fn bottom_mix_examples() {
        let lib = library();
        // single type collapse
        let b = BottomState::new(vec![0.25], vec![1.0]).unwrap();
        let single = lib.subset(&[1]).unwrap();
        let v = bottom_albedo_mix(&b, &single, 550.0).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        // at the reference wavelength every spectrum is 1, so the mix is the
        // q-weighted mean of B
        let b = BottomState::new(vec![0.1, 0.3], vec![1.0, 3.0]).unwrap();
        let pair = lib.subset(&[0, 1]).unwrap();
        let v = bottom_albedo_mix(&b, &pair, 550.0).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        // identical B over identical spectra: q-independent
        let same = lib.subset(&[2, 2]).unwrap();
        let b1 = BottomState::new(vec![0.2, 0.2], vec![1.0, 9.0]).unwrap();
        let b2 = BottomState::new(vec![0.2, 0.2], vec![5.0, 0.5]).unwrap();
        let v1 = bottom_albedo_mix(&b1, &same, 500.0).unwrap();
        let v2 = bottom_albedo_mix(&b2, &same, 500.0).unwrap();
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn subsurface_rrs_depth_limits() {
        let lib = library().subset(&[1]).unwrap();
        let w = WaterColumn::new(0.05, 0.06, 0.014, 0.0008).unwrap();
        let b = BottomState::new(vec![0.3], vec![1.0]).unwrap();
        let geom = Geometry::from_sun_elevation_deg(55.0, 0.0).unwrap();
        // zero depth: bottom albedo over pi, exactly
        let r0 = subsurface_rrs(&w, &b, 0.0, &geom, &lib, 561.0).unwrap();
        let rho = bottom_albedo_mix(&b, &lib, 561.0).unwrap();
        assert!((r0 - rho / std::f64::consts::PI).abs() < 1e-15);
        // infinite depth: deep-water reflectance
        let r_deep = subsurface_rrs(&w, &b, 1e4, &geom, &lib, 561.0).unwrap();
        let iops = total_iops(&w, 561.0).unwrap();
        assert!((r_deep - deep_water_rrs(iops.u)).abs() < 1e-12);
    }

    #[test]
    fn subsurface_rrs_monotone_in_depth() {
        let lib = library().subset(&[1]).unwrap();
        let w = WaterColumn::new(0.05, 0.06, 0.014, 0.0).unwrap();
        let geom = Geometry::from_sun_elevation_deg(55.0, 0.0).unwrap();
        for lambda in [443.0, 561.0, 655.0] {
            let iops = total_iops(&w, lambda).unwrap();
            let r_inf = deep_water_rrs(iops.u);
            for b_mag in [0.02, 0.6] {
                let b = BottomState::new(vec![b_mag], vec![1.0]).unwrap();
                let rho = bottom_albedo_mix(&b, &lib, lambda).unwrap();
                let increasing = rho / std::f64::consts::PI < r_inf;
                let mut prev = subsurface_rrs(&w, &b, 0.0, &geom, &lib, lambda).unwrap();
                for i in 1..=60 {
                    let h = i as f64 * 0.5;
                    let cur = subsurface_rrs(&w, &b, h, &geom, &lib, lambda).unwrap();
                    if increasing {
                        assert!(cur > prev, "lambda {lambda} B {b_mag} h {h}");
                    } else {
                        assert!(cur < prev, "lambda {lambda} B {b_mag} h {h}");
                    }
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn surface_conversions_inverse_pair() {
        assert_eq!(subsurface_to_surface(0.0, 0.0013).unwrap(), 0.0013);
        let v = subsurface_to_surface(0.01, 0.0).unwrap();
        assert!((v - 0.005 / 0.985).abs() < 1e-15);
        assert!((surface_to_subsurface(v, 0.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(surface_to_subsurface(0.002, 0.002).unwrap(), 0.0);
        for i in 0..=200 {
            let r = 0.2 * i as f64 / 200.0;
            let surf = subsurface_to_surface(r, 0.0007).unwrap();
            let back = surface_to_subsurface(surf, 0.0007).unwrap();
            assert!((back - r).abs() < 1e-12, "r = {r}");
            let fwd = subsurface_to_surface(back, 0.0007).unwrap();
            assert!((fwd - surf).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_modelled_inverts_the_forward_model() {
        // The inversion multiplies by exp(f_B k H); the recoverable
        // precision degrades by exactly that amplification, so the
        // tolerance is the 1e-8 target or the amplified round-off floor,
        // whichever is larger.
        let lib = library();
        let w = WaterColumn::new(0.05, 0.06, 0.014, 0.0008).unwrap();
        let geom = Geometry::from_sun_elevation_deg(55.0, 0.0).unwrap();
        let b = BottomState::new(vec![0.05, 0.3, 0.1], vec![1.0, 2.0, 0.5]).unwrap();
        for lambda in [443.0, 483.0, 561.0, 655.0] {
            let iops = total_iops(&w, lambda).unwrap();
            let (_, f_b) = path_factors(&geom, iops.u, iops.k);
            for h in [0.0, 0.5, 3.0, 10.0, 30.0] {
                let rho_true = bottom_albedo_mix(&b, &lib, lambda).unwrap();
                let r = subsurface_rrs(&w, &b, h, &geom, &lib, lambda).unwrap();
                let surf = subsurface_to_surface(r, w.delta).unwrap();
                let rho = rho_modelled(&w, h, &geom, surf, lambda).unwrap();
                let noise_floor = std::f64::consts::PI * (f_b * h).exp() * 1e-14;
                let tol = (1e-8 * rho_true.abs().max(1.0)).max(noise_floor);
                assert!(
                    (rho - rho_true).abs() < tol,
                    "lambda {lambda} h {h}: {rho} vs {rho_true}"
                );
            }
        }
        // zero depth collapses to pi * r_rs
        let surf = subsurface_to_surface(0.004, w.delta).unwrap();
        let rho = rho_modelled(&w, 0.0, &geom, surf, 561.0).unwrap();
        assert!((rho - std::f64::consts::PI * 0.004).abs() < 1e-12);
    }

    #[test]
    fn rho_modelled_misattributes_deep_water() {
        // Feeding deep-water reflectance (the H = infinity limit) to the
        // inversion at a finite H leaves the unexplained water-column
        // residual attributed to the bottom: pi r_inf exp((f_B - f_C) k H),
        // growing with depth because D_B > D_C. Deep pixels must be flagged
        // rather than unmixed.
        let w = WaterColumn::new(0.05, 0.06, 0.014, 0.0).unwrap();
        let geom = Geometry::from_sun_elevation_deg(55.0, 0.0).unwrap();
        let iops = total_iops(&w, 561.0).unwrap();
        let r_inf = deep_water_rrs(iops.u);
        let surf = subsurface_to_surface(r_inf, 0.0).unwrap();
        let (f_c, f_b) = path_factors(&geom, iops.u, iops.k);
        for h in [10.0, 30.0] {
            let rho = rho_modelled(&w, h, &geom, surf, 561.0).unwrap();
            let residual = std::f64::consts::PI * r_inf * ((f_b - f_c) * h).exp();
            assert!((rho - residual).abs() < 1e-9 * residual.max(1.0), "{rho} vs {residual}");
            // nowhere near a genuine albedo of zero
            assert!(rho > std::f64::consts::PI * r_inf * 0.99);
        }
    }

    #[test]
    fn geometry_refraction() {
        let g = Geometry::from_sun_elevation_deg(90.0, 0.0).unwrap();
        assert!(g.theta_sun.abs() < 1e-12);
        let g = Geometry::from_sun_elevation_deg(55.22, 0.0).unwrap();
        let expect = ((90.0f64 - 55.22).to_radians().sin() / 1.34).asin();
        assert!((g.theta_sun - expect).abs() < 1e-15);
        assert_eq!(g.theta_view, 0.0);
        assert!(Geometry::from_sun_elevation_deg(0.0, 0.0).is_err());
        assert!(Geometry::new(-0.1, 0.0).is_err());
    }
}
