//! Bounded derivative-free minimization: Nelder-Mead simplex with
//! coordinate clamping, randomized restarts and multi-start support.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction 0.5,
//! shrink 0.5). Every proposed vertex is clamped into the box before
//! evaluation, so all iterates stay feasible. A fixed seed gives a
//! bitwise-identical trajectory.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Starting depths (m) for multi-start optimization when no depth prior
/// exists.
pub const DEPTH_LADDER: [f64; 17] = [
    0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.5, 15.0, 17.5, 20.0, 25.0, 30.0,
];

/// Elementwise box constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Invalid {
                what: "Bounds",
                why: format!("{} lower vs {} upper entries", lower.len(), upper.len()),
            });
        }
        for (i, (l, u)) in lower.iter().zip(upper.iter()).enumerate() {
            if !(l < u) {
                return Err(Error::Invalid {
                    what: "Bounds",
                    why: format!("lower[{i}] = {l} not below upper[{i}] = {u}"),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(self.upper.iter())) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }
}

/// Simplex search configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexConfig {
    /// Iteration budget per start (and per restart).
    pub max_iterations: usize,
    /// Converged when the simplex f-spread drops below this (absolute).
    pub f_tolerance: f64,
    /// Converged when the largest per-coordinate vertex spread drops below
    /// this (absolute).
    pub x_tolerance: f64,
    /// Randomized re-initializations around the best point after the first
    /// run converges.
    pub restarts: usize,
    pub rng_seed: u64,
    /// Initial simplex edge, as a fraction of each coordinate's bound range.
    pub initial_scale: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            f_tolerance: 1e-9,
            // absolute spread across vertices; 1e-5 resolves depth to well
            // under a centimetre without grinding on the flat tail
            x_tolerance: 1e-5,
            restarts: 1,
            rng_seed: 0,
            initial_scale: 0.1,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.f_tolerance > 0.0) || !(self.x_tolerance > 0.0) {
            return Err(Error::Invalid {
                what: "SimplexConfig",
                why: "tolerances and iteration budget must be positive".into(),
            });
        }
        Ok(())
    }

    /// Same configuration, reseeded (used to decorrelate ladder starts).
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..self.clone()
        }
    }
}

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// `n+1` affinely independent vertices around `x0`: vertex 0 is `x0`
/// itself, vertex `k` perturbs coordinate `k-1` by a random fraction of
/// `scale * (upper - lower)`, directed into the box. A zero scale degrades
/// to a minimal perturbation so the simplex never collapses.
pub fn random_initial_simplex<R: Rng>(
    x0: &[f64],
    bounds: &Bounds,
    scale: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut vertices = Vec::with_capacity(n + 1);
    vertices.push(x0.to_vec());
    for k in 0..n {
        let (lo, hi) = (bounds.lower[k], bounds.upper[k]);
        let range = hi - lo;
        let mag = (scale * range * rng.gen_range(0.25..=1.0)).max(1e-8 * range);
        let mut v = x0.to_vec();
        let positive: bool = rng.gen();
        let step = if positive { mag } else { -mag };
        let mut c = x0[k] + step;
        if c > hi || c < lo {
            c = x0[k] - step;
        }
        v[k] = c.clamp(lo, hi);
        if v[k] == x0[k] {
            // x0 sits on a bound and the magnitude overshoots the range:
            // step to the opposite bound instead.
            v[k] = if x0[k] - lo > hi - x0[k] { lo } else { hi };
        }
        vertices.push(v);
    }
    vertices
}

/// Nelder-Mead with box constraints and randomized restarts.
///
/// The start is clamped into the box; the objective must be finite there.
/// Non-finite values encountered during the search are treated as +inf and
/// rejected. The returned best never exceeds `f(x0)`.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    bounds: &Bounds,
    cfg: &SimplexConfig,
) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    if x0.len() != bounds.len() {
        return Err(Error::Usage(format!(
            "start has {} coordinates, bounds have {}",
            x0.len(),
            bounds.len()
        )));
    }
    let mut start = x0.to_vec();
    bounds.clamp(&mut start);

    let mut evaluations = 0usize;
    let eval = |f: &mut F, x: &[f64], evaluations: &mut usize| -> f64 {
        *evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let f0 = {
        evaluations += 1;
        let v = f(&start);
        if !v.is_finite() {
            return Err(Error::NonFiniteStart);
        }
        v
    };

    let mut best_x = start;
    let mut best_f = f0;
    let mut iterations = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = bounds.len();

    for _run in 0..=cfg.restarts {
        let mut simplex: Vec<(f64, Vec<f64>)> =
            random_initial_simplex(&best_x, bounds, cfg.initial_scale, &mut rng)
                .into_iter()
                .map(|v| (eval(&mut f, &v, &mut evaluations), v))
                .collect();
        // vertex 0 is the incumbent; reuse its value
        simplex[0].0 = best_f;

        for _ in 0..cfg.max_iterations {
            iterations += 1;
            simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

            let f_best = simplex[0].0;
            let f_worst = simplex[n].0;
            if (f_worst - f_best).abs() < cfg.f_tolerance {
                break;
            }
            let mut x_spread = 0.0f64;
            for k in 0..n {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (_, v) in &simplex {
                    lo = lo.min(v[k]);
                    hi = hi.max(v[k]);
                }
                x_spread = x_spread.max(hi - lo);
            }
            if x_spread < cfg.x_tolerance {
                break;
            }

            // centroid of all but the worst vertex
            let mut centroid = vec![0.0; n];
            for (_, v) in simplex.iter().take(n) {
                for (c, vi) in centroid.iter_mut().zip(v.iter()) {
                    *c += vi;
                }
            }
            for c in centroid.iter_mut() {
                *c /= n as f64;
            }

            let worst = simplex[n].1.clone();
            let f_second = simplex[n - 1].0;

            let propose = |coef: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(worst.iter())
                    .map(|(c, w)| c + coef * (c - w))
                    .collect();
                bounds.clamp(&mut p);
                p
            };

            let reflected = propose(1.0);
            let f_reflected = eval(&mut f, &reflected, &mut evaluations);

            if f_reflected < f_best {
                let expanded = propose(2.0);
                let f_expanded = eval(&mut f, &expanded, &mut evaluations);
                simplex[n] = if f_expanded < f_reflected {
                    (f_expanded, expanded)
                } else {
                    (f_reflected, reflected)
                };
            } else if f_reflected < f_second {
                simplex[n] = (f_reflected, reflected);
            } else {
                let (contracted, f_contracted) = if f_reflected < f_worst {
                    let c = propose(0.5);
                    let fc = eval(&mut f, &c, &mut evaluations);
                    (c, fc)
                } else {
                    let c = propose(-0.5);
                    let fc = eval(&mut f, &c, &mut evaluations);
                    (c, fc)
                };
                if f_contracted < f_reflected.min(f_worst) {
                    simplex[n] = (f_contracted, contracted);
                } else {
                    // shrink toward the best vertex
                    let anchor = simplex[0].1.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let mut v: Vec<f64> = anchor
                            .iter()
                            .zip(entry.1.iter())
                            .map(|(a, b)| a + 0.5 * (b - a))
                            .collect();
                        bounds.clamp(&mut v);
                        let fv = eval(&mut f, &v, &mut evaluations);
                        *entry = (fv, v);
                    }
                }
            }
        }

        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        if simplex[0].0 < best_f {
            best_f = simplex[0].0;
            best_x = simplex[0].1.clone();
        }
    }

    Ok(MinimizeResult {
        x: best_x,
        f: best_f,
        iterations,
        evaluations,
    })
}

/// Run [`minimize`] from each start and keep the best result; iteration and
/// evaluation counts are totals across starts. Start `i` is reseeded
/// deterministically from the base seed.
pub fn multi_start_minimize<F>(
    mut f: F,
    starts: &[Vec<f64>],
    bounds: &Bounds,
    cfg: &SimplexConfig,
) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    if starts.is_empty() {
        return Err(Error::Usage("multi_start_minimize: no starts given".into()));
    }
    let mut best: Option<MinimizeResult> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    for (i, start) in starts.iter().enumerate() {
        let seed = cfg
            .rng_seed
            .wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let result = minimize(&mut f, start, bounds, &cfg.reseeded(seed))?;
        iterations += result.iterations;
        evaluations += result.evaluations;
        let better = best.as_ref().map_or(true, |b| result.f < b.f);
        if better {
            best = Some(result);
        }
    }
    let mut best = best.unwrap();
    best.iterations = iterations;
    best.evaluations = evaluations;
    Ok(best)
}
