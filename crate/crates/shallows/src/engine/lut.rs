//! The dynamic lookup table: a small FIFO store of recent high-quality
//! fits, queried by spectral angle before the optimizer runs.
//!
//! Entries are keyed by the per-scene center spectra of the region they
//! were fitted on. Because pixels are traversed in order of spectral angle
//! above the deep-water mean, spectrally similar pixels arrive together
//! and a 256-entry table covers the overwhelming majority of them.

use std::collections::VecDeque;

use crate::engine::{FitSource, ModelFit};
use crate::metrics::sam_angle;

/// Fixed entry budget; small enough that a linear scan stays cheap.
pub const LUT_CAPACITY: usize = 256;

/// Consecutive insertion rejections before the gate is relaxed by 10%.
const ADAPT_AFTER_REJECTS: u32 = 100;

#[derive(Debug, Clone)]
pub struct LutEntry {
    /// Per-scene center spectra of the fitted region.
    pub key: Vec<Vec<f64>>,
    pub fit: ModelFit,
    /// Fit quality at insertion, percent.
    pub error: f64,
    /// Monotone insertion counter.
    pub timestamp: u64,
    /// Tide offset of the first scene at insertion time, m.
    pub tide0: f64,
}

#[derive(Debug)]
pub struct DynamicLut {
    entries: VecDeque<LutEntry>,
    capacity: usize,
    insertion_threshold: f64,
    hard_cap: f64,
    match_threshold: f64,
    consecutive_rejects: u32,
    counter: u64,
}

impl DynamicLut {
    /// Gate starts at `max(1.5, 1.125 n_scenes)` percent and may adapt
    /// upward, never beyond `2.5 + 2.5 n_scenes` percent.
    pub fn new(n_scenes: usize, match_threshold: f64) -> Self {
        Self::with_capacity(n_scenes, match_threshold, LUT_CAPACITY)
    }

    pub(crate) fn with_capacity(
        n_scenes: usize,
        match_threshold: f64,
        capacity: usize,
    ) -> Self {
        let n = n_scenes as f64;
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
            insertion_threshold: (1.125 * n).max(1.5),
            hard_cap: 2.5 + 2.5 * n,
            match_threshold,
            consecutive_rejects: 0,
            counter: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Current insertion gate, percent.
    pub fn insertion_threshold(&self) -> f64 {
        self.insertion_threshold
    }

    /// Mean spectral angle between two per-scene keys.
    fn key_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> Option<f64> {
        let mut sum = 0.0;
        for (x, y) in a.iter().zip(b.iter()) {
            sum += sam_angle(x, y).ok()?;
        }
        Some(sum / a.len() as f64)
    }

    /// Best-matching stored fit, if its mean spectral angle to the query
    /// key is below the match threshold. Depths are recentred by the tide
    /// difference between the stored and querying scene stacks; nothing is
    /// re-optimised.
    pub fn query(&self, key: &[Vec<f64>], query_tide0: f64) -> Option<ModelFit> {
        let mut best: Option<(f64, &LutEntry)> = None;
        for entry in &self.entries {
            if entry.key.len() != key.len() {
                continue;
            }
            let Some(angle) = Self::key_angle(&entry.key, key) else {
                continue;
            };
            if angle < self.match_threshold && best.as_ref().map_or(true, |(a, _)| angle < *a) {
                best = Some((angle, entry));
            }
        }
        best.map(|(_, entry)| {
            let mut fit = entry.fit.clone();
            let tide_shift = entry.tide0 - query_tide0;
            for h in fit.h.iter_mut() {
                *h += tide_shift;
            }
            fit.source = FitSource::Lut;
            fit.iterations = 0;
            fit
        })
    }

    /// Insert a fit if its quality passes the gate; FIFO-evict at capacity.
    /// Rejections count toward the gate adaptation. Returns whether the fit
    /// was stored.
    pub fn insert(&mut self, key: Vec<Vec<f64>>, fit: ModelFit, tide0: f64) -> bool {
        let error = fit.e_photic_pct;
        if !error.is_finite() || error >= self.insertion_threshold {
            self.consecutive_rejects += 1;
            if self.consecutive_rejects >= ADAPT_AFTER_REJECTS {
                self.insertion_threshold = (self.insertion_threshold * 1.1).min(self.hard_cap);
                self.consecutive_rejects = 0;
            }
            return false;
        }
        self.consecutive_rejects = 0;
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.counter += 1;
        self.entries.push_back(LutEntry {
            key,
            fit,
            error,
            timestamp: self.counter,
            tide0,
        });
        true
    }
}
