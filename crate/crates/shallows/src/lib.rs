//! Semi-analytical inversion of shallow-water remote-sensing reflectance.
//!
//! `shallows` retrieves bottom depth, water-column turbidity and bottom
//! composition from stacks of multispectral satellite scenes. The forward
//! model expresses subsurface reflectance as a water-column term plus a
//! bottom term attenuated over the two-way path; the inversion fits the
//! model jointly over a spatial neighbourhood of pixels and over multiple
//! acquisitions of the same site, which stabilises the retrieval on sensors
//! with only a handful of visible bands.
//!
//! The main moving parts:
//!
//! * [`spectral`] — wavelength grids, tabulated optical curves, band
//!   resampling and the bottom-albedo library.
//! * [`forward`] — the reflectance model itself and its inverse for the
//!   bottom albedo.
//! * [`metrics`] — spectral-match and depth-continuity error metrics.
//! * [`optim`] — bounded Nelder-Mead simplex with randomized restarts and
//!   the multi-start depth ladder.
//! * [`empirical`] — log-linear empirical depth initializer fitted against
//!   chart soundings.
//! * [`engine`] — per-region inversion: spectral-angle pixel ordering,
//!   cold/hot starts, the dynamic lookup table and the scene-stack driver.
//! * [`pipeline`] — scene-combination iterations, depth averaging and
//!   alignment, bottom unmixing and Monte-Carlo depth error.
//! * [`io`] — raster and sounding I/O, synthetic-scene generation,
//!   run configuration and regression reporting.
//!
//! A command-line interface over the full pipeline ships as the `shallows`
//! binary; see the book under `book/` for a guided tour.

pub mod empirical;
pub mod engine;
pub mod error;
pub mod forward;
pub mod io;
pub mod metrics;
pub mod optim;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
