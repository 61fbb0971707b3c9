//! Raster and sounding I/O, run configuration, synthetic scenes and
//! regression reporting.
//!
//! The raster format is deliberately plain: raw band-sequential
//! little-endian float32 in a `.bin` file, with a JSON sidecar of the same
//! stem carrying dimensions, band centers and acquisition metadata.
//! Everything any stage writes can be read back by [`read_scene`] /
//! [`read_raster`].

mod config;
mod raster;
mod report;
mod soundings;
mod synth;

pub use config::{DepthSynthesis, RunConfig};
pub use raster::{
    read_raster, read_scene, write_raster, write_scene, Raster, Scene, SceneMetadata,
};
pub use report::{regression_report, RegressionReport};
pub use soundings::read_soundings;
pub use synth::{generate_synthetic_scene, DepthProfile, SynthSpec, SynthTruth};
