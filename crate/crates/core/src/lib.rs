//! Per-frame valence/arousal estimation from face video: dataset handling,
//! label distribution smoothing, phase-difference motion features, a
//! two-stream recurrent regressor, training and CCC evaluation.

pub mod dataio;
pub mod error;
pub mod eval;
pub mod image;
pub mod lds;
pub mod model;
pub mod phasediff;
pub mod train;

pub use dataio::{Va, VideoSequence, SENTINEL};
pub use error::{Error, Result};
pub use image::Image;
