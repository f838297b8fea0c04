//! Proto-object based dynamic visual saliency.
//!
//! Video frames pass through phasic temporal filters, are split into nine
//! feature channels, decomposed into image pyramids, grouped through
//! border-ownership and grouping cells, and finally normalized and fused into
//! one saliency map per frame. A fixed-point model of a three-level hardware
//! dataflow, with a cycle and block-memory ledger, lives in [`hw`].
//!
//! ```
//! use podvs::{synth, EngineConfig, Pipeline, ResolutionMode};
//!
//! let cfg = EngineConfig::for_mode(ResolutionMode::Hw112);
//! let frames = synth::static_square(112, 84, 3);
//! let mut pipe = Pipeline::new(cfg).unwrap();
//! for f in &frames {
//!     let map = pipe.step(f.clone()).unwrap();
//!     assert!(map.max() <= 1.0 && map.min() >= 0.0);
//! }
//! ```

pub mod channels;
pub mod config;
pub mod error;
pub mod filter;
pub mod frame;
pub mod grouping;
pub mod hw;
pub mod io;
pub mod kernels;
pub mod metrics;
pub mod normalize;
pub mod pipeline;
pub mod pyramid;
pub mod synth;
pub mod temporal;

pub use channels::ChannelId;
pub use config::{load_config, validate_frame, EngineConfig, ResolutionMode};
pub use error::{Error, Result};
pub use frame::{FieldMap, FrameHistory, FrameRGB};
pub use pipeline::{run_sequence, Pipeline, SequenceOutput};

/// Crate version, recorded in map archives.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/temporal.md")]
    mod temporal {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/pyramid.md")]
    mod pyramid {}
    #[doc = include_str!("../../../book/src/grouping.md")]
    mod grouping {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/hardware.md")]
    mod hardware {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/files.md")]
    mod files {}
}
