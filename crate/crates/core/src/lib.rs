//! Compressive sensing codec with multi-level encryption and reversible
//! de-identification of grayscale frames.
//!
//! A frame is sensed with a secret partial-noiselet matrix `A` whose columns
//! over the privacy region are randomly sign-flipped; the flip pattern is
//! ternary coded and hidden in the measurements through an embedding matrix
//! `B`. Holders of `A` alone reconstruct the scene with the region
//! scrambled; holders of `A` and `B` strip the hidden message, recover the
//! flips and reconstruct the full frame.

pub mod error;
pub mod image;
pub mod keys;
pub mod mask_codec;
pub mod metrics;
pub mod operators;
pub mod pipeline;
pub mod solver;
pub mod synthetic;
pub mod transforms;

pub use error::{Error, Result};
pub use image::GrayImage;
pub use keys::{EmbeddingKey, Key, MaskSeed, SensingKey};
pub use mask_codec::{FlipSet, Rect, RegionSet};
pub use metrics::{PsnrReport, ReportRow, User};
pub use pipeline::{DecodeOptions, DecodeResult, EncodeParams, Encoding, EncryptedPayload};
pub use solver::{SolverOptions, SolverReport};
