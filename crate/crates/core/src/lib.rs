//! Grayscale image denoising by sparse coding over redundant dictionaries.
//!
//! The pipeline cuts a noisy image into overlapping patches, codes each
//! patch greedily over an over-complete dictionary (log-Gabor or DCT),
//! refines the dictionary on the noisy patches themselves (nonnegative
//! multiplicative updates, or K-SVD as a baseline) and averages the re-coded
//! patches back into an image.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod coding;
pub mod dictionary;
mod error;
pub mod imagecore;
pub mod patching;
pub mod pipeline;
pub mod update;

pub use coding::{Coder, CodingConfig, SparseCode};
pub use dictionary::{Dictionary, LogGaborParams};
pub use error::{Error, Result};
pub use imagecore::{Image, NoiseSpec};
pub use patching::{PatchGrid, PatchMatrix};
pub use pipeline::{denoise, denoise_with_reference, DenoiseConfig, DenoiseReport, DictKind};
pub use update::{FactorizationState, Updater};
