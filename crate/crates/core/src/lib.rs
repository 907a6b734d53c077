//! Gender-adversarial training for speech-based mental-health classifiers.
//!
//! The crate is organised bottom-up:
//!
//! * [`ndnum`] dense tensors and a small reverse-mode autodiff tape, including
//!   the gradient-reversal node.
//! * [`model`] the encoder / classifier / discriminator stack over fixed-size
//!   input embeddings.
//! * [`objective`] weighted cross-entropy and the combined adversarial loss.
//! * [`optim`] Adam, cosine learning rate, lambda ramp and EMA shadow weights.
//! * [`datapipe`] transcript parsing, segmentation, WAV slicing, manifests and
//!   batching.
//! * [`synthgen`] synthetic gender-biased embeddings.
//! * [`trainer`] fine-tuning and adversarial training loops plus checkpoints.
//! * [`evalkit`] F1 metrics, gender-stratified reports, linear gender probe and
//!   embedding export.

pub mod datapipe;
pub mod error;
pub mod evalkit;
pub mod model;
pub mod ndnum;
pub mod objective;
pub mod optim;
pub mod synthgen;
pub mod trainer;
pub mod util;

pub use error::{Error, Result};
