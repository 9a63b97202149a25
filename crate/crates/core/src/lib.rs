//! Graph weighted models over pictures.
//!
//! - [`tensor`]: dense tensors and contraction primitives.
//! - [`gwm`]: the picture model, its grid-sweep evaluation, gradients and gauge maps.
//! - [`wpa`]: weighted picture automata with brute-force run semantics.
//! - [`languages`]: Bars & Stripes and Shifting Bits, plus dataset generation.
//! - [`training`]: losses, Adam, clipping and the mini-batch loop.
//! - [`cli`]: the command implementations behind the `gwm` binary.

pub mod cli;
pub mod error;
pub mod gwm;
mod kernel;
pub mod languages;
pub mod picture;
pub mod tensor;
mod textio;
pub mod training;
pub mod wpa;

pub use error::{Error, Result};
pub use gwm::{GradientAccumulator, GwmModel, Side};
pub use picture::Picture;
pub use tensor::DenseTensor;
