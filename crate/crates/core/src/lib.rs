//! Spectral hint units and the frequency-domain machinery around them.
//!
//! * [`tensor`] and [`fft`]: real/complex tensors and the 2D real FFT in the
//!   row-shifted half-spectrum layout (DC at `(H/2, 0)`).
//! * [`hefilter`]: heterogeneous filtering over an anchor grid.
//! * [`split`]: vanilla and Gaussian spectral splits and the hint pyramid.
//! * [`shu`]: the spectral hint unit itself.
//! * [`grad`]: backward passes, finite differences and the fitting demo.
//! * [`mask`]: free-form inpainting masks.
//! * [`imageio`] and [`sht`]: PGM/PPM images and the `.sht` tensor format.

pub mod container;
pub mod error;
pub mod fft;
pub mod grad;
pub mod hefilter;
pub mod imageio;
pub mod mask;
pub mod rng;
pub mod sht;
pub mod shu;
pub mod split;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;
