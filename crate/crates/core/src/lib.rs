//! Learning discrete flow maps of chaotic systems from trajectory data.
//!
//! The crate is organised as a pipeline of small, file-friendly pieces:
//!
//! * [`dynamics`] – Lorenz 63 / Lorenz 96 right-hand sides and a fixed-step RK4 integrator.
//! * [`trajectory`] – the uniformly sampled [`Trajectory`] type and its text/binary formats.
//! * [`dataset`] – observation projection and randomized memory-window sampling.
//! * [`flownet`] – the memory-based residual network, exact BPTT gradients, Adam and training.
//! * [`rollout`] – autonomous long-horizon prediction and pointwise error.
//! * [`chaostats`] – delay embedding, ACF, histograms, correlation dimension,
//!   approximate entropy, Lyapunov exponent and report comparison.
//! * [`pipeline`] – experiment configs, presets and file-based stages used by the `chaosflow` binary.

pub mod chaostats;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod flownet;
pub mod pipeline;
pub mod rollout;
pub mod trajectory;

mod fingerprint;

pub use error::{Error, Result};
pub use fingerprint::{fingerprint_bytes, fingerprint_file};
pub use trajectory::Trajectory;
