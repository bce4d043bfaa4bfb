//! Scintillating-grid stimulus synthesis, CNN activation probing and
//! representational-dissimilarity deviation analysis.
//!
//! The pipeline is: render a stimulus sweep ([`stimuli`]), run every image
//! through a network ([`netcore`]), measure per-layer dissimilarity against
//! the reference image ([`rsa`]) and score departures from linear growth
//! ([`deviation`]).

pub mod deviation;
pub mod imaging;
pub mod netcore;
pub mod rsa;
pub mod stimuli;

/// Side length of the square network input, in pixels.
pub const INPUT_SIZE: usize = 224;
