//! Scintillating-grid stimuli, whiteness sweeps, dot-count sequences and
//! masked variants of arbitrary images.

mod grid;
mod mask;
mod spec_file;

use thiserror::Error;

use crate::imaging::{Image, ImagingError};

pub use grid::{
    dot_count_canvases, dot_count_sequence, no_lines_variant, render_canvas,
    render_canvas_with_levels, render_grid, whiteness_sweep, whiteness_sweep_with, DotOrder,
    GridSpec,
};
pub use mask::{apply_mask_whiteness, mask_sweep, select_white_mask, Mask};

/// Number of whiteness levels in the standard sweep (0.00, 0.05, ..., 1.00).
pub const SWEEP_LEVELS: usize = 21;

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("no luminance threshold selects between {lo} and {hi} of the pixels")]
    NoWhiteRegion { lo: f64, hi: f64 },
    #[error("mask is {mask_width}x{mask_height} but image is {image_width}x{image_height}")]
    MaskMismatch {
        mask_width: usize,
        mask_height: usize,
        image_width: usize,
        image_height: usize,
    },
    #[error("grid spec line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, StimulusError>;

/// Images ordered by an increasing control variable, with the first image
/// serving as the reference.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub levels: Vec<f64>,
    pub images: Vec<Image>,
}

impl Sweep {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn reference(&self) -> &Image {
        &self.images[0]
    }
}

/// `levels` evenly spaced values from 0 to 1 inclusive, computed as `k / (levels - 1)`.
pub fn uniform_levels(levels: usize) -> Vec<f64> {
    assert!(levels >= 2, "a sweep needs at least two levels");
    let steps = (levels - 1) as f64;
    (0..levels).map(|k| k as f64 / steps).collect()
}
