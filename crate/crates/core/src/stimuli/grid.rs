use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{uniform_levels, Result, StimulusError, Sweep, SWEEP_LEVELS};
use crate::imaging::{resize, Image};
use crate::INPUT_SIZE;

/// Full parameterization of a Scintillating-Grid stimulus.
///
/// Geometry is in canvas pixels, before the final resize to the network
/// input size. Dots sit at the intersections of the line lattice: the
/// centre of dot `(r, c)` is `(floor(cell_w * (c + 0.5)) + dx,
/// floor(cell_h * (r + 0.5)) + dy)` with `cell_w = canvas / dot_cols`.
/// Every dot therefore has the same sub-pixel phase and covers the same
/// number of pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub canvas: usize,
    pub dot_rows: usize,
    pub dot_cols: usize,
    /// Outer diameter of a dot, border included.
    pub dot_diameter: f64,
    pub dot_whiteness: f64,
    /// Width of the ring at the inside edge of each dot.
    pub border_width: f64,
    pub border_whiteness: f64,
    pub line_width: f64,
    pub line_whiteness: f64,
    pub background_whiteness: f64,
    /// Overrides `background_whiteness` with a colored background.
    pub background_color: Option<[f64; 3]>,
    pub translation: (f64, f64),
    pub lines_enabled: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            canvas: 768,
            dot_rows: 5,
            dot_cols: 5,
            dot_diameter: 30.0,
            dot_whiteness: 1.0,
            border_width: 1.0,
            border_whiteness: 0.8,
            line_width: 15.0,
            line_whiteness: 0.5,
            background_whiteness: 0.0,
            background_color: None,
            translation: (0.0, 0.0),
            lines_enabled: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(StimulusError::InvalidSpec(msg));
        if self.canvas == 0 {
            return invalid("canvas must be at least 1 pixel".into());
        }
        if self.dot_rows == 0 || self.dot_cols == 0 {
            return invalid("dot array must have at least one row and column".into());
        }
        let unit = [
            ("dot_whiteness", self.dot_whiteness),
            ("border_whiteness", self.border_whiteness),
            ("line_whiteness", self.line_whiteness),
            ("background_whiteness", self.background_whiteness),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        if let Some(rgb) = self.background_color {
            if rgb.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return invalid(format!("background_color {rgb:?} is outside [0, 1]"));
            }
        }
        for (name, v) in [
            ("dot_diameter", self.dot_diameter),
            ("border_width", self.border_width),
            ("line_width", self.line_width),
        ] {
            if !v.is_finite() || v < 0.0 {
                return invalid(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        if self.dot_diameter <= 2.0 * self.border_width {
            return invalid(format!(
                "dot_diameter {} must exceed twice the border width {}",
                self.dot_diameter, self.border_width
            ));
        }
        if !self.translation.0.is_finite() || !self.translation.1.is_finite() {
            return invalid("translation must be finite".into());
        }
        Ok(())
    }

    pub fn dot_count(&self) -> usize {
        self.dot_rows * self.dot_cols
    }

    /// Dot centres in raster order (row by row).
    pub fn dot_centers(&self) -> Vec<(f64, f64)> {
        let (xs, ys) = self.lattice();
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
            .collect()
    }

    /// Column x-coordinates and row y-coordinates of the lattice.
    fn lattice(&self) -> (Vec<f64>, Vec<f64>) {
        let cell_w = self.canvas as f64 / self.dot_cols as f64;
        let cell_h = self.canvas as f64 / self.dot_rows as f64;
        let xs = (0..self.dot_cols)
            .map(|c| (cell_w * (c as f64 + 0.5)).floor() + self.translation.0)
            .collect();
        let ys = (0..self.dot_rows)
            .map(|r| (cell_h * (r as f64 + 0.5)).floor() + self.translation.1)
            .collect();
        (xs, ys)
    }

    fn background_rgb(&self) -> [f64; 3] {
        self.background_color
            .unwrap_or([self.background_whiteness; 3])
    }
}

/// Pixel indices whose centres fall in `[center - width/2, center + width/2)`.
fn band(center: f64, width: f64, len: usize) -> std::ops::Range<usize> {
    let lo = center - width / 2.0;
    let hi = center + width / 2.0;
    // Pixel i has centre i + 0.5.
    let first = (lo - 0.5).ceil().max(0.0);
    let end = (hi - 0.5).ceil().clamp(0.0, len as f64);
    if first >= end {
        0..0
    } else {
        first as usize..end as usize
    }
}

/// Renders the grid at canvas resolution with one whiteness per dot (raster order).
pub fn render_canvas_with_levels(spec: &GridSpec, dot_levels: &[f64]) -> Result<Image> {
    spec.validate()?;
    if dot_levels.len() != spec.dot_count() {
        return Err(StimulusError::InvalidSpec(format!(
            "{} dot levels given for {} dots",
            dot_levels.len(),
            spec.dot_count()
        )));
    }
    if let Some(v) = dot_levels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(StimulusError::InvalidSpec(format!(
            "dot whiteness {v} is outside [0, 1]"
        )));
    }

    let n = spec.canvas;
    let mut img = Image::filled(n, n, spec.background_rgb())?;
    let (xs, ys) = spec.lattice();

    if spec.lines_enabled {
        let line = [spec.line_whiteness; 3];
        for &cy in &ys {
            for y in band(cy, spec.line_width, n) {
                for x in 0..n {
                    img.set_pixel(x, y, line);
                }
            }
        }
        for &cx in &xs {
            for x in band(cx, spec.line_width, n) {
                for y in 0..n {
                    img.set_pixel(x, y, line);
                }
            }
        }
    }

    let outer = spec.dot_diameter / 2.0;
    let inner = outer - spec.border_width;
    let (outer2, inner2) = (outer * outer, inner * inner);
    for ((cx, cy), &level) in spec.dot_centers().into_iter().zip(dot_levels) {
        let rows = band(cy, spec.dot_diameter, n);
        let cols = band(cx, spec.dot_diameter, n);
        for y in rows {
            let dy = y as f64 + 0.5 - cy;
            for x in cols.clone() {
                let dx = x as f64 + 0.5 - cx;
                let r2 = dx * dx + dy * dy;
                if r2 <= inner2 {
                    img.set_pixel(x, y, [level; 3]);
                } else if r2 <= outer2 {
                    img.set_pixel(x, y, [spec.border_whiteness; 3]);
                }
            }
        }
    }
    Ok(img)
}

/// Renders the grid at canvas resolution, every dot at `spec.dot_whiteness`.
pub fn render_canvas(spec: &GridSpec) -> Result<Image> {
    render_canvas_with_levels(spec, &vec![spec.dot_whiteness; spec.dot_count()])
}

/// Renders the grid and area-resizes it to the network input size.
pub fn render_grid(spec: &GridSpec) -> Result<Image> {
    let canvas = render_canvas(spec)?;
    Ok(resize(&canvas, INPUT_SIZE, INPUT_SIZE)?)
}

/// The standard 21-level dot whiteness sweep. Element 0 has black dots.
pub fn whiteness_sweep(spec: &GridSpec) -> Result<Sweep> {
    whiteness_sweep_with(spec, SWEEP_LEVELS)
}

pub fn whiteness_sweep_with(spec: &GridSpec, levels: usize) -> Result<Sweep> {
    if levels < 2 {
        return Err(StimulusError::InvalidSpec(format!(
            "a sweep needs at least 2 levels, got {levels}"
        )));
    }
    let gammas = uniform_levels(levels);
    let images = gammas
        .iter()
        .map(|&g| {
            render_grid(&GridSpec {
                dot_whiteness: g,
                ..spec.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        levels: gammas,
        images,
    })
}

pub fn no_lines_variant(spec: &GridSpec) -> GridSpec {
    GridSpec {
        lines_enabled: false,
        ..spec.clone()
    }
}

/// Order in which dots turn white in the dot-count experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum DotOrder {
    #[default]
    Raster,
    Shuffled(u64),
}

fn whitening_order(count: usize, order: DotOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..count).collect();
    if let DotOrder::Shuffled(seed) = order {
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    idx
}

/// Canvas-resolution images with 0, 1, ..., n white dots; remaining dots black.
pub fn dot_count_canvases(spec: &GridSpec, order: DotOrder) -> Result<Vec<Image>> {
    let n = spec.dot_count();
    let order = whitening_order(n, order);
    let mut levels = vec![0.0; n];
    let mut out = Vec::with_capacity(n + 1);
    out.push(render_canvas_with_levels(spec, &levels)?);
    for &dot in &order {
        levels[dot] = 1.0;
        out.push(render_canvas_with_levels(spec, &levels)?);
    }
    Ok(out)
}

/// Dot-count sequence at network input size; element `k` has `k` white dots.
pub fn dot_count_sequence(spec: &GridSpec, order: DotOrder) -> Result<Sweep> {
    let canvases = dot_count_canvases(spec, order)?;
    let images = canvases
        .iter()
        .map(|c| resize(c, INPUT_SIZE, INPUT_SIZE))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Sweep {
        levels: (0..images.len()).map(|k| k as f64).collect(),
        images,
    })
}
