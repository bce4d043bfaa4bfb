use super::{uniform_levels, Result, StimulusError, Sweep};
use crate::imaging::{Image, CHANNELS};

/// A set of pixels selected for whiteness manipulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    members: Vec<bool>,
    threshold: f64,
    fraction: f64,
}

impl Mask {
    /// Builds a mask from a membership vector; `threshold` is informational.
    pub fn from_members(width: usize, height: usize, members: Vec<bool>, threshold: f64) -> Result<Self> {
        if members.len() != width * height {
            return Err(StimulusError::InvalidSpec(format!(
                "mask of {} members for a {width}x{height} image",
                members.len()
            )));
        }
        let count = members.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(StimulusError::InvalidSpec("mask has no member pixels".into()));
        }
        Ok(Self {
            width,
            height,
            fraction: count as f64 / members.len() as f64,
            members,
            threshold,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    /// Luminance threshold that produced the mask.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }
}

/// Selects the approximately-white region of an image.
///
/// Thresholds `t = 1.00, 0.99, ..., 0.00` are tried in order; the first one
/// for which the fraction of pixels with channel-mean luminance `>= t` lies
/// in `[lo, hi]` wins. The fraction never decreases as `t` drops, so once it
/// exceeds `hi` the search stops.
pub fn select_white_mask(img: &Image, lo: f64, hi: f64) -> Result<Mask> {
    if !(lo > 0.0 && lo < hi && hi <= 1.0) {
        return Err(StimulusError::InvalidSpec(format!(
            "mask band [{lo}, {hi}] must satisfy 0 < lo < hi <= 1"
        )));
    }
    let total = img.pixel_count();
    let lum: Vec<f64> = (0..total).map(|p| img.luminance_at(p)).collect();
    for step in 0..=100u32 {
        let t = f64::from(100 - step) / 100.0;
        let count = lum.iter().filter(|&&l| l >= t).count();
        let fraction = count as f64 / total as f64;
        if fraction > hi {
            break;
        }
        if fraction >= lo {
            let members = lum.iter().map(|&l| l >= t).collect();
            return Mask::from_members(img.width(), img.height(), members, t);
        }
    }
    Err(StimulusError::NoWhiteRegion { lo, hi })
}

/// Sets every member pixel to gray `gamma`; other pixels are untouched.
pub fn apply_mask_whiteness(img: &Image, mask: &Mask, gamma: f64) -> Result<Image> {
    if (mask.width, mask.height) != (img.width(), img.height()) {
        return Err(StimulusError::MaskMismatch {
            mask_width: mask.width,
            mask_height: mask.height,
            image_width: img.width(),
            image_height: img.height(),
        });
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(StimulusError::InvalidSpec(format!(
            "mask whiteness {gamma} is outside [0, 1]"
        )));
    }
    let mut data = img.data().to_vec();
    for (px, _) in mask.members.iter().enumerate().filter(|(_, &m)| m) {
        data[px * CHANNELS..(px + 1) * CHANNELS].fill(gamma);
    }
    Ok(Image::from_data(img.width(), img.height(), data)?)
}

/// Sweeps the masked region over `levels` uniform whiteness values.
pub fn mask_sweep(img: &Image, mask: &Mask, levels: usize) -> Result<Sweep> {
    if levels < 2 {
        return Err(StimulusError::InvalidSpec(format!(
            "a sweep needs at least 2 levels, got {levels}"
        )));
    }
    let gammas = uniform_levels(levels);
    let images = gammas
        .iter()
        .map(|&g| apply_mask_whiteness(img, mask, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        levels: gammas,
        images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten_percent_white() -> Image {
        let (w, h) = (20, 10);
        let data = (0..w * h)
            .flat_map(|p| if p % 10 == 3 { [1.0; 3] } else { [0.0; 3] })
            .collect();
        Image::from_data(w, h, data).unwrap()
    }

    #[test]
    fn selects_exact_white_pixels() {
        let img = ten_percent_white();
        let mask = select_white_mask(&img, 0.05, 0.20).unwrap();
        assert_eq!(mask.fraction(), 0.10);
        assert_eq!(mask.threshold(), 1.0);
        for (p, &m) in mask.members().iter().enumerate() {
            assert_eq!(m, p % 10 == 3);
        }
    }

    #[test]
    fn black_image_has_no_white_region() {
        let img = Image::gray(16, 16, 0.0).unwrap();
        assert!(matches!(
            select_white_mask(&img, 0.05, 0.20),
            Err(StimulusError::NoWhiteRegion { .. })
        ));
    }

    #[test]
    fn gradient_stops_inside_band() {
        // Luminance ramps from 0 to 1 across 100 columns.
        let (w, h) = (100, 4);
        let data = (0..w * h)
            .flat_map(|p| {
                let v = (p % w) as f64 / (w - 1) as f64;
                [v; 3]
            })
            .collect();
        let img = Image::from_data(w, h, data).unwrap();
        let mask = select_white_mask(&img, 0.05, 0.20).unwrap();
        assert!((0.05..=0.20).contains(&mask.fraction()));
        let recount = mask.members().iter().filter(|&&m| m).count();
        assert_eq!(recount as f64 / (w * h) as f64, mask.fraction());
        assert!(mask.threshold() < 1.0);
    }

    #[test]
    fn band_overshoot_is_an_error() {
        // Half the image is white: the first threshold already exceeds hi.
        let data = (0..16).flat_map(|p| [if p < 8 { 1.0 } else { 0.0 }; 3]).collect();
        let img = Image::from_data(4, 4, data).unwrap();
        assert!(matches!(
            select_white_mask(&img, 0.05, 0.20),
            Err(StimulusError::NoWhiteRegion { .. })
        ));
        assert!(select_white_mask(&img, 0.3, 0.2).is_err());
    }

    #[test]
    fn apply_sets_members_only() {
        let img = ten_percent_white();
        let mask = select_white_mask(&img, 0.05, 0.20).unwrap();
        let black = apply_mask_whiteness(&img, &mask, 0.0).unwrap();
        let member_lum: f64 = (0..img.pixel_count())
            .filter(|&p| mask.members()[p])
            .map(|p| img.luminance_at(p) * 3.0)
            .sum();
        assert_eq!(black.l1_distance(&img), member_lum);
        let again = apply_mask_whiteness(&black, &mask, 0.0).unwrap();
        assert_eq!(again, black);
    }

    #[test]
    fn sweep_distance_is_linear() {
        let img = ten_percent_white();
        let mask = select_white_mask(&img, 0.05, 0.20).unwrap();
        let sweep = mask_sweep(&img, &mask, 21).unwrap();
        let members = mask.member_count() as f64;
        for (g, im) in sweep.levels.iter().zip(&sweep.images) {
            let d = im.l1_distance(sweep.reference());
            assert!((d - 3.0 * members * g).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_mask_is_rejected() {
        let img = ten_percent_white();
        let mask = select_white_mask(&img, 0.05, 0.20).unwrap();
        let other = Image::gray(5, 5, 0.0).unwrap();
        assert!(matches!(
            apply_mask_whiteness(&other, &mask, 0.5),
            Err(StimulusError::MaskMismatch { .. })
        ));
    }
}
