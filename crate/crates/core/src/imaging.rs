//! RGB whiteness rasters, area-averaging resampling and raster I/O.
//!
//! Samples are stored as `f64` whiteness in `[0, 1]`, row-major with the
//! three channels interleaved. Files are read and written as binary portable
//! pixmaps (`P6`) or PNG.
//!
//! # P6 layout
//!
//! ```text
//! "P6" <ws> width <ws> height <ws> maxval <one whitespace byte> samples
//! ```
//!
//! `#` comments are accepted in the header before `maxval`. `maxval` is 255
//! (one byte per sample) or 65535 (two bytes per sample, big-endian). Samples
//! follow in row-major order, R G B per pixel. Files written by this module
//! always use `maxval = 65535` and a header of the form `P6\n{w} {h}\n65535\n`.

use std::fs;
use std::path::Path;

use thiserror::Error;

/// Number of channels in every [`Image`].
pub const CHANNELS: usize = 3;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("invalid dimension {width}x{height}")]
    InvalidDimension { width: usize, height: usize },
    #[error("sample {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed image {path}: {reason}")]
    Format { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// A 3-channel whiteness raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from interleaved samples, validating length and range.
    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidDimension { width, height });
        }
        let expected = width * height * CHANNELS;
        if data.len() != expected {
            return Err(ImagingError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImagingError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image filled with one RGB value.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidDimension { width, height });
        }
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * CHANNELS)
            .collect();
        Self::from_data(width, height, data)
    }

    /// Gray image with every channel at `value`.
    pub fn gray(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::filled(width, height, [value; 3])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Channel mean of the pixel at a flat pixel index.
    pub fn luminance_at(&self, pixel: usize) -> f64 {
        let i = pixel * CHANNELS;
        (self.data[i] + self.data[i + 1] + self.data[i + 2]) / 3.0
    }

    /// Sets a pixel; values are clamped into `[0, 1]`.
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        for (c, v) in rgb.iter().enumerate() {
            self.data[i + c] = v.clamp(0.0, 1.0);
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Sum of absolute sample differences.
    pub fn l1_distance(&self, other: &Image) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "l1_distance on images of different size"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Integer overlaps of each output index onto source indices along one axis.
///
/// Coordinates are scaled so every boundary is an integer: output pixel `o`
/// covers `[o * src_len, (o + 1) * src_len)` and source pixel `s` covers
/// `[s * dst_len, (s + 1) * dst_len)`. The overlaps of one output sum to
/// `src_len`.
fn axis_overlaps(src_len: usize, dst_len: usize) -> Vec<Vec<(usize, f64)>> {
    let src = src_len as u64;
    let dst = dst_len as u64;
    (0..dst)
        .map(|o| {
            let lo = o * src;
            let hi = (o + 1) * src;
            let first = lo / dst;
            let last = (hi - 1) / dst;
            (first..=last)
                .map(|s| {
                    let s_lo = (s * dst).max(lo);
                    let s_hi = ((s + 1) * dst).min(hi);
                    (s as usize, (s_hi - s_lo) as f64)
                })
                .collect()
        })
        .collect()
}

/// Area-averaging resize: every output pixel is the mean of the source
/// rectangle it covers.
pub fn resize(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(ImagingError::InvalidDimension { width, height });
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let wx = axis_overlaps(img.width, width);
    let wy = axis_overlaps(img.height, height);
    let norm_x = img.width as f64;
    let norm_y = img.height as f64;

    // Horizontal pass: img.height rows of `width` pixels.
    let mut horiz = vec![0.0; img.height * width * CHANNELS];
    for y in 0..img.height {
        let src_row = &img.data[y * img.width * CHANNELS..(y + 1) * img.width * CHANNELS];
        let dst_row = &mut horiz[y * width * CHANNELS..(y + 1) * width * CHANNELS];
        for (ox, overlaps) in wx.iter().enumerate() {
            for c in 0..CHANNELS {
                let acc: f64 = overlaps
                    .iter()
                    .map(|&(sx, w)| w * src_row[sx * CHANNELS + c])
                    .sum();
                dst_row[ox * CHANNELS + c] = acc / norm_x;
            }
        }
    }

    let mut out = vec![0.0; height * width * CHANNELS];
    let row_len = width * CHANNELS;
    for (oy, overlaps) in wy.iter().enumerate() {
        let dst_row = &mut out[oy * row_len..(oy + 1) * row_len];
        for (i, dst) in dst_row.iter_mut().enumerate() {
            let acc: f64 = overlaps
                .iter()
                .map(|&(sy, w)| w * horiz[sy * row_len + i])
                .sum();
            *dst = (acc / norm_y).clamp(0.0, 1.0);
        }
    }
    Ok(Image {
        width,
        height,
        data: out,
    })
}

fn io_err(path: &Path, source: std::io::Error) -> ImagingError {
    ImagingError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> ImagingError {
    ImagingError::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn quantize16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// Reads a P6 pixmap or PNG. The format is sniffed from the file contents.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(path, &bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(path, &bytes)
    } else {
        Err(format_err(path, "unrecognized signature"))
    }
}

/// Writes 16-bit samples; PNG when the extension is `.png`, P6 otherwise.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_png(path) {
        encode_png(path, img)?
    } else {
        encode_ppm(img)
    };
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// P6 bytes with `maxval = 65535`.
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n65535\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for &v in &img.data {
        out.extend_from_slice(&quantize16(v).to_be_bytes());
    }
    out
}

fn decode_ppm(path: &Path, bytes: &[u8]) -> Result<Image> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(format_err(path, "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "expected a decimal header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(path, "header field out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(format_err(path, "missing separator after maxval"));
    }
    pos += 1;

    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format_err(path, "zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(path, format!("unsupported maxval {maxval}")));
    }
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let samples = width * height * CHANNELS;
    let body = &bytes[pos..];
    if body.len() < samples * bytes_per_sample {
        return Err(format_err(path, "truncated sample data"));
    }
    let max = maxval as f64;
    let data = if bytes_per_sample == 1 {
        body[..samples].iter().map(|&v| v as f64 / max).collect()
    } else {
        body[..samples * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / max)
            .collect::<Vec<_>>()
    };
    Image::from_data(width, height, data).map_err(|e| format_err(path, e.to_string()))
}

fn encode_png(path: &Path, img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Sixteen);
        let mut writer = encoder
            .write_header()
            .map_err(|e| format_err(path, e.to_string()))?;
        let samples: Vec<u8> = img
            .data
            .iter()
            .flat_map(|&v| quantize16(v).to_be_bytes())
            .collect();
        writer
            .write_image_data(&samples)
            .map_err(|e| format_err(path, e.to_string()))?;
    }
    Ok(out)
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<Image> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| format_err(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| format_err(path, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| format_err(path, e.to_string()))?;
    if info.color_type == png::ColorType::Indexed {
        return Err(format_err(path, "indexed PNG is not supported"));
    }
    let width = info.width as usize;
    let height = info.height as usize;
    let samples_per_pixel = info.color_type.samples();
    let (depth_bytes, max) = match info.bit_depth {
        png::BitDepth::Eight => (1, 255.0),
        png::BitDepth::Sixteen => (2, 65535.0),
        other => return Err(format_err(path, format!("unsupported bit depth {other:?}"))),
    };
    let sample = |i: usize| -> f64 {
        let v = if depth_bytes == 1 {
            buf[i] as f64
        } else {
            u16::from_be_bytes([buf[2 * i], buf[2 * i + 1]]) as f64
        };
        v / max
    };
    let mut data = Vec::with_capacity(width * height * CHANNELS);
    for p in 0..width * height {
        let base = p * samples_per_pixel;
        match samples_per_pixel {
            1 | 2 => {
                let g = sample(base);
                data.extend_from_slice(&[g, g, g]);
            }
            _ => data.extend((0..CHANNELS).map(|c| sample(base + c))),
        }
    }
    Image::from_data(width, height, data).map_err(|e| format_err(path, e.to_string()))
}
