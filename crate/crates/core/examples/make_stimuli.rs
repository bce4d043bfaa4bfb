//! Writes the shipped stimulus sets and their manifests.
//!
//! Usage: `cargo run -p gridprobe-core --example make_stimuli -- <data_dir>`
//!
//! Produces `stimuli/illusions/*.grid`, `stimuli/illusion_controls/*.grid`,
//! `stimuli/natural_synthetic/*.png` and one manifest per set in `manifests/`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use gridprobe_core::imaging::{save_image, Image};
use gridprobe_core::stimuli::{select_white_mask, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SIZE: usize = 224;
const MASK_BAND: (f64, f64) = (0.05, 0.20);

fn illusions() -> Vec<(String, GridSpec)> {
    let base = GridSpec::default();
    let mut out = vec![("default".to_string(), base.clone())];
    for (dx, dy) in [(20.0, 0.0), (0.0, 20.0), (-25.0, 15.0), (35.0, -30.0), (-40.0, -40.0), (11.0, 7.0)] {
        out.push((
            format!("translate_{dx}_{dy}").replace('-', "m"),
            GridSpec {
                translation: (dx, dy),
                ..base.clone()
            },
        ));
    }
    for d in [36.0, 42.0, 48.0, 56.0] {
        out.push((
            format!("dot_{d}"),
            GridSpec {
                dot_diameter: d,
                ..base.clone()
            },
        ));
    }
    let backgrounds = [
        ("navy", [0.0, 0.0, 0.3]),
        ("maroon", [0.3, 0.0, 0.0]),
        ("forest", [0.0, 0.25, 0.05]),
        ("purple", [0.25, 0.05, 0.3]),
        ("brown", [0.25, 0.15, 0.05]),
        ("teal", [0.0, 0.2, 0.2]),
    ];
    for (name, rgb) in backgrounds {
        out.push((
            format!("background_{name}"),
            GridSpec {
                background_color: Some(rgb),
                ..base.clone()
            },
        ));
    }
    for s in [0.7, 0.85, 1.25, 1.5] {
        out.push((
            format!("scale_{s}"),
            GridSpec {
                dot_diameter: base.dot_diameter * s,
                line_width: base.line_width * s,
                ..base.clone()
            },
        ));
    }
    for (r, c) in [(3, 3), (4, 4), (6, 6), (7, 7), (8, 8), (9, 9), (4, 6), (6, 4), (3, 5)] {
        out.push((
            format!("array_{r}x{c}"),
            GridSpec {
                dot_rows: r,
                dot_cols: c,
                ..base.clone()
            },
        ));
    }
    out
}

fn controls() -> Vec<(String, GridSpec)> {
    let base = GridSpec {
        lines_enabled: false,
        ..GridSpec::default()
    };
    let with = |name: &str, spec: GridSpec| (name.to_string(), spec);
    vec![
        with("no_lines", base.clone()),
        with(
            "no_lines_translate",
            GridSpec {
                translation: (-25.0, 15.0),
                ..base.clone()
            },
        ),
        with(
            "no_lines_dot_48",
            GridSpec {
                dot_diameter: 48.0,
                ..base.clone()
            },
        ),
        with(
            "no_lines_array_4x4",
            GridSpec {
                dot_rows: 4,
                dot_cols: 4,
                ..base.clone()
            },
        ),
        with(
            "no_lines_array_7x7",
            GridSpec {
                dot_rows: 7,
                dot_cols: 7,
                ..base.clone()
            },
        ),
        with(
            "no_lines_array_3x3",
            GridSpec {
                dot_rows: 3,
                dot_cols: 3,
                ..base.clone()
            },
        ),
        with(
            "no_lines_navy",
            GridSpec {
                background_color: Some([0.0, 0.0, 0.3]),
                ..base.clone()
            },
        ),
        with(
            "no_lines_scale_1.25",
            GridSpec {
                dot_diameter: 37.5,
                ..base.clone()
            },
        ),
        with(
            "thin_lines",
            GridSpec {
                line_width: 3.0,
                ..GridSpec::default()
            },
        ),
        with(
            "faint_lines",
            GridSpec {
                line_whiteness: 0.08,
                ..GridSpec::default()
            },
        ),
        with(
            "light_background",
            GridSpec {
                background_whiteness: 0.9,
                ..GridSpec::default()
            },
        ),
    ]
}

/// Image filled by `f(x, y) -> rgb`, with components kept at or below `cap`.
fn paint(cap: f64, f: impl Fn(f64, f64) -> [f64; 3]) -> Image {
    let mut img = Image::gray(SIZE, SIZE, 0.0).expect("nonzero size");
    for y in 0..SIZE {
        for x in 0..SIZE {
            let rgb = f(x as f64 + 0.5, y as f64 + 0.5);
            img.set_pixel(x, y, rgb.map(|v| v.clamp(0.0, cap)));
        }
    }
    img
}

/// Paints white discs until roughly `target` of the pixels are white.
fn white_discs(img: &mut Image, rng: &mut ChaCha8Rng, radius: f64, target: f64) {
    let total = (SIZE * SIZE) as f64;
    let mut white = 0usize;
    while (white as f64) < target * total {
        let cx = rng.random_range(radius..SIZE as f64 - radius);
        let cy = rng.random_range(radius..SIZE as f64 - radius);
        for y in 0..SIZE {
            for x in 0..SIZE {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= radius * radius && img.pixel(x, y) != [1.0; 3] {
                    img.set_pixel(x, y, [1.0; 3]);
                    white += 1;
                }
            }
        }
    }
}

fn checkerboard(period: f64, dark: [f64; 3], light: [f64; 3], white_every: usize) -> Image {
    let cells = (SIZE as f64 / period).ceil() as usize;
    paint(1.0, |x, y| {
        let (i, j) = ((x / period) as usize, (y / period) as usize);
        if (i + j * cells) % white_every == 0 && (i + j) % 2 == 1 {
            [1.0; 3]
        } else if (i + j) % 2 == 0 {
            dark
        } else {
            light
        }
    })
}

fn random_squares(seed: u64, cells: usize, white_fraction: f64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<[f64; 3]> = (0..cells * cells)
        .map(|_| {
            if rng.random_bool(white_fraction) {
                [1.0; 3]
            } else {
                let g: f64 = rng.random_range(0.0..0.8);
                [g, (g + rng.random_range(-0.1..0.1)).clamp(0.0, 0.8), g * 0.9]
            }
        })
        .collect();
    let cell = SIZE as f64 / cells as f64;
    paint(1.0, |x, y| values[(y / cell) as usize * cells + (x / cell) as usize])
}

fn texture(seed: u64, waves: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<(f64, f64, f64, usize)> = (0..waves)
        .map(|_| {
            (
                rng.random_range(0.01..0.12),
                rng.random_range(0.0..PI),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0..3),
            )
        })
        .collect();
    let mut img = paint(0.85, |x, y| {
        let mut rgb = [0.35, 0.3, 0.25];
        for &(freq, angle, phase, ch) in &comps {
            let t = (x * angle.cos() + y * angle.sin()) * freq + phase;
            rgb[ch] += 0.35 * t.sin() / waves as f64 * 2.0;
        }
        rgb
    });
    white_discs(&mut img, &mut rng, 6.0, 0.1);
    img
}

fn stripes(seed: u64, period: f64, angle: f64, tint: [f64; 3]) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, s) = (angle.cos(), angle.sin());
    let mut img = paint(0.85, |x, y| {
        let t = ((x * c + y * s) / period * 2.0 * PI).sin() * 0.5 + 0.5;
        tint.map(|v| v * (0.2 + 0.6 * t))
    });
    white_discs(&mut img, &mut rng, 10.0, 0.12);
    img
}

fn rectangles(seed: u64, count: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = paint(1.0, |_, _| [0.15, 0.2, 0.25]);
    let mut white = 0usize;
    for k in 0..count {
        let (w, h) = (rng.random_range(10..70), rng.random_range(10..70));
        let (x0, y0) = (rng.random_range(0..SIZE - w), rng.random_range(0..SIZE - h));
        let make_white = k % 4 == 0 && (white as f64) < 0.12 * (SIZE * SIZE) as f64;
        let rgb = if make_white {
            [1.0; 3]
        } else {
            [rng.random_range(0.0..0.85), rng.random_range(0.0..0.85), rng.random_range(0.0..0.85)]
        };
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                let was_white = img.pixel(x, y) == [1.0; 3];
                img.set_pixel(x, y, rgb);
                match (was_white, make_white) {
                    (false, true) => white += 1,
                    (true, false) => white -= 1,
                    _ => {}
                }
            }
        }
    }
    img
}

fn natural_synthetic() -> Vec<(String, Image)> {
    let mut out = vec![
        ("checker_8".into(), checkerboard(8.0, [0.1; 3], [0.6; 3], 5)),
        ("checker_16".into(), checkerboard(16.0, [0.05, 0.1, 0.3], [0.5, 0.6, 0.7], 4)),
        ("checker_28".into(), checkerboard(28.0, [0.3, 0.05, 0.05], [0.7, 0.6, 0.3], 3)),
        ("checker_32".into(), checkerboard(32.0, [0.0; 3], [0.45; 3], 5)),
    ];
    for (i, cells) in [7usize, 14, 28, 56].into_iter().enumerate() {
        out.push((format!("random_squares_{cells}"), random_squares(100 + i as u64, cells, 0.12)));
    }
    for (i, waves) in [3usize, 5, 8, 12].into_iter().enumerate() {
        out.push((format!("texture_{waves}"), texture(200 + i as u64, waves)));
    }
    let tints = [[0.9, 0.6, 0.3], [0.3, 0.8, 0.4], [0.5, 0.5, 0.9], [0.8, 0.8, 0.8]];
    for (i, tint) in tints.into_iter().enumerate() {
        let angle = i as f64 * PI / 5.0;
        out.push((format!("stripes_{i}"), stripes(300 + i as u64, 12.0 + 6.0 * i as f64, angle, tint)));
    }
    for (i, count) in [12usize, 24, 40].into_iter().enumerate() {
        out.push((format!("rectangles_{count}"), rectangles(400 + i as u64, count)));
    }
    out
}

fn write(path: &Path, bytes: &[u8]) {
    fs::write(path, bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn manifest(dir: &Path, label: &str, kind: &str, entries: &[(String, String)]) {
    let list: Vec<_> = entries.iter().map(|(name, path)| json!({"name": name, kind: path})).collect();
    let doc = json!({"label": label, "entries": list});
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    write(&dir.join(format!("{label}.json")), text.as_bytes());
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    let manifests = root.join("manifests");
    fs::create_dir_all(&manifests).expect("create manifest dir");

    for (label, specs) in [("illusions", illusions()), ("illusion_controls", controls())] {
        let dir = root.join("stimuli").join(label);
        fs::create_dir_all(&dir).expect("create stimulus dir");
        let mut entries = Vec::new();
        for (name, spec) in specs {
            spec.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            spec.save(dir.join(format!("{name}.grid"))).expect("write grid spec");
            entries.push((name.clone(), format!("../stimuli/{label}/{name}.grid")));
        }
        println!("{label}: {} grids", entries.len());
        manifest(&manifests, label, "grid", &entries);
    }

    let label = "natural_synthetic";
    let dir = root.join("stimuli").join(label);
    fs::create_dir_all(&dir).expect("create stimulus dir");
    let mut entries = Vec::new();
    for (name, img) in natural_synthetic() {
        let mask = select_white_mask(&img, MASK_BAND.0, MASK_BAND.1)
            .unwrap_or_else(|e| panic!("{name}: no usable white region: {e}"));
        println!("{name}: mask {:.3} at threshold {:.2}", mask.fraction(), mask.threshold());
        save_image(&img, dir.join(format!("{name}.png"))).expect("write image");
        entries.push((name.clone(), format!("../stimuli/{label}/{name}.png")));
    }
    println!("{label}: {} images", entries.len());
    manifest(&manifests, label, "image", &entries);
}
