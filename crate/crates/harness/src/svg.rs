//! Static SVG plots built from line, band, bar and scatter primitives.

use std::fmt::Write;

use crate::emit::fmt_sig;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn num(v: f64) -> String {
    fmt_sig(v)
}

/// Blue-to-yellow ramp for `t` in [0, 1].
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(68.0, 253.0), lerp(1.0, 231.0), lerp(84.0, 37.0))
}

/// Tick positions at a 1, 2 or 5 times power-of-ten spacing.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    legend: Vec<(String, String)>,
    x_categories: Option<Vec<String>>,
}

impl Plot {
    /// Axes spanning the given data ranges, padded by 5%.
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x: padded(x.0, x.1),
            y: padded(y.0, y.1),
            body: String::new(),
            legend: Vec::new(),
            x_categories: None,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn path(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{},{}", if i == 0 { 'M' } else { 'L' }, num(self.px(x)), num(self.py(y))))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn legend(&mut self, label: &str, color: &str) {
        self.legend.push((label.into(), color.into()));
    }

    pub fn line(&mut self, pts: &[(f64, f64)], color: &str) {
        if pts.is_empty() {
            return;
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            self.path(pts)
        );
    }

    /// Filled region between `lower` and `upper` sampled at the same x values.
    pub fn band(&mut self, xs: &[f64], lower: &[f64], upper: &[f64], color: &str) {
        if xs.is_empty() {
            return;
        }
        let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(upper.iter().copied()).collect();
        pts.extend(xs.iter().copied().zip(lower.iter().copied()).rev());
        let _ = writeln!(
            self.body,
            r#"<path d="{} Z" fill="{color}" fill-opacity="0.25" stroke="none"/>"#,
            self.path(&pts)
        );
    }

    pub fn scatter(&mut self, pts: &[(f64, f64)], colors: &[String]) {
        for (i, &(x, y)) in pts.iter().enumerate() {
            let _ = writeln!(
                self.body,
                r##"<circle cx="{}" cy="{}" r="4" fill="{}" stroke="#333333" stroke-width="0.5"/>"##,
                num(self.px(x)),
                num(self.py(y)),
                colors.get(i).map_or("#000000", |c| c.as_str())
            );
        }
    }

    /// Grouped bars: `series[s][c]` is the height of series `s` at category `c`.
    pub fn bars(&mut self, categories: &[String], series: &[(String, Vec<f64>)]) {
        let n = categories.len().max(1) as f64;
        self.x = (0.0, n);
        self.x_categories = Some(categories.to_vec());
        let groups = series.len().max(1) as f64;
        let slot = (self.px(1.0) - self.px(0.0)) * 0.8 / groups;
        let base = self.py(0.0f64.clamp(self.y.0, self.y.1));
        for (s, (label, values)) in series.iter().enumerate() {
            let color = PALETTE[s % PALETTE.len()];
            self.legend(label, color);
            for (c, &v) in values.iter().enumerate() {
                let x0 = self.px(c as f64) + (self.px(1.0) - self.px(0.0)) * 0.1 + s as f64 * slot;
                let y = self.py(v);
                let (top, h) = if y < base { (y, base - y) } else { (base, y - base) };
                let _ = writeln!(
                    self.body,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
                    num(x0),
                    num(top),
                    num(slot),
                    num(h)
                );
            }
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = WIDTH,
            h = HEIGHT
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r##"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" fill="none" stroke="#000000"/>"##
        );
        for t in ticks(self.y.0, self.y.1) {
            let y = num(self.py(t));
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="#000000"/><text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                num(t)
            );
        }
        match &self.x_categories {
            Some(cats) => {
                for (i, c) in cats.iter().enumerate() {
                    let x = num(self.px(i as f64 + 0.5));
                    let _ = writeln!(
                        s,
                        r#"<text x="{x}" y="{}" text-anchor="end" font-size="8" transform="rotate(-60 {x} {})">{}</text>"#,
                        y1 + 8.0,
                        y1 + 8.0,
                        escape(c)
                    );
                }
            }
            None => {
                for t in ticks(self.x.0, self.x.1) {
                    let x = num(self.px(t));
                    let _ = writeln!(
                        s,
                        r##"<line x1="{x}" y1="{y1}" x2="{x}" y2="{}" stroke="#000000"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"##,
                        y1 + 4.0,
                        y1 + 16.0,
                        num(t)
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 8.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        s.push_str(&self.body);
        for (i, (label, color)) in self.legend.iter().enumerate() {
            let y = TOP + 8.0 + i as f64 * 14.0;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
                x1 - 130.0,
                y - 8.0,
                x1 - 116.0,
                y,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_spacing() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(3.0, 3.0), vec![3.0]);
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
    }
}
