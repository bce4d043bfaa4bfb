//! Plain-text grid spec files.
//!
//! One field per line as `name = value`. Blank lines and lines starting with
//! `#` are ignored; fields that are not listed keep their default value.
//!
//! ```text
//! canvas = 768
//! dot_rows = 5
//! dot_cols = 5
//! dot_diameter = 30
//! dot_whiteness = 1
//! border_width = 1
//! border_whiteness = 0.8
//! line_width = 15
//! line_whiteness = 0.5
//! background_whiteness = 0
//! background_color = none          # or three values: 0.2, 0.1, 0.6
//! translation = 0, 0
//! lines_enabled = true
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{GridSpec, StimulusError};
use crate::imaging::ImagingError;

fn parse_err(line: usize, reason: impl Into<String>) -> StimulusError {
    StimulusError::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, StimulusError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("{key}: cannot parse {value:?}")))
}

fn parse_list(line: usize, key: &str, value: &str, n: usize) -> Result<Vec<f64>, StimulusError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(parse_err(line, format!("{key}: expected {n} comma-separated values")));
    }
    parts.iter().map(|p| parse_num(line, key, p)).collect()
}

impl FromStr for GridSpec {
    type Err = StimulusError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut spec = GridSpec::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(line, "expected `name = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "canvas" => spec.canvas = parse_num(line, key, value)?,
                "dot_rows" => spec.dot_rows = parse_num(line, key, value)?,
                "dot_cols" => spec.dot_cols = parse_num(line, key, value)?,
                "dot_diameter" => spec.dot_diameter = parse_num(line, key, value)?,
                "dot_whiteness" => spec.dot_whiteness = parse_num(line, key, value)?,
                "border_width" => spec.border_width = parse_num(line, key, value)?,
                "border_whiteness" => spec.border_whiteness = parse_num(line, key, value)?,
                "line_width" => spec.line_width = parse_num(line, key, value)?,
                "line_whiteness" => spec.line_whiteness = parse_num(line, key, value)?,
                "background_whiteness" => spec.background_whiteness = parse_num(line, key, value)?,
                "background_color" => {
                    spec.background_color = if value.eq_ignore_ascii_case("none") {
                        None
                    } else {
                        let v = parse_list(line, key, value, 3)?;
                        Some([v[0], v[1], v[2]])
                    }
                }
                "translation" => {
                    let v = parse_list(line, key, value, 2)?;
                    spec.translation = (v[0], v[1]);
                }
                "lines_enabled" => spec.lines_enabled = parse_num(line, key, value)?,
                other => return Err(parse_err(line, format!("unknown field {other:?}"))),
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "canvas = {}", self.canvas)?;
        writeln!(f, "dot_rows = {}", self.dot_rows)?;
        writeln!(f, "dot_cols = {}", self.dot_cols)?;
        writeln!(f, "dot_diameter = {}", self.dot_diameter)?;
        writeln!(f, "dot_whiteness = {}", self.dot_whiteness)?;
        writeln!(f, "border_width = {}", self.border_width)?;
        writeln!(f, "border_whiteness = {}", self.border_whiteness)?;
        writeln!(f, "line_width = {}", self.line_width)?;
        writeln!(f, "line_whiteness = {}", self.line_whiteness)?;
        writeln!(f, "background_whiteness = {}", self.background_whiteness)?;
        match self.background_color {
            Some([r, g, b]) => writeln!(f, "background_color = {r}, {g}, {b}")?,
            None => writeln!(f, "background_color = none")?,
        }
        writeln!(f, "translation = {}, {}", self.translation.0, self.translation.1)?;
        writeln!(f, "lines_enabled = {}", self.lines_enabled)
    }
}

impl GridSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StimulusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ImagingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        text.parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StimulusError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string()).map_err(|source| {
            ImagingError::Io {
                path: path.display().to_string(),
                source,
            }
            .into()
        })
    }
}
