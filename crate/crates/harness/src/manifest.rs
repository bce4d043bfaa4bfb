//! Stimulus manifests: a labelled list of grid spec files and images.
//!
//! ```json
//! {
//!   "label": "illusions",
//!   "entries": [
//!     {"grid": "grids/default.grid"},
//!     {"name": "cheetah", "image": "images/cheetah.png"}
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusSource {
    Grid(PathBuf),
    Image(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub source: StimulusSource,
}

impl Entry {
    pub fn path(&self) -> &Path {
        match &self.source {
            StimulusSource::Grid(p) | StimulusSource::Image(p) => p,
        }
    }

    /// Explicit name, else the file stem.
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path()
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub label: String,
    pub entries: Vec<Entry>,
}

impl Manifest {
    /// Reads a manifest and checks that every referenced file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read(path).map_err(HarnessError::io(path))?;
        let mut m: Manifest = serde_json::from_slice(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for (i, e) in m.entries.iter_mut().enumerate() {
            let p = match &mut e.source {
                StimulusSource::Grid(p) | StimulusSource::Image(p) => p,
            };
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.is_file() {
                return Err(HarnessError::StimulusNotFound {
                    manifest: path.to_path_buf(),
                    entry: format!("#{i} ({})", e.display_name()),
                    path: e.path().to_path_buf(),
                });
            }
        }
        if m.label.is_empty() || !m.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(HarnessError::Config(format!(
                "manifest {}: label {:?} must be nonempty ASCII letters, digits, '-' or '_'",
                path.display(),
                m.label
            )));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_entry_kinds() {
        let m: Manifest = serde_json::from_str(
            r#"{"label": "x", "entries": [{"grid": "a.grid"}, {"name": "cat", "image": "b.png"}]}"#,
        )
        .unwrap();
        assert_eq!(m.entries[0].source, StimulusSource::Grid("a.grid".into()));
        assert_eq!(m.entries[0].display_name(), "a");
        assert_eq!(m.entries[1].display_name(), "cat");
    }

    #[test]
    fn missing_file_names_the_entry() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, r#"{"label": "x", "entries": [{"grid": "nope.grid"}]}"#).unwrap();
        match Manifest::load(&path) {
            Err(HarnessError::StimulusNotFound { entry, .. }) => assert!(entry.contains("nope")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
