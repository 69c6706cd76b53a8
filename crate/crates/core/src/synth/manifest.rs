use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Image,
    VideoFrame,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Six-way class (1 = 144p … 6 = 1080p) or regression target k = a/100.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Class(u8),
    Target(f64),
}

impl Label {
    pub fn as_f32(self) -> f32 {
        match self {
            Label::Class(c) => c as f32,
            Label::Target(t) => t as f32,
        }
    }

    pub fn class(self) -> Option<u8> {
        match self {
            Label::Class(c) => Some(c),
            Label::Target(_) => None,
        }
    }

    pub fn target(self) -> Option<f64> {
        match self {
            Label::Target(t) => Some(t),
            Label::Class(_) => None,
        }
    }
}

/// One synthesized item: a source image (or video frame) degraded by `factor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: u32,
    /// Index of the source (image or whole video) in the sorted corpus.
    pub source: u32,
    pub source_path: String,
    pub kind: SourceKind,
    pub video_id: Option<String>,
    /// Variant number within the source; all frames of one video variant share it.
    pub variant: u32,
    pub factor: f64,
    pub label: Label,
    pub split: Split,
    pub corner_count: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&serde_json::to_string(e).expect("plain struct"));
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                serde_json::from_str(l).map_err(|e| Error::format("manifest", format!("line {}: {e}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Manifest { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        for line in BufReader::new(f).lines() {
            text.push_str(&line.map_err(|e| Error::io(path, e))?);
            text.push('\n');
        }
        Manifest::from_jsonl(&text)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}
