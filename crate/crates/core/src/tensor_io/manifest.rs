//! Line-oriented dataset manifests: `path<TAB>role<TAB>label<TAB>tag1,tag2`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Reference,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Genuine,
    Impostor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Mfp,
    Zoom,
    Bokeh,
    Raw,
}

macro_rules! vocabulary {
    ($ty:ty, $($variant:ident => $text:literal),+) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $(Self::$variant => $text),+ }
            }
        }

        impl FromStr for $ty {
            type Err = ();
            fn from_str(s: &str) -> std::result::Result<Self, ()> {
                match s { $($text => Ok(Self::$variant),)+ _ => Err(()) }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

vocabulary!(Role, Reference => "reference", Test => "test");
vocabulary!(Label, Genuine => "genuine", Impostor => "impostor");
vocabulary!(Tag, Mfp => "mfp", Zoom => "zoom", Bokeh => "bokeh", Raw => "raw");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub role: Role,
    pub label: Label,
    pub tags: BTreeSet<Tag>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(Error::Syntax {
                    line,
                    msg: format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let path = fields[0].to_string();
            if path.is_empty() {
                return Err(Error::Syntax {
                    line,
                    msg: "empty path".into(),
                });
            }
            let role = fields[1].parse().map_err(|_| Error::Vocabulary {
                line,
                field: "role",
                value: fields[1].into(),
            })?;
            let label = fields[2].parse().map_err(|_| Error::Vocabulary {
                line,
                field: "label",
                value: fields[2].into(),
            })?;
            let mut tags = BTreeSet::new();
            for t in fields.get(3).copied().unwrap_or("").split(',') {
                if t.is_empty() {
                    continue;
                }
                tags.insert(t.parse().map_err(|_| Error::Vocabulary {
                    line,
                    field: "tag",
                    value: t.into(),
                })?);
            }
            if !seen.insert(path.clone()) {
                return Err(Error::DuplicatePath { line, path });
            }
            entries.push(ManifestEntry {
                path,
                role,
                label,
                tags,
            });
        }
        Ok(DatasetManifest { entries })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let tags: Vec<&str> = e.tags.iter().map(Tag::as_str).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.path,
                e.role,
                e.label,
                tags.join(",")
            ));
        }
        out
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.role == role)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    DatasetManifest::parse(&text)
}

pub fn save_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), m.to_text().as_bytes())
}
