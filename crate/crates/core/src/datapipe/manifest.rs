//! JSON-lines embedding manifests.
//!
//! The first line is a header `{"dim": <int>, "task": "depression"|"ptsd"}`;
//! every further line is one [`Example`].

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Depression,
    Ptsd,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depression" => Ok(Task::Depression),
            "ptsd" => Ok(Task::Ptsd),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Encoded 0 = male, 1 = female.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const BOTH: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl TryFrom<u8> for Gender {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Gender::Male),
            1 => Ok(Gender::Female),
            other => Err(format!("unknown gender code {other}")),
        }
    }
}

impl From<Gender> for u8 {
    fn from(g: Gender) -> u8 {
        g as u8
    }
}

/// One training or test instance. `label` is 1 for the positive class of
/// the manifest's task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example {
    pub id: String,
    pub participant: String,
    pub gender: Gender,
    pub label: u8,
    pub split: Split,
    pub embedding: Vec<f32>,
}

impl Example {
    pub fn label_index(&self) -> usize {
        self.label as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub dim: usize,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    /// Absent only for a completely empty file.
    pub header: Option<ManifestHeader>,
    pub examples: Vec<Example>,
}

impl Manifest {
    pub fn new(header: ManifestHeader, examples: Vec<Example>) -> Self {
        Manifest {
            header: Some(header),
            examples,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.header.map(|h| h.dim)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(header) = self.header else {
            if self.examples.is_empty() {
                return Ok(());
            }
            return Err(Error::Validation("manifest records without a header".into()));
        };
        if header.dim == 0 {
            return Err(Error::Validation("manifest dim must be positive".into()));
        }
        let mut seen = HashSet::new();
        for ex in &self.examples {
            if ex.embedding.len() != header.dim {
                return Err(Error::Validation(format!(
                    "record `{}` has embedding length {}, manifest declares {}",
                    ex.id,
                    ex.embedding.len(),
                    header.dim
                )));
            }
            if ex.label > 1 {
                return Err(Error::Validation(format!(
                    "record `{}` has unknown label code {}",
                    ex.id, ex.label
                )));
            }
            if ex.embedding.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("record `{}` has a non-finite embedding", ex.id)));
            }
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::Validation(format!("duplicate record id `{}`", ex.id)));
            }
        }
        Ok(())
    }
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<Manifest> {
    let mut manifest = Manifest::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| Error::io("<manifest>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse {
            line: lineno,
            message: e.to_string(),
        };
        if manifest.header.is_none() {
            manifest.header = Some(serde_json::from_str(&line).map_err(parse_err)?);
            continue;
        }
        let ex: Example = serde_json::from_str(&line).map_err(|e| {
            // serde reports the bad gender code as a custom error; keep it a
            // validation failure like the other range checks.
            if e.is_data() && e.to_string().contains("unknown gender code") {
                Error::Validation(format!("line {lineno}: {e}"))
            } else {
                parse_err(e)
            }
        })?;
        manifest.examples.push(ex);
    }
    manifest.validate()?;
    Ok(manifest)
}

pub fn write_manifest<W: Write>(mut w: W, manifest: &Manifest) -> Result<()> {
    manifest.validate()?;
    let io = |e| Error::io("<manifest>", e);
    if let Some(h) = &manifest.header {
        writeln!(w, "{}", serde_json::to_string(h).expect("header serializes")).map_err(io)?;
    }
    for ex in &manifest.examples {
        writeln!(w, "{}", serde_json::to_string(ex).expect("example serializes")).map_err(io)?;
    }
    Ok(())
}
