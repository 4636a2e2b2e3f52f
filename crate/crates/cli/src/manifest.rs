//! Evaluation manifest: which MIDI, natural recording and system renderings
//! belong to each sample.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CmdResult, Context, Failure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub midi_path: PathBuf,
    pub natural_wav_path: PathBuf,
    /// System id to rendered WAV.
    pub systems: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Base for relative paths; itself relative to the manifest file.
    #[serde(default)]
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Reads a manifest and makes every path absolute or manifest-relative.
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path).input(format!("cannot read manifest {}", path.display()))?;
        let mut m: Manifest = serde_json::from_str(&text).input(format!("invalid manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("")).join(&m.root);
        for e in &mut m.entries {
            e.midi_path = base.join(&e.midi_path);
            e.natural_wav_path = base.join(&e.natural_wav_path);
            for p in e.systems.values_mut() {
                *p = base.join(&*p);
            }
        }
        m.root = base;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> CmdResult {
        if self.entries.is_empty() {
            return Err(Failure::Input("manifest has no entries".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.sample_id.as_str()) {
                return Err(Failure::Input(format!("duplicate sample_id {:?} in manifest", e.sample_id)));
            }
        }
        Ok(())
    }

    /// Every system id, sorted.
    pub fn systems(&self) -> Vec<String> {
        self.entries.iter().flat_map(|e| e.systems.keys().cloned()).collect::<BTreeSet<_>>().into_iter().collect()
    }
}
