//! Manifest describing the example programs and their checks.

use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Parsed `corpus.json`.
#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub programs: Vec<ProgramSpec>,
}

/// One program entry: where it lives, how to call it, how to judge it.
#[derive(Debug, Clone, Deserialize)]
pub struct ProgramSpec {
    pub name: String,
    pub file: String,
    pub entry: String,
    /// Check kind dispatched by the runner (`round`, `pivot`, ...).
    pub check: String,
    pub cases: u64,
    pub seed: u64,
    /// Rendering precisions; multi-element lists are cycled per case.
    pub precisions: Vec<i64>,
    /// Keys of external test functions the program binds as `f`.
    pub functions: Vec<String>,
    /// Human-readable statement of the contract being checked.
    pub contract: String,
}

impl Manifest {
    /// Loads `corpus.json` from the given directory.
    pub fn load(dir: &Path) -> Result<Manifest, String> {
        let path = dir.join("corpus.json");
        let text = fs::read_to_string(&path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// The in-repo corpus directory, usable from any workspace crate's tests.
pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}
