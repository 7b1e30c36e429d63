//! Shared plumbing: error classes, config files, run metadata.

use std::path::{Path, PathBuf};

use forgekit::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Exit 2 for `Usage`, 1 for `Data`.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_) | Error::Capability(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> CmdResult<&'a Path> {
    value.as_deref().ok_or_else(|| usage(format!("--{flag} is required")))
}

/// Reads a parameter block; missing file means defaults.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CmdResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    if is_toml {
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct RunMetadata<'a, C: Serialize> {
    command: &'a str,
    toolkit_version: &'a str,
    seed: u64,
    inputs: Vec<String>,
    config: &'a C,
}

/// Writes `run.json` describing how the outputs next to it were produced.
/// The worker count is left out because it does not affect outputs.
pub fn write_run_metadata<C: Serialize>(path: &Path, command: &str, seed: u64, inputs: &[&Path], config: &C) -> CmdResult {
    let meta = RunMetadata {
        command,
        toolkit_version: env!("CARGO_PKG_VERSION"),
        seed,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        config,
    };
    write(path, serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n")
}

/// `<file>.run.json` next to a single output file.
pub fn sidecar_metadata_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}
