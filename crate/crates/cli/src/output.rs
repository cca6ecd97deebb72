use std::fs;
use std::path::Path;

use ccl_core::trainer::FORMAT_VERSION;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliResult, IoContext};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).io_ctx(|| format!("creating {}", dir.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(path, text + "\n").io_ctx(|| format!("writing {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).io_ctx(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).io_ctx(|| format!("parsing {}", path.display()))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).io_ctx(|| format!("creating {}", path.display()))?;
    w.write_record(header).io_ctx(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.write_record(r).io_ctx(|| format!("writing {}", path.display()))?;
    }
    w.flush().io_ctx(|| format!("writing {}", path.display()))
}

/// `manifest.json`: the resolved config, seed, tool versions and any
/// command-specific inputs. Re-running the command with the echoed config
/// and inputs reproduces the outputs.
pub fn write_manifest(dir: &Path, command: &str, cfg: &ExperimentConfig, inputs: Value) -> CliResult<()> {
    let manifest = json!({
        "command": command,
        "ccl_version": env!("CARGO_PKG_VERSION"),
        "checkpoint_format": FORMAT_VERSION,
        "seed": cfg.seed,
        "config": cfg,
        "inputs": inputs,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}
