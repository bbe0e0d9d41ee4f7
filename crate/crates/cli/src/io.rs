//! File formats, deterministic number formatting, and run manifests.

use anyhow::{anyhow, Context, Result};
use isac_regions::prob::FactoredModel;
use isac_regions::region::DistortionSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Model file: the factored model plus an optional embedded distortion
/// block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub model: FactoredModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<DistortionSpec>,
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_distortion(path: &Path) -> Result<DistortionSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Formats with exactly twelve significant digits, locale-free.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (11 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Rounds to twelve significant digits so serialized JSON is reproducible.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_tree(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round12(f)) {
                        *n = rounded;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_tree),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

/// Serializes with all floats rounded to twelve significant digits and a
/// trailing newline.
pub fn to_json_stable<T: Serialize>(value: &T) -> Result<String> {
    let mut tree = serde_json::to_value(value)?;
    round_tree(&mut tree);
    Ok(format!("{}\n", serde_json::to_string_pretty(&tree)?))
}

/// Record of one CLI invocation, written next to the data outputs so the
/// data files themselves stay byte-identical across reruns.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub duration_secs: f64,
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    seed: Option<u64>,
    started: Instant,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    /// Writes a data file and records it in the manifest.
    pub fn write_output(&mut self, path: &Path, contents: &str) -> Result<()> {
        std::fs::write(path, contents)
            .with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    /// Writes `<first-output>.manifest.json`.
    pub fn finish(self) -> Result<()> {
        let first = self
            .outputs
            .first()
            .ok_or_else(|| anyhow!("no outputs recorded"))?
            .clone();
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: self.started.elapsed().as_secs_f64(),
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        };
        let mut path = first.into_os_string();
        path.push(".manifest.json");
        let text = format!("{}\n", serde_json::to_string_pretty(&manifest)?);
        std::fs::write(&path, text).context("writing manifest")?;
        Ok(())
    }
}

/// Worker-count resolution: the environment variable wins over the flag.
pub fn resolve_threads(flag: usize) -> usize {
    std::env::var("ISAC_REGION_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(flag)
        .max(1)
}
