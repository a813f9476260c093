//! Run configuration: built-in defaults, then the TOML config file, then
//! command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bookqa_core::corpus::{Split, DEFAULT_CHUNK_SIZE};
use bookqa_core::distant::DsConfig;
use bookqa_core::hardem::EmConfig;
use bookqa_core::ict::IctConfig;
use bookqa_core::index::Bm25Params;
use bookqa_core::preread::PrereadConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    pub chunk_size: usize,
    pub strip_boilerplate: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: None,
            chunk_size: DEFAULT_CHUNK_SIZE,
            strip_boilerplate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub bm25: Bm25Params,
    pub ds: DsConfig,
    pub ict: IctConfig,
    pub preread: PrereadConfig,
    pub hardem: EmConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.chunk_size == 0 {
            bail!("dataset.chunk_size must be at least 1");
        }
        if !(self.bm25.k1 >= 0.0 && (0.0..=1.0).contains(&self.bm25.b)) {
            bail!("bm25 needs k1 >= 0 and b in [0, 1]");
        }
        self.ds.validate()?;
        self.preread.validate()?;
        if self.ict.max_negatives == 0 {
            bail!("ict.max_negatives must be at least 1");
        }
        if self.hardem.k == 0 || self.hardem.pool_k == 0 || self.hardem.sigma.is_nan() || self.hardem.sigma <= 0.0 {
            bail!("hardem needs k >= 1, pool_k >= 1 and sigma > 0");
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        self.dataset
            .path
            .as_deref()
            .context("no dataset path: pass --dataset or set dataset.path in the config file")
    }
}

pub fn parse_split(s: &str) -> Result<Split, String> {
    Split::parse(s).ok_or_else(|| format!("unknown split {s:?} (expected train, valid or test)"))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    arguments: &'a serde_json::Value,
    config: serde_json::Value,
}

/// `<out>/<command>.manifest.json`: tool version, command arguments and the
/// effective configuration. Thread count is left out since it never changes
/// output, and so is the output directory, which is where the manifest lives.
pub fn write_manifest(out: &Path, command: &str, arguments: serde_json::Value, config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut config = serde_json::to_value(config)?;
    if let Some(c) = config.as_object_mut() {
        c.remove("output");
    }
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        arguments: &arguments,
        config,
    };
    let path = out.join(format!("{}.manifest.json", command.replace(' ', "-")));
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str("[ds]\nalpha = 0.7\nseed = 3\n[dataset]\nchunk_size = 50\n").unwrap();
        assert_eq!(c.ds.alpha, 0.7);
        assert_eq!(c.ds.beta, 0.2);
        assert_eq!(c.dataset.chunk_size, 50);
        assert_eq!(c.bm25, Bm25Params::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[dataset]\nchunk = 5\n").is_err());
        assert!(toml::from_str::<RunConfig>("[nope]\n").is_err());
    }

    #[test]
    fn manifest_omits_output_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::default();
        c.output.dir = dir.path().to_path_buf();
        write_manifest(dir.path(), "labels ds", serde_json::json!({"seed": 4}), &c).unwrap();
        let text = std::fs::read_to_string(dir.path().join("labels-ds.manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["command"], "labels ds");
        assert_eq!(v["arguments"]["seed"], 4);
        assert!(v["config"].get("output").is_none());
        assert_eq!(v["config"]["ds"]["alpha"], 0.5);
    }

    #[test]
    fn default_round_trips() {
        let text = toml::to_string(&RunConfig::default()).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), RunConfig::default());
    }
}
