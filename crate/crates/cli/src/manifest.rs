//! Run manifests: the effective configuration plus content hashes of every
//! resource it read. Replaying a manifest reruns the same experiment.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub resources: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub live: bool,
    pub versions: BTreeMap<String, String>,
}

/// SHA-256 of the configuration's JSON form, ignoring the output directory.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.out = Default::default();
    let json = serde_json::to_string(&c).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, live: bool) -> Result<Self> {
        let resources = config.resources.hashes().context("hashing resources")?;
        let versions = [
            ("factcheck-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("factcheck-core".to_string(), factcheck_core::VERSION.to_string()),
        ]
        .into_iter()
        .collect();
        Ok(Manifest {
            command: command.to_string(),
            config_sha256: config_hash(config),
            config: config.clone(),
            resources,
            seeds: config.seeds.clone(),
            live,
            versions,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let m: Manifest =
            serde_json::from_str(&raw).with_context(|| format!("parsing manifest {}", path.display()))?;
        if m.config_sha256 != config_hash(&m.config) {
            bail!("manifest {} was edited: its config hash does not match", path.display());
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        let path = dir.join("manifest.json");
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))
    }

    /// Fails when a resource changed or disappeared since the manifest was written.
    pub fn verify_resources(&self) -> Result<()> {
        let now = self.config.resources.hashes().context("hashing resources")?;
        let mut changed = Vec::new();
        for (name, hash) in &self.resources {
            match now.get(name) {
                Some(h) if h == hash => {}
                Some(_) => changed.push(format!("{name} (content changed)")),
                None => changed.push(format!("{name} (missing)")),
            }
        }
        if !changed.is_empty() {
            bail!("resources differ from the manifest: {}", changed.join(", "));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_out_but_not_settings() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            out: "elsewhere".into(),
            ..a.clone()
        };
        let c = ExperimentConfig {
            seeds: vec![7],
            ..a.clone()
        };
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("cqa.jsonl");
        fs::write(&data, "{}\n").unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.resources.cqa = Some(data.clone());
        let m = Manifest::new("eval", &cfg, false).unwrap();
        m.write(dir.path()).unwrap();
        let back = Manifest::read(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, m);
        back.verify_resources().unwrap();

        fs::write(&data, "{\"changed\": 1}\n").unwrap();
        assert!(back.verify_resources().is_err());

        let raw = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        fs::write(dir.path().join("manifest.json"), raw.replace("\"tfidf_c\": 1.0", "\"tfidf_c\": 2.0")).unwrap();
        assert!(Manifest::read(&dir.path().join("manifest.json")).is_err());
    }
}
