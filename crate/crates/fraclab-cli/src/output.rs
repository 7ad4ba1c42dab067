use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

/// Output directory for one command plus the provenance stamped on every file.
pub struct Run {
    pub dir: PathBuf,
    command: String,
    hash: String,
    config: Value,
    files: Vec<String>,
}

/// Hex SHA-256 of the canonical config JSON together with the command
/// name; the output root is not part of it.
fn config_hash(command: &str, extra: &Value, cfg: &RunConfig) -> String {
    let doc = json!({ "command": command, "config": cfg, "extra": extra });
    let digest = Sha256::digest(doc.to_string().as_bytes());
    digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Run {
    pub fn new(command: &str, cfg: &RunConfig, extra: Value) -> Result<Self, CliError> {
        let dir = cfg.out.join(command);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let hash = config_hash(command, &extra, cfg);
        let mut config = serde_json::to_value(cfg).expect("config serializes");
        if let (Value::Object(m), Value::Object(x)) = (&mut config, extra) {
            m.extend(x);
        }
        Ok(Self {
            dir,
            command: command.into(),
            hash,
            config,
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.into());
        self.dir.join(name)
    }

    /// CSV with a leading `# config_hash=... key=value ...` line.
    pub fn csv(&mut self, name: &str, grid: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# config_hash={} {grid}\n{body}", self.hash);
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("results serialize");
        std::fs::write(&p, text + "\n").map_err(|e| CliError::io(&p, e))
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, data).map_err(|e| CliError::io(&p, e))
    }

    /// Registers files written by someone else (state directories).
    pub fn record(&mut self, name: String) {
        self.files.push(name);
    }

    pub fn finish(mut self, status: &str) -> Result<(), CliError> {
        self.files.sort();
        let manifest = json!({
            "command": self.command,
            "config_hash": self.hash,
            "config": self.config,
            "status": status,
            "files": self.files,
        });
        let p = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&p, text + "\n").map_err(|e| CliError::io(&p, e))
    }
}

pub fn sphere_meta(cfg: &RunConfig) -> String {
    format!("s={} n_theta={} n_phi={}", cfg.s, cfg.n_theta, cfg.n_phi)
}

pub fn ball_meta(cfg: &RunConfig) -> String {
    format!("{} n_r={} r_min={} r_max=1", sphere_meta(cfg), cfg.n_r, cfg.r_min)
}

pub fn rel(dir: &Path, base: &Path) -> String {
    dir.strip_prefix(base).unwrap_or(dir).display().to_string()
}
