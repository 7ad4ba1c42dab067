use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Omega {
    /// k equally spaced arcs of total length π
    K,
    Empty,
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Symmetric,
    Folded,
    Both,
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Symmetry orders (repeatable)
    #[arg(long, global = true, num_args = 1..)]
    pub k: Vec<usize>,
    #[arg(long, global = true)]
    pub n_theta: Option<usize>,
    #[arg(long, global = true)]
    pub n_phi: Option<usize>,
    #[arg(long, global = true)]
    pub n_r: Option<usize>,
    #[arg(long, global = true)]
    pub r_min: Option<f64>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Coupling ladder (repeatable)
    #[arg(long, global = true, num_args = 1.., allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    /// Radii for the frequency trace; defaults to the radial nodes
    #[arg(long, global = true, num_args = 1..)]
    pub radius: Vec<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root
    #[arg(long, global = true, env = "FRACLAB_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub s: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_r: usize,
    pub r_min: f64,
    pub k: Vec<usize>,
    pub kmax: usize,
    pub beta: Vec<f64>,
    pub radii: Vec<f64>,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            n_theta: 64,
            n_phi: 128,
            n_r: 48,
            r_min: 1e-3,
            k: vec![1],
            kmax: 8,
            beta: vec![1e3],
            radii: Vec::new(),
            seed: 0,
            out: PathBuf::from("fraclab-out"),
        }
    }
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(v) = o.s {
            c.s = v;
        }
        if let Some(v) = o.n_theta {
            c.n_theta = v;
        }
        if let Some(v) = o.n_phi {
            c.n_phi = v;
        }
        if let Some(v) = o.n_r {
            c.n_r = v;
        }
        if let Some(v) = o.r_min {
            c.r_min = v;
        }
        if let Some(v) = o.kmax {
            c.kmax = v;
        }
        if let Some(v) = o.seed {
            c.seed = v;
        }
        if let Some(v) = &o.out {
            c.out = v.clone();
        }
        if !o.k.is_empty() {
            c.k = o.k.clone();
        }
        if !o.beta.is_empty() {
            c.beta = o.beta.clone();
        }
        if !o.radius.is_empty() {
            c.radii = o.radius.clone();
        }
        c.validate()?;
        Ok(c)
    }

    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::validation(m));
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s = {} must lie in (0, 1)", self.s));
        }
        if self.n_phi % 2 != 0 {
            return bad(format!("n_phi = {} must be even", self.n_phi));
        }
        if self.n_r < 2 {
            return bad(format!("n_r = {} must be at least 2", self.n_r));
        }
        if !(self.r_min > 0.0 && self.r_min < 1.0) {
            return bad(format!("r_min = {} must lie in (0, 1)", self.r_min));
        }
        if self.k.is_empty() {
            return bad("at least one k is required".into());
        }
        for &k in &self.k {
            if k == 0 {
                return bad("k must be at least 1".into());
            }
        }
        if self.kmax == 0 {
            return bad("kmax must be at least 1".into());
        }
        if self.beta.is_empty() {
            return bad("at least one beta is required".into());
        }
        for &b in &self.beta {
            if !(b >= 0.0 && b.is_finite()) {
                return bad(format!("beta = {b} must be finite and nonnegative"));
            }
        }
        for &r in &self.radii {
            if !(r >= self.r_min && r <= 1.0) {
                return bad(format!("radius {r} outside [{}, 1]", self.r_min));
            }
        }
        Ok(())
    }

    /// Symmetric runs need k | n_phi/2.
    pub fn check_divisible(&self, k: usize) -> Result<(), CliError> {
        if (self.n_phi / 2) % k != 0 {
            return Err(CliError::validation(format!(
                "k = {k} does not divide n_phi/2 = {}",
                self.n_phi / 2
            )));
        }
        Ok(())
    }
}
