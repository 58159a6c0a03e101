//! Run configuration: a single TOML tree with defaults, dotted-path flag
//! overrides, and validation that reports every problem at once.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qdrop2d_core::{ModelParams, SolveOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: 128,
            ny: 128,
            lx: 8.0,
            ly: 8.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub sigma: f64,
    pub omega: f64,
    pub v0: f64,
    pub v1: f64,
    pub w0: f64,
    pub mu: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            sigma: 1.0,
            omega: 0.0,
            v0: -1.0 / 16.0,
            v1: 1.0,
            w0: 1.0,
            mu: 2.0,
        }
    }
}

impl ModelConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            sigma: self.sigma,
            omega: self.omega,
            v0: self.v0,
            v1: self.v1,
            w0: self.w0,
            mu: self.mu,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol: f64,
    pub max_newton: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub eig_tol: f64,
    pub n_eigs: usize,
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    pub bdg_n: usize,
    pub bdg_dense_threshold: usize,
    pub breaking_tol: f64,
    pub w0_resolution: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-10,
            max_newton: 50,
            inner_tol: 1e-3,
            inner_max_iter: 800,
            eig_tol: 1e-8,
            n_eigs: 6,
            ds0: 0.05,
            ds_min: 1e-4,
            ds_max: 0.5,
            max_points: 400,
            bdg_n: 20,
            bdg_dense_threshold: 34 * 34,
            breaking_tol: 1e-6,
            w0_resolution: 1e-2,
        }
    }
}

impl SolverConfig {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.newton_tol,
            max_newton: self.max_newton,
            inner_tol: self.inner_tol,
            inner_max_iter: self.inner_max_iter,
            max_backtrack: 8,
        }
    }
}

/// Seeding strategy for stationary solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    Exact,
    Mode,
    FlatTop,
    File,
}

impl Default for SeedKind {
    fn default() -> Self {
        SeedKind::Exact
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    // spectrum
    pub w0_values: Vec<f64>,
    // phase-diagram
    pub v0_min: f64,
    pub v0_max: f64,
    pub v0_count: usize,
    pub w0_scan_max: f64,
    // solve / continue seeding
    pub seed: SeedKind,
    pub mode_index: usize,
    pub amplitude: f64,
    pub amplitudes: Vec<f64>,
    pub seed_file: Option<String>,
    // continue
    pub sweep: String,
    pub target: f64,
    pub stop_after_fold: Option<usize>,
    pub write_states: bool,
    // bdg
    pub state_file: Option<String>,
    // evolve / collide
    pub t_final: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub noise: f64,
    pub winding_radius: Option<f64>,
    // collide
    pub a: f64,
    pub b: f64,
    pub r0: [f64; 2],
    pub extra_state_file: Option<String>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            w0_values: vec![1.0],
            v0_min: -2.0,
            v0_max: 6.0,
            v0_count: 9,
            w0_scan_max: 7.0,
            seed: SeedKind::default(),
            mode_index: 0,
            amplitude: 0.3,
            amplitudes: vec![],
            seed_file: None,
            sweep: "mu".into(),
            target: 1.0,
            stop_after_fold: None,
            write_states: false,
            state_file: None,
            t_final: 10.0,
            dt: 1e-3,
            snapshot_stride: 250,
            noise: 0.0,
            winding_radius: None,
            a: 1.0,
            b: 0.0,
            r0: [3.0, 0.0],
            extra_state_file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub write_frames: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            write_frames: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rng_seed: u64,
    pub threads: usize,
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub task: TaskConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Load from an optional TOML file and apply `--set key.path=value`
    /// overrides before deserializing.
    pub fn load(path: Option<&str>, sets: &[String]) -> Result<RunConfig, Vec<String>> {
        let mut value: toml::Value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| vec![format!("cannot read config {p}: {e}")])?;
                text.parse()
                    .map_err(|e| vec![format!("config {p} is not valid TOML: {e}")])?
            }
            None => toml::Value::Table(Default::default()),
        };
        let mut errors = Vec::new();
        for set in sets {
            if let Err(e) = apply_set(&mut value, set) {
                errors.push(e);
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let config: RunConfig = value
            .try_into()
            .map_err(|e| vec![format!("config does not match the expected schema: {e}")])?;
        config.validate()?;
        Ok(config)
    }

    /// Collect every validation problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errors = Vec::new();
        let g = &self.grid;
        if g.nx < 16 || g.nx % 2 != 0 {
            errors.push(format!("grid.nx = {} must be even and >= 16", g.nx));
        }
        if g.ny < 16 || g.ny % 2 != 0 {
            errors.push(format!("grid.ny = {} must be even and >= 16", g.ny));
        }
        if !(g.lx > 0.0) {
            errors.push(format!("grid.lx = {} must be positive", g.lx));
        }
        if !(g.ly > 0.0) {
            errors.push(format!("grid.ly = {} must be positive", g.ly));
        }
        if !(self.model.sigma > 0.0) {
            errors.push(format!("model.sigma = {} must be positive", self.model.sigma));
        }
        for (name, v) in [
            ("solver.newton_tol", self.solver.newton_tol),
            ("solver.inner_tol", self.solver.inner_tol),
            ("solver.eig_tol", self.solver.eig_tol),
            ("solver.ds0", self.solver.ds0),
            ("solver.breaking_tol", self.solver.breaking_tol),
            ("solver.w0_resolution", self.solver.w0_resolution),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                errors.push(format!("{name} = {v} must be positive and finite"));
            }
        }
        if self.solver.n_eigs == 0 {
            errors.push("solver.n_eigs must be at least 1".into());
        }
        if !(self.task.dt > 0.0) {
            errors.push(format!("task.dt = {} must be positive", self.task.dt));
        }
        if !(self.task.t_final >= 0.0) {
            errors.push(format!("task.t_final = {} must be nonnegative", self.task.t_final));
        }
        if self.task.sweep != "mu" && self.task.sweep != "omega" {
            errors.push(format!(
                "task.sweep = {:?} must be \"mu\" or \"omega\"",
                self.task.sweep
            ));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Hex SHA-256 of the fully-resolved configuration; stamped into every
    /// output file so results are traceable to their inputs.
    pub fn provenance_hash(&self) -> String {
        let canonical = toml::to_string(self).unwrap_or_default();
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex_string(&hasher.finalize())
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn apply_set(root: &mut toml::Value, set: &str) -> Result<(), String> {
    let (path, raw) = set
        .split_once('=')
        .ok_or_else(|| format!("--set {set:?} is not of the form key.path=value"))?;
    // parse the right-hand side as a TOML literal; bare words fall back to
    // strings so `--set task.sweep=omega` works unquoted
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Value>() {
        Ok(doc) => doc
            .get("v")
            .cloned()
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(format!("--set path {path:?} has an empty segment"));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| format!("--set path {path:?} crosses a non-table value"))?;
        node = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| format!("--set path {path:?} crosses a non-table value"))?;
    table.insert(keys[keys.len() - 1].to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_pass_validation() {
        let c = RunConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.grid.nx, 128);
    }

    #[test]
    fn set_overrides_apply() {
        let c = RunConfig::load(
            None,
            &[
                "model.omega=0.2".into(),
                "grid.nx=64".into(),
                "task.sweep=omega".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.model.omega, 0.2);
        assert_eq!(c.grid.nx, 64);
        assert_eq!(c.task.sweep, "omega");
    }

    #[test]
    fn validation_collects_all_errors() {
        let err = RunConfig::load(
            None,
            &[
                "grid.nx=17".into(),
                "model.sigma=-1.0".into(),
                "task.dt=0.0".into(),
            ],
        )
        .unwrap_err();
        assert!(err.len() >= 3, "{err:?}");
    }

    #[test]
    fn provenance_hash_is_deterministic_and_sensitive() {
        let a = RunConfig::default().provenance_hash();
        let b = RunConfig::default().provenance_hash();
        assert_eq!(a, b);
        let c = RunConfig::load(None, &["model.omega=0.5".into()])
            .unwrap()
            .provenance_hash();
        assert_ne!(a, c);
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let c = RunConfig::load(None, &["model.w0=2.5".into()]).unwrap();
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = text.parse::<toml::Value>().unwrap().try_into().unwrap();
        assert_eq!(back.model.w0, 2.5);
        assert_eq!(c.provenance_hash(), back.provenance_hash());
    }
}
