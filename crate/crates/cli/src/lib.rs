//! Scenario runner for the semiclassical Gross-Pitaevskii toolkit.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod scenario;

use std::path::PathBuf;

pub use commands::{cmd_compare, cmd_evolve, cmd_kernel, cmd_verify, cmd_wavepacket};
pub use error::{CliError, Result};
pub use scenario::Scenario;

use config::{parse_config, parse_override, ConfigMap};
use toml::Value;

/// Where a scenario comes from, lowest precedence first: defaults,
/// preset, config file, `--set` overrides, dedicated flags.
#[derive(Debug, Clone, Default)]
pub struct ScenarioSource {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub sets: Vec<String>,
    pub out: Option<PathBuf>,
    pub kernel_form: Option<String>,
    pub tol: Option<f64>,
}

impl ScenarioSource {
    pub fn preset(name: &str) -> Self {
        Self { preset: Some(name.to_string()), ..Self::default() }
    }

    pub fn set(mut self, kv: &str) -> Self {
        self.sets.push(kv.to_string());
        self
    }

    pub fn out(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out = Some(dir.into());
        self
    }

    pub fn merged(&self) -> Result<ConfigMap> {
        let mut map = scenario::defaults();
        if let Some(name) = &self.preset {
            scenario::merge(&mut map, scenario::preset(name)?)?;
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let parsed = parse_config(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            scenario::merge(&mut map, parsed)?;
        }
        let mut over = ConfigMap::new();
        for s in &self.sets {
            let (k, v) = parse_override(s)?;
            over.insert(k, v);
        }
        if let Some(dir) = &self.out {
            over.insert("output.dir".into(), Value::String(dir.display().to_string()));
        }
        if let Some(form) = &self.kernel_form {
            over.insert("kernel.form".into(), Value::String(form.clone()));
        }
        if let Some(tol) = self.tol {
            over.insert("ode.tol".into(), Value::Float(tol));
        }
        scenario::merge(&mut map, over)?;
        Ok(map)
    }

    pub fn load(&self) -> Result<Scenario> {
        Scenario::from_map(&self.merged()?)
    }
}
