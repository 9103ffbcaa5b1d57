//! Seeded, scenario-parallel experiment runs writing CSV tables and a
//! resolved-config JSON sidecar.

mod output;
mod runners;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use output::{format_float, trace_table, Table};
pub use runners::{
    alpha_sweep, crlb_curves, design_waveforms, evaluation_draws, feasibility, power_map, robust, AlphaSweep,
    CrlbRow, Design, FeasibilityRow, PowerMap, Prepared, RobustRow, SweepRow,
};

use crate::optim::OptimizerConfig;
use crate::scenario::{Alpha, ScenarioConfig};
use crate::stochastic::PerturbationSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Feasibility,
    AlphaSweep,
    PowerMap,
    Robust,
    CrlbCurves,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::Feasibility, Command::AlphaSweep, Command::PowerMap, Command::Robust, Command::CrlbCurves];

    pub fn name(self) -> &'static str {
        match self {
            Command::Feasibility => "feasibility",
            Command::AlphaSweep => "alpha-sweep",
            Command::PowerMap => "power-map",
            Command::Robust => "robust",
            Command::CrlbCurves => "crlb-curves",
        }
    }

    /// α values used when the config leaves `alphas` unset.
    pub fn default_alphas(self) -> Vec<Alpha> {
        match self {
            Command::Feasibility => vec![Alpha(2.0), Alpha(4.0), Alpha(10.0)],
            Command::AlphaSweep => vec![Alpha(2.0), Alpha(4.0), Alpha(8.0), Alpha::INFINITE],
            _ => Vec::new(),
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// JSON experiment configuration. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    /// Number of random scenarios.
    pub scenarios: usize,
    pub seed: u64,
    /// α list for `feasibility` and `alpha-sweep`; other commands use
    /// `scenario.alpha`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<Alpha>>,
    /// σ_e levels at which designs are evaluated.
    pub sigma_e: Vec<f64>,
    /// Batch sizes of the robust designs.
    pub sample_sizes: Vec<usize>,
    /// Parameter draws per evaluation level.
    pub eval_draws: usize,
    pub perturbation: PerturbationSpec,
    pub optimizer: OptimizerConfig,
    pub stochastic_optimizer: OptimizerConfig,
    /// Also write one iteration-trace CSV per optimizer run.
    pub traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            scenarios: 20,
            seed: 0,
            alphas: None,
            sigma_e: vec![0.0, 25.0, 50.0],
            sample_sizes: vec![1, 10, 30],
            eval_draws: 100,
            perturbation: PerturbationSpec::default(),
            optimizer: OptimizerConfig::default(),
            stochastic_optimizer: OptimizerConfig::stochastic_default(),
            traces: false,
        }
    }
}

fn keyed(key: &str, err: Error) -> Error {
    match err {
        Error::Config(msg) if msg.starts_with('`') => Error::Config(format!("`{key}.{}", &msg[1..])),
        Error::Config(msg) | Error::InvalidParameter(msg) => Error::Config(format!("`{key}`: {msg}")),
        other => Error::Config(format!("`{key}`: {other}")),
    }
}

impl ExperimentConfig {
    /// Parses JSON; errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("`{path}`: {inner}"))
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn alphas_for(&self, command: Command) -> Vec<Alpha> {
        self.alphas.clone().unwrap_or_else(|| command.default_alphas())
    }

    pub fn validate(&self, command: Command) -> Result<()> {
        self.scenario.validate().map_err(|e| keyed("scenario", e))?;
        if self.scenarios == 0 {
            return Err(Error::Config("`scenarios`: must be at least 1".into()));
        }
        self.perturbation.validate().map_err(|e| keyed("perturbation", e))?;
        self.optimizer.validate().map_err(|e| keyed("optimizer", e))?;
        self.stochastic_optimizer.validate().map_err(|e| keyed("stochastic_optimizer", e))?;
        let alphas = self.alphas_for(command);
        match command {
            Command::Feasibility | Command::AlphaSweep => {
                if alphas.is_empty() {
                    return Err(Error::Config("`alphas`: list is empty".into()));
                }
                if command == Command::Feasibility && alphas.iter().any(|a| !a.is_finite()) {
                    return Err(Error::Config("`alphas`: feasibility needs finite α".into()));
                }
            }
            Command::PowerMap => {
                if !self.scenario.is_rectangular() {
                    return Err(Error::Config(
                        "`scenario.resource_elements`: power map needs a rectangular grid".into(),
                    ));
                }
            }
            Command::Robust | Command::CrlbCurves => {
                if self.sigma_e.is_empty() {
                    return Err(Error::Config("`sigma_e`: list is empty".into()));
                }
                if let Some(v) = self.sigma_e.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    return Err(Error::Config(format!("`sigma_e`: levels must be non-negative, got {v}")));
                }
                if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
                    return Err(Error::Config("`sample_sizes`: need a nonempty list of positive sizes".into()));
                }
                if self.eval_draws == 0 {
                    return Err(Error::Config("`eval_draws`: must be at least 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// A fully resolved run: what to do, with which settings, and where to
/// write.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub command: Command,
    pub out_dir: PathBuf,
    pub config: ExperimentConfig,
}

impl ExperimentSpec {
    /// Fills in command-specific defaults and validates.
    pub fn new(command: Command, mut config: ExperimentConfig, out_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate(command)?;
        if matches!(command, Command::Feasibility | Command::AlphaSweep) {
            config.alphas = Some(config.alphas_for(command));
        }
        Ok(Self { command, out_dir: out_dir.into(), config })
    }

    /// `<command>_seed<seed>` plus an optional suffix.
    pub fn file_stem(&self, suffix: &str) -> String {
        format!("{}_seed{}{suffix}", self.command.name(), self.config.seed)
    }
}

/// Named tables produced by one run, in output order.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<(String, Table)>,
    pub traces: Vec<(String, Table)>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

/// Runs the experiment without touching the filesystem.
pub fn execute(spec: &ExperimentSpec) -> Result<RunOutput> {
    let cfg = &spec.config;
    let mut out = RunOutput::default();
    match spec.command {
        Command::Feasibility => {
            let (rows, traces) = feasibility(cfg, &cfg.alphas_for(spec.command))?;
            out.tables.push((spec.file_stem(".csv"), FeasibilityRow::table(&rows)));
            out.traces = traces;
        }
        Command::AlphaSweep => {
            let sweep = alpha_sweep(cfg, &cfg.alphas_for(spec.command))?;
            out.tables.push((spec.file_stem(".csv"), sweep.table()));
            out.traces = sweep.traces;
        }
        Command::PowerMap => {
            let map = power_map(cfg)?;
            out.tables.push((spec.file_stem(".csv"), map.matrix_table()));
            out.tables.push((spec.file_stem("_corners.csv"), map.corner_table()));
            out.traces = map.traces;
        }
        Command::Robust => {
            let (rows, traces) = robust(cfg)?;
            out.tables.push((spec.file_stem(".csv"), RobustRow::table(&rows)));
            out.traces = traces;
        }
        Command::CrlbCurves => {
            let (rows, traces) = crlb_curves(cfg)?;
            out.tables.push((spec.file_stem(".csv"), CrlbRow::table(&rows)));
            out.traces = traces;
        }
    }
    if !cfg.traces {
        out.traces.clear();
    }
    Ok(out)
}

/// Runs the experiment and writes its CSVs, traces (if enabled) and
/// `config_resolved.json` into `spec.out_dir`. Returns the written paths.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let out = execute(spec)?;
    std::fs::create_dir_all(&spec.out_dir)?;
    let mut written = Vec::new();
    for (name, table) in &out.tables {
        let path = spec.out_dir.join(name);
        table.save(&path)?;
        written.push(path);
    }
    if !out.traces.is_empty() {
        let dir = spec.out_dir.join("traces");
        std::fs::create_dir_all(&dir)?;
        for (name, table) in &out.traces {
            let path = dir.join(name);
            table.save(&path)?;
            written.push(path);
        }
    }
    let path = spec.out_dir.join("config_resolved.json");
    let json = serde_json::to_string_pretty(spec).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, json + "\n")?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_json(r#"{"scenario": {"n_txx": 4}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_txx"), "{msg}");
    }

    #[test]
    fn bad_value_names_its_path() {
        let err = ExperimentConfig::from_json(r#"{"scenario": {"power": "ten"}}"#).unwrap_err();
        assert!(err.to_string().contains("scenario.power"), "{err}");
        let cfg = ExperimentConfig::from_json(r#"{"scenario": {"power": -1}}"#).unwrap();
        let err = cfg.validate(Command::Robust).unwrap_err();
        assert!(err.to_string().contains("scenario.power"), "{err}");
    }

    #[test]
    fn infinite_alpha_round_trips() {
        let cfg = ExperimentConfig::from_json(r#"{"alphas": [2, "inf"]}"#).unwrap();
        assert_eq!(cfg.alphas.as_deref(), Some(&[Alpha(2.0), Alpha::INFINITE][..]));
        assert!(cfg.validate(Command::Feasibility).is_err());
        assert!(cfg.validate(Command::AlphaSweep).is_ok());
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains(r#""alphas":[2.0,"inf"]"#), "{json}");
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
    }
}
