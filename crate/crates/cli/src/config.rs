//! Run configuration: defaults, then a `key=value` file, then flags.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use phaseforge::posterior::DEFAULT_GRID_SIZE;
use phaseforge::{CostFunction, PhaseMode};
use serde::Serialize;

use crate::error::CliError;

/// Settings shared by every subcommand. Each is optional so that a flag
/// left unset falls back to the config file and then to the default.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Mean photon numbers |α|², comma separated.
    #[arg(long = "alpha-sq", value_delimiter = ',')]
    pub alpha_sq: Option<Vec<f64>>,
    /// Adaptive steps L, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    /// PNR resolution m, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pnr: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Posterior grid size (power of two, at least 8).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Design cost: `sharpness` or `mi`.
    #[arg(long)]
    pub cost: Option<CostFunction>,
    /// True phase per trial: `random` or `fixed:<rad>`.
    #[arg(long = "phase-mode")]
    pub phase_mode: Option<PhaseMode>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-step trajectories (`steps.csv`).
    #[arg(long = "emit-steps")]
    pub emit_steps: bool,
    /// Input tables for `fit` (curve or sweep), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub input: Option<Vec<PathBuf>>,
    /// `key=value` configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 11] = [
    "alpha-sq",
    "steps",
    "pnr",
    "trials",
    "seed",
    "grid",
    "cost",
    "phase-mode",
    "out",
    "emit-steps",
    "input",
];

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    Flag,
    ConfigLine(usize),
}

impl Settings {
    /// Parses a `key=value` file. Blank lines and `#` comments are ignored;
    /// keys accept `-` or `_`.
    pub fn parse_file(text: &str, path: &Path) -> Result<(Self, HashMap<&'static str, usize>), CliError> {
        let mut settings = Self::default();
        let mut lines = HashMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if content.is_empty() {
                continue;
            }
            let fail = |field: &str, message: String| CliError::Config {
                path: path.to_path_buf(),
                line,
                field: field.to_string(),
                message,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| fail("", "expected `key=value`".into()))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            let key = KEYS
                .into_iter()
                .find(|k| *k == key)
                .ok_or_else(|| fail(&key, "unknown key".into()))?;
            if lines.insert(key, line).is_some() {
                return Err(fail(key, "given more than once".into()));
            }
            let bad = |e: String| fail(key, e);
            match key {
                "alpha-sq" => settings.alpha_sq = Some(list(value).map_err(bad)?),
                "steps" => settings.steps = Some(list(value).map_err(bad)?),
                "pnr" => settings.pnr = Some(list(value).map_err(bad)?),
                "trials" => settings.trials = Some(one(value).map_err(bad)?),
                "seed" => settings.seed = Some(one(value).map_err(bad)?),
                "grid" => settings.grid = Some(one(value).map_err(bad)?),
                "cost" => settings.cost = Some(one(value).map_err(bad)?),
                "phase-mode" => settings.phase_mode = Some(one(value).map_err(bad)?),
                "out" => settings.out = Some(PathBuf::from(value)),
                "emit-steps" => settings.emit_steps = one(value).map_err(bad)?,
                "input" => settings.input = Some(value.split(',').map(|p| PathBuf::from(p.trim())).collect()),
                _ => unreachable!("key list is exhaustive"),
            }
        }
        Ok((settings, lines))
    }
}

fn one<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| one(v.trim())).collect()
}

/// Fully resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub alpha_sq: Vec<f64>,
    pub steps: Vec<usize>,
    pub pnr: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub grid: usize,
    pub cost: CostFunction,
    pub phase_mode: PhaseMode,
    pub out: PathBuf,
    pub emit_steps: bool,
    pub input: Vec<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    origins: HashMap<&'static str, Origin>,
}

/// Per-command defaults for the list-valued settings.
pub struct Defaults {
    pub alpha_sq: Vec<f64>,
    pub steps: Vec<usize>,
    pub pnr: Vec<usize>,
}

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    /// Merges flags over the optional config file over `defaults`.
    pub fn resolve(flags: Settings, defaults: Defaults, threads: Option<usize>) -> Result<Self, CliError> {
        let (file, lines) = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
                    path: path.clone(),
                    source,
                })?;
                Settings::parse_file(&text, path)?
            }
            None => (Settings::default(), HashMap::new()),
        };
        let mut origins = HashMap::new();
        let mut pick = |key: &'static str, flag_set: bool| {
            let origin = if flag_set {
                Origin::Flag
            } else if let Some(line) = lines.get(key) {
                Origin::ConfigLine(*line)
            } else {
                Origin::Default
            };
            origins.insert(key, origin);
        };
        pick("alpha-sq", flags.alpha_sq.is_some());
        pick("steps", flags.steps.is_some());
        pick("pnr", flags.pnr.is_some());
        pick("trials", flags.trials.is_some());
        pick("seed", flags.seed.is_some());
        pick("grid", flags.grid.is_some());
        pick("cost", flags.cost.is_some());
        pick("phase-mode", flags.phase_mode.is_some());
        pick("out", flags.out.is_some());
        pick("emit-steps", flags.emit_steps);
        pick("input", flags.input.is_some());
        Ok(Self {
            alpha_sq: flags.alpha_sq.or(file.alpha_sq).unwrap_or(defaults.alpha_sq),
            steps: flags.steps.or(file.steps).unwrap_or(defaults.steps),
            pnr: flags.pnr.or(file.pnr).unwrap_or(defaults.pnr),
            trials: flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            grid: flags.grid.or(file.grid).unwrap_or(DEFAULT_GRID_SIZE),
            cost: flags.cost.or(file.cost).unwrap_or(CostFunction::ExpectedSharpness),
            phase_mode: flags.phase_mode.or(file.phase_mode).unwrap_or(PhaseMode::RandomUniform),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            emit_steps: flags.emit_steps || file.emit_steps,
            input: flags.input.or(file.input).unwrap_or_default(),
            threads,
            origins,
        })
    }

    pub fn origin(&self, key: &str) -> Origin {
        self.origins.get(key).copied().unwrap_or(Origin::Default)
    }

    /// A diagnostic naming where `key` was set.
    pub fn invalid(&self, key: &'static str, message: impl Into<String>) -> CliError {
        CliError::Invalid {
            field: key,
            origin: self.origin(key),
            message: message.into(),
        }
    }
}

/// Reads `PHASEFORGE_THREADS`; unset or empty means the rayon default.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("PHASEFORGE_THREADS") {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "PHASEFORGE_THREADS must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> Defaults {
        Defaults {
            alpha_sq: vec![1.0],
            steps: vec![200],
            pnr: vec![1],
        }
    }

    #[test]
    fn parses_file() {
        let text =
            "# comment\nalpha_sq = 1, 2\nsteps=10\ncost=mi   # trailing\nphase-mode=fixed:0.5\nemit-steps=true\n";
        let (s, lines) = Settings::parse_file(text, Path::new("c.cfg")).unwrap();
        assert_eq!(s.alpha_sq, Some(vec![1.0, 2.0]));
        assert_eq!(s.steps, Some(vec![10]));
        assert_eq!(s.cost, Some(CostFunction::MutualInformation));
        assert_eq!(s.phase_mode, Some(PhaseMode::Fixed(0.5)));
        assert!(s.emit_steps);
        assert_eq!(lines["cost"], 4);
    }

    #[test]
    fn file_errors_name_line_and_field() {
        let err = Settings::parse_file("trials=3\npnr=x\n", Path::new("c.cfg")).unwrap_err();
        match err {
            CliError::Config { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "pnr");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(Settings::parse_file("colour=red\n", Path::new("c")).is_err());
        assert!(Settings::parse_file("trials\n", Path::new("c")).is_err());
        assert!(Settings::parse_file("seed=1\nseed=2\n", Path::new("c")).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "trials=7\nseed=9\n").unwrap();
        let flags = Settings {
            trials: Some(3),
            config: Some(path),
            ..Settings::default()
        };
        let config = RunConfig::resolve(flags, defaults(), None).unwrap();
        assert_eq!(config.trials, 3);
        assert_eq!(config.seed, 9);
        assert_eq!(config.origin("trials"), Origin::Flag);
        assert_eq!(config.origin("seed"), Origin::ConfigLine(2));
        assert_eq!(config.origin("grid"), Origin::Default);
        assert_eq!(config.steps, vec![200]);
    }
}
