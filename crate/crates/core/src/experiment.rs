//! Experiment configs, presets and artifact writing for the command-line runner.
//!
//! A run is computed entirely in memory and only then written out, so a
//! config that fails validation or hits a model error leaves no files behind.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{self, Scenario};
use crate::channels::{ChannelModel, ChannelModelSpec};
use crate::efficiency::EfficiencyFunction;
use crate::engine::{derive_seed, run_game, summarize, Deviation, EngineConfig, Estimate};
use crate::error::{Error, Result};
use crate::strategies::{StrategyKind, DEFAULT_DETECTION_TOL};

pub const DEFAULT_RATE: f64 = 1.0;
pub const DEFAULT_NOISE: f64 = 1.0;
pub const DEFAULT_P_MAX: f64 = 100.0;
pub const DEFAULT_HORIZON: usize = 100_000;
pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const DEFAULT_REPLICATES: usize = 10;
pub const DEFAULT_REGION_GRID: usize = 24;
pub const DEFAULT_SEED: u64 = 20_100_401;
pub const DEFAULT_RAYLEIGH: ChannelModelSpec =
    ChannelModelSpec::TruncatedRayleigh { scale: 1.0, eta_min: 0.1, eta_max: 10.0, bins: 16 };

pub const PRESETS: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "partition"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Seeded runs of one game; `summary.csv` and optionally `trace.csv`.
    #[default]
    Simulate,
    /// Two-state gain-ratio sweep; `fig2.csv`.
    RatioSweep,
    /// Two-player utility region; `region.csv`, `fstar.csv`, `markers.csv`.
    Region,
    /// Strategy comparison over player counts; `dominance.csv`, `findings.csv`.
    Dominance,
    /// Discount-factor bound over player counts; `lambda_max.csv`.
    LambdaMax,
    /// BUS configuration frequencies; `partition.csv`.
    Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub players: usize,
    /// Spectral efficiency R. Sets `a = 2^R - 1` unless `a` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    /// One kind for every player, one per player, or the list to compare in sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kinds: Vec<StrategyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<Deviation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `eta_max / eta_min` values for a two-state channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players: Option<Vec<usize>>,
    /// Thresholds of extra T-US strategies added to the comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

impl SweepSection {
    fn is_empty(&self) -> bool {
        self.ratio.is_none() && self.players.is_none() && self.alpha.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Powers per player in the region action grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Player whose partition frequencies are reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub task: Task,
    pub game: GameSection,
    pub channel: ChannelModelSpec,
    #[serde(default)]
    pub strategies: StrategySection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default, skip_serializing_if = "SweepSection::is_empty")]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub outputs: OutputSection,
    /// Values filled with documented defaults rather than taken from a source.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub defaulted: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        // a manifest carries its config under `[config]`
        let value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(toml::Value::Table(cfg)), true) = (value.get("config"), value.contains_key("artifacts")) {
            return cfg.clone().try_into().map_err(|e: toml::de::Error| Error::Config(format!("manifest config: {e}")));
        }
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// A validated config with every default filled in.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub task: Task,
    pub seed: u64,
    pub players: usize,
    pub scenario: Scenario,
    pub kinds: Vec<StrategyKind>,
    pub detection_tol: f64,
    pub horizon: usize,
    pub lambda: f64,
    pub replicates: usize,
    pub sweep_ratio: Vec<f64>,
    pub sweep_players: Vec<usize>,
    pub grid: usize,
    pub partition_player: usize,
    /// Sorted union of preset and resolution-time defaults.
    pub defaulted: Vec<String>,
}

fn non_empty<T: Clone>(axis: &Option<Vec<T>>, name: &str) -> Result<Option<Vec<T>>> {
    match axis {
        Some(v) if v.is_empty() => Err(Error::Config(format!("sweep axis `{name}` must not be empty"))),
        other => Ok(other.clone()),
    }
}

impl Experiment {
    /// Validates `config`; relative model-file paths resolve against `base_dir`.
    pub fn resolve(config: &ExperimentConfig, base_dir: &Path) -> Result<Self> {
        let mut defaulted: BTreeSet<String> = config.defaulted.iter().cloned().collect();
        let mut take = |v: Option<f64>, default: f64, name: &str| {
            v.unwrap_or_else(|| {
                defaulted.insert(name.to_string());
                default
            })
        };
        let g = &config.game;
        if g.players == 0 {
            return Err(Error::Config("game.players must be at least 1".into()));
        }
        let (rate, a) = match (g.rate, g.a) {
            (Some(_), Some(_)) => return Err(Error::Config("give exactly one of game.rate and game.a".into())),
            (None, None) => return Err(Error::Config("one of game.rate or game.a is required".into())),
            (Some(r), None) => {
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::Config(format!("game.rate must be positive, got {r}")));
                }
                (r, r.exp2() - 1.0)
            }
            (None, Some(a)) => (take(None, DEFAULT_RATE, "game.rate"), a),
        };
        let efficiency = EfficiencyFunction::exponential(a).map_err(|e| Error::Config(format!("game.a: {e}")))?;
        let noise = take(g.noise, DEFAULT_NOISE, "game.noise");
        let p_max = take(g.p_max, DEFAULT_P_MAX, "game.p_max");
        let lambda = take(config.engine.lambda, DEFAULT_LAMBDA, "engine.lambda");
        let detection_tol = take(config.strategies.detection_tol, DEFAULT_DETECTION_TOL, "strategies.detection_tol");

        let channel = match &config.channel {
            ChannelModelSpec::File { path } => {
                let p = Path::new(path);
                let full = if p.is_relative() { base_dir.join(p) } else { p.to_path_buf() };
                ChannelModelSpec::File { path: full.to_string_lossy().into_owned() }
            }
            other => other.clone(),
        };
        let scenario = Scenario { rate, noise, p_max, efficiency, channel };

        let mut usize_default = |v: Option<usize>, default: usize, name: &str| {
            v.unwrap_or_else(|| {
                defaulted.insert(name.to_string());
                default
            })
        };
        let horizon = usize_default(config.engine.horizon, DEFAULT_HORIZON, "engine.horizon");
        let replicates = usize_default(config.engine.replicates, DEFAULT_REPLICATES, "engine.replicates");
        let grid = match config.task {
            Task::Region => usize_default(config.analysis.grid, DEFAULT_REGION_GRID, "analysis.grid"),
            _ => config.analysis.grid.unwrap_or(DEFAULT_REGION_GRID),
        };
        let partition_player = config.analysis.player.unwrap_or(0);
        if horizon == 0 || replicates == 0 {
            return Err(Error::Config("engine.horizon and engine.replicates must be at least 1".into()));
        }
        if config.task != Task::Simulate && replicates < 2 && config.task != Task::Partition && config.task != Task::Region {
            return Err(Error::Config("sweeps need engine.replicates >= 2 for standard errors".into()));
        }

        let mut kinds = config.strategies.kinds.clone();
        if kinds.is_empty() {
            kinds.push(StrategyKind::Bus);
            defaulted.insert("strategies.kinds".into());
        }
        let sweep_alpha = non_empty(&config.sweep.alpha, "alpha")?;
        for alpha in sweep_alpha.unwrap_or_default() {
            kinds.push(StrategyKind::Tus { alpha });
        }
        for k in &kinds {
            k.validate().map_err(|e| Error::Config(format!("strategies: {e}")))?;
        }

        let sweep_ratio = non_empty(&config.sweep.ratio, "ratio")?.unwrap_or_default();
        let sweep_players = match (non_empty(&config.sweep.players, "players")?, config.task) {
            (Some(p), _) => p,
            (None, Task::Dominance) => {
                defaulted.insert("sweep.players".into());
                (1..=10).collect()
            }
            (None, Task::LambdaMax) => {
                defaulted.insert("sweep.players".into());
                (2..=10).collect()
            }
            (None, _) => vec![g.players],
        };
        if sweep_players.contains(&0) {
            return Err(Error::Config("sweep.players entries must be at least 1".into()));
        }

        let exp = Experiment {
            config: config.clone(),
            task: config.task,
            seed: config.seed,
            players: g.players,
            scenario,
            kinds,
            detection_tol,
            horizon,
            lambda,
            replicates,
            sweep_ratio,
            sweep_players,
            grid,
            partition_player,
            defaulted: defaulted.into_iter().collect(),
        };
        exp.check_task()?;
        Ok(exp)
    }

    fn check_task(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Config(format!("engine.lambda must lie in (0, 1), got {}", self.lambda)));
        }
        match self.task {
            Task::Simulate => {
                if self.kinds.len() != 1 && self.kinds.len() != self.players {
                    return Err(Error::Config(format!(
                        "strategies.kinds needs 1 or {} entries, got {}",
                        self.players,
                        self.kinds.len()
                    )));
                }
                self.scenario.game(self.players)?;
                self.scenario.model(self.players)?;
            }
            Task::RatioSweep => {
                if self.sweep_ratio.is_empty() {
                    return Err(Error::Config("ratio_sweep needs sweep.ratio".into()));
                }
                if !matches!(self.scenario.channel, ChannelModelSpec::TwoState { .. }) {
                    return Err(Error::Config("ratio_sweep needs a two_state channel".into()));
                }
                if let Some(r) = self.sweep_ratio.iter().find(|r| !(r.is_finite() && **r >= 1.0)) {
                    return Err(Error::Config(format!("sweep.ratio entries must be >= 1, got {r}")));
                }
                for &r in &self.sweep_ratio {
                    self.ratio_scenario(r).model(self.players)?;
                }
            }
            Task::Region => {
                if self.players != 2 {
                    return Err(Error::Config(format!("region needs game.players = 2, got {}", self.players)));
                }
                if self.grid < 2 {
                    return Err(Error::Config("analysis.grid must be at least 2".into()));
                }
            }
            Task::Dominance | Task::LambdaMax => {
                for &k in &self.sweep_players {
                    self.scenario.game(k)?;
                    self.scenario.model(k)?;
                }
            }
            Task::Partition => {
                if self.partition_player >= self.players {
                    return Err(Error::Config(format!("analysis.player {} out of range", self.partition_player)));
                }
            }
        }
        Ok(())
    }

    fn ratio_scenario(&self, ratio: f64) -> Scenario {
        let mut s = self.scenario.clone();
        if let ChannelModelSpec::TwoState { eta_min, eta_max, .. } = &mut s.channel {
            *eta_max = *eta_min * ratio;
        }
        s
    }

    fn engine_config(&self, stream: u64, trace: bool) -> EngineConfig {
        let mut cfg = EngineConfig::new(self.horizon, self.lambda, self.seed);
        cfg.stream = stream;
        cfg.deviation = self.config.engine.deviation;
        cfg.detection_tol = self.detection_tol;
        cfg.initial_state = self.config.engine.initial_state.clone();
        cfg.record_trace = trace;
        cfg
    }
}

/// Named experiments; unstated constants are listed in `defaulted`.
pub fn preset(name: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut defaulted = vec!["game.noise", "game.p_max", "game.rate", "engine.lambda", "engine.replicates"];
    if seed.is_none() {
        defaulted.push("seed");
    }
    let two_state = |ratio: f64| ChannelModelSpec::TwoState { eta_min: 1.0, eta_max: ratio, p_high: 0.5 };
    let game = |players: usize, a: f64| GameSection {
        players,
        rate: None,
        a: Some(a),
        noise: Some(DEFAULT_NOISE),
        p_max: Some(DEFAULT_P_MAX),
    };
    let engine = EngineSection {
        horizon: Some(DEFAULT_HORIZON),
        lambda: Some(DEFAULT_LAMBDA),
        replicates: Some(DEFAULT_REPLICATES),
        deviation: None,
        initial_state: None,
    };
    use StrategyKind::*;
    let (task, game, channel, kinds, sweep, mut extra): (_, _, _, Vec<StrategyKind>, _, Vec<&str>) = match name {
        "fig2" => (
            Task::RatioSweep,
            game(10, 0.1),
            two_state(1.0),
            vec![Bus, OneShotNash, OperatingPoint],
            SweepSection { ratio: Some(vec![1.0, 2.0, 4.0, 8.0]), ..Default::default() },
            vec!["channel.eta_min", "sweep.ratio"],
        ),
        "fig3" => (
            Task::Region,
            game(2, 0.5),
            two_state(4.0),
            vec![Bus, OperatingPoint, OneShotNash, PureTimeSharing],
            SweepSection::default(),
            vec!["channel.eta_min", "channel.p_high", "analysis.grid"],
        ),
        "fig4" => (
            Task::Dominance,
            game(10, 0.1),
            DEFAULT_RAYLEIGH,
            vec![OneShotNash, PureTimeSharing, OperatingPoint, Tus { alpha: 0.5 }, Bus],
            SweepSection { players: Some((1..=10).collect()), ..Default::default() },
            vec!["channel.scale", "channel.eta_min", "channel.eta_max", "channel.bins"],
        ),
        "fig5" => (
            Task::LambdaMax,
            game(10, 0.1),
            DEFAULT_RAYLEIGH,
            vec![Bus, OneShotNash],
            SweepSection { players: Some((2..=10).collect()), ..Default::default() },
            vec!["game.a", "channel", "sweep.players"],
        ),
        "partition" => (
            Task::Partition,
            game(5, 0.2),
            DEFAULT_RAYLEIGH,
            vec![Bus],
            SweepSection::default(),
            vec!["channel", "engine.horizon"],
        ),
        other => {
            return Err(Error::Config(format!("unknown preset `{other}`; valid presets: {}", PRESETS.join(", "))));
        }
    };
    extra.extend(defaulted);
    extra.sort_unstable();
    extra.dedup();
    Ok(ExperimentConfig {
        seed: seed.unwrap_or(DEFAULT_SEED),
        task,
        game,
        channel,
        strategies: StrategySection { kinds, detection_tol: None },
        engine,
        sweep,
        analysis: AnalysisSection { grid: (name == "fig3").then_some(DEFAULT_REGION_GRID), player: None },
        outputs: OutputSection::default(),
        defaulted: extra.into_iter().map(String::from).collect(),
    })
}

/// A named file produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub task: Task,
    pub defaulted: Vec<String>,
    pub artifacts: Vec<ArtifactRecord>,
    pub config: ExperimentConfig,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

fn csv_artifact(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<Artifact> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(Artifact { name: name.into(), bytes })
}

fn player_mean(reps: &[Vec<f64>]) -> Estimate {
    let avg: Vec<f64> = reps.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect();
    Estimate::from_samples(&avg)
}

/// Runs the experiment and returns its CSV artifacts without touching disk.
pub fn compute(exp: &Experiment) -> Result<Vec<Artifact>> {
    match exp.task {
        Task::Simulate => simulate(exp),
        Task::RatioSweep => {
            let points: Vec<Vec<(String, Estimate)>> = exp
                .sweep_ratio
                .par_iter()
                .enumerate()
                .map(|(j, &ratio)| {
                    let s = exp.ratio_scenario(ratio);
                    let game = s.game(exp.players)?;
                    let model = s.model(exp.players)?;
                    let seed = derive_seed(exp.seed, j as u64);
                    let reps = analysis::compare_strategies(&game, &model, &exp.kinds, exp.horizon, exp.replicates, seed)?;
                    Ok(exp.kinds.iter().zip(reps).map(|(k, r)| (k.to_string(), player_mean(&r))).collect())
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for (ratio, pts) in exp.sweep_ratio.iter().zip(points) {
                for (name, e) in pts {
                    rows.push(vec![ratio.to_string(), name, e.mean.to_string(), e.stderr.to_string()]);
                }
            }
            Ok(vec![csv_artifact("fig2.csv", &["ratio", "strategy", "mean", "stderr"], rows)?])
        }
        Task::Region => {
            let game = exp.scenario.game(2)?;
            let model = exp.scenario.model(2)?;
            let region = analysis::feasible_region_2p(&game, &model, exp.grid)?;
            let pts = |v: &[[f64; 2]]| v.iter().map(|p| vec![p[0].to_string(), p[1].to_string()]).collect();
            let mut markers: Vec<Vec<String>> = region
                .markers
                .iter()
                .map(|m| vec![m.name.clone(), m.point[0].to_string(), m.point[1].to_string()])
                .collect();
            markers.push(vec!["minmax".into(), region.minmax[0].to_string(), region.minmax[1].to_string()]);
            Ok(vec![
                csv_artifact("region.csv", &["x", "y"], pts(&region.hull))?,
                csv_artifact("fstar.csv", &["x", "y"], pts(&region.fstar_vertices))?,
                csv_artifact("markers.csv", &["name", "u1", "u2"], markers)?,
            ])
        }
        Task::Dominance => {
            let rep = analysis::dominance_report(
                &exp.scenario,
                &exp.sweep_players,
                &exp.kinds,
                exp.horizon,
                exp.replicates,
                exp.seed,
            )?;
            let rows = rep
                .rows
                .iter()
                .map(|r| vec![r.players.to_string(), r.strategy.clone(), r.mean.to_string(), r.stderr.to_string()])
                .collect();
            let findings = rep
                .findings
                .iter()
                .map(|f| {
                    vec![
                        f.players.to_string(),
                        f.player.to_string(),
                        f.versus.clone(),
                        f.difference.mean.to_string(),
                        f.difference.stderr.to_string(),
                        f.holds.to_string(),
                    ]
                })
                .collect();
            Ok(vec![
                csv_artifact("dominance.csv", &["K", "strategy", "mean", "stderr"], rows)?,
                csv_artifact("findings.csv", &["K", "player", "versus", "difference", "stderr", "holds"], findings)?,
            ])
        }
        Task::LambdaMax => {
            let bounds: Vec<analysis::LambdaBound> = exp
                .sweep_players
                .par_iter()
                .map(|&k| {
                    let game = exp.scenario.game(k)?;
                    let model = exp.scenario.model(k)?;
                    analysis::lambda_max(&game, &model, exp.horizon, exp.replicates, derive_seed(exp.seed, k as u64))
                })
                .collect::<Result<_>>()?;
            let rows = exp
                .sweep_players
                .iter()
                .zip(&bounds)
                .map(|(k, b)| {
                    let n = b.delta.len() as f64;
                    vec![
                        k.to_string(),
                        b.bound.to_string(),
                        b.bound_stderr().to_string(),
                        (b.bus.iter().map(|e| e.mean).sum::<f64>() / n).to_string(),
                        (b.nash.iter().map(|e| e.mean).sum::<f64>() / n).to_string(),
                        b.deviation_gain[0].to_string(),
                        b.warnings.len().to_string(),
                    ]
                })
                .collect();
            Ok(vec![csv_artifact(
                "lambda_max.csv",
                &["K", "lambda_max", "stderr", "bus_mean", "nash_mean", "deviation_gain", "warnings"],
                rows,
            )?])
        }
        Task::Partition => {
            let game = exp.scenario.game(exp.players)?;
            let model = exp.scenario.model(exp.players)?;
            let table = analysis::config_partition(&game, &model, exp.horizon, exp.seed)?;
            let rows = table
                .rows(exp.partition_player)
                .into_iter()
                .map(|(k, h1, h2)| vec![k.to_string(), h1.to_string(), h2.to_string()])
                .collect();
            Ok(vec![csv_artifact("partition.csv", &["k", "H1_freq", "H2_freq"], rows)?])
        }
    }
}

fn simulate(exp: &Experiment) -> Result<Vec<Artifact>> {
    let k = exp.players;
    let game = exp.scenario.game(k)?;
    let model: ChannelModel = exp.scenario.model(k)?;
    let kinds = if exp.kinds.len() == 1 { vec![exp.kinds[0]; k] } else { exp.kinds.clone() };
    let runs = (0..exp.replicates as u64)
        .into_par_iter()
        .map(|r| run_game(&game, &model, &kinds, &exp.engine_config(r, r == 0 && exp.config.outputs.trace)))
        .collect::<Result<Vec<_>>>()?;
    let averages: Vec<Vec<f64>> = runs.iter().map(|r| r.average.clone()).collect();
    let est = summarize(&averages);
    let rows = (0..k)
        .map(|i| {
            let v = runs.iter().map(|r| r.discounted[i]).sum::<f64>() / runs.len() as f64;
            vec![i.to_string(), v.to_string(), est[i].mean.to_string(), est[i].stderr.to_string()]
        })
        .collect();
    let mut out = vec![csv_artifact("summary.csv", &["player", "v_discounted", "u_avg", "stderr"], rows)?];
    if exp.config.outputs.trace {
        let mut rows = Vec::new();
        for rec in &runs[0].records {
            for i in 0..k {
                rows.push(vec![
                    rec.t.to_string(),
                    i.to_string(),
                    rec.eta[i].to_string(),
                    rec.powers[i].to_string(),
                    rec.sinr[i].to_string(),
                    rec.utility[i].to_string(),
                    rec.recommended[i].to_string(),
                    rec.punishing[i].to_string(),
                ]);
            }
        }
        out.push(csv_artifact(
            "trace.csv",
            &["t", "player", "eta", "power", "sinr", "utility", "recommended", "punishing"],
            rows,
        )?);
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_for(exp: &Experiment, artifacts: &[Artifact]) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: exp.seed,
        task: exp.task,
        defaulted: exp.defaulted.clone(),
        artifacts: artifacts
            .iter()
            .map(|a| ArtifactRecord { file: a.name.clone(), sha256: sha256_hex(&a.bytes) })
            .collect(),
        config: exp.config.clone(),
    }
}

/// Where the files of a run went.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// Computes `config` and writes its artifacts plus `manifest.toml` to `out`.
pub fn run_config(config: &ExperimentConfig, base_dir: &Path, out: &Path) -> Result<RunOutcome> {
    let exp = Experiment::resolve(config, base_dir)?;
    let artifacts = compute(&exp)?;
    let manifest = manifest_for(&exp, &artifacts);
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::create_dir_all(out)?;
    for a in &artifacts {
        fs::write(out.join(&a.name), &a.bytes)?;
    }
    fs::write(out.join(MANIFEST_FILE), text)?;
    Ok(RunOutcome { dir: out.to_path_buf(), manifest })
}

/// Loads a config file (or a manifest) and runs it. `task` overrides the
/// config's task; `out` overrides `outputs.dir`.
pub fn run_experiment(path: &Path, task: Option<Task>, out: Option<&Path>) -> Result<RunOutcome> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(t) = task {
        config.task = t;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let dir = match (out, &config.outputs.dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => base.join(d),
        (None, None) => PathBuf::from("out"),
    };
    run_config(&config, base, &dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SMALL: &str = r#"
seed = 7

[game]
players = 3
a = 0.1

[channel]
kind = "two_state"
eta_min = 1.0
eta_max = 2.0
p_high = 0.5

[strategies]
kinds = [{ kind = "bus" }]

[engine]
horizon = 200
replicates = 3
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        let exp = Experiment::resolve(&cfg, Path::new(".")).unwrap();
        assert_eq!(exp.scenario.rate, DEFAULT_RATE);
        assert_eq!(exp.scenario.efficiency.a(), 0.1);
        for key in ["game.rate", "game.noise", "game.p_max", "engine.lambda"] {
            assert!(exp.defaulted.iter().any(|d| d == key), "{key}");
        }
        assert!(!exp.defaulted.iter().any(|d| d == "engine.horizon"));
    }

    #[test]
    fn rate_sets_a() {
        let cfg = ExperimentConfig::from_toml(&SMALL.replace("a = 0.1", "rate = 2.0")).unwrap();
        let exp = Experiment::resolve(&cfg, Path::new(".")).unwrap();
        assert_eq!(exp.scenario.efficiency.a(), 3.0);
        assert!(!exp.defaulted.iter().any(|d| d == "game.rate"));
    }

    #[test]
    fn rejects_bad_configs() {
        let both = SMALL.replace("a = 0.1", "a = 0.1\nrate = 1.0");
        assert!(matches!(Experiment::resolve(&ExperimentConfig::from_toml(&both).unwrap(), Path::new(".")), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml(&SMALL.replace("seed = 7", "")), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml(&SMALL.replace("players", "player")), Err(Error::Config(_))));
        let err = ExperimentConfig::from_toml("seed = 1\n[game\n").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
        let empty_axis = format!("{SMALL}\n[sweep]\nratio = []\n");
        assert!(Experiment::resolve(&ExperimentConfig::from_toml(&empty_axis).unwrap(), Path::new(".")).is_err());
        // (K-1)a >= 1: the Nash profile does not exist
        let saturated = SMALL.replace("a = 0.1", "a = 0.6").replace("\"bus\"", "\"one_shot_nash\"");
        let exp = Experiment::resolve(&ExperimentConfig::from_toml(&saturated).unwrap(), Path::new(".")).unwrap();
        let err = compute(&exp).unwrap_err();
        assert!(matches!(err, Error::NonSaturationViolated(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn presets_resolve() {
        for name in PRESETS {
            let cfg = preset(name, Some(3)).unwrap();
            let exp = Experiment::resolve(&cfg, Path::new(".")).unwrap();
            assert!(exp.defaulted.iter().any(|d| d == "game.noise"));
            assert!(!exp.defaulted.iter().any(|d| d == "seed"));
            let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(back, cfg);
        }
        let fig4 = preset("fig4", None).unwrap();
        assert_eq!(fig4.game.a, Some(0.1));
        assert!(fig4.strategies.kinds.contains(&StrategyKind::Tus { alpha: 0.5 }));
        assert!(fig4.defaulted.iter().any(|d| d == "seed"));
        let part = preset("partition", None).unwrap();
        assert_eq!((part.game.players, part.game.a), (5, Some(0.2)));
        let err = preset("fig9", None).unwrap_err().to_string();
        assert!(err.contains("fig2") && err.contains("partition"));
    }

    #[test]
    fn simulate_is_deterministic() {
        let cfg = ExperimentConfig::from_toml(&format!("{SMALL}\n[outputs]\ntrace = true\n")).unwrap();
        let exp = Experiment::resolve(&cfg, Path::new(".")).unwrap();
        let a = compute(&exp).unwrap();
        let b = compute(&exp).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        let trace = String::from_utf8(a[1].bytes.clone()).unwrap();
        assert_eq!(trace.lines().count(), 1 + 200 * 3);
        let m = manifest_for(&exp, &a);
        assert_eq!(m.artifacts[0].sha256, sha256_hex(&a[0].bytes));
        // the manifest reads back as its config
        let again = ExperimentConfig::from_toml(&toml::to_string(&m).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    fn arb_kind() -> impl Strategy<Value = StrategyKind> {
        prop_oneof![
            Just(StrategyKind::Bus),
            Just(StrategyKind::OneShotNash),
            Just(StrategyKind::OperatingPoint),
            Just(StrategyKind::PureTimeSharing),
            (0.0..1.0f64).prop_map(|alpha| StrategyKind::Tus { alpha }),
        ]
    }

    proptest! {
        #[test]
        fn config_round_trip(
            seed in 0..i64::MAX as u64,
            players in 1usize..12,
            a in prop::option::of(0.01..1.0f64),
            noise in prop::option::of(0.1..10.0f64),
            kinds in prop::collection::vec(arb_kind(), 0..4),
            horizon in prop::option::of(1usize..100_000),
            ratio in prop::option::of(prop::collection::vec(1.0..10.0f64, 1..4)),
            trace in any::<bool>(),
        ) {
            let cfg = ExperimentConfig {
                seed,
                task: Task::Simulate,
                game: GameSection { players, rate: a.is_none().then_some(1.5), a, noise, p_max: None },
                channel: ChannelModelSpec::TwoState { eta_min: 0.5, eta_max: 2.0, p_high: 0.25 },
                strategies: StrategySection { kinds, detection_tol: None },
                engine: EngineSection { horizon, ..Default::default() },
                sweep: SweepSection { ratio, ..Default::default() },
                analysis: AnalysisSection::default(),
                outputs: OutputSection { dir: None, trace },
                defaulted: vec![],
            };
            let text = cfg.to_toml().unwrap();
            prop_assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        }
    }
}
