//! The stochastic game loop.
//!
//! Each stage draws the channel state, lets the receiver compute its
//! recommendations, collects every player's action from signals of the
//! previous stage, realizes SINRs and utilities, and updates the shared
//! grim-trigger state from the deviation alarm. Channel draws are the only
//! consumer of randomness, so runs with equal seeds see the same channel
//! path whatever the strategies (common random numbers).

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelModel;
use crate::error::{Error, Result};
use crate::oneshot::{GameParams, PowerProfile};
use crate::strategies::{
    alarm_signal, detect_deviation, recommendation, stage_action, PunishmentState, SignalProfile, StrategyKind,
    DEFAULT_DETECTION_TOL, SOCIAL_GRID,
};

/// Full traces are kept up to this horizon; longer runs keep every 100th stage.
pub const FULL_TRACE_LIMIT: usize = 10_000;
pub const TRACE_STRIDE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMode {
    /// Best-respond at the start stage only, then follow the strategy (and
    /// therefore the punishment).
    OneShotBestResponse,
    /// Best-respond to the others' planned powers at every stage from the start.
    Permanent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub player: usize,
    /// 1-based stage index.
    pub start: usize,
    pub mode: DeviationMode,
}

impl Deviation {
    fn active_at(&self, t: usize) -> bool {
        match self.mode {
            DeviationMode::OneShotBestResponse => t == self.start,
            DeviationMode::Permanent => t >= self.start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub horizon: usize,
    /// Weight `λ` of the current stage; stage `t` is weighted `λ(1-λ)^{t-1}`.
    pub lambda: f64,
    pub seed: u64,
    /// Substream of the seed, one per replicate.
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub deviation: Option<Deviation>,
    #[serde(default = "default_tol")]
    pub detection_tol: f64,
    /// Forces the first-stage state instead of drawing it from the stationary law.
    #[serde(default)]
    pub initial_state: Option<Vec<usize>>,
    #[serde(default = "default_true")]
    pub record_trace: bool,
}

fn default_tol() -> f64 {
    DEFAULT_DETECTION_TOL
}

fn default_true() -> bool {
    true
}

impl EngineConfig {
    pub fn new(horizon: usize, lambda: f64, seed: u64) -> Self {
        EngineConfig {
            horizon,
            lambda,
            seed,
            stream: 0,
            deviation: None,
            detection_tol: DEFAULT_DETECTION_TOL,
            initial_state: None,
            record_trace: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Domain(format!("discount factor must lie in (0, 1), got {}", self.lambda)));
        }
        if !(self.detection_tol > 0.0) {
            return Err(Error::Domain("detection tolerance must be positive".into()));
        }
        if let Some(d) = &self.deviation {
            if d.start == 0 {
                return Err(Error::Domain("deviation start stage is 1-based".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub t: usize,
    pub state: Vec<usize>,
    pub eta: Vec<f64>,
    pub recommended: Vec<bool>,
    pub powers: Vec<f64>,
    pub sinr: Vec<f64>,
    pub utility: Vec<f64>,
    /// Whether each player acted under punishment this stage.
    pub punishing: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub discounted: Vec<f64>,
    pub average: Vec<f64>,
    /// `Σ λ(1-λ)^{t-1}` over the horizon.
    pub weight_sum: f64,
    /// `(1-λ)^T · max stage utility`, bounding what the truncated tail could add.
    pub truncation_bound: Vec<f64>,
    pub max_stage_utility: Vec<f64>,
    pub punishment_stage: Option<usize>,
    pub records: Vec<StageRecord>,
    pub seed: u64,
    pub stream: u64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `Σ_t λ(1-λ)^{t-1} u(t)` together with the tail bound `(1-λ)^T · max u`.
pub fn discounted_utility(stage_utils: &[f64], lambda: f64) -> (f64, f64) {
    let mut acc = Accumulator::default();
    let mut w = lambda;
    for &u in stage_utils {
        acc.add(w * u);
        w *= 1.0 - lambda;
    }
    let sup = stage_utils.iter().copied().fold(0.0, f64::max);
    (acc.value(), (1.0 - lambda).powi(stage_utils.len() as i32) * sup)
}

/// `Σ_{t=1}^{T} λ(1-λ)^{t-1}`, accumulated the same way the engine does.
pub fn discount_weight_sum(lambda: f64, horizon: usize) -> f64 {
    let mut acc = Accumulator::default();
    let mut w = lambda;
    for _ in 0..horizon {
        acc.add(w);
        w *= 1.0 - lambda;
    }
    acc.value()
}

/// One stage's plan: what every player intends to play and what the receiver
/// told them.
#[derive(Debug, Clone)]
pub struct StagePlan {
    pub powers: Vec<f64>,
    pub recommended: Vec<bool>,
}

/// Memo of receiver-computed social optima, keyed by joint state.
#[derive(Debug, Default)]
pub struct SocialCache(HashMap<Vec<usize>, PowerProfile>);

/// Planned powers of all players for one stage.
pub fn plan_stage(
    game: &GameParams,
    kinds: &[StrategyKind],
    state: &[usize],
    eta: &[f64],
    punish: &PunishmentState,
    prev_alarm: &[Option<f64>],
    social: &mut SocialCache,
) -> Result<StagePlan> {
    let k = game.players();
    let mut recs: Vec<(StrategyKind, Option<Vec<usize>>)> = Vec::new();
    let mut recommended = vec![false; k];
    let mut powers = vec![0.0; k];
    for i in 0..k {
        let kind = &kinds[i];
        let mut signal = SignalProfile::private(eta[i]);
        signal.own_sinr_prev = prev_alarm[i];
        if kind.uses_recommendation() {
            let set = match recs.iter().find(|(kd, _)| kd == kind) {
                Some((_, s)) => s.clone(),
                None => {
                    let s = recommendation(kind, game, eta)?;
                    recs.push((*kind, s.clone()));
                    s
                }
            }
            .unwrap_or_default();
            let me = set.contains(&i);
            recommended[i] = me;
            signal.recommended = Some(me);
            signal.k_active = me.then_some(set.len());
        }
        if kind.needs_global_csi() {
            signal.global_state = Some(eta.to_vec());
            if !punish.triggered() {
                let profile = match social.0.get(state) {
                    Some(p) => p.clone(),
                    None => {
                        let (p, _) = game.social_optimum(eta, SOCIAL_GRID)?;
                        social.0.insert(state.to_vec(), p.clone());
                        p
                    }
                };
                signal.social_plan = Some(profile[i]);
            }
        }
        powers[i] = stage_action(kind, game, &signal, punish, i)?;
    }
    Ok(StagePlan { powers, recommended })
}

fn check_dimensions(game: &GameParams, model: &ChannelModel, kinds: &[StrategyKind]) -> Result<()> {
    let k = game.players();
    if kinds.len() != k {
        return Err(Error::Domain(format!("{} strategies for {k} players", kinds.len())));
    }
    if model.players() != k {
        return Err(Error::Domain(format!("channel model has {} players, game has {k}", model.players())));
    }
    for kind in kinds {
        kind.validate()?;
    }
    Ok(())
}

/// Plays one seeded run of the stochastic game.
pub fn run_game(
    game: &GameParams,
    model: &ChannelModel,
    kinds: &[StrategyKind],
    cfg: &EngineConfig,
) -> Result<RunResult> {
    check_dimensions(game, model, kinds)?;
    cfg.validate()?;
    let k = game.players();
    if let Some(d) = &cfg.deviation {
        if d.player >= k {
            return Err(Error::Domain(format!("deviating player {} out of range", d.player)));
        }
    }
    if !model.is_irreducible() {
        return Err(Error::Reducible("the engine needs an irreducible transition law".into()));
    }
    let space = model.space();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);
    let mut state = match &cfg.initial_state {
        Some(s) => {
            if s.len() != k || s.iter().enumerate().any(|(i, x)| *x >= space.gains(i).len()) {
                return Err(Error::Domain(format!("initial state {s:?} outside the state space")));
            }
            s.clone()
        }
        None => model.initial_state(&mut rng)?,
    };

    let keep = |t: usize| cfg.record_trace && (cfg.horizon <= FULL_TRACE_LIMIT || (t - 1).is_multiple_of(TRACE_STRIDE));
    let mut punish = PunishmentState::default();
    let mut prev_alarm: Vec<Option<f64>> = vec![None; k];
    let mut social = SocialCache::default();
    let mut disc = vec![Accumulator::default(); k];
    let mut total = vec![Accumulator::default(); k];
    let mut max_u = vec![0.0f64; k];
    let mut weight = Accumulator::default();
    let mut w = cfg.lambda;
    let mut records = Vec::new();

    for t in 1..=cfg.horizon {
        if t > 1 {
            state = model.sample_next(&state, &mut rng);
        }
        let eta = space.realization(&state);
        let plan = plan_stage(game, kinds, &state, &eta, &punish, &prev_alarm, &mut social)?;

        let mut powers = plan.powers.clone();
        let deviator = cfg.deviation.map(|d| d.player);
        if let Some(d) = cfg.deviation.filter(|d| d.active_at(t)) {
            let interference: f64 = (0..k).filter(|&j| j != d.player).map(|j| plan.powers[j] * eta[j]).sum();
            powers[d.player] = game.best_response_to_interference(d.player, eta[d.player], interference);
        }

        let sinr = game.sinrs(&eta, &powers);
        let utility: Vec<f64> = (0..k).map(|i| game.utility_from_sinr(i, powers[i], sinr[i])).collect();
        let punishing = vec![punish.triggered(); k];

        let mut alarm = vec![None; k];
        for i in 0..k {
            let observed = alarm_signal(game, &eta, &powers, i);
            alarm[i] = Some(observed);
            if Some(i) == deviator || punish.triggered() {
                continue;
            }
            let expected = alarm_signal(game, &eta, &plan.powers, i);
            if detect_deviation(expected, observed, cfg.detection_tol) {
                punish.trigger(t);
            }
        }
        prev_alarm = alarm;

        weight.add(w);
        for i in 0..k {
            disc[i].add(w * utility[i]);
            total[i].add(utility[i]);
            max_u[i] = max_u[i].max(utility[i]);
        }
        w *= 1.0 - cfg.lambda;

        if keep(t) {
            records.push(StageRecord {
                t,
                state: state.clone(),
                eta,
                recommended: plan.recommended,
                powers,
                sinr,
                utility,
                punishing,
            });
        }
    }

    let tail = (1.0 - cfg.lambda).powi(cfg.horizon as i32);
    Ok(RunResult {
        discounted: disc.iter().map(Accumulator::value).collect(),
        average: total.iter().map(|a| a.value() / cfg.horizon as f64).collect(),
        weight_sum: weight.value(),
        truncation_bound: max_u.iter().map(|m| tail * m).collect(),
        max_stage_utility: max_u,
        punishment_stage: punish.trigger_stage(),
        records,
        seed: cfg.seed,
        stream: cfg.stream,
    })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Mean and standard error of `xs`; the error is NaN for fewer than two samples.
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let stderr = if xs.len() < 2 {
            f64::NAN
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Estimate { mean, stderr }
    }
}

/// Derives the seed of sweep point `index` from a master seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Time-average utility per replicate and player, `[replicate][player]`.
///
/// Replicate `r` runs on substream `r` of `seed`, so calls with the same seed
/// share channel paths.
pub fn replicate_averages(
    game: &GameParams,
    model: &ChannelModel,
    kinds: &[StrategyKind],
    horizon: usize,
    seed: u64,
    replicates: usize,
) -> Result<Vec<Vec<f64>>> {
    if replicates == 0 {
        return Err(Error::Domain("at least one replicate is required".into()));
    }
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut cfg = EngineConfig::new(horizon, 0.5, seed);
            cfg.stream = r;
            cfg.record_trace = false;
            run_game(game, model, kinds, &cfg).map(|res| res.average)
        })
        .collect()
}

/// Long-run expected stage utility per player, estimated by time averages
/// over `horizon` stages and summarized across replicates.
pub fn estimate_expected_utility(
    game: &GameParams,
    model: &ChannelModel,
    kinds: &[StrategyKind],
    horizon: usize,
    seed: u64,
    replicates: usize,
) -> Result<Vec<Estimate>> {
    let reps = replicate_averages(game, model, kinds, horizon, seed, replicates)?;
    Ok(summarize(&reps))
}

/// Per-player estimates from `[replicate][player]` samples.
pub fn summarize(reps: &[Vec<f64>]) -> Vec<Estimate> {
    let k = reps[0].len();
    (0..k)
        .map(|i| Estimate::from_samples(&reps.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect()
}

/// Paired per-player difference `a - b` of replicate samples.
pub fn paired_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Estimate> {
    let diff: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect();
    summarize(&diff)
}

/// Exact long-run expected stage utility of a compliant (never punished)
/// strategy profile, by enumerating the stationary law.
pub fn stationary_expected_utility(
    game: &GameParams,
    model: &ChannelModel,
    kinds: &[StrategyKind],
) -> Result<Vec<f64>> {
    check_dimensions(game, model, kinds)?;
    let k = game.players();
    let mut social = SocialCache::default();
    let mut out = vec![0.0; k];
    let mut err = None;
    model.for_each_state(|state, eta, prob| {
        if err.is_some() {
            return;
        }
        match plan_stage(game, kinds, state, eta, &PunishmentState::default(), &vec![None; k], &mut social) {
            Ok(plan) => {
                for (o, u) in out.iter_mut().zip(game.utilities(eta, &plan.powers)) {
                    *o += prob * u;
                }
            }
            Err(e) => err = Some(e),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{build_model, ChannelModelSpec};
    use crate::efficiency::EfficiencyFunction;
    use approx::assert_relative_eq;

    fn game(k: usize, a: f64) -> GameParams {
        GameParams::symmetric(k, 1.0, 1.0, 100.0, EfficiencyFunction::exponential(a).unwrap()).unwrap()
    }

    fn two_state(k: usize) -> ChannelModel {
        build_model(&ChannelModelSpec::TwoState { eta_min: 1.0, eta_max: 4.0, p_high: 0.5 }, k).unwrap()
    }

    fn constant(k: usize, eta: f64) -> ChannelModel {
        build_model(&ChannelModelSpec::TwoState { eta_min: eta, eta_max: eta, p_high: 0.5 }, k).unwrap()
    }

    #[test]
    fn discounted_utility_examples() {
        let (v, tail) = discounted_utility(&vec![2.5; 5000], 0.01);
        assert_relative_eq!(v, 2.5, max_relative = 1e-12);
        assert!(tail < 1e-20);
        assert_eq!(discounted_utility(&[1.0, 0.0, 0.0, 0.0], 0.5).0, 0.5);
        assert_eq!(discounted_utility(&[1.0, 1.0], 0.5).0, 0.75);
    }

    #[test]
    fn single_stage_nash() {
        let g = game(1, 0.1);
        let res = run_game(&g, &constant(1, 1.0), &[StrategyKind::OneShotNash], &EngineConfig::new(1, 0.9, 1)).unwrap();
        assert_relative_eq!(res.discounted[0], 0.9 * 10.0 * (-1.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(res.discounted[0], 3.3109, epsilon = 1e-4);
    }

    #[test]
    fn runs_are_deterministic() {
        let g = game(3, 0.1);
        let m = two_state(3);
        let kinds = [StrategyKind::Bus; 3];
        let cfg = EngineConfig::new(500, 0.05, 99);
        let a = run_game(&g, &m, &kinds, &cfg).unwrap();
        let b = run_game(&g, &m, &kinds, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_replays_bus_selection() {
        let g = game(2, 0.1);
        let res = run_game(&g, &two_state(2), &[StrategyKind::Bus; 2], &EngineConfig::new(400, 0.1, 5)).unwrap();
        assert_eq!(res.records.len(), 400);
        for r in &res.records {
            let set = crate::strategies::bus_select(&g, &r.eta).unwrap();
            let rec: Vec<usize> = (0..2).filter(|&i| r.recommended[i]).collect();
            assert_eq!(rec, set);
            assert_eq!(g.utilities(&r.eta, &r.powers), r.utility);
        }
        assert_eq!(res.punishment_stage, None);
    }

    #[test]
    fn weights_and_bounds() {
        let g = game(2, 0.1);
        let res = run_game(&g, &two_state(2), &[StrategyKind::OperatingPoint; 2], &EngineConfig::new(50, 0.1, 2)).unwrap();
        assert_relative_eq!(res.weight_sum, 1.0 - 0.9f64.powi(50), epsilon = 1e-12);
        for i in 0..2 {
            assert!(res.discounted[i] >= 0.0 && res.discounted[i] <= res.max_stage_utility[i]);
        }
    }

    #[test]
    fn thinning_long_runs() {
        let g = game(1, 0.1);
        let res = run_game(&g, &constant(1, 1.0), &[StrategyKind::OneShotNash], &EngineConfig::new(20_000, 0.1, 2)).unwrap();
        assert_eq!(res.records.len(), 200);
        assert_eq!(res.records[1].t, 101);
    }

    #[test]
    fn deterministic_estimate() {
        let g = game(1, 0.1);
        let est = estimate_expected_utility(&g, &constant(1, 1.0), &[StrategyKind::OneShotNash], 100, 1, 4).unwrap();
        assert_relative_eq!(est[0].mean, 10.0 * (-1.0f64).exp(), max_relative = 1e-12);
        assert!(est[0].stderr < 1e-12);
    }

    #[test]
    fn operating_point_expectation_closed_form() {
        let g = game(2, 0.1);
        let exact = stationary_expected_utility(&g, &two_state(2), &[StrategyKind::OperatingPoint; 2]).unwrap();
        let closed = 2.5 * (-1.1f64).exp() / 0.1;
        assert_relative_eq!(exact[0], closed, max_relative = 1e-12);
        assert_relative_eq!(closed, 8.32178, epsilon = 1e-5);
        let est = estimate_expected_utility(&g, &two_state(2), &[StrategyKind::OperatingPoint; 2], 20_000, 3, 8).unwrap();
        for e in est {
            assert!((e.mean - closed).abs() < 3.0 * e.stderr, "{e:?}");
        }
    }

    #[test]
    fn time_sharing_enumeration() {
        let g = game(2, 0.1);
        let m = two_state(2);
        // enumerate joint states by hand with the lower-index tie rule
        let solo = |eta: f64| eta * (-1.0f64).exp() / 0.1;
        let mut oracle = [0.0; 2];
        for (e0, e1) in [(1.0, 1.0), (1.0, 4.0), (4.0, 1.0), (4.0, 4.0)] {
            let winner = if e1 > e0 { 1 } else { 0 };
            oracle[winner] += 0.25 * solo(if winner == 0 { e0 } else { e1 });
        }
        let exact = stationary_expected_utility(&g, &m, &[StrategyKind::PureTimeSharing; 2]).unwrap();
        assert_relative_eq!(exact[0], oracle[0], max_relative = 1e-12);
        assert_relative_eq!(exact[1], oracle[1], max_relative = 1e-12);
        let est = estimate_expected_utility(&g, &m, &[StrategyKind::PureTimeSharing; 2], 20_000, 8, 8).unwrap();
        for i in 0..2 {
            assert!((est[i].mean - oracle[i]).abs() < 3.0 * est[i].stderr);
        }
    }

    #[test]
    fn silent_deviator_is_caught() {
        let g = game(2, 0.1);
        let m = build_model(&ChannelModelSpec::TwoState { eta_min: 0.2, eta_max: 4.0, p_high: 0.5 }, 2).unwrap();
        let mut cfg = EngineConfig::new(30, 0.1, 4);
        cfg.initial_state = Some(vec![1, 0]);
        cfg.deviation = Some(Deviation { player: 1, start: 1, mode: DeviationMode::OneShotBestResponse });
        let res = run_game(&g, &m, &[StrategyKind::PureTimeSharing; 2], &cfg).unwrap();
        assert!(!res.records[0].recommended[1]);
        assert!(res.records[0].powers[1] > 0.0);
        assert_eq!(res.punishment_stage, Some(1));
        for r in &res.records[1..] {
            assert!(r.punishing.iter().all(|p| *p));
            let nash = g.nash_powers(&r.eta).unwrap();
            assert_eq!(r.powers, nash.0);
        }
    }

    #[test]
    fn permanent_deviation_ends_in_nash() {
        let g = game(3, 0.1);
        let mut cfg = EngineConfig::new(200, 0.1, 6);
        cfg.deviation = Some(Deviation { player: 0, start: 10, mode: DeviationMode::Permanent });
        let res = run_game(&g, &two_state(3), &[StrategyKind::Bus; 3], &cfg).unwrap();
        let t0 = res.punishment_stage.expect("deviation detected");
        assert_eq!(t0, 10);
        for r in res.records.iter().filter(|r| r.t > t0) {
            let nash = g.nash_powers(&r.eta).unwrap();
            for i in 0..3 {
                assert_relative_eq!(r.powers[i], nash[i], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = game(2, 0.1);
        let m = two_state(2);
        assert!(run_game(&g, &m, &[StrategyKind::Bus], &EngineConfig::new(10, 0.1, 1)).is_err());
        assert!(run_game(&g, &m, &[StrategyKind::Bus; 2], &EngineConfig::new(0, 0.1, 1)).is_err());
        assert!(run_game(&g, &m, &[StrategyKind::Bus; 2], &EngineConfig::new(10, 1.0, 1)).is_err());
        let mut cfg = EngineConfig::new(10, 0.1, 1);
        cfg.initial_state = Some(vec![0, 5]);
        assert!(run_game(&g, &m, &[StrategyKind::Bus; 2], &cfg).is_err());
        let sat = game(3, 0.5);
        let err = run_game(&sat, &two_state(3), &[StrategyKind::OneShotNash; 3], &EngineConfig::new(10, 0.1, 1));
        assert!(matches!(err, Err(Error::NonSaturationViolated(_))));
    }

    #[test]
    fn social_optimum_strategy_runs() {
        let g = game(2, 0.5);
        let m = two_state(2);
        let so = stationary_expected_utility(&g, &m, &[StrategyKind::SocialOptimum; 2]).unwrap();
        let bus = stationary_expected_utility(&g, &m, &[StrategyKind::Bus; 2]).unwrap();
        assert!(so.iter().sum::<f64>() >= bus.iter().sum::<f64>() - 1e-12);
        let res = run_game(&g, &m, &[StrategyKind::SocialOptimum; 2], &EngineConfig::new(100, 0.1, 1)).unwrap();
        assert_eq!(res.punishment_stage, None);
    }
}
