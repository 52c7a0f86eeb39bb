//! Equilibrium-level quantities of the stochastic game: min-max levels, the
//! two-player feasible utility region, the discount-factor bound for BUS,
//! strategy dominance tables and the BUS configuration partition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{build_model, ChannelModel, ChannelModelSpec};
use crate::efficiency::EfficiencyFunction;
use crate::engine::{derive_seed, paired_difference, replicate_averages, stationary_expected_utility, summarize, Estimate};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::oneshot::GameParams;
use crate::strategies::{bus_select, StrategyKind};

/// Relative tolerance used to merge coincident grid powers.
const GRID_MERGE_TOL: f64 = 1e-12;

fn check_model(game: &GameParams, model: &ChannelModel) -> Result<()> {
    if game.players() != model.players() {
        return Err(Error::Domain(format!(
            "game has {} players but the channel model has {}",
            game.players(),
            model.players()
        )));
    }
    Ok(())
}

/// Best stage utility of player `i` when every opponent transmits at its cap.
pub fn jammed_best_utility(game: &GameParams, eta: &[f64], i: usize) -> f64 {
    let jam: f64 = (0..eta.len()).filter(|&j| j != i).map(|j| game.p_max()[j] * eta[j]).sum();
    let beta = game.beta_star();
    let cap = game.p_max()[i];
    let needed = beta * (jam + game.noise()) / eta[i];
    let power = needed.min(cap);
    let sinr = power * eta[i] / (jam + game.noise());
    game.utility_from_sinr(i, power, sinr)
}

/// Min-max level of player `i`: the stationary expectation of its best reply
/// to full-power jamming.
pub fn minmax_level(game: &GameParams, model: &ChannelModel, i: usize) -> Result<f64> {
    check_model(game, model)?;
    if i >= game.players() {
        return Err(Error::Domain(format!("player {i} out of range")));
    }
    let mut v = 0.0;
    model.for_each_state(|_, eta, prob| v += prob * jammed_best_utility(game, eta, i))?;
    Ok(v)
}

pub fn minmax_levels(game: &GameParams, model: &ChannelModel) -> Result<Vec<f64>> {
    (0..game.players()).map(|i| minmax_level(game, model, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub name: String,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionResult {
    /// Counter-clockwise vertices of the expected-utility region.
    pub hull: Vec<Point>,
    pub minmax: Vec<f64>,
    /// The region clipped to `x >= minmax`; empty if nothing is individually rational.
    pub fstar_vertices: Vec<Point>,
    pub markers: Vec<Marker>,
}

/// Quantized powers of player `i` in state `eta`, at most `size` of them.
///
/// The grid always starts with silence, the Nash power, the two-player
/// operating point and the solo power (whichever exist under the cap), then
/// fills up with log-spaced powers around them.
pub fn region_action_grid(game: &GameParams, eta: &[f64], i: usize, size: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    let push = |grid: &mut Vec<f64>, p: f64| {
        if grid.len() < size && !grid.iter().any(|&q| (q - p).abs() <= GRID_MERGE_TOL * p.max(q)) {
            grid.push(p);
        }
    };
    let exact: Vec<f64> = [
        game.nash_power(i, eta[i]).ok(),
        game.operating_point_power(i, eta[i], 2).ok(),
        game.operating_point_power(i, eta[i], 1).ok(),
    ]
    .into_iter()
    .flatten()
    .collect();
    for &p in &exact {
        push(&mut grid, p);
    }
    let cap = game.p_max()[i];
    let (lo, hi) = if exact.is_empty() {
        (cap * 1e-3, cap)
    } else {
        let lo = exact.iter().cloned().fold(f64::INFINITY, f64::min) / 10.0;
        let hi = (exact.iter().cloned().fold(0.0, f64::max) * 10.0).min(cap);
        (lo.min(hi), hi)
    };
    let fill = size.saturating_sub(grid.len());
    for s in 0..fill {
        let t = if fill == 1 { 1.0 } else { s as f64 / (fill - 1) as f64 };
        push(&mut grid, lo * (hi / lo).powf(t));
    }
    grid
}

/// Stage utility pairs of every grid profile in one state.
fn state_cloud(game: &GameParams, eta: &[f64], size: usize) -> Vec<Point> {
    let g0 = region_action_grid(game, eta, 0, size);
    let g1 = region_action_grid(game, eta, 1, size);
    let mut cloud = Vec::with_capacity(g0.len() * g1.len());
    for &p0 in &g0 {
        for &p1 in &g1 {
            let u = game.utilities(eta, &[p0, p1]);
            cloud.push([u[0], u[1]]);
        }
    }
    cloud
}

/// Expected-utility region of a two-player game over stationary Markov
/// strategies on the quantized action grid, with public randomization.
///
/// Markers for strategies that are undefined for the game (for instance the
/// Nash profile of a saturated game) are left out.
pub fn feasible_region_2p(game: &GameParams, model: &ChannelModel, grid_size: usize) -> Result<RegionResult> {
    check_model(game, model)?;
    if game.players() != 2 {
        return Err(Error::Unsupported(format!(
            "exact regions are only computed for 2 players, got {}",
            game.players()
        )));
    }
    if !model.is_iid() {
        return Err(Error::Unsupported("exact regions need an i.i.d. channel law".into()));
    }
    if grid_size < 2 {
        return Err(Error::Domain("the region grid needs at least 2 powers per player".into()));
    }
    let mut hull: Vec<Point> = Vec::new();
    let mut first = true;
    model.for_each_state(|_, eta, prob| {
        let part = geometry::scale(&geometry::convex_hull(&state_cloud(game, eta, grid_size)), prob);
        hull = if first { part } else { geometry::minkowski_sum(&hull, &part) };
        first = false;
    })?;

    let minmax = minmax_levels(game, model)?;
    let fstar_vertices = geometry::clip_at_least(&geometry::clip_at_least(&hull, 0, minmax[0]), 1, minmax[1]);

    let named = [
        ("Nash", StrategyKind::OneShotNash),
        ("OP", StrategyKind::OperatingPoint),
        ("BUS", StrategyKind::Bus),
        ("TS", StrategyKind::PureTimeSharing),
    ];
    let markers = named
        .into_iter()
        .filter_map(|(name, kind)| {
            stationary_expected_utility(game, model, &[kind, kind])
                .ok()
                .map(|u| Marker { name: name.into(), point: [u[0], u[1]] })
        })
        .collect();
    Ok(RegionResult { hull, minmax, fstar_vertices, markers })
}

/// Largest one-stage utility a deviator can reach: the solo optimum at gain `eta_max`.
pub fn deviation_gain_term(game: &GameParams, i: usize, eta_max: f64) -> f64 {
    let beta = game.beta_star();
    game.rates()[i] * eta_max * game.efficiency().value(beta) / (game.noise() * beta)
}

/// `Δ / (gain + Δ)` for a positive cooperation surplus `Δ`, else 0.
pub fn lambda_bound_formula(delta: f64, gain_term: f64) -> f64 {
    if delta > 0.0 {
        delta / (gain_term + delta)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaBound {
    pub per_player: Vec<f64>,
    /// Minimum over players.
    pub bound: f64,
    pub bus: Vec<Estimate>,
    pub nash: Vec<Estimate>,
    /// Paired `E[u_bus] - E[u_nash]`.
    pub delta: Vec<Estimate>,
    pub deviation_gain: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LambdaBound {
    /// Delta-method standard error of the scheme-wide bound.
    pub fn bound_stderr(&self) -> f64 {
        let (i, _) = self
            .per_player
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one player");
        let (d, g) = (self.delta[i].mean, self.deviation_gain[i]);
        if d <= 0.0 {
            return 0.0;
        }
        g / (g + d).powi(2) * self.delta[i].stderr
    }
}

/// Discount-factor bound under which BUS with grim trigger is an equilibrium,
/// estimated from `replicates` runs of `horizon` stages with common random
/// numbers for the BUS and Nash runs.
pub fn lambda_max(
    game: &GameParams,
    model: &ChannelModel,
    horizon: usize,
    replicates: usize,
    seed: u64,
) -> Result<LambdaBound> {
    check_model(game, model)?;
    game.require_equal_rates("the discount-factor bound")?;
    let k = game.players();
    let bus_reps = replicate_averages(game, model, &vec![StrategyKind::Bus; k], horizon, seed, replicates)?;
    let nash_reps = replicate_averages(game, model, &vec![StrategyKind::OneShotNash; k], horizon, seed, replicates)?;
    Ok(assemble_bound(game, model, summarize(&bus_reps), summarize(&nash_reps), paired_difference(&bus_reps, &nash_reps)))
}

/// The same bound from exact stationary expectations (small state spaces only).
pub fn lambda_max_exact(game: &GameParams, model: &ChannelModel) -> Result<LambdaBound> {
    check_model(game, model)?;
    game.require_equal_rates("the discount-factor bound")?;
    let k = game.players();
    let bus = stationary_expected_utility(game, model, &vec![StrategyKind::Bus; k])?;
    let nash = stationary_expected_utility(game, model, &vec![StrategyKind::OneShotNash; k])?;
    let exact = |v: &[f64]| v.iter().map(|&mean| Estimate { mean, stderr: 0.0 }).collect::<Vec<_>>();
    let delta: Vec<f64> = bus.iter().zip(&nash).map(|(b, n)| b - n).collect();
    Ok(assemble_bound(game, model, exact(&bus), exact(&nash), exact(&delta)))
}

fn assemble_bound(
    game: &GameParams,
    model: &ChannelModel,
    bus: Vec<Estimate>,
    nash: Vec<Estimate>,
    delta: Vec<Estimate>,
) -> LambdaBound {
    let eta_max = model.max_gain();
    let mut warnings = Vec::new();
    let mut per_player = Vec::with_capacity(delta.len());
    let mut deviation_gain = Vec::with_capacity(delta.len());
    for (i, d) in delta.iter().enumerate() {
        let g = deviation_gain_term(game, i, eta_max);
        if d.mean < 0.0 && (d.stderr.is_nan() || d.mean < -2.0 * d.stderr) {
            warnings.push(format!(
                "player {i}: BUS earns less than Nash ({:.6} < {:.6}); no discount factor sustains BUS",
                bus[i].mean, nash[i].mean
            ));
        }
        per_player.push(lambda_bound_formula(d.mean, g));
        deviation_gain.push(g);
    }
    let bound = per_player.iter().cloned().fold(f64::INFINITY, f64::min);
    LambdaBound { per_player, bound, bus, nash, delta, deviation_gain, warnings }
}

/// Weighted least-squares nondecreasing fit (pool adjacent violators).
pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // blocks of (mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() >= 2 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, w2, c2) = blocks.pop().unwrap();
            let (m1, w1, c1) = blocks.pop().unwrap();
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, c1 + c2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, c)| std::iter::repeat_n(m, c)).collect()
}

/// Whether a sequence of estimates is nondecreasing up to `z` standard errors:
/// the weighted isotonic fit stays within `z·se` of every point.
pub fn nondecreasing_within_noise(estimates: &[Estimate], z: f64) -> bool {
    let floor = estimates
        .iter()
        .map(|e| e.stderr)
        .filter(|s| s.is_finite() && *s > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1e-12 };
    let se: Vec<f64> = estimates
        .iter()
        .map(|e| if e.stderr.is_finite() && e.stderr > 0.0 { e.stderr } else { floor })
        .collect();
    let values: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let weights: Vec<f64> = se.iter().map(|s| 1.0 / (s * s)).collect();
    let fit = isotonic_fit(&values, &weights);
    fit.iter().zip(&values).zip(&se).all(|((f, v), s)| (f - v).abs() <= z * s + 1e-12 * v.abs())
}

/// Parameters shared by every player count of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub rate: f64,
    pub noise: f64,
    pub p_max: f64,
    pub efficiency: EfficiencyFunction,
    pub channel: ChannelModelSpec,
}

impl Scenario {
    pub fn game(&self, players: usize) -> Result<GameParams> {
        GameParams::symmetric(players, self.rate, self.noise, self.p_max, self.efficiency)
    }

    pub fn model(&self, players: usize) -> Result<ChannelModel> {
        build_model(&self.channel, players)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub players: usize,
    pub strategy: String,
    /// Player-averaged time-average utility.
    pub mean: f64,
    pub stderr: f64,
}

/// One paired comparison `E[u_i^bus] - E[u_i^versus]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceFinding {
    pub players: usize,
    pub player: usize,
    pub versus: String,
    pub difference: Estimate,
    /// The difference is at least `-2` standard errors.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
    pub findings: Vec<DominanceFinding>,
}

impl DominanceReport {
    pub fn violations(&self) -> impl Iterator<Item = &DominanceFinding> {
        self.findings.iter().filter(|f| !f.holds)
    }
}

/// Time-average utility replicates of symmetric strategy profiles on one game,
/// all sharing the channel paths of `seed`.
pub fn compare_strategies(
    game: &GameParams,
    model: &ChannelModel,
    strategies: &[StrategyKind],
    horizon: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    strategies
        .iter()
        .map(|s| replicate_averages(game, model, &vec![*s; game.players()], horizon, seed, replicates))
        .collect()
}

/// Strategy comparison table over a sweep of player counts, with paired
/// checks of BUS against Nash, the operating point and time-sharing.
pub fn dominance_report(
    scenario: &Scenario,
    player_counts: &[usize],
    strategies: &[StrategyKind],
    horizon: usize,
    replicates: usize,
    seed: u64,
) -> Result<DominanceReport> {
    let per_k: Vec<(usize, Vec<Vec<Vec<f64>>>)> = player_counts
        .par_iter()
        .map(|&k| {
            let game = scenario.game(k)?;
            let model = scenario.model(k)?;
            let reps = compare_strategies(&game, &model, strategies, horizon, replicates, derive_seed(seed, k as u64))?;
            Ok((k, reps))
        })
        .collect::<Result<_>>()?;

    let bus = strategies.iter().position(|s| *s == StrategyKind::Bus);
    let mut rows = Vec::new();
    let mut findings = Vec::new();
    for (k, reps) in per_k {
        for (s, r) in strategies.iter().zip(&reps) {
            let avg: Vec<f64> = r.iter().map(|x| x.iter().sum::<f64>() / x.len() as f64).collect();
            let e = Estimate::from_samples(&avg);
            rows.push(DominanceRow { players: k, strategy: s.to_string(), mean: e.mean, stderr: e.stderr });
        }
        let Some(b) = bus else { continue };
        for (s, r) in strategies.iter().zip(&reps) {
            if !matches!(s, StrategyKind::OneShotNash | StrategyKind::OperatingPoint | StrategyKind::PureTimeSharing) {
                continue;
            }
            for (i, d) in paired_difference(&reps[b], r).into_iter().enumerate() {
                let holds = d.mean >= 0.0 || (d.stderr.is_finite() && d.mean >= -2.0 * d.stderr);
                findings.push(DominanceFinding { players: k, player: i, versus: s.to_string(), difference: d, holds });
            }
        }
    }
    Ok(DominanceReport { rows, findings })
}

/// Empirical BUS configuration frequencies, `[player][k - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTable {
    pub players: usize,
    pub stages: usize,
    /// Recommended, with `k` players active.
    pub h1: Vec<Vec<f64>>,
    /// Not recommended, with `k` players active.
    pub h2: Vec<Vec<f64>>,
}

impl PartitionTable {
    /// `(k, H1, H2)` rows for player `i`.
    pub fn rows(&self, i: usize) -> Vec<(usize, f64, f64)> {
        (0..self.players).map(|k| (k + 1, self.h1[i][k], self.h2[i][k])).collect()
    }

    pub fn total(&self, i: usize) -> f64 {
        self.h1[i].iter().chain(&self.h2[i]).sum()
    }
}

/// Frequencies of BUS recommendations along one seeded channel path of
/// `horizon` stages (the path a seeded engine run with stream 0 sees).
pub fn config_partition(game: &GameParams, model: &ChannelModel, horizon: usize, seed: u64) -> Result<PartitionTable> {
    check_model(game, model)?;
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let k = game.players();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut state = model.initial_state(&mut rng)?;
    let mut h1 = vec![vec![0u64; k]; k];
    let mut h2 = vec![vec![0u64; k]; k];
    for t in 0..horizon {
        if t > 0 {
            state = model.sample_next(&state, &mut rng);
        }
        let active = bus_select(game, &model.space().realization(&state))?;
        let n = active.len() - 1;
        for i in 0..k {
            if active.binary_search(&i).is_ok() {
                h1[i][n] += 1;
            } else {
                h2[i][n] += 1;
            }
        }
    }
    let freq = |c: Vec<Vec<u64>>| -> Vec<Vec<f64>> {
        c.into_iter().map(|r| r.into_iter().map(|x| x as f64 / horizon as f64).collect()).collect()
    };
    Ok(PartitionTable { players: k, stages: horizon, h1: freq(h1), h2: freq(h2) })
}
