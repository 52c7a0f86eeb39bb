//! Quantized channel-gain state spaces and their evolution laws.
//!
//! A joint state is a vector of per-player state indices. Where a flat index
//! is needed (explicit transition matrices, stationary vectors) the encoding
//! is row-major with player 0 most significant.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint spaces larger than this are never enumerated.
pub const MAX_ENUMERATED_STATES: usize = 1 << 22;

const ROW_SUM_TOL: f64 = 1e-12;
const MIN_TRUNCATED_MASS: f64 = 1e-6;

/// Per-player finite gain sets `Γ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStateSpace {
    gains: Vec<Vec<f64>>,
}

impl ChannelStateSpace {
    pub fn new(gains: Vec<Vec<f64>>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::Model("state space needs at least one player".into()));
        }
        for (i, g) in gains.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::Model(format!("player {i} has an empty gain set")));
            }
            if let Some(x) = g.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::Model(format!("player {i}: gain {x} is not positive and finite")));
            }
        }
        Ok(ChannelStateSpace { gains })
    }

    pub fn players(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self, player: usize) -> &[f64] {
        &self.gains[player]
    }

    /// Number of joint states, if it fits in `usize`.
    pub fn joint_len(&self) -> Option<usize> {
        self.gains.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()))
    }

    pub fn encode(&self, state: &[usize]) -> usize {
        state.iter().zip(&self.gains).fold(0, |acc, (s, g)| acc * g.len() + s)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut state = vec![0; self.players()];
        for (slot, g) in state.iter_mut().zip(&self.gains).rev() {
            *slot = index % g.len();
            index /= g.len();
        }
        state
    }

    pub fn realization(&self, state: &[usize]) -> Vec<f64> {
        state.iter().zip(&self.gains).map(|(s, g)| g[*s]).collect()
    }

    pub fn max_gain(&self) -> f64 {
        self.gains.iter().flatten().copied().fold(f64::MIN, f64::max)
    }

    pub fn min_gain(&self) -> f64 {
        self.gains.iter().flatten().copied().fold(f64::MAX, f64::min)
    }
}

/// How the joint channel state moves from one stage to the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionLaw {
    /// Players draw independently each stage from their own marginal.
    IndependentIid { marginals: Vec<Vec<f64>> },
    /// Joint states drawn i.i.d. from one distribution over the flat index.
    Iid { probabilities: Vec<f64> },
    /// Row-stochastic matrix over flat joint indices.
    Markov { matrix: Vec<Vec<f64>> },
}

/// Description of a channel model, turned into a [`ChannelModel`] by [`build_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModelSpec {
    TwoState { eta_min: f64, eta_max: f64, p_high: f64 },
    TruncatedRayleigh { scale: f64, eta_min: f64, eta_max: f64, bins: usize },
    Explicit { gains: Vec<Vec<f64>>, law: TransitionLaw },
    /// Explicit model stored in a model file (see [`load_explicit`]).
    File { path: String },
}

/// A validated state space and transition law with precomputed samplers.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    space: ChannelStateSpace,
    law: TransitionLaw,
    samplers: Samplers,
}

#[derive(Debug, Clone)]
enum Samplers {
    Independent(Vec<WeightedIndex<f64>>),
    Joint(WeightedIndex<f64>),
    Markov { rows: Vec<WeightedIndex<f64>>, initial: Option<WeightedIndex<f64>> },
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Model(format!("{what}: probabilities must be finite and non-negative")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Model(format!("{what}: probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

fn weighted(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p).map_err(|e| Error::Model(e.to_string()))
}

impl ChannelModel {
    pub fn new(space: ChannelStateSpace, law: TransitionLaw) -> Result<Self> {
        let samplers = match &law {
            TransitionLaw::IndependentIid { marginals } => {
                if marginals.len() != space.players() {
                    return Err(Error::Model(format!(
                        "{} marginals for {} players",
                        marginals.len(),
                        space.players()
                    )));
                }
                for (i, m) in marginals.iter().enumerate() {
                    if m.len() != space.gains(i).len() {
                        return Err(Error::Model(format!("player {i}: marginal length mismatch")));
                    }
                    check_distribution(m, &format!("player {i} marginal"))?;
                }
                Samplers::Independent(marginals.iter().map(|m| weighted(m)).collect::<Result<_>>()?)
            }
            TransitionLaw::Iid { probabilities } => {
                let n = enumerable_len(&space)?;
                if probabilities.len() != n {
                    return Err(Error::Model(format!("{} probabilities for {n} joint states", probabilities.len())));
                }
                check_distribution(probabilities, "joint distribution")?;
                Samplers::Joint(weighted(probabilities)?)
            }
            TransitionLaw::Markov { matrix } => {
                let n = enumerable_len(&space)?;
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Model(format!("transition matrix must be {n}x{n}")));
                }
                for (r, row) in matrix.iter().enumerate() {
                    check_distribution(row, &format!("transition row {r}"))?;
                }
                let rows = matrix.iter().map(|r| weighted(r)).collect::<Result<_>>()?;
                let initial = markov_stationary(matrix).ok().map(|mu| weighted(&mu)).transpose()?;
                Samplers::Markov { rows, initial }
            }
        };
        Ok(ChannelModel { space, law, samplers })
    }

    pub fn space(&self) -> &ChannelStateSpace {
        &self.space
    }

    pub fn law(&self) -> &TransitionLaw {
        &self.law
    }

    pub fn players(&self) -> usize {
        self.space.players()
    }

    pub fn is_iid(&self) -> bool {
        !matches!(self.law, TransitionLaw::Markov { .. })
    }

    /// Strong connectivity of the transition graph. Always true for i.i.d. laws.
    pub fn is_irreducible(&self) -> bool {
        match &self.law {
            TransitionLaw::Markov { matrix } => strongly_connected(matrix),
            _ => true,
        }
    }

    /// Every transition probability strictly positive (i.i.d. laws with
    /// full support qualify).
    pub fn is_fully_mixing(&self) -> bool {
        match &self.law {
            TransitionLaw::IndependentIid { marginals } => marginals.iter().flatten().all(|p| *p > 0.0),
            TransitionLaw::Iid { probabilities } => probabilities.iter().all(|p| *p > 0.0),
            TransitionLaw::Markov { matrix } => matrix.iter().flatten().all(|p| *p > 0.0),
        }
    }

    /// Stationary distribution over flat joint indices.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        match &self.law {
            TransitionLaw::IndependentIid { marginals } => {
                let n = enumerable_len(&self.space)?;
                Ok((0..n)
                    .map(|idx| {
                        self.space.decode(idx).iter().zip(marginals).map(|(s, m)| m[*s]).product()
                    })
                    .collect())
            }
            TransitionLaw::Iid { probabilities } => Ok(probabilities.clone()),
            TransitionLaw::Markov { matrix } => markov_stationary(matrix),
        }
    }

    /// Calls `f(state, realization, probability)` for every joint state with
    /// positive stationary mass.
    pub fn for_each_state(&self, mut f: impl FnMut(&[usize], &[f64], f64)) -> Result<()> {
        let mu = self.stationary_distribution()?;
        for (idx, &p) in mu.iter().enumerate() {
            if p > 0.0 {
                let s = self.space.decode(idx);
                f(&s, &self.space.realization(&s), p);
            }
        }
        Ok(())
    }

    /// First-stage state drawn from the stationary law.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        match &self.samplers {
            Samplers::Independent(d) => Ok(d.iter().map(|w| w.sample(rng)).collect()),
            Samplers::Joint(w) => Ok(self.space.decode(w.sample(rng))),
            Samplers::Markov { initial: Some(w), .. } => Ok(self.space.decode(w.sample(rng))),
            Samplers::Markov { initial: None, .. } => {
                Err(Error::Reducible("no unique stationary law to draw the initial state from".into()))
            }
        }
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, current: &[usize], rng: &mut R) -> Vec<usize> {
        match &self.samplers {
            Samplers::Independent(d) => d.iter().map(|w| w.sample(rng)).collect(),
            Samplers::Joint(w) => self.space.decode(w.sample(rng)),
            Samplers::Markov { rows, .. } => {
                let row = self.space.encode(current);
                self.space.decode(rows[row].sample(rng))
            }
        }
    }

    /// Largest gain any player can see.
    pub fn max_gain(&self) -> f64 {
        self.space.max_gain()
    }
}

fn enumerable_len(space: &ChannelStateSpace) -> Result<usize> {
    match space.joint_len() {
        Some(n) if n <= MAX_ENUMERATED_STATES => Ok(n),
        _ => Err(Error::Unsupported(format!(
            "joint state space too large to enumerate (limit {MAX_ENUMERATED_STATES})"
        ))),
    }
}

fn reachable(n: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && edge(u, v) {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count
}

fn strongly_connected(matrix: &[Vec<f64>]) -> bool {
    let n = matrix.len();
    reachable(n, |u, v| matrix[u][v] > 0.0) == n && reachable(n, |u, v| matrix[v][u] > 0.0) == n
}

fn markov_stationary(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    if !strongly_connected(matrix) {
        return Err(Error::Reducible("transition graph is not strongly connected".into()));
    }
    // (P^T - I) mu = 0 with the last equation replaced by sum(mu) = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            a[(r, c)] = matrix[c][r] - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let mu = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Reducible("singular stationary system".into()))?;
    Ok(mu.iter().map(|x| x.max(0.0)).collect())
}

/// Builds the model for `players` players.
pub fn build_model(spec: &ChannelModelSpec, players: usize) -> Result<ChannelModel> {
    if players == 0 {
        return Err(Error::Model("at least one player is required".into()));
    }
    match spec {
        &ChannelModelSpec::TwoState { eta_min, eta_max, p_high } => {
            if !(eta_min.is_finite() && eta_max.is_finite() && eta_min > 0.0 && eta_min <= eta_max) {
                return Err(Error::Model(format!("two-state gains need 0 < eta_min <= eta_max, got {eta_min}, {eta_max}")));
            }
            if !(p_high > 0.0 && p_high < 1.0) {
                return Err(Error::Model(format!("p_high must lie in (0, 1), got {p_high}")));
            }
            let (gains, marginal) = if eta_min == eta_max {
                (vec![eta_min], vec![1.0])
            } else {
                (vec![eta_min, eta_max], vec![1.0 - p_high, p_high])
            };
            ChannelModel::new(
                ChannelStateSpace::new(vec![gains; players])?,
                TransitionLaw::IndependentIid { marginals: vec![marginal; players] },
            )
        }
        &ChannelModelSpec::TruncatedRayleigh { scale, eta_min, eta_max, bins } => {
            let levels = rayleigh_bins(scale, eta_min, eta_max, bins)?;
            let marginal = vec![1.0 / bins as f64; bins];
            ChannelModel::new(
                ChannelStateSpace::new(vec![levels; players])?,
                TransitionLaw::IndependentIid { marginals: vec![marginal; players] },
            )
        }
        ChannelModelSpec::Explicit { gains, law } => {
            if gains.len() != players {
                return Err(Error::Model(format!("explicit model has {} players, expected {players}", gains.len())));
            }
            ChannelModel::new(ChannelStateSpace::new(gains.clone())?, law.clone())
        }
        ChannelModelSpec::File { path } => {
            let model = load_explicit(Path::new(path))?;
            if model.players() != players {
                return Err(Error::Model(format!("model file has {} players, expected {players}", model.players())));
            }
            Ok(model)
        }
    }
}

/// Equal-probability quantization of a truncated Rayleigh-amplitude gain.
///
/// The amplitude is Rayleigh(`scale`), so the power gain is exponential with
/// mean `2·scale²`. It is truncated to `[eta_min, eta_max]` and split into
/// `bins` cells of equal conditional probability, each represented by its
/// conditional mean.
pub fn rayleigh_bins(scale: f64, eta_min: f64, eta_max: f64, bins: usize) -> Result<Vec<f64>> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Model(format!("Rayleigh scale must be positive, got {scale}")));
    }
    if !(eta_min >= 0.0 && eta_min < eta_max) {
        return Err(Error::Model(format!("truncation needs 0 <= eta_min < eta_max, got [{eta_min}, {eta_max}]")));
    }
    if bins < 2 {
        return Err(Error::Model(format!("at least 2 bins required, got {bins}")));
    }
    let theta = 2.0 * scale * scale;
    let survival = |x: f64| if x.is_infinite() { 0.0 } else { (-x / theta).exp() };
    let s_lo = survival(eta_min);
    let s_hi = survival(eta_max);
    let mass = s_lo - s_hi;
    if mass < MIN_TRUNCATED_MASS {
        return Err(Error::Model(format!("truncation interval carries negligible mass {mass:e}")));
    }
    let edge_survival: Vec<f64> = (0..=bins).map(|j| s_lo - mass * j as f64 / bins as f64).collect();
    let edge = |s: f64| if s <= 0.0 { f64::INFINITY } else { -theta * s.ln() };
    // E[x; x > l] for the exponential law is S(l)(l + theta).
    let partial = |s: f64| if s <= 0.0 { 0.0 } else { s * (edge(s) + theta) };
    let mut levels: Vec<f64> = edge_survival
        .windows(2)
        .map(|w| {
            let (sl, sh) = (w[0], w[1]);
            let (l, h) = (edge(sl), edge(sh));
            let m = (partial(sl) - partial(sh)) / (sl - sh);
            m.clamp(l, h)
        })
        .collect();
    levels[0] = levels[0].max(eta_min.max(f64::MIN_POSITIVE));
    Ok(levels)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    gains: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    row_sum_checksum: f64,
}

/// Loads an explicit Markov model from a TOML file:
///
/// ```toml
/// gains = [[1.0, 4.0], [1.0, 4.0]]      # per-player gain values
/// transition = [[0.25, 0.25, 0.25, 0.25], ...]  # row-major, player 0 most significant
/// row_sum_checksum = 4.0                # sum of all row sums = number of joint states
/// ```
pub fn load_explicit(path: &Path) -> Result<ChannelModel> {
    let text = std::fs::read_to_string(path)?;
    parse_explicit(&text)
}

pub fn parse_explicit(text: &str) -> Result<ChannelModel> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))?;
    let total: f64 = file.transition.iter().flatten().sum();
    if (total - file.row_sum_checksum).abs() > 1e-9 * file.transition.len().max(1) as f64 {
        return Err(Error::Config(format!(
            "model file: row sums total {total}, checksum says {}",
            file.row_sum_checksum
        )));
    }
    ChannelModel::new(ChannelStateSpace::new(file.gains)?, TransitionLaw::Markov { matrix: file.transition })
}

/// Serializes an explicit Markov model in the format read by [`parse_explicit`].
pub fn render_explicit(gains: &[Vec<f64>], transition: &[Vec<f64>]) -> String {
    let file = ModelFile {
        gains: gains.to_vec(),
        transition: transition.to_vec(),
        row_sum_checksum: transition.iter().flatten().sum(),
    };
    toml::to_string(&file).expect("model file serializes")
}
