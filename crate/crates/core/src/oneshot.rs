//! The one-shot power control game for a single channel realization.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::efficiency::EfficiencyFunction;
use crate::error::{Error, Result};

/// Search over joint power grids is exhaustive up to this many players.
pub const EXHAUSTIVE_SOCIAL_PLAYERS: usize = 4;

/// Static description of the game: rates, noise, power caps and efficiency.
///
/// The SINR targets `β*` and `γ̃_k` for `k = 1..=K` are solved once here.
#[derive(Debug, Clone, PartialEq)]
pub struct GameParams {
    rates: Vec<f64>,
    noise: f64,
    p_max: Vec<f64>,
    eff: EfficiencyFunction,
    beta_star: f64,
    gamma_tilde: Vec<f64>,
}

impl GameParams {
    pub fn new(rates: Vec<f64>, noise: f64, p_max: Vec<f64>, eff: EfficiencyFunction) -> Result<Self> {
        let k = rates.len();
        if k == 0 {
            return Err(Error::Domain("at least one player is required".into()));
        }
        if p_max.len() != k {
            return Err(Error::Domain(format!("{} power caps for {k} players", p_max.len())));
        }
        if !(noise.is_finite() && noise > 0.0) {
            return Err(Error::Domain(format!("noise power must be positive, got {noise}")));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::Domain(format!("rates must be positive, got {r}")));
        }
        if let Some(c) = p_max.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Domain(format!("power caps must be positive, got {c}")));
        }
        let beta_star = eff.solve_beta_star()?;
        let gamma_tilde = (1..=k).map(|n| eff.solve_gamma_tilde(n)).collect::<Result<Vec<_>>>()?;
        Ok(GameParams { rates, noise, p_max, eff, beta_star, gamma_tilde })
    }

    /// All players share the same rate and power cap.
    pub fn symmetric(players: usize, rate: f64, noise: f64, p_max: f64, eff: EfficiencyFunction) -> Result<Self> {
        Self::new(vec![rate; players], noise, vec![p_max; players], eff)
    }

    pub fn players(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn p_max(&self) -> &[f64] {
        &self.p_max
    }

    pub fn efficiency(&self) -> &EfficiencyFunction {
        &self.eff
    }

    pub fn beta_star(&self) -> f64 {
        self.beta_star
    }

    /// `γ̃_k` for `k` simultaneously active players.
    pub fn gamma_tilde(&self, k: usize) -> f64 {
        self.gamma_tilde[k - 1]
    }

    /// `(K-1)·β* < 1`, the condition for the non-saturated Nash equilibrium
    /// to exist. Operating points and selection do not need it.
    pub fn is_non_saturated(&self) -> bool {
        ((self.players() - 1) as f64 * self.beta_star) < 1.0
    }

    pub fn has_equal_rates(&self) -> bool {
        self.rates.iter().all(|r| *r == self.rates[0])
    }

    pub(crate) fn require_equal_rates(&self, what: &str) -> Result<()> {
        if self.has_equal_rates() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{what} requires equal rates across players")))
        }
    }

    /// Checks a channel realization against the player count.
    pub fn check_realization(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.players() {
            return Err(Error::Domain(format!("{} gains for {} players", eta.len(), self.players())));
        }
        if let Some(g) = eta.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::Domain(format!("channel gains must be positive and finite, got {g}")));
        }
        Ok(())
    }

    pub fn sinr(&self, eta: &[f64], p: &[f64], i: usize) -> f64 {
        let interference: f64 = (0..eta.len()).filter(|&j| j != i).map(|j| p[j] * eta[j]).sum();
        p[i] * eta[i] / (interference + self.noise)
    }

    /// All SINRs in one pass over the received powers.
    pub fn sinrs(&self, eta: &[f64], p: &[f64]) -> Vec<f64> {
        let total: f64 = eta.iter().zip(p).map(|(g, q)| g * q).sum();
        eta.iter()
            .zip(p)
            .map(|(g, q)| {
                let own = g * q;
                own / ((total - own).max(0.0) + self.noise)
            })
            .collect()
    }

    /// SINR a unit-power probe of player `i` would see against `p_{-i}`.
    pub fn unit_sinr(&self, eta: &[f64], p: &[f64], i: usize) -> f64 {
        let interference: f64 = (0..eta.len()).filter(|&j| j != i).map(|j| p[j] * eta[j]).sum();
        eta[i] / (interference + self.noise)
    }

    /// Energy efficiency in bit/J. A silent player scores 0.
    pub fn utility(&self, eta: &[f64], p: &[f64], i: usize) -> f64 {
        self.utility_from_sinr(i, p[i], self.sinr(eta, p, i))
    }

    #[inline]
    pub fn utility_from_sinr(&self, i: usize, power: f64, sinr: f64) -> f64 {
        if power <= 0.0 {
            0.0
        } else {
            self.rates[i] * self.eff.value(sinr) / power
        }
    }

    pub fn utilities(&self, eta: &[f64], p: &[f64]) -> Vec<f64> {
        self.sinrs(eta, p)
            .into_iter()
            .enumerate()
            .map(|(i, s)| self.utility_from_sinr(i, p[i], s))
            .collect()
    }

    pub fn welfare(&self, eta: &[f64], p: &[f64]) -> f64 {
        self.utilities(eta, p).iter().sum()
    }

    /// Power that brings player `i` to SINR `β*` against interference
    /// `interference`, clipped at the cap.
    pub fn best_response_to_interference(&self, i: usize, eta_i: f64, interference: f64) -> f64 {
        (self.beta_star * (interference + self.noise) / eta_i).min(self.p_max[i])
    }

    pub fn best_response(&self, eta: &[f64], p: &[f64], i: usize) -> f64 {
        let interference: f64 = (0..eta.len()).filter(|&j| j != i).map(|j| p[j] * eta[j]).sum();
        self.best_response_to_interference(i, eta[i], interference)
    }

    /// Non-saturated Nash power of player `i` with all `K` players transmitting.
    pub fn nash_power(&self, i: usize, eta_i: f64) -> Result<f64> {
        let k = self.players();
        let denom = 1.0 - (k - 1) as f64 * self.beta_star;
        if denom <= 0.0 {
            return Err(Error::NonSaturationViolated(format!(
                "(K-1)·β* = {} >= 1 for K = {k}",
                (k - 1) as f64 * self.beta_star
            )));
        }
        let p = self.noise / eta_i * self.beta_star / denom;
        if p > self.p_max[i] {
            return Err(Error::NonSaturationViolated(format!(
                "player {i}: Nash power {p} exceeds cap {}",
                self.p_max[i]
            )));
        }
        Ok(p)
    }

    pub fn nash_powers(&self, eta: &[f64]) -> Result<PowerProfile> {
        self.check_realization(eta)?;
        eta.iter()
            .enumerate()
            .map(|(i, &g)| self.nash_power(i, g))
            .collect::<Result<Vec<_>>>()
            .map(PowerProfile)
    }

    /// Operating-point power of player `i` when `k` players are active.
    pub fn operating_point_power(&self, i: usize, eta_i: f64, k: usize) -> Result<f64> {
        if k == 0 || k > self.players() {
            return Err(Error::Domain(format!("active count {k} outside 1..={}", self.players())));
        }
        let g = self.gamma_tilde(k);
        let denom = 1.0 - (k - 1) as f64 * g;
        if denom <= 0.0 {
            return Err(Error::NonSaturationViolated(format!("1 - (k-1)·γ̃_k = {denom} for k = {k}")));
        }
        let p = self.noise / eta_i * g / denom;
        if p > self.p_max[i] {
            return Err(Error::PowerCap { player: i, required: p, cap: self.p_max[i] });
        }
        Ok(p)
    }

    /// Equal-received-power profile for the players in `active`; everyone
    /// else stays silent.
    pub fn operating_point_powers(&self, eta: &[f64], active: &[usize]) -> Result<PowerProfile> {
        self.check_realization(eta)?;
        if active.is_empty() {
            return Err(Error::Domain("operating point needs at least one active player".into()));
        }
        let mut p = vec![0.0; self.players()];
        for &i in active {
            if i >= self.players() {
                return Err(Error::Domain(format!("player index {i} out of range")));
            }
            p[i] = self.operating_point_power(i, eta[i], active.len())?;
        }
        Ok(PowerProfile(p))
    }

    /// Welfare-maximizing profile over per-player power grids.
    ///
    /// Each player's grid is `{0}`, `grid_size - 1` log-spaced levels on
    /// `[1e-6·p_max, p_max]`, the Nash power and the operating-point powers
    /// for every active-set size. The Nash profile and every top-`k`
    /// operating-point profile seed the search, so the result never falls
    /// below them. Exhaustive for up to four players, coordinate ascent
    /// from every seed beyond that.
    pub fn social_optimum(&self, eta: &[f64], grid_size: usize) -> Result<(PowerProfile, f64)> {
        self.check_realization(eta)?;
        if grid_size < 2 {
            return Err(Error::Domain(format!("grid size must be at least 2, got {grid_size}")));
        }
        let k = self.players();
        let grids: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let hi = self.p_max[i];
                let lo = hi * 1e-6;
                let mut g = vec![0.0];
                let n = grid_size - 1;
                for s in 0..n {
                    let frac = if n == 1 { 1.0 } else { s as f64 / (n - 1) as f64 };
                    g.push(lo * (hi / lo).powf(frac));
                }
                g.extend(self.nash_power(i, eta[i]).ok());
                g.extend((1..=k).filter_map(|n| self.operating_point_power(i, eta[i], n).ok()));
                g.sort_by(f64::total_cmp);
                g.dedup();
                g
            })
            .collect();

        let mut seeds: Vec<Vec<f64>> = Vec::new();
        if let Ok(p) = self.nash_powers(eta) {
            seeds.push(p.0);
        }
        let order = gains_descending(eta);
        for n in 1..=k {
            if let Ok(p) = self.operating_point_powers(eta, &order[..n]) {
                seeds.push(p.0);
            }
        }
        if seeds.is_empty() {
            seeds.push(vec![0.0; k]);
        }

        let mut best = seeds[0].clone();
        let mut best_w = self.welfare(eta, &best);
        for s in &seeds[1..] {
            let w = self.welfare(eta, s);
            if w > best_w {
                best_w = w;
                best = s.clone();
            }
        }

        if k <= EXHAUSTIVE_SOCIAL_PLAYERS {
            let mut idx = vec![0usize; k];
            let mut p = vec![0.0; k];
            loop {
                for i in 0..k {
                    p[i] = grids[i][idx[i]];
                }
                let w = self.welfare(eta, &p);
                if w > best_w {
                    best_w = w;
                    best.copy_from_slice(&p);
                }
                // odometer increment
                let mut d = 0;
                while d < k {
                    idx[d] += 1;
                    if idx[d] < grids[d].len() {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == k {
                    break;
                }
            }
        } else {
            for seed in seeds {
                let mut p = seed;
                let mut w = self.welfare(eta, &p);
                for _sweep in 0..200 {
                    let mut improved = false;
                    for i in 0..k {
                        let keep = p[i];
                        let mut arg = keep;
                        for &level in &grids[i] {
                            p[i] = level;
                            let cand = self.welfare(eta, &p);
                            if cand > w {
                                w = cand;
                                arg = level;
                                improved = true;
                            }
                        }
                        p[i] = arg;
                    }
                    if !improved {
                        break;
                    }
                }
                if w > best_w {
                    best_w = w;
                    best = p;
                }
            }
        }
        Ok((PowerProfile(best), best_w))
    }
}

/// Player indices sorted by decreasing gain; ties go to the lower index.
pub fn gains_descending(eta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&x, &y| eta[y].total_cmp(&eta[x]).then(x.cmp(&y)));
    order
}

/// Transmit powers of all players for one stage, in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile(pub Vec<f64>);

impl Deref for PowerProfile {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<PowerProfile> for Vec<f64> {
    fn from(p: PowerProfile) -> Vec<f64> {
        p.0
    }
}
