//! Stage decision rules, receiver-side user selection and grim-trigger
//! punishment.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oneshot::{gains_descending, GameParams};

/// Relative tolerances are measured against at least this much SINR.
pub const SINR_FLOOR: f64 = 1e-12;

/// Default relative tolerance of the deviation alarm.
pub const DEFAULT_DETECTION_TOL: f64 = 1e-6;

/// Per-player grid size used when a stage needs a fresh social optimum.
pub const SOCIAL_GRID: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    OneShotNash,
    OperatingPoint,
    PureTimeSharing,
    /// Threshold-based user selection: play iff own gain >= alpha × best gain.
    Tus { alpha: f64 },
    /// Best user selection.
    Bus,
    SocialOptimum,
}

impl StrategyKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategyKind::Tus { alpha } if !(0.0..=1.0).contains(&alpha) => {
                Err(Error::Domain(format!("T-US threshold must lie in [0, 1], got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    /// Whether the receiver sends a play/stay-silent recommendation.
    pub fn uses_recommendation(&self) -> bool {
        matches!(self, StrategyKind::PureTimeSharing | StrategyKind::Tus { .. } | StrategyKind::Bus)
    }

    /// Whether the strategy needs the whole channel state.
    pub fn needs_global_csi(&self) -> bool {
        matches!(self, StrategyKind::SocialOptimum)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::OneShotNash => write!(f, "nash"),
            StrategyKind::OperatingPoint => write!(f, "op"),
            StrategyKind::PureTimeSharing => write!(f, "ts"),
            StrategyKind::Tus { alpha } => write!(f, "tus({alpha})"),
            StrategyKind::Bus => write!(f, "bus"),
            StrategyKind::SocialOptimum => write!(f, "social"),
        }
    }
}

/// What player `i` knows when choosing its stage power.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignalProfile {
    pub own_gain: f64,
    pub recommended: Option<bool>,
    pub k_active: Option<usize>,
    /// Alarm signal observed at the previous stage.
    pub own_sinr_prev: Option<f64>,
    /// Full gain vector; only for strategies with global CSI.
    pub global_state: Option<Vec<f64>>,
    /// This player's component of a receiver-computed social optimum for
    /// `global_state`, if one is already known.
    pub social_plan: Option<f64>,
}

impl SignalProfile {
    pub fn private(own_gain: f64) -> Self {
        SignalProfile { own_gain, ..Default::default() }
    }
}

/// Grim-trigger state: absorbing once triggered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PunishmentState {
    triggered: bool,
    trigger_stage: Option<usize>,
}

impl PunishmentState {
    pub fn triggered(&self) -> bool {
        self.triggered
    }

    pub fn trigger_stage(&self) -> Option<usize> {
        self.trigger_stage
    }

    /// Marks a deviation detected at `stage`. Later calls are no-ops.
    pub fn trigger(&mut self, stage: usize) {
        if !self.triggered {
            self.triggered = true;
            self.trigger_stage = Some(stage);
        }
    }
}

/// Best user selection: the welfare-maximizing top-`k` set, each member at
/// the `k`-player operating point. Returned indices are ascending.
pub fn bus_select(params: &GameParams, eta: &[f64]) -> Result<Vec<usize>> {
    params.require_equal_rates("best user selection")?;
    params.check_realization(eta)?;
    let order = gains_descending(eta);
    let mut best: Option<(usize, f64)> = None;
    let mut first_err = None;
    for k in 1..=params.players() {
        // candidates whose powers exceed a cap are not playable
        let p = match params.operating_point_powers(eta, &order[..k]) {
            Ok(p) => p,
            Err(e) => {
                first_err.get_or_insert(e);
                continue;
            }
        };
        let w = params.welfare(eta, &p);
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((k, w));
        }
    }
    let Some((k, _)) = best else {
        return Err(first_err.expect("no candidate and no error"));
    };
    let mut set = order[..k].to_vec();
    set.sort_unstable();
    Ok(set)
}

/// Threshold-based selection `{ i : η_i >= α · max_j η_j }`.
pub fn tus_select(alpha: f64, eta: &[f64]) -> Vec<usize> {
    debug_assert!((0.0..=1.0).contains(&alpha));
    let best = eta.iter().copied().fold(f64::MIN, f64::max);
    (0..eta.len()).filter(|&i| eta[i] >= alpha * best).collect()
}

/// Pure time-sharing winner: best gain, lowest index on ties.
pub fn time_sharing_select(eta: &[f64]) -> usize {
    gains_descending(eta)[0]
}

/// Receiver recommendation for `kind`, or `None` if the kind uses none.
pub fn recommendation(kind: &StrategyKind, params: &GameParams, eta: &[f64]) -> Result<Option<Vec<usize>>> {
    Ok(match *kind {
        StrategyKind::Bus => Some(bus_select(params, eta)?),
        StrategyKind::Tus { alpha } => Some(tus_select(alpha, eta)),
        StrategyKind::PureTimeSharing => Some(vec![time_sharing_select(eta)]),
        _ => None,
    })
}

fn missing(kind: &StrategyKind, field: &'static str) -> Error {
    Error::Information { strategy: kind.to_string(), field }
}

/// Power chosen by player `i` this stage.
pub fn stage_action(
    kind: &StrategyKind,
    params: &GameParams,
    signal: &SignalProfile,
    punish: &PunishmentState,
    i: usize,
) -> Result<f64> {
    if punish.triggered() {
        return params.nash_power(i, signal.own_gain);
    }
    match kind {
        StrategyKind::OneShotNash => params.nash_power(i, signal.own_gain),
        StrategyKind::OperatingPoint => params.operating_point_power(i, signal.own_gain, params.players()),
        StrategyKind::PureTimeSharing => {
            if signal.recommended.ok_or_else(|| missing(kind, "recommended"))? {
                params.operating_point_power(i, signal.own_gain, 1)
            } else {
                Ok(0.0)
            }
        }
        StrategyKind::Tus { .. } | StrategyKind::Bus => {
            if signal.recommended.ok_or_else(|| missing(kind, "recommended"))? {
                let k = signal.k_active.ok_or_else(|| missing(kind, "k_active"))?;
                params.operating_point_power(i, signal.own_gain, k)
            } else {
                Ok(0.0)
            }
        }
        StrategyKind::SocialOptimum => {
            let global = signal.global_state.as_ref().ok_or_else(|| missing(kind, "global_state"))?;
            match signal.social_plan {
                Some(p) => Ok(p),
                None => Ok(params.social_optimum(global, SOCIAL_GRID)?.0[i]),
            }
        }
    }
}

/// Alarm signal of player `i`: its realized SINR when transmitting, otherwise
/// the SINR a unit-power probe would see.
pub fn alarm_signal(params: &GameParams, eta: &[f64], p: &[f64], i: usize) -> f64 {
    if p[i] > 0.0 {
        params.sinr(eta, p, i)
    } else {
        params.unit_sinr(eta, p, i)
    }
}

/// True iff the observed signal departs from the planned one by more than
/// `tol` relative to `max(expected, SINR_FLOOR)`.
pub fn detect_deviation(expected_sinr: f64, observed_sinr: f64, tol: f64) -> bool {
    (observed_sinr - expected_sinr).abs() > tol * expected_sinr.max(SINR_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efficiency::EfficiencyFunction;
    use approx::assert_relative_eq;

    fn game(k: usize, a: f64) -> GameParams {
        GameParams::symmetric(k, 1.0, 1.0, 100.0, EfficiencyFunction::exponential(a).unwrap()).unwrap()
    }

    /// Exhaustive argmax over every non-empty subset.
    fn brute_force(params: &GameParams, eta: &[f64]) -> Vec<usize> {
        let k = eta.len();
        let mut best = (f64::MIN, vec![]);
        for mask in 1u32..(1 << k) {
            let set: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let p = params.operating_point_powers(eta, &set).unwrap();
            let w = params.welfare(eta, &p);
            if w > best.0 {
                best = (w, set);
            }
        }
        best.1
    }

    #[test]
    fn bus_examples() {
        let eta = [4.0, 2.0, 1.0];
        let g = game(3, 0.5);
        assert_eq!(bus_select(&g, &eta).unwrap(), vec![0]);
        assert_eq!(brute_force(&g, &eta), vec![0]);
        let g = game(3, 0.1);
        assert_eq!(bus_select(&g, &eta).unwrap(), vec![0, 1, 2]);
        assert_eq!(brute_force(&g, &eta), vec![0, 1, 2]);
        let g = game(1, 0.1);
        assert_eq!(bus_select(&g, &[0.3]).unwrap(), vec![0]);
    }

    #[test]
    fn bus_rejects_unequal_rates() {
        let g = GameParams::new(vec![1.0, 2.0], 1.0, vec![100.0; 2], EfficiencyFunction::exponential(0.1).unwrap())
            .unwrap();
        assert!(matches!(bus_select(&g, &[1.0, 2.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bus_equal_gains_selects_everyone() {
        let g = game(10, 0.1);
        assert_eq!(bus_select(&g, &[1.7; 10]).unwrap(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn bus_tie_breaks_by_index() {
        let g = game(3, 0.1);
        // top-1 is best here; players 1 and 2 tie on gain
        let eta = [0.01, 50.0, 50.0];
        let pick = bus_select(&g, &eta).unwrap();
        assert!(pick == vec![1] || pick == vec![1, 2]);
        assert!(pick.contains(&1));
    }

    #[test]
    fn tus_examples() {
        assert_eq!(tus_select(0.5, &[4.0, 2.0, 1.0]), vec![0, 1]);
        assert_eq!(tus_select(0.0, &[4.0, 2.0, 1.0]), vec![0, 1, 2]);
        assert_eq!(tus_select(1.0, &[4.0, 2.0, 1.0]), vec![0]);
        assert!(StrategyKind::Tus { alpha: 1.5 }.validate().is_err());
    }

    #[test]
    fn stage_action_examples() {
        let g = game(2, 0.1);
        let calm = PunishmentState::default();
        let silent = SignalProfile { recommended: Some(false), ..SignalProfile::private(2.0) };
        assert_eq!(stage_action(&StrategyKind::Bus, &g, &silent, &calm, 0).unwrap(), 0.0);

        let play = SignalProfile { recommended: Some(true), k_active: Some(2), ..SignalProfile::private(2.0) };
        assert_relative_eq!(stage_action(&StrategyKind::Bus, &g, &play, &calm, 0).unwrap(), 0.05, max_relative = 1e-12);

        let mut punished = PunishmentState::default();
        punished.trigger(3);
        for kind in [StrategyKind::Bus, StrategyKind::OperatingPoint, StrategyKind::PureTimeSharing, StrategyKind::SocialOptimum] {
            let p = stage_action(&kind, &g, &SignalProfile::private(1.0), &punished, 1).unwrap();
            assert_relative_eq!(p, 1.0 / 9.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn missing_information() {
        let g = game(2, 0.1);
        let calm = PunishmentState::default();
        let bare = SignalProfile::private(1.0);
        for kind in [StrategyKind::Bus, StrategyKind::Tus { alpha: 0.5 }, StrategyKind::PureTimeSharing, StrategyKind::SocialOptimum] {
            assert!(matches!(stage_action(&kind, &g, &bare, &calm, 0), Err(Error::Information { .. })));
        }
        let no_k = SignalProfile { recommended: Some(true), ..SignalProfile::private(1.0) };
        assert!(matches!(stage_action(&StrategyKind::Bus, &g, &no_k, &calm, 0), Err(Error::Information { field: "k_active", .. })));
        assert!(stage_action(&StrategyKind::OneShotNash, &g, &bare, &calm, 0).is_ok());
    }

    #[test]
    fn punishment_is_absorbing() {
        let mut p = PunishmentState::default();
        assert!(!p.triggered());
        p.trigger(5);
        p.trigger(9);
        assert!(p.triggered());
        assert_eq!(p.trigger_stage(), Some(5));
    }

    #[test]
    fn detection_examples() {
        let g = game(2, 0.1);
        let gt = g.gamma_tilde(2);
        assert!(!detect_deviation(gt, gt, 1e-6));

        let eta = [1.0, 1.0];
        let plan = g.operating_point_powers(&eta, &[0, 1]).unwrap();
        assert_relative_eq!(g.sinr(&eta, &plan, 0), 0.1 / 1.1, max_relative = 1e-12);
        let mut dev = plan.0.clone();
        dev[1] *= 2.0;
        assert!(detect_deviation(gt, g.sinr(&eta, &dev, 0), 1e-3));

        // solo time-sharing stage with an off-plan transmitter
        let solo = vec![g.operating_point_power(0, 1.0, 1).unwrap(), 0.0];
        let expected = alarm_signal(&g, &eta, &solo, 0);
        assert_relative_eq!(expected, g.beta_star(), max_relative = 1e-12);
        let intruded = vec![solo[0], 0.05];
        assert!(detect_deviation(expected, alarm_signal(&g, &eta, &intruded, 0), 1e-6));
        // silent players see the intruder through the probe signal
        let e1 = alarm_signal(&g, &eta, &solo, 1);
        let mut loud = solo.clone();
        loud[0] *= 3.0;
        assert!(detect_deviation(e1, alarm_signal(&g, &eta, &loud, 1), 1e-6));
    }

    #[test]
    fn proportional_bus_welfare() {
        // for exponential f, welfare(top-k) is proportional to e^{-a(k-1)} Σ top-k gains
        let a = 0.2;
        let g = game(5, a);
        let eta = [0.4, 2.5, 1.1, 3.9, 0.8];
        let order = gains_descending(&eta);
        let mut ratios = vec![];
        for k in 1..=5 {
            let p = g.operating_point_powers(&eta, &order[..k]).unwrap();
            let prop = (-a * (k - 1) as f64).exp() * order[..k].iter().map(|&i| eta[i]).sum::<f64>();
            ratios.push(g.welfare(&eta, &p) / prop);
        }
        for r in &ratios {
            assert_relative_eq!(*r, ratios[0], max_relative = 1e-12);
        }
    }
}
