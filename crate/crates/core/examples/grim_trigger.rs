//! A one-stage deviation under BUS is caught and punished with Nash play.

use powergame::channels::{build_model, ChannelModelSpec};
use powergame::efficiency::EfficiencyFunction;
use powergame::engine::{run_game, Deviation, DeviationMode, EngineConfig};
use powergame::oneshot::GameParams;
use powergame::strategies::StrategyKind;

fn main() -> powergame::error::Result<()> {
    let game = GameParams::symmetric(3, 1.0, 1.0, 100.0, EfficiencyFunction::exponential(0.1)?)?;
    let model = build_model(&ChannelModelSpec::TwoState { eta_min: 1.0, eta_max: 4.0, p_high: 0.5 }, 3)?;
    let kinds = [StrategyKind::Bus; 3];

    let mut cfg = EngineConfig::new(400, 0.05, 11);
    let honest = run_game(&game, &model, &kinds, &cfg)?;
    cfg.deviation = Some(Deviation { player: 0, start: 5, mode: DeviationMode::OneShotBestResponse });
    let cheat = run_game(&game, &model, &kinds, &cfg)?;

    println!("punishment starts at stage {:?}", cheat.punishment_stage);
    for r in &cheat.records[3..8] {
        println!("t={} eta={:?} p={:.3?} u={:.3?} punishing={}", r.t, r.eta, r.powers, r.utility, r.punishing[0]);
    }
    println!("\ndiscounted utility of player 0: compliant {:.4}, deviating {:.4}", honest.discounted[0], cheat.discounted[0]);
    Ok(())
}
