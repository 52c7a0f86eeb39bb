//! Who transmits: best user selection, the threshold rule and time-sharing.

use powergame::efficiency::EfficiencyFunction;
use powergame::oneshot::GameParams;
use powergame::strategies::{bus_select, time_sharing_select, tus_select};

fn main() -> powergame::error::Result<()> {
    for a in [0.1, 0.5] {
        let game = GameParams::symmetric(5, 1.0, 1.0, 100.0, EfficiencyFunction::exponential(a)?)?;
        println!("a = {a}");
        for eta in [[4.0, 2.0, 1.0, 0.5, 0.25], [1.0, 1.0, 1.0, 1.0, 1.0], [3.0, 2.9, 0.2, 0.1, 0.1]] {
            let bus = bus_select(&game, &eta)?;
            let op = game.operating_point_powers(&eta, &bus)?;
            println!(
                "  eta={eta:?}\n    bus={bus:?} welfare={:.4}  tus(0.5)={:?}  ts={}",
                game.welfare(&eta, &op),
                tus_select(0.5, &eta),
                time_sharing_select(&eta)
            );
        }
    }
    Ok(())
}
