//! How often a player is recommended to transmit, by number of active players.

use powergame::analysis::config_partition;
use powergame::channels::{build_model, ChannelModelSpec};
use powergame::efficiency::EfficiencyFunction;
use powergame::oneshot::GameParams;

fn main() -> powergame::error::Result<()> {
    let game = GameParams::symmetric(5, 1.0, 1.0, 100.0, EfficiencyFunction::exponential(0.2)?)?;
    let spec = ChannelModelSpec::TruncatedRayleigh { scale: 1.0, eta_min: 0.1, eta_max: 10.0, bins: 16 };
    let table = config_partition(&game, &build_model(&spec, 5)?, 20_000, 7)?;
    println!(" k    H1     H2");
    for (k, h1, h2) in table.rows(0) {
        println!("{k:>2} {h1:.4} {h2:.4}");
    }
    println!("total {:.12}", table.total(0));
    Ok(())
}
