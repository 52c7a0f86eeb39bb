//! The discount-factor bound that keeps BUS with grim trigger an equilibrium.

use powergame::analysis::{lambda_max, lambda_max_exact};
use powergame::channels::{build_model, ChannelModelSpec};
use powergame::efficiency::EfficiencyFunction;
use powergame::oneshot::GameParams;

fn main() -> powergame::error::Result<()> {
    let spec = ChannelModelSpec::TwoState { eta_min: 1.0, eta_max: 4.0, p_high: 0.5 };
    println!("{:>2} {:>10} {:>10} {:>10}", "K", "exact", "estimate", "stderr");
    for k in 2..=6 {
        let game = GameParams::symmetric(k, 1.0, 1.0, 100.0, EfficiencyFunction::exponential(0.1)?)?;
        let model = build_model(&spec, k)?;
        let exact = lambda_max_exact(&game, &model)?;
        let est = lambda_max(&game, &model, 5_000, 8, 1)?;
        println!("{k:>2} {:>10.5} {:>10.5} {:>10.5}", exact.bound, est.bound, est.bound_stderr());
    }
    Ok(())
}
