//! Long-run utilities of the strategies over player counts (short runs).

use powergame::analysis::{dominance_report, Scenario};
use powergame::channels::ChannelModelSpec;
use powergame::efficiency::EfficiencyFunction;
use powergame::strategies::StrategyKind;

fn main() -> powergame::error::Result<()> {
    let scenario = Scenario {
        rate: 1.0,
        noise: 1.0,
        p_max: 100.0,
        efficiency: EfficiencyFunction::exponential(0.1)?,
        channel: ChannelModelSpec::TruncatedRayleigh { scale: 1.0, eta_min: 0.1, eta_max: 10.0, bins: 16 },
    };
    use StrategyKind::*;
    let kinds = [OneShotNash, PureTimeSharing, OperatingPoint, Tus { alpha: 0.5 }, Bus];
    let report = dominance_report(&scenario, &[1, 2, 4, 8], &kinds, 5_000, 8, 42)?;
    println!("{:>2} {:>10} {:>9} {:>9}", "K", "strategy", "mean", "stderr");
    for r in &report.rows {
        println!("{:>2} {:>10} {:>9.4} {:>9.5}", r.players, r.strategy, r.mean, r.stderr);
    }
    println!("\npaired BUS checks failing by more than 2 SE: {}", report.violations().count());
    Ok(())
}
