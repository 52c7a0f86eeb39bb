//! Two-player expected-utility region, min-max levels and strategy markers.

use powergame::analysis::feasible_region_2p;
use powergame::channels::{build_model, ChannelModelSpec};
use powergame::efficiency::EfficiencyFunction;
use powergame::oneshot::GameParams;

fn main() -> powergame::error::Result<()> {
    let game = GameParams::symmetric(2, 1.0, 1.0, 100.0, EfficiencyFunction::exponential(0.5)?)?;
    let model = build_model(&ChannelModelSpec::TwoState { eta_min: 1.0, eta_max: 4.0, p_high: 0.5 }, 2)?;
    let region = feasible_region_2p(&game, &model, 24)?;
    println!("region: {} vertices", region.hull.len());
    for v in &region.hull {
        println!("  ({:.4}, {:.4})", v[0], v[1]);
    }
    println!("min-max levels: {:.4?}", region.minmax);
    println!("individually rational part: {} vertices", region.fstar_vertices.len());
    for m in &region.markers {
        println!("{:>5}: ({:.4}, {:.4})", m.name, m.point[0], m.point[1]);
    }
    Ok(())
}
