//! SINR targets, Nash and operating-point powers for one channel draw.

use powergame::efficiency::EfficiencyFunction;
use powergame::oneshot::GameParams;

fn main() -> powergame::error::Result<()> {
    let eff = EfficiencyFunction::from_rate(0.5)?;
    println!("a = {:.4}, beta* = {:.4}", eff.a(), eff.solve_beta_star()?);
    for k in [1, 2, 5, 10] {
        println!("gamma~_{k:<2} = {:.5}", eff.solve_gamma_tilde(k)?);
    }

    let game = GameParams::symmetric(3, 0.5, 1.0, 100.0, eff)?;
    let eta = [2.0, 0.7, 0.3];
    let nash = game.nash_powers(&eta)?;
    let all: Vec<usize> = (0..eta.len()).collect();
    let op = game.operating_point_powers(&eta, &all)?;
    println!("\nplayer  eta   p_nash    u_nash   p_op      u_op");
    let (un, uo) = (game.utilities(&eta, &nash), game.utilities(&eta, &op));
    for i in 0..eta.len() {
        println!("{i:>6} {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4}", eta[i], nash[i], un[i], op[i], uo[i]);
    }

    // Nash is a fixed point of best responses
    let moved = (0..eta.len()).map(|i| (game.best_response(&eta, &nash, i) - nash[i]).abs()).fold(0.0, f64::max);
    println!("\nlargest best-response move at Nash: {moved:.2e}");
    Ok(())
}
