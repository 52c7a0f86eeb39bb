//! Channel laws: two-state, quantized truncated Rayleigh, and an explicit
//! Markov chain read from a model file.

use powergame::channels::{build_model, parse_explicit, rayleigh_bins, render_explicit, ChannelModelSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> powergame::error::Result<()> {
    let two = build_model(&ChannelModelSpec::TwoState { eta_min: 1.0, eta_max: 4.0, p_high: 0.5 }, 2)?;
    println!("two-state, 2 players: {} joint states", two.space().joint_len().unwrap());
    two.for_each_state(|s, eta, p| println!("  {s:?} eta={eta:?} p={p}"))?;

    let bins = rayleigh_bins(1.0, 0.1, 10.0, 8)?;
    println!("\nRayleigh levels (8 equiprobable bins): {bins:.3?}");

    let text = render_explicit(&[vec![0.5, 2.0]], &[vec![0.9, 0.1], vec![0.3, 0.7]]);
    println!("\nmodel file:\n{text}");
    let markov = parse_explicit(&text)?;
    println!("stationary law: {:?}", markov.stationary_distribution()?);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = markov.initial_state(&mut rng)?;
    let mut path = Vec::new();
    for _ in 0..20 {
        path.push(s[0]);
        s = markov.sample_next(&s, &mut rng);
    }
    println!("sample path: {path:?}");
    Ok(())
}
