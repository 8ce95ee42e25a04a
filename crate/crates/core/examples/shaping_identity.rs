//! Potential-based shaping leaves the optimal policy alone: the shaped
//! return telescopes, and value iteration on a small chain picks the same
//! actions with or without a random potential.

use dialogue_shaping::mdp::{value_iteration, value_iteration_with, TabularMdp};
use dialogue_shaping::shaping::{policy_invariance_check, shaped_stream, ShapingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dialogue_shaping::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let potentials: Vec<f64> = (0..8).map(|_| rng.random_range(-10.0..10.0)).collect();
    let rewards = vec![-1.0; 8];
    for gamma in [0.9, 1.0] {
        let cfg = ShapingConfig { gamma, ..Default::default() };
        let stream = shaped_stream(&potentials, &rewards, &cfg)?;
        let discounted = |f: &dyn Fn(usize) -> f64| (0..8).map(|t| gamma.powi(t as i32) * f(t)).sum::<f64>();
        let env = discounted(&|t| stream[t].env_reward);
        let shaped = discounted(&|t| stream[t].composite);
        // With φ_0 = 0 and a zero terminal potential the shaping terms cancel.
        println!("gamma {gamma}: env return {env:.6}, shaped return {shaped:.6}");
    }

    let mdp = TabularMdp::chain();
    let phi: Vec<f64> = (0..mdp.n_states).map(|_| rng.random_range(-20.0..20.0)).collect();
    let plain = value_iteration(&mdp, 0.95)?;
    let shaped = value_iteration_with(&mdp, 0.95, |s, _, next| {
        let p = |s: usize| if mdp.terminal[s] { 0.0 } else { phi[s] };
        0.95 * p(next) - p(s)
    })?;
    for s in 0..4 {
        println!("state {s}: Q {:?} vs shaped {:?}", plain.q[s], shaped.q[s]);
    }
    println!("same greedy actions: {}", policy_invariance_check(&mdp, &phi, 0.95)?);
    Ok(())
}
