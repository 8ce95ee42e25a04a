//! GP-SARSA with posterior-sampling exploration on a five-state chain,
//! scored against exact value iteration. The variant with an early exit
//! shows how on-policy learning can lock onto a deceptive option.

use dialogue_shaping::gpsarsa::{learn_tabular, matches_optimal, KernelConfig, TabularRun};
use dialogue_shaping::mdp::{value_iteration, TabularMdp};

fn main() -> dialogue_shaping::Result<()> {
    let run = TabularRun {
        kernel: KernelConfig { gamma: 0.95, ..Default::default() },
        episodes: 2000,
        max_steps: 200,
        feature_scale: 1.0,
    };
    for (name, mdp) in [("chain", TabularMdp::chain()), ("chain with exit", TabularMdp::chain_with_exit())] {
        let optimal = value_iteration(&mdp, 0.95)?;
        let mut wins = 0;
        for seed in 0..10 {
            let mut gp = learn_tabular(&mdp, &run, seed)?;
            if matches_optimal(&mdp, &run, &gp, &optimal) {
                wins += 1;
            }
            if seed == 0 {
                let mut x = vec![0.0; mdp.n_states];
                x[0] = run.feature_scale;
                let (mean, var) = gp.q_all(&x)?;
                println!("{name}, seed 0: Q(0, ·) = {mean:.2?} ± {:.2?}, exact {:.2?}", var.iter().map(|v| v.sqrt()).collect::<Vec<_>>(), optimal.q[0]);
            }
        }
        println!("{name}: optimal greedy policy on {wins}/10 seeds");
    }
    Ok(())
}
