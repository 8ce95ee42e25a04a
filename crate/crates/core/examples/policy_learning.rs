//! Short GP-SARSA learning curves on the dialogue task, unshaped and with
//! the goal-progress potential.

use dialogue_shaping::env::Ontology;
use dialogue_shaping::gpsarsa::KernelConfig;
use dialogue_shaping::harness::{train_policy, PolicyConfig, Potential, DIALOGUE_KERNEL_SCALE};
use dialogue_shaping::shaping::{PotentialSource, ShapingConfig};

fn main() -> dialogue_shaping::Result<()> {
    let ontology = Ontology::desk_default();
    let cfg = PolicyConfig { seeds: vec![0, 1, 2], budget: 300, eval_every: 50, eval_n: 200, ..Default::default() };
    let kernel = KernelConfig { kernel_scale: DIALOGUE_KERNEL_SCALE, ..Default::default() };
    for (source, potential) in [(PotentialSource::None, Potential::None), (PotentialSource::OracleHeuristic, Potential::Oracle)] {
        let shaping = ShapingConfig { source, ..Default::default() };
        let run = train_policy(&ontology, &cfg, &kernel, &shaping, potential)?;
        println!("{}", source.name());
        for row in &run.curve.rows {
            println!("  {:>4} dialogues  reward {:>6.2} ± {:.2}  success {:.2}", row.dialogues, row.mean_reward, row.reward_se, row.mean_success);
        }
    }
    Ok(())
}
