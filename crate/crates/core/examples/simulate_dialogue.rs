//! One simulated dialogue under the hand-crafted policy, printed turn by
//! turn: system act, what the user really said, what the channel delivered.

use dialogue_shaping::env::{DialogueEnv, EnvConfig, Ontology};
use dialogue_shaping::harness::handcrafted_action;

fn main() -> dialogue_shaping::Result<()> {
    let ontology = Ontology::desk_default();
    let mut env = DialogueEnv::new(&ontology, EnvConfig { ser: 0.3, ..Default::default() }, 0)?;
    env.reset(42);
    while !env.is_done() {
        let action = handcrafted_action(&env);
        env.step(env.action_space().index(action))?;
    }
    let episode = env.episode()?;
    let space = env.action_space();
    for (t, turn) in episode.turns.iter().enumerate() {
        let obs = &turn.observation;
        println!(
            "{:>2}  {:<28} user {:<32} heard {:<32} conf {:.2}{}",
            t + 1,
            turn.system_act.render(space, &ontology),
            turn.true_act.render(&ontology),
            obs.observed_act.render(&ontology),
            obs.confidence,
            if obs.is_corrupted { "  (corrupted)" } else { "" },
        );
    }
    println!("success {}  return {}", episode.success, episode.return_label);
    Ok(())
}
