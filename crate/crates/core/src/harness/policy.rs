//! Scripted system policies used to generate corpora.

use rand::Rng;

use crate::env::acts::{ActType, SystemAction};
use crate::env::session::DialogueEnv;

/// Threshold above which a grounded value is taken without confirmation.
const CONFIDENT: f64 = 0.8;

/// A sensible slot-filling strategy: greet, ask for each unknown slot once,
/// confirm shaky values once, offer, then answer the user's questions.
pub fn handcrafted_action(env: &DialogueEnv) -> SystemAction {
    let belief = env.belief();
    let ctx = env.context();
    let turns = env.turns();
    let Some(last) = turns.last() else {
        return SystemAction::Hello;
    };
    if ctx.current_offer.as_ref().is_some_and(|o| o.venue.is_some()) {
        let best = ctx
            .pending_requests
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(r, _)| r);
        if let Some(r) = best {
            return SystemAction::InformRequested(r);
        }
    }
    if matches!(last.observation.observed_act.act_type, ActType::Reqalts | ActType::Negate) {
        return SystemAction::Reqmore;
    }
    let n = belief.goal.len();
    let mut asked = vec![0usize; n];
    let mut confirmed = vec![0usize; n];
    for t in turns {
        match t.system_act.action {
            SystemAction::Request(s) => asked[s] += 1,
            SystemAction::Confirm(s) => confirmed[s] += 1,
            _ => {}
        }
    }
    if let Some(s) = (0..n).find(|&s| belief.grounded_value(s).is_none() && asked[s] == 0) {
        return SystemAction::Request(s);
    }
    if let Some(s) = (0..n).find(|&s| {
        belief.grounded_value(s).is_some() && belief.top_value(s).1 < CONFIDENT && confirmed[s] == 0
    }) {
        return SystemAction::Confirm(s);
    }
    if !ctx.offer_is_current(belief) {
        return SystemAction::InformOffer;
    }
    SystemAction::Reqmore
}

/// Executability mask for a learning policy: closing the dialogue is only
/// allowed once something has been offered.
pub fn executable_actions(env: &DialogueEnv) -> Vec<bool> {
    let space = env.action_space();
    let bye = space.index(SystemAction::Bye);
    let offered = env.context().current_offer.is_some();
    (0..space.len()).map(|a| a != bye || offered).collect()
}

/// Handcrafted action with probability `p_handcrafted`, otherwise a
/// uniformly random summary action. Returns the action index.
pub fn behavior_action<R: Rng + ?Sized>(env: &DialogueEnv, p_handcrafted: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < p_handcrafted {
        env.action_space().index(handcrafted_action(env))
    } else {
        rng.random_range(0..env.action_space().len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, Ontology};

    #[test]
    fn handcrafted_succeeds_without_noise() {
        let o = Ontology::desk_default();
        let mut env = DialogueEnv::new(&o, EnvConfig { ser: 0.0, ..Default::default() }, 0).unwrap();
        let mut wins = 0;
        for seed in 0..200 {
            env.reset(seed);
            while !env.is_done() {
                let a = env.action_space().index(handcrafted_action(&env));
                env.step(a).unwrap();
            }
            wins += usize::from(env.episode().unwrap().success);
        }
        assert!(wins >= 190, "{wins}/200");
    }
}
