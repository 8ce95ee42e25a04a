//! Simulated slot-filling dialogue environment.

pub mod acts;
pub mod channel;
pub mod goal;
pub mod ontology;
pub mod record;
pub mod session;
pub mod user;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use acts::{ActType, ActionSpace, DialogueAct, Offer, SlotRef, SlotValue, SystemAct, SystemAction};
pub use channel::{ErrorChannel, Observation};
pub use goal::{sample_goal, GoalConfig, UserGoal};
pub use ontology::Ontology;
pub use record::EpisodeRecord;
pub use session::{
    objective_success, DialogueEnv, EnvConfig, Episode, GoalProgress, StepOutcome, SystemContext, Turn,
};
pub use user::UserAgenda;

use crate::error::Result;

/// Passes `true_act` through a semantic error channel with rate `ser`.
pub fn corrupt(ontology: &Ontology, true_act: DialogueAct, ser: f64, seed: u64) -> Result<Observation> {
    let channel = ErrorChannel::new(ser)?;
    Ok(channel.corrupt(ontology, true_act, &mut ChaCha8Rng::seed_from_u64(seed)))
}
