use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{self, init_belief, BeliefState};
use crate::env::acts::{ActType, ActionSpace, DialogueAct, Offer, SlotRef, SystemAct, SystemAction};
use crate::env::channel::{ErrorChannel, Observation};
use crate::env::goal::{sample_goal_with, GoalConfig, UserGoal};
use crate::env::ontology::Ontology;
use crate::env::user::{offer_is_consistent, UserAgenda};
use crate::features::{extract, summary_features, FeatureLayout, FeatureVector};
use crate::error::{Error, Result};

pub const TURN_PENALTY: f64 = -1.0;
pub const SUCCESS_BONUS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub ser: f64,
    #[serde(default)]
    pub goal: GoalConfig,
    /// When false the environment behaves like a real user: the goal and
    /// anything derived from it are unavailable to the system.
    #[serde(default = "default_true")]
    pub expose_goal: bool,
}

fn default_true() -> bool {
    true
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig { ser: 0.15, goal: GoalConfig::default(), expose_goal: true }
    }
}

/// Dialogue-manager bookkeeping that sits next to the belief state: the
/// current offer and the properties the user appears to be asking for.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemContext {
    pub current_offer: Option<Offer>,
    pub offered_venues: Vec<usize>,
    /// Confidence of the most recent observed request per request slot,
    /// cleared once the system informs that slot.
    pub pending_requests: Vec<f64>,
}

impl SystemContext {
    pub fn new(ontology: &Ontology) -> Self {
        SystemContext {
            current_offer: None,
            offered_venues: Vec::new(),
            pending_requests: vec![0.0; ontology.n_request()],
        }
    }

    pub fn assumed_constraints(belief: &BeliefState) -> Vec<Option<usize>> {
        (0..belief.goal.len()).map(|s| belief.grounded_value(s)).collect()
    }

    /// The current offer was made under the constraints the belief holds now.
    pub fn offer_is_current(&self, belief: &BeliefState) -> bool {
        self.current_offer
            .as_ref()
            .is_some_and(|o| o.assumed == Self::assumed_constraints(belief))
    }

    /// Fills in the arguments of a summary action from the belief.
    pub fn build_act(
        &self,
        ontology: &Ontology,
        space: &ActionSpace,
        belief: &BeliefState,
        action: SystemAction,
    ) -> SystemAct {
        let mut act = SystemAct::plain(space, action);
        match action {
            SystemAction::Confirm(s) => act.values = vec![belief.top_value(s).0],
            SystemAction::Select(s) => act.values = vec![belief.top_value(s).0, belief.second_value(s).0],
            SystemAction::InformOffer => {
                let assumed = Self::assumed_constraints(belief);
                let venue = ontology.matching_venues(&assumed).next();
                act.offer = Some(Offer { venue, assumed });
            }
            SystemAction::InformAlternative => {
                let assumed = Self::assumed_constraints(belief);
                let venue = {
                    let mut matching = ontology.matching_venues(&assumed).peekable();
                    let first = matching.peek().copied();
                    matching.find(|v| !self.offered_venues.contains(v)).or(first)
                };
                act.offer = Some(Offer { venue, assumed });
            }
            SystemAction::InformByName => act.offer = self.current_offer.clone(),
            SystemAction::InformRequested(_) => {
                act.venue = self.current_offer.as_ref().and_then(|o| o.venue);
            }
            _ => {}
        }
        act
    }

    fn record(&mut self, ontology: &Ontology, act: &SystemAct, obs: &Observation) {
        match act.action {
            SystemAction::Restart => *self = SystemContext::new(ontology),
            SystemAction::InformRequested(r) => self.pending_requests[r] = 0.0,
            _ => {}
        }
        if let Some(offer) = &act.offer {
            if let Some(v) = offer.venue {
                if !self.offered_venues.contains(&v) {
                    self.offered_venues.push(v);
                }
            }
            self.current_offer = Some(offer.clone());
        }
        match (obs.observed_act.act_type, obs.observed_act.slot) {
            (ActType::Request, Some(SlotRef::Request(r))) => self.pending_requests[r] = obs.confidence,
            (ActType::Reqalts, _) => self.current_offer = None,
            _ => {}
        }
    }
}

/// Tracks what the system has offered and told, from system acts alone.
#[derive(Debug, Clone, Default)]
pub struct OfferLedger {
    told: BTreeMap<usize, Vec<bool>>,
    none_claims: Vec<Vec<Option<usize>>>,
}

impl OfferLedger {
    pub fn record(&mut self, n_request: usize, act: &SystemAct) {
        if let Some(offer) = &act.offer {
            match offer.venue {
                Some(v) => {
                    self.told.entry(v).or_insert_with(|| vec![false; n_request]);
                }
                None => self.none_claims.push(offer.assumed.clone()),
            }
        }
        if let (SystemAction::InformRequested(r), Some(v)) = (act.action, act.venue) {
            if let Some(told) = self.told.get_mut(&v) {
                told[r] = true;
            }
        }
    }

    pub fn success(&self, ontology: &Ontology, goal: &UserGoal) -> bool {
        let venue_ok = self.told.iter().any(|(&v, told)| {
            ontology.venue_matches(v, &goal.constraints)
                && goal.requests.iter().zip(told).all(|(&want, &got)| !want || got)
        });
        venue_ok
            || self
                .none_claims
                .iter()
                .any(|assumed| offer_is_consistent(ontology, goal, None, assumed))
    }

    /// Best fraction of requested properties told for any consistent offer.
    pub fn request_progress(&self, ontology: &Ontology, goal: &UserGoal) -> f64 {
        let wanted = goal.n_requests().max(1) as f64;
        if self
            .none_claims
            .iter()
            .any(|assumed| offer_is_consistent(ontology, goal, None, assumed))
        {
            return 1.0;
        }
        self.told
            .iter()
            .filter(|(&v, _)| ontology.venue_matches(v, &goal.constraints))
            .map(|(_, told)| {
                goal.requests.iter().zip(told).filter(|(&want, &got)| want && got).count() as f64 / wanted
            })
            .fold(0.0, f64::max)
    }
}

/// Task completion: a venue consistent with every goal constraint was
/// offered and every requested property of that venue was informed (or the
/// system correctly claimed that no venue exists).
pub fn objective_success(ontology: &Ontology, episode: &Episode) -> bool {
    let mut ledger = OfferLedger::default();
    for turn in &episode.turns {
        ledger.record(ontology.n_request(), &turn.system_act);
    }
    ledger.success(ontology, &episode.goal)
}

/// Progress towards the goal, visible only in simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalProgress {
    pub constraints_grounded: usize,
    pub constraints_total: usize,
    pub requests_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub system_act: SystemAct,
    pub true_act: DialogueAct,
    pub observation: Observation,
    pub belief_after: BeliefState,
    pub features: FeatureVector,
    pub env_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub turns: Vec<Turn>,
    pub goal: UserGoal,
    pub success: bool,
    pub return_label: f64,
    pub ser: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.turns.iter().map(|t| t.env_reward).collect()
    }

    pub fn features(&self) -> Vec<FeatureVector> {
        self.turns.iter().map(|t| t.features.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
}

/// One simulated dialogue at a time. A turn is one system action followed
/// by one (possibly corrupted) user response.
pub struct DialogueEnv<'a> {
    ontology: &'a Ontology,
    space: ActionSpace,
    layout: FeatureLayout,
    channel: ErrorChannel,
    cfg: EnvConfig,
    rng: ChaCha8Rng,
    goal: UserGoal,
    agenda: UserAgenda,
    belief: BeliefState,
    context: SystemContext,
    ledger: OfferLedger,
    turns: Vec<Turn>,
    done: bool,
    success: bool,
}

impl<'a> DialogueEnv<'a> {
    /// Creates the environment and starts a dialogue with `seed`.
    pub fn new(ontology: &'a Ontology, cfg: EnvConfig, seed: u64) -> Result<Self> {
        ontology.validate()?;
        cfg.goal.validate(ontology)?;
        let channel = ErrorChannel::new(cfg.ser)?;
        let mut env = DialogueEnv {
            ontology,
            space: ActionSpace::new(ontology),
            layout: FeatureLayout::new(ontology),
            channel,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            goal: UserGoal { constraints: Vec::new(), requests: Vec::new() },
            agenda: UserAgenda::uninitialized(),
            belief: init_belief(ontology),
            context: SystemContext::new(ontology),
            ledger: OfferLedger::default(),
            turns: Vec::new(),
            done: false,
            success: false,
        };
        env.reset(seed);
        Ok(env)
    }

    /// Starts a fresh dialogue; everything random about it follows from `seed`.
    pub fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.goal = sample_goal_with(self.ontology, &self.cfg.goal, &mut self.rng);
        self.agenda = UserAgenda::new(&self.goal, &mut self.rng);
        self.belief = init_belief(self.ontology);
        self.context = SystemContext::new(self.ontology);
        self.ledger = OfferLedger::default();
        self.turns.clear();
        self.done = false;
        self.success = false;
    }

    /// Replaces the sampled goal (and re-initialises the agenda). Only valid
    /// before the first turn.
    pub fn set_goal(&mut self, goal: UserGoal) -> Result<()> {
        if !self.turns.is_empty() {
            return Err(Error::Config("goal can only be set before the first turn".into()));
        }
        self.agenda = UserAgenda::new(&goal, &mut self.rng);
        self.goal = goal;
        Ok(())
    }

    pub fn step(&mut self, action_index: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let action = self.space.decode(action_index)?;
        let act = self.context.build_act(self.ontology, &self.space, &self.belief, action);
        let true_act = self.agenda.respond(self.ontology, &self.goal, &act)?;
        let observation = self.channel.corrupt(self.ontology, true_act, &mut self.rng);

        let prior = if action == SystemAction::Restart { init_belief(self.ontology) } else { self.belief.clone() };
        self.belief = belief::update(self.ontology, &prior, &observation, &act)?;
        self.context.record(self.ontology, &act, &observation);
        self.ledger.record(self.ontology.n_request(), &act);

        let turn = self.turns.len() + 1;
        let features = extract(&self.layout, &self.belief, &observation, action_index, turn, self.ontology.max_turns)?;
        self.done = true_act.act_type == ActType::Bye
            || action == SystemAction::Bye
            || turn >= self.ontology.max_turns;
        let mut reward = TURN_PENALTY;
        if self.done {
            self.success = self.ledger.success(self.ontology, &self.goal);
            if self.success {
                reward += SUCCESS_BONUS;
            }
        }
        self.turns.push(Turn {
            system_act: act,
            true_act,
            observation,
            belief_after: self.belief.clone(),
            features,
            env_reward: reward,
        });
        Ok(StepOutcome { observation, reward, done: self.done })
    }

    pub fn ontology(&self) -> &'a Ontology {
        self.ontology
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn context(&self) -> &SystemContext {
        &self.context
    }

    pub fn turn(&self) -> usize {
        self.turns.len()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn ser(&self) -> f64 {
        self.cfg.ser
    }

    /// Policy-kernel state vector for the current belief.
    pub fn summary_features(&self) -> Vec<f64> {
        summary_features(&self.belief, &self.context, self.turns.len(), self.ontology.max_turns)
    }

    pub fn goal(&self) -> Result<&UserGoal> {
        if self.cfg.expose_goal {
            Ok(&self.goal)
        } else {
            Err(Error::GoalUnavailable)
        }
    }

    /// Constraints correctly held with probability above one half, and the
    /// fraction of requested properties already told for a consistent offer.
    pub fn goal_progress(&self) -> Result<GoalProgress> {
        let goal = self.goal()?;
        let constraints_grounded = goal
            .constraints
            .iter()
            .enumerate()
            .filter(|(s, want)| {
                want.is_some_and(|w| {
                    let (v, p) = self.belief.top_value(*s);
                    v == w && p > 0.5
                })
            })
            .count();
        Ok(GoalProgress {
            constraints_grounded,
            constraints_total: goal.n_constraints(),
            requests_fraction: self.ledger.request_progress(self.ontology, goal),
        })
    }

    /// The finished dialogue. Errors if it has not terminated yet.
    pub fn episode(&self) -> Result<Episode> {
        if !self.done {
            return Err(Error::Config("episode is still running".into()));
        }
        Ok(Episode {
            turns: self.turns.clone(),
            goal: self.goal.clone(),
            success: self.success,
            return_label: self.turns.iter().map(|t| t.env_reward).sum(),
            ser: self.cfg.ser,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::acts::SlotValue;

    fn one_venue() -> Ontology {
        let mut o = Ontology::desk_default();
        o.venues.truncate(1);
        o
    }

    fn run(env: &mut DialogueEnv, actions: &[SystemAction]) -> Vec<StepOutcome> {
        let space = *env.action_space();
        actions.iter().map(|&a| env.step(space.index(a)).unwrap()).collect()
    }

    #[test]
    fn mid_dialogue_reward_is_minus_one() {
        let o = Ontology::desk_default();
        let mut env = DialogueEnv::new(&o, EnvConfig { ser: 0.0, ..Default::default() }, 1).unwrap();
        let out = run(&mut env, &[SystemAction::Request(0)]);
        assert_eq!(out[0].reward, -1.0);
        assert!(!out[0].done);
    }

    #[test]
    fn scripted_success_in_six_turns_returns_fourteen() {
        let o = one_venue();
        let mut env = DialogueEnv::new(&o, EnvConfig { ser: 0.0, ..Default::default() }, 3).unwrap();
        let goal = UserGoal {
            constraints: o.venues[0].constraints.iter().map(|&v| Some(v)).collect(),
            requests: vec![true, true, false],
        };
        env.set_goal(goal).unwrap();
        // Observed confidences are random; pin belief grounding by repeating
        // requests is unnecessary because any positive evidence grounds a slot.
        let out = run(
            &mut env,
            &[
                SystemAction::Request(0),
                SystemAction::Request(1),
                SystemAction::Request(2),
                SystemAction::InformOffer,
                SystemAction::InformRequested(0),
                SystemAction::InformRequested(1),
            ],
        );
        assert!(out[5].done);
        let ep = env.episode().unwrap();
        assert!(ep.success);
        assert_eq!(ep.return_label, 14.0);
        assert_eq!(ep.rewards().iter().sum::<f64>(), ep.return_label);
        assert!(objective_success(&o, &ep));
    }

    #[test]
    fn turn_cap_failure_returns_minus_thirty() {
        let o = Ontology::desk_default();
        let mut env = DialogueEnv::new(&o, EnvConfig { ser: 0.0, ..Default::default() }, 9).unwrap();
        let mut last = None;
        for _ in 0..30 {
            last = Some(run(&mut env, &[SystemAction::Repeat])[0]);
        }
        assert!(last.unwrap().done);
        let ep = env.episode().unwrap();
        assert!(!ep.success);
        assert_eq!(ep.len(), 30);
        assert_eq!(ep.return_label, -30.0);
        assert!(matches!(env.step(0), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn success_predicate_cases() {
        let o = one_venue();
        let goal = UserGoal {
            constraints: o.venues[0].constraints.iter().map(|&v| Some(v)).collect(),
            requests: vec![true, false, true],
        };
        let space = ActionSpace::new(&o);
        let mut offer = SystemAct::plain(&space, SystemAction::InformOffer);
        offer.offer = Some(Offer { venue: Some(0), assumed: goal.constraints.clone() });
        let inform = |r: usize| {
            let mut a = SystemAct::plain(&space, SystemAction::InformRequested(r));
            a.venue = Some(0);
            a
        };
        let mut ledger = OfferLedger::default();
        assert!(!ledger.success(&o, &goal), "no offer");
        ledger.record(3, &offer);
        ledger.record(3, &inform(0));
        assert!(!ledger.success(&o, &goal), "one request missing");
        ledger.record(3, &inform(2));
        assert!(ledger.success(&o, &goal));
    }

    #[test]
    fn correct_no_venue_claim_succeeds() {
        let o = one_venue();
        let venue = &o.venues[0].constraints;
        let goal = UserGoal {
            constraints: vec![Some((venue[0] + 1) % 10), Some(venue[1]), Some(venue[2])],
            requests: vec![true, false, false],
        };
        assert!(!goal.is_satisfiable(&o));
        let space = ActionSpace::new(&o);
        let mut claim = SystemAct::plain(&space, SystemAction::InformOffer);
        claim.offer = Some(Offer { venue: None, assumed: goal.constraints.clone() });
        let mut ledger = OfferLedger::default();
        ledger.record(3, &claim);
        assert!(ledger.success(&o, &goal));
    }

    #[test]
    fn hidden_goal_is_unavailable() {
        let o = Ontology::desk_default();
        let env = DialogueEnv::new(&o, EnvConfig { expose_goal: false, ..Default::default() }, 1).unwrap();
        assert!(matches!(env.goal(), Err(Error::GoalUnavailable)));
        assert!(matches!(env.goal_progress(), Err(Error::GoalUnavailable)));
    }

    #[test]
    fn same_seed_same_dialogue() {
        let o = Ontology::desk_default();
        let cfg = EnvConfig { ser: 0.3, ..Default::default() };
        let play = |seed| {
            let mut env = DialogueEnv::new(&o, cfg.clone(), seed).unwrap();
            let mut t = 0;
            while !env.is_done() {
                env.step(t % 20).unwrap();
                t += 7;
            }
            env.episode().unwrap()
        };
        assert_eq!(play(11), play(11));
    }

    #[test]
    fn inform_updates_belief_through_step() {
        let o = Ontology::desk_default();
        let mut env = DialogueEnv::new(&o, EnvConfig { ser: 0.0, ..Default::default() }, 2).unwrap();
        let goal = env.goal().unwrap().clone();
        run(&mut env, &[SystemAction::Request(0)]);
        let obs = env.turns()[0].observation;
        assert_eq!(obs.observed_act, DialogueAct::inform(0, SlotValue::Value(goal.constraints[0].unwrap())));
        assert_eq!(env.belief().grounded_value(0), goal.constraints[0]);
    }
}
