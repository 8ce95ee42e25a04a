//! Agenda-style simulated user.
//!
//! The user holds a stack of acts it still wants to say (initially one
//! inform per constrained slot, in random order) and reacts to each system
//! act with exactly one act:
//!
//! * `request(s)` / `select(s)`: inform the goal value, or `dontcare`.
//! * `confirm(s=v)`: affirm when `v` agrees with the goal, otherwise negate
//!   and queue a corrective inform.
//! * offers: accept a consistent offer and start asking for the requested
//!   properties; reject an inconsistent one with `reqalts` and queue
//!   corrections for the violated slots.
//! * `inform(r)` about the accepted venue: ask for the next property, or
//!   say `bye` once everything has been received.
//! * anything else pops the agenda.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::acts::{ActType, DialogueAct, SlotValue, SystemAct, SystemAction};
use crate::env::goal::UserGoal;
use crate::env::ontology::Ontology;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct UserAgenda {
    state: Option<AgendaState>,
}

#[derive(Debug, Clone)]
struct AgendaState {
    order: Vec<usize>,
    pending: VecDeque<DialogueAct>,
    /// `Some(Some(v))`: venue `v` accepted; `Some(None)`: a correct
    /// "no venue" claim accepted.
    accepted: Option<Option<usize>>,
    told: Vec<bool>,
    last: Option<DialogueAct>,
}

fn goal_inform(goal: &UserGoal, slot: usize) -> DialogueAct {
    let value = goal.constraints[slot].map_or(SlotValue::DontCare, SlotValue::Value);
    DialogueAct::inform(slot, value)
}

impl UserAgenda {
    pub fn uninitialized() -> Self {
        UserAgenda { state: None }
    }

    pub fn new<R: Rng + ?Sized>(goal: &UserGoal, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..goal.constraints.len()).filter(|&s| goal.is_constrained(s)).collect();
        order.shuffle(rng);
        let mut state = AgendaState {
            order,
            pending: VecDeque::new(),
            accepted: None,
            told: vec![false; goal.requests.len()],
            last: None,
        };
        state.reload(goal);
        UserAgenda { state: Some(state) }
    }

    pub fn is_initialized(&self) -> bool {
        self.state.is_some()
    }

    /// The venue the user has accepted, if any.
    pub fn accepted(&self) -> Option<Option<usize>> {
        self.state.as_ref().and_then(|s| s.accepted)
    }

    pub fn respond(&mut self, ontology: &Ontology, goal: &UserGoal, sys: &SystemAct) -> Result<DialogueAct> {
        let st = self.state.as_mut().ok_or(Error::AgendaUninitialized)?;
        let act = match sys.action {
            SystemAction::Request(s) | SystemAction::Select(s) => {
                st.drop_inform(s);
                goal_inform(goal, s)
            }
            SystemAction::Confirm(s) => {
                let asked = sys.values.first().copied();
                match goal.constraints[s] {
                    Some(want) if asked != Some(want) => {
                        st.drop_inform(s);
                        st.pending.push_front(goal_inform(goal, s));
                        DialogueAct::bare(ActType::Negate)
                    }
                    _ => DialogueAct::bare(ActType::Affirm),
                }
            }
            SystemAction::InformOffer | SystemAction::InformAlternative | SystemAction::InformByName => {
                match &sys.offer {
                    Some(offer) => st.consider_offer(ontology, goal, offer.venue, &offer.assumed),
                    None => DialogueAct::bare(ActType::Null),
                }
            }
            SystemAction::InformRequested(r) => match st.accepted {
                Some(Some(v)) if sys.venue == Some(v) => {
                    st.told[r] = true;
                    st.next_request_or_bye(goal)
                }
                _ => DialogueAct::bare(ActType::Null),
            },
            SystemAction::Reqmore => {
                if st.accepted.is_some() {
                    st.next_request_or_bye(goal)
                } else {
                    st.pop(goal)
                }
            }
            SystemAction::Repeat => match st.last {
                Some(last) => last,
                None => st.pop(goal),
            },
            SystemAction::Restart => {
                st.accepted = None;
                st.told.iter_mut().for_each(|t| *t = false);
                st.reload(goal);
                st.pop(goal)
            }
            SystemAction::Hello => st.pop(goal),
            SystemAction::Bye => DialogueAct::bare(ActType::Bye),
        };
        st.last = Some(act);
        Ok(act)
    }
}

impl AgendaState {
    fn reload(&mut self, goal: &UserGoal) {
        self.pending = self.order.iter().map(|&s| goal_inform(goal, s)).collect();
    }

    fn drop_inform(&mut self, slot: usize) {
        self.pending.retain(|a| {
            !(a.act_type == ActType::Inform
                && a.slot == Some(crate::env::acts::SlotRef::Constraint(slot)))
        });
    }

    fn pop(&mut self, goal: &UserGoal) -> DialogueAct {
        if let Some(act) = self.pending.pop_front() {
            return act;
        }
        if self.accepted.is_some() {
            self.next_request_or_bye(goal)
        } else {
            DialogueAct::bare(ActType::Null)
        }
    }

    fn next_request_or_bye(&self, goal: &UserGoal) -> DialogueAct {
        if let Some(Some(_)) = self.accepted {
            if let Some(r) = (0..goal.requests.len()).find(|&r| goal.requests[r] && !self.told[r]) {
                return DialogueAct::request(r);
            }
        }
        DialogueAct::bare(ActType::Bye)
    }

    fn consider_offer(
        &mut self,
        ontology: &Ontology,
        goal: &UserGoal,
        venue: Option<usize>,
        assumed: &[Option<usize>],
    ) -> DialogueAct {
        if offer_is_consistent(ontology, goal, venue, assumed) {
            if self.accepted != Some(venue) {
                self.told.iter_mut().for_each(|t| *t = false);
            }
            self.accepted = Some(venue);
            return self.next_request_or_bye(goal);
        }
        self.accepted = None;
        let violated: Vec<usize> = (0..goal.constraints.len())
            .filter(|&s| match (goal.constraints[s], venue) {
                (Some(want), Some(v)) => ontology.venues[v].constraints[s] != want,
                (Some(want), None) => assumed.get(s).copied().flatten().is_some_and(|a| a != want),
                (None, _) => false,
            })
            .collect();
        for &s in violated.iter().rev() {
            self.drop_inform(s);
            self.pending.push_front(goal_inform(goal, s));
        }
        DialogueAct::bare(ActType::Reqalts)
    }
}

/// A venue offer is consistent when the venue satisfies every goal
/// constraint. A "no venue" claim is consistent when no venue satisfies the
/// goal and the assumed constraints do not contradict it.
pub fn offer_is_consistent(
    ontology: &Ontology,
    goal: &UserGoal,
    venue: Option<usize>,
    assumed: &[Option<usize>],
) -> bool {
    match venue {
        Some(v) => ontology.venue_matches(v, &goal.constraints),
        None => {
            let compatible = goal
                .constraints
                .iter()
                .zip(assumed)
                .all(|(g, a)| match (g, a) {
                    (Some(g), Some(a)) => g == a,
                    _ => true,
                });
            compatible && !goal.is_satisfiable(ontology)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::acts::{ActionSpace, Offer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Ontology, ActionSpace, UserGoal, UserAgenda) {
        let o = Ontology::desk_default();
        let space = ActionSpace::new(&o);
        let v = &o.venues[0];
        let goal = UserGoal {
            constraints: v.constraints.iter().map(|&c| Some(c)).collect(),
            requests: vec![true, false, true],
        };
        let agenda = UserAgenda::new(&goal, &mut ChaCha8Rng::seed_from_u64(1));
        (o, space, goal, agenda)
    }

    #[test]
    fn request_answered_with_goal_value() {
        let (o, space, goal, mut agenda) = setup();
        let act = agenda.respond(&o, &goal, &SystemAct::plain(&space, SystemAction::Request(0))).unwrap();
        assert_eq!(act, DialogueAct::inform(0, SlotValue::Value(goal.constraints[0].unwrap())));
    }

    #[test]
    fn unconstrained_request_is_dontcare() {
        let (o, space, mut goal, _) = setup();
        goal.constraints[1] = None;
        let mut agenda = UserAgenda::new(&goal, &mut ChaCha8Rng::seed_from_u64(1));
        let act = agenda.respond(&o, &goal, &SystemAct::plain(&space, SystemAction::Request(1))).unwrap();
        assert_eq!(act, DialogueAct::inform(1, SlotValue::DontCare));
    }

    #[test]
    fn wrong_confirm_is_negated_and_corrected() {
        let (o, space, goal, mut agenda) = setup();
        let want = goal.constraints[1].unwrap();
        let mut confirm = SystemAct::plain(&space, SystemAction::Confirm(1));
        confirm.values = vec![(want + 1) % 5];
        assert_eq!(agenda.respond(&o, &goal, &confirm).unwrap().act_type, ActType::Negate);
        let next = agenda.respond(&o, &goal, &SystemAct::plain(&space, SystemAction::Reqmore)).unwrap();
        assert_eq!(next, DialogueAct::inform(1, SlotValue::Value(want)));
        confirm.values = vec![want];
        assert_eq!(agenda.respond(&o, &goal, &confirm).unwrap().act_type, ActType::Affirm);
    }

    #[test]
    fn consistent_offer_then_requests_then_bye() {
        let (o, space, goal, mut agenda) = setup();
        let mut offer = SystemAct::plain(&space, SystemAction::InformOffer);
        offer.offer = Some(Offer { venue: Some(0), assumed: goal.constraints.clone() });
        assert_eq!(agenda.respond(&o, &goal, &offer).unwrap(), DialogueAct::request(0));
        let mut inform = SystemAct::plain(&space, SystemAction::InformRequested(0));
        inform.venue = Some(0);
        assert_eq!(agenda.respond(&o, &goal, &inform).unwrap(), DialogueAct::request(2));
        let mut inform = SystemAct::plain(&space, SystemAction::InformRequested(2));
        inform.venue = Some(0);
        assert_eq!(agenda.respond(&o, &goal, &inform).unwrap().act_type, ActType::Bye);
    }

    #[test]
    fn violating_offer_gets_reqalts() {
        let (o, space, goal, mut agenda) = setup();
        let bad = (0..o.venues.len()).find(|&v| !o.venue_matches(v, &goal.constraints)).unwrap();
        let mut offer = SystemAct::plain(&space, SystemAction::InformOffer);
        offer.offer = Some(Offer { venue: Some(bad), assumed: vec![None; 3] });
        assert_eq!(agenda.respond(&o, &goal, &offer).unwrap().act_type, ActType::Reqalts);
        // The next free turn corrects a violated slot.
        let next = agenda.respond(&o, &goal, &SystemAct::plain(&space, SystemAction::Reqmore)).unwrap();
        assert_eq!(next.act_type, ActType::Inform);
        let crate::env::acts::SlotRef::Constraint(s) = next.slot.unwrap() else { panic!() };
        assert_ne!(o.venues[bad].constraints[s], goal.constraints[s].unwrap());
    }

    #[test]
    fn uninitialized_agenda_errors() {
        let (o, space, goal, _) = setup();
        let mut agenda = UserAgenda::uninitialized();
        assert!(matches!(
            agenda.respond(&o, &goal, &SystemAct::plain(&space, SystemAction::Hello)),
            Err(Error::AgendaUninitialized)
        ));
    }
}
