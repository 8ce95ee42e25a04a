//! Confidence-weighted belief tracker over the user's goal, method and
//! discourse act.
//!
//! Each goal slot keeps a distribution over its values plus a trailing
//! `none` hypothesis. Evidence with confidence `c` blends a point mass into
//! the prior: `p' = c·δ_v + (1-c)·p`.

use crate::env::acts::{ActType, DialogueAct, SlotRef, SlotValue, SystemAct, SystemAction};
use crate::env::channel::Observation;
use crate::env::ontology::Ontology;
use crate::error::{Error, Result};

/// Values of the method variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    None,
    ByConstraints,
    ByAlternatives,
    Finished,
}

impl Method {
    pub const COUNT: usize = 4;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    /// Per constraint slot: probabilities over values, then `none` last.
    pub goal: Vec<Vec<f64>>,
    pub method: [f64; Method::COUNT],
    pub discourse: [f64; ActType::COUNT],
}

pub fn init_belief(ontology: &Ontology) -> BeliefState {
    let goal = ontology
        .constraint_slots
        .iter()
        .map(|s| {
            let n = s.values.len() + 1;
            vec![1.0 / n as f64; n]
        })
        .collect();
    let mut method = [0.0; Method::COUNT];
    method[Method::None as usize] = 1.0;
    BeliefState { goal, method, discourse: [1.0 / ActType::COUNT as f64; ActType::COUNT] }
}

impl BeliefState {
    /// Most likely real value of a slot (ignoring `none`) and its probability.
    pub fn top_value(&self, slot: usize) -> (usize, f64) {
        let dist = &self.goal[slot];
        let values = &dist[..dist.len() - 1];
        let mut best = 0;
        for (i, &p) in values.iter().enumerate() {
            if p > values[best] {
                best = i;
            }
        }
        (best, values[best])
    }

    /// Second most likely real value and its probability.
    pub fn second_value(&self, slot: usize) -> (usize, f64) {
        let (top, _) = self.top_value(slot);
        let dist = &self.goal[slot];
        let mut best: Option<usize> = None;
        for i in 0..dist.len() - 1 {
            if i != top && best.is_none_or(|b| dist[i] > dist[b]) {
                best = Some(i);
            }
        }
        best.map_or((top, 0.0), |b| (b, dist[b]))
    }

    pub fn none_prob(&self, slot: usize) -> f64 {
        *self.goal[slot].last().expect("none entry")
    }

    /// Top value when it beats `none`; `None` while the slot is unknown.
    pub fn grounded_value(&self, slot: usize) -> Option<usize> {
        let (v, p) = self.top_value(slot);
        (p > self.none_prob(slot)).then_some(v)
    }

    pub fn distributions(&self) -> impl Iterator<Item = &[f64]> {
        self.goal
            .iter()
            .map(Vec::as_slice)
            .chain([self.method.as_slice(), self.discourse.as_slice()])
    }

    fn check_dims(&self, ontology: &Ontology) -> Result<()> {
        if self.goal.len() != ontology.n_constraint() {
            return Err(Error::DimensionMismatch {
                expected: ontology.n_constraint(),
                actual: self.goal.len(),
                context: "belief goal slots",
            });
        }
        for (dist, slot) in self.goal.iter().zip(&ontology.constraint_slots) {
            if dist.len() != slot.values.len() + 1 {
                return Err(Error::DimensionMismatch {
                    expected: slot.values.len() + 1,
                    actual: dist.len(),
                    context: "belief goal values",
                });
            }
        }
        Ok(())
    }
}

fn blend_point_mass(dist: &mut [f64], index: usize, c: f64) {
    for p in dist.iter_mut() {
        *p *= 1.0 - c;
    }
    dist[index] += c;
}

/// Moves a fraction `c` of the mass on `index` to the other entries in
/// proportion to their current mass.
fn remove_mass(dist: &mut [f64], index: usize, c: f64) {
    let moved = c * dist[index];
    let rest: f64 = dist.iter().enumerate().filter(|&(i, _)| i != index).map(|(_, p)| p).sum();
    let others = dist.len() - 1;
    dist[index] -= moved;
    for (i, p) in dist.iter_mut().enumerate() {
        if i == index {
            continue;
        }
        *p += if rest > 0.0 { moved * *p / rest } else { moved / others as f64 };
    }
}

/// Pure belief update for one turn.
pub fn update(
    ontology: &Ontology,
    belief: &BeliefState,
    observation: &Observation,
    last_system_act: &SystemAct,
) -> Result<BeliefState> {
    belief.check_dims(ontology)?;
    let act: DialogueAct = observation.observed_act;
    let c = observation.confidence;
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::OutOfRange(format!("confidence {c}")));
    }
    let mut next = belief.clone();

    let confirmed = match (last_system_act.action, last_system_act.values.first()) {
        (SystemAction::Confirm(s), Some(&v)) => Some((s, v)),
        _ => None,
    };

    match (act.act_type, act.slot, act.value) {
        (ActType::Inform, Some(SlotRef::Constraint(s)), Some(SlotValue::Value(v))) => {
            let dist = next.goal.get_mut(s).ok_or(Error::DimensionMismatch {
                expected: ontology.n_constraint(),
                actual: s + 1,
                context: "informed slot",
            })?;
            if v + 1 >= dist.len() {
                return Err(Error::DimensionMismatch {
                    expected: dist.len() - 1,
                    actual: v + 1,
                    context: "informed value",
                });
            }
            blend_point_mass(dist, v, c);
        }
        (ActType::Affirm, _, _) => {
            if let Some((s, v)) = confirmed {
                blend_point_mass(&mut next.goal[s], v, c);
            }
        }
        (ActType::Negate, _, _) => {
            if let Some((s, v)) = confirmed {
                remove_mass(&mut next.goal[s], v, c);
            }
        }
        _ => {}
    }

    let uniform = 1.0 / ActType::COUNT as f64;
    for (i, p) in next.discourse.iter_mut().enumerate() {
        *p = (1.0 - c) * uniform + if i == act.act_type.index() { c } else { 0.0 };
    }

    let target = match act.act_type {
        ActType::Inform => Some(Method::ByConstraints),
        ActType::Reqalts => Some(Method::ByAlternatives),
        ActType::Bye => Some(Method::Finished),
        _ => None,
    };
    if let Some(m) = target {
        blend_point_mass(&mut next.method, m as usize, c);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::acts::ActionSpace;

    fn obs(act: DialogueAct, confidence: f64) -> Observation {
        Observation { observed_act: act, confidence, is_corrupted: false }
    }

    fn hello(o: &Ontology) -> SystemAct {
        SystemAct::plain(&ActionSpace::new(o), SystemAction::Hello)
    }

    #[test]
    fn init_is_uniform() {
        let o = Ontology::desk_default();
        let b = init_belief(&o);
        assert_eq!(b.goal[0].len(), 11);
        assert!(b.goal[0].iter().all(|&p| (p - 1.0 / 11.0).abs() < 1e-15));
        for d in b.distributions() {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(b.method, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(init_belief(&o), b);
    }

    #[test]
    fn full_confidence_is_point_mass() {
        let o = Ontology::desk_default();
        let b = update(&o, &init_belief(&o), &obs(DialogueAct::inform(0, SlotValue::Value(0)), 1.0), &hello(&o)).unwrap();
        assert_eq!(b.goal[0][0], 1.0);
        assert!(b.goal[0][1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn zero_confidence_leaves_belief() {
        let o = Ontology::desk_default();
        let b0 = init_belief(&o);
        let b = update(&o, &b0, &obs(DialogueAct::inform(0, SlotValue::Value(0)), 0.0), &hello(&o)).unwrap();
        assert_eq!(b, b0);
    }

    #[test]
    fn mixture_arithmetic() {
        let o = Ontology::desk_default();
        let b = update(&o, &init_belief(&o), &obs(DialogueAct::inform(0, SlotValue::Value(0)), 0.8), &hello(&o)).unwrap();
        let expected = (0.8 + 0.2 / 11.0) / (0.8 + 0.2);
        assert!((b.goal[0][0] - expected).abs() < 1e-12);
        assert!((b.goal[0][0] - 0.8182).abs() < 1e-4);
    }

    #[test]
    fn negate_after_confirm_moves_mass_away() {
        let o = Ontology::desk_default();
        let space = ActionSpace::new(&o);
        let b = update(&o, &init_belief(&o), &obs(DialogueAct::inform(1, SlotValue::Value(2)), 0.9), &hello(&o)).unwrap();
        let mut confirm = SystemAct::plain(&space, SystemAction::Confirm(1));
        confirm.values = vec![2];
        let after = update(&o, &b, &obs(DialogueAct::bare(ActType::Negate), 0.5), &confirm).unwrap();
        assert!((after.goal[1][2] - 0.5 * b.goal[1][2]).abs() < 1e-12);
        assert!((after.goal[1].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let affirmed = update(&o, &b, &obs(DialogueAct::bare(ActType::Affirm), 0.5), &confirm).unwrap();
        assert!(affirmed.goal[1][2] > b.goal[1][2]);
    }

    #[test]
    fn method_and_discourse_track_acts() {
        let o = Ontology::desk_default();
        let b = update(&o, &init_belief(&o), &obs(DialogueAct::bare(ActType::Reqalts), 1.0), &hello(&o)).unwrap();
        assert_eq!(b.method[Method::ByAlternatives as usize], 1.0);
        assert_eq!(b.discourse[ActType::Reqalts.index()], 1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let o = Ontology::desk_default();
        let mut b = init_belief(&o);
        b.goal.pop();
        assert!(matches!(
            update(&o, &b, &obs(DialogueAct::bare(ActType::Bye), 1.0), &hello(&o)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
