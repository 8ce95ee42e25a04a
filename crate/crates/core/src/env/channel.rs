use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::env::acts::{ActType, DialogueAct, SlotRef, SlotValue};
use crate::env::ontology::Ontology;
use crate::error::{Error, Result};

/// Probability that a corruption substitutes a value rather than the act type.
pub const VALUE_SUBSTITUTION_PROB: f64 = 0.7;

/// What the system hears: a single act with a confidence score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub observed_act: DialogueAct,
    pub confidence: f64,
    /// Analysis only; never shown to the learner.
    pub is_corrupted: bool,
}

/// Semantic error channel with Beta-distributed confidence scores.
#[derive(Debug, Clone)]
pub struct ErrorChannel {
    ser: f64,
    correct_conf: Beta<f64>,
    corrupt_conf: Beta<f64>,
}

impl ErrorChannel {
    pub fn new(ser: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ser) {
            return Err(Error::OutOfRange(format!("semantic error rate {ser} not in [0, 1]")));
        }
        Ok(ErrorChannel {
            ser,
            correct_conf: Beta::new(6.0, 2.0).expect("valid shape"),
            corrupt_conf: Beta::new(2.0, 4.0).expect("valid shape"),
        })
    }

    pub fn ser(&self) -> f64 {
        self.ser
    }

    pub fn corrupt<R: Rng + ?Sized>(&self, ontology: &Ontology, true_act: DialogueAct, rng: &mut R) -> Observation {
        if rng.random_bool(self.ser) {
            let observed_act = confuse(ontology, true_act, rng);
            let is_corrupted = observed_act != true_act;
            let confidence = if is_corrupted {
                self.corrupt_conf.sample(rng)
            } else {
                self.correct_conf.sample(rng)
            };
            Observation { observed_act, confidence, is_corrupted }
        } else {
            Observation { observed_act: true_act, confidence: self.correct_conf.sample(rng), is_corrupted: false }
        }
    }
}

/// Draws a confusable act that differs from `act`: a value (or request-slot)
/// substitution with probability 0.7 where one exists, otherwise an act-type
/// substitution.
pub fn confuse<R: Rng + ?Sized>(ontology: &Ontology, act: DialogueAct, rng: &mut R) -> DialogueAct {
    if rng.random_bool(VALUE_SUBSTITUTION_PROB) {
        if let Some(swapped) = substitute_value(ontology, act, rng) {
            return swapped;
        }
    }
    substitute_type(ontology, act, rng)
}

fn other_index<R: Rng + ?Sized>(n: usize, current: usize, rng: &mut R) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let draw = rng.random_range(0..n - 1);
    Some(if draw >= current { draw + 1 } else { draw })
}

fn substitute_value<R: Rng + ?Sized>(ontology: &Ontology, act: DialogueAct, rng: &mut R) -> Option<DialogueAct> {
    match (act.act_type, act.slot, act.value) {
        (ActType::Inform, Some(SlotRef::Constraint(s)), Some(value)) => {
            let n = ontology.constraint_slots[s].values.len();
            let v = match value {
                // dontcare is confused with a concrete value
                SlotValue::DontCare => rng.random_range(0..n),
                SlotValue::Value(v) => other_index(n, v, rng)?,
            };
            Some(DialogueAct::inform(s, SlotValue::Value(v)))
        }
        (ActType::Request, Some(SlotRef::Request(r)), _) => {
            other_index(ontology.n_request(), r, rng).map(DialogueAct::request)
        }
        _ => None,
    }
}

fn substitute_type<R: Rng + ?Sized>(ontology: &Ontology, act: DialogueAct, rng: &mut R) -> DialogueAct {
    let t = other_index(ActType::COUNT, act.act_type.index(), rng).expect("nine act types");
    match ActType::ALL[t] {
        ActType::Inform => {
            let s = rng.random_range(0..ontology.n_constraint());
            let v = rng.random_range(0..ontology.constraint_slots[s].values.len());
            DialogueAct::inform(s, SlotValue::Value(v))
        }
        ActType::Request => DialogueAct::request(rng.random_range(0..ontology.n_request())),
        ActType::Confirm => DialogueAct::confirm(rng.random_range(0..ontology.n_constraint())),
        other => DialogueAct::bare(other),
    }
}
