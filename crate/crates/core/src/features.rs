//! Per-turn feature vectors.
//!
//! Layout: `[goal distributions | method | discourse | user-act one-hot |
//! system-act one-hot | turn fraction]`. The desk ontology gives
//! 21 + 4 + 9 + 9 + 20 + 1 = 64 entries.

use std::io::Write;
use std::path::Path;

use crate::belief::{BeliefState, Method};
use crate::env::acts::{ActType, ActionSpace};
use crate::env::channel::Observation;
use crate::env::ontology::Ontology;
use crate::env::session::SystemContext;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    pub segments: Vec<Segment>,
    pub dim: usize,
}

impl FeatureLayout {
    pub fn new(ontology: &Ontology) -> Self {
        let mut segments = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, width: usize| {
            segments.push(Segment { name, offset, width });
            offset += width;
        };
        for slot in &ontology.constraint_slots {
            push(format!("goal_{}", slot.name), slot.values.len() + 1);
        }
        push("method".into(), Method::COUNT);
        push("discourse".into(), ActType::COUNT);
        push("user_act".into(), ActType::COUNT);
        push("system_act".into(), ActionSpace::new(ontology).len());
        push("turn".into(), 1);
        FeatureLayout { segments, dim: offset }
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Schema file: one row per segment with its offset and width.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        writeln!(out, "segment,offset,width")?;
        for s in &self.segments {
            writeln!(out, "{},{},{}", s.name, s.offset, s.width)?;
        }
        Ok(())
    }
}

pub fn feature_dim(ontology: &Ontology) -> usize {
    FeatureLayout::new(ontology).dim
}

/// Builds f_t from the belief after the turn, the observed (top) user act,
/// the summary system action and the 1-based turn index.
pub fn extract(
    layout: &FeatureLayout,
    belief: &BeliefState,
    observation: &Observation,
    system_action: usize,
    turn_index: usize,
    max_turns: usize,
) -> Result<FeatureVector> {
    if turn_index == 0 || turn_index > max_turns {
        return Err(Error::OutOfRange(format!("turn index {turn_index} outside [1, {max_turns}]")));
    }
    let n_actions = layout.segment("system_act").map_or(0, |s| s.width);
    if system_action >= n_actions {
        return Err(Error::DimensionMismatch {
            expected: n_actions,
            actual: system_action + 1,
            context: "system action one-hot",
        });
    }
    let mut values = Vec::with_capacity(layout.dim);
    for dist in &belief.goal {
        values.extend_from_slice(dist);
    }
    values.extend_from_slice(&belief.method);
    values.extend_from_slice(&belief.discourse);
    let mut user = [0.0; ActType::COUNT];
    user[observation.observed_act.act_type.index()] = 1.0;
    values.extend_from_slice(&user);
    let start = values.len();
    values.resize(start + n_actions, 0.0);
    values[start + system_action] = 1.0;
    values.push(turn_index as f64 / max_turns as f64);
    if values.len() != layout.dim {
        return Err(Error::DimensionMismatch {
            expected: layout.dim,
            actual: values.len(),
            context: "feature vector (belief does not match ontology)",
        });
    }
    Ok(FeatureVector(values))
}

/// Width of [`summary_features`] for an ontology.
pub fn summary_dim(ontology: &Ontology) -> usize {
    1 + 3 * ontology.n_constraint() + Method::COUNT + ActType::COUNT + ontology.n_request() + 3
}

/// Compact state vector for the policy kernel. Slot identity matters for
/// the policy but value identity does not, so each goal slot is summarised
/// by how uncertain it is rather than by its full distribution:
///
/// `[1 | per slot: 1-top, 4·top·(1-top), second | method | discourse |
///   pending requests | offer current | offer made | turn fraction]`
pub fn summary_features(belief: &BeliefState, ctx: &SystemContext, turn: usize, max_turns: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(32);
    x.push(1.0);
    for s in 0..belief.goal.len() {
        let (_, top) = belief.top_value(s);
        let (_, second) = belief.second_value(s);
        x.push(1.0 - top);
        x.push(4.0 * top * (1.0 - top));
        x.push(second);
    }
    x.extend_from_slice(&belief.method);
    x.extend_from_slice(&belief.discourse);
    x.extend_from_slice(&ctx.pending_requests);
    x.push(if ctx.offer_is_current(belief) { 1.0 } else { 0.0 });
    x.push(if ctx.current_offer.is_some() { 1.0 } else { 0.0 });
    x.push(turn as f64 / max_turns as f64);
    x
}
