use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::ontology::Ontology;
use crate::error::{Error, Result};

/// What the simulated user wants: a value (or no preference) per constraint
/// slot and the informable properties it will ask for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserGoal {
    /// Indexed by constraint slot; `None` means the slot is unconstrained.
    pub constraints: Vec<Option<usize>>,
    /// Indexed by request slot.
    pub requests: Vec<bool>,
}

impl UserGoal {
    pub fn is_constrained(&self, slot: usize) -> bool {
        self.constraints[slot].is_some()
    }

    pub fn n_requests(&self) -> usize {
        self.requests.iter().filter(|&&r| r).count()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.iter().filter(|c| c.is_some()).count()
    }

    /// At least one venue satisfies every constraint.
    pub fn is_satisfiable(&self, ontology: &Ontology) -> bool {
        ontology.matching_venues(&self.constraints).next().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalConfig {
    /// Probability that each constraint slot is constrained. Empty means 1.0 for all.
    #[serde(default)]
    pub constraint_prob: Vec<f64>,
}

impl GoalConfig {
    pub fn prob(&self, slot: usize) -> f64 {
        self.constraint_prob.get(slot).copied().unwrap_or(1.0)
    }

    pub fn validate(&self, ontology: &Ontology) -> Result<()> {
        if self.constraint_prob.len() > ontology.n_constraint() {
            return Err(Error::Config("more constraint probabilities than slots".into()));
        }
        if self.constraint_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("constraint probabilities must lie in [0, 1]".into()));
        }
        if (0..ontology.n_constraint()).all(|s| self.prob(s) == 0.0) {
            return Err(Error::Config("at least one slot needs a positive probability".into()));
        }
        Ok(())
    }
}

/// Deterministic goal for a seed.
pub fn sample_goal(ontology: &Ontology, cfg: &GoalConfig, seed: u64) -> UserGoal {
    sample_goal_with(ontology, cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Constrained slots are drawn independently with their configured
/// probability, redrawn until at least one slot is constrained; values are
/// uniform. Requests are a uniform non-empty subset of the request slots.
pub fn sample_goal_with<R: Rng + ?Sized>(ontology: &Ontology, cfg: &GoalConfig, rng: &mut R) -> UserGoal {
    let constraints = loop {
        let draw: Vec<Option<usize>> = ontology
            .constraint_slots
            .iter()
            .enumerate()
            .map(|(s, slot)| {
                let constrained = rng.random_bool(cfg.prob(s));
                let value = rng.random_range(0..slot.values.len());
                constrained.then_some(value)
            })
            .collect();
        if draw.iter().any(Option::is_some) {
            break draw;
        }
    };
    let n = ontology.n_request();
    let mask: u64 = rng.random_range(1..(1u64 << n));
    let requests = (0..n).map(|r| mask & (1 << r) != 0).collect();
    UserGoal { constraints, requests }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let o = Ontology::desk_default();
        let cfg = GoalConfig::default();
        assert_eq!(sample_goal(&o, &cfg, 7), sample_goal(&o, &cfg, 7));
    }

    #[test]
    fn non_empty_everywhere() {
        let o = Ontology::desk_default();
        let cfg = GoalConfig { constraint_prob: vec![0.1, 0.1, 0.1] };
        for seed in 0..500 {
            let g = sample_goal(&o, &cfg, seed);
            assert!(g.n_constraints() >= 1);
            assert!(g.n_requests() >= 1);
        }
    }

    #[test]
    fn single_venue_goal_is_satisfiable() {
        let mut o = Ontology::desk_default();
        o.venues.truncate(1);
        let goal = UserGoal {
            constraints: o.venues[0].constraints.iter().map(|&v| Some(v)).collect(),
            requests: vec![true, false, false],
        };
        assert!(goal.is_satisfiable(&o));
    }
}
