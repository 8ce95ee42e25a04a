//! Small enumerable MDPs with exact value iteration, used as oracles for the
//! shaping guarantee and for GP-SARSA convergence.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// `transitions[s][a]`, probabilities summing to one. Terminal states
    /// have no outgoing transitions.
    pub transitions: Vec<Vec<Vec<Transition>>>,
    pub terminal: Vec<bool>,
    pub start: usize,
}

impl TabularMdp {
    /// Five-state chain: states 0-3 are live, state 4 is terminal.
    /// `right` advances with probability 0.8 (otherwise stays), each step
    /// costs 1 and reaching the end pays 10. `left` steps back, staying put
    /// in state 0.
    pub fn chain() -> Self {
        Self::build_chain(false)
    }

    /// The chain with an early exit: `left` in state 0 ends the episode with
    /// reward 1. Backing out is never optimal but looks attractive to a
    /// learner whose estimates of the far states are still poor.
    pub fn chain_with_exit() -> Self {
        Self::build_chain(true)
    }

    fn build_chain(exit: bool) -> Self {
        const GOAL: usize = 4;
        let mut transitions = vec![vec![Vec::new(); 2]; GOAL + 1];
        for s in 0..GOAL {
            transitions[s][0] = match (s, exit) {
                (0, true) => vec![Transition { next: GOAL, prob: 1.0, reward: 1.0 }],
                (0, false) => vec![Transition { next: 0, prob: 1.0, reward: -1.0 }],
                _ => vec![Transition { next: s - 1, prob: 1.0, reward: -1.0 }],
            };
            let bonus = if s + 1 == GOAL { 10.0 } else { 0.0 };
            transitions[s][1] = vec![
                Transition { next: s + 1, prob: 0.8, reward: -1.0 + bonus },
                Transition { next: s, prob: 0.2, reward: -1.0 },
            ];
        }
        let mut terminal = vec![false; GOAL + 1];
        terminal[GOAL] = true;
        TabularMdp { n_states: GOAL + 1, n_actions: 2, transitions, terminal, start: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.transitions.len() != self.n_states || self.terminal.len() != self.n_states {
            return Err(Error::Config("transition table does not match state count".into()));
        }
        for (s, per_action) in self.transitions.iter().enumerate() {
            if self.terminal[s] {
                continue;
            }
            if per_action.len() != self.n_actions {
                return Err(Error::Config(format!("state {s} lacks actions")));
            }
            for outcomes in per_action {
                let total: f64 = outcomes.iter().map(|t| t.prob).sum();
                if (total - 1.0).abs() > 1e-9 || outcomes.iter().any(|t| t.next >= self.n_states) {
                    return Err(Error::Config(format!("bad transition distribution in state {s}")));
                }
            }
        }
        Ok(())
    }

    /// Samples one transition; returns `(next_state, reward)`.
    pub fn sample<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> (usize, f64) {
        let outcomes = &self.transitions[state][action];
        let mut u: f64 = rng.random();
        for t in outcomes {
            if u < t.prob {
                return (t.next, t.reward);
            }
            u -= t.prob;
        }
        let last = outcomes.last().expect("live state has outcomes");
        (last.next, last.reward)
    }
}

/// Optimal action values; rows of terminal states are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub q: Vec<Vec<f64>>,
    pub sweeps: usize,
}

impl QTable {
    /// State value; zero for terminal states.
    pub fn value(&self, s: usize) -> f64 {
        self.q[s].iter().copied().reduce(f64::max).unwrap_or(0.0)
    }

    /// Actions within `tol` (relative to the value scale) of the best one.
    pub fn greedy_set(&self, s: usize, tol: f64) -> Vec<usize> {
        let row = &self.q[s];
        if row.is_empty() {
            return Vec::new();
        }
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = tol * (1.0 + best.abs());
        (0..row.len()).filter(|&a| row[a] >= best - slack).collect()
    }
}

pub const VI_TOLERANCE: f64 = 1e-12;
pub const VI_MAX_SWEEPS: usize = 100_000;

/// Exact value iteration with an optional reward transform
/// `bonus(s, a, s')` added to every transition reward.
pub fn value_iteration_with<F>(mdp: &TabularMdp, gamma: f64, bonus: F) -> Result<QTable>
where
    F: Fn(usize, usize, usize) -> f64,
{
    mdp.validate()?;
    let mut v = vec![0.0; mdp.n_states];
    let mut q: Vec<Vec<f64>> = (0..mdp.n_states)
        .map(|s| if mdp.terminal[s] { Vec::new() } else { vec![0.0; mdp.n_actions] })
        .collect();
    for sweep in 1..=VI_MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in 0..mdp.n_states {
            if mdp.terminal[s] {
                continue;
            }
            for a in 0..mdp.n_actions {
                q[s][a] = mdp.transitions[s][a]
                    .iter()
                    .map(|t| t.prob * (t.reward + bonus(s, a, t.next) + gamma * v[t.next]))
                    .sum();
            }
            let best = q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if !delta.is_finite() {
            break;
        }
        if delta < VI_TOLERANCE {
            return Ok(QTable { q, sweeps: sweep });
        }
    }
    Err(Error::NonConvergent(VI_MAX_SWEEPS))
}

pub fn value_iteration(mdp: &TabularMdp, gamma: f64) -> Result<QTable> {
    value_iteration_with(mdp, gamma, |_, _, _| 0.0)
}
