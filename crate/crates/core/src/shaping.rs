//! Potential-based reward shaping.
//!
//! The shaping reward for a transition is `F = γ·φ(next) − φ(current)`; the
//! learner receives `R + F`. With the terminal potential pinned to zero the
//! discounted sum of `F` over an episode telescopes to `−φ_0`, so shaping
//! redistributes reward over turns without changing which policies are
//! optimal.

use serde::{Deserialize, Serialize};

use crate::env::session::{GoalProgress, SUCCESS_BONUS};
use crate::error::{Error, Result};
use crate::mdp::{value_iteration_with, TabularMdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSource {
    None,
    Rnn,
    #[serde(alias = "oracle")]
    OracleHeuristic,
}

impl PotentialSource {
    pub fn name(self) -> &'static str {
        match self {
            PotentialSource::None => "none",
            PotentialSource::Rnn => "rnn",
            PotentialSource::OracleHeuristic => "oracle",
        }
    }
}

impl std::str::FromStr for PotentialSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PotentialSource::None),
            "rnn" => Ok(PotentialSource::Rnn),
            "oracle" | "oracle_heuristic" => Ok(PotentialSource::OracleHeuristic),
            other => Err(Error::Config(format!("unknown shaping source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapingConfig {
    pub gamma: f64,
    pub source: PotentialSource,
    pub terminal_potential_zero: bool,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        ShapingConfig { gamma: 1.0, source: PotentialSource::None, terminal_potential_zero: true }
    }
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::OutOfRange(format!("discount {} not in (0, 1]", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedTransition {
    pub env_reward: f64,
    pub shaping_reward: f64,
    pub composite: f64,
}

impl ShapedTransition {
    pub fn new(env_reward: f64, shaping_reward: f64) -> Self {
        ShapedTransition { env_reward, shaping_reward, composite: env_reward + shaping_reward }
    }
}

/// `F = γ·φ_next − φ_t`, with `φ_next` forced to zero on a terminal
/// transition when the config asks for it.
pub fn shape(phi_t: f64, phi_next: f64, is_terminal: bool, cfg: &ShapingConfig) -> Result<f64> {
    if !phi_t.is_finite() || !phi_next.is_finite() {
        return Err(Error::NonFinite("shaping potential"));
    }
    let next = if is_terminal && cfg.terminal_potential_zero { 0.0 } else { phi_next };
    Ok(cfg.gamma * next - phi_t)
}

/// Per-turn composite rewards for an episode whose turn-level potentials
/// are `φ_1..φ_T`, starting from `φ_0 = 0`.
pub fn shaped_stream(potentials: &[f64], env_rewards: &[f64], cfg: &ShapingConfig) -> Result<Vec<ShapedTransition>> {
    shaped_stream_from(0.0, potentials, env_rewards, cfg)
}

/// As [`shaped_stream`] with an explicit initial potential.
pub fn shaped_stream_from(
    phi_0: f64,
    potentials: &[f64],
    env_rewards: &[f64],
    cfg: &ShapingConfig,
) -> Result<Vec<ShapedTransition>> {
    if potentials.len() != env_rewards.len() {
        return Err(Error::DimensionMismatch {
            expected: env_rewards.len(),
            actual: potentials.len(),
            context: "potentials vs rewards",
        });
    }
    let last = potentials.len().saturating_sub(1);
    let mut prev = phi_0;
    potentials
        .iter()
        .zip(env_rewards)
        .enumerate()
        .map(|(t, (&phi, &r))| {
            let f = shape(prev, phi, t == last, cfg)?;
            prev = phi;
            Ok(ShapedTransition::new(r, f))
        })
        .collect()
}

/// Hand-crafted progress potential that reads the true user goal:
/// `20 · (constraints grounded fraction + requests informed fraction) / 2`.
pub fn oracle_heuristic_potential(progress: &GoalProgress) -> f64 {
    let grounded = if progress.constraints_total == 0 {
        0.0
    } else {
        progress.constraints_grounded as f64 / progress.constraints_total as f64
    };
    SUCCESS_BONUS * (grounded + progress.requests_fraction) / 2.0
}

const ARGMAX_TOLERANCE: f64 = 1e-8;

/// Solves the MDP with and without the shaping bonus `γφ(s') − φ(s)` and
/// reports whether every state keeps the same set of greedy actions.
/// Terminal states are given potential zero.
pub fn policy_invariance_check(mdp: &TabularMdp, potential: &[f64], gamma: f64) -> Result<bool> {
    if potential.len() != mdp.n_states {
        return Err(Error::DimensionMismatch {
            expected: mdp.n_states,
            actual: potential.len(),
            context: "potential table",
        });
    }
    let phi = |s: usize| if mdp.terminal[s] { 0.0 } else { potential[s] };
    bonus_invariance_check(mdp, gamma, |s, _, next| gamma * phi(next) - phi(s))
}

/// Same comparison for an arbitrary transition bonus.
pub fn bonus_invariance_check<F>(mdp: &TabularMdp, gamma: f64, bonus: F) -> Result<bool>
where
    F: Fn(usize, usize, usize) -> f64,
{
    let plain = value_iteration_with(mdp, gamma, |_, _, _| 0.0)?;
    let shaped = value_iteration_with(mdp, gamma, bonus)?;
    Ok((0..mdp.n_states)
        .all(|s| plain.greedy_set(s, ARGMAX_TOLERANCE) == shaped.greedy_set(s, ARGMAX_TOLERANCE)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(gamma: f64) -> ShapingConfig {
        ShapingConfig { gamma, ..Default::default() }
    }

    #[test]
    fn direct_formula() {
        assert_eq!(shape(2.5, 4.0, false, &cfg(1.0)).unwrap(), 1.5);
        for g in [0.5, 0.9, 1.0] {
            assert_eq!(shape(0.0, 0.0, false, &cfg(g)).unwrap(), 0.0);
        }
        assert_eq!(shape(3.0, 7.0, true, &cfg(1.0)).unwrap(), -3.0);
        let keep = ShapingConfig { terminal_potential_zero: false, ..cfg(1.0) };
        assert_eq!(shape(3.0, 7.0, true, &keep).unwrap(), 4.0);
        assert!(shape(f64::NAN, 0.0, false, &cfg(1.0)).is_err());
    }

    #[test]
    fn zero_potentials_leave_rewards() {
        let r = [-1.0, -1.0, 19.0];
        let s = shaped_stream(&[0.0; 3], &r, &cfg(0.9)).unwrap();
        assert!(s.iter().zip(r).all(|(t, r)| t.composite == r && t.shaping_reward == 0.0));
    }

    #[test]
    fn undiscounted_sum_is_minus_initial_potential() {
        let phis = [1.5, -2.0, 4.0, 0.25];
        let s = shaped_stream_from(0.75, &phis, &[-1.0; 4], &cfg(1.0)).unwrap();
        let total: f64 = s.iter().map(|t| t.shaping_reward).sum();
        assert!((total + 0.75).abs() < 1e-12);
        let s = shaped_stream(&phis, &[-1.0; 4], &cfg(1.0)).unwrap();
        assert!(s.iter().map(|t| t.shaping_reward).sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn discounted_telescoping() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let t = rng.random_range(1..30);
            let phis: Vec<f64> = (0..t).map(|_| rng.random_range(-20.0..20.0)).collect();
            let phi0 = rng.random_range(-5.0..5.0);
            let keep = rng.random_bool(0.5);
            let c = ShapingConfig { gamma: 0.9, terminal_potential_zero: !keep, ..Default::default() };
            let s = shaped_stream_from(phi0, &phis, &vec![-1.0; t], &c).unwrap();
            let lhs: f64 = s.iter().enumerate().map(|(k, x)| 0.9f64.powi(k as i32) * x.shaping_reward).sum();
            let phi_t = if keep { phis[t - 1] } else { 0.0 };
            let rhs = 0.9f64.powi(t as i32) * phi_t - phi0;
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(shaped_stream(&[1.0], &[1.0, 2.0], &cfg(1.0)).is_err());
    }

    #[test]
    fn heuristic_potential_values() {
        let p = |g, t, r| GoalProgress { constraints_grounded: g, constraints_total: t, requests_fraction: r };
        assert_eq!(oracle_heuristic_potential(&p(0, 3, 0.0)), 0.0);
        assert_eq!(oracle_heuristic_potential(&p(3, 3, 1.0)), 20.0);
        assert!((oracle_heuristic_potential(&p(2, 3, 0.0)) - 20.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_potential_is_invariant() {
        assert!(policy_invariance_check(&TabularMdp::chain(), &[0.0; 5], 0.95).unwrap());
    }

    #[test]
    fn action_bonus_breaks_invariance() {
        // Paying +3 for every "left" step turns backing off into the best plan.
        let mdp = TabularMdp::chain();
        let changed = bonus_invariance_check(&mdp, 0.95, |_, a, _| if a == 0 { 3.0 } else { 0.0 }).unwrap();
        assert!(!changed);
    }
}
