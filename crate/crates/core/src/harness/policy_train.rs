use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::policy::executable_actions;
use super::stats::{mean, standard_error};
use crate::env::{DialogueEnv, EnvConfig, Ontology};
use crate::error::{Error, Result};
use crate::gpsarsa::{GpSarsa, GpStats, GreedyPolicy, KernelConfig, SelectMode};
use crate::rnn::{RnnModel, RnnState};
use crate::shaping::{oracle_heuristic_potential, shape, PotentialSource, ShapingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub seeds: Vec<u64>,
    /// Training dialogues per seed. Evaluation dialogues are not counted.
    pub budget: usize,
    pub eval_every: usize,
    pub eval_n: usize,
    pub ser: f64,
    /// Seed of the fixed evaluation goal set shared by every checkpoint,
    /// seed and shaping source.
    pub eval_seed: u64,
    /// Restrict training and evaluation to [`executable_actions`].
    pub mask_actions: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { seeds: (0..10).collect(), budget: 1000, eval_every: 50, eval_n: 1000, ser: 0.15, eval_seed: 7, mask_actions: true }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.eval_every == 0 || self.eval_n == 0 || self.budget == 0 {
            return Err(Error::Config("budget, eval cadence and eval size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.ser) {
            return Err(Error::OutOfRange(format!("ser {}", self.ser)));
        }
        Ok(())
    }
}

/// Where shaping potentials come from during training.
#[derive(Debug, Clone, Copy)]
pub enum Potential<'m> {
    None,
    Rnn(&'m RnnModel),
    Oracle,
}

impl Potential<'_> {
    pub fn source(&self) -> PotentialSource {
        match self {
            Potential::None => PotentialSource::None,
            Potential::Rnn(_) => PotentialSource::Rnn,
            Potential::Oracle => PotentialSource::OracleHeuristic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub seed: u64,
    pub dialogues: usize,
    pub mean_reward: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingDialogue {
    pub seed: u64,
    pub dialogue: usize,
    pub env_return: f64,
    pub shaped_return: f64,
    pub success: u8,
    pub turns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub evals: Vec<EvalPoint>,
    pub training: Vec<TrainingDialogue>,
    pub dictionary_len: usize,
    pub stats: GpStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub dialogues: usize,
    pub mean_reward: f64,
    pub reward_se: f64,
    pub mean_success: f64,
    pub success_se: f64,
    pub n_seeds: usize,
}

/// Seed-averaged evaluation results, one row per checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub source: PotentialSource,
    pub rows: Vec<CurveRow>,
}

impl LearningCurve {
    pub fn from_runs(source: PotentialSource, runs: &[SeedRun]) -> Result<Self> {
        let evals: Vec<EvalPoint> = runs.iter().flat_map(|r| r.evals.iter().copied()).collect();
        Self::from_evals(source, &evals)
    }

    /// Aggregates per-seed checkpoints; every seed must share the same
    /// checkpoints.
    pub fn from_evals(source: PotentialSource, evals: &[EvalPoint]) -> Result<Self> {
        let mut by_seed: BTreeMap<u64, Vec<EvalPoint>> = BTreeMap::new();
        for e in evals {
            by_seed.entry(e.seed).or_default().push(*e);
        }
        let runs: Vec<Vec<EvalPoint>> = by_seed.into_values().collect();
        let first = runs.first().ok_or(Error::Config("no evaluations to aggregate".into()))?;
        let mut rows = Vec::with_capacity(first.len());
        for (k, point) in first.iter().enumerate() {
            let mut rewards = Vec::with_capacity(runs.len());
            let mut successes = Vec::with_capacity(runs.len());
            for run in &runs {
                let p = run
                    .get(k)
                    .filter(|p| p.dialogues == point.dialogues)
                    .ok_or(Error::Config("seed runs have different evaluation checkpoints".into()))?;
                rewards.push(p.mean_reward);
                successes.push(p.success_rate);
            }
            rows.push(CurveRow {
                dialogues: point.dialogues,
                mean_reward: mean(&rewards),
                reward_se: standard_error(&rewards),
                mean_success: mean(&successes),
                success_se: standard_error(&successes),
                n_seeds: runs.len(),
            });
        }
        if runs.iter().any(|r| r.len() != rows.len()) {
            return Err(Error::Config("seed runs have different evaluation checkpoints".into()));
        }
        Ok(LearningCurve { source, rows })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows)
    }
}

/// Serializes rows to CSV with a header.
pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub runs: Vec<SeedRun>,
    pub curve: LearningCurve,
}

impl PolicyRun {
    pub fn evals(&self) -> Vec<EvalPoint> {
        self.runs.iter().flat_map(|r| r.evals.iter().copied()).collect()
    }

    pub fn training(&self) -> Vec<TrainingDialogue> {
        self.runs.iter().flat_map(|r| r.training.iter().copied()).collect()
    }
}

const TRAIN_STREAM: u64 = 10;
const EXPLORE_STREAM: u64 = 11;
const EVAL_STREAM: u64 = 12;

/// Mean environmental reward and success rate of a frozen greedy policy on
/// the fixed evaluation goals. Shaping never enters here.
pub fn evaluate(ontology: &Ontology, policy: &GreedyPolicy, cfg: &PolicyConfig) -> Result<(f64, f64)> {
    let mut env = DialogueEnv::new(ontology, EnvConfig { ser: cfg.ser, ..Default::default() }, 0)?;
    let (mut reward, mut wins) = (0.0, 0usize);
    for i in 0..cfg.eval_n {
        env.reset(derive_seed(cfg.eval_seed, EVAL_STREAM, i as u64));
        while !env.is_done() {
            let mask = cfg.mask_actions.then(|| executable_actions(&env));
            let a = policy.act_allowed(&env.summary_features(), mask.as_deref());
            reward += env.step(a)?.reward;
        }
        wins += usize::from(env.episode()?.success);
    }
    Ok((reward / cfg.eval_n as f64, wins as f64 / cfg.eval_n as f64))
}

struct Shaper<'m> {
    potential: Potential<'m>,
    cfg: ShapingConfig,
    rnn_state: Option<RnnState>,
    phi: f64,
}

impl<'m> Shaper<'m> {
    fn new(potential: Potential<'m>, cfg: ShapingConfig) -> Self {
        Shaper { potential, cfg, rnn_state: None, phi: 0.0 }
    }

    fn reset(&mut self) {
        self.phi = 0.0;
        self.rnn_state = match self.potential {
            Potential::Rnn(m) => Some(m.initial_state()),
            _ => None,
        };
    }

    /// Shaping reward for the turn just taken in `env`.
    fn step(&mut self, env: &DialogueEnv, done: bool) -> Result<f64> {
        let phi = match self.potential {
            Potential::None => 0.0,
            Potential::Oracle => oracle_heuristic_potential(&env.goal_progress()?),
            Potential::Rnn(m) => {
                let turn = env.turns().last().ok_or(Error::EmptySequence)?;
                let state = self.rnn_state.as_ref().ok_or(Error::NoActiveEpisode)?;
                let (next, phi) = m.potential(state, turn.features.as_slice())?;
                self.rnn_state = Some(next);
                phi
            }
        };
        let f = shape(self.phi, phi, done, &self.cfg)?;
        self.phi = phi;
        Ok(f)
    }
}

fn explore(gp: &mut GpSarsa, env: &DialogueEnv, cfg: &PolicyConfig, rng: &mut ChaCha8Rng) -> Result<usize> {
    let mask = cfg.mask_actions.then(|| executable_actions(env));
    gp.select_allowed(&env.summary_features(), SelectMode::Explore, mask.as_deref(), rng)
}

/// Trains one fresh GP-SARSA policy and evaluates it every
/// `eval_every` dialogues.
pub fn run_seed(
    ontology: &Ontology,
    cfg: &PolicyConfig,
    kernel: &KernelConfig,
    shaping: &ShapingConfig,
    potential: Potential<'_>,
    seed: u64,
) -> Result<SeedRun> {
    let mut env = DialogueEnv::new(ontology, EnvConfig { ser: cfg.ser, ..Default::default() }, 0)?;
    if let Potential::Rnn(m) = potential {
        if m.input_dim != env.layout().dim {
            return Err(Error::DimensionMismatch { expected: env.layout().dim, actual: m.input_dim, context: "rnn input vs env features" });
        }
    }
    let kernel = KernelConfig { gamma: shaping.gamma, ..*kernel };
    let mut gp = GpSarsa::new(env.summary_features().len(), env.action_space().len(), kernel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, EXPLORE_STREAM, 0));
    let mut shaper = Shaper::new(potential, *shaping);
    let mut evals = Vec::with_capacity(cfg.budget / cfg.eval_every);
    let mut training = Vec::with_capacity(cfg.budget);

    for d in 0..cfg.budget {
        env.reset(derive_seed(seed, TRAIN_STREAM, d as u64));
        shaper.reset();
        let (mut env_return, mut shaped_return) = (0.0, 0.0);
        let mut x = env.summary_features();
        let mut a = explore(&mut gp, &env, cfg, &mut rng)?;
        loop {
            let out = env.step(a)?;
            let r = out.reward + shaper.step(&env, out.done)?;
            env_return += out.reward;
            shaped_return += r;
            if out.done {
                gp.observe(&x, a, r, None)?;
                gp.end_episode()?;
                break;
            }
            let x_next = env.summary_features();
            let a_next = explore(&mut gp, &env, cfg, &mut rng)?;
            gp.observe(&x, a, r, Some((&x_next, a_next)))?;
            x = x_next;
            a = a_next;
        }
        let ep = env.episode()?;
        training.push(TrainingDialogue {
            seed,
            dialogue: d + 1,
            env_return,
            shaped_return,
            success: u8::from(ep.success),
            turns: ep.len(),
        });
        if (d + 1) % cfg.eval_every == 0 {
            let (mean_reward, success_rate) = evaluate(ontology, &gp.greedy_policy(), cfg)?;
            log::info!("seed {seed} source {} after {}: reward {mean_reward:.2} success {success_rate:.3}", potential.source().name(), d + 1);
            evals.push(EvalPoint { seed, dialogues: d + 1, mean_reward, success_rate });
        }
    }
    Ok(SeedRun { seed, evals, training, dictionary_len: gp.dictionary_len(), stats: gp.stats })
}

/// Runs every seed in parallel and aggregates the learning curve.
pub fn train_policy(
    ontology: &Ontology,
    cfg: &PolicyConfig,
    kernel: &KernelConfig,
    shaping: &ShapingConfig,
    potential: Potential<'_>,
) -> Result<PolicyRun> {
    cfg.validate()?;
    shaping.validate()?;
    kernel.validate()?;
    if shaping.source != potential.source() {
        return Err(Error::Config(format!(
            "shaping source {} does not match the supplied potential {}",
            shaping.source.name(),
            potential.source().name()
        )));
    }
    let runs: Vec<SeedRun> =
        cfg.seeds.par_iter().map(|&s| run_seed(ontology, cfg, kernel, shaping, potential, s)).collect::<Result<_>>()?;
    let curve = LearningCurve::from_runs(potential.source(), &runs)?;
    Ok(PolicyRun { runs, curve })
}
