use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::policy::behavior_action;
use crate::env::record::EpisodeRecord;
use crate::env::{DialogueEnv, EnvConfig, Episode, Ontology};
use crate::error::{Error, Result};
use crate::rnn::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub n: usize,
    /// One SER gives a single-condition corpus; several split `n` evenly.
    pub sers: Vec<f64>,
    /// Equal success and failure counts within every SER block.
    pub balanced: bool,
    pub seed: u64,
    /// Probability that the behaviour policy takes the handcrafted action.
    pub handcrafted_prob: f64,
    /// Attempts allowed per requested dialogue before balancing gives up.
    pub attempts_per_dialogue: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n: 1000,
            sers: vec![0.15],
            balanced: true,
            seed: 0,
            handcrafted_prob: 0.7,
            attempts_per_dialogue: 50,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.sers.is_empty() {
            return Err(Error::Config("corpus needs at least one dialogue and one SER".into()));
        }
        if let Some(s) = self.sers.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::OutOfRange(format!("ser {s}")));
        }
        if !(0.0..=1.0).contains(&self.handcrafted_prob) {
            return Err(Error::OutOfRange(format!("handcrafted probability {}", self.handcrafted_prob)));
        }
        Ok(())
    }
}

const DIALOGUE_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;
const BATCH: usize = 64;

/// Runs one behaviour-policy dialogue.
pub fn behavior_episode(env: &mut DialogueEnv, seed: u64, policy_seed: u64, p_handcrafted: f64) -> Result<Episode> {
    env.reset(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
    while !env.is_done() {
        let a = behavior_action(env, p_handcrafted, &mut rng);
        env.step(a)?;
    }
    env.episode()
}

fn block(ontology: &Ontology, cfg: &CorpusConfig, block_index: usize, ser: f64, n: usize) -> Result<Vec<Episode>> {
    let base = derive_seed(cfg.seed, block_index as u64, 0);
    let attempt = |i: usize| -> Result<Episode> {
        let mut env = DialogueEnv::new(ontology, EnvConfig { ser, ..Default::default() }, 0)?;
        behavior_episode(
            &mut env,
            derive_seed(base, DIALOGUE_STREAM, i as u64),
            derive_seed(base, POLICY_STREAM, i as u64),
            cfg.handcrafted_prob,
        )
    };
    if !cfg.balanced {
        return (0..n).into_par_iter().map(attempt).collect();
    }
    let want_success = n / 2;
    let want_failure = n - want_success;
    let (mut successes, mut failures) = (Vec::new(), Vec::new());
    let cap = n.saturating_mul(cfg.attempts_per_dialogue);
    let mut next = 0;
    while successes.len() < want_success || failures.len() < want_failure {
        if next >= cap {
            return Err(Error::BalanceUnreachable { successes: successes.len(), failures: failures.len(), attempts: next });
        }
        let end = (next + BATCH).min(cap);
        let batch: Vec<Episode> = (next..end).into_par_iter().map(attempt).collect::<Result<_>>()?;
        for ep in batch {
            let bucket = if ep.success { (&mut successes, want_success) } else { (&mut failures, want_failure) };
            if bucket.0.len() < bucket.1 {
                bucket.0.push(ep);
            }
        }
        next = end;
    }
    // Interleave so that any prefix is roughly balanced too.
    let mut out = Vec::with_capacity(n);
    let mut s = successes.into_iter();
    let mut f = failures.into_iter();
    loop {
        match (s.next(), f.next()) {
            (None, None) => break,
            (a, b) => out.extend(a.into_iter().chain(b)),
        }
    }
    Ok(out)
}

/// Generates a corpus with the behaviour policy.
pub fn gen_corpus(ontology: &Ontology, cfg: &CorpusConfig) -> Result<Vec<EpisodeRecord>> {
    cfg.validate()?;
    ontology.validate()?;
    let k = cfg.sers.len();
    let mut records = Vec::with_capacity(cfg.n);
    for (b, &ser) in cfg.sers.iter().enumerate() {
        let n = cfg.n / k + usize::from(b < cfg.n % k);
        for ep in block(ontology, cfg, b, ser, n)? {
            let id = records.len() as u64;
            records.push(EpisodeRecord::from_episode(id, &ep, ontology));
        }
    }
    Ok(records)
}

/// Replays every record into a supervised RNN sample.
pub fn records_to_samples(ontology: &Ontology, records: &[EpisodeRecord]) -> Result<Vec<Sample>> {
    records
        .par_iter()
        .map(|r| Ok(Sample { features: r.replay_features(ontology)?, target: r.return_label }))
        .collect()
}
