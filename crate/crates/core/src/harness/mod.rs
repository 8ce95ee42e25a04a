//! Experiment orchestration: corpora, return-model training and evaluation,
//! policy learning with and without shaping, and CSV reports.

pub mod config;
pub mod corpus;
pub mod policy;
pub mod policy_train;
pub mod report;
pub mod rnn_eval;
pub mod stats;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{ExperimentConfig, DIALOGUE_KERNEL_SCALE};
pub use corpus::{gen_corpus, records_to_samples, CorpusConfig};
pub use policy::{behavior_action, handcrafted_action};
pub use policy_train::{train_policy, LearningCurve, PolicyConfig, PolicyRun, Potential};
pub use report::{report, ReportConfig};
pub use rnn_eval::{run_rnn_eval, RnnEvalRow};

/// Independent 64-bit seed for item `index` of stream `stream`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}
