//! Recurrent return decomposition used as potential-based reward shaping for
//! Gaussian-process SARSA dialogue policies.
//!
//! The crate is organised the way the experiment flows:
//!
//! - [`env`]: slot-filling ontology, agenda-style simulated user, semantic
//!   error channel, environmental reward and objective success.
//! - [`belief`]: a confidence-weighted Bayesian tracker over goal, method and
//!   discourse-act variables.
//! - [`features`]: per-turn feature vectors for the recurrent models, and the
//!   compact summary vector the policy kernel operates on.
//! - [`rnn`]: basic/LSTM/GRU return decomposers trained so that their per-turn
//!   outputs sum to the dialogue return.
//! - [`shaping`]: potential-based shaping rewards and small-MDP oracles.
//! - [`gpsarsa`]: sparse online GP-SARSA with posterior-sampling exploration.
//! - [`harness`]: corpus generation, RNN evaluation, policy learning curves
//!   and CSV reporting.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod belief;
pub mod env;
pub mod error;
pub mod features;
pub mod gpsarsa;
pub mod harness;
pub mod mdp;
pub mod rnn;
pub mod shaping;
pub mod tensor_io;

pub use error::{Error, Result};
