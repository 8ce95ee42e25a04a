use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use dialogue_shaping::env::record::{load_corpus, save_corpus};
use dialogue_shaping::features::FeatureLayout;
use dialogue_shaping::harness::policy_train::{train_policy, write_rows, Potential};
use dialogue_shaping::harness::report::{report, write_policy_run};
use dialogue_shaping::harness::rnn_eval::{self, load_model, run_rnn_eval, save_model, write_eval_csv};
use dialogue_shaping::harness::{gen_corpus, records_to_samples, ExperimentConfig};
use dialogue_shaping::rnn::{train, CellKind, Sample};
use dialogue_shaping::shaping::PotentialSource;
use dialogue_shaping::{Error, Result};

/// Corpus generation, return-model training and evaluation, shaped policy
/// learning and reporting. Every table written is a CSV with a header row.
#[derive(Parser)]
#[command(name = "shapebench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file whose values override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ontology JSON (built-in desk ontology when omitted).
    #[arg(long, global = true)]
    ontology: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate dialogues with the behaviour policy and write a corpus CSV.
    GenCorpus {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// One SER, or a comma-separated list for a mixed corpus.
        #[arg(long, value_delimiter = ',')]
        ser: Option<Vec<f64>>,
        #[arg(long)]
        balanced: Option<bool>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a return decomposer; writes model.json and history.csv.
    TrainRnn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        cell: Option<CellKind>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// RMSE of a model and of the constant-mean baseline on test corpora.
    EvalRnn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Test corpora, named by file stem in the output.
        #[arg(long, required = true, num_args = 1..)]
        test: Vec<PathBuf>,
        /// Corpus whose mean return is the baseline, when the model file
        /// does not record one.
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Train GP-SARSA policies over several seeds with a shaping source.
    TrainPolicy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        shaping: Option<PotentialSource>,
        /// Return model, required for `--shaping rnn`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        /// `N` for seeds 0..N, `a..b`, or a comma-separated list.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        eval_every: Option<usize>,
        #[arg(long)]
        eval_n: Option<usize>,
        #[arg(long)]
        ser: Option<f64>,
    },
    /// Learning curves, smoothed training returns and paired tests.
    Report {
        #[command(flatten)]
        common: Common,
        /// Directory holding train-policy outputs.
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        window: Option<usize>,
    },
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    if text.contains(',') {
        return text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect();
    }
    let n: u64 = text.trim().parse().map_err(|_| bad())?;
    Ok((0..n).collect())
}

fn resolve(common: &Common, apply: impl FnOnce(&mut ExperimentConfig) -> Result<()>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(o) = &common.ontology {
        cfg.ontology = Some(o.clone());
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    apply(&mut cfg)?;
    if let Some(path) = &common.config {
        cfg = cfg.overlay_file(path)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn samples(cfg: &ExperimentConfig, path: &Path) -> Result<Vec<Sample>> {
    records_to_samples(&cfg.load_ontology()?, &load_corpus(path)?)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus { common, n, ser, balanced, seed } => {
            let cfg = resolve(&common, |c| {
                c.out = common.out.clone().unwrap_or_else(|| PathBuf::from("corpus.csv"));
                if let Some(v) = n {
                    c.corpus.n = v;
                }
                if let Some(v) = ser.clone() {
                    c.corpus.sers = v;
                }
                if let Some(v) = balanced {
                    c.corpus.balanced = v;
                }
                if let Some(v) = seed {
                    c.corpus.seed = v;
                }
                Ok(())
            })?;
            let ontology = cfg.load_ontology()?;
            let records = gen_corpus(&ontology, &cfg.corpus)?;
            ensure_parent(&cfg.out)?;
            save_corpus(&cfg.out, &records)?;
            let schema = cfg.out.with_file_name("feature_schema.csv");
            FeatureLayout::new(&ontology).write_csv(schema)?;
            let wins = records.iter().filter(|r| r.success).count();
            log::info!("wrote {} dialogues ({wins} successes) to {}", records.len(), cfg.out.display());
        }
        Command::TrainRnn { common, train: train_path, valid, cell, hidden, lr, epochs, seed } => {
            let cfg = resolve(&common, |c| {
                if let Some(v) = cell {
                    c.rnn.cell = v;
                }
                if let Some(v) = hidden {
                    c.rnn.hidden_dim = v;
                }
                if let Some(v) = lr {
                    c.rnn.lr = v;
                }
                if let Some(v) = epochs {
                    c.rnn.epochs = v;
                }
                if let Some(v) = seed {
                    c.rnn.seed = v;
                }
                Ok(())
            })?;
            let train_set = samples(&cfg, &train_path)?;
            let valid_set = samples(&cfg, &valid)?;
            let (model, history) = train(&train_set, &valid_set, &cfg.rnn)?;
            std::fs::create_dir_all(&cfg.out)?;
            save_model(cfg.out.join("model.json"), &model, rnn_eval::mean_return(&train_set)?)?;
            write_rows(std::fs::File::create(cfg.out.join("history.csv"))?, &history.epochs)?;
            log::info!("best validation rmse {:.4} at epoch {}", history.best_valid_rmse, history.best_epoch);
        }
        Command::EvalRnn { common, model, test, train: train_path } => {
            let cfg = resolve(&common, |c| {
                c.out = common.out.clone().unwrap_or_else(|| PathBuf::from("rnn_eval.csv"));
                Ok(())
            })?;
            let (model, stored_mean) = load_model(&model)?;
            let baseline = match (stored_mean, &train_path) {
                (_, Some(p)) => rnn_eval::mean_return(&samples(&cfg, p)?)?,
                (Some(m), None) => m,
                (None, None) => return Err(Error::Config("model has no stored mean return; pass --train".into())),
            };
            let corpora = test
                .iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                    Ok((name, samples(&cfg, p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = run_rnn_eval(&model, baseline, &corpora)?;
            ensure_parent(&cfg.out)?;
            write_eval_csv(std::fs::File::create(&cfg.out)?, &rows)?;
        }
        Command::TrainPolicy { common, shaping, model, gamma, seeds, budget, eval_every, eval_n, ser } => {
            let cfg = resolve(&common, |c| {
                if let Some(v) = shaping {
                    c.shaping.source = v;
                }
                if let Some(v) = gamma {
                    c.shaping.gamma = v;
                }
                if let Some(s) = &seeds {
                    c.policy.seeds = parse_seeds(s)?;
                }
                if let Some(v) = budget {
                    c.policy.budget = v;
                }
                if let Some(v) = eval_every {
                    c.policy.eval_every = v;
                }
                if let Some(v) = eval_n {
                    c.policy.eval_n = v;
                }
                if let Some(v) = ser {
                    c.policy.ser = v;
                }
                Ok(())
            })?;
            let ontology = cfg.load_ontology()?;
            let rnn = match (cfg.shaping.source, &model) {
                (PotentialSource::Rnn, Some(p)) => Some(load_model(p)?.0),
                (PotentialSource::Rnn, None) => return Err(Error::Config("--shaping rnn needs --model".into())),
                _ => None,
            };
            let potential = match (cfg.shaping.source, &rnn) {
                (PotentialSource::Rnn, Some(m)) => Potential::Rnn(m),
                (PotentialSource::OracleHeuristic, _) => Potential::Oracle,
                _ => Potential::None,
            };
            let run = train_policy(&ontology, &cfg.policy, &cfg.gp, &cfg.shaping, potential)?;
            write_policy_run(&cfg.out, &run)?;
        }
        Command::Report { common, runs, window } => {
            let cfg = resolve(&common, |c| {
                c.out = common.out.clone().unwrap_or_else(|| runs.clone());
                if let Some(v) = window {
                    c.report.window = v;
                }
                Ok(())
            })?;
            let tables = report(&runs, &cfg.out, &cfg.report)?;
            for row in &tables.summary {
                log::info!("{}: auc {:.3} ± {:.3}, p {:?}", row.source, row.auc_mean, row.auc_se, row.p_value);
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
