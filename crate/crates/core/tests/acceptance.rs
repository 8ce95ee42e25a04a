//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Criteria run in order because the return model trained
//! for criterion 5 is the potential used in criterion 6.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dialogue_shaping::env::{DialogueEnv, EnvConfig, Ontology};
use dialogue_shaping::gpsarsa::{learn_tabular, matches_optimal, KernelConfig, TabularRun};
use dialogue_shaping::harness::report::{summarize, SourceRuns};
use dialogue_shaping::harness::rnn_eval::{constant_rmse, mean_return};
use dialogue_shaping::harness::{gen_corpus, records_to_samples, train_policy, CorpusConfig, PolicyConfig, Potential, DIALOGUE_KERNEL_SCALE};
use dialogue_shaping::harness::corpus::behavior_episode;
use dialogue_shaping::mdp::{value_iteration, TabularMdp};
use dialogue_shaping::rnn::{rmse, train, CellKind, RnnModel, Sample, TrainConfig};
use dialogue_shaping::shaping::{policy_invariance_check, shaped_stream_from, PotentialSource, ShapingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2} s, limit {limit_s} s"))
}

fn telescoping() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let gammas = [0.9, 0.99, 1.0];
    for &gamma in &gammas {
        let cfg = ShapingConfig { gamma, terminal_potential_zero: false, ..Default::default() };
        for _ in 0..1000 {
            let len = rng.random_range(1..=30);
            let phi_0 = rng.random_range(-30.0..30.0);
            let phis: Vec<f64> = (0..len).map(|_| rng.random_range(-30.0..30.0)).collect();
            let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..20.0)).collect();
            let stream = shaped_stream_from(phi_0, &phis, &rewards, &cfg).expect("finite inputs");
            let lhs: f64 = stream.iter().enumerate().map(|(t, s)| gamma.powi(t as i32) * s.shaping_reward).sum();
            let rhs = gamma.powi(len as i32) * phis[len - 1] - phi_0;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    let (fast, time) = within(start.elapsed(), 1.0);
    verdict(worst < 1e-9 && fast, format!("max |sum γ^t F_t - (γ^T φ_T - φ_0)| = {worst:.2e} over 3000 episodes, γ in {gammas:?}; {time}"))
}

fn invariance() -> Verdict {
    let start = Instant::now();
    let mdp = TabularMdp::chain();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut kept = 0;
    for _ in 0..100 {
        let phi: Vec<f64> = (0..mdp.n_states).map(|s| if mdp.terminal[s] { 0.0 } else { rng.random_range(-50.0..50.0) }).collect();
        if policy_invariance_check(&mdp, &phi, 0.95).expect("value iteration converges") {
            kept += 1;
        }
    }
    let (fast, time) = within(start.elapsed(), 5.0);
    verdict(kept == 100 && fast, format!("{kept}/100 random potentials keep every greedy set on the 5-state chain, γ 0.95; {time}"))
}

fn gradients() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut configs = 0;
    for cell in CellKind::ALL {
        for _ in 0..8 {
            let (input, hidden, len) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
            let model = RnnModel::new(cell, input, hidden, 0.5, false, &mut rng).expect("positive dims");
            let seq: Vec<Vec<f64>> = (0..len).map(|_| (0..input).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let target = rng.random_range(-30.0..20.0);
            let (_, grad) = model.loss_and_gradient(&seq, target).expect("finite");
            for i in 0..model.params.len() {
                let loss_at = |d: f64| {
                    let mut m = model.clone();
                    m.params.set(i, model.params.get(i) + d);
                    m.dialogue_loss(&seq, target).expect("finite")
                };
                let fd = (loss_at(eps) - loss_at(-eps)) / (2.0 * eps);
                let g = grad.get(i);
                worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-6));
            }
            configs += 1;
        }
    }
    let (fast, time) = within(start.elapsed(), 30.0);
    verdict(worst < 1e-4 && fast, format!("{configs} configurations over 3 cells, max relative error {worst:.2e}; {time}"))
}

fn overfit(ontology: &Ontology) -> Verdict {
    let start = Instant::now();
    let mut env = DialogueEnv::new(ontology, EnvConfig::default(), 0).expect("valid env");
    let episode = behavior_episode(&mut env, 11, 12, 0.7).expect("episode");
    let sample = Sample { features: episode.features().into_iter().map(|f| f.0).collect(), target: episode.return_label };
    let mut parts = Vec::new();
    let mut pass = true;
    for cell in CellKind::ALL {
        let cfg = TrainConfig { cell, hidden_dim: 8, epochs: 500, seed: 4, ..Default::default() };
        let (model, history) = train(std::slice::from_ref(&sample), std::slice::from_ref(&sample), &cfg).expect("training");
        let err = (model.predict_return(&sample.features).expect("forward") - sample.target).abs();
        pass &= err < 0.01 && history.steps <= 500;
        parts.push(format!("{cell} {err:.1e} in {} steps", history.steps));
    }
    let (fast, time) = within(start.elapsed(), 10.0);
    verdict(
        pass && fast,
        format!("|sum r_t - R| on a {}-turn dialogue, R = {}: {}; {time}", sample.features.len(), sample.target, parts.join(", ")),
    )
}

fn corpus(ontology: &Ontology, n: usize, sers: Vec<f64>, balanced: bool, seed: u64) -> Vec<Sample> {
    let cfg = CorpusConfig { n, sers, balanced, seed, ..Default::default() };
    records_to_samples(ontology, &gen_corpus(ontology, &cfg).expect("corpus")).expect("replay")
}

fn return_prediction(ontology: &Ontology) -> (Verdict, RnnModel) {
    let start = Instant::now();
    let train_set = corpus(ontology, 1000, vec![0.15], true, 1);
    let valid_set = corpus(ontology, 1000, vec![0.15], true, 2);
    let balanced_test = corpus(ontology, 1000, vec![0.15], true, 3);
    let mixed_test = corpus(ontology, 1000, vec![0.0, 0.15, 0.30, 0.45], false, 4);
    let cfg = TrainConfig { cell: CellKind::Gru, hidden_dim: 100, lr: 0.01, epochs: 60, stop_after: Some(10), ..Default::default() };
    let (model, _) = train(&train_set, &valid_set, &cfg).expect("training");
    let baseline = constant_rmse(&balanced_test, mean_return(&train_set).expect("non-empty")).expect("non-empty");
    let a = rmse(&model, &balanced_test).expect("forward");
    let b = rmse(&model, &mixed_test).expect("forward");
    let (fast, time) = within(start.elapsed(), 600.0);
    let pass = a <= 0.7 * baseline && b < 1.5 * a && fast;
    let detail = format!(
        "balanced 15% test rmse {a:.3} vs baseline {baseline:.3} (ratio {:.3}, need <= 0.7); mixed-SER test rmse {b:.3} (ratio to balanced {:.3}, need < 1.5); {time}",
        a / baseline,
        b / a
    );
    (verdict(pass, detail), model)
}

fn learning_speed(ontology: &Ontology, model: &RnnModel) -> Verdict {
    let start = Instant::now();
    let cfg = PolicyConfig { seeds: (0..10).collect(), budget: 1000, eval_every: 50, eval_n: 1000, ser: 0.15, ..Default::default() };
    let kernel = KernelConfig { kernel_scale: DIALOGUE_KERNEL_SCALE, ..Default::default() };
    let mut runs = Vec::new();
    let mut shape_ok = true;
    for (source, potential) in [
        (PotentialSource::None, Potential::None),
        (PotentialSource::Rnn, Potential::Rnn(model)),
        (PotentialSource::OracleHeuristic, Potential::Oracle),
    ] {
        let shaping = ShapingConfig { source, ..Default::default() };
        let run = train_policy(ontology, &cfg, &kernel, &shaping, potential).expect("policy run");
        shape_ok &= run.curve.rows.len() == 20 && run.curve.rows.iter().all(|r| r.n_seeds == 10);
        runs.push(SourceRuns::from_policy_run(&run));
    }
    let summary = summarize(&runs, PotentialSource::None).expect("summary");
    let mut pass = shape_ok;
    let mut parts = Vec::new();
    for row in &summary {
        if let (Some(diff), Some(p)) = (row.auc_diff, row.p_value) {
            pass &= diff > 0.0 && p < 0.05;
            parts.push(format!("{} auc {:.2} (diff {diff:+.2}, p {p:.3})", row.source, row.auc_mean));
        } else {
            parts.push(format!("{} auc {:.2}", row.source, row.auc_mean));
        }
    }
    let (fast, time) = within(start.elapsed(), 7200.0);
    verdict(pass && fast, format!("10 seeds, 1000 dialogues, 20 checkpoints x 1000 evaluations: {}; {time}", parts.join("; ")))
}

fn chain_convergence() -> Verdict {
    let start = Instant::now();
    let mdp = TabularMdp::chain();
    let optimal = value_iteration(&mdp, 0.95).expect("value iteration");
    let run = TabularRun { kernel: KernelConfig { gamma: 0.95, ..Default::default() }, episodes: 2000, max_steps: 200, feature_scale: 1.0 };
    let wins = (0..10u64)
        .filter(|&seed| matches_optimal(&mdp, &run, &learn_tabular(&mdp, &run, seed).expect("learning"), &optimal))
        .count();
    let (fast, time) = within(start.elapsed(), 60.0);
    verdict(wins >= 9 && fast, format!("optimal greedy policy after 2000 episodes on {wins}/10 seeds; {time}"))
}

fn shapebench(args: &[&str], dir: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_shapebench"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .status()
        .is_ok_and(|s| s.success())
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        if entry.extension().is_some_and(|e| e == "csv") {
            let rel = entry.strip_prefix(dir).expect("inside dir").display().to_string();
            out.push((rel, std::fs::read(&entry).expect("readable")));
        }
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).expect("readable dir") {
        let path = entry.expect("entry").path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

fn determinism() -> Verdict {
    let pipeline: [&[&str]; 7] = [
        &["gen-corpus", "--n", "80", "--ser", "0.15", "--seed", "1", "--out", "train.csv"],
        &["gen-corpus", "--n", "40", "--ser", "0.15", "--seed", "2", "--out", "valid.csv"],
        &["gen-corpus", "--n", "40", "--ser", "0,0.3", "--balanced", "false", "--seed", "3", "--out", "test.csv"],
        &["train-rnn", "--train", "train.csv", "--valid", "valid.csv", "--hidden", "8", "--epochs", "3", "--out", "rnn"],
        &["eval-rnn", "--model", "rnn/model.json", "--test", "test.csv", "--out", "eval.csv"],
        &["train-policy", "--shaping", "rnn", "--model", "rnn/model.json", "--seeds", "3", "--budget", "40", "--eval-every", "20", "--eval-n", "30", "--out", "runs"],
        &["report", "--runs", "runs", "--window", "10", "--out", "report"],
    ];
    let dirs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
    for dir in &dirs {
        for args in pipeline {
            if !shapebench(args, dir.path()) {
                return verdict(false, format!("`shapebench {}` failed", args.join(" ")));
            }
        }
    }
    let (a, b) = (csv_files(dirs[0].path()), csv_files(dirs[1].path()));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    let model_same = std::fs::read(dirs[0].path().join("rnn/model.json")).ok() == std::fs::read(dirs[1].path().join("rnn/model.json")).ok();
    verdict(
        a == b && model_same && a.len() >= 10,
        format!("two runs of all five commands gave {} byte-identical CSVs ({}) and identical model files: {}", a.len(), names.join(", "), a == b && model_same),
    )
}

fn main() {
    let ontology = Ontology::desk_default();
    let mut failures = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        if !v.pass {
            failures += 1;
        }
        println!("{} criterion {n} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    };
    report(1, "telescoping identity", telescoping());
    report(2, "policy invariance", invariance());
    report(3, "gradient correctness", gradients());
    report(4, "overfit sanity", overfit(&ontology));
    let (v, model) = return_prediction(&ontology);
    report(5, "return prediction", v);
    report(6, "learning speed", learning_speed(&ontology, &model));
    report(7, "gp-sarsa convergence", chain_convergence());
    report(8, "determinism", determinism());
    println!("{} of 8 criteria failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
