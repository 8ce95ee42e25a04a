use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::policy_train::{write_rows, CurveRow, EvalPoint, LearningCurve, PolicyRun, TrainingDialogue};
use super::stats::{mean, moving_average, paired_t_greater, standard_error};
use crate::error::{Error, Result};
use crate::shaping::PotentialSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Moving-average window over training dialogues.
    pub window: usize,
    pub baseline: PotentialSource,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { window: 100, baseline: PotentialSource::None }
    }
}

impl ReportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("smoothing window must be at least 1".into()));
        }
        Ok(())
    }
}

const SOURCES: [PotentialSource; 3] = [PotentialSource::None, PotentialSource::Rnn, PotentialSource::OracleHeuristic];

pub fn evals_file(dir: &Path, source: PotentialSource) -> PathBuf {
    dir.join(format!("evals_{}.csv", source.name()))
}

pub fn training_file(dir: &Path, source: PotentialSource) -> PathBuf {
    dir.join(format!("training_{}.csv", source.name()))
}

pub fn curve_file(dir: &Path, source: PotentialSource) -> PathBuf {
    dir.join(format!("curve_{}.csv", source.name()))
}

/// Writes the curve, per-seed evaluations and per-dialogue training log.
pub fn write_policy_run(dir: &Path, run: &PolicyRun) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let source = run.curve.source;
    run.curve.write_csv(std::fs::File::create(curve_file(dir, source))?)?;
    write_rows(std::fs::File::create(evals_file(dir, source))?, &run.evals())?;
    write_rows(std::fs::File::create(training_file(dir, source))?, &run.training())?;
    Ok(())
}

/// One shaping source's logged results.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRuns {
    pub source: PotentialSource,
    pub evals: Vec<EvalPoint>,
    pub training: Vec<TrainingDialogue>,
}

impl SourceRuns {
    pub fn from_policy_run(run: &PolicyRun) -> Self {
        SourceRuns { source: run.curve.source, evals: run.evals(), training: run.training() }
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    csv::Reader::from_path(path)?.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Every source with an evaluation file in `dir`, in a fixed order.
pub fn load_runs(dir: &Path) -> Result<Vec<SourceRuns>> {
    let mut out = Vec::new();
    for source in SOURCES {
        let evals_path = evals_file(dir, source);
        if !evals_path.exists() {
            continue;
        }
        let training_path = training_file(dir, source);
        let training = if training_path.exists() { read_rows(&training_path)? } else { Vec::new() };
        out.push(SourceRuns { source, evals: read_rows(&evals_path)?, training });
    }
    if out.is_empty() {
        return Err(Error::NoRuns(dir.to_path_buf()));
    }
    Ok(out)
}

/// Per-seed area under the evaluation curve, as the mean reward over
/// checkpoints (the area divided by the budget).
pub fn auc_by_seed(evals: &[EvalPoint]) -> BTreeMap<u64, f64> {
    let mut by_seed: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for e in evals {
        by_seed.entry(e.seed).or_default().push(e.mean_reward);
    }
    by_seed.into_iter().map(|(s, v)| (s, mean(&v))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub source: String,
    pub n_seeds: usize,
    pub auc_mean: f64,
    pub auc_se: f64,
    pub final_reward: f64,
    pub final_success: f64,
    /// Mean paired AUC difference against the baseline source.
    pub auc_diff: Option<f64>,
    pub t: Option<f64>,
    /// One-sided paired p-value for "this source beats the baseline".
    pub p_value: Option<f64>,
}

pub fn summarize(runs: &[SourceRuns], baseline: PotentialSource) -> Result<Vec<SummaryRow>> {
    let base = runs.iter().find(|r| r.source == baseline).map(|r| auc_by_seed(&r.evals));
    runs.iter()
        .map(|r| {
            let auc = auc_by_seed(&r.evals);
            let values: Vec<f64> = auc.values().copied().collect();
            let curve = LearningCurve::from_evals(r.source, &r.evals)?;
            let last = curve.rows.last().ok_or(Error::NoRuns(PathBuf::new()))?;
            let test = match &base {
                Some(b) if r.source != baseline => {
                    if b.keys().ne(auc.keys()) {
                        return Err(Error::Config(format!("{} and baseline were run on different seeds", r.source.name())));
                    }
                    Some(paired_t_greater(&values, &b.values().copied().collect::<Vec<_>>())?)
                }
                _ => None,
            };
            Ok(SummaryRow {
                source: r.source.name().to_string(),
                n_seeds: values.len(),
                auc_mean: mean(&values),
                auc_se: standard_error(&values),
                final_reward: last.mean_reward,
                final_success: last.mean_success,
                auc_diff: test.map(|t| t.mean_diff),
                t: test.map(|t| t.t),
                p_value: test.map(|t| t.p_value),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedRow {
    pub dialogue: usize,
    /// Environmental return averaged over seeds.
    pub mean_return: f64,
    pub smoothed_return: f64,
}

/// Seed-averaged training returns with a trailing moving average.
pub fn smoothed_training(training: &[TrainingDialogue], window: usize) -> Vec<SmoothedRow> {
    let mut by_dialogue: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for t in training {
        by_dialogue.entry(t.dialogue).or_default().push(t.env_return);
    }
    let means: Vec<f64> = by_dialogue.values().map(|v| mean(v)).collect();
    let smooth = moving_average(&means, window);
    by_dialogue
        .keys()
        .zip(means.iter().zip(smooth))
        .map(|(&dialogue, (&mean_return, smoothed_return))| SmoothedRow { dialogue, mean_return, smoothed_return })
        .collect()
}

/// Tables produced by [`report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTables {
    pub curves: Vec<(PotentialSource, Vec<CurveRow>)>,
    pub smoothed: Vec<(PotentialSource, Vec<SmoothedRow>)>,
    pub summary: Vec<SummaryRow>,
}

pub fn build_report(runs: &[SourceRuns], cfg: &ReportConfig) -> Result<ReportTables> {
    cfg.validate()?;
    let curves = runs
        .iter()
        .map(|r| Ok((r.source, LearningCurve::from_evals(r.source, &r.evals)?.rows)))
        .collect::<Result<_>>()?;
    let smoothed = runs.iter().map(|r| (r.source, smoothed_training(&r.training, cfg.window))).collect();
    Ok(ReportTables { curves, smoothed, summary: summarize(runs, cfg.baseline)? })
}

#[derive(Serialize)]
struct TaggedCurve<'a> {
    source: &'a str,
    dialogues: usize,
    mean_reward: f64,
    reward_se: f64,
    mean_success: f64,
    success_se: f64,
    n_seeds: usize,
}

#[derive(Serialize)]
struct TaggedSmoothed<'a> {
    source: &'a str,
    dialogue: usize,
    mean_return: f64,
    smoothed_return: f64,
}

fn write_tagged<T, R: Serialize>(path: &Path, groups: &[(PotentialSource, Vec<T>)], tag: impl Fn(&'static str, &T) -> R) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (source, rows) in groups {
        for row in rows {
            w.serialize(tag(source.name(), row))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the runs in `run_dir` and writes `report_curves.csv`,
/// `report_smoothed.csv` and `report_summary.csv` to `out_dir`.
pub fn report(run_dir: &Path, out_dir: &Path, cfg: &ReportConfig) -> Result<ReportTables> {
    let tables = build_report(&load_runs(run_dir)?, cfg)?;
    std::fs::create_dir_all(out_dir)?;
    write_tagged(&out_dir.join("report_curves.csv"), &tables.curves, |source, r| TaggedCurve {
        source,
        dialogues: r.dialogues,
        mean_reward: r.mean_reward,
        reward_se: r.reward_se,
        mean_success: r.mean_success,
        success_se: r.success_se,
        n_seeds: r.n_seeds,
    })?;
    write_tagged(&out_dir.join("report_smoothed.csv"), &tables.smoothed, |source, r| TaggedSmoothed {
        source,
        dialogue: r.dialogue,
        mean_return: r.mean_return,
        smoothed_return: r.smoothed_return,
    })?;
    write_rows(std::fs::File::create(out_dir.join("report_summary.csv"))?, &tables.summary)?;
    Ok(tables)
}
