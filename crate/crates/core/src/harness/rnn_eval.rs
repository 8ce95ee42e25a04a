use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rnn::{rmse, RnnModel, Sample};
use crate::tensor_io::TensorFile;

/// Meta key under which the training-set mean return is stored next to a
/// saved model; it is the constant baseline's prediction.
pub const TRAIN_MEAN_KEY: &str = "train_mean_return";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnnEvalRow {
    pub corpus: String,
    pub n: usize,
    pub mean_return: f64,
    pub rmse: f64,
    pub baseline_rmse: f64,
    /// `rmse / baseline_rmse`.
    pub relative: f64,
}

pub fn mean_return(samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(samples.iter().map(|s| s.target).sum::<f64>() / samples.len() as f64)
}

/// RMSE of predicting `constant` for every dialogue.
pub fn constant_rmse(samples: &[Sample], constant: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok((samples.iter().map(|s| (s.target - constant).powi(2)).sum::<f64>() / samples.len() as f64).sqrt())
}

fn check_schema(model: &RnnModel, samples: &[Sample]) -> Result<()> {
    for s in samples {
        if s.features.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(f) = s.features.iter().find(|f| f.len() != model.input_dim) {
            return Err(Error::DimensionMismatch { expected: model.input_dim, actual: f.len(), context: "corpus features vs model input" });
        }
    }
    Ok(())
}

/// Scores `model` and the constant baseline on each named corpus.
pub fn run_rnn_eval(model: &RnnModel, baseline: f64, corpora: &[(String, Vec<Sample>)]) -> Result<Vec<RnnEvalRow>> {
    corpora
        .iter()
        .map(|(name, samples)| {
            check_schema(model, samples)?;
            let rmse = rmse(model, samples)?;
            let baseline_rmse = constant_rmse(samples, baseline)?;
            Ok(RnnEvalRow {
                corpus: name.clone(),
                n: samples.len(),
                mean_return: mean_return(samples)?,
                rmse,
                baseline_rmse,
                relative: rmse / baseline_rmse,
            })
        })
        .collect()
}

pub fn write_eval_csv<W: Write>(out: W, rows: &[RnnEvalRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_model(path: impl AsRef<Path>, model: &RnnModel, train_mean: f64) -> Result<()> {
    model.to_tensor_file().with_meta(TRAIN_MEAN_KEY, train_mean).save(path)
}

/// Loads a model and, when present, its training-set mean return.
pub fn load_model(path: impl AsRef<Path>) -> Result<(RnnModel, Option<f64>)> {
    let file = TensorFile::load(path)?;
    let mean = file.meta_f64(TRAIN_MEAN_KEY).ok();
    Ok((RnnModel::from_tensor_file(&file)?, mean))
}
