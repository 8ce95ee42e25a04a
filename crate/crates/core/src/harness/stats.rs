use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for fewer than two
/// values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// `sd / √n`.
pub fn standard_error(xs: &[f64]) -> f64 {
    sample_sd(xs) / (xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub mean_diff: f64,
    pub t: f64,
    pub df: usize,
    /// One-sided p-value for `treatment > control`.
    pub p_value: f64,
}

/// Paired one-sided t-test that `treatment` exceeds `control`.
pub fn paired_t_greater(treatment: &[f64], control: &[f64]) -> Result<PairedTest> {
    if treatment.len() != control.len() {
        return Err(Error::DimensionMismatch { expected: control.len(), actual: treatment.len(), context: "paired samples" });
    }
    if treatment.len() < 2 {
        return Err(Error::Config("paired test needs at least two pairs".into()));
    }
    let diffs: Vec<f64> = treatment.iter().zip(control).map(|(a, b)| a - b).collect();
    let n = diffs.len();
    let d = mean(&diffs);
    let se = standard_error(&diffs);
    let df = n - 1;
    let (t, p_value) = if se == 0.0 {
        // Identical differences: certain in the sign of the mean.
        let t = if d > 0.0 { f64::INFINITY } else if d < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        (t, if d > 0.0 { 0.0 } else if d < 0.0 { 1.0 } else { 0.5 })
    } else {
        let t = d / se;
        let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Config(e.to_string()))?;
        (t, 1.0 - dist.cdf(t))
    };
    Ok(PairedTest { mean_diff: d, t, df, p_value })
}

/// Trailing moving average; the first `window − 1` entries average what is
/// available so far.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}
