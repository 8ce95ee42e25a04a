//! Recurrent return estimator.
//!
//! A single-layer recurrent cell reads one feature vector per turn and a
//! linear head emits a per-turn reward estimate `r_t`. Only the dialogue
//! return `R` is supervised: the loss is `(R - Σ_t r_t)²`, so the model has
//! to decide on its own how to spread the return over turns. The per-turn
//! output doubles as the shaping potential.

mod cell;
mod train;

pub use cell::CellKind;
pub use train::{rmse, train, EpochRecord, Sample, TrainConfig, TrainHistory};

use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor_io::{Tensor, TensorFile};

use cell::StepCache;

/// Trainable parameters. Gate blocks are stacked row-wise in the order
/// given by [`CellKind::gate_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub w_in: Array2<f64>,
    pub w_rec: Array2<f64>,
    pub bias: Array1<f64>,
    pub w_out: Array1<f64>,
    pub b_out: f64,
}

impl Params {
    pub fn zeros(cell: CellKind, input_dim: usize, hidden_dim: usize) -> Self {
        let g = cell.gates() * hidden_dim;
        Params {
            w_in: Array2::zeros((g, input_dim)),
            w_rec: Array2::zeros((g, hidden_dim)),
            bias: Array1::zeros(g),
            w_out: Array1::zeros(hidden_dim),
            b_out: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.w_in.len() + self.w_rec.len() + self.bias.len() + self.w_out.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat view in a fixed order: w_in, w_rec, bias, w_out, b_out.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(self.w_in.iter());
        v.extend(self.w_rec.iter());
        v.extend(self.bias.iter());
        v.extend(self.w_out.iter());
        v.push(self.b_out);
        v
    }

    pub fn get(&self, mut i: usize) -> f64 {
        for block in [self.w_in.as_slice(), self.w_rec.as_slice(), self.bias.as_slice(), self.w_out.as_slice()] {
            let block = block.expect("standard layout");
            if i < block.len() {
                return block[i];
            }
            i -= block.len();
        }
        assert_eq!(i, 0, "parameter index out of range");
        self.b_out
    }

    pub fn set(&mut self, mut i: usize, value: f64) {
        for block in [self.w_in.as_slice_mut(), self.w_rec.as_slice_mut(), self.bias.as_slice_mut(), self.w_out.as_slice_mut()] {
            let block = block.expect("standard layout");
            if i < block.len() {
                block[i] = value;
                return;
            }
            i -= block.len();
        }
        assert_eq!(i, 0, "parameter index out of range");
        self.b_out = value;
    }

    pub fn norm(&self) -> f64 {
        self.sum_sq().sqrt()
    }

    fn sum_sq(&self) -> f64 {
        let sq = |a: f64, x: &f64| a + x * x;
        self.w_in.iter().fold(0.0, sq)
            + self.w_rec.iter().fold(0.0, sq)
            + self.bias.iter().fold(0.0, sq)
            + self.w_out.iter().fold(0.0, sq)
            + self.b_out * self.b_out
    }

    pub fn is_finite(&self) -> bool {
        self.sum_sq().is_finite()
    }

    pub fn scale(&mut self, k: f64) {
        self.w_in *= k;
        self.w_rec *= k;
        self.bias *= k;
        self.w_out *= k;
        self.b_out *= k;
    }

    /// `self += k · other`.
    pub fn add_scaled(&mut self, k: f64, other: &Params) {
        self.w_in.scaled_add(k, &other.w_in);
        self.w_rec.scaled_add(k, &other.w_rec);
        self.bias.scaled_add(k, &other.bias);
        self.w_out.scaled_add(k, &other.w_out);
        self.b_out += k * other.b_out;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnState {
    pub h: Array1<f64>,
    /// Memory cell; all zeros and unused outside LSTM.
    pub c: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    pub cell: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub params: Params,
}

impl RnnModel {
    /// Uniform `[-init_scale, init_scale]` weights, zero biases, LSTM forget
    /// bias 1, optionally orthogonal recurrent blocks.
    pub fn new<R: Rng + ?Sized>(
        cell: CellKind,
        input_dim: usize,
        hidden_dim: usize,
        init_scale: f64,
        orthogonal: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        let mut params = Params::zeros(cell, input_dim, hidden_dim);
        let mut uniform = |_: (usize, usize)| rng.random_range(-init_scale..=init_scale);
        params.w_in = Array2::from_shape_fn(params.w_in.dim(), &mut uniform);
        params.w_rec = Array2::from_shape_fn(params.w_rec.dim(), &mut uniform);
        params.w_out = Array1::from_shape_fn(hidden_dim, |i| uniform((i, 0)));
        if orthogonal {
            for g in 0..cell.gates() {
                let block = orthogonal_matrix(hidden_dim, rng);
                params.w_rec.slice_mut(s![g * hidden_dim..(g + 1) * hidden_dim, ..]).assign(&block);
            }
        }
        if let Some(f) = cell.forget_gate() {
            params.bias.slice_mut(s![f * hidden_dim..(f + 1) * hidden_dim]).fill(1.0);
        }
        Ok(RnnModel { cell, input_dim, hidden_dim, params })
    }

    pub fn initial_state(&self) -> RnnState {
        RnnState { h: Array1::zeros(self.hidden_dim), c: Array1::zeros(self.hidden_dim) }
    }

    fn check_input(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, actual: f.len(), context: "rnn input" });
        }
        Ok(())
    }

    fn head(&self, h: &Array1<f64>) -> f64 {
        self.params.w_out.dot(h) + self.params.b_out
    }

    fn step_cached(&self, state: &RnnState, f: &[f64]) -> Result<(RnnState, StepCache)> {
        self.check_input(f)?;
        let x = ArrayView1::from(f);
        let cache = cell::forward(self.cell, &self.params, self.hidden_dim, x, &state.h, &state.c);
        let next = RnnState { h: cache.h.clone(), c: cache.c.clone() };
        Ok((next, cache))
    }

    /// One turn: new state and the per-turn reward estimate.
    pub fn step_forward(&self, state: &RnnState, f: &[f64]) -> Result<(RnnState, f64)> {
        let (next, _) = self.step_cached(state, f)?;
        let r = self.head(&next.h);
        if !r.is_finite() {
            return Err(Error::NonFinite("rnn output"));
        }
        Ok((next, r))
    }

    /// Per-turn outputs `r_1..r_T`.
    pub fn outputs<F: AsRef<[f64]>>(&self, sequence: &[F]) -> Result<Vec<f64>> {
        let mut state = self.initial_state();
        let mut out = Vec::with_capacity(sequence.len());
        for f in sequence {
            let (next, r) = self.step_forward(&state, f.as_ref())?;
            out.push(r);
            state = next;
        }
        Ok(out)
    }

    /// Predicted return `Σ_t r_t`.
    pub fn predict_return<F: AsRef<[f64]>>(&self, sequence: &[F]) -> Result<f64> {
        if sequence.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(self.outputs(sequence)?.iter().sum())
    }

    /// Online shaping potential: the same computation as
    /// [`RnnModel::step_forward`], so `φ_t = r_t`.
    pub fn potential(&self, state: &RnnState, f: &[f64]) -> Result<(RnnState, f64)> {
        self.step_forward(state, f)
    }

    /// `(R - Σ_t r_t)²`.
    pub fn dialogue_loss<F: AsRef<[f64]>>(&self, sequence: &[F], target: f64) -> Result<f64> {
        let err = target - self.predict_return(sequence)?;
        Ok(err * err)
    }

    /// Loss and its exact gradient by backpropagation through time.
    pub fn loss_and_gradient<F: AsRef<[f64]>>(&self, sequence: &[F], target: f64) -> Result<(f64, Params)> {
        if sequence.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut state = self.initial_state();
        let mut caches = Vec::with_capacity(sequence.len());
        let mut total = 0.0;
        for f in sequence {
            let (next, cache) = self.step_cached(&state, f.as_ref())?;
            total += self.head(&next.h);
            caches.push(cache);
            state = next;
        }
        let err = target - total;
        let loss = err * err;
        if !loss.is_finite() {
            return Err(Error::NonFinite("rnn loss"));
        }
        // Every r_t enters the loss through the same sum.
        let g = -2.0 * err;
        let mut grad = Params::zeros(self.cell, self.input_dim, self.hidden_dim);
        let mut dh_next = Array1::zeros(self.hidden_dim);
        let mut dc_next = Array1::zeros(self.hidden_dim);
        for cache in caches.iter().rev() {
            grad.w_out.scaled_add(g, &cache.h);
            grad.b_out += g;
            let mut dh = dh_next;
            dh.scaled_add(g, &self.params.w_out);
            let (dh_prev, dc_prev) = cell::backward(self.cell, &self.params, self.hidden_dim, cache, dh, dc_next, &mut grad);
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        if !grad.is_finite() {
            return Err(Error::NonFinite("rnn gradient"));
        }
        Ok((loss, grad))
    }

    /// Multiplies the output layer by `k`, scaling every prediction by `k`.
    pub fn scale_output(&mut self, k: f64) {
        self.params.w_out *= k;
        self.params.b_out *= k;
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let p = &self.params;
        let mut file = TensorFile::new("rnn_model")
            .with_meta("cell", self.cell.name())
            .with_meta("input_dim", self.input_dim)
            .with_meta("hidden_dim", self.hidden_dim);
        let mat = |name: &str, m: &Array2<f64>| Tensor::new(name, vec![m.nrows(), m.ncols()], m.iter().copied().collect());
        file.push(mat("w_in", &p.w_in));
        file.push(mat("w_rec", &p.w_rec));
        file.push(Tensor::new("bias", vec![p.bias.len()], p.bias.to_vec()));
        file.push(Tensor::new("w_out", vec![p.w_out.len()], p.w_out.to_vec()));
        file.push(Tensor::scalar("b_out", p.b_out));
        file
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        file.expect_kind("rnn_model")?;
        let cell: CellKind = file.meta_str("cell")?.parse()?;
        let input_dim = file.meta_usize("input_dim")?;
        let hidden_dim = file.meta_usize("hidden_dim")?;
        let g = cell.gates() * hidden_dim;
        let mat = |name: &str, rows: usize, cols: usize| -> Result<Array2<f64>> {
            let t = file.expect(name, &[rows, cols])?;
            Array2::from_shape_vec((rows, cols), t.values.clone()).map_err(|e| Error::Parse(e.to_string()))
        };
        let vec = |name: &str, n: usize| -> Result<Array1<f64>> { Ok(Array1::from(file.expect(name, &[n])?.values.clone())) };
        let params = Params {
            w_in: mat("w_in", g, input_dim)?,
            w_rec: mat("w_rec", g, hidden_dim)?,
            bias: vec("bias", g)?,
            w_out: vec("w_out", hidden_dim)?,
            b_out: file.expect("b_out", &[])?.values[0],
        };
        Ok(RnnModel { cell, input_dim, hidden_dim, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_tensor_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::load(path)?)
    }
}

/// Random orthogonal matrix from Gram-Schmidt on Gaussian-ish columns.
fn orthogonal_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Array2<f64> {
    let mut q = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        loop {
            let mut v = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
            for k in 0..j {
                let col = q.column(k);
                let d = col.dot(&v);
                v.scaled_add(-d, &col);
            }
            let norm = v.dot(&v).sqrt();
            if norm > 1e-8 {
                q.column_mut(j).assign(&(v / norm));
                break;
            }
        }
    }
    q
}

#[cfg(test)]
mod tests;
