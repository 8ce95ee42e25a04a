use ndarray::{s, Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    /// `h' = σ(W x + U h + b)`.
    Basic,
    /// Gates `i, f, o` and candidate `g`; `c' = f c + i g`, `h' = o tanh(c')`.
    Lstm,
    /// Update `z`, reset `r`, candidate `n = tanh(W x + U (r h) + b)`;
    /// `h' = (1 - z) h + z n`.
    Gru,
}

impl CellKind {
    pub const ALL: [CellKind; 3] = [CellKind::Basic, CellKind::Lstm, CellKind::Gru];

    pub fn gates(self) -> usize {
        self.gate_names().len()
    }

    pub fn gate_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Basic => &["h"],
            CellKind::Lstm => &["i", "f", "o", "g"],
            CellKind::Gru => &["z", "r", "n"],
        }
    }

    pub(super) fn forget_gate(self) -> Option<usize> {
        (self == CellKind::Lstm).then_some(1)
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Basic => "basic",
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" | "rnn" => Ok(CellKind::Basic),
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::Config(format!("unknown cell {other:?}"))),
        }
    }
}

pub(super) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(super) struct StepCache {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    /// Activated gate values, stacked like the parameter rows.
    act: Array1<f64>,
    /// `tanh(c)` for LSTM, `r ⊙ h_prev` for GRU.
    aux: Array1<f64>,
    pub h: Array1<f64>,
    pub c: Array1<f64>,
}

pub(super) fn forward(
    cell: CellKind,
    p: &Params,
    n: usize,
    x: ArrayView1<f64>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
) -> StepCache {
    let mut pre = p.w_in.dot(&x) + &p.bias;
    let (act, aux, h, c) = match cell {
        CellKind::Basic => {
            pre += &p.w_rec.dot(h_prev);
            let h = pre.mapv(sigmoid);
            (h.clone(), Array1::zeros(0), h, Array1::zeros(n))
        }
        CellKind::Lstm => {
            pre += &p.w_rec.dot(h_prev);
            let mut act = pre;
            act.slice_mut(s![..3 * n]).mapv_inplace(sigmoid);
            act.slice_mut(s![3 * n..]).mapv_inplace(f64::tanh);
            let (i, f, o, g) = (act.slice(s![..n]), act.slice(s![n..2 * n]), act.slice(s![2 * n..3 * n]), act.slice(s![3 * n..]));
            let c = &f * c_prev + &i * &g;
            let tc = c.mapv(f64::tanh);
            let h = &o * &tc;
            (act, tc, h, c)
        }
        CellKind::Gru => {
            let mut act = pre;
            {
                let mut zr = act.slice_mut(s![..2 * n]);
                zr += &p.w_rec.slice(s![..2 * n, ..]).dot(h_prev);
                zr.mapv_inplace(sigmoid);
            }
            let rh = &act.slice(s![n..2 * n]) * h_prev;
            {
                let mut cand = act.slice_mut(s![2 * n..]);
                cand += &p.w_rec.slice(s![2 * n.., ..]).dot(&rh);
                cand.mapv_inplace(f64::tanh);
            }
            let z = act.slice(s![..n]);
            let cand = act.slice(s![2 * n..]);
            let h = h_prev + &(&z * &(&cand - h_prev));
            (act, rh, h, Array1::zeros(n))
        }
    };
    StepCache { x: x.to_owned(), h_prev: h_prev.clone(), c_prev: c_prev.clone(), act, aux, h, c }
}

/// Accumulates parameter gradients for one step given `dL/dh` and `dL/dc`
/// flowing into this step's outputs; returns the gradients for the previous
/// hidden and cell states.
pub(super) fn backward(
    cell: CellKind,
    p: &Params,
    n: usize,
    cache: &StepCache,
    dh: Array1<f64>,
    dc_next: Array1<f64>,
    grad: &mut Params,
) -> (Array1<f64>, Array1<f64>) {
    let sig_d = |a: f64| a * (1.0 - a);
    let tanh_d = |a: f64| 1.0 - a * a;
    match cell {
        CellKind::Basic => {
            let da = &dh * &cache.act.mapv(sig_d);
            accumulate(grad, &da, &cache.x, &cache.h_prev, 0);
            (p.w_rec.t().dot(&da), Array1::zeros(n))
        }
        CellKind::Lstm => {
            let a = &cache.act;
            let (i, f, o, g) = (a.slice(s![..n]), a.slice(s![n..2 * n]), a.slice(s![2 * n..3 * n]), a.slice(s![3 * n..]));
            let tc = &cache.aux;
            let dc = &dh * &o * &tc.mapv(tanh_d) + &dc_next;
            let mut dz = Array1::zeros(4 * n);
            dz.slice_mut(s![..n]).assign(&(&dc * &g * &i.mapv(sig_d)));
            dz.slice_mut(s![n..2 * n]).assign(&(&dc * &cache.c_prev * &f.mapv(sig_d)));
            dz.slice_mut(s![2 * n..3 * n]).assign(&(&dh * tc * &o.mapv(sig_d)));
            dz.slice_mut(s![3 * n..]).assign(&(&dc * &i * &g.mapv(tanh_d)));
            accumulate(grad, &dz, &cache.x, &cache.h_prev, 0);
            (p.w_rec.t().dot(&dz), &dc * &f)
        }
        CellKind::Gru => {
            let a = &cache.act;
            let (z, r, cand) = (a.slice(s![..n]), a.slice(s![n..2 * n]), a.slice(s![2 * n..]));
            let h_prev = &cache.h_prev;
            let mut dz = Array1::zeros(3 * n);
            dz.slice_mut(s![2 * n..]).assign(&(&dh * &z * &cand.mapv(tanh_d)));
            let d_rh = p.w_rec.slice(s![2 * n.., ..]).t().dot(&dz.slice(s![2 * n..]));
            dz.slice_mut(s![..n]).assign(&(&dh * &(&cand - h_prev) * &z.mapv(sig_d)));
            dz.slice_mut(s![n..2 * n]).assign(&(&d_rh * h_prev * &r.mapv(sig_d)));
            // Input, bias and z/r recurrent rows see h_prev; candidate rows see r ⊙ h_prev.
            accumulate_input(grad, &dz, &cache.x);
            outer_add(&mut grad.w_rec, &dz.slice(s![..2 * n]), h_prev.view(), 0);
            outer_add(&mut grad.w_rec, &dz.slice(s![2 * n..]), cache.aux.view(), 2 * n);
            let mut dh_prev = &dh * &z.mapv(|v| 1.0 - v) + &(&d_rh * &r);
            dh_prev += &p.w_rec.slice(s![..2 * n, ..]).t().dot(&dz.slice(s![..2 * n]));
            (dh_prev, Array1::zeros(n))
        }
    }
}

fn accumulate(grad: &mut Params, dz: &Array1<f64>, x: &Array1<f64>, h_prev: &Array1<f64>, row0: usize) {
    accumulate_input(grad, dz, x);
    outer_add(&mut grad.w_rec, &dz.view(), h_prev.view(), row0);
}

fn accumulate_input(grad: &mut Params, dz: &Array1<f64>, x: &Array1<f64>) {
    outer_add(&mut grad.w_in, &dz.view(), x.view(), 0);
    grad.bias += dz;
}

fn outer_add(m: &mut ndarray::Array2<f64>, left: &ArrayView1<f64>, right: ArrayView1<f64>, row0: usize) {
    for (k, mut row) in m.axis_iter_mut(Axis(0)).skip(row0).take(left.len()).enumerate() {
        let l = left[k];
        if l != 0.0 {
            row.scaled_add(l, &right);
        }
    }
}
