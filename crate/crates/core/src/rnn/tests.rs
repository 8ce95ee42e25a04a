use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Loop-based forward pass written independently of the ndarray code.
fn naive_outputs(m: &RnnModel, seq: &[Vec<f64>]) -> Vec<f64> {
    let n = m.hidden_dim;
    let p = &m.params;
    let row = |w: &Array2<f64>, r: usize, v: &[f64]| (0..v.len()).map(|j| w[[r, j]] * v[j]).sum::<f64>();
    let mut h = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut out = Vec::new();
    for x in seq {
        let mut h_new = vec![0.0; n];
        for k in 0..n {
            let pre = |g: usize, hv: &[f64]| row(&p.w_in, g * n + k, x) + row(&p.w_rec, g * n + k, hv) + p.bias[g * n + k];
            match m.cell {
                CellKind::Basic => h_new[k] = sig(pre(0, &h)),
                CellKind::Lstm => {
                    let (i, f, o, g) = (sig(pre(0, &h)), sig(pre(1, &h)), sig(pre(2, &h)), pre(3, &h).tanh());
                    c[k] = f * c[k] + i * g;
                    h_new[k] = o * c[k].tanh();
                }
                CellKind::Gru => {
                    let z = sig(pre(0, &h));
                    let rh: Vec<f64> = (0..n).map(|j| sig(pre_r(m, x, &h, j)) * h[j]).collect();
                    let cand = (row(&p.w_in, 2 * n + k, x) + row(&p.w_rec, 2 * n + k, &rh) + p.bias[2 * n + k]).tanh();
                    h_new[k] = (1.0 - z) * h[k] + z * cand;
                }
            }
        }
        h = h_new;
        out.push((0..n).map(|k| p.w_out[k] * h[k]).sum::<f64>() + p.b_out);
    }
    out
}

fn pre_r(m: &RnnModel, x: &[f64], h: &[f64], j: usize) -> f64 {
    let n = m.hidden_dim;
    let p = &m.params;
    let r = n + j;
    (0..x.len()).map(|i| p.w_in[[r, i]] * x[i]).sum::<f64>()
        + (0..n).map(|i| p.w_rec[[r, i]] * h[i]).sum::<f64>()
        + p.bias[r]
}

fn random_model(cell: CellKind, input: usize, hidden: usize, seed: u64) -> RnnModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RnnModel::new(cell, input, hidden, 0.5, false, &mut rng).unwrap()
}

fn random_seq(input: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| (0..input).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn hand_model(cell: CellKind) -> RnnModel {
    let mut m = RnnModel { cell, input_dim: 2, hidden_dim: 2, params: Params::zeros(cell, 2, 2) };
    let n = m.params.len();
    for i in 0..n {
        m.params.set(i, 0.1 * ((i % 7) as f64) - 0.3);
    }
    m
}

#[test]
fn zero_parameters_give_zero_output() {
    for cell in CellKind::ALL {
        let m = RnnModel { cell, input_dim: 3, hidden_dim: 4, params: Params::zeros(cell, 3, 4) };
        let (state, r) = m.step_forward(&m.initial_state(), &[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(r, 0.0);
        if cell == CellKind::Gru {
            assert!(state.h.iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn basic_cell_saturates() {
    let mut m = RnnModel { cell: CellKind::Basic, input_dim: 2, hidden_dim: 3, params: Params::zeros(CellKind::Basic, 2, 3) };
    m.params.bias.fill(40.0);
    let (state, _) = m.step_forward(&m.initial_state(), &[1.0, 1.0]).unwrap();
    assert!(state.h.iter().all(|&v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn hand_set_forward_matches_loop_oracle() {
    let seq = vec![vec![0.5, -1.0], vec![1.0, 0.25], vec![-0.75, 0.0]];
    for cell in CellKind::ALL {
        let m = hand_model(cell);
        let got = m.outputs(&seq).unwrap();
        let want = naive_outputs(&m, &seq);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{cell}: {a} vs {b}");
        }
    }
}

#[test]
fn basic_first_step_by_hand() {
    // w_in = [[1, 2], [-1, 0.5]], w_rec = 0, bias = [0.1, -0.2], w_out = [2, -1], b_out = 0.5
    let mut m = RnnModel { cell: CellKind::Basic, input_dim: 2, hidden_dim: 2, params: Params::zeros(CellKind::Basic, 2, 2) };
    m.params.w_in = ndarray::arr2(&[[1.0, 2.0], [-1.0, 0.5]]);
    m.params.bias = ndarray::arr1(&[0.1, -0.2]);
    m.params.w_out = ndarray::arr1(&[2.0, -1.0]);
    m.params.b_out = 0.5;
    let x = [0.3, -0.4];
    let h0 = sig(0.3 - 0.8 + 0.1);
    let h1 = sig(-0.3 - 0.2 - 0.2);
    let (_, r) = m.step_forward(&m.initial_state(), &x).unwrap();
    assert!((r - (2.0 * h0 - h1 + 0.5)).abs() < 1e-12);

    // Length-one gradient by the chain rule.
    let target = 3.0;
    let e = target - r;
    let (loss, g) = m.loss_and_gradient(&[x.to_vec()], target).unwrap();
    assert!((loss - e * e).abs() < 1e-12);
    assert!((g.b_out + 2.0 * e).abs() < 1e-12);
    assert!((g.w_out[0] + 2.0 * e * h0).abs() < 1e-12);
    let d0 = -2.0 * e * 2.0 * h0 * (1.0 - h0);
    let d1 = -2.0 * e * -1.0 * h1 * (1.0 - h1);
    assert!((g.bias[0] - d0).abs() < 1e-12 && (g.bias[1] - d1).abs() < 1e-12);
    assert!((g.w_in[[0, 1]] - d0 * x[1]).abs() < 1e-12);
    assert!((g.w_in[[1, 0]] - d1 * x[0]).abs() < 1e-12);
    assert!(g.w_rec.iter().all(|&v| v == 0.0));
}

#[test]
fn loss_examples() {
    let mut m = RnnModel { cell: CellKind::Basic, input_dim: 1, hidden_dim: 1, params: Params::zeros(CellKind::Basic, 1, 1) };
    m.params.b_out = 2.0;
    assert_eq!(m.dialogue_loss(&vec![vec![0.0]; 7], 14.0).unwrap(), 0.0);
    assert_eq!(m.dialogue_loss(&vec![vec![0.0]; 5], 14.0).unwrap(), 16.0);
    m.params.b_out = 0.0;
    assert_eq!(m.dialogue_loss(&vec![vec![0.0]; 3], -30.0).unwrap(), 900.0);
    assert!(matches!(m.dialogue_loss::<Vec<f64>>(&[], 1.0), Err(Error::EmptySequence)));
    assert!(matches!(m.step_forward(&m.initial_state(), &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
}

fn max_relative_error(m: &RnnModel, seq: &[Vec<f64>], target: f64) -> f64 {
    let (_, g) = m.loss_and_gradient(seq, target).unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..m.params.len() {
        let mut plus = m.clone();
        plus.params.set(i, m.params.get(i) + eps);
        let mut minus = m.clone();
        minus.params.set(i, m.params.get(i) - eps);
        let fd = (plus.dialogue_loss(seq, target).unwrap() - minus.dialogue_loss(seq, target).unwrap()) / (2.0 * eps);
        let a = g.get(i);
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn gradient_matches_finite_differences() {
    for cell in CellKind::ALL {
        for seed in 0..4u64 {
            let input = 1 + (seed as usize * 3) % 6;
            let hidden = 1 + (seed as usize * 5) % 7;
            let m = random_model(cell, input, hidden, seed);
            let seq = random_seq(input, 2 + seed as usize, 100 + seed);
            let err = max_relative_error(&m, &seq, 1.5 - seed as f64);
            assert!(err < 1e-4, "{cell} seed {seed}: {err}");
        }
    }
}

#[test]
fn duplicated_pair_doubles_gradient() {
    let m = random_model(CellKind::Lstm, 3, 4, 1);
    let seq = random_seq(3, 4, 2);
    let (_, g) = m.loss_and_gradient(&seq, 2.0).unwrap();
    let mut twice = g.clone();
    twice.add_scaled(1.0, &g);
    let mut expected = g.clone();
    expected.scale(2.0);
    assert_eq!(twice, expected);
}

fn one_dialogue() -> Sample {
    Sample { features: random_seq(6, 5, 9), target: 14.0 }
}

#[test]
fn overfits_single_dialogue() {
    for cell in CellKind::ALL {
        let s = one_dialogue();
        let cfg = TrainConfig { cell, hidden_dim: 8, epochs: 500, lr: 0.01, seed: 3, ..Default::default() };
        let (m, h) = train(std::slice::from_ref(&s), std::slice::from_ref(&s), &cfg).unwrap();
        assert!(h.steps <= 500);
        let err = (m.predict_return(&s.features).unwrap() - s.target).abs();
        assert!(err < 0.01, "{cell}: {err}");
    }
}

#[test]
fn constant_target_is_learned() {
    let samples: Vec<Sample> = (0..20).map(|i| Sample { features: random_seq(3, 1, i), target: -4.0 }).collect();
    let cfg = TrainConfig { cell: CellKind::Basic, hidden_dim: 4, epochs: 30, lr: 0.02, seed: 1, ..Default::default() };
    let (m, _) = train(&samples, &samples, &cfg).unwrap();
    assert!(rmse(&m, &samples).unwrap() < 0.1);
}

#[test]
fn training_is_deterministic() {
    let samples: Vec<Sample> = (0..10).map(|i| Sample { features: random_seq(4, 3, i), target: i as f64 - 5.0 }).collect();
    let cfg = TrainConfig { cell: CellKind::Gru, hidden_dim: 5, epochs: 6, seed: 11, ..Default::default() };
    let (a, ha) = train(&samples, &samples[..3], &cfg).unwrap();
    let (b, hb) = train(&samples, &samples[..3], &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    assert_eq!(ha.epochs.len(), 6);
}

#[test]
fn divergence_is_reported() {
    let samples: Vec<Sample> = (0..5).map(|i| Sample { features: random_seq(4, 20, i), target: 1e6 }).collect();
    let cfg = TrainConfig { cell: CellKind::Basic, hidden_dim: 4, epochs: 50, lr: 1e6, clip: None, ..Default::default() };
    assert!(train(&samples, &samples, &cfg).is_err());
}

#[test]
fn zero_predictor_rmse() {
    let m = RnnModel { cell: CellKind::Gru, input_dim: 2, hidden_dim: 2, params: Params::zeros(CellKind::Gru, 2, 2) };
    let a = Sample { features: vec![vec![1.0, 0.0]; 6], target: 14.0 };
    let b = Sample { features: vec![vec![0.0, 1.0]; 30], target: -30.0 };
    let v = rmse(&m, &[a.clone(), b.clone()]).unwrap();
    assert!((v - ((196.0 + 900.0) / 2.0f64).sqrt()).abs() < 1e-12);
    assert!((v - 23.41).abs() < 5e-3);
    assert_eq!(rmse(&m, &[b, a]).unwrap(), v);
    assert!(rmse(&m, &[]).is_err());
}

#[test]
fn potential_stream_equals_outputs() {
    let m = random_model(CellKind::Lstm, 3, 5, 4);
    let seq = random_seq(3, 6, 5);
    let offline = m.outputs(&seq).unwrap();
    let mut state = m.initial_state();
    for (f, want) in seq.iter().zip(&offline) {
        let (next, phi) = m.potential(&state, f).unwrap();
        assert!((phi - want).abs() < 1e-12);
        state = next;
    }
    // A fresh state makes the first potential independent of history.
    let (_, first) = m.potential(&m.initial_state(), &seq[0]).unwrap();
    assert_eq!(first, offline[0]);
}

#[test]
fn save_load_is_exact() {
    for cell in CellKind::ALL {
        let m = random_model(cell, 5, 3, 77);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        assert_eq!(RnnModel::load(&path).unwrap(), m);
    }
}

#[test]
fn orthogonal_init_blocks_are_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let m = RnnModel::new(CellKind::Lstm, 3, 6, 0.1, true, &mut rng).unwrap();
    for g in 0..4 {
        let b = m.params.w_rec.slice(s![g * 6..(g + 1) * 6, ..]);
        let prod = b.t().dot(&b);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - want).abs() < 1e-10);
            }
        }
    }
    assert!(m.params.bias.slice(s![6..12]).iter().all(|&v| v == 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn loss_non_negative_and_zero_at_prediction(seed in 0u64..1000, len in 1usize..6) {
        let m = random_model(CellKind::Gru, 3, 3, seed);
        let seq = random_seq(3, len, seed + 1);
        let pred = m.predict_return(&seq).unwrap();
        prop_assert!(m.dialogue_loss(&seq, pred + 1.0).unwrap() > 0.0);
        prop_assert_eq!(m.dialogue_loss(&seq, pred).unwrap(), 0.0);
    }

    #[test]
    fn step_is_a_pure_function(seed in 0u64..1000) {
        let m = random_model(CellKind::Lstm, 2, 3, seed);
        let x = random_seq(2, 1, seed).remove(0);
        let s0 = m.initial_state();
        prop_assert_eq!(m.step_forward(&s0, &x).unwrap(), m.step_forward(&s0, &x).unwrap());
    }

    #[test]
    fn forward_matches_oracle(seed in 0u64..1000, cell in 0usize..3, len in 1usize..5) {
        let cell = CellKind::ALL[cell];
        let m = random_model(cell, 3, 4, seed);
        let seq = random_seq(3, len, seed);
        for (a, b) in m.outputs(&seq).unwrap().iter().zip(naive_outputs(&m, &seq)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
