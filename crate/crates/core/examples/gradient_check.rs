//! Backpropagation through time against central finite differences for
//! every cell type.

use dialogue_shaping::rnn::{CellKind, RnnModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dialogue_shaping::Result<()> {
    let eps = 1e-5;
    for cell in CellKind::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = RnnModel::new(cell, 4, 5, 0.5, false, &mut rng)?;
        let seq: Vec<Vec<f64>> = (0..6).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let target = 3.0;
        let (_, grad) = model.loss_and_gradient(&seq, target)?;
        let mut worst: f64 = 0.0;
        for i in 0..model.params.len() {
            let nudged = |d: f64| {
                let mut m = model.clone();
                m.params.set(i, model.params.get(i) + d);
                m.dialogue_loss(&seq, target)
            };
            let fd = (nudged(eps)? - nudged(-eps)?) / (2.0 * eps);
            let g = grad.get(i);
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-6));
        }
        println!("{cell:<5} {} parameters, worst relative error {worst:.2e}", model.params.len());
    }
    Ok(())
}
