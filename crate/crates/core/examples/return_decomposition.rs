//! Trains a small GRU to predict dialogue returns and shows how it spreads
//! one return across turns. Only the total is supervised.

use dialogue_shaping::env::Ontology;
use dialogue_shaping::harness::rnn_eval::{constant_rmse, mean_return};
use dialogue_shaping::harness::{gen_corpus, records_to_samples, CorpusConfig};
use dialogue_shaping::rnn::{rmse, train, CellKind, TrainConfig};

fn main() -> dialogue_shaping::Result<()> {
    let ontology = Ontology::desk_default();
    let corpus = |n, seed| -> dialogue_shaping::Result<_> {
        let cfg = CorpusConfig { n, seed, ..Default::default() };
        records_to_samples(&ontology, &gen_corpus(&ontology, &cfg)?)
    };
    let train_set = corpus(600, 1)?;
    let valid_set = corpus(200, 2)?;
    let test_set = corpus(200, 3)?;

    let cfg = TrainConfig { cell: CellKind::Gru, hidden_dim: 32, epochs: 60, stop_after: Some(8), ..Default::default() };
    let (model, history) = train(&train_set, &valid_set, &cfg)?;
    for e in &history.epochs {
        println!("epoch {:>2}  lr {:.4}  train mse {:>7.3}  valid rmse {:.3}", e.epoch, e.lr, e.train_loss, e.valid_rmse);
    }

    let baseline = constant_rmse(&test_set, mean_return(&train_set)?)?;
    println!("test rmse {:.3}, constant-mean baseline {baseline:.3}", rmse(&model, &test_set)?);

    let sample = &test_set[0];
    let outputs = model.outputs(&sample.features)?;
    println!("return {} predicted {:.2}", sample.target, outputs.iter().sum::<f64>());
    for (t, r) in outputs.iter().enumerate() {
        println!("  turn {:>2}  r_t {:>7.3}", t + 1, r);
    }
    Ok(())
}
