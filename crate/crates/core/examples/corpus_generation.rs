//! Balanced behaviour-policy corpus: generate, save as CSV, reload and
//! rebuild the per-turn feature sequences.

use dialogue_shaping::env::record::{load_corpus, save_corpus};
use dialogue_shaping::env::Ontology;
use dialogue_shaping::harness::{gen_corpus, records_to_samples, CorpusConfig};

fn main() -> dialogue_shaping::Result<()> {
    let ontology = Ontology::desk_default();
    let cfg = CorpusConfig { n: 200, sers: vec![0.15], balanced: true, seed: 5, ..Default::default() };
    let records = gen_corpus(&ontology, &cfg)?;

    let path = std::env::temp_dir().join("corpus_example.csv");
    save_corpus(&path, &records)?;
    let reloaded = load_corpus(&path)?;
    assert_eq!(reloaded, records);

    let wins = records.iter().filter(|r| r.success).count();
    let turns: usize = records.iter().map(|r| r.turns.len()).sum();
    let mean_return = records.iter().map(|r| r.return_label).sum::<f64>() / records.len() as f64;
    println!("{} dialogues, {wins} successful, {turns} turns, mean return {mean_return:.2}", records.len());
    println!("saved to {}", path.display());

    let samples = records_to_samples(&ontology, &reloaded)?;
    println!("first dialogue: {} turns of {}-dim features, return {}", samples[0].features.len(), samples[0].features[0].len(), samples[0].target);
    Ok(())
}
