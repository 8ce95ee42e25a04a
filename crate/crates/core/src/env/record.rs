//! Corpus files: one CSV row per turn, grouped by dialogue id.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::belief::{self, init_belief};
use crate::env::acts::{ActionSpace, DialogueAct, SystemAct, SystemAction};
use crate::env::channel::Observation;
use crate::env::ontology::Ontology;
use crate::env::session::Episode;
use crate::error::{Error, Result};
use crate::features::{extract, FeatureLayout};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub id: u64,
    pub ser: f64,
    pub success: bool,
    pub return_label: f64,
    pub turns: Vec<TurnRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnRecord {
    pub sys_act: String,
    pub obs_act: String,
    pub confidence: f64,
    pub reward: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    dialogue: u64,
    ser: f64,
    success: u8,
    #[serde(rename = "return")]
    return_label: f64,
    turn: usize,
    sys_act: String,
    obs_act: String,
    confidence: f64,
    reward: f64,
}

impl EpisodeRecord {
    pub fn from_episode(id: u64, episode: &Episode, ontology: &Ontology) -> Self {
        let space = ActionSpace::new(ontology);
        EpisodeRecord {
            id,
            ser: episode.ser,
            success: episode.success,
            return_label: episode.return_label,
            turns: episode
                .turns
                .iter()
                .map(|t| TurnRecord {
                    sys_act: t.system_act.render(&space, ontology),
                    obs_act: t.observation.observed_act.render(ontology),
                    confidence: t.observation.confidence,
                    reward: t.env_reward,
                })
                .collect(),
        }
    }

    /// Parsed system acts and observations, in turn order.
    pub fn parse_turns(&self, ontology: &Ontology) -> Result<Vec<(SystemAct, Observation)>> {
        let space = ActionSpace::new(ontology);
        self.turns
            .iter()
            .map(|t| {
                let sys = SystemAct::parse(&t.sys_act, &space, ontology)?;
                let act = DialogueAct::parse(&t.obs_act, ontology)?;
                if !(0.0..=1.0).contains(&t.confidence) {
                    return Err(Error::Parse(format!("confidence {} out of range", t.confidence)));
                }
                Ok((sys, Observation { observed_act: act, confidence: t.confidence, is_corrupted: false }))
            })
            .collect()
    }

    /// Re-runs the belief tracker over the logged acts to rebuild the
    /// per-turn feature vectors.
    pub fn replay_features(&self, ontology: &Ontology) -> Result<Vec<Vec<f64>>> {
        if self.turns.is_empty() {
            return Err(Error::EmptySequence);
        }
        if self.turns.len() > ontology.max_turns {
            return Err(Error::Parse(format!("dialogue {} longer than the turn limit", self.id)));
        }
        let layout = FeatureLayout::new(ontology);
        let mut b = init_belief(ontology);
        let mut out = Vec::with_capacity(self.turns.len());
        for (t, (sys, obs)) in self.parse_turns(ontology)?.into_iter().enumerate() {
            let prior = if sys.action == SystemAction::Restart { init_belief(ontology) } else { b };
            b = belief::update(ontology, &prior, &obs, &sys)?;
            out.push(extract(&layout, &b, &obs, sys.index, t + 1, ontology.max_turns)?.0);
        }
        Ok(out)
    }
}

pub fn write_csv<W: Write>(out: W, records: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        for (i, t) in r.turns.iter().enumerate() {
            w.serialize(Row {
                dialogue: r.id,
                ser: r.ser,
                success: u8::from(r.success),
                return_label: r.return_label,
                turn: i + 1,
                sys_act: t.sys_act.clone(),
                obs_act: t.obs_act.clone(),
                confidence: t.confidence,
                reward: t.reward,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<EpisodeRecord>> {
    let mut records: Vec<EpisodeRecord> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: Row = row?;
        let continues = records.last().is_some_and(|r| r.id == row.dialogue);
        if !continues {
            if row.turn != 1 {
                return Err(Error::Parse(format!("dialogue {} does not start at turn 1", row.dialogue)));
            }
            records.push(EpisodeRecord {
                id: row.dialogue,
                ser: row.ser,
                success: row.success != 0,
                return_label: row.return_label,
                turns: Vec::new(),
            });
        }
        let rec = records.last_mut().expect("pushed above");
        if row.turn != rec.turns.len() + 1 {
            return Err(Error::Parse(format!("dialogue {} has out-of-order turns", row.dialogue)));
        }
        rec.turns.push(TurnRecord { sys_act: row.sys_act, obs_act: row.obs_act, confidence: row.confidence, reward: row.reward });
    }
    Ok(records)
}

pub fn save_corpus(path: impl AsRef<std::path::Path>, records: &[EpisodeRecord]) -> Result<()> {
    write_csv(std::io::BufWriter::new(std::fs::File::create(path)?), records)
}

pub fn load_corpus(path: impl AsRef<std::path::Path>) -> Result<Vec<EpisodeRecord>> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DialogueEnv, EnvConfig};
    use crate::harness::corpus::behavior_episode;

    fn episodes(ser: f64, n: u64) -> (Ontology, Vec<Episode>) {
        let o = Ontology::desk_default();
        let mut env = DialogueEnv::new(&o, EnvConfig { ser, ..Default::default() }, 0).unwrap();
        let eps = (0..n).map(|i| behavior_episode(&mut env, i, 1000 + i, 0.7).unwrap()).collect();
        (o, eps)
    }

    #[test]
    fn replay_matches_live_features_exactly() {
        for ser in [0.0, 0.3] {
            let (o, eps) = episodes(ser, 40);
            for (i, ep) in eps.iter().enumerate() {
                let rec = EpisodeRecord::from_episode(i as u64, ep, &o);
                let live: Vec<Vec<f64>> = ep.turns.iter().map(|t| t.features.0.clone()).collect();
                assert_eq!(rec.replay_features(&o).unwrap(), live, "dialogue {i} at ser {ser}");
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let (o, eps) = episodes(0.15, 25);
        let recs: Vec<EpisodeRecord> = eps.iter().enumerate().map(|(i, e)| EpisodeRecord::from_episode(i as u64, e, &o)).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dialogue,ser,success,return,turn,sys_act,obs_act,confidence,reward\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
        let labels: f64 = recs.iter().map(|r| r.return_label).sum();
        let rewards: f64 = recs.iter().flat_map(|r| r.turns.iter().map(|t| t.reward)).sum();
        assert_eq!(labels, rewards);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let header = "dialogue,ser,success,return,turn,sys_act,obs_act,confidence,reward\n";
        let skip = format!("{header}0,0.15,0,-1,2,hello(),null(),1,-1\n");
        assert!(read_csv(skip.as_bytes()).is_err());
        let bad_conf = format!("{header}0,0.15,0,-1,1,hello(),null(),1.5,-1\n");
        let o = Ontology::desk_default();
        let recs = read_csv(bad_conf.as_bytes()).unwrap();
        assert!(recs[0].replay_features(&o).is_err());
    }
}
