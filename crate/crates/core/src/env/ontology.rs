use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved value meaning "the user has no preference for this slot".
pub const DONTCARE: &str = "dontcare";
/// Reserved venue name used when the system claims no venue matches.
pub const NO_VENUE: &str = "none";

const RESERVED_CHARS: &[char] = &['(', ')', ',', '=', ';'];

/// A slot the user can constrain the search with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSlot {
    pub name: String,
    pub values: Vec<String>,
}

/// A database entity. Constraint values are stored as indices into the
/// matching slot's value list; request-slot information as plain strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Venue {
    pub name: String,
    pub constraints: Vec<usize>,
    pub info: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    pub constraint_slots: Vec<ConstraintSlot>,
    pub request_slots: Vec<String>,
    pub venues: Vec<Venue>,
    pub max_turns: usize,
}

/// On-disk layout: venues are records keyed by slot name.
#[derive(Debug, Serialize, Deserialize)]
struct OntologyFile {
    constraint_slots: Vec<(String, Vec<String>)>,
    request_slots: Vec<String>,
    venues: Vec<BTreeMap<String, String>>,
    max_turns: usize,
}

impl Ontology {
    /// The default desk-scale restaurant domain: food (10 values), area (5),
    /// pricerange (3); phone, address and postcode as informable properties;
    /// 150 venues; 30 turn cap.
    pub fn desk_default() -> Self {
        let food = [
            "chinese", "indian", "italian", "british", "french", "thai", "japanese", "korean",
            "spanish", "turkish",
        ];
        let area = ["centre", "north", "south", "east", "west"];
        let price = ["cheap", "moderate", "expensive"];
        let streets = [
            "regent street", "mill road", "hills road", "king street", "trumpington street",
            "newmarket road", "bridge street", "castle street",
        ];
        let to_strings = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let constraint_slots = vec![
            ConstraintSlot { name: "food".into(), values: to_strings(&food) },
            ConstraintSlot { name: "area".into(), values: to_strings(&area) },
            ConstraintSlot { name: "pricerange".into(), values: to_strings(&price) },
        ];
        let request_slots = to_strings(&["phone", "address", "postcode"]);

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2016);
        let venues = (0..150)
            .map(|i| {
                let constraints = constraint_slots
                    .iter()
                    .map(|s| rng.random_range(0..s.values.len()))
                    .collect();
                let street = streets.choose(&mut rng).expect("non-empty");
                let info = vec![
                    format!("01223 {:06}", rng.random_range(0..1_000_000)),
                    format!("{} {}", rng.random_range(1..200), street),
                    format!("cb{} {}{}", rng.random_range(1..6), rng.random_range(1..10), ["ab", "dp", "eq", "rh"][i % 4]),
                ];
                Venue { name: format!("venue_{i}"), constraints, info }
            })
            .collect();

        Ontology { constraint_slots, request_slots, venues, max_turns: 30 }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: OntologyFile = serde_json::from_str(text)?;
        let constraint_slots: Vec<ConstraintSlot> = file
            .constraint_slots
            .into_iter()
            .map(|(name, values)| ConstraintSlot { name, values })
            .collect();
        let mut venues = Vec::with_capacity(file.venues.len());
        for (i, record) in file.venues.iter().enumerate() {
            let name = record.get("name").cloned().unwrap_or_else(|| format!("venue_{i}"));
            let mut constraints = Vec::with_capacity(constraint_slots.len());
            for slot in &constraint_slots {
                let value = record.get(&slot.name).ok_or_else(|| {
                    Error::InvalidOntology(format!("venue {name} has no value for {}", slot.name))
                })?;
                let idx = slot.values.iter().position(|v| v == value).ok_or_else(|| {
                    Error::InvalidOntology(format!(
                        "venue {name}: {value} is not a listed value of {}",
                        slot.name
                    ))
                })?;
                constraints.push(idx);
            }
            let info = file
                .request_slots
                .iter()
                .map(|slot| {
                    record.get(slot).cloned().ok_or_else(|| {
                        Error::InvalidOntology(format!("venue {name} has no value for {slot}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            venues.push(Venue { name, constraints, info });
        }
        let ontology = Ontology {
            constraint_slots,
            request_slots: file.request_slots,
            venues,
            max_turns: file.max_turns,
        };
        ontology.validate()?;
        Ok(ontology)
    }

    pub fn to_json(&self) -> Result<String> {
        let venues = self
            .venues
            .iter()
            .map(|v| {
                let mut record = BTreeMap::new();
                record.insert("name".to_string(), v.name.clone());
                for (slot, &value) in self.constraint_slots.iter().zip(&v.constraints) {
                    record.insert(slot.name.clone(), slot.values[value].clone());
                }
                for (slot, info) in self.request_slots.iter().zip(&v.info) {
                    record.insert(slot.clone(), info.clone());
                }
                record
            })
            .collect();
        let file = OntologyFile {
            constraint_slots: self
                .constraint_slots
                .iter()
                .map(|s| (s.name.clone(), s.values.clone()))
                .collect(),
            request_slots: self.request_slots.clone(),
            venues,
            max_turns: self.max_turns,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOntology(msg));
        if self.max_turns == 0 {
            return bad("max_turns must be at least 1".into());
        }
        if self.constraint_slots.is_empty() || self.request_slots.is_empty() {
            return bad("need at least one constraint slot and one request slot".into());
        }
        let mut names: Vec<&str> = self.constraint_slots.iter().map(|s| s.name.as_str()).collect();
        names.extend(self.request_slots.iter().map(String::as_str));
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != names.len() {
            return bad("slot names must be unique".into());
        }
        for name in &names {
            if name.is_empty() || name.contains(RESERVED_CHARS) || *name == "venue" || *name == "name" {
                return bad(format!("slot name {name:?} is empty or reserved"));
            }
        }
        for slot in &self.constraint_slots {
            if slot.values.is_empty() {
                return bad(format!("slot {} has no values", slot.name));
            }
            for v in &slot.values {
                if v.is_empty() || v.contains(RESERVED_CHARS) || v == DONTCARE || v == NO_VENUE {
                    return bad(format!("value {v:?} of {} is empty or reserved", slot.name));
                }
            }
        }
        for venue in &self.venues {
            if venue.name.contains(RESERVED_CHARS) || venue.name == NO_VENUE {
                return bad(format!("venue name {:?} is reserved", venue.name));
            }
            if venue.constraints.len() != self.constraint_slots.len()
                || venue.info.len() != self.request_slots.len()
            {
                return bad(format!("venue {} does not define every slot", venue.name));
            }
            for (slot, &v) in self.constraint_slots.iter().zip(&venue.constraints) {
                if v >= slot.values.len() {
                    return bad(format!("venue {} has an out-of-range {} value", venue.name, slot.name));
                }
            }
        }
        Ok(())
    }

    pub fn n_constraint(&self) -> usize {
        self.constraint_slots.len()
    }

    pub fn n_request(&self) -> usize {
        self.request_slots.len()
    }

    pub fn constraint_index(&self, name: &str) -> Option<usize> {
        self.constraint_slots.iter().position(|s| s.name == name)
    }

    pub fn request_index(&self, name: &str) -> Option<usize> {
        self.request_slots.iter().position(|s| s == name)
    }

    pub fn venue_index(&self, name: &str) -> Option<usize> {
        self.venues.iter().position(|v| v.name == name)
    }

    /// True when the venue agrees with every constrained slot.
    pub fn venue_matches(&self, venue: usize, constraints: &[Option<usize>]) -> bool {
        self.venues[venue]
            .constraints
            .iter()
            .zip(constraints)
            .all(|(&have, want)| want.is_none_or(|w| w == have))
    }

    /// Venues matching the given (partial) constraint assignment, in index order.
    pub fn matching_venues<'a>(
        &'a self,
        constraints: &'a [Option<usize>],
    ) -> impl Iterator<Item = usize> + 'a {
        (0..self.venues.len()).filter(move |&v| self.venue_matches(v, constraints))
    }
}
