use std::fmt;

use crate::env::ontology::{Ontology, DONTCARE, NO_VENUE};
use crate::error::{Error, Result};

/// User dialogue-act types. The order fixes one-hot and discourse layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActType {
    Hello,
    Inform,
    Request,
    Confirm,
    Affirm,
    Negate,
    Reqalts,
    Bye,
    Null,
}

impl ActType {
    pub const COUNT: usize = 9;

    pub const ALL: [ActType; Self::COUNT] = [
        ActType::Hello,
        ActType::Inform,
        ActType::Request,
        ActType::Confirm,
        ActType::Affirm,
        ActType::Negate,
        ActType::Reqalts,
        ActType::Bye,
        ActType::Null,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ActType::Hello => "hello",
            ActType::Inform => "inform",
            ActType::Request => "request",
            ActType::Confirm => "confirm",
            ActType::Affirm => "affirm",
            ActType::Negate => "negate",
            ActType::Reqalts => "reqalts",
            ActType::Bye => "bye",
            ActType::Null => "null",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotRef {
    Constraint(usize),
    Request(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotValue {
    Value(usize),
    DontCare,
}

/// A user act. `inform` carries a constraint slot and a value,
/// `request` a request slot, `confirm` a constraint slot; the rest carry nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DialogueAct {
    pub act_type: ActType,
    pub slot: Option<SlotRef>,
    pub value: Option<SlotValue>,
}

impl DialogueAct {
    pub fn bare(act_type: ActType) -> Self {
        DialogueAct { act_type, slot: None, value: None }
    }

    pub fn inform(slot: usize, value: SlotValue) -> Self {
        DialogueAct {
            act_type: ActType::Inform,
            slot: Some(SlotRef::Constraint(slot)),
            value: Some(value),
        }
    }

    pub fn request(slot: usize) -> Self {
        DialogueAct { act_type: ActType::Request, slot: Some(SlotRef::Request(slot)), value: None }
    }

    pub fn confirm(slot: usize) -> Self {
        DialogueAct { act_type: ActType::Confirm, slot: Some(SlotRef::Constraint(slot)), value: None }
    }

    pub fn is_well_formed(&self, ontology: &Ontology) -> bool {
        match (self.act_type, self.slot, self.value) {
            (ActType::Inform, Some(SlotRef::Constraint(s)), Some(v)) => {
                s < ontology.n_constraint()
                    && match v {
                        SlotValue::Value(i) => i < ontology.constraint_slots[s].values.len(),
                        SlotValue::DontCare => true,
                    }
            }
            (ActType::Request, Some(SlotRef::Request(r)), None) => r < ontology.n_request(),
            (ActType::Confirm, Some(SlotRef::Constraint(s)), None) => s < ontology.n_constraint(),
            (ActType::Inform | ActType::Request | ActType::Confirm, _, _) => false,
            (_, None, None) => true,
            _ => false,
        }
    }

    pub fn render(&self, ontology: &Ontology) -> String {
        let name = self.act_type.name();
        match (self.slot, self.value) {
            (Some(SlotRef::Constraint(s)), Some(v)) => {
                let slot = &ontology.constraint_slots[s];
                let value = match v {
                    SlotValue::Value(i) => slot.values[i].as_str(),
                    SlotValue::DontCare => DONTCARE,
                };
                format!("{name}({}={value})", slot.name)
            }
            (Some(SlotRef::Constraint(s)), None) => {
                format!("{name}({})", ontology.constraint_slots[s].name)
            }
            (Some(SlotRef::Request(r)), _) => format!("{name}({})", ontology.request_slots[r]),
            (None, _) => name.to_string(),
        }
    }

    pub fn parse(text: &str, ontology: &Ontology) -> Result<Self> {
        let (name, args) = split_call(text)?;
        let act_type =
            ActType::from_name(name).ok_or_else(|| Error::Parse(format!("unknown act {name:?}")))?;
        let act = match args {
            None => DialogueAct::bare(act_type),
            Some(arg) => match arg.split_once('=') {
                Some((slot, value)) => {
                    let s = ontology
                        .constraint_index(slot)
                        .ok_or_else(|| Error::Parse(format!("unknown slot {slot:?}")))?;
                    let value = if value == DONTCARE {
                        SlotValue::DontCare
                    } else {
                        SlotValue::Value(value_index(ontology, s, value)?)
                    };
                    DialogueAct { act_type, slot: Some(SlotRef::Constraint(s)), value: Some(value) }
                }
                None => {
                    let slot = if let Some(s) = ontology.constraint_index(arg) {
                        SlotRef::Constraint(s)
                    } else if let Some(r) = ontology.request_index(arg) {
                        SlotRef::Request(r)
                    } else {
                        return Err(Error::Parse(format!("unknown slot {arg:?}")));
                    };
                    DialogueAct { act_type, slot: Some(slot), value: None }
                }
            },
        };
        if !act.is_well_formed(ontology) {
            return Err(Error::Parse(format!("malformed act {text:?}")));
        }
        Ok(act)
    }
}

fn value_index(ontology: &Ontology, slot: usize, value: &str) -> Result<usize> {
    ontology.constraint_slots[slot]
        .values
        .iter()
        .position(|v| v == value)
        .ok_or_else(|| Error::Parse(format!("unknown value {value:?}")))
}

fn split_call(text: &str) -> Result<(&str, Option<&str>)> {
    match text.split_once('(') {
        None => Ok((text, None)),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in {text:?}")))?;
            Ok((name, if inner.is_empty() { None } else { Some(inner) }))
        }
    }
}

/// Summary system actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemAction {
    Request(usize),
    Confirm(usize),
    Select(usize),
    InformOffer,
    InformRequested(usize),
    InformAlternative,
    Repeat,
    Reqmore,
    Restart,
    Bye,
    Hello,
    InformByName,
}

/// Bijection between summary actions and indices for a given ontology:
/// request/confirm/select per constraint slot, inform_offer, inform per
/// request slot, inform_alternative, repeat, reqmore, restart, bye, hello,
/// inform_byname. Twenty actions for the desk ontology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    n_constraint: usize,
    n_request: usize,
}

impl ActionSpace {
    pub fn new(ontology: &Ontology) -> Self {
        ActionSpace { n_constraint: ontology.n_constraint(), n_request: ontology.n_request() }
    }

    pub fn len(&self) -> usize {
        3 * self.n_constraint + self.n_request + 8
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn decode(&self, index: usize) -> Result<SystemAction> {
        let c = self.n_constraint;
        let r = self.n_request;
        let tail = [
            SystemAction::InformAlternative,
            SystemAction::Repeat,
            SystemAction::Reqmore,
            SystemAction::Restart,
            SystemAction::Bye,
            SystemAction::Hello,
            SystemAction::InformByName,
        ];
        let action = match index {
            i if i < c => SystemAction::Request(i),
            i if i < 2 * c => SystemAction::Confirm(i - c),
            i if i < 3 * c => SystemAction::Select(i - 2 * c),
            i if i == 3 * c => SystemAction::InformOffer,
            i if i < 3 * c + 1 + r => SystemAction::InformRequested(i - 3 * c - 1),
            i if i < self.len() => tail[i - 3 * c - 1 - r],
            _ => {
                return Err(Error::OutOfRange(format!(
                    "system action index {index} (have {})",
                    self.len()
                )))
            }
        };
        Ok(action)
    }

    pub fn index(&self, action: SystemAction) -> usize {
        let c = self.n_constraint;
        let base = 3 * c + 1 + self.n_request;
        match action {
            SystemAction::Request(s) => s,
            SystemAction::Confirm(s) => c + s,
            SystemAction::Select(s) => 2 * c + s,
            SystemAction::InformOffer => 3 * c,
            SystemAction::InformRequested(r) => 3 * c + 1 + r,
            SystemAction::InformAlternative => base,
            SystemAction::Repeat => base + 1,
            SystemAction::Reqmore => base + 2,
            SystemAction::Restart => base + 3,
            SystemAction::Bye => base + 4,
            SystemAction::Hello => base + 5,
            SystemAction::InformByName => base + 6,
        }
    }

    pub fn name(&self, action: SystemAction, ontology: &Ontology) -> String {
        match action {
            SystemAction::Request(s) => format!("request_{}", ontology.constraint_slots[s].name),
            SystemAction::Confirm(s) => format!("confirm_{}", ontology.constraint_slots[s].name),
            SystemAction::Select(s) => format!("select_{}", ontology.constraint_slots[s].name),
            SystemAction::InformOffer => "inform_offer".into(),
            SystemAction::InformRequested(r) => format!("inform_{}", ontology.request_slots[r]),
            SystemAction::InformAlternative => "inform_alternative".into(),
            SystemAction::Repeat => "repeat".into(),
            SystemAction::Reqmore => "reqmore".into(),
            SystemAction::Restart => "restart".into(),
            SystemAction::Bye => "bye".into(),
            SystemAction::Hello => "hello".into(),
            SystemAction::InformByName => "inform_byname".into(),
        }
    }

    pub fn from_name(&self, name: &str, ontology: &Ontology) -> Option<SystemAction> {
        (0..self.len())
            .map(|i| self.decode(i).expect("in range"))
            .find(|&a| self.name(a, ontology) == name)
    }
}

/// A venue offer (or a claim that none exists) together with the constraint
/// values the system assumed when searching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offer {
    pub venue: Option<usize>,
    pub assumed: Vec<Option<usize>>,
}

/// A concrete system act: the summary action plus the arguments the
/// dialogue manager filled in from its belief.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemAct {
    pub action: SystemAction,
    pub index: usize,
    /// confirm: `[value]`; select: `[first, second]`.
    pub values: Vec<usize>,
    /// Offers, alternatives and inform_byname.
    pub offer: Option<Offer>,
    /// inform_requested target venue.
    pub venue: Option<usize>,
}

impl SystemAct {
    pub fn plain(space: &ActionSpace, action: SystemAction) -> Self {
        SystemAct { action, index: space.index(action), values: Vec::new(), offer: None, venue: None }
    }

    /// `confirm_food(food=chinese)`, `inform_offer(venue=venue_3,food=thai,area=north)`, ...
    pub fn render(&self, space: &ActionSpace, ontology: &Ontology) -> String {
        let mut args: Vec<String> = Vec::new();
        let slot_name = |s: usize| ontology.constraint_slots[s].name.as_str();
        match self.action {
            SystemAction::Confirm(s) | SystemAction::Select(s) => {
                for &v in &self.values {
                    args.push(format!("{}={}", slot_name(s), ontology.constraint_slots[s].values[v]));
                }
            }
            _ => {}
        }
        if let Some(offer) = &self.offer {
            let venue = offer.venue.map_or(NO_VENUE, |v| ontology.venues[v].name.as_str());
            args.push(format!("venue={venue}"));
            for (s, assumed) in offer.assumed.iter().enumerate() {
                if let Some(v) = assumed {
                    args.push(format!("{}={}", slot_name(s), ontology.constraint_slots[s].values[*v]));
                }
            }
        } else if let SystemAction::InformRequested(_) = self.action {
            let venue = self.venue.map_or(NO_VENUE, |v| ontology.venues[v].name.as_str());
            args.push(format!("venue={venue}"));
        }
        let name = space.name(self.action, ontology);
        if args.is_empty() {
            name
        } else {
            format!("{name}({})", args.join(","))
        }
    }

    pub fn parse(text: &str, space: &ActionSpace, ontology: &Ontology) -> Result<Self> {
        let (name, args) = split_call(text)?;
        let action = space
            .from_name(name, ontology)
            .ok_or_else(|| Error::Parse(format!("unknown system action {name:?}")))?;
        let mut act = SystemAct::plain(space, action);
        let is_offer = matches!(
            action,
            SystemAction::InformOffer | SystemAction::InformAlternative | SystemAction::InformByName
        );
        let mut venue_arg: Option<Option<usize>> = None;
        let mut assumed = vec![None; ontology.n_constraint()];
        for pair in args.into_iter().flat_map(|a| a.split(',')) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad argument {pair:?}")))?;
            if key == "venue" {
                let v = if value == NO_VENUE {
                    None
                } else {
                    Some(ontology.venue_index(value).ok_or_else(|| {
                        Error::Parse(format!("unknown venue {value:?}"))
                    })?)
                };
                venue_arg = Some(v);
                continue;
            }
            let s = ontology
                .constraint_index(key)
                .ok_or_else(|| Error::Parse(format!("unknown slot {key:?}")))?;
            let v = value_index(ontology, s, value)?;
            if is_offer {
                assumed[s] = Some(v);
            } else {
                act.values.push(v);
            }
        }
        if is_offer {
            act.offer = Some(Offer { venue: venue_arg.flatten(), assumed });
        } else if let SystemAction::InformRequested(_) = action {
            act.venue = venue_arg.flatten();
        }
        Ok(act)
    }
}

impl fmt::Display for ActType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
