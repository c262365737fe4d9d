//! Equilibrium notions: which messages players may send, how coarse
//! deviations are, what the mediator observes, payments and message costs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Deserialize;

use crate::error::ConfigError;
use crate::game::{GameTree, InfosetId};

/// A report sent to the mediator: nothing, or a claimed infoset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Message {
    Bot,
    Info(InfosetId),
}

impl Message {
    pub fn label(&self, tree: &GameTree) -> String {
        match self {
            Message::Bot => "bot".to_string(),
            Message::Info(i) => tree.infoset(*i).name.clone(),
        }
    }

    fn parse(tree: &GameTree, s: &str) -> Option<Message> {
        if s == "bot" {
            Some(Message::Bot)
        } else {
            tree.infoset_by_name(s).map(Message::Info)
        }
    }
}

/// Allowed message set S_I for every infoset I.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageFamily {
    pub sets: Vec<BTreeSet<Message>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Communication,
    FullCertification,
}

pub fn default_family(tree: &GameTree, kind: FamilyKind) -> MessageFamily {
    let sets = (0..tree.infosets().len())
        .map(|i| {
            let mut s = BTreeSet::from([Message::Bot, Message::Info(i)]);
            if kind == FamilyKind::Communication {
                let info = tree.infoset(i);
                let layer = tree.node(info.nodes[0]).layer;
                s.extend(tree.infosets_in_layer(info.player, layer).into_iter().map(Message::Info));
            }
            s
        })
        .collect();
    MessageFamily { sets }
}

impl MessageFamily {
    /// Checks that S_I contains ⊥ and I and otherwise only infosets of the same
    /// player in I's layer.
    pub fn check(&self, tree: &GameTree) -> Result<(), ConfigError> {
        if self.sets.len() != tree.infosets().len() {
            return Err(ConfigError::Invalid("message family does not match the game".into()));
        }
        for (i, set) in self.sets.iter().enumerate() {
            let info = tree.infoset(i);
            if !set.contains(&Message::Bot) || !set.contains(&Message::Info(i)) {
                return Err(ConfigError::Invalid(format!(
                    "message set of {} must contain bot and {}",
                    info.name, info.name
                )));
            }
            let layer = tree.node(info.nodes[0]).layer;
            for m in set {
                if let Message::Info(j) = m {
                    let other = tree.infoset(*j);
                    if other.player != info.player || tree.node(other.nodes[0]).layer != layer {
                        return Err(ConfigError::Invalid(format!(
                            "message {} is not in the layer of {}",
                            other.name, info.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Outcome of the nested range check; `witness` is (I, I′, s) with
/// I ∈ S_I′ and s ∈ S_I \ S_I′.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NrcCheck {
    pub holds: bool,
    pub witness: Option<(InfosetId, InfosetId, Message)>,
}

pub fn check_nrc(family: &MessageFamily) -> NrcCheck {
    for (ip, set_ip) in family.sets.iter().enumerate() {
        for m in set_ip {
            let Message::Info(i) = *m else { continue };
            if let Some(s) = family.sets[i].iter().find(|s| !set_ip.contains(s)) {
                return NrcCheck { holds: false, witness: Some((i, ip, *s)) };
            }
        }
    }
    NrcCheck { holds: true, witness: None }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    Communication,
    FullCertification,
    /// Message sets by infoset name; `"bot"` denotes ⊥. Infosets left out get {⊥, I}.
    Custom(BTreeMap<String, Vec<String>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coarseness {
    None,
    /// A deviator must obey every recommendation she receives.
    ExInterim,
    /// A deviator may only opt out before the game starts.
    NormalForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MediatorInfo {
    FromMessages,
    /// The mediator sees chance outcomes and every acting player's true infoset.
    InformationAdvantage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NotionConfig {
    pub family: FamilySpec,
    pub coarseness: Coarseness,
    pub mediator_info: MediatorInfo,
    pub payments: Option<(f64, f64)>,
    /// Cost paid by the sender: infoset name -> message (`"bot"` or infoset name) -> cost.
    pub message_costs: BTreeMap<String, BTreeMap<String, f64>>,
}

pub const NOTION_NAMES: [&str; 8] = [
    "comm",
    "coarse-comm",
    "full-cert",
    "coarse-full-cert",
    "nf-coarse-full-cert",
    "persuasion",
    "coarse-persuasion",
    "nf-coarse-persuasion",
];

impl NotionConfig {
    fn base(family: FamilySpec, coarseness: Coarseness, mediator_info: MediatorInfo) -> Self {
        NotionConfig { family, coarseness, mediator_info, payments: None, message_costs: BTreeMap::new() }
    }

    pub fn named(name: &str) -> Result<Self, ConfigError> {
        use Coarseness as C;
        use FamilySpec as F;
        use MediatorInfo as M;
        let (f, c, m) = match name {
            "comm" => (F::Communication, C::None, M::FromMessages),
            "coarse-comm" => (F::Communication, C::ExInterim, M::FromMessages),
            "full-cert" => (F::FullCertification, C::None, M::FromMessages),
            "coarse-full-cert" => (F::FullCertification, C::ExInterim, M::FromMessages),
            "nf-coarse-full-cert" => (F::FullCertification, C::NormalForm, M::FromMessages),
            "persuasion" => (F::FullCertification, C::None, M::InformationAdvantage),
            "coarse-persuasion" => (F::FullCertification, C::ExInterim, M::InformationAdvantage),
            "nf-coarse-persuasion" => (F::FullCertification, C::NormalForm, M::InformationAdvantage),
            _ => return Err(ConfigError::UnknownNotion(name.to_string())),
        };
        Ok(Self::base(f, c, m))
    }

    pub fn with_payments(mut self, lower: f64, upper: f64) -> Self {
        self.payments = Some((lower, upper));
        self
    }

    /// Reads the JSON form
    /// `{"notion", "coarse", "info", "payments", "costs", "family"}`; every key
    /// is optional and `notion` may be any named notion or `custom`.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            notion: Option<String>,
            coarse: Option<String>,
            info: Option<String>,
            payments: Option<(f64, f64)>,
            costs: Option<BTreeMap<String, BTreeMap<String, f64>>>,
            family: Option<BTreeMap<String, Vec<String>>>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        let mut cfg = match raw.notion.as_deref() {
            None => Self::named("comm")?,
            Some("custom") => {
                let family = raw
                    .family
                    .clone()
                    .ok_or_else(|| ConfigError::Invalid("custom notion needs a family".into()))?;
                Self::base(FamilySpec::Custom(family), Coarseness::None, MediatorInfo::FromMessages)
            }
            Some(name) => Self::named(name)?,
        };
        if raw.family.is_some() && !matches!(cfg.family, FamilySpec::Custom(_)) {
            return Err(ConfigError::Invalid("family is only allowed with the custom notion".into()));
        }
        if let Some(c) = raw.coarse {
            cfg.coarseness = match c.as_str() {
                "none" => Coarseness::None,
                "interim" => Coarseness::ExInterim,
                "normal-form" => Coarseness::NormalForm,
                other => return Err(ConfigError::Invalid(format!("unknown coarseness {other}"))),
            };
        }
        if let Some(i) = raw.info {
            cfg.mediator_info = match i.as_str() {
                "messages" => MediatorInfo::FromMessages,
                "advantage" => MediatorInfo::InformationAdvantage,
                other => return Err(ConfigError::Invalid(format!("unknown mediator info {other}"))),
            };
        }
        cfg.payments = raw.payments;
        cfg.message_costs = raw.costs.unwrap_or_default();
        cfg.check_values()?;
        Ok(cfg)
    }

    fn check_values(&self) -> Result<(), ConfigError> {
        if let Some((l, u)) = self.payments {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(ConfigError::Invalid(format!("payment range [{l}, {u}] is invalid")));
            }
        }
        for (info, costs) in &self.message_costs {
            for (m, c) in costs {
                if !c.is_finite() || *c < 0.0 {
                    return Err(ConfigError::Invalid(format!("cost of {m} at {info} must be finite and >= 0")));
                }
            }
        }
        Ok(())
    }

    /// Resolves names against a normalized tree.
    pub fn resolve(&self, tree: &GameTree) -> Result<ResolvedNotion, ConfigError> {
        self.check_values()?;
        let family = match (&self.family, self.mediator_info) {
            // With an information advantage reports carry nothing new.
            (_, MediatorInfo::InformationAdvantage) => default_family(tree, FamilyKind::FullCertification),
            (FamilySpec::Communication, _) => default_family(tree, FamilyKind::Communication),
            (FamilySpec::FullCertification, _) => default_family(tree, FamilyKind::FullCertification),
            (FamilySpec::Custom(sets), _) => {
                let mut family = default_family(tree, FamilyKind::FullCertification);
                for (name, msgs) in sets {
                    let i = tree.infoset_by_name(name).ok_or_else(|| ConfigError::UnknownInfoset(name.clone()))?;
                    let mut set = BTreeSet::from([Message::Bot, Message::Info(i)]);
                    for m in msgs {
                        set.insert(Message::parse(tree, m).ok_or_else(|| ConfigError::UnknownMessage {
                            infoset: name.clone(),
                            message: m.clone(),
                        })?);
                    }
                    family.sets[i] = set;
                }
                family.check(tree)?;
                family
            }
        };
        let mut costs = BTreeMap::new();
        for (name, per_message) in &self.message_costs {
            let i = tree.infoset_by_name(name).ok_or_else(|| ConfigError::UnknownInfoset(name.clone()))?;
            for (m, c) in per_message {
                let msg = Message::parse(tree, m).ok_or_else(|| ConfigError::UnknownMessage {
                    infoset: name.clone(),
                    message: m.clone(),
                })?;
                costs.insert((i, msg), *c);
            }
        }
        Ok(ResolvedNotion {
            family,
            coarseness: self.coarseness,
            mediator_info: self.mediator_info,
            payments: self.payments,
            costs,
        })
    }
}

impl fmt::Display for NotionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match &self.family {
            FamilySpec::Communication => "communication",
            FamilySpec::FullCertification => "full certification",
            FamilySpec::Custom(_) => "custom",
        };
        write!(f, "{family}, coarseness {:?}, mediator info {:?}", self.coarseness, self.mediator_info)?;
        if let Some((l, u)) = self.payments {
            write!(f, ", payments [{l}, {u}]")?;
        }
        Ok(())
    }
}

/// A notion bound to a specific tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedNotion {
    pub family: MessageFamily,
    pub coarseness: Coarseness,
    pub mediator_info: MediatorInfo,
    pub payments: Option<(f64, f64)>,
    pub costs: BTreeMap<(InfosetId, Message), f64>,
}

impl ResolvedNotion {
    pub fn cost(&self, infoset: InfosetId, message: Message) -> f64 {
        self.costs.get(&(infoset, message)).copied().unwrap_or(0.0)
    }
}

/// The mediator's objective as weights on the players' utilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Welfare,
    /// Zero-based player index.
    Player(usize),
    Weights(Vec<f64>),
}

impl Objective {
    pub fn weights(&self, players: usize) -> Result<Vec<f64>, ConfigError> {
        match self {
            Objective::Welfare => Ok(vec![1.0; players]),
            Objective::Player(p) if *p < players => {
                let mut w = vec![0.0; players];
                w[*p] = 1.0;
                Ok(w)
            }
            Objective::Player(p) => Err(ConfigError::Invalid(format!("no player {}", p + 1))),
            Objective::Weights(w) if w.len() == players && w.iter().all(|x| x.is_finite()) => Ok(w.clone()),
            Objective::Weights(w) => {
                Err(ConfigError::Invalid(format!("expected {players} finite weights, got {}", w.len())))
            }
        }
    }
}
