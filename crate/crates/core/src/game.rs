//! Extensive-form game trees.
//!
//! A [`GameTree`] is an immutable, BFS-ordered array of nodes. Node 0 is the
//! root. Trees are produced by [`GameBuilder`], which only checks that the
//! node array forms a tree; the game-theoretic invariants (perfect recall,
//! timeability, chance distributions) are checked by [`validate`] and reported
//! as data.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use crate::error::GameError;

pub type NodeId = usize;
pub type InfosetId = usize;

/// Label of the single action of an inserted dummy node.
pub const DUMMY_ACTION: &str = "·";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    /// Zero-based player index.
    Player(usize),
    Chance,
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub parent: Option<NodeId>,
    /// Index of this node among its parent's children (= action index).
    pub parent_action: Option<usize>,
    pub incoming_action: Option<String>,
    pub owner: Owner,
    pub infoset: Option<InfosetId>,
    /// Action labels as declared at this node (outcome labels for chance).
    pub actions: Vec<String>,
    pub chance_probs: Vec<f64>,
    pub utilities: Vec<f64>,
    pub children: Vec<NodeId>,
    pub layer: usize,
}

impl Node {
    pub fn is_terminal(&self) -> bool {
        self.owner == Owner::Terminal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infoset {
    pub name: String,
    pub player: usize,
    pub nodes: Vec<NodeId>,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTree {
    player_count: usize,
    nodes: Vec<Node>,
    infosets: Vec<Infoset>,
}

/// A sequence of one player: empty, or identified by its last infoset-action pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeqKind {
    Empty,
    Pair(InfosetId, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequenceId {
    pub player: usize,
    pub kind: SeqKind,
}

impl GameTree {
    pub fn player_count(&self) -> usize {
        self.player_count
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset(&self, id: InfosetId) -> &Infoset {
        &self.infosets[id]
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_terminal()).map(|(i, _)| i)
    }

    pub fn infoset_by_name(&self, name: &str) -> Option<InfosetId> {
        self.infosets.iter().position(|i| i.name == name)
    }

    /// Maximum number of children of any node.
    pub fn max_branching(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0)
    }

    /// Depth of the tree (largest layer of any node).
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.layer).max().unwrap_or(0)
    }

    /// Probability that chance plays towards `node`.
    pub fn chance_reach(&self, node: NodeId) -> f64 {
        let mut p = 1.0;
        let mut cur = node;
        while let Some(parent) = self.nodes[cur].parent {
            let pn = &self.nodes[parent];
            if pn.owner == Owner::Chance {
                p *= pn.chance_probs[self.nodes[cur].parent_action.unwrap()];
            }
            cur = parent;
        }
        p
    }

    /// Total number of sequences over all players (including each empty sequence).
    pub fn sequence_count(&self) -> usize {
        self.player_count + self.infosets.iter().map(|i| i.actions.len()).sum::<usize>()
    }

    /// Infosets of `player` that sit in `layer`.
    pub fn infosets_in_layer(&self, player: usize, layer: usize) -> Vec<InfosetId> {
        self.infosets
            .iter()
            .enumerate()
            .filter(|(_, i)| i.player == player && self.nodes[i.nodes[0]].layer == layer)
            .map(|(id, _)| id)
            .collect()
    }

    /// Sequence σ(I) of the player acting at `infoset`, read off its first node.
    pub fn infoset_sequence(&self, infoset: InfosetId) -> SequenceId {
        let info = &self.infosets[infoset];
        sequence_of(self, info.nodes[0], info.player)
    }
}

/// The player's sequence σᵢ(h): her last infoset-action pair strictly above `node`.
pub fn sequence_of(tree: &GameTree, node: NodeId, player: usize) -> SequenceId {
    let mut cur = node;
    while let Some(parent) = tree.nodes[cur].parent {
        let pn = &tree.nodes[parent];
        if pn.owner == Owner::Player(player) {
            let action = tree.nodes[cur].parent_action.unwrap();
            return SequenceId { player, kind: SeqKind::Pair(pn.infoset.unwrap(), action) };
        }
        cur = parent;
    }
    SequenceId { player, kind: SeqKind::Empty }
}

/// Per-player `(min, max)` of terminal utilities.
pub fn reward_range(tree: &GameTree) -> Vec<(f64, f64)> {
    (0..tree.player_count)
        .map(|p| {
            tree.terminals().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
                let u = tree.nodes[z].utilities[p];
                (lo.min(u), hi.max(u))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InfosetOwnerMismatch { infoset: String, node: String },
    InfosetActionMismatch { infoset: String, node: String },
    PerfectRecall { infoset: String, first: String, second: String },
    ChanceSum { node: String, sum: f64 },
    UtilityArity { node: String, found: usize },
    NonFinite { node: String },
    InfosetSpansLayers { infoset: String },
    MixedLayerOwners { layer: usize },
}

impl Violation {
    /// Timing violations are repairable by [`normalize_turn_order`].
    pub fn is_timing(&self) -> bool {
        matches!(self, Violation::InfosetSpansLayers { .. } | Violation::MixedLayerOwners { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InfosetOwnerMismatch { infoset, node } => {
                write!(f, "infoset {infoset}: node {node} has a different owner")
            }
            Violation::InfosetActionMismatch { infoset, node } => {
                write!(f, "infoset {infoset}: node {node} has a different action set")
            }
            Violation::PerfectRecall { infoset, first, second } => write!(
                f,
                "perfect recall: infoset {infoset} nodes {first} and {second} have different sequences"
            ),
            Violation::ChanceSum { node, sum } => {
                write!(f, "chance node {node}: probabilities sum to {sum}")
            }
            Violation::UtilityArity { node, found } => {
                write!(f, "terminal {node}: {found} utilities")
            }
            Violation::NonFinite { node } => write!(f, "node {node}: non-finite number"),
            Violation::InfosetSpansLayers { infoset } => {
                write!(f, "timeability: infoset {infoset} spans several layers")
            }
            Violation::MixedLayerOwners { layer } => {
                write!(f, "turn order: layer {layer} has several owners")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// No violations other than timing ones.
    pub fn is_valid(&self) -> bool {
        self.violations.iter().all(Violation::is_timing)
    }

    pub fn is_normalized(&self) -> bool {
        !self.violations.iter().any(Violation::is_timing)
    }

    pub fn has_perfect_recall(&self) -> bool {
        !self.violations.iter().any(|v| matches!(v, Violation::PerfectRecall { .. }))
    }
}

pub fn validate(tree: &GameTree) -> ValidationReport {
    let mut violations = Vec::new();
    for node in &tree.nodes {
        match node.owner {
            Owner::Chance => {
                let sum: f64 = node.chance_probs.iter().sum();
                if node.chance_probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    violations.push(Violation::NonFinite { node: node.name.clone() });
                } else if (sum - 1.0).abs() > 1e-12 {
                    violations.push(Violation::ChanceSum { node: node.name.clone(), sum });
                }
            }
            Owner::Terminal => {
                if node.utilities.len() != tree.player_count {
                    violations.push(Violation::UtilityArity {
                        node: node.name.clone(),
                        found: node.utilities.len(),
                    });
                }
                if node.utilities.iter().any(|u| !u.is_finite()) {
                    violations.push(Violation::NonFinite { node: node.name.clone() });
                }
            }
            Owner::Player(_) => {}
        }
    }
    for info in &tree.infosets {
        let first = &tree.nodes[info.nodes[0]];
        for &h in &info.nodes {
            let n = &tree.nodes[h];
            if n.owner != Owner::Player(info.player) {
                violations.push(Violation::InfosetOwnerMismatch {
                    infoset: info.name.clone(),
                    node: n.name.clone(),
                });
            }
            if n.actions != info.actions {
                violations.push(Violation::InfosetActionMismatch {
                    infoset: info.name.clone(),
                    node: n.name.clone(),
                });
            }
        }
        let seq = sequence_of(tree, info.nodes[0], info.player);
        if let Some(&other) =
            info.nodes.iter().find(|&&h| sequence_of(tree, h, info.player) != seq)
        {
            violations.push(Violation::PerfectRecall {
                infoset: info.name.clone(),
                first: first.name.clone(),
                second: tree.nodes[other].name.clone(),
            });
        }
        if info.nodes.iter().any(|&h| tree.nodes[h].layer != first.layer) {
            violations.push(Violation::InfosetSpansLayers { infoset: info.name.clone() });
        }
    }
    let mut layer_owner: BTreeMap<usize, Owner> = BTreeMap::new();
    let mut mixed = std::collections::BTreeSet::new();
    for node in tree.nodes.iter().filter(|n| !n.is_terminal()) {
        match layer_owner.get(&node.layer) {
            Some(o) if *o != node.owner => {
                mixed.insert(node.layer);
            }
            Some(_) => {}
            None => {
                layer_owner.insert(node.layer, node.owner);
            }
        }
    }
    violations.extend(mixed.into_iter().map(|layer| Violation::MixedLayerOwners { layer }));
    ValidationReport { violations }
}

/// Incremental construction of a [`GameTree`].
///
/// Nodes may be added in any order as long as parents come first. `build`
/// renumbers everything in BFS order with children in action order.
#[derive(Debug, Clone)]
pub struct GameBuilder {
    player_count: usize,
    nodes: Vec<Draft>,
    names: HashMap<String, usize>,
    infosets: Vec<(String, usize, Vec<String>)>,
    infoset_names: HashMap<String, usize>,
}

#[derive(Debug, Clone)]
struct Draft {
    name: String,
    parent: Option<(usize, String)>,
    owner: Owner,
    infoset: Option<usize>,
    actions: Vec<String>,
    chance_probs: Vec<f64>,
    utilities: Vec<f64>,
    children: Vec<Option<usize>>,
}

impl GameBuilder {
    pub fn new(player_count: usize) -> Self {
        GameBuilder {
            player_count,
            nodes: Vec::new(),
            names: HashMap::new(),
            infosets: Vec::new(),
            infoset_names: HashMap::new(),
        }
    }

    pub fn player_count(&self) -> usize {
        self.player_count
    }

    fn push(&mut self, draft: Draft) -> Result<usize, GameError> {
        if self.names.contains_key(&draft.name) {
            return Err(GameError::DuplicateNode(draft.name));
        }
        let id = self.nodes.len();
        if let Some((parent, action)) = &draft.parent {
            let p = self.nodes.get_mut(*parent).ok_or(GameError::UnknownNode(parent.to_string()))?;
            let slot = p
                .actions
                .iter()
                .position(|a| a == action)
                .ok_or_else(|| GameError::UnknownAction { node: p.name.clone(), action: action.clone() })?;
            if p.children[slot].is_some() {
                return Err(GameError::DuplicateChild { node: p.name.clone(), action: action.clone() });
            }
            p.children[slot] = Some(id);
        } else if !self.nodes.is_empty() && self.nodes.iter().any(|n| n.parent.is_none()) {
            return Err(GameError::MultipleRoots);
        }
        self.names.insert(draft.name.clone(), id);
        self.nodes.push(draft);
        Ok(id)
    }

    /// Id of a previously added node.
    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }

    pub fn chance(
        &mut self,
        name: impl Into<String>,
        parent: Option<(usize, &str)>,
        outcomes: &[(&str, f64)],
    ) -> Result<usize, GameError> {
        let actions: Vec<String> = outcomes.iter().map(|(a, _)| a.to_string()).collect();
        self.check_labels(&actions)?;
        self.push(Draft {
            name: name.into(),
            parent: parent.map(|(p, a)| (p, a.to_string())),
            owner: Owner::Chance,
            infoset: None,
            children: vec![None; actions.len()],
            actions,
            chance_probs: outcomes.iter().map(|(_, p)| *p).collect(),
            utilities: Vec::new(),
        })
    }

    /// Adds a decision node for zero-based `player` in infoset `infoset`.
    pub fn player(
        &mut self,
        name: impl Into<String>,
        parent: Option<(usize, &str)>,
        player: usize,
        infoset: &str,
        actions: &[&str],
    ) -> Result<usize, GameError> {
        if player >= self.player_count {
            return Err(GameError::UnknownPlayer(player + 1));
        }
        let actions: Vec<String> = actions.iter().map(|a| a.to_string()).collect();
        self.check_labels(&actions)?;
        let iid = match self.infoset_names.get(infoset) {
            Some(&i) => i,
            None => {
                self.infosets.push((infoset.to_string(), player, actions.clone()));
                self.infoset_names.insert(infoset.to_string(), self.infosets.len() - 1);
                self.infosets.len() - 1
            }
        };
        self.push(Draft {
            name: name.into(),
            parent: parent.map(|(p, a)| (p, a.to_string())),
            owner: Owner::Player(player),
            infoset: Some(iid),
            children: vec![None; actions.len()],
            actions,
            chance_probs: Vec::new(),
            utilities: Vec::new(),
        })
    }

    pub fn terminal(
        &mut self,
        name: impl Into<String>,
        parent: Option<(usize, &str)>,
        utilities: &[f64],
    ) -> Result<usize, GameError> {
        self.push(Draft {
            name: name.into(),
            parent: parent.map(|(p, a)| (p, a.to_string())),
            owner: Owner::Terminal,
            infoset: None,
            actions: Vec::new(),
            chance_probs: Vec::new(),
            utilities: utilities.to_vec(),
            children: Vec::new(),
        })
    }

    fn check_labels(&self, actions: &[String]) -> Result<(), GameError> {
        if actions.is_empty() {
            return Err(GameError::NoActions);
        }
        for (i, a) in actions.iter().enumerate() {
            if actions[..i].contains(a) {
                return Err(GameError::DuplicateAction(a.clone()));
            }
        }
        Ok(())
    }

    pub fn build(self) -> Result<GameTree, GameError> {
        if self.player_count == 0 {
            return Err(GameError::NoPlayers);
        }
        let root = self
            .nodes
            .iter()
            .position(|n| n.parent.is_none())
            .ok_or(GameError::Empty)?;
        for n in &self.nodes {
            if let Some(i) = n.children.iter().position(Option::is_none) {
                return Err(GameError::MissingChild { node: n.name.clone(), action: n.actions[i].clone() });
            }
        }
        // BFS renumbering.
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        let mut queue = VecDeque::from([root]);
        while let Some(d) = queue.pop_front() {
            new_id[d] = order.len();
            order.push(d);
            queue.extend(self.nodes[d].children.iter().map(|c| c.unwrap()));
        }
        if order.len() != self.nodes.len() {
            return Err(GameError::Disconnected);
        }
        let mut infoset_new = vec![usize::MAX; self.infosets.len()];
        let mut infosets: Vec<Infoset> = Vec::new();
        let mut nodes: Vec<Node> = Vec::with_capacity(order.len());
        for &d in &order {
            let draft = &self.nodes[d];
            let (parent, parent_action, incoming, layer) = match &draft.parent {
                Some((p, a)) => {
                    let pid = new_id[*p];
                    let slot = self.nodes[*p].actions.iter().position(|x| x == a).unwrap();
                    (Some(pid), Some(slot), Some(a.clone()), nodes[pid].layer + 1)
                }
                None => (None, None, None, 0),
            };
            let infoset = draft.infoset.map(|old| {
                if infoset_new[old] == usize::MAX {
                    let (name, player, actions) = &self.infosets[old];
                    infoset_new[old] = infosets.len();
                    infosets.push(Infoset {
                        name: name.clone(),
                        player: *player,
                        nodes: Vec::new(),
                        actions: actions.clone(),
                    });
                }
                infoset_new[old]
            });
            if let Some(i) = infoset {
                infosets[i].nodes.push(nodes.len());
            }
            nodes.push(Node {
                name: draft.name.clone(),
                parent,
                parent_action,
                incoming_action: incoming,
                owner: draft.owner,
                infoset,
                actions: draft.actions.clone(),
                chance_probs: draft.chance_probs.clone(),
                utilities: draft.utilities.clone(),
                children: draft.children.iter().map(|c| new_id[c.unwrap()]).collect(),
                layer,
            });
        }
        Ok(GameTree { player_count: self.player_count, nodes, infosets })
    }
}

/// Inserts single-action dummy nodes so that every infoset lies in one layer
/// and every layer of non-terminal nodes has one owner.
///
/// Infosets and chance nodes are scheduled greedily into time slots; each
/// slot gets the owner of the lowest-numbered ready unit. Already-normalized
/// trees come back unchanged.
pub fn normalize_turn_order(tree: &GameTree) -> Result<GameTree, GameError> {
    let report = validate(tree);
    if let Some(v) = report.violations.iter().find(|v| !v.is_timing()) {
        return Err(GameError::Invalid(v.to_string()));
    }
    // Scheduling units: one per infoset, one per chance node.
    let mut unit_of = vec![usize::MAX; tree.len()];
    let mut units: Vec<(Owner, Vec<NodeId>)> = Vec::new();
    for (i, info) in tree.infosets.iter().enumerate() {
        for &h in &info.nodes {
            unit_of[h] = i;
        }
        units.push((Owner::Player(info.player), info.nodes.clone()));
    }
    for (h, n) in tree.nodes.iter().enumerate() {
        if n.owner == Owner::Chance {
            unit_of[h] = units.len();
            units.push((Owner::Chance, vec![h]));
        }
    }
    let mut time = vec![usize::MAX; units.len()];
    let mut slot_owner: Vec<Owner> = Vec::new();
    let mut remaining = units.len();
    while remaining > 0 {
        let t = slot_owner.len();
        let ready: Vec<usize> = (0..units.len())
            .filter(|&u| time[u] == usize::MAX)
            .filter(|&u| {
                units[u].1.iter().all(|&h| match tree.nodes[h].parent {
                    None => true,
                    Some(p) => time[unit_of[p]] < t,
                })
            })
            .collect();
        let lead = ready
            .iter()
            .min_by_key(|&&u| units[u].1.iter().min().copied())
            .copied()
            .ok_or(GameError::Untimeable)?;
        let owner = units[lead].0;
        for &u in ready.iter().filter(|&&u| units[u].0 == owner) {
            time[u] = t;
            remaining -= 1;
        }
        slot_owner.push(owner);
    }

    let mut b = GameBuilder::new(tree.player_count);
    // (player, slot, preceding own sequence in the new tree) -> dummy infoset name
    let mut dummy_infosets: HashMap<(usize, usize, Option<(String, usize)>), String> = HashMap::new();
    // Each stack entry carries every player's last (infoset name, action) above the node.
    let mut stack: Vec<(NodeId, Option<(usize, String)>, Vec<Option<(String, usize)>>, usize)> =
        vec![(tree.root(), None, vec![None; tree.player_count], 0)];
    while let Some((h, parent, mut seqs, next_slot)) = stack.pop() {
        let node = &tree.nodes[h];
        let target = if node.is_terminal() { next_slot } else { time[unit_of[h]] };
        let mut parent = parent;
        for slot in next_slot..target {
            let dname = format!("{}~{}", node.name, slot);
            let p = parent.as_ref().map(|(id, a)| (*id, a.as_str()));
            let id = match slot_owner[slot] {
                Owner::Chance => b.chance(dname, p, &[(DUMMY_ACTION, 1.0)])?,
                Owner::Player(pl) => {
                    let key = (pl, slot, seqs[pl].clone());
                    let count = dummy_infosets.len();
                    let iname = dummy_infosets
                        .entry(key)
                        .or_insert_with(|| format!("~d{slot}.{count}"))
                        .clone();
                    let id = b.player(dname, p, pl, &iname, &[DUMMY_ACTION])?;
                    seqs[pl] = Some((iname, 0));
                    id
                }
                Owner::Terminal => unreachable!(),
            };
            parent = Some((id, DUMMY_ACTION.to_string()));
        }
        let p = parent.as_ref().map(|(id, a)| (*id, a.as_str()));
        let id = match node.owner {
            Owner::Terminal => {
                b.terminal(node.name.clone(), p, &node.utilities)?;
                continue;
            }
            Owner::Chance => {
                let outcomes: Vec<(&str, f64)> = node
                    .actions
                    .iter()
                    .zip(&node.chance_probs)
                    .map(|(a, p)| (a.as_str(), *p))
                    .collect();
                b.chance(node.name.clone(), p, &outcomes)?
            }
            Owner::Player(pl) => {
                let info = &tree.infosets[node.infoset.unwrap()];
                let actions: Vec<&str> = node.actions.iter().map(String::as_str).collect();
                b.player(node.name.clone(), p, pl, &info.name, &actions)?
            }
        };
        for (a, &child) in node.children.iter().enumerate().rev() {
            let mut child_seqs = seqs.clone();
            if let Owner::Player(pl) = node.owner {
                child_seqs[pl] = Some((tree.infosets[node.infoset.unwrap()].name.clone(), a));
            }
            stack.push((child, Some((id, node.actions[a].clone())), child_seqs, target + 1));
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_imperfect_recall() -> GameTree {
        // P1 chooses l/r, then P1 again in one infoset spanning both branches.
        let mut b = GameBuilder::new(1);
        let r = b.player("r", None, 0, "A", &["l", "r"]).unwrap();
        let x = b.player("x", Some((r, "l")), 0, "B", &["a", "b"]).unwrap();
        let y = b.player("y", Some((r, "r")), 0, "B", &["a", "b"]).unwrap();
        for (n, p) in [("x1", x), ("y1", y)] {
            b.terminal(format!("{n}a"), Some((p, "a")), &[1.0]).unwrap();
            b.terminal(format!("{n}b"), Some((p, "b")), &[0.0]).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn single_terminal_is_valid() {
        let mut b = GameBuilder::new(2);
        b.terminal("z", None, &[0.0, 0.0]).unwrap();
        let t = b.build().unwrap();
        assert!(validate(&t).is_empty());
        assert_eq!(reward_range(&t), vec![(0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(normalize_turn_order(&t).unwrap(), t);
    }

    #[test]
    fn perfect_recall_violation_is_reported() {
        let t = tiny_imperfect_recall();
        let r = validate(&t);
        assert!(!r.has_perfect_recall());
        assert!(matches!(r.violations[0], Violation::PerfectRecall { .. }));
        assert!(normalize_turn_order(&t).is_err());
    }

    #[test]
    fn builder_rejects_structural_errors() {
        let mut b = GameBuilder::new(1);
        let r = b.player("r", None, 0, "A", &["l", "r"]).unwrap();
        assert!(matches!(b.terminal("r", Some((r, "l")), &[0.0]), Err(GameError::DuplicateNode(_))));
        assert!(matches!(
            b.terminal("z", Some((r, "m")), &[0.0]),
            Err(GameError::UnknownAction { .. })
        ));
        b.terminal("z", Some((r, "l")), &[0.0]).unwrap();
        assert!(matches!(b.build(), Err(GameError::MissingChild { .. })));
    }

    #[test]
    fn root_sequence_is_empty() {
        let t = tiny_imperfect_recall();
        for p in 0..t.player_count() {
            assert_eq!(sequence_of(&t, 0, p).kind, SeqKind::Empty);
        }
        assert_eq!(sequence_of(&t, 1, 0).kind, SeqKind::Pair(0, 0));
    }

    #[test]
    fn mixed_owner_layer_gets_dummies() {
        // Chance picks which player moves at layer 1.
        let mut b = GameBuilder::new(2);
        let c = b.chance("c", None, &[("a", 0.5), ("b", 0.5)]).unwrap();
        let p = b.player("p", Some((c, "a")), 0, "P", &["x", "y"]).unwrap();
        let q = b.player("q", Some((c, "b")), 1, "Q", &["x", "y"]).unwrap();
        for (n, id) in [("p", p), ("q", q)] {
            b.terminal(format!("{n}x"), Some((id, "x")), &[1.0, 0.0]).unwrap();
            b.terminal(format!("{n}y"), Some((id, "y")), &[0.0, 1.0]).unwrap();
        }
        let t = b.build().unwrap();
        assert!(!validate(&t).is_normalized());
        let n = normalize_turn_order(&t).unwrap();
        assert!(validate(&n).is_empty(), "{:?}", validate(&n));
        assert_eq!(n.len(), t.len() + 1);
        let dummy = n.nodes().iter().find(|x| x.actions == [DUMMY_ACTION]).unwrap();
        assert_eq!(dummy.owner, Owner::Player(0));
        assert_eq!(normalize_turn_order(&n).unwrap(), n);
    }

    #[test]
    fn cyclic_precedence_is_rejected() {
        // Infoset A precedes B on one branch and B precedes A on the other.
        let mut b = GameBuilder::new(2);
        let c = b.chance("c", None, &[("l", 0.5), ("r", 0.5)]).unwrap();
        let a1 = b.player("a1", Some((c, "l")), 0, "A", &["x"]).unwrap();
        let b1 = b.player("b1", Some((a1, "x")), 1, "B", &["x"]).unwrap();
        b.terminal("z1", Some((b1, "x")), &[0.0, 0.0]).unwrap();
        let b2 = b.player("b2", Some((c, "r")), 1, "B", &["x"]).unwrap();
        let a2 = b.player("a2", Some((b2, "x")), 0, "A", &["x"]).unwrap();
        b.terminal("z2", Some((a2, "x")), &[0.0, 0.0]).unwrap();
        let t = b.build().unwrap();
        assert!(matches!(normalize_turn_order(&t), Err(GameError::Untimeable)));
    }
}
