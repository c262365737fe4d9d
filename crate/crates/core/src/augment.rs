//! The single-deviator mediator-augmented game.
//!
//! Every base node is expanded into the stages REV (the acting player reports
//! an infoset or ⊥), REC (the mediator recommends an action for the reported
//! infoset) and ACT (the player moves). The state also records which player,
//! if any, has deviated and every player's transcript: the last reported
//! infoset and the action recommended there. Honest players' transcripts are
//! their true sequences. Decisions with a single legal choice get no node.

use std::collections::HashMap;

use crate::error::{GameError, SolveError};
use crate::game::{validate, GameBuilder, GameTree, InfosetId, NodeId, Owner, SeqKind};
use crate::notion::{check_nrc, Coarseness, MediatorInfo, Message, NotionConfig, NrcCheck, Objective, ResolvedNotion};

/// What the mediator has been told by one player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transcript {
    /// Last reported infoset and the recommendation received there.
    Seq(SeqKind),
    /// An infoset was reported this turn and no recommendation was made yet.
    Pending(InfosetId),
    /// The player sent ⊥ (at layer `at`, or opted out before the game when
    /// `at` is `None`); the mediator stops recommending.
    Tainted { prefix: SeqKind, at: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    OptOut,
    Rev,
    Rec,
    Act,
    Chance,
    Payment,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugOwner {
    /// Players are `0..n`, the mediator is agent `n`.
    Agent(usize),
    Chance,
    Terminal,
}

/// State of a play-through at a terminal, kept for attaching payments.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalContext {
    pub transcripts: Vec<Transcript>,
    pub chance_history: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugNode {
    pub base: NodeId,
    pub deviator: Option<usize>,
    pub stage: Stage,
    pub owner: AugOwner,
    pub infoset: Option<usize>,
    pub parent: Option<usize>,
    pub parent_action: Option<usize>,
    pub children: Vec<usize>,
    pub chance_labels: Vec<String>,
    pub chance_probs: Vec<f64>,
    /// Players' utilities followed by the mediator's.
    pub utilities: Vec<f64>,
    pub context: Option<TerminalContext>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugInfoset {
    pub agent: usize,
    pub name: String,
    pub stage: Stage,
    pub nodes: Vec<usize>,
    pub actions: Vec<String>,
    /// Action of the direct strategy: report truthfully, obey, stay in.
    /// `None` where the owner has already deviated.
    pub direct: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeReport {
    pub aug_nodes: usize,
    pub base_nodes: usize,
    pub sequences: usize,
    pub branching: usize,
    pub depth: usize,
    /// |Ĥ| / (|H| |Σ|)
    pub c_sigma: f64,
    /// |Ĥ| / (|H| B D)
    pub c_bd: f64,
}

#[derive(Debug, Clone)]
pub struct AugmentedGame {
    pub base: GameTree,
    pub notion: ResolvedNotion,
    pub nrc: NrcCheck,
    pub weights: Vec<f64>,
    pub nodes: Vec<AugNode>,
    pub infosets: Vec<AugInfoset>,
    pub terminals: Vec<usize>,
    /// Chance reach p̂ of every node.
    pub reach: Vec<f64>,
    pub size: SizeReport,
}

impl AugmentedGame {
    pub fn players(&self) -> usize {
        self.base.player_count()
    }

    pub fn mediator(&self) -> usize {
        self.base.player_count()
    }

    pub fn agent_count(&self) -> usize {
        self.base.player_count() + 1
    }

    pub fn agent_name(&self, agent: usize) -> String {
        if agent == self.mediator() {
            "mediator".to_string()
        } else {
            format!("player {}", agent + 1)
        }
    }

    pub fn infoset_by_name(&self, name: &str) -> Option<usize> {
        self.infosets.iter().position(|i| i.name == name)
    }

    /// Actions of the node's agent are the actions of its infoset.
    pub fn actions(&self, node: usize) -> &[String] {
        let n = &self.nodes[node];
        match n.infoset {
            Some(i) => &self.infosets[i].actions,
            None => &n.chance_labels,
        }
    }

    /// Γ̂ as an EFG-S game with the mediator as the last player.
    pub fn to_game_tree(&self) -> Result<GameTree, GameError> {
        let mut b = GameBuilder::new(self.agent_count());
        let mut stack = vec![0usize];
        let mut ids = vec![usize::MAX; self.nodes.len()];
        while let Some(v) = stack.pop() {
            let n = &self.nodes[v];
            let parent = n.parent.map(|p| (ids[p], self.actions(p)[n.parent_action.unwrap()].as_str()));
            let name = format!("h{v}");
            ids[v] = match n.owner {
                AugOwner::Terminal => b.terminal(name, parent, &n.utilities)?,
                AugOwner::Chance => {
                    let outcomes: Vec<(&str, f64)> =
                        n.chance_labels.iter().map(String::as_str).zip(n.chance_probs.iter().copied()).collect();
                    b.chance(name, parent, &outcomes)?
                }
                AugOwner::Agent(a) => {
                    let info = &self.infosets[n.infoset.unwrap()];
                    let actions: Vec<&str> = info.actions.iter().map(String::as_str).collect();
                    b.player(name, parent, a, &info.name, &actions)?
                }
            };
            stack.extend(n.children.iter().rev());
        }
        b.build()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum InfoKey {
    OptOut(usize),
    Player(Stage, InfosetId, Transcript),
    Rec(usize, Vec<Transcript>, Vec<(usize, usize)>),
    Pay(usize, bool, Vec<Transcript>, Vec<(usize, usize)>),
}

#[derive(Debug, Clone)]
struct State {
    base: NodeId,
    seqs: Vec<SeqKind>,
    transcripts: Vec<Transcript>,
    deviator: Option<usize>,
    costs: Vec<f64>,
    chance: Vec<(usize, usize)>,
    reach: f64,
}

struct Builder<'a> {
    tree: &'a GameTree,
    notion: &'a ResolvedNotion,
    weights: &'a [f64],
    nodes: Vec<AugNode>,
    reach: Vec<f64>,
    infosets: Vec<AugInfoset>,
    keys: HashMap<InfoKey, usize>,
}

type Link = Option<(usize, usize)>;

fn seq_label(tree: &GameTree, s: SeqKind) -> String {
    match s {
        SeqKind::Empty => "e".to_string(),
        SeqKind::Pair(i, a) => {
            let info = tree.infoset(i);
            format!("{}.{}", info.name, info.actions[a])
        }
    }
}

fn transcript_label(tree: &GameTree, t: &Transcript) -> String {
    match t {
        Transcript::Seq(s) => seq_label(tree, *s),
        Transcript::Pending(i) => format!("{}?", tree.infoset(*i).name),
        Transcript::Tainted { prefix, at } => match at {
            Some(t) => format!("{}!{t}", seq_label(tree, *prefix)),
            None => format!("{}!out", seq_label(tree, *prefix)),
        },
    }
}

fn joint_label(tree: &GameTree, ts: &[Transcript], chance: &[(usize, usize)]) -> String {
    let mut s: Vec<String> = ts.iter().map(|t| transcript_label(tree, t)).collect();
    if !chance.is_empty() {
        let c: Vec<String> = chance.iter().map(|(t, o)| format!("{t}:{o}")).collect();
        s.push(format!("c{}", c.join(",")));
    }
    s.join("|")
}

impl Builder<'_> {
    fn intern(&mut self, key: InfoKey, agent: usize, stage: Stage, actions: Vec<String>, direct: Option<usize>) -> usize {
        if let Some(&i) = self.keys.get(&key) {
            debug_assert_eq!(self.infosets[i].actions, actions);
            return i;
        }
        let tree = self.tree;
        let name = match &key {
            InfoKey::OptOut(j) => format!("p{}/optout", j + 1),
            InfoKey::Player(stage, i, t) => {
                let s = if *stage == Stage::Rev { "rev" } else { "act" };
                format!("p{}/{s}/{}/{}", agent + 1, tree.infoset(*i).name, transcript_label(tree, t))
            }
            InfoKey::Rec(slot, ts, ch) => format!("M/rec/t{slot}/{}", joint_label(tree, ts, ch)),
            InfoKey::Pay(i, dev, ts, ch) => {
                let d = if *dev { "dev" } else { "ok" };
                format!("M/pay/p{}/{d}/{}", i + 1, joint_label(tree, ts, ch))
            }
        };
        let id = self.infosets.len();
        self.infosets.push(AugInfoset { agent, name, stage, nodes: Vec::new(), actions, direct });
        self.keys.insert(key, id);
        id
    }

    fn push(&mut self, st: &State, stage: Stage, owner: AugOwner, infoset: Option<usize>, link: Link) -> usize {
        let id = self.nodes.len();
        if let Some(i) = infoset {
            self.infosets[i].nodes.push(id);
        }
        self.nodes.push(AugNode {
            base: st.base,
            deviator: st.deviator,
            stage,
            owner,
            infoset,
            parent: link.map(|l| l.0),
            parent_action: link.map(|l| l.1),
            children: Vec::new(),
            chance_labels: Vec::new(),
            chance_probs: Vec::new(),
            utilities: Vec::new(),
            context: None,
        });
        self.reach.push(st.reach);
        id
    }

    fn layer(&self, st: &State) -> usize {
        self.tree.node(st.base).layer
    }

    fn opt_out(&mut self, st: State, j: usize, link: Link) -> usize {
        if j == self.tree.player_count() {
            return self.visit(st, link);
        }
        // Opting out changes nothing for a player who never moves.
        if !self.tree.infosets().iter().any(|i| i.player == j) {
            return self.opt_out(st, j + 1, link);
        }
        let info = self.intern(InfoKey::OptOut(j), j, Stage::OptOut, vec!["in".into(), "out".into()], Some(0));
        let id = self.push(&st, Stage::OptOut, AugOwner::Agent(j), Some(info), link);
        let stay = self.opt_out(st.clone(), j + 1, Some((id, 0)));
        let mut out = st;
        out.deviator = Some(j);
        out.transcripts[j] = Transcript::Tainted { prefix: SeqKind::Empty, at: None };
        let leave = self.visit(out, Some((id, 1)));
        self.nodes[id].children = vec![stay, leave];
        id
    }

    fn visit(&mut self, st: State, link: Link) -> usize {
        let tree = self.tree;
        let node = tree.node(st.base);
        match node.owner {
            Owner::Terminal => self.terminal(st, link),
            Owner::Chance => {
                let children = node.children.clone();
                let probs = node.chance_probs.clone();
                if children.len() == 1 {
                    let mut next = st;
                    next.base = children[0];
                    return self.visit(next, link);
                }
                let id = self.push(&st, Stage::Chance, AugOwner::Chance, None, link);
                self.nodes[id].chance_labels = node.actions.clone();
                self.nodes[id].chance_probs = probs.clone();
                let layer = node.layer;
                let advantage = self.notion.mediator_info == MediatorInfo::InformationAdvantage;
                let mut kids = Vec::with_capacity(children.len());
                for (o, &c) in children.iter().enumerate() {
                    let mut next = st.clone();
                    next.base = c;
                    next.reach *= probs[o];
                    if advantage {
                        next.chance.push((layer, o));
                    }
                    kids.push(self.visit(next, Some((id, o))));
                }
                self.nodes[id].children = kids;
                id
            }
            Owner::Player(k) => self.reveal(st, k, link),
        }
    }

    fn terminal(&mut self, st: State, link: Link) -> usize {
        let u = &self.tree.node(st.base).utilities;
        let mut utilities: Vec<f64> = u.iter().zip(&st.costs).map(|(u, c)| u - c).collect();
        utilities.push(u.iter().zip(self.weights).map(|(u, w)| u * w).sum());
        let id = self.push(&st, Stage::Terminal, AugOwner::Terminal, None, link);
        self.nodes[id].utilities = utilities;
        self.nodes[id].context =
            Some(TerminalContext { transcripts: st.transcripts, chance_history: st.chance });
        id
    }

    fn reveal(&mut self, st: State, k: usize, link: Link) -> usize {
        let tree = self.tree;
        let infoset = tree.node(st.base).infoset.unwrap();
        let honest = st.deviator != Some(k);
        let truthful_possible = st.transcripts[k] == Transcript::Seq(st.seqs[k]);
        // Others are honest once someone deviated, and under normal-form
        // coarseness an obeying player has nothing to report.
        let fixed = st.deviator.is_some() || self.notion.coarseness == Coarseness::NormalForm;
        let choices: Vec<Message> = if fixed && honest {
            vec![Message::Info(infoset)]
        } else if self.notion.mediator_info == MediatorInfo::InformationAdvantage {
            // The mediator already knows the infoset; under coarseness ⊥ is
            // how a player declines the recommendation.
            match (truthful_possible, self.notion.coarseness) {
                (true, Coarseness::ExInterim) => vec![Message::Info(infoset), Message::Bot],
                (true, _) => vec![Message::Info(infoset)],
                (false, _) => vec![Message::Bot],
            }
        } else {
            self.notion.family.sets[infoset]
                .iter()
                .filter(|m| match (m, &st.transcripts[k]) {
                    (Message::Bot, _) => true,
                    (Message::Info(i), Transcript::Seq(s)) => tree.infoset_sequence(*i).kind == *s,
                    _ => false,
                })
                .copied()
                .collect()
        };
        let layer = self.layer(&st);
        let apply = |b: &mut Self, m: Message, link: Link| {
            let mut next = st.clone();
            next.costs[k] += b.notion.cost(infoset, m);
            if m != Message::Info(infoset) {
                next.deviator = Some(k);
            }
            match m {
                Message::Bot => {
                    if let Transcript::Seq(prefix) = next.transcripts[k] {
                        next.transcripts[k] = Transcript::Tainted { prefix, at: Some(layer) };
                    }
                }
                Message::Info(i) => next.transcripts[k] = Transcript::Pending(i),
            }
            b.recommend(next, k, link)
        };
        if choices.len() == 1 {
            return apply(self, choices[0], link);
        }
        let labels: Vec<String> = choices.iter().map(|m| m.label(tree)).collect();
        let direct = if honest { choices.iter().position(|m| *m == Message::Info(infoset)) } else { None };
        let key = InfoKey::Player(Stage::Rev, infoset, st.transcripts[k].clone());
        let info = self.intern(key, k, Stage::Rev, labels, direct);
        let id = self.push(&st, Stage::Rev, AugOwner::Agent(k), Some(info), link);
        let kids: Vec<usize> =
            choices.iter().enumerate().map(|(c, &m)| apply(self, m, Some((id, c)))).collect();
        self.nodes[id].children = kids;
        id
    }

    fn recommend(&mut self, st: State, k: usize, link: Link) -> usize {
        let Transcript::Pending(reported) = st.transcripts[k] else {
            return self.act(st, k, None, link);
        };
        let actions = self.tree.infoset(reported).actions.clone();
        let with = |b: &mut Self, a: usize, link: Link| {
            let mut next = st.clone();
            next.transcripts[k] = Transcript::Seq(SeqKind::Pair(reported, a));
            b.act(next, k, Some(actions[a].clone()), link)
        };
        if actions.len() == 1 {
            return with(self, 0, link);
        }
        let mediator = self.tree.player_count();
        let key = InfoKey::Rec(self.layer(&st), st.transcripts.clone(), st.chance.clone());
        let info = self.intern(key, mediator, Stage::Rec, actions.clone(), None);
        let id = self.push(&st, Stage::Rec, AugOwner::Agent(mediator), Some(info), link);
        let kids: Vec<usize> = (0..actions.len()).map(|a| with(self, a, Some((id, a)))).collect();
        self.nodes[id].children = kids;
        id
    }

    fn act(&mut self, st: State, k: usize, rec: Option<String>, link: Link) -> usize {
        let tree = self.tree;
        let node = tree.node(st.base);
        let infoset = node.infoset.unwrap();
        let n_actions = node.actions.len();
        let rec_idx = rec.as_ref().and_then(|r| node.actions.iter().position(|a| a == r));
        let all: Vec<usize> = (0..n_actions).collect();
        let allowed: Vec<usize> = match st.deviator {
            Some(d) if d != k => vec![rec_idx.expect("honest player receives a legal recommendation")],
            None => match self.notion.coarseness {
                Coarseness::None => all,
                _ => vec![rec_idx.expect("honest player receives a legal recommendation")],
            },
            Some(_) => match (self.notion.coarseness, rec_idx) {
                (Coarseness::ExInterim, Some(r)) => vec![r],
                _ => all,
            },
        };
        let apply = |b: &mut Self, a: usize, link: Link| {
            let mut next = st.clone();
            next.seqs[k] = SeqKind::Pair(infoset, a);
            if next.deviator.is_none() && Some(a) != rec_idx {
                next.deviator = Some(k);
            }
            next.base = node.children[a];
            b.visit(next, link)
        };
        if allowed.len() == 1 {
            return apply(self, allowed[0], link);
        }
        let direct = if st.deviator.is_none() { rec_idx } else { None };
        let key = InfoKey::Player(Stage::Act, infoset, st.transcripts[k].clone());
        let info = self.intern(key, k, Stage::Act, node.actions.clone(), direct);
        let id = self.push(&st, Stage::Act, AugOwner::Agent(k), Some(info), link);
        let kids: Vec<usize> = allowed.iter().map(|&a| apply(self, a, Some((id, a)))).collect();
        self.nodes[id].children = kids;
        id
    }
}

/// Builds Γ̂ for a validated tree. The tree is normalized to a fixed turn
/// order first; payments in `config` are attached with [`apply_payments`].
pub fn build_augmented(tree: &GameTree, config: &NotionConfig, objective: &Objective) -> Result<AugmentedGame, SolveError> {
    let base = crate::game::normalize_turn_order(tree)?;
    let notion = config.resolve(&base)?;
    let weights = objective.weights(base.player_count())?;
    let mut aug = build_resolved(base, notion, weights);
    if let Some((l, u)) = aug.notion.payments {
        aug = apply_payments(&aug, l, u);
    }
    Ok(aug)
}

fn build_resolved(base: GameTree, notion: ResolvedNotion, weights: Vec<f64>) -> AugmentedGame {
    let n = base.player_count();
    let st = State {
        base: base.root(),
        seqs: vec![SeqKind::Empty; n],
        transcripts: vec![Transcript::Seq(SeqKind::Empty); n],
        deviator: None,
        costs: vec![0.0; n],
        chance: Vec::new(),
        reach: 1.0,
    };
    let mut b = Builder {
        tree: &base,
        notion: &notion,
        weights: &weights,
        nodes: Vec::new(),
        reach: Vec::new(),
        infosets: Vec::new(),
        keys: HashMap::new(),
    };
    if notion.coarseness == Coarseness::NormalForm {
        b.opt_out(st, 0, None);
    } else {
        b.visit(st, None);
    }
    let (nodes, infosets, reach) = (b.nodes, b.infosets, b.reach);
    let terminals: Vec<usize> = (0..nodes.len()).filter(|&v| nodes[v].owner == AugOwner::Terminal).collect();
    let base_nodes = base.len();
    let sequences = base.sequence_count();
    let branching = base.max_branching().max(1);
    let depth = base.depth().max(1);
    let size = SizeReport {
        aug_nodes: nodes.len(),
        base_nodes,
        sequences,
        branching,
        depth,
        c_sigma: nodes.len() as f64 / (base_nodes * sequences) as f64,
        c_bd: nodes.len() as f64 / (base_nodes * branching * depth) as f64,
    };
    let nrc = check_nrc(&notion.family);
    AugmentedGame { base, notion, nrc, weights, nodes, infosets, terminals, reach, size }
}

/// Ends every play with a transfer: chance picks a player i* uniformly, the
/// mediator (knowing whether i* deviated) picks p ∈ {L, U}, and i* gains n·p
/// while the mediator loses n·p.
pub fn apply_payments(aug: &AugmentedGame, lower: f64, upper: f64) -> AugmentedGame {
    let mut out = aug.clone();
    out.notion.payments = Some((lower, upper));
    let n = aug.players();
    let mediator = aug.mediator();
    let scale = n as f64;
    let mut keys: HashMap<InfoKey, usize> = HashMap::new();
    let mut terminals = Vec::new();
    for &z in &aug.terminals {
        let ctx = aug.nodes[z].context.clone().expect("terminal context");
        let utilities = aug.nodes[z].utilities.clone();
        let template = AugNode {
            stage: Stage::Payment,
            children: Vec::new(),
            chance_labels: Vec::new(),
            chance_probs: Vec::new(),
            utilities: Vec::new(),
            context: None,
            ..aug.nodes[z].clone()
        };
        // With one player the chance node is skipped.
        let mut roots = Vec::new();
        if n > 1 {
            let node = &mut out.nodes[z];
            node.owner = AugOwner::Chance;
            node.stage = Stage::Payment;
            node.chance_labels = (1..=n).map(|i| format!("p{i}")).collect();
            node.chance_probs = vec![1.0 / scale; n];
            node.utilities.clear();
            node.context = None;
            for i in 0..n {
                let id = out.nodes.len();
                out.nodes.push(AugNode { parent: Some(z), parent_action: Some(i), ..template.clone() });
                out.reach.push(aug.reach[z] / scale);
                roots.push((i, id));
            }
            out.nodes[z].children = roots.iter().map(|r| r.1).collect();
        } else {
            roots.push((0, z));
            out.nodes[z].context = None;
            out.nodes[z].utilities.clear();
        }
        for (i, m) in roots {
            let key = InfoKey::Pay(i, aug.nodes[z].deviator == Some(i), ctx.transcripts.clone(), ctx.chance_history.clone());
            let info = match keys.get(&key) {
                Some(&id) => id,
                None => {
                    let d = if aug.nodes[z].deviator == Some(i) { "dev" } else { "ok" };
                    let name = format!("M/pay/p{}/{d}/{}", i + 1, joint_label(&aug.base, &ctx.transcripts, &ctx.chance_history));
                    out.infosets.push(AugInfoset {
                        agent: mediator,
                        name,
                        stage: Stage::Payment,
                        nodes: Vec::new(),
                        actions: vec!["L".into(), "U".into()],
                        direct: None,
                    });
                    keys.insert(key, out.infosets.len() - 1);
                    out.infosets.len() - 1
                }
            };
            out.infosets[info].nodes.push(m);
            let node = &mut out.nodes[m];
            node.owner = AugOwner::Agent(mediator);
            node.stage = Stage::Payment;
            node.infoset = Some(info);
            let mut kids = Vec::new();
            for (a, p) in [lower, upper].into_iter().enumerate() {
                let mut u = utilities.clone();
                u[i] += scale * p;
                u[mediator] -= scale * p;
                let id = out.nodes.len();
                out.nodes.push(AugNode {
                    stage: Stage::Terminal,
                    owner: AugOwner::Terminal,
                    infoset: None,
                    parent: Some(m),
                    parent_action: Some(a),
                    utilities: u,
                    ..template.clone()
                });
                out.reach.push(out.reach[m]);
                kids.push(id);
                terminals.push(id);
            }
            out.nodes[m].children = kids;
        }
    }
    out.terminals = terminals;
    out
}

/// Realization weight of the direct strategy of `player` at every node:
/// 1 if all of the player's choices above the node are direct, else 0.
pub fn direct_reach(aug: &AugmentedGame, player: usize) -> Vec<bool> {
    let mut ok = vec![true; aug.nodes.len()];
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let node = &aug.nodes[v];
        for (a, &c) in node.children.iter().enumerate() {
            let mut good = ok[v];
            if node.owner == AugOwner::Agent(player) {
                good &= aug.infosets[node.infoset.unwrap()].direct == Some(a);
            }
            ok[c] = good;
            stack.push(c);
        }
    }
    ok
}

/// Checks perfect recall of every agent of Γ̂ via the EFG-S conversion.
pub fn check_perfect_recall(aug: &AugmentedGame) -> Result<(), String> {
    let tree = aug.to_game_tree().map_err(|e| e.to_string())?;
    let report = validate(&tree);
    match report.violations.iter().find(|v| !v.is_timing()) {
        Some(v) => Err(v.to_string()),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{gen_appendix_c, gen_kuhn};
    use crate::notion::NOTION_NAMES;

    fn build(tree: &GameTree, notion: &str) -> AugmentedGame {
        build_augmented(tree, &NotionConfig::named(notion).unwrap(), &Objective::Welfare).unwrap()
    }

    #[test]
    fn single_terminal() {
        let mut b = GameBuilder::new(2);
        b.terminal("z", None, &[1.0, 2.0]).unwrap();
        let t = b.build().unwrap();
        for name in NOTION_NAMES {
            let aug = build(&t, name);
            assert_eq!(aug.terminals.len(), 1);
            assert_eq!(aug.nodes[aug.terminals[0]].utilities, vec![1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn honest_projection_is_a_bijection() {
        for tree in [gen_kuhn(), gen_appendix_c()] {
            for name in NOTION_NAMES {
                let aug = build(&tree, name);
                let mut seen = vec![0usize; aug.base.len()];
                for &z in &aug.terminals {
                    let node = &aug.nodes[z];
                    if node.deviator.is_none() {
                        seen[node.base] += 1;
                        let base = aug.base.node(node.base);
                        assert_eq!(&node.utilities[..2], &base.utilities[..]);
                        assert!((aug.reach[z] - aug.base.chance_reach(node.base)).abs() < 1e-15);
                    }
                }
                for z in aug.base.terminals() {
                    assert_eq!(seen[z], 1, "{name}");
                }
            }
        }
    }

    #[test]
    fn perfect_recall_and_direct_reach() {
        for tree in [gen_kuhn(), gen_appendix_c()] {
            for name in NOTION_NAMES {
                let aug = build(&tree, name);
                check_perfect_recall(&aug).unwrap_or_else(|e| panic!("{name}: {e}"));
                let all: Vec<Vec<bool>> = (0..aug.players()).map(|p| direct_reach(&aug, p)).collect();
                for &z in &aug.terminals {
                    let honest = aug.nodes[z].deviator.is_none();
                    assert_eq!(all.iter().all(|r| r[z]), honest, "{name}");
                }
            }
        }
    }

    #[test]
    fn comm_rev_choices_match_reports() {
        let k = gen_kuhn();
        let aug = build(&k, "comm");
        for info in aug.infosets.iter().filter(|i| i.stage == Stage::Rev && i.agent == 0) {
            let node = &aug.nodes[info.nodes[0]];
            let base_info = aug.base.node(node.base).infoset.unwrap();
            // P1's first layer has three infosets with the empty sequence: bot plus three cards.
            if aug.base.infoset_sequence(base_info).kind == SeqKind::Empty {
                assert_eq!(info.actions.len(), 4);
            }
        }
        let full = build(&k, "full-cert");
        assert!(full.infosets.iter().filter(|i| i.stage == Stage::Rev).all(|i| i.actions.len() == 2));
    }

    #[test]
    fn payments_attach_to_every_terminal() {
        let t = gen_appendix_c();
        let plain = build(&t, "full-cert");
        let paid = apply_payments(&plain, 0.0, 1.0);
        assert_eq!(paid.terminals.len(), plain.terminals.len() * 4);
        check_perfect_recall(&paid).unwrap();
        let total: f64 = paid.terminals.iter().map(|&z| paid.reach[z]).sum();
        let before: f64 = plain.terminals.iter().map(|&z| plain.reach[z]).sum();
        // Each play now ends in both an L and a U leaf.
        assert!((total - 2.0 * before).abs() < 1e-12);
    }

    #[test]
    fn size_constants() {
        for tree in [gen_kuhn(), gen_appendix_c()] {
            let comm = build(&tree, "comm");
            assert!(comm.size.c_sigma <= 4.0, "{:?}", comm.size);
            let full = build(&tree, "full-cert");
            assert!(full.size.c_bd <= 4.0, "{:?}", full.size);
        }
    }
}
