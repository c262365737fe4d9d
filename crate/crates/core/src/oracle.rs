//! Independent checks of solver output.
//!
//! Nothing here goes through `sequence_form` or `lp::build_program`: best
//! responses are computed by backward induction over Γ̂ directly, and the
//! enumerated program lists one incentive constraint per pure deviation
//! instead of dualizing.

use serde::Serialize;

use crate::augment::{AugOwner, AugmentedGame};
use crate::error::SolveError;
use crate::lp::{LinearProgram, MediatorPolicy, Sense, VarKind};
use crate::par::{self, Exec};

/// Pure strategies enumerated per player before giving up.
pub const ENUMERATION_BUDGET: usize = 100_000;

/// Per terminal: chance reach times mediator reach under `policy`.
fn mediator_weights(aug: &AugmentedGame, policy: &MediatorPolicy) -> Vec<f64> {
    let mut w = vec![0.0; aug.nodes.len()];
    w[0] = 1.0;
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let node = &aug.nodes[v];
        for (a, &c) in node.children.iter().enumerate() {
            w[c] = match node.owner {
                AugOwner::Chance => w[v] * node.chance_probs[a],
                AugOwner::Agent(m) if m == aug.mediator() => w[v] * policy.probs[node.infoset.unwrap()][a],
                _ => w[v],
            };
            stack.push(c);
        }
    }
    w
}

/// Whether each node is reached by the direct strategies of all players
/// except `skip` (pass `usize::MAX` to include everyone).
fn direct_flags(aug: &AugmentedGame, skip: usize) -> Vec<bool> {
    let mut ok = vec![true; aug.nodes.len()];
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let node = &aug.nodes[v];
        for (a, &c) in node.children.iter().enumerate() {
            ok[c] = ok[v]
                && match node.owner {
                    AugOwner::Agent(p) if p < aug.players() && p != skip => {
                        aug.infosets[node.infoset.unwrap()].direct == Some(a)
                    }
                    _ => true,
                };
            stack.push(c);
        }
    }
    ok
}

/// Player `j`'s decision structure in Γ̂: the last own (infoset, action) above
/// every node, and the infosets hanging below each own sequence.
struct OwnTree {
    /// Sequence ids: 0 is empty, then one per (infoset, action).
    seq_above: Vec<usize>,
    seq_of: Vec<Option<(usize, usize)>>,
    /// For each sequence, child infosets with their first sequence id.
    children: Vec<Vec<(usize, usize)>>,
    first_seq: std::collections::HashMap<usize, usize>,
}

fn own_tree(aug: &AugmentedGame, j: usize) -> OwnTree {
    let mut t = OwnTree {
        seq_above: vec![0; aug.nodes.len()],
        seq_of: vec![None],
        children: vec![Vec::new()],
        first_seq: Default::default(),
    };
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let node = &aug.nodes[v];
        let own = node.owner == AugOwner::Agent(j);
        if own {
            let info = node.infoset.unwrap();
            if !t.first_seq.contains_key(&info) {
                let first = t.seq_of.len();
                for a in 0..aug.infosets[info].actions.len() {
                    t.seq_of.push(Some((info, a)));
                    t.children.push(Vec::new());
                }
                t.first_seq.insert(info, first);
                t.children[t.seq_above[v]].push((info, first));
            }
        }
        for (a, &c) in node.children.iter().enumerate() {
            t.seq_above[c] = if own { t.first_seq[&node.infoset.unwrap()] + a } else { t.seq_above[v] };
            stack.push(c);
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerCheck {
    pub player: usize,
    pub direct: f64,
    pub best_response: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub players: Vec<PlayerCheck>,
    /// Mediator objective of the honest play under the policy.
    pub objective: f64,
    pub max_gain: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Expected utility of `player` when everyone is direct.
pub fn direct_value(aug: &AugmentedGame, policy: &MediatorPolicy, player: usize) -> f64 {
    let w = mediator_weights(aug, policy);
    let ok = direct_flags(aug, usize::MAX);
    aug.terminals.iter().filter(|&&z| ok[z]).map(|&z| w[z] * aug.nodes[z].utilities[player]).sum()
}

/// Value of the best deviation of `player` against the policy and the direct
/// strategies of everyone else.
pub fn best_response_value(aug: &AugmentedGame, policy: &MediatorPolicy, player: usize) -> f64 {
    let w = mediator_weights(aug, policy);
    best_response_with(aug, &w, player)
}

fn best_response_with(aug: &AugmentedGame, w: &[f64], player: usize) -> f64 {
    let others = direct_flags(aug, player);
    let t = own_tree(aug, player);
    let mut value = vec![0.0; t.seq_of.len()];
    for &z in &aug.terminals {
        if others[z] {
            value[t.seq_above[z]] += w[z] * aug.nodes[z].utilities[player];
        }
    }
    // Sequences were numbered in discovery order, so children come later.
    for s in (0..t.seq_of.len()).rev() {
        let mut extra = 0.0;
        for &(info, first) in &t.children[s] {
            let k = aug.infosets[info].actions.len();
            extra += (first..first + k).map(|q| value[q]).fold(f64::NEG_INFINITY, f64::max);
        }
        value[s] += extra;
    }
    value[0]
}

pub fn verify_equilibrium(aug: &AugmentedGame, policy: &MediatorPolicy, tol: f64) -> VerificationReport {
    verify_equilibrium_with(aug, policy, tol, Exec::Parallel)
}

pub fn verify_equilibrium_with(aug: &AugmentedGame, policy: &MediatorPolicy, tol: f64, exec: Exec) -> VerificationReport {
    let w = mediator_weights(aug, policy);
    let all = direct_flags(aug, usize::MAX);
    let honest = |p: usize| -> f64 {
        aug.terminals.iter().filter(|&&z| all[z]).map(|&z| w[z] * aug.nodes[z].utilities[p]).sum()
    };
    let players: Vec<usize> = (0..aug.players()).collect();
    let checks = par::map(exec, &players, |&j| {
        let direct = honest(j);
        let best = best_response_with(aug, &w, j);
        PlayerCheck { player: j + 1, direct, best_response: best, gain: best - direct }
    });
    let max_gain = checks.iter().map(|c| c.gain).fold(0.0, f64::max);
    VerificationReport {
        objective: honest(aug.mediator()),
        pass: max_gain <= tol,
        max_gain,
        tolerance: tol,
        players: checks,
    }
}

/// The mediator's program with the inner maximization replaced by one
/// constraint per pure deviation, i.e. per reduced pure strategy of a player
/// other than her direct strategy.
pub fn enumerate_deviation_lp(aug: &AugmentedGame) -> Result<LinearProgram, SolveError> {
    let n = aug.players();
    let mediator = own_tree(aug, aug.mediator());
    let mut lp = LinearProgram::new();
    for s in 0..mediator.seq_of.len() {
        lp.add_var(format!("xM_{s}"), VarKind::NonNegative, 0.0);
    }
    lp.x_m = 0..mediator.seq_of.len();
    // Flow constraints of the mediator, built from its own tree.
    lp.add_constraint("root".into(), vec![(0, 1.0)], Sense::Eq, 1.0);
    for (s, kids) in mediator.children.iter().enumerate() {
        for &(info, first) in kids {
            let k = aug.infosets[info].actions.len();
            let mut terms: Vec<(usize, f64)> = (first..first + k).map(|q| (q, 1.0)).collect();
            terms.push((s, -1.0));
            lp.add_constraint(format!("flow_{info}"), terms, Sense::Eq, 0.0);
        }
    }
    let all = direct_flags(aug, usize::MAX);
    for &z in &aug.terminals {
        if all[z] {
            lp.objective[mediator.seq_above[z]] += aug.reach[z] * aug.nodes[z].utilities[n];
        }
    }
    for j in 0..n {
        let t = own_tree(aug, j);
        let others = direct_flags(aug, j);
        let count = count_strategies(aug, &t, 0);
        if count > ENUMERATION_BUDGET as f64 {
            return Err(SolveError::BudgetExceeded(j + 1));
        }
        // Direct play of j at each terminal.
        let direct_j: Vec<bool> = {
            let own_direct = direct_flags_single(aug, j);
            aug.terminals.iter().map(|&z| own_direct[z]).collect()
        };
        let honest = direct_plays(aug, &t);
        let deviations = strategies(aug, &t, 0).into_iter().filter(|p| *p != honest);
        for (k, plays) in deviations.enumerate() {
            let mut row = vec![0.0; mediator.seq_of.len()];
            for (ti, &z) in aug.terminals.iter().enumerate() {
                if !others[z] {
                    continue;
                }
                let dev = if plays[t.seq_above[z]] { 1.0 } else { 0.0 };
                let dir = if direct_j[ti] { 1.0 } else { 0.0 };
                row[mediator.seq_above[z]] += aug.reach[z] * aug.nodes[z].utilities[j] * (dev - dir);
            }
            let terms: Vec<(usize, f64)> =
                row.into_iter().enumerate().filter(|(_, a)| *a != 0.0).collect();
            lp.add_constraint(format!("dev{}_{k}", j + 1), terms, Sense::Le, 0.0);
        }
    }
    Ok(lp)
}

/// The direct strategy of the owner of `t` as the set of sequences it plays.
fn direct_plays(aug: &AugmentedGame, t: &OwnTree) -> Vec<bool> {
    let mut plays = vec![false; t.seq_of.len()];
    plays[0] = true;
    let mut stack = vec![0usize];
    while let Some(s) = stack.pop() {
        for &(info, first) in &t.children[s] {
            if let Some(d) = aug.infosets[info].direct {
                plays[first + d] = true;
                stack.push(first + d);
            }
        }
    }
    plays
}

fn direct_flags_single(aug: &AugmentedGame, j: usize) -> Vec<bool> {
    let mut ok = vec![true; aug.nodes.len()];
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let node = &aug.nodes[v];
        for (a, &c) in node.children.iter().enumerate() {
            ok[c] = ok[v]
                && (node.owner != AugOwner::Agent(j) || aug.infosets[node.infoset.unwrap()].direct == Some(a));
            stack.push(c);
        }
    }
    ok
}

fn count_strategies(aug: &AugmentedGame, t: &OwnTree, s: usize) -> f64 {
    t.children[s]
        .iter()
        .map(|&(info, first)| {
            (first..first + aug.infosets[info].actions.len()).map(|q| count_strategies(aug, t, q)).sum::<f64>()
        })
        .product()
}

/// Reduced pure strategies below sequence `s`, each as the set of sequences it plays.
fn strategies(aug: &AugmentedGame, t: &OwnTree, s: usize) -> Vec<Vec<bool>> {
    let mut acc = vec![{
        let mut v = vec![false; t.seq_of.len()];
        v[s] = true;
        v
    }];
    for &(info, first) in &t.children[s] {
        let mut options = Vec::new();
        for q in first..first + aug.infosets[info].actions.len() {
            options.extend(strategies(aug, t, q));
        }
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for a in &acc {
            for o in &options {
                next.push(a.iter().zip(o).map(|(x, y)| *x || *y).collect());
            }
        }
        acc = next;
    }
    acc
}
