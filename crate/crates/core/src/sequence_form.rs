//! Sequence-form strategy polytopes {x : F x = f, x ≥ 0} of the agents of Γ̂
//! and the leaf coefficients of the mediator's program.

use std::collections::{BTreeMap, VecDeque};

use crate::augment::{AugOwner, AugmentedGame};
use crate::error::SolveError;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFormSystem {
    pub agent: usize,
    /// Column 0 is the empty sequence; the others are (infoset, action) pairs.
    pub columns: Vec<Option<(usize, usize)>>,
    /// Constraint rows after the root row: (infoset, parent column, first column).
    pub infosets: Vec<(usize, usize, usize)>,
    /// Column of (infoset, action 0) for every infoset of Γ̂ owned by the agent.
    pub first_column: BTreeMap<usize, usize>,
    /// Row of each infoset (root row is 0).
    pub row_of: BTreeMap<usize, usize>,
    /// Triplets (row, column, value) of F.
    pub f_matrix: Vec<(usize, usize, f64)>,
    pub f_rhs: Vec<f64>,
    /// The agent's last sequence above each terminal, in `aug.terminals` order.
    pub leaf: Vec<usize>,
}

impl SequenceFormSystem {
    pub fn rows(&self) -> usize {
        self.infosets.len() + 1
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, infoset: usize, action: usize) -> usize {
        self.first_column[&infoset] + action
    }

    /// Maximum of |F x − f| over rows.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut lhs = vec![0.0; self.rows()];
        for &(r, c, v) in &self.f_matrix {
            lhs[r] += v * x[c];
        }
        lhs.iter().zip(&self.f_rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Builds the sequence-form system of `agent` (a player index, or
/// `aug.mediator()`), ordering infosets by breadth-first discovery.
pub fn build_sequence_form(aug: &AugmentedGame, agent: usize) -> Result<SequenceFormSystem, SolveError> {
    let mut columns = vec![None];
    let mut infosets = Vec::new();
    let mut first_column = BTreeMap::new();
    let mut row_of = BTreeMap::new();
    let mut parent_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut above = vec![0usize; aug.nodes.len()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let node = &aug.nodes[v];
        let own = node.owner == AugOwner::Agent(agent);
        if own {
            let info = node.infoset.unwrap();
            match parent_of.get(&info) {
                Some(&p) if p != above[v] => {
                    return Err(SolveError::PerfectRecall(format!(
                        "{} at {}",
                        aug.agent_name(agent),
                        aug.infosets[info].name
                    )))
                }
                Some(_) => {}
                None => {
                    parent_of.insert(info, above[v]);
                    let first = columns.len();
                    for a in 0..aug.infosets[info].actions.len() {
                        columns.push(Some((info, a)));
                    }
                    first_column.insert(info, first);
                    row_of.insert(info, infosets.len() + 1);
                    infosets.push((info, above[v], first));
                }
            }
        }
        for (a, &c) in node.children.iter().enumerate() {
            above[c] = if own { first_column[&node.infoset.unwrap()] + a } else { above[v] };
            queue.push_back(c);
        }
    }
    let mut f_matrix = vec![(0, 0, 1.0)];
    for (r, &(info, parent, first)) in infosets.iter().enumerate() {
        f_matrix.push((r + 1, parent, -1.0));
        for a in 0..aug.infosets[info].actions.len() {
            f_matrix.push((r + 1, first + a, 1.0));
        }
    }
    let mut f_rhs = vec![0.0; infosets.len() + 1];
    f_rhs[0] = 1.0;
    let leaf = aug.terminals.iter().map(|&z| above[z]).collect();
    Ok(SequenceFormSystem { agent, columns, infosets, first_column, row_of, f_matrix, f_rhs, leaf })
}

/// Realization plan of the direct strategy of a player (0/1 entries).
pub fn direct_realization(aug: &AugmentedGame, sys: &SequenceFormSystem) -> Vec<f64> {
    let mut x = vec![0.0; sys.cols()];
    x[0] = 1.0;
    for &(info, parent, first) in &sys.infosets {
        if let Some(d) = aug.infosets[info].direct {
            x[first + d] = x[parent];
        }
    }
    x
}

/// Objective and incentive kernels of the mediator's program.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafCoefficients {
    /// Mediator objective per mediator column.
    pub c: Vec<f64>,
    /// Per player j: triplets (mediator column, player column, value) of A′_j,
    /// which is A_j with A_j x*_j subtracted from the empty-sequence column.
    pub kernels: Vec<Vec<(usize, usize, f64)>>,
}

pub fn leaf_coefficients(
    aug: &AugmentedGame,
    mediator: &SequenceFormSystem,
    players: &[SequenceFormSystem],
) -> LeafCoefficients {
    let n = aug.players();
    let direct: Vec<Vec<f64>> = players.iter().map(|s| direct_realization(aug, s)).collect();
    let mut c = vec![0.0; mediator.cols()];
    let mut acc: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); n];
    for (t, &z) in aug.terminals.iter().enumerate() {
        let node = &aug.nodes[z];
        let p = aug.reach[z];
        let m = mediator.leaf[t];
        let xs: Vec<f64> = (0..n).map(|i| direct[i][players[i].leaf[t]]).collect();
        let all: f64 = xs.iter().product();
        c[m] += node.utilities[n] * p * all;
        for j in 0..n {
            let others: f64 = (0..n).filter(|&i| i != j).map(|i| xs[i]).product();
            if others != 0.0 {
                let v = node.utilities[j] * p * others;
                *acc[j].entry((m, players[j].leaf[t])).or_insert(0.0) += v;
                // Fold the direct payoff into the empty-sequence column.
                *acc[j].entry((m, 0)).or_insert(0.0) -= v * xs[j];
            }
        }
    }
    let kernels = acc
        .into_iter()
        .map(|map| map.into_iter().filter(|(_, v)| *v != 0.0).map(|((m, s), v)| (m, s, v)).collect())
        .collect();
    LeafCoefficients { c, kernels }
}
