//! The mediator's linear program.
//!
//! Each player's inner best-response maximization is replaced by its dual, so
//! the program is
//!
//! ```text
//! max  cᵀ x_M
//! s.t. F_M x_M = f_M,  x_M ≥ 0
//!      F_jᵀ v_j ≥ A′_jᵀ x_M,  f_jᵀ v_j ≤ 0,  v_j free      (every player j)
//! ```
//!
//! where A′_j already has player j's direct payoff subtracted. Programs are
//! solved by the embedded simplex on the smaller of the primal and its dual,
//! and a result is accepted only when the primal residual, the dual residual
//! and the duality gap are all within `CERT_TOL`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde_json::{json, Map, Value};

use crate::augment::AugmentedGame;
use crate::error::SolveError;
use crate::simplex::{self, Outcome};
use crate::sequence_form::{build_sequence_form, leaf_coefficients, SequenceFormSystem};

/// Feasibility and optimality tolerance of certified solutions.
pub const CERT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub var_kinds: Vec<VarKind>,
    /// Coefficients of a maximization objective.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Columns holding the mediator's realization plan.
    pub x_m: Range<usize>,
    /// Columns of each player's dual vector (empty for enumerated programs).
    pub v: Vec<Range<usize>>,
}

impl LinearProgram {
    pub fn new() -> Self {
        LinearProgram {
            var_names: Vec::new(),
            var_kinds: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
            x_m: 0..0,
            v: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: String, kind: VarKind, objective: f64) -> usize {
        self.var_names.push(name);
        self.var_kinds.push(kind);
        self.objective.push(objective);
        self.var_names.len() - 1
    }

    pub fn add_constraint(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { name, terms, sense, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.terms.len()).sum()
    }

    /// Largest scaled violation of a constraint or sign restriction at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, kind) in self.var_kinds.iter().enumerate() {
            if *kind == VarKind::NonNegative {
                worst = worst.max(-x[k]);
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(k, a)| a * x[k]).sum();
            let scale = 1.0 + c.terms.iter().map(|t| t.1.abs()).fold(c.rhs.abs(), f64::max);
            let gap = match c.sense {
                Sense::Eq => (lhs - c.rhs).abs(),
                Sense::Ge => c.rhs - lhs,
                Sense::Le => lhs - c.rhs,
            };
            worst = worst.max(gap / scale);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// The dual program, written as a maximization of −bᵀy so that its
    /// optimum is the negated primal optimum.
    pub fn dual(&self) -> LinearProgram {
        let mut d = LinearProgram::new();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars()];
        // Row sign: ≤ rows get y ≥ 0, ≥ rows get y ≤ 0 (written as y = −y′ with y′ ≥ 0).
        for (i, c) in self.constraints.iter().enumerate() {
            let (kind, sign) = match c.sense {
                Sense::Le => (VarKind::NonNegative, 1.0),
                Sense::Ge => (VarKind::NonNegative, -1.0),
                Sense::Eq => (VarKind::Free, 1.0),
            };
            let y = d.add_var(format!("y_{i}"), kind, -sign * c.rhs);
            for &(k, a) in &c.terms {
                cols[k].push((y, sign * a));
            }
        }
        for (k, terms) in cols.into_iter().enumerate() {
            let sense = match self.var_kinds[k] {
                VarKind::NonNegative => Sense::Ge,
                VarKind::Free => Sense::Eq,
            };
            d.add_constraint(format!("d_{k}"), terms, sense, self.objective[k]);
        }
        d
    }
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new()
    }
}

/// The program of a specific Γ̂ together with the systems it was built from.
#[derive(Debug, Clone)]
pub struct MediatorProgram {
    pub lp: LinearProgram,
    pub mediator: SequenceFormSystem,
    pub players: Vec<SequenceFormSystem>,
}

pub fn build_program(aug: &AugmentedGame) -> Result<MediatorProgram, SolveError> {
    let mediator = build_sequence_form(aug, aug.mediator())?;
    let players = (0..aug.players())
        .map(|j| build_sequence_form(aug, j))
        .collect::<Result<Vec<_>, _>>()?;
    let coeffs = leaf_coefficients(aug, &mediator, &players);
    let mut lp = LinearProgram::new();
    let start = lp.num_vars();
    for (k, &c) in coeffs.c.iter().enumerate() {
        lp.add_var(format!("xM_{k}"), VarKind::NonNegative, c);
    }
    lp.x_m = start..lp.num_vars();
    for (j, sys) in players.iter().enumerate() {
        let start = lp.num_vars();
        lp.add_var(format!("v{}_root", j + 1), VarKind::Free, 0.0);
        for &(info, _, _) in &sys.infosets {
            lp.add_var(format!("v{}_{}", j + 1, info), VarKind::Free, 0.0);
        }
        lp.v.push(start..lp.num_vars());
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); mediator.rows()];
    for &(r, c, v) in &mediator.f_matrix {
        rows[r].push((lp.x_m.start + c, v));
    }
    for (r, terms) in rows.into_iter().enumerate() {
        lp.add_constraint(format!("fM_{r}"), terms, Sense::Eq, mediator.f_rhs[r]);
    }
    for (j, sys) in players.iter().enumerate() {
        let v0 = lp.v[j].start;
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sys.cols()];
        for &(r, c, v) in &sys.f_matrix {
            cols[c].push((v0 + r, v));
        }
        for &(m, s, a) in &coeffs.kernels[j] {
            cols[s].push((lp.x_m.start + m, -a));
        }
        for (s, terms) in cols.into_iter().enumerate() {
            lp.add_constraint(format!("br{}_{s}", j + 1), terms, Sense::Ge, 0.0);
        }
        lp.add_constraint(format!("dv{}", j + 1), vec![(v0, 1.0)], Sense::Le, 0.0);
    }
    Ok(MediatorProgram { lp, mediator, players })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::NumericalFailure => "numerical-failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub values: Vec<f64>,
    pub x_m: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    /// Simplex pivots across engine runs.
    pub iterations: u64,
    pub primal_residual: f64,
    pub duality_gap: f64,
}

/// Candidate primal and dual points from one engine run: values of the
/// program's variables and of the variables of `LinearProgram::dual`.
fn attempt(lp: &LinearProgram, dual: &LinearProgram, via_dual: bool) -> Result<(Vec<f64>, Vec<f64>, u64), (Status, u64)> {
    if via_dual {
        match simplex::run(dual) {
            // Multipliers of the dual's rows are the negated primal values.
            Outcome::Optimal { x, pi, iterations } => Ok((pi.iter().map(|v| -v).collect(), x, iterations)),
            Outcome::Infeasible { iterations } => Err((Status::Unbounded, iterations)),
            Outcome::Unbounded { iterations } => Err((Status::Infeasible, iterations)),
            Outcome::Failure { iterations } => Err((Status::NumericalFailure, iterations)),
        }
    } else {
        match simplex::run(lp) {
            Outcome::Optimal { x, pi, iterations } => {
                // ≥ rows carry nonpositive multipliers, stored negated in the dual.
                let y = lp
                    .constraints
                    .iter()
                    .zip(pi)
                    .map(|(c, p)| if c.sense == Sense::Ge { -p } else { p })
                    .collect();
                Ok((x, y, iterations))
            }
            Outcome::Infeasible { iterations } => Err((Status::Infeasible, iterations)),
            Outcome::Unbounded { iterations } => Err((Status::Unbounded, iterations)),
            Outcome::Failure { iterations } => Err((Status::NumericalFailure, iterations)),
        }
    }
}

/// Solves `lp` and certifies the answer: an `Optimal` status guarantees
/// primal and dual residuals and a primal-dual objective gap of at most 1e-8
/// (the gap relative to the objective's magnitude). The engine runs on
/// whichever of the program and its dual has fewer rows, and on the other
/// one if that answer does not certify.
pub fn solve(lp: &LinearProgram) -> Solution {
    let dual = lp.dual();
    let prefer_dual = dual.constraints.len() < lp.constraints.len();
    let mut sol = Solution {
        status: Status::NumericalFailure,
        objective: f64::NAN,
        values: Vec::new(),
        x_m: Vec::new(),
        v: Vec::new(),
        iterations: 0,
        primal_residual: f64::NAN,
        duality_gap: f64::NAN,
    };
    let mut primal_status = None;
    for via_dual in [prefer_dual, !prefer_dual] {
        match attempt(lp, &dual, via_dual) {
            Ok((x, y, iterations)) => {
                sol.iterations += iterations;
                let primal_residual = lp.primal_residual(&x);
                let dual_residual = dual.primal_residual(&y);
                let value = lp.objective_value(&x);
                // The dual maximizes −bᵀy.
                let bound = -dual.objective_value(&y);
                let gap = (bound - value).abs() / (1.0 + value.abs());
                if primal_residual <= CERT_TOL && dual_residual <= CERT_TOL && gap <= CERT_TOL {
                    sol.status = Status::Optimal;
                    sol.objective = value;
                    sol.primal_residual = primal_residual;
                    sol.duality_gap = gap;
                    sol.x_m = x[lp.x_m.clone()].to_vec();
                    sol.v = lp.v.iter().map(|r| x[r.clone()].to_vec()).collect();
                    sol.values = x;
                    return sol;
                }
            }
            Err((status, iterations)) => {
                sol.iterations += iterations;
                if !via_dual {
                    primal_status = Some(status);
                }
            }
        }
    }
    // Infeasible and unbounded verdicts are taken from the program itself.
    sol.status = match primal_status {
        Some(s @ (Status::Infeasible | Status::Unbounded)) => s,
        _ => Status::NumericalFailure,
    };
    sol
}

fn fmt_coef(out: &mut String, line: &mut usize, first: bool, a: f64, name: &str) {
    let term = if first {
        if a < 0.0 {
            format!(" - {} {name}", -a)
        } else {
            format!(" {a} {name}")
        }
    } else if a < 0.0 {
        format!(" - {} {name}", -a)
    } else {
        format!(" + {a} {name}")
    };
    if *line + term.len() > 100 {
        out.push_str("\n  ");
        *line = 2;
    }
    *line += term.len();
    out.push_str(&term);
}

/// CPLEX LP text of the program.
pub fn export_lp(lp: &LinearProgram) -> String {
    let mut out = String::from("\\ mediator program\nMaximize\n obj:");
    let mut line = 5;
    let mut first = true;
    for (k, &c) in lp.objective.iter().enumerate() {
        if c != 0.0 {
            fmt_coef(&mut out, &mut line, first, c, &lp.var_names[k]);
            first = false;
        }
    }
    if first {
        out.push_str(&format!(" 0 {}", lp.var_names.first().map(String::as_str).unwrap_or("x")));
    }
    out.push_str("\nSubject To\n");
    for c in &lp.constraints {
        let _ = write!(out, " {}:", c.name);
        let mut line = c.name.len() + 2;
        for (i, &(k, a)) in c.terms.iter().enumerate() {
            fmt_coef(&mut out, &mut line, i == 0, a, &lp.var_names[k]);
        }
        if c.terms.is_empty() {
            out.push_str(" 0 ");
            out.push_str(&lp.var_names[0]);
        }
        let op = match c.sense {
            Sense::Eq => "=",
            Sense::Ge => ">=",
            Sense::Le => "<=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for (k, kind) in lp.var_kinds.iter().enumerate() {
        if *kind == VarKind::Free {
            let _ = writeln!(out, " {} free", lp.var_names[k]);
        }
    }
    out.push_str("End\n");
    out
}

/// Behavioral mediator strategy read off a realization plan.
#[derive(Debug, Clone, PartialEq)]
pub struct MediatorPolicy {
    /// Action probabilities per Γ̂ infoset (empty for non-mediator infosets).
    pub probs: Vec<Vec<f64>>,
    /// Mediator infosets reached with probability at most 1e-9; uniform there.
    pub unreachable: Vec<usize>,
}

impl MediatorPolicy {
    pub fn uniform(aug: &AugmentedGame) -> Self {
        let probs = aug
            .infosets
            .iter()
            .map(|i| {
                if i.agent == aug.mediator() {
                    vec![1.0 / i.actions.len() as f64; i.actions.len()]
                } else {
                    Vec::new()
                }
            })
            .collect();
        MediatorPolicy { probs, unreachable: Vec::new() }
    }

    /// Serializes as `{infoset: {action: prob}}`.
    pub fn to_json(&self, aug: &AugmentedGame) -> Value {
        let mut map = Map::new();
        for (i, p) in self.probs.iter().enumerate() {
            if p.is_empty() {
                continue;
            }
            let info = &aug.infosets[i];
            let actions: Map<String, Value> =
                info.actions.iter().zip(p).map(|(a, q)| (a.clone(), json!(q))).collect();
            map.insert(info.name.clone(), Value::Object(actions));
        }
        Value::Object(map)
    }

    /// Reads the `policy` object written by [`MediatorPolicy::to_json`].
    /// Infosets that are not listed stay uniform.
    pub fn from_json(aug: &AugmentedGame, value: &Value) -> Result<Self, String> {
        let mut policy = Self::uniform(aug);
        let obj = value.as_object().ok_or("policy must be an object")?;
        for (name, actions) in obj {
            let i = aug.infoset_by_name(name).ok_or_else(|| format!("unknown mediator infoset {name}"))?;
            let info = &aug.infosets[i];
            if info.agent != aug.mediator() {
                return Err(format!("{name} is not a mediator infoset"));
            }
            let actions = actions.as_object().ok_or_else(|| format!("{name}: expected an object"))?;
            let mut probs = vec![0.0; info.actions.len()];
            for (a, q) in actions {
                let k = info.actions.iter().position(|x| x == a).ok_or_else(|| format!("{name}: unknown action {a}"))?;
                probs[k] = q.as_f64().filter(|q| *q >= 0.0).ok_or_else(|| format!("{name}: bad probability"))?;
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(format!("{name}: probabilities sum to {total}"));
            }
            policy.probs[i] = probs;
        }
        Ok(policy)
    }
}

pub fn extract_policy(aug: &AugmentedGame, mediator: &SequenceFormSystem, x_m: &[f64]) -> MediatorPolicy {
    let mut policy = MediatorPolicy::uniform(aug);
    for &(info, parent, first) in &mediator.infosets {
        let k = aug.infosets[info].actions.len();
        let mass = x_m[parent];
        if mass > 1e-9 {
            let mut p: Vec<f64> = (0..k).map(|a| x_m[first + a].max(0.0) / mass).collect();
            let total: f64 = p.iter().sum();
            for q in &mut p {
                *q /= total;
            }
            policy.probs[info] = p;
        } else {
            policy.unreachable.push(info);
        }
    }
    policy.unreachable.sort_unstable();
    policy
}

/// Result of solving the program of a Γ̂.
#[derive(Debug, Clone)]
pub struct Solved {
    pub program: MediatorProgram,
    pub solution: Solution,
    pub policy: Option<MediatorPolicy>,
}

pub fn solve_augmented(aug: &AugmentedGame) -> Result<Solved, SolveError> {
    let program = build_program(aug)?;
    let solution = solve(&program.lp);
    let policy = (solution.status == Status::Optimal)
        .then(|| extract_policy(aug, &program.mediator, &solution.x_m));
    Ok(Solved { program, solution, policy })
}

/// `{status, objective, policy}` document of a solve.
pub fn solution_json(aug: &AugmentedGame, solved: &Solved) -> Value {
    let mut doc = BTreeMap::new();
    doc.insert("status", json!(solved.solution.status.as_str()));
    let objective = if solved.solution.objective.is_finite() { json!(solved.solution.objective) } else { Value::Null };
    doc.insert("objective", objective);
    match &solved.policy {
        Some(p) => {
            doc.insert("policy", p.to_json(aug));
            let names: Vec<&str> = p.unreachable.iter().map(|&i| aug.infosets[i].name.as_str()).collect();
            doc.insert("unreachable", json!(names));
        }
        None => {
            doc.insert("policy", Value::Null);
        }
    }
    json!(doc)
}
