//! Bounded-variable revised simplex on a sparse LU basis.
//!
//! The basis is factored as L U and updated with a file of eta columns,
//! refactored every `REFACTOR_EVERY` pivots. Dantzig pricing; after a run of
//! degenerate pivots the entering and leaving choices switch to Bland's
//! smallest-index rule until the objective moves again, so the method cannot
//! cycle. Phase one minimizes the sum of artificial variables, phase two
//! fixes them at zero.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::lp::{LinearProgram, Sense, VarKind};

/// Pivot limit across both phases.
pub const ITERATION_CAP: u64 = 1_000_000;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
/// Degenerate pivots per row before switching to Bland's rule.
const DEGENERATE_PER_ROW: usize = 10;
const REFACTOR_EVERY: usize = 100;
/// Coefficients below this are rounding noise and left out of the engine.
const DROP_TOL: f64 = 1e-13;
/// Largest row count attempted.
pub const MAX_ROWS: usize = 60_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Values of the program's variables and one multiplier per constraint,
    /// with reduced costs c − Aᵀπ ≤ 0 on nonnegative columns.
    Optimal { x: Vec<f64>, pi: Vec<f64>, iterations: u64 },
    Infeasible { iterations: u64 },
    Unbounded { iterations: u64 },
    Failure { iterations: u64 },
}

/// B[:, order] = L̃ U. Column k of L̃ is 1 at `pivot_row[k]` plus `lower[k]`,
/// whose rows are pivoted at later steps; U is unit-free upper triangular.
struct Factor {
    order: Vec<usize>,
    pivot_row: Vec<usize>,
    lower: Vec<Vec<(usize, f64)>>,
    /// Strictly upper part of U by column, as (step, value).
    upper: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl Factor {
    /// Left-looking elimination with partial pivoting, sparsest columns first.
    fn new(m: usize, columns: &[&[(usize, f64)]]) -> Option<Factor> {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| columns[p].len());
        let mut step_of_row = vec![usize::MAX; m];
        let mut f = Factor {
            order: Vec::with_capacity(m),
            pivot_row: Vec::with_capacity(m),
            lower: Vec::with_capacity(m),
            upper: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
        };
        let mut work = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut heap = BinaryHeap::new();
        for &p in &order {
            for &(i, v) in columns[p] {
                if !mark[i] {
                    mark[i] = true;
                    touched.push(i);
                    if step_of_row[i] != usize::MAX {
                        heap.push(Reverse(step_of_row[i]));
                    }
                }
                work[i] += v;
            }
            // Earlier steps only touch rows pivoted after them.
            let mut col_u = Vec::new();
            let mut last = usize::MAX;
            while let Some(Reverse(k)) = heap.pop() {
                if k == last {
                    continue;
                }
                last = k;
                let w = work[f.pivot_row[k]];
                if w == 0.0 {
                    continue;
                }
                col_u.push((k, w));
                for &(i, l) in &f.lower[k] {
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                    work[i] -= l * w;
                    if step_of_row[i] != usize::MAX {
                        heap.push(Reverse(step_of_row[i]));
                    }
                }
            }
            let mut best: Option<usize> = None;
            for &i in &touched {
                if step_of_row[i] == usize::MAX && best.is_none_or(|b| work[i].abs() > work[b].abs()) {
                    best = Some(i);
                }
            }
            let r = best?;
            let d = work[r];
            if d.abs() < SINGULAR_TOL {
                return None;
            }
            step_of_row[r] = f.pivot_row.len();
            let mut col_l = Vec::new();
            for &i in &touched {
                if step_of_row[i] == usize::MAX && work[i] != 0.0 {
                    col_l.push((i, work[i] / d));
                }
                work[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();
            f.order.push(p);
            f.pivot_row.push(r);
            f.diag.push(d);
            f.lower.push(col_l);
            f.upper.push(col_u);
        }
        Some(f)
    }

    /// Solves B z = a, with z indexed by basis position.
    fn solve(&self, mut a: Vec<f64>) -> Vec<f64> {
        let m = self.order.len();
        let mut w = vec![0.0; m];
        for k in 0..m {
            let v = a[self.pivot_row[k]];
            w[k] = v;
            if v != 0.0 {
                for &(i, l) in &self.lower[k] {
                    a[i] -= l * v;
                }
            }
        }
        let mut z = vec![0.0; m];
        for k in (0..m).rev() {
            let v = w[k] / self.diag[k];
            z[self.order[k]] = v;
            if v != 0.0 {
                for &(j, u) in &self.upper[k] {
                    w[j] -= u * v;
                }
            }
        }
        z
    }

    /// Solves yᵀ B = cᵀ, with c indexed by basis position and y by row.
    fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let m = self.order.len();
        let mut g = vec![0.0; m];
        for k in 0..m {
            let s: f64 = self.upper[k].iter().map(|&(j, u)| u * g[j]).sum();
            g[k] = (c[self.order[k]] - s) / self.diag[k];
        }
        let mut y = vec![0.0; m];
        for k in (0..m).rev() {
            let s: f64 = self.lower[k].iter().map(|&(i, l)| l * y[i]).sum();
            y[self.pivot_row[k]] = g[k] - s;
        }
        y
    }
}

/// Replacement of the basic column at position `p`, stored as its FTRAN'd
/// entering column.
struct Eta {
    p: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

struct Tableau {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    b: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    factor: Option<Factor>,
    etas: Vec<Eta>,
    iterations: u64,
}

enum Step {
    Optimal,
    Unbounded,
    Failure,
}

impl Tableau {
    fn from_program(lp: &LinearProgram) -> (Self, Vec<f64>, usize) {
        let m = lp.constraints.len();
        let n = lp.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(k, a) in &c.terms {
                match cols[k].last_mut() {
                    Some(last) if last.0 == i => last.1 += a,
                    _ => cols[k].push((i, a)),
                }
            }
        }
        for col in &mut cols {
            col.retain(|t| t.1.abs() >= DROP_TOL);
        }
        let mut lo: Vec<f64> = lp
            .var_kinds
            .iter()
            .map(|k| if *k == VarKind::Free { f64::NEG_INFINITY } else { 0.0 })
            .collect();
        let mut hi = vec![f64::INFINITY; n];
        let mut cost = lp.objective.clone();
        for (i, c) in lp.constraints.iter().enumerate() {
            let s = match c.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
                Sense::Eq => continue,
            };
            cols.push(vec![(i, s)]);
            lo.push(0.0);
            hi.push(f64::INFINITY);
            cost.push(0.0);
        }
        let b: Vec<f64> = lp.constraints.iter().map(|c| c.rhs).collect();
        let x = vec![0.0; cols.len()];
        let t = Tableau {
            m,
            cols,
            lo,
            hi,
            b,
            x,
            basis: Vec::new(),
            position: Vec::new(),
            factor: None,
            etas: Vec::new(),
            iterations: 0,
        };
        (t, cost, n)
    }

    /// Starts from slack columns that can absorb the row's right-hand side and
    /// adds an artificial column elsewhere. Returns the artificial columns.
    fn crash(&mut self) -> Vec<usize> {
        let m = self.m;
        let mut chosen: Vec<Option<(usize, f64)>> = vec![None; m];
        for (j, col) in self.cols.iter().enumerate() {
            if let [(i, a)] = col[..] {
                let ok = a.abs() >= 1e-6 && self.lo[j] == 0.0 && self.hi[j].is_infinite() && self.b[i] / a >= 0.0;
                if chosen[i].is_none() && ok {
                    chosen[i] = Some((j, a));
                }
            }
        }
        let mut artificials = Vec::new();
        self.basis = vec![0; m];
        for (i, pick) in chosen.iter().enumerate() {
            let j = match *pick {
                Some((j, _)) => j,
                None => {
                    let a = if self.b[i] >= 0.0 { 1.0 } else { -1.0 };
                    self.cols.push(vec![(i, a)]);
                    self.lo.push(0.0);
                    self.hi.push(f64::INFINITY);
                    self.x.push(0.0);
                    artificials.push(self.cols.len() - 1);
                    self.cols.len() - 1
                }
            };
            self.basis[i] = j;
        }
        self.position = vec![None; self.cols.len()];
        for (p, &j) in self.basis.iter().enumerate() {
            self.position[j] = Some(p);
        }
        artificials
    }

    /// Refactors the basis and recomputes basic values from the nonbasic ones.
    fn refactor(&mut self) -> bool {
        let columns: Vec<&[(usize, f64)]> = self.basis.iter().map(|&j| self.cols[j].as_slice()).collect();
        self.factor = Factor::new(self.m, &columns);
        self.etas.clear();
        if self.factor.is_none() {
            return false;
        }
        let mut rhs = self.b.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.position[j].is_none() && self.x[j] != 0.0 {
                for &(i, v) in col {
                    rhs[i] -= v * self.x[j];
                }
            }
        }
        let z = self.ftran(rhs);
        for (p, v) in z.into_iter().enumerate() {
            self.x[self.basis[p]] = v;
        }
        true
    }

    fn ftran(&self, a: Vec<f64>) -> Vec<f64> {
        let mut z = self.factor.as_ref().expect("factored basis").solve(a);
        for e in &self.etas {
            let t = z[e.p] / e.pivot;
            if t != 0.0 {
                for &(i, v) in &e.others {
                    z[i] -= v * t;
                }
            }
            z[e.p] = t;
        }
        z
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        for &(i, v) in &self.cols[j] {
            a[i] = v;
        }
        self.ftran(a)
    }

    /// y = c_B B⁻¹.
    fn multipliers(&self, cost: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        for e in self.etas.iter().rev() {
            let s: f64 = e.others.iter().map(|&(i, v)| w[i] * v).sum();
            w[e.p] = (w[e.p] - s) / e.pivot;
        }
        self.factor.as_ref().expect("factored basis").solve_transpose(&w)
    }

    /// Maximizes `cost` from the current basic feasible point.
    fn optimize(&mut self, cost: &[f64]) -> Step {
        let m = self.m;
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= ITERATION_CAP {
                return Step::Failure;
            }
            let bland = degenerate >= DEGENERATE_PER_ROW * m;
            let y = self.multipliers(cost);
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for (j, col) in self.cols.iter().enumerate() {
                if self.position[j].is_some() || self.lo[j] == self.hi[j] {
                    continue;
                }
                let d = cost[j] - col.iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                let dir = if d > OPT_TOL && self.x[j] < self.hi[j] {
                    1.0
                } else if d < -OPT_TOL && self.x[j] > self.lo[j] {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                if !self.etas.is_empty() {
                    // Confirm optimality on a fresh factorization.
                    if !self.refactor() {
                        return Step::Failure;
                    }
                    continue;
                }
                return Step::Optimal;
            };
            let alpha = self.column(q);
            // Basic p moves at rate −dir·α_p per unit step of the entering column.
            let bound_of = |t: &Tableau, p: usize, rate: f64| -> Option<f64> {
                let v = t.basis[p];
                if rate < 0.0 && t.lo[v].is_finite() {
                    Some(((t.x[v] - t.lo[v]) / -rate).max(0.0))
                } else if rate > 0.0 && t.hi[v].is_finite() {
                    Some(((t.hi[v] - t.x[v]) / rate).max(0.0))
                } else {
                    None
                }
            };
            let mut step = if dir > 0.0 { self.hi[q] - self.x[q] } else { self.x[q] - self.lo[q] };
            let mut min_ratio = f64::INFINITY;
            for (p, &al) in alpha.iter().enumerate() {
                let rate = -dir * al;
                if rate.abs() > PIVOT_TOL {
                    if let Some(r) = bound_of(self, p, rate) {
                        min_ratio = min_ratio.min(r);
                    }
                }
            }
            let mut leave: Option<usize> = None;
            if min_ratio < step {
                let tie = min_ratio + 1e-12 * (1.0 + min_ratio);
                let mut pick: Option<(usize, f64)> = None;
                for (p, &al) in alpha.iter().enumerate() {
                    let rate = -dir * al;
                    if rate.abs() <= PIVOT_TOL || !bound_of(self, p, rate).is_some_and(|r| r <= tie) {
                        continue;
                    }
                    let better = match pick {
                        None => true,
                        Some((pp, _)) if bland => self.basis[p] < self.basis[pp],
                        Some((_, pa)) => al.abs() > pa,
                    };
                    if better {
                        pick = Some((p, al.abs()));
                    }
                }
                let (p, _) = pick.expect("a blocking row");
                leave = Some(p);
                step = bound_of(self, p, -dir * alpha[p]).expect("a finite bound");
            }
            if step.is_infinite() {
                return Step::Unbounded;
            }
            self.iterations += 1;
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };
            self.x[q] += dir * step;
            for (p, &al) in alpha.iter().enumerate() {
                if al != 0.0 {
                    self.x[self.basis[p]] -= dir * al * step;
                }
            }
            let Some(p) = leave else { continue };
            let v = self.basis[p];
            // Snap the leaving column onto the bound it reached.
            self.x[v] = if -dir * alpha[p] < 0.0 { self.lo[v] } else { self.hi[v] };
            self.position[v] = None;
            self.position[q] = Some(p);
            self.basis[p] = q;
            let others = (0..m).filter(|&i| i != p && alpha[i] != 0.0).map(|i| (i, alpha[i])).collect();
            self.etas.push(Eta { p, pivot: alpha[p], others });
            if self.etas.len() >= REFACTOR_EVERY && !self.refactor() {
                return Step::Failure;
            }
        }
    }
}

/// Maximizes the program's objective.
pub fn run(lp: &LinearProgram) -> Outcome {
    if lp.constraints.len() > MAX_ROWS {
        return Outcome::Failure { iterations: 0 };
    }
    let (mut t, cost, n) = Tableau::from_program(lp);
    let artificials = t.crash();
    if !t.refactor() {
        return Outcome::Failure { iterations: 0 };
    }
    if !artificials.is_empty() {
        let mut phase1 = vec![0.0; t.cols.len()];
        for &a in &artificials {
            phase1[a] = -1.0;
        }
        match t.optimize(&phase1) {
            Step::Optimal => {}
            _ => return Outcome::Failure { iterations: t.iterations },
        }
        let scale = 1.0 + t.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let infeasibility: f64 = artificials.iter().map(|&a| t.x[a]).sum();
        if infeasibility > FEAS_TOL * scale {
            return Outcome::Infeasible { iterations: t.iterations };
        }
        for &a in &artificials {
            t.hi[a] = 0.0;
            if t.position[a].is_none() {
                t.x[a] = 0.0;
            }
        }
        if !t.refactor() {
            return Outcome::Failure { iterations: t.iterations };
        }
    }
    let mut cost = cost;
    cost.resize(t.cols.len(), 0.0);
    match t.optimize(&cost) {
        Step::Optimal => Outcome::Optimal {
            x: t.x[..n].to_vec(),
            pi: t.multipliers(&cost),
            iterations: t.iterations,
        },
        Step::Unbounded => Outcome::Unbounded { iterations: t.iterations },
        Step::Failure => Outcome::Failure { iterations: t.iterations },
    }
}
