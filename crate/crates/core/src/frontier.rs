//! Two-player payoff frontiers by sweeping scalarized mediator objectives.
//!
//! Direction θ gives the mediator the objective cos θ · u₁ + sin θ · u₂; the
//! optimum is the support function of the notion's payoff set in that
//! direction and the honest payoff pair under the optimal policy is a point
//! of the set attaining it.

use serde::Serialize;
use serde_json::{json, Value};

use crate::augment::build_augmented;
use crate::error::{ConfigError, SolveError};
use crate::game::GameTree;
use crate::lp::{solve_augmented, Status};
use crate::notion::{NotionConfig, Objective};
use crate::oracle::verify_equilibrium_with;
use crate::par::{self, Exec};

/// Points closer than this (in both coordinates) are merged by [`hull`].
pub const HULL_DEDUP: f64 = 1e-7;

pub const DEFAULT_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub theta: f64,
    pub status: &'static str,
    /// Optimal mediator objective in this direction.
    pub support: Option<f64>,
    /// Honest expected payoffs (U₁, U₂) under the optimal policy.
    pub point: Option<(f64, f64)>,
    /// Largest deviation gain found by the oracle.
    pub max_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
}

impl Frontier {
    /// Payoff pairs of the directions that solved.
    pub fn solved_points(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter_map(|p| p.point).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.points.iter().all(|p| p.point.is_some())
    }

    pub fn hull(&self) -> Vec<(f64, f64)> {
        hull(&self.solved_points())
    }

    /// `theta,u1,u2` rows; failed directions leave the payoffs empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,u1,u2\n");
        for p in &self.points {
            match p.point {
                Some((u1, u2)) => out.push_str(&format!("{},{},{}\n", p.theta, u1, u2)),
                None => out.push_str(&format!("{},,\n", p.theta)),
            }
        }
        out
    }

    pub fn hull_json(&self) -> Value {
        let hull: Vec<[f64; 2]> = self.hull().into_iter().map(|(x, y)| [x, y]).collect();
        let failed: Vec<f64> = self.points.iter().filter(|p| p.point.is_none()).map(|p| p.theta).collect();
        json!({ "hull": hull, "directions": self.points.len(), "failed": failed })
    }
}

pub fn direction(k: usize, total: usize) -> f64 {
    2.0 * std::f64::consts::PI * k as f64 / total as f64
}

pub fn payoff_frontier(tree: &GameTree, config: &NotionConfig, k: usize) -> Result<Frontier, SolveError> {
    payoff_frontier_with(tree, config, k, Exec::Parallel)
}

/// Solves `k` evenly spaced directions. Directions that fail to solve are
/// kept with their status and no point; build errors abort the sweep.
pub fn payoff_frontier_with(tree: &GameTree, config: &NotionConfig, k: usize, exec: Exec) -> Result<Frontier, SolveError> {
    if tree.player_count() != 2 {
        return Err(ConfigError::Invalid(format!("frontier needs 2 players, game has {}", tree.player_count())).into());
    }
    if k < 4 {
        return Err(ConfigError::Invalid(format!("frontier needs at least 4 directions, got {k}")).into());
    }
    let thetas: Vec<f64> = (0..k).map(|i| direction(i, k)).collect();
    let results = par::map(exec, &thetas, |&theta| -> Result<FrontierPoint, SolveError> {
        let objective = Objective::Weights(vec![theta.cos(), theta.sin()]);
        let aug = build_augmented(tree, config, &objective)?;
        let solved = solve_augmented(&aug)?;
        let mut point = FrontierPoint { theta, status: solved.solution.status.as_str(), support: None, point: None, max_gain: None };
        if let (Status::Optimal, Some(policy)) = (solved.solution.status, &solved.policy) {
            let report = verify_equilibrium_with(&aug, policy, 1e-6, Exec::Sequential);
            point.support = Some(solved.solution.objective);
            point.point = Some((report.players[0].direct, report.players[1].direct));
            point.max_gain = Some(report.max_gain);
        }
        Ok(point)
    });
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Frontier { points })
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull by monotone chain, counterclockwise from the lowest-leftmost
/// point, without collinear points. Degenerate inputs give one or two points.
pub fn hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut uniq: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if !uniq.iter().any(|q| (q.0 - p.0).abs() <= HULL_DEDUP && (q.1 - p.1).abs() <= HULL_DEDUP) {
            uniq.push(p);
        }
    }
    if uniq.len() <= 2 {
        return uniq;
    }
    let eps = 1e-12;
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &uniq {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in uniq.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let mut out = lower;
    if out.len() == 2 && (out[0].0 - out[1].0).abs() <= HULL_DEDUP && (out[0].1 - out[1].1).abs() <= HULL_DEDUP {
        out.pop();
    }
    // Start at the lowest point, leftmost on ties.
    let start = (0..out.len())
        .min_by(|&a, &b| out[a].1.total_cmp(&out[b].1).then(out[a].0.total_cmp(&out[b].0)))
        .unwrap_or(0);
    out.rotate_left(start);
    out
}

/// max over `points` of d · p.
pub fn support(points: &[(f64, f64)], d: (f64, f64)) -> f64 {
    points.iter().map(|p| d.0 * p.0 + d.1 * p.1).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameBuilder;
    use crate::io::{gen_appendix_c, gen_kuhn};

    #[test]
    fn hull_of_colinear_points_is_a_segment() {
        let h = hull(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(h, vec![(0.0, 0.0), (2.0, 2.0)]);
    }

    #[test]
    fn hull_of_square_is_ccw() {
        let h = hull(&[(1.0, 1.0), (0.0, 0.0), (0.5, 0.5), (1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]);
        assert_eq!(h, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let area: f64 = (0..h.len()).map(|i| cross((0.0, 0.0), h[i], h[(i + 1) % h.len()])).sum();
        assert!(area > 0.0);
    }

    #[test]
    fn hull_merges_near_duplicates() {
        let h = hull(&[(1.0, 2.0), (1.0 + 1e-9, 2.0 - 1e-9)]);
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn single_terminal_repeats_one_point() {
        let mut b = GameBuilder::new(2);
        b.terminal("z", None, &[3.0, -1.0]).unwrap();
        let t = b.build().unwrap();
        let f = payoff_frontier(&t, &NotionConfig::named("comm").unwrap(), 8).unwrap();
        assert!(f.is_complete());
        for p in &f.points {
            assert_eq!(p.point, Some((3.0, -1.0)));
        }
        assert_eq!(f.hull(), vec![(3.0, -1.0)]);
    }

    #[test]
    fn zero_sum_frontier_is_on_antidiagonal() {
        let f = payoff_frontier(&gen_kuhn(), &NotionConfig::named("full-cert").unwrap(), 8).unwrap();
        assert!(f.is_complete());
        for (u1, u2) in f.solved_points() {
            assert!((u1 + u2).abs() < 1e-9);
        }
        assert!(f.hull().len() <= 2);
    }

    #[test]
    fn persuasion_diagonal_reaches_three_halves() {
        let f = payoff_frontier(&gen_appendix_c(), &NotionConfig::named("persuasion").unwrap(), 8).unwrap();
        // Direction 1 of 8 is θ = π/4.
        let (u1, u2) = f.points[1].point.unwrap();
        assert!(u1 + u2 >= 1.5 - 1e-6, "{u1} {u2}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let t = gen_kuhn();
        assert!(payoff_frontier(&t, &NotionConfig::named("comm").unwrap(), 3).is_err());
        let mut b = GameBuilder::new(1);
        b.terminal("z", None, &[0.0]).unwrap();
        assert!(payoff_frontier(&b.build().unwrap(), &NotionConfig::named("comm").unwrap(), 8).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut b = GameBuilder::new(2);
        b.terminal("z", None, &[1.0, 2.0]).unwrap();
        let f = payoff_frontier(&b.build().unwrap(), &NotionConfig::named("comm").unwrap(), 4).unwrap();
        let csv = f.to_csv();
        assert!(csv.starts_with("theta,u1,u2\n0,1,2\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
