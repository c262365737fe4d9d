use medeq::augment::{build_augmented, AugOwner, AugmentedGame};
use medeq::game::{GameBuilder, GameTree};
use medeq::io::{gen_appendix_c, gen_kuhn, gen_random, RandomParams};
use medeq::notion::{NotionConfig, Objective, NOTION_NAMES};
use medeq::sequence_form::{build_sequence_form, direct_realization, leaf_coefficients, SequenceFormSystem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(tree: &GameTree, name: &str) -> AugmentedGame {
    build_augmented(tree, &NotionConfig::named(name).unwrap(), &Objective::Welfare).unwrap()
}

/// Random behavioral strategy over every Γ̂ infoset.
fn random_behavior(aug: &AugmentedGame, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    aug.infosets
        .iter()
        .map(|i| {
            let w: Vec<f64> = (0..i.actions.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

fn uniform_behavior(aug: &AugmentedGame) -> Vec<Vec<f64>> {
    aug.infosets.iter().map(|i| vec![1.0 / i.actions.len() as f64; i.actions.len()]).collect()
}

/// Realization plan of a behavioral strategy.
fn realization(sys: &SequenceFormSystem, behavior: &[Vec<f64>]) -> Vec<f64> {
    let mut x = vec![0.0; sys.cols()];
    x[0] = 1.0;
    for &(info, parent, first) in &sys.infosets {
        for (a, p) in behavior[info].iter().enumerate() {
            x[first + a] = x[parent] * p;
        }
    }
    x
}

/// Expected utility of `target` by walking Γ̂: the mediator and `mover` follow
/// `behavior`, every other player plays direct.
fn walk(aug: &AugmentedGame, behavior: &[Vec<f64>], mover: Option<usize>, target: usize) -> f64 {
    let mut total = 0.0;
    let mut stack = vec![(0usize, 1.0f64)];
    while let Some((v, p)) = stack.pop() {
        let node = &aug.nodes[v];
        match node.owner {
            AugOwner::Terminal => total += p * node.utilities[target],
            AugOwner::Chance => {
                for (&c, q) in node.children.iter().zip(&node.chance_probs) {
                    stack.push((c, p * q));
                }
            }
            AugOwner::Agent(a) => {
                let info = node.infoset.unwrap();
                for (k, &c) in node.children.iter().enumerate() {
                    let q = if a == aug.mediator() || Some(a) == mover {
                        behavior[info][k]
                    } else if aug.infosets[info].direct == Some(k) {
                        1.0
                    } else {
                        0.0
                    };
                    if q > 0.0 {
                        stack.push((c, p * q));
                    }
                }
            }
        }
    }
    total
}

#[test]
fn single_mediator_infoset_system() {
    for k in 2..=4 {
        let mut b = GameBuilder::new(1);
        let actions: Vec<String> = (0..k).map(|a| format!("a{a}")).collect();
        let refs: Vec<&str> = actions.iter().map(String::as_str).collect();
        let r = b.player("r", None, 0, "I", &refs).unwrap();
        for a in &refs {
            b.terminal(format!("z{a}"), Some((r, a)), &[1.0]).unwrap();
        }
        let aug = build(&b.build().unwrap(), "comm");
        let sys = build_sequence_form(&aug, aug.mediator()).unwrap();
        assert_eq!((sys.rows(), sys.cols()), (2, k + 1));
        assert_eq!(sys.f_rhs, vec![1.0, 0.0]);
    }
}

#[test]
fn two_parallel_mediator_infosets_have_four_vertices() {
    // Chance picks one of two independent single-player decisions.
    let mut b = GameBuilder::new(1);
    let r = b.chance("root", None, &[("l", 0.5), ("r", 0.5)]).unwrap();
    for side in ["l", "r"] {
        let v = b.player(format!("n{side}"), Some((r, side)), 0, side, &["x", "y"]).unwrap();
        for a in ["x", "y"] {
            b.terminal(format!("{side}{a}"), Some((v, a)), &[1.0]).unwrap();
        }
    }
    let aug = build(&b.build().unwrap(), "comm");
    let sys = build_sequence_form(&aug, aug.mediator()).unwrap();
    assert_eq!(sys.infosets.len(), 2);
    // Pure plans are the 0/1 realizations; each infoset picks one of two actions.
    let mut vertices = Vec::new();
    for mask in 0..4usize {
        let behavior: Vec<Vec<f64>> = aug
            .infosets
            .iter()
            .enumerate()
            .map(|(i, info)| {
                let pos = sys.infosets.iter().position(|s| s.0 == i);
                match pos {
                    Some(p) => {
                        let a = (mask >> p) & 1;
                        (0..info.actions.len()).map(|k| if k == a { 1.0 } else { 0.0 }).collect()
                    }
                    None => vec![0.0; info.actions.len()],
                }
            })
            .collect();
        let x = realization(&sys, &behavior);
        assert_eq!(sys.residual(&x), 0.0);
        vertices.push(x);
    }
    vertices.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vertices.dedup();
    assert_eq!(vertices.len(), 4);
}

#[test]
fn single_terminal_objective() {
    let mut b = GameBuilder::new(2);
    b.terminal("z", None, &[0.25, 0.75]).unwrap();
    let aug = build(&b.build().unwrap(), "full-cert");
    let med = build_sequence_form(&aug, aug.mediator()).unwrap();
    let players: Vec<_> = (0..2).map(|j| build_sequence_form(&aug, j).unwrap()).collect();
    let lc = leaf_coefficients(&aug, &med, &players);
    assert_eq!(lc.c, vec![1.0]);
}

#[test]
fn uniform_play_on_kuhn() {
    let aug = build(&gen_kuhn(), "comm");
    let uni = uniform_behavior(&aug);
    for j in 0..aug.players() {
        let sys = build_sequence_form(&aug, j).unwrap();
        let x = realization(&sys, &uni);
        assert!(sys.residual(&x) < 1e-12);
        // Each column's weight is the product of 1/|A| along its own infosets.
        for &(info, parent, first) in &sys.infosets {
            let k = aug.infosets[info].actions.len() as f64;
            for a in 0..aug.infosets[info].actions.len() {
                assert!((x[first + a] - x[parent] / k).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn persuasion_objective_matches_uniform_walk() {
    let aug = build(&gen_appendix_c(), "persuasion");
    let uni = uniform_behavior(&aug);
    let med = build_sequence_form(&aug, aug.mediator()).unwrap();
    let players: Vec<_> = (0..2).map(|j| build_sequence_form(&aug, j).unwrap()).collect();
    let lc = leaf_coefficients(&aug, &med, &players);
    let x = realization(&med, &uni);
    let cx: f64 = lc.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let walked = walk(&aug, &uni, None, aug.mediator());
    assert!((cx - walked).abs() < 1e-12, "{cx} vs {walked}");
}

fn small_augmented() -> impl Strategy<Value = (AugmentedGame, u64)> {
    (0u64..5_000, 1usize..=3, 1usize..=3, 0usize..8, any::<u64>()).prop_filter_map(
        "generator failed",
        |(seed, depth, players, pick, strat)| {
            let p = RandomParams { depth, branching: 2, players, ..Default::default() };
            let g = gen_random(seed, &p).ok().filter(|g| g.len() <= 60)?;
            Some((build(&g, NOTION_NAMES[pick]), strat))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn behavioral_plans_are_feasible((aug, seed) in small_augmented()) {
        let b = random_behavior(&aug, seed);
        for agent in 0..aug.agent_count() {
            let sys = build_sequence_form(&aug, agent).unwrap();
            prop_assert!(sys.residual(&realization(&sys, &b)) < 1e-12);
            if agent < aug.players() {
                prop_assert_eq!(sys.residual(&direct_realization(&aug, &sys)), 0.0);
            }
        }
    }

    #[test]
    fn bilinear_forms_match_tree_walks((aug, seed) in small_augmented()) {
        let b = random_behavior(&aug, seed);
        let med = build_sequence_form(&aug, aug.mediator()).unwrap();
        let players: Vec<_> = (0..aug.players()).map(|j| build_sequence_form(&aug, j).unwrap()).collect();
        let lc = leaf_coefficients(&aug, &med, &players);
        let xm = realization(&med, &b);
        let cx: f64 = lc.c.iter().zip(&xm).map(|(c, x)| c * x).sum();
        let walked = walk(&aug, &b, None, aug.mediator());
        prop_assert!((cx - walked).abs() < 1e-10, "objective {} vs {}", cx, walked);
        for j in 0..aug.players() {
            let xj = realization(&players[j], &b);
            let form: f64 = lc.kernels[j].iter().map(|&(m, s, v)| xm[m] * xj[s] * v).sum();
            let gain = walk(&aug, &b, Some(j), j) - walk(&aug, &b, None, j);
            prop_assert!((form - gain).abs() < 1e-10, "player {}: {} vs {}", j, form, gain);
        }
    }
}
