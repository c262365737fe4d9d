use std::collections::BTreeMap;

use medeq::augment::{build_augmented, check_perfect_recall, AugOwner, AugmentedGame, Stage, Transcript};
use medeq::game::{normalize_turn_order, GameBuilder, GameTree};
use medeq::io::{gen_appendix_c, gen_kuhn, gen_random, RandomParams};
use medeq::lp::{solve_augmented, MediatorPolicy, Status};
use medeq::notion::{check_nrc, default_family, FamilyKind, NotionConfig, Objective, NOTION_NAMES};
use medeq::oracle::direct_value;
use medeq::sequence_form::{build_sequence_form, direct_realization};
use proptest::prelude::*;

fn build(tree: &GameTree, config: &NotionConfig) -> AugmentedGame {
    build_augmented(tree, config, &Objective::Welfare).unwrap()
}

fn named(name: &str) -> NotionConfig {
    NotionConfig::named(name).unwrap()
}

/// Branching factor and depth of a tree, by walking parents.
fn branching_and_depth(t: &GameTree) -> (usize, usize) {
    let mut b = 1;
    let mut d = 0;
    for v in 0..t.len() {
        b = b.max(t.node(v).children.len());
        let mut k = 0;
        let mut u = v;
        while let Some(p) = t.node(u).parent {
            k += 1;
            u = p;
        }
        d = d.max(k);
    }
    (b, d.max(1))
}

/// Best value of the mediator when every player obeys, by backward induction
/// over the mediator's own sequences. Terminals reached only through some
/// non-direct player choice are dropped.
fn relaxed_optimum(aug: &AugmentedGame) -> f64 {
    let med = aug.mediator();
    // Mediator's last (infoset, action) and whether all players were direct.
    let mut last: Vec<Option<(usize, usize)>> = vec![None; aug.nodes.len()];
    let mut obeyed = vec![true; aug.nodes.len()];
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let node = &aug.nodes[v];
        for (a, &c) in node.children.iter().enumerate() {
            last[c] = last[v];
            obeyed[c] = obeyed[v];
            if let AugOwner::Agent(p) = node.owner {
                let info = node.infoset.unwrap();
                if p == med {
                    last[c] = Some((info, a));
                } else {
                    obeyed[c] &= aug.infosets[info].direct == Some(a);
                }
            }
            stack.push(c);
        }
    }
    let mut leaf: BTreeMap<Option<(usize, usize)>, f64> = BTreeMap::new();
    for &z in &aug.terminals {
        if obeyed[z] {
            *leaf.entry(last[z]).or_default() += aug.reach[z] * aug.nodes[z].utilities[med];
        }
    }
    let mut below: BTreeMap<Option<(usize, usize)>, Vec<usize>> = BTreeMap::new();
    for (i, info) in aug.infosets.iter().enumerate().filter(|(_, i)| i.agent == med) {
        below.entry(last[info.nodes[0]]).or_default().push(i);
    }
    fn value(
        s: Option<(usize, usize)>,
        aug: &AugmentedGame,
        leaf: &BTreeMap<Option<(usize, usize)>, f64>,
        below: &BTreeMap<Option<(usize, usize)>, Vec<usize>>,
    ) -> f64 {
        let mut v = leaf.get(&s).copied().unwrap_or(0.0);
        for &i in below.get(&s).into_iter().flatten() {
            v += (0..aug.infosets[i].actions.len())
                .map(|a| value(Some((i, a)), aug, leaf, below))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        v
    }
    value(None, aug, &leaf, &below)
}

/// Invariants every Γ̂ must satisfy.
fn check_invariants(aug: &AugmentedGame) -> Result<(), String> {
    check_perfect_recall(aug)?;
    let n = aug.players();
    for &z in &aug.terminals {
        let node = &aug.nodes[z];
        if let Some(ctx) = &node.context {
            let tainted: Vec<usize> =
                (0..n).filter(|&i| matches!(ctx.transcripts[i], Transcript::Tainted { .. })).collect();
            if tainted.len() > 1 || tainted.iter().any(|&i| node.deviator != Some(i)) {
                return Err(format!("terminal {z}: tainted {tainted:?} with deviator {:?}", node.deviator));
            }
        }
    }
    for j in 0..n {
        let sys = build_sequence_form(aug, j).map_err(|e| e.to_string())?;
        let x = direct_realization(aug, &sys);
        if sys.residual(&x) > 1e-12 {
            return Err(format!("direct plan of player {j} is infeasible"));
        }
        for (t, &z) in aug.terminals.iter().enumerate() {
            let want = match aug.nodes[z].deviator {
                None => Some(1.0),
                Some(d) if d == j => Some(0.0),
                Some(_) => None,
            };
            if let Some(w) = want {
                if x[sys.leaf[t]] != w {
                    return Err(format!("player {j} terminal {z}: direct weight {} not {w}", x[sys.leaf[t]]));
                }
            }
        }
    }
    Ok(())
}

#[test]
fn full_cert_appendix_c_is_small() {
    let g = gen_appendix_c();
    let base = normalize_turn_order(&g).unwrap();
    let (b, d) = branching_and_depth(&base);
    let aug = build(&g, &named("full-cert"));
    assert!(aug.nodes.len() <= 4 * base.len() * b * d, "{} nodes vs {}", aug.nodes.len(), base.len() * b * d);
    assert!(aug.size.c_sigma <= 4.0 && aug.size.c_bd <= 4.0);
}

#[test]
fn full_cert_reveal_sets_have_two_messages() {
    for g in [gen_kuhn(), gen_appendix_c()] {
        let aug = build(&g, &named("full-cert"));
        let revs: Vec<_> = aug.infosets.iter().filter(|i| i.stage == Stage::Rev).collect();
        assert!(!revs.is_empty());
        assert!(revs.iter().all(|i| i.actions.len() == 2));
        let fam = default_family(&aug.base, FamilyKind::FullCertification);
        assert!(fam.sets.iter().all(|s| s.len() == 2));
        assert!(check_nrc(&fam).holds);
    }
}

#[test]
fn invariants_on_examples() {
    for g in [gen_kuhn(), gen_appendix_c()] {
        for name in NOTION_NAMES {
            check_invariants(&build(&g, &named(name))).unwrap_or_else(|e| panic!("{name}: {e}"));
            check_invariants(&build(&g, &named(name).with_payments(-1.0, 1.0))).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

#[test]
fn zero_payments_change_nothing() {
    let g = gen_appendix_c();
    for name in ["comm", "full-cert", "persuasion"] {
        let plain = solve_augmented(&build(&g, &named(name))).unwrap().solution;
        let paid = solve_augmented(&build(&g, &named(name).with_payments(0.0, 0.0))).unwrap().solution;
        assert_eq!(paid.status, Status::Optimal);
        assert!((plain.objective - paid.objective).abs() < 1e-8, "{name}: {} vs {}", plain.objective, paid.objective);
    }
}

#[test]
fn uniform_payment_is_the_midpoint() {
    let mut b = GameBuilder::new(2);
    b.terminal("z", None, &[0.0, 0.0]).unwrap();
    let t = b.build().unwrap();
    let aug = build(&t, &named("full-cert").with_payments(1.0, 3.0));
    assert_eq!(aug.terminals.len(), 4);
    let uniform = MediatorPolicy::uniform(&aug);
    for p in 0..2 {
        assert!((direct_value(&aug, &uniform, p) - 2.0).abs() < 1e-12);
    }
    // The mediator pays 2 to each player on average.
    let paid: f64 = aug.terminals.iter().map(|&z| aug.reach[z] * 0.5 * aug.nodes[z].utilities[2]).sum();
    assert!((paid + 4.0).abs() < 1e-12, "{paid}");
}

#[test]
fn large_fines_reach_the_relaxed_optimum() {
    // Utilities lie in [-1, 1], so a fine of 2 outweighs any deviation gain.
    let g = gen_appendix_c();
    for name in ["comm", "full-cert"] {
        let aug = build(&g, &named(name).with_payments(-2.0, 0.0));
        let s = solve_augmented(&aug).unwrap().solution;
        assert_eq!(s.status, Status::Optimal);
        let relaxed = relaxed_optimum(&aug);
        assert!((s.objective - relaxed).abs() < 1e-7, "{name}: {} vs {relaxed}", s.objective);
        let unpaid = solve_augmented(&build(&g, &named(name))).unwrap().solution.objective;
        assert!(s.objective >= unpaid - 1e-8);
    }
}

#[test]
fn persuasion_reveals_the_coin() {
    let g = gen_appendix_c();
    let aug = build(&g, &named("persuasion"));
    let solved = solve_augmented(&aug).unwrap();
    assert!(solved.solution.objective >= 1.5 - 1e-6);
    let policy = solved.policy.unwrap();
    let mut checked = 0;
    for (i, info) in aug.infosets.iter().enumerate() {
        if info.agent != aug.mediator() || info.stage != Stage::Rec {
            continue;
        }
        for &v in &info.nodes {
            let node = &aug.nodes[v];
            let name = &aug.base.node(node.base).name;
            if node.deviator.is_some() || aug.reach[v] == 0.0 || !(name == "gH" || name == "gT") {
                continue;
            }
            let coin = &name[1..];
            let a = info.actions.iter().position(|x| x == coin).unwrap();
            assert!(policy.probs[i][a] >= 1.0 - 1e-9, "{}: {:?}", info.name, policy.probs[i]);
            checked += 1;
        }
    }
    assert!(checked >= 2);
}

#[test]
fn relaxed_optimum_bounds_every_notion() {
    let g = gen_appendix_c();
    for name in NOTION_NAMES {
        let aug = build(&g, &named(name));
        let s = solve_augmented(&aug).unwrap().solution;
        assert!(s.objective <= relaxed_optimum(&aug) + 1e-8, "{name}");
    }
}

fn small_game() -> impl Strategy<Value = GameTree> {
    (0u64..5_000, 1usize..=3, 2usize..=3, 0.0f64..=1.0).prop_filter_map("generator failed", |(seed, depth, players, merge)| {
        let p = RandomParams { depth, branching: 2, players, infoset_merge_prob: merge, ..Default::default() };
        gen_random(seed, &p).ok().filter(|g| g.len() <= 60)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariants_on_random_games(g in small_game(), pick in 0usize..8, pay: bool) {
        let mut cfg = named(NOTION_NAMES[pick]);
        if pay {
            cfg = cfg.with_payments(-0.5, 0.5);
        }
        let aug = build(&g, &cfg);
        if let Err(e) = check_invariants(&aug) {
            prop_assert!(false, "{}: {}", NOTION_NAMES[pick], e);
        }
        prop_assert!(aug.size.c_sigma <= 4.0);
    }

    #[test]
    fn honest_projection_preserves_outcomes(g in small_game(), pick in 0usize..8) {
        let aug = build(&g, &named(NOTION_NAMES[pick]));
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for &z in &aug.terminals {
            let node = &aug.nodes[z];
            if node.deviator.is_none() {
                *count.entry(node.base).or_default() += 1;
                let base = aug.base.node(node.base);
                prop_assert_eq!(&node.utilities[..aug.players()], &base.utilities[..]);
            }
        }
        prop_assert_eq!(count.len(), aug.base.terminals().count());
        prop_assert!(count.values().all(|&c| c == 1));
    }

    #[test]
    fn default_families_satisfy_nrc(g in small_game()) {
        let base = normalize_turn_order(&g).unwrap();
        for kind in [FamilyKind::Communication, FamilyKind::FullCertification] {
            let fam = default_family(&base, kind);
            prop_assert!(fam.check(&base).is_ok());
            prop_assert!(check_nrc(&fam).holds);
        }
    }
}
