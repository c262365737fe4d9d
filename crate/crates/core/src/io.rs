//! The EFG-S text format and built-in game generators.
//!
//! ```text
//! game 2
//! node root chance probs l:0.5,r:0.5
//! node a player 1 infoset A actions x,y parent root via l
//! node b terminal utils 1,0 parent root via r
//! ...
//! ```
//!
//! Players are numbered from 1 in files. Node and infoset ids are arbitrary
//! whitespace-free tokens; a node's parent must appear on an earlier line.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GameError, ParseError};
use crate::game::{validate, GameBuilder, GameTree, Owner};

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn parse_f64(line: usize, s: &str) -> Result<f64, ParseError> {
    let v: f64 = s.parse().map_err(|_| syntax(line, format!("bad number {s:?}")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("non-finite number {s:?}")));
    }
    Ok(v)
}

/// Parses an EFG-S document and validates the result.
///
/// Timing violations (mixed-owner layers, infosets spanning layers) are
/// allowed; they are repaired later by `normalize_turn_order`.
pub fn parse_game(text: &str) -> Result<GameTree, ParseError> {
    let mut builder: Option<GameBuilder> = None;
    let mut pending_players: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "game" => {
                if builder.is_some() || pending_players.is_some() {
                    return Err(syntax(line, "duplicate game header"));
                }
                let n = tokens
                    .get(1)
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&n| n >= 1 && tokens.len() == 2)
                    .ok_or_else(|| syntax(line, "expected `game <n_players>`"))?;
                pending_players = Some(n);
            }
            "node" => {
                if builder.is_none() {
                    let n = match pending_players {
                        Some(n) => n,
                        None => return Err(syntax(line, "missing `game <n>` header")),
                    };
                    builder = Some(GameBuilder::new(n));
                }
                parse_node(builder.as_mut().unwrap(), line, &tokens)?;
            }
            other => return Err(syntax(line, format!("unknown record {other:?}"))),
        }
    }
    let builder = builder.ok_or(GameError::Empty)?;
    let tree = builder.build()?;
    let report = validate(&tree);
    if let Some(v) = report.violations.iter().find(|v| !v.is_timing()) {
        return Err(GameError::Invalid(v.to_string()).into());
    }
    Ok(tree)
}

fn parse_node(b: &mut GameBuilder, line: usize, t: &[&str]) -> Result<(), ParseError> {
    if t.len() < 3 {
        return Err(syntax(line, "incomplete node record"));
    }
    let name = t[1];
    if b.lookup(name).is_some() {
        return Err(syntax(line, format!("duplicate node id {name}")));
    }
    let (body, parent) = match t.iter().position(|&x| x == "parent") {
        Some(p) => {
            if t.len() != p + 4 || t[p + 2] != "via" {
                return Err(syntax(line, "expected `parent <id> via <action>`"));
            }
            let pid = b
                .lookup(t[p + 1])
                .ok_or_else(|| syntax(line, format!("parent {} not declared earlier", t[p + 1])))?;
            (&t[2..p], Some((pid, t[p + 3])))
        }
        None => (&t[2..], None),
    };
    let at_line = |e: GameError| syntax(line, e.to_string());
    match body {
        ["player", p, "infoset", iid, "actions", actions] => {
            let p: usize = p.parse().map_err(|_| syntax(line, format!("bad player {p:?}")))?;
            if p == 0 || p > b.player_count() {
                return Err(syntax(line, format!("player {p} out of range")));
            }
            let actions: Vec<&str> = actions.split(',').collect();
            b.player(name, parent, p - 1, iid, &actions).map_err(at_line)?;
        }
        ["chance", "probs", probs] => {
            let mut outcomes = Vec::new();
            for item in probs.split(',') {
                let (a, p) =
                    item.split_once(':').ok_or_else(|| syntax(line, format!("bad outcome {item:?}")))?;
                let p = parse_f64(line, p)?;
                if p < 0.0 {
                    return Err(syntax(line, "negative probability"));
                }
                outcomes.push((a, p));
            }
            let sum: f64 = outcomes.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(syntax(line, format!("probabilities sum to {sum}")));
            }
            if (sum - 1.0).abs() > 1e-12 {
                for o in &mut outcomes {
                    o.1 /= sum;
                }
            }
            b.chance(name, parent, &outcomes).map_err(at_line)?;
        }
        ["terminal", "utils", utils @ ..] if !utils.is_empty() => {
            let values = utils
                .iter()
                .flat_map(|u| u.split(','))
                .filter(|u| !u.is_empty())
                .map(|u| parse_f64(line, u))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != b.player_count() {
                return Err(syntax(line, format!("expected {} utilities", b.player_count())));
            }
            b.terminal(name, parent, &values).map_err(at_line)?;
        }
        _ => return Err(syntax(line, "malformed node record")),
    }
    Ok(())
}

/// Canonical EFG-S text: nodes in BFS order, actions in stored order.
pub fn serialize_game(tree: &GameTree) -> String {
    let mut out = format!("game {}\n", tree.player_count());
    for node in tree.nodes() {
        let _ = write!(out, "node {}", node.name);
        match node.owner {
            Owner::Player(p) => {
                let info = tree.infoset(node.infoset.unwrap());
                let _ = write!(out, " player {} infoset {} actions {}", p + 1, info.name, node.actions.join(","));
            }
            Owner::Chance => {
                let probs: Vec<String> =
                    node.actions.iter().zip(&node.chance_probs).map(|(a, p)| format!("{a}:{p}")).collect();
                let _ = write!(out, " chance probs {}", probs.join(","));
            }
            Owner::Terminal => {
                let utils: Vec<String> = node.utilities.iter().map(f64::to_string).collect();
                let _ = write!(out, " terminal utils {}", utils.join(","));
            }
        }
        if let (Some(p), Some(a)) = (node.parent, &node.incoming_action) {
            let _ = write!(out, " parent {} via {}", tree.node(p).name, a);
        }
        out.push('\n');
    }
    out
}

/// Three-card Kuhn poker with an ante of one chip and bets of one chip.
pub fn gen_kuhn() -> GameTree {
    const CARDS: [&str; 3] = ["J", "Q", "K"];
    let mut b = GameBuilder::new(2);
    let root = b
        .chance("deal", None, &[("J", 1.0 / 3.0), ("Q", 1.0 / 3.0), ("K", 1.0 / 3.0)])
        .unwrap();
    for (i, c1) in CARDS.iter().enumerate() {
        let others: Vec<(&str, f64)> =
            CARDS.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| (*c, 0.5)).collect();
        let d2 = b.chance(format!("deal{c1}"), Some((root, c1)), &others).unwrap();
        for &(c2, _) in &others {
            let j = CARDS.iter().position(|c| *c == c2).unwrap();
            // Showdown payoff for P1 when `stake` chips each are in the pot.
            let show = |stake: f64| if i > j { stake } else { -stake };
            let tag = format!("{c1}{c2}");
            let p1 = b
                .player(tag.clone(), Some((d2, c2)), 0, &format!("P1{c1}"), &["check", "bet"])
                .unwrap();
            let p2c = b
                .player(format!("{tag}c"), Some((p1, "check")), 1, &format!("P2{c2}c"), &["check", "bet"])
                .unwrap();
            b.terminal(format!("{tag}cc"), Some((p2c, "check")), &[show(1.0), -show(1.0)]).unwrap();
            let p1cb = b
                .player(format!("{tag}cb"), Some((p2c, "bet")), 0, &format!("P1{c1}cb"), &["fold", "call"])
                .unwrap();
            b.terminal(format!("{tag}cbf"), Some((p1cb, "fold")), &[-1.0, 1.0]).unwrap();
            b.terminal(format!("{tag}cbc"), Some((p1cb, "call")), &[show(2.0), -show(2.0)]).unwrap();
            let p2b = b
                .player(format!("{tag}b"), Some((p1, "bet")), 1, &format!("P2{c2}b"), &["fold", "call"])
                .unwrap();
            b.terminal(format!("{tag}bf"), Some((p2b, "fold")), &[1.0, -1.0]).unwrap();
            b.terminal(format!("{tag}bc"), Some((p2b, "call")), &[show(2.0), -show(2.0)]).unwrap();
        }
    }
    b.build().unwrap()
}

/// The four-subgame game in which persuasion beats every normal-form coarse
/// correlated equilibrium.
///
/// Chance picks `up`, `down`, `H` or `T` uniformly. In `up` (`down`) player 1
/// (player 2) may exit, giving the other player 1; otherwise the other player
/// moves first in matching pennies and the exiting-candidate matches without
/// seeing that move. In `H`/`T` player 1 guesses the outcome without seeing it;
/// a correct guess pays both players 1.
pub fn gen_appendix_c() -> GameTree {
    let mut b = GameBuilder::new(2);
    let q = 0.25;
    let root = b.chance("root", None, &[("up", q), ("down", q), ("H", q), ("T", q)]).unwrap();
    // (chance label, player offered exit, exit payoffs, prefix)
    for (label, s, exit, tag) in [("up", 0usize, [0.0, 1.0], "u"), ("down", 1usize, [1.0, 0.0], "d")] {
        let other = 1 - s;
        let offer = b.player(tag, Some((root, label)), s, &format!("{tag}.exit"), &["exit", "play"]).unwrap();
        b.terminal(format!("{tag}x"), Some((offer, "exit")), &exit).unwrap();
        let first = b
            .player(format!("{tag}p"), Some((offer, "play")), other, &format!("{tag}.first"), &["h", "t"])
            .unwrap();
        for first_move in ["h", "t"] {
            let second = b
                .player(format!("{tag}p{first_move}"), Some((first, first_move)), s, &format!("{tag}.second"), &["h", "t"])
                .unwrap();
            for second_move in ["h", "t"] {
                // The second mover is `s`; player 1 wins on a match.
                let matched = first_move == second_move;
                let u1 = if matched { 1.0 } else { -1.0 };
                b.terminal(format!("{tag}p{first_move}{second_move}"), Some((second, second_move)), &[u1, -u1])
                    .unwrap();
            }
        }
    }
    for label in ["H", "T"] {
        let g = b.player(format!("g{label}"), Some((root, label)), 0, "guess", &["H", "T"]).unwrap();
        for guess in ["H", "T"] {
            let u = if guess == label { 1.0 } else { 0.0 };
            b.terminal(format!("g{label}{guess}"), Some((g, guess)), &[u, u]).unwrap();
        }
    }
    b.build().unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomParams {
    pub depth: usize,
    pub branching: usize,
    pub players: usize,
    /// Probability that an internal node is a chance node.
    pub chance_freq: f64,
    /// Probability that a player node joins an existing compatible infoset.
    pub infoset_merge_prob: f64,
    /// Make the utilities of all players sum to zero at every terminal.
    pub zero_sum: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            depth: 3,
            branching: 2,
            players: 2,
            chance_freq: 0.25,
            infoset_merge_prob: 0.5,
            zero_sum: false,
        }
    }
}

/// Upper bound on the size of generated random games.
pub const MAX_RANDOM_NODES: usize = 500;

/// Random perfect-recall game, deterministic in `seed`.
///
/// Internal nodes above `depth` have `branching` children; a node stops early
/// with probability 0.2 below the root. Player nodes may share an infoset only
/// when they sit in the same layer with the same owner and the same own
/// sequence, which keeps perfect recall. Utilities are small integers.
pub fn gen_random(seed: u64, params: &RandomParams) -> Result<GameTree, GameError> {
    if params.players == 0 {
        return Err(GameError::NoPlayers);
    }
    if params.branching == 0 {
        return Err(GameError::NoActions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..params.branching).map(|a| format!("a{a}")).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut b = GameBuilder::new(params.players);
    let mut count = 0usize;
    // (parent builder id and action, layer, per-player last (infoset, action))
    type Seq = Option<(String, usize)>;
    let mut frontier: Vec<(Option<(usize, usize)>, usize, Vec<Seq>)> =
        vec![(None, 0, vec![None; params.players])];
    let mut infoset_count = 0usize;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        // Per layer: (owner, own sequence) -> infosets created so far.
        let mut groups: HashMap<(usize, Seq), Vec<String>> = HashMap::new();
        for (parent, layer, seqs) in frontier {
            count += 1;
            if count > MAX_RANDOM_NODES {
                return Err(GameError::TooLarge(count));
            }
            let name = format!("n{}", count - 1);
            let parent = parent.map(|(p, a)| (p, labels[a]));
            let stop = layer >= params.depth || (layer > 0 && rng.gen_bool(0.2));
            if stop {
                let mut u: Vec<f64> = (0..params.players).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
                if params.zero_sum {
                    let rest: f64 = u[..params.players - 1].iter().sum();
                    u[params.players - 1] = 0.0 - rest;
                }
                b.terminal(name, parent, &u)?;
                continue;
            }
            let id;
            let mut owner = None;
            if rng.gen_bool(params.chance_freq) {
                let weights: Vec<u32> = (0..params.branching).map(|_| rng.gen_range(1..=4)).collect();
                let total: u32 = weights.iter().sum();
                let outcomes: Vec<(&str, f64)> =
                    labels.iter().zip(&weights).map(|(a, w)| (*a, *w as f64 / total as f64)).collect();
                id = b.chance(name, parent, &outcomes)?;
            } else {
                let p = rng.gen_range(0..params.players);
                let group = groups.entry((p, seqs[p].clone())).or_default();
                let infoset = if !group.is_empty() && rng.gen_bool(params.infoset_merge_prob) {
                    group[rng.gen_range(0..group.len())].clone()
                } else {
                    infoset_count += 1;
                    let iname = format!("I{}", infoset_count - 1);
                    group.push(iname.clone());
                    iname
                };
                id = b.player(name, parent, p, &infoset, &labels)?;
                owner = Some((p, infoset));
            }
            for a in 0..params.branching {
                let mut s = seqs.clone();
                if let Some((p, infoset)) = &owner {
                    s[*p] = Some((infoset.clone(), a));
                }
                next.push((Some((id, a)), layer + 1, s));
            }
        }
        frontier = next;
    }
    b.build()
}

/// Bribery game between a smuggler (player 1) and an inspector (player 2).
///
/// Chance draws the cargo as `legal` or `illegal` (each 1/2); only player 1
/// sees it. In each of `rounds` rounds player 1 offers a bribe of
/// `0..=p1_power` chips and player 2 accepts (ending the game) or rejects.
/// After the last rejection player 2 inspects or passes. Inspecting illegal
/// cargo fines player 1 `p2_power` chips in player 2's favour; inspecting legal
/// cargo costs player 2 one chip of compensation. Cargo is worth 1 (legal) or
/// 3 (illegal) to player 1 when it passes.
///
/// This is a loose stand-in for the Sheriff benchmark, not its exact rules.
pub fn gen_negotiation(p1_power: usize, p2_power: usize, rounds: usize) -> Result<GameTree, GameError> {
    if rounds == 0 || rounds > 4 {
        return Err(GameError::Invalid(format!("rounds must be in 1..=4, got {rounds}")));
    }
    let offers: Vec<String> = (0..=p1_power).map(|k| format!("b{k}")).collect();
    let offer_labels: Vec<&str> = offers.iter().map(String::as_str).collect();
    let mut b = GameBuilder::new(2);
    let root = b.chance("cargo", None, &[("legal", 0.5), ("illegal", 0.5)])?;
    let fine = p2_power as f64;
    for cargo in ["legal", "illegal"] {
        let value = if cargo == "legal" { 1.0 } else { 3.0 };
        // Depth-first over offer histories.
        let mut stack: Vec<(usize, String, Vec<usize>)> = vec![(root, cargo.to_string(), Vec::new())];
        while let Some((parent, via, history)) = stack.pop() {
            let hist: String = history.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("");
            let tag = format!("{}{}", &cargo[..1], hist);
            if history.len() == rounds {
                let last = format!("h{hist}");
                let node = b.player(format!("{tag}i"), Some((parent, &via)), 1, &format!("P2{last}.inspect"), &["inspect", "pass"])?;
                let (u_illegal, u_legal) = ([-fine, fine], [value + 1.0, -1.0]);
                let inspect = if cargo == "legal" { u_legal } else { u_illegal };
                b.terminal(format!("{tag}iy"), Some((node, "inspect")), &inspect)?;
                b.terminal(format!("{tag}in"), Some((node, "pass")), &[value, 0.0])?;
                continue;
            }
            let p1 = b.player(format!("{tag}o"), Some((parent, &via)), 0, &format!("P1{tag}"), &offer_labels)?;
            for (k, label) in offer_labels.iter().enumerate().rev() {
                let hk = format!("{hist}{k}");
                let p2 = b.player(format!("{tag}o{k}"), Some((p1, label)), 1, &format!("P2h{hk}"), &["accept", "reject"])?;
                let bribe = k as f64;
                b.terminal(format!("{tag}o{k}a"), Some((p2, "accept")), &[value - bribe, bribe])?;
                let mut h = history.clone();
                h.push(k);
                stack.push((p2, "reject".to_string(), h));
            }
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{normalize_turn_order, reward_range, sequence_of, SeqKind};

    #[test]
    fn three_line_document() {
        let text = "game 2\nnode root chance probs L:0.5,R:0.5\nnode L terminal utils 1,0 parent root via L\nnode R terminal utils 0 1 parent root via R\n";
        let t = parse_game(text).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.node(2).utilities, vec![0.0, 1.0]);
    }

    #[test]
    fn duplicate_node_reports_line() {
        let text = "game 1\nnode r player 1 infoset A actions x,y\n# comment\nnode r terminal utils 0 parent r via x\n";
        match parse_game(text) {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_probability_sum_is_rejected() {
        let text = "game 1\nnode r chance probs a:0.5,b:0.4\nnode x terminal utils 0 parent r via a\nnode y terminal utils 0 parent r via b\n";
        assert!(matches!(parse_game(text), Err(ParseError::Syntax { line: 2, .. })));
    }

    #[test]
    fn kuhn_shape() {
        let k = gen_kuhn();
        assert_eq!(k.len(), 58);
        assert_eq!(k.terminals().count(), 30);
        assert!(validate(&k).is_empty());
        assert_eq!(reward_range(&k), vec![(-2.0, 2.0), (-2.0, 2.0)]);
        assert_eq!(normalize_turn_order(&k).unwrap(), k);
        // P1's second decision follows her own check.
        let second = k.nodes().iter().position(|n| n.name == "KQcb").unwrap();
        let first = k.infoset_by_name("P1K").unwrap();
        assert_eq!(sequence_of(&k, second, 0).kind, SeqKind::Pair(first, 0));
    }

    #[test]
    fn appendix_c_shape() {
        let g = gen_appendix_c();
        assert_eq!(g.terminals().count(), 14);
        assert_eq!(g.node(0).chance_probs, vec![0.25; 4]);
        assert_eq!(reward_range(&g)[0], (-1.0, 1.0));
        let best = g.terminals().map(|z| g.node(z).utilities.iter().sum::<f64>()).fold(f64::MIN, f64::max);
        assert_eq!(best, 2.0);
        let report = validate(&g);
        assert!(report.is_valid() && !report.is_normalized());
        let n = normalize_turn_order(&g).unwrap();
        assert!(validate(&n).is_empty());
        let mut before: Vec<String> = g.terminals().map(|z| format!("{:?}", g.node(z).utilities)).collect();
        let mut after: Vec<String> = n.terminals().map(|z| format!("{:?}", n.node(z).utilities)).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn round_trips() {
        let p = RandomParams { depth: 4, ..RandomParams::default() };
        for t in [gen_kuhn(), gen_appendix_c(), gen_random(3, &p).unwrap(), gen_negotiation(2, 2, 2).unwrap()] {
            let text = serialize_game(&t);
            let back = parse_game(&text).unwrap();
            assert_eq!(back, t);
            assert_eq!(serialize_game(&back), text);
        }
    }

    #[test]
    fn random_games() {
        let p = RandomParams { depth: 4, branching: 2, players: 2, ..RandomParams::default() };
        let a = gen_random(1, &p).unwrap();
        assert_eq!(a, gen_random(1, &p).unwrap());
        assert!(validate(&a).is_valid());
        let flat = RandomParams { infoset_merge_prob: 0.0, ..p };
        let t = gen_random(5, &flat).unwrap();
        assert!(t.infosets().iter().all(|i| i.nodes.len() == 1));
        let big = RandomParams { depth: 12, branching: 3, ..p };
        assert!(matches!(gen_random(0, &big), Err(GameError::TooLarge(_))));
    }

    #[test]
    fn negotiation_grid() {
        assert!(gen_negotiation(1, 1, 5).is_err());
        let one = gen_negotiation(1, 1, 1).unwrap();
        assert_eq!(one.infosets().iter().filter(|i| i.player == 0).count(), 2);
        for p1 in 0..=3 {
            for p2 in 0..=3 {
                for r in 1..=3 {
                    let t = gen_negotiation(p1, p2, r).unwrap();
                    assert!(validate(&t).is_empty(), "{p1} {p2} {r}");
                }
            }
        }
    }
}
