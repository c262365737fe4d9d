//! `medeq` command-line interface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use medeq::augment::{build_augmented, AugmentedGame};
use medeq::frontier::{payoff_frontier, DEFAULT_DIRECTIONS};
use medeq::game::{normalize_turn_order, validate, GameTree};
use medeq::io::{gen_appendix_c, gen_kuhn, gen_negotiation, gen_random, parse_game, serialize_game, RandomParams};
use medeq::lp::{export_lp, solution_json, solve_augmented, MediatorPolicy, Status};
use medeq::notion::{check_nrc, NotionConfig, Objective, NOTION_NAMES};
use medeq::oracle::{enumerate_deviation_lp, verify_equilibrium, VerificationReport};

const TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "medeq", version, about = "Optimal mediated equilibria of extensive-form games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for an optimal equilibrium and verify it
    Solve {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        notion: NotionArgs,
        /// Write the solution and verification report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace the two-player payoff frontier
    Frontier {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        notion: NotionArgs,
        /// Number of directions
        #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
        k: usize,
        /// Output prefix: writes PREFIX.csv and PREFIX.hull.json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the mediator's linear program in CPLEX LP format
    Export {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        notion: NotionArgs,
        /// Export the enumerated-deviation program instead of the dual one
        #[arg(long)]
        enumerated: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a mediator policy against exact best responses
    Verify {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        notion: NotionArgs,
        /// Policy JSON (a solve output or a bare policy object)
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated game in EFG-S format
    Generate {
        /// kuhn | appendix_c | random:seed=S,depth=D,... | negotiation:P1,P2,ROUNDS
        #[arg(long)]
        gen: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a game and check the nested range condition of a notion
    Check {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value = "comm")]
        notion: String,
    },
}

#[derive(Args)]
struct GameArgs {
    /// Game file in EFG-S format
    #[arg(required_unless_present = "gen", conflicts_with = "gen")]
    path: Option<PathBuf>,
    /// Built-in generator instead of a file
    #[arg(long)]
    gen: Option<String>,
}

#[derive(Args)]
struct NotionArgs {
    /// Notion name or JSON config file
    #[arg(long, default_value = "comm")]
    notion: String,
    /// welfare | player:I | weights:W1,W2,...
    #[arg(long, default_value = "welfare")]
    objective: String,
    /// Payment range
    #[arg(long, num_args = 2, value_names = ["L", "U"], allow_negative_numbers = true)]
    pay: Option<Vec<f64>>,
    /// JSON file {infoset: {message: cost}}
    #[arg(long)]
    costs: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(spec: &str) -> Result<GameTree> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    match name {
        "kuhn" => Ok(gen_kuhn()),
        "appendix_c" | "appendix-c" => Ok(gen_appendix_c()),
        "random" => {
            let mut p = RandomParams::default();
            let mut seed = 0;
            for kv in args.split(',').filter(|s| !s.is_empty()) {
                let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("expected key=value, got {kv}"))?;
                let bad = || anyhow!("bad value for {k}: {v}");
                match k {
                    "seed" => seed = v.parse().map_err(|_| bad())?,
                    "depth" => p.depth = v.parse().map_err(|_| bad())?,
                    "branching" => p.branching = v.parse().map_err(|_| bad())?,
                    "players" => p.players = v.parse().map_err(|_| bad())?,
                    "chance" => p.chance_freq = v.parse().map_err(|_| bad())?,
                    "merge" => p.infoset_merge_prob = v.parse().map_err(|_| bad())?,
                    "zero_sum" => p.zero_sum = v.parse().map_err(|_| bad())?,
                    _ => bail!("unknown random parameter {k}"),
                }
            }
            Ok(gen_random(seed, &p)?)
        }
        "negotiation" => {
            let v: Vec<usize> = args.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()
                .map_err(|_| anyhow!("negotiation expects P1,P2,ROUNDS"))?;
            let [a, b, r] = v[..] else { bail!("negotiation expects P1,P2,ROUNDS") };
            Ok(gen_negotiation(a, b, r)?)
        }
        _ => bail!("unknown generator {name}"),
    }
}

fn load_game(args: &GameArgs) -> Result<GameTree> {
    match (&args.path, &args.gen) {
        (_, Some(spec)) => generate(spec),
        (Some(path), None) => Ok(parse_game(&read(path)?).with_context(|| format!("parsing {}", path.display()))?),
        (None, None) => bail!("give a game file or --gen"),
    }
}

fn load_notion(name: &str) -> Result<NotionConfig> {
    if NOTION_NAMES.contains(&name) {
        return Ok(NotionConfig::named(name)?);
    }
    let path = Path::new(name);
    if path.exists() {
        return Ok(NotionConfig::from_json(&read(path)?)?);
    }
    bail!("unknown notion {name} (expected one of {} or a JSON file)", NOTION_NAMES.join(", "))
}

fn parse_objective(text: &str) -> Result<Objective> {
    if text == "welfare" {
        return Ok(Objective::Welfare);
    }
    if let Some(i) = text.strip_prefix("player:") {
        let i: usize = i.parse().map_err(|_| anyhow!("bad player index {i}"))?;
        if i == 0 {
            bail!("players are numbered from 1");
        }
        return Ok(Objective::Player(i - 1));
    }
    if let Some(w) = text.strip_prefix("weights:") {
        let w: Vec<f64> = w.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()
            .map_err(|_| anyhow!("bad weights {w}"))?;
        return Ok(Objective::Weights(w));
    }
    bail!("objective must be welfare, player:I or weights:W1,W2,...")
}

fn config(args: &NotionArgs) -> Result<NotionConfig> {
    let mut cfg = load_notion(&args.notion)?;
    if let Some(p) = &args.pay {
        if p[0] > p[1] {
            bail!("payment range needs L <= U");
        }
        cfg = cfg.with_payments(p[0], p[1]);
    }
    if let Some(path) = &args.costs {
        let costs: BTreeMap<String, BTreeMap<String, f64>> =
            serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        cfg.message_costs = costs;
    }
    Ok(cfg)
}

fn build(game: &GameArgs, notion: &NotionArgs) -> Result<(GameTree, NotionConfig, AugmentedGame)> {
    let tree = load_game(game)?;
    let cfg = config(notion)?;
    let aug = build_augmented(&tree, &cfg, &parse_objective(&notion.objective)?)?;
    Ok((tree, cfg, aug))
}

fn print_summary(tree: &GameTree, cfg: &NotionConfig, aug: &AugmentedGame) {
    println!("game: {} nodes, {} players ({} after normalization)", tree.len(), tree.player_count(), aug.base.len());
    println!("notion: {cfg}");
    println!(
        "augmented game: {} nodes, {} infosets, C(|H||Sigma|) {:.3}, C(|H|BD) {:.3}",
        aug.nodes.len(),
        aug.infosets.len(),
        aug.size.c_sigma,
        aug.size.c_bd
    );
    if !aug.nrc.holds {
        println!("note: the nested range condition fails; the result is the optimal direct equilibrium only");
    }
}

fn print_report(r: &VerificationReport) {
    println!("verification: {} (max gain {:.3e}, tolerance {:e})", if r.pass { "pass" } else { "FAIL" }, r.max_gain, r.tolerance);
    for p in &r.players {
        println!("  player {}: direct {:.6}, best response {:.6}, gain {:.3e}", p.player, p.direct, p.best_response, p.gain);
    }
}

fn cmd_solve(game: &GameArgs, notion: &NotionArgs, out: Option<&Path>) -> Result<bool> {
    let (tree, cfg, aug) = build(game, notion)?;
    print_summary(&tree, &cfg, &aug);
    let solved = solve_augmented(&aug)?;
    let lp = &solved.program.lp;
    println!("program: {} variables, {} constraints, {} nonzeros", lp.num_vars(), lp.constraints.len(), lp.nonzeros());
    println!("status: {}", solved.solution.status.as_str());
    let mut doc = solution_json(&aug, &solved);
    let mut ok = false;
    if let (Status::Optimal, Some(policy)) = (solved.solution.status, &solved.policy) {
        println!("objective: {:.6}", solved.solution.objective);
        let mediator = aug.infosets.iter().filter(|i| i.agent == aug.mediator()).count();
        println!("policy: {mediator} mediator infosets, {} unreachable (uniform)", policy.unreachable.len());
        let report = verify_equilibrium(&aug, policy, TOL);
        print_report(&report);
        doc["verification"] = serde_json::to_value(&report)?;
        ok = report.pass;
    }
    if let Some(path) = out {
        write_or_print(Some(path), &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    }
    Ok(ok)
}

fn cmd_frontier(game: &GameArgs, notion: &NotionArgs, k: usize, out: Option<&Path>) -> Result<bool> {
    if notion.objective != "welfare" {
        bail!("frontier sweeps its own objectives; drop --objective");
    }
    let tree = load_game(game)?;
    let frontier = payoff_frontier(&tree, &config(notion)?, k)?;
    let hull = format!("{}\n", serde_json::to_string_pretty(&frontier.hull_json())?);
    match out {
        Some(prefix) => {
            let csv = prefix.with_extension("csv");
            let json = prefix.with_extension("hull.json");
            write_or_print(Some(&csv), &frontier.to_csv())?;
            write_or_print(Some(&json), &hull)?;
            println!("wrote {} and {}", csv.display(), json.display());
            println!("hull: {} vertices from {} directions", frontier.hull().len(), k);
        }
        None => print!("{}", frontier.to_csv()),
    }
    let failed = frontier.points.iter().filter(|p| p.point.is_none()).count();
    if failed > 0 {
        eprintln!("{failed} directions did not solve");
    }
    Ok(failed == 0)
}

fn cmd_export(game: &GameArgs, notion: &NotionArgs, enumerated: bool, out: Option<&Path>) -> Result<bool> {
    let (_, _, aug) = build(game, notion)?;
    let lp = if enumerated { enumerate_deviation_lp(&aug)? } else { medeq::lp::build_program(&aug)?.lp };
    write_or_print(out, &export_lp(&lp))?;
    Ok(true)
}

fn cmd_verify(game: &GameArgs, notion: &NotionArgs, policy: &Path, out: Option<&Path>) -> Result<bool> {
    let (tree, cfg, aug) = build(game, notion)?;
    print_summary(&tree, &cfg, &aug);
    let doc: Value = serde_json::from_str(&read(policy)?).with_context(|| format!("parsing {}", policy.display()))?;
    let raw = doc.get("policy").unwrap_or(&doc);
    let policy = MediatorPolicy::from_json(&aug, raw).map_err(|e| anyhow!(e))?;
    let report = verify_equilibrium(&aug, &policy, TOL);
    println!("objective: {:.6}", report.objective);
    print_report(&report);
    if let Some(path) = out {
        write_or_print(Some(path), &format!("{}\n", serde_json::to_string_pretty(&json!(report))?))?;
    }
    Ok(report.pass)
}

fn cmd_check(game: &GameArgs, notion: &str) -> Result<bool> {
    let tree = load_game(game)?;
    let report = validate(&tree);
    println!("game: {} nodes, {} players, {} infosets", tree.len(), tree.player_count(), tree.infosets().len());
    for v in &report.violations {
        println!("  {v}");
    }
    println!("valid: {}", if report.is_valid() { "yes" } else { "no" });
    println!("perfect recall: {}", if report.has_perfect_recall() { "yes" } else { "no" });
    println!("fixed turn order: {}", if report.is_normalized() { "yes" } else { "no (dummy nodes will be inserted)" });
    if !report.is_valid() {
        return Ok(false);
    }
    let normalized = normalize_turn_order(&tree)?;
    let resolved = load_notion(notion)?.resolve(&normalized)?;
    let nrc = check_nrc(&resolved.family);
    match nrc.witness {
        None => println!("nested range condition ({notion}): holds"),
        Some((i, ip, m)) => println!(
            "nested range condition ({notion}): fails, {} may claim {} but {} is not available at {}",
            normalized.infoset(ip).name,
            normalized.infoset(i).name,
            m.label(&normalized),
            normalized.infoset(ip).name
        ),
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Solve { game, notion, out } => cmd_solve(game, notion, out.as_deref()),
        Command::Frontier { game, notion, k, out } => cmd_frontier(game, notion, *k, out.as_deref()),
        Command::Export { game, notion, enumerated, out } => cmd_export(game, notion, *enumerated, out.as_deref()),
        Command::Verify { game, notion, policy, out } => cmd_verify(game, notion, policy, out.as_deref()),
        Command::Generate { gen, out } => {
            write_or_print(out.as_deref(), &serialize_game(&generate(gen)?))?;
            Ok(true)
        }
        Command::Check { game, notion } => cmd_check(game, notion),
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("MEDEQ_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second initialization can only fail if the pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
