//! `energy-pomdp`: check, solve, learn, evaluate and generate energy-constrained
//! POMDPs. Each subcommand reads and writes plain-text artifacts so the steps
//! can be run separately or swapped for external tools.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use energy_pomdp::benchmarks::{toy, Hallway, MoveNoise, RockSample};
use energy_pomdp::dtree::{
    generate_training_data, learn_tree, prune_tree, Criterion, DecisionTree, DtPolicy, FeatureMap, LearnOptions,
    TreeError, DEFAULT_ALPHA, DEFAULT_MIN_LEAF, DEFAULT_SIMULATIONS, DEFAULT_STEPS,
};
use energy_pomdp::parser::{emit_model, parse_model, read_training_set, write_training_set, TrainingSetError};
use energy_pomdp::qualitative::{
    compute_allowed, export_allowed, qualitative_answer, Feasibility, SigmaAll, SupportGraph,
};
use energy_pomdp::rtdp::{Rtdp, RtdpError, TableError, Terminal, DEFAULT_CUTOFF, DEFAULT_PRECISION, DEFAULT_TRIALS};
use energy_pomdp::simulate::{evaluate, report_csv, report_table, EvalReport};
use energy_pomdp::{AllowedTable, Pomdp, ProductPomdp, TrainingSet, ValueTable};

const THREADS_VAR: &str = "ENERGY_POMDP_THREADS";
const DEFAULT_EVAL_SIMS: usize = 10_000;

#[derive(Parser)]
#[command(name = "energy-pomdp", version, about = "Energy-constrained POMDP solver and policy learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the target can be reached almost surely without running out of energy.
    Check(CheckArgs),
    /// Run RTDP-Bel and write the value table.
    Solve(SolveCmd),
    /// Learn a decision tree from a value table or a training set.
    Learn(LearnCmd),
    /// Evaluate the allowed-action, greedy and tree policies side by side.
    Eval(EvalCmd),
    /// Generate a benchmark model file.
    Bench(BenchCmd),
}

#[derive(Args)]
struct ModelArgs {
    /// Model file.
    model: PathBuf,
    /// Override the model's energy capacity (0 disables the energy constraint).
    #[arg(long)]
    cap: Option<u32>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the allowed actions of every winning support here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Belief discretization precision B.
    #[arg(long, default_value_t = DEFAULT_PRECISION, value_parser = clap::value_parser!(u32).range(1..))]
    precision: u32,
    /// Number of RTDP-Bel trials.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Maximum number of steps per trial or simulated run.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solve: SolveArgs,
    /// Value table output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial convergence trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Infogain,
    Gini,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturesArg {
    Raw,
    Grid,
}

#[derive(Args, Clone)]
struct TreeArgs {
    #[arg(long, value_enum, default_value_t = CriterionArg::Infogain)]
    criterion: CriterionArg,
    /// Pruning penalty per leaf.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_LEAF)]
    min_leaf: usize,
    #[arg(long, value_enum, default_value_t = FeaturesArg::Raw)]
    features: FeaturesArg,
    /// Steps per simulated run when collecting training data.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
}

#[derive(Args)]
struct LearnCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solve: SolveArgs,
    #[command(flatten)]
    tree: TreeArgs,
    /// Value table to simulate the greedy policy from.
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    table: Option<PathBuf>,
    /// Learn from an existing training set instead.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Simulated runs of the greedy policy used as training data.
    #[arg(long, default_value_t = DEFAULT_SIMULATIONS)]
    sims: usize,
    /// Tree output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Graphviz rendering of the tree.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the generated training set.
    #[arg(long)]
    emit_data: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    All,
    Rtdp,
    Dt,
}

#[derive(Args)]
struct EvalCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solve: SolveArgs,
    #[command(flatten)]
    tree: TreeArgs,
    /// Policies to evaluate; missing tables and trees are computed on the fly.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [PolicyArg::All, PolicyArg::Rtdp, PolicyArg::Dt])]
    policies: Vec<PolicyArg>,
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    tree_file: Option<PathBuf>,
    /// Evaluation runs per policy.
    #[arg(long, default_value_t = DEFAULT_EVAL_SIMS)]
    sims: usize,
    /// Training runs when a tree has to be learned.
    #[arg(long, default_value_t = DEFAULT_SIMULATIONS)]
    train_sims: usize,
    /// Report output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Hallway,
    Rocksample,
    Tiger,
    Corridor,
}

#[derive(Args)]
struct BenchCmd {
    #[arg(value_enum)]
    family: Family,
    /// Built-in hallway layout (5x5, 6x6, 8x8, 10x10).
    #[arg(long, default_value = "6x6")]
    layout: String,
    /// Hallway map file instead of a built-in layout.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Use the classic 0.8/0.05/0.05/0.1 movement noise for hallways.
    #[arg(long)]
    noisy: bool,
    /// RockSample grid size.
    #[arg(long, default_value_t = 3)]
    size: usize,
    /// RockSample rock count.
    #[arg(long, default_value_t = 4)]
    rocks: usize,
    /// Corridor length.
    #[arg(long, default_value_t = 5)]
    len: usize,
    /// Corridor reload cell (omit for a corridor without reload).
    #[arg(long)]
    reload_at: Option<usize>,
    #[arg(long)]
    cap: Option<u32>,
    /// Model output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn at(path: &Path, line: Option<usize>, message: impl std::fmt::Display) -> Self {
        match line {
            Some(l) => Failure::input(format!("{}:{l}: {message}", path.display())),
            None => Failure::input(format!("{}: {message}", path.display())),
        }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Learn(args) => cmd_learn(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

// ---------------------------------------------------------------------------
// Input and output

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::at(path, None, e))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::at(p, None, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Replaces `#` comment lines with spaces so line numbers and offsets stay valid.
fn blank_comments(text: &str) -> String {
    text.split_inclusive('\n')
        .map(|l| {
            if l.trim_start().starts_with('#') {
                l.chars().map(|c| if c == '\n' { c } else { ' ' }).collect()
            } else {
                l.to_string()
            }
        })
        .collect()
}

fn load_model(args: &ModelArgs) -> Result<Pomdp> {
    let text = read(&args.model)?;
    let parsed = parse_model(&text)
        .map_err(|e| Failure::input(format!("{}:{}:{}: {}", args.model.display(), e.line, e.column, e.message)))?;
    let mut model = parsed.into_pomdp();
    if let Some(cap) = args.cap {
        model.capacity = cap;
    }
    if let Some(v) = model.validate().first() {
        return Err(Failure::at(&args.model, None, format!("{v:?}")));
    }
    Ok(model)
}

fn threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Failure::input(format!("{THREADS_VAR}: expected a positive integer, found '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Configuration echo written at the top of every output.
struct Header(Vec<(String, String)>);

impl Header {
    fn new(command: &str, model: &ModelArgs) -> Self {
        let mut h = Header(Vec::new());
        h.push("command", command);
        h.push("model", model.model.display());
        h.push("cap", model.cap.map(|c| c.to_string()).unwrap_or_else(|| "model".into()));
        h
    }

    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn solve(&mut self, s: &SolveArgs) {
        self.push("precision", s.precision);
        self.push("trials", s.trials);
        self.push("cutoff", s.cutoff);
        self.push("seed", s.seed);
    }

    fn tree(&mut self, t: &TreeArgs) {
        self.push("criterion", criterion_name(t.criterion));
        self.push("alpha", t.alpha);
        self.push("min_leaf", t.min_leaf);
        self.push("features", features_name(t.features));
        self.push("steps", t.steps);
    }

    fn lines(&self, prefix: &str) -> String {
        let mut out = format!("{prefix} energy-pomdp {}\n", env!("CARGO_PKG_VERSION"));
        let _ = write!(out, "{prefix}");
        for (k, v) in &self.0 {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        out
    }
}

fn criterion_name(c: CriterionArg) -> &'static str {
    match c {
        CriterionArg::Infogain => "infogain",
        CriterionArg::Gini => "gini",
    }
}

fn features_name(f: FeaturesArg) -> &'static str {
    match f {
        FeaturesArg::Raw => "raw",
        FeaturesArg::Grid => "grid",
    }
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces

struct Analysis {
    product: ProductPomdp,
    graph: SupportGraph,
    allowed: AllowedTable,
}

fn analyse(model: Pomdp) -> Result<Analysis> {
    let product = ProductPomdp::for_model(Arc::new(model));
    let graph = SupportGraph::build(&product).map_err(|e| Failure::input(e.to_string()))?;
    let allowed = compute_allowed(&graph);
    Ok(Analysis { product, graph, allowed })
}

fn require_feasible(an: &Analysis) -> Result<()> {
    match qualitative_answer(&an.graph, &an.allowed) {
        Feasibility::Feasible => Ok(()),
        Feasibility::Infeasible => Err(Failure::infeasible("infeasible: no initial support is winning")),
    }
}

fn solve(an: &Analysis, s: &SolveArgs) -> Result<(ValueTable, Vec<energy_pomdp::rtdp::TrialRecord>)> {
    let rtdp = Rtdp::new(&an.product, &an.graph, &an.allowed, s.precision);
    let mut table = ValueTable::new(&an.product, s.precision);
    let trials = rtdp.solve(&mut table, s.trials, s.cutoff, s.seed).map_err(|e| match e {
        RtdpError::Infeasible => Failure::infeasible(e.to_string()),
        other => Failure::input(other.to_string()),
    })?;
    Ok((table, trials))
}

fn load_table(path: &Path, an: &Analysis) -> Result<ValueTable> {
    let table = ValueTable::from_text(&read(path)?).map_err(|e| match e {
        TableError::Header(l) => Failure::at(path, Some(l), "missing or malformed header"),
        TableError::Arity { line, expected, found } => {
            Failure::at(path, Some(line), format!("expected {expected} belief entries, found {found}"))
        }
        TableError::Syntax { line, message } => Failure::at(path, Some(line), message),
        TableError::Mismatch(m) => Failure::at(path, None, m),
    })?;
    table.check_compatible(&an.product).map_err(|e| Failure::at(path, Some(1), e))?;
    Ok(table)
}

fn feature_map(model: &Pomdp, f: FeaturesArg) -> Result<FeatureMap> {
    match f {
        FeaturesArg::Raw => Ok(FeatureMap::raw(model)),
        FeaturesArg::Grid => FeatureMap::grid(model).map_err(|e| Failure::input(e.to_string())),
    }
}

fn learn(data: &TrainingSet, t: &TreeArgs) -> Result<DecisionTree> {
    let criterion = match t.criterion {
        CriterionArg::Infogain => Criterion::InfoGain,
        CriterionArg::Gini => Criterion::Gini,
    };
    let options = LearnOptions { criterion, min_leaf: t.min_leaf, max_depth: None };
    let tree = learn_tree(data, &options).map_err(|e| Failure::input(e.to_string()))?;
    Ok(prune_tree(&tree, data, t.alpha))
}

fn training_data(
    an: &Analysis,
    table: &ValueTable,
    features: &FeatureMap,
    sims: usize,
    steps: usize,
    seed: u64,
) -> Result<TrainingSet> {
    let rtdp = Rtdp::new(&an.product, &an.graph, &an.allowed, table.precision);
    generate_training_data(&mut rtdp.greedy(table), &an.product, features, table.precision, sims, steps, seed)
        .map_err(|e| Failure::input(e.to_string()))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn load_tree(path: &Path, features: &FeatureMap) -> Result<DecisionTree> {
    let text = blank_comments(&read(path)?);
    DecisionTree::parse(&text, features.names()).map_err(|e| match e {
        TreeError::Syntax { pos, message } => Failure::at(path, Some(line_of(&text, pos)), message),
        other => Failure::at(path, None, other),
    })
}

fn load_training_set(path: &Path) -> Result<TrainingSet> {
    read_training_set(&blank_comments(&read(path)?)).map_err(|e| match e {
        TrainingSetError::ColumnCount { line, expected, found } => {
            Failure::at(path, Some(line), format!("expected {expected} columns, found {found}"))
        }
        TrainingSetError::NotInteger { line, cell } => {
            Failure::at(path, Some(line), format!("'{cell}' is not an integer"))
        }
        TrainingSetError::BadLabel { line, cell } => {
            Failure::at(path, Some(line), format!("'{cell}' is not a valid action label"))
        }
        TrainingSetError::MissingHeader => Failure::at(path, Some(1), "missing header row"),
    })
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_check(args: CheckArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let header = Header::new("check", &args.model);
    let summary = format!(
        "model: {} states, {} actions, {} observations, capacity {}\n",
        model.num_states(),
        model.num_actions(),
        model.num_observations(),
        model.capacity
    );
    let an = analyse(model)?;
    let answer = qualitative_answer(&an.graph, &an.allowed);
    if let Some(out) = &args.out {
        let text = header.lines("#") + &export_allowed(&an.graph, &an.allowed, &an.product);
        write_or_print(Some(out), &text)?;
    }
    print!("{}{summary}", header.lines("#"));
    println!("product: {} states", an.product.num_states());
    println!("supports: {} ({} winning)", an.graph.len(), an.allowed.num_winning());
    println!("{answer}");
    match answer {
        Feasibility::Feasible => Ok(()),
        Feasibility::Infeasible => Err(Failure::infeasible(format!("{}: infeasible", args.model.model.display()))),
    }
}

fn cmd_solve(args: SolveCmd) -> Result<()> {
    let an = analyse(load_model(&args.model)?)?;
    require_feasible(&an)?;
    let mut header = Header::new("solve", &args.model);
    header.solve(&args.solve);
    let (table, trials) = solve(&an, &args.solve)?;
    // The table's own header must stay on the first line.
    let text = table.to_text();
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    write_or_print(args.out.as_deref(), &format!("{first}\n{}{rest}", header.lines("#")))?;
    if let Some(path) = &args.trace {
        let mut csv = header.lines("#") + "trial,steps,terminal,cost\n";
        for (i, t) in trials.iter().enumerate() {
            let terminal = match t.terminal {
                Terminal::Target => "target",
                Terminal::Cutoff => "cutoff",
            };
            let _ = writeln!(csv, "{i},{},{terminal},{}", t.steps, t.cost);
        }
        write_or_print(Some(path), &csv)?;
    }
    if args.out.is_some() {
        let reached = trials.iter().filter(|t| t.terminal == Terminal::Target).count();
        println!("{} trials, {reached} reached the target, {} table entries", trials.len(), table.len());
    }
    Ok(())
}

fn cmd_learn(args: LearnCmd) -> Result<()> {
    let model = load_model(&args.model)?;
    let features = feature_map(&model, args.tree.features)?;
    let mut header = Header::new("learn", &args.model);
    header.solve(&args.solve);
    header.tree(&args.tree);
    header.push("sims", args.sims);
    let data = match (&args.data, &args.table) {
        (Some(path), _) => {
            let data = load_training_set(path)?;
            if data.feature_names != features.names() {
                return Err(Failure::at(path, Some(1), "columns do not match the model's feature map"));
            }
            header.push("data", path.display());
            data
        }
        (None, Some(path)) => {
            let an = analyse(model.clone())?;
            require_feasible(&an)?;
            let table = load_table(path, &an)?;
            header.push("table", path.display());
            training_data(&an, &table, &features, args.sims, args.tree.steps, args.solve.seed)?
        }
        (None, None) => unreachable!("clap requires --table or --data"),
    };
    if let Some(path) = &args.emit_data {
        write_or_print(Some(path), &(header.lines("#") + &write_training_set(&data)))?;
    }
    let tree = learn(&data, &args.tree)?;
    write_or_print(args.out.as_deref(), &format!("{}{tree}\n", header.lines("#")))?;
    if let Some(path) = &args.dot {
        write_or_print(Some(path), &(header.lines("//") + &tree.to_dot(&model.actions)))?;
    }
    if args.out.is_some() {
        println!("{} records, tree with {} nodes (depth {})", data.len(), tree.size(), tree.depth());
    }
    Ok(())
}

fn cmd_eval(args: EvalCmd) -> Result<()> {
    let model = load_model(&args.model)?;
    let features = feature_map(&model, args.tree.features)?;
    let threads = threads()?;
    let an = analyse(model.clone())?;
    require_feasible(&an)?;
    let mut header = Header::new("eval", &args.model);
    header.solve(&args.solve);
    header.tree(&args.tree);
    header.push("sims", args.sims);
    header.push("train_sims", args.train_sims);
    header.push(
        "policies",
        args.policies
            .iter()
            .map(|p| p.to_possible_value().expect("named").get_name().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );

    let wants = |p| args.policies.contains(&p);
    let need_tree = wants(PolicyArg::Dt);
    let need_table = wants(PolicyArg::Rtdp) || (need_tree && args.tree_file.is_none());
    let table = if need_table {
        Some(match &args.table {
            Some(path) => {
                header.push("table", path.display());
                load_table(path, &an)?
            }
            None => solve(&an, &args.solve)?.0,
        })
    } else {
        None
    };
    let tree = if need_tree {
        Some(match &args.tree_file {
            Some(path) => {
                header.push("tree", path.display());
                load_tree(path, &features)?
            }
            None => {
                let table = table.as_ref().expect("table computed");
                learn(
                    &training_data(&an, table, &features, args.train_sims, args.tree.steps, args.solve.seed)?,
                    &args.tree,
                )?
            }
        })
    } else {
        None
    };

    let (sims, cutoff, seed) = (args.sims, args.solve.cutoff, args.solve.seed);
    let fail = |e: energy_pomdp::PolicyError| Failure::input(e.to_string());
    let mut reports: Vec<EvalReport> = Vec::new();
    for &p in &args.policies {
        let report = match p {
            PolicyArg::All => evaluate(
                "sigma_all",
                || SigmaAll::new(&an.graph, &an.allowed),
                &an.product,
                sims,
                cutoff,
                seed,
                threads,
            )
            .map_err(fail)?,
            PolicyArg::Rtdp => {
                let table = table.as_ref().expect("table computed");
                let rtdp = Rtdp::new(&an.product, &an.graph, &an.allowed, table.precision);
                evaluate("rtdp", || rtdp.greedy(table), &an.product, sims, cutoff, seed, threads)
                    .map_err(fail)?
                    .with_size(table.len())
            }
            PolicyArg::Dt => {
                let tree = tree.as_ref().expect("tree computed");
                let make = || DtPolicy::new(tree, &features, &an.product, &an.graph, &an.allowed, args.solve.precision);
                evaluate("dt", make, &an.product, sims, cutoff, seed, threads).map_err(fail)?.with_size(tree.size())
            }
        };
        reports.push(report);
    }
    write_or_print(args.out.as_deref(), &(header.lines("#") + &report_table(&reports)))?;
    if let Some(path) = &args.csv {
        write_or_print(Some(path), &(header.lines("#") + &report_csv(&reports)))?;
    }
    Ok(())
}

fn cmd_bench(args: BenchCmd) -> Result<()> {
    let model = match args.family {
        Family::Hallway => {
            let hallway = match &args.map {
                Some(path) => {
                    let cap = args.cap.unwrap_or(10);
                    Hallway::parse(&read(path)?, cap).map_err(|e| Failure::at(path, None, e))?
                }
                None => {
                    let cap =
                        args.cap.unwrap_or_else(|| energy_pomdp::benchmarks::hallway_default_capacity(&args.layout));
                    Hallway::builtin(&args.layout, cap).map_err(|e| Failure::input(e.to_string()))?
                }
            };
            let hallway = if args.noisy { hallway.with_noise(MoveNoise::CLASSIC) } else { hallway };
            hallway.generate().map_err(|e| Failure::input(e.to_string()))?
        }
        Family::Rocksample => RockSample::standard(args.size, args.rocks, args.cap.unwrap_or(7))
            .generate()
            .map_err(|e| Failure::input(e.to_string()))?,
        Family::Tiger => toy::energy_tiger(args.cap.unwrap_or(3)),
        Family::Corridor => {
            if args.len < 2 || args.reload_at.is_some_and(|r| r >= args.len) {
                return Err(Failure::input("corridor needs --len >= 2 and --reload-at inside the corridor"));
            }
            toy::reload_corridor(args.len, args.cap.unwrap_or(3), args.reload_at)
        }
    };
    write_or_print(args.out.as_deref(), &emit_model(&model))
}
