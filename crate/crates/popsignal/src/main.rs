//! Command-line front end: `run` executes a full experiment (training plus
//! evaluation over all configured seeds) and writes records, manifests, and
//! reports; `report` rebuilds curves and the text summary from existing
//! record CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use popsignal::centrality::CentralityKind;
use popsignal::error::{Error, Result};
use popsignal::graph::TopologyKind;
use popsignal::orchestrator::{
    self, agent_trajectories, run_manifest, run_seed, summarize, ExperimentConfig, Phase,
    RunRecords, Summary,
};

#[derive(Parser)]
#[command(name = "popsignal", version, about = "Signalling-game population trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run training and evaluation for every configured seed.
    Run(RunArgs),
    /// Rebuild curves and the summary from existing record CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file of `key = value` lines; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Interaction graph family: er, ws, ba, or random (no graph).
    #[arg(long)]
    topology: Option<String>,
    /// Sampling bias: degree, betweenness, pagerank, or uniform.
    #[arg(long)]
    centrality: Option<String>,
    /// Population size.
    #[arg(long)]
    nodes: Option<usize>,
    /// Target edge count for the generated graph.
    #[arg(long)]
    edges: Option<usize>,
    /// Number of scheduled training pairings.
    #[arg(long)]
    schedule_size: Option<usize>,
    /// Games per scheduled pairing.
    #[arg(long)]
    games_per_pairing: Option<usize>,
    /// Freshly drawn pairs in the evaluation phase.
    #[arg(long)]
    eval_pairs: Option<usize>,
    /// Games per evaluation pair.
    #[arg(long)]
    eval_games: Option<usize>,
    /// Comma-separated master seeds, e.g. `--seeds 0,1,2`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    seeds: Option<Vec<u64>>,
    /// Alias for a single-seed run.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Output directory; one subdirectory per seed is created inside.
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    /// Sliding window for the reported curves.
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Skip the evaluation phase.
    #[arg(long)]
    no_eval: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Record CSV files produced by `run` (any number, concatenated).
    #[arg(required = true)]
    records: Vec<PathBuf>,
    /// Manifest JSON (for centrality scores); enables per-agent curves.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory for curve CSVs and the summary.
    #[arg(long, default_value = "report")]
    out_dir: PathBuf,
    /// Sliding window for the curves.
    #[arg(long, default_value_t = 100)]
    window: usize,
}

fn parse_topology(s: &str) -> Result<TopologyKind> {
    match s {
        "er" => Ok(TopologyKind::Er),
        "ws" => Ok(TopologyKind::Ws),
        "ba" => Ok(TopologyKind::Ba),
        "random" => Ok(TopologyKind::RandomBaseline),
        other => Err(Error::InvalidConfig(format!(
            "unknown topology {other} (expected er, ws, ba, or random)"
        ))),
    }
}

fn parse_centrality(s: &str) -> Result<CentralityKind> {
    match s {
        "degree" => Ok(CentralityKind::Degree),
        "betweenness" => Ok(CentralityKind::Betweenness),
        "pagerank" => Ok(CentralityKind::PageRank),
        "uniform" => Ok(CentralityKind::Uniform),
        other => Err(Error::InvalidConfig(format!(
            "unknown centrality {other} (expected degree, betweenness, pagerank, or uniform)"
        ))),
    }
}

/// Apply one `key = value` setting to the config.
fn apply_setting(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad value {value} for {key}")))
    }
    match key {
        "topology" => config.topology = parse_topology(value)?,
        "centrality" => config.centrality = parse_centrality(value)?,
        "nodes" => config.n_agents = num(key, value)?,
        "edges" => config.n_edges = num(key, value)?,
        "schedule_size" => config.schedule_size = num(key, value)?,
        "games_per_pairing" => config.games_per_pairing = num(key, value)?,
        "eval_pairs" => config.eval_pairs = num(key, value)?,
        "eval_games" => config.eval_games = num(key, value)?,
        "seeds" => {
            let seeds: Result<Vec<u64>> =
                value.split(',').map(|s| num(key, s.trim())).collect();
            config.seeds = seeds?;
        }
        "p_rewire" => config.p_rewire = num(key, value)?,
        "train_size" => config.train_size = num(key, value)?,
        "test_size" => config.test_size = num(key, value)?,
        "shapes" => config.factors.shapes = num(key, value)?,
        "object_colors" => config.factors.object_colors = num(key, value)?,
        "floor_colors" => config.factors.floor_colors = num(key, value)?,
        "vocab_size" => config.vocab_size = num(key, value)?,
        "max_len" => config.max_len = num(key, value)?,
        "learning_rate" => config.hyper.learning_rate = num(key, value)?,
        "grad_clip" => config.hyper.grad_clip = num(key, value)?,
        "minibatch_size" => config.hyper.minibatch_size = num(key, value)?,
        "x_size" => config.hyper.x_size = num(key, value)?,
        "init_range" => config.hyper.init_range = num(key, value)?,
        "entropy_scale" => config.hyper.entropy_scale = num(key, value)?,
        "pagerank_damping" => config.pagerank_damping = num(key, value)?,
        "pagerank_tol" => config.pagerank_tol = num(key, value)?,
        "pagerank_max_iter" => config.pagerank_max_iter = num(key, value)?,
        other => {
            return Err(Error::InvalidConfig(format!("unknown config key {other}")));
        }
    }
    Ok(())
}

/// Parse a line-oriented `key = value` config file. Blank lines and lines
/// starting with `#` are ignored.
fn apply_config_file(config: &mut ExperimentConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            ))
        })?;
        apply_setting(config, key.trim(), value.trim())?;
    }
    Ok(())
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = &args.config {
        apply_config_file(&mut config, path)?;
    }
    // command-line flags override the file
    if let Some(v) = &args.topology {
        config.topology = parse_topology(v)?;
    }
    if let Some(v) = &args.centrality {
        config.centrality = parse_centrality(v)?;
    }
    if let Some(v) = args.nodes {
        config.n_agents = v;
    }
    if let Some(v) = args.edges {
        config.n_edges = v;
    }
    if let Some(v) = args.schedule_size {
        config.schedule_size = v;
    }
    if let Some(v) = args.games_per_pairing {
        config.games_per_pairing = v;
    }
    if let Some(v) = args.eval_pairs {
        config.eval_pairs = v;
    }
    if let Some(v) = args.eval_games {
        config.eval_games = v;
    }
    if let Some(v) = &args.seeds {
        config.seeds = v.clone();
    }
    if let Some(v) = args.seed {
        config.seeds = vec![v];
    }
    config.validate()?;
    Ok(config)
}

/// `game_index,mean,std,seed_<s0>,seed_<s1>,...` with curves truncated to
/// the shortest seed.
fn curve_csv(summary: &Summary) -> String {
    let mut s = String::new();
    let seed_cols: Vec<String> = summary.seeds.iter().map(|s| format!("seed_{s}")).collect();
    let _ = writeln!(s, "game_index,mean,std,{}", seed_cols.join(","));
    for i in 0..summary.mean.len() {
        let per_seed: Vec<String> = summary
            .per_seed
            .iter()
            .map(|c| format!("{:.6}", c[i]))
            .collect();
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{}",
            i,
            summary.mean[i],
            summary.std[i],
            per_seed.join(",")
        );
    }
    s
}

fn summary_text(records: &RunRecords, window: usize) -> Result<String> {
    let mut out = String::new();
    for phase in [Phase::Train, Phase::Eval] {
        let summary = match summarize(records, phase, window) {
            Ok(s) => s,
            Err(Error::EmptyRecords) => continue,
            Err(e) => return Err(e),
        };
        let _ = writeln!(out, "phase {} (window {window})", phase.as_str());
        let _ = writeln!(out, "  seeds: {:?}", summary.seeds);
        let _ = writeln!(out, "  games per seed (common length): {}", summary.mean.len());
        let _ = writeln!(out, "  peak windowed mean reward: {:.4}", summary.peak_windowed);
        let _ = writeln!(out, "  mean reward, first 1000 games: {:.4}", summary.first_1000_mean);
        if let Some(last) = summary.mean.last() {
            let _ = writeln!(out, "  final windowed mean reward: {:.4}", last);
        }
        for (seed, curve) in summary.seeds.iter().zip(&summary.per_seed) {
            if let Some(last) = curve.last() {
                let _ = writeln!(out, "    seed {seed}: final window {:.4}", last);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyRecords);
    }
    Ok(out)
}

fn write_reports(
    records: &RunRecords,
    scores: Option<&popsignal::centrality::CentralityScores>,
    window: usize,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for (phase, name) in [(Phase::Train, "train_curve.csv"), (Phase::Eval, "eval_curve.csv")] {
        match summarize(records, phase, window) {
            Ok(summary) => std::fs::write(out_dir.join(name), curve_csv(&summary))?,
            Err(Error::EmptyRecords) => {}
            Err(e) => return Err(e),
        }
    }
    std::fs::write(out_dir.join("summary.txt"), summary_text(records, window)?)?;
    if let Some(scores) = scores {
        let trajectories = agent_trajectories(records, scores, window)?;
        let mut s = String::new();
        let _ = writeln!(s, "rank,agent,game_index,mean_reward");
        for (rank, curve) in ["min", "median", "max"].iter().zip(&trajectories.curves) {
            for (i, m) in curve.mean.iter().enumerate() {
                let _ = writeln!(s, "{rank},{},{},{:.6}", curve.agent, i, m);
            }
            if curve.empty_in_some_seed {
                eprintln!(
                    "note: agent {} played no games in at least one seed; its curve is truncated to empty",
                    curve.agent
                );
            }
        }
        std::fs::write(out_dir.join("agent_trajectories.csv"), s)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = build_config(args)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let mut all_records = RunRecords::default();
    let mut first_scores = None;
    for &seed in &config.seeds {
        let seed_dir = args.out_dir.join(format!("seed{seed}"));
        std::fs::create_dir_all(&seed_dir)?;
        let (population, records) = if args.no_eval {
            orchestrator::run_training(&config, seed)?
        } else {
            run_seed(&config, seed)?
        };
        std::fs::write(seed_dir.join("records.csv"), records.to_csv())?;
        let manifest = run_manifest(&config, seed, &population);
        std::fs::write(
            seed_dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )?;
        for id in 0..population.agents.len() {
            std::fs::write(
                seed_dir.join(format!("agent{id:02}.params")),
                population.agents[id].save_text(),
            )?;
        }
        let train_tail = orchestrator::final_fraction_mean(&records, seed, 0.1)
            .expect("training produced records");
        println!(
            "seed {seed}: {} train games, final-10% mean reward {train_tail:.4}",
            records.filter(seed, Phase::Train).len()
        );
        if first_scores.is_none() {
            first_scores = Some(population.scores.clone());
        }
        all_records.records.extend(records.records);
    }
    std::fs::write(args.out_dir.join("records.csv"), all_records.to_csv())?;
    write_reports(&all_records, first_scores.as_ref(), args.window, &args.out_dir)?;
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut all_records = RunRecords::default();
    for path in &args.records {
        let text = std::fs::read_to_string(path)?;
        all_records.records.extend(RunRecords::from_csv(&text)?.records);
    }
    let scores = match &args.manifest {
        Some(path) => {
            let manifest: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(path)?)
                    .map_err(|e| Error::InvalidConfig(format!("bad manifest: {e}")))?;
            let raw = manifest
                .get("centrality_scores")
                .and_then(|v| v.as_array())
                .ok_or_else(|| {
                    Error::InvalidConfig("manifest lacks centrality_scores".into())
                })?;
            let values: Option<Vec<f64>> = raw.iter().map(|v| v.as_f64()).collect();
            Some(popsignal::centrality::CentralityScores(values.ok_or_else(
                || Error::InvalidConfig("non-numeric centrality score in manifest".into()),
            )?))
        }
        None => None,
    };
    write_reports(&all_records, scores.as_ref(), args.window, &args.out_dir)?;
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
