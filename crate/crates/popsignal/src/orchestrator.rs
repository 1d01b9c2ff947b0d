//! End-to-end experiment runner.
//!
//! One seed's run is strictly sequential: generate the interaction graph,
//! score it, draw the pair schedule, train each scheduled pair in turn on a
//! shared continually-learning population, then evaluate freshly drawn pairs
//! on the held-out split. Every game is logged as a [`RunRecord`]; the run
//! manifest captures everything needed to replay the run bit-identically.

use std::fmt::Write as _;

use crate::agent::params::{AgentParams, ArchConfig};
use crate::agent::update::{train_minibatch, Hyperparams};
use crate::centrality::{self, CentralityKind, CentralityScores};
use crate::error::{Error, Result};
use crate::game::{generate_dataset, Dataset, FactorCardinalities, Split};
use crate::graph::{self, Graph, GraphParams, TopologyKind};
use crate::rng::{substream, Stream};
use crate::sampler::{self, PairSchedule};

/// Everything that defines one experiment (shared across its seeds).
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentConfig {
    pub topology: TopologyKind,
    pub centrality: CentralityKind,
    pub n_agents: usize,
    pub n_edges: usize,
    /// Number of scheduled pairings per training run.
    pub schedule_size: usize,
    pub games_per_pairing: usize,
    pub eval_pairs: usize,
    pub eval_games: usize,
    pub seeds: Vec<u64>,
    /// Ring-lattice rewiring probability for the small-world topology.
    pub p_rewire: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub factors: FactorCardinalities,
    pub vocab_size: usize,
    pub max_len: usize,
    pub hyper: Hyperparams,
    pub pagerank_damping: f64,
    pub pagerank_tol: f64,
    pub pagerank_max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: TopologyKind::Ba,
            centrality: CentralityKind::Degree,
            n_agents: 16,
            n_edges: 32,
            schedule_size: 32,
            games_per_pairing: 2048,
            eval_pairs: 10,
            eval_games: 10_000,
            seeds: vec![0, 1, 2],
            p_rewire: 0.1,
            train_size: 4000,
            test_size: 1000,
            factors: FactorCardinalities::default(),
            vocab_size: 20,
            max_len: 5,
            hyper: Hyperparams::default(),
            pagerank_damping: 0.85,
            pagerank_tol: 1e-10,
            pagerank_max_iter: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            input_dim: self.factors.one_hot_len(),
            vocab_size: self.vocab_size,
            max_len: self.max_len,
            ..ArchConfig::new(self.factors.one_hot_len())
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_agents < 2 {
            return err(format!("need at least 2 agents, got {}", self.n_agents));
        }
        for (name, v) in [
            ("n_edges", self.n_edges),
            ("schedule_size", self.schedule_size),
            ("games_per_pairing", self.games_per_pairing),
            ("eval_pairs", self.eval_pairs),
            ("eval_games", self.eval_games),
            ("train_size", self.train_size),
            ("test_size", self.test_size),
            ("vocab_size", self.vocab_size),
            ("max_len", self.max_len),
            ("minibatch_size", self.hyper.minibatch_size),
            ("pagerank_max_iter", self.pagerank_max_iter),
        ] {
            if v == 0 {
                return err(format!("{name} must be positive"));
            }
        }
        if self.seeds.is_empty() {
            return err("seeds must be non-empty".into());
        }
        if self.games_per_pairing % self.hyper.minibatch_size != 0 {
            return err(format!(
                "minibatch_size {} must divide games_per_pairing {}",
                self.hyper.minibatch_size, self.games_per_pairing
            ));
        }
        if self.hyper.x_size < 2 {
            return err("x_size must be at least 2".into());
        }
        if self.vocab_size < 2 {
            return err("vocab_size must be at least 2 (end-of-message plus one symbol)".into());
        }
        if !(0.0..=1.0).contains(&self.p_rewire) {
            return err(format!("p_rewire {} outside [0, 1]", self.p_rewire));
        }
        if !(self.pagerank_damping > 0.0 && self.pagerank_damping < 1.0) {
            return err(format!("pagerank_damping {} outside (0, 1)", self.pagerank_damping));
        }
        if !(self.hyper.learning_rate.is_finite() && self.hyper.learning_rate > 0.0) {
            return err(format!("learning_rate {} must be positive", self.hyper.learning_rate));
        }
        if !(self.hyper.init_range.is_finite() && self.hyper.init_range > 0.0) {
            return err(format!("init_range {} must be positive", self.hyper.init_range));
        }
        Ok(())
    }
}

/// Which run phase a game belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Eval => "eval",
        }
    }

    pub fn parse(s: &str) -> Result<Phase> {
        match s {
            "train" => Ok(Phase::Train),
            "eval" => Ok(Phase::Eval),
            other => Err(Error::InvalidConfig(format!("unknown phase {other}"))),
        }
    }
}

/// One logged game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunRecord {
    pub seed: u64,
    pub phase: Phase,
    /// Game counter within (seed, phase), starting at 0.
    pub game_index: u64,
    /// Index into the schedule (train) or the evaluation pair list (eval).
    pub pair_id: usize,
    pub sender_id: usize,
    pub receiver_id: usize,
    pub reward: u8,
}

/// Append-ordered game log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunRecords {
    pub records: Vec<RunRecord>,
}

pub const RUN_RECORD_HEADER: &str = "seed,phase,game_index,pair_id,sender_id,receiver_id,reward";

impl RunRecords {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(32 * (self.records.len() + 1));
        s.push_str(RUN_RECORD_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.seed,
                r.phase.as_str(),
                r.game_index,
                r.pair_id,
                r.sender_id,
                r.receiver_id,
                r.reward
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<RunRecords> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == RUN_RECORD_HEADER => {}
            _ => {
                return Err(Error::InvalidConfig(
                    "run record CSV missing expected header".into(),
                ))
            }
        }
        let mut records = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::InvalidConfig(format!(
                    "run record line {}: expected 7 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<u64> {
                s.parse().map_err(|_| {
                    Error::InvalidConfig(format!("run record line {}: bad number {s}", lineno + 2))
                })
            };
            let reward = num(fields[6])?;
            if reward > 1 {
                return Err(Error::InvalidConfig(format!(
                    "run record line {}: reward {reward} outside {{0, 1}}",
                    lineno + 2
                )));
            }
            records.push(RunRecord {
                seed: num(fields[0])?,
                phase: Phase::parse(fields[1])?,
                game_index: num(fields[2])?,
                pair_id: num(fields[3])? as usize,
                sender_id: num(fields[4])? as usize,
                receiver_id: num(fields[5])? as usize,
                reward: reward as u8,
            });
        }
        Ok(RunRecords { records })
    }

    /// Seeds present, ascending and deduplicated.
    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.records.iter().map(|r| r.seed).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Records for one (seed, phase), in log order.
    pub fn filter(&self, seed: u64, phase: Phase) -> Vec<&RunRecord> {
        self.records
            .iter()
            .filter(|r| r.seed == seed && r.phase == phase)
            .collect()
    }
}

/// The population after the training phase, with the substrate it ran on.
#[derive(Debug, Clone)]
pub struct TrainedPopulation {
    pub agents: Vec<AgentParams>,
    pub speaker_steps: Vec<u64>,
    pub graph: Graph,
    pub graph_params: GraphParams,
    pub scores: CentralityScores,
    pub schedule: PairSchedule,
    pub dataset: Dataset,
}

/// Build the substrate for one seed: graph, centrality scores, schedule.
///
/// In random-baseline mode the graph is empty and the schedule is drawn
/// uniformly from all unordered agent pairs; centrality scores are still
/// computed (on the empty graph) so downstream reporting has a full vector.
fn build_substrate(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Graph, GraphParams, CentralityScores, PairSchedule)> {
    let params = graph::resolve_params(config.topology, config.n_agents, config.n_edges, config.p_rewire)?;
    let g = graph::generate(config.topology, &params, &mut substream(seed, Stream::Graph));
    let scores = match config.topology {
        // every node is isolated in the empty graph; degree/pagerank scores
        // there are uninformative, so log the uniform control instead
        TopologyKind::RandomBaseline => centrality::uniform_scores(config.n_agents),
        _ => centrality::compute(
            config.centrality,
            &g,
            config.pagerank_damping,
            config.pagerank_tol,
            config.pagerank_max_iter,
        )?,
    };
    let mut rng = substream(seed, Stream::Schedule);
    let schedule = match config.topology {
        TopologyKind::RandomBaseline => {
            sampler::random_baseline_schedule(config.n_agents, config.schedule_size, &mut rng)?
        }
        _ => sampler::sample_schedule(&g, &scores, config.schedule_size, &mut rng)?,
    };
    Ok((g, params, scores, schedule))
}

/// Run the training phase for one seed.
///
/// Iterates over the schedule in order, training each pair for
/// `games_per_pairing` games in minibatches. Agents persist across pairings
/// (continual learning); roles are re-drawn every game.
pub fn run_training(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(TrainedPopulation, RunRecords)> {
    config.validate()?;
    let (graph, graph_params, scores, schedule) = build_substrate(config, seed)?;
    let dataset = generate_dataset(
        config.factors,
        config.train_size,
        config.test_size,
        &mut substream(seed, Stream::Dataset),
    );
    let arch = config.arch();
    let mut agents: Vec<AgentParams> = (0..config.n_agents)
        .map(|id| {
            AgentParams::init(
                arch,
                config.hyper.init_range,
                &mut substream(seed, Stream::AgentInit(id as u64)),
            )
        })
        .collect();
    let mut speaker_steps = vec![0u64; config.n_agents];
    let mut rng = substream(seed, Stream::Training);
    let mut records = RunRecords::default();
    let mut game_index: u64 = 0;
    let batches = config.games_per_pairing / config.hyper.minibatch_size;
    for (pair_id, &(a, b)) in schedule.pairs.iter().enumerate() {
        for _ in 0..batches {
            let results = train_minibatch(
                &mut agents,
                a,
                b,
                &dataset,
                Split::Train,
                &config.hyper,
                &mut speaker_steps,
                &mut rng,
            )?;
            for r in results {
                records.records.push(RunRecord {
                    seed,
                    phase: Phase::Train,
                    game_index,
                    pair_id,
                    sender_id: r.sender_id,
                    receiver_id: r.receiver_id,
                    reward: r.reward,
                });
                game_index += 1;
            }
        }
    }
    let population = TrainedPopulation {
        agents,
        speaker_steps,
        graph,
        graph_params,
        scores,
        schedule,
        dataset,
    };
    Ok((population, records))
}

/// Run the evaluation phase: train `eval_pairs` freshly drawn pairs on the
/// held-out split.
///
/// Pairs are uniform over all unordered agent pairs, ignoring the graph.
/// Each pair starts from the post-training parameter snapshot, so an agent
/// recurring across pairs is reset before its next pair begins.
pub fn run_eval(
    population: &TrainedPopulation,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<RunRecords> {
    config.validate()?;
    let mut rng = substream(seed, Stream::Eval);
    let pairs =
        sampler::random_baseline_schedule(config.n_agents, config.eval_pairs, &mut rng)?.pairs;
    let mut records = RunRecords::default();
    let mut game_index: u64 = 0;
    let mut agents = population.agents.clone();
    let mut speaker_steps = population.speaker_steps.clone();
    for (pair_id, &(a, b)) in pairs.iter().enumerate() {
        // reset to the training-phase snapshot before each pair
        agents[a] = population.agents[a].clone();
        agents[b] = population.agents[b].clone();
        speaker_steps[a] = population.speaker_steps[a];
        speaker_steps[b] = population.speaker_steps[b];
        let mut remaining = config.eval_games;
        while remaining > 0 {
            // eval_games need not be a multiple of the minibatch size; the
            // final minibatch may be short
            let batch = remaining.min(config.hyper.minibatch_size);
            let hyper = Hyperparams {
                minibatch_size: batch,
                ..config.hyper
            };
            remaining -= batch;
            let results = train_minibatch(
                &mut agents,
                a,
                b,
                &population.dataset,
                Split::Test,
                &hyper,
                &mut speaker_steps,
                &mut rng,
            )?;
            for r in results {
                records.records.push(RunRecord {
                    seed,
                    phase: Phase::Eval,
                    game_index,
                    pair_id,
                    sender_id: r.sender_id,
                    receiver_id: r.receiver_id,
                    reward: r.reward,
                });
                game_index += 1;
            }
        }
    }
    Ok(records)
}

/// Sliding-window mean: entry `i` averages the last `window` values ending
/// at `i` (fewer while the window is still filling).
pub fn sliding_mean(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        let len = (i + 1).min(window);
        out.push(sum / len as f64);
    }
    out
}

/// Windowed reward curves for one phase: per-seed plus the across-seed band.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Summary {
    pub phase: &'static str,
    pub window: usize,
    pub seeds: Vec<u64>,
    /// One windowed-mean curve per seed, in `seeds` order.
    pub per_seed: Vec<Vec<f64>>,
    /// Across-seed mean, truncated to the shortest seed curve.
    pub mean: Vec<f64>,
    /// Across-seed population standard deviation, same length as `mean`.
    pub std: Vec<f64>,
    /// Highest point of the across-seed mean curve.
    pub peak_windowed: f64,
    /// Raw mean reward over each seed's first 1000 games, averaged across
    /// seeds (sample-efficiency proxy).
    pub first_1000_mean: f64,
}

/// Summarize one phase of a (possibly multi-seed) record log.
pub fn summarize(records: &RunRecords, phase: Phase, window: usize) -> Result<Summary> {
    assert!(window >= 1, "window must be at least 1");
    let seeds: Vec<u64> = records
        .seeds()
        .into_iter()
        .filter(|&s| records.records.iter().any(|r| r.seed == s && r.phase == phase))
        .collect();
    if seeds.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut first_1000_sum = 0.0;
    for &seed in &seeds {
        let rewards: Vec<f64> = records
            .filter(seed, phase)
            .iter()
            .map(|r| r.reward as f64)
            .collect();
        let head = &rewards[..rewards.len().min(1000)];
        first_1000_sum += head.iter().sum::<f64>() / head.len() as f64;
        per_seed.push(sliding_mean(&rewards, window));
    }
    let common = per_seed.iter().map(Vec::len).min().unwrap_or(0);
    let ns = seeds.len() as f64;
    let mut mean = Vec::with_capacity(common);
    let mut std = Vec::with_capacity(common);
    for i in 0..common {
        let m = per_seed.iter().map(|c| c[i]).sum::<f64>() / ns;
        let v = per_seed.iter().map(|c| (c[i] - m).powi(2)).sum::<f64>() / ns;
        mean.push(m);
        std.push(v.sqrt());
    }
    // only full windows count toward the peak; the growing warm-up windows
    // at the start are high-variance
    let peak_start = (window - 1).min(mean.len().saturating_sub(1));
    let peak_windowed = mean[peak_start..]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Summary {
        phase: phase.as_str(),
        window,
        seeds,
        per_seed,
        mean,
        std,
        peak_windowed,
        first_1000_mean: first_1000_sum / ns,
    })
}

/// Reward curve of one tracked agent across seeds.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AgentCurve {
    pub agent: usize,
    /// Games this agent played per seed (either role).
    pub per_seed_lengths: Vec<usize>,
    /// Windowed mean over the agent's own games, averaged across seeds
    /// after truncation to the shortest per-seed length.
    pub mean: Vec<f64>,
    /// True when the agent played no games in at least one seed.
    pub empty_in_some_seed: bool,
}

/// Per-agent curves for the minimum-, median-, and maximum-centrality
/// agents.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AgentTrajectories {
    /// Agent ids at centrality rank min / median / max (ties broken by
    /// lowest index).
    pub selected: [usize; 3],
    pub window: usize,
    pub curves: [AgentCurve; 3],
}

/// Agent ids at the minimum, median, and maximum centrality ranks.
///
/// Ranks sort by `(score, index)` ascending, so equal scores resolve to the
/// lowest index; under uniform scores this selects agents 0, n/2, n-1.
pub fn rank_agents(scores: &CentralityScores) -> [usize; 3] {
    let n = scores.len();
    assert!(n >= 1, "need at least one agent");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores.0[a]
            .partial_cmp(&scores.0[b])
            .expect("centrality scores are finite")
            .then(a.cmp(&b))
    });
    [order[0], order[n / 2], order[n - 1]]
}

/// Training-phase reward curves for the min/median/max-centrality agents,
/// counting games in both roles, truncated to the shortest common length
/// across seeds before averaging.
pub fn agent_trajectories(
    records: &RunRecords,
    scores: &CentralityScores,
    window: usize,
) -> Result<AgentTrajectories> {
    assert!(window >= 1, "window must be at least 1");
    let seeds = records.seeds();
    if seeds.is_empty() || !records.records.iter().any(|r| r.phase == Phase::Train) {
        return Err(Error::EmptyRecords);
    }
    let selected = rank_agents(scores);
    let curves = selected.map(|agent| {
        let per_seed: Vec<Vec<f64>> = seeds
            .iter()
            .map(|&seed| {
                records
                    .filter(seed, Phase::Train)
                    .iter()
                    .filter(|r| r.sender_id == agent || r.receiver_id == agent)
                    .map(|r| r.reward as f64)
                    .collect()
            })
            .collect();
        let per_seed_lengths: Vec<usize> = per_seed.iter().map(Vec::len).collect();
        let empty_in_some_seed = per_seed_lengths.iter().any(|&l| l == 0);
        let common = per_seed_lengths.iter().copied().min().unwrap_or(0);
        let windowed: Vec<Vec<f64>> = per_seed
            .iter()
            .map(|r| sliding_mean(&r[..common], window))
            .collect();
        let ns = seeds.len() as f64;
        let mean = (0..common)
            .map(|i| windowed.iter().map(|c| c[i]).sum::<f64>() / ns)
            .collect();
        AgentCurve {
            agent,
            per_seed_lengths,
            mean,
            empty_in_some_seed,
        }
    });
    Ok(AgentTrajectories {
        selected,
        window,
        curves,
    })
}

/// JSON manifest for one seed's run: resolved config, realized substrate,
/// and tool version. Serialization order is fixed, so identical runs
/// produce byte-identical manifests.
pub fn run_manifest(
    config: &ExperimentConfig,
    seed: u64,
    population: &TrainedPopulation,
) -> serde_json::Value {
    let warnings: Vec<&String> = population
        .graph_params
        .edge_count_note
        .iter()
        .collect();
    serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": config,
        "graph_params": population.graph_params,
        "edges": population.graph.edges(),
        "centrality_scores": population.scores.as_slice(),
        "schedule": population.schedule.pairs,
        "warnings": warnings,
    })
}

/// Convenience wrapper: training plus evaluation for one seed, with records
/// concatenated (train phase first).
pub fn run_seed(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(TrainedPopulation, RunRecords)> {
    let (population, mut records) = run_training(config, seed)?;
    let eval_records = run_eval(&population, config, seed)?;
    records.records.extend(eval_records.records);
    Ok((population, records))
}

/// Mean reward over the final `fraction` of one seed's training games.
pub fn final_fraction_mean(records: &RunRecords, seed: u64, fraction: f64) -> Option<f64> {
    assert!(fraction > 0.0 && fraction <= 1.0);
    let rewards: Vec<f64> = records
        .filter(seed, Phase::Train)
        .iter()
        .map(|r| r.reward as f64)
        .collect();
    if rewards.is_empty() {
        return None;
    }
    let start = rewards.len() - ((rewards.len() as f64 * fraction).ceil() as usize).max(1);
    let tail = &rewards[start..];
    Some(tail.iter().sum::<f64>() / tail.len() as f64)
}
