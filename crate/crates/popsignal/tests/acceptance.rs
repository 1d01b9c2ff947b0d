//! Acceptance suite: one test per release criterion, each printing a single
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::VecDeque;
use std::time::Instant;

use rand::Rng;

use popsignal::agent::backward::{
    receiver_backward, sender_backward, trajectory_objective,
};
use popsignal::agent::forward::{encode, receiver_forward, sender_forward};
use popsignal::agent::params::{AgentParams, ArchConfig, Gradient, Group};
use popsignal::centrality::{betweenness_centrality, degree_centrality, pagerank};
use popsignal::game::{generate_dataset, sample_game, FactorCardinalities, ObjectSpec, Split};
use popsignal::graph::{self, Graph, TopologyKind};
use popsignal::orchestrator::{
    final_fraction_mean, run_manifest, run_training, sliding_mean, ExperimentConfig, Phase,
};
use popsignal::rng::{substream, Stream};
use popsignal::sampler::{endpoint_probabilities, random_baseline_schedule, sample_schedule};

fn report(number: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {number} ({name}): {} [{detail}]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance {number} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_graph_invariants() {
    let t0 = Instant::now();
    let (n, e) = (16, 32);
    let mut er_edge_sum = 0.0;
    let mut ok = true;
    for kind in [TopologyKind::Ws, TopologyKind::Ba, TopologyKind::Er] {
        let params = graph::resolve_params(kind, n, e, 0.1).unwrap();
        for seed in 0..100u64 {
            let g = graph::generate(kind, &params, &mut substream(seed, Stream::Graph));
            match kind {
                TopologyKind::Ws => ok &= g.edge_count() == 32,
                TopologyKind::Ba => ok &= g.edge_count() == 28,
                TopologyKind::Er => er_edge_sum += g.edge_count() as f64,
                TopologyKind::RandomBaseline => unreachable!(),
            }
        }
    }
    // ER edge count ~ Binomial(120, 0.25): mean 30, sigma of the
    // 100-sample mean = sqrt(120 * 0.25 * 0.75 / 100)
    let er_mean = er_edge_sum / 100.0;
    let sigma = (120.0 * 0.25 * 0.75_f64 / 100.0).sqrt();
    ok &= (er_mean - 30.0).abs() < 3.0 * sigma;
    let elapsed = t0.elapsed();
    ok &= elapsed.as_secs_f64() < 5.0;
    report(
        1,
        "graph invariants",
        ok,
        &format!("ER mean edges {er_mean:.2}, elapsed {elapsed:.2?}"),
    );
}

/// Brute-force betweenness: enumerate every shortest path by DFS over the
/// BFS distance structure and count interior visits.
fn betweenness_oracle(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut scores = vec![0.0; n];
    if n < 3 {
        return scores;
    }
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in g.neighbors(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            if dist[t] == usize::MAX {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(path) = stack.pop() {
                let v = *path.last().unwrap();
                if v == t {
                    paths.push(path);
                    continue;
                }
                for &w in g.neighbors(v) {
                    if dist[w] == dist[v] + 1 && dist[w] <= dist[t] {
                        let mut next = path.clone();
                        next.push(w);
                        stack.push(next);
                    }
                }
            }
            let total = paths.len() as f64;
            for path in &paths {
                for &v in &path[1..path.len() - 1] {
                    scores[v] += 1.0 / total;
                }
            }
        }
    }
    let norm = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
    for s in &mut scores {
        *s *= norm;
    }
    scores
}

/// Dense power iteration over the explicit column-stochastic matrix.
fn pagerank_oracle(g: &Graph, damping: f64) -> Vec<f64> {
    let n = g.node_count();
    let nf = n as f64;
    let mut m = vec![vec![0.0f64; n]; n];
    for v in 0..n {
        let d = g.degree(v);
        if d == 0 {
            for row in m.iter_mut() {
                row[v] = 1.0 / nf;
            }
        } else {
            for &w in g.neighbors(v) {
                m[w][v] = 1.0 / d as f64;
            }
        }
    }
    let mut x = vec![1.0 / nf; n];
    for _ in 0..100_000 {
        let mut next = vec![(1.0 - damping) / nf; n];
        for (r, row) in m.iter().enumerate() {
            for (c, &mv) in row.iter().enumerate() {
                next[r] += damping * mv * x[c];
            }
        }
        let diff: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if diff < 1e-14 {
            break;
        }
    }
    x
}

#[test]
fn criterion_2_centrality_oracles() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut max_bw_err = 0.0f64;
    let mut max_pr_err = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = substream(seed, Stream::Graph);
        let n = 3 + (seed as usize % 6); // 3..=8
        let g = graph::generate_er(n, 0.4, &mut rng);
        let bw = betweenness_centrality(&g);
        let bw_oracle = betweenness_oracle(&g);
        for v in 0..n {
            max_bw_err = max_bw_err.max((bw.as_slice()[v] - bw_oracle[v]).abs());
        }
        let pr = pagerank(&g, 0.85, 1e-12, 100_000).unwrap();
        let pr_oracle = pagerank_oracle(&g, 0.85);
        for v in 0..n {
            max_pr_err = max_pr_err.max((pr.as_slice()[v] - pr_oracle[v]).abs());
        }
        let sum: f64 = pr.as_slice().iter().sum();
        ok &= (sum - 1.0).abs() < 1e-9;
    }
    ok &= max_bw_err < 1e-10 && max_pr_err < 1e-8;
    let elapsed = t0.elapsed();
    ok &= elapsed.as_secs_f64() < 10.0;
    report(
        2,
        "centrality oracle equivalence",
        ok,
        &format!("max errors: betweenness {max_bw_err:.2e}, pagerank {max_pr_err:.2e}, elapsed {elapsed:.2?}"),
    );
}

#[test]
fn criterion_3_sampler_statistics() {
    let draws = 100_000;
    let mut star = Graph::empty(5);
    for leaf in 1..5 {
        star.add_edge(0, leaf);
    }
    let mut complete = Graph::empty(5);
    for a in 0..5 {
        for b in (a + 1)..5 {
            complete.add_edge(a, b);
        }
    }
    let mut ok = true;
    let mut max_dev = 0.0f64;
    for (graph_id, g) in [(0u64, &star), (1, &complete)] {
        let scores = degree_centrality(g).unwrap();
        let expected = endpoint_probabilities(g, &scores).unwrap();
        // closed form: softmax over deg(v)/(n-1), no isolated nodes here
        let exps: Vec<f64> = scores.as_slice().iter().map(|&s| s.exp()).collect();
        let z: f64 = exps.iter().sum();
        for (p, e) in expected.iter().zip(&exps) {
            assert!((p - e / z).abs() < 1e-12);
        }
        let schedule = sample_schedule(
            g,
            &scores,
            draws,
            &mut substream(graph_id, Stream::Schedule),
        )
        .unwrap();
        let mut counts = vec![0usize; g.node_count()];
        for &(u, v) in &schedule.pairs {
            counts[u] += 1;
            ok &= g.has_edge(u, v); // exhaustive edge membership check
        }
        for (v, &c) in counts.iter().enumerate() {
            let dev = (c as f64 / draws as f64 - expected[v]).abs();
            max_dev = max_dev.max(dev);
            ok &= dev < 0.01;
        }
    }
    report(
        3,
        "sampler statistics",
        ok,
        &format!("max frequency deviation {max_dev:.4} over {draws} draws"),
    );
}

#[test]
fn criterion_4_gradient_correctness() {
    let t0 = Instant::now();
    let factors = FactorCardinalities::default();
    let arch = ArchConfig::new(factors.one_hot_len());
    let sender = AgentParams::init(arch, 0.3, &mut substream(41, Stream::AgentInit(0)));
    let receiver = AgentParams::init(arch, 0.3, &mut substream(41, Stream::AgentInit(1)));
    let candidates = vec![
        ObjectSpec { shape: 0, object_color: 1, floor_color: 2 },
        ObjectSpec { shape: 3, object_color: 5, floor_color: 0 },
        ObjectSpec { shape: 1, object_color: 7, floor_color: 4 },
        ObjectSpec { shape: 4, object_color: 0, floor_color: 3 },
    ];
    let target_index = 1;
    let mut rng = substream(41, Stream::Training);
    let (u_t, enc_cache) = encode(&sender, &candidates[target_index], &factors);
    let (sender_out, sender_cache) = sender_forward(&sender, &u_t, enc_cache, &mut rng);
    let (receiver_out, receiver_cache) =
        receiver_forward(&receiver, &sender_out.message, &candidates, &factors, &mut rng);
    let advantage = 0.625;
    let alpha = 0.02;
    let mut sender_grad = Gradient::zeros(&arch);
    sender_backward(&sender, &sender_cache, advantage, alpha, &mut sender_grad);
    let mut receiver_grad = Gradient::zeros(&arch);
    receiver_backward(
        &receiver,
        &receiver_cache,
        &receiver_out.distribution,
        receiver_out.choice,
        advantage,
        &mut receiver_grad,
    );

    let objective = |s: &AgentParams, r: &AgentParams| {
        trajectory_objective(
            s,
            r,
            &candidates[target_index],
            &candidates,
            &factors,
            &sender_out.message,
            receiver_out.choice,
            advantage,
            alpha,
        )
    };
    let eps = 1e-5;
    let mut coord_rng = substream(42, Stream::Training);
    let mut checked = 0usize;
    let mut max_rel = 0.0f64;
    let mut ok = true;
    // 13 groups x 4 coordinates x 2 agents = 104 coordinates, spanning
    // every parameter group on both the sender- and receiver-side vectors
    for (is_sender, params, grad) in
        [(true, &sender, &sender_grad), (false, &receiver, &receiver_grad)]
    {
        for g in Group::ALL {
            let off = g.offset(&arch);
            let len = g.len(&arch);
            for _ in 0..4 {
                let k = off + coord_rng.random_range(0..len);
                let mut plus = params.clone();
                plus.data[k] += eps;
                let mut minus = params.clone();
                minus.data[k] -= eps;
                let (jp, jm) = if is_sender {
                    (objective(&plus, &receiver), objective(&minus, &receiver))
                } else {
                    (objective(&sender, &plus), objective(&sender, &minus))
                };
                let fd = (jp - jm) / (2.0 * eps);
                let analytic = grad.data[k];
                let scale = analytic.abs().max(fd.abs());
                if scale > 1e-6 {
                    let rel = (analytic - fd).abs() / scale;
                    max_rel = max_rel.max(rel);
                    ok &= rel < 1e-4;
                } else {
                    ok &= (analytic - fd).abs() < 1e-8;
                }
                checked += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    ok &= checked >= 100 && elapsed.as_secs_f64() < 60.0;
    report(
        4,
        "gradient correctness",
        ok,
        &format!("{checked} coordinates, max relative error {max_rel:.2e}, elapsed {elapsed:.2?}"),
    );
}

#[test]
fn criterion_5_chance_level() {
    let factors = FactorCardinalities::default();
    let arch = ArchConfig::new(factors.one_hot_len());
    let hyper = popsignal::agent::update::Hyperparams::default();
    let seed = 50u64;
    let population: Vec<AgentParams> = (0..16)
        .map(|id| AgentParams::init(arch, hyper.init_range, &mut substream(seed, Stream::AgentInit(id))))
        .collect();
    let dataset = generate_dataset(factors, 4000, 1000, &mut substream(seed, Stream::Dataset));
    let games = 100_000;
    let pairs = random_baseline_schedule(16, games, &mut substream(seed, Stream::Schedule))
        .unwrap()
        .pairs;
    let mut rng = substream(seed, Stream::Training);
    let mut total = 0u64;
    for &(a, b) in &pairs {
        let (s, r) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        let game = sample_game(&dataset, Split::Train, 4, &mut rng).unwrap();
        let (u_t, enc_cache) = encode(&population[s], game.target(), &factors);
        let (sender_out, _) = sender_forward(&population[s], &u_t, enc_cache, &mut rng);
        let (receiver_out, _) = receiver_forward(
            &population[r],
            &sender_out.message,
            &game.candidates,
            &factors,
            &mut rng,
        );
        total += u64::from(receiver_out.choice == game.target_index);
    }
    let mean = total as f64 / games as f64;
    report(
        5,
        "chance level",
        (mean - 0.25).abs() < 0.01,
        &format!("untrained mean reward {mean:.4} over {games} games"),
    );
}

#[test]
fn criterion_6_learning_happens() {
    let t0 = Instant::now();
    let config = ExperimentConfig {
        topology: TopologyKind::Ba,
        n_agents: 2,
        n_edges: 1,
        schedule_size: 1,
        games_per_pairing: 20_000,
        seeds: vec![0, 1, 2],
        ..Default::default()
    };
    let window = 1000;
    let mut passing = 0;
    let mut peaks = Vec::new();
    for &seed in &config.seeds {
        let (_, records) = run_training(&config, seed).unwrap();
        let rewards: Vec<f64> = records
            .filter(seed, Phase::Train)
            .iter()
            .map(|r| r.reward as f64)
            .collect();
        // only full windows count
        let curve = sliding_mean(&rewards, window);
        let peak = curve[window - 1..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        peaks.push(peak);
        if peak > 0.5 {
            passing += 1;
        }
    }
    let elapsed = t0.elapsed();
    let ok = passing >= 2 && elapsed.as_secs_f64() < 600.0;
    report(
        6,
        "learning happens",
        ok,
        &format!(
            "{passing}/3 seeds exceed 0.5 (peak windows {peaks:.3?}), elapsed {elapsed:.1?}"
        ),
    );
}

#[test]
fn criterion_7_topology_ordering() {
    let t0 = Instant::now();
    let base = ExperimentConfig::default(); // n=16, e=32, degree, 32 x 2048
    let seeds = [0u64, 1, 2];
    let mut wins = 0;
    let mut detail = String::new();
    for &seed in &seeds {
        let mut tails = Vec::new();
        for topology in [TopologyKind::Ba, TopologyKind::RandomBaseline] {
            let config = ExperimentConfig { topology, ..base.clone() };
            let (_, records) = run_training(&config, seed).unwrap();
            tails.push(final_fraction_mean(&records, seed, 0.1).unwrap());
        }
        if tails[0] >= tails[1] {
            wins += 1;
        }
        detail.push_str(&format!(
            "seed {seed}: ba {:.3} vs random {:.3}; ",
            tails[0], tails[1]
        ));
    }
    let elapsed = t0.elapsed();
    let ok = wins >= 2 && elapsed.as_secs_f64() < 7200.0;
    report(
        7,
        "topology ordering",
        ok,
        &format!("{detail}elapsed {elapsed:.1?}"),
    );
}

#[test]
fn criterion_8_determinism() {
    let config = ExperimentConfig {
        schedule_size: 4,
        games_per_pairing: 256,
        ..Default::default()
    };
    let (pop1, rec1) = run_training(&config, 8).unwrap();
    let (pop2, rec2) = run_training(&config, 8).unwrap();
    let csv_ok = rec1.to_csv() == rec2.to_csv();
    let manifest_ok = serde_json::to_string(&run_manifest(&config, 8, &pop1)).unwrap()
        == serde_json::to_string(&run_manifest(&config, 8, &pop2)).unwrap();
    let params_ok = pop1.agents == pop2.agents;
    report(
        8,
        "determinism",
        csv_ok && manifest_ok && params_ok,
        &format!("csv {csv_ok}, manifest {manifest_ok}, params {params_ok}"),
    );
}

#[test]
fn criterion_9_role_balance() {
    let config = ExperimentConfig::default();
    let seed = 0u64;
    let (_, records) = run_training(&config, seed).unwrap();
    let mut sender = vec![0u64; config.n_agents];
    let mut total = vec![0u64; config.n_agents];
    for r in &records.records {
        sender[r.sender_id] += 1;
        total[r.sender_id] += 1;
        total[r.receiver_id] += 1;
    }
    let mut ok = true;
    let mut worst = 0.0f64;
    for id in 0..config.n_agents {
        if total[id] == 0 {
            continue; // agent absent from the schedule: no games, no roles
        }
        let frac = sender[id] as f64 / total[id] as f64;
        worst = worst.max((frac - 0.5).abs());
        ok &= (frac - 0.5).abs() < 0.02;
    }
    report(
        9,
        "role balance",
        ok,
        &format!("worst sender-fraction deviation {worst:.4}"),
    );
}
