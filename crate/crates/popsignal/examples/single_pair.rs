//! Train a single agent pair and print the learning curve.
//!
//! Usage: `cargo run --release --example single_pair -- [games] [seed]
//! [learning_rate] [init_range] [entropy_scale]`; all arguments optional.

use popsignal::agent::params::{AgentParams, ArchConfig};
use popsignal::agent::update::{train_minibatch, Hyperparams};
use popsignal::game::{generate_dataset, FactorCardinalities, Split};
use popsignal::rng::{substream, Stream};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let games: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(20_480);
    let seed: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0);
    let lr: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let range: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.6);
    let escale: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(0.2);

    let factors = FactorCardinalities::default();
    let arch = ArchConfig::new(factors.one_hot_len());
    let hyper = Hyperparams { learning_rate: lr, init_range: range, entropy_scale: escale, ..Default::default() };
    let mut pop: Vec<AgentParams> = (0..2)
        .map(|id| AgentParams::init(arch, hyper.init_range, &mut substream(seed, Stream::AgentInit(id))))
        .collect();
    let dataset = generate_dataset(factors, 4000, 1000, &mut substream(seed, Stream::Dataset));
    let mut steps = vec![0u64; 2];
    let mut rng = substream(seed, Stream::Training);

    let mut rewards: Vec<u8> = Vec::new();
    while rewards.len() < games {
        let results =
            train_minibatch(&mut pop, 0, 1, &dataset, Split::Train, &hyper, &mut steps, &mut rng)
                .unwrap();
        rewards.extend(results.iter().map(|r| r.reward));
        if rewards.len() % 2048 == 0 {
            let w = &rewards[rewards.len().saturating_sub(1000)..];
            let m = w.iter().map(|&r| r as f64).sum::<f64>() / w.len() as f64;
            eprintln!("games {:6}  window {m:.3}", rewards.len());
        }
    }
    let w = &rewards[rewards.len().saturating_sub(1000)..];
    let m = w.iter().map(|&r| r as f64).sum::<f64>() / w.len() as f64;
    println!("seed {seed} lr {lr} r {range} e {escale} last1000 {m:.3}");
}
