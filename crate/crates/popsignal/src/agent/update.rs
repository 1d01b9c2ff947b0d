//! Minibatch REINFORCE updates for one agent pair.
//!
//! A minibatch plays `N` games with per-game random role assignment,
//! computes the shared baseline `b` as the minibatch mean reward, then
//! applies one clipped fixed-rate gradient ascent step per agent. Each
//! agent's gradient flows only through the paths it was active on, so the
//! inactive head of each role stays bit-identical.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{self, Dataset, Split};

use super::backward::{self, entropy_coefficient};
use super::forward;
use super::params::{AgentParams, Gradient};

/// Optimizer and game-shape constants for one run.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub minibatch_size: usize,
    /// Candidate-set size per game.
    pub x_size: usize,
    /// Half-width of the uniform weight initialization.
    pub init_range: f64,
    /// Multiplier on the scheduled entropy coefficient. The sender entropy
    /// term sums per-step policy entropies over the message; 1 / max_len
    /// normalizes that sum to a per-step average at full length.
    pub entropy_scale: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.8,
            grad_clip: 5.0,
            minibatch_size: 32,
            x_size: 4,
            init_range: super::params::DEFAULT_INIT_RANGE,
            entropy_scale: 0.2,
        }
    }
}

/// Outcome of one game within a minibatch.
#[derive(Debug, Clone, Copy)]
pub struct GameResult {
    pub sender_id: usize,
    pub receiver_id: usize,
    pub reward: u8,
}

struct PlayedGame {
    sender_id: usize,
    receiver_id: usize,
    reward: u8,
    sender_cache: forward::SenderCache,
    receiver_out: forward::ReceiverOutput,
    receiver_cache: forward::ReceiverCache,
    sender_out: forward::SenderOutput,
}

/// Play `minibatch_size` games between agents `a` and `b` and apply one
/// update step to each. Returns the per-game results in play order.
///
/// `speaker_steps` tracks each agent's lifetime sender-game count for the
/// entropy-coefficient schedule; it is incremented here.
pub fn train_minibatch(
    population: &mut [AgentParams],
    a: usize,
    b: usize,
    dataset: &Dataset,
    split: Split,
    hyper: &Hyperparams,
    speaker_steps: &mut [u64],
    rng: &mut impl Rng,
) -> Result<Vec<GameResult>> {
    assert_ne!(a, b, "an agent cannot play against itself");
    let factors = dataset.factors;
    let mut played: Vec<PlayedGame> = Vec::with_capacity(hyper.minibatch_size);
    for _ in 0..hyper.minibatch_size {
        let (sender_id, receiver_id) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        let game = game::sample_game(dataset, split, hyper.x_size, rng)?;
        let sender = &population[sender_id];
        let receiver = &population[receiver_id];
        let (u_t, enc_cache) = forward::encode(sender, game.target(), &factors);
        let (sender_out, sender_cache) = forward::sender_forward(sender, &u_t, enc_cache, rng);
        let (receiver_out, receiver_cache) = forward::receiver_forward(
            receiver,
            &sender_out.message,
            &game.candidates,
            &factors,
            rng,
        );
        let reward = game::reward(receiver_out.choice, game.target_index);
        played.push(PlayedGame {
            sender_id,
            receiver_id,
            reward,
            sender_cache,
            receiver_out,
            receiver_cache,
            sender_out,
        });
    }

    let n = played.len() as f64;
    let baseline = played.iter().map(|g| g.reward as f64).sum::<f64>() / n;
    let mean_abs_advantage = played
        .iter()
        .map(|g| (g.reward as f64 - baseline).abs())
        .sum::<f64>()
        / n;

    let arch = population[a].arch;
    let mut grad_a = Gradient::zeros(&arch);
    let mut grad_b = Gradient::zeros(&arch);
    for g in &played {
        let advantage = g.reward as f64 - baseline;
        // per-minibatch mean |R - b| drives the entropy schedule
        let alpha = hyper.entropy_scale
            * entropy_coefficient(speaker_steps[g.sender_id], mean_abs_advantage, 0.0);
        let sender_grad = if g.sender_id == a { &mut grad_a } else { &mut grad_b };
        backward::sender_backward(
            &population[g.sender_id],
            &g.sender_cache,
            advantage,
            alpha,
            sender_grad,
        );
        let receiver_grad = if g.receiver_id == a { &mut grad_a } else { &mut grad_b };
        backward::receiver_backward(
            &population[g.receiver_id],
            &g.receiver_cache,
            &g.receiver_out.distribution,
            g.receiver_out.choice,
            advantage,
            receiver_grad,
        );
        let _ = &g.sender_out; // retained for symmetry; losses derive from caches
    }

    for (id, grad) in [(a, &mut grad_a), (b, &mut grad_b)] {
        grad.scale(1.0 / n);
        let norm = grad.norm();
        if !norm.is_finite() {
            return Err(Error::NonFiniteGradient(format!("agent {id}")));
        }
        if norm > hyper.grad_clip {
            grad.scale(hyper.grad_clip / norm);
        }
        let params = &mut population[id];
        for (p, g) in params.data.iter_mut().zip(&grad.data) {
            *p += hyper.learning_rate * g;
        }
        if !params.all_finite() {
            return Err(Error::NonFiniteGradient(format!("agent {id}")));
        }
    }

    let results = played
        .iter()
        .map(|g| GameResult {
            sender_id: g.sender_id,
            receiver_id: g.receiver_id,
            reward: g.reward,
        })
        .collect();
    for g in &played {
        speaker_steps[g.sender_id] += 1;
    }
    Ok(results)
}
