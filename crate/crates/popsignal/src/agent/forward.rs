//! Forward passes: object encoding, message generation by the sender head,
//! and candidate selection by the receiver head. Each pass returns the
//! activation caches the backward pass needs.

use rand::Rng;

use crate::game::{FactorCardinalities, Message, ObjectSpec};

use super::nn;
use super::params::{AgentParams, Group, EOM_TOKEN};

/// Concatenated one-hot encoding of the three factors.
pub fn one_hot(obj: &ObjectSpec, factors: &FactorCardinalities) -> Vec<f64> {
    let mut x = vec![0.0; factors.one_hot_len()];
    x[obj.shape] = 1.0;
    x[factors.shapes + obj.object_color] = 1.0;
    x[factors.shapes + factors.object_colors + obj.floor_color] = 1.0;
    x
}

/// Activations of the two-layer encoder.
#[derive(Debug, Clone)]
pub struct EncodeCache {
    pub input: Vec<f64>,
    pub h1: Vec<f64>,
}

/// Two-layer feedforward encoder: `u = W2 tanh(W1 x + b1) + b2`.
pub fn encode(params: &AgentParams, obj: &ObjectSpec, factors: &FactorCardinalities) -> (Vec<f64>, EncodeCache) {
    let arch = &params.arch;
    debug_assert_eq!(arch.input_dim, factors.one_hot_len());
    let x = one_hot(obj, factors);
    let h = arch.hidden_dim;
    let mut pre1 = vec![0.0; h];
    nn::matvec(params.group(Group::EncW1), h, arch.input_dim, &x, &mut pre1);
    for (p, b) in pre1.iter_mut().zip(params.group(Group::EncB1)) {
        *p = (*p + b).tanh();
    }
    let h1 = pre1;
    let mut u = vec![0.0; h];
    nn::matvec(params.group(Group::EncW2), h, h, &h1, &mut u);
    for (uv, b) in u.iter_mut().zip(params.group(Group::EncB2)) {
        *uv += b;
    }
    (u, EncodeCache { input: x, h1 })
}

/// One sender step: LSTM state, output distribution, and the emitted token.
#[derive(Debug, Clone)]
pub struct SenderStepCache {
    pub lstm: nn::LstmStepCache,
    pub probs: Vec<f64>,
    pub token: usize,
}

#[derive(Debug, Clone)]
pub struct SenderCache {
    pub encoder: EncodeCache,
    pub steps: Vec<SenderStepCache>,
}

/// Sender output: the sampled message with per-token log-probabilities and
/// the summed per-step policy entropy.
#[derive(Debug, Clone)]
pub struct SenderOutput {
    pub message: Message,
    pub log_probs: Vec<f64>,
    pub entropy: f64,
}

fn embed_row<'a>(params: &'a AgentParams, token: usize) -> &'a [f64] {
    let e = params.arch.embed_dim;
    &params.group(Group::TokenEmbed)[token * e..(token + 1) * e]
}

pub(super) fn draw_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let mut ticket: f64 = rng.random();
    for (i, &p) in probs.iter().enumerate() {
        if ticket < p {
            return i;
        }
        ticket -= p;
    }
    probs.len() - 1
}

/// Generate a message: the LSTM hidden state is initialized from the target
/// embedding `u_t` (cell state zero), a fixed zero-vector start symbol is
/// fed first, and each step samples a token from the softmaxed projection of
/// the hidden state. Stops at the end-of-message symbol or `max_len`.
pub fn sender_forward(
    params: &AgentParams,
    u_t: &[f64],
    encoder: EncodeCache,
    rng: &mut impl Rng,
) -> (SenderOutput, SenderCache) {
    let arch = &params.arch;
    let hdim = arch.hidden_dim;
    let mut h = u_t.to_vec();
    let mut c = vec![0.0; hdim];
    let mut x = vec![0.0; arch.embed_dim];
    let mut steps = Vec::new();
    let mut tokens = Vec::new();
    let mut log_probs = Vec::new();
    let mut entropy = 0.0;
    for _ in 0..arch.max_len {
        let cache = nn::lstm_step(
            params.group(Group::SenderWih),
            params.group(Group::SenderWhh),
            params.group(Group::SenderBias),
            hdim,
            &x,
            &h,
            &c,
        );
        h = cache.h.clone();
        c = cache.c.clone();
        let mut logits = vec![0.0; arch.vocab_size];
        nn::matvec(params.group(Group::ProjW), arch.vocab_size, hdim, &h, &mut logits);
        for (l, b) in logits.iter_mut().zip(params.group(Group::ProjB)) {
            *l += b;
        }
        let probs = nn::softmax(&logits);
        let token = draw_categorical(&probs, rng);
        log_probs.push(probs[token].ln());
        entropy += nn::entropy(&probs);
        tokens.push(token);
        steps.push(SenderStepCache {
            lstm: cache,
            probs,
            token,
        });
        if token == EOM_TOKEN {
            break;
        }
        x = embed_row(params, token).to_vec();
    }
    (
        SenderOutput {
            message: Message { tokens },
            log_probs,
            entropy,
        },
        SenderCache { encoder, steps },
    )
}

/// Teacher-forced replay of a fixed message; returns (sum of token
/// log-probs, summed step entropy). Used by the finite-difference oracle.
pub fn sender_score(params: &AgentParams, u_t: &[f64], message: &Message) -> (f64, f64) {
    let arch = &params.arch;
    let hdim = arch.hidden_dim;
    let mut h = u_t.to_vec();
    let mut c = vec![0.0; hdim];
    let mut x = vec![0.0; arch.embed_dim];
    let mut logp = 0.0;
    let mut ent = 0.0;
    for (idx, &token) in message.tokens.iter().enumerate() {
        let cache = nn::lstm_step(
            params.group(Group::SenderWih),
            params.group(Group::SenderWhh),
            params.group(Group::SenderBias),
            hdim,
            &x,
            &h,
            &c,
        );
        h = cache.h;
        c = cache.c;
        let mut logits = vec![0.0; arch.vocab_size];
        nn::matvec(params.group(Group::ProjW), arch.vocab_size, hdim, &h, &mut logits);
        for (l, b) in logits.iter_mut().zip(params.group(Group::ProjB)) {
            *l += b;
        }
        let probs = nn::softmax(&logits);
        logp += probs[token].ln();
        ent += nn::entropy(&probs);
        if idx + 1 < message.tokens.len() {
            x = embed_row(params, token).to_vec();
        }
    }
    (logp, ent)
}

#[derive(Debug, Clone)]
pub struct ReceiverCache {
    pub candidate_encoders: Vec<EncodeCache>,
    pub candidate_embeddings: Vec<Vec<f64>>,
    pub lstm_steps: Vec<nn::LstmStepCache>,
    pub message: Message,
    pub z: Vec<f64>,
}

/// Receiver output: the sampled candidate with its log-probability and the
/// full Gibbs distribution over candidates.
#[derive(Debug, Clone)]
pub struct ReceiverOutput {
    pub choice: usize,
    pub log_prob: f64,
    pub distribution: Vec<f64>,
}

fn receiver_encode_message(params: &AgentParams, message: &Message) -> (Vec<f64>, Vec<nn::LstmStepCache>) {
    let arch = &params.arch;
    let hdim = arch.hidden_dim;
    let mut h = vec![0.0; hdim];
    let mut c = vec![0.0; hdim];
    let mut steps = Vec::with_capacity(message.len());
    for &token in &message.tokens {
        let x = embed_row(params, token);
        let cache = nn::lstm_step(
            params.group(Group::RecvWih),
            params.group(Group::RecvWhh),
            params.group(Group::RecvBias),
            hdim,
            x,
            &h,
            &c,
        );
        h = cache.h.clone();
        c = cache.c.clone();
        steps.push(cache);
    }
    (h, steps)
}

/// Encode the message with the receiver LSTM (final hidden state is `z`),
/// score each candidate by `z . u_i`, and sample the choice from the
/// resulting Gibbs distribution.
pub fn receiver_forward(
    params: &AgentParams,
    message: &Message,
    candidates: &[ObjectSpec],
    factors: &FactorCardinalities,
    rng: &mut impl Rng,
) -> (ReceiverOutput, ReceiverCache) {
    assert!(!candidates.is_empty());
    assert!(!message.is_empty());
    let mut candidate_encoders = Vec::with_capacity(candidates.len());
    let mut candidate_embeddings = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let (u, cache) = encode(params, cand, factors);
        candidate_encoders.push(cache);
        candidate_embeddings.push(u);
    }
    let (z, lstm_steps) = receiver_encode_message(params, message);
    let logits: Vec<f64> = candidate_embeddings
        .iter()
        .map(|u| u.iter().zip(&z).map(|(a, b)| a * b).sum())
        .collect();
    let distribution = nn::softmax(&logits);
    let choice = draw_categorical(&distribution, rng);
    (
        ReceiverOutput {
            choice,
            log_prob: distribution[choice].ln(),
            distribution,
        },
        ReceiverCache {
            candidate_encoders,
            candidate_embeddings,
            lstm_steps,
            message: message.clone(),
            z,
        },
    )
}

/// Teacher-forced log-probability of a fixed choice. Used by the
/// finite-difference oracle.
pub fn receiver_score(
    params: &AgentParams,
    message: &Message,
    candidates: &[ObjectSpec],
    factors: &FactorCardinalities,
    choice: usize,
) -> f64 {
    let embeddings: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| encode(params, c, factors).0)
        .collect();
    let (z, _) = receiver_encode_message(params, message);
    let logits: Vec<f64> = embeddings
        .iter()
        .map(|u| u.iter().zip(&z).map(|(a, b)| a * b).sum())
        .collect();
    nn::softmax(&logits)[choice].ln()
}
