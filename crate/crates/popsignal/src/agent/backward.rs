//! Reverse-mode gradients of the shared REINFORCE objective
//!
//!   J = (R - b) * (sum_l log p_S(m_l) + log p_L(t')) + alpha * H_S
//!
//! for a fixed trajectory (message and choice held constant). Gradients are
//! accumulated into flat [`Gradient`] vectors with the same layout as the
//! parameters, one per agent; the ascent direction is `+grad J`.

use crate::game::{FactorCardinalities, Message, ObjectSpec};

use super::forward::{self, EncodeCache, ReceiverCache, SenderCache};
use super::nn;
use super::params::{AgentParams, Gradient, Group};

/// All scalar terms entering one game's objective.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub reward: f64,
    pub baseline: f64,
    pub sender_logprob_sum: f64,
    pub receiver_logprob: f64,
    pub entropy: f64,
    pub alpha: f64,
}

impl LossTerms {
    pub fn advantage(&self) -> f64 {
        self.reward - self.baseline
    }

    /// The maximized objective J.
    pub fn objective(&self) -> f64 {
        self.advantage() * (self.sender_logprob_sum + self.receiver_logprob)
            + self.alpha * self.entropy
    }
}

/// Assemble the loss terms and objective for one game.
pub fn compute_losses(
    sender_out: &forward::SenderOutput,
    receiver_out: &forward::ReceiverOutput,
    reward: f64,
    baseline: f64,
    alpha: f64,
) -> LossTerms {
    LossTerms {
        reward,
        baseline,
        sender_logprob_sum: sender_out.log_probs.iter().sum(),
        receiver_logprob: receiver_out.log_prob,
        entropy: sender_out.entropy,
        alpha,
    }
}

/// Speaker entropy coefficient schedule: `0.1 - |R - b| * 0.1` for the
/// first million speaker steps, `0.01` afterwards.
pub fn entropy_coefficient(speaker_steps: u64, reward: f64, baseline: f64) -> f64 {
    if speaker_steps < 1_000_000 {
        0.1 - (reward - baseline).abs() * 0.1
    } else {
        0.01
    }
}

/// Backward through the two-layer encoder; `du` is the gradient at the
/// output embedding.
fn encoder_backward(params: &AgentParams, cache: &EncodeCache, du: &[f64], grad: &mut Gradient) {
    let arch = params.arch;
    let h = arch.hidden_dim;
    nn::outer_acc(grad.group_mut(&arch, Group::EncW2), h, h, du, &cache.h1);
    for (g, d) in grad.group_mut(&arch, Group::EncB2).iter_mut().zip(du) {
        *g += d;
    }
    let mut dh1 = vec![0.0; h];
    nn::matvec_transpose_acc(params.group(Group::EncW2), h, h, du, &mut dh1);
    for (d, &a) in dh1.iter_mut().zip(&cache.h1) {
        *d *= 1.0 - a * a;
    }
    nn::outer_acc(
        grad.group_mut(&arch, Group::EncW1),
        h,
        arch.input_dim,
        &dh1,
        &cache.input,
    );
    for (g, d) in grad.group_mut(&arch, Group::EncB1).iter_mut().zip(&dh1) {
        *g += d;
    }
}

/// Gradient of `advantage * sum_l log p(m_l) + alpha * H_S` with respect to
/// the sender's parameters (encoder, token embedding, sender LSTM, and
/// projection). The receiver head receives no gradient.
pub fn sender_backward(
    params: &AgentParams,
    cache: &SenderCache,
    advantage: f64,
    alpha: f64,
    grad: &mut Gradient,
) {
    let arch = params.arch;
    let hdim = arch.hidden_dim;
    let vocab = arch.vocab_size;
    let mut dh_next = vec![0.0; hdim];
    let mut dc_next = vec![0.0; hdim];
    for (t, step) in cache.steps.iter().enumerate().rev() {
        let mut dlogits = vec![0.0; vocab];
        nn::logprob_entropy_logit_grad(&step.probs, step.token, advantage, alpha, &mut dlogits);
        nn::outer_acc(
            grad.group_mut(&arch, Group::ProjW),
            vocab,
            hdim,
            &dlogits,
            &step.lstm.h,
        );
        for (g, d) in grad.group_mut(&arch, Group::ProjB).iter_mut().zip(&dlogits) {
            *g += d;
        }
        let mut dh = dh_next.clone();
        nn::matvec_transpose_acc(params.group(Group::ProjW), vocab, hdim, &dlogits, &mut dh);
        let (dw_ih, dw_hh, dbias) =
            grad.three_mut(&arch, Group::SenderWih, Group::SenderWhh, Group::SenderBias);
        let grads = nn::lstm_step_backward(
            params.group(Group::SenderWih),
            params.group(Group::SenderWhh),
            hdim,
            &step.lstm,
            &dh,
            &dc_next,
            dw_ih,
            dw_hh,
            dbias,
        );
        if t > 0 {
            // this step's input was the embedding of the previous token
            let prev_token = cache.steps[t - 1].token;
            let e = arch.embed_dim;
            let embed_grad = grad.group_mut(&arch, Group::TokenEmbed);
            for (g, d) in embed_grad[prev_token * e..(prev_token + 1) * e]
                .iter_mut()
                .zip(&grads.dx)
            {
                *g += d;
            }
        }
        dh_next = grads.dh_prev;
        dc_next = grads.dc_prev;
    }
    // h0 was the encoder output; c0 was constant zero
    encoder_backward(params, &cache.encoder, &dh_next, grad);
}

/// Gradient of `advantage * log p(choice)` with respect to the receiver's
/// parameters (encoder, token embedding, receiver LSTM). The sender head
/// receives no gradient.
pub fn receiver_backward(
    params: &AgentParams,
    cache: &ReceiverCache,
    distribution: &[f64],
    choice: usize,
    advantage: f64,
    grad: &mut Gradient,
) {
    let arch = params.arch;
    let hdim = arch.hidden_dim;
    let n_cand = cache.candidate_embeddings.len();
    let mut dlogits = vec![0.0; n_cand];
    for (i, d) in dlogits.iter_mut().enumerate() {
        let indicator = if i == choice { 1.0 } else { 0.0 };
        *d = advantage * (indicator - distribution[i]);
    }
    // logits_i = z . u_i
    let mut dz = vec![0.0; hdim];
    for (i, u) in cache.candidate_embeddings.iter().enumerate() {
        let di = dlogits[i];
        if di == 0.0 {
            continue;
        }
        for (dzk, uk) in dz.iter_mut().zip(u) {
            *dzk += di * uk;
        }
        let du: Vec<f64> = cache.z.iter().map(|&zk| di * zk).collect();
        encoder_backward(params, &cache.candidate_encoders[i], &du, grad);
    }
    // BPTT through the message LSTM; z is the final hidden state
    let mut dh_next = dz;
    let mut dc_next = vec![0.0; hdim];
    for (t, step) in cache.lstm_steps.iter().enumerate().rev() {
        let (dw_ih, dw_hh, dbias) =
            grad.three_mut(&arch, Group::RecvWih, Group::RecvWhh, Group::RecvBias);
        let grads = nn::lstm_step_backward(
            params.group(Group::RecvWih),
            params.group(Group::RecvWhh),
            hdim,
            step,
            &dh_next,
            &dc_next,
            dw_ih,
            dw_hh,
            dbias,
        );
        let token = cache.message.tokens[t];
        let e = arch.embed_dim;
        let embed_grad = grad.group_mut(&arch, Group::TokenEmbed);
        for (g, d) in embed_grad[token * e..(token + 1) * e].iter_mut().zip(&grads.dx) {
            *g += d;
        }
        dh_next = grads.dh_prev;
        dc_next = grads.dc_prev;
    }
    // initial receiver state is constant zero; nothing further to propagate
}

/// The objective J for a fixed trajectory, as a pure function of the two
/// parameter vectors. This is what the finite-difference oracle perturbs.
#[allow(clippy::too_many_arguments)]
pub fn trajectory_objective(
    sender: &AgentParams,
    receiver: &AgentParams,
    target: &ObjectSpec,
    candidates: &[ObjectSpec],
    factors: &FactorCardinalities,
    message: &Message,
    choice: usize,
    advantage: f64,
    alpha: f64,
) -> f64 {
    let (u_t, _) = forward::encode(sender, target, factors);
    let (sender_logp, sender_entropy) = forward::sender_score(sender, &u_t, message);
    let receiver_logp = forward::receiver_score(receiver, message, candidates, factors, choice);
    advantage * (sender_logp + receiver_logp) + alpha * sender_entropy
}
