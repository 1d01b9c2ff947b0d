//! Dense linear algebra and LSTM-cell primitives with hand-derived
//! backward passes. Everything operates on `f64` slices; matrices are
//! row-major `rows x cols`.

/// y = W x, W is rows x cols.
pub fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(y.len(), rows);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        y[r] = acc;
    }
}

/// x += W^T y.
pub fn matvec_transpose_acc(w: &[f64], rows: usize, cols: usize, y: &[f64], x: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let yr = y[r];
        if yr == 0.0 {
            continue;
        }
        for (xi, wi) in x.iter_mut().zip(row) {
            *xi += wi * yr;
        }
    }
}

/// dW += dy ⊗ x (outer product).
pub fn outer_acc(dw: &mut [f64], rows: usize, cols: usize, dy: &[f64], x: &[f64]) {
    debug_assert_eq!(dw.len(), rows * cols);
    for r in 0..rows {
        let dyr = dy[r];
        if dyr == 0.0 {
            continue;
        }
        let row = &mut dw[r * cols..(r + 1) * cols];
        for (di, xi) in row.iter_mut().zip(x) {
            *di += dyr * xi;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Shannon entropy of a probability vector (nats).
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Gradient of `a * log p[target] + alpha * H(p)` with respect to the
/// logits, written into `dlogits`.
pub fn logprob_entropy_logit_grad(
    probs: &[f64],
    target: usize,
    advantage: f64,
    alpha: f64,
    dlogits: &mut [f64],
) {
    let h = entropy(probs);
    for (k, (&p, d)) in probs.iter().zip(dlogits.iter_mut()).enumerate() {
        let dlogp = if k == target { 1.0 - p } else { -p };
        let dent = if p > 0.0 { -p * (p.ln() + h) } else { 0.0 };
        *d = advantage * dlogp + alpha * dent;
    }
}

/// Saved activations for one LSTM step.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// One LSTM cell step. Gate order in the stacked weight matrices is
/// input, forget, cell, output.
pub fn lstm_step(
    w_ih: &[f64],
    w_hh: &[f64],
    bias: &[f64],
    hidden: usize,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> LstmStepCache {
    let gate_rows = 4 * hidden;
    let mut pre = vec![0.0; gate_rows];
    matvec(w_ih, gate_rows, x.len(), x, &mut pre);
    let mut pre_h = vec![0.0; gate_rows];
    matvec(w_hh, gate_rows, hidden, h_prev, &mut pre_h);
    for ((p, ph), b) in pre.iter_mut().zip(&pre_h).zip(bias) {
        *p += ph + b;
    }
    let i: Vec<f64> = pre[..hidden].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = pre[hidden..2 * hidden].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = pre[2 * hidden..3 * hidden].iter().map(|&v| v.tanh()).collect();
    let o: Vec<f64> = pre[3 * hidden..].iter().map(|&v| sigmoid(v)).collect();
    let c: Vec<f64> = (0..hidden)
        .map(|k| f[k] * c_prev[k] + i[k] * g[k])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|&v| v.tanh()).collect();
    let h: Vec<f64> = (0..hidden).map(|k| o[k] * tanh_c[k]).collect();
    LstmStepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        c,
        tanh_c,
        h,
    }
}

/// Gradients flowing out of one LSTM step backward pass.
pub struct LstmStepGrads {
    pub dx: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dc_prev: Vec<f64>,
}

/// Backward through one step. `dh`/`dc` are the gradients w.r.t. this
/// step's outputs; parameter gradients are accumulated in place.
#[allow(clippy::too_many_arguments)]
pub fn lstm_step_backward(
    w_ih: &[f64],
    w_hh: &[f64],
    hidden: usize,
    cache: &LstmStepCache,
    dh: &[f64],
    dc_in: &[f64],
    dw_ih: &mut [f64],
    dw_hh: &mut [f64],
    dbias: &mut [f64],
) -> LstmStepGrads {
    let gate_rows = 4 * hidden;
    let input_len = cache.x.len();
    let mut dpre = vec![0.0; gate_rows];
    let mut dc_prev = vec![0.0; hidden];
    for k in 0..hidden {
        let do_ = dh[k] * cache.tanh_c[k];
        let dc = dc_in[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
        let di = dc * cache.g[k];
        let df = dc * cache.c_prev[k];
        let dg = dc * cache.i[k];
        dc_prev[k] = dc * cache.f[k];
        dpre[k] = di * cache.i[k] * (1.0 - cache.i[k]);
        dpre[hidden + k] = df * cache.f[k] * (1.0 - cache.f[k]);
        dpre[2 * hidden + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
        dpre[3 * hidden + k] = do_ * cache.o[k] * (1.0 - cache.o[k]);
    }
    outer_acc(dw_ih, gate_rows, input_len, &dpre, &cache.x);
    outer_acc(dw_hh, gate_rows, hidden, &dpre, &cache.h_prev);
    for (db, dp) in dbias.iter_mut().zip(&dpre) {
        *db += dp;
    }
    let mut dx = vec![0.0; input_len];
    matvec_transpose_acc(w_ih, gate_rows, input_len, &dpre, &mut dx);
    let mut dh_prev = vec![0.0; hidden];
    matvec_transpose_acc(w_hh, gate_rows, hidden, &dpre, &mut dh_prev);
    LstmStepGrads {
        dx,
        dh_prev,
        dc_prev,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose() {
        // W = [[1, 2], [3, 4], [5, 6]]
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let x = [1.0, -1.0];
        let mut y = [0.0; 3];
        matvec(&w, 3, 2, &x, &mut y);
        assert_eq!(y, [-1.0, -1.0, -1.0]);
        let mut back = [0.0; 2];
        matvec_transpose_acc(&w, 3, 2, &[1.0, 0.0, 1.0], &mut back);
        assert_eq!(back, [6.0, 8.0]);
    }

    #[test]
    fn softmax_and_entropy() {
        let p = softmax(&[0.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((entropy(&p) - std::f64::consts::LN_2).abs() < 1e-12);
        // huge logits stay finite
        let p = softmax(&[1000.0, 0.0]);
        assert!(p[0].is_finite() && p[0] > 0.999);
    }

    #[test]
    fn logit_grad_matches_finite_differences() {
        let logits = vec![0.3, -0.7, 1.1, 0.0];
        let target = 2;
        let (adv, alpha) = (0.7, 0.13);
        let objective = |l: &[f64]| {
            let p = softmax(l);
            adv * p[target].ln() + alpha * entropy(&p)
        };
        let probs = softmax(&logits);
        let mut analytic = vec![0.0; 4];
        logprob_entropy_logit_grad(&probs, target, adv, alpha, &mut analytic);
        let eps = 1e-6;
        for k in 0..4 {
            let mut lp = logits.clone();
            lp[k] += eps;
            let mut lm = logits.clone();
            lm[k] -= eps;
            let fd = (objective(&lp) - objective(&lm)) / (2.0 * eps);
            assert!(
                (fd - analytic[k]).abs() < 1e-8,
                "coord {k}: fd {fd} vs analytic {}",
                analytic[k]
            );
        }
    }

    #[test]
    fn lstm_step_backward_matches_finite_differences() {
        let hidden = 3;
        let input = 2;
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let w_ih: Vec<f64> = (0..4 * hidden * input).map(|_| next()).collect();
        let w_hh: Vec<f64> = (0..4 * hidden * hidden).map(|_| next()).collect();
        let bias: Vec<f64> = (0..4 * hidden).map(|_| next()).collect();
        let x: Vec<f64> = (0..input).map(|_| next()).collect();
        let h_prev: Vec<f64> = (0..hidden).map(|_| next()).collect();
        let c_prev: Vec<f64> = (0..hidden).map(|_| next()).collect();
        // objective: sum of h outputs
        let forward = |w_ih: &[f64], w_hh: &[f64], bias: &[f64], x: &[f64], h_prev: &[f64], c_prev: &[f64]| {
            lstm_step(w_ih, w_hh, bias, hidden, x, h_prev, c_prev)
                .h
                .iter()
                .sum::<f64>()
        };
        let cache = lstm_step(&w_ih, &w_hh, &bias, hidden, &x, &h_prev, &c_prev);
        let dh = vec![1.0; hidden];
        let dc = vec![0.0; hidden];
        let mut dw_ih = vec![0.0; w_ih.len()];
        let mut dw_hh = vec![0.0; w_hh.len()];
        let mut dbias = vec![0.0; bias.len()];
        let grads = lstm_step_backward(
            &w_ih, &w_hh, hidden, &cache, &dh, &dc, &mut dw_ih, &mut dw_hh, &mut dbias,
        );
        let eps = 1e-6;
        let check = |analytic: f64, fd: f64, what: &str| {
            assert!(
                (analytic - fd).abs() < 1e-7,
                "{what}: analytic {analytic} vs fd {fd}"
            );
        };
        for k in 0..w_ih.len() {
            let mut wp = w_ih.clone();
            wp[k] += eps;
            let mut wm = w_ih.clone();
            wm[k] -= eps;
            let fd = (forward(&wp, &w_hh, &bias, &x, &h_prev, &c_prev)
                - forward(&wm, &w_hh, &bias, &x, &h_prev, &c_prev))
                / (2.0 * eps);
            check(dw_ih[k], fd, "w_ih");
        }
        for k in 0..x.len() {
            let mut xp = x.clone();
            xp[k] += eps;
            let mut xm = x.clone();
            xm[k] -= eps;
            let fd = (forward(&w_ih, &w_hh, &bias, &xp, &h_prev, &c_prev)
                - forward(&w_ih, &w_hh, &bias, &xm, &h_prev, &c_prev))
                / (2.0 * eps);
            check(grads.dx[k], fd, "x");
        }
        for k in 0..hidden {
            let mut hp = h_prev.clone();
            hp[k] += eps;
            let mut hm = h_prev.clone();
            hm[k] -= eps;
            let fd = (forward(&w_ih, &w_hh, &bias, &x, &hp, &c_prev)
                - forward(&w_ih, &w_hh, &bias, &x, &hm, &c_prev))
                / (2.0 * eps);
            check(grads.dh_prev[k], fd, "h_prev");
            let mut cp = c_prev.clone();
            cp[k] += eps;
            let mut cm = c_prev.clone();
            cm[k] -= eps;
            let fd = (forward(&w_ih, &w_hh, &bias, &x, &h_prev, &cp)
                - forward(&w_ih, &w_hh, &bias, &x, &h_prev, &cm))
                / (2.0 * eps);
            check(grads.dc_prev[k], fd, "c_prev");
        }
    }
}
