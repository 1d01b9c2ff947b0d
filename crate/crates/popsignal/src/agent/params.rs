//! Agent parameter bundle: shared encoder, sender head (LSTM decoder +
//! vocabulary projection), receiver head (LSTM encoder), and the token
//! embedding table. All parameters live in one flat `f64` vector with a
//! named-group layout, which keeps gradient vectors, freezing masks,
//! finite-difference checks, and checkpointing uniform.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

/// Network dimensions. Defaults: 64-dim hidden states, 32-dim token
/// embeddings, vocabulary of 20 with token 0 as end-of-message, messages of
/// at most 5 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ArchConfig {
    /// Length of the concatenated one-hot factor encoding.
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub vocab_size: usize,
    pub max_len: usize,
}

/// End-of-message symbol; a message consisting of it alone has length 1.
pub const EOM_TOKEN: usize = 0;

/// Default half-width of the uniform weight initialization.
pub const DEFAULT_INIT_RANGE: f64 = 0.6;

impl ArchConfig {
    pub fn new(input_dim: usize) -> Self {
        ArchConfig {
            input_dim,
            hidden_dim: 64,
            embed_dim: 32,
            vocab_size: 20,
            max_len: 5,
        }
    }
}

/// Named parameter groups, in layout order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    EncW1,
    EncB1,
    EncW2,
    EncB2,
    TokenEmbed,
    SenderWih,
    SenderWhh,
    SenderBias,
    ProjW,
    ProjB,
    RecvWih,
    RecvWhh,
    RecvBias,
}

impl Group {
    pub const ALL: [Group; 13] = [
        Group::EncW1,
        Group::EncB1,
        Group::EncW2,
        Group::EncB2,
        Group::TokenEmbed,
        Group::SenderWih,
        Group::SenderWhh,
        Group::SenderBias,
        Group::ProjW,
        Group::ProjB,
        Group::RecvWih,
        Group::RecvWhh,
        Group::RecvBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::EncW1 => "enc_w1",
            Group::EncB1 => "enc_b1",
            Group::EncW2 => "enc_w2",
            Group::EncB2 => "enc_b2",
            Group::TokenEmbed => "token_embed",
            Group::SenderWih => "sender_w_ih",
            Group::SenderWhh => "sender_w_hh",
            Group::SenderBias => "sender_bias",
            Group::ProjW => "proj_w",
            Group::ProjB => "proj_b",
            Group::RecvWih => "recv_w_ih",
            Group::RecvWhh => "recv_w_hh",
            Group::RecvBias => "recv_bias",
        }
    }

    /// (rows, cols) under `arch`; vectors are `(len, 1)`.
    pub fn shape(self, arch: &ArchConfig) -> (usize, usize) {
        let h = arch.hidden_dim;
        match self {
            Group::EncW1 => (h, arch.input_dim),
            Group::EncB1 => (h, 1),
            Group::EncW2 => (h, h),
            Group::EncB2 => (h, 1),
            Group::TokenEmbed => (arch.vocab_size, arch.embed_dim),
            Group::SenderWih => (4 * h, arch.embed_dim),
            Group::SenderWhh => (4 * h, h),
            Group::SenderBias => (4 * h, 1),
            Group::ProjW => (arch.vocab_size, h),
            Group::ProjB => (arch.vocab_size, 1),
            Group::RecvWih => (4 * h, arch.embed_dim),
            Group::RecvWhh => (4 * h, h),
            Group::RecvBias => (4 * h, 1),
        }
    }

    pub fn len(self, arch: &ArchConfig) -> usize {
        let (r, c) = self.shape(arch);
        r * c
    }

    pub fn offset(self, arch: &ArchConfig) -> usize {
        Group::ALL
            .iter()
            .take_while(|&&g| g != self)
            .map(|g| g.len(arch))
            .sum()
    }

    /// Groups trained when the owner acts as sender: encoder, token
    /// embedding, and the sender head. The receiver LSTM stays frozen.
    pub fn trainable_as_sender(self) -> bool {
        !matches!(self, Group::RecvWih | Group::RecvWhh | Group::RecvBias)
    }

    /// Groups trained when the owner acts as receiver: encoder, token
    /// embedding, and the receiver LSTM. The sender head stays frozen.
    pub fn trainable_as_receiver(self) -> bool {
        !matches!(
            self,
            Group::SenderWih | Group::SenderWhh | Group::SenderBias | Group::ProjW | Group::ProjB
        )
    }
}

pub fn total_len(arch: &ArchConfig) -> usize {
    Group::ALL.iter().map(|g| g.len(arch)).sum()
}

/// One agent's full parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub arch: ArchConfig,
    pub data: Vec<f64>,
}

impl AgentParams {
    /// Initialize every weight i.i.d. uniform on `[-init_range, init_range]`.
    ///
    /// Small ranges (e.g. 0.1) leave the bilinear receiver logits `z . u`
    /// near zero on both factors, which starves early gradients; the default
    /// training configuration uses [`DEFAULT_INIT_RANGE`].
    pub fn init(arch: ArchConfig, init_range: f64, rng: &mut impl Rng) -> Self {
        assert!(init_range > 0.0 && init_range.is_finite());
        let data = (0..total_len(&arch))
            .map(|_| rng.random_range(-init_range..init_range))
            .collect();
        AgentParams { arch, data }
    }

    pub fn group(&self, g: Group) -> &[f64] {
        let off = g.offset(&self.arch);
        &self.data[off..off + g.len(&self.arch)]
    }

    pub fn group_mut(&mut self, g: Group) -> &mut [f64] {
        let off = g.offset(&self.arch);
        let len = g.len(&self.arch);
        &mut self.data[off..off + len]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Versioned flat-text checkpoint: one `tensor` header per group, then
    /// one line per row with values as hexadecimal `f64` bit patterns, so a
    /// round trip is bit-exact.
    pub fn save_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "popsignal-params v1");
        let _ = writeln!(
            s,
            "arch {} {} {} {} {}",
            self.arch.input_dim,
            self.arch.hidden_dim,
            self.arch.embed_dim,
            self.arch.vocab_size,
            self.arch.max_len
        );
        for g in Group::ALL {
            let (rows, cols) = g.shape(&self.arch);
            let _ = writeln!(s, "tensor {} {} {}", g.name(), rows, cols);
            let vals = self.group(g);
            for r in 0..rows {
                let row = &vals[r * cols..(r + 1) * cols];
                let line: Vec<String> =
                    row.iter().map(|v| format!("{:016x}", v.to_bits())).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        s
    }

    pub fn load_text(text: &str) -> Result<AgentParams> {
        let mut lines = text.lines();
        let bad = |msg: &str| Error::CheckpointFormat(msg.to_string());
        if lines.next() != Some("popsignal-params v1") {
            return Err(bad("missing or unsupported version header"));
        }
        let arch_line = lines.next().ok_or_else(|| bad("missing arch line"))?;
        let fields: Vec<&str> = arch_line.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "arch" {
            return Err(bad("malformed arch line"));
        }
        let num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| bad("non-numeric arch field"))
        };
        let arch = ArchConfig {
            input_dim: num(fields[1])?,
            hidden_dim: num(fields[2])?,
            embed_dim: num(fields[3])?,
            vocab_size: num(fields[4])?,
            max_len: num(fields[5])?,
        };
        let mut data = vec![0.0; total_len(&arch)];
        for g in Group::ALL {
            let header = lines.next().ok_or_else(|| bad("truncated checkpoint"))?;
            let (rows, cols) = g.shape(&arch);
            let expected = format!("tensor {} {} {}", g.name(), rows, cols);
            if header != expected {
                return Err(Error::CheckpointFormat(format!(
                    "expected header '{expected}', got '{header}'"
                )));
            }
            let off = g.offset(&arch);
            for r in 0..rows {
                let line = lines.next().ok_or_else(|| bad("truncated tensor"))?;
                let vals: Vec<&str> = line.split_whitespace().collect();
                if vals.len() != cols {
                    return Err(Error::CheckpointFormat(format!(
                        "tensor {} row {r}: expected {cols} values, got {}",
                        g.name(),
                        vals.len()
                    )));
                }
                for (c, v) in vals.iter().enumerate() {
                    let bits = u64::from_str_radix(v, 16)
                        .map_err(|_| bad("invalid hex float"))?;
                    data[off + r * cols + c] = f64::from_bits(bits);
                }
            }
        }
        if lines.next().is_some() {
            return Err(bad("trailing data after last tensor"));
        }
        Ok(AgentParams { arch, data })
    }
}

/// A gradient over one agent's parameter vector, same layout as the params.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub data: Vec<f64>,
}

impl Gradient {
    pub fn zeros(arch: &ArchConfig) -> Self {
        Gradient {
            data: vec![0.0; total_len(arch)],
        }
    }

    pub fn group_mut(&mut self, arch: &ArchConfig, g: Group) -> &mut [f64] {
        let off = g.offset(arch);
        let len = g.len(arch);
        &mut self.data[off..off + len]
    }

    /// Three disjoint mutable group views at once (for the LSTM backward
    /// pass, which accumulates into weight, recurrent-weight, and bias
    /// slices simultaneously). Groups must be given in layout order.
    pub fn three_mut(
        &mut self,
        arch: &ArchConfig,
        a: Group,
        b: Group,
        c: Group,
    ) -> (&mut [f64], &mut [f64], &mut [f64]) {
        let (oa, la) = (a.offset(arch), a.len(arch));
        let (ob, lb) = (b.offset(arch), b.len(arch));
        let (oc, lc) = (c.offset(arch), c.len(arch));
        assert!(oa + la <= ob && ob + lb <= oc, "groups must be ordered and disjoint");
        let (head, rest) = self.data.split_at_mut(ob);
        let (mid, tail) = rest.split_at_mut(oc - ob);
        (
            &mut head[oa..oa + la],
            &mut mid[..lb],
            &mut tail[..lc],
        )
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}
