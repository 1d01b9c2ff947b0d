//! Synthetic object dataset and signalling-round construction.
//!
//! Objects are symbolic attribute triples (shape, object color, floor
//! color). A game round presents one target and a candidate set; the
//! receiver earns reward 1 by picking the target. Distractors identical to
//! the target in every factor are re-drawn so the target is always uniquely
//! identifiable in factor space.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

const MAX_DISTRACTOR_ATTEMPTS: usize = 1000;

/// One object: categorical indices into the three factors of variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ObjectSpec {
    pub shape: usize,
    pub object_color: usize,
    pub floor_color: usize,
}

/// Cardinality of each factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct FactorCardinalities {
    pub shapes: usize,
    pub object_colors: usize,
    pub floor_colors: usize,
}

impl Default for FactorCardinalities {
    fn default() -> Self {
        FactorCardinalities {
            shapes: 5,
            object_colors: 8,
            floor_colors: 5,
        }
    }
}

impl FactorCardinalities {
    /// Dimension of the concatenated one-hot encoding.
    pub fn one_hot_len(&self) -> usize {
        self.shapes + self.object_colors + self.floor_colors
    }
}

/// Train/test object pools drawn i.i.d. from the factor product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub train: Vec<ObjectSpec>,
    pub test: Vec<ObjectSpec>,
    pub factors: FactorCardinalities,
}

/// Which object pool a game draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// One signalling round: candidate set plus the target's position in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameInstance {
    pub candidates: Vec<ObjectSpec>,
    pub target_index: usize,
}

impl GameInstance {
    pub fn target(&self) -> &ObjectSpec {
        &self.candidates[self.target_index]
    }
}

fn sample_spec(factors: &FactorCardinalities, rng: &mut impl Rng) -> ObjectSpec {
    ObjectSpec {
        shape: rng.random_range(0..factors.shapes),
        object_color: rng.random_range(0..factors.object_colors),
        floor_color: rng.random_range(0..factors.floor_colors),
    }
}

/// Sample `train_size` + `test_size` objects i.i.d. uniform over the factor
/// product, with replacement.
pub fn generate_dataset(
    factors: FactorCardinalities,
    train_size: usize,
    test_size: usize,
    rng: &mut impl Rng,
) -> Dataset {
    assert!(
        factors.shapes >= 2 && factors.object_colors >= 2 && factors.floor_colors >= 2,
        "each factor needs cardinality >= 2"
    );
    let train = (0..train_size).map(|_| sample_spec(&factors, rng)).collect();
    let test = (0..test_size).map(|_| sample_spec(&factors, rng)).collect();
    Dataset {
        train,
        test,
        factors,
    }
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[ObjectSpec] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Text dump: one line per object, `split shape color floor`, train
    /// objects first, in stored order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (name, objs) in [("train", &self.train), ("test", &self.test)] {
            for o in objs.iter() {
                let _ = writeln!(s, "{} {} {} {}", name, o.shape, o.object_color, o.floor_color);
            }
        }
        s
    }

    /// Parse the [`Dataset::dump`] format.
    pub fn load(text: &str, factors: FactorCardinalities) -> Result<Dataset> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::InvalidConfig(format!(
                    "dataset line {}: expected 4 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| {
                    Error::InvalidConfig(format!("dataset line {}: bad index {s}", lineno + 1))
                })
            };
            let spec = ObjectSpec {
                shape: parse(fields[1])?,
                object_color: parse(fields[2])?,
                floor_color: parse(fields[3])?,
            };
            match fields[0] {
                "train" => train.push(spec),
                "test" => test.push(spec),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "dataset line {}: unknown split {other}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(Dataset {
            train,
            test,
            factors,
        })
    }
}

/// A discrete message: a sequence of symbol indices, each below the vocab
/// size. Generation terminates at the end-of-message symbol or the length
/// cap, so length is always in `1..=max_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub tokens: Vec<usize>,
}

impl Message {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Draw one round: `x_size` candidates from the pool (with replacement),
/// target uniform among them; any distractor identical to the target in all
/// factors is re-drawn.
pub fn sample_game(
    dataset: &Dataset,
    split: Split,
    x_size: usize,
    rng: &mut impl Rng,
) -> Result<GameInstance> {
    let pool = dataset.split(split);
    assert!(!pool.is_empty(), "dataset partition is empty");
    assert!(x_size >= 2, "need at least one distractor");
    let mut candidates: Vec<ObjectSpec> = (0..x_size)
        .map(|_| pool[rng.random_range(0..pool.len())])
        .collect();
    let target_index = rng.random_range(0..x_size);
    let target = candidates[target_index];
    for i in 0..x_size {
        if i == target_index {
            continue;
        }
        let mut attempts = 0;
        while candidates[i] == target {
            if attempts >= MAX_DISTRACTOR_ATTEMPTS {
                return Err(Error::DistractorExhausted(MAX_DISTRACTOR_ATTEMPTS));
            }
            candidates[i] = pool[rng.random_range(0..pool.len())];
            attempts += 1;
        }
    }
    Ok(GameInstance {
        candidates,
        target_index,
    })
}

/// 1 iff the receiver picked the target.
pub fn reward(predicted: usize, target: usize) -> u8 {
    u8::from(predicted == target)
}
