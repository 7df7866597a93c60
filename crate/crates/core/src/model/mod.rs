//! Attention-augmented LSTM classifier.
//!
//! `embedding → dropout → LSTM → attention → dense → softmax`, trained one
//! example at a time with cross-entropy loss and Adam. All gradients are
//! derived by hand in [`network::backward`] and checked against finite
//! differences in the test suite.

mod adam;
mod attention;
mod lstm;
mod network;
mod train;

use std::collections::BTreeMap;

pub use adam::{adam_step, adam_update, AdamState};
pub use attention::{attention, AttentionOutput};
pub use lstm::{lstm_step, LstmState, StepCache};
pub use network::{
    backward, cross_entropy, dropout_mask, forward, predict, predict_indices, ForwardTrace,
};
pub use train::{evaluate, train, EpochLog, TrainOutcome};

use crate::error::{Error, Result};
use crate::numerics::{rand_uniform, Matrix, Rng, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    /// Keep only the first `max_len` tokens of each post.
    pub max_len: Option<usize>,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Epochs without dev improvement before stopping; `None` disables.
    pub patience: Option<usize>,
    /// Global L2 gradient clip; off when `None`.
    pub clip_norm: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 100,
            hidden_dim: 100,
            num_classes: 3,
            dropout_rate: 0.3,
            learning_rate: 0.001,
            max_len: None,
            epochs: 10,
            seed: 42,
            init_scale: 0.08,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            patience: Some(3),
            clip_norm: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("embedding and hidden dimensions must be positive".into());
        }
        if self.num_classes != 3 {
            return bad(format!("num_classes must be 3, got {}", self.num_classes));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must lie in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.max_len == Some(0) {
            return bad("max_len must be positive".into());
        }
        if !(self.init_scale > 0.0) {
            return bad(format!("init_scale must be positive, got {}", self.init_scale));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive".into());
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("clip_norm must be positive".into());
        }
        Ok(())
    }
}

/// Gate weights of the memory block. `w_*` act on the input, `u_*` on the
/// previous hidden state; `c` is the candidate-cell gate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_o: Matrix,
    pub w_c: Matrix,
    pub u_f: Matrix,
    pub u_i: Matrix,
    pub u_o: Matrix,
    pub u_c: Matrix,
    pub b_f: Vector,
    pub b_i: Vector,
    pub b_o: Vector,
    pub b_c: Vector,
}

impl LstmParams {
    pub fn zeros(embed_dim: usize, hidden_dim: usize) -> Self {
        let w = || Matrix::zeros(hidden_dim, embed_dim);
        let u = || Matrix::zeros(hidden_dim, hidden_dim);
        let b = || Vector::zeros(hidden_dim);
        LstmParams {
            w_f: w(),
            w_i: w(),
            w_o: w(),
            w_c: w(),
            u_f: u(),
            u_i: u(),
            u_o: u(),
            u_c: u(),
            b_f: b(),
            b_i: b(),
            b_o: b(),
            b_c: b(),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.w_f.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_f.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w_a: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub w_d: Matrix,
    pub b_d: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Matrix,
    pub lstm: LstmParams,
    pub attn: AttentionParams,
    pub dense: DenseParams,
}

/// A named, shaped view of one parameter tensor. Vectors have `cols == 1`.
#[derive(Debug, Clone, Copy)]
pub struct ParamBlock<'a> {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

pub const BLOCK_NAMES: [&str; 16] = [
    "embedding",
    "lstm.w_f",
    "lstm.w_i",
    "lstm.w_o",
    "lstm.w_c",
    "lstm.u_f",
    "lstm.u_i",
    "lstm.u_o",
    "lstm.u_c",
    "lstm.b_f",
    "lstm.b_i",
    "lstm.b_o",
    "lstm.b_c",
    "attn.w_a",
    "dense.w_d",
    "dense.b_d",
];

impl ModelParams {
    pub fn zeros(vocab_size: usize, cfg: &ModelConfig) -> Self {
        ModelParams {
            embedding: Matrix::zeros(vocab_size, cfg.embed_dim),
            lstm: LstmParams::zeros(cfg.embed_dim, cfg.hidden_dim),
            attn: AttentionParams {
                w_a: Vector::zeros(cfg.hidden_dim),
            },
            dense: DenseParams {
                w_d: Matrix::zeros(cfg.num_classes, cfg.hidden_dim),
                b_d: Vector::zeros(cfg.num_classes),
            },
        }
    }

    /// Uniform `[-init_scale, init_scale]` weights, zero biases.
    pub fn init(vocab_size: usize, cfg: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        if vocab_size == 0 {
            return Err(Error::invalid("vocabulary is empty"));
        }
        let s = cfg.init_scale;
        let (e, h, k) = (cfg.embed_dim, cfg.hidden_dim, cfg.num_classes);
        let embedding = rand_uniform(rng, vocab_size, e, s);
        let mut w = || rand_uniform(rng, h, e, s);
        let (w_f, w_i, w_o, w_c) = (w(), w(), w(), w());
        let mut u = || rand_uniform(rng, h, h, s);
        let (u_f, u_i, u_o, u_c) = (u(), u(), u(), u());
        let w_a = Vector::from(rand_uniform(rng, h, 1, s).as_slice().to_vec());
        let w_d = rand_uniform(rng, k, h, s);
        let b = || Vector::zeros(h);
        Ok(ModelParams {
            embedding,
            lstm: LstmParams {
                w_f,
                w_i,
                w_o,
                w_c,
                u_f,
                u_i,
                u_o,
                u_c,
                b_f: b(),
                b_i: b(),
                b_o: b(),
                b_c: b(),
            },
            attn: AttentionParams { w_a },
            dense: DenseParams {
                w_d,
                b_d: Vector::zeros(k),
            },
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.lstm.hidden_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.dense.w_d.rows()
    }

    pub fn blocks(&self) -> Vec<ParamBlock<'_>> {
        fn m<'a>(name: &'static str, x: &'a Matrix) -> ParamBlock<'a> {
            ParamBlock {
                name,
                rows: x.rows(),
                cols: x.cols(),
                data: x.as_slice(),
            }
        }
        fn v<'a>(name: &'static str, x: &'a Vector) -> ParamBlock<'a> {
            ParamBlock {
                name,
                rows: x.len(),
                cols: 1,
                data: x.as_slice(),
            }
        }
        let l = &self.lstm;
        vec![
            m(BLOCK_NAMES[0], &self.embedding),
            m(BLOCK_NAMES[1], &l.w_f),
            m(BLOCK_NAMES[2], &l.w_i),
            m(BLOCK_NAMES[3], &l.w_o),
            m(BLOCK_NAMES[4], &l.w_c),
            m(BLOCK_NAMES[5], &l.u_f),
            m(BLOCK_NAMES[6], &l.u_i),
            m(BLOCK_NAMES[7], &l.u_o),
            m(BLOCK_NAMES[8], &l.u_c),
            v(BLOCK_NAMES[9], &l.b_f),
            v(BLOCK_NAMES[10], &l.b_i),
            v(BLOCK_NAMES[11], &l.b_o),
            v(BLOCK_NAMES[12], &l.b_c),
            v(BLOCK_NAMES[13], &self.attn.w_a),
            m(BLOCK_NAMES[14], &self.dense.w_d),
            v(BLOCK_NAMES[15], &self.dense.b_d),
        ]
    }

    /// Mutable slices in [`BLOCK_NAMES`] order.
    pub fn blocks_mut(&mut self) -> [&mut [f64]; 16] {
        let l = &mut self.lstm;
        [
            self.embedding.as_mut_slice(),
            l.w_f.as_mut_slice(),
            l.w_i.as_mut_slice(),
            l.w_o.as_mut_slice(),
            l.w_c.as_mut_slice(),
            l.u_f.as_mut_slice(),
            l.u_i.as_mut_slice(),
            l.u_o.as_mut_slice(),
            l.u_c.as_mut_slice(),
            l.b_f.as_mut_slice(),
            l.b_i.as_mut_slice(),
            l.b_o.as_mut_slice(),
            l.b_c.as_mut_slice(),
            self.attn.w_a.as_mut_slice(),
            self.dense.w_d.as_mut_slice(),
            self.dense.b_d.as_mut_slice(),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|b| b.data.iter().all(|v| v.is_finite()))
    }

    /// Rebuilds parameters from named tensors, checking every shape
    /// against `cfg` and `vocab_size`.
    pub fn from_blocks(
        vocab_size: usize,
        cfg: &ModelConfig,
        blocks: Vec<(String, usize, usize, Vec<f64>)>,
    ) -> Result<Self> {
        let mut params = ModelParams::zeros(vocab_size, cfg);
        let expected: Vec<(usize, usize)> =
            params.blocks().iter().map(|b| (b.rows, b.cols)).collect();
        if blocks.len() != BLOCK_NAMES.len() {
            return Err(Error::invalid(format!(
                "expected {} tensors, found {}",
                BLOCK_NAMES.len(),
                blocks.len()
            )));
        }
        let mut by_name: BTreeMap<String, (usize, usize, Vec<f64>)> = BTreeMap::new();
        for (name, r, c, data) in blocks {
            by_name.insert(name, (r, c, data));
        }
        for ((slot, name), shape) in params.blocks_mut().into_iter().zip(BLOCK_NAMES).zip(expected) {
            let (r, c, data) = by_name
                .remove(name)
                .ok_or_else(|| Error::invalid(format!("missing tensor {name}")))?;
            if (r, c) != shape || data.len() != slot.len() {
                return Err(Error::invalid(format!(
                    "tensor {name} has shape {r}x{c}, expected {}x{}",
                    shape.0, shape.1
                )));
            }
            slot.copy_from_slice(&data);
        }
        Ok(params)
    }
}

/// Gradient of the loss with respect to [`ModelParams`]. Embedding rows are
/// kept sparse: only rows of tokens seen in the sequence are present.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<usize, Vec<f64>>,
    pub lstm: LstmParams,
    pub attn: AttentionParams,
    pub dense: DenseParams,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let (e, h, k) = (params.embed_dim(), params.hidden_dim(), params.num_classes());
        Gradients {
            embedding: BTreeMap::new(),
            lstm: LstmParams::zeros(e, h),
            attn: AttentionParams {
                w_a: Vector::zeros(h),
            },
            dense: DenseParams {
                w_d: Matrix::zeros(k, h),
                b_d: Vector::zeros(k),
            },
        }
    }

    /// Dense slices for every block except the embedding, in
    /// [`BLOCK_NAMES`]`[1..]` order.
    pub fn dense_blocks(&self) -> [&[f64]; 15] {
        let l = &self.lstm;
        [
            l.w_f.as_slice(),
            l.w_i.as_slice(),
            l.w_o.as_slice(),
            l.w_c.as_slice(),
            l.u_f.as_slice(),
            l.u_i.as_slice(),
            l.u_o.as_slice(),
            l.u_c.as_slice(),
            l.b_f.as_slice(),
            l.b_i.as_slice(),
            l.b_o.as_slice(),
            l.b_c.as_slice(),
            self.attn.w_a.as_slice(),
            self.dense.w_d.as_slice(),
            self.dense.b_d.as_slice(),
        ]
    }

    fn dense_blocks_mut(&mut self) -> [&mut [f64]; 15] {
        let l = &mut self.lstm;
        [
            l.w_f.as_mut_slice(),
            l.w_i.as_mut_slice(),
            l.w_o.as_mut_slice(),
            l.w_c.as_mut_slice(),
            l.u_f.as_mut_slice(),
            l.u_i.as_mut_slice(),
            l.u_o.as_mut_slice(),
            l.u_c.as_mut_slice(),
            l.b_f.as_mut_slice(),
            l.b_i.as_mut_slice(),
            l.b_o.as_mut_slice(),
            l.b_c.as_mut_slice(),
            self.attn.w_a.as_mut_slice(),
            self.dense.w_d.as_mut_slice(),
            self.dense.b_d.as_mut_slice(),
        ]
    }

    /// Full embedding gradient as a dense `vocab_size × embed_dim` matrix.
    pub fn embedding_dense(&self, vocab_size: usize, embed_dim: usize) -> Matrix {
        let mut m = Matrix::zeros(vocab_size, embed_dim);
        for (&row, g) in &self.embedding {
            m.row_mut(row).copy_from_slice(g);
        }
        m
    }

    pub fn norm(&self) -> f64 {
        let sparse: f64 = self.embedding.values().flatten().map(|v| v * v).sum();
        let dense: f64 = self
            .dense_blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum();
        (sparse + dense).sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.embedding.values_mut() {
            row.iter_mut().for_each(|v| *v *= factor);
        }
        for block in self.dense_blocks_mut() {
            block.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Rescales so the global L2 norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let n = self.norm();
        if n > max_norm {
            self.scale(max_norm / n);
        }
    }
}
