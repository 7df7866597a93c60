use super::{Gradients, ModelConfig, ModelParams};

/// First and second moment estimates for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams, cfg: &ModelConfig) -> Self {
        AdamState {
            m: ModelParams::zeros(params.vocab_size(), cfg),
            v: ModelParams::zeros(params.vocab_size(), cfg),
            t: 0,
        }
    }
}

struct Hyper {
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
}

/// Bias-corrected Adam on one slice. `grad == None` means an all-zero
/// gradient (moments still decay and the parameter still moves).
#[inline]
fn kernel(theta: &mut [f64], grad: Option<&[f64]>, m: &mut [f64], v: &mut [f64], hp: &Hyper) {
    for k in 0..theta.len() {
        let g = grad.map_or(0.0, |g| g[k]);
        m[k] = hp.b1 * m[k] + (1.0 - hp.b1) * g;
        v[k] = hp.b2 * v[k] + (1.0 - hp.b2) * g * g;
        let m_hat = m[k] / hp.bc1;
        let v_hat = v[k] / hp.bc2;
        theta[k] -= hp.lr * m_hat / (v_hat.sqrt() + hp.eps);
    }
}

/// Single-slice update at step `t` (1-based) with explicit hyperparameters.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let hp = Hyper {
        lr,
        b1: beta1,
        b2: beta2,
        eps,
        bc1: 1.0 - beta1.powi(t as i32),
        bc2: 1.0 - beta2.powi(t as i32),
    };
    kernel(theta, Some(grad), m, v, &hp);
}

pub fn adam_update(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &ModelConfig,
) {
    state.t += 1;
    let t = state.t as i32;
    let hp = Hyper {
        lr: cfg.learning_rate,
        b1: cfg.adam_beta1,
        b2: cfg.adam_beta2,
        eps: cfg.adam_eps,
        bc1: 1.0 - cfg.adam_beta1.powi(t),
        bc2: 1.0 - cfg.adam_beta2.powi(t),
    };

    let cols = params.embed_dim();
    let [emb, rest @ ..] = params.blocks_mut();
    let [m_emb, m_rest @ ..] = state.m.blocks_mut();
    let [v_emb, v_rest @ ..] = state.v.blocks_mut();
    for (r, ((theta, m), v)) in emb
        .chunks_mut(cols)
        .zip(m_emb.chunks_mut(cols))
        .zip(v_emb.chunks_mut(cols))
        .enumerate()
    {
        kernel(theta, grads.embedding.get(&r).map(Vec::as_slice), m, v, &hp);
    }
    for (((theta, g), m), v) in rest
        .into_iter()
        .zip(grads.dense_blocks())
        .zip(m_rest)
        .zip(v_rest)
    {
        kernel(theta, Some(g), m, v, &hp);
    }
}
