use crate::corpus::{encode, ClassLabel, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{softmax_slice, Rng, Vector};

use super::{attention, lstm_step, AttentionOutput, Gradients, LstmState, ModelConfig, ModelParams, StepCache};

/// Intermediate values of one forward pass, aligned with the input sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub indices: Vec<usize>,
    /// Inverted-dropout masks applied to each embedded vector (train mode
    /// with a positive rate only).
    pub masks: Option<Vec<Vec<f64>>>,
    pub steps: Vec<StepCache>,
    pub attention: AttentionOutput,
    pub logits: Vector,
    pub probs: Vector,
}

/// Inverted-dropout mask: `1/(1-rate)` with probability `1-rate`, else 0.
pub fn dropout_mask(rng: &mut Rng, len: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    (0..len)
        .map(|_| if rng.bernoulli(keep) { scale } else { 0.0 })
        .collect()
}

/// Runs the network on one index sequence. Passing `train_rng` selects
/// train mode (dropout active); `None` is inference.
pub fn forward(
    params: &ModelParams,
    cfg: &ModelConfig,
    indices: &[usize],
    train_rng: Option<&mut Rng>,
) -> Result<(Vector, ForwardTrace)> {
    if indices.is_empty() {
        return Err(Error::Empty("forward"));
    }
    let vocab_size = params.vocab_size();
    if let Some(&bad) = indices.iter().find(|&&i| i >= vocab_size) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            size: vocab_size,
        });
    }
    let mut masks = match train_rng {
        Some(rng) if cfg.dropout_rate > 0.0 => Some(
            indices
                .iter()
                .map(|_| dropout_mask(rng, params.embed_dim(), cfg.dropout_rate))
                .collect::<Vec<_>>(),
        ),
        _ => None,
    };

    let mut state = LstmState::zeros(params.hidden_dim());
    let mut steps = Vec::with_capacity(indices.len());
    for (t, &idx) in indices.iter().enumerate() {
        let mut x: Vector = params.embedding.row(idx).to_vec().into();
        if let Some(m) = masks.as_mut() {
            for (v, &k) in x.as_mut_slice().iter_mut().zip(&m[t]) {
                *v *= k;
            }
        }
        let (next, cache) = lstm_step(&params.lstm, &x, &state)?;
        state = next;
        steps.push(cache);
    }

    let hs: Vec<Vector> = steps.iter().map(|s| s.h.clone()).collect();
    let att = attention(&hs, &params.attn.w_a)?;
    let logits = params.dense.w_d.matvec(att.context.as_slice())?;
    let logits: Vector = logits
        .iter()
        .zip(params.dense.b_d.iter())
        .map(|(z, b)| z + b)
        .collect::<Vec<_>>()
        .into();
    let probs: Vector = softmax_slice(logits.as_slice())?.into();
    let trace = ForwardTrace {
        indices: indices.to_vec(),
        masks,
        steps,
        attention: att,
        logits,
        probs: probs.clone(),
    };
    Ok((probs, trace))
}

pub const PROB_FLOOR: f64 = 1e-12;

pub fn cross_entropy(probs: &Vector, gold: ClassLabel) -> f64 {
    -probs[gold.code()].max(PROB_FLOOR).ln()
}

/// Exact gradient of `cross_entropy(forward(..))` for the pass recorded in
/// `trace`, backpropagated through the dense layer, attention and time.
pub fn backward(params: &ModelParams, trace: &ForwardTrace, gold: ClassLabel) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(params);
    let hd = params.hidden_dim();
    let t_len = trace.steps.len();

    // Softmax + cross-entropy.
    let mut dlogits = trace.probs.clone();
    dlogits[gold.code()] -= 1.0;

    let v = &trace.attention.context;
    grads.dense.w_d.add_outer(dlogits.as_slice(), v.as_slice())?;
    grads.dense.b_d = dlogits.clone();
    let mut dv = vec![0.0; hd];
    params
        .dense
        .w_d
        .matvec_transposed_acc(dlogits.as_slice(), &mut dv)?;

    // Attention: v = Σ a_t h_t, a = softmax(e), e_t = h_t · w_a.
    let weights = trace.attention.weights.as_slice();
    let da: Vec<f64> = trace
        .steps
        .iter()
        .map(|s| s.h.iter().zip(&dv).map(|(h, d)| h * d).sum())
        .collect();
    let mean_da: f64 = weights.iter().zip(&da).map(|(a, d)| a * d).sum();
    let mut dh_att: Vec<Vec<f64>> = Vec::with_capacity(t_len);
    for (t, step) in trace.steps.iter().enumerate() {
        let de = weights[t] * (da[t] - mean_da);
        let mut dh: Vec<f64> = dv.iter().map(|d| weights[t] * d).collect();
        for k in 0..hd {
            dh[k] += de * params.attn.w_a[k];
            grads.attn.w_a[k] += de * step.h[k];
        }
        dh_att.push(dh);
    }

    // Through time.
    let p = &params.lstm;
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let (mut dzf, mut dzi, mut dzo, mut dzg) =
        (vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]);
    for t in (0..t_len).rev() {
        let s = &trace.steps[t];
        for k in 0..hd {
            let dh = dh_att[t][k] + dh_next[k];
            let d_o = dh * s.tanh_c[k];
            let dc = dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
            let df = dc * s.c_prev[k];
            let di = dc * s.g[k];
            let dg = dc * s.i[k];
            dc_next[k] = dc * s.f[k];
            dzf[k] = df * s.f[k] * (1.0 - s.f[k]);
            dzi[k] = di * s.i[k] * (1.0 - s.i[k]);
            dzo[k] = d_o * s.o[k] * (1.0 - s.o[k]);
            dzg[k] = dg * (1.0 - s.g[k] * s.g[k]);
        }
        let g = &mut grads.lstm;
        let (x, h_prev) = (s.x.as_slice(), s.h_prev.as_slice());
        g.w_f.add_outer(&dzf, x)?;
        g.w_i.add_outer(&dzi, x)?;
        g.w_o.add_outer(&dzo, x)?;
        g.w_c.add_outer(&dzg, x)?;
        g.u_f.add_outer(&dzf, h_prev)?;
        g.u_i.add_outer(&dzi, h_prev)?;
        g.u_o.add_outer(&dzo, h_prev)?;
        g.u_c.add_outer(&dzg, h_prev)?;
        for k in 0..hd {
            g.b_f[k] += dzf[k];
            g.b_i[k] += dzi[k];
            g.b_o[k] += dzo[k];
            g.b_c[k] += dzg[k];
        }

        let mut dx = vec![0.0; params.embed_dim()];
        p.w_f.matvec_transposed_acc(&dzf, &mut dx)?;
        p.w_i.matvec_transposed_acc(&dzi, &mut dx)?;
        p.w_o.matvec_transposed_acc(&dzo, &mut dx)?;
        p.w_c.matvec_transposed_acc(&dzg, &mut dx)?;
        if let Some(masks) = &trace.masks {
            for (d, m) in dx.iter_mut().zip(&masks[t]) {
                *d *= m;
            }
        }
        let row = grads
            .embedding
            .entry(trace.indices[t])
            .or_insert_with(|| vec![0.0; params.embed_dim()]);
        for (r, d) in row.iter_mut().zip(&dx) {
            *r += d;
        }

        dh_next.iter_mut().for_each(|v| *v = 0.0);
        p.u_f.matvec_transposed_acc(&dzf, &mut dh_next)?;
        p.u_i.matvec_transposed_acc(&dzi, &mut dh_next)?;
        p.u_o.matvec_transposed_acc(&dzo, &mut dh_next)?;
        p.u_c.matvec_transposed_acc(&dzg, &mut dh_next)?;
    }
    Ok(grads)
}

pub fn predict_indices(
    params: &ModelParams,
    cfg: &ModelConfig,
    indices: &[usize],
) -> Result<(ClassLabel, Vector)> {
    let (probs, _) = forward(params, cfg, indices, None)?;
    Ok((ClassLabel::argmax(probs.as_slice()), probs))
}

/// Inference on preprocessed tokens; ties go to the lower class code.
pub fn predict(
    params: &ModelParams,
    cfg: &ModelConfig,
    tokens: &[String],
    vocab: &Vocabulary,
) -> Result<(ClassLabel, Vector)> {
    predict_indices(params, cfg, &encode(tokens, vocab, cfg.max_len))
}
