use crate::error::{Error, Result};
use crate::numerics::{sigmoid_scalar, Vector};

use super::LstmParams;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vector,
    pub c: Vector,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState {
            h: Vector::zeros(hidden_dim),
            c: Vector::zeros(hidden_dim),
        }
    }
}

/// Everything backprop needs from one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub x: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    /// Forget gate.
    pub f: Vector,
    /// Input gate.
    pub i: Vector,
    /// Output gate.
    pub o: Vector,
    /// Candidate cell value, `tanh(W_c x + U_c h + b_c)`.
    pub g: Vector,
    pub c: Vector,
    pub tanh_c: Vector,
    pub h: Vector,
}

fn preactivation(
    w: &crate::numerics::Matrix,
    u: &crate::numerics::Matrix,
    b: &Vector,
    x: &[f64],
    h: &[f64],
) -> Result<Vector> {
    let mut z = b.clone();
    w.matvec_acc(x, z.as_mut_slice())?;
    u.matvec_acc(h, z.as_mut_slice())?;
    Ok(z)
}

/// One memory-block update:
///
/// ```text
/// f = σ(W_f x + U_f h' + b_f)      i = σ(W_i x + U_i h' + b_i)
/// o = σ(W_o x + U_o h' + b_o)      g = tanh(W_c x + U_c h' + b_c)
/// c = f ∘ c' + i ∘ g               h = o ∘ tanh(c)
/// ```
pub fn lstm_step(p: &LstmParams, x: &Vector, prev: &LstmState) -> Result<(LstmState, StepCache)> {
    let (e, hd) = (p.embed_dim(), p.hidden_dim());
    if x.len() != e {
        return Err(Error::Shape {
            op: "lstm_step input",
            left: (hd, e),
            right: (x.len(), 1),
        });
    }
    if prev.h.len() != hd || prev.c.len() != hd {
        return Err(Error::Shape {
            op: "lstm_step state",
            left: (hd, hd),
            right: (prev.h.len(), prev.c.len()),
        });
    }
    let (xs, hs) = (x.as_slice(), prev.h.as_slice());
    let mut f = preactivation(&p.w_f, &p.u_f, &p.b_f, xs, hs)?;
    let mut i = preactivation(&p.w_i, &p.u_i, &p.b_i, xs, hs)?;
    let mut o = preactivation(&p.w_o, &p.u_o, &p.b_o, xs, hs)?;
    let mut g = preactivation(&p.w_c, &p.u_c, &p.b_c, xs, hs)?;
    for k in 0..hd {
        f[k] = sigmoid_scalar(f[k]);
        i[k] = sigmoid_scalar(i[k]);
        o[k] = sigmoid_scalar(o[k]);
        g[k] = g[k].tanh();
    }
    let mut c = Vector::zeros(hd);
    let mut tanh_c = Vector::zeros(hd);
    let mut h = Vector::zeros(hd);
    for k in 0..hd {
        c[k] = f[k] * prev.c[k] + i[k] * g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k];
    }
    let state = LstmState {
        h: h.clone(),
        c: c.clone(),
    };
    let cache = StepCache {
        x: x.clone(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        f,
        i,
        o,
        g,
        c,
        tanh_c,
        h,
    };
    Ok((state, cache))
}
