use crate::error::{Error, Result};
use crate::numerics::{dot_slices, softmax_slice, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    /// Per-step scalar scores `e_t = h_t · w_a`.
    pub scores: Vector,
    /// Softmax of the scores over time.
    pub weights: Vector,
    /// Weighted sum of hidden states.
    pub context: Vector,
}

pub fn attention(hs: &[Vector], w_a: &Vector) -> Result<AttentionOutput> {
    if hs.is_empty() {
        return Err(Error::Empty("attention"));
    }
    let d = w_a.len();
    if let Some(bad) = hs.iter().find(|h| h.len() != d) {
        return Err(Error::Shape {
            op: "attention",
            left: (bad.len(), 1),
            right: (d, 1),
        });
    }
    let scores: Vec<f64> = hs
        .iter()
        .map(|h| dot_slices(h.as_slice(), w_a.as_slice()))
        .collect();
    let weights = softmax_slice(&scores)?;
    let mut context = Vector::zeros(d);
    for (h, &a) in hs.iter().zip(&weights) {
        for (v, &hk) in context.as_mut_slice().iter_mut().zip(h.iter()) {
            *v += a * hk;
        }
    }
    Ok(AttentionOutput {
        scores: scores.into(),
        weights: weights.into(),
        context,
    })
}
