use rayon::prelude::*;

use crate::corpus::{ClassLabel, EncodedExample};
use crate::error::{Error, Result};
use crate::eval::{confusion, weighted_f1};
use crate::numerics::Rng;

use super::{adam_update, backward, cross_entropy, forward, predict_indices, AdamState, ModelConfig, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_weighted_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev score.
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
    pub best_epoch: Option<usize>,
}

/// Inference over a batch; read-only, so it runs in parallel.
pub fn evaluate(
    params: &ModelParams,
    cfg: &ModelConfig,
    examples: &[EncodedExample],
) -> Result<Vec<ClassLabel>> {
    examples
        .par_iter()
        .map(|e| predict_indices(params, cfg, &e.indices).map(|(label, _)| label))
        .collect()
}

fn dev_score(params: &ModelParams, cfg: &ModelConfig, dev: &[EncodedExample]) -> Result<f64> {
    let pred = evaluate(params, cfg, dev)?;
    let gold: Vec<ClassLabel> = dev.iter().map(|e| e.label).collect();
    Ok(weighted_f1(&confusion(&gold, &pred)?).weighted_f1)
}

/// Per-example Adam training with a seeded shuffle each epoch. After every
/// epoch the dev set is scored; the best epoch's parameters are kept, and
/// training stops early after `cfg.patience` epochs without improvement.
/// An empty dev set falls back to scoring the training set.
pub fn train(
    params: ModelParams,
    cfg: &ModelConfig,
    train_set: &[EncodedExample],
    dev_set: &[EncodedExample],
    rng: &mut Rng,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("train"));
    }
    let dev = if dev_set.is_empty() { train_set } else { dev_set };

    let mut params = params;
    let mut state = AdamState::new(&params, cfg);
    let mut best = params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = None;
    let mut stale = 0;
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut total_loss = 0.0;
        for &i in &order {
            let ex = &train_set[i];
            let (probs, trace) = forward(&params, cfg, &ex.indices, Some(rng))?;
            total_loss += cross_entropy(&probs, ex.label);
            let mut grads = backward(&params, &trace, ex.label)?;
            if let Some(clip) = cfg.clip_norm {
                grads.clip_norm(clip);
            }
            adam_update(&mut params, &grads, &mut state, cfg);
        }
        if !params.is_finite() {
            return Err(Error::NonFinite("train"));
        }
        let f1 = dev_score(&params, cfg, dev)?;
        log.push(EpochLog {
            epoch,
            train_loss: total_loss / train_set.len() as f64,
            dev_weighted_f1: f1,
        });
        if f1 > best_f1 {
            best_f1 = f1;
            best = params.clone();
            best_epoch = Some(epoch);
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: if best_epoch.is_some() { best } else { params },
        log,
        best_epoch,
    })
}
