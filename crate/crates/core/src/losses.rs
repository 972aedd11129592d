//! Tracking losses: binary cross-entropy classification terms, L1 box
//! regression, their weighted total and the occlusion-supervised variant.
//!
//! Every loss has a matching `*_grad` giving the derivative with respect to the
//! predictions, so the suite can drive gradient descent directly.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Lower/upper clamp applied to probabilities before taking logarithms.
pub const PROB_EPS: f64 = 1e-7;

pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// d clamp(p) / dp: one inside the clamp band, zero where it saturates.
fn clamp_slope(p: f64) -> f64 {
    if (PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
        1.0
    } else {
        0.0
    }
}

/// Predicted foreground probabilities with their 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClsBatch {
    pub predictions: Vec<f64>,
    pub labels: Vec<u8>,
}

impl ClsBatch {
    pub fn new(predictions: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(invalid("predictions and labels differ in length"));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(invalid("labels must be 0 or 1"));
        }
        if predictions.iter().any(|p| !p.is_finite()) {
            return Err(invalid("predictions must be finite"));
        }
        Ok(Self {
            predictions,
            labels,
        })
    }

    /// A batch where every entry is a positive sample.
    pub fn positives(predictions: Vec<f64>) -> Result<Self> {
        let n = predictions.len();
        Self::new(predictions, vec![1; n])
    }

    pub fn negatives(predictions: Vec<f64>) -> Result<Self> {
        let n = predictions.len();
        Self::new(predictions, vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

/// Axis-aligned box as (cx, cy, w, h) in pixels.
pub type BoxCoords = [f64; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct BoxBatch {
    pub predicted: Vec<BoxCoords>,
    pub labels: Vec<BoxCoords>,
}

impl BoxBatch {
    pub fn new(predicted: Vec<BoxCoords>, labels: Vec<BoxCoords>) -> Result<Self> {
        if predicted.len() != labels.len() {
            return Err(invalid("predicted and label boxes differ in length"));
        }
        if labels.iter().any(|b| b[2] <= 0.0 || b[3] <= 0.0) {
            return Err(invalid("label boxes need positive width and height"));
        }
        Ok(Self { predicted, labels })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_pos: f64,
    pub lambda_neg: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_pos: 1.0,
            lambda_neg: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_pos, self.lambda_neg, self.alpha, self.beta];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("loss weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Σ −ln p over the positive-labeled entries.
pub fn cls_loss_pos(batch: &ClsBatch) -> f64 {
    batch
        .predictions
        .iter()
        .zip(&batch.labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&p, _)| -clamp_prob(p).ln())
        .sum()
}

pub fn cls_loss_pos_grad(batch: &ClsBatch) -> Vec<f64> {
    batch
        .predictions
        .iter()
        .zip(&batch.labels)
        .map(|(&p, &l)| {
            if l == 1 {
                -clamp_slope(p) / clamp_prob(p)
            } else {
                0.0
            }
        })
        .collect()
}

/// Σ −ln(1 − p) over the negative-labeled entries.
pub fn cls_loss_neg(batch: &ClsBatch) -> f64 {
    batch
        .predictions
        .iter()
        .zip(&batch.labels)
        .filter(|(_, &l)| l == 0)
        .map(|(&p, _)| -(1.0 - clamp_prob(p)).ln())
        .sum()
}

pub fn cls_loss_neg_grad(batch: &ClsBatch) -> Vec<f64> {
    batch
        .predictions
        .iter()
        .zip(&batch.labels)
        .map(|(&p, &l)| {
            if l == 0 {
                clamp_slope(p) / (1.0 - clamp_prob(p))
            } else {
                0.0
            }
        })
        .collect()
}

pub fn cls_loss(batch: &ClsBatch, w: &LossWeights) -> f64 {
    w.lambda_neg * cls_loss_neg(batch) + w.lambda_pos * cls_loss_pos(batch)
}

pub fn cls_loss_grad(batch: &ClsBatch, w: &LossWeights) -> Vec<f64> {
    let gp = cls_loss_pos_grad(batch);
    let gn = cls_loss_neg_grad(batch);
    gp.iter()
        .zip(&gn)
        .map(|(p, n)| w.lambda_pos * p + w.lambda_neg * n)
        .collect()
}

/// Σ over boxes of the L1 distance across (cx, cy, w, h).
pub fn reg_loss(batch: &BoxBatch) -> f64 {
    batch
        .predicted
        .iter()
        .zip(&batch.labels)
        .map(|(p, l)| p.iter().zip(l).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum()
}

/// Subgradient w.r.t. the predicted boxes (zero where a coordinate matches exactly).
pub fn reg_loss_grad(batch: &BoxBatch) -> Vec<BoxCoords> {
    batch
        .predicted
        .iter()
        .zip(&batch.labels)
        .map(|(p, l)| {
            let mut g = [0.0; 4];
            for k in 0..4 {
                let d = p[k] - l[k];
                g[k] = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
            }
            g
        })
        .collect()
}

pub fn total_loss(cls: f64, reg: f64, w: &LossWeights) -> f64 {
    w.alpha * cls + w.beta * reg
}

fn check_gamma(gamma: u8) -> Result<f64> {
    match gamma {
        0 => Ok(0.0),
        1 => Ok(1.0),
        g => Err(invalid(format!(
            "occlusion indicator must be 0 or 1, got {g}"
        ))),
    }
}

/// γ·λneg·Lneg + (1−γ)·λpos·Lpos. Callers relabel the occluded target sample as
/// negative before passing the batch in.
pub fn occlusion_supervised_cls_loss(batch: &ClsBatch, w: &LossWeights, gamma: u8) -> Result<f64> {
    let g = check_gamma(gamma)?;
    Ok(g * w.lambda_neg * cls_loss_neg(batch) + (1.0 - g) * w.lambda_pos * cls_loss_pos(batch))
}

pub fn occlusion_supervised_cls_loss_grad(
    batch: &ClsBatch,
    w: &LossWeights,
    gamma: u8,
) -> Result<Vec<f64>> {
    let g = check_gamma(gamma)?;
    let gp = cls_loss_pos_grad(batch);
    let gn = cls_loss_neg_grad(batch);
    Ok(gp
        .iter()
        .zip(&gn)
        .map(|(p, n)| g * w.lambda_neg * n + (1.0 - g) * w.lambda_pos * p)
        .collect())
}
