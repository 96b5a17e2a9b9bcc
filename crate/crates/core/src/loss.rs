//! Regression losses between descriptors, focal classification loss and the
//! layer-weighted training objective.
//!
//! Every L1 term is reduced with the mean over its components, so the balance
//! weights keep the same meaning for any `K` and sampling count.

use crate::codec::{idft_decode, FourierDescriptor};
use crate::error::{Error, Result};
use crate::geometry::{fd_to_bbox, giou_loss};
use crate::matching::{MatchResult, Proposal};

/// `lambda` scales regression against classification; `alpha1` and `alpha2`
/// weight the Fourier-domain and box terms against the spatial term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionWeights {
    pub lambda: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for RegressionWeights {
    fn default() -> Self {
        Self {
            lambda: 0.25,
            alpha1: 5.0,
            alpha2: 0.4,
        }
    }
}

/// The three regression terms for one (prediction, ground truth) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionTerms {
    pub spatial: f64,
    pub fourier: f64,
    pub bbox: f64,
}

impl RegressionTerms {
    /// `spatial + alpha1 * fourier + alpha2 * bbox`.
    pub fn combine(&self, weights: &RegressionWeights) -> f64 {
        self.spatial + weights.alpha1 * self.fourier + weights.alpha2 * self.bbox
    }
}

fn check_samples(pred: &FourierDescriptor, gt: &FourierDescriptor, n: usize) -> Result<()> {
    let k_max = pred.k_max().max(gt.k_max());
    if n < 2 * k_max + 1 {
        return Err(Error::InsufficientSamples { samples: n, k_max });
    }
    Ok(())
}

/// Mean absolute difference over all `2n` coordinates of the two decoded
/// contours, compared at identical sampling phase.
pub fn l_sd(pred: &FourierDescriptor, gt: &FourierDescriptor, n: usize) -> Result<f64> {
    check_samples(pred, gt, n)?;
    let a = idft_decode(pred, n);
    let b = idft_decode(gt, n);
    let sum: f64 = a
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (p.x - q.x).abs() + (p.y - q.y).abs())
        .sum();
    Ok(sum / (2 * n) as f64)
}

/// Mean absolute difference over the `4K+2` coefficients.
pub fn l_fd(pred: &FourierDescriptor, gt: &FourierDescriptor) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            expected: gt.len(),
            actual: pred.len(),
        });
    }
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// `1 - GIoU` of the two descriptor boxes.
pub fn l_bbox(pred: &FourierDescriptor, gt: &FourierDescriptor, n: usize) -> Result<f64> {
    giou_loss(&fd_to_bbox(pred, n)?, &fd_to_bbox(gt, n)?)
}

pub fn regression_terms(
    pred: &FourierDescriptor,
    gt: &FourierDescriptor,
    n: usize,
) -> Result<RegressionTerms> {
    Ok(RegressionTerms {
        spatial: l_sd(pred, gt, n)?,
        fourier: l_fd(pred, gt)?,
        bbox: l_bbox(pred, gt, n)?,
    })
}

pub const DEFAULT_FOCAL_ALPHA: f64 = 0.25;
pub const DEFAULT_FOCAL_GAMMA: f64 = 2.0;

/// Mean of `-alpha * (1 - p_t)^gamma * ln(p_t)` with `p_t = s` for positives and
/// `1 - s` for negatives. An empty batch has zero loss.
pub fn focal_loss(scores: &[f64], positive: &[bool], alpha: f64, gamma: f64) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: positive.len(),
        });
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (index, (&s, &pos)) in scores.iter().zip(positive).enumerate() {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::ScoreOutOfRange { index, score: s });
        }
        let p_t = if pos { s } else { 1.0 - s };
        total += -alpha * (1.0 - p_t).powf(gamma) * p_t.ln();
    }
    Ok(total / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub regression: RegressionWeights,
    /// Weights `w_1..w_D` of the decoder layers. The proposal layer always has
    /// weight 1.
    pub layer_weights: Vec<f64>,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
}

impl LossWeights {
    /// Unit layer weights for `decoder_layers` layers and default balance terms.
    pub fn uniform(decoder_layers: usize) -> Self {
        Self {
            regression: RegressionWeights::default(),
            layer_weights: vec![1.0; decoder_layers],
            focal_alpha: DEFAULT_FOCAL_ALPHA,
            focal_gamma: DEFAULT_FOCAL_GAMMA,
        }
    }

    fn validate(&self) -> Result<()> {
        let r = &self.regression;
        let scalars = [
            r.lambda,
            r.alpha1,
            r.alpha2,
            self.focal_alpha,
            self.focal_gamma,
        ];
        if scalars
            .iter()
            .chain(&self.layer_weights)
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::InvalidParameter(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Predictions of one layer together with their dense-matching result.
/// Layer 0 is the proposal network; layers `1..=D` are decoder layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPredictions {
    pub proposals: Vec<Proposal>,
    pub matches: MatchResult,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerLoss {
    pub weight: f64,
    pub classification: f64,
    pub regression: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub layers: Vec<LayerLoss>,
}

fn layer_loss(
    layer_index: usize,
    layer: &LayerPredictions,
    gts: &[FourierDescriptor],
    weights: &LossWeights,
    n: usize,
) -> Result<(f64, f64)> {
    let count = layer.proposals.len();
    let matches = &layer.matches;
    let mut positive = vec![false; count];
    for &(p, g) in &matches.positives {
        if p >= count || g >= gts.len() {
            return Err(Error::InvalidMatch(format!(
                "pair ({p}, {g}) out of range in layer {layer_index}"
            )));
        }
        if positive[p] {
            return Err(Error::InvalidMatch(format!(
                "prediction {p} matched twice in layer {layer_index}"
            )));
        }
        positive[p] = true;
    }
    if matches.positives.is_empty() {
        return Err(Error::EmptyMatchSet { layer: layer_index });
    }
    let scores: Vec<f64> = layer.proposals.iter().map(|p| p.score()).collect();
    let cls = focal_loss(&scores, &positive, weights.focal_alpha, weights.focal_gamma)?;

    let mut reg = 0.0;
    for &(p, g) in &matches.positives {
        reg += regression_terms(layer.proposals[p].fd(), &gts[g], n)?.combine(&weights.regression);
    }
    reg /= matches.positives.len() as f64;
    Ok((cls, reg))
}

/// `(cls_0 + lambda * reg_0) + sum_i w_i (cls_i + lambda * reg_i)`, where each
/// `reg_i` averages the combined regression terms over the matched pairs of
/// layer `i` and `cls_i` is the focal loss with matched predictions positive.
pub fn total_loss(
    layers: &[LayerPredictions],
    gts: &[FourierDescriptor],
    weights: &LossWeights,
    n: usize,
) -> Result<LossBreakdown> {
    weights.validate()?;
    if layers.len() != weights.layer_weights.len() + 1 {
        return Err(Error::LengthMismatch {
            left: layers.len(),
            right: weights.layer_weights.len() + 1,
        });
    }
    let lambda = weights.regression.lambda;
    let mut breakdown = LossBreakdown {
        total: 0.0,
        layers: Vec::with_capacity(layers.len()),
    };
    for (i, layer) in layers.iter().enumerate() {
        let weight = if i == 0 {
            1.0
        } else {
            weights.layer_weights[i - 1]
        };
        let (classification, regression) = layer_loss(i, layer, gts, weights, n)?;
        breakdown.total += weight * (classification + lambda * regression);
        breakdown.layers.push(LayerLoss {
            weight,
            classification,
            regression,
        });
    }
    Ok(breakdown)
}
