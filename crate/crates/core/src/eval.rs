//! Contour-level detection evaluation at an IoU threshold.

use serde::Serialize;

use crate::codec::ContourPoints;
use crate::geometry::{polygon_iou, score_order};

pub const DEFAULT_EVAL_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ImageCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub per_image: Vec<ImageCounts>,
}

fn iou_or_zero(a: &ContourPoints, b: &ContourPoints) -> f64 {
    polygon_iou(a, b).unwrap_or(0.0)
}

/// Greedy one-to-one matching in descending score order.
///
/// A prediction is a true positive when its best-IoU unmatched ground truth
/// exceeds `iou_threshold`. Otherwise it is a false positive unless it
/// overlaps an ignore region by more than the threshold, in which case it is
/// not counted at all. Ground truths left unmatched are false negatives.
pub fn match_detections(
    preds: &[(ContourPoints, f64)],
    gts: &[ContourPoints],
    iou_threshold: f64,
    ignore: &[ContourPoints],
) -> ImageCounts {
    let scores: Vec<f64> = preds.iter().map(|(_, s)| *s).collect();
    let mut matched = vec![false; gts.len()];
    let mut counts = ImageCounts::default();
    for i in score_order(&scores) {
        let pred = &preds[i].0;
        let best = gts
            .iter()
            .enumerate()
            .filter(|(g, _)| !matched[*g])
            .map(|(g, gt)| (g, iou_or_zero(pred, gt)))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        match best {
            Some((g, iou)) if iou > iou_threshold => {
                matched[g] = true;
                counts.tp += 1;
            }
            _ => {
                if !ignore.iter().any(|r| iou_or_zero(pred, r) > iou_threshold) {
                    counts.fp += 1;
                }
            }
        }
    }
    counts.fn_ = gts.len() - counts.tp;
    counts
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sums counts over images and derives precision, recall and F-measure. Every
/// ratio with a zero denominator is 0.
pub fn aggregate(per_image: &[ImageCounts]) -> EvalReport {
    let (tp, fp, fn_) = per_image.iter().fold((0, 0, 0), |(tp, fp, fn_), c| {
        (tp + c.tp, fp + c.fp, fn_ + c.fn_)
    });
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    // harmonic mean of precision and recall, from the counts in one division
    let f_measure = ratio(2 * tp, 2 * tp + fp + fn_);
    EvalReport {
        tp,
        fp,
        fn_,
        precision,
        recall,
        f_measure,
        per_image: per_image.to_vec(),
    }
}
