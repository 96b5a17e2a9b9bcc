use std::path::Path;

use fourier_contour::activation::{refine, refine_gradient, OffsetVector};
use fourier_contour::check::{central_difference, naive_ms_deform_attn, relative_error};
use fourier_contour::codec::{decode_descriptor, encode_polygon, FourierDescriptor, Point};
use fourier_contour::deform::{
    ms_deform_attn, AttentionSpec, FeatureMap, FeaturePyramid, Reference,
};
use fourier_contour::eval::{aggregate, match_detections};
use fourier_contour::geometry::{nms, NormalizedBox};
use fourier_contour::matching::{
    build_cost_matrix, dense_match_rounds, pair_cost_breakdown, select_top_proposals, Proposal,
};
use fourier_contour::records::{
    points_to_xy, AnnotatedPolygon, ContourRecord, DescriptorRecord, ImageRecord, PolygonEntry,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Config;
use crate::jsonl::{read_records, Output};
use crate::CliError;

const GRAD_TOLERANCE: f64 = 1e-5;
const GRAD_ZERO_TOLERANCE: f64 = 1e-10;
const ATTN_TOLERANCE: f64 = 1e-10;
const FD_STEP: f64 = 1e-6;

pub fn encode(input: &Path, output: Option<&Path>, config: &Config) -> Result<(), CliError> {
    let mut out = Vec::new();
    for (line, record) in read_records::<ContourRecord>(input)? {
        let size = record
            .image
            .size()
            .map_err(|e| CliError::at(input, line, e))?;
        for (j, entry) in record.polygons.iter().enumerate() {
            let fd = entry
                .polygon()
                .and_then(|p| encode_polygon(&p, size, config.n_samples, config.k_max))
                .map_err(|e| CliError::at(input, line, format!("polygon {j}: {e}")))?;
            out.push(DescriptorRecord {
                image: Some(record.image),
                score: entry.score(),
                ..DescriptorRecord::from_descriptor(&fd)
            });
        }
    }
    write_all(output, &out)
}

pub fn decode(
    input: &Path,
    output: Option<&Path>,
    config: &Config,
    width: Option<f64>,
    height: Option<f64>,
) -> Result<(), CliError> {
    let mut out = Vec::new();
    for (line, record) in read_records::<DescriptorRecord>(input)? {
        let fd = record
            .descriptor()
            .map_err(|e| CliError::at(input, line, e))?;
        let image = record.image.unwrap_or(ImageRecord { w: 1.0, h: 1.0 });
        let image = ImageRecord {
            w: width.unwrap_or(image.w),
            h: height.unwrap_or(image.h),
        };
        let size = image.size().map_err(|e| CliError::at(input, line, e))?;
        let points = points_to_xy(decode_descriptor(&fd, size, config.n_samples).points());
        let polygon = match record.score {
            Some(score) => PolygonEntry::Annotated(AnnotatedPolygon {
                points,
                score: Some(score),
                ignore: false,
            }),
            None => PolygonEntry::Plain(points),
        };
        out.push(ContourRecord {
            image,
            polygons: vec![polygon],
        });
    }
    write_all(output, &out)
}

#[derive(Serialize)]
struct MatchLine {
    pred: usize,
    gt: usize,
    round: usize,
    cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_fd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_bbox: Option<f64>,
}

#[derive(Serialize)]
struct Negatives {
    negatives: Vec<usize>,
}

pub fn match_sets(
    pred_path: &Path,
    gt_path: &Path,
    output: Option<&Path>,
    config: &Config,
    explain: bool,
) -> Result<(), CliError> {
    let mut scores = Vec::new();
    let mut fds = Vec::new();
    for (line, record) in read_records::<DescriptorRecord>(pred_path)? {
        let fd = record
            .descriptor()
            .map_err(|e| CliError::at(pred_path, line, e))?;
        let score = record
            .score
            .ok_or_else(|| CliError::at(pred_path, line, "prediction has no score"))?;
        Proposal::new(fd.clone(), score).map_err(|e| CliError::at(pred_path, line, e))?;
        scores.push(score);
        fds.push(fd);
    }
    let gts = read_records::<DescriptorRecord>(gt_path)?
        .into_iter()
        .map(|(line, r)| r.descriptor().map_err(|e| CliError::at(gt_path, line, e)))
        .collect::<Result<Vec<FourierDescriptor>, _>>()?;

    let ranked = select_top_proposals(&scores, &fds, config.n_q.min(scores.len()))
        .map_err(CliError::input)?;
    let proposals: Vec<Proposal> = ranked.iter().map(|r| r.proposal.clone()).collect();
    let n = config.n_samples;
    let cost = build_cost_matrix(&proposals, &gts, &config.weights, n).map_err(CliError::input)?;
    let rounds = dense_match_rounds(&cost, config.n_m).map_err(CliError::input)?;

    let mut lines = Vec::new();
    let mut matched = vec![false; scores.len()];
    for (round, assignment) in rounds.iter().enumerate() {
        let mut pairs: Vec<(usize, usize)> = assignment
            .pairs
            .iter()
            .map(|&(r, g)| (ranked[r].index, g))
            .collect();
        pairs.sort_unstable();
        for (pred, gt) in pairs {
            matched[pred] = true;
            let proposal =
                Proposal::new(fds[pred].clone(), scores[pred]).map_err(CliError::input)?;
            let b = pair_cost_breakdown(&proposal, &gts[gt], &config.weights, n)
                .map_err(CliError::input)?;
            let extra = |v: f64| explain.then_some(v);
            lines.push(MatchLine {
                pred,
                gt,
                round,
                cost: b.total,
                classification: extra(b.classification),
                l_sd: extra(b.terms.spatial),
                l_fd: extra(b.terms.fourier),
                l_bbox: extra(b.terms.bbox),
            });
        }
    }
    let mut out = Output::open(output)?;
    for line in &lines {
        out.record(line)?;
    }
    out.record(&Negatives {
        negatives: (0..scores.len()).filter(|&i| !matched[i]).collect(),
    })?;
    out.finish()
}

pub fn suppress(input: &Path, output: Option<&Path>, config: &Config) -> Result<(), CliError> {
    let mut out = Vec::new();
    for (line, record) in read_records::<ContourRecord>(input)? {
        let mut contours = Vec::new();
        let mut scores = Vec::new();
        for (j, entry) in record.polygons.iter().enumerate() {
            let score = entry
                .score()
                .ok_or_else(|| CliError::at(input, line, format!("polygon {j} has no score")))?;
            let contour = entry
                .contour()
                .map_err(|e| CliError::at(input, line, format!("polygon {j}: {e}")))?;
            contours.push(contour);
            scores.push(score);
        }
        let kept = nms(&contours, &scores, config.iou).map_err(|e| CliError::at(input, line, e))?;
        out.push(ContourRecord {
            image: record.image,
            polygons: kept
                .into_iter()
                .map(|i| record.polygons[i].clone())
                .collect(),
        });
    }
    write_all(output, &out)
}

pub fn evaluate(
    gt_path: &Path,
    pred_path: &Path,
    output: Option<&Path>,
    config: &Config,
) -> Result<(), CliError> {
    let gts = read_records::<ContourRecord>(gt_path)?;
    let preds = read_records::<ContourRecord>(pred_path)?;
    if gts.len() != preds.len() {
        return Err(CliError::input(format!(
            "{} ground-truth records but {} prediction records",
            gts.len(),
            preds.len()
        )));
    }
    let mut per_image = Vec::new();
    for ((gt_line, gt), (pred_line, pred)) in gts.iter().zip(&preds) {
        let mut targets = Vec::new();
        let mut ignore = Vec::new();
        for (j, entry) in gt.polygons.iter().enumerate() {
            let c = entry
                .contour()
                .map_err(|e| CliError::at(gt_path, *gt_line, format!("polygon {j}: {e}")))?;
            if entry.ignore() {
                ignore.push(c);
            } else {
                targets.push(c);
            }
        }
        let detections = pred
            .polygons
            .iter()
            .enumerate()
            .map(|(j, entry)| {
                entry
                    .contour()
                    .map(|c| (c, entry.score().unwrap_or(1.0)))
                    .map_err(|e| CliError::at(pred_path, *pred_line, format!("polygon {j}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        per_image.push(match_detections(&detections, &targets, config.iou, &ignore));
    }
    write_all(output, &[aggregate(&per_image)])
}

#[derive(Serialize)]
struct GradReport {
    trials: usize,
    max_rel_err: f64,
    max_rel_err_at_zero: f64,
    pass: bool,
}

/// Refinement gradients against central differences of `refine`, and at zero
/// offset against the closed forms written in terms of the current value.
pub fn grad_check(trials: usize, output: Option<&Path>, config: &Config) -> Result<(), CliError> {
    let (k, delta) = (config.k_max, config.delta);
    let len = 4 * k + 2;
    let is_dc = |i: usize| i == 2 * k || i == 2 * k + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut worst, mut worst_zero) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let prev = FourierDescriptor::new(
            k,
            (0..len)
                .map(|i| {
                    if is_dc(i) {
                        rng.gen_range(0.025..0.975)
                    } else {
                        rng.gen_range(-0.95..0.95) / delta
                    }
                })
                .collect(),
        )
        .map_err(CliError::input)?;
        let offset: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let o = OffsetVector::new(k, offset.clone()).map_err(CliError::input)?;
        let grad = refine_gradient(&prev, &o, delta).map_err(CliError::input)?;
        for i in 0..len {
            let component = |x: f64| {
                let mut shifted = offset.clone();
                shifted[i] = x;
                let o = OffsetVector::new(k, shifted).expect("finite offset");
                refine(&prev, &o, delta)
                    .expect("valid refinement")
                    .as_slice()[i]
            };
            let numeric = central_difference(component, offset[i], FD_STEP);
            worst = worst.max(relative_error(grad[i], numeric));
        }
        let at_zero =
            refine_gradient(&prev, &OffsetVector::zeros(k), delta).map_err(CliError::input)?;
        for (i, &c) in prev.as_slice().iter().enumerate() {
            let expected = if is_dc(i) {
                c * (1.0 - c)
            } else {
                let t = c * delta;
                (1.0 - t * t) / delta * t.atanh()
            };
            worst_zero = worst_zero.max(relative_error(at_zero[i], expected));
        }
    }
    let pass = worst < GRAD_TOLERANCE && worst_zero < GRAD_ZERO_TOLERANCE;
    write_all(
        output,
        &[GradReport {
            trials,
            max_rel_err: worst,
            max_rel_err_at_zero: worst_zero,
            pass,
        }],
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "gradient check failed: max relative error {worst:e}, at zero offset {worst_zero:e}"
        )))
    }
}

#[derive(Serialize)]
struct AttnReport {
    trials: usize,
    max_abs_err: f64,
    identity_exact: bool,
    pass: bool,
}

/// Random small attention instance: 4 channels, 2 levels, 2 heads, 2 points.
pub fn random_attention(rng: &mut impl Rng) -> (FeaturePyramid, AttentionSpec, Reference) {
    let (channels, inner, levels, heads, points) = (4, 3, 2, 2, 2);
    let levels_data = (0..levels)
        .map(|l| {
            let (h, w) = (8 >> l, 10 >> l);
            let data = (0..channels * h * w)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            FeatureMap::new(channels, h, w, data).expect("consistent shape")
        })
        .collect();
    let pyramid = FeaturePyramid::new(levels_data).expect("non-empty pyramid");
    let count = heads * levels * points;
    let offsets = (0..count)
        .map(|_| Point::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)))
        .collect();
    let mut weights: Vec<f64> = (0..count).map(|_| rng.gen_range(0.01..1.0)).collect();
    for head in weights.chunks_mut(levels * points) {
        let sum: f64 = head.iter().sum();
        head.iter_mut().for_each(|w| *w /= sum);
    }
    let mut matrix = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
    let value_proj = (0..heads).map(|_| matrix(inner, channels)).collect();
    let output_proj = (0..heads).map(|_| matrix(channels, inner)).collect();
    let spec = AttentionSpec {
        heads,
        levels,
        points,
        offsets,
        weights,
        value_proj,
        output_proj,
    };
    let reference = if rng.gen_bool(0.5) {
        Reference::Point(Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
    } else {
        Reference::Box(NormalizedBox::new(
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..0.5),
            rng.gen_range(0.0..0.5),
        ))
    };
    (pyramid, spec, reference)
}

/// Single head and point, zero offset, unit weight, identity projections,
/// reference on a pixel centre: the output must be that pixel's feature.
pub fn identity_reproduces_pixel(rng: &mut impl Rng) -> bool {
    let (c, h, w) = (3, 8, 4);
    let data = (0..c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let level = FeatureMap::new(c, h, w, data).expect("consistent shape");
    let (px, py) = (rng.gen_range(0..w), rng.gen_range(0..h));
    let reference = Point::new((px as f64 + 0.5) / w as f64, (py as f64 + 0.5) / h as f64);
    let pyramid = FeaturePyramid::new(vec![level.clone()]).expect("non-empty pyramid");
    let spec = AttentionSpec::identity(c, 1, 1, vec![Point::new(0.0, 0.0)], vec![1.0]);
    ms_deform_attn(&pyramid, Reference::Point(reference), &spec)
        .map(|out| out == level.pixel(px, py))
        .unwrap_or(false)
}

pub fn attn_check(trials: usize, output: Option<&Path>, config: &Config) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (pyramid, spec, reference) = random_attention(&mut rng);
        let fast = ms_deform_attn(&pyramid, reference, &spec).map_err(CliError::input)?;
        let naive = naive_ms_deform_attn(&pyramid, reference, &spec);
        worst = worst.max((fast - naive).amax());
    }
    let identity_exact = (0..trials.max(1)).all(|_| identity_reproduces_pixel(&mut rng));
    let pass = worst < ATTN_TOLERANCE && identity_exact;
    write_all(
        output,
        &[AttnReport {
            trials,
            max_abs_err: worst,
            identity_exact,
            pass,
        }],
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "attention check failed: max abs error {worst:e}, identity exact {identity_exact}"
        )))
    }
}

fn write_all<T: Serialize>(output: Option<&Path>, records: &[T]) -> Result<(), CliError> {
    let mut out = Output::open(output)?;
    for r in records {
        out.record(r)?;
    }
    out.finish()
}
