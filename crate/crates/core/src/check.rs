//! Independent numeric routes used by the randomized self-checks.

use nalgebra::DVector;

use crate::codec::Point;
use crate::deform::{AttentionSpec, FeatureMap, FeaturePyramid, Reference};

/// `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|)`, and 0 when both are zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn naive_bilinear(level: &FeatureMap, loc: Point) -> Vec<f64> {
    let (w, h) = (level.width() as i64, level.height() as i64);
    let px = loc.x * w as f64 - 0.5;
    let py = loc.y * h as f64 - 0.5;
    let (xf, yf) = (px.floor(), py.floor());
    let (dx, dy) = (px - xf, py - yf);
    let (x0, y0) = (xf as i64, yf as i64);
    let read = |c: usize, x: i64, y: i64| {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            level.get(c, y as usize, x as usize)
        }
    };
    (0..level.channels())
        .map(|c| {
            read(c, x0, y0) * (1.0 - dx) * (1.0 - dy)
                + read(c, x0 + 1, y0) * dx * (1.0 - dy)
                + read(c, x0, y0 + 1) * (1.0 - dx) * dy
                + read(c, x0 + 1, y0 + 1) * dx * dy
        })
        .collect()
}

/// Direct summation: every sample is projected by `W'` then `W` separately.
pub fn naive_ms_deform_attn(
    pyramid: &FeaturePyramid,
    reference: Reference,
    spec: &AttentionSpec,
) -> DVector<f64> {
    let c = pyramid.channels();
    let mut out = vec![0.0; c];
    for m in 0..spec.heads {
        let (wv, wo) = (&spec.value_proj[m], &spec.output_proj[m]);
        for (l, level) in pyramid.levels().iter().enumerate() {
            for s in 0..spec.points {
                let i = spec.index(m, l, s);
                let d = spec.offsets[i];
                let loc = match reference {
                    Reference::Point(p) => Point::new(p.x + d.x, p.y + d.y),
                    Reference::Box(b) => Point::new(b.x + d.x * b.w, b.y + d.y * b.h),
                };
                let x = naive_bilinear(level, loc);
                let mut v = vec![0.0; wv.nrows()];
                for (r, vr) in v.iter_mut().enumerate() {
                    for (k, xk) in x.iter().enumerate() {
                        *vr += wv[(r, k)] * xk;
                    }
                }
                for (r, o) in out.iter_mut().enumerate() {
                    for (k, vk) in v.iter().enumerate() {
                        *o += spec.weights[i] * wo[(r, k)] * vk;
                    }
                }
            }
        }
    }
    DVector::from_vec(out)
}
