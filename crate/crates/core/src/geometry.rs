//! Boxes derived from descriptors, GIoU, polygon IoU and contour NMS.

use crate::codec::{idft_decode, ContourPoints, FourierDescriptor, Point};
use crate::error::{Error, Result};

/// Default sampling count used to turn a descriptor into a box.
pub const DEFAULT_BOX_SAMPLES: usize = 400;

/// `(x, y)` is the mean of the decoded contour points, which is not in general
/// the geometric centre of the `w x h` extent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormalizedBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl NormalizedBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// `(x0, y0, x1, y1)` treating `(x, y)` as the centre.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        let (hw, hh) = (0.5 * self.w, 0.5 * self.h);
        (self.x - hw, self.y - hh, self.x + hw, self.y + hh)
    }
}

/// Decodes `n` points and summarizes them as mean position plus extent.
pub fn fd_to_bbox(fd: &FourierDescriptor, n: usize) -> Result<NormalizedBox> {
    if n < 2 * fd.k_max() + 1 {
        return Err(Error::InsufficientSamples {
            samples: n,
            k_max: fd.k_max(),
        });
    }
    Ok(points_to_bbox(idft_decode(fd, n).points()))
}

pub(crate) fn points_to_bbox(points: &[Point]) -> NormalizedBox {
    let inv = 1.0 / points.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        sx += p.x;
        sy += p.y;
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    NormalizedBox::new(sx * inv, sy * inv, x1 - x0, y1 - y0)
}

/// Generalized IoU in `(-1, 1]`.
pub fn giou(a: &NormalizedBox, b: &NormalizedBox) -> Result<f64> {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let (area_a, area_b) = (a.area(), b.area());
    if area_a <= 0.0 && area_b <= 0.0 {
        return Err(Error::BothDegenerate);
    }
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    let union = area_a + area_b - inter;
    let enclosing = (ax1.max(bx1) - ax0.min(bx0)) * (ay1.max(by1) - ay0.min(by0));
    Ok(inter / union - (enclosing - union) / enclosing)
}

pub fn giou_loss(a: &NormalizedBox, b: &NormalizedBox) -> Result<f64> {
    giou(a, b).map(|g| 1.0 - g)
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: Point,
    b: Point,
    owner: u8,
}

impl Edge {
    fn y_range(&self) -> (f64, f64) {
        (self.a.y.min(self.b.y), self.a.y.max(self.b.y))
    }

    fn x_at(&self, y: f64) -> f64 {
        self.a.x + (y - self.a.y) * (self.b.x - self.a.x) / (self.b.y - self.a.y)
    }
}

fn edges(points: &[Point], owner: u8, out: &mut Vec<Edge>) {
    let n = points.len();
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        if a.y != b.y {
            out.push(Edge { a, b, owner });
        }
    }
}

/// y coordinate of the proper or touching intersection of two segments.
fn intersection_y(e: &Edge, f: &Edge) -> Option<f64> {
    let r = (e.b.x - e.a.x, e.b.y - e.a.y);
    let s = (f.b.x - f.a.x, f.b.y - f.a.y);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom == 0.0 {
        return None;
    }
    let qp = (f.a.x - e.a.x, f.a.y - e.a.y);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(e.a.y + t * r.1)
}

fn interval_length(xs: &[f64]) -> f64 {
    xs.chunks_exact(2).map(|c| c[1] - c[0]).sum()
}

fn overlap_length(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut total) = (0, 0, 0.0);
    while i + 1 < a.len() && j + 1 < b.len() {
        let lo = a[i].max(b[j]);
        let hi = a[i + 1].min(b[j + 1]);
        if hi > lo {
            total += hi - lo;
        }
        if a[i + 1] < b[j + 1] {
            i += 2;
        } else {
            j += 2;
        }
    }
    total
}

/// Even-odd areas of `a`, `b` and `a ∩ b`.
///
/// The plane is cut into horizontal slabs at every vertex and every edge
/// crossing. Inside a slab no two edges cross, so each covered width is linear
/// in y and the midpoint rule integrates it exactly.
pub fn overlap_areas(a: &[Point], b: &[Point]) -> (f64, f64, f64) {
    let mut all = Vec::with_capacity(a.len() + b.len());
    edges(a, 0, &mut all);
    edges(b, 1, &mut all);

    let mut ys: Vec<f64> = a.iter().chain(b).map(|p| p.y).collect();
    all.sort_by(|e, f| e.y_range().0.total_cmp(&f.y_range().0));
    for i in 0..all.len() {
        let (_, top) = all[i].y_range();
        for j in i + 1..all.len() {
            if all[j].y_range().0 > top {
                break;
            }
            if let Some(y) = intersection_y(&all[i], &all[j]) {
                ys.push(y);
            }
        }
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup();

    let (mut area_a, mut area_b, mut area_ab) = (0.0, 0.0, 0.0);
    let mut xa = Vec::new();
    let mut xb = Vec::new();
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        if y1 <= y0 {
            continue;
        }
        let ym = 0.5 * (y0 + y1);
        xa.clear();
        xb.clear();
        for e in &all {
            let (lo, hi) = e.y_range();
            if lo < ym && ym < hi {
                let x = e.x_at(ym);
                if e.owner == 0 {
                    xa.push(x);
                } else {
                    xb.push(x);
                }
            }
        }
        xa.sort_by(f64::total_cmp);
        xb.sort_by(f64::total_cmp);
        let dy = y1 - y0;
        area_a += dy * interval_length(&xa);
        area_b += dy * interval_length(&xb);
        area_ab += dy * overlap_length(&xa, &xb);
    }
    (area_a, area_b, area_ab)
}

/// Area-based IoU of two contours treated as closed polygons under the
/// even-odd rule.
pub fn polygon_iou(a: &ContourPoints, b: &ContourPoints) -> Result<f64> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::DegeneratePolygon("contour has fewer than 3 points"));
    }
    let (area_a, area_b, inter) = overlap_areas(a.points(), b.points());
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return Err(Error::ZeroArea);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Indices sorted by descending score; equal scores keep input order.
pub(crate) fn score_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    order
}

/// Greedy non-maximum suppression. Returns kept indices in descending score
/// order. Pairs whose IoU is undefined (both zero area) never suppress.
pub fn nms(contours: &[ContourPoints], scores: &[f64], iou_threshold: f64) -> Result<Vec<usize>> {
    if contours.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: contours.len(),
            right: scores.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(scores) {
        let suppressed = kept.iter().any(|&k| {
            polygon_iou(&contours[k], &contours[i])
                .map(|iou| iou > iou_threshold)
                .unwrap_or(false)
        });
        if !suppressed {
            kept.push(i);
        }
    }
    Ok(kept)
}
