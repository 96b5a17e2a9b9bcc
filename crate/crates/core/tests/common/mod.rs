#![allow(dead_code)]

//! Independent oracles and random generators shared by the integration tests.

use std::f64::consts::TAU;

use fourier_contour::codec::{ContourPoints, FourierDescriptor, Point, Polygon};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Star-shaped (hence simple) polygon with 3..=max_vertices vertices inside
/// `[0, 1]^2`.
pub fn random_polygon(rng: &mut impl Rng, max_vertices: usize) -> Polygon {
    let m = rng.gen_range(3..=max_vertices);
    let cx: f64 = rng.gen_range(0.15..0.85);
    let cy: f64 = rng.gen_range(0.15..0.85);
    let r_max = cx.min(1.0 - cx).min(cy).min(1.0 - cy);
    let phase = rng.gen_range(0.0..TAU);
    let vertices = (0..m)
        .map(|i| {
            let a = phase + TAU * (i as f64 + rng.gen_range(0.1..0.9)) / m as f64;
            let r = r_max * rng.gen_range(0.2..1.0);
            Point::new(
                (cx + r * a.cos()).clamp(0.0, 1.0),
                (cy + r * a.sin()).clamp(0.0, 1.0),
            )
        })
        .collect();
    Polygon::new(vertices).expect("star polygon is valid")
}

/// Random descriptor with dc in [0.2, 0.8]^2 and small harmonics.
pub fn random_descriptor(rng: &mut impl Rng, k_max: usize) -> FourierDescriptor {
    let mut coeffs: Vec<f64> = (0..4 * k_max + 2)
        .map(|_| rng.gen_range(-0.1..0.1))
        .collect();
    coeffs[2 * k_max] = rng.gen_range(0.2..0.8);
    coeffs[2 * k_max + 1] = rng.gen_range(0.2..0.8);
    FourierDescriptor::new(k_max, coeffs).unwrap()
}

/// Direct `O(NK)` evaluation of `(1/N) sum_n z_n exp(-2 pi i k n / N)`.
pub fn naive_dft(points: &[Point], k_max: usize) -> Vec<f64> {
    let n = points.len() as f64;
    let k = k_max as i64;
    let mut out = Vec::new();
    for freq in -k..=k {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, p) in points.iter().enumerate() {
            let angle = -TAU * freq as f64 * j as f64 / n;
            let (s, c) = angle.sin_cos();
            re += p.x * c - p.y * s;
            im += p.x * s + p.y * c;
        }
        out.push(re / n);
        out.push(im / n);
    }
    out
}

/// Direct evaluation of `sum_k c_k exp(2 pi i k j / n)`.
pub fn naive_decode(fd: &FourierDescriptor, n: usize) -> Vec<Point> {
    let c = fd.as_slice();
    let k = fd.k_max() as i64;
    (0..n)
        .map(|j| {
            let (mut x, mut y) = (0.0, 0.0);
            for (idx, freq) in (-k..=k).enumerate() {
                let (u, v) = (c[2 * idx], c[2 * idx + 1]);
                let angle = TAU * freq as f64 * j as f64 / n as f64;
                let (s, co) = angle.sin_cos();
                x += u * co - v * s;
                y += u * s + v * co;
            }
            Point::new(x, y)
        })
        .collect()
}

fn row_crossings(points: &[Point], y: f64) -> Vec<f64> {
    let n = points.len();
    let mut xs = Vec::new();
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        if (a.y <= y && y < b.y) || (b.y <= y && y < a.y) {
            xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs
}

/// Number of pixel centres `(j + 0.5) / g` inside the even-odd spans.
fn count_centres(spans: &[(f64, f64)], g: f64) -> i64 {
    spans
        .iter()
        .map(|&(lo, hi)| ((hi * g - 0.5).ceil() - (lo * g - 0.5).ceil()).max(0.0) as i64)
        .sum()
}

fn spans(xs: &[f64]) -> Vec<(f64, f64)> {
    xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

fn intersect_spans(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// IoU on a `grid x grid` raster of the unit square, counting pixel centres.
pub fn raster_iou(a: &[Point], b: &[Point], grid: usize) -> f64 {
    let g = grid as f64;
    let (mut na, mut nb, mut nab) = (0i64, 0i64, 0i64);
    for row in 0..grid {
        let y = (row as f64 + 0.5) / g;
        let sa = spans(&row_crossings(a, y));
        let sb = spans(&row_crossings(b, y));
        na += count_centres(&sa, g);
        nb += count_centres(&sb, g);
        nab += count_centres(&intersect_spans(&sa, &sb), g);
    }
    nab as f64 / (na + nb - nab) as f64
}

/// Minimum total over all injections of the smaller side into the larger.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost[0].len();
    fn rec(
        cost: &dyn Fn(usize, usize) -> f64,
        i: usize,
        n: usize,
        m: usize,
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
    ) {
        if i == n {
            *best = best.min(acc);
            return;
        }
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                rec(cost, i + 1, n, m, used, acc + cost(i, j), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    if rows <= cols {
        rec(
            &|i, j| cost[i][j],
            0,
            rows,
            cols,
            &mut vec![false; cols],
            0.0,
            &mut best,
        );
    } else {
        rec(
            &|i, j| cost[j][i],
            0,
            cols,
            rows,
            &mut vec![false; rows],
            0.0,
            &mut best,
        );
    }
    best
}

/// Monte-Carlo estimate of `(intersection, union, enclosing)` areas of two
/// centre-format boxes.
pub fn monte_carlo_box_areas(
    a: (f64, f64, f64, f64),
    b: (f64, f64, f64, f64),
    samples: usize,
    rng: &mut impl Rng,
) -> (f64, f64, f64) {
    let corners =
        |(x, y, w, h): (f64, f64, f64, f64)| (x - w / 2.0, y - h / 2.0, x + w / 2.0, y + h / 2.0);
    let (ax0, ay0, ax1, ay1) = corners(a);
    let (bx0, by0, bx1, by1) = corners(b);
    let (ex0, ey0, ex1, ey1) = (ax0.min(bx0), ay0.min(by0), ax1.max(bx1), ay1.max(by1));
    let area = (ex1 - ex0) * (ey1 - ey0);
    let (mut inter, mut union) = (0usize, 0usize);
    for _ in 0..samples {
        let x = rng.gen_range(ex0..ex1);
        let y = rng.gen_range(ey0..ey1);
        let ia = ax0 <= x && x <= ax1 && ay0 <= y && y <= ay1;
        let ib = bx0 <= x && x <= bx1 && by0 <= y && y <= by1;
        inter += (ia && ib) as usize;
        union += (ia || ib) as usize;
    }
    let s = samples as f64;
    (area * inter as f64 / s, area * union as f64 / s, area)
}

/// NMS straight from the greedy definition over an IoU table.
pub fn brute_force_nms(iou: &[Vec<f64>], scores: &[f64], threshold: f64) -> Vec<usize> {
    let n = scores.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        // highest score, lowest index on ties
        let mut best = remaining[0];
        for &i in &remaining {
            if scores[i] > scores[best] || (scores[i] == scores[best] && i < best) {
                best = i;
            }
        }
        kept.push(best);
        remaining.retain(|&i| i != best && iou[best][i] <= threshold);
    }
    kept
}

pub fn contour(points: &[[f64; 2]]) -> ContourPoints {
    ContourPoints::pixel(points.iter().copied().map(Point::from).collect()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
