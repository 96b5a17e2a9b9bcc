//! Descriptor-conditioned reference geometry and the multi-scale deformable
//! attention sampling kernel.
//!
//! Normalized coordinates address pixel centres: `(0, 0)` maps to `(-0.5, -0.5)`
//! and `(1, 1)` to `(W - 0.5, H - 0.5)` in the pixel frame of a level. Samples
//! outside the grid read zeros.

use nalgebra::{DMatrix, DVector};

use crate::codec::{idft_decode, FourierDescriptor, Point};
use crate::error::{Error, Result};
use crate::geometry::{points_to_bbox, NormalizedBox};

/// Tolerance on the per-head attention weight sum.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// One `C x H x W` feature level, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::DimensionMismatch {
                expected: channels * height * width,
                actual: data.len(),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Feature vector at integer pixel `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> DVector<f64> {
        DVector::from_fn(self.channels, |c, _| self.get(c, y, x))
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    levels: Vec<FeatureMap>,
}

impl FeaturePyramid {
    pub fn new(levels: Vec<FeatureMap>) -> Result<Self> {
        let Some(first) = levels.first() else {
            return Err(Error::ShapeMismatch(
                "pyramid needs at least one level".into(),
            ));
        };
        if levels.iter().any(|l| l.channels != first.channels) {
            return Err(Error::ShapeMismatch(
                "levels differ in channel count".into(),
            ));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[FeatureMap] {
        &self.levels
    }

    pub fn channels(&self) -> usize {
        self.levels[0].channels
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            levels: self.levels.iter().map(|l| l.scaled(s)).collect(),
        }
    }
}

/// Sampling offsets, attention weights and projections for one query.
///
/// `offsets` and `weights` are indexed `[head][level][point]`, flattened.
/// `value_proj[m]` is `C' x C` and `output_proj[m]` is `C x C'`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionSpec {
    pub heads: usize,
    pub levels: usize,
    pub points: usize,
    pub offsets: Vec<Point>,
    pub weights: Vec<f64>,
    pub value_proj: Vec<DMatrix<f64>>,
    pub output_proj: Vec<DMatrix<f64>>,
}

impl AttentionSpec {
    pub fn index(&self, head: usize, level: usize, point: usize) -> usize {
        (head * self.levels + level) * self.points + point
    }

    /// Single head with identity projections.
    pub fn identity(
        channels: usize,
        levels: usize,
        points: usize,
        offsets: Vec<Point>,
        weights: Vec<f64>,
    ) -> Self {
        Self {
            heads: 1,
            levels,
            points,
            offsets,
            weights,
            value_proj: vec![DMatrix::identity(channels, channels)],
            output_proj: vec![DMatrix::identity(channels, channels)],
        }
    }

    fn validate(&self, pyramid: &FeaturePyramid) -> Result<()> {
        let count = self.heads * self.levels * self.points;
        if self.offsets.len() != count || self.weights.len() != count {
            return Err(Error::ShapeMismatch(format!(
                "expected {count} offsets and weights, got {} and {}",
                self.offsets.len(),
                self.weights.len()
            )));
        }
        if self.levels != pyramid.levels().len() {
            return Err(Error::ShapeMismatch(format!(
                "spec has {} levels, pyramid has {}",
                self.levels,
                pyramid.levels().len()
            )));
        }
        if self.value_proj.len() != self.heads || self.output_proj.len() != self.heads {
            return Err(Error::ShapeMismatch(
                "one projection pair per head required".into(),
            ));
        }
        let c = pyramid.channels();
        for (wv, wo) in self.value_proj.iter().zip(&self.output_proj) {
            if wv.ncols() != c || wo.nrows() != c || wo.ncols() != wv.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "projections {}x{} / {}x{} incompatible with {c} channels",
                    wv.nrows(),
                    wv.ncols(),
                    wo.nrows(),
                    wo.ncols()
                )));
            }
        }
        for head in 0..self.heads {
            let per_head = self.levels * self.points;
            let sum: f64 = self.weights[head * per_head..(head + 1) * per_head]
                .iter()
                .sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(Error::WeightsNotNormalized { head, sum });
            }
        }
        Ok(())
    }
}

/// Where a query samples from: a bare point uses raw offsets, a box scales
/// offsets by its size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Point(Point),
    Box(NormalizedBox),
}

impl Reference {
    fn locate(&self, offset: Point) -> Point {
        match self {
            Reference::Point(p) => Point::new(p.x + offset.x, p.y + offset.y),
            Reference::Box(b) => modulate_offset(b, offset),
        }
    }
}

/// Mean of the decoded contour and its bounding box; the centre equals the
/// box's `(x, y)`.
pub fn reference_from_fd(fd: &FourierDescriptor, n: usize) -> Result<(Point, NormalizedBox)> {
    if n < 2 * fd.k_max() + 1 {
        return Err(Error::InsufficientSamples {
            samples: n,
            k_max: fd.k_max(),
        });
    }
    let bbox = points_to_bbox(idft_decode(fd, n).points());
    Ok((Point::new(bbox.x, bbox.y), bbox))
}

fn modulate_offset(b: &NormalizedBox, d: Point) -> Point {
    Point::new(b.x + d.x * b.w, b.y + d.y * b.h)
}

pub fn modulate_offsets(b: &NormalizedBox, offsets: &[Point]) -> Vec<Point> {
    offsets.iter().map(|&d| modulate_offset(b, d)).collect()
}

/// Bilinear read at a normalized location with zero padding.
pub fn bilinear_sample(level: &FeatureMap, loc: Point) -> DVector<f64> {
    let mut out = DVector::zeros(level.channels);
    accumulate_sample(level, loc, 1.0, &mut out);
    out
}

fn accumulate_sample(level: &FeatureMap, loc: Point, weight: f64, out: &mut DVector<f64>) {
    let px = loc.x * level.width as f64 - 0.5;
    let py = loc.y * level.height as f64 - 0.5;
    if !px.is_finite() || !py.is_finite() {
        return;
    }
    let x0 = px.floor();
    let y0 = py.floor();
    let fx = px - x0;
    let fy = py - y0;
    let corners = [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1.0, y0, fx * (1.0 - fy)),
        (x0, y0 + 1.0, (1.0 - fx) * fy),
        (x0 + 1.0, y0 + 1.0, fx * fy),
    ];
    for (cx, cy, w) in corners {
        if w == 0.0 || cx < 0.0 || cy < 0.0 {
            continue;
        }
        let (x, y) = (cx as usize, cy as usize);
        if x >= level.width || y >= level.height {
            continue;
        }
        let w = w * weight;
        for c in 0..level.channels {
            out[c] += w * level.get(c, y, x);
        }
    }
}

/// `sum_m W_m [ sum_{l,s} A_mls * W'_m x^l(loc_mls) ]`.
///
/// The weighted samples of each head are accumulated in feature space and
/// projected once, which equals projecting each sample by linearity.
pub fn ms_deform_attn(
    pyramid: &FeaturePyramid,
    reference: Reference,
    spec: &AttentionSpec,
) -> Result<DVector<f64>> {
    spec.validate(pyramid)?;
    let c = pyramid.channels();
    let mut out = DVector::zeros(c);
    for head in 0..spec.heads {
        let mut acc = DVector::zeros(c);
        for (l, level) in pyramid.levels().iter().enumerate() {
            for s in 0..spec.points {
                let i = spec.index(head, l, s);
                let loc = reference.locate(spec.offsets[i]);
                accumulate_sample(level, loc, spec.weights[i], &mut acc);
            }
        }
        out += &spec.output_proj[head] * (&spec.value_proj[head] * acc);
    }
    Ok(out)
}
