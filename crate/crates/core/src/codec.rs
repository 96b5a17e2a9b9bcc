//! Contour encoding: equidistant resampling, normalization by image size and the
//! forward/inverse DFT between contour points and Fourier descriptors.
//!
//! Conventions used throughout the crate:
//!
//! * Image coordinates have the y axis pointing down.
//! * Polygons are traversed clockwise on screen (positive shoelace area in image
//!   coordinates) and start at the vertex with the smallest `(y, x)`.
//! * A descriptor with highest frequency `K` stores `4K+2` reals laid out as
//!   `[u_{-K}, v_{-K}, ..., u_0, v_0, ..., u_K, v_K]`, so the dc pair sits at
//!   flat indices `2K` and `2K+1`.

use std::cell::RefCell;
use std::f64::consts::{FRAC_2_PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Tolerance used when checking that points lie inside the image rectangle.
pub const BOUNDS_TOLERANCE: f64 = 1e-9;

/// Tolerance used by [`check_bounds`].
pub const DESCRIPTOR_BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Signed shoelace area; positive means clockwise on screen (y down).
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// A closed polygon in pixel coordinates. The last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon("fewer than 3 vertices"));
        }
        if vertices
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::DegeneratePolygon("non-finite vertex"));
        }
        let n = vertices.len();
        if (0..n).any(|i| vertices[i] == vertices[(i + 1) % n]) {
            return Err(Error::DegeneratePolygon("repeated consecutive vertex"));
        }
        let polygon = Self { vertices };
        if polygon.perimeter() <= 0.0 {
            return Err(Error::DegeneratePolygon("zero perimeter"));
        }
        Ok(polygon)
    }

    pub fn from_xy(vertices: &[[f64; 2]]) -> Result<Self> {
        Self::new(vertices.iter().copied().map(Point::from).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].distance(self.vertices[(i + 1) % n]))
            .sum()
    }

    /// Vertices in canonical order: clockwise in image coordinates, starting at
    /// the vertex with minimal `(y, x)`.
    pub fn canonical_vertices(&self) -> Vec<Point> {
        let mut v = self.vertices.clone();
        if signed_area(&v) < 0.0 {
            v.reverse();
        }
        let start = v
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        v.rotate_left(start);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSize {
    pub width: f64,
    pub height: f64,
}

impl ImageSize {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidImageSize { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn max_side(&self) -> f64 {
        self.width.max(self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Pixel,
    /// Coordinates relative to the image size. Contours produced by
    /// [`normalize`] lie in `[0, 1]^2`; decoded contours carry this frame too
    /// but are not clamped.
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourPoints {
    points: Vec<Point>,
    frame: Frame,
}

impl ContourPoints {
    /// Checked constructor. Normalized contours must lie inside the unit square.
    pub fn new(points: Vec<Point>, frame: Frame) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientSamples {
                samples: 0,
                k_max: 0,
            });
        }
        if let Some(index) = points
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        if frame == Frame::Normalized {
            if let Some(index) = points
                .iter()
                .position(|p| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y))
            {
                return Err(Error::NotNormalized { index });
            }
        }
        Ok(Self { points, frame })
    }

    pub fn pixel(points: Vec<Point>) -> Result<Self> {
        Self::new(points, Frame::Pixel)
    }

    pub(crate) fn unchecked(points: Vec<Point>, frame: Frame) -> Self {
        Self { points, frame }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

/// `4K+2` real coefficients of a contour's complex DFT restricted to `|k| <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDescriptor {
    k_max: usize,
    coeffs: Vec<f64>,
}

impl FourierDescriptor {
    pub fn new(k_max: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = 4 * k_max + 2;
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: coeffs.len(),
            });
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { k_max, coeffs })
    }

    pub fn zeros(k_max: usize) -> Self {
        Self {
            k_max,
            coeffs: vec![0.0; 4 * k_max + 2],
        }
    }

    /// Builds a descriptor from complex coefficients ordered `-K..=K`.
    pub fn from_complex(coeffs: &[Complex64]) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: coeffs.len() + 1,
                actual: coeffs.len(),
            });
        }
        let k_max = coeffs.len() / 2;
        let flat = coeffs.iter().flat_map(|c| [c.re, c.im]).collect();
        Self::new(k_max, flat)
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    /// Flat indices of `(u_0, v_0)`.
    pub fn dc_indices(&self) -> [usize; 2] {
        [2 * self.k_max, 2 * self.k_max + 1]
    }

    pub fn is_dc_index(&self, index: usize) -> bool {
        is_dc_index(self.k_max, index)
    }

    /// Complex coefficient for frequency `k`, `-K <= k <= K`.
    pub fn coeff(&self, k: isize) -> Complex64 {
        let i = self.flat_index(k);
        Complex64::new(self.coeffs[i], self.coeffs[i + 1])
    }

    pub fn set_coeff(&mut self, k: isize, value: Complex64) {
        let i = self.flat_index(k);
        self.coeffs[i] = value.re;
        self.coeffs[i + 1] = value.im;
    }

    pub fn dc(&self) -> Point {
        let c = self.coeff(0);
        Point::new(c.re, c.im)
    }

    /// Complex coefficients ordered `-K..=K`.
    pub fn to_complex(&self) -> Vec<Complex64> {
        self.coeffs
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect()
    }

    fn flat_index(&self, k: isize) -> usize {
        let k_max = self.k_max as isize;
        assert!(
            (-k_max..=k_max).contains(&k),
            "frequency {k} outside -{k_max}..={k_max}"
        );
        2 * (k + k_max) as usize
    }
}

pub(crate) fn is_dc_index(k_max: usize, index: usize) -> bool {
    index == 2 * k_max || index == 2 * k_max + 1
}

/// Samples `n` points at equal arc-length spacing along the polygon boundary,
/// starting at the canonical start vertex and following canonical orientation.
pub fn resample_equidistant(polygon: &Polygon, n: usize) -> Result<ContourPoints> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let vertices = polygon.canonical_vertices();
    let m = vertices.len();
    let lengths: Vec<f64> = (0..m)
        .map(|i| vertices[i].distance(vertices[(i + 1) % m]))
        .collect();
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0);
    for len in &lengths {
        cumulative.push(cumulative.last().unwrap() + len);
    }
    let perimeter = cumulative[m];
    if perimeter <= 0.0 {
        return Err(Error::DegeneratePolygon("zero perimeter"));
    }

    let mut points = Vec::with_capacity(n);
    let mut seg = 0;
    for j in 0..n {
        let s = perimeter * j as f64 / n as f64;
        while seg + 1 < m && cumulative[seg + 1] <= s {
            seg += 1;
        }
        let t = if lengths[seg] > 0.0 {
            ((s - cumulative[seg]) / lengths[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        points.push(vertices[seg].lerp(vertices[(seg + 1) % m], t));
    }
    Ok(ContourPoints::unchecked(points, Frame::Pixel))
}

/// Divides pixel coordinates by the image size. Points on the border are
/// accepted; points further than [`BOUNDS_TOLERANCE`] outside are rejected.
pub fn normalize(points: &ContourPoints, size: ImageSize) -> Result<ContourPoints> {
    expect_frame(points, Frame::Pixel)?;
    let (w, h) = (size.width, size.height);
    let out = points
        .points()
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let outside = p.x < -BOUNDS_TOLERANCE
                || p.y < -BOUNDS_TOLERANCE
                || p.x > w + BOUNDS_TOLERANCE
                || p.y > h + BOUNDS_TOLERANCE;
            if outside {
                return Err(Error::OutOfBounds {
                    index,
                    x: p.x,
                    y: p.y,
                    width: w,
                    height: h,
                });
            }
            Ok(Point::new(
                (p.x / w).clamp(0.0, 1.0),
                (p.y / h).clamp(0.0, 1.0),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContourPoints::unchecked(out, Frame::Normalized))
}

pub fn denormalize(points: &ContourPoints, size: ImageSize) -> Result<ContourPoints> {
    expect_frame(points, Frame::Normalized)?;
    let out = points
        .points()
        .iter()
        .map(|p| Point::new(p.x * size.width, p.y * size.height))
        .collect();
    Ok(ContourPoints::unchecked(out, Frame::Pixel))
}

fn expect_frame(points: &ContourPoints, expected: Frame) -> Result<()> {
    if points.frame() != expected {
        return Err(Error::FrameMismatch {
            expected,
            actual: points.frame(),
        });
    }
    Ok(())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// `c_k = (1/N) * sum_n z_n * exp(-2 pi i k n / N)` for `|k| <= K`, computed with
/// a length-`N` FFT.
pub fn dft_encode(contour: &ContourPoints, k_max: usize) -> Result<FourierDescriptor> {
    expect_frame(contour, Frame::Normalized)?;
    let n = contour.len();
    if n < 2 * k_max + 1 {
        return Err(Error::InsufficientSamples { samples: n, k_max });
    }
    let mut buffer: Vec<Complex64> = contour
        .points()
        .iter()
        .map(|p| Complex64::new(p.x, p.y))
        .collect();
    forward_fft(n).process(&mut buffer);

    let scale = 1.0 / n as f64;
    let k = k_max as isize;
    let coeffs: Vec<Complex64> = (-k..=k)
        .map(|freq| buffer[freq.rem_euclid(n as isize) as usize] * scale)
        .collect();
    FourierDescriptor::from_complex(&coeffs)
}

/// `z_j = sum_{|k|<=K} c_k * exp(2 pi i k j / n)` for `j = 0..n`. No `1/n`
/// factor; the output is not clamped to the unit square.
pub fn idft_decode(fd: &FourierDescriptor, n: usize) -> ContourPoints {
    let roots: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / n as f64))
        .collect();
    let coeffs = fd.to_complex();
    let k = fd.k_max() as isize;
    let points = (0..n as isize)
        .map(|j| {
            let z: Complex64 = (-k..=k)
                .zip(&coeffs)
                .map(|(freq, c)| c * roots[(freq * j).rem_euclid(n as isize) as usize])
                .sum();
            Point::new(z.re, z.im)
        })
        .collect();
    ContourPoints::unchecked(points, Frame::Normalized)
}

/// Full target pipeline: resample, normalize, DFT.
pub fn encode_polygon(
    polygon: &Polygon,
    size: ImageSize,
    n_samples: usize,
    k_max: usize,
) -> Result<FourierDescriptor> {
    let resampled = resample_equidistant(polygon, n_samples)?;
    let normalized = normalize(&resampled, size)?;
    dft_encode(&normalized, k_max)
}

/// Inverse pipeline: inverse DFT, then back to pixels.
pub fn decode_descriptor(fd: &FourierDescriptor, size: ImageSize, n: usize) -> ContourPoints {
    let pts = idft_decode(fd, n);
    denormalize(&pts, size).expect("idft_decode emits the normalized frame")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Real,
    Imag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub index: usize,
    pub frequency: isize,
    pub component: Component,
    pub value: f64,
    pub is_dc: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundsReport {
    pub violations: Vec<BoundViolation>,
}

impl BoundsReport {
    pub fn is_within(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the normalized-descriptor bounds: dc in `[0, 1]^2`, every other pair
/// in `[-2/pi, 2/pi]^2`.
pub fn check_bounds(fd: &FourierDescriptor) -> BoundsReport {
    let tol = DESCRIPTOR_BOUND_TOLERANCE;
    let k = fd.k_max() as isize;
    let violations = fd
        .as_slice()
        .iter()
        .enumerate()
        .filter_map(|(index, &value)| {
            let is_dc = fd.is_dc_index(index);
            let ok = if is_dc {
                (-tol..=1.0 + tol).contains(&value)
            } else {
                value.abs() <= FRAC_2_PI + tol
            };
            (!ok).then(|| BoundViolation {
                index,
                frequency: (index / 2) as isize - k,
                component: if index % 2 == 0 {
                    Component::Real
                } else {
                    Component::Imag
                },
                value,
                is_dc,
            })
        })
        .collect();
    BoundsReport { violations }
}
