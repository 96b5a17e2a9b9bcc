//! Line-oriented JSON record schemas.
//!
//! * Contour record: `{"image": {"w": W, "h": H}, "polygons": [[[x, y], ...], ...]}`.
//!   In evaluation and NMS inputs a polygon may instead be an object
//!   `{"points": [[x, y], ...], "score": s, "ignore": true}`.
//! * Descriptor record: `{"k": K, "coeffs": [4K+2 floats]}` with optional
//!   `"image"` (used to denormalize on decode) and `"score"`.

use serde::{Deserialize, Serialize};

use crate::codec::{ContourPoints, FourierDescriptor, ImageSize, Point, Polygon};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub w: f64,
    pub h: f64,
}

impl ImageRecord {
    pub fn size(&self) -> Result<ImageSize> {
        ImageSize::new(self.w, self.h)
    }
}

impl From<ImageSize> for ImageRecord {
    fn from(s: ImageSize) -> Self {
        Self {
            w: s.width,
            h: s.height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPolygon {
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ignore: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolygonEntry {
    Plain(Vec<[f64; 2]>),
    Annotated(AnnotatedPolygon),
}

impl PolygonEntry {
    pub fn points(&self) -> &[[f64; 2]] {
        match self {
            PolygonEntry::Plain(p) => p,
            PolygonEntry::Annotated(a) => &a.points,
        }
    }

    pub fn score(&self) -> Option<f64> {
        match self {
            PolygonEntry::Plain(_) => None,
            PolygonEntry::Annotated(a) => a.score,
        }
    }

    pub fn ignore(&self) -> bool {
        matches!(self, PolygonEntry::Annotated(a) if a.ignore)
    }

    pub fn polygon(&self) -> Result<Polygon> {
        Polygon::from_xy(self.points())
    }

    pub fn contour(&self) -> Result<ContourPoints> {
        ContourPoints::pixel(self.points().iter().copied().map(Point::from).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRecord {
    pub image: ImageRecord,
    pub polygons: Vec<PolygonEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub k: usize,
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl DescriptorRecord {
    pub fn from_descriptor(fd: &FourierDescriptor) -> Self {
        Self {
            k: fd.k_max(),
            coeffs: fd.as_slice().to_vec(),
            image: None,
            score: None,
        }
    }

    pub fn descriptor(&self) -> Result<FourierDescriptor> {
        FourierDescriptor::new(self.k, self.coeffs.clone())
    }
}

pub fn points_to_xy(points: &[Point]) -> Vec<[f64; 2]> {
    points.iter().map(|&p| p.into()).collect()
}
