//! Bounded activation for descriptor regression and the iterative refinement
//! operators.
//!
//! The dc pair goes through the logistic sigmoid and is refined additively in
//! logit space. Every other coefficient goes through `tanh(x) / delta` and is
//! refined multiplicatively: `f(f^{-1}(c) * exp(o))`. With `delta = pi/2` the
//! output range matches the descriptor bounds `(0, 1)` and `(-2/pi, 2/pi)`.

use std::f64::consts::FRAC_PI_2;

use crate::codec::{is_dc_index, FourierDescriptor};
use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = FRAC_PI_2;

fn validate(values: &[f64], k_max: usize) -> Result<()> {
    let expected = 4 * k_max + 2;
    if values.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Unbounded network outputs, one per descriptor coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    k_max: usize,
    values: Vec<f64>,
}

impl Logits {
    pub fn new(k_max: usize, values: Vec<f64>) -> Result<Self> {
        validate(&values, k_max)?;
        Ok(Self { k_max, values })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Per-layer offset prediction consumed by [`refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetVector {
    k_max: usize,
    values: Vec<f64>,
}

impl OffsetVector {
    pub fn new(k_max: usize, values: Vec<f64>) -> Result<Self> {
        validate(&values, k_max)?;
        Ok(Self { k_max, values })
    }

    pub fn zeros(k_max: usize) -> Self {
        Self {
            k_max,
            values: vec![0.0; 4 * k_max + 2],
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Scalar activation for one coefficient.
pub fn activate_scalar(x: f64, is_dc: bool, delta: f64) -> f64 {
    if is_dc {
        sigmoid(x)
    } else {
        x.tanh() / delta
    }
}

/// Scalar inverse; `None` when `c` is not strictly inside the open range.
pub fn inverse_scalar(c: f64, is_dc: bool, delta: f64) -> Option<f64> {
    if is_dc {
        (c > 0.0 && c < 1.0).then(|| logit(c))
    } else {
        let t = c * delta;
        (t > -1.0 && t < 1.0).then(|| t.signum() * t.abs().atanh())
    }
}

/// Derivative of the scalar activation at pre-activation `z`.
pub fn activation_derivative(z: f64, is_dc: bool, delta: f64) -> f64 {
    if is_dc {
        let s = sigmoid(z);
        s * (1.0 - s)
    } else {
        let t = z.tanh();
        (1.0 - t * t) / delta
    }
}

pub fn activate(raw: &Logits, delta: f64) -> FourierDescriptor {
    let k = raw.k_max();
    let coeffs = raw
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &x)| activate_scalar(x, is_dc_index(k, i), delta))
        .collect();
    FourierDescriptor::new(k, coeffs).expect("activation of finite logits is finite")
}

/// Exact inverse of [`activate`]. Values on or beyond the open range boundary
/// are rejected rather than clamped.
pub fn activate_inverse(fd: &FourierDescriptor, delta: f64) -> Result<Logits> {
    let k = fd.k_max();
    let values = fd
        .as_slice()
        .iter()
        .enumerate()
        .map(|(index, &c)| {
            inverse_scalar(c, is_dc_index(k, index), delta)
                .ok_or(Error::OutOfRange { index, value: c })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Logits { k_max: k, values })
}

fn check_offset(prev: &FourierDescriptor, offset: &OffsetVector) -> Result<()> {
    if offset.k_max() != prev.k_max() {
        return Err(Error::DimensionMismatch {
            expected: prev.len(),
            actual: offset.as_slice().len(),
        });
    }
    Ok(())
}

/// Refines a descriptor by one decoder step: additive in logit space for the
/// dc pair, multiplicative (`z * exp(o)`) for the rest.
///
/// In exact arithmetic the result stays strictly inside the activation range.
/// In `f64`, very large pre-activations saturate `tanh` and `sigmoid` to the
/// boundary, so callers feeding extreme offsets should expect boundary values.
pub fn refine(
    prev: &FourierDescriptor,
    offset: &OffsetVector,
    delta: f64,
) -> Result<FourierDescriptor> {
    check_offset(prev, offset)?;
    let z = activate_inverse(prev, delta)?;
    let k = prev.k_max();
    let coeffs = z
        .as_slice()
        .iter()
        .zip(offset.as_slice())
        .enumerate()
        .map(|(i, (&z, &o))| {
            if is_dc_index(k, i) {
                sigmoid(z + o)
            } else {
                (z * o.exp()).tanh() / delta
            }
        })
        .collect();
    FourierDescriptor::new(k, coeffs)
}

/// Componentwise `d refine(prev, offset)_i / d offset_i` in closed form.
pub fn refine_gradient(
    prev: &FourierDescriptor,
    offset: &OffsetVector,
    delta: f64,
) -> Result<Vec<f64>> {
    check_offset(prev, offset)?;
    let z = activate_inverse(prev, delta)?;
    let k = prev.k_max();
    Ok(z.as_slice()
        .iter()
        .zip(offset.as_slice())
        .enumerate()
        .map(|(i, (&z, &o))| {
            if is_dc_index(k, i) {
                activation_derivative(z + o, true, delta)
            } else {
                let scaled = z * o.exp();
                activation_derivative(scaled, false, delta) * scaled
            }
        })
        .collect())
}

/// Zero-offset limit of [`refine_gradient`]: `f'(f^{-1}(c))` on the dc pair and
/// `f'(f^{-1}(c)) * f^{-1}(c)` elsewhere.
pub fn refine_gradient_limit(prev: &FourierDescriptor, delta: f64) -> Result<Vec<f64>> {
    let z = activate_inverse(prev, delta)?;
    let k = prev.k_max();
    Ok(z.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let dc = is_dc_index(k, i);
            let slope = activation_derivative(z, dc, delta);
            if dc {
                slope
            } else {
                slope * z
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_2_PI;

    fn descriptor_with(k: usize, index: usize, value: f64) -> FourierDescriptor {
        let mut coeffs = vec![0.0; 4 * k + 2];
        coeffs[2 * k] = 0.5;
        coeffs[2 * k + 1] = 0.5;
        coeffs[index] = value;
        FourierDescriptor::new(k, coeffs).unwrap()
    }

    #[test]
    fn zero_logits() {
        let fd = activate(&Logits::new(5, vec![0.0; 22]).unwrap(), DEFAULT_DELTA);
        for (i, &c) in fd.as_slice().iter().enumerate() {
            assert_eq!(c, if i == 10 || i == 11 { 0.5 } else { 0.0 });
        }
    }

    #[test]
    fn asymptotes() {
        let fd = activate(&Logits::new(1, vec![50.0; 6]).unwrap(), DEFAULT_DELTA);
        assert!((fd.as_slice()[0] - FRAC_2_PI).abs() < 1e-15);
        assert!((fd.as_slice()[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let fd = descriptor_with(1, 0, 0.0);
        let z = activate_inverse(&fd, DEFAULT_DELTA).unwrap();
        assert_eq!(z.as_slice(), &[0.0; 6]);

        let at_bound = descriptor_with(1, 0, FRAC_2_PI);
        assert!(matches!(
            activate_inverse(&at_bound, DEFAULT_DELTA),
            Err(Error::OutOfRange { index: 0, .. })
        ));
        let dc_bound = descriptor_with(1, 2, 1.0);
        assert!(matches!(
            activate_inverse(&dc_bound, DEFAULT_DELTA),
            Err(Error::OutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn refine_scalar_case() {
        // u_1 sits at flat index 2K + 2
        let k = 5;
        let idx = 2 * k + 2;
        let prev = descriptor_with(k, idx, 0.3);
        let mut o = vec![0.0; 22];
        o[idx] = 0.1;
        let out = refine(&prev, &OffsetVector::new(k, o).unwrap(), DEFAULT_DELTA).unwrap();
        let expected = ((0.3 * FRAC_PI_2).atanh() * 0.1f64.exp()).tanh() / FRAC_PI_2;
        assert!((out.as_slice()[idx] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_stays_zero() {
        let prev = descriptor_with(2, 0, 0.0);
        let offset = OffsetVector::new(2, vec![3.0; 10]).unwrap();
        let out = refine(&prev, &offset, DEFAULT_DELTA).unwrap();
        assert_eq!(out.as_slice()[0], 0.0);
    }

    #[test]
    fn gradient_examples() {
        let prev = descriptor_with(1, 0, 0.0);
        let g = refine_gradient(&prev, &OffsetVector::zeros(1), DEFAULT_DELTA).unwrap();
        assert_eq!(g[2], 0.25);
        assert_eq!(g[3], 0.25);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn mismatched_offset() {
        let prev = descriptor_with(1, 0, 0.0);
        assert!(refine(&prev, &OffsetVector::zeros(2), DEFAULT_DELTA).is_err());
    }

    #[test]
    fn logits_validation() {
        assert!(Logits::new(1, vec![0.0; 5]).is_err());
        assert!(Logits::new(1, vec![0.0, 0.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }
}
