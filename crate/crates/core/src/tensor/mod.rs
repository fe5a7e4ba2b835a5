//! Dense (channel, height, width) tensors and the elementwise arithmetic the
//! rest of the crate is built on.
//!
//! Storage is a flat row-major `Vec<f64>` in (channel, height, width) order.
//! The same layout is used by the LICW weight format and the convolution
//! kernels, so index arithmetic never needs to be translated.

pub(crate) mod image;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::image::{load_image, ImageFormat, ImagePlane};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> usize {
        self.height * self.width
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor3 {
    /// Builds a tensor from row-major data, rejecting length mismatches and
    /// non-finite values.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(channels, height, width);
        if data.len() != shape.len() {
            return Err(Error::invalid(format!(
                "tensor {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(Tensor3 { shape, data })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        let shape = Shape::new(channels, height, width);
        Tensor3 {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn from_shape_zeros(shape: Shape) -> Self {
        Tensor3::zeros(shape.channels, shape.height, shape.width)
    }

    /// Fills a tensor by evaluating `f(c, y, x)` in storage order.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Tensor3 {
            shape: Shape::new(channels, height, width),
            data,
        }
    }

    /// Internal constructor for kernels that already guarantee the length.
    pub(crate) fn from_parts(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        Tensor3 { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.shape.height + y) * self.shape.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(c, y, x)]
    }

    #[inline]
    pub(crate) fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(c, y, x);
        self.data[i] = v;
    }

    /// Row-major plane of channel `c`.
    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.shape.plane();
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn zeros_like(&self) -> Tensor3 {
        Tensor3::from_shape_zeros(self.shape)
    }

    fn check_same(&self, other: &Tensor3, op: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape,
                right: other.shape,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Tensor3, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor3> {
        self.check_same(other, op)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Tensor3::from_parts(self.shape, data))
    }

    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Tensor3 {
        Tensor3::from_parts(self.shape, self.data.iter().map(|v| v * factor).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3::from_parts(self.shape, self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor3) -> Result<()> {
        self.check_same(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Sum of elementwise products.
    pub fn dot(&self, other: &Tensor3) -> Result<f64> {
        self.check_same(other, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> Result<f64> {
        self.check_same(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Largest signed element of channel `c`.
    pub fn channel_max(&self, c: usize) -> Result<f64> {
        self.check_channel(c)?;
        Ok(self.channel(c).iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Largest magnitude in channel `c`.
    pub fn channel_abs_max(&self, c: usize) -> Result<f64> {
        self.check_channel(c)?;
        Ok(self.channel(c).iter().fold(0.0, |m: f64, v| m.max(v.abs())))
    }

    fn check_channel(&self, c: usize) -> Result<()> {
        if c >= self.shape.channels {
            return Err(Error::IndexOutOfRange {
                what: "channel",
                index: c,
                len: self.shape.channels,
            });
        }
        if self.shape.plane() == 0 {
            return Err(Error::invalid("channel has no elements"));
        }
        Ok(())
    }

    /// Grows height and width to the next multiple of `multiple` by
    /// replicating the last row and column. Returns `self` unchanged when
    /// already aligned.
    pub fn pad_edge_to_multiple(&self, multiple: usize) -> Tensor3 {
        let m = multiple.max(1);
        let h = self.height().div_ceil(m) * m;
        let w = self.width().div_ceil(m) * m;
        if h == self.height() && w == self.width() {
            return self.clone();
        }
        let (sh, sw) = (self.height(), self.width());
        Tensor3::from_fn(self.channels(), h, w, |c, y, x| {
            self.get(c, y.min(sh - 1), x.min(sw - 1))
        })
    }

    /// Per-element squared differences.
    pub fn squared_error(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, "squared_error", |a, b| {
            let d = a - b;
            d * d
        })
    }
}

impl AsRef<Tensor3> for Tensor3 {
    fn as_ref(&self) -> &Tensor3 {
        self
    }
}

/// Mean squared error over all elements.
pub fn mse(a: &Tensor3, b: &Tensor3) -> Result<f64> {
    let sq = a.squared_error(b)?;
    Ok(mean(sq.data()))
}

/// Squared-error tensor together with its mean.
#[derive(Debug, Clone)]
pub struct MseBreakdown {
    pub mse: f64,
    pub squared: Tensor3,
}

pub fn mse_breakdown(a: &Tensor3, b: &Tensor3) -> Result<MseBreakdown> {
    let squared = a.squared_error(b)?;
    Ok(MseBreakdown {
        mse: mean(squared.data()),
        squared,
    })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}
