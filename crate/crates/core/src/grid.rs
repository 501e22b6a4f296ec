//! Pixel-grid containers on a periodic, normalized domain.
//!
//! The longest image side has physical length 1, so a grid with `rows x cols`
//! pixels has spacing `h = 1 / max(rows, cols)`. All heat-kernel times are
//! expressed in these physical units.

use crate::error::{Error, Result};

/// Smallest supported side length; topology checks need a full 3x3 window.
pub const MIN_SIDE: usize = 3;

/// Wraps `i` into `[0, n)`.
#[inline]
pub fn periodic_wrap(i: isize, n: usize) -> usize {
    debug_assert!(n >= 1);
    i.rem_euclid(n as isize) as usize
}

/// Grid dimensions shared by every per-pixel container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    rows: usize,
    cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < MIN_SIDE || cols < MIN_SIDE {
            return Err(Error::InvalidShape { rows, cols });
        }
        Ok(Shape { rows, cols })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of pixels.
    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical side length of one pixel.
    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.rows.max(self.cols) as f64
    }

    /// Physical area of one pixel, `h^2`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Row-major linear index.
    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Row-major linear index of a possibly out-of-range coordinate, wrapped periodically.
    #[inline]
    pub fn wrapped_index(&self, row: isize, col: isize) -> usize {
        self.index(periodic_wrap(row, self.rows), periodic_wrap(col, self.cols))
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub(crate) fn ensure_same(&self, other: Shape) -> Result<()> {
        if *self != other {
            return Err(Error::ShapeMismatch {
                expected: (self.rows, self.cols),
                found: (other.rows, other.cols),
            });
        }
        Ok(())
    }
}

/// Image intensities in `[0, 1]`, stored row-major with channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    shape: Shape,
    channels: usize,
    values: Vec<f64>,
}

impl ImageGrid {
    /// Builds an image from interleaved values already in `[0, 1]`.
    pub fn new(rows: usize, cols: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(rows, cols)?;
        if channels == 0 {
            return Err(Error::InvalidParameter {
                name: "channels",
                reason: "must be at least 1".into(),
            });
        }
        if values.len() != shape.len() * channels {
            return Err(Error::LengthMismatch {
                expected: shape.len() * channels,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::IntensityOutOfRange {
                index: pos,
                value: values[pos],
            });
        }
        Ok(ImageGrid {
            shape,
            channels,
            values,
        })
    }

    /// Builds an image from raw samples, mapping `[0, max_value]` linearly onto `[0, 1]`.
    pub fn from_raw(
        rows: usize,
        cols: usize,
        channels: usize,
        raw: &[f64],
        max_value: f64,
    ) -> Result<Self> {
        if !(max_value > 0.0) || !max_value.is_finite() {
            return Err(Error::InvalidParameter {
                name: "max_value",
                reason: format!("must be positive and finite, got {max_value}"),
            });
        }
        let values = raw.iter().map(|v| (v / max_value).clamp(0.0, 1.0)).collect();
        Self::new(rows, cols, channels, values)
    }

    /// Single-channel image from a field, clamping to `[0, 1]`.
    pub fn from_field(field: &ScalarField) -> Self {
        ImageGrid {
            shape: field.shape(),
            channels: 1,
            values: field.values().iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.shape.spacing()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.values[self.shape.index(row, col) * self.channels + channel]
    }

    /// Interleaved values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Extracts one channel as a scalar field.
    pub fn channel(&self, channel: usize) -> ScalarField {
        assert!(channel < self.channels, "channel {channel} out of range");
        let values = self
            .values
            .iter()
            .skip(channel)
            .step_by(self.channels)
            .copied()
            .collect();
        ScalarField {
            shape: self.shape,
            values,
        }
    }
}

/// Characteristic function of the foreground segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    shape: Shape,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        let shape = Shape::new(rows, cols)?;
        if bits.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                found: bits.len(),
            });
        }
        Ok(BinaryMask { shape, bits })
    }

    /// Builds a mask from bytes that must each be 0 or 1.
    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self> {
        if let Some(pos) = bytes.iter().position(|&b| b > 1) {
            return Err(Error::InvalidParameter {
                name: "bits",
                reason: format!("entry {pos} is {}, expected 0 or 1", bytes[pos]),
            });
        }
        Self::new(rows, cols, bytes.iter().map(|&b| b == 1).collect())
    }

    pub fn zeros(shape: Shape) -> Self {
        BinaryMask {
            shape,
            bits: vec![false; shape.len()],
        }
    }

    pub fn ones(shape: Shape) -> Self {
        BinaryMask {
            shape,
            bits: vec![true; shape.len()],
        }
    }

    /// Mask of all pixels where `pred(row, col)` holds.
    pub fn from_fn(shape: Shape, mut pred: impl FnMut(usize, usize) -> bool) -> Self {
        let bits = (0..shape.len())
            .map(|i| {
                let (r, c) = shape.coords(i);
                pred(r, c)
            })
            .collect();
        BinaryMask { shape, bits }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[self.shape.index(row, col)]
    }

    /// Periodic lookup.
    #[inline]
    pub fn get_wrapped(&self, row: isize, col: isize) -> bool {
        self.bits[self.shape.wrapped_index(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let i = self.shape.index(row, col);
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| b as u8).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when both phases are present.
    pub fn is_two_phase(&self) -> bool {
        let ones = self.count_ones();
        ones > 0 && ones < self.bits.len()
    }

    pub fn complement(&self) -> Self {
        BinaryMask {
            shape: self.shape,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// `u` as a real field.
    pub fn to_field(&self) -> ScalarField {
        ScalarField {
            shape: self.shape,
            values: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Number of pixels where two masks differ.
pub fn mask_flip_count(a: &BinaryMask, b: &BinaryMask) -> Result<usize> {
    a.shape.ensure_same(b.shape)?;
    Ok(a.bits
        .iter()
        .zip(&b.bits)
        .filter(|(x, y)| x != y)
        .count())
}

/// Real-valued single-channel field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    shape: Shape,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_shape(Shape::new(rows, cols)?, values)
    }

    pub fn with_shape(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: pos });
        }
        Ok(ScalarField { shape, values })
    }

    pub fn constant(shape: Shape, value: f64) -> Self {
        ScalarField {
            shape,
            values: vec![value; shape.len()],
        }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = (0..shape.len())
            .map(|i| {
                let (r, c) = shape.coords(i);
                f(r, c)
            })
            .collect();
        ScalarField { shape, values }
    }

    /// Internal constructor for values produced by finite arithmetic.
    pub(crate) fn from_vec_unchecked(shape: Shape, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), shape.len());
        ScalarField { shape, values }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.shape.index(row, col)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Pointwise combination of two fields of the same shape.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.shape.ensure_same(other.shape)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ScalarField {
            shape: self.shape,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            shape: self.shape,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
