//! Periodic heat-kernel convolution.
//!
//! `G_tau * v` is applied as the exact heat semigroup on the torus: forward
//! FFT, multiply frequency `(p, q)` by `exp(-4 pi^2 tau (xi_p^2 + xi_q^2))`,
//! inverse FFT. `xi` are physical frequencies of the normalized domain, so a
//! square grid has `xi_p = p` for the signed integer frequency `p`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarField, Shape};

struct Plans {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(shape: Shape) -> Self {
        let mut planner = FftPlanner::new();
        Plans {
            row_fwd: planner.plan_fft_forward(shape.cols()),
            row_inv: planner.plan_fft_inverse(shape.cols()),
            col_fwd: planner.plan_fft_forward(shape.rows()),
            col_inv: planner.plan_fft_inverse(shape.rows()),
        }
    }
}

/// Fourier multiplier of `G_tau` on a fixed grid.
#[derive(Clone)]
pub struct HeatMultiplier {
    tau: f64,
    shape: Shape,
    /// Row-major over frequency indices `(p, q)`.
    multipliers: Vec<f64>,
    plans: Arc<Plans>,
}

impl fmt::Debug for HeatMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeatMultiplier")
            .field("tau", &self.tau)
            .field("shape", &self.shape)
            .finish_non_exhaustive()
    }
}

/// Signed integer frequency of DFT index `k` on `n` points, folded to `|k| <= n/2`.
#[inline]
fn signed_frequency(k: usize, n: usize) -> f64 {
    k.min(n - k) as f64
}

fn frequency_response(tau: f64, shape: Shape) -> Result<Vec<f64>> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be finite and non-negative, got {tau}"),
        });
    }
    let h = shape.spacing();
    let len_r = shape.rows() as f64 * h;
    let len_c = shape.cols() as f64 * h;
    let mut out = Vec::with_capacity(shape.len());
    for p in 0..shape.rows() {
        let xr = signed_frequency(p, shape.rows()) / len_r;
        for q in 0..shape.cols() {
            let xc = signed_frequency(q, shape.cols()) / len_c;
            out.push((-4.0 * PI * PI * tau * (xr * xr + xc * xc)).exp());
        }
    }
    Ok(out)
}

/// Response `exp(-pi^2 tau / h^2)` at the Nyquist frequency. When it is not
/// negligible the band-limited kernel has negative side lobes, so smoothing a
/// nonnegative field can produce small negative values.
pub fn nyquist_response(tau: f64, shape: Shape) -> f64 {
    let h = shape.spacing();
    (-PI * PI * tau / (h * h)).exp()
}

/// Builds the multiplier for diffusion time `tau >= 0`.
pub fn build_multiplier(tau: f64, shape: Shape) -> Result<HeatMultiplier> {
    HeatMultiplier::new(tau, shape)
}

impl HeatMultiplier {
    pub fn new(tau: f64, shape: Shape) -> Result<Self> {
        Ok(HeatMultiplier {
            tau,
            shape,
            multipliers: frequency_response(tau, shape)?,
            plans: Arc::new(Plans::new(shape)),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn is_identity(&self) -> bool {
        self.tau == 0.0
    }

    /// Another time on the same grid, reusing the FFT plans.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Ok(HeatMultiplier {
            tau,
            shape: self.shape,
            multipliers: frequency_response(tau, self.shape)?,
            plans: Arc::clone(&self.plans),
        })
    }

    /// `G_tau * field`.
    pub fn apply(&self, field: &ScalarField) -> Result<ScalarField> {
        self.shape.ensure_same(field.shape())?;
        if self.is_identity() {
            return Ok(field.clone());
        }
        let mut buf: Vec<Complex<f64>> =
            field.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.filter(&mut buf);
        Ok(ScalarField::from_vec_unchecked(
            self.shape,
            buf.into_iter().map(|z| z.re).collect(),
        ))
    }

    /// Convolves two real fields with one complex transform. The kernel is
    /// real and even, so real and imaginary parts do not mix.
    pub fn apply_pair(
        &self,
        a: &ScalarField,
        b: &ScalarField,
    ) -> Result<(ScalarField, ScalarField)> {
        self.shape.ensure_same(a.shape())?;
        self.shape.ensure_same(b.shape())?;
        if self.is_identity() {
            return Ok((a.clone(), b.clone()));
        }
        let mut buf: Vec<Complex<f64>> = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(&x, &y)| Complex::new(x, y))
            .collect();
        self.filter(&mut buf);
        let re = buf.iter().map(|z| z.re).collect();
        let im = buf.iter().map(|z| z.im).collect();
        Ok((
            ScalarField::from_vec_unchecked(self.shape, re),
            ScalarField::from_vec_unchecked(self.shape, im),
        ))
    }

    fn filter(&self, buf: &mut [Complex<f64>]) {
        let (rows, cols) = (self.shape.rows(), self.shape.cols());
        let plans = &self.plans;
        plans.row_fwd.process(buf);
        let mut t = transpose(buf, rows, cols);
        plans.col_fwd.process(&mut t);
        // `t` is laid out as [q][p].
        let scale = 1.0 / (rows * cols) as f64;
        for q in 0..cols {
            for p in 0..rows {
                t[q * rows + p] *= self.multipliers[p * cols + q] * scale;
            }
        }
        plans.col_inv.process(&mut t);
        let back = transpose(&t, cols, rows);
        buf.copy_from_slice(&back);
        plans.row_inv.process(buf);
    }
}

fn transpose(src: &[Complex<f64>], rows: usize, cols: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

/// `G_tau * field` under periodic boundary conditions.
pub fn convolve(field: &ScalarField, mult: &HeatMultiplier) -> Result<ScalarField> {
    mult.apply(field)
}

/// Heat-content perimeter estimate `sqrt(pi/tau) * sum u (G_tau * (1 - u)) h^2`.
pub fn perimeter_estimate(u: &BinaryMask, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("perimeter estimate needs tau > 0, got {tau}"),
        });
    }
    let mult = HeatMultiplier::new(tau, u.shape())?;
    perimeter_with(u, &mult)
}

/// Perimeter estimate with a prebuilt multiplier.
pub fn perimeter_with(u: &BinaryMask, mult: &HeatMultiplier) -> Result<f64> {
    if !(mult.tau() > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("perimeter estimate needs tau > 0, got {}", mult.tau()),
        });
    }
    let outside = u.complement().to_field();
    let smoothed = mult.apply(&outside)?;
    let overlap: f64 = u
        .bits()
        .iter()
        .zip(smoothed.values())
        .filter(|(&b, _)| b)
        .map(|(_, &v)| v)
        .sum();
    Ok((PI / mult.tau()).sqrt() * overlap * u.shape().cell_area())
}
