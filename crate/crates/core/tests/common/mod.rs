//! Brute-force reference implementations and random instance generators
//! shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use tpictm::grid::{BinaryMask, ImageGrid, Shape};
use tpictm::topology::{count_components, Connectivity};

/// Dense periodic kernel `K[dr * cols + dc]` of the periodized Gaussian
/// `exp(-|x|^2 / (4 tau)) / (4 pi tau)` sampled at grid offsets and scaled by
/// `h^2`, so that `sum K = 1` up to quadrature error. `tau = 0` is the
/// discrete delta.
pub fn gauss_kernel(shape: Shape, tau: f64) -> Vec<f64> {
    let (rows, cols) = (shape.rows(), shape.cols());
    let mut k = vec![0.0; rows * cols];
    if tau == 0.0 {
        k[0] = 1.0;
        return k;
    }
    let h = shape.spacing();
    let axis = |n: usize| -> Vec<f64> {
        let period = n as f64 * h;
        // Enough images that the next one contributes below 1e-30.
        let copies = ((4.0 * tau * 70.0).sqrt() / period).ceil() as i64 + 1;
        (0..n)
            .map(|d| {
                let x = d as f64 * h;
                let s: f64 = (-copies..=copies)
                    .map(|m| {
                        let y = x + m as f64 * period;
                        (-y * y / (4.0 * tau)).exp()
                    })
                    .sum();
                h * s / (4.0 * PI * tau).sqrt()
            })
            .collect()
    };
    let (kr, kc) = (axis(rows), axis(cols));
    for dr in 0..rows {
        for dc in 0..cols {
            k[dr * cols + dc] = kr[dr] * kc[dc];
        }
    }
    k
}

/// Dense kernel from the trigonometric sum of the heat multipliers,
/// `K[d] = prod_axis (1/n) sum_k exp(-4 pi^2 tau xi_k^2) cos(2 pi k d / n)`.
pub fn trig_kernel(shape: Shape, tau: f64) -> Vec<f64> {
    let (rows, cols) = (shape.rows(), shape.cols());
    let h = shape.spacing();
    let axis = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|d| {
                (0..n)
                    .map(|k| {
                        let xi = k.min(n - k) as f64 / (n as f64 * h);
                        (-4.0 * PI * PI * tau * xi * xi).exp()
                            * (2.0 * PI * (k * d) as f64 / n as f64).cos()
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    };
    let (kr, kc) = (axis(rows), axis(cols));
    let mut k = vec![0.0; rows * cols];
    for dr in 0..rows {
        for dc in 0..cols {
            k[dr * cols + dc] = kr[dr] * kc[dc];
        }
    }
    k
}

/// Periodic convolution by direct summation.
pub fn convolve(shape: Shape, kernel: &[f64], field: &[f64]) -> Vec<f64> {
    let (rows, cols) = (shape.rows(), shape.cols());
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for sr in 0..rows {
                for sc in 0..cols {
                    let dr = (r + rows - sr) % rows;
                    let dc = (c + cols - sc) % cols;
                    acc += kernel[dr * cols + dc] * field[sr * cols + sc];
                }
            }
            out[r * cols + c] = acc;
        }
    }
    out
}

/// Kernel value between pixels `a` and `b` (flat indices).
pub fn kernel_at(shape: Shape, kernel: &[f64], a: usize, b: usize) -> f64 {
    let (rows, cols) = (shape.rows(), shape.cols());
    let (ar, ac) = (a / cols, a % cols);
    let (br, bc) = (b / cols, b % cols);
    kernel[((ar + rows - br) % rows) * cols + (ac + cols - bc) % cols]
}

pub fn indicator(u: &BinaryMask) -> Vec<f64> {
    u.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

pub fn channel(f: &ImageGrid, ch: usize) -> Vec<f64> {
    (0..f.rows() * f.cols())
        .map(|i| f.values()[i * f.channels() + ch])
        .collect()
}

/// Region means of the `G_tau1`-smoothed image.
pub fn cv_update(u: &BinaryMask, f: &ImageGrid, k1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = u.shape();
    let w = indicator(u);
    let n1: f64 = w.iter().sum();
    let n2 = s.len() as f64 - n1;
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for ch in 0..f.channels() {
        let sm = convolve(s, k1, &channel(f, ch));
        c1.push(w.iter().zip(&sm).map(|(a, b)| a * b).sum::<f64>() / n1);
        c2.push(w.iter().zip(&sm).map(|(a, b)| (1.0 - a) * b).sum::<f64>() / n2);
    }
    (c1, c2)
}

pub fn cv_fields(c1: &[f64], c2: &[f64], f: &ImageGrid) -> (Vec<f64>, Vec<f64>) {
    let n = f.rows() * f.cols();
    let d = f.channels();
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    for i in 0..n {
        for ch in 0..d {
            let v = f.values()[i * d + ch];
            f1[i] += (c1[ch] - v).powi(2);
            f2[i] += (c2[ch] - v).powi(2);
        }
    }
    (f1, f2)
}

/// Local fits by direct weighted sums over the window.
pub fn lif_update(
    u: &BinaryMask,
    f: &ImageGrid,
    k1: &[f64],
    kd: &[f64],
    eps: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let s = u.shape();
    let n = s.len();
    let w1 = convolve(s, k1, &indicator(u));
    let w2: Vec<f64> = convolve(s, k1, &indicator(&u.complement()));
    let fit = |w: &[f64]| -> Vec<Vec<f64>> {
        (0..f.channels())
            .map(|ch| {
                let img = channel(f, ch);
                (0..n)
                    .map(|x| {
                        let (mut num, mut den) = (0.0, 0.0);
                        for y in 0..n {
                            let g = kernel_at(s, kd, x, y);
                            num += g * w[y] * img[y];
                            den += g * w[y];
                        }
                        num / (den + eps)
                    })
                    .collect()
            })
            .collect()
    };
    (fit(&w1), fit(&w2))
}

/// `F_i(y) = lambda_i sum_ch sum_x G_delta(x - y) (C_i(x) - f(y))^2`.
pub fn lif_fields(
    c1: &[Vec<f64>],
    c2: &[Vec<f64>],
    f: &ImageGrid,
    kd: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> (Vec<f64>, Vec<f64>) {
    let s = f.shape();
    let n = s.len();
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    for ch in 0..f.channels() {
        let img = channel(f, ch);
        for y in 0..n {
            for x in 0..n {
                let g = kernel_at(s, kd, x, y);
                f1[y] += lambda1 * g * (c1[ch][x] - img[y]).powi(2);
                f2[y] += lambda2 * g * (c2[ch][x] - img[y]).powi(2);
            }
        }
    }
    (f1, f2)
}

pub fn phi(
    u: &BinaryMask,
    f1: &[f64],
    f2: &[f64],
    k1: &[f64],
    k2: &[f64],
    lambda: f64,
    tau2: f64,
) -> Vec<f64> {
    let s = u.shape();
    let diff: Vec<f64> = f1.iter().zip(f2).map(|(a, b)| a - b).collect();
    let data = convolve(s, k1, &diff);
    let signed: Vec<f64> = indicator(u).iter().map(|v| 1.0 - 2.0 * v).collect();
    let reg = convolve(s, k2, &signed);
    let w = lambda * (PI / tau2).sqrt();
    data.iter().zip(&reg).map(|(d, g)| d + w * g).collect()
}

/// `(fidelity, perimeter)` parts of the relaxed energy.
pub fn energy(
    u: &BinaryMask,
    f1: &[f64],
    f2: &[f64],
    k1: &[f64],
    k2: &[f64],
    lambda: f64,
    tau2: f64,
) -> (f64, f64) {
    let s = u.shape();
    let area = s.cell_area();
    let w = indicator(u);
    let s1 = convolve(s, k1, f1);
    let s2 = convolve(s, k1, f2);
    let fidelity: f64 = (0..s.len())
        .map(|i| w[i] * s1[i] + (1.0 - w[i]) * s2[i])
        .sum::<f64>()
        * area;
    let outside: Vec<f64> = w.iter().map(|v| 1.0 - v).collect();
    let g = convolve(s, k2, &outside);
    let perimeter =
        lambda * (PI / tau2).sqrt() * w.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() * area;
    (fidelity, perimeter)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// LIF window time between `3 h^2` and `20 h^2`, where the discrete window
/// kernel is nonnegative to roundoff.
pub fn resolved_delta(rng: &mut impl Rng, shape: Shape) -> f64 {
    let h2 = shape.cell_area();
    log_uniform(rng, 3.0 * h2, 20.0 * h2)
}

/// Piecewise-smooth random image: a few random discs of random intensity
/// over a random background, plus uniform noise.
pub fn random_image(rng: &mut impl Rng, shape: Shape, channels: usize) -> ImageGrid {
    let h = shape.spacing();
    let blobs: Vec<(f64, f64, f64, Vec<f64>)> = (0..rng.random_range(1..=4))
        .map(|_| {
            (
                rng.random_range(0.1..0.9),
                rng.random_range(0.1..0.9),
                rng.random_range(0.08..0.3),
                (0..channels).map(|_| rng.random_range(0.0..1.0)).collect(),
            )
        })
        .collect();
    let base: Vec<f64> = (0..channels).map(|_| rng.random_range(0.0..1.0)).collect();
    let noise = rng.random_range(0.0..0.3);
    let mut values = Vec::with_capacity(shape.len() * channels);
    for r in 0..shape.rows() {
        for c in 0..shape.cols() {
            let (x, y) = ((c as f64 + 0.5) * h, (r as f64 + 0.5) * h);
            let mut px = base.clone();
            for (bx, by, br, level) in &blobs {
                if (x - bx).powi(2) + (y - by).powi(2) <= br * br {
                    px.clone_from(level);
                }
            }
            for v in px {
                let n: f64 = rng.random_range(-noise..=noise);
                values.push((v + n).clamp(0.0, 1.0));
            }
        }
    }
    ImageGrid::new(shape.rows(), shape.cols(), channels, values).unwrap()
}

/// Random union of discs and rectangles, kept two-phase.
pub fn random_mask(rng: &mut impl Rng, shape: Shape) -> BinaryMask {
    let h = shape.spacing();
    loop {
        let pieces: Vec<(bool, f64, f64, f64, f64)> = (0..rng.random_range(1..=5))
            .map(|_| {
                (
                    rng.random_bool(0.5),
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.03..0.2),
                    rng.random_range(0.03..0.2),
                )
            })
            .collect();
        let mask = BinaryMask::from_fn(shape, |r, c| {
            let (x, y) = ((c as f64 + 0.5) * h, (r as f64 + 0.5) * h);
            pieces.iter().any(|&(disc, cx, cy, a, b)| {
                if disc {
                    (x - cx).powi(2) + (y - cy).powi(2) <= a * a
                } else {
                    (x - cx).abs() <= a && (y - cy).abs() <= b
                }
            })
        });
        if mask.is_two_phase() {
            return mask;
        }
    }
}

/// Uniformly random two-phase mask.
pub fn noise_mask(rng: &mut impl Rng, shape: Shape, p: f64) -> BinaryMask {
    loop {
        let mask = BinaryMask::from_fn(shape, |_, _| rng.random_bool(p));
        if mask.is_two_phase() {
            return mask;
        }
    }
}

/// `(components, holes)` with non-periodic counting; holes are background
/// components minus one.
pub fn signature(mask: &BinaryMask, fg: Connectivity, bg: Connectivity) -> (usize, usize) {
    let comps = count_components(mask, true, fg, false);
    let holes = count_components(mask, false, bg, false).saturating_sub(1);
    (comps, holes)
}
