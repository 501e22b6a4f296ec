//! Fidelity models: Chan-Vese (piecewise-constant) and local intensity
//! fitting (spatially varying fit through a Gaussian window `G_delta`).
//!
//! Each model provides the closed-form parameter update for a fixed mask and
//! the per-pixel fidelity integrands `F1`, `F2` summed over channels.

use log::warn;

use crate::convolution::{nyquist_response, HeatMultiplier};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ImageGrid, ScalarField, Shape};

/// Per-channel region means.
#[derive(Debug, Clone, PartialEq)]
pub struct CvState {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

/// Per-channel local fits `C1(x)`, `C2(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LifState {
    pub c1: Vec<ScalarField>,
    pub c2: Vec<ScalarField>,
}

/// Fidelity integrands, summed over channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityFields {
    pub f1: ScalarField,
    pub f2: ScalarField,
}

fn check_pair(u: &BinaryMask, f: &ImageGrid, kernel: &HeatMultiplier) -> Result<()> {
    u.shape().ensure_same(f.shape())?;
    kernel.shape().ensure_same(f.shape())
}

/// Chan-Vese means `c_i = sum w_i (G_tau1 * f) / sum w_i` with `w_1 = u`,
/// `w_2 = 1 - u`. `smooth` is the `G_tau1` multiplier.
pub fn cv_update(u: &BinaryMask, f: &ImageGrid, smooth: &HeatMultiplier) -> Result<CvState> {
    check_pair(u, f, smooth)?;
    let inside = u.count_ones();
    let outside = u.shape().len() - inside;
    if inside == 0 {
        return Err(Error::DegenerateRegion("foreground"));
    }
    if outside == 0 {
        return Err(Error::DegenerateRegion("background"));
    }
    let mut c1 = Vec::with_capacity(f.channels());
    let mut c2 = Vec::with_capacity(f.channels());
    for ch in 0..f.channels() {
        let smoothed = smooth.apply(&f.channel(ch))?;
        let (mut s1, mut s2) = (0.0, 0.0);
        for (&b, &v) in u.bits().iter().zip(smoothed.values()) {
            if b {
                s1 += v;
            } else {
                s2 += v;
            }
        }
        c1.push(s1 / inside as f64);
        c2.push(s2 / outside as f64);
    }
    Ok(CvState { c1, c2 })
}

/// `F_i(x) = sum_ch (c_i - f(x))^2`.
pub fn cv_fields(state: &CvState, f: &ImageGrid) -> Result<FidelityFields> {
    let d = f.channels();
    if state.c1.len() != d || state.c2.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            found: state.c1.len().min(state.c2.len()),
        });
    }
    let shape = f.shape();
    let mut f1 = vec![0.0; shape.len()];
    let mut f2 = vec![0.0; shape.len()];
    for (i, px) in f.values().chunks_exact(d).enumerate() {
        for (ch, &v) in px.iter().enumerate() {
            f1[i] += (state.c1[ch] - v).powi(2);
            f2[i] += (state.c2[ch] - v).powi(2);
        }
    }
    Ok(FidelityFields {
        f1: ScalarField::from_vec_unchecked(shape, f1),
        f2: ScalarField::from_vec_unchecked(shape, f2),
    })
}

/// Local fits
/// `C1 = G_delta * ((G_tau1 * u) f) / (G_delta * (G_tau1 * u) + eps)`,
/// `C2` likewise with `1 - u`.
pub fn lif_update(
    u: &BinaryMask,
    f: &ImageGrid,
    smooth: &HeatMultiplier,
    window: &HeatMultiplier,
    eps: f64,
) -> Result<LifState> {
    check_pair(u, f, smooth)?;
    window.shape().ensure_same(f.shape())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be positive, got {eps}"),
        });
    }
    // Phases go through separate real transforms so that swapping `u` and
    // `1 - u` swaps the fits bit for bit.
    let phase_fits = |weight: &ScalarField| -> Result<Vec<ScalarField>> {
        let smoothed = smooth.apply(weight)?;
        let den = window.apply(&smoothed)?;
        (0..f.channels())
            .map(|ch| {
                let weighted = smoothed.zip_map(&f.channel(ch), |w, v| w * v)?;
                window.apply(&weighted)?.zip_map(&den, |n, d| n / (d + eps))
            })
            .collect()
    };
    Ok(LifState {
        c1: phase_fits(&u.to_field())?,
        c2: phase_fits(&u.complement().to_field())?,
    })
}

/// `F_i(y) = lambda_i sum_ch [(G_delta * C_i^2)(y) - 2 f(y) (G_delta * C_i)(y) + f(y)^2]`,
/// which equals `lambda_i sum_x G_delta(x - y) |C_i(x) - f(y)|^2` because the
/// window has unit mass. Tiny negative roundoff is clamped to zero.
pub fn lif_fields(
    state: &LifState,
    f: &ImageGrid,
    window: &HeatMultiplier,
    lambda1: f64,
    lambda2: f64,
) -> Result<FidelityFields> {
    let d = f.channels();
    if state.c1.len() != d || state.c2.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            found: state.c1.len().min(state.c2.len()),
        });
    }
    window.shape().ensure_same(f.shape())?;
    let shape = f.shape();
    let mut f1 = vec![0.0; shape.len()];
    let mut f2 = vec![0.0; shape.len()];
    for ch in 0..d {
        let img = f.channel(ch);
        accumulate_local_residual(&mut f1, &state.c1[ch], &img, window, lambda1)?;
        accumulate_local_residual(&mut f2, &state.c2[ch], &img, window, lambda2)?;
    }
    let clamp = |v: Vec<f64>| ScalarField::from_vec_unchecked(shape, v.into_iter().map(|x| x.max(0.0)).collect());
    Ok(FidelityFields {
        f1: clamp(f1),
        f2: clamp(f2),
    })
}

fn accumulate_local_residual(
    acc: &mut [f64],
    fit: &ScalarField,
    img: &ScalarField,
    window: &HeatMultiplier,
    weight: f64,
) -> Result<()> {
    let (sq, lin) = window.apply_pair(&fit.map(|c| c * c), fit)?;
    for (i, a) in acc.iter_mut().enumerate() {
        let v = img.values()[i];
        *a += weight * (sq.values()[i] - 2.0 * v * lin.values()[i] + v * v);
    }
    Ok(())
}

/// Local intensity fitting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    /// Window time `delta > 0` of `G_delta`.
    pub delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Denominator guard.
    pub eps: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams {
            delta: 1e-4,
            lambda1: 1.0,
            lambda2: 1.0,
            eps: 1e-8,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("delta", self.delta)?;
        positive("lambda1", self.lambda1)?;
        positive("lambda2", self.lambda2)?;
        positive("eps", self.eps)
    }
}

/// Largest tolerated Nyquist response of the combined LIF window.
pub const LOBE_TOLERANCE: f64 = 1e-9;

/// Fidelity model selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    ChanVese,
    Lif(LifParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::ChanVese => "cv",
            Model::Lif(_) => "lif",
        }
    }
}

/// A model bound to a grid, with its kernels built once.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    model: Model,
    smooth: HeatMultiplier,
    window: Option<HeatMultiplier>,
}

impl PreparedModel {
    pub fn new(model: Model, tau1: f64, shape: Shape) -> Result<Self> {
        let smooth = HeatMultiplier::new(tau1, shape)?;
        let window = match model {
            Model::ChanVese => None,
            Model::Lif(p) => {
                p.validate()?;
                // The local fit is an energy minimizer only while G_delta * G_tau1
                // stays nonnegative.
                if nyquist_response(p.delta + tau1, shape) > LOBE_TOLERANCE {
                    warn!(
                        "delta + tau1 = {:.3e} is under-resolved on a {}x{} grid; \
                         local fits may not decrease the energy",
                        p.delta + tau1,
                        shape.rows(),
                        shape.cols()
                    );
                }
                Some(smooth.with_tau(p.delta)?)
            }
        };
        Ok(PreparedModel {
            model,
            smooth,
            window,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// The `G_tau1` multiplier.
    pub fn smoothing(&self) -> &HeatMultiplier {
        &self.smooth
    }

    /// Parameter update followed by the fidelity integrands.
    pub fn fields(&self, u: &BinaryMask, f: &ImageGrid) -> Result<FidelityFields> {
        match (&self.model, &self.window) {
            (Model::ChanVese, _) => cv_fields(&cv_update(u, f, &self.smooth)?, f),
            (Model::Lif(p), Some(window)) => {
                let state = lif_update(u, f, &self.smooth, window, p.eps)?;
                lif_fields(&state, f, window, p.lambda1, p.lambda2)
            }
            (Model::Lif(_), None) => unreachable!("LIF model prepared without a window"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(r: usize, c: usize) -> Shape {
        Shape::new(r, c).unwrap()
    }

    fn gray(s: Shape, f: impl Fn(usize, usize) -> f64) -> ImageGrid {
        ImageGrid::from_field(&ScalarField::from_fn(s, f))
    }

    #[test]
    fn cv_constant_image() {
        let s = shape(6, 6);
        let f = gray(s, |_, _| 0.6);
        let u = BinaryMask::from_fn(s, |r, c| r < 3 && c > 1);
        let st = cv_update(&u, &f, &HeatMultiplier::new(0.01, s).unwrap()).unwrap();
        assert!((st.c1[0] - 0.6).abs() < 1e-14);
        assert!((st.c2[0] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn cv_exact_region_means() {
        let s = shape(6, 8);
        let f = gray(s, |_, c| if c < 4 { 0.2 } else { 0.9 });
        let u = BinaryMask::from_fn(s, |_, c| c < 4);
        let st = cv_update(&u, &f, &HeatMultiplier::new(0.0, s).unwrap()).unwrap();
        assert!((st.c1[0] - 0.2).abs() < 1e-15);
        assert!((st.c2[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn cv_degenerate_masks() {
        let s = shape(4, 4);
        let f = gray(s, |_, _| 0.5);
        let k = HeatMultiplier::new(0.0, s).unwrap();
        assert!(matches!(
            cv_update(&BinaryMask::zeros(s), &f, &k),
            Err(Error::DegenerateRegion("foreground"))
        ));
        assert!(matches!(
            cv_update(&BinaryMask::ones(s), &f, &k),
            Err(Error::DegenerateRegion("background"))
        ));
    }

    #[test]
    fn cv_field_examples() {
        let s = shape(3, 3);
        let f = gray(s, |_, _| 0.5);
        let st = CvState {
            c1: vec![0.0],
            c2: vec![1.0],
        };
        let fields = cv_fields(&st, &f).unwrap();
        assert_eq!(fields.f1.get(1, 1), 0.25);
        assert_eq!(fields.f2.get(1, 1), 0.25);

        let st = CvState {
            c1: vec![0.5],
            c2: vec![1.0],
        };
        assert_eq!(cv_fields(&st, &f).unwrap().f1.get(0, 0), 0.0);

        let mut vals = vec![0.0; 27];
        vals[..3].copy_from_slice(&[0.1, 0.2, 0.3]);
        let rgb = ImageGrid::new(3, 3, 3, vals).unwrap();
        let st = CvState {
            c1: vec![0.0; 3],
            c2: vec![0.0; 3],
        };
        assert!((cv_fields(&st, &rgb).unwrap().f1.get(0, 0) - 0.14).abs() < 1e-15);
    }

    #[test]
    fn lif_constant_image() {
        let s = shape(8, 8);
        let f = gray(s, |_, _| 0.4);
        let u = BinaryMask::from_fn(s, |r, c| (2..6).contains(&r) && (1..5).contains(&c));
        let smooth = HeatMultiplier::new(0.005, s).unwrap();
        let window = HeatMultiplier::new(0.01, s).unwrap();
        let st = lif_update(&u, &f, &smooth, &window, 1e-12).unwrap();
        for v in st.c1[0].values().iter().chain(st.c2[0].values()) {
            assert!((v - 0.4).abs() < 1e-6, "{v}");
        }
        let fields = lif_fields(&st, &f, &window, 1.0, 1.0).unwrap();
        assert!(fields.f1.values().iter().all(|&v| v < 1e-10));
    }

    #[test]
    fn lif_full_mask_zero_background_fit() {
        let s = shape(6, 6);
        let f = gray(s, |r, c| ((r + c) % 3) as f64 / 2.0);
        let smooth = HeatMultiplier::new(0.01, s).unwrap();
        let window = HeatMultiplier::new(0.02, s).unwrap();
        let st = lif_update(&BinaryMask::ones(s), &f, &smooth, &window, 1e-8).unwrap();
        assert!(st.c2[0].values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lif_lambda_linear() {
        let s = shape(6, 6);
        let f = gray(s, |r, c| ((r * 5 + c) % 7) as f64 / 6.0);
        let u = BinaryMask::from_fn(s, |r, _| r < 3);
        let smooth = HeatMultiplier::new(0.01, s).unwrap();
        let window = HeatMultiplier::new(0.02, s).unwrap();
        let st = lif_update(&u, &f, &smooth, &window, 1e-8).unwrap();
        let a = lif_fields(&st, &f, &window, 0.7, 1.3).unwrap();
        let b = lif_fields(&st, &f, &window, 1.4, 2.6).unwrap();
        for i in 0..s.len() {
            assert_eq!(b.f1.values()[i], 2.0 * a.f1.values()[i]);
            assert_eq!(b.f2.values()[i], 2.0 * a.f2.values()[i]);
        }
    }

    #[test]
    fn lif_rejects_bad_eps() {
        let s = shape(4, 4);
        let f = gray(s, |_, _| 0.5);
        let k = HeatMultiplier::new(0.01, s).unwrap();
        assert!(lif_update(&BinaryMask::ones(s), &f, &k, &k, 0.0).is_err());
    }

    #[test]
    fn relabeling_swaps_roles() {
        let s = shape(8, 8);
        let f = gray(s, |r, c| ((r * 3 + c * 5) % 11) as f64 / 10.0);
        let u = BinaryMask::from_fn(s, |r, c| r * c % 5 < 2);
        let v = u.complement();
        let smooth = HeatMultiplier::new(0.004, s).unwrap();
        let window = HeatMultiplier::new(0.01, s).unwrap();

        let a = cv_update(&u, &f, &smooth).unwrap();
        let b = cv_update(&v, &f, &smooth).unwrap();
        assert_eq!((a.c1.clone(), a.c2.clone()), (b.c2.clone(), b.c1.clone()));
        let fa = cv_fields(&a, &f).unwrap();
        let fb = cv_fields(&b, &f).unwrap();
        assert_eq!((fa.f1, fa.f2), (fb.f2, fb.f1));

        let a = lif_update(&u, &f, &smooth, &window, 1e-8).unwrap();
        let b = lif_update(&v, &f, &smooth, &window, 1e-8).unwrap();
        assert_eq!(a.c1, b.c2);
        assert_eq!(a.c2, b.c1);
        let fa = lif_fields(&a, &f, &window, 1.0, 1.0).unwrap();
        let fb = lif_fields(&b, &f, &window, 1.0, 1.0).unwrap();
        assert_eq!((fa.f1, fa.f2), (fb.f2, fb.f1));
    }

    #[test]
    fn cv_means_minimize_smoothed_fidelity() {
        let s = shape(8, 8);
        let f = gray(s, |r, c| ((r * 7 + c * 3) % 13) as f64 / 12.0);
        let u = BinaryMask::from_fn(s, |r, c| (r + 2 * c) % 5 < 2);
        let smooth = HeatMultiplier::new(0.01, s).unwrap();
        let st = cv_update(&u, &f, &smooth).unwrap();
        let su = smooth.apply(&u.to_field()).unwrap();
        let energy = |c1: f64, c2: f64| -> f64 {
            (0..s.len())
                .map(|i| {
                    let v = f.values()[i];
                    let w = su.values()[i];
                    w * (c1 - v).powi(2) + (1.0 - w) * (c2 - v).powi(2)
                })
                .sum()
        };
        let base = energy(st.c1[0], st.c2[0]);
        for d in [-1e-3, 1e-3] {
            assert!(energy(st.c1[0] + d, st.c2[0]) >= base);
            assert!(energy(st.c1[0], st.c2[0] + d) >= base);
        }
    }
}
