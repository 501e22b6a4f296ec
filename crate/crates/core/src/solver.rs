//! Topology-preserving iterative convolution-thresholding.
//!
//! Each iteration fixes the mask `u^k`, updates the model parameters, forms
//! the linearized score
//!
//! ```text
//! phi = G_tau1 * (F1 - F2) + lambda sqrt(pi / tau2) G_tau2 * (1 - 2 u)
//! ```
//!
//! and proposes to add background pixels with `phi < 0` and remove foreground
//! pixels with `phi > 0`. With topology preservation on, the proposals are
//! swept in order of decreasing `|phi|` (additions first, then removals) and a
//! pixel is flipped only if it is simple in the mask as modified so far.

use std::f64::consts::PI;

use log::debug;
use serde::Serialize;

use crate::convolution::{perimeter_with, HeatMultiplier};
use crate::error::{Error, Result};
use crate::grid::{mask_flip_count, BinaryMask, ImageGrid, ScalarField, Shape};
use crate::models::{FidelityFields, Model, PreparedModel};
use crate::topology::{component_counts, is_simple, ConnectivityPair, PixelCoord};

/// Relative slack on the per-iteration energy decrease check.
pub const ENERGY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Fidelity smoothing time; 0 disables smoothing.
    pub tau1: f64,
    /// Perimeter kernel time.
    pub tau2: f64,
    /// Regularization weight.
    pub lambda: f64,
    /// Stop once an iteration flips at most this many pixels.
    pub tol: usize,
    pub max_iter: usize,
    pub pair: ConnectivityPair,
    /// `false` runs plain threshold dynamics.
    pub topology: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tau1: 1e-3,
            tau2: 1e-3,
            lambda: 1e-2,
            tol: 0,
            max_iter: 500,
            pair: ConnectivityPair::FG4_BG8,
            topology: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.tau1 >= 0.0 && self.tau1.is_finite()) {
            return bad("tau1", format!("must be >= 0, got {}", self.tau1));
        }
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) {
            return bad("tau2", format!("must be > 0, got {}", self.tau2));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", format!("must be > 0, got {}", self.lambda));
        }
        if self.max_iter == 0 {
            return bad("max-iter", "must be at least 1".into());
        }
        Ok(())
    }
}

/// Kernels used by the score and energy evaluations.
#[derive(Debug, Clone)]
pub struct SolverKernels {
    pub smooth: HeatMultiplier,
    pub perimeter: HeatMultiplier,
}

impl SolverKernels {
    pub fn new(params: &SolverParams, shape: Shape) -> Result<Self> {
        let smooth = HeatMultiplier::new(params.tau1, shape)?;
        let perimeter = smooth.with_tau(params.tau2)?;
        Ok(SolverKernels { smooth, perimeter })
    }

    fn from_model(model: &PreparedModel, params: &SolverParams) -> Result<Self> {
        let smooth = model.smoothing().clone();
        let perimeter = smooth.with_tau(params.tau2)?;
        Ok(SolverKernels { smooth, perimeter })
    }
}

/// `G_tau1 * (F1 - F2) + lambda sqrt(pi/tau2) G_tau2 * (1 - 2u)`.
pub fn compute_phi(
    fields: &FidelityFields,
    u: &BinaryMask,
    params: &SolverParams,
    kernels: &SolverKernels,
) -> Result<ScalarField> {
    let diff = fields.f1.zip_map(&fields.f2, |a, b| a - b)?;
    let data = kernels.smooth.apply(&diff)?;
    let signed = ScalarField::from_fn(u.shape(), |r, c| if u.get(r, c) { -1.0 } else { 1.0 });
    let reg = kernels.perimeter.apply(&signed)?;
    let weight = params.lambda * (PI / params.tau2).sqrt();
    data.zip_map(&reg, |d, g| d + weight * g)
}

/// Pointwise indicator of `phi <= 0`.
pub fn threshold_predict(phi: &ScalarField) -> BinaryMask {
    BinaryMask::from_fn(phi.shape(), |r, c| phi.get(r, c) <= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub pixel: PixelCoord,
    pub score: f64,
}

/// Pixels proposed for flipping, in sweep order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateList {
    pub items: Vec<Candidate>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Candidate> {
        self.items.iter()
    }
}

/// Splits the proposals into additions (`phi < 0`, `u = 0`, ascending) and
/// removals (`phi > 0`, `u = 1`, descending). Equal scores keep row-major
/// order.
pub fn build_candidates(phi: &ScalarField, u: &BinaryMask) -> Result<(CandidateList, CandidateList)> {
    phi.shape().ensure_same(u.shape())?;
    let shape = u.shape();
    let mut add = Vec::new();
    let mut remove = Vec::new();
    for (i, (&score, &inside)) in phi.values().iter().zip(u.bits()).enumerate() {
        let (row, col) = shape.coords(i);
        let cand = Candidate {
            pixel: PixelCoord::new(row, col),
            score,
        };
        if !inside && score < 0.0 {
            add.push(cand);
        } else if inside && score > 0.0 {
            remove.push(cand);
        }
    }
    add.sort_by(|a, b| a.score.total_cmp(&b.score));
    remove.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok((CandidateList { items: add }, CandidateList { items: remove }))
}

/// Result of the correction sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub mask: BinaryMask,
    pub accepted: usize,
    pub rejected: usize,
}

fn check_candidates(u: &BinaryMask, list: &CandidateList, expected: bool) -> Result<()> {
    for c in list.iter() {
        let PixelCoord { row, col } = c.pixel;
        if row >= u.rows() || col >= u.cols() || u.get(row, col) != expected {
            return Err(Error::InconsistentCandidate { row, col });
        }
    }
    Ok(())
}

/// Sequential sweep: every addition, then every removal, each flipped only
/// if simple in the mask as updated so far.
pub fn topology_correct(
    u_prev: &BinaryMask,
    add: &CandidateList,
    remove: &CandidateList,
    pair: ConnectivityPair,
) -> Result<Correction> {
    check_candidates(u_prev, add, false)?;
    check_candidates(u_prev, remove, true)?;
    let mut mask = u_prev.clone();
    let (mut accepted, mut rejected) = (0, 0);
    for (list, value) in [(add, true), (remove, false)] {
        for c in list.iter() {
            // A pixel listed twice is no longer in its original phase.
            if mask.get(c.pixel.row, c.pixel.col) == value {
                continue;
            }
            if is_simple(c.pixel, &mask, pair) {
                mask.set(c.pixel.row, c.pixel.col, value);
                accepted += 1;
            } else {
                rejected += 1;
            }
        }
    }
    Ok(Correction {
        mask,
        accepted,
        rejected,
    })
}

fn apply_all(u_prev: &BinaryMask, add: &CandidateList, remove: &CandidateList) -> BinaryMask {
    let mut mask = u_prev.clone();
    for c in add.iter() {
        mask.set(c.pixel.row, c.pixel.col, true);
    }
    for c in remove.iter() {
        mask.set(c.pixel.row, c.pixel.col, false);
    }
    mask
}

/// Energy split into fidelity and perimeter parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub total: f64,
    pub fidelity: f64,
    pub perimeter: f64,
}

/// `sum [u G_tau1*F1 + (1-u) G_tau1*F2] h^2 + lambda sqrt(pi/tau2) sum u G_tau2*(1-u) h^2`.
pub fn energy(
    u: &BinaryMask,
    fields: &FidelityFields,
    params: &SolverParams,
    kernels: &SolverKernels,
) -> Result<Energy> {
    u.shape().ensure_same(fields.f1.shape())?;
    let (s1, s2) = kernels.smooth.apply_pair(&fields.f1, &fields.f2)?;
    let fidelity: f64 = u
        .bits()
        .iter()
        .zip(s1.values().iter().zip(s2.values()))
        .map(|(&b, (&a, &c))| if b { a } else { c })
        .sum::<f64>()
        * u.shape().cell_area();
    let perimeter = params.lambda * perimeter_with(u, &kernels.perimeter)?;
    Ok(Energy {
        total: fidelity + perimeter,
        fidelity,
        perimeter,
    })
}

/// One row of the energy trace. `total`, `fidelity` and `perimeter` are
/// evaluated at `(u^k, Theta^k)`; flip counts describe the step to `u^{k+1}`
/// and component counts are those of `u^{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub total: f64,
    pub fidelity: f64,
    pub perimeter: f64,
    pub predicted_flips: usize,
    pub accepted_flips: usize,
    pub rejected_flips: usize,
    pub fg_components: usize,
    pub bg_components: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub records: Vec<IterationRecord>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Whether consecutive totals never increase beyond `slack` relative.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| !exceeds(w[0].total, w[1].total, slack))
    }
}

fn exceeds(previous: f64, current: f64, slack: f64) -> bool {
    current > previous + slack * previous.abs().max(current.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// An iteration flipped at most `tol` pixels.
    Converged,
    /// `max_iter` iterations ran without converging.
    MaxIterations,
    /// Without topology preservation the mask lost one of its phases.
    Collapsed,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub mask: BinaryMask,
    pub trace: EnergyTrace,
    pub termination: Termination,
}

impl Outcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Runs the solver to convergence or `max_iter`.
pub fn run(f: &ImageGrid, u0: &BinaryMask, model: &Model, params: &SolverParams) -> Result<Outcome> {
    run_observed(f, u0, model, params, |_, _| {})
}

/// Like [`run`], calling `observer` after every iteration with the record and
/// the new mask.
pub fn run_observed(
    f: &ImageGrid,
    u0: &BinaryMask,
    model: &Model,
    params: &SolverParams,
    mut observer: impl FnMut(&IterationRecord, &BinaryMask),
) -> Result<Outcome> {
    params.validate()?;
    f.shape().ensure_same(u0.shape())?;
    if u0.count_ones() == 0 {
        return Err(Error::DegenerateRegion("foreground"));
    }
    if !u0.is_two_phase() {
        return Err(Error::DegenerateRegion("background"));
    }
    let prepared = PreparedModel::new(*model, params.tau1, f.shape())?;
    let kernels = SolverKernels::from_model(&prepared, params)?;

    let initial_counts = component_counts(u0, params.pair);
    let mut u = u0.clone();
    let mut trace = EnergyTrace::default();
    let mut termination = Termination::MaxIterations;

    for k in 0..params.max_iter {
        let fields = prepared.fields(&u, f)?;
        let e = energy(&u, &fields, params, &kernels)?;
        if let Some(prev) = trace.last() {
            if exceeds(prev.total, e.total, ENERGY_SLACK) {
                return Err(Error::EnergyIncrease {
                    iteration: k,
                    previous: prev.total,
                    current: e.total,
                });
            }
        }

        let phi = compute_phi(&fields, &u, params, &kernels)?;
        let (add, remove) = build_candidates(&phi, &u)?;
        let predicted = add.len() + remove.len();
        let (next, accepted, rejected) = if params.topology {
            let c = topology_correct(&u, &add, &remove, params.pair)?;
            (c.mask, c.accepted, c.rejected)
        } else {
            (apply_all(&u, &add, &remove), predicted, 0)
        };

        let (fg, bg) = component_counts(&next, params.pair);
        if params.topology && (fg, bg) != initial_counts {
            return Err(Error::TopologyViolation {
                iteration: k,
                fg_before: initial_counts.0,
                fg_after: fg,
                bg_before: initial_counts.1,
                bg_after: bg,
            });
        }

        let record = IterationRecord {
            iter: k,
            total: e.total,
            fidelity: e.fidelity,
            perimeter: e.perimeter,
            predicted_flips: predicted,
            accepted_flips: accepted,
            rejected_flips: rejected,
            fg_components: fg,
            bg_components: bg,
        };
        debug!(
            "iter {k}: energy {:.6e} predicted {predicted} accepted {accepted} rejected {rejected}",
            e.total
        );
        let flips = mask_flip_count(&u, &next)?;
        trace.records.push(record);
        observer(&record, &next);
        u = next;

        if flips <= params.tol {
            termination = Termination::Converged;
            break;
        }
        if !u.is_two_phase() {
            termination = Termination::Collapsed;
            break;
        }
    }

    Ok(Outcome {
        mask: u,
        trace,
        termination,
    })
}
