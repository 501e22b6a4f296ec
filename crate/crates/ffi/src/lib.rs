//! C interface to `tpictm`.
//!
//! Every function returns a [`TpStatus`]; on failure the message is kept in a
//! thread-local slot readable through [`tp_last_error_message`]. Handles are
//! opaque and must be released with the matching `*_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tpictm::models::{LifParams, Model};
use tpictm::solver::{self, IterationRecord, Outcome, SolverParams, Termination};
use tpictm::topology::{component_counts, is_simple, ConnectivityPair, PixelCoord};
use tpictm::{io, BinaryMask, Error, ImageGrid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Degenerate = 4,
    Io = 5,
    Decode = 6,
    TopologyViolation = 7,
    EnergyIncrease = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpModel {
    ChanVese = 0,
    Lif = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpTermination {
    Converged = 0,
    MaxIterations = 1,
    Collapsed = 2,
}

/// Solver and model settings. Fill with [`tp_solver_params_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TpSolverParams {
    pub tau1: f64,
    pub tau2: f64,
    pub lambda: f64,
    pub tol: usize,
    pub max_iter: usize,
    /// Foreground connectivity, 4 or 8; the background uses the other one.
    pub fg_connectivity: u32,
    pub topology: bool,
    pub model: TpModel,
    /// LIF settings, ignored for Chan-Vese.
    pub delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eps: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TpTraceRecord {
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

pub struct TpImage(ImageGrid);
pub struct TpMask(BinaryMask);
pub struct TpResult(Outcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> TpStatus {
    match err {
        Error::ShapeMismatch { .. } => TpStatus::ShapeMismatch,
        Error::DegenerateRegion(_) => TpStatus::Degenerate,
        Error::Io { .. } | Error::Csv(_) => TpStatus::Io,
        Error::Image { .. } | Error::UnsupportedImage { .. } => TpStatus::Decode,
        Error::TopologyViolation { .. } => TpStatus::TopologyViolation,
        Error::EnergyIncrease { .. } => TpStatus::EnergyIncrease,
        _ => TpStatus::InvalidArgument,
    }
}

struct Failure(TpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TpStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(TpStatus::InvalidArgument, msg.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))
}

fn pair_of(fg: u32) -> Result<ConnectivityPair, Failure> {
    match fg {
        4 => Ok(ConnectivityPair::FG4_BG8),
        8 => Ok(ConnectivityPair::FG8_BG4),
        n => Err(invalid(format!("foreground connectivity must be 4 or 8, got {n}"))),
    }
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn tp_status_string(status: TpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TpStatus::Ok => c"ok",
        TpStatus::NullPointer => c"null pointer",
        TpStatus::InvalidArgument => c"invalid argument",
        TpStatus::ShapeMismatch => c"shape mismatch",
        TpStatus::Degenerate => c"degenerate region",
        TpStatus::Io => c"i/o error",
        TpStatus::Decode => c"image decode error",
        TpStatus::TopologyViolation => c"topology violation",
        TpStatus::EnergyIncrease => c"energy increase",
        TpStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub unsafe extern "C" fn tp_solver_params_default(params: *mut TpSolverParams) -> TpStatus {
    guard(|| {
        let d = SolverParams::default();
        let l = LifParams::default();
        *out(params, "params")? = TpSolverParams {
            tau1: d.tau1,
            tau2: d.tau2,
            lambda: d.lambda,
            tol: d.tol,
            max_iter: d.max_iter,
            fg_connectivity: 4,
            topology: d.topology,
            model: TpModel::ChanVese,
            delta: l.delta,
            lambda1: l.lambda1,
            lambda2: l.lambda2,
            eps: l.eps,
        };
        Ok(())
    })
}

/// Builds an image from `rows * cols * channels` interleaved values in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn tp_image_new(
    rows: usize,
    cols: usize,
    channels: usize,
    values: *const f64,
    image: *mut *mut TpImage,
) -> TpStatus {
    guard(|| {
        let image = out(image, "image")?;
        if values.is_null() {
            return Err(null("values"));
        }
        let len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| invalid("image size overflows"))?;
        let data = std::slice::from_raw_parts(values, len).to_vec();
        *image = boxed(TpImage(ImageGrid::new(rows, cols, channels, data)?));
        Ok(())
    })
}

/// Loads a PNG or PNM image, rescaled to [0, 1].
#[no_mangle]
pub unsafe extern "C" fn tp_image_load(file: *const c_char, image: *mut *mut TpImage) -> TpStatus {
    guard(|| {
        let image = out(image, "image")?;
        *image = boxed(TpImage(io::load_image(path(file)?)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_image_shape(
    image: *const TpImage,
    rows: *mut usize,
    cols: *mut usize,
    channels: *mut usize,
) -> TpStatus {
    guard(|| {
        let img = &deref(image, "image")?.0;
        *out(rows, "rows")? = img.rows();
        *out(cols, "cols")? = img.cols();
        *out(channels, "channels")? = img.channels();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_image_free(image: *mut TpImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Builds a mask from `rows * cols` bytes, each 0 or 1.
#[no_mangle]
pub unsafe extern "C" fn tp_mask_new(
    rows: usize,
    cols: usize,
    bits: *const u8,
    mask: *mut *mut TpMask,
) -> TpStatus {
    guard(|| {
        let mask = out(mask, "mask")?;
        if bits.is_null() {
            return Err(null("bits"));
        }
        let len = rows.checked_mul(cols).ok_or_else(|| invalid("mask size overflows"))?;
        let bytes = std::slice::from_raw_parts(bits, len);
        *mask = boxed(TpMask(BinaryMask::from_bytes(rows, cols, bytes)?));
        Ok(())
    })
}

/// Loads a mask image; pixels at or above half intensity are foreground.
#[no_mangle]
pub unsafe extern "C" fn tp_mask_load(file: *const c_char, mask: *mut *mut TpMask) -> TpStatus {
    guard(|| {
        let mask = out(mask, "mask")?;
        *mask = boxed(TpMask(io::load_mask(path(file)?)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_mask_save(mask: *const TpMask, file: *const c_char) -> TpStatus {
    guard(|| {
        io::save_mask(&deref(mask, "mask")?.0, path(file)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_mask_shape(mask: *const TpMask, rows: *mut usize, cols: *mut usize) -> TpStatus {
    guard(|| {
        let m = &deref(mask, "mask")?.0;
        *out(rows, "rows")? = m.rows();
        *out(cols, "cols")? = m.cols();
        Ok(())
    })
}

/// Copies the mask into `bits` as 0/1 bytes; `len` must equal `rows * cols`.
#[no_mangle]
pub unsafe extern "C" fn tp_mask_copy(mask: *const TpMask, bits: *mut u8, len: usize) -> TpStatus {
    guard(|| {
        let m = &deref(mask, "mask")?.0;
        if bits.is_null() {
            return Err(null("bits"));
        }
        if len != m.bits().len() {
            return Err(Error::LengthMismatch {
                expected: m.bits().len(),
                found: len,
            }
            .into());
        }
        let dst = std::slice::from_raw_parts_mut(bits, len);
        for (d, &b) in dst.iter_mut().zip(m.bits()) {
            *d = b as u8;
        }
        Ok(())
    })
}

/// Periodic component counts of both phases.
#[no_mangle]
pub unsafe extern "C" fn tp_mask_component_counts(
    mask: *const TpMask,
    fg_connectivity: u32,
    fg: *mut usize,
    bg: *mut usize,
) -> TpStatus {
    guard(|| {
        let m = &deref(mask, "mask")?.0;
        let (a, b) = component_counts(m, pair_of(fg_connectivity)?);
        *out(fg, "fg")? = a;
        *out(bg, "bg")? = b;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_mask_is_simple(
    mask: *const TpMask,
    row: usize,
    col: usize,
    fg_connectivity: u32,
    simple: *mut bool,
) -> TpStatus {
    guard(|| {
        let m = &deref(mask, "mask")?.0;
        if row >= m.rows() || col >= m.cols() {
            return Err(invalid(format!(
                "pixel ({row}, {col}) outside {}x{} mask",
                m.rows(),
                m.cols()
            )));
        }
        *out(simple, "simple")? = is_simple(PixelCoord::new(row, col), m, pair_of(fg_connectivity)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_mask_free(mask: *mut TpMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

fn convert(p: &TpSolverParams) -> Result<(Model, SolverParams), Failure> {
    let model = match p.model {
        TpModel::ChanVese => Model::ChanVese,
        TpModel::Lif => Model::Lif(LifParams {
            delta: p.delta,
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            eps: p.eps,
        }),
    };
    let params = SolverParams {
        tau1: p.tau1,
        tau2: p.tau2,
        lambda: p.lambda,
        tol: p.tol,
        max_iter: p.max_iter,
        pair: pair_of(p.fg_connectivity)?,
        topology: p.topology,
    };
    Ok((model, params))
}

/// Segments `image` starting from `init`. Reaching `max_iter` is not an
/// error; check [`tp_result_termination`].
#[no_mangle]
pub unsafe extern "C" fn tp_segment(
    image: *const TpImage,
    init: *const TpMask,
    params: *const TpSolverParams,
    result: *mut *mut TpResult,
) -> TpStatus {
    guard(|| {
        let image = &deref(image, "image")?.0;
        let init = &deref(init, "init")?.0;
        let (model, params) = convert(deref(params, "params")?)?;
        let result = out(result, "result")?;
        *result = boxed(TpResult(solver::run(image, init, &model, &params)?));
        Ok(())
    })
}

/// Copies the final mask into a new handle.
#[no_mangle]
pub unsafe extern "C" fn tp_result_mask(result: *const TpResult, mask: *mut *mut TpMask) -> TpStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        *out(mask, "mask")? = boxed(TpMask(r.mask.clone()));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_result_termination(
    result: *const TpResult,
    termination: *mut TpTermination,
) -> TpStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        *out(termination, "termination")? = match r.termination {
            Termination::Converged => TpTermination::Converged,
            Termination::MaxIterations => TpTermination::MaxIterations,
            Termination::Collapsed => TpTermination::Collapsed,
        };
        Ok(())
    })
}

/// Number of trace records, one per iteration.
#[no_mangle]
pub unsafe extern "C" fn tp_result_iterations(result: *const TpResult, count: *mut usize) -> TpStatus {
    guard(|| {
        *out(count, "count")? = deref(result, "result")?.0.iterations();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_result_record(
    result: *const TpResult,
    index: usize,
    record: *mut TpTraceRecord,
) -> TpStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        let rec: &IterationRecord = r
            .trace
            .records
            .get(index)
            .ok_or_else(|| invalid(format!("record {index} out of range ({} records)", r.iterations())))?;
        *out(record, "record")? = TpTraceRecord {
            iter: rec.iter,
            total: rec.total,
            fidelity: rec.fidelity,
            perimeter: rec.perimeter,
            predicted_flips: rec.predicted_flips,
            accepted_flips: rec.accepted_flips,
            rejected_flips: rec.rejected_flips,
            fg_components: rec.fg_components,
            bg_components: rec.bg_components,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tp_result_free(result: *mut TpResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
