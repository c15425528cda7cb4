//! C ABI over `l2d-core`.
//!
//! Every function returns an [`L2dStatus`] and writes its result through an
//! out-pointer. On failure the message is kept per thread and can be read
//! with [`l2d_last_error_message`]. Surrogate specs and instances are opaque
//! handles created by `*_parse` and released by the matching `*_free`.
//! Panics never cross the boundary; they surface as [`L2dStatus::Internal`].
//!
//! Labels are 0-based: classes are `0..classes` and expert `j` is label
//! `classes + j`. Score vectors have `classes + experts` entries.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use l2d_core::analysis::{self, HypothesisClassSpec};
use l2d_core::domain::{self, ExpertPanel, FiniteDistribution, InstanceDocument, LabelSpace};
use l2d_core::losses::{self, SurrogateSpec};
use l2d_core::Error;

/// Status code returned by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L2dStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// A length, label, score or cost was invalid.
    InvalidArgument = 2,
    /// A spec token or instance document could not be parsed.
    ParseError = 3,
    /// An argument lies outside the mathematical domain of the call.
    DomainError = 4,
    /// The request is well formed but not supported.
    Unsupported = 5,
    /// The output buffer is too small; the required size was reported.
    BufferTooSmall = 6,
    /// Numerical failure or a caught panic.
    Internal = 7,
}

/// Parsed surrogate loss.
pub struct L2dSpec {
    spec: SurrogateSpec,
}

/// Finite distribution together with its expert panel.
pub struct L2dInstance {
    space: LabelSpace,
    distribution: FiniteDistribution,
    panel: ExpertPanel,
}

/// Both sides of the consistency bound for one instance and score table.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct L2dBoundResult {
    /// Deferral estimation error plus the deferral minimizability gap.
    pub lhs: f64,
    /// Right-hand side (cost constants dropped when the transform is linear).
    pub rhs: f64,
    /// Right-hand side with the cost constants kept.
    pub rhs_with_constants: f64,
    pub surrogate_regret: f64,
    pub deferral_regret: f64,
    /// 1 when the inequality holds within tolerance, else 0.
    pub holds: i32,
}

/// Approximation error minus minimizability gap of the binary exponential loss.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct L2dExpGap {
    pub closed_form: f64,
    pub numeric: f64,
}

struct Failure {
    status: L2dStatus,
    message: String,
}

impl Failure {
    fn new(status: L2dStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Self::new(L2dStatus::NullPointer, format!("`{name}` is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::SpecParse { .. } | Error::Json(_) | Error::Config(_) => L2dStatus::ParseError,
            Error::Domain(_)
            | Error::InvalidDistribution(_)
            | Error::InvalidPanel(_)
            | Error::CostMode(_) => L2dStatus::DomainError,
            Error::Unsupported(_) => L2dStatus::Unsupported,
            Error::OptimizationFailure { .. } | Error::NonFiniteLoss { .. } | Error::Io(_) => {
                L2dStatus::Internal
            }
            _ => L2dStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> L2dStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => L2dStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("panic: {detail}"));
            L2dStatus::Internal
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn reference<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn write<T>(ptr: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(L2dStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

/// Message of the last failed call on this thread, or null if none failed.
///
/// The string stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn l2d_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a spec token such as `comp_sum:log` or `sum:rho(rho=2)`.
///
/// # Safety
/// `token` must be a NUL-terminated string and `out` a valid pointer.
/// The handle written to `out` must be released with [`l2d_spec_free`].
#[no_mangle]
pub unsafe extern "C" fn l2d_spec_parse(token: *const c_char, out: *mut *mut L2dSpec) -> L2dStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let spec: SurrogateSpec = text(token, "token")?.parse()?;
        out.write(Box::into_raw(Box::new(L2dSpec { spec })));
        Ok(())
    })
}

/// Releases a spec handle. Null is ignored.
///
/// # Safety
/// `spec` must come from [`l2d_spec_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn l2d_spec_free(spec: *mut L2dSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Writes the canonical token of `spec` as a NUL-terminated string.
///
/// `needed` receives the buffer size including the terminator. When
/// `capacity` is smaller, nothing is written to `buffer` and
/// [`L2dStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `buffer` must hold `capacity` bytes (it may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn l2d_spec_name(
    spec: *const L2dSpec,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> L2dStatus {
    guard(|| {
        let name = reference(spec, "spec")?.spec.to_string();
        let size = name.len() + 1;
        write(needed, size, "needed")?;
        if capacity < size {
            return Err(Failure::new(
                L2dStatus::BufferTooSmall,
                format!("name needs {size} bytes, buffer holds {capacity}"),
            ));
        }
        if buffer.is_null() {
            return Err(Failure::null("buffer"));
        }
        ptr::copy_nonoverlapping(name.as_ptr().cast::<c_char>(), buffer, name.len());
        buffer.add(name.len()).write(0);
        Ok(())
    })
}

/// Surrogate loss at scores `s` for class `y` and per-expert costs.
///
/// # Safety
/// `scores` must hold `scores_len` values, `costs` must hold `experts`
/// values and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2d_surrogate_loss(
    spec: *const L2dSpec,
    classes: usize,
    experts: usize,
    scores: *const f64,
    scores_len: usize,
    y: usize,
    costs: *const f64,
    out: *mut f64,
) -> L2dStatus {
    guard(|| {
        let spec = &reference(spec, "spec")?.spec;
        let space = LabelSpace::new(classes, experts)?;
        let s = slice(scores, scores_len, "scores")?;
        let c = slice(costs, experts, "costs")?;
        write(out, losses::surrogate_loss(spec, space, s, y, c)?, "out")
    })
}

/// Gradient of the surrogate loss in the scores, written to `gradient`.
///
/// # Safety
/// `scores` and `gradient` must each hold `scores_len` values and `costs`
/// must hold `experts` values.
#[no_mangle]
pub unsafe extern "C" fn l2d_surrogate_gradient(
    spec: *const L2dSpec,
    classes: usize,
    experts: usize,
    scores: *const f64,
    scores_len: usize,
    y: usize,
    costs: *const f64,
    gradient: *mut f64,
) -> L2dStatus {
    guard(|| {
        let spec = &reference(spec, "spec")?.spec;
        let space = LabelSpace::new(classes, experts)?;
        let s = slice(scores, scores_len, "scores")?;
        let c = slice(costs, experts, "costs")?;
        let g = losses::surrogate_gradient(spec, space, s, y, c)?;
        slice_mut(gradient, scores_len, "gradient")?.copy_from_slice(&g);
        Ok(())
    })
}

/// Deferral loss: 0/1 error when predicting, the expert's cost when deferring.
///
/// # Safety
/// `scores` must hold `scores_len` values, `costs` must hold `experts`
/// values and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2d_deferral_loss(
    classes: usize,
    experts: usize,
    scores: *const f64,
    scores_len: usize,
    y: usize,
    costs: *const f64,
    out: *mut f64,
) -> L2dStatus {
    guard(|| {
        let space = LabelSpace::new(classes, experts)?;
        let s = slice(scores, scores_len, "scores")?;
        let c = slice(costs, experts, "costs")?;
        write(out, losses::deferral_loss(space, s, y, c)?, "out")
    })
}

/// Predicted augmented label: the first index of the largest score.
///
/// # Safety
/// `scores` must hold `scores_len` values and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2d_predict_label(
    scores: *const f64,
    scores_len: usize,
    out: *mut usize,
) -> L2dStatus {
    guard(|| {
        let s = slice(scores, scores_len, "scores")?;
        write(out, domain::predict_label(s)?, "out")
    })
}

/// Parses an instance document (JSON with `n`, `n_e`, `points`, `experts`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer. The
/// handle written to `out` must be released with [`l2d_instance_free`].
#[no_mangle]
pub unsafe extern "C" fn l2d_instance_parse(
    json: *const c_char,
    out: *mut *mut L2dInstance,
) -> L2dStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let doc = InstanceDocument::from_json(text(json, "json")?)?;
        let (space, distribution, panel) = doc.to_parts()?;
        out.write(Box::into_raw(Box::new(L2dInstance {
            space,
            distribution,
            panel,
        })));
        Ok(())
    })
}

/// Releases an instance handle. Null is ignored.
///
/// # Safety
/// `instance` must come from [`l2d_instance_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn l2d_instance_free(instance: *mut L2dInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of classes, experts and points of an instance.
///
/// # Safety
/// `instance` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn l2d_instance_shape(
    instance: *const L2dInstance,
    classes: *mut usize,
    experts: *mut usize,
    points: *mut usize,
) -> L2dStatus {
    guard(|| {
        let inst = reference(instance, "instance")?;
        write(classes, inst.space.classes(), "classes")?;
        write(experts, inst.space.experts(), "experts")?;
        write(points, inst.distribution.len(), "points")
    })
}

/// Unnormalized q-vector of point `point`: class conditionals followed by
/// one minus each expert's expected cost.
///
/// # Safety
/// `out` must hold `out_len` values; `out_len` must equal `classes + experts`.
#[no_mangle]
pub unsafe extern "C" fn l2d_instance_q_vector(
    instance: *const L2dInstance,
    point: usize,
    out: *mut f64,
    out_len: usize,
) -> L2dStatus {
    guard(|| {
        let inst = reference(instance, "instance")?;
        let size = inst.space.size();
        if out_len != size {
            return Err(Failure::new(
                L2dStatus::InvalidArgument,
                format!("q-vector has {size} entries, buffer holds {out_len}"),
            ));
        }
        let q = domain::build_q_vector(&inst.distribution, &inst.panel, point)?;
        slice_mut(out, out_len, "out")?.copy_from_slice(&q.q);
        Ok(())
    })
}

/// Evaluates both sides of the consistency bound over all measurable scorers.
///
/// `scores` is row-major with one row of `classes + experts` values per
/// point, in document order.
///
/// # Safety
/// `scores` must hold `scores_len` values and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2d_verify_bound(
    spec: *const L2dSpec,
    instance: *const L2dInstance,
    scores: *const f64,
    scores_len: usize,
    out: *mut L2dBoundResult,
) -> L2dStatus {
    guard(|| {
        let spec = &reference(spec, "spec")?.spec;
        let inst = reference(instance, "instance")?;
        let width = inst.space.size();
        let expected = width * inst.distribution.len();
        if scores_len != expected {
            return Err(Failure::new(
                L2dStatus::InvalidArgument,
                format!("score table needs {expected} values, got {scores_len}"),
            ));
        }
        let table: Vec<Vec<f64>> = slice(scores, scores_len, "scores")?
            .chunks(width)
            .map(<[f64]>::to_vec)
            .collect();
        let record = analysis::verify_bound(
            spec,
            &inst.distribution,
            &inst.panel,
            &table,
            &HypothesisClassSpec::AllMeasurable,
        )?;
        let result = L2dBoundResult {
            lhs: record.lhs,
            rhs: record.rhs,
            rhs_with_constants: record.rhs_with_constants,
            surrogate_regret: record.surrogate_regret,
            deferral_regret: record.deferral_regret,
            holds: i32::from(record.holds),
        };
        write(out, result, "out")
    })
}

/// Binary exponential gap at conditional `eta` for scores bounded by `lambda`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn l2d_binary_exp_gap(eta: f64, lambda: f64, out: *mut L2dExpGap) -> L2dStatus {
    guard(|| {
        let gap = analysis::binary_exp_gap(eta, lambda)?;
        write(
            out,
            L2dExpGap {
                closed_form: gap.closed_form,
                numeric: gap.numeric,
            },
            "out",
        )
    })
}
