//! C ABI over `wbdoa`.
//!
//! All objects are opaque handles created by `*_new` functions and released
//! by the matching `*_free`. Every fallible call returns a [`WbdoaStatus`];
//! on failure `wbdoa_last_error` describes the most recent error on the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wbdoa::array::{ArrayGeometry, FilterConfig};
use wbdoa::harness::{ExperimentConfig, Profile};
use wbdoa::inference::{detect_order, OrderLoss};
use wbdoa::model::{collapsed_loglik_freq, log_posterior, prepare_freq_data, FreqData, ModelConfig, ModelState};
use wbdoa::sampler::{run_chain_freq, ChainTrace, SamplerConfig};
use wbdoa::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WbdoaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Shape = 4,
    Decomposition = 5,
    Io = 6,
    Panic = 7,
}

/// Model dimensions and priors.
pub struct WbdoaModel {
    model: ModelConfig,
    sampler: SamplerConfig,
}

/// Received data transformed for likelihood evaluation.
pub struct WbdoaData {
    data: FreqData,
}

/// Retained samples of one chain.
pub struct WbdoaTrace {
    trace: ChainTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> WbdoaStatus {
    match e {
        Error::Usage(_) => WbdoaStatus::InvalidArgument,
        Error::Config(_) | Error::Toml(_) | Error::Json(_) => WbdoaStatus::Config,
        Error::Shape(_) => WbdoaStatus::Shape,
        Error::Decomposition { .. } => WbdoaStatus::Decomposition,
        Error::Io(_) | Error::Csv(_) => WbdoaStatus::Io,
    }
}

struct Fail(WbdoaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(WbdoaStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WbdoaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WbdoaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            WbdoaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<T>(p: *mut T, what: &str, value: T) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wbdoa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Model with the underwater array defaults, `L = N + 1` and `k_max = M - 1`.
///
/// # Safety
/// `out_model` must be a valid pointer to write a handle to.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_model_new(
    num_sensors: usize,
    n_samples: usize,
    out_model: *mut *mut WbdoaModel,
) -> WbdoaStatus {
    guard(|| {
        let model = ModelConfig::new(ArrayGeometry::underwater(num_sensors), FilterConfig::new(n_samples));
        model.validate()?;
        let h = Box::new(WbdoaModel {
            model,
            sampler: SamplerConfig::default(),
        });
        out(out_model, "out_model", Box::into_raw(h))
    })
}

/// Model from a TOML or JSON experiment configuration merged over the desk
/// profile (`paper != 0` selects the paper profile).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_model_from_config(
    text: *const c_char,
    paper: i32,
    out_model: *mut *mut WbdoaModel,
) -> WbdoaStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Fail(WbdoaStatus::InvalidArgument, e.to_string()))?;
        let profile = if paper != 0 { Profile::Paper } else { Profile::Desk };
        let cfg = ExperimentConfig::from_text(profile, text)?;
        let h = Box::new(WbdoaModel {
            model: cfg.model_config(),
            sampler: cfg.sampler.clone(),
        });
        out(out_model, "out_model", Box::into_raw(h))
    })
}

/// # Safety
/// `model` must come from a `wbdoa_model_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_model_set_k_max(model: *mut WbdoaModel, k_max: usize) -> WbdoaStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let mut next = m.model.clone();
        next.k_max = k_max;
        next.validate()?;
        m.model = next;
        Ok(())
    })
}

/// Period `N′` of the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_model_period(model: *const WbdoaModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.period())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_model_free(model: *mut WbdoaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Prepare row-major `num_sensors × n_samples` data for `model`.
///
/// # Safety
/// `y` must point to `num_sensors * n_samples` doubles.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_data_new(
    model: *const WbdoaModel,
    y: *const f64,
    num_sensors: usize,
    n_samples: usize,
    out_data: *mut *mut WbdoaData,
) -> WbdoaStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let flat = slice(y, num_sensors * n_samples, "y")?;
        let channels: Vec<Vec<f64>> = if n_samples == 0 {
            vec![Vec::new(); num_sensors]
        } else {
            flat.chunks(n_samples).map(<[f64]>::to_vec).collect()
        };
        let data = prepare_freq_data(&channels, &m.model)?;
        out(out_data, "out_data", Box::into_raw(Box::new(WbdoaData { data })))
    })
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_data_free(data: *mut WbdoaData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

unsafe fn state_of(phis: *const f64, gammas: *const f64, k: usize) -> Result<ModelState, Fail> {
    let p = slice(phis, k, "phis")?;
    let g = slice(gammas, k, "gammas")?;
    Ok(ModelState::new(p.to_vec(), g.to_vec())?)
}

/// Collapsed log-likelihood (constants dropped) of `k` sources; `-inf` is a
/// valid result for numerically degenerate states.
///
/// # Safety
/// `phis` and `gammas` must each point to `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_loglik(
    model: *const WbdoaModel,
    data: *const WbdoaData,
    phis: *const f64,
    gammas: *const f64,
    k: usize,
    out_value: *mut f64,
) -> WbdoaStatus {
    guard(|| {
        let (m, d) = (deref(model, "model")?, deref(data, "data")?);
        let s = state_of(phis, gammas, k)?;
        out(out_value, "out_value", collapsed_loglik_freq(&d.data, &s, &m.model))
    })
}

/// Unnormalized log posterior of `k` sources.
///
/// # Safety
/// As for [`wbdoa_loglik`].
#[no_mangle]
pub unsafe extern "C" fn wbdoa_log_posterior(
    model: *const WbdoaModel,
    data: *const WbdoaData,
    phis: *const f64,
    gammas: *const f64,
    k: usize,
    out_value: *mut f64,
) -> WbdoaStatus {
    guard(|| {
        let (m, d) = (deref(model, "model")?, deref(data, "data")?);
        let s = state_of(phis, gammas, k)?;
        out(out_value, "out_value", log_posterior(&d.data, &s, &m.model))
    })
}

/// Run one chain from the empty model.
///
/// # Safety
/// Handles must be live and `out_trace` writable.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_run_chain(
    model: *const WbdoaModel,
    data: *const WbdoaData,
    n_burnin: usize,
    n_samples: usize,
    seed: u64,
    out_trace: *mut *mut WbdoaTrace,
) -> WbdoaStatus {
    guard(|| {
        let (m, d) = (deref(model, "model")?, deref(data, "data")?);
        let sampler = SamplerConfig {
            n_burnin,
            n_samples,
            seed,
            ..m.sampler.clone()
        };
        let trace = run_chain_freq(&d.data, &m.model, &sampler)?;
        out(out_trace, "out_trace", Box::into_raw(Box::new(WbdoaTrace { trace })))
    })
}

/// Number of retained samples, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_trace_len(trace: *const WbdoaTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// Copy the model order of every retained sample into `orders`, which must
/// hold `capacity ≥ wbdoa_trace_len(trace)` entries.
///
/// # Safety
/// `orders` must point to `capacity` writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_trace_orders(
    trace: *const WbdoaTrace,
    orders: *mut usize,
    capacity: usize,
) -> WbdoaStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let ks = t.trace.orders();
        if capacity < ks.len() {
            return Err(Fail(
                WbdoaStatus::InvalidArgument,
                format!("capacity {capacity} is below the trace length {}", ks.len()),
            ));
        }
        if ks.is_empty() {
            return Ok(());
        }
        if orders.is_null() {
            return Err(null("orders"));
        }
        ptr::copy_nonoverlapping(ks.as_ptr(), orders, ks.len());
        Ok(())
    })
}

/// Posterior order pmf over `0..=k_max` (written to `pmf`, `k_max + 1`
/// entries, may be null) and the median detection.
///
/// # Safety
/// `pmf` must be null or point to `k_max + 1` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_trace_detect(
    trace: *const WbdoaTrace,
    k_max: usize,
    pmf: *mut f64,
    out_k_hat: *mut usize,
) -> WbdoaStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let det = detect_order(&t.trace, k_max, OrderLoss::L1Median)?;
        if !pmf.is_null() {
            ptr::copy_nonoverlapping(det.posterior_pmf.as_ptr(), pmf, det.posterior_pmf.len());
        }
        out(out_k_hat, "out_k_hat", det.k_hat)
    })
}

/// Write the trace as JSON lines.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_trace_write_jsonl(trace: *const WbdoaTrace, path: *const c_char) -> WbdoaStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Fail(WbdoaStatus::InvalidArgument, e.to_string()))?;
        wbdoa::harness::io::write_trace(Path::new(p), &t.trace)?;
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wbdoa_trace_free(trace: *mut WbdoaTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wbdoa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
