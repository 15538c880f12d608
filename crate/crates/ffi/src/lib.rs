//! C ABI over `tsvf-core`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`TsvfStatus`] and writes results
//!   through out-pointers, which are left untouched on failure (except
//!   `out_len` on `TSVF_STATUS_BUFFER_TOO_SMALL`).
//! * On failure a message is available from [`tsvf_last_error_message`] on the
//!   same thread until the next failing call.
//! * Scenarios are opaque [`TsvfScenario`] handles created by
//!   `tsvf_scenario_builtin` / `tsvf_scenario_from_json` and released with
//!   [`tsvf_scenario_free`].
//! * Strings are NUL-terminated UTF-8.
//! * Panics never cross the boundary; they surface as `TSVF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tsvf_core::measure::{ensemble_pressure, pointer_conditional_mean, weak_pointer_amplitudes, GaussianPointer};
use tsvf_core::scenarios::{self, ScenarioSpec};
use tsvf_core::tsvf::{abl_probabilities, weak_value};
use tsvf_core::{Error, ErrorKind};

/// Result code of every fallible call. The usage / undefined / I/O codes
/// match the `tsvf` command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsvfStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// Invalid input: unknown name, malformed scenario, bad parameter.
    Usage = 2,
    /// Valid input, but the quantity is undefined (e.g. orthogonal pre- and
    /// post-selection).
    Undefined = 3,
    Io = 4,
    /// Output buffer too small; the required length was written to `out_len`.
    BufferTooSmall = 5,
    /// Internal error (a Rust panic was caught).
    Panic = 6,
}

/// Opaque scenario handle.
pub struct TsvfScenario {
    spec: ScenarioSpec,
}

/// Exact moments of the post-selected pointer.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TsvfPointerMoments {
    pub mean: f64,
    pub variance: f64,
    pub postselection_probability: f64,
}

/// Sampled summed pointer reading over an ensemble.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TsvfPointerStats {
    pub n_trials: u64,
    pub n_particles: u64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub standard_error: f64,
    pub analytic_mean: f64,
    pub analytic_postselection_probability: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure {
    status: TsvfStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Usage => TsvfStatus::Usage,
            ErrorKind::Undefined => TsvfStatus::Undefined,
            ErrorKind::Io => TsvfStatus::Io,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn null(what: &str) -> Self {
        Failure {
            status: TsvfStatus::NullPointer,
            message: format!("`{what}` is NULL"),
        }
    }

    fn usage(message: String) -> Self {
        Failure {
            status: TsvfStatus::Usage,
            message,
        }
    }
}

/// Run `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TsvfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TsvfStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {msg}"));
            TsvfStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::usage(format!("`{what}` is not valid UTF-8")))
}

unsafe fn scenario_ref<'a>(p: *const TsvfScenario) -> Result<&'a ScenarioSpec, Failure> {
    p.as_ref().map(|s| &s.spec).ok_or_else(|| Failure::null("scenario"))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    p.write(value);
    Ok(())
}

fn into_handle(spec: ScenarioSpec) -> *mut TsvfScenario {
    Box::into_raw(Box::new(TsvfScenario { spec }))
}

/// Message describing the most recent failure on this thread, or NULL if no
/// call has failed yet. The pointer stays valid until the next failing call
/// on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn tsvf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tsvf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a built-in scenario (`"three-box"` or `"singlet"`). `n_particles`
/// applies to three-box and must be at least 1.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsvf_scenario_builtin(
    name: *const c_char,
    n_particles: u32,
    out: *mut *mut TsvfScenario,
) -> TsvfStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let budget = scenarios::dim_budget_from_env()?;
        let spec = scenarios::builtin(name, n_particles as usize, budget)?.ok_or_else(|| Error::UnknownName {
            kind: "built-in scenario",
            name: name.to_string(),
        })?;
        out.write(into_handle(spec));
        Ok(())
    })
}

/// Parse a scenario document (`tsvf-scenario/1` JSON).
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsvf_scenario_from_json(json: *const c_char, out: *mut *mut TsvfScenario) -> TsvfStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let loaded = scenarios::load_scenario(text)?;
        out.write(into_handle(loaded.spec));
        Ok(())
    })
}

/// Release a scenario. NULL is ignored.
///
/// # Safety
/// `scenario` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn tsvf_scenario_free(scenario: *mut TsvfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Hilbert-space dimension of a scenario.
///
/// # Safety
/// `scenario` must be a live handle and `out_dim` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsvf_scenario_dim(scenario: *const TsvfScenario, out_dim: *mut usize) -> TsvfStatus {
    guard(|| {
        let spec = scenario_ref(scenario)?;
        write_out(out_dim, spec.dim, "out_dim")
    })
}

/// ABL distribution of a named observable: distinct eigenvalues ascending in
/// `values`, probabilities in `probabilities`. `*out_len` receives the number
/// of outcomes; if it exceeds `capacity` nothing else is written and
/// `TSVF_STATUS_BUFFER_TOO_SMALL` is returned. Buffers may be NULL when
/// `capacity` is 0.
///
/// # Safety
/// `values` and `probabilities` must each hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tsvf_abl(
    scenario: *const TsvfScenario,
    observable: *const c_char,
    values: *mut f64,
    probabilities: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> TsvfStatus {
    guard(|| {
        let spec = scenario_ref(scenario)?;
        let name = read_str(observable, "observable")?;
        if out_len.is_null() {
            return Err(Failure::null("out_len"));
        }
        let tsv = spec.two_state_vector()?;
        let dist = abl_probabilities(&tsv, &spec.observable(name)?)?;
        out_len.write(dist.len());
        if dist.len() > capacity {
            return Err(Failure {
                status: TsvfStatus::BufferTooSmall,
                message: format!("{} outcomes do not fit in capacity {capacity}", dist.len()),
            });
        }
        if values.is_null() || probabilities.is_null() {
            return Err(Failure::null("values/probabilities"));
        }
        for (i, o) in dist.iter().enumerate() {
            values.add(i).write(o.label[0]);
            probabilities.add(i).write(o.probability);
        }
        Ok(())
    })
}

/// Weak value `⟨post|A|pre⟩/⟨post|pre⟩` of a named observable.
///
/// # Safety
/// `out_re` and `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tsvf_weak_value(
    scenario: *const TsvfScenario,
    operator: *const c_char,
    out_re: *mut f64,
    out_im: *mut f64,
) -> TsvfStatus {
    guard(|| {
        let spec = scenario_ref(scenario)?;
        let name = read_str(operator, "operator")?;
        if out_re.is_null() || out_im.is_null() {
            return Err(Failure::null("out_re/out_im"));
        }
        let w = weak_value(&spec.two_state_vector()?, &spec.operator(name)?)?;
        out_re.write(w.re);
        out_im.write(w.im);
        Ok(())
    })
}

/// Exact conditional pointer moments for a Gaussian pointer of spread
/// `sigma` coupled to a named observable.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsvf_pointer_mean(
    scenario: *const TsvfScenario,
    observable: *const c_char,
    sigma: f64,
    out: *mut TsvfPointerMoments,
) -> TsvfStatus {
    guard(|| {
        let spec = scenario_ref(scenario)?;
        let name = read_str(observable, "observable")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let pointer = GaussianPointer::new(sigma)?;
        let mixture = weak_pointer_amplitudes(&spec.two_state_vector()?, &spec.observable(name)?, &pointer)?;
        let m = pointer_conditional_mean(&mixture)?;
        out.write(TsvfPointerMoments {
            mean: m.mean,
            variance: m.variance,
            postselection_probability: m.postselection_probability,
        });
        Ok(())
    })
}

/// Sample the summed pointer reading of `n_particles` copies of the
/// scenario's (single-particle) pre- and post-selected system, each weakly
/// coupled to its own pointer. Deterministic in `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsvf_ensemble_pressure(
    scenario: *const TsvfScenario,
    observable: *const c_char,
    n_particles: u64,
    sigma: f64,
    trials: u64,
    seed: u64,
    out: *mut TsvfPointerStats,
) -> TsvfStatus {
    guard(|| {
        let spec = scenario_ref(scenario)?;
        let name = read_str(observable, "observable")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let pointer = GaussianPointer::new(sigma)?;
        let s = ensemble_pressure(
            &spec.two_state_vector()?,
            &spec.observable(name)?,
            n_particles,
            &pointer,
            trials,
            seed,
        )?;
        out.write(TsvfPointerStats {
            n_trials: s.n_trials,
            n_particles: s.n_particles,
            sample_mean: s.sample_mean,
            sample_variance: s.sample_variance,
            standard_error: s.standard_error,
            analytic_mean: s.analytic_mean,
            analytic_postselection_probability: s.analytic_postselection_probability,
        });
        Ok(())
    })
}
