//! C ABI for the reconstruction library: opaque handles, integer status
//! codes, and a thread-local last-error message. The header is generated by
//! cbindgen at build time (see `include/dynrecon.h`).
//!
//! Usage pattern from C:
//!
//! ```c
//! DrProblem *problem = NULL;
//! if (dr_problem_default(32, 16, 8, 0.01, 1, &problem) != DR_OK) { ... }
//! DrResult *result = NULL;
//! if (dr_reconstruct_ias(problem, 1e-8, 0.1, 10, 50, &result) != DR_OK) { ... }
//! double ssim = dr_result_ssim(result);
//! dr_result_free(result);
//! dr_problem_free(problem);
//! ```

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dynrecon::harness::config::{ExperimentConfig, SolverKind};
use dynrecon::harness::run::{assemble, reconstruct, score, ssim_params, Problem};
use dynrecon::harness::HarnessError;
use dynrecon::image::DynamicImage;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &HarnessError) -> DrStatus {
    match err {
        HarnessError::Config(_) => DrStatus::InvalidArgument,
        _ => DrStatus::SolverFailure,
    }
}

/// An assembled inverse problem (forward model, data, dictionary, mask).
pub struct DrProblem {
    config: ExperimentConfig,
    problem: Problem,
}

/// A finished reconstruction with its quality scores.
pub struct DrResult {
    stack: DynamicImage<f64>,
    ssim: f64,
    nrmse: f64,
    outer_iters: usize,
}

fn guarded<F: FnOnce() -> DrStatus>(f: F) -> DrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DrStatus::Panic
        }
    }
}

fn build_problem(config: ExperimentConfig, out: *mut *mut DrProblem) -> DrStatus {
    if let Err(e) = config.validate() {
        set_error(&e.to_string());
        return status_of(&e);
    }
    match assemble(&config) {
        Ok(problem) => {
            let handle = Box::new(DrProblem { config, problem });
            unsafe { *out = Box::into_raw(handle) };
            DrStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Build a problem from a complete experiment configuration in TOML form.
///
/// # Safety
/// `toml_text` must be a valid NUL-terminated string and `out` a valid
/// pointer slot.
#[no_mangle]
pub unsafe extern "C" fn dr_problem_from_config(
    toml_text: *const c_char,
    out: *mut *mut DrProblem,
) -> DrStatus {
    if toml_text.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    guarded(|| {
        let text = match unsafe { CStr::from_ptr(toml_text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("config is not valid UTF-8");
                return DrStatus::InvalidArgument;
            }
        };
        let config: ExperimentConfig = match toml::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&e.to_string());
                return DrStatus::InvalidArgument;
            }
        };
        build_problem(config, out)
    })
}

/// Build the default moving-block tomography problem: `image_size` square
/// frames, alternating-angle parallel-beam sampling, Gaussian noise at
/// `noise_sigma_rel` times the peak sinogram value.
///
/// # Safety
/// `out` must be a valid pointer slot.
#[no_mangle]
pub unsafe extern "C" fn dr_problem_default(
    image_size: u32,
    n_frames: u32,
    angles_per_frame: u32,
    noise_sigma_rel: f64,
    seed: u64,
    out: *mut *mut DrProblem,
) -> DrStatus {
    if out.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    guarded(|| {
        let text = format!(
            r#"
schema_version = 1

[problem]
kind = "phantom"

[problem.phantom]
image_size = {image_size}
n_frames = {n_frames}
disc_center = [{c}, {c}]
disc_radius = {dr}
disc_intensity = 0.5
block_size = {bs}
block_intensity = 1.0
block_start = [{br}, {bc}]
block_step = [0, 1]
mask_radius = {mr}

[forward.tomo]
angles_per_frame = {angles_per_frame}

[noise]
sigma = {noise_sigma_rel}
relative_to_peak = true
seed = {seed}

[outputs]
dir = "unused"
"#,
            c = image_size as f64 / 2.0,
            dr = image_size as f64 * 0.375,
            bs = (image_size / 8).max(1),
            br = image_size as i64 / 2 - (image_size as i64 / 16).max(1),
            bc = image_size as i64 / 4,
            mr = image_size as f64 * 0.4375,
        );
        let config: ExperimentConfig = match toml::from_str(&text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&e.to_string());
                return DrStatus::InvalidArgument;
            }
        };
        build_problem(config, out)
    })
}

/// # Safety
/// `problem` must come from a `dr_problem_*` constructor and not have been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn dr_problem_free(problem: *mut DrProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Number of values in the ground-truth stack (0 when no truth exists).
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_problem_truth_len(problem: *const DrProblem) -> usize {
    if problem.is_null() {
        return 0;
    }
    let p = unsafe { &*problem };
    p.problem.truth().map_or(0, |t| t.data.len())
}

/// Copy the ground-truth stack (frame-major, row-major frames) into
/// `buffer`.
///
/// # Safety
/// `buffer` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dr_problem_truth(
    problem: *const DrProblem,
    buffer: *mut f64,
    len: usize,
) -> DrStatus {
    if problem.is_null() || buffer.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    let p = unsafe { &*problem };
    match p.problem.truth() {
        Some(truth) if truth.data.len() == len => {
            unsafe { std::ptr::copy_nonoverlapping(truth.data.as_ptr(), buffer, len) };
            DrStatus::Ok
        }
        Some(truth) => {
            set_error(&format!("buffer holds {len}, truth has {}", truth.data.len()));
            DrStatus::InvalidArgument
        }
        None => {
            set_error("problem has no ground truth");
            DrStatus::InvalidArgument
        }
    }
}

fn run_with(config: ExperimentConfig, problem: &Problem, out: *mut *mut DrResult) -> DrStatus {
    let output = match reconstruct(problem, &config) {
        Ok(o) => o,
        Err(e) => {
            set_error(&e.to_string());
            return status_of(&e);
        }
    };
    let (ssim, nrmse) = match problem.truth() {
        Some(truth) => {
            let params = ssim_params(&config, problem.mask());
            match score(&output.stack, truth, &params) {
                Ok(pair) => pair,
                Err(e) => {
                    set_error(&e.to_string());
                    return status_of(&e);
                }
            }
        }
        None => (f64::NAN, f64::NAN),
    };
    let result = Box::new(DrResult {
        stack: output.stack,
        ssim,
        nrmse,
        outer_iters: output.outer_iters,
    });
    unsafe { *out = Box::into_raw(result) };
    DrStatus::Ok
}

/// Reconstruct with the hierarchical-Bayesian IAS solver.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer slot.
#[no_mangle]
pub unsafe extern "C" fn dr_reconstruct_ias(
    problem: *const DrProblem,
    eta: f64,
    theta_scale: f64,
    max_outer_iters: u32,
    inner_cap: u32,
    out: *mut *mut DrResult,
) -> DrStatus {
    if problem.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    guarded(|| {
        let p = unsafe { &*problem };
        if !(eta > 0.0) || !(theta_scale > 0.0) || max_outer_iters == 0 || inner_cap == 0 {
            set_error("IAS parameters must be positive");
            return DrStatus::InvalidArgument;
        }
        let mut config = p.config.clone();
        config.solver.kind = SolverKind::Ias;
        config.solver.ias.eta = eta;
        config.solver.ias.theta_scale = theta_scale;
        config.solver.ias.max_outer_iters = max_outer_iters as usize;
        config.solver.ias.inner_max_iters = inner_cap as usize;
        run_with(config, &p.problem, out)
    })
}

/// Reconstruct with the compressed-sensing ADMM baseline.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer slot.
#[no_mangle]
pub unsafe extern "C" fn dr_reconstruct_admm(
    problem: *const DrProblem,
    mu_spatial: f64,
    mu_temporal: f64,
    rho: f64,
    max_outer_iters: u32,
    inner_cap: u32,
    out: *mut *mut DrResult,
) -> DrStatus {
    if problem.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    guarded(|| {
        let p = unsafe { &*problem };
        if !(rho > 0.0) || max_outer_iters == 0 || inner_cap == 0 {
            set_error("ADMM parameters must be positive");
            return DrStatus::InvalidArgument;
        }
        let mut config = p.config.clone();
        config.solver.kind = SolverKind::Admm;
        config.solver.admm.mu_s = mu_spatial;
        config.solver.admm.mu_t = mu_temporal;
        config.solver.admm.rho = rho;
        config.solver.admm.max_outer_iters = max_outer_iters as usize;
        config.solver.admm.inner_max_iters = inner_cap as usize;
        run_with(config, &p.problem, out)
    })
}

/// Reconstruct with lightly damped least squares (LSMR, damp = sqrt(lambda)).
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer slot.
#[no_mangle]
pub unsafe extern "C" fn dr_reconstruct_lsq(
    problem: *const DrProblem,
    lambda: f64,
    max_iters: u32,
    out: *mut *mut DrResult,
) -> DrStatus {
    if problem.is_null() || out.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    guarded(|| {
        let p = unsafe { &*problem };
        if lambda < 0.0 || max_iters == 0 {
            set_error("lambda must be nonnegative and max_iters positive");
            return DrStatus::InvalidArgument;
        }
        let mut config = p.config.clone();
        config.solver.kind = SolverKind::Lsq;
        config.solver.lsq.lambda = lambda;
        config.solver.lsq.max_iters = max_iters as usize;
        run_with(config, &p.problem, out)
    })
}

/// Values in the reconstruction stack.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_result_len(result: *const DrResult) -> usize {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.stack.data.len()
}

/// Stack geometry.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dr_result_shape(
    result: *const DrResult,
    n_frames: *mut u32,
    height: *mut u32,
    width: *mut u32,
) -> DrStatus {
    if result.is_null() || n_frames.is_null() || height.is_null() || width.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    let r = unsafe { &*result };
    unsafe {
        *n_frames = r.stack.n_frames as u32;
        *height = r.stack.height as u32;
        *width = r.stack.width as u32;
    }
    DrStatus::Ok
}

/// Copy the reconstruction (modulus for complex problems) into `buffer`.
///
/// # Safety
/// `buffer` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dr_result_copy_image(
    result: *const DrResult,
    buffer: *mut f64,
    len: usize,
) -> DrStatus {
    if result.is_null() || buffer.is_null() {
        set_error("null pointer argument");
        return DrStatus::NullPointer;
    }
    let r = unsafe { &*result };
    if r.stack.data.len() != len {
        set_error(&format!("buffer holds {len}, stack has {}", r.stack.data.len()));
        return DrStatus::InvalidArgument;
    }
    unsafe { std::ptr::copy_nonoverlapping(r.stack.data.as_ptr(), buffer, len) };
    DrStatus::Ok
}

/// Time-averaged masked SSIM against the ground truth (NaN when no truth).
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_result_ssim(result: *const DrResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    unsafe { &*result }.ssim
}

/// Normalized RMSE against the ground truth (NaN when no truth).
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_result_nrmse(result: *const DrResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    unsafe { &*result }.nrmse
}

/// Outer iterations the solver performed.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_result_outer_iters(result: *const DrResult) -> u32 {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.outer_iters as u32
}

/// # Safety
/// `result` must come from a reconstruct call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dr_result_free(result: *mut DrResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Message describing the most recent error on this thread; valid until the
/// next failing call.
#[no_mangle]
pub extern "C" fn dr_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
