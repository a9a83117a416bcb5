//! C ABI over the simulator: opaque handles, integer status codes, and a
//! JSON export for language bindings. The generated header lives in
//! `include/eprsim.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use eprsim::circuits::Circuit;
use eprsim::experiment::{run_experiment, ExperimentConfig, ExperimentStats, OutputFormat};
use eprsim::fock::validate_phase_label_model;
use eprsim::homodyne::error_probability;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EprsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RuntimeError = 3,
}

/// Circuit selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EprsimCircuit {
    Chi = 0,
    Cluster = 1,
}

/// Opaque experiment-statistics handle.
pub struct EprsimStats {
    inner: ExperimentStats,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eprsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Run a Monte-Carlo experiment. On success writes a handle to `out`; free
/// it with `eprsim_stats_free`.
///
/// # Safety
/// `out` must be null or a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn eprsim_run(
    circuit: EprsimCircuit,
    alpha: f64,
    theta: f64,
    shots: u64,
    seed: u64,
    feed_forward: bool,
    out: *mut *mut EprsimStats,
) -> EprsimStatus {
    if out.is_null() {
        return EprsimStatus::NullPointer;
    }
    let config = ExperimentConfig {
        circuit: match circuit {
            EprsimCircuit::Chi => Circuit::Chi,
            EprsimCircuit::Cluster => Circuit::Cluster,
        },
        alpha,
        theta,
        shots,
        seed,
        feed_forward,
        output_path: None,
        format: OutputFormat::Json,
    };
    if let Err(e) = config.validate() {
        set_last_error(e.to_string());
        return EprsimStatus::InvalidArgument;
    }
    match run_experiment(&config) {
        Ok(stats) => {
            unsafe { *out = Box::into_raw(Box::new(EprsimStats { inner: stats })) };
            EprsimStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            EprsimStatus::RuntimeError
        }
    }
}

macro_rules! stats_getter {
    ($name:ident, $field:ident, $ty:ty) => {
        /// # Safety
        /// `stats` must be null or a live handle from `eprsim_run`; `out`
        /// must be null or valid for writes.
        #[no_mangle]
        pub unsafe extern "C" fn $name(stats: *const EprsimStats, out: *mut $ty) -> EprsimStatus {
            if stats.is_null() || out.is_null() {
                return EprsimStatus::NullPointer;
            }
            unsafe { *out = (*stats).inner.$field as $ty };
            EprsimStatus::Ok
        }
    };
}

stats_getter!(eprsim_stats_shots, shots, u64);
stats_getter!(eprsim_stats_heralded_success_fraction, heralded_success_fraction, f64);
stats_getter!(eprsim_stats_true_fidelity_mean, true_fidelity_mean, f64);
stats_getter!(
    eprsim_stats_misclassification_rate_empirical,
    misclassification_rate_empirical,
    f64
);
stats_getter!(
    eprsim_stats_misclassification_rate_analytic,
    misclassification_rate_analytic,
    f64
);

/// Classification count for one entangler (0..2) and parity (0 = even,
/// 1 = odd).
///
/// # Safety
/// `stats` must be null or a live handle from `eprsim_run`; `out` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eprsim_stats_parity_count(
    stats: *const EprsimStats,
    entangler: u32,
    parity: u32,
    out: *mut u64,
) -> EprsimStatus {
    if stats.is_null() || out.is_null() {
        return EprsimStatus::NullPointer;
    }
    if entangler > 2 || parity > 1 {
        return EprsimStatus::InvalidArgument;
    }
    unsafe { *out = (*stats).inner.parity_histogram[entangler as usize][parity as usize] };
    EprsimStatus::Ok
}

/// Serialize the statistics to a JSON string (same schema as the CLI's
/// `run --format json`). Free the string with `eprsim_string_free`.
///
/// # Safety
/// `stats` must be null or a live handle from `eprsim_run`; `out` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eprsim_stats_to_json(
    stats: *const EprsimStats,
    out: *mut *mut c_char,
) -> EprsimStatus {
    if stats.is_null() || out.is_null() {
        return EprsimStatus::NullPointer;
    }
    let json = match serde_json::to_string_pretty(unsafe { &(*stats).inner }) {
        Ok(j) => j,
        Err(e) => {
            set_last_error(e.to_string());
            return EprsimStatus::RuntimeError;
        }
    };
    match CString::new(json) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            EprsimStatus::Ok
        }
        Err(_) => EprsimStatus::RuntimeError,
    }
}

/// Per-branch misclassification probability `Q(x_d/2)`.
#[no_mangle]
pub extern "C" fn eprsim_error_probability(alpha: f64, theta: f64) -> f64 {
    error_probability(alpha, theta)
}

/// Certify the phase-label probe model against the truncated-Fock oracle.
/// Writes the maximum density deviation to `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eprsim_validate_phase_label_model(
    alpha: f64,
    theta: f64,
    n_trunc: usize,
    out: *mut f64,
) -> EprsimStatus {
    if out.is_null() {
        return EprsimStatus::NullPointer;
    }
    match validate_phase_label_model(alpha, theta, n_trunc) {
        Ok(dev) => {
            unsafe { *out = dev };
            EprsimStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            EprsimStatus::RuntimeError
        }
    }
}

/// Free a statistics handle.
///
/// # Safety
/// `stats` must come from `eprsim_run` and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn eprsim_stats_free(stats: *mut EprsimStats) {
    if !stats.is_null() {
        drop(unsafe { Box::from_raw(stats) });
    }
}

/// Free a string returned by `eprsim_stats_to_json`.
///
/// # Safety
/// `s` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn eprsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
