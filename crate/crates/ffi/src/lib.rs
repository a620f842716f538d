//! C interface to the sphere SQG simulator and barrier solver.
//!
//! Every function returns an [`SqgStatus`]; on failure a message is kept in
//! thread-local storage and can be read with [`sqg_last_error_message`].
//! Simulations are opaque [`SqgSim`] handles released by [`sqg_sim_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sqg_sphere::barriers::{flat_delta, solve_barrier, CylinderProblem, Metric};
use sqg_sphere::cli::snapshot::write_snapshot;
use sqg_sphere::harmonics::{evaluate_harmonic, BasisIndex};
use sqg_sphere::solver::{Dynamics, InitialCondition, SimConfig, Simulation};
use sqg_sphere::sphere::SpherePoint;
use sqg_sphere::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonZeroMean = 3,
    NonFinite = 4,
    NonConvergence = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

/// Initial data selector for [`SqgSimConfig`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqgInitialCondition {
    Random = 0,
    ZonalJet = 1,
    RotatedBump = 2,
}

/// Plain-data simulation parameters. A non-positive `dt` selects the default step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqgSimConfig {
    pub lmax: u32,
    pub alpha: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// One of the [`SqgInitialCondition`] values.
    pub initial_condition: u32,
    pub pure_diffusion: bool,
}

/// Opaque simulation handle.
pub struct SqgSim {
    inner: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SqgStatus {
    match e {
        Error::NonZeroMean { .. } => SqgStatus::NonZeroMean,
        Error::NonFiniteState { .. } => SqgStatus::NonFinite,
        Error::NonConvergence { .. } => SqgStatus::NonConvergence,
        _ => SqgStatus::InvalidArgument,
    }
}

fn fail(status: SqgStatus, msg: impl Into<String>) -> SqgStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), (SqgStatus, String)>) -> SqgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SqgStatus::Ok
        }
        Ok(Err((s, m))) => fail(s, m),
        Err(_) => fail(SqgStatus::Panic, "internal panic"),
    }
}

fn core_err(e: Error) -> (SqgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SqgStatus, String) {
    (SqgStatus::NullPointer, format!("{what} is null"))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sqg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sqg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults: `alpha = kappa = 1`, default step, random data with seed 0.
#[no_mangle]
pub extern "C" fn sqg_config_default(lmax: u32, t_end: f64) -> SqgSimConfig {
    SqgSimConfig {
        lmax,
        alpha: 1.0,
        kappa: 1.0,
        dt: 0.0,
        t_end,
        seed: 0,
        initial_condition: SqgInitialCondition::Random as u32,
        pure_diffusion: false,
    }
}

fn to_config(c: &SqgSimConfig) -> Result<SimConfig, (SqgStatus, String)> {
    let ic = match c.initial_condition {
        0 => InitialCondition::Random,
        1 => InitialCondition::ZonalJet,
        2 => InitialCondition::RotatedBump,
        other => {
            return Err((
                SqgStatus::InvalidArgument,
                format!("unknown initial condition {other}"),
            ))
        }
    };
    let mut config = SimConfig::new(c.lmax as usize, c.t_end, ic);
    config.alpha = c.alpha;
    config.kappa = c.kappa;
    config.dt = (c.dt > 0.0).then_some(c.dt);
    config.seed = c.seed;
    config.dynamics = if c.pure_diffusion {
        Dynamics::PureDiffusion
    } else {
        Dynamics::Full
    };
    Ok(config)
}

/// Create a simulation; on success `*out` owns a handle.
///
/// # Safety
/// `config` must point to a valid [`SqgSimConfig`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_new(config: *const SqgSimConfig, out: *mut *mut SqgSim) -> SqgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; caller guarantees validity.
        let cfg = unsafe { config.as_ref() }.ok_or_else(|| null("config"))?;
        let inner = Simulation::new(to_config(cfg)?).map_err(core_err)?;
        let handle = Box::into_raw(Box::new(SqgSim { inner }));
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from [`sqg_sim_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_free(sim: *mut SqgSim) {
    if !sim.is_null() {
        // SAFETY: caller passes a live handle from `Box::into_raw`.
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Advance at most `n_steps` steps, stopping at the configured end time.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_step(sim: *mut SqgSim, n_steps: u32) -> SqgStatus {
    guard(|| {
        // SAFETY: caller passes a live, unaliased handle.
        let sim = unsafe { sim.as_mut() }.ok_or_else(|| null("sim"))?;
        for _ in 0..n_steps {
            if sim.inner.is_finished() {
                break;
            }
            sim.inner.step().map_err(core_err)?;
        }
        Ok(())
    })
}

/// Whether the simulation reached its end time.
///
/// # Safety
/// `sim` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_is_finished(sim: *const SqgSim) -> bool {
    // SAFETY: caller passes a live handle or null.
    unsafe { sim.as_ref() }.is_some_and(|s| s.inner.is_finished())
}

/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_time(sim: *const SqgSim, out: *mut f64) -> SqgStatus {
    guard(|| {
        // SAFETY: caller contract.
        let sim = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: non-null and writable.
        unsafe { *out = sim.inner.state().t };
        Ok(())
    })
}

/// Number of coefficients, `(L+1)²`; zero for a null handle.
///
/// # Safety
/// `sim` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_coeff_count(sim: *const SqgSim) -> usize {
    // SAFETY: caller passes a live handle or null.
    unsafe { sim.as_ref() }.map_or(0, |s| s.inner.state().theta.coeffs().len())
}

/// Copy the coefficients, index `l² + l + m`, into `buf`.
///
/// # Safety
/// `sim` must be a live handle; `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_copy_coeffs(sim: *const SqgSim, buf: *mut f64, len: usize) -> SqgStatus {
    guard(|| {
        // SAFETY: caller contract.
        let sim = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let c = sim.inner.state().theta.coeffs();
        if len < c.len() {
            return Err((
                SqgStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", c.len()),
            ));
        }
        // SAFETY: `buf` has at least `c.len()` writable slots and does not alias `c`.
        unsafe { ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len()) };
        Ok(())
    })
}

/// Current `‖θ‖²` and the accumulated `∫‖Λ^{α/2}θ‖²`.
///
/// # Safety
/// `sim` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_energy(
    sim: *const SqgSim,
    l2_energy: *mut f64,
    dissipation: *mut f64,
) -> SqgStatus {
    guard(|| {
        // SAFETY: caller contract.
        let sim = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if l2_energy.is_null() || dissipation.is_null() {
            return Err(null("output"));
        }
        let ledger = sim.inner.ledger();
        let e = *ledger.l2_energy.last().expect("ledger records the initial state");
        let d = *ledger.dissipation_integral.last().expect("ledger records the initial state");
        // SAFETY: both non-null and writable.
        unsafe {
            *l2_energy = e;
            *dissipation = d;
        }
        Ok(())
    })
}

/// Write the current state as a text snapshot file.
///
/// # Safety
/// `sim` must be a live handle; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn sqg_sim_snapshot_write(sim: *const SqgSim, path: *const c_char) -> SqgStatus {
    guard(|| {
        // SAFETY: caller contract.
        let sim = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        // SAFETY: non-null, NUL-terminated per contract.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|e| (SqgStatus::InvalidArgument, format!("path is not UTF-8: {e}")))?;
        let cfg = sim.inner.config();
        let text = write_snapshot(sim.inner.state(), cfg.alpha, cfg.kappa);
        std::fs::write(path, text).map_err(|e| (SqgStatus::Io, format!("{path}: {e}")))
    })
}

/// Real orthonormal harmonic `Y_l^m` at `(colat, lon)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqg_evaluate_harmonic(l: i64, m: i64, colat: f64, lon: f64, out: *mut f64) -> SqgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let idx = BasisIndex::new(l, m).map_err(core_err)?;
        let v = evaluate_harmonic(idx, SpherePoint::new(colat, lon)).map_err(core_err)?;
        // SAFETY: non-null and writable.
        unsafe { *out = v };
        Ok(())
    })
}

/// The flat reference constant `δ` at the default resolution.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqg_flat_delta(out: *mut f64) -> SqgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = flat_delta().map_err(core_err)?;
        // SAFETY: non-null and writable.
        unsafe { *out = d.delta };
        Ok(())
    })
}

/// Sup of the sphere `b₁` barrier at scale `h` over `B(h/2) × I(h)`, on an
/// `n × n` grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqg_b1_sup(h: f64, n: u32, out: *mut f64) -> SqgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = n as usize;
        let sol = solve_barrier(&CylinderProblem::b1(Metric::Sphere, h, n, n)).map_err(core_err)?;
        // SAFETY: non-null and writable.
        unsafe { *out = sol.sup_region };
        Ok(())
    })
}
