//! C ABI over `propchaos`.
//!
//! Objects cross the boundary as opaque handles created by `pc_*_new` and
//! released by the matching `pc_*_free`. Every fallible call returns a
//! [`PcStatus`]; on failure the message is available from
//! [`pc_last_error`] on the same thread until the next failing call.
//! Panics are caught and reported as `PC_STATUS_PANIC`.
//!
//! Every pointer argument must be null or valid for the access described;
//! null where a value is required yields `PC_STATUS_NULL_POINTER`. Handles
//! must not be used after they are freed or shared across threads while a
//! call on them is running.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use propchaos::cli::{exit_code, render, ExperimentConfig, Subcommand};
use propchaos::kac::{simulate_kac, AngularKernel};
use propchaos::limit::spectral::uniform_grid;
use propchaos::metrics::fourier::toscani_norm_empirical;
use propchaos::metrics::transport::{w1_exact_1d, w2_exact_1d, w2_exact_matching, w2_sliced};
use propchaos::parallel::Pool;
use propchaos::rng::RngStream;
use propchaos::state::{gaussian_sample_state, ParticleState};
use propchaos::thermostat::{simulate_thermostat, steady_temperature_oracle, PairConvention, RestitutionParams};
use propchaos::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Blow-up, spectral instability or a degenerate fit.
    NumericalFailure = 3,
    ConfigError = 4,
    Io = 5,
    /// `pc_run_experiment` ran but its checks did not all pass.
    CheckFailed = 6,
    Panic = 7,
}

/// Particle configuration.
pub struct PcState(ParticleState);
/// Random stream keyed by a master seed and a stream id.
pub struct PcRng(RngStream);
/// Angular collision kernel.
pub struct PcKernel(AngularKernel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PcStatus {
    match e {
        Error::Config { .. } => PcStatus::ConfigError,
        Error::Io(_) => PcStatus::Io,
        _ if exit_code(e) == 2 => PcStatus::InvalidArgument,
        _ => PcStatus::NumericalFailure,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
    Check,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

type Out<T = ()> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> Out) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            PcStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Check)) => {
            set_error("one or more checks failed");
            PcStatus::CheckFailed
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            PcStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Out<&'a T> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &'static str) -> Out<&'a mut T> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Out<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Out<&'a str> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Core(Error::InvalidArgument(format!("{what} is not UTF-8"))))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Out {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failing call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Stream `stream_id` of the generator keyed by `master_seed`.
#[no_mangle]
pub unsafe extern "C" fn pc_rng_new(master_seed: u64, stream_id: u64, out: *mut *mut PcRng) -> PcStatus {
    guard(|| put(out, boxed(PcRng(RngStream::new(master_seed, stream_id))), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn pc_rng_free(rng: *mut PcRng) {
    free(rng)
}

/// Uniform draw in `[0, 1)`.
#[no_mangle]
pub unsafe extern "C" fn pc_rng_uniform(rng: *mut PcRng, out: *mut f64) -> PcStatus {
    guard(|| {
        let r = get_mut(rng, "rng")?;
        put(out, r.0.uniform(), "out")
    })
}

/// Kernel from the catalog: `isotropic`, `forward:<k>`, `spike:<kappa>`,
/// or `two_point:<w>` in one dimension.
#[no_mangle]
pub unsafe extern "C" fn pc_kernel_new(dim: usize, spec: *const c_char, out: *mut *mut PcKernel) -> PcStatus {
    guard(|| {
        let k = AngularKernel::from_name(dim, string(spec, "spec")?)?;
        put(out, boxed(PcKernel(k)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_kernel_free(kernel: *mut PcKernel) {
    free(kernel)
}

/// Mean cosine of the scattering angle under the kernel.
#[no_mangle]
pub unsafe extern "C" fn pc_kernel_first_moment(kernel: *const PcKernel, out: *mut f64) -> PcStatus {
    guard(|| put(out, get(kernel, "kernel")?.0.first_moment(), "out"))
}

/// State from `n * dim` row-major coordinates at time zero.
///
/// `coords` must hold `n * dim` values, `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_state_new(dim: usize, n: usize, coords: *const f64, out: *mut *mut PcState) -> PcStatus {
    guard(|| {
        let len = n.checked_mul(dim).ok_or(Fail::Core(Error::InvalidArgument("n * dim overflows".into())))?;
        let c = slice(coords, len, "coords")?.to_vec();
        put(out, boxed(PcState(ParticleState::new(dim, c, 0.0)?)), "out")
    })
}

/// `n` independent Gaussian particles with the given per-axis means and
/// variances (each of length `dim`).
///
/// Pointers must be valid; `mean` and `variance` must hold `dim` values.
#[no_mangle]
pub unsafe extern "C" fn pc_state_sample_gaussian(
    dim: usize,
    n: usize,
    mean: *const f64,
    variance: *const f64,
    rng: *mut PcRng,
    out: *mut *mut PcState,
) -> PcStatus {
    guard(|| {
        let (m, v) = (slice(mean, dim, "mean")?, slice(variance, dim, "variance")?);
        let s = gaussian_sample_state(m, v, n, &mut get_mut(rng, "rng")?.0)?;
        put(out, boxed(PcState(s)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_state_free(state: *mut PcState) {
    free(state)
}

/// Particle count, dimension and current time.
/// Any of the outputs may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn pc_state_shape(state: *const PcState, n: *mut usize, dim: *mut usize, time: *mut f64) -> PcStatus {
    guard(|| {
        let s = &get(state, "state")?.0;
        if !n.is_null() {
            n.write(s.n_particles());
        }
        if !dim.is_null() {
            dim.write(s.dim());
        }
        if !time.is_null() {
            time.write(s.time());
        }
        Ok(())
    })
}

/// Copies the `n * dim` coordinates into `buf`, which holds `len` values.
///
/// `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pc_state_coords(state: *const PcState, buf: *mut f64, len: usize) -> PcStatus {
    guard(|| {
        let c = get(state, "state")?.0.coords();
        if len < c.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, need {}", c.len())).into());
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len());
        Ok(())
    })
}

/// Total energy `sum |v|^2` and total momentum (written to `momentum`,
/// `dim` values; may be null).
#[no_mangle]
pub unsafe extern "C" fn pc_state_moments(state: *const PcState, energy: *mut f64, momentum: *mut f64) -> PcStatus {
    guard(|| {
        let s = &get(state, "state")?.0;
        if !momentum.is_null() {
            let p = s.total_momentum();
            ptr::copy_nonoverlapping(p.as_ptr(), momentum, p.len());
        }
        put(energy, s.total_energy(), "energy")
    })
}

/// Runs the elastic Kac process from the state's time to `t_end`, in place.
#[no_mangle]
pub unsafe extern "C" fn pc_kac_advance(state: *mut PcState, kernel: *const PcKernel, t_end: f64, rng: *mut PcRng) -> PcStatus {
    guard(|| {
        let s = get_mut(state, "state")?;
        let k = get(kernel, "kernel")?;
        let mut out = simulate_kac(&s.0, &k.0, t_end, &[], &mut get_mut(rng, "rng")?.0)?;
        s.0 = out.pop().expect("final state");
        Ok(())
    })
}

/// Runs the inelastic thermostatted process to `t_end`, in place.
/// `ordered_pairs` selects the ordered-pair clock (total rate `N - 1`).
#[no_mangle]
pub unsafe extern "C" fn pc_thermostat_advance(
    state: *mut PcState,
    kernel: *const PcKernel,
    alpha: f64,
    nu: f64,
    ordered_pairs: bool,
    t_end: f64,
    rng: *mut PcRng,
) -> PcStatus {
    guard(|| {
        let s = get_mut(state, "state")?;
        let k = get(kernel, "kernel")?;
        let params = RestitutionParams::new(alpha, nu, s.0.dim())?;
        let conv = if ordered_pairs { PairConvention::Ordered } else { PairConvention::Unordered };
        let mut out = simulate_thermostat(&s.0, &k.0, params, conv, t_end, &[], &mut get_mut(rng, "rng")?.0)?;
        s.0 = out.pop().expect("final state");
        Ok(())
    })
}

/// Limit-equation steady temperature; infinite when the bath wins.
#[no_mangle]
pub unsafe extern "C" fn pc_steady_temperature(
    kernel: *const PcKernel,
    alpha: f64,
    nu: f64,
    ordered_pairs: bool,
    out: *mut f64,
) -> PcStatus {
    guard(|| {
        let k = &get(kernel, "kernel")?.0;
        let params = RestitutionParams::new(alpha, nu, k.dim())?;
        let conv = if ordered_pairs { PairConvention::Ordered } else { PairConvention::Unordered };
        put(out, steady_temperature_oracle(params, k, conv).value().unwrap_or(f64::INFINITY), "out")
    })
}

unsafe fn pair<'a>(a: *const PcState, b: *const PcState) -> Out<(&'a ParticleState, &'a ParticleState)> {
    Ok((&get(a, "a")?.0, &get(b, "b")?.0))
}

/// Exact `W_1` between two one-dimensional empirical measures.
#[no_mangle]
pub unsafe extern "C" fn pc_w1(a: *const PcState, b: *const PcState, out: *mut f64) -> PcStatus {
    guard(|| {
        let (a, b) = pair(a, b)?;
        put(out, w1_exact_1d(&a.empirical(), &b.empirical())?, "out")
    })
}

/// Exact `W_2`: sorted coupling in one dimension, optimal matching above
/// (equal particle counts, bounded by the assignment budget).
#[no_mangle]
pub unsafe extern "C" fn pc_w2(a: *const PcState, b: *const PcState, out: *mut f64) -> PcStatus {
    guard(|| {
        let (a, b) = pair(a, b)?;
        let (ma, mb) = (a.empirical(), b.empirical());
        let v = if ma.dim() == 1 { w2_exact_1d(&ma, &mb)? } else { w2_exact_matching(&ma, &mb)?.w2() };
        put(out, v, "out")
    })
}

/// Sliced `W_2` over `projections` random directions, with its standard
/// error (`std_error` may be null).
#[no_mangle]
pub unsafe extern "C" fn pc_w2_sliced(
    a: *const PcState,
    b: *const PcState,
    projections: usize,
    rng: *mut PcRng,
    out: *mut f64,
    std_error: *mut f64,
) -> PcStatus {
    guard(|| {
        let (a, b) = pair(a, b)?;
        let s = w2_sliced(&a.empirical(), &b.empirical(), projections, &mut get_mut(rng, "rng")?.0)?;
        if !std_error.is_null() {
            std_error.write(s.std_error);
        }
        put(out, s.value, "out")
    })
}

/// Toscani distance of order `s` between one-dimensional measures,
/// evaluated on the uniform grid over `[-xi_max, xi_max]`.
#[no_mangle]
pub unsafe extern "C" fn pc_toscani(
    a: *const PcState,
    b: *const PcState,
    s: f64,
    xi_max: f64,
    intervals: usize,
    out: *mut f64,
) -> PcStatus {
    guard(|| {
        let (a, b) = pair(a, b)?;
        let xi = uniform_grid(xi_max, intervals)?;
        put(out, toscani_norm_empirical(&a.empirical(), &b.empirical(), s, &xi)?.value, "out")
    })
}

/// Runs a CLI subcommand (`simulate`, `metric`, `chaos-curve`, `omega-n`,
/// `check`) on TOML config text and returns the CSV the CLI would print.
/// The string is written even when the status is `PC_STATUS_CHECK_FAILED`;
/// release it with `pc_string_free`.
///
/// `subcommand` and `config` must be NUL-terminated; `out_csv` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_run_experiment(
    subcommand: *const c_char,
    config: *const c_char,
    workers: usize,
    out_csv: *mut *mut c_char,
) -> PcStatus {
    guard(|| {
        if out_csv.is_null() {
            return Err(Fail::Null("out_csv"));
        }
        let sub = match string(subcommand, "subcommand")? {
            "simulate" => Subcommand::Simulate,
            "metric" => Subcommand::Metric,
            "chaos-curve" => Subcommand::ChaosCurve,
            "omega-n" => Subcommand::OmegaN,
            "check" => Subcommand::Check,
            other => return Err(Error::InvalidArgument(format!("unknown subcommand `{other}`")).into()),
        };
        let cfg = ExperimentConfig::parse(string(config, "config")?)?.resolve()?;
        let pool = Pool::new(workers)?;
        let (text, passed) = render(sub, &cfg, &pool)?;
        out_csv.write(CString::new(text).expect("csv has no NUL").into_raw());
        if passed {
            Ok(())
        } else {
            Err(Fail::Check)
        }
    })
}
