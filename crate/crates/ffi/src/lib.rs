//! C interface. Channels and spectra are opaque handles; every fallible
//! call returns an [`RlStatus`] and leaves a message for
//! [`rl_last_error_message`] on failure.
//!
//! Complex arrays are interleaved `re, im` doubles. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use resetlab::channel::{apply_channel, reset_channel, superoperator_matrix, KrausSet};
use resetlab::config::ExperimentConfig;
use resetlab::dynamics::qmi_trajectory;
use resetlab::spectra::{full_spectrum, Spectrum};
use resetlab::spin_ops::{BasisTag, DenseOperator};
use resetlab::{c64, presets, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// A reset channel on the system register.
pub struct RlChannel {
    kraus: KrausSet,
}

/// Eigen-decomposition of a channel's superoperator.
pub struct RlSpectrum {
    spectrum: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::Config(_) => RlStatus::Config,
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::BasisMismatch { .. }
        | Error::SiteOutOfRange { .. } => RlStatus::InvalidArgument,
        _ => RlStatus::Numerical,
    }
}

fn fail(status: RlStatus, msg: impl Into<String>) -> RlStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), RlStatus>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(RlStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: resetlab::Result<T>) -> Result<T, RlStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RlStatus> {
    if p.is_null() {
        return Err(fail(RlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(RlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, RlStatus> {
    p.as_ref().ok_or_else(|| fail(RlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], RlStatus> {
    if p.is_null() {
        return Err(fail(RlStatus::NullPointer, "output buffer is null"));
    }
    if len < needed {
        return Err(fail(RlStatus::BufferTooSmall, format!("buffer holds {len} doubles, {needed} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

fn write_complex(out: &mut [f64], values: impl Iterator<Item = c64>) {
    for (k, z) in values.enumerate() {
        out[2 * k] = z.re;
        out[2 * k + 1] = z.im;
    }
}

fn channel_from_config(cfg: &ExperimentConfig) -> Result<*mut RlChannel, RlStatus> {
    let layout = lift(cfg.layout())?;
    let kraus = lift(reset_channel(&cfg.model(), layout, cfg.t))?;
    Ok(Box::into_raw(Box::new(RlChannel { kraus })))
}

/// Message of the last failed call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the channel described by an experiment config document (JSON).
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out` a valid
/// pointer. On success `*out` owns a channel to be released with
/// [`rl_channel_free`].
#[no_mangle]
pub unsafe extern "C" fn rl_channel_from_json(config_json: *const c_char, out: *mut *mut RlChannel) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RlStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let cfg = lift(ExperimentConfig::from_json_str(str_arg(config_json, "config_json")?))?;
        *out = channel_from_config(&cfg)?;
        Ok(())
    })
}

/// Builds the base channel of a named built-in preset.
///
/// # Safety
/// As for [`rl_channel_from_json`].
#[no_mangle]
pub unsafe extern "C" fn rl_channel_from_preset(name: *const c_char, out: *mut *mut RlChannel) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RlStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let cfg = lift(presets::find(str_arg(name, "name")?).and_then(|p| p.config()))?;
        *out = channel_from_config(&cfg)?;
        Ok(())
    })
}

/// Releases a channel. Null is ignored.
///
/// # Safety
/// `channel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rl_channel_free(channel: *mut RlChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// System Hilbert-space dimension `d`, or 0 for a null handle.
///
/// # Safety
/// `channel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_channel_dim(channel: *const RlChannel) -> usize {
    channel.as_ref().map_or(0, |c| c.kraus.dim())
}

/// Writes `‖sum K† K - I‖_F` to `out`.
///
/// # Safety
/// `channel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_channel_completeness(channel: *const RlChannel, out: *mut f64) -> RlStatus {
    guard(|| {
        let c = handle(channel, "channel")?;
        let o = out_slice(out, 1, 1)?;
        o[0] = c.kraus.completeness_residual();
        Ok(())
    })
}

/// Applies the channel to a `d x d` operator (`2 d^2` doubles each way).
///
/// # Safety
/// `rho_in` must hold `2 d^2` doubles and `rho_out` at least `out_len`.
#[no_mangle]
pub unsafe extern "C" fn rl_channel_apply(
    channel: *const RlChannel,
    rho_in: *const f64,
    rho_out: *mut f64,
    out_len: usize,
) -> RlStatus {
    guard(|| {
        let c = handle(channel, "channel")?;
        let d = c.kraus.dim();
        if rho_in.is_null() {
            return Err(fail(RlStatus::NullPointer, "rho_in is null"));
        }
        let input = std::slice::from_raw_parts(rho_in, 2 * d * d);
        let mat = resetlab::linalg::unvectorize(
            &(0..d * d).map(|k| c64::new(input[2 * k], input[2 * k + 1])).collect::<Vec<_>>(),
            d,
        );
        let rho = lift(DenseOperator::new(BasisTag::System, mat))?;
        let image = lift(apply_channel(&c.kraus, &rho))?;
        let o = out_slice(rho_out, out_len, 2 * d * d)?;
        write_complex(o, resetlab::linalg::vectorize(image.matrix()).into_iter());
        Ok(())
    })
}

/// Writes the row-stacked superoperator matrix (`2 d^4` doubles).
///
/// # Safety
/// `out` must hold at least `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_channel_superoperator(channel: *const RlChannel, out: *mut f64, out_len: usize) -> RlStatus {
    guard(|| {
        let c = handle(channel, "channel")?;
        let m = superoperator_matrix(&c.kraus).matrix;
        let n = m.nrows();
        let o = out_slice(out, out_len, 2 * n * n)?;
        write_complex(o, (0..n * n).map(|k| m[(k / n, k % n)]));
        Ok(())
    })
}

/// Mutual information `S` after `0..=n_max` rounds from the GHZ state
/// (`n_max + 1` doubles).
///
/// # Safety
/// `out` must hold at least `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_qmi_trajectory(
    channel: *const RlChannel,
    n_max: usize,
    out: *mut f64,
    out_len: usize,
) -> RlStatus {
    guard(|| {
        let c = handle(channel, "channel")?;
        let o = out_slice(out, out_len, n_max + 1)?;
        let traj = lift(qmi_trajectory(&c.kraus, n_max))?;
        for (slot, rec) in o.iter_mut().zip(&traj) {
            *slot = rec.s;
        }
        Ok(())
    })
}

/// Full spectrum of the channel's superoperator.
///
/// # Safety
/// `channel` must be a live handle and `out` a valid pointer; release the
/// result with [`rl_spectrum_free`].
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_new(channel: *const RlChannel, out: *mut *mut RlSpectrum) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RlStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let c = handle(channel, "channel")?;
        let spectrum = lift(full_spectrum(&superoperator_matrix(&c.kraus)))?;
        *out = Box::into_raw(Box::new(RlSpectrum { spectrum }));
        Ok(())
    })
}

/// Releases a spectrum. Null is ignored.
///
/// # Safety
/// `spectrum` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_free(spectrum: *mut RlSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_len(spectrum: *const RlSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.spectrum.len())
}

/// Eigenvalues sorted by decreasing magnitude (`2 len` doubles).
///
/// # Safety
/// `out` must hold at least `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_eigenvalues(spectrum: *const RlSpectrum, out: *mut f64, out_len: usize) -> RlStatus {
    guard(|| {
        let s = handle(spectrum, "spectrum")?;
        let o = out_slice(out, out_len, 2 * s.spectrum.len())?;
        write_complex(o, s.spectrum.eigenvalues().into_iter());
        Ok(())
    })
}

/// Largest eigen-residual and eigenvalue condition number of the modes.
///
/// # Safety
/// `spectrum` must be a live handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_diagnostics(
    spectrum: *const RlSpectrum,
    max_residual: *mut f64,
    max_defectivity: *mut f64,
) -> RlStatus {
    guard(|| {
        let s = handle(spectrum, "spectrum")?;
        out_slice(max_residual, 1, 1)?[0] = s.spectrum.max_residual();
        out_slice(max_defectivity, 1, 1)?[0] = s.spectrum.max_defectivity();
        Ok(())
    })
}
