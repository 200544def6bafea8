//! C interface to the phase-noise detection library.
//!
//! Constellations are opaque handles created by `pn_constellation_*` and
//! released with [`pn_constellation_free`]. Every fallible function returns a
//! [`PnStatus`] and writes results through caller-provided pointers; after a
//! failure, [`pn_last_error_message`] describes what went wrong on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use phasenoise_core::analysis::{error_floor, q_function, union_bound};
use phasenoise_core::{eb_n0_to_n0, soft_decide, Constellation, DecideOptions, DetectorKind, Error, ReceivedSample};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnsupportedOrder = 3,
    InvalidConstellation = 4,
    /// The Tikhonov detector was asked to run with zero phase variance.
    DegenerateVariance = 5,
    NumericalFailure = 6,
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// Symbol-by-symbol detectors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnDetector {
    Euclidean = 0,
    Tikhonov = 1,
    VarianceBiased = 2,
    GaussianAmplitudePhase = 3,
    TwoStep = 4,
    SecondOrderMoment = 5,
}

impl From<PnDetector> for DetectorKind {
    fn from(d: PnDetector) -> Self {
        match d {
            PnDetector::Euclidean => DetectorKind::Euc,
            PnDetector::Tikhonov => DetectorKind::Fos,
            PnDetector::VarianceBiased => DetectorKind::Vb,
            PnDetector::GaussianAmplitudePhase => DetectorKind::Gap,
            PnDetector::TwoStep => DetectorKind::Tsd,
            PnDetector::SecondOrderMoment => DetectorKind::Som,
        }
    }
}

/// Opaque constellation handle.
pub struct PnConstellation {
    inner: Constellation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(error: &Error) -> PnStatus {
    match error {
        Error::UnsupportedOrder(_) => PnStatus::UnsupportedOrder,
        Error::InvalidConstellation(_) => PnStatus::InvalidConstellation,
        Error::InvalidParameter { .. } | Error::Config(_) => PnStatus::InvalidArgument,
        Error::DegenerateVariance => PnStatus::DegenerateVariance,
        _ => PnStatus::NumericalFailure,
    }
}

/// Runs `body`, recording any error or panic for [`pn_last_error_message`].
fn guard(body: impl FnOnce() -> Result<(), (PnStatus, String)>) -> PnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            PnStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            PnStatus::Internal
        }
    }
}

fn core_error(e: Error) -> (PnStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PnStatus, String) {
    (PnStatus::NullPointer, format!("`{what}` is null"))
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (PnStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: checked non-null; validity is the caller's contract.
    unsafe { out.write(value) };
    Ok(())
}

/// # Safety
/// `c` must be null or a live handle from this library.
unsafe fn handle<'a>(c: *const PnConstellation) -> Result<&'a Constellation, (PnStatus, String)> {
    // SAFETY: the caller guarantees the handle is live.
    unsafe { c.as_ref() }.map(|h| &h.inner).ok_or_else(|| null("constellation"))
}

fn boxed(c: Constellation) -> *mut PnConstellation {
    Box::into_raw(Box::new(PnConstellation { inner: c }))
}

/// Creates a unit-energy square QAM constellation (order 4, 16, 64 or 256).
///
/// # Safety
/// `out` must be valid for writes. The handle must be released with
/// [`pn_constellation_free`].
#[no_mangle]
pub unsafe extern "C" fn pn_constellation_qam(order: usize, out: *mut *mut PnConstellation) -> PnStatus {
    guard(|| {
        let c = Constellation::qam(order).map_err(core_error)?;
        // SAFETY: forwarded caller contract.
        unsafe { write(out, boxed(c), "out") }
    })
}

/// Creates a unit-energy spiral constellation whose points all have
/// distinct amplitudes.
///
/// # Safety
/// Same contract as [`pn_constellation_qam`].
#[no_mangle]
pub unsafe extern "C" fn pn_constellation_spiral(order: usize, out: *mut *mut PnConstellation) -> PnStatus {
    guard(|| {
        let c = Constellation::spiral(order).map_err(core_error)?;
        // SAFETY: forwarded caller contract.
        unsafe { write(out, boxed(c), "out") }
    })
}

/// Creates a constellation from `len` points given as separate real and
/// imaginary arrays. The points are scaled to unit average energy.
///
/// # Safety
/// `re` and `im` must each point to `len` readable doubles, and `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pn_constellation_from_points(
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut PnConstellation,
) -> PnStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("points"));
        }
        // SAFETY: the caller guarantees `len` readable elements in each array.
        let (re, im) = unsafe { (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len)) };
        let points = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let c = Constellation::from_points("custom", points).map_err(core_error)?;
        // SAFETY: forwarded caller contract.
        unsafe { write(out, boxed(c), "out") }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pn_constellation_free(c: *mut PnConstellation) {
    if !c.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(c) });
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pn_constellation_len(c: *const PnConstellation) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { c.as_ref() }.map_or(0, |h| h.inner.len())
}

/// Writes point `index` to `re` and `im`.
///
/// # Safety
/// `c` must be a live handle; `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pn_constellation_point(
    c: *const PnConstellation,
    index: usize,
    re: *mut f64,
    im: *mut f64,
) -> PnStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let c = unsafe { handle(c) }?;
        if index >= c.len() {
            return Err((
                PnStatus::InvalidArgument,
                format!("index {index} out of range for {} points", c.len()),
            ));
        }
        let p = c.point(index);
        // SAFETY: forwarded caller contract.
        unsafe {
            write(re, p.re, "re")?;
            write(im, p.im, "im")
        }
    })
}

/// Runs one detector on the compensated observation `r = r_re + j r_im`.
///
/// `posteriors` receives one probability per constellation point and must
/// hold at least `capacity` doubles; `hard_index` receives the decision.
/// Either output may be null if it is not wanted.
///
/// # Safety
/// `c` must be a live handle; non-null outputs must be valid for writes
/// (`posteriors` for `capacity` elements).
#[no_mangle]
pub unsafe extern "C" fn pn_soft_decide(
    c: *const PnConstellation,
    r_re: f64,
    r_im: f64,
    n0: f64,
    sigma_p2: f64,
    detector: PnDetector,
    posteriors: *mut f64,
    capacity: usize,
    hard_index: *mut usize,
) -> PnStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let c = unsafe { handle(c) }?;
        let sample = ReceivedSample::new(Complex64::new(r_re, r_im), n0, sigma_p2).map_err(core_error)?;
        if !posteriors.is_null() && capacity < c.len() {
            return Err((
                PnStatus::BufferTooSmall,
                format!("posterior buffer holds {capacity}, need {}", c.len()),
            ));
        }
        let decision =
            soft_decide(&sample, c, detector.into(), &DecideOptions::default()).map_err(core_error)?;
        if !posteriors.is_null() {
            // SAFETY: checked non-null and large enough above.
            let out = unsafe { std::slice::from_raw_parts_mut(posteriors, c.len()) };
            out.copy_from_slice(&decision.posteriors);
        }
        if !hard_index.is_null() {
            // SAFETY: checked non-null.
            unsafe { *hard_index = decision.hard_index };
        }
        Ok(())
    })
}

/// Union bound on the SEP of the Gaussian amplitude-phase detector.
///
/// # Safety
/// `c` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pn_union_bound(c: *const PnConstellation, n0: f64, sigma_p2: f64, out: *mut f64) -> PnStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let c = unsafe { handle(c) }?;
        let bound = union_bound(c, n0, sigma_p2).map_err(core_error)?;
        // SAFETY: forwarded caller contract.
        unsafe { write(out, bound.total, "out") }
    })
}

/// High-SNR error floor of the Gaussian amplitude-phase detector.
///
/// # Safety
/// `c` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pn_error_floor(c: *const PnConstellation, sigma_p2: f64, out: *mut f64) -> PnStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let c = unsafe { handle(c) }?;
        let floor = error_floor(c, sigma_p2).map_err(core_error)?;
        // SAFETY: forwarded caller contract.
        unsafe { write(out, floor, "out") }
    })
}

/// Gaussian tail probability `Q(x)`.
#[no_mangle]
pub extern "C" fn pn_q_function(x: f64) -> f64 {
    q_function(x)
}

/// Complex noise variance for unit symbol energy at the given Eb/N0.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pn_eb_n0_to_n0(eb_n0_db: f64, bits_per_symbol: f64, out: *mut f64) -> PnStatus {
    guard(|| {
        let n0 = eb_n0_to_n0(eb_n0_db, bits_per_symbol).map_err(core_error)?;
        // SAFETY: forwarded caller contract.
        unsafe { write(out, n0, "out") }
    })
}

/// Message for the most recent failed call on this thread; empty after a
/// success. The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn pn_status_string(status: PnStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        PnStatus::Ok => b"ok\0",
        PnStatus::NullPointer => b"null pointer\0",
        PnStatus::InvalidArgument => b"invalid argument\0",
        PnStatus::UnsupportedOrder => b"unsupported constellation order\0",
        PnStatus::InvalidConstellation => b"invalid constellation\0",
        PnStatus::DegenerateVariance => b"zero phase variance\0",
        PnStatus::NumericalFailure => b"numerical failure\0",
        PnStatus::BufferTooSmall => b"buffer too small\0",
        PnStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}
