//! C interface to the spherecone library.
//!
//! Every fallible function returns an [`SpcStatus`]; on failure a message is
//! available from [`spc_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spherecone::finance::{brownian_transform, price_option, ConstructionKind, Generator, OptionKind, OptionSpec};
use spherecone::lds::{DirectionNumberTable, Scramble, SobolStream};
use spherecone::spheremap::{Lift, SpacePoint};
use spherecone::wce::{wce_nakagami, KernelParams};
use spherecone::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid parameters or shapes.
    InvalidArgument = 2,
    /// A numerical routine failed or overflowed.
    Numeric = 3,
    /// A Sobol' stream ran out of points.
    Exhausted = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpcStatus {
    match e {
        Error::Numeric(_) | Error::Infinite(_) => SpcStatus::Numeric,
        Error::Exhausted(_) => SpcStatus::Exhausted,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => SpcStatus::Io,
        _ => SpcStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), SpcStatus>>(f: F) -> SpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside spherecone".into());
            SpcStatus::Panic
        }
    }
}

fn check<T>(r: spherecone::Result<T>) -> Result<T, SpcStatus> {
    r.map_err(|e| {
        let s = status_of(&e);
        set_error(e.to_string());
        s
    })
}

fn invalid<T>(msg: String) -> Result<T, SpcStatus> {
    set_error(msg);
    Err(SpcStatus::InvalidArgument)
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), SpcStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(SpcStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn spc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque Sobol' stream.
pub struct SpcSobol(SobolStream);

/// Creates a Sobol' stream in `dim` dimensions. With `scrambled != 0` the
/// stream is scrambled with `(seed, replicate)`. `dirfile` may be null for
/// the built-in direction numbers.
///
/// # Safety
/// `out` must be valid for a write; `dirfile` null or a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn spc_sobol_new(
    dim: usize,
    scrambled: i32,
    seed: u64,
    replicate: u64,
    dirfile: *const c_char,
    out: *mut *mut SpcSobol,
) -> SpcStatus {
    guard(|| {
        non_null(out, "out")?;
        let scramble = if scrambled != 0 { Scramble::Linear { seed, replicate } } else { Scramble::Off };
        let stream = if dirfile.is_null() {
            check(SobolStream::with_table(DirectionNumberTable::embedded(), dim, scramble))?
        } else {
            let path = std::ffi::CStr::from_ptr(dirfile).to_string_lossy().into_owned();
            let table = check(DirectionNumberTable::from_file(path))?;
            check(SobolStream::with_table(&table, dim, scramble))?
        };
        *out = Box::into_raw(Box::new(SpcSobol(stream)));
        Ok(())
    })
}

/// Writes the next `count` points (row-major, `count * dim` values) into `out`.
///
/// # Safety
/// `handle` must come from [`spc_sobol_new`]; `out` must hold `count * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn spc_sobol_next(handle: *mut SpcSobol, count: usize, out: *mut f64) -> SpcStatus {
    guard(|| {
        non_null(handle, "handle")?;
        non_null(out, "out")?;
        let s = &mut (*handle).0;
        let dim = s.dimension();
        let buf = std::slice::from_raw_parts_mut(out, count * dim);
        for row in buf.chunks_mut(dim) {
            check(s.next_into(row))?;
        }
        Ok(())
    })
}

/// Moves the stream to point `index`.
///
/// # Safety
/// `handle` must come from [`spc_sobol_new`].
#[no_mangle]
pub unsafe extern "C" fn spc_sobol_seek(handle: *mut SpcSobol, index: u64) -> SpcStatus {
    guard(|| {
        non_null(handle, "handle")?;
        check((*handle).0.seek(index))
    })
}

/// Releases a stream; null is ignored.
///
/// # Safety
/// `handle` must come from [`spc_sobol_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spc_sobol_free(handle: *mut SpcSobol) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Maps `x ∈ [0,1)^d` to `R^d` (sphere map for the direction, chi radius).
///
/// # Safety
/// `x` and `out` must each hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn spc_lift_to_space(x: *const f64, d: usize, out: *mut f64) -> SpcStatus {
    guard(|| {
        non_null(x, "x")?;
        non_null(out, "out")?;
        let lift = check(Lift::new(d))?;
        check(lift.lift_into(std::slice::from_raw_parts(x, d), std::slice::from_raw_parts_mut(out, d)))
    })
}

/// Opaque kernel parameters `(μ, A, B)` on `S^d`.
pub struct SpcKernel(KernelParams);

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn spc_kernel_new(mu: f64, a: f64, b: f64, d: usize, out: *mut *mut SpcKernel) -> SpcStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = check(KernelParams::new(mu, a, b, d))?;
        *out = Box::into_raw(Box::new(SpcKernel(p)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`spc_kernel_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spc_kernel_free(handle: *mut SpcKernel) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Worst-case error and its decomposition.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpcWceReport {
    pub wce: f64,
    pub double_sum_term: f64,
    pub single_sum_term: f64,
    pub w_k: f64,
    pub n_points: usize,
    pub clamped: i32,
}

/// Worst-case error of `n` points of `R^{d+1}` given row-major in `points`.
///
/// # Safety
/// `kernel` must come from [`spc_kernel_new`]; `points` must hold `n * (d + 1)`
/// doubles; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn spc_wce(
    kernel: *const SpcKernel,
    points: *const f64,
    n: usize,
    out: *mut SpcWceReport,
) -> SpcStatus {
    guard(|| {
        non_null(kernel, "kernel")?;
        non_null(points, "points")?;
        non_null(out, "out")?;
        let p = &(*kernel).0;
        let ambient = p.d + 1;
        let raw = std::slice::from_raw_parts(points, n * ambient);
        let x: Vec<SpacePoint> = check(raw.chunks(ambient).map(SpacePoint::from_cartesian).collect())?;
        let r = check(wce_nakagami(p, &x))?;
        *out = SpcWceReport {
            wce: r.wce,
            double_sum_term: r.double_sum_term,
            single_sum_term: r.single_sum_term,
            w_k: r.w_k,
            n_points: r.n_points,
            clamped: i32::from(r.clamped),
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcOptionKind {
    Asian = 0,
    Barrier = 1,
    Digital = 2,
    Terminal = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcGenerator {
    Mc = 0,
    Sobol = 1,
    Sphere = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcConstruction {
    Standard = 0,
    Pca = 1,
}

/// Contract and market data. `barrier` is ignored unless `kind` is barrier.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpcOptionSpec {
    pub s0: f64,
    pub strike: f64,
    pub maturity: f64,
    pub sigma: f64,
    pub rate: f64,
    pub steps: usize,
    pub barrier: f64,
    /// One of [`SpcOptionKind`].
    pub kind: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpcPriceEstimate {
    pub mean: f64,
    pub std_dev_across_replicates: f64,
    pub std_error: f64,
}

/// Prices an option with `n_points` paths split into `n_replicates` replicates.
/// `generator` is one of [`SpcGenerator`], `construction` one of [`SpcConstruction`].
///
/// # Safety
/// `spec` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spc_price_option(
    spec: *const SpcOptionSpec,
    generator: u32,
    construction: u32,
    n_points: usize,
    n_replicates: usize,
    seed: u64,
    out: *mut SpcPriceEstimate,
) -> SpcStatus {
    guard(|| {
        non_null(spec, "spec")?;
        non_null(out, "out")?;
        let s = &*spec;
        let kind = match s.kind {
            k if k == SpcOptionKind::Asian as u32 => OptionKind::Asian,
            k if k == SpcOptionKind::Barrier as u32 => OptionKind::Barrier,
            k if k == SpcOptionKind::Digital as u32 => OptionKind::Digital,
            k if k == SpcOptionKind::Terminal as u32 => OptionKind::Terminal,
            k => return invalid(format!("unknown option kind {k}")),
        };
        let barrier = (kind == OptionKind::Barrier).then_some(s.barrier);
        let spec = check(OptionSpec::new(s.s0, s.strike, s.maturity, s.sigma, s.rate, s.steps, barrier, kind))?;
        let g = match generator {
            v if v == SpcGenerator::Mc as u32 => Generator::Mc,
            v if v == SpcGenerator::Sobol as u32 => Generator::SobolInverseNormal,
            v if v == SpcGenerator::Sphere as u32 => Generator::SphereNormal,
            v => return invalid(format!("unknown generator {v}")),
        };
        let c = match construction {
            v if v == SpcConstruction::Standard as u32 => ConstructionKind::Standard,
            v if v == SpcConstruction::Pca as u32 => ConstructionKind::Pca,
            v => return invalid(format!("unknown construction {v}")),
        };
        let cons = check(brownian_transform(spec.steps, spec.maturity, c))?;
        let e = check(price_option(&spec, &cons, g, n_points, n_replicates, seed))?;
        *out = SpcPriceEstimate {
            mean: e.mean,
            std_dev_across_replicates: e.std_dev_across_replicates,
            std_error: e.std_error,
        };
        Ok(())
    })
}
