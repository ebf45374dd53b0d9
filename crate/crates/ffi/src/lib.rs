//! C ABI over `stokes-reflect`.
//!
//! Clouds are opaque handles owned by the caller and released with
//! [`sr_cloud_free`]. Every fallible call returns an [`SrStatus`]; on failure
//! the message is available from [`sr_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stokes_reflect::cloud::{self, Aabb};
use stokes_reflect::effective::{einstein_coefficient_with, EinsteinOrder};
use stokes_reflect::reflections::{run_reflections, ReflectionOptions, Summation};
use stokes_reflect::{Error, Mobility, ParticleCloud, SymTraceFree3, Vec3};

/// Status codes. Values 1..=4 agree with the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    Failure = 1,
    /// Separation/containment violated or RSA saturation.
    Geometry = 2,
    /// `a³/d³` above the gate.
    Gate = 3,
    InvalidParameter = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque particle cloud.
pub struct SrCloud {
    inner: ParticleCloud,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrCloudStats {
    pub n: usize,
    /// Minimum separation; `INFINITY` for a single particle.
    pub d: f64,
    pub phi_global: f64,
    pub phi_local: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrReflectOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Maximum `a³/d³`; zero or negative disables the check.
    pub gate: f64,
    /// Nonzero selects the bit-reproducible summation order.
    pub deterministic: i32,
    /// Keep exactly this many levels; zero iterates to `tol`.
    pub fixed_levels: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrReflectInfo {
    pub iterations: usize,
    pub converged: i32,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SrStatus {
    match e.exit_code() {
        2 => SrStatus::Geometry,
        3 => SrStatus::Gate,
        4 => SrStatus::InvalidParameter,
        _ => SrStatus::Failure,
    }
}

fn guard<F: FnOnce() -> Result<(), (SrStatus, String)>>(f: F) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SrStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SrStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (SrStatus, String) {
    (SrStatus::NullPointer, format!("{name} is null"))
}

unsafe fn read_box(lo: *const f64, hi: *const f64) -> Result<Aabb, (SrStatus, String)> {
    if lo.is_null() || hi.is_null() {
        return Err(null("box corner"));
    }
    let lo = [*lo, *lo.add(1), *lo.add(2)];
    let hi = [*hi, *hi.add(1), *hi.add(2)];
    Ok(Aabb::new(lo, hi))
}

unsafe fn read_strain(strain: *const f64) -> Result<SymTraceFree3, (SrStatus, String)> {
    if strain.is_null() {
        return Err(null("strain"));
    }
    let mut c = [0.0; 5];
    c.copy_from_slice(std::slice::from_raw_parts(strain, 5));
    Ok(SymTraceFree3::new(c))
}

unsafe fn cloud_ref<'a>(cloud: *const SrCloud) -> Result<&'a ParticleCloud, (SrStatus, String)> {
    cloud.as_ref().map(|c| &c.inner).ok_or_else(|| null("cloud"))
}

unsafe fn emit(cloud: ParticleCloud, out: *mut *mut SrCloud) {
    *out = Box::into_raw(Box::new(SrCloud { inner: cloud }));
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Cubic lattice of `n_per_axis³` spheres of radius `a` in the box
/// `[lo, hi]`.
///
/// # Safety
/// `lo` and `hi` point to three doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sr_cloud_lattice(
    lo: *const f64,
    hi: *const f64,
    n_per_axis: usize,
    a: f64,
    out: *mut *mut SrCloud,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bbox = read_box(lo, hi)?;
        let c = cloud::generate_lattice(bbox, n_per_axis, a).map_err(lib_err)?;
        emit(c, out);
        Ok(())
    })
}

/// Random sequential addition of `n` spheres with center spacing at least
/// `dmin`. `max_attempts == 0` selects the default budget.
///
/// # Safety
/// `lo` and `hi` point to three doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sr_cloud_rsa(
    lo: *const f64,
    hi: *const f64,
    n: usize,
    a: f64,
    dmin: f64,
    seed: u64,
    max_attempts: usize,
    out: *mut *mut SrCloud,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bbox = read_box(lo, hi)?;
        let budget = (max_attempts > 0).then_some(max_attempts);
        let c = cloud::generate_rsa(bbox, n, a, dmin, seed, budget).map_err(lib_err)?;
        emit(c, out);
        Ok(())
    })
}

/// Spheres at the given centers (`3n` doubles, xyz interleaved). The cloud is
/// validated before it is returned.
///
/// # Safety
/// `centers` points to `3n` doubles; `lo`, `hi` to three each; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sr_cloud_from_centers(
    centers: *const f64,
    n: usize,
    a: f64,
    lo: *const f64,
    hi: *const f64,
    out: *mut *mut SrCloud,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if centers.is_null() && n > 0 {
            return Err(null("centers"));
        }
        let bbox = read_box(lo, hi)?;
        let xyz = if n == 0 { &[][..] } else { std::slice::from_raw_parts(centers, 3 * n) };
        let pts = xyz.chunks_exact(3).map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        let c = ParticleCloud::spheres(pts, a, bbox);
        cloud::validate(&c).map_err(lib_err)?;
        emit(c, out);
        Ok(())
    })
}

/// Releases a cloud. Null is ignored.
///
/// # Safety
/// `cloud` was returned by this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sr_cloud_free(cloud: *mut SrCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Number of particles, or zero for a null handle.
///
/// # Safety
/// `cloud` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sr_cloud_len(cloud: *const SrCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.inner.len())
}

/// # Safety
/// `cloud` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sr_cloud_stats(cloud: *const SrCloud, out: *mut SrCloudStats) -> SrStatus {
    guard(|| {
        let c = cloud_ref(cloud)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = cloud::validate(c).map_err(lib_err)?;
        *out = SrCloudStats { n: s.n, d: s.d, phi_global: s.phi_global, phi_local: s.phi_local };
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sr_reflect_options_default() -> SrReflectOptions {
    let d = ReflectionOptions::default();
    SrReflectOptions {
        tol: d.tol,
        max_iter: d.max_iter,
        gate: d.gate.unwrap_or(0.0),
        deterministic: 1,
        fixed_levels: 0,
    }
}

fn options(o: &SrReflectOptions) -> ReflectionOptions {
    ReflectionOptions {
        tol: o.tol,
        max_iter: o.max_iter,
        gate: (o.gate > 0.0).then_some(o.gate),
        summation: if o.deterministic != 0 { Summation::Deterministic } else { Summation::Chunked },
        fixed_levels: (o.fixed_levels > 0).then_some(o.fixed_levels),
    }
}

/// Sums the reflection series for the background strain `strain` (five basis
/// coordinates). Writes `5·N` doubles of `Â` to `a_hat`, particle-major.
/// `opts` and `info` may be null.
///
/// # Safety
/// `strain` points to five doubles, `a_hat` to `a_hat_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sr_run_reflections(
    cloud: *const SrCloud,
    strain: *const f64,
    opts: *const SrReflectOptions,
    a_hat: *mut f64,
    a_hat_len: usize,
    info: *mut SrReflectInfo,
) -> SrStatus {
    guard(|| {
        let c = cloud_ref(cloud)?;
        let a = read_strain(strain)?;
        let o = opts.as_ref().copied().unwrap_or_else(|| sr_reflect_options_default());
        if a_hat.is_null() {
            return Err(null("a_hat"));
        }
        if a_hat_len < 5 * c.len() {
            return Err((SrStatus::BufferTooSmall, format!("a_hat needs {} doubles, got {a_hat_len}", 5 * c.len())));
        }
        let sol = run_reflections(c, a, &options(&o)).map_err(lib_err)?;
        let out = std::slice::from_raw_parts_mut(a_hat, 5 * c.len());
        for (dst, s) in out.chunks_exact_mut(5).zip(&sol.a_hat) {
            dst.copy_from_slice(s.coeffs());
        }
        if let Some(info) = info.as_mut() {
            *info = SrReflectInfo {
                iterations: sol.iterations,
                converged: sol.converged as i32,
                residual: sol.residual,
            };
        }
        Ok(())
    })
}

/// The 5×5 mobility of a sphere of radius `a`, row-major.
///
/// # Safety
/// `out` points to 25 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sr_sphere_mobility(a: f64, out: *mut f64) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err((SrStatus::InvalidParameter, format!("radius must be positive, got {a}")));
        }
        let m = Mobility::sphere(a).to_row_major();
        std::slice::from_raw_parts_mut(out, 25).copy_from_slice(&m);
        Ok(())
    })
}

/// Einstein coefficient of the cloud; 5/2 for spheres at first order.
/// `converged == 0` uses the first-order strains, otherwise the converged
/// reflection totals.
///
/// # Safety
/// `strain` points to five doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sr_einstein_coefficient(
    cloud: *const SrCloud,
    strain: *const f64,
    converged: i32,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        let c = cloud_ref(cloud)?;
        let a = read_strain(strain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let order = if converged != 0 { EinsteinOrder::Converged } else { EinsteinOrder::First };
        *out = einstein_coefficient_with(c, &a, order, &ReflectionOptions::default()).map_err(lib_err)?;
        Ok(())
    })
}
