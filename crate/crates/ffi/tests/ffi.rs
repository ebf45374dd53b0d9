use std::ffi::CStr;
use std::ptr;

use stokes_reflect_ffi::*;

const LO: [f64; 3] = [0.0; 3];
const HI: [f64; 3] = [1.0; 3];
const STRAIN: [f64; 5] = [1.0, 0.0, 0.0, 0.0, 0.0];

fn last_error() -> String {
    let p = sr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn lattice(n: usize, a: f64) -> *mut SrCloud {
    let mut c = ptr::null_mut();
    let st = unsafe { sr_cloud_lattice(LO.as_ptr(), HI.as_ptr(), n, a, &mut c) };
    assert_eq!(st, SrStatus::Ok);
    c
}

#[test]
fn lattice_stats_and_free() {
    let c = lattice(3, 0.01);
    let mut stats = SrCloudStats { n: 0, d: 0.0, phi_global: 0.0, phi_local: 0.0 };
    unsafe {
        assert_eq!(sr_cloud_len(c), 27);
        assert_eq!(sr_cloud_stats(c, &mut stats), SrStatus::Ok);
        sr_cloud_free(c);
        sr_cloud_free(ptr::null_mut());
    }
    assert_eq!(stats.n, 27);
    assert!((stats.phi_local - (0.01f64 / stats.d).powi(3)).abs() < 1e-15);
}

#[test]
fn reflections_match_library() {
    let c = lattice(3, 0.02);
    let mut a_hat = vec![0.0; 5 * 27];
    let mut info = SrReflectInfo { iterations: 0, converged: 0, residual: 0.0 };
    let st = unsafe { sr_run_reflections(c, STRAIN.as_ptr(), ptr::null(), a_hat.as_mut_ptr(), a_hat.len(), &mut info) };
    assert_eq!(st, SrStatus::Ok);
    assert_eq!(info.converged, 1);

    let cloud = stokes_reflect::cloud::generate_lattice(stokes_reflect::Aabb::unit(), 3, 0.02).unwrap();
    let sol = stokes_reflect::reflections::run_reflections(
        &cloud,
        stokes_reflect::SymTraceFree3::new(STRAIN),
        &Default::default(),
    )
    .unwrap();
    let expect: Vec<f64> = sol.a_hat.iter().flat_map(|s| *s.coeffs()).collect();
    assert_eq!(a_hat, expect);

    let mut small = vec![0.0; 5];
    let st = unsafe { sr_run_reflections(c, STRAIN.as_ptr(), ptr::null(), small.as_mut_ptr(), 5, ptr::null_mut()) };
    assert_eq!(st, SrStatus::BufferTooSmall);
    unsafe { sr_cloud_free(c) };
}

#[test]
fn gate_and_options() {
    // a³/d³ = (0.1/0.5)³ = 8e-3 passes the default gate, fails a tighter one
    let c = lattice(2, 0.1);
    let mut out = vec![0.0; 40];
    let mut opts = sr_reflect_options_default();
    opts.gate = 1e-3;
    let st = unsafe { sr_run_reflections(c, STRAIN.as_ptr(), &opts, out.as_mut_ptr(), 40, ptr::null_mut()) };
    assert_eq!(st, SrStatus::Gate);
    assert!(last_error().contains("gate"));
    opts.gate = 0.0;
    opts.fixed_levels = 1;
    let st = unsafe { sr_run_reflections(c, STRAIN.as_ptr(), &opts, out.as_mut_ptr(), 40, ptr::null_mut()) };
    assert_eq!(st, SrStatus::Ok);
    assert_eq!(&out[..5], &STRAIN);
    unsafe { sr_cloud_free(c) };
}

#[test]
fn sphere_mobility_and_einstein() {
    let mut m = [0.0; 25];
    assert_eq!(unsafe { sr_sphere_mobility(0.5, m.as_mut_ptr()) }, SrStatus::Ok);
    let diag = 20.0 * std::f64::consts::PI / 3.0 * 0.125;
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j { diag } else { 0.0 };
            assert!((m[5 * i + j] - want).abs() < 1e-12);
        }
    }
    assert_eq!(unsafe { sr_sphere_mobility(-1.0, m.as_mut_ptr()) }, SrStatus::InvalidParameter);

    let c = lattice(3, 0.01);
    let mut coef = 0.0;
    assert_eq!(unsafe { sr_einstein_coefficient(c, STRAIN.as_ptr(), 0, &mut coef) }, SrStatus::Ok);
    assert!((coef - 2.5).abs() < 1e-12);
    assert_eq!(unsafe { sr_einstein_coefficient(c, STRAIN.as_ptr(), 1, &mut coef) }, SrStatus::Ok);
    assert!((coef - 2.5).abs() < 0.05);
    unsafe { sr_cloud_free(c) };
}

#[test]
fn errors_are_reported() {
    let mut c = ptr::null_mut();
    // spacing 0.05 < 4a
    let centers = [0.5, 0.5, 0.5, 0.55, 0.5, 0.5];
    let st = unsafe { sr_cloud_from_centers(centers.as_ptr(), 2, 0.02, LO.as_ptr(), HI.as_ptr(), &mut c) };
    assert_eq!(st, SrStatus::Geometry);
    assert!(c.is_null());
    assert!(last_error().contains("H2"));

    let st = unsafe { sr_cloud_rsa(LO.as_ptr(), HI.as_ptr(), 100, 0.01, 0.05, 1, 50, &mut c) };
    assert_eq!(st, SrStatus::Geometry);
    assert!(last_error().contains("saturation"));

    let st = unsafe { sr_cloud_lattice(ptr::null(), HI.as_ptr(), 2, 0.01, &mut c) };
    assert_eq!(st, SrStatus::NullPointer);
    let mut x = 0.0;
    assert_eq!(unsafe { sr_einstein_coefficient(ptr::null(), STRAIN.as_ptr(), 0, &mut x) }, SrStatus::NullPointer);
}

#[test]
fn rsa_is_seeded() {
    let mut c1 = ptr::null_mut();
    let mut c2 = ptr::null_mut();
    unsafe {
        assert_eq!(sr_cloud_rsa(LO.as_ptr(), HI.as_ptr(), 50, 0.01, 0.1, 7, 0, &mut c1), SrStatus::Ok);
        assert_eq!(sr_cloud_rsa(LO.as_ptr(), HI.as_ptr(), 50, 0.01, 0.1, 7, 0, &mut c2), SrStatus::Ok);
        let mut a = vec![0.0; 250];
        let mut b = vec![0.0; 250];
        sr_run_reflections(c1, STRAIN.as_ptr(), ptr::null(), a.as_mut_ptr(), 250, ptr::null_mut());
        sr_run_reflections(c2, STRAIN.as_ptr(), ptr::null(), b.as_mut_ptr(), 250, ptr::null_mut());
        assert_eq!(a, b);
        sr_cloud_free(c1);
        sr_cloud_free(c2);
    }
}
