//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stokes_reflect::cloud::{generate_rsa, validate, Aabb, ParticleCloud};
use stokes_reflect::config::{CloudSpec, ExperimentConfig};
use stokes_reflect::effective::{hminus1_distance, model_from_cloud, tilde_vc, GridField, GridSpec};
use stokes_reflect::experiments::{compare, einstein_sweep, log_log_slope};
use stokes_reflect::kernels::{
    mean_value_reconstruct, mobility_from_boundary_integral, oseen, oseen_pressure, sphere_disturbance,
    stresslet_field, stresslet_strain, DEFAULT_MOBILITY_ORDER,
};
use stokes_reflect::reflections::{
    contraction_diagnostic, dense_fixed_point, level_norm, run_reflections, ReflectionOptions,
};
use stokes_reflect::{Mat3, Mobility, SymTraceFree3, Vec3};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s, format!("runtime {:.2}s exceeds {limit_s}s", elapsed.as_secs_f64()))
}

fn random_strain(rng: &mut ChaCha8Rng) -> SymTraceFree3 {
    SymTraceFree3::new(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

fn random_point(rng: &mut ChaCha8Rng, rmin: f64, rmax: f64) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n * rng.gen_range(rmin..rmax);
        }
    }
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    random_point(rng, 0.5, 2.0).normalize()
}

fn sphere_mobility() -> Outcome {
    let t = Instant::now();
    let m = mobility_from_boundary_integral(1.0, DEFAULT_MOBILITY_ORDER).map_err(|e| e.to_string())?;
    let dev = (m.0 - Mobility::sphere(1.0).0).abs().max();
    within(t.elapsed(), 1.0)?;
    check(dev <= 1e-8, format!("max entry deviation {dev:e}"))?;
    Ok(format!("max entry deviation {dev:.2e}"))
}

fn einstein() -> Outcome {
    let t = Instant::now();
    let rows = einstein_sweep(&ExperimentConfig::default()).map_err(|e| e.to_string())?;
    within(t.elapsed(), 30.0)?;
    check(rows.len() == 18, format!("expected 18 rows, got {}", rows.len()))?;
    let first = rows.iter().map(|r| (r.first - 2.5).abs()).fold(0.0, f64::max);
    let conv = rows.iter().filter(|r| r.phi <= 1e-3).map(|r| (r.converged - 2.5).abs()).fold(0.0, f64::max);
    check(first <= 1e-12, format!("first-order deviation {first:e}"))?;
    check(conv <= 0.1, format!("converged deviation {conv:e} at phi <= 1e-3"))?;
    Ok(format!("first-order max |c-2.5| = {first:.1e}, converged (phi<=1e-3) max |c-2.5| = {conv:.1e}"))
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let n = 10 + 2 * i as usize;
        let dmin = 0.12;
        let cloud = generate_rsa(Aabb::unit(), n, 0.2 * dmin, dmin, 100 + i, None).map_err(|e| e.to_string())?;
        let stats = validate(&cloud).map_err(|e| e.to_string())?;
        check((cloud.a / stats.d).powi(3) <= 1e-2, format!("cloud {i} violates a^3/d^3 <= 1e-2"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let a = random_strain(&mut rng);
        let iter = run_reflections(&cloud, a, &ReflectionOptions::default()).map_err(|e| e.to_string())?;
        let dense = dense_fixed_point(&cloud, a).map_err(|e| e.to_string())?;
        let diff: Vec<SymTraceFree3> = iter.a_hat.iter().zip(&dense.a_hat).map(|(x, y)| *x - *y).collect();
        worst = worst.max(level_norm(&diff, 2.0) / a.norm());
    }
    within(t.elapsed(), 60.0)?;
    check(worst <= 1e-8, format!("max relative deviation {worst:e}"))?;
    Ok(format!("20 clouds, max ||A_reflect - A_dense|| / ||A|| = {worst:.2e}"))
}

fn contraction_scaling() -> Outcome {
    let t = Instant::now();
    let a = SymTraceFree3::new([1.0, 0.3, -0.2, 0.5, 0.1]);
    let base = generate_rsa(Aabb::unit(), 60, 0.01, 0.1, 7, None).map_err(|e| e.to_string())?;
    let r0 = contraction_diagnostic(&base, a, 2.0, 3).map_err(|e| e.to_string())?;
    let mut homog: f64 = 0.0;
    for lambda in [2.0f64, 4.0] {
        let r = contraction_diagnostic(&base.dilate_centers(lambda), a, 2.0, 3).map_err(|e| e.to_string())?;
        for (x, y) in r0.iter().zip(&r) {
            homog = homog.max((y * lambda.powi(3) - x).abs() / x);
        }
    }
    check(homog < 1e-10, format!("dilation relative error {homog:e}"))?;

    let dmin = 0.08;
    let ratios_ad = [0.05, 0.1, 0.2];
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (k, &ad) in ratios_ad.iter().enumerate() {
        for seed in 0..5u64 {
            let cloud = generate_rsa(Aabb::unit(), 100, ad * dmin, dmin, 1000 * k as u64 + seed, None)
                .map_err(|e| e.to_string())?;
            let stats = validate(&cloud).map_err(|e| e.to_string())?;
            let ratio = contraction_diagnostic(&cloud, a, 2.0, 1).map_err(|e| e.to_string())?[0];
            samples.push((cloud.a / stats.d, ratio));
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().cloned().unzip();
    let slope = log_log_slope(&x, &y).ok_or("slope undefined")?;
    // envelope constant fitted on the densest ensemble, checked on all of them
    let largest = x.iter().cloned().fold(0.0, f64::max);
    let c = samples
        .iter()
        .filter(|(ad, _)| *ad >= 0.5 * largest)
        .map(|(ad, r)| r / ad.powf(1.5))
        .fold(0.0, f64::max);
    let bounded = samples.iter().all(|(ad, r)| *r <= c * ad.powf(1.5));
    within(t.elapsed(), 120.0)?;
    check((1.4..=3.1).contains(&slope), format!("fitted slope {slope:.3} outside [1.4, 3.1]"))?;
    check(bounded, format!("some ratio exceeds C (a/d)^1.5 with C = {c:.3e}"))?;
    Ok(format!("dilation error {homog:.1e}, slope {slope:.3}, C = {c:.3e}"))
}

fn fd_jacobian<F: Fn(&Vec3) -> Vec3>(f: F, x: &Vec3, h: f64) -> Mat3 {
    let mut j = Mat3::zeros();
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        let d = (f(&(x + e)) - f(&(x - e))) / (2.0 * h);
        j.set_column(k, &d);
    }
    j
}

fn kernel_identities() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // -ΔO + ∇q = 0 column by column
    let h = 1e-4;
    let mut stokes: f64 = 0.0;
    for _ in 0..100 {
        let x = random_point(&mut rng, 1.0, 10.0);
        for j in 0..3 {
            let mut lap = Vec3::zeros();
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = h;
                let col = |y: &Vec3| oseen(y).unwrap().column(j).into_owned();
                lap += (col(&(x + e)) - 2.0 * col(&x) + col(&(x - e))) / (h * h);
            }
            let grad_q = fd_jacobian(|y| oseen_pressure(y).unwrap(), &x, h).column(j).into_owned();
            stokes = stokes.max((-lap + grad_q).norm());
        }
    }
    check(stokes < 1e-4, format!("Stokes residual {stokes:e}"))?;

    let mob = Mobility::sphere(0.7);
    let mut div: f64 = 0.0;
    let mut strain_err: f64 = 0.0;
    for _ in 0..100 {
        let s = random_strain(&mut rng);
        let x = random_point(&mut rng, 1.0, 10.0);
        let step = 1e-5 * x.norm();
        let jac = fd_jacobian(|y| stresslet_field(&mob, &s, y).unwrap(), &x, step);
        div = div.max(jac.trace().abs());
        let fd = SymTraceFree3::project(&jac);
        let exact = stresslet_strain(&mob, &s, &x).unwrap();
        strain_err = strain_err.max((fd - exact).norm() / exact.norm());
    }
    check(div < 1e-6, format!("stresslet divergence {div:e}"))?;
    check(strain_err < 1e-7, format!("strain vs finite differences {strain_err:e}"))?;

    let mut homog: f64 = 0.0;
    for _ in 0..20 {
        let s = random_strain(&mut rng);
        let x = random_point(&mut rng, 0.5, 5.0);
        let k = stresslet_field(&mob, &s, &x).unwrap();
        let d = stresslet_strain(&mob, &s, &x).unwrap();
        for lambda in [2.0f64, 4.0, 8.0] {
            let kl = stresslet_field(&mob, &s, &(x * lambda)).unwrap() * lambda.powi(2);
            let dl = stresslet_strain(&mob, &s, &(x * lambda)).unwrap();
            homog = homog.max((kl - k).norm() / k.norm());
            homog = homog.max((lambda.powi(3) * dl - d).norm() / d.norm());
        }
    }
    check(homog < 1e-12, format!("homogeneity {homog:e}"))?;

    let mut bc: f64 = 0.0;
    for _ in 0..500 {
        let a = rng.gen_range(0.1..3.0);
        let s = random_strain(&mut rng);
        let x = unit_vector(&mut rng) * a;
        let err = (sphere_disturbance(&s, a, &x).unwrap() + s.embed() * x).norm() / (s.norm() * a);
        bc = bc.max(err);
    }
    check(bc < 1e-12, format!("sphere boundary condition {bc:e}"))?;

    // far field of the sphere solution is the stresslet with the sphere mobility
    let s = random_strain(&mut rng);
    let xh = unit_vector(&mut rng);
    let u = sphere_disturbance(&s, 1.0, &(xh * 100.0)).unwrap();
    let k = stresslet_field(&Mobility::sphere(1.0), &s, &(xh * 100.0)).unwrap();
    let far = (u - k).norm() / k.norm();
    check(far < 1e-3, format!("far-field mismatch {far:e}"))?;

    within(t.elapsed(), 10.0)?;
    Ok(format!(
        "stokes {stokes:.1e}, div {div:.1e}, strain {strain_err:.1e}, homogeneity {homog:.1e}, bc {bc:.1e}, far field {far:.1e}"
    ))
}

fn mean_value() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = random_point(&mut rng, 0.0, 3.0);
        let r = rng.gen_range(0.1..2.0);
        // u = |y|², Δu = 6, ball average |x|² + 3r²/5
        let got = mean_value_reconstruct(x.norm_squared() + 0.6 * r * r, r, |_| 6.0).map_err(|e| e.to_string())?;
        worst = worst.max((got - x.norm_squared()).abs());
        // harmonic u: the ball average is the center value
        let u = x[0] * x[0] - x[1] * x[1] + 3.0 * x[0] * x[2] - x[1];
        let got = mean_value_reconstruct(u, r, |_| 0.0).map_err(|e| e.to_string())?;
        worst = worst.max((got - u).abs());
    }
    within(t.elapsed(), 1.0)?;
    check(worst <= 1e-9, format!("max error {worst:e}"))?;
    Ok(format!("max recovery error {worst:.1e}"))
}

fn hminus1_gaussian() -> Outcome {
    let t = Instant::now();
    let grid = GridSpec::new(Aabb::cube([-8.0; 3], 16.0), 128).map_err(|e| e.to_string())?;
    let g = GridField::from_fn(grid, |x| (-0.5 * x.norm_squared()).exp());
    let got = hminus1_distance(&g, &GridField::scalar(grid)).map_err(|e| e.to_string())?;
    let want = (2.0 * PI.powf(1.5)).sqrt();
    let rel = (got - want).abs() / want;
    within(t.elapsed(), 10.0)?;
    check(rel < 0.01, format!("{got} vs {want}"))?;
    Ok(format!("{got:.6} vs {want:.6} (relative {rel:.1e})"))
}

fn single_sphere() -> Outcome {
    let t = Instant::now();
    let a = 1.0;
    let bbox = Aabb::cube([-1.25; 3], 2.5);
    let cloud = ParticleCloud::spheres(vec![Vec3::zeros()], a, bbox);
    let grid = GridSpec::new(bbox, 64).map_err(|e| e.to_string())?;
    let model = model_from_cloud(&cloud, grid, 2).map_err(|e| e.to_string())?;
    let s = SymTraceFree3::new([0.8, -0.4, 0.3, 0.5, -0.2]);
    let dirs = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, 0.9, -0.2), Vec3::new(-0.5, 0.5, 0.7), Vec3::new(0.1, -0.2, 1.0)];
    let points: Vec<Vec3> = dirs.iter().map(|d| d.normalize() * 20.0 * a).collect();
    let got = tilde_vc(&model, &s, &points).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (x, u) in points.iter().zip(&got) {
        let k = stresslet_field(&Mobility::sphere(a), &s, x).map_err(|e| e.to_string())?;
        worst = worst.max((u - k).norm() / k.norm());
    }
    within(t.elapsed(), 10.0)?;
    check(worst < 0.02, format!("relative error {worst:e}"))?;
    Ok(format!("max relative error at |x| = 20a: {worst:.2e}"))
}

fn theorem_trend() -> Outcome {
    let t = Instant::now();
    let cfg = ExperimentConfig::default();
    let report = compare(&cfg).map_err(|e| e.to_string())?;
    let rows = &report.rows;
    check(rows.len() == 3, "expected three rows".into())?;
    // rows are ordered by decreasing phi
    let decreasing = |f: &dyn Fn(usize) -> f64| (1..rows.len()).all(|i| f(i) < f(i - 1));
    check(decreasing(&|i| rows[i].lp_proxy), "Lp proxy not strictly decreasing".into())?;
    check(decreasing(&|i| rows[i].hminus1), "H^-1 term not strictly decreasing".into())?;
    check(decreasing(&|i| rows[i].separation_term), "separation term not strictly decreasing".into())?;
    check(decreasing(&|i| rows[i].sup_meff_sq), "sup-norm term not strictly decreasing".into())?;
    let expected = report.slopes.expected;
    let x: Vec<f64> = rows.iter().map(|r| r.a3_over_d3).collect();
    let bound: Vec<f64> = rows.iter().map(|r| r.hminus1 + r.separation_term + r.sup_meff_sq).collect();
    let bound_slope = log_log_slope(&x, &bound).ok_or("slope undefined")?;
    let sep = report.slopes.separation_term.ok_or("slope undefined")?;
    check((sep - expected).abs() < 1e-9, format!("separation term slope {sep}"))?;
    check(
        (bound_slope - expected).abs() <= 0.3 * expected,
        format!("bound slope {bound_slope:.3} not within 30% of {expected:.4}"),
    )?;
    within(t.elapsed(), 300.0)?;
    Ok(format!(
        "bound slope {bound_slope:.3} vs 1+theta = {expected:.4}; term slopes: H^-1 {:.3}, separation {sep:.4}, sup^2 {:.3}; Lp proxy slope {:.3} (monotone)",
        report.slopes.hminus1.unwrap_or(f64::NAN),
        report.slopes.sup_meff_sq.unwrap_or(f64::NAN),
        report.slopes.lp_proxy.unwrap_or(f64::NAN),
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        seed: 11,
        cloud: CloudSpec::Rsa { n: 300, a: 0.004, dmin: 0.05, max_attempts: None },
        ..Default::default()
    };
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, cfg.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_stokes-reflect"))
            .arg("reflect")
            .arg("--deterministic")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out-dir")
            .arg(&out)
            .env("STOKES_REFLECT_THREADS", if run == 0 { "1" } else { "4" })
            .status()
            .map_err(|e| e.to_string())?;
        check(status.success(), format!("reflect exited with {status}"))?;
        outputs.push(std::fs::read(out.join("solution.json")).map_err(|e| e.to_string())?);
    }
    check(outputs[0] == outputs[1], "solution files differ".into())?;
    Ok(format!("two runs (1 and 4 threads), {} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("sphere mobility", sphere_mobility),
        ("Einstein coefficient", einstein),
        ("oracle equivalence", oracle_equivalence),
        ("contraction scaling", contraction_scaling),
        ("kernel identities", kernel_identities),
        ("mean-value formula", mean_value),
        ("H^-1 Gaussian norm", hminus1_gaussian),
        ("single-sphere homogenization", single_sphere),
        ("homogenization error trend", theorem_trend),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
