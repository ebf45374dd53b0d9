//! Experiment pipelines behind the command-line verbs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cloud::{generate_lattice, generate_rsa, validate, Aabb, CloudStats, ParticleCloud};
use crate::config::{CloudSpec, ExperimentConfig, GeneratorKind};
use crate::effective::{
    assemble_mn, einstein_coefficient_with, hminus1_distance, lp_field_distance, tilde_vc_grid, uniform_meff,
    EinsteinOrder, ExclusionRegion, GridSpec,
};
use crate::reflections::{
    dense_fixed_point, evaluate_velocity, run_reflections, ReflectionOptions, StressletSolution, VelocityMode,
    DENSE_LIMIT,
};
use crate::{Error, Result, Vec3};

/// RSA exclusion distance as a fraction of the mean spacing `(|K|/N)^{1/3}`.
pub const RSA_SPACING_FRACTION: f64 = 0.7;

pub fn generate(config: &ExperimentConfig) -> Result<(ParticleCloud, CloudStats)> {
    let cloud = match &config.cloud {
        CloudSpec::Lattice { n_per_axis, a } => generate_lattice(config.bbox, *n_per_axis, *a)?,
        CloudSpec::Rsa { n, a, dmin, max_attempts } => {
            generate_rsa(config.bbox, *n, *a, *dmin, config.seed, *max_attempts)?
        }
        CloudSpec::File { path } => ParticleCloud::read(path)?,
    };
    let stats = validate(&cloud)?;
    Ok((cloud, stats))
}

/// Radius giving volume fraction `phi` for `n` spheres in `bbox`.
pub fn radius_for_fraction(bbox: &Aabb, n: usize, phi: f64) -> f64 {
    (3.0 * phi * bbox.volume() / (4.0 * std::f64::consts::PI * n as f64)).cbrt()
}

/// `n` spheres of radius `a`: the first `n` sites (row-major) of the smallest
/// cubic lattice with at least `n` sites, or an RSA sample.
pub fn sample_cloud(kind: GeneratorKind, bbox: Aabb, n: usize, a: f64, seed: u64) -> Result<ParticleCloud> {
    match kind {
        GeneratorKind::Lattice => {
            let mut k = (n as f64).cbrt().round() as usize;
            while k.pow(3) < n {
                k += 1;
            }
            let mut cloud = generate_lattice(bbox, k.max(1), a)?;
            cloud.centers.truncate(n);
            cloud.mobilities.truncate(n);
            Ok(cloud)
        }
        GeneratorKind::Rsa => {
            let spacing = (bbox.volume() / n as f64).cbrt();
            let dmin = (RSA_SPACING_FRACTION * spacing).max(5.0 * a);
            generate_rsa(bbox, n, a, dmin, seed, None)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectReport {
    pub stats: CloudStats,
    pub solution: StressletSolution,
    /// `‖A⁽ⁿ⁺¹⁾‖/‖A⁽ⁿ⁾‖` for consecutive levels.
    pub ratios: Vec<f64>,
    /// `max_l |Â_l − Â_l^dense|` when the dense oracle ran.
    pub oracle_deviation: Option<f64>,
}

pub fn reflect(config: &ExperimentConfig, cloud: &ParticleCloud, oracle: bool) -> Result<ReflectReport> {
    let stats = validate(cloud)?;
    let solution = run_reflections(cloud, config.strain, &config.solver.options())?;
    let ratios = solution
        .norm_history
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let oracle_deviation = if oracle && 5 * cloud.len() <= DENSE_LIMIT {
        let dense = dense_fixed_point(cloud, config.strain)?;
        Some(solution.a_hat.iter().zip(&dense.a_hat).map(|(x, y)| (*x - *y).norm()).fold(0.0, f64::max))
    } else {
        None
    };
    Ok(ReflectReport { stats, solution, ratios, oracle_deviation })
}

/// One row per reflection step: the norm of the new level and its ratio to
/// the previous one.
pub fn write_history_csv<W: Write>(report: &ReflectReport, mut w: W) -> Result<()> {
    writeln!(w, "iteration,norm,ratio")?;
    for (i, r) in report.ratios.iter().enumerate() {
        writeln!(w, "{},{:e},{r:e}", i + 1, report.solution.norm_history[i + 1])?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EinsteinRow {
    pub generator: GeneratorKind,
    pub n: usize,
    pub phi: f64,
    pub a: f64,
    pub first: f64,
    pub converged: f64,
}

pub fn einstein_sweep(config: &ExperimentConfig) -> Result<Vec<EinsteinRow>> {
    let opts = ReflectionOptions { fixed_levels: None, ..config.solver.options() };
    let mut rows = Vec::new();
    for &generator in &config.einstein.generators {
        for &n in &config.einstein.counts {
            for &phi in &config.einstein.phis {
                let a = radius_for_fraction(&config.bbox, n, phi);
                let cloud = sample_cloud(generator, config.bbox, n, a, config.seed)?;
                let first = einstein_coefficient_with(&cloud, &config.strain, EinsteinOrder::First, &opts)?;
                let converged = einstein_coefficient_with(&cloud, &config.strain, EinsteinOrder::Converged, &opts)?;
                rows.push(EinsteinRow { generator, n, phi, a, first, converged });
            }
        }
    }
    Ok(rows)
}

pub fn write_einstein_csv<W: Write>(rows: &[EinsteinRow], mut w: W) -> Result<()> {
    writeln!(w, "generator,N,phi,a,first_order,converged")?;
    for r in rows {
        let g = match r.generator {
            GeneratorKind::Lattice => "lattice",
            GeneratorKind::Rsa => "rsa",
        };
        writeln!(w, "{g},{},{:e},{:e},{:.15},{:.15}", r.n, r.phi, r.a, r.first, r.converged)?;
    }
    Ok(())
}

/// Quantities of one comparison between the particle system and the
/// homogenized model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub phi: f64,
    pub n: usize,
    pub a: f64,
    pub d: f64,
    pub a3_over_d3: f64,
    pub p: f64,
    pub theta: f64,
    /// `‖M_N − M_eff‖_{Ḣ⁻¹}`.
    pub hminus1: f64,
    /// `‖u_app − (Ax + ṽ_c)‖_{Lᵖ}` outside the balls `B(x_l, 4a)`.
    pub lp_proxy: f64,
    /// `(a³/d³)^{1+θ}`.
    pub separation_term: f64,
    /// `sup‖M_eff‖²`.
    pub sup_meff_sq: f64,
    /// `‖M_N‖_{L¹}` with the Frobenius norm per cell; monitored, bounded by a
    /// multiple of `a³/d³`.
    pub mn_l1: f64,
    pub supersample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Least-squares slopes of `log(term)` against `log(a³/d³)` over the rows.
    pub slopes: CompareSlopes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSlopes {
    pub hminus1: Option<f64>,
    pub lp_proxy: Option<f64>,
    pub separation_term: Option<f64>,
    pub sup_meff_sq: Option<f64>,
    /// `1 + θ`.
    pub expected: f64,
}

/// One comparison at volume fraction `phi` on a cubic lattice.
pub fn compare_one(config: &ExperimentConfig, phi: f64) -> Result<CompareRow> {
    let cmp = &config.compare;
    if !(1.0..1.5).contains(&cmp.p) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, 3/2), got {}", cmp.p)));
    }
    let bbox = config.bbox;
    let k = cmp.n_per_axis;
    let n = k.pow(3);
    let a = radius_for_fraction(&bbox, n, phi);
    let cloud = generate_lattice(bbox, k, a)?;
    let stats = validate(&cloud)?;
    let opts = ReflectionOptions { fixed_levels: Some(cmp.levels), ..config.solver.options() };
    let sol = run_reflections(&cloud, config.strain, &opts)?;

    let vgrid = GridSpec::new(bbox, config.grid.n)?;
    let model = uniform_meff(vgrid, bbox, stats.phi_global, cmp.coefficient)?;
    let vc = tilde_vc_grid(&model, &config.strain)?;
    let region = ExclusionRegion::from_cloud(&cloud);
    let a_mat = config.strain.embed();
    let lp_proxy = lp_field_distance(
        |pts: &[Vec3]| evaluate_velocity(&cloud, &sol, &config.strain, pts, VelocityMode::SphereFull),
        |pts: &[Vec3]| {
            pts.iter()
                .map(|x| {
                    let (i, j, l) = vgrid
                        .locate(x)
                        .ok_or_else(|| Error::Domain(format!("point {x:?} outside the velocity grid")))?;
                    let idx = vgrid.index(i, j, l);
                    Ok(a_mat * x + Vec3::new(vc.get(0, idx), vc.get(1, idx), vc.get(2, idx)))
                })
                .collect()
        },
        &region,
        cmp.p,
        &vgrid,
    )?;

    let side = bbox.side(0);
    let hgrid = GridSpec::new(bbox.expanded(config.grid.padding * side), config.grid.hminus1_n)?;
    let supersample = config.grid.supersample.unwrap_or_else(|| ((4.0 * hgrid.h() / a).ceil() as usize).max(2));
    let mn = assemble_mn(&cloud, hgrid, supersample)?;
    let meff = uniform_meff(hgrid, bbox, stats.phi_global, cmp.coefficient)?;
    let hminus1 = hminus1_distance(&mn, &meff.field)?;
    let mn_l1 = hgrid.cell_volume()
        * (0..hgrid.num_cells()).map(|i| mn.cell(i).iter().map(|v| v * v).sum::<f64>().sqrt()).sum::<f64>();

    let theta = 1.0 / cmp.p - 2.0 / 3.0;
    let a3_over_d3 = (a / stats.d).powi(3);
    let sup = cmp.coefficient * stats.phi_global;
    Ok(CompareRow {
        phi,
        n,
        a,
        d: stats.d,
        a3_over_d3,
        p: cmp.p,
        theta,
        hminus1,
        lp_proxy,
        separation_term: a3_over_d3.powf(1.0 + theta),
        sup_meff_sq: sup * sup,
        mn_l1,
        supersample,
    })
}

pub fn compare(config: &ExperimentConfig) -> Result<CompareReport> {
    let rows = config.compare.phis.iter().map(|&phi| compare_one(config, phi)).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.a3_over_d3).collect();
    let slope = |f: fn(&CompareRow) -> f64| log_log_slope(&x, &rows.iter().map(f).collect::<Vec<_>>());
    let slopes = CompareSlopes {
        hminus1: slope(|r| r.hminus1),
        lp_proxy: slope(|r| r.lp_proxy),
        separation_term: slope(|r| r.separation_term),
        sup_meff_sq: slope(|r| r.sup_meff_sq),
        expected: 1.0 + 1.0 / config.compare.p - 2.0 / 3.0,
    };
    Ok(CompareReport { rows, slopes })
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than two
/// distinct points or non-positive data.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

pub fn write_compare_csv<W: Write>(report: &CompareReport, mut w: W) -> Result<()> {
    writeln!(w, "phi,N,a,d,a3_over_d3,p,theta,hminus1,lp_proxy,separation_term,sup_meff_sq,mn_l1")?;
    for r in &report.rows {
        writeln!(
            w,
            "{:e},{},{:e},{:e},{:e},{},{},{:e},{:e},{:e},{:e},{:e}",
            r.phi,
            r.n,
            r.a,
            r.d,
            r.a3_over_d3,
            r.p,
            r.theta,
            r.hminus1,
            r.lp_proxy,
            r.separation_term,
            r.sup_meff_sq,
            r.mn_l1
        )?;
    }
    Ok(())
}

/// Outcome of one built-in invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, error: f64, tolerance: f64) -> Self {
        Check { name: name.into(), error, tolerance, passed: error <= tolerance }
    }
}

/// Fast self-checks of the kernels, quadratures and norms.
pub fn invariant_suite() -> Result<Vec<Check>> {
    use crate::kernels::{mobility_from_boundary_integral, sphere_disturbance, stresslet_velocity_gradient};
    use crate::sym3::{Mobility, SymTraceFree3};
    use crate::effective::{EinsteinOrder, GridField};

    let mut out = Vec::new();
    let mob = mobility_from_boundary_integral(1.0, crate::kernels::DEFAULT_MOBILITY_ORDER)?;
    let dev = (mob.0 - Mobility::sphere(1.0).0).abs().max();
    out.push(Check::new("sphere_mobility", dev, 1e-8));

    let s = SymTraceFree3::new([0.3, -0.5, 0.2, 0.8, -0.1]);
    let mut div: f64 = 0.0;
    for x in [Vec3::new(1.0, 0.2, -0.4), Vec3::new(-0.3, 2.0, 0.7), Vec3::new(0.5, -0.5, -1.5)] {
        div = div.max(stresslet_velocity_gradient(&s, &x)?.trace().abs());
    }
    out.push(Check::new("stresslet_divergence", div, 1e-12));

    let mut bc: f64 = 0.0;
    let a_mat = s.embed();
    for dir in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.6, 0.8, 0.0), Vec3::new(0.0, -0.6, 0.8)] {
        let x = dir * 0.7;
        bc = bc.max((sphere_disturbance(&s, 0.7, &x)? + a_mat * x).norm());
    }
    out.push(Check::new("sphere_boundary_condition", bc, 1e-12));

    let grid = GridSpec::new(Aabb::cube([-8.0; 3], 16.0), 64)?;
    let g = GridField::from_fn(grid, |x| (-0.5 * x.norm_squared()).exp());
    let h = hminus1_distance(&g, &GridField::scalar(grid))?;
    let want = (2.0 * std::f64::consts::PI.powf(1.5)).sqrt();
    out.push(Check::new("hminus1_gaussian_relative", (h - want).abs() / want, 1e-2));

    let cloud = generate_lattice(Aabb::unit(), 3, 0.02)?;
    let c = crate::effective::einstein_coefficient(&cloud, &s, EinsteinOrder::First)?;
    out.push(Check::new("einstein_first_order", (c - 2.5).abs(), 1e-12));
    Ok(out)
}
