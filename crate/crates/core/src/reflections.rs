//! Method of reflections on the strain coefficients.
//!
//! Starting from `A_l⁽⁰⁾ = A`, each reflection sets
//! `A_l⁽ⁿ⁺¹⁾ = Σ_{λ≠l} D(K)[A_λ⁽ⁿ⁾, B_λ](x_l − x_λ)`, the strain induced at
//! particle `l` by the stresslet far fields of all other particles. The
//! accumulated totals `Â_l = Σ_n A_l⁽ⁿ⁾` drive the approximate velocity field
//! `u_app(x) = Ax + Σ_l U[Â_l, B_l](x − x_l)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{validate, ParticleCloud};
use crate::kernels::{sphere_disturbance, stresslet_field};
use crate::sym3::SymTraceFree3;
use crate::{Error, Mat3, Result, Vec3};

/// Default convergence gate on `a³/d³`.
pub const DEFAULT_GATE: f64 = 1e-2;
/// Largest `5N` accepted by [`dense_fixed_point`].
pub const DENSE_LIMIT: usize = 5000;

/// How the per-particle interaction sums are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Summation {
    /// Pairwise (tree) summation in a fixed order; bit-reproducible for any
    /// thread count.
    #[default]
    Deterministic,
    /// Work-stealing parallel reduction over sources; grouping may vary
    /// between runs.
    Chunked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Maximum `a³/d³` accepted; `None` disables the check.
    pub gate: Option<f64>,
    pub summation: Summation,
    /// Keep exactly this many levels `A⁽⁰⁾ … A⁽ᵏ⁻¹⁾` instead of iterating to
    /// tolerance.
    pub fixed_levels: Option<usize>,
}

impl Default for ReflectionOptions {
    fn default() -> Self {
        ReflectionOptions {
            tol: 1e-13,
            max_iter: 200,
            gate: Some(DEFAULT_GATE),
            summation: Summation::Deterministic,
            fixed_levels: None,
        }
    }
}

/// Iterate of the reflection sequence.
#[derive(Debug, Clone)]
pub struct ReflectionState<'c> {
    pub cloud: &'c ParticleCloud,
    /// `A_l⁽ⁿ⁾`.
    pub current: Vec<SymTraceFree3>,
    /// `Σ_{j≤n} A_l⁽ʲ⁾`.
    pub total: Vec<SymTraceFree3>,
    pub n: usize,
    /// ℓ² norm of each level, `norm_history.len() == n + 1`.
    pub norm_history: Vec<f64>,
}

impl<'c> ReflectionState<'c> {
    pub fn new(cloud: &'c ParticleCloud, strain: SymTraceFree3) -> Self {
        let current = vec![strain; cloud.len()];
        let norm = level_norm(&current, 2.0);
        ReflectionState { cloud, total: current.clone(), current, n: 0, norm_history: vec![norm] }
    }
}

/// Converged (or truncated) strain totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressletSolution {
    pub a_hat: Vec<SymTraceFree3>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖Â − A − T(Â)‖₂`.
    pub residual: f64,
    pub norm_history: Vec<f64>,
}

impl StressletSolution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// ℓ^q norm over particles of the Frobenius norms `|A_l|`.
pub fn level_norm(level: &[SymTraceFree3], q: f64) -> f64 {
    if q == 2.0 {
        return level.iter().map(|s| s.dot(s)).sum::<f64>().sqrt();
    }
    level.iter().map(|s| s.norm().powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Projected stresslet strain at offset `z` from a source whose stresslet
/// coefficient (mobility already applied) is the symmetric matrix `s`.
#[inline]
fn pair_strain(s: &Mat3, z: &Vec3) -> SymTraceFree3 {
    let r2 = z.norm_squared();
    let r5 = r2 * r2 * r2.sqrt();
    let sz = s * z;
    let q = z.dot(&sz);
    let c = -3.0 / (8.0 * std::f64::consts::PI * r5);
    // ℙ[δ q/r⁵ + 2 z⊗Sz/r⁵ − 5 z⊗z q/r⁷]; the identity part projects out.
    let g = (z * sz.transpose()) * (2.0 * c) - (z * z.transpose()) * (5.0 * c * q / r2);
    SymTraceFree3::project(&g)
}

fn pairwise_sum<F: Fn(usize) -> SymTraceFree3>(lo: usize, hi: usize, f: &F) -> SymTraceFree3 {
    match hi - lo {
        0 => SymTraceFree3::ZERO,
        1 => f(lo),
        2 => f(lo) + f(lo + 1),
        len => {
            let mid = lo + len / 2;
            pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f)
        }
    }
}

/// Applies the reflection map `T` to a level: `out_l = Σ_{λ≠l} D(K)[m_λ in_λ](x_l − x_λ)`.
pub fn apply_reflection(
    cloud: &ParticleCloud,
    level: &[SymTraceFree3],
    summation: Summation,
) -> Vec<SymTraceFree3> {
    let sources: Vec<Mat3> =
        cloud.mobilities.iter().zip(level).map(|(m, s)| m.apply(s).embed()).collect();
    let centers = &cloud.centers;
    let n = centers.len();
    (0..n)
        .into_par_iter()
        .map(|l| {
            let term = |lam: usize| {
                if lam == l {
                    SymTraceFree3::ZERO
                } else {
                    pair_strain(&sources[lam], &(centers[l] - centers[lam]))
                }
            };
            match summation {
                Summation::Deterministic => pairwise_sum(0, n, &term),
                Summation::Chunked => (0..n)
                    .into_par_iter()
                    .with_min_len(256)
                    .map(term)
                    .reduce(|| SymTraceFree3::ZERO, |a, b| a + b),
            }
        })
        .collect()
}

/// One reflection.
pub fn reflect_step<'c>(state: &ReflectionState<'c>, summation: Summation) -> ReflectionState<'c> {
    let next = apply_reflection(state.cloud, &state.current, summation);
    let total = state.total.iter().zip(&next).map(|(t, c)| *t + *c).collect();
    let mut norm_history = state.norm_history.clone();
    norm_history.push(level_norm(&next, 2.0));
    ReflectionState { cloud: state.cloud, current: next, total, n: state.n + 1, norm_history }
}

fn check_gate(cloud: &ParticleCloud, gate: Option<f64>) -> Result<()> {
    let stats = validate(cloud)?;
    if let Some(eps) = gate {
        if stats.phi_local > eps {
            return Err(Error::Gate { phi_local: stats.phi_local, gate: eps });
        }
    }
    Ok(())
}

fn fixed_point_residual(
    cloud: &ParticleCloud,
    strain: &SymTraceFree3,
    a_hat: &[SymTraceFree3],
    summation: Summation,
) -> f64 {
    let t = apply_reflection(cloud, a_hat, summation);
    let r: Vec<SymTraceFree3> = a_hat.iter().zip(&t).map(|(x, tx)| *x - *strain - *tx).collect();
    level_norm(&r, 2.0)
}

/// Sums the reflection series until the current level's ℓ² norm drops to
/// `tol·|A|` (or for a fixed number of levels). Non-convergence within
/// `max_iter` is reported through `converged = false`, not as an error.
pub fn run_reflections(
    cloud: &ParticleCloud,
    strain: SymTraceFree3,
    opts: &ReflectionOptions,
) -> Result<StressletSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", opts.tol)));
    }
    check_gate(cloud, opts.gate)?;
    let mut state = ReflectionState::new(cloud, strain);
    let threshold = opts.tol * strain.norm();
    let converged = match opts.fixed_levels {
        Some(levels) => {
            if levels == 0 {
                return Err(Error::InvalidParameter("fixed_levels must be >= 1".into()));
            }
            while state.n + 1 < levels {
                state = reflect_step(&state, opts.summation);
            }
            true
        }
        None => {
            let mut done = *state.norm_history.last().unwrap() <= threshold;
            while !done && state.n < opts.max_iter {
                state = reflect_step(&state, opts.summation);
                done = *state.norm_history.last().unwrap() <= threshold;
            }
            done
        }
    };
    let residual = fixed_point_residual(cloud, &strain, &state.total, opts.summation);
    Ok(StressletSolution {
        a_hat: state.total,
        iterations: state.n,
        converged,
        residual,
        norm_history: state.norm_history,
    })
}

/// Dense matrix of the reflection map on `ℝ^{5N}` (particle-major blocks).
pub fn reflection_matrix(cloud: &ParticleCloud) -> DMatrix<f64> {
    let n = cloud.len();
    let mut t = DMatrix::zeros(5 * n, 5 * n);
    for lam in 0..n {
        let sources: Vec<Mat3> =
            (0..5).map(|m| cloud.mobilities[lam].apply(&SymTraceFree3::unit(m)).embed()).collect();
        for l in (0..n).filter(|&l| l != lam) {
            let z = cloud.centers[l] - cloud.centers[lam];
            for (m, s) in sources.iter().enumerate() {
                let col = pair_strain(s, &z);
                for (i, v) in col.0.iter().enumerate() {
                    t[(5 * l + i, 5 * lam + m)] = *v;
                }
            }
        }
    }
    t
}

/// Independent oracle: solves `(I − T)Â = A` by LU factorization.
pub fn dense_fixed_point(cloud: &ParticleCloud, strain: SymTraceFree3) -> Result<StressletSolution> {
    let n = cloud.len();
    if 5 * n > DENSE_LIMIT {
        return Err(Error::InvalidParameter(format!("dense solve limited to 5N <= {DENSE_LIMIT}, got {}", 5 * n)));
    }
    validate(cloud)?;
    let t = reflection_matrix(cloud);
    let system = DMatrix::identity(5 * n, 5 * n) - &t;
    let rhs = nalgebra::DVector::from_iterator(5 * n, (0..n).flat_map(|_| strain.0));
    let sol = system
        .lu()
        .solve(&rhs)
        .filter(|v| v.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::Singular("I - T is not invertible".into()))?;
    let a_hat: Vec<SymTraceFree3> =
        (0..n).map(|l| SymTraceFree3::new(std::array::from_fn(|i| sol[5 * l + i]))).collect();
    let residual = fixed_point_residual(cloud, &strain, &a_hat, Summation::Deterministic);
    Ok(StressletSolution { a_hat, iterations: 0, converged: true, residual, norm_history: Vec::new() })
}

/// Power-iteration estimate of the operator 2-norm of `T`.
pub fn reflection_operator_norm(cloud: &ParticleCloud, iters: usize) -> f64 {
    let t = reflection_matrix(cloud);
    let tt = t.transpose() * &t;
    let dim = tt.nrows();
    if dim == 0 {
        return 0.0;
    }
    let mut v = nalgebra::DVector::from_fn(dim, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = &tt * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        lambda = nw / v.norm();
        v = w / nw;
    }
    lambda.sqrt()
}

/// Which disturbance is attached to each particle when evaluating velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMode {
    /// Stresslet far field only.
    FarField,
    /// Exact sphere disturbance (spherical particles only).
    SphereFull,
}

/// `u_app(x) = Ax + Σ_l U_l(x − x_l)` at each point.
pub fn evaluate_velocity(
    cloud: &ParticleCloud,
    sol: &StressletSolution,
    strain: &SymTraceFree3,
    points: &[Vec3],
    mode: VelocityMode,
) -> Result<Vec<Vec3>> {
    if sol.a_hat.len() != cloud.len() {
        return Err(Error::InvalidParameter(format!(
            "solution has {} particles, cloud has {}",
            sol.a_hat.len(),
            cloud.len()
        )));
    }
    if mode == VelocityMode::SphereFull && !cloud.all_spheres() {
        return Err(Error::InvalidParameter("sphere_full mode needs spherical particles".into()));
    }
    let m = strain.embed();
    points
        .par_iter()
        .map(|x| {
            let mut u = m * x;
            for (l, (c, ah)) in cloud.centers.iter().zip(&sol.a_hat).enumerate() {
                let z = x - c;
                if z.norm() < cloud.a * (1.0 - 1e-12) {
                    return Err(Error::Domain(format!("point {x:?} lies inside particle {l}")));
                }
                u += match mode {
                    VelocityMode::SphereFull => sphere_disturbance(ah, cloud.a, &z)?,
                    VelocityMode::FarField => stresslet_field(&cloud.mobilities[l], ah, &z)?,
                };
            }
            Ok(u)
        })
        .collect()
}

/// Per-level ratios `‖A⁽ⁿ⁺¹⁾‖_q / ‖A⁽ⁿ⁾‖_q` over `levels` reflections (0 when
/// a level vanishes).
pub fn contraction_diagnostic(
    cloud: &ParticleCloud,
    strain: SymTraceFree3,
    q: f64,
    levels: usize,
) -> Result<Vec<f64>> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must lie in (1, ∞), got {q}")));
    }
    if levels < 1 {
        return Err(Error::InvalidParameter("need at least one reflection".into()));
    }
    validate(cloud)?;
    let mut current = vec![strain; cloud.len()];
    let mut prev_norm = level_norm(&current, q);
    let mut ratios = Vec::with_capacity(levels);
    for _ in 0..levels {
        current = apply_reflection(cloud, &current, Summation::Deterministic);
        let norm = level_norm(&current, q);
        ratios.push(if prev_norm > 0.0 { norm / prev_norm } else { 0.0 });
        prev_norm = norm;
    }
    Ok(ratios)
}
