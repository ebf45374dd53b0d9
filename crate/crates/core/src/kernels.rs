//! Closed-form Stokes kernels (unit viscosity).
//!
//! Sign convention: the Oseen tensor is the positive Stokeslet
//! `O_ij(x) = (δ_ij/|x| + x_i x_j/|x|³)/8π`, the velocity due to a unit point
//! force. With this convention the sphere mobility is `+(20π/3)a³·I` and the
//! stresslet far field `K_i = M:∇O^i` reproduces the exact sphere disturbance
//! `-(5/2)a³(x·Ax)x/|x|⁵`.

use std::f64::consts::PI;

use crate::quadrature::{adaptive_simpson, sphere_product_rule};
use crate::sym3::{Mobility, SymTraceFree3};
use crate::{Error, Mat3, Result, Vec3};

/// Default sphere quadrature order for [`mobility_from_boundary_integral`].
pub const DEFAULT_MOBILITY_ORDER: usize = 8;

fn nonzero(x: &Vec3, what: &str) -> Result<f64> {
    let r = x.norm();
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Domain(format!("{what} evaluated at |x| = {r}")))
    }
}

/// Oseen tensor (Stokeslet).
pub fn oseen(x: &Vec3) -> Result<Mat3> {
    let r = nonzero(x, "oseen")?;
    let r3 = r * r * r;
    Ok((Mat3::identity() / r + x * x.transpose() / r3) / (8.0 * PI))
}

/// Pressure of the Stokeslet, `q(x) = x/(4π|x|³)`.
pub fn oseen_pressure(x: &Vec3) -> Result<Vec3> {
    let r = nonzero(x, "oseen_pressure")?;
    Ok(x / (4.0 * PI * r * r * r))
}

/// Velocity of a point stresslet with coefficient `s` (already multiplied by
/// the mobility): `Σ_jk S_jk ∂_k O_ij(x) = -3 x_i (x·Sx) / (8π|x|⁵)`.
pub fn stresslet_velocity(s: &SymTraceFree3, x: &Vec3) -> Result<Vec3> {
    let r = nonzero(x, "stresslet")?;
    let m = s.embed();
    let q = x.dot(&(m * x));
    Ok(x * (-3.0 * q / (8.0 * PI * r.powi(5))))
}

/// Velocity gradient `G_ij = ∂_j K_i` of a point stresslet.
pub fn stresslet_velocity_gradient(s: &SymTraceFree3, x: &Vec3) -> Result<Mat3> {
    let r = nonzero(x, "stresslet gradient")?;
    let m = s.embed();
    let mx = m * x;
    let q = x.dot(&mx);
    let r2 = r * r;
    let r5 = r2 * r2 * r;
    let c = -3.0 / (8.0 * PI);
    let g = Mat3::identity() * (q / r5) + (x * mx.transpose()) * (2.0 / r5)
        - (x * x.transpose()) * (5.0 * q / (r5 * r2));
    Ok(g * c)
}

/// Far-field stresslet `K[A,B](x)` of a particle with the given mobility driven
/// by the strain `strain`.
pub fn stresslet_field(mobility: &Mobility, strain: &SymTraceFree3, x: &Vec3) -> Result<Vec3> {
    stresslet_velocity(&mobility.apply(strain), x)
}

/// Symmetric trace-free part of `∇K[A,B](x)`.
pub fn stresslet_strain(
    mobility: &Mobility,
    strain: &SymTraceFree3,
    x: &Vec3,
) -> Result<SymTraceFree3> {
    let g = stresslet_velocity_gradient(&mobility.apply(strain), x)?;
    Ok(SymTraceFree3::project(&g))
}

/// Velocity at `z` of a unit stresslet along each basis element:
/// `out[i][m] = Σ_jk (E_m)_jk ∂_k O_ij(z)`.
pub fn stresslet_basis_velocity(z: &Vec3) -> [[f64; 5]; 3] {
    use std::f64::consts::FRAC_1_SQRT_2 as S2;
    let r2 = z.norm_squared();
    let r5 = r2 * r2 * r2.sqrt();
    let (x, y, w) = (z[0], z[1], z[2]);
    let s6 = 0.408_248_290_463_863_f64;
    // z·E_m z for the fixed basis
    let quad = [
        S2 * (x * x - y * y),
        s6 * (x * x + y * y - 2.0 * w * w),
        2.0 * S2 * x * y,
        2.0 * S2 * x * w,
        2.0 * S2 * y * w,
    ];
    let c = -3.0 / (8.0 * PI * r5);
    let mut out = [[0.0; 5]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (m, v) in row.iter_mut().enumerate() {
            *v = c * z[i] * quad[m];
        }
    }
    out
}

fn outside_sphere(a: f64, x: &Vec3, what: &str) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {a}")));
    }
    let r = x.norm();
    if r < a * (1.0 - 1e-12) || !r.is_finite() {
        return Err(Error::Domain(format!("{what}: |x| = {r} inside sphere of radius {a}")));
    }
    Ok(r)
}

/// Exact disturbance of a force- and torque-free sphere of radius `a` in the
/// strain flow `Ax` (boundary value `-Ax` on the sphere, zero at infinity).
pub fn sphere_disturbance(strain: &SymTraceFree3, a: f64, x: &Vec3) -> Result<Vec3> {
    let r = outside_sphere(a, x, "sphere_disturbance")?;
    let m = strain.embed();
    let ax = m * x;
    let q = x.dot(&ax);
    let a3 = a * a * a;
    let a5 = a3 * a * a;
    let r2 = r * r;
    let r5 = r2 * r2 * r;
    let r7 = r5 * r2;
    Ok(x * (-2.5 * a3 * q / r5) - (ax / r5 - x * (2.5 * q / r7)) * a5)
}

/// `∂_j U_i` of [`sphere_disturbance`].
pub fn sphere_disturbance_gradient(strain: &SymTraceFree3, a: f64, x: &Vec3) -> Result<Mat3> {
    let r = outside_sphere(a, x, "sphere_disturbance_gradient")?;
    let m = strain.embed();
    let ax = m * x;
    let q = x.dot(&ax);
    let a3 = a * a * a;
    let a5 = a3 * a * a;
    let r2 = r * r;
    let r5 = r2 * r2 * r;
    let r7 = r5 * r2;
    let r9 = r7 * r2;
    let xx = x * x.transpose();
    // ∂_j (q x_i / r^k) = (2 x_i (Ax)_j + q δ_ij)/r^k - k q x_i x_j / r^{k+2}
    let base = x * ax.transpose() * 2.0 + Mat3::identity() * q;
    let t5 = base / r5 - xx * (5.0 * q / r7);
    let t7 = base / r7 - xx * (7.0 * q / r9);
    let tax = m / r5 - (ax * x.transpose()) * (5.0 / r7);
    Ok(t5 * (-2.5 * a3) - tax * a5 + t7 * (2.5 * a5))
}

/// Pressure of the sphere disturbance, `-5a³(x·Ax)/|x|⁵`.
pub fn sphere_pressure(strain: &SymTraceFree3, a: f64, x: &Vec3) -> Result<f64> {
    let r = outside_sphere(a, x, "sphere_pressure")?;
    let q = x.dot(&(strain.embed() * x));
    Ok(-5.0 * a * a * a * q / r.powi(5))
}

/// Remainder `H = U - K` of the sphere disturbance beyond the stresslet: the
/// pure `a⁵` terms. Defined for `|x| > 4a`.
pub fn sphere_remainder(strain: &SymTraceFree3, a: f64, x: &Vec3) -> Result<Vec3> {
    let r = x.norm();
    if !(r > 4.0 * a) {
        return Err(Error::Domain(format!("sphere_remainder needs |x| > 4a, got |x| = {r}, a = {a}")));
    }
    let m = strain.embed();
    let ax = m * x;
    let q = x.dot(&ax);
    let a5 = a.powi(5);
    Ok(-a5 * (ax / r.powi(5) - x * (2.5 * q / r.powi(7))))
}

/// Mobility of a sphere of radius `a` recovered from the boundary moments of
/// its exact disturbance solution:
/// `ℙ₃,σ ∫_∂B [-(Σn)⊗y + 2U⊗n] dσ` with `n` pointing into the solid.
pub fn mobility_from_boundary_integral(a: f64, quadrature_order: usize) -> Result<Mobility> {
    if quadrature_order < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature order must be >= 2, got {quadrature_order}"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {a}")));
    }
    let rule = sphere_product_rule(quadrature_order);
    let mut out = Mobility::zero();
    for col in 0..5 {
        let strain = SymTraceFree3::unit(col);
        let mut acc = Mat3::zeros();
        for node in &rule {
            let y = node.dir * a;
            let n = -node.dir;
            let grad = sphere_disturbance_gradient(&strain, a, &y)?;
            let p = sphere_pressure(&strain, a, &y)?;
            let sigma = grad + grad.transpose() - Mat3::identity() * p;
            let u = sphere_disturbance(&strain, a, &y)?;
            let integrand = -(sigma * n) * y.transpose() + u * n.transpose() * 2.0;
            acc += integrand * (node.weight * a * a);
        }
        let coeffs = SymTraceFree3::project(&acc);
        for row in 0..5 {
            out.0[(row, col)] = coeffs.0[row];
        }
    }
    Ok(out)
}

/// Generalized mean-value formula: recovers `u(x)` from its average over
/// `B(x,r)` and the ball averages `ρ ↦ ⨍_{B(x,ρ)} Δu` of its Laplacian:
/// `u(x) = ⨍_{B(x,r)} u + (1/3)∫₀^r (ρ⁴/r³ − ρ) ⨍_{B(x,ρ)} Δu dρ`.
pub fn mean_value_reconstruct<F: Fn(f64) -> f64>(
    ball_avg_u: f64,
    r: f64,
    laplacian_ball_avg: F,
) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let r3 = r * r * r;
    let correction = adaptive_simpson(
        |rho| (rho.powi(4) / r3 - rho) * laplacian_ball_avg(rho),
        0.0,
        r,
        1e-12,
    )?;
    let out = ball_avg_u + correction / 3.0;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Domain("non-finite mean-value reconstruction".into()))
    }
}
