//! Quadrature rules: Gauss–Legendre on [-1,1], a product rule on the unit
//! sphere and adaptive Simpson integration on an interval.

use crate::{Error, Result, Vec3};

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature node on the unit sphere: outward unit normal and weight.
#[derive(Debug, Clone, Copy)]
pub struct SphereNode {
    pub dir: Vec3,
    pub weight: f64,
}

/// Product rule on the unit sphere: `order` Gauss–Legendre points in cos θ and
/// `2·order` equispaced points in φ. Integrates spherical polynomials of degree
/// up to `2·order − 1` exactly; weights sum to 4π.
pub fn sphere_product_rule(order: usize) -> Vec<SphereNode> {
    let (ct, wt) = gauss_legendre(order);
    let nphi = 2 * order;
    let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
    let mut nodes = Vec::with_capacity(order * nphi);
    for (&c, &w) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            nodes.push(SphereNode {
                dir: Vec3::new(s * phi.cos(), s * phi.sin(), c),
                weight: w * dphi,
            });
        }
    }
    nodes
}

/// Adaptive Simpson quadrature of `f` on `[lo, hi]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        if !flm.is_finite() || !frm.is_finite() {
            return Err(Error::Domain(format!("non-finite integrand near {m}")));
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }

    let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(Error::Domain("non-finite integrand at interval ends".into()));
    }
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    step(&f, lo, hi, fa, fm, fb, whole, tol, 48)
}
