use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EffectiveModel, GridField, GridSpec, CONTRACTION_GATE};
use crate::fft::{signed_index, Fft3};
use crate::kernels::stresslet_basis_velocity;
use crate::sym3::SymTraceFree3;
use crate::{Error, Mat3, Result, Vec3};

/// Cells closer than this many spacings to the evaluation point are
/// integrated on a refined sub-grid.
const NEAR_CELLS: f64 = 2.0;
const SUBDIVISION: usize = 4;

/// `∫_cell G(δ − t) dt` for a cell of side `h` centered at offset `δ` from the
/// evaluation point, where `G` is the basis stresslet velocity.
fn cell_kernel(delta: &Vec3, h: f64) -> [[f64; 5]; 3] {
    let h3 = h * h * h;
    if delta.norm() >= NEAR_CELLS * h {
        let mut g = stresslet_basis_velocity(delta);
        g.iter_mut().flatten().for_each(|v| *v *= h3);
        return g;
    }
    let s = SUBDIVISION;
    let sub = h / s as f64;
    let w = sub * sub * sub;
    let off = |t: usize| (t as f64 + 0.5) * sub - 0.5 * h;
    let mut out = [[0.0; 5]; 3];
    for a in 0..s {
        for b in 0..s {
            for c in 0..s {
                let z = delta - Vec3::new(off(a), off(b), off(c));
                if z.norm_squared() == 0.0 {
                    continue;
                }
                let g = stresslet_basis_velocity(&z);
                for i in 0..3 {
                    for m in 0..5 {
                        out[i][m] += w * g[i][m];
                    }
                }
            }
        }
    }
    out
}

/// `ṽ_c(x) = ∫ M(y)A : ∇U(x − y) dy` by cell quadrature over the model grid.
pub fn tilde_vc(model: &EffectiveModel, strain: &SymTraceFree3, points: &[Vec3]) -> Result<Vec<Vec3>> {
    if !points.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidParameter("evaluation points must be finite".into()));
    }
    let spec = *model.spec();
    let h = spec.h();
    let src = model.apply(strain);
    let sources: Vec<(Vec3, [f64; 5])> = (0..spec.num_cells())
        .filter_map(|idx| {
            let s: [f64; 5] = std::array::from_fn(|c| src.get(c, idx));
            s.iter().any(|v| *v != 0.0).then(|| (spec.center_of(idx), s))
        })
        .collect();
    Ok(points
        .par_iter()
        .map(|x| {
            let mut u = Vec3::zeros();
            for (y, s) in &sources {
                let k = cell_kernel(&(x - y), h);
                for i in 0..3 {
                    u[i] += (0..5).map(|m| k[i][m] * s[m]).sum::<f64>();
                }
            }
            u
        })
        .collect())
}

/// Linear convolution of 5-component source fields with the cell-integrated
/// stresslet kernel, by FFT on the grid padded to `2n`.
pub struct StressletConvolution {
    spec: GridSpec,
    plan: Fft3,
    kernel_hat: Vec<Vec<Complex64>>,
}

impl StressletConvolution {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.n;
        let m = 2 * n;
        let h = spec.h();
        let plan = Fft3::new(m);
        let mut kernel_hat: Vec<Vec<Complex64>> = (0..15).map(|_| vec![Complex64::default(); m * m * m]).collect();
        let lim = n as i64;
        for a in 0..m {
            let da = signed_index(a, m);
            for b in 0..m {
                let db = signed_index(b, m);
                for c in 0..m {
                    let dc = signed_index(c, m);
                    if da.abs() >= lim || db.abs() >= lim || dc.abs() >= lim {
                        continue;
                    }
                    let delta = Vec3::new(da as f64, db as f64, dc as f64) * h;
                    let k = cell_kernel(&delta, h);
                    let pos = (a * m + b) * m + c;
                    for i in 0..3 {
                        for mm in 0..5 {
                            kernel_hat[5 * i + mm][pos] = Complex64::new(k[i][mm], 0.0);
                        }
                    }
                }
            }
        }
        for kh in kernel_hat.iter_mut() {
            plan.forward(kh);
        }
        StressletConvolution { spec, plan, kernel_hat }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Velocity at the cell centers induced by the source density `s`
    /// (5 components per cell).
    pub fn apply(&self, sources: &GridField) -> Result<GridField> {
        if sources.spec != self.spec || sources.components != 5 {
            return Err(Error::GridMismatch("sources must be a 5-component field on the convolution grid".into()));
        }
        let n = self.spec.n;
        let m = 2 * n;
        let len = m * m * m;
        let mut hats: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(5);
        for c in 0..5 {
            let comp = sources.component(c);
            if comp.iter().all(|v| *v == 0.0) {
                hats.push(None);
                continue;
            }
            let mut buf = vec![Complex64::default(); len];
            scatter(comp, n, &mut buf);
            self.plan.forward(&mut buf);
            hats.push(Some(buf));
        }
        let mut out = GridField::velocity(self.spec);
        let mut acc = vec![Complex64::default(); len];
        for i in 0..3 {
            acc.iter_mut().for_each(|v| *v = Complex64::default());
            let mut any = false;
            for (mm, hat) in hats.iter().enumerate() {
                if let Some(hat) = hat {
                    any = true;
                    let k = &self.kernel_hat[5 * i + mm];
                    acc.par_iter_mut().zip(hat.par_iter().zip(k.par_iter())).for_each(|(a, (s, g))| *a += s * g);
                }
            }
            if !any {
                continue;
            }
            self.plan.inverse(&mut acc);
            let dst = out.component_mut(i);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        dst[(a * n + b) * n + c] = acc[(a * m + b) * m + c].re;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn scatter(comp: &[f64], n: usize, buf: &mut [Complex64]) {
    let m = 2 * n;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                buf[(a * m + b) * m + c] = Complex64::new(comp[(a * n + b) * n + c], 0.0);
            }
        }
    }
}

/// [`tilde_vc`] at every cell center of the model grid, via FFT.
pub fn tilde_vc_grid(model: &EffectiveModel, strain: &SymTraceFree3) -> Result<GridField> {
    StressletConvolution::new(*model.spec()).apply(&model.apply(strain))
}

/// Per-iteration record of [`fixed_point_vc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointLog {
    pub iterations: usize,
    pub converged: bool,
    /// Grid-L² norms `‖v⁽ᵏ⁺¹⁾ − v⁽ᵏ⁾‖`, starting with `‖v⁽¹⁾‖`.
    pub increments: Vec<f64>,
    pub sup_norm: f64,
}

/// Symmetric-gradient strain `D(v)` of a velocity field: centered differences
/// in the interior, one-sided at the faces.
pub fn strain_of(v: &GridField) -> Result<GridField> {
    if v.components != 3 {
        return Err(Error::InvalidParameter("strain_of needs a 3-component velocity field".into()));
    }
    let spec = v.spec;
    let n = spec.n;
    let h = spec.h();
    let mut out = GridField::strain(spec);
    let m = spec.num_cells();
    let strains: Vec<SymTraceFree3> = (0..m)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = spec.unindex(idx);
            let ijk = [i, j, k];
            let mut grad = Mat3::zeros();
            for axis in 0..3 {
                let t = ijk[axis];
                let (lo, hi) = (t.saturating_sub(1), (t + 1).min(n - 1));
                let mut at = ijk;
                at[axis] = lo;
                let ilo = spec.index(at[0], at[1], at[2]);
                at[axis] = hi;
                let ihi = spec.index(at[0], at[1], at[2]);
                let span = (hi - lo) as f64 * h;
                for comp in 0..3 {
                    grad[(comp, axis)] = (v.get(comp, ihi) - v.get(comp, ilo)) / span;
                }
            }
            SymTraceFree3::project(&grad)
        })
        .collect();
    for (idx, s) in strains.iter().enumerate() {
        for (c, val) in s.0.iter().enumerate() {
            out.values[c * m + idx] = *val;
        }
    }
    Ok(out)
}

/// Iterates `v ↦ 𝓛v = ∫ M(D(v) + A) : ∇U(· − y) dy` from `v = 0` on the
/// model grid until the grid-L² increment drops to `tol`.
pub fn fixed_point_vc(
    model: &EffectiveModel,
    strain: &SymTraceFree3,
    tol: f64,
    max_iter: usize,
) -> Result<(GridField, FixedPointLog)> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter("need tol > 0 and max_iter >= 1".into()));
    }
    let sup = model.sup_norm();
    if sup > CONTRACTION_GATE {
        return Err(Error::ModelGate { sup_norm: sup, limit: CONTRACTION_GATE });
    }
    let spec = *model.spec();
    let conv = StressletConvolution::new(spec);
    let mut v = GridField::velocity(spec);
    let mut sources = GridField::strain(spec);
    let mut log = FixedPointLog { iterations: 0, converged: false, increments: Vec::new(), sup_norm: sup };
    while log.iterations < max_iter {
        let d = strain_of(&v)?;
        model.apply_into(|idx| SymTraceFree3::new(std::array::from_fn(|c| d.get(c, idx))) + *strain, &mut sources);
        let next = conv.apply(&sources)?;
        let inc = next.sub(&v)?.l2_norm();
        v = next;
        log.iterations += 1;
        log.increments.push(inc);
        if inc <= tol {
            log.converged = true;
            break;
        }
    }
    Ok((v, log))
}
