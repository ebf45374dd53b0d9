//! Homogenized side: the particle mobility density `M_N`, effective models
//! `M_eff`, negative Sobolev and Lᵖ distances, the continuous fixed point
//! `v = 𝓛v` and the Einstein work functional.

mod convolution;
mod einstein;
mod grid;
mod hminus1;
mod lp;

pub use convolution::{fixed_point_vc, strain_of, tilde_vc, tilde_vc_grid, FixedPointLog, StressletConvolution};
pub use einstein::{einstein_coefficient, einstein_coefficient_with, einstein_work, EinsteinOrder};
pub use grid::{GridField, GridSpec};
pub use hminus1::hminus1_distance;
pub use lp::{lp_field_distance, ExclusionRegion};

use serde::{Deserialize, Serialize};

use crate::cloud::{Aabb, ParticleCloud};
use crate::sym3::{Mobility, SymTraceFree3};
use crate::{Error, Result};

/// Largest sup-norm accepted by [`fixed_point_vc`].
pub const CONTRACTION_GATE: f64 = 0.125;
/// Default `c` in `M_eff = c·φ·I` (the sphere value `(3/4πa³)·(20π/3)a³`).
pub const DEFAULT_UNIFORM_COEFFICIENT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Uniform,
    FromCloud,
    CustomGrid,
}

/// Mobility-valued coefficient field `M_eff` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub kind: ModelKind,
    /// Rank-2 field, 25 components in row-major `(i, j)` order.
    pub field: GridField,
}

impl EffectiveModel {
    pub fn custom(field: GridField) -> Result<Self> {
        if field.components != 25 {
            return Err(Error::InvalidParameter(format!(
                "a model needs 25 components per cell, got {}",
                field.components
            )));
        }
        if !field.is_finite() {
            return Err(Error::InvalidParameter("model field has non-finite values".into()));
        }
        Ok(EffectiveModel { kind: ModelKind::CustomGrid, field })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.field.spec
    }

    /// Coefficient at one cell.
    pub fn at(&self, idx: usize) -> Mobility {
        let m = self.field.spec.num_cells();
        let mut entries = [0.0; 25];
        for (c, e) in entries.iter_mut().enumerate() {
            *e = self.field.values[c * m + idx];
        }
        Mobility::from_row_major(&entries)
    }

    fn is_zero_at(&self, idx: usize) -> bool {
        let m = self.field.spec.num_cells();
        (0..25).all(|c| self.field.values[c * m + idx] == 0.0)
    }

    /// `max_x ‖M(x)‖₂` over the cells.
    pub fn sup_norm(&self) -> f64 {
        (0..self.field.spec.num_cells())
            .filter(|&idx| !self.is_zero_at(idx))
            .map(|idx| self.at(idx).operator_norm())
            .fold(0.0, f64::max)
    }

    /// Membership in the class of models bounded by `eps0`.
    pub fn within(&self, eps0: f64) -> bool {
        self.sup_norm() <= eps0
    }

    /// `M(x)·A` per cell as a 5-component field.
    pub fn apply(&self, strain: &SymTraceFree3) -> GridField {
        let mut out = GridField::strain(self.field.spec);
        self.apply_into(|_| *strain, &mut out);
        out
    }

    /// `M(x)·e(x)` per cell, skipping cells where `M` vanishes.
    pub(crate) fn apply_into<F: Fn(usize) -> SymTraceFree3>(&self, e: F, out: &mut GridField) {
        let m = self.field.spec.num_cells();
        for v in out.values.iter_mut() {
            *v = 0.0;
        }
        for idx in 0..m {
            if self.is_zero_at(idx) {
                continue;
            }
            let s = self.at(idx).apply(&e(idx));
            for (c, v) in s.0.iter().enumerate() {
                out.values[c * m + idx] = *v;
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.field.values.iter_mut().for_each(|v| *v *= c);
        out
    }
}

/// `c·φ·I₅` on `support` (cells weighted by their exact volume overlap),
/// zero elsewhere, sampled on `grid`.
pub fn uniform_meff(grid: GridSpec, support: Aabb, phi: f64, coefficient: f64) -> Result<EffectiveModel> {
    if !(phi >= 0.0 && phi.is_finite()) {
        return Err(Error::InvalidParameter(format!("phi must be >= 0, got {phi}")));
    }
    if !coefficient.is_finite() {
        return Err(Error::InvalidParameter("coefficient must be finite".into()));
    }
    if !support.is_valid() {
        return Err(Error::InvalidParameter("support box is degenerate".into()));
    }
    let mut field = GridField::mobility(grid);
    let value = coefficient * phi;
    if value != 0.0 {
        let h = grid.h();
        let overlap = |axis: usize, i: usize| {
            let lo = grid.bbox.lo[axis] + i as f64 * h;
            ((lo + h).min(support.hi[axis]) - lo.max(support.lo[axis])).max(0.0) / h
        };
        let n = grid.n;
        let m = grid.num_cells();
        for i in 0..n {
            let fi = overlap(0, i);
            if fi == 0.0 {
                continue;
            }
            for j in 0..n {
                let fj = overlap(1, j);
                for k in 0..n {
                    let frac = fi * fj * overlap(2, k);
                    if frac > 0.0 {
                        let idx = grid.index(i, j, k);
                        for d in 0..5 {
                            field.values[(6 * d) * m + idx] = value * frac;
                        }
                    }
                }
            }
        }
    }
    Ok(EffectiveModel { kind: ModelKind::Uniform, field })
}

/// Rasterizes `M_N = (3/4πa³) Σ_l M_l 1_{B(x_l, a)}`. Each cell receives the
/// fraction of its `supersample³` sub-points lying in each ball; with
/// `supersample = 1` this is plain cell-center sampling.
pub fn assemble_mn(cloud: &ParticleCloud, grid: GridSpec, supersample: usize) -> Result<GridField> {
    if supersample == 0 {
        return Err(Error::InvalidParameter("supersample must be >= 1".into()));
    }
    let mut field = GridField::mobility(grid);
    let a = cloud.a;
    if cloud.is_empty() {
        return Ok(field);
    }
    let h = grid.h();
    let m = grid.num_cells();
    let density = 3.0 / (4.0 * std::f64::consts::PI * a * a * a);
    let s = supersample;
    let offsets: Vec<f64> = (0..s).map(|t| ((t as f64 + 0.5) / s as f64 - 0.5) * h).collect();
    let weight = density / (s * s * s) as f64;
    for (center, mob) in cloud.centers.iter().zip(&cloud.mobilities) {
        let entries = mob.to_row_major();
        let ranges: Option<Vec<(usize, usize)>> =
            (0..3).map(|axis| grid.cell_range(axis, center[axis] - a, center[axis] + a)).collect();
        let Some(r) = ranges else { continue };
        for i in r[0].0..=r[0].1 {
            for j in r[1].0..=r[1].1 {
                for k in r[2].0..=r[2].1 {
                    let c = grid.cell_center(i, j, k) - center;
                    let mut hits = 0usize;
                    for ox in &offsets {
                        for oy in &offsets {
                            for oz in &offsets {
                                let (x, y, z) = (c[0] + ox, c[1] + oy, c[2] + oz);
                                if x * x + y * y + z * z <= a * a {
                                    hits += 1;
                                }
                            }
                        }
                    }
                    if hits == 0 {
                        continue;
                    }
                    let idx = grid.index(i, j, k);
                    let w = weight * hits as f64;
                    for (comp, e) in entries.iter().enumerate() {
                        if *e != 0.0 {
                            field.values[comp * m + idx] += w * e;
                        }
                    }
                }
            }
        }
    }
    Ok(field)
}

/// [`assemble_mn`] wrapped as a model.
pub fn model_from_cloud(cloud: &ParticleCloud, grid: GridSpec, supersample: usize) -> Result<EffectiveModel> {
    Ok(EffectiveModel { kind: ModelKind::FromCloud, field: assemble_mn(cloud, grid, supersample)? })
}
