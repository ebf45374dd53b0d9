use std::io::{Read, Write};

use crate::cloud::Aabb;
use crate::{Error, Result, Vec3};

const MAGIC: &[u8; 4] = b"SRGF";
const VERSION: u32 = 1;

/// Uniform cell-centered grid of `n³` cells over a cubic box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub bbox: Aabb,
    pub n: usize,
}

impl GridSpec {
    pub fn new(bbox: Aabb, n: usize) -> Result<Self> {
        if !bbox.is_valid() {
            return Err(Error::InvalidParameter("grid box is degenerate".into()));
        }
        let side = bbox.side(0);
        if (0..3).any(|k| (bbox.side(k) - side).abs() > 1e-12 * side) {
            return Err(Error::InvalidParameter("grid box must be a cube".into()));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("grid size must be a power of two >= 2, got {n}")));
        }
        Ok(GridSpec { bbox, n })
    }

    pub fn side(&self) -> f64 {
        self.bbox.side(0)
    }

    pub fn h(&self) -> f64 {
        self.side() / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.h();
        Vec3::new(
            self.bbox.lo[0] + (i as f64 + 0.5) * h,
            self.bbox.lo[1] + (j as f64 + 0.5) * h,
            self.bbox.lo[2] + (k as f64 + 0.5) * h,
        )
    }

    pub fn center_of(&self, idx: usize) -> Vec3 {
        let (i, j, k) = self.unindex(idx);
        self.cell_center(i, j, k)
    }

    /// Cell containing `x`, if inside the box.
    pub fn locate(&self, x: &Vec3) -> Option<(usize, usize, usize)> {
        let h = self.h();
        let mut out = [0usize; 3];
        for a in 0..3 {
            let t = ((x[a] - self.bbox.lo[a]) / h).floor();
            if !(t >= 0.0 && t < self.n as f64) {
                return None;
            }
            out[a] = t as usize;
        }
        Some((out[0], out[1], out[2]))
    }

    /// Inclusive index range of cells whose extent meets `[lo, hi]` along `axis`.
    pub fn cell_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let h = self.h();
        let a = ((lo - self.bbox.lo[axis]) / h).floor().max(0.0);
        let b = ((hi - self.bbox.lo[axis]) / h).floor().min(self.n as f64 - 1.0);
        (a <= b).then_some((a as usize, b as usize))
    }
}

/// Sampled field: `components` scalar blocks of `n³` cell values each
/// (component-major, each block row-major with the last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    /// 0 for scalars, 1 for vectors (3 velocity or 5 strain components), 2
    /// for 5×5 mobility-valued fields.
    pub rank: u32,
    pub components: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(spec: GridSpec, rank: u32, components: usize) -> Self {
        GridField { spec, rank, components, values: vec![0.0; components * spec.num_cells()] }
    }

    pub fn scalar(spec: GridSpec) -> Self {
        Self::zeros(spec, 0, 1)
    }

    pub fn velocity(spec: GridSpec) -> Self {
        Self::zeros(spec, 1, 3)
    }

    pub fn strain(spec: GridSpec) -> Self {
        Self::zeros(spec, 1, 5)
    }

    pub fn mobility(spec: GridSpec) -> Self {
        Self::zeros(spec, 2, 25)
    }

    /// Scalar field sampled at the cell centers.
    pub fn from_fn<F: Fn(&Vec3) -> f64>(spec: GridSpec, f: F) -> Self {
        let mut out = Self::scalar(spec);
        for idx in 0..spec.num_cells() {
            out.values[idx] = f(&spec.center_of(idx));
        }
        out
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let m = self.spec.num_cells();
        &self.values[c * m..(c + 1) * m]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let m = self.spec.num_cells();
        &mut self.values[c * m..(c + 1) * m]
    }

    pub fn get(&self, c: usize, idx: usize) -> f64 {
        self.values[c * self.spec.num_cells() + idx]
    }

    /// All components at one cell.
    pub fn cell(&self, idx: usize) -> Vec<f64> {
        (0..self.components).map(|c| self.get(c, idx)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_layout(&self, other: &GridField) -> bool {
        self.spec == other.spec && self.components == other.components
    }

    /// Grid L² norm `(h³ Σ |v|²)^{1/2}` over all components.
    pub fn l2_norm(&self) -> f64 {
        (self.spec.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Midpoint-rule integral of each component.
    pub fn integral(&self) -> Vec<f64> {
        let dv = self.spec.cell_volume();
        (0..self.components).map(|c| self.component(c).iter().sum::<f64>() * dv).collect()
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        if !self.same_layout(other) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridField { values, ..self.clone() })
    }

    /// Binary layout: `"SRGF"`, version, rank, components, n (u32 LE), box lo
    /// and hi (6 × f64 LE), then the values (f64 LE) component by component,
    /// each block row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [VERSION, self.rank, self.components as u32, self.spec.n as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.spec.bbox.lo.iter().chain(&self.spec.bbox.hi) {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<GridField> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidParameter("not a grid field file".into()));
        }
        let mut u = [0u32; 4];
        for v in u.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *v = u32::from_le_bytes(b);
        }
        let [version, rank, components, n] = u;
        if version != VERSION {
            return Err(Error::InvalidParameter(format!("unsupported grid field version {version}")));
        }
        let mut f = [0f64; 6];
        for v in f.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        let spec = GridSpec::new(Aabb::new([f[0], f[1], f[2]], [f[3], f[4], f[5]]), n as usize)?;
        let count = components as usize * spec.num_cells();
        let mut bytes = vec![0u8; 8 * count];
        r.read_exact(&mut bytes)?;
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(GridField { spec, rank, components: components as usize, values })
    }

    /// CSV of the plane `i = slice` (x fixed): `y,z,c0,c1,…`.
    pub fn write_slice_csv<W: Write>(&self, slice: usize, mut w: W) -> Result<()> {
        let n = self.spec.n;
        if slice >= n {
            return Err(Error::InvalidParameter(format!("slice {slice} outside grid of size {n}")));
        }
        let header: Vec<String> = (0..self.components).map(|c| format!("c{c}")).collect();
        writeln!(w, "y,z,{}", header.join(","))?;
        for j in 0..n {
            for k in 0..n {
                let idx = self.spec.index(slice, j, k);
                let x = self.spec.cell_center(slice, j, k);
                let vals: Vec<String> = (0..self.components).map(|c| self.get(c, idx).to_string()).collect();
                writeln!(w, "{},{},{}", x[1], x[2], vals.join(","))?;
            }
        }
        Ok(())
    }
}
