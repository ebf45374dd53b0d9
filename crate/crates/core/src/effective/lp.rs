use super::GridSpec;
use crate::cloud::{Aabb, ParticleCloud, EXCLUSION_FACTOR};
use crate::{Error, Result, Vec3};

/// A box with balls removed: `K₀ ∖ ⋃ B(x_l, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionRegion {
    pub bbox: Aabb,
    pub centers: Vec<Vec3>,
    pub radius: f64,
}

impl ExclusionRegion {
    /// The cloud's box minus the balls `B(x_l, 4a)`.
    pub fn from_cloud(cloud: &ParticleCloud) -> Self {
        ExclusionRegion { bbox: cloud.bbox, centers: cloud.centers.clone(), radius: EXCLUSION_FACTOR * cloud.a }
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        let r2 = self.radius * self.radius;
        self.bbox.contains(x) && self.centers.iter().all(|c| (x - c).norm_squared() > r2)
    }

    /// Centers of the cells of `grid` that lie in the region.
    pub fn cell_centers(&self, grid: &GridSpec) -> Vec<Vec3> {
        (0..grid.num_cells()).map(|i| grid.center_of(i)).filter(|x| self.contains(x)).collect()
    }
}

/// Midpoint-rule `Lᵖ` norm of `u − v` over the cells of `grid` whose centers
/// lie in `region`. The samplers receive all retained cell centers at once.
pub fn lp_field_distance<U, V>(u: U, v: V, region: &ExclusionRegion, p: f64, grid: &GridSpec) -> Result<f64>
where
    U: FnOnce(&[Vec3]) -> Result<Vec<Vec3>>,
    V: FnOnce(&[Vec3]) -> Result<Vec<Vec3>>,
{
    if !(1.0..1.5).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, 3/2), got {p}")));
    }
    let points = region.cell_centers(grid);
    let (uu, vv) = (u(&points)?, v(&points)?);
    if uu.len() != points.len() || vv.len() != points.len() {
        return Err(Error::InvalidParameter("sampler returned the wrong number of values".into()));
    }
    let sum: f64 = uu.iter().zip(&vv).map(|(a, b)| (a - b).norm().powf(p)).sum();
    Ok((grid.cell_volume() * sum).powf(1.0 / p))
}
