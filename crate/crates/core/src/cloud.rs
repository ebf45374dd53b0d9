//! Particle configurations: generation, validation of the separation and
//! containment hypotheses, and geometric statistics.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sym3::Mobility;
use crate::{Error, Result, Vec3};

/// Minimum center separation in units of the radius: `d > SEPARATION_FACTOR·a`.
pub const SEPARATION_FACTOR: f64 = 4.0;
/// Radius (in units of `a`) of the balls excluded from field comparisons.
pub const EXCLUSION_FACTOR: f64 = 4.0;
/// Consistency constant in `N·d³ ≤ C·|K|`.
pub const PACKING_CONSTANT: f64 = 8.0;

/// Axis-aligned box, serialized as `[[lo], [hi]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 3]; 2]", into = "[[f64; 3]; 2]")]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl From<[[f64; 3]; 2]> for Aabb {
    fn from(v: [[f64; 3]; 2]) -> Self {
        Aabb { lo: v[0], hi: v[1] }
    }
}

impl From<Aabb> for [[f64; 3]; 2] {
    fn from(b: Aabb) -> Self {
        [b.lo, b.hi]
    }
}

impl Aabb {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Aabb { lo, hi }
    }

    pub fn unit() -> Self {
        Aabb::new([0.0; 3], [1.0; 3])
    }

    /// Cube of side `side` with lower corner `lo`.
    pub fn cube(lo: [f64; 3], side: f64) -> Self {
        Aabb::new(lo, [lo[0] + side, lo[1] + side, lo[2] + side])
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|k| self.side(k)).product()
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
            0.5 * (self.lo[2] + self.hi[2]),
        )
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|k| x[k] >= self.lo[k] && x[k] <= self.hi[k])
    }

    /// Whether the closed ball `B(x, r)` lies in the box.
    pub fn contains_ball(&self, x: &Vec3, r: f64) -> bool {
        (0..3).all(|k| x[k] - r >= self.lo[k] && x[k] + r <= self.hi[k])
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|k| self.lo[k].is_finite() && self.hi[k].is_finite() && self.hi[k] > self.lo[k])
    }

    /// Box scaled by `lambda` about the origin.
    pub fn scaled(&self, lambda: f64) -> Self {
        Aabb::new(self.lo.map(|v| v * lambda), self.hi.map(|v| v * lambda))
    }

    /// Box grown by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Self {
        Aabb::new(self.lo.map(|v| v - margin), self.hi.map(|v| v + margin))
    }
}

/// Particles `B(x_l, a)` with per-particle mobilities inside a box `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    pub centers: Vec<Vec3>,
    pub a: f64,
    pub mobilities: Vec<Mobility>,
    pub bbox: Aabb,
}

/// Geometric statistics of a validated cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudStats {
    #[serde(rename = "N")]
    pub n: usize,
    /// Minimum center separation; `+∞` (JSON `null`) for a single particle.
    #[serde(with = "infinite_as_null")]
    pub d: f64,
    pub phi_global: f64,
    pub phi_local: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl ParticleCloud {
    /// Cloud of spheres with the default sphere mobility; not validated.
    pub fn spheres(centers: Vec<Vec3>, a: f64, bbox: Aabb) -> Self {
        let mobilities = vec![Mobility::sphere(a); centers.len()];
        ParticleCloud { centers, a, mobilities, bbox }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Centers and box dilated by `lambda` about the origin; radius and
    /// mobilities unchanged.
    pub fn dilate_centers(&self, lambda: f64) -> Self {
        ParticleCloud {
            centers: self.centers.iter().map(|c| c * lambda).collect(),
            a: self.a,
            mobilities: self.mobilities.clone(),
            bbox: self.bbox.scaled(lambda),
        }
    }

    /// Whole configuration scaled by `lambda`: centers, box, radius, and
    /// mobilities (which carry length³).
    pub fn scale(&self, lambda: f64) -> Self {
        ParticleCloud {
            centers: self.centers.iter().map(|c| c * lambda).collect(),
            a: self.a * lambda,
            mobilities: self.mobilities.iter().map(|m| m.scale(lambda.powi(3))).collect(),
            bbox: self.bbox.scaled(lambda),
        }
    }

    pub fn all_spheres(&self) -> bool {
        let sphere = Mobility::sphere(self.a);
        self.mobilities.iter().all(|m| *m == sphere)
    }

    pub fn to_file(&self) -> CloudFile {
        CloudFile {
            a: self.a,
            bbox: self.bbox,
            centers: self.centers.iter().map(|c| [c[0], c[1], c[2]]).collect(),
            mobilities: if self.all_spheres() {
                None
            } else {
                Some(self.mobilities.iter().map(|m| m.to_row_major().to_vec()).collect())
            },
        }
    }

    pub fn from_file(file: CloudFile) -> Result<Self> {
        let centers: Vec<Vec3> = file.centers.iter().map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let mobilities = match file.mobilities {
            None => vec![Mobility::sphere(file.a); centers.len()],
            Some(ms) => {
                if ms.len() != centers.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} mobilities for {} centers",
                        ms.len(),
                        centers.len()
                    )));
                }
                ms.iter()
                    .map(|m| {
                        let arr: [f64; 25] = m.as_slice().try_into().map_err(|_| {
                            Error::InvalidParameter(format!("mobility needs 25 entries, got {}", m.len()))
                        })?;
                        Ok(Mobility::from_row_major(&arr))
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(ParticleCloud { centers, a: file.a, mobilities, bbox: file.bbox })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// Centers as CSV with header `x,y,z`.
    pub fn write_centers_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,z")?;
        for c in &self.centers {
            writeln!(w, "{},{},{}", c[0], c[1], c[2])?;
        }
        Ok(())
    }
}

/// On-disk cloud schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudFile {
    pub a: f64,
    #[serde(rename = "box")]
    pub bbox: Aabb,
    pub centers: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobilities: Option<Vec<Vec<f64>>>,
}

/// Cubic lattice with `n_per_axis` points per axis at the cell centers of the
/// box. Requires a cubic box.
pub fn generate_lattice(bbox: Aabb, n_per_axis: usize, a: f64) -> Result<ParticleCloud> {
    if n_per_axis == 0 || !(a > 0.0) || !bbox.is_valid() {
        return Err(Error::InvalidParameter(format!(
            "lattice needs n_per_axis >= 1, a > 0 and a valid box (n = {n_per_axis}, a = {a})"
        )));
    }
    let side = bbox.side(0);
    if (0..3).any(|k| (bbox.side(k) - side).abs() > 1e-12 * side) {
        return Err(Error::InvalidParameter("lattice generation needs a cubic box".into()));
    }
    let h = side / n_per_axis as f64;
    if n_per_axis > 1 && h <= SEPARATION_FACTOR * a {
        return Err(Error::H2 {
            pair: (0, 1),
            reason: format!("lattice spacing {h} <= {SEPARATION_FACTOR}a = {}", SEPARATION_FACTOR * a),
        });
    }
    let mut centers = Vec::with_capacity(n_per_axis.pow(3));
    for i in 0..n_per_axis {
        for j in 0..n_per_axis {
            for k in 0..n_per_axis {
                centers.push(Vec3::new(
                    bbox.lo[0] + (i as f64 + 0.5) * h,
                    bbox.lo[1] + (j as f64 + 0.5) * h,
                    bbox.lo[2] + (k as f64 + 0.5) * h,
                ));
            }
        }
    }
    let cloud = ParticleCloud::spheres(centers, a, bbox);
    validate(&cloud)?;
    Ok(cloud)
}

type CellKey = (i64, i64, i64);

fn cell_of(x: &Vec3, origin: &[f64; 3], size: f64) -> CellKey {
    (
        ((x[0] - origin[0]) / size).floor() as i64,
        ((x[1] - origin[1]) / size).floor() as i64,
        ((x[2] - origin[2]) / size).floor() as i64,
    )
}

/// Random sequential addition: uniform proposals in the box (shrunk by `a`),
/// accepted when at distance `>= dmin` from every placed center. Proposals are
/// checked against a hash grid of cell size `dmin`.
pub fn generate_rsa(
    bbox: Aabb,
    n: usize,
    a: f64,
    dmin: f64,
    seed: u64,
    max_attempts: Option<usize>,
) -> Result<ParticleCloud> {
    if !(a > 0.0) || !bbox.is_valid() {
        return Err(Error::InvalidParameter(format!("rsa needs a > 0 and a valid box (a = {a})")));
    }
    if !(dmin > SEPARATION_FACTOR * a) {
        return Err(Error::InvalidParameter(format!(
            "rsa needs dmin > {SEPARATION_FACTOR}a, got dmin = {dmin}, a = {a}"
        )));
    }
    let inner = bbox.expanded(-a);
    if !inner.is_valid() {
        return Err(Error::InvalidParameter("box too small for the radius".into()));
    }
    let max_attempts = max_attempts.unwrap_or(10_000usize.saturating_mul(n.max(1)));
    // Impossible beyond the densest packing of exclusion spheres of diameter dmin.
    let reachable = inner.expanded(0.5 * dmin).volume();
    if n as f64 * PI / 6.0 * dmin.powi(3) > 0.7405 * reachable {
        return Err(Error::Saturation { placed: 0, requested: n, attempts: 0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec3> = Vec::with_capacity(n);
    let mut grid: HashMap<CellKey, Vec<usize>> = HashMap::new();
    let dmin2 = dmin * dmin;
    let mut attempts = 0usize;
    while centers.len() < n {
        if attempts >= max_attempts {
            return Err(Error::Saturation { placed: centers.len(), requested: n, attempts });
        }
        attempts += 1;
        let x = Vec3::new(
            rng.gen_range(inner.lo[0]..=inner.hi[0]),
            rng.gen_range(inner.lo[1]..=inner.hi[1]),
            rng.gen_range(inner.lo[2]..=inner.hi[2]),
        );
        let key = cell_of(&x, &inner.lo, dmin);
        let mut ok = true;
        'search: for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if let Some(list) = grid.get(&(key.0 + di, key.1 + dj, key.2 + dk)) {
                        if list.iter().any(|&m| (centers[m] - x).norm_squared() < dmin2) {
                            ok = false;
                            break 'search;
                        }
                    }
                }
            }
        }
        if ok {
            grid.entry(key).or_default().push(centers.len());
            centers.push(x);
        }
    }
    let cloud = ParticleCloud::spheres(centers, a, bbox);
    validate(&cloud)?;
    Ok(cloud)
}

/// Closest pair of centers via a spatial hash; `None` for fewer than two
/// points.
pub fn min_separation(centers: &[Vec3]) -> Option<(f64, usize, usize)> {
    if centers.len() < 2 {
        return None;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in centers {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0f64, f64::max);
    if extent == 0.0 {
        return Some((0.0, 0, 1));
    }
    let vol = (0..3).map(|k| (hi[k] - lo[k]).max(extent * 1e-3)).product::<f64>();
    let mut size = 0.5 * (vol / centers.len() as f64).cbrt();
    loop {
        let mut grid: HashMap<CellKey, Vec<usize>> = HashMap::new();
        for (i, c) in centers.iter().enumerate() {
            grid.entry(cell_of(c, &lo, size)).or_default().push(i);
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, c) in centers.iter().enumerate() {
            let key = cell_of(c, &lo, size);
            for di in -1..=1 {
                for dj in -1..=1 {
                    for dk in -1..=1 {
                        let Some(list) = grid.get(&(key.0 + di, key.1 + dj, key.2 + dk)) else {
                            continue;
                        };
                        for &j in list.iter().filter(|&&j| j > i) {
                            let d = (centers[j] - c).norm();
                            if best.is_none_or(|(b, bi, bj)| d < b || (d == b && (i, j) < (bi, bj))) {
                                best = Some((d, i, j));
                            }
                        }
                    }
                }
            }
        }
        // Every pair closer than `size` shares a neighbourhood, so a candidate
        // within `size` is the true minimum.
        match best {
            Some(b) if b.0 <= size => return Some(b),
            _ => size *= 2.0,
        }
    }
}

/// Checks containment and separation, returning the cloud statistics.
pub fn validate(cloud: &ParticleCloud) -> Result<CloudStats> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::InvalidParameter("cloud has no particles".into()));
    }
    if !(cloud.a > 0.0 && cloud.a.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {}", cloud.a)));
    }
    if !cloud.bbox.is_valid() {
        return Err(Error::InvalidParameter("invalid bounding box".into()));
    }
    if cloud.mobilities.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} mobilities for {n} particles",
            cloud.mobilities.len()
        )));
    }
    if let Some(l) = cloud.mobilities.iter().position(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter(format!("mobility of particle {l} is not finite")));
    }
    for (l, c) in cloud.centers.iter().enumerate() {
        if !cloud.bbox.contains_ball(c, cloud.a) {
            return Err(Error::H2 { pair: (l, l), reason: format!("ball B(x_{l}, a) leaves the box") });
        }
    }
    let d = match min_separation(&cloud.centers) {
        None => f64::INFINITY,
        Some((d, i, j)) => {
            if !(d > SEPARATION_FACTOR * cloud.a) {
                return Err(Error::H2 {
                    pair: (i, j),
                    reason: format!("|x_{i} - x_{j}| = {d} <= {SEPARATION_FACTOR}a = {}", SEPARATION_FACTOR * cloud.a),
                });
            }
            d
        }
    };
    let a3 = cloud.a.powi(3);
    let phi_global = 4.0 * PI * n as f64 * a3 / (3.0 * cloud.bbox.volume());
    if phi_global >= 1.0 {
        return Err(Error::InvalidParameter(format!("volume fraction {phi_global} >= 1")));
    }
    let phi_local = if d.is_finite() { a3 / d.powi(3) } else { 0.0 };
    Ok(CloudStats { n, d, phi_global, phi_local })
}
