//! Symmetric trace-free 3×3 matrices and linear maps between them.
//!
//! Every strain rate and stresslet coefficient lives in the five-dimensional
//! space Sym₃,σ(ℝ). Elements are stored by their coordinates in the fixed
//! Frobenius-orthonormal basis
//!
//! ```text
//! E1 = diag(1,-1,0)/√2     E2 = diag(1,1,-2)/√6
//! E3 = (e1⊗e2+e2⊗e1)/√2    E4 = (e1⊗e3+e3⊗e1)/√2    E5 = (e2⊗e3+e3⊗e2)/√2
//! ```
//!
//! so that the coefficient 2-norm is the Frobenius norm and the coefficient
//! dot product is the matrix contraction `A:B`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::Mat3;

const FRAC_1_SQRT_6: f64 = 0.408_248_290_463_863_f64;

/// The orthonormal basis of Sym₃,σ(ℝ).
pub fn basis() -> [Mat3; 5] {
    use std::f64::consts::FRAC_1_SQRT_2 as S2;
    let s6 = FRAC_1_SQRT_6;
    [
        Mat3::new(S2, 0.0, 0.0, 0.0, -S2, 0.0, 0.0, 0.0, 0.0),
        Mat3::new(s6, 0.0, 0.0, 0.0, s6, 0.0, 0.0, 0.0, -2.0 * s6),
        Mat3::new(0.0, S2, 0.0, S2, 0.0, 0.0, 0.0, 0.0, 0.0),
        Mat3::new(0.0, 0.0, S2, 0.0, 0.0, 0.0, S2, 0.0, 0.0),
        Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, S2, 0.0, S2, 0.0),
    ]
}

/// Element of Sym₃,σ(ℝ) in basis coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymTraceFree3(pub [f64; 5]);

impl SymTraceFree3 {
    pub const ZERO: Self = SymTraceFree3([0.0; 5]);

    pub fn new(coeffs: [f64; 5]) -> Self {
        SymTraceFree3(coeffs)
    }

    /// The `i`-th basis element (0-based).
    pub fn unit(i: usize) -> Self {
        let mut c = [0.0; 5];
        c[i] = 1.0;
        SymTraceFree3(c)
    }

    pub fn coeffs(&self) -> &[f64; 5] {
        &self.0
    }

    /// Projects an arbitrary 3×3 matrix onto Sym₃,σ (ℙ₃,σ).
    pub fn project(m: &Mat3) -> Self {
        use std::f64::consts::FRAC_1_SQRT_2 as S2;
        // <(M+Mᵀ)/2, E_i> written out for the fixed basis.
        let (m00, m11, m22) = (m[(0, 0)], m[(1, 1)], m[(2, 2)]);
        SymTraceFree3([
            S2 * (m00 - m11),
            FRAC_1_SQRT_6 * (m00 + m11 - 2.0 * m22),
            S2 * (m[(0, 1)] + m[(1, 0)]),
            S2 * (m[(0, 2)] + m[(2, 0)]),
            S2 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    /// The 3×3 matrix represented by these coordinates.
    pub fn embed(&self) -> Mat3 {
        use std::f64::consts::FRAC_1_SQRT_2 as S2;
        let [c1, c2, c3, c4, c5] = self.0;
        let s6 = FRAC_1_SQRT_6;
        let d0 = S2 * c1 + s6 * c2;
        let d1 = -S2 * c1 + s6 * c2;
        let d2 = -2.0 * s6 * c2;
        let (o01, o02, o12) = (S2 * c3, S2 * c4, S2 * c5);
        Mat3::new(d0, o01, o02, o01, d1, o12, o02, o12, d2)
    }

    /// Frobenius inner product `A:B`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Frobenius norm `|A|`.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for SymTraceFree3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.0;
        c.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
        SymTraceFree3(c)
    }
}

impl AddAssign for SymTraceFree3 {
    fn add_assign(&mut self, rhs: Self) {
        self.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
    }
}

impl Sub for SymTraceFree3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut c = self.0;
        c.iter_mut().zip(rhs.0).for_each(|(a, b)| *a -= b);
        SymTraceFree3(c)
    }
}

impl Neg for SymTraceFree3 {
    type Output = Self;
    fn neg(self) -> Self {
        SymTraceFree3(self.0.map(|c| -c))
    }
}

impl Mul<SymTraceFree3> for f64 {
    type Output = SymTraceFree3;
    fn mul(self, rhs: SymTraceFree3) -> SymTraceFree3 {
        SymTraceFree3(rhs.0.map(|c| self * c))
    }
}

/// A linear map Sym₃,σ → Sym₃,σ stored as a 5×5 matrix acting on basis
/// coordinates. When it represents a particle it carries units of length³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobility(pub SMatrix<f64, 5, 5>);

impl Mobility {
    pub fn zero() -> Self {
        Mobility(SMatrix::zeros())
    }

    pub fn identity() -> Self {
        Mobility(SMatrix::identity())
    }

    pub fn scaled_identity(c: f64) -> Self {
        Mobility(SMatrix::identity() * c)
    }

    /// Mobility of a rigid sphere of radius `a`: (20π/3)·a³·I₅.
    pub fn sphere(a: f64) -> Self {
        Self::scaled_identity(SPHERE_MOBILITY * a * a * a)
    }

    pub fn from_row_major(entries: &[f64; 25]) -> Self {
        Mobility(SMatrix::from_row_slice(entries))
    }

    pub fn to_row_major(&self) -> [f64; 25] {
        let mut out = [0.0; 25];
        for i in 0..5 {
            for j in 0..5 {
                out[5 * i + j] = self.0[(i, j)];
            }
        }
        out
    }

    pub fn apply(&self, s: &SymTraceFree3) -> SymTraceFree3 {
        let mut out = [0.0; 5];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..5).map(|j| self.0[(i, j)] * s.0[j]).sum();
        }
        SymTraceFree3(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        Mobility(self.0 * c)
    }

    /// Operator 2-norm.
    pub fn operator_norm(&self) -> f64 {
        self.0.singular_values().max()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

/// Dimensionless sphere mobility 20π/3.
pub const SPHERE_MOBILITY: f64 = 20.0 * std::f64::consts::PI / 3.0;

impl Serialize for Mobility {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mobility {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[f64; 25]>::deserialize(d)?;
        Ok(Mobility::from_row_major(&v))
    }
}

pub fn project_sym_tracefree(m: &Mat3) -> SymTraceFree3 {
    SymTraceFree3::project(m)
}

pub fn embed(s: &SymTraceFree3) -> Mat3 {
    s.embed()
}

pub fn apply_mobility(m: &Mobility, s: &SymTraceFree3) -> SymTraceFree3 {
    m.apply(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_projection(m: &Mat3) -> Mat3 {
        let s = (m + m.transpose()) * 0.5;
        s - Mat3::identity() * (s.trace() / 3.0)
    }

    fn arb_mat() -> impl Strategy<Value = Mat3> {
        proptest::array::uniform9(-10.0f64..10.0).prop_map(|a| Mat3::from_row_slice(&a))
    }

    #[test]
    fn identity_and_skew_project_to_zero() {
        assert_eq!(SymTraceFree3::project(&Mat3::identity()).norm(), 0.0);
        let skew = Mat3::new(0.0, 1.0, -2.0, -1.0, 0.0, 3.0, 2.0, -3.0, 0.0);
        assert_eq!(SymTraceFree3::project(&skew).norm(), 0.0);
    }

    #[test]
    fn uniaxial_strain_norm() {
        let m = Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, -0.5, -0.5));
        let s = project_sym_tracefree(&m);
        assert!((s.norm() - 1.5f64.sqrt()).abs() < 1e-15);
        assert!((direct_projection(&m) - s.embed()).norm() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal_and_tracefree() {
        let b = basis();
        for i in 0..5 {
            assert!(b[i].trace().abs() < 1e-16);
            assert_eq!(b[i], b[i].transpose());
            for j in 0..5 {
                let g = b[i].component_mul(&b[j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-14, "gram[{i}][{j}] = {g}");
            }
            assert_eq!(SymTraceFree3::unit(i).embed(), b[i]);
        }
    }

    #[test]
    fn mobility_examples() {
        let s = SymTraceFree3::new([0.3, -0.1, 0.7, 0.2, -0.4]);
        assert_eq!(Mobility::identity().apply(&s), s);
        assert_eq!(Mobility::zero().apply(&s).norm(), 0.0);
        let unit = (1.0 / s.norm()) * s;
        let out = Mobility::sphere(1.0).apply(&unit);
        assert!((out.norm() - 20.943_951_023_931_955).abs() < 1e-12);
    }

    #[test]
    fn mobility_json_is_row_major() {
        let mut e = [0.0; 25];
        e[1] = 2.0; // row 0, column 1
        let m = Mobility::from_row_major(&e);
        assert_eq!(m.0[(0, 1)], 2.0);
        let txt = serde_json::to_string(&m).unwrap();
        let back: Mobility = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, m);
        let s: SymTraceFree3 = serde_json::from_str("[1,2,3,4,5]").unwrap();
        assert_eq!(s.0, [1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn embed_round_trip(c in proptest::array::uniform5(-100.0f64..100.0)) {
            let s = SymTraceFree3(c);
            let m = s.embed();
            prop_assert_eq!(m, m.transpose());
            prop_assert!(m.trace().abs() <= 4.0 * f64::EPSILON * s.norm().max(1.0) * 10.0);
            prop_assert!((m.norm() - s.norm()).abs() <= 4.0 * f64::EPSILON * s.norm().max(1.0));
            let back = SymTraceFree3::project(&m);
            let dev = (back - s).0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            prop_assert!(dev < 1e-14 * s.norm().max(1.0));
        }

        #[test]
        fn projection_matches_direct_and_is_idempotent(m in arb_mat()) {
            let p = SymTraceFree3::project(&m);
            prop_assert!((p.embed() - direct_projection(&m)).norm() < 1e-13);
            let pp = SymTraceFree3::project(&p.embed());
            prop_assert!((pp - p).norm() < 1e-13);
        }

        #[test]
        fn projection_is_self_adjoint(m in arb_mat(), n in arb_mat()) {
            let lhs = SymTraceFree3::project(&m).embed().component_mul(&n).sum();
            let rhs = m.component_mul(&SymTraceFree3::project(&n).embed()).sum();
            prop_assert!((lhs - rhs).abs() < 1e-13 * (1.0 + lhs.abs()));
        }

        #[test]
        fn mobility_is_linear(
            e in proptest::array::uniform25(-5.0f64..5.0),
            s1 in proptest::array::uniform5(-5.0f64..5.0),
            s2 in proptest::array::uniform5(-5.0f64..5.0),
            alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
        ) {
            let m = Mobility::from_row_major(&e);
            let (s1, s2) = (SymTraceFree3(s1), SymTraceFree3(s2));
            let lhs = m.apply(&(alpha * s1 + beta * s2));
            let rhs = alpha * m.apply(&s1) + beta * m.apply(&s2);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
