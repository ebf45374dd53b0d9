use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stokes_reflect::cloud::generate_rsa;
use stokes_reflect::effective::{
    einstein_coefficient, fixed_point_vc, hminus1_distance, lp_field_distance, tilde_vc, uniform_meff,
    EinsteinOrder, ExclusionRegion, GridField, GridSpec,
};
use stokes_reflect::{Aabb, SymTraceFree3, Vec3};

fn gaussian(spec: GridSpec, center: Vec3, width: f64) -> GridField {
    GridField::from_fn(spec, |x| (-(x - center).norm_squared() / (width * width)).exp())
}

fn random_field(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridField {
    // supported in the central half so the truncated kernel is exact
    let q = spec.n / 4;
    let mut f = GridField::scalar(spec);
    for idx in 0..spec.num_cells() {
        let (i, j, k) = spec.unindex(idx);
        if [i, j, k].iter().all(|&c| c >= q && c < 3 * q) {
            f.component_mut(0)[idx] = rng.gen_range(-1.0..1.0);
        }
    }
    f
}

#[test]
fn hminus1_is_a_metric() {
    let spec = GridSpec::new(Aabb::cube([-1.0; 3], 2.0), 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let (f, g, h) = (random_field(spec, &mut rng), random_field(spec, &mut rng), random_field(spec, &mut rng));
        let fg = hminus1_distance(&f, &g).unwrap();
        let gf = hminus1_distance(&g, &f).unwrap();
        assert!((fg - gf).abs() < 1e-10 * fg.max(1.0));
        let fh = hminus1_distance(&f, &h).unwrap();
        let gh = hminus1_distance(&g, &h).unwrap();
        assert!(fh <= fg + gh + 1e-10);
        assert_eq!(hminus1_distance(&f, &f).unwrap(), 0.0);
    }
}

#[test]
fn hminus1_is_translation_invariant() {
    let spec = GridSpec::new(Aabb::cube([-8.0; 3], 16.0), 32).unwrap();
    let zero = GridField::scalar(spec);
    let shift = Vec3::new(1.0, -0.5, 1.5);
    let a = hminus1_distance(&gaussian(spec, Vec3::zeros(), 1.0), &zero).unwrap();
    let b = hminus1_distance(&gaussian(spec, shift, 1.0), &zero).unwrap();
    assert!((a - b).abs() < 1e-3 * a);
}

#[test]
fn refinement_changes_little() {
    let bbox = Aabb::cube([-8.0; 3], 16.0);
    let norm = |n| {
        let spec = GridSpec::new(bbox, n).unwrap();
        hminus1_distance(&gaussian(spec, Vec3::zeros(), 1.5), &GridField::scalar(spec)).unwrap()
    };
    let (coarse, fine) = (norm(32), norm(64));
    assert!((coarse - fine).abs() < 0.02 * fine);

    let region = ExclusionRegion { bbox: Aabb::unit(), centers: vec![Vec3::new(0.5, 0.5, 0.5)], radius: 0.2 };
    let u = |pts: &[Vec3]| {
        Ok(pts.iter().map(|x| Vec3::new((3.0 * x.y).sin(), x.x * x.z, (x.x + x.y).cos())).collect())
    };
    let zero = |pts: &[Vec3]| Ok(vec![Vec3::zeros(); pts.len()]);
    let lp = |n| lp_field_distance(u, zero, &region, 1.2, &GridSpec::new(Aabb::unit(), n).unwrap()).unwrap();
    let (coarse, fine) = (lp(32), lp(64));
    assert!((coarse - fine).abs() < 0.02 * fine);
}

#[test]
fn far_field_is_divergence_free() {
    let spec = GridSpec::new(Aabb::unit(), 8).unwrap();
    let model = uniform_meff(spec, Aabb::cube([0.25; 3], 0.5), 0.01, 5.0).unwrap();
    let a = SymTraceFree3::new([0.5, -0.2, 0.3, 0.1, 0.4]);
    let eps = 1e-3;
    for dir in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 2.0, 0.5).normalize(), Vec3::new(0.3, -0.3, -1.0).normalize()] {
        let x = Vec3::new(0.5, 0.5, 0.5) + 2.5 * dir;
        let mut pts = Vec::new();
        for axis in 0..3 {
            let mut e = Vec3::zeros();
            e[axis] = eps;
            pts.push(x + e);
            pts.push(x - e);
        }
        let v = tilde_vc(&model, &a, &pts).unwrap();
        let div: f64 = (0..3).map(|axis| (v[2 * axis][axis] - v[2 * axis + 1][axis]) / (2.0 * eps)).sum();
        assert!(div.abs() < 1e-4, "divergence {div:e}");
    }
}

#[test]
fn fixed_point_contracts_geometrically() {
    let spec = GridSpec::new(Aabb::unit(), 16).unwrap();
    let model = uniform_meff(spec, Aabb::cube([0.25; 3], 0.5), 0.01, 5.0).unwrap();
    let a = SymTraceFree3::new([1.0, 0.0, 0.3, 0.0, -0.2]);
    let tol = 1e-12;
    let (_, log) = fixed_point_vc(&model, &a, tol, 100).unwrap();
    assert!(log.converged);
    assert!(*log.increments.last().unwrap() <= tol);
    for w in log.increments.windows(2).skip(1) {
        assert!(w[1] < w[0]);
    }
}

#[test]
fn first_order_einstein_is_exact_for_any_cloud() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..8 {
        let side = rng.gen_range(0.5..4.0);
        let n = rng.gen_range(1..60);
        let a = side * rng.gen_range(0.001..0.01);
        let bbox = Aabb::cube([rng.gen_range(-2.0..2.0); 3], side);
        let cloud = generate_rsa(bbox, n, a, 0.1 * side, seed, None).unwrap();
        let strain = SymTraceFree3::new(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let c = einstein_coefficient(&cloud, &strain, EinsteinOrder::First).unwrap();
        assert!((c - 2.5).abs() < 1e-12, "{c}");
    }
}
