mod oracles;

use proptest::prelude::*;
use rvmb::fields::*;
use rvmb::Vec3;

fn vec3(max: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-max..max).prop_map(Vec3::from)
}

#[test]
fn kirchhoff_matches_dalembert_for_one_bump() {
    let b = Bump { amplitude: 0.8, center: Vec3::new(0.2, -0.1, 0.3), radius: 0.9 };
    let data = BumpSum(vec![b]);
    let none = BumpSum(vec![]);
    for (t, x, c) in [(0.3, Vec3::new(0.5, 0.4, -0.2), 1.0), (1.1, Vec3::new(-0.7, 0.9, 1.2), 1.0), (0.4, Vec3::new(1.5, 0.0, 0.0), 2.0)] {
        let r = (x - b.center).norm();
        let e0 = oracles::radial_wave(b.amplitude, b.radius, r, t, c, true);
        let e1 = oracles::radial_wave(b.amplitude, b.radius, r, t, c, false);
        assert!((homogeneous_wave(&data, &none, t, &x, c) - e0).abs() <= 1e-12, "t {t}, x {x:?}");
        assert!((homogeneous_wave(&none, &data, t, &x, c) - e1).abs() <= 1e-12, "t {t}, x {x:?}");
    }
}

#[test]
fn kirchhoff_sphere_rule_agrees_with_exact_caps() {
    let f0 = BumpSum(vec![Bump { amplitude: 1.0, center: Vec3::zeros(), radius: 1.0 }]);
    let f1 = BumpSum(vec![Bump { amplitude: 0.5, center: Vec3::new(0.3, 0.0, 0.1), radius: 0.8 }]);
    let sphere = rvmb::quadrature::SphereRule::product(96, 96);
    let x = Vec3::new(0.2, 0.3, -0.1);
    let exact = homogeneous_wave(&f0, &f1, 0.5, &x, 1.0);
    let quad = homogeneous_wave_with(&f0, &f1, 0.5, &x, 1.0, &sphere);
    assert!((exact - quad).abs() <= 1e-6, "{exact} vs {quad}");
}

#[test]
fn kernel_means_vanish_on_an_independent_rule() {
    // midpoint rule in spherical angles about the z axis, not about v
    let (nt, np) = (800, 400);
    for (v, c) in [(Vec3::new(0.3, -0.5, 0.8), 1.0), (Vec3::new(1.0, 0.5, 0.2), 2.0)] {
        for (i, j, k) in [(0, 1, 2), (2, 2, 0), (1, 0, 1)] {
            let mut a = 0.0;
            let mut b = 0.0;
            for p in 0..nt {
                let th = (p as f64 + 0.5) * std::f64::consts::PI / nt as f64;
                for q in 0..np {
                    let ph = (q as f64 + 0.5) * std::f64::consts::TAU / np as f64;
                    let o = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                    let w = th.sin() * std::f64::consts::PI / nt as f64 * std::f64::consts::TAU / np as f64;
                    a += w * gs_kernel_a(&o, &v, c, i, k);
                    b += w * gs_kernel_b(&o, &v, c, i, j, k);
                }
            }
            assert!(a.abs() <= 1e-5 && b.abs() <= 1e-5, "v {v:?}, c {c}: {a}, {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_means_vanish(v in vec3(5.0), c in 1.0f64..20.0, i in 0usize..3, j in 0usize..3, k in 0usize..3) {
        let rule = kernel_sphere_rule(256, 16);
        prop_assert!(gs_kernel_a_integral(&v, c, i, k, &rule).abs() <= 1e-8);
        prop_assert!(gs_kernel_b_integral(&v, c, i, j, k, &rule).abs() <= 1e-8);
    }

    #[test]
    fn kappa_lies_in_zero_two(v in vec3(100.0), x in vec3(10.0), c in 1.0f64..100.0) {
        prop_assume!(x.norm() > 1e-6);
        let k = kappa(&v, &x, c).unwrap();
        let direct = 1.0 - v.dot(&x) / ((c * c + v.norm_squared()).sqrt() * x.norm());
        prop_assert!(k > 0.0 && k < 2.0);
        prop_assert!((k - direct).abs() <= 1e-12 * (1.0 + v.norm() / c).powi(2));
    }

    #[test]
    fn null_frame_is_orthonormal(x in vec3(10.0)) {
        prop_assume!(x.norm() > 1e-6);
        prop_assert!(NullFrame::new(&x).unwrap().defect() <= 1e-14);
    }

    #[test]
    fn null_components_reassemble(e in vec3(5.0), b in vec3(5.0), x in vec3(5.0)) {
        prop_assume!(x.norm() > 1e-6);
        let s = null_decompose(&e, &b, &x).unwrap();
        let f = NullFrame::new(&x).unwrap();
        let alpha = e + f.e1.cross(&b);
        prop_assert!((alpha.dot(&f.e2) - s.alpha1).abs() <= 1e-12 * (1.0 + e.norm() + b.norm()));
        prop_assert!((alpha.dot(&f.e3) - s.alpha2).abs() <= 1e-12 * (1.0 + e.norm() + b.norm()));
    }

    #[test]
    fn vector_identities(a in vec3(3.0), b in vec3(3.0), c in vec3(3.0), d in vec3(3.0), x in vec3(3.0)) {
        prop_assert!(cross_identities_check(&a, &b, &c, &d) <= 1e-14);
        prop_assume!(x.norm() > 1e-6);
        prop_assert!(frame_identities_check(&a, &x).unwrap() <= 1e-14);
    }
}

#[test]
fn retarded_distance_lies_on_the_cone() {
    let p = RetardedParticle { position: Vec3::new(0.5, -0.2, 0.1), momentum: Vec3::new(0.7, 0.3, -0.4), weight: 1.0, time: 1.0 };
    let (t, x, c) = (3.0, Vec3::new(-1.0, 0.4, 0.8), 2.0);
    let (tau, y) = retarded_distance(&p, t, &x, c, f64::NEG_INFINITY).unwrap();
    assert!(((x - y).norm() - tau).abs() <= 1e-12);
    assert!(retarded_distance(&p, t, &x, c, t).is_none());
}

#[test]
fn wave_residual_is_second_order() {
    let src = SeparableSource {
        profile: DriftingProfile { amplitude: 1.0, center: Vec3::new(0.1, 0.0, 0.0), drift: Vec3::new(0.3, 0.0, -0.1), width: 0.7 },
        momentum: rvmb::distribution::Gaussian::isotropic(1.0, Vec3::new(0.2, -0.1, 0.1), 0.5).unwrap(),
    };
    let gs = GlasseyStrauss::new(FieldKind::Electric(1), &src, 1.0, GsGrid::default()).unwrap();
    let s = gs.wave_residual_study(1.5, &Vec3::new(0.3, 0.2, -0.1), 0.2, 3).unwrap();
    assert!((s.fitted_order() - 2.0).abs() <= 0.2, "{s:?}");
}

#[test]
fn field_index_is_checked() {
    let src = ZeroSource;
    assert!(GlasseyStrauss::new(FieldKind::Electric(3), &src, 1.0, GsGrid::default()).is_err());
}
