mod oracles;

use proptest::prelude::*;
use rvmb::kinematics::*;
use rvmb::Vec3;

fn vec3(max: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-max..max).prop_map(Vec3::from)
}

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, 0.0..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        Vec3::new(s * phi.cos(), s * phi.sin(), z)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn post_collision_conserves_four_momentum(v in vec3(30.0), u in vec3(30.0), w in unit(), c in 1.0f64..50.0) {
        let (vp, up) = post_collision(&v, &u, &w, c).unwrap();
        let scale = v.norm() + u.norm() + c;
        prop_assert!((v + u - vp - up).norm() <= 1e-12 * scale);
        let e = energy(&v, c) + energy(&u, c);
        prop_assert!((e - energy(&vp, c) - energy(&up, c)).abs() <= 1e-12 * e);
    }

    #[test]
    fn relative_momentum_is_invariant(v in vec3(30.0), u in vec3(30.0), w in unit(), c in 1.0f64..50.0) {
        let (vp, up) = post_collision(&v, &u, &w, c).unwrap();
        let g = relative_momentum(&v, &u, c);
        prop_assume!(g > 1e-6);
        prop_assert!((relative_momentum(&vp, &up, c) - g).abs() <= 1e-10 * g);
        let s = s_invariant(&v, &u, c);
        prop_assert!((s - g * g - 4.0 * c * c).abs() <= 1e-12 * s);
    }

    #[test]
    fn energy_matches_oracle(v in vec3(100.0), c in 1.0f64..1e3) {
        prop_assert!((energy(&v, c) - oracles::v0(&v, c)).abs() <= 1e-14 * oracles::v0(&v, c));
        prop_assert!(rel_velocity(&v, c).norm() < c);
    }

    #[test]
    fn check_map_inverts_velocity(v in vec3(20.0), c in 1.0f64..20.0) {
        let back = check_map(&rel_velocity(&v, c), c).unwrap();
        prop_assert!((back - v).norm() <= 1e-9 * (1.0 + v.norm()) * (1.0 + (v.norm() / c).powi(2)));
    }

    #[test]
    fn moller_velocity_bounded_by_c(v in vec3(20.0), u in vec3(20.0), c in 1.0f64..10.0) {
        let m = moller_velocity(&v, &u, c);
        prop_assert!(m >= 0.0 && m <= 2.0 * c * (1.0 + 1e-12));
    }
}

#[test]
fn newtonian_limit_approaches_classical_map() {
    let v = Vec3::new(1.0, 2.0, 3.0);
    let u = Vec3::new(-2.0, 0.0, 1.0);
    let w = Vec3::new(0.0, 0.6, 0.8);
    let (cv, cu) = oracles::classical_elastic(&v, &u, &w);
    let mut last = f64::INFINITY;
    for c in [1e2, 1e3, 1e4, 1e6] {
        let (vp, up) = post_collision(&v, &u, &w, c).unwrap();
        let err = (vp - cv).norm().max((up - cu).norm());
        assert!(err < last);
        last = err;
    }
    assert!(last <= 1e-4 * cv.norm());
}

#[test]
fn transport_jacobian_closed_form() {
    let v = Vec3::new(0.3, -1.2, 2.0);
    let (t, c): (f64, f64) = (2.5, 3.0);
    let expected = c.powi(5) * t.powi(3) / oracles::v0(&v, c).powi(5);
    assert!((transport_jacobian(&v, t, c) - expected).abs() <= 1e-15 * expected);
    assert_eq!(transport_jacobian(&Vec3::zeros(), 1.0, 2.0), 1.0);
}

#[test]
fn forward_scattering_has_zero_angle() {
    let v = Vec3::new(1.0, 0.5, -0.3);
    let u = Vec3::new(-0.4, 0.2, 0.9);
    let c = 2.0;
    let cos = scattering_cosine(&v, &u, &v, &u, c).unwrap();
    assert!((cos - 1.0).abs() <= 1e-12);
    let back = scattering_cosine(&v, &u, &u, &v, c).unwrap();
    assert!((back + 1.0).abs() <= 1e-12);
}

#[test]
fn invalid_inputs_are_rejected() {
    let v = Vec3::new(1.0, 0.0, 0.0);
    assert!(post_collision(&v, &-v, &Vec3::new(2.0, 0.0, 0.0), 1.0).is_err());
    assert!(check_map(&Vec3::new(1.5, 0.0, 0.0), 1.0).is_err());
}
