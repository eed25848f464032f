use proptest::prelude::*;
use rvmb::analysis::*;
use rvmb::Vec3;

fn vec3(max: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-max..max).prop_map(Vec3::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn log_weight_matches_weight(v in vec3(10.0), x in vec3(50.0), t in 0.0f64..20.0, c in 1.0f64..10.0) {
        let w = weight_w(6, 3, t, &x, &v, c);
        prop_assert!((ln_weight_w(6, 3, t, &x, &v, c) - w.ln()).abs() <= 1e-12 * (1.0 + w.ln().abs()));
        let vh = v / (c * c + v.norm_squared()).sqrt() * c;
        let y = x - vh * t;
        let direct = (1.0 + v.norm_squared()).powi(3) * (1.0 + y.norm_squared()).powf(1.5);
        prop_assert!((w - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn composite_weight_is_the_sum_of_its_parts(v in vec3(5.0), x in vec3(5.0), t in 0.0f64..5.0, k in 1u32..4) {
        let n = composite_weight(&v, t, &x, k, 1.0);
        let parts = weight_w(4 * k + 50, k, t, &x, &v, 1.0) + weight_w(2 * k + 20, k + 10, t, &x, &v, 1.0);
        prop_assert!((n - parts).abs() <= 1e-12 * parts);
    }
}

#[test]
fn change_of_variables_identity() {
    for (t, x, u, c) in [
        (2.0, Vec3::new(0.5, 0.0, -0.3), Vec3::new(0.2, 0.0, 0.0), 1.0),
        (1.0, Vec3::new(-0.2, 0.4, 0.1), Vec3::new(0.0, -0.5, 0.3), 2.0),
        (0.5, Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 1.0, 0.0), 1.0),
    ] {
        let (lhs, rhs) = change_of_variables_sides(t, &x, &Vec3::zeros(), &u, c, 24).unwrap();
        assert!((lhs - rhs).abs() <= 1e-6 * lhs, "t {t}: {lhs} vs {rhs}");
    }
    assert!(change_of_variables_sides(0.0, &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), 1.0, 8).is_err());
}

#[test]
fn cone_integrals_converge_under_refinement() {
    let res = ConeResolution::default();
    let fine = res.refined().refined();
    for (t, r, c) in [(10.0, 3.0, 1.0), (50.0, 49.0, 1.0), (2.0, 30.0, 10.0)] {
        let pairs = [
            (cone_integral_i1(t, r, c, 4.0, &res), cone_integral_i1(t, r, c, 4.0, &fine)),
            (cone_integral_i2(t, r, c, 3.0, &res), cone_integral_i2(t, r, c, 3.0, &fine)),
            (cone_integral_i3(t, r, c, &res), cone_integral_i3(t, r, c, &fine)),
        ];
        for (a, b) in pairs {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "t {t} r {r} c {c}: {a} vs {b}");
        }
    }
}

#[test]
fn graded_rule_integrates_polynomials() {
    let rule = graded_rule(0.0, 3.0, &[1.0, 2.5], &ConeResolution::default());
    let s: f64 = rule.iter().map(|(x, w)| w * x * x * x).sum();
    assert!((s - 81.0 / 4.0).abs() <= 1e-12);
}

#[test]
fn case_ids_round_trip() {
    for case in InequalityCase::ALL {
        assert_eq!(InequalityCase::parse(case.id()).unwrap(), case);
    }
    assert!(InequalityCase::parse("i4").is_err());
}

#[test]
fn kappa_bound_sup_is_root_two() {
    let r = verify_inequality(InequalityCase::KappaC, 1000, 3).unwrap();
    assert!((r.sup_ratio - 2f64.sqrt()).abs() <= 1e-3, "{r:?}");
    assert!(r.stable);
}

#[test]
fn raw_subadditivity_fails_without_weights() {
    let w = raw_subadditivity_witness(100_000, 7).expect("a violating draw");
    assert!(w.ratio > 1.0);
}

#[test]
fn zero_samples_is_an_error() {
    assert!(verify_inequality(InequalityCase::I2, 0, 1).is_err());
}
