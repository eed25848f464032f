use proptest::prelude::*;
use rvmb::vectorfields::*;

fn families() -> Vec<JetFamily> {
    let mut form = [[0.0; 7]; 7];
    for (a, row) in form.iter_mut().enumerate() {
        row[a] = 0.3 + 0.05 * a as f64;
    }
    vec![
        JetFamily::Gaussian { center: [0.1, 0.2, -0.1, 0.3, 0.0, 0.1, -0.2], form },
        JetFamily::Transported { x0: rvmb::Vec3::new(0.1, 0.0, -0.2), width: 0.8, u: rvmb::Vec3::new(0.3, 0.1, 0.0) },
        JetFamily::Polynomial,
        JetFamily::Oscillatory { k: [0.3, 0.7, -0.5, 0.2, 0.4, -0.6, 0.1] },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn commutator_table_holds(p in prop::array::uniform7(-1.5f64..1.5), c in prop::sample::select(vec![1.0, 2.0, 10.0, 1000.0])) {
        let mut point = p;
        point[0] = point[0].abs() + 0.2;
        for f in families() {
            let jet = f.jet(point, c);
            for lifted in [true, false] {
                prop_assert!(commutator_table_residual(&jet, c, lifted).unwrap() <= 1e-10, "{} c {c}", f.name());
            }
            for g in Generator::ALL {
                prop_assert!(transport_commutation_residual(g, &jet, c).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn null_frame_and_reconstruction(p in prop::array::uniform7(-1.5f64..1.5), c in 1.0f64..100.0) {
        let mut point = p;
        point[0] = point[0].abs() + 0.2;
        prop_assume!(point[1].hypot(point[2]) > 1e-3);
        for f in families() {
            let jet = f.jet(point, c);
            for a in 1..=3 {
                prop_assert!(null_frame_reduction(a, &jet, c).unwrap() <= 1e-10);
            }
            prop_assert!(reconstruction_residual(&jet, c).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn generators_round_trip_by_name() {
    for g in Generator::ALL {
        assert_eq!(Generator::parse(&g.name()).unwrap(), g);
    }
    assert!(Generator::parse("Omega4").is_err());
}

#[test]
fn homogeneous_and_translation_counts() {
    use Generator::*;
    assert_eq!(word_counts(&[S, Dt, Boost(0), S]), (3, 1));
    assert_eq!(word_counts(&[Dt, Dx(1)]), (0, 2));
    assert_eq!(word_counts(&[]), (0, 0));
}

#[test]
fn boost_reduces_to_galilean_at_large_c() {
    let point = [1.3, 0.4, -0.7, 0.9, 0.6, -0.3, 0.8];
    let mut last = f64::INFINITY;
    for c in [1e2, 1e4, 1e6] {
        let jet = JetFamily::Polynomial.jet(point, c);
        let d = newtonian_boost_defect(0, &jet, c);
        assert!(d <= last * 1.0001);
        last = d;
    }
    assert!(last <= 1e-5);
}

#[test]
fn interval_is_boost_invariant() {
    let point = [1.3, 0.4, -0.7, 0.9, 0.6, -0.3, 0.8];
    for c in [1.0, 3.0] {
        let jet = JetFamily::Interval.jet(point, c);
        for g in [Generator::Boost(0), Generator::Boost(2), Generator::Rotation(0, 1)] {
            assert!(apply(g.unlifted(), &jet, c).abs() <= 1e-12, "{:?}", g);
        }
    }
}

#[test]
fn missing_derivatives_are_reported() {
    let point = [1.3, 0.4, -0.7, 0.9, 0.6, -0.3, 0.8];
    let jet = JetFamily::Polynomial.jet(point, 1.0).first_order();
    assert!(commutator_residual(Generator::S.lifted(), Generator::Dt.lifted(), &jet, 1.0).is_err());
}
