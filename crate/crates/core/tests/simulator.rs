use rvmb::collision::AngularFactor;
use rvmb::kinematics::{energy, rel_velocity, CollisionPair};
use rvmb::simulator::*;
use rvmb::{Error, Vec3};

fn two_temperature(n: usize, seed: u64) -> ParticleEnsemble {
    let hot = PhaseGaussian {
        amplitude: 1.0,
        x_center: Vec3::new(2.0, 2.0, 2.0),
        x_width: 0.3,
        v_center: Vec3::zeros(),
        temperature: 2.0,
    };
    let cold = PhaseGaussian { temperature: 0.5, ..hot };
    let mut s = init_mixture(&[hot, cold], n, 1.0, seed).unwrap();
    // equal weights are required by the collision step
    let w = 64.0 / (2 * n) as f64;
    s.weights.iter_mut().for_each(|x| *x = w);
    s
}

fn model() -> CollisionModel {
    CollisionModel { gamma: 0.0, sigma0: AngularFactor::Constant(1.0), cell: 4.0 }
}

fn totals(s: &ParticleEnsemble) -> (Vec3, f64) {
    (s.momentum(), s.energy())
}

/// `int f dv` smoothed by a Gaussian of width `h`.
fn smoothed_density(f: &PhaseGaussian, x: &Vec3, h: f64) -> f64 {
    let s2 = f.x_width * f.x_width + h * h;
    let r2 = (x - f.x_center).norm_squared();
    f.amplitude * (2.0 * std::f64::consts::PI * f.temperature).powf(1.5) * (f.x_width * f.x_width / s2).powf(1.5) * (-0.5 * r2 / s2).exp()
}

#[test]
fn kernel_density_matches_smoothed_gaussian() {
    let f = PhaseGaussian::standard();
    let s = init_from_distribution(&f, 200_000, 1.0, 5).unwrap();
    let probes: Vec<Vec3> = (0..12).map(|k| Vec3::new(0.25 * k as f64, 0.1, -0.2)).collect();
    let h = 0.3;
    let est = density_moment(&s, &probes, h).unwrap();
    let peak = smoothed_density(&f, &Vec3::zeros(), h);
    for (p, d) in probes.iter().zip(&est.density) {
        assert!((d - smoothed_density(&f, p, h)).abs() <= 0.03 * peak, "{p:?}: {d}");
    }
}

#[test]
fn kernel_density_integrates_to_the_mass() {
    let f = PhaseGaussian { x_width: 0.5, ..PhaseGaussian::standard() };
    let s = init_from_distribution(&f, 10_000, 1.0, 6).unwrap();
    let n = 24;
    let l = 3.0;
    let dx = 2.0 * l / n as f64;
    let probes: Vec<Vec3> = (0..n * n * n)
        .map(|k| {
            let (i, j, m) = (k % n, (k / n) % n, k / (n * n));
            Vec3::new(i as f64 + 0.5, j as f64 + 0.5, m as f64 + 0.5) * dx - Vec3::repeat(l)
        })
        .collect();
    let est = density_moment(&s, &probes, 0.3).unwrap();
    let mass: f64 = est.density.iter().sum::<f64>() * dx.powi(3);
    assert!((mass / f.mass() - 1.0).abs() <= 0.01, "{mass} vs {}", f.mass());
    assert!((s.mass() - f.mass()).abs() <= 1e-12 * f.mass());
}

#[test]
fn empty_ensemble_has_zero_density() {
    let s = init_from_distribution(&PhaseGaussian::standard(), 0, 1.0, 1).unwrap();
    let est = density_moment(&s, &[Vec3::zeros()], 0.2).unwrap();
    assert_eq!(est.density, vec![0.0]);
    assert!(density_moment(&s, &[Vec3::zeros()], 0.0).is_err());
}

#[test]
fn collisions_relax_the_temperature_gap() {
    let mut s = two_temperature(2000, 3);
    let gap = |s: &ParticleEnsemble| s.temperature(0) - s.temperature(1);
    let mut last = gap(&s);
    assert!(last > 1.0);
    for block in 0..6 {
        for k in 0..100 {
            collide(&mut s, &model(), 0.002, 9, block * 100 + k).unwrap();
        }
        let g = gap(&s);
        assert!(g < last, "block {block}: {g} after {last}");
        last = g;
    }
    assert!(last < 0.5 * (2.0 - 0.5));
}

#[test]
fn collisions_conserve_momentum_and_energy() {
    let mut s = two_temperature(5000, 4);
    let (p0, e0) = totals(&s);
    let mut accepted = 0;
    for k in 0..1000 {
        accepted += collide(&mut s, &model(), 0.01, 11, k).unwrap().accepted;
    }
    let (p1, e1) = totals(&s);
    assert!(accepted > 1000);
    assert!((p1 - p0).norm() <= 1e-10 * e0);
    assert!((e1 - e0).abs() <= 1e-10 * e0);
}

#[test]
fn accepted_pair_conserves_to_rounding() {
    let (v, u, c) = (Vec3::new(0.7, -0.2, 0.4), Vec3::new(-0.3, 0.5, 0.1), 1.0);
    let p = CollisionPair::new(v, u, c);
    let flux = c * p.sqrt_s() / (4.0 * p.v0 * p.u0);
    let (dt, cell) = (0.1, 4.0f64);
    let w = 0.999_999 / (dt / cell.powi(3) * 4.0 * std::f64::consts::PI * flux);
    let mut s = ParticleEnsemble {
        positions: vec![Vec3::repeat(1.0), Vec3::repeat(1.5)],
        momenta: vec![v, u],
        weights: vec![w; 2],
        tags: vec![0, 0],
        c,
        time: 0.0,
    };
    let stats = collide(&mut s, &CollisionModel { cell, ..model() }, dt, 1, 0).unwrap();
    assert_eq!(stats.accepted, 1);
    assert!((s.momenta[0] - v).norm() > 1e-6);
    assert!((s.momenta[0] + s.momenta[1] - v - u).norm() <= 1e-12);
    let e = energy(&s.momenta[0], c) + energy(&s.momenta[1], c);
    assert!((e - energy(&v, c) - energy(&u, c)).abs() <= 1e-12);
}

#[test]
fn oversized_steps_are_split() {
    let mut s = two_temperature(2000, 5);
    let err = collide(&mut s.clone(), &model(), 5.0, 1, 0).unwrap_err();
    assert!(matches!(err, Error::MajorantOverflow { probability } if probability > 1.0));
    let (p0, e0) = totals(&s);
    let (_, parts) = collide_adaptive(&mut s, &model(), 5.0, 1, 0).unwrap();
    assert!(parts > 1);
    let (p1, e1) = totals(&s);
    assert!((p1 - p0).norm() <= 1e-12 * e0 && (e1 - e0).abs() <= 1e-12 * e0);
}

#[test]
fn zero_step_collision_is_the_identity() {
    let mut s = two_temperature(500, 6);
    let before = s.clone();
    let stats = collide(&mut s, &model(), 0.0, 1, 0).unwrap();
    assert_eq!(stats, CollisionStats::default());
    assert_eq!(s, before);
}

#[test]
fn collisions_are_reproducible() {
    let mut a = two_temperature(1000, 7);
    let mut b = a.clone();
    for k in 0..10 {
        collide(&mut a, &model(), 0.01, 3, k).unwrap();
        collide(&mut b, &model(), 0.01, 3, k).unwrap();
    }
    assert_eq!(a, b);
    assert_ne!(cell_seed(1, [0, 0, 0], 0), cell_seed(1, [0, 0, 0], 1));
}

#[test]
fn magnetic_rotation_keeps_the_speed() {
    let v = Vec3::new(0.8, -0.3, 0.5);
    let b = Vec3::new(0.2, 0.7, -0.4);
    let mut w = v;
    for _ in 0..1000 {
        w = kick(&w, &Vec3::zeros(), &b, 0.05, 2.0);
    }
    assert!((w.norm() - v.norm()).abs() <= 1e-12);
    assert!((w.dot(&b) - v.dot(&b)).abs() <= 1e-12);
    assert!((w - v).norm() > 0.1);
}

#[test]
fn electric_kick_is_linear_in_time() {
    let e = Vec3::new(0.1, 0.0, -0.2);
    let field = UniformField { e, b: Vec3::zeros() };
    let v0 = Vec3::new(0.3, 0.1, 0.0);
    let mk = || ParticleEnsemble {
        positions: vec![Vec3::zeros()],
        momenta: vec![v0],
        weights: vec![1.0],
        tags: vec![0],
        c: 1.0,
        time: 0.0,
    };
    let mut plus = mk();
    let mut minus = mk();
    for _ in 0..50 {
        step(&mut plus, 0.04, FieldMode::Prescribed(&field), ForceSign::Plus).unwrap();
        step(&mut minus, 0.04, FieldMode::Prescribed(&field), ForceSign::Minus).unwrap();
    }
    assert!((plus.momenta[0] - (v0 + e * 2.0)).norm() <= 1e-14);
    assert!((minus.momenta[0] - (v0 - e * 2.0)).norm() <= 1e-14);
    assert!((plus.time - 2.0).abs() <= 1e-12);
}

#[test]
fn free_transport_is_exact() {
    let mut s = init_from_distribution(&PhaseGaussian::standard(), 100, 3.0, 8).unwrap();
    let start = s.clone();
    step(&mut s, 2.5, FieldMode::None, ForceSign::Plus).unwrap();
    for ((x, x0), v) in s.positions.iter().zip(&start.positions).zip(&start.momenta) {
        assert!((x - (x0 + rel_velocity(v, 3.0) * 2.5)).norm() <= 1e-14);
    }
    assert_eq!(s.momenta, start.momenta);
    assert!(step(&mut s, 0.0, FieldMode::None, ForceSign::Plus).is_err());
}

#[test]
fn decay_fit_recovers_power_laws() {
    let ts = log_times(1.0, 100.0, 20);
    let cube: Vec<(f64, f64)> = ts.iter().map(|t| (*t, 5.0 * (1.0 + t).powi(-3))).collect();
    let fit = measure_decay("q", &cube, (1.0, 100.0)).unwrap();
    assert!((fit.exponent + 3.0).abs() <= 1e-9 && (fit.prefactor - 5.0).abs() <= 1e-8);
    let flat: Vec<(f64, f64)> = ts.iter().map(|t| (*t, 2.0)).collect();
    assert!(measure_decay("q", &flat, (1.0, 100.0)).unwrap().exponent.abs() <= 1e-12);
    let mut bad = cube.clone();
    bad[4].1 = 0.0;
    assert!(matches!(measure_decay("q", &bad, (1.0, 100.0)), Err(Error::Fit(_))));
    assert!(matches!(measure_decay("q", &cube[..7], (1.0, 100.0)), Err(Error::Fit(_))));
}

#[test]
fn decay_experiment_frozen_exponent() {
    let cfg = DecayConfig { n_particles: 5000, samples: 10, ..DecayConfig::default() };
    let run = decay_experiment(&cfg).unwrap();
    assert_eq!(run.rows.len(), 10);
    assert!((run.density_fit.exponent - FROZEN_EXPONENT).abs() <= 1e-9, "{}", run.density_fit.exponent);
    for r in &run.rows {
        assert!((r.mass - run.rows[0].mass).abs() <= 1e-12 * r.mass);
    }
}

const FROZEN_EXPONENT: f64 = -3.1697958912691977;
