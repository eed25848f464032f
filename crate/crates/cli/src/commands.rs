//! The subcommands: schema, defaults and the checks each one runs.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rvmb::analysis::{change_of_variables_sides, raw_subadditivity_witness, verify_inequality, InequalityCase};
use rvmb::collision::{
    carleman_c, carleman_ratio, chain_rule_study, collision_brackets, default_fd_step, eval_gain_loss, rotation_study,
    AngularFactor, ConvergenceStudy, GridSpec, KernelSpec, MomentGrid, Stencil,
};
use rvmb::distribution::{Gaussian, GaussianMixture, Juttner, MomentumDensity};
use rvmb::fields::{
    gs_kernel_a_integral, gs_kernel_b_integral, homogeneous_wave, kernel_sphere_rule, Bump, BumpSum, DriftingProfile,
    FieldKind, GlasseyStrauss, GsGrid, SeparableSource,
};
use rvmb::kinematics::{
    energy, post_collision, rel_velocity, relative_momentum, s_invariant, scattering_cosine, transport_jacobian,
};
use rvmb::report::{Check, Report, Table};
use rvmb::simulator::{
    collide, decay_experiment, density_moment, init_mixture, step, CollisionModel, DecayConfig, DecayingField,
    FieldMode, ForceSign, PhaseGaussian, UniformField,
};
use rvmb::vectorfields::{
    commutator_residual, newtonian_boost_defect, null_frame_reduction, reconstruction_residual,
    transport_commutation_residual, Generator, JetFamily, VectorFieldId,
};
use rvmb::{Error, Result, Vec3};

use crate::config::{key, Key, Value};
use crate::config::Config;

/// Subcommands in suite order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    KinematicsCheck,
    CollisionVerify,
    ChainRule,
    CarlemanScan,
    FieldsSolve,
    KernelMeans,
    VectorfieldTable,
    InequalityScan,
    Simulate,
    DecayFit,
    Report,
}

impl Command {
    pub const SUITE: [Command; 10] = [
        Command::KinematicsCheck,
        Command::CollisionVerify,
        Command::ChainRule,
        Command::CarlemanScan,
        Command::FieldsSolve,
        Command::KernelMeans,
        Command::VectorfieldTable,
        Command::InequalityScan,
        Command::Simulate,
        Command::DecayFit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::KinematicsCheck => "kinematics-check",
            Command::CollisionVerify => "collision-verify",
            Command::ChainRule => "chain-rule",
            Command::CarlemanScan => "carleman-scan",
            Command::FieldsSolve => "fields-solve",
            Command::KernelMeans => "kernel-means",
            Command::VectorfieldTable => "vectorfield-table",
            Command::InequalityScan => "inequality-scan",
            Command::Simulate => "simulate",
            Command::DecayFit => "decay-fit",
            Command::Report => "report",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::SUITE.iter().chain(&[Command::Report]).copied().find(|c| c.name() == name)
    }

    pub fn schema(&self) -> Vec<Key> {
        use Value::*;
        let f = |v: f64| Float(v);
        let i = |v: u64| Int(v);
        let l = |v: &[f64]| Floats(v.to_vec());
        match self {
            Command::KinematicsCheck => vec![
                key("seed", i(11), "random stream"),
                key("draws", i(100_000), "random collisions"),
                key("speeds", l(&[1.0, 2.0, 10.0]), "speeds of light"),
                key("max_momentum", f(10.0), "largest |v| / c of the draws"),
                key("tol", f(1e-10), "conservation, invariance and half-angle tolerance"),
                key("newton_c", f(1e6), "speed of light of the Newtonian comparison"),
                key("newton_draws", i(1000), "scattering directions of the Newtonian comparison"),
                key("newton_tol", f(1e-4), "relative distance to the classical map"),
                key("jacobian_samples", i(1000), "samples of the transport Jacobian"),
                key("jacobian_tol", f(1e-6), "relative Jacobian tolerance"),
            ],
            Command::CollisionVerify => vec![
                key("gammas", l(&[0.0, -0.5, -1.0, -1.9]), "collision exponents"),
                key("speeds", l(&[1.0, 2.0, 10.0]), "speeds of light"),
                key("seed", i(12), "random stream of the probe momenta"),
                key("probes", i(50), "probe momenta of the equilibrium check"),
                key("temperature", f(1.0), "Juttner temperature"),
                key("u_polar", i(48), "polar nodes of the u sphere for the moments"),
                key("moment_order", i(16), "radial order of the moment grid"),
                key("moment_panels", i(4), "radial panels of the moment grid"),
                key("radial_panels", i(8), "radial panels per envelope radius of the equilibrium grid"),
                key("conservation_tol", f(1e-7), "relative moment tolerance"),
                key("equilibrium_tol", f(1e-6), "|Q| / max(gain, loss) tolerance"),
            ],
            Command::ChainRule => vec![
                key("gamma", f(-0.5), "collision exponent"),
                key("c", f(1.0), "speed of light"),
                key("halvings", i(4), "step halvings"),
                key("order_min", f(1.8), "lowest admissible fitted order"),
                key("order_max", f(2.2), "highest admissible fitted order"),
                key("terminal_tol", f(1e-5), "terminal residual tolerance"),
            ],
            Command::CarlemanScan => vec![
                key("seed", i(13), "random stream"),
                key("samples", i(200), "random (v, v') pairs per parameter set"),
                key("betas", l(&[-1.0, -0.5, 0.0, 1.0]), "momentum exponents"),
                key("ks", l(&[10.0, 12.0]), "decay exponents"),
                key("speeds", l(&[1.0, 2.0, 10.0]), "speeds of light"),
                key("closed_form_tol", f(1e-10), "relative tolerance of the closed-form case"),
            ],
            Command::FieldsSolve => vec![
                key("speeds", l(&[1.0, 2.0, 10.0]), "speeds of light"),
                key("h0", f(0.2), "initial spatial step of the wave residual"),
                key("halvings", i(3), "step halvings"),
                key("order_min", f(1.8), "lowest admissible fitted order"),
                key("order_max", f(2.2), "highest admissible fitted order"),
                key("probes", i(20), "Kirchhoff probe points"),
                key("seed", i(14), "random stream of the probe points"),
            ],
            Command::KernelMeans => vec![
                key("seed", i(15), "random stream"),
                key("tuples", i(100), "random (v, c, index) tuples"),
                key("speeds", l(&[1.0, 2.0, 10.0, 100.0]), "speeds of light"),
                key("max_momentum", f(10.0), "largest |v| / c"),
                key("polar", i(256), "polar nodes of the sphere rule"),
                key("azimuth", i(16), "azimuthal nodes of the sphere rule"),
                key("tol", f(1e-8), "spherical mean tolerance"),
            ],
            Command::VectorfieldTable => vec![
                key("speeds", l(&[1.0, 2.0, 10.0, 1000.0]), "speeds of light"),
                key("tol", f(1e-10), "commutator and transport tolerance"),
                key("newton_c", f(1e6), "speed of light of the Newtonian boost limit"),
                key("newton_tol", f(1e-5), "Newtonian boost tolerance"),
            ],
            Command::InequalityScan => vec![
                key("case", Text("all".into()), "case id or all"),
                key("n", i(10_000), "samples of the first half"),
                key("seed", i(16), "random stream"),
                key("stability_tol", f(0.05), "relative change under doubling"),
                key("witness_draws", i(1_000_000), "draws of the raw sub-additivity search"),
                key("change_of_variables_tol", f(1e-6), "relative tolerance of the Jacobian identity"),
            ],
            Command::Simulate => vec![
                key("seed", i(17), "random stream"),
                key("n_particles", i(20_000), "particles per mixture component"),
                key("components", i(2), "mixture components, 1 or 2"),
                key("dt", f(0.01), "time step"),
                key("t_end", f(2.0), "final time"),
                key("c", f(1.0), "speed of light"),
                key("gamma", f(0.0), "collision exponent"),
                key("collisions", Bool(true), "Monte Carlo collisions"),
                key("cell", f(4.0), "collision cell edge"),
                key("density", f(1.0), "number density scale of the weights"),
                key("field_mode", Text("none".into()), "none, uniform, decaying or glassey-strauss"),
                key("field_strength", f(0.1), "field scale of the prescribed modes"),
                key("gs_stride", i(64), "source stride of the self-consistent mode"),
                key("gs_softening", f(0.5), "tip softening of the self-consistent mode"),
                key("force_sign", Text("plus".into()), "plus or minus"),
                key("record_every", i(20), "steps between rows"),
                key("bandwidth", f(0.3), "kernel width of the density probe"),
                key("conservation_tol", f(1e-10), "relative drift of momentum and energy"),
            ],
            Command::DecayFit => vec![
                key("seed", i(2024), "random stream"),
                key("n_particles", i(100_000), "particles"),
                key("c", f(1.0), "speed of light"),
                key("t_start", f(10.0), "window start"),
                key("t_end", f(100.0), "window end"),
                key("samples", i(12), "sample times"),
                key("bandwidth", f(0.1), "kernel width per unit 1 + t"),
                key("field_drift", f(0.5), "momentum drift of the field ensemble"),
                key("softening", f(0.5), "tip softening of the particle fields"),
                key("exponent_min", f(-3.2), "lowest admissible density exponent"),
                key("exponent_max", f(-2.8), "highest admissible density exponent"),
                key("envelope_ratio", f(10.0), "largest max / min of |E(t,0)| (1 + t)^2"),
            ],
            Command::Report => {
                let mut keys = Vec::new();
                for c in Command::SUITE {
                    for k in c.schema() {
                        keys.push(Key { name: format!("{}.{}", c.name(), k.name), ..k });
                    }
                }
                keys
            }
        }
    }
}

/// Tables and checks produced by one subcommand.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub report: Report,
    /// Extra JSON artifacts.
    pub json: Vec<(String, serde_json::Value)>,
    /// Wall time of each suite command run by `report`; manifest only.
    pub timings: Vec<(String, Duration)>,
}

impl Outcome {
    fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }
}

pub fn execute(cmd: Command, cfg: &Config) -> Result<Outcome> {
    match cmd {
        Command::KinematicsCheck => kinematics_check(cfg),
        Command::CollisionVerify => collision_verify(cfg),
        Command::ChainRule => chain_rule(cfg),
        Command::CarlemanScan => carleman_scan(cfg),
        Command::FieldsSolve => fields_solve(cfg),
        Command::KernelMeans => kernel_means(cfg),
        Command::VectorfieldTable => vectorfield_table(cfg),
        Command::InequalityScan => inequality_scan(cfg),
        Command::Simulate => simulate(cfg),
        Command::DecayFit => decay_fit(cfg),
        Command::Report => report(cfg),
    }
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Log-uniform magnitude in `[1e-2, max] c`, uniform direction.
fn momentum(rng: &mut ChaCha8Rng, c: f64, max: f64) -> Vec3 {
    let lo = 1e-2f64.ln();
    let m = (lo + rng.random::<f64>() * (max.ln() - lo)).exp() * c;
    unit(rng) * m
}

fn pick(rng: &mut ChaCha8Rng, items: &[f64]) -> f64 {
    items[rng.random_range(0..items.len())]
}

fn fmax(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn speeds(cfg: &Config, key: &str) -> Result<Vec<f64>> {
    let s = cfg.floats(key).to_vec();
    if s.is_empty() || s.iter().any(|c| !(*c >= 1.0)) {
        return Err(Error::Parameter(format!("{key} must be a non-empty list of values >= 1")));
    }
    Ok(s)
}

fn kinematics_check(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cs = speeds(cfg, "speeds")?;
    let max = cfg.float("max_momentum");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.int("seed"));
    let draws: Vec<(Vec3, Vec3, Vec3, f64)> = (0..cfg.usize("draws"))
        .map(|_| {
            let c = pick(&mut rng, &cs);
            (momentum(&mut rng, c, max), momentum(&mut rng, c, max), unit(&mut rng), c)
        })
        .collect();
    // [momentum, energy, g, s, half angle]
    let errors: Vec<[f64; 5]> = draws
        .par_iter()
        .map(|(v, u, w, c)| {
            let (vp, up) = post_collision(v, u, w, *c).expect("unit omega");
            let p = (v + u - vp - up).norm() / (v.norm() + u.norm());
            let e0 = energy(v, *c) + energy(u, *c);
            let e = (e0 - energy(&vp, *c) - energy(&up, *c)).abs() / e0;
            let g = relative_momentum(v, u, *c);
            let dg = (relative_momentum(&vp, &up, *c) - g).abs() / g;
            let s = s_invariant(v, u, *c);
            let ds = (s_invariant(&vp, &up, *c) - s).abs() / s;
            let half = match scattering_cosine(v, u, &vp, &up, *c) {
                Ok(cos) => (((1.0 - cos) / 2.0).max(0.0).sqrt() - relative_momentum(v, &vp, *c) / g).abs(),
                Err(_) => 0.0,
            };
            [p, e, dg, ds, half]
        })
        .collect();
    let tol = cfg.float("tol");
    let names = ["momentum_conservation", "energy_conservation", "g_invariance", "s_invariance", "half_angle"];
    let mut t = Table::new(&["quantity", "draws", "max_error", "tolerance"]);
    for (k, name) in names.iter().enumerate() {
        let m = fmax(errors.iter().map(|e| e[k]));
        t.push(vec![(*name).into(), draws.len().into(), m.into(), tol.into()]);
        out.report.add(Check::at_most(name, m, tol));
    }
    out.table("kinematics", t);

    // Newtonian limit against the classical elastic map
    let c = cfg.float("newton_c");
    let v = Vec3::new(1.0, 2.0, 3.0);
    let u = Vec3::new(-2.0, 0.0, 1.0);
    let mut worst: f64 = 0.0;
    let mut t = Table::new(&["omega1", "omega2", "omega3", "relative_error"]);
    for _ in 0..cfg.usize("newton_draws") {
        let w = unit(&mut rng);
        let (vp, up) = post_collision(&v, &u, &w, c)?;
        let mid = (v + u) * 0.5;
        let h = w * (0.5 * (v - u).norm());
        let err = ((vp - mid - h).norm() / (mid + h).norm()).max((up - mid + h).norm() / (mid - h).norm());
        worst = worst.max(err);
        t.push(vec![w.x.into(), w.y.into(), w.z.into(), err.into()]);
    }
    out.table("newtonian", t);
    out.report.add(Check::at_most("newtonian_limit", worst, cfg.float("newton_tol")));

    // Jacobian of v -> x - t vhat by fourth-order central differences
    let mut t = Table::new(&["c", "t", "v1", "v2", "v3", "closed_form", "finite_difference", "relative_error"]);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.usize("jacobian_samples") {
        let c = pick(&mut rng, &cs);
        let v = momentum(&mut rng, c, max);
        let time = 0.1 + 9.9 * rng.random::<f64>();
        let h = 1e-3 * (c + v.norm());
        let mut m = nalgebra::Matrix3::<f64>::zeros();
        for b in 0..3 {
            let mut e = Vec3::zeros();
            e[b] = h;
            let y = |s: f64| rel_velocity(&(v + e * s), c) * -time;
            let d = (y(-2.0) - y(2.0) + (y(1.0) - y(-1.0)) * 8.0) / (12.0 * h);
            m.set_column(b, &d);
        }
        let fd = m.determinant().abs();
        let exact = transport_jacobian(&v, time, c);
        let err = (fd - exact).abs() / exact;
        worst = worst.max(err);
        t.push(vec![c.into(), time.into(), v.x.into(), v.y.into(), v.z.into(), exact.into(), fd.into(), err.into()]);
    }
    out.table("jacobian", t);
    out.report.add(Check::at_most("transport_jacobian", worst, cfg.float("jacobian_tol")));
    Ok(out)
}

/// Isotropic two-temperature mixture used for the conservation moments.
pub fn moment_density() -> Result<GaussianMixture> {
    Ok(GaussianMixture {
        components: vec![
            Gaussian::isotropic(1.0, Vec3::zeros(), 1.0)?,
            Gaussian::isotropic(0.5, Vec3::zeros(), 0.25)?,
        ],
    })
}

fn collision_verify(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cs = speeds(cfg, "speeds")?;
    let f = moment_density()?;
    let spec = GridSpec { u_polar: cfg.usize("u_polar"), ..GridSpec::default() };
    let grid = MomentGrid::covering(&f.envelope(), cfg.usize("moment_order"), cfg.usize("moment_panels"), 8, 8);
    let mut cons = Table::new(&["gamma", "c", "mass", "momentum1", "momentum2", "momentum3", "energy", "max_relative"]);
    let mut eq = Table::new(&["gamma", "c", "probe", "v1", "v2", "v3", "gain", "loss", "relative"]);
    let mut worst_c: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    let temperature = cfg.float("temperature");
    let eq_spec = GridSpec { radial_panels: cfg.usize("radial_panels"), ..GridSpec::default() };
    for &gamma in cfg.floats("gammas") {
        for &c in &cs {
            let kernel = KernelSpec::new(gamma, AngularFactor::Constant(1.0), c)?;
            let b = collision_brackets(&f, &kernel, &spec, &grid)?;
            let r = b.relative();
            worst_c = worst_c.max(b.max_relative());
            cons.push(vec![gamma.into(), c.into(), r[0].into(), r[1].into(), r[2].into(), r[3].into(), r[4].into(), b.max_relative().into()]);

            let j = Juttner::new(1.0, temperature, c)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.int("seed"));
            let scale = 3.0 * (temperature * c).sqrt().max(temperature);
            let probes: Vec<Vec3> = (0..cfg.usize("probes"))
                .map(|_| unit(&mut rng) * (scale * rng.random::<f64>().cbrt()))
                .collect();
            let gls: Vec<_> = probes
                .iter()
                .map(|v| eval_gain_loss(&j, &j, v, &kernel, &eq_spec))
                .collect::<Result<_>>()?;
            for (k, (v, gl)) in probes.iter().zip(&gls).enumerate() {
                worst_e = worst_e.max(gl.relative());
                eq.push(vec![gamma.into(), c.into(), k.into(), v.x.into(), v.y.into(), v.z.into(), gl.gain.into(), gl.loss.into(), gl.relative().into()]);
            }
        }
    }
    out.table("conservation", cons);
    out.table("equilibrium", eq);
    out.report.add(Check::at_most("collision_conservation", worst_c, cfg.float("conservation_tol")));
    out.report.add(Check::at_most("juttner_annihilation", worst_e, cfg.float("equilibrium_tol")));
    Ok(out)
}

/// The Gaussian pair and evaluation point of the chain-rule studies.
pub fn chain_rule_pair() -> Result<(Gaussian, Gaussian, Vec3)> {
    Ok((
        Gaussian::isotropic(1.0, Vec3::new(0.3, -0.2, 0.1), 1.0)?,
        Gaussian::isotropic(0.8, Vec3::new(-0.1, 0.2, 0.3), 1.0)?,
        Vec3::new(0.7, -0.3, 0.2),
    ))
}

fn study_rows(t: &mut Table, identity: &str, s: &ConvergenceStudy) {
    for (k, (h, r)) in s.steps.iter().zip(&s.residuals).enumerate() {
        let order = if k == 0 { f64::NAN } else { s.orders[k - 1] };
        t.push(vec![identity.into(), (*h).into(), (*r).into(), order.into()]);
    }
}

fn chain_rule(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (h, f, v) = chain_rule_pair()?;
    let kernel = KernelSpec::new(cfg.float("gamma"), AngularFactor::Constant(1.0), cfg.float("c"))?;
    let spec = GridSpec::default();
    let step = default_fd_step(&v);
    let n = cfg.usize("halvings");
    let chain = chain_rule_study(&h, &f, &v, 0, &kernel, &spec, step, n, Stencil::Central3)?;
    let rot = rotation_study(&h, &f, &v, 0, 1, &kernel, &spec, step, n, Stencil::Central3)?;
    let mut t = Table::new(&["identity", "fd_step", "residual", "order"]);
    study_rows(&mut t, "chain_rule", &chain);
    study_rows(&mut t, "rotation", &rot);
    out.table("chain_rule", t);
    let (lo, hi) = (cfg.float("order_min"), cfg.float("order_max"));
    let tol = cfg.float("terminal_tol");
    for (name, s) in [("chain_rule", &chain), ("rotation", &rot)] {
        out.report.add(Check::within(&format!("{name}_order"), s.fitted_order(), lo, hi));
        out.report.add(Check::at_most(&format!("{name}_terminal"), s.terminal(), tol));
    }
    Ok(out)
}

/// Closed form of the Carleman integral at `beta = 0`, `k = 10`, `c = 1`,
/// `v = (5, 0, 0)`, `v' = (1, 0, 0)`.
pub fn carleman_closed_form() -> f64 {
    let e = 26f64.sqrt() - 2f64.sqrt();
    (1.0 + e).powi(-8) / 8.0 - e * (1.0 + e).powi(-9) / 9.0
}

fn carleman_scan(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let value = carleman_c(&Vec3::new(5.0, 0.0, 0.0), &Vec3::x(), 0.0, 10.0, 1.0, f64::INFINITY)?;
    let exact = carleman_closed_form();
    let rel = (value - exact).abs() / exact;
    out.report.add(Check::at_most("carleman_closed_form", rel, cfg.float("closed_form_tol")));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.int("seed"));
    let mut t = Table::new(&["beta", "k", "c", "samples", "max_outer", "max_inner"]);
    let mut finite = true;
    for &beta in cfg.floats("betas") {
        for &k in cfg.floats("ks") {
            for &c in &speeds(cfg, "speeds")? {
                let pairs: Vec<(Vec3, Vec3)> =
                    (0..cfg.usize("samples")).map(|_| (momentum(&mut rng, c, 10.0), momentum(&mut rng, c, 10.0))).collect();
                let ratios: Vec<_> = pairs.par_iter().map(|(v, vp)| carleman_ratio(v, vp, beta, k, c)).collect::<Result<_>>()?;
                let outer = fmax(ratios.iter().filter_map(|r| r.outer));
                let inner = fmax(ratios.iter().filter_map(|r| r.inner));
                finite &= outer.is_finite() && inner.is_finite();
                t.push(vec![beta.into(), k.into(), c.into(), pairs.len().into(), outer.into(), inner.into()]);
            }
        }
    }
    out.table("carleman", t);
    out.report.add(Check::holds("carleman_ratios_finite", 0.0, finite, "all sampled ratios finite"));
    Ok(out)
}

/// Source of the wave-residual studies.
pub fn field_source() -> Result<SeparableSource> {
    Ok(SeparableSource {
        profile: DriftingProfile { amplitude: 1.0, center: Vec3::new(0.1, 0.0, 0.0), drift: Vec3::new(0.3, 0.0, -0.1), width: 0.7 },
        momentum: Gaussian::isotropic(1.0, Vec3::new(0.2, -0.1, 0.1), 0.5)?,
    })
}

/// Data of the homogeneous wave probes.
pub fn wave_data() -> (BumpSum, BumpSum) {
    (
        BumpSum(vec![
            Bump { amplitude: 1.0, center: Vec3::zeros(), radius: 1.0 },
            Bump { amplitude: -0.5, center: Vec3::new(0.8, -0.4, 0.3), radius: 0.7 },
        ]),
        BumpSum(vec![Bump { amplitude: 0.7, center: Vec3::new(-0.5, 0.2, 0.6), radius: 0.9 }]),
    )
}

/// Probe points `(t, x, c)` of the homogeneous wave.
pub fn wave_probes(n: usize, seed: u64) -> Vec<(f64, Vec3, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let c = [1.0, 2.0][k % 2];
            let t = 0.1 + 1.4 * rng.random::<f64>() / c;
            (t, unit(&mut rng) * (1.5 * rng.random::<f64>()), c)
        })
        .collect()
}

fn fields_solve(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let src = field_source()?;
    let x = Vec3::new(0.3, 0.2, -0.1);
    let mut t = Table::new(&["field", "c", "h", "residual", "order"]);
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = f64::NEG_INFINITY;
    for &c in &speeds(cfg, "speeds")? {
        for (name, kind) in [("E1", FieldKind::Electric(0)), ("B12", FieldKind::Magnetic(0, 1))] {
            let gs = GlasseyStrauss::new(kind, &src, c, GsGrid::default())?;
            let s = gs.wave_residual_study(1.5 / c.sqrt(), &x, cfg.float("h0") / c.sqrt(), cfg.usize("halvings"))?;
            let order = s.fitted_order();
            worst_lo = worst_lo.min(order);
            worst_hi = worst_hi.max(order);
            for (k, (h, r)) in s.steps.iter().zip(&s.residuals).enumerate() {
                let o = if k == 0 { f64::NAN } else { s.orders[k - 1] };
                t.push(vec![name.into(), c.into(), (*h).into(), (*r).into(), o.into()]);
            }
        }
    }
    out.table("wave_residual", t);
    let (lo, hi) = (cfg.float("order_min"), cfg.float("order_max"));
    out.report.add(Check::within("wave_residual_order_min", worst_lo, lo, hi));
    out.report.add(Check::within("wave_residual_order_max", worst_hi, lo, hi));

    let (f0, f1) = wave_data();
    let mut t = Table::new(&["t", "x1", "x2", "x3", "c", "kirchhoff"]);
    for (time, p, c) in wave_probes(cfg.usize("probes"), cfg.int("seed")) {
        t.push(vec![time.into(), p.x.into(), p.y.into(), p.z.into(), c.into(), homogeneous_wave(&f0, &f1, time, &p, c).into()]);
    }
    out.table("kirchhoff", t);
    Ok(out)
}

fn kernel_means(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cs = speeds(cfg, "speeds")?;
    let rule = kernel_sphere_rule(cfg.usize("polar"), cfg.usize("azimuth"));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.int("seed"));
    let tuples: Vec<(Vec3, f64, usize, usize, usize)> = (0..cfg.usize("tuples"))
        .map(|_| {
            let c = pick(&mut rng, &cs);
            let v = momentum(&mut rng, c, cfg.float("max_momentum"));
            (v, c, rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0..3))
        })
        .collect();
    let vals: Vec<(f64, f64)> = tuples
        .par_iter()
        .map(|(v, c, i, j, k)| (gs_kernel_a_integral(v, *c, *i, *k, &rule), gs_kernel_b_integral(v, *c, *i, *j, *k, &rule)))
        .collect();
    let mut t = Table::new(&["c", "v1", "v2", "v3", "i", "j", "k", "mean_a", "mean_b"]);
    for ((v, c, i, j, k), (a, b)) in tuples.iter().zip(&vals) {
        t.push(vec![(*c).into(), v.x.into(), v.y.into(), v.z.into(), (*i).into(), (*j).into(), (*k).into(), (*a).into(), (*b).into()]);
    }
    out.table("kernel_means", t);
    let tol = cfg.float("tol");
    out.report.add(Check::at_most("kernel_a_mean", fmax(vals.iter().map(|p| p.0.abs())), tol));
    out.report.add(Check::at_most("kernel_b_mean", fmax(vals.iter().map(|p| p.1.abs())), tol));
    Ok(out)
}

/// Test families and evaluation point of the vector-field checks.
pub fn jet_families() -> (Vec<JetFamily>, [f64; 7]) {
    let mut form = [[0.0; 7]; 7];
    for a in 0..7 {
        form[a][a] = 0.3 + 0.05 * a as f64;
        if a > 0 {
            form[a][a - 1] = 0.05;
            form[a - 1][a] = 0.05;
        }
    }
    (
        vec![
            JetFamily::Gaussian { center: [0.1, 0.2, -0.1, 0.3, 0.0, 0.1, -0.2], form },
            JetFamily::Transported { x0: Vec3::new(0.1, 0.0, -0.2), width: 0.8, u: Vec3::new(0.3, 0.1, 0.0) },
            JetFamily::Polynomial,
            JetFamily::Oscillatory { k: [0.3, 0.7, -0.5, 0.2, 0.4, -0.6, 0.1] },
        ],
        [1.3, 0.4, -0.7, 0.9, 0.6, -0.3, 0.8],
    )
}

fn vectorfield_table(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (families, point) = jet_families();
    let mut table = Table::new(&["family", "c", "lifted", "x", "y", "residual"]);
    let mut transport = Table::new(&["family", "c", "field", "residual"]);
    let mut frames = Table::new(&["family", "c", "identity", "residual"]);
    let (mut worst_table, mut worst_transport, mut worst_frame) = (0.0f64, 0.0f64, 0.0f64);
    for f in &families {
        for &c in &speeds(cfg, "speeds")? {
            let jet = f.jet(point, c);
            for lifted in [true, false] {
                for a in Generator::ALL {
                    for b in Generator::ALL {
                        let id = |g: Generator| VectorFieldId { tag: g, lifted };
                        let r = commutator_residual(id(a), id(b), &jet, c)?;
                        worst_table = worst_table.max(r);
                        table.push(vec![f.name().into(), c.into(), lifted.into(), a.name().into(), b.name().into(), r.into()]);
                    }
                }
            }
            for g in Generator::ALL {
                let r = transport_commutation_residual(g, &jet, c)?;
                worst_transport = worst_transport.max(r);
                transport.push(vec![f.name().into(), c.into(), g.name().into(), r.into()]);
            }
            for a in 1..=3 {
                let r = null_frame_reduction(a, &jet, c)?;
                worst_frame = worst_frame.max(r);
                frames.push(vec![f.name().into(), c.into(), format!("frame{a}").into(), r.into()]);
            }
            let r = reconstruction_residual(&jet, c)?;
            worst_frame = worst_frame.max(r);
            frames.push(vec![f.name().into(), c.into(), "reconstruction".into(), r.into()]);
        }
    }
    let nc = cfg.float("newton_c");
    let newton = fmax(families.iter().flat_map(|f| {
        let jet = f.jet(point, nc);
        (0..3).map(move |i| newtonian_boost_defect(i, &jet, nc))
    }));
    out.table("commutators", table);
    out.table("transport", transport);
    out.table("frames", frames);
    let tol = cfg.float("tol");
    out.report.add(Check::at_most("commutator_table", worst_table, tol));
    out.report.add(Check::at_most("transport_commutation", worst_transport, tol));
    out.report.add(Check::at_most("frame_identities", worst_frame, tol));
    out.report.add(Check::at_most("newtonian_boost", newton, cfg.float("newton_tol")));
    Ok(out)
}

fn inequality_scan(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cases: Vec<InequalityCase> = match cfg.text("case") {
        "all" => InequalityCase::ALL.to_vec(),
        id => vec![InequalityCase::parse(id)?],
    };
    let n = cfg.usize("n");
    let seed = cfg.int("seed");
    let tol = cfg.float("stability_tol");
    let mut t = Table::new(&["case", "note", "samples", "sup_ratio", "sup_half", "change", "stable", "quadrature_change", "argmax"]);
    let mut reports = Vec::new();
    for case in cases {
        let r = verify_inequality(case, n, seed)?;
        let arg: Vec<String> = r.argmax.iter().map(|(k, v)| format!("{k}={}", rvmb::report::sci(*v))).collect();
        t.push(vec![
            r.case_id.into(),
            r.note.into(),
            r.n_samples.into(),
            r.sup_ratio.into(),
            r.sup_half.into(),
            r.change.into(),
            (r.change <= tol).into(),
            r.quadrature_change.into(),
            arg.join(";").into(),
        ]);
        out.report.add(Check::holds(
            &format!("inequality_{}", r.case_id),
            r.change,
            r.sup_ratio.is_finite() && r.change <= tol,
            &format!("finite sup, change <= {}", rvmb::report::sci(tol)),
        ));
        reports.push(r);
    }
    out.table("inequalities", t);
    out.json.push(("inequalities".into(), serde_json::to_value(&reports).expect("serialisable")));
    if cfg.text("case") == "all" {
        let (lhs, rhs) = change_of_variables_sides(2.0, &Vec3::new(0.5, 0.0, -0.3), &Vec3::zeros(), &Vec3::new(0.2, 0.0, 0.0), 1.0, 24)?;
        let rel = (lhs - rhs).abs() / lhs.abs();
        out.report.add(Check::at_most("change_of_variables", rel, cfg.float("change_of_variables_tol")));
        let mut w = Table::new(&["draws", "ratio", "v1", "v2", "v3", "u1", "u2", "u3", "t", "x1", "x2", "x3", "c"]);
        if let Some(x) = raw_subadditivity_witness(cfg.usize("witness_draws"), seed) {
            w.push(vec![
                x.draws.into(), x.ratio.into(), x.v[0].into(), x.v[1].into(), x.v[2].into(), x.u[0].into(), x.u[1].into(),
                x.u[2].into(), x.t.into(), x.x[0].into(), x.x[1].into(), x.x[2].into(), x.c.into(),
            ]);
        }
        out.table("raw_witness", w);
    }
    Ok(out)
}

fn simulate(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let c = cfg.float("c");
    let hot = PhaseGaussian { temperature: 2.0, x_width: 0.3, x_center: Vec3::new(2.0, 2.0, 2.0), ..PhaseGaussian::standard() };
    let cold = PhaseGaussian { temperature: 0.5, ..hot };
    let comps: Vec<PhaseGaussian> = match cfg.usize("components") {
        1 => vec![hot],
        2 => vec![hot, cold],
        k => return Err(Error::Parameter(format!("components must be 1 or 2, got {k}"))),
    };
    let mut state = init_mixture(&comps, cfg.usize("n_particles"), c, cfg.int("seed"))?;
    let cell = cfg.float("cell");
    let w = cfg.float("density") * cell.powi(3) / state.len().max(1) as f64;
    state.weights.iter_mut().for_each(|x| *x = w);
    let strength = cfg.float("field_strength");
    let uniform = UniformField { e: Vec3::new(strength, 0.0, 0.0), b: Vec3::new(0.0, 0.0, strength) };
    let decaying = DecayingField { strength };
    let mode = match cfg.text("field_mode") {
        "none" => FieldMode::None,
        "uniform" => FieldMode::Prescribed(&uniform),
        "decaying" => FieldMode::Prescribed(&decaying),
        "glassey-strauss" => FieldMode::GlasseyStrauss { stride: cfg.usize("gs_stride"), eps: cfg.float("gs_softening") },
        m => return Err(Error::Parameter(format!("unknown field_mode {m:?}"))),
    };
    let sign = match cfg.text("force_sign") {
        "plus" => ForceSign::Plus,
        "minus" => ForceSign::Minus,
        s => return Err(Error::Parameter(format!("force_sign must be plus or minus, got {s:?}"))),
    };
    let model = CollisionModel { gamma: cfg.float("gamma"), sigma0: AngularFactor::Constant(1.0), cell };
    let dt = cfg.float("dt");
    let steps = (cfg.float("t_end") / dt).round() as u64;
    let every = cfg.int("record_every").max(1);
    let (m0, p0, e0) = (state.mass(), state.momentum(), state.energy());
    let mut t = Table::new(&["t", "mass", "momentum1", "momentum2", "momentum3", "energy", "temperature0", "temperature1", "density_probe", "accepted"]);
    let mut accepted = 0usize;
    let probe = [comps[0].x_center];
    let record = |state: &rvmb::simulator::ParticleEnsemble, accepted: usize, t: &mut Table| -> Result<()> {
        let p = state.momentum();
        let d = density_moment(state, &probe, cfg.float("bandwidth"))?.density[0];
        t.push(vec![
            state.time.into(), state.mass().into(), p.x.into(), p.y.into(), p.z.into(), state.energy().into(),
            state.temperature(0).into(), state.temperature(1).into(), d.into(), accepted.into(),
        ]);
        Ok(())
    };
    record(&state, 0, &mut t)?;
    for k in 0..steps {
        step(&mut state, dt, mode, sign)?;
        if cfg.bool("collisions") {
            accepted += collide(&mut state, &model, dt, cfg.int("seed"), k)?.accepted;
        }
        if (k + 1) % every == 0 {
            record(&state, accepted, &mut t)?;
        }
    }
    out.table("series", t);
    out.report.add(Check::at_most("mass_drift", (state.mass() - m0).abs() / m0, 1e-12));
    if let FieldMode::None = mode {
        let tol = cfg.float("conservation_tol");
        let scale = state.momenta.iter().zip(&state.weights).map(|(v, w)| w * v.norm()).sum::<f64>();
        out.report.add(Check::at_most("momentum_drift", (state.momentum() - p0).norm() / scale, tol));
        out.report.add(Check::at_most("energy_drift", (state.energy() - e0).abs() / e0, tol));
    }
    Ok(out)
}

fn decay_fit(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let dc = DecayConfig {
        n_particles: cfg.usize("n_particles"),
        c: cfg.float("c"),
        seed: cfg.int("seed"),
        t_start: cfg.float("t_start"),
        t_end: cfg.float("t_end"),
        samples: cfg.usize("samples"),
        bandwidth: cfg.float("bandwidth"),
        field_drift: cfg.float("field_drift"),
        softening: cfg.float("softening"),
    };
    let run = decay_experiment(&dc)?;
    let mut t = Table::new(&["t", "mass", "momentum1", "momentum2", "momentum3", "energy", "sup_density", "field_probe", "field_envelope"]);
    for r in &run.rows {
        t.push(vec![
            r.t.into(), r.mass.into(), r.momentum[0].into(), r.momentum[1].into(), r.momentum[2].into(), r.energy.into(),
            r.sup_density.into(), r.field_probe.into(), r.field_envelope.into(),
        ]);
    }
    out.table("decay", t);
    let mut f = Table::new(&["quantity", "window_start", "window_end", "exponent", "prefactor", "r_squared", "points"]);
    for fit in [&run.density_fit, &run.field_fit] {
        f.push(vec![
            fit.quantity.clone().into(), fit.window.0.into(), fit.window.1.into(), fit.exponent.into(), fit.prefactor.into(),
            fit.r_squared.into(), fit.points.into(),
        ]);
    }
    out.table("fit", f);
    out.json.push(("fit".into(), serde_json::to_value(&run.density_fit).expect("serialisable")));
    out.report.add(Check::within("density_decay_exponent", run.density_fit.exponent, cfg.float("exponent_min"), cfg.float("exponent_max")));
    let env: Vec<f64> = run.rows.iter().map(|r| r.field_envelope).collect();
    let lo = env.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fmax(env.iter().copied());
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    out.report.add(Check::at_most("field_envelope_ratio", ratio, cfg.float("envelope_ratio")));
    Ok(out)
}

/// Every suite command with its section of the report config.
fn report(cfg: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    for cmd in Command::SUITE {
        let start = Instant::now();
        let sub = execute(cmd, &cfg.section(cmd.name()))?;
        out.timings.push((cmd.name().to_string(), start.elapsed()));
        for (name, t) in sub.tables {
            out.tables.push((format!("{}/{}", cmd.name(), name), t));
        }
        for (name, j) in sub.json {
            out.json.push((format!("{}/{}", cmd.name(), name), j));
        }
        for mut c in sub.report.checks {
            c.name = format!("{}/{}", cmd.name(), c.name);
            out.report.add(c);
        }
    }
    Ok(out)
}
