//! Particle realisation of the kinetic system near vacuum.
//!
//! Particles carry a position, a momentum and a weight. Between collisions
//! they follow the characteristics `dx/dt = vhat`, `dv/dt = +-(E + vhat x B / c)`;
//! collisions are a Monte Carlo pair process inside spatial cells.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::collision::AngularFactor;
use crate::fields::{free_particle_fields, RetardedParticle};
use crate::kinematics::{energy, rel_velocity, scattering_cosine_with, CollisionPair};
use crate::{Error, Result, Vec3};

/// `A exp(-|x - x0|^2 / (2 sx^2)) exp(-|v - v0|^2 / (2 T))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGaussian {
    pub amplitude: f64,
    pub x_center: Vec3,
    pub x_width: f64,
    pub v_center: Vec3,
    pub temperature: f64,
}

impl PhaseGaussian {
    pub fn standard() -> Self {
        Self { amplitude: 1.0, x_center: Vec3::zeros(), x_width: 1.0, v_center: Vec3::zeros(), temperature: 1.0 }
    }

    /// `int int f dx dv`.
    pub fn mass(&self) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        self.amplitude * (tau * self.x_width * self.x_width).powf(1.5) * (tau * self.temperature).powf(1.5)
    }

    /// `int f(x, v) dv` at time zero.
    pub fn density(&self, x: &Vec3) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        let q = (x - self.x_center).norm_squared() / (self.x_width * self.x_width);
        self.amplitude * (tau * self.temperature).powf(1.5) * (-0.5 * q).exp()
    }
}

/// Weighted particles at a common time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleEnsemble {
    pub positions: Vec<Vec3>,
    pub momenta: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// Label of the mixture component a particle was drawn from.
    pub tags: Vec<u32>,
    pub c: f64,
    pub time: f64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn momentum(&self) -> Vec3 {
        self.momenta.iter().zip(&self.weights).fold(Vec3::zeros(), |acc, (v, w)| acc + v * *w)
    }

    /// `sum w v0`.
    pub fn energy(&self) -> f64 {
        self.momenta.iter().zip(&self.weights).map(|(v, w)| w * energy(v, self.c)).sum()
    }

    /// Mean of `|v - <v>|^2 / 3` over particles carrying `tag`.
    pub fn temperature(&self, tag: u32) -> f64 {
        let mut m = 0.0;
        let mut p = Vec3::zeros();
        let mut q = 0.0;
        for ((v, w), t) in self.momenta.iter().zip(&self.weights).zip(&self.tags) {
            if *t == tag {
                m += w;
                p += v * *w;
                q += w * v.norm_squared();
            }
        }
        if m == 0.0 {
            return 0.0;
        }
        (q / m - (p / m).norm_squared()) / 3.0
    }

    /// Particles as field sources at the ensemble time.
    pub fn sources(&self) -> Vec<RetardedParticle> {
        (0..self.len())
            .map(|i| RetardedParticle {
                position: self.positions[i],
                momentum: self.momenta[i],
                weight: self.weights[i],
                time: self.time,
            })
            .collect()
    }

    /// Append another ensemble with the same speed of light.
    pub fn extend(&mut self, other: ParticleEnsemble) {
        self.positions.extend(other.positions);
        self.momenta.extend(other.momenta);
        self.weights.extend(other.weights);
        self.tags.extend(other.tags);
    }
}

/// Equal-weight samples of `f0` with total weight `int f0`.
pub fn init_from_distribution(f0: &PhaseGaussian, n: usize, c: f64, seed: u64) -> Result<ParticleEnsemble> {
    init_tagged(f0, n, c, seed, 0)
}

fn init_tagged(f0: &PhaseGaussian, n: usize, c: f64, seed: u64, tag: u32) -> Result<ParticleEnsemble> {
    if !(f0.amplitude >= 0.0 && f0.x_width > 0.0 && f0.temperature > 0.0) {
        return Err(Error::Sampler(format!(
            "density is not a normalisable Gaussian: amplitude {}, width {}, temperature {}",
            f0.amplitude, f0.x_width, f0.temperature
        )));
    }
    if !(c >= 1.0) {
        return Err(Error::Parameter(format!("speed of light must be >= 1, got {c}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal3 = || Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
    let sv = f0.temperature.sqrt();
    let mut positions = Vec::with_capacity(n);
    let mut momenta = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push(f0.x_center + normal3() * f0.x_width);
        momenta.push(f0.v_center + normal3() * sv);
    }
    let w = if n == 0 { 0.0 } else { f0.mass() / n as f64 };
    Ok(ParticleEnsemble { positions, momenta, weights: vec![w; n], tags: vec![tag; n], c, time: 0.0 })
}

/// Mixture of Gaussians, `n` particles each; component `k` carries tag `k`.
pub fn init_mixture(components: &[PhaseGaussian], n: usize, c: f64, seed: u64) -> Result<ParticleEnsemble> {
    let mut out = ParticleEnsemble { c, ..Default::default() };
    for (k, f) in components.iter().enumerate() {
        out.extend(init_tagged(f, n, c, seed.wrapping_add(k as u64), k as u32)?);
    }
    Ok(out)
}

/// Externally given `E(t, x)` and `B(t, x)`.
pub trait PrescribedField: Sync {
    fn fields(&self, t: f64, x: &Vec3) -> (Vec3, Vec3);
}

/// Constant fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub e: Vec3,
    pub b: Vec3,
}

impl PrescribedField for UniformField {
    fn fields(&self, _t: f64, _x: &Vec3) -> (Vec3, Vec3) {
        (self.e, self.b)
    }
}

/// Radial fields `E = eps x / (1 + t + |x|)^3`, `B = 0`; `|E|` decays like
/// `(1 + t + |x|)^(-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayingField {
    pub strength: f64,
}

impl PrescribedField for DecayingField {
    fn fields(&self, t: f64, x: &Vec3) -> (Vec3, Vec3) {
        let d = 1.0 + t + x.norm();
        (x * (self.strength / (d * d * d)), Vec3::zeros())
    }
}

/// Sign of the force term in the characteristic equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ForceSign {
    /// `dv/dt = +(E + vhat x B / c)`
    #[default]
    Plus,
    /// `dv/dt = -(E + vhat x B / c)`
    Minus,
}

impl ForceSign {
    fn factor(&self) -> f64 {
        match self {
            ForceSign::Plus => 1.0,
            ForceSign::Minus => -1.0,
        }
    }
}

/// Fields acting on the particles during a step.
#[derive(Clone, Copy)]
pub enum FieldMode<'a> {
    None,
    Prescribed(&'a dyn PrescribedField),
    /// Inverse-square part of the field of the ensemble itself, with every
    /// `stride`-th particle as a source (weight scaled by `stride`) and cone
    /// tip softening `eps`. Sources are continued along straight lines to
    /// their retarded times, never before `t = 0`.
    GlasseyStrauss { stride: usize, eps: f64 },
}

impl std::fmt::Debug for FieldMode<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldMode::None => write!(f, "None"),
            FieldMode::Prescribed(_) => write!(f, "Prescribed"),
            FieldMode::GlasseyStrauss { stride, eps } => write!(f, "GlasseyStrauss {{ stride: {stride}, eps: {eps} }}"),
        }
    }
}

/// Momentum after time `dt` under constant `E` and `B`: half electric kick,
/// exact magnetic rotation at the half-kicked energy, half electric kick.
pub fn kick(v: &Vec3, e: &Vec3, b: &Vec3, dt: f64, c: f64) -> Vec3 {
    let minus = v + e * (0.5 * dt);
    let bn = b.norm();
    let rotated = if bn == 0.0 {
        minus
    } else {
        // dv/dt = v x B / v0 is a rotation about -B at rate |B| / v0
        let n = -b / bn;
        let theta = bn * dt / energy(&minus, c);
        let (s, co) = theta.sin_cos();
        minus * co + n.cross(&minus) * s + n * (n.dot(&minus) * (1.0 - co))
    };
    rotated + e * (0.5 * dt)
}

/// Advance the ensemble by `dt`.
pub fn step(state: &mut ParticleEnsemble, dt: f64, mode: FieldMode<'_>, sign: ForceSign) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    let c = state.c;
    if let FieldMode::None = mode {
        state.positions.par_iter_mut().zip(&state.momenta).for_each(|(x, v)| {
            *x += rel_velocity(v, c) * dt;
        });
        state.time += dt;
        return Ok(());
    }
    let half = 0.5 * dt;
    state.positions.par_iter_mut().zip(&state.momenta).for_each(|(x, v)| {
        *x += rel_velocity(v, c) * half;
    });
    let t_mid = state.time + half;
    let q = sign.factor();
    match mode {
        FieldMode::Prescribed(field) => {
            state.momenta.par_iter_mut().zip(&state.positions).for_each(|(v, x)| {
                let (e, b) = field.fields(t_mid, x);
                *v = kick(v, &(e * q), &(b * q), dt, c);
            });
        }
        FieldMode::GlasseyStrauss { stride, eps } => {
            let stride = stride.max(1);
            let mut sources: Vec<RetardedParticle> = state.sources().into_iter().step_by(stride).collect();
            for s in &mut sources {
                s.weight *= stride as f64;
                s.time = t_mid;
            }
            let fields: Vec<(Vec3, Vec3)> =
                state.positions.iter().map(|x| free_particle_fields(&sources, t_mid, x, c, eps)).collect();
            state.momenta.par_iter_mut().zip(&fields).for_each(|(v, (e, b))| {
                *v = kick(v, &(e * q), &(b * q), dt, c);
            });
        }
        FieldMode::None => unreachable!(),
    }
    state.positions.par_iter_mut().zip(&state.momenta).for_each(|(x, v)| {
        *x += rel_velocity(v, c) * half;
    });
    state.time += dt;
    Ok(())
}

/// Collision kernel and cell decomposition of the Monte Carlo step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionModel {
    pub gamma: f64,
    pub sigma0: AngularFactor,
    /// Edge length of the cubic cells.
    pub cell: f64,
}

impl CollisionModel {
    fn sigma_max(&self) -> f64 {
        match self.sigma0 {
            AngularFactor::Constant(a) => a,
            AngularFactor::CosHalfSquared => 1.0,
        }
    }
}

/// Counters of one collision step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CollisionStats {
    pub cells: usize,
    pub candidates: usize,
    pub accepted: usize,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the random stream of one cell at one step.
pub fn cell_seed(seed: u64, cell: [i64; 3], step: u64) -> u64 {
    let mut h = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    for k in cell {
        h = mix(h ^ k as u64);
    }
    mix(h ^ step)
}

/// One Monte Carlo collision step.
///
/// In every cell the particles are shuffled and paired; a pair collides
/// with probability `(N - 1) w dt / V * int B domega`, evaluated with the
/// largest angular factor and corrected by rejection on `sigma0` of the
/// drawn scattering direction. Accepted pairs take their post-collision
/// momenta, so momentum and energy are conserved per event.
pub fn collide(state: &mut ParticleEnsemble, model: &CollisionModel, dt: f64, seed: u64, step: u64) -> Result<CollisionStats> {
    if dt == 0.0 || state.is_empty() {
        return Ok(CollisionStats::default());
    }
    if !(dt > 0.0 && model.cell > 0.0) {
        return Err(Error::Parameter(format!("collision step needs dt > 0 and cell > 0, got {dt}, {}", model.cell)));
    }
    if !(model.gamma > -2.0 && model.gamma <= 0.0) {
        return Err(Error::Parameter(format!("gamma must lie in (-2, 0], got {}", model.gamma)));
    }
    let w = state.weights[0];
    if state.weights.iter().any(|x| *x != w) {
        return Err(Error::Parameter("collisions need equal particle weights".into()));
    }
    let c = state.c;
    let mut cells: BTreeMap<[i64; 3], Vec<usize>> = BTreeMap::new();
    for (i, x) in state.positions.iter().enumerate() {
        let key = [0, 1, 2].map(|k| (x[k] / model.cell).floor() as i64);
        cells.entry(key).or_default().push(i);
    }
    let volume = model.cell.powi(3);
    let sigma_max = model.sigma_max();
    let momenta = &state.momenta;
    let results: Vec<Result<(Vec<(usize, Vec3)>, usize)>> = cells
        .par_iter()
        .map(|(key, members)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, *key, step));
            let mut idx = members.clone();
            // Fisher-Yates
            for k in (1..idx.len()).rev() {
                let j = rng.random_range(0..=k);
                idx.swap(k, j);
            }
            let scale = (idx.len().saturating_sub(1)) as f64 * w * dt / volume * 4.0 * std::f64::consts::PI * sigma_max;
            let mut updates = Vec::new();
            let mut candidates = 0;
            for pair in idx.chunks_exact(2) {
                let (i, j) = (pair[0], pair[1]);
                candidates += 1;
                let p = CollisionPair::new(momenta[i], momenta[j], c);
                let flux = c * p.sqrt_s() / (4.0 * p.v0 * p.u0) * if model.gamma == 0.0 { 1.0 } else { p.g.powf(model.gamma) };
                let prob = scale * flux;
                if !(prob <= 1.0) {
                    return Err(Error::MajorantOverflow { probability: prob });
                }
                let r: f64 = rng.random();
                let omega = unit_vector(&mut rng);
                if r >= prob || p.g == 0.0 {
                    continue;
                }
                let (vp, up) = p.outgoing(&omega);
                if !model.sigma0.is_constant() {
                    let cos = scattering_cosine_with(&p.v, &p.u, &vp, &up, c, p.g * p.g);
                    if r >= prob * model.sigma0.eval(cos) / sigma_max {
                        continue;
                    }
                }
                updates.push((i, vp));
                updates.push((j, up));
            }
            Ok((updates, candidates))
        })
        .collect();
    let mut stats = CollisionStats { cells: cells.len(), ..Default::default() };
    let mut all = Vec::new();
    for r in results {
        let (u, n) = r?;
        stats.candidates += n;
        stats.accepted += u.len() / 2;
        all.push(u);
    }
    for (i, v) in all.into_iter().flatten() {
        state.momenta[i] = v;
    }
    Ok(stats)
}

/// [`collide`] over `dt`, split into as many equal sub-steps as needed to
/// keep every acceptance probability at most one.
pub fn collide_adaptive(
    state: &mut ParticleEnsemble,
    model: &CollisionModel,
    dt: f64,
    seed: u64,
    step: u64,
) -> Result<(CollisionStats, usize)> {
    let mut parts = 1usize;
    loop {
        let mut trial = state.clone();
        let mut total = CollisionStats::default();
        let mut overflow = false;
        for k in 0..parts {
            match collide(&mut trial, model, dt / parts as f64, seed, step.wrapping_mul(1 << 20).wrapping_add(k as u64)) {
                Ok(s) => {
                    total.cells = total.cells.max(s.cells);
                    total.candidates += s.candidates;
                    total.accepted += s.accepted;
                }
                Err(Error::MajorantOverflow { probability }) => {
                    parts = (parts as f64 * probability.max(2.0)).ceil() as usize;
                    overflow = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !overflow {
            *state = trial;
            return Ok((total, parts));
        }
        if parts > 1 << 20 {
            return Err(Error::Budget { needed: parts, budget: 1 << 20 });
        }
    }
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Kernel density estimate of `int f dv` and `int vhat f dv`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityField {
    pub density: Vec<f64>,
    pub current: Vec<Vec3>,
}

/// Gaussian kernel estimate with standard deviation `bandwidth` at each
/// probe point.
pub fn density_moment(state: &ParticleEnsemble, probes: &[Vec3], bandwidth: f64) -> Result<DensityField> {
    if !(bandwidth > 0.0) {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let norm = (2.0 * std::f64::consts::PI * bandwidth * bandwidth).powf(-1.5);
    let inv = 0.5 / (bandwidth * bandwidth);
    let cut = 64.0;
    let c = state.c;
    let (density, current) = probes
        .par_iter()
        .map(|p| {
            let mut rho = 0.0;
            let mut j = Vec3::zeros();
            for ((x, v), w) in state.positions.iter().zip(&state.momenta).zip(&state.weights) {
                let q = (x - p).norm_squared() * inv;
                if q < cut {
                    let k = w * (-q).exp();
                    rho += k;
                    j += rel_velocity(v, c) * k;
                }
            }
            (rho * norm, j * norm)
        })
        .unzip();
    Ok(DensityField { density, current })
}

/// Power-law fit `value ~ (1 + t)^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub quantity: String,
    pub window: (f64, f64),
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares slope of `ln value` against `ln(1 + t)` over the points
/// with `t` inside `window`.
pub fn measure_decay(quantity: &str, series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    if pts.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 points in the window, got {}", pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!("non-positive value {v} at t = {t}")));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all sample times coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit {
        quantity: quantity.to_string(),
        window,
        exponent: slope,
        prefactor: (my - slope * mx).exp(),
        r_squared,
        points: pts.len(),
    })
}

/// `n` sample times spaced geometrically on `[a, b]`.
pub fn log_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

/// Setup of the free-transport decay experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayConfig {
    pub n_particles: usize,
    pub c: f64,
    pub seed: u64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    /// Kernel width at time `t` is `bandwidth (1 + t)`.
    pub bandwidth: f64,
    /// Momentum drift of the ensemble probed for the field envelope.
    pub field_drift: f64,
    pub softening: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            n_particles: 100_000,
            c: 1.0,
            seed: 2024,
            t_start: 10.0,
            t_end: 100.0,
            samples: 12,
            bandwidth: 0.1,
            field_drift: 0.5,
            softening: 0.5,
        }
    }
}

/// One sample of the decay experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub sup_density: f64,
    pub field_probe: f64,
    pub field_envelope: f64,
}

/// Result of [`decay_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRun {
    pub rows: Vec<DecayRow>,
    pub density_fit: DecayFit,
    pub field_fit: DecayFit,
}

/// Free transport of a unit Gaussian: sup of the density near the origin
/// and `|E(t, 0)|` of a drifting copy, at geometrically spaced times.
pub fn decay_experiment(cfg: &DecayConfig) -> Result<DecayRun> {
    let f0 = PhaseGaussian::standard();
    let mut state = init_from_distribution(&f0, cfg.n_particles, cfg.c, cfg.seed)?;
    let drifting = PhaseGaussian { v_center: Vec3::new(cfg.field_drift, 0.0, 0.0), ..f0 };
    let field_state = init_from_distribution(&drifting, cfg.n_particles, cfg.c, cfg.seed.wrapping_add(1))?;
    let sources = field_state.sources();
    let mut rows = Vec::new();
    for t in log_times(cfg.t_start, cfg.t_end, cfg.samples) {
        let dt = t - state.time;
        if dt > 0.0 {
            step(&mut state, dt, FieldMode::None, ForceSign::Plus)?;
        }
        let h = cfg.bandwidth * (1.0 + t);
        let d = 0.25 * h;
        let mut probes = vec![Vec3::zeros()];
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = d;
            probes.push(e);
            probes.push(-e);
        }
        let field = density_moment(&state, &probes, h)?;
        let sup = field.density.iter().copied().fold(0.0, f64::max);
        let (e, _) = free_particle_fields(&sources, t, &Vec3::zeros(), cfg.c, cfg.softening);
        let p = state.momentum();
        rows.push(DecayRow {
            t,
            mass: state.mass(),
            momentum: [p.x, p.y, p.z],
            energy: state.energy(),
            sup_density: sup,
            field_probe: e.norm(),
            field_envelope: e.norm() * (1.0 + t).powi(2),
        });
    }
    let window = (cfg.t_start, cfg.t_end);
    let density_fit = measure_decay("sup_density", &rows.iter().map(|r| (r.t, r.sup_density)).collect::<Vec<_>>(), window)?;
    let field_fit = measure_decay("field_probe", &rows.iter().map(|r| (r.t, r.field_probe)).collect::<Vec<_>>(), window)?;
    Ok(DecayRun { rows, density_fit, field_fit })
}
