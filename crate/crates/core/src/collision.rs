//! Quadrature evaluation of the relativistic collision operator
//!
//! ```text
//! Q(h, f)(v) = int int B(v, u) (h(u') f(v') - h(u) f(v)) domega du
//! B = c g sqrt(s) / (4 v0 u0) * g^(gamma - 1) * sigma0(theta)
//! ```
//!
//! The `u` integral is taken on spherical shells `u = v + r omega_u`. The
//! `r^2` measure and the kernel combine to `r^(gamma + 2)` near the shell
//! centre; the radial Gauss-Jacobi rule carries `r^(gamma + 1)` and the
//! remaining factor `r (g / r)^gamma` is smooth.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::distribution::{Differentiable, EnergyDerivative, Envelope, MomentumDensity, RotationDerivative};
use crate::kinematics::{energy, scattering_cosine_with, CollisionPair};
use crate::quadrature::{composite_legendre, gauss_legendre, RadialRule, Rule1d, SphereRule};
use crate::{Error, Result, Vec3};

/// Angular part `sigma0(theta)` of the cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularFactor {
    /// `sigma0 = value` with `0 <= value <= 1`.
    Constant(f64),
    /// `sigma0 = cos^2(theta / 2) = (1 + cos theta) / 2`.
    CosHalfSquared,
}

impl AngularFactor {
    #[inline]
    pub fn eval(&self, cos_theta: f64) -> f64 {
        match *self {
            AngularFactor::Constant(a) => a,
            AngularFactor::CosHalfSquared => 0.5 * (1.0 + cos_theta),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AngularFactor::Constant(_))
    }

    /// `int_{S^2} sigma0 domega`.
    pub fn sphere_integral(&self) -> f64 {
        match *self {
            AngularFactor::Constant(a) => 4.0 * PI * a,
            AngularFactor::CosHalfSquared => 2.0 * PI,
        }
    }

    /// Highest azimuthal Fourier mode of `sigma0` about any axis.
    fn azimuthal_degree(&self) -> usize {
        match self {
            AngularFactor::Constant(_) => 0,
            AngularFactor::CosHalfSquared => 1,
        }
    }

    pub fn name(&self) -> String {
        match self {
            AngularFactor::Constant(a) => format!("constant({a})"),
            AngularFactor::CosHalfSquared => "cos2half".into(),
        }
    }
}

/// Collision exponent, angular factor and speed of light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub gamma: f64,
    pub sigma0: AngularFactor,
    pub c: f64,
}

impl KernelSpec {
    pub fn new(gamma: f64, sigma0: AngularFactor, c: f64) -> Result<Self> {
        if !(gamma > -2.0 && gamma <= 0.0) {
            return Err(Error::Parameter(format!("gamma must lie in (-2, 0], got {gamma}")));
        }
        if !(c >= 1.0) {
            return Err(Error::Parameter(format!("speed of light must be >= 1, got {c}")));
        }
        if let AngularFactor::Constant(a) = sigma0 {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Parameter(format!("sigma0 must lie in [0, 1], got {a}")));
            }
        }
        Ok(Self { gamma, sigma0, c })
    }

    /// `B / sigma0 = c sqrt(s) g^gamma / (4 v0 u0)`.
    #[inline]
    pub fn flux(&self, pair: &CollisionPair) -> f64 {
        let base = self.c * pair.sqrt_s() / (4.0 * pair.v0 * pair.u0);
        if self.gamma == 0.0 {
            base
        } else {
            base * pair.g.powf(self.gamma)
        }
    }

    /// `r^(1 - gamma) B / sigma0`: the smooth radial factor left once the
    /// Jacobi weight `r^(gamma + 1)` is split off.
    #[inline]
    fn shell_flux(&self, pair: &CollisionPair, r: f64) -> f64 {
        let base = self.c * pair.sqrt_s() / (4.0 * pair.v0 * pair.u0);
        if self.gamma == 0.0 {
            r * base
        } else {
            r * (pair.g / r).powf(self.gamma) * base
        }
    }
}

/// Node counts of the collision quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub radial_order: usize,
    /// Radial panels per envelope radius of the narrower density.
    pub radial_panels: usize,
    pub u_polar: usize,
    pub u_azimuth: usize,
    pub omega_polar: usize,
    pub omega_azimuth: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radial_order: 16,
            radial_panels: 4,
            u_polar: 24,
            u_azimuth: 12,
            omega_polar: 16,
            omega_azimuth: 12,
        }
    }
}

impl GridSpec {
    /// Multiply every node count by `factor`.
    pub fn scaled(&self, factor: usize) -> Self {
        Self {
            radial_order: self.radial_order * factor,
            radial_panels: self.radial_panels,
            u_polar: self.u_polar * factor,
            u_azimuth: self.u_azimuth * factor,
            omega_polar: self.omega_polar * factor,
            omega_azimuth: self.omega_azimuth * factor,
        }
    }

    pub fn label(&self) -> String {
        format!(
            "r{}x{}_u{}x{}_w{}x{}",
            self.radial_order,
            self.radial_panels,
            self.u_polar,
            self.u_azimuth,
            self.omega_polar,
            self.omega_azimuth
        )
    }
}

/// Rules for one evaluation point: radial shells for the loss and gain
/// parts, and sphere rules for `omega_u` and `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub loss_radial: RadialRule,
    pub gain_radial: RadialRule,
    pub sphere_u: SphereRule,
    pub sphere_u_axial: SphereRule,
    pub sphere_omega: SphereRule,
    pub sphere_omega_axial: SphereRule,
}

impl QuadratureGrid {
    /// Truncation radii from the envelopes of `h` and `f` seen from `v`.
    pub fn truncation(h: &Envelope, f: &Envelope, v: &Vec3) -> (f64, f64) {
        let dh = (h.center - v).norm() + h.radius;
        let df = (f.center - v).norm() + f.radius;
        (dh, dh + df)
    }

    pub fn for_point(spec: &GridSpec, kernel: &KernelSpec, h: &Envelope, f: &Envelope, v: &Vec3) -> Result<Self> {
        let (loss, gain) = Self::truncation(h, f, v);
        Self::with_truncation(spec, kernel, loss, gain, h.radius.min(f.radius))
    }

    /// Rules on `(0, u_loss]` and `(0, u_gain]` with radial panels no longer
    /// than `scale / spec.radial_panels`.
    pub fn with_truncation(spec: &GridSpec, kernel: &KernelSpec, u_loss: f64, u_gain: f64, scale: f64) -> Result<Self> {
        let p = kernel.gamma + 1.0;
        let omega_axial = kernel.sigma0.azimuthal_degree() + 1;
        let panels = |u: f64| ((spec.radial_panels as f64 * u / scale).ceil() as usize).max(1);
        Ok(Self {
            loss_radial: RadialRule::composite(spec.radial_order, panels(u_loss), p, u_loss)?,
            gain_radial: RadialRule::composite(spec.radial_order, panels(u_gain), p, u_gain)?,
            sphere_u: SphereRule::product(spec.u_polar, spec.u_azimuth),
            sphere_u_axial: SphereRule::product(spec.u_polar, 1),
            sphere_omega: SphereRule::product(spec.omega_polar, spec.omega_azimuth),
            sphere_omega_axial: SphereRule::product(spec.omega_polar, omega_axial),
        })
    }

    pub fn node_count(&self) -> usize {
        self.gain_radial.rule.len() * self.sphere_u.len() * self.sphere_omega.len()
    }
}

fn shell_axis(v: &Vec3) -> Vec3 {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Vec3::z()
    }
}

/// Loss term `Q^-(h, f)(v)` on a prepared grid.
pub fn eval_loss_on(
    h: &dyn MomentumDensity,
    f: &dyn MomentumDensity,
    v: &Vec3,
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
) -> f64 {
    if h.is_zero() || f.is_zero() {
        return 0.0;
    }
    let fv = f.value(v);
    if fv == 0.0 {
        return 0.0;
    }
    let sphere = if h.is_isotropic() { &grid.sphere_u_axial } else { &grid.sphere_u };
    let axis = shell_axis(&(h.envelope().center - v));
    let c = kernel.c;
    let mut total = 0.0;
    for (&r, &wr) in grid.loss_radial.rule.nodes.iter().zip(&grid.loss_radial.rule.weights) {
        let mut shell = 0.0;
        sphere.for_each_oriented(&axis, |wu, ou| {
            let u = v + ou * r;
            let pair = CollisionPair::new(*v, u, c);
            shell += wu * kernel.shell_flux(&pair, r) * h.value(&u);
        });
        total += wr * shell;
    }
    fv * kernel.sigma0.sphere_integral() * total
}

/// Gain term `Q^+(h, f)(v)` on a prepared grid.
///
/// The `u` shells are oriented towards `a_h + a_f - 2 v`, where `a_h`,
/// `a_f` are the envelope centres.
pub fn eval_gain_on(
    h: &dyn MomentumDensity,
    f: &dyn MomentumDensity,
    v: &Vec3,
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
) -> f64 {
    gain_on(h, f, v, kernel, grid, false)
}

/// Gain term evaluated with the nodes `omega -> -omega` and the roles of
/// `v'` and `u'` exchanged; equal to [`eval_gain_on`] up to rounding.
pub fn eval_gain_reflected_on(
    h: &dyn MomentumDensity,
    f: &dyn MomentumDensity,
    v: &Vec3,
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
) -> f64 {
    gain_on(h, f, v, kernel, grid, true)
}

fn gain_on(
    h: &dyn MomentumDensity,
    f: &dyn MomentumDensity,
    v: &Vec3,
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
    reflect: bool,
) -> f64 {
    if h.is_zero() || f.is_zero() {
        return 0.0;
    }
    let isotropic = h.is_isotropic() && f.is_isotropic();
    let same_gaussian = match (h.isotropic_gaussian(), f.isotropic_gaussian()) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    };
    let u_sphere = if isotropic { &grid.sphere_u_axial } else { &grid.sphere_u };
    let w_sphere = if isotropic || same_gaussian { &grid.sphere_omega_axial } else { &grid.sphere_omega };
    let axis = shell_axis(&(h.envelope().center + f.envelope().center - v * 2.0));
    let c = kernel.c;
    let sigma = kernel.sigma0;
    let mut total = 0.0;
    for (&r, &wr) in grid.gain_radial.rule.nodes.iter().zip(&grid.gain_radial.rule.weights) {
        let mut shell = 0.0;
        u_sphere.for_each_oriented(&axis, |wu, ou| {
            let u = v + ou * r;
            let pair = CollisionPair::new(*v, u, c);
            if pair.g == 0.0 {
                return;
            }
            let g2 = pair.g * pair.g;
            let inner = omega_integral(&pair, w_sphere, reflect, |vp, up| {
                let s = if sigma.is_constant() {
                    sigma.eval(1.0)
                } else {
                    sigma.eval(scattering_cosine_with(v, &u, vp, up, c, g2))
                };
                s * h.value(up) * f.value(vp)
            });
            shell += wu * kernel.shell_flux(&pair, r) * inner;
        });
        total += wr * shell;
    }
    total
}

/// `int_{S^2} F(v', u') domega` with the polar axis along `v + u`.
#[inline]
fn omega_integral(
    pair: &CollisionPair,
    sphere: &SphereRule,
    reflect: bool,
    mut f: impl FnMut(&Vec3, &Vec3) -> f64,
) -> f64 {
    let total = pair.v + pair.u;
    let axis = shell_axis(&total);
    let mut s = 0.0;
    sphere.for_each_oriented(&axis, |w, o| {
        s += w * if reflect {
            let (up, vp) = pair.outgoing(&-o);
            f(&vp, &up)
        } else {
            let (vp, up) = pair.outgoing(&o);
            f(&vp, &up)
        };
    });
    s
}

/// `Q(h, f)(v)` on a prepared grid.
pub fn eval_q_on(
    h: &dyn MomentumDensity,
    f: &dyn MomentumDensity,
    v: &Vec3,
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
) -> f64 {
    eval_gain_on(h, f, v, kernel, grid) - eval_loss_on(h, f, v, kernel, grid)
}

/// Loss term `Q^-(h, f)(v)`.
pub fn eval_loss(h: &dyn MomentumDensity, f: &dyn MomentumDensity, v: &Vec3, kernel: &KernelSpec, spec: &GridSpec) -> Result<f64> {
    let grid = QuadratureGrid::for_point(spec, kernel, &h.envelope(), &f.envelope(), v)?;
    Ok(eval_loss_on(h, f, v, kernel, &grid))
}

/// Gain term `Q^+(h, f)(v)`.
pub fn eval_gain(h: &dyn MomentumDensity, f: &dyn MomentumDensity, v: &Vec3, kernel: &KernelSpec, spec: &GridSpec) -> Result<f64> {
    let grid = QuadratureGrid::for_point(spec, kernel, &h.envelope(), &f.envelope(), v)?;
    Ok(eval_gain_on(h, f, v, kernel, &grid))
}

/// `Q(h, f)(v) = Q^+ - Q^-`.
pub fn eval_q(h: &dyn MomentumDensity, f: &dyn MomentumDensity, v: &Vec3, kernel: &KernelSpec, spec: &GridSpec) -> Result<f64> {
    let grid = QuadratureGrid::for_point(spec, kernel, &h.envelope(), &f.envelope(), v)?;
    Ok(eval_q_on(h, f, v, kernel, &grid))
}

/// Gain and loss at one point, as used by the equilibrium check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLoss {
    pub gain: f64,
    pub loss: f64,
}

impl GainLoss {
    pub fn q(&self) -> f64 {
        self.gain - self.loss
    }

    /// `|Q| / max(gain, loss)`, or 0 when both vanish.
    pub fn relative(&self) -> f64 {
        let m = self.gain.abs().max(self.loss.abs());
        if m == 0.0 {
            0.0
        } else {
            self.q().abs() / m
        }
    }
}

pub fn eval_gain_loss(
    h: &dyn MomentumDensity,
    f: &dyn MomentumDensity,
    v: &Vec3,
    kernel: &KernelSpec,
    spec: &GridSpec,
) -> Result<GainLoss> {
    let grid = QuadratureGrid::for_point(spec, kernel, &h.envelope(), &f.envelope(), v)?;
    Ok(GainLoss {
        gain: eval_gain_on(h, f, v, kernel, &grid),
        loss: eval_loss_on(h, f, v, kernel, &grid),
    })
}

/// Momentum grid for the conservation moments: radial Gauss-Legendre
/// panels on `[0, radius]` times a sphere rule.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGrid {
    pub center: Vec3,
    pub radial: Rule1d,
    pub sphere: SphereRule,
}

impl MomentGrid {
    pub fn new(center: Vec3, order: usize, panels: usize, polar: usize, azimuth: usize, radius: f64) -> Self {
        Self {
            center,
            radial: composite_legendre(order, panels, 0.0, radius),
            sphere: SphereRule::product(polar, azimuth),
        }
    }

    /// Grid on the envelope ball of `f`.
    pub fn covering(f: &Envelope, order: usize, panels: usize, polar: usize, azimuth: usize) -> Self {
        Self::new(f.center, order, panels, polar, azimuth, f.radius)
    }
}

/// Moments `int Q(f, f) {1, v, v0} dv` and the matching gain scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Brackets {
    pub mass: f64,
    pub momentum: Vec3,
    pub energy: f64,
    pub gain_mass: f64,
    pub gain_momentum: f64,
    pub gain_energy: f64,
}

impl Brackets {
    /// Each moment divided by the gain moment of `|weight|`.
    pub fn relative(&self) -> [f64; 5] {
        let d = |x: f64, s: f64| if s > 0.0 { x.abs() / s } else { x.abs() };
        [
            d(self.mass, self.gain_mass),
            d(self.momentum.x, self.gain_momentum),
            d(self.momentum.y, self.gain_momentum),
            d(self.momentum.z, self.gain_momentum),
            d(self.energy, self.gain_energy),
        ]
    }

    pub fn max_relative(&self) -> f64 {
        self.relative().into_iter().fold(0.0, f64::max)
    }
}

/// Conservation moments of `Q(f, f)` on a momentum grid.
///
/// Densities symmetric about the origin or about the `e_z` axis are
/// evaluated once per radius or once per `(radius, polar)` pair.
pub fn collision_brackets(f: &dyn MomentumDensity, kernel: &KernelSpec, spec: &GridSpec, v_grid: &MomentGrid) -> Result<Brackets> {
    let zero = Brackets {
        mass: 0.0,
        momentum: Vec3::zeros(),
        energy: 0.0,
        gain_mass: 0.0,
        gain_momentum: 0.0,
        gain_energy: 0.0,
    };
    if f.is_zero() {
        return Ok(zero);
    }
    let env = f.envelope();
    let o = v_grid.center;
    let isotropic = f.is_isotropic() && o == Vec3::zeros();
    let axial = o.x == 0.0 && o.y == 0.0 && f.spherical_center().is_some_and(|a| a.x == 0.0 && a.y == 0.0);
    let polar = &v_grid.sphere.polar;
    let n_pol = if isotropic { 1 } else { polar.len() };
    let n_az = if isotropic || axial { 1 } else { v_grid.sphere.azimuth.len() };
    let mut points = Vec::new();
    for (ir, &r) in v_grid.radial.nodes.iter().enumerate() {
        for ip in 0..n_pol {
            for ia in 0..n_az {
                let v = if isotropic {
                    Vec3::new(0.0, 0.0, r)
                } else {
                    let (ct, st, _) = polar[ip];
                    let (cp, sp) = if axial { (1.0, 0.0) } else { v_grid.sphere.azimuth[ia] };
                    o + Vec3::new(st * cp, st * sp, ct) * r
                };
                points.push((ir, ip, ia, v));
            }
        }
    }
    let values: Vec<Result<GainLoss>> = points
        .par_iter()
        .map(|(_, _, _, v)| {
            let grid = QuadratureGrid::for_point(spec, kernel, &env, &env, v)?;
            Ok(GainLoss {
                gain: eval_gain_on(f, f, v, kernel, &grid),
                loss: eval_loss_on(f, f, v, kernel, &grid),
            })
        })
        .collect();
    let values: Vec<GainLoss> = values.into_iter().collect::<Result<_>>()?;
    let lookup = |ir: usize, ip: usize, ia: usize| -> GainLoss {
        let ip = if isotropic { 0 } else { ip };
        let ia = if isotropic || axial { 0 } else { ia };
        values[(ir * n_pol + ip) * n_az + ia]
    };
    let mut out = zero;
    let c = kernel.c;
    for (ir, (&r, &wr)) in v_grid.radial.nodes.iter().zip(&v_grid.radial.weights).enumerate() {
        for (ip, &(ct, st, wt)) in polar.iter().enumerate() {
            for (ia, &(cp, sp)) in v_grid.sphere.azimuth.iter().enumerate() {
                let v = o + Vec3::new(st * cp, st * sp, ct) * r;
                let w = wr * r * r * wt * v_grid.sphere.azimuth_weight;
                let gl = lookup(ir, ip, ia);
                let q = gl.q();
                let v0 = energy(&v, c);
                out.mass += w * q;
                out.momentum += v * (w * q);
                out.energy += w * q * v0;
                out.gain_mass += w * gl.gain.abs();
                out.gain_momentum += w * gl.gain.abs() * v.norm();
                out.gain_energy += w * gl.gain.abs() * v0;
            }
        }
    }
    Ok(out)
}

/// Finite-difference stencil for `d_{v_j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central3,
    Central5,
}

impl Stencil {
    fn offsets(&self) -> &'static [(f64, f64)] {
        match self {
            Stencil::Central3 => &[(1.0, 0.5), (-1.0, -0.5)],
            Stencil::Central5 => &[(2.0, -1.0 / 12.0), (1.0, 8.0 / 12.0), (-1.0, -8.0 / 12.0), (-2.0, 1.0 / 12.0)],
        }
    }
}

/// Default step `1e-3 (1 + |v|)`.
pub fn default_fd_step(v: &Vec3) -> f64 {
    1e-3 * (1.0 + v.norm())
}

fn shifted_q(
    h: &dyn MomentumDensity,
    f: &dyn MomentumDensity,
    v: &Vec3,
    axis: usize,
    steps: &[f64],
    stencil: Stencil,
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
) -> Vec<f64> {
    let pts: Vec<(usize, Vec3, f64)> = steps
        .iter()
        .enumerate()
        .flat_map(|(i, &hstep)| {
            stencil.offsets().iter().map(move |&(k, w)| {
                let mut p = *v;
                p[axis] += k * hstep;
                (i, p, w / hstep)
            })
        })
        .collect();
    let vals: Vec<f64> = pts.par_iter().map(|(_, p, _)| eval_q_on(h, f, p, kernel, grid)).collect();
    let mut out = vec![0.0; steps.len()];
    for ((i, _, w), q) in pts.iter().zip(vals) {
        out[*i] += w * q;
    }
    out
}

/// Result of a step-halving study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2(r_k / r_{k+1})` for consecutive steps.
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn from_residuals(steps: Vec<f64>, residuals: Vec<f64>) -> Self {
        let orders = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        Self { steps, residuals, orders }
    }

    /// Least-squares slope of `log r` against `log step`.
    pub fn fitted_order(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .steps
            .iter()
            .zip(&self.residuals)
            .map(|(s, r)| (s.ln(), r.max(f64::MIN_POSITIVE).ln()))
            .collect();
        slope(&pts)
    }

    pub fn terminal(&self) -> f64 {
        *self.residuals.last().unwrap_or(&0.0)
    }
}

pub(crate) fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn halving(step: f64, halvings: usize) -> Vec<f64> {
    (0..=halvings).map(|k| step / (1u64 << k) as f64).collect()
}

fn chain_rule_terms<H: Differentiable, F: Differentiable>(
    h: &H,
    f: &F,
    v: &Vec3,
    j: usize,
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
) -> f64 {
    let c = kernel.c;
    let dh = EnergyDerivative { inner: h, axis: j, c };
    let df = EnergyDerivative { inner: f, axis: j, c };
    let v0 = energy(v, c);
    let jobs: [(&dyn MomentumDensity, &dyn MomentumDensity, f64); 3] =
        [(h, &df, 1.0), (&dh, f, 1.0), (h, f, -v[j] / v0)];
    let vals: Vec<f64> = jobs.par_iter().map(|(a, b, w)| w * eval_q_on(*a, *b, v, kernel, grid)).collect();
    vals.iter().sum()
}

/// Grid fixed at `v` and reused for every shifted evaluation, so that the
/// discrete operator is a smooth function of the evaluation point.
fn frozen_grid(h: &dyn MomentumDensity, f: &dyn MomentumDensity, v: &Vec3, reach: f64, kernel: &KernelSpec, spec: &GridSpec) -> Result<QuadratureGrid> {
    let (he, fe) = (h.envelope(), f.envelope());
    let (loss, gain) = QuadratureGrid::truncation(&he, &fe, v);
    QuadratureGrid::with_truncation(spec, kernel, loss + 2.0 * reach, gain + 2.0 * reach, he.radius.min(fe.radius))
}

/// `|v0 D_j Q(h,f) - Q(h, v0 d_j f) - Q(v0 d_j h, f) + (v_j / v0) Q(h,f)|`.
pub fn chain_rule_residual<H: Differentiable, F: Differentiable>(
    h: &H,
    f: &F,
    v: &Vec3,
    j: usize,
    kernel: &KernelSpec,
    spec: &GridSpec,
    fd_step: f64,
    stencil: Stencil,
) -> Result<f64> {
    Ok(chain_rule_study(h, f, v, j, kernel, spec, fd_step, 0, stencil)?.residuals[0])
}

/// Chain-rule residuals for `fd_step / 2^k`, `k = 0..=halvings`.
pub fn chain_rule_study<H: Differentiable, F: Differentiable>(
    h: &H,
    f: &F,
    v: &Vec3,
    j: usize,
    kernel: &KernelSpec,
    spec: &GridSpec,
    fd_step: f64,
    halvings: usize,
    stencil: Stencil,
) -> Result<ConvergenceStudy> {
    check_axis(j)?;
    check_step(fd_step)?;
    let steps = halving(fd_step, halvings);
    if h.is_zero() || f.is_zero() {
        return Ok(ConvergenceStudy::from_residuals(steps.clone(), vec![0.0; steps.len()]));
    }
    let grid = frozen_grid(h, f, v, 2.0 * fd_step, kernel, spec)?;
    let rhs = chain_rule_terms(h, f, v, j, kernel, &grid);
    let v0 = energy(v, kernel.c);
    let d = shifted_q(h, f, v, j, &steps, stencil, kernel, &grid);
    let residuals = d.iter().map(|dq| (v0 * dq - rhs).abs()).collect();
    Ok(ConvergenceStudy::from_residuals(steps, residuals))
}

/// `|(v_j D_i - v_i D_j) Q(h,f) - Q(h, L f) - Q(L h, f)|` with
/// `L = v_j d_i - v_i d_j`.
pub fn rotation_residual<H: Differentiable, F: Differentiable>(
    h: &H,
    f: &F,
    v: &Vec3,
    i: usize,
    j: usize,
    kernel: &KernelSpec,
    spec: &GridSpec,
    fd_step: f64,
    stencil: Stencil,
) -> Result<f64> {
    Ok(rotation_study(h, f, v, i, j, kernel, spec, fd_step, 0, stencil)?.residuals[0])
}

/// Rotation residuals for `fd_step / 2^k`, `k = 0..=halvings`.
pub fn rotation_study<H: Differentiable, F: Differentiable>(
    h: &H,
    f: &F,
    v: &Vec3,
    i: usize,
    j: usize,
    kernel: &KernelSpec,
    spec: &GridSpec,
    fd_step: f64,
    halvings: usize,
    stencil: Stencil,
) -> Result<ConvergenceStudy> {
    check_axis(i)?;
    check_axis(j)?;
    check_step(fd_step)?;
    let steps = halving(fd_step, halvings);
    if i == j || h.is_zero() || f.is_zero() {
        return Ok(ConvergenceStudy::from_residuals(steps.clone(), vec![0.0; steps.len()]));
    }
    let grid = frozen_grid(h, f, v, 2.0 * fd_step, kernel, spec)?;
    let lh = RotationDerivative { inner: h, i, j };
    let lf = RotationDerivative { inner: f, i, j };
    let jobs: [(&dyn MomentumDensity, &dyn MomentumDensity); 2] = [(h, &lf), (&lh, f)];
    let rhs: f64 = jobs
        .par_iter()
        .map(|(a, b)| eval_q_on(*a, *b, v, kernel, &grid))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let di = shifted_q(h, f, v, i, &steps, stencil, kernel, &grid);
    let dj = shifted_q(h, f, v, j, &steps, stencil, kernel, &grid);
    let residuals = di
        .iter()
        .zip(&dj)
        .map(|(a, b)| (v[j] * a - v[i] * b - rhs).abs())
        .collect();
    Ok(ConvergenceStudy::from_residuals(steps, residuals))
}

fn check_axis(j: usize) -> Result<()> {
    if j < 3 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("axis index must be 0, 1 or 2, got {j}")))
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("finite-difference step must be positive, got {h}")))
    }
}

/// Radial Carleman integral
///
/// ```text
/// C(v, v', beta, k, c) = int_0^U |u| u0^beta 1[v0 + u0 - v0' >= c]
///                        (1 + (v0 + u0 - v0')^2 - c^2)^(-k/2) d|u|
/// ```
///
/// evaluated in the variable `u0` (`|u| d|u| = u0 du0`) by adaptive
/// Gauss-Legendre panels. `truncation` is the upper limit `U` on `|u|`.
pub fn carleman_c(v: &Vec3, vp: &Vec3, beta: f64, k: f64, c: f64, truncation: f64) -> Result<f64> {
    if !(beta >= -1.0) || !(k >= 8.0) {
        return Err(Error::Parameter(format!("Carleman integral needs beta >= -1 and k >= 8, got beta = {beta}, k = {k}")));
    }
    if !(c >= 1.0) {
        return Err(Error::Parameter(format!("speed of light must be >= 1, got {c}")));
    }
    let e = crate::kinematics::energy_difference(v, vp, c);
    let lower = c.max(c - e);
    let upper = if truncation.is_finite() { (c * c + truncation * truncation).sqrt() } else { f64::INFINITY };
    if lower >= upper {
        return Ok(0.0);
    }
    // offset s = u0 - lower, so that w - c = s + max(e, 0) without cancellation
    let shift = e.max(0.0);
    let integrand = |s: f64| {
        let wc = s + shift;
        let q = 1.0 + wc * (wc + 2.0 * c);
        (lower + s).powf(beta + 1.0) * q.powf(-0.5 * k)
    };
    let span = upper - lower;
    let base = gauss_legendre(10);
    let fine = gauss_legendre(20);
    let mut total = 0.0;
    let mut a = 0.0;
    let mut len = 0.25 / c;
    let mut quiet = 0;
    for _ in 0..400 {
        let b = (a + len).min(span);
        let piece = adaptive_panel(&integrand, a, b, &base, &fine, 0);
        total += piece;
        if b >= span {
            break;
        }
        if piece.abs() <= 1e-17 * total.abs() && lower + a > 4.0 * (lower + 1.0) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        a = b;
        len *= 2.0;
    }
    Ok(total)
}

fn adaptive_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64, base: &Rule1d, fine: &Rule1d, depth: usize) -> f64 {
    let coarse = base.mapped(a, b).integrate(f);
    let accurate = fine.mapped(a, b).integrate(f);
    if depth >= 24 || (accurate - coarse).abs() <= 1e-14 * accurate.abs().max(1e-300) {
        return accurate;
    }
    let m = 0.5 * (a + b);
    adaptive_panel(f, a, m, base, fine, depth + 1) + adaptive_panel(f, m, b, base, fine, depth + 1)
}

/// Ratios of the Carleman integral to its two bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanRatio {
    pub value: f64,
    /// `C / c^beta`, defined when `|v| >= |v'|` and `k >= max(9, beta + 10)`.
    pub outer: Option<f64>,
    /// `C / ((v0')^(beta + 1) / c + c^beta)`, defined when `|v| <= 2 |v'|`.
    pub inner: Option<f64>,
}

pub fn carleman_ratio(v: &Vec3, vp: &Vec3, beta: f64, k: f64, c: f64) -> Result<CarlemanRatio> {
    let value = carleman_c(v, vp, beta, k, c, f64::INFINITY)?;
    let (nv, nvp) = (v.norm(), vp.norm());
    let outer = (nv >= nvp && k >= 9f64.max(beta + 10.0)).then(|| value / c.powf(beta));
    let inner = (nv <= 2.0 * nvp).then(|| value / (energy(vp, c).powf(beta + 1.0) / c + c.powf(beta)));
    Ok(CarlemanRatio { value, outer, inner })
}

/// Left side over right side of the weighted `L^infinity` collision
/// estimate at `(t, x, v)`, with `alpha = (5 + gamma)/3 - 0.01`.
pub fn weighted_q_bound_ratio<H: Differentiable, F: Differentiable>(
    h: &H,
    f: &F,
    t: f64,
    x: &Vec3,
    v: &Vec3,
    k: u32,
    kernel: &KernelSpec,
    spec: &GridSpec,
) -> Result<f64> {
    if k < 10 {
        return Err(Error::Parameter(format!("weight exponent k must be >= 10, got {k}")));
    }
    if h.is_zero() || f.is_zero() {
        return Ok(0.0);
    }
    let c = kernel.c;
    let q = eval_q(h, f, v, kernel, spec)?.abs();
    if q == 0.0 {
        return Ok(0.0);
    }
    let alpha = (5.0 + kernel.gamma) / 3.0 - 0.01;
    let ln_lhs = crate::analysis::ln_composite_weight(v, t, x, k, c) + q.ln();
    let ln_norm = |g: &dyn MomentumDensity| -> f64 {
        let a = crate::analysis::ln_weighted_sup(g, t, x, c, k, 4 * k + 50);
        let b = crate::analysis::ln_weighted_sup(g, t, x, c, k + 10, 2 * k + 20);
        ln_add(a, b)
    };
    let ln_rhs = -alpha * (1.0 + t).ln() + ln_norm(h) + ln_norm(f);
    Ok((ln_lhs - ln_rhs).exp())
}

/// `ln(e^a + e^b)`.
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{Gaussian, Juttner, Zero};

    fn kernel(gamma: f64, c: f64) -> KernelSpec {
        KernelSpec::new(gamma, AngularFactor::Constant(1.0), c).unwrap()
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(KernelSpec::new(-2.0, AngularFactor::Constant(1.0), 1.0).is_err());
        assert!(KernelSpec::new(0.1, AngularFactor::Constant(1.0), 1.0).is_err());
        assert!(KernelSpec::new(0.0, AngularFactor::Constant(1.5), 1.0).is_err());
        assert!(KernelSpec::new(0.0, AngularFactor::Constant(1.0), 0.5).is_err());
    }

    #[test]
    fn zero_density_gives_zero() {
        let g = Gaussian::isotropic(1.0, Vec3::zeros(), 1.0).unwrap();
        let k = kernel(0.0, 1.0);
        let spec = GridSpec::default();
        let v = Vec3::new(0.2, 0.1, 0.0);
        assert_eq!(eval_loss(&g, &Zero, &v, &k, &spec).unwrap(), 0.0);
        assert_eq!(eval_gain(&Zero, &g, &v, &k, &spec).unwrap(), 0.0);
        assert_eq!(eval_q(&Zero, &Zero, &v, &k, &spec).unwrap(), 0.0);
    }

    #[test]
    fn juttner_is_annihilated() {
        for &c in &[1.0, 2.0] {
            let j = Juttner::new(1.0, 1.0, c).unwrap();
            let gl = eval_gain_loss(&j, &j, &Vec3::new(0.5, 0.2, -0.3), &kernel(-0.5, c), &GridSpec::default()).unwrap();
            assert!(gl.relative() < 1e-6, "{gl:?}");
        }
    }

    #[test]
    fn carleman_examples() {
        let v = Vec3::new(5.0, 0.0, 0.0);
        let vp = Vec3::new(1.0, 0.0, 0.0);
        let a = carleman_c(&v, &vp, 0.0, 10.0, 1.0, f64::INFINITY).unwrap();
        assert!(a > 0.0 && a.is_finite());
        let far = Vec3::new(200.0, 0.0, 0.0);
        assert_eq!(carleman_c(&Vec3::zeros(), &far, 0.0, 10.0, 1.0, 50.0).unwrap(), 0.0);
        assert!(carleman_c(&v, &vp, -1.5, 10.0, 1.0, 1.0).is_err());
        assert!(carleman_c(&v, &vp, 0.0, 7.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn study_orders() {
        let s = ConvergenceStudy::from_residuals(vec![1.0, 0.5, 0.25], vec![1.0, 0.25, 0.0625]);
        assert!((s.fitted_order() - 2.0).abs() < 1e-12);
        assert!(s.orders.iter().all(|o| (o - 2.0).abs() < 1e-12));
    }
}
