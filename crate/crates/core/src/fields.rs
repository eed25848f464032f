//! Maxwell fields driven by kinetic moments.
//!
//! * [`homogeneous_wave`]: Kirchhoff spherical means for the free wave
//!   equation `d_t^2 u - c^2 Lap u = 0`.
//! * [`GlasseyStrauss`]: the three retarded integrals representing a
//!   component of `E` or `B` with zero Cauchy data, and the wave-equation
//!   residual of their sum.
//! * [`null_decompose`] and [`lorentz_force_bound_ratio`]: radial and
//!   null components with respect to the frame `e1' = x / |x|`.
//!
//! Cone integrals use `y = x + tau omega`, `dy = tau^2 d tau d omega`, so the
//! `1/|y - x|` and `1/|y - x|^2` factors of the representation are regular
//! in `(tau, omega)`.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::collision::ConvergenceStudy;
use crate::distribution::{Envelope, Gaussian, MomentumDensity};
use crate::kinematics::{energy, rel_velocity};
use crate::quadrature::{composite_legendre, gauss_legendre, Rule1d, SphereRule};
use crate::{Error, Result, Vec3};

/// Spherical frame `e1' = x / r`, `e2' = (cos th cos ph, cos th sin ph, -sin th)`,
/// `e3' = (-sin ph, cos ph, 0)`.
///
/// On the polar axis the azimuth is taken as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullFrame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub e3: Vec3,
    pub r: f64,
    polar: bool,
}

impl NullFrame {
    pub fn new(x: &Vec3) -> Result<Self> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Degenerate("null frame undefined at x = 0".into()));
        }
        let rho = x.x.hypot(x.y);
        let polar = rho <= 1e-12 * r;
        let (ct, st) = (x.z / r, rho / r);
        let (cp, sp) = if polar { (1.0, 0.0) } else { (x.x / rho, x.y / rho) };
        Ok(Self {
            e1: x / r,
            e2: Vec3::new(ct * cp, ct * sp, -st),
            e3: Vec3::new(-sp, cp, 0.0),
            r,
            polar,
        })
    }

    /// True on the coordinate axis `theta in {0, pi}`.
    pub fn is_polar(&self) -> bool {
        self.polar
    }

    /// Largest deviation from orthonormality and right-handedness.
    pub fn defect(&self) -> f64 {
        let e = [self.e1, self.e2, self.e3];
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                d = d.max((e[i].dot(&e[j]) - delta).abs());
            }
        }
        d.max((self.e1.cross(&self.e2) - self.e3).norm())
    }
}

/// Field values with their radial and null components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub e: Vec3,
    pub b: Vec3,
    /// `E . e1'`
    pub rho: f64,
    /// `B . e1'`
    pub sigma: f64,
    /// `E . e2' - B . e3'`
    pub alpha1: f64,
    /// `E . e3' + B . e2'`
    pub alpha2: f64,
}

impl FieldSample {
    pub fn alpha(&self) -> f64 {
        self.alpha1.hypot(self.alpha2)
    }
}

/// Radial components `rho, sigma` and the null components
/// `alpha = (E + e1' x B)` projected on `e2', e3'`.
pub fn null_decompose(e: &Vec3, b: &Vec3, x: &Vec3) -> Result<FieldSample> {
    let fr = NullFrame::new(x)?;
    Ok(FieldSample {
        e: *e,
        b: *b,
        rho: e.dot(&fr.e1),
        sigma: b.dot(&fr.e1),
        alpha1: e.dot(&fr.e2) - b.dot(&fr.e3),
        alpha2: e.dot(&fr.e3) + b.dot(&fr.e2),
    })
}

/// `kappa = 1 - v . x / (v0 |x|)`.
pub fn kappa(v: &Vec3, x: &Vec3, c: f64) -> Result<f64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Degenerate("kappa undefined at x = 0".into()));
    }
    let v0 = energy(v, c);
    let dot = v.dot(x) / (v0 * r);
    if dot > 0.0 {
        // 1 - dot^2 = (c^2 + |v x x|^2 / r^2) / v0^2
        let perp = v.cross(x).norm_squared() / (r * r);
        Ok((c * c + perp) / (v0 * v0 * (1.0 + dot)))
    } else {
        Ok(1.0 - dot)
    }
}

/// `(c / v0) |E + (v / v0) x B|` over `kappa (|E| + |B|) + sqrt(kappa) (|alpha| + |rho|)`,
/// with `0 / 0` reported as 0.
pub fn lorentz_force_bound_ratio(e: &Vec3, b: &Vec3, x: &Vec3, v: &Vec3, c: f64) -> Result<f64> {
    let k = kappa(v, x, c)?;
    let s = null_decompose(e, b, x)?;
    let v0 = energy(v, c);
    let force = (c / v0) * (e + (v / v0).cross(b)).norm();
    let bound = k * (e.norm() + b.norm()) + k.sqrt() * (s.alpha() + s.rho.abs());
    if force == 0.0 {
        return Ok(0.0);
    }
    Ok(force / bound)
}

/// Largest relative residual of the vector identities
///
/// ```text
/// (a x b).(c x d) = (a.c)(b.d) - (a.d)(b.c)
/// (a x b) x c = b (a.c) - a (b.c)
/// a.(b x c) = b.(c x a) = c.(a x b)
/// (a x b) x c + (b x c) x a + (c x a) x b = 0
/// a.b + c.d = ((a + c).(b + d) + (a - c).(b - d)) / 2
/// ```
///
/// each divided by the product of the norms involved (or 1 if smaller).
pub fn cross_identities_check(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    let (na, nb, nc, nd) = (a.norm(), b.norm(), c.norm(), d.norm());
    let s4 = (na * nb * nc * nd).max(1.0);
    let s3 = (na * nb * nc).max(1.0);
    let s2 = (na * nb + nc * nd).max(1.0);
    let r1 = (a.cross(b).dot(&c.cross(d)) - (a.dot(c) * b.dot(d) - a.dot(d) * b.dot(c))).abs() / s4;
    let r2 = (a.cross(b).cross(c) - (b * a.dot(c) - a * b.dot(c))).norm() / s3;
    let t1 = a.dot(&b.cross(c));
    let r3 = ((t1 - b.dot(&c.cross(a))).abs()).max((t1 - c.dot(&a.cross(b))).abs()) / s3;
    let r4 = (a.cross(b).cross(c) + b.cross(c).cross(a) + c.cross(a).cross(b)).norm() / s3;
    let r5 = (a.dot(b) + c.dot(d) - 0.5 * ((a + c).dot(&(b + d)) + (a - c).dot(&(b - d)))).abs() / s2;
    r1.max(r2).max(r3).max(r4).max(r5)
}

/// Relative residual of `a x e2' = (a.e1') e3' - (a.e3') e1'`,
/// `a x e3' = (a.e2') e1' - (a.e1') e2'`, `a x e1' = (a.e3') e2' - (a.e2') e3'`.
pub fn frame_identities_check(a: &Vec3, x: &Vec3) -> Result<f64> {
    let f = NullFrame::new(x)?;
    let (e1, e2, e3) = (f.e1, f.e2, f.e3);
    let r1 = (a.cross(&e2) - (e3 * a.dot(&e1) - e1 * a.dot(&e3))).norm();
    let r2 = (a.cross(&e3) - (e1 * a.dot(&e2) - e2 * a.dot(&e1))).norm();
    let r3 = (a.cross(&e1) - (e2 * a.dot(&e3) - e3 * a.dot(&e2))).norm();
    Ok(r1.max(r2).max(r3) / a.norm().max(1.0))
}

/// A smooth function of position with an exact gradient.
pub trait SpatialProfile: Sync {
    fn value(&self, x: &Vec3) -> f64;
    fn gradient(&self, x: &Vec3) -> Vec3;
}

/// Compact `C^5` bump `A (1 - |x - b|^2 / R^2)^6` on `|x - b| < R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec3,
    pub radius: f64,
}

impl Bump {
    /// Profile as a function of `q = |x - b|^2 / R^2`.
    #[inline]
    fn radial(&self, q: f64) -> f64 {
        if q >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - q).powi(6)
        }
    }

    /// `d profile / d q`.
    #[inline]
    fn radial_derivative(&self, q: f64) -> f64 {
        if q >= 1.0 {
            0.0
        } else {
            -6.0 * self.amplitude * (1.0 - q).powi(5)
        }
    }

    /// Sphere means `(mean f, mean omega . grad f)` over `|y - x| = rho`.
    fn sphere_means(&self, x: &Vec3, rho: f64) -> (f64, f64) {
        let r2 = self.radius * self.radius;
        let off = self.center - x;
        let d = off.norm();
        if rho == 0.0 {
            return (self.value(x), 0.0);
        }
        // |y - b|^2 = rho^2 + d^2 - 2 rho d mu, mu = cos angle to (b - x)
        let lower = if d == 0.0 {
            if rho < self.radius {
                -1.0
            } else {
                return (0.0, 0.0);
            }
        } else {
            ((rho * rho + d * d - r2) / (2.0 * rho * d)).max(-1.0)
        };
        if lower >= 1.0 {
            return (0.0, 0.0);
        }
        let rule = gauss_legendre(8).mapped(lower, 1.0);
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for (&mu, &w) in rule.nodes.iter().zip(&rule.weights) {
            let q = (rho * rho + d * d - 2.0 * rho * d * mu) / r2;
            m0 += w * self.radial(q);
            // omega . grad f = f'(q) 2 omega.(y - b) / R^2, omega.(y - b) = rho - d mu
            m1 += w * self.radial_derivative(q) * 2.0 * (rho - d * mu) / r2;
        }
        (0.5 * m0, 0.5 * m1)
    }
}

impl SpatialProfile for Bump {
    fn value(&self, x: &Vec3) -> f64 {
        self.radial((x - self.center).norm_squared() / (self.radius * self.radius))
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        let r2 = self.radius * self.radius;
        let y = x - self.center;
        y * (2.0 * self.radial_derivative(y.norm_squared() / r2) / r2)
    }
}

/// Superposition of bumps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BumpSum(pub Vec<Bump>);

impl SpatialProfile for BumpSum {
    fn value(&self, x: &Vec3) -> f64 {
        self.0.iter().map(|b| b.value(x)).sum()
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        self.0.iter().map(|b| b.gradient(x)).sum()
    }
}

/// Kirchhoff solution of the free wave equation with data `u(0) = f0`,
/// `d_t u(0) = f1`:
///
/// ```text
/// Phi(t, x) = mean f0 + c t mean(omega . grad f0) + t mean f1
/// ```
///
/// with means over the sphere `|y - x| = c t`. Each bump is integrated
/// exactly on the spherical cap where it is supported.
pub fn homogeneous_wave(f0: &BumpSum, f1: &BumpSum, t: f64, x: &Vec3, c: f64) -> f64 {
    if t <= 0.0 {
        return f0.value(x);
    }
    let rho = c * t;
    let mut out = 0.0;
    for b in &f0.0 {
        let (m0, m1) = b.sphere_means(x, rho);
        out += m0 + rho * m1;
    }
    for b in &f1.0 {
        out += t * b.sphere_means(x, rho).0;
    }
    out
}

/// [`homogeneous_wave`] for arbitrary profiles on a fixed sphere rule.
pub fn homogeneous_wave_with(
    f0: &dyn SpatialProfile,
    f1: &dyn SpatialProfile,
    t: f64,
    x: &Vec3,
    c: f64,
    sphere: &SphereRule,
) -> f64 {
    if t <= 0.0 {
        return f0.value(x);
    }
    let rho = c * t;
    let mut out = 0.0;
    sphere.for_each_oriented(&Vec3::z(), |w, o| {
        let y = x + o * rho;
        out += w * (f0.value(&y) + rho * o.dot(&f0.gradient(&y)) + t * f1.value(&y));
    });
    out / (4.0 * PI)
}

/// `vhat / c = v / v0`.
#[inline]
fn beta(v: &Vec3, c: f64) -> (Vec3, f64) {
    let v0 = energy(v, c);
    (v / v0, v0)
}

/// Kernel `a(omega, v)` of the `1/|y - x|^3` term in `d_{x_k}` of the
/// second electric integral (component `i`).
pub fn gs_kernel_a(omega: &Vec3, v: &Vec3, c: f64, i: usize, k: usize) -> f64 {
    let (b, v0) = beta(v, c);
    let d = 1.0 + omega.dot(&b);
    let delta = if i == k { 1.0 } else { 0.0 };
    let num = 3.0 * (omega[i] + b[i]) * (-b[k] * d + (b.norm_squared() - 1.0) * omega[k]) + d * d * delta;
    num / d.powi(4) * (c * c) / (v0 * v0)
}

/// Kernel `b(omega, v)` of the `1/|y - x|^3` term in `d_{x_k}` of the
/// second magnetic integral (components `i, j`).
pub fn gs_kernel_b(omega: &Vec3, v: &Vec3, c: f64, i: usize, j: usize, k: usize) -> f64 {
    let (b, v0) = beta(v, c);
    let vh = b * c;
    let d = 1.0 + omega.dot(&b);
    let dik = if i == k { 1.0 } else { 0.0 };
    let djk = if j == k { 1.0 } else { 0.0 };
    let first = (dik * vh[j] - djk * vh[i]) / (d * d);
    let second = (omega[i] * vh[j] - omega[j] * vh[i]) * ((-3.0 + 3.0 * b.norm_squared()) * omega[k] - 3.0 * b[k] * d)
        / d.powi(4);
    (c * c) / (v0 * v0) * (first + second)
}

/// Sphere rule for the kernel means: Gauss-Legendre in `cos theta` about an
/// axis along `v`.
pub fn kernel_sphere_rule(n_polar: usize, n_azimuth: usize) -> SphereRule {
    SphereRule::product(n_polar, n_azimuth)
}

/// `int_{S^2} a(omega, v) d omega`.
pub fn gs_kernel_a_integral(v: &Vec3, c: f64, i: usize, k: usize, rule: &SphereRule) -> f64 {
    kernel_integral(v, rule, |o| gs_kernel_a(o, v, c, i, k))
}

/// `int_{S^2} b(omega, v) d omega`.
pub fn gs_kernel_b_integral(v: &Vec3, c: f64, i: usize, j: usize, k: usize, rule: &SphereRule) -> f64 {
    kernel_integral(v, rule, |o| gs_kernel_b(o, v, c, i, j, k))
}

fn kernel_integral(v: &Vec3, rule: &SphereRule, f: impl Fn(&Vec3) -> f64) -> f64 {
    let n = v.norm();
    let axis = if n > 0.0 { v / n } else { Vec3::z() };
    let mut s = 0.0;
    rule.for_each_oriented(&axis, |w, o| s += w * f(&o));
    s
}

/// Phase-space density `g(t, x, v)` with exact `(d_t, grad_x)` oracles.
pub trait PhaseDensity: Sync {
    fn value(&self, t: f64, x: &Vec3, v: &Vec3) -> f64;
    fn time_derivative(&self, t: f64, x: &Vec3, v: &Vec3) -> f64;
    fn spatial_gradient(&self, t: f64, x: &Vec3, v: &Vec3) -> Vec3;

    /// `T0 g = d_t g + vhat . grad_x g`.
    fn transport(&self, t: f64, x: &Vec3, v: &Vec3, c: f64) -> f64 {
        self.time_derivative(t, x, v) + rel_velocity(v, c).dot(&self.spatial_gradient(t, x, v))
    }

    fn momentum_envelope(&self) -> Envelope;

    fn is_zero(&self) -> bool {
        false
    }

    /// `Some` for products `A(t, x) psi(v)`.
    fn separable(&self) -> Option<(&DriftingProfile, &Gaussian)> {
        None
    }

    /// True for exact free-transport solutions, `T0 g = 0`.
    fn is_transported(&self) -> bool {
        false
    }
}

/// `A exp(-|x - x0 - drift t|^2 / (2 w^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftingProfile {
    pub amplitude: f64,
    pub center: Vec3,
    pub drift: Vec3,
    pub width: f64,
}

impl DriftingProfile {
    #[inline]
    fn offset(&self, t: f64, x: &Vec3) -> Vec3 {
        x - self.center - self.drift * t
    }

    #[inline]
    pub fn value(&self, t: f64, x: &Vec3) -> f64 {
        let y = self.offset(t, x);
        self.amplitude * (-0.5 * y.norm_squared() / (self.width * self.width)).exp()
    }

    #[inline]
    pub fn gradient(&self, t: f64, x: &Vec3) -> Vec3 {
        let y = self.offset(t, x);
        y * (-self.value(t, x) / (self.width * self.width))
    }

    #[inline]
    pub fn time_derivative(&self, t: f64, x: &Vec3) -> f64 {
        -self.drift.dot(&self.gradient(t, x))
    }
}

/// `g = A(t, x) psi(v)` with a drifting Gaussian `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSource {
    pub profile: DriftingProfile,
    pub momentum: Gaussian,
}

impl PhaseDensity for SeparableSource {
    fn value(&self, t: f64, x: &Vec3, v: &Vec3) -> f64 {
        self.profile.value(t, x) * self.momentum.value(v)
    }

    fn time_derivative(&self, t: f64, x: &Vec3, v: &Vec3) -> f64 {
        self.profile.time_derivative(t, x) * self.momentum.value(v)
    }

    fn spatial_gradient(&self, t: f64, x: &Vec3, v: &Vec3) -> Vec3 {
        self.profile.gradient(t, x) * self.momentum.value(v)
    }

    fn momentum_envelope(&self) -> Envelope {
        self.momentum.envelope()
    }

    fn separable(&self) -> Option<(&DriftingProfile, &Gaussian)> {
        Some((&self.profile, &self.momentum))
    }
}

/// Free-transport solution `A exp(-|x - x0 - t vhat|^2 / (2 w^2)) psi(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedSource {
    pub amplitude: f64,
    pub center: Vec3,
    pub width: f64,
    pub momentum: Gaussian,
    pub c: f64,
}

impl TransportedSource {
    fn spatial(&self, t: f64, x: &Vec3, v: &Vec3) -> (f64, Vec3) {
        let y = x - self.center - rel_velocity(v, self.c) * t;
        let a = self.amplitude * (-0.5 * y.norm_squared() / (self.width * self.width)).exp();
        (a, y)
    }
}

impl PhaseDensity for TransportedSource {
    fn value(&self, t: f64, x: &Vec3, v: &Vec3) -> f64 {
        self.spatial(t, x, v).0 * self.momentum.value(v)
    }

    fn time_derivative(&self, t: f64, x: &Vec3, v: &Vec3) -> f64 {
        let (a, y) = self.spatial(t, x, v);
        a * y.dot(&rel_velocity(v, self.c)) / (self.width * self.width) * self.momentum.value(v)
    }

    fn spatial_gradient(&self, t: f64, x: &Vec3, v: &Vec3) -> Vec3 {
        let (a, y) = self.spatial(t, x, v);
        y * (-a / (self.width * self.width) * self.momentum.value(v))
    }

    fn transport(&self, _: f64, _: &Vec3, _: &Vec3, _: f64) -> f64 {
        0.0
    }

    fn momentum_envelope(&self) -> Envelope {
        self.momentum.envelope()
    }

    fn is_transported(&self) -> bool {
        true
    }
}

/// The zero source.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroSource;

impl PhaseDensity for ZeroSource {
    fn value(&self, _: f64, _: &Vec3, _: &Vec3) -> f64 {
        0.0
    }

    fn time_derivative(&self, _: f64, _: &Vec3, _: &Vec3) -> f64 {
        0.0
    }

    fn spatial_gradient(&self, _: f64, _: &Vec3, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }

    fn momentum_envelope(&self) -> Envelope {
        Envelope { center: Vec3::zeros(), radius: 0.0 }
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Product momentum rule on an envelope ball.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub nodes: Vec<(Vec3, f64)>,
}

impl VelocityGrid {
    pub fn covering(env: &Envelope, order: usize, panels: usize, polar: usize, azimuth: usize) -> Self {
        let radial = composite_legendre(order, panels, 0.0, env.radius);
        let sphere = SphereRule::product(polar, azimuth).nodes();
        let mut nodes = Vec::with_capacity(radial.len() * sphere.len());
        for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
            for (o, wo) in &sphere {
                nodes.push((env.center + o * r, wr * wo * r * r));
            }
        }
        Self { nodes }
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        self.nodes.iter().map(|(v, w)| w * f(v)).sum()
    }
}

/// Which field component a representation computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// `E_i`, with `-int (vhat_i d_t + c^2 d_i) g dv` as wave source.
    Electric(usize),
    /// `f_ij`, with `int c (vhat_i d_j - vhat_j d_i) g dv` as wave source.
    Magnetic(usize, usize),
}

impl FieldKind {
    fn check(&self) -> Result<()> {
        let ok = match *self {
            FieldKind::Electric(i) => i < 3,
            FieldKind::Magnetic(i, j) => i < 3 && j < 3,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("field index out of range: {self:?}")))
        }
    }

    /// `(K1, K2, K3)` at `(omega, v)`.
    #[inline]
    fn kernels(&self, omega: &Vec3, v: &Vec3, c: f64) -> (f64, f64, f64) {
        let (b, v0) = beta(v, c);
        let d = 1.0 + omega.dot(&b);
        let m = c * c / (v0 * v0);
        match *self {
            FieldKind::Electric(i) => {
                let n = omega[i] + b[i];
                (n / d, n / (d * d) * m, omega[i] - n * b.dot(omega) / d)
            }
            FieldKind::Magnetic(i, j) => {
                let n = c * (b[i] * omega[j] - b[j] * omega[i]);
                (n / d, n / (d * d) * m, n / d)
            }
        }
    }

    /// Prefactors of the cone, `1/tau^2` and initial-sphere integrals; the
    /// last one is further divided by `t`.
    fn prefactors(&self, c: f64) -> (f64, f64, f64) {
        match self {
            FieldKind::Electric(_) => (-1.0 / (4.0 * PI * c), -1.0 / (4.0 * PI), -1.0 / (4.0 * PI * c)),
            FieldKind::Magnetic(..) => (1.0 / (4.0 * PI * c * c), 1.0 / (4.0 * PI * c), 1.0 / (4.0 * PI * c * c)),
        }
    }
}

/// Node counts of the retarded integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GsGrid {
    pub shells: usize,
    pub shell_panels: usize,
    pub polar: usize,
    pub azimuth: usize,
    pub velocity_order: usize,
    pub velocity_panels: usize,
    pub velocity_polar: usize,
    pub velocity_azimuth: usize,
    /// Largest admissible number of `(y, v)` kernel evaluations.
    pub budget: usize,
}

impl Default for GsGrid {
    fn default() -> Self {
        Self {
            shells: 16,
            shell_panels: 4,
            polar: 24,
            azimuth: 32,
            velocity_order: 16,
            velocity_panels: 2,
            velocity_polar: 16,
            velocity_azimuth: 24,
            budget: 2_000_000_000,
        }
    }
}

/// The three retarded integrals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GsTerms {
    /// Cone integral of `T0 g / |y - x|`.
    pub t1: f64,
    /// Cone integral of `g / |y - x|^2`.
    pub t2: f64,
    /// Initial-sphere integral of `g(0)`.
    pub t3: f64,
}

impl GsTerms {
    pub fn sum(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct OmegaMoments {
    k1: f64,
    k1v: Vec3,
    k2: f64,
    k3: f64,
}

/// Retarded-integral evaluator for one field component and source.
pub struct GlasseyStrauss<'a> {
    kind: FieldKind,
    source: &'a dyn PhaseDensity,
    c: f64,
    grid: GsGrid,
    sphere: Vec<(Vec3, f64)>,
    shell_rule: Rule1d,
    velocity: VelocityGrid,
    moments: Option<Vec<OmegaMoments>>,
}

impl<'a> GlasseyStrauss<'a> {
    pub fn new(kind: FieldKind, source: &'a dyn PhaseDensity, c: f64, grid: GsGrid) -> Result<Self> {
        kind.check()?;
        if !(c >= 1.0) {
            return Err(Error::Parameter(format!("speed of light must be >= 1, got {c}")));
        }
        let sphere = SphereRule::product(grid.polar, grid.azimuth).nodes();
        let velocity = VelocityGrid::covering(
            &source.momentum_envelope(),
            grid.velocity_order,
            grid.velocity_panels,
            grid.velocity_polar,
            grid.velocity_azimuth,
        );
        let moments = source.separable().map(|(_, psi)| {
            sphere
                .par_iter()
                .map(|(o, _)| {
                    let mut m = OmegaMoments::default();
                    for (v, w) in &velocity.nodes {
                        let p = w * psi.value(v);
                        let (k1, k2, k3) = kind.kernels(o, v, c);
                        m.k1 += p * k1;
                        m.k1v += rel_velocity(v, c) * (p * k1);
                        m.k2 += p * k2;
                        m.k3 += p * k3;
                    }
                    m
                })
                .collect()
        });
        Ok(Self {
            kind,
            source,
            c,
            grid,
            sphere,
            shell_rule: composite_legendre(grid.shells, grid.shell_panels, 0.0, 1.0),
            velocity,
            moments,
        })
    }

    /// Kernel evaluations needed per `(t, x)`.
    pub fn cost(&self) -> usize {
        let inner = if self.moments.is_some() { 1 } else { self.velocity.nodes.len() };
        (self.shell_rule.len() + 1) * self.sphere.len() * inner
    }

    /// `int K1 T0 g dv`, `int K2 g dv` at `(s, y)` for direction `omega_k`.
    fn inner(&self, k: usize, s: f64, y: &Vec3) -> (f64, f64) {
        let o = &self.sphere[k].0;
        let c = self.c;
        if let (Some(m), Some((a, _))) = (&self.moments, self.source.separable()) {
            let m = &m[k];
            let t0 = a.time_derivative(s, y) * m.k1 + a.gradient(s, y).dot(&m.k1v);
            return (t0, a.value(s, y) * m.k2);
        }
        let transported = self.source.is_transported();
        let mut i1 = 0.0;
        let mut i2 = 0.0;
        for (v, w) in &self.velocity.nodes {
            let (k1, k2, _) = self.kind.kernels(o, v, c);
            if !transported {
                i1 += w * k1 * self.source.transport(s, y, v, c);
            }
            i2 += w * k2 * self.source.value(s, y, v);
        }
        (i1, i2)
    }

    fn initial_k3(&self, k: usize, y: &Vec3) -> f64 {
        let o = &self.sphere[k].0;
        if let (Some(m), Some((a, _))) = (&self.moments, self.source.separable()) {
            return a.value(0.0, y) * m[k].k3;
        }
        let mut acc = 0.0;
        for (v, w) in &self.velocity.nodes {
            let (_, _, k3) = self.kind.kernels(o, v, self.c);
            acc += w * k3 * self.source.value(0.0, y, v);
        }
        acc
    }

    /// The three retarded integrals at `(t, x)`.
    pub fn terms(&self, t: f64, x: &Vec3) -> Result<GsTerms> {
        if t < 0.0 {
            return Err(Error::Domain(format!("retarded integrals need t >= 0, got {t}")));
        }
        if self.source.is_zero() || t == 0.0 {
            return Ok(GsTerms::default());
        }
        let cost = self.cost();
        if cost > self.grid.budget {
            return Err(Error::Budget { needed: cost, budget: self.grid.budget });
        }
        let c = self.c;
        let ct = c * t;
        let shells: Vec<(f64, f64)> = self
            .shell_rule
            .nodes
            .par_iter()
            .zip(&self.shell_rule.weights)
            .map(|(&u, &wu)| {
                let tau = u * ct;
                let s = t - tau / c;
                let mut a1 = 0.0;
                let mut a2 = 0.0;
                for (k, (o, w)) in self.sphere.iter().enumerate() {
                    let (i1, i2) = self.inner(k, s, &(x + o * tau));
                    a1 += w * i1;
                    a2 += w * i2;
                }
                (wu * ct * tau * a1, wu * ct * a2)
            })
            .collect();
        let (mut t1, mut t2) = (0.0, 0.0);
        for (a, b) in shells {
            t1 += a;
            t2 += b;
        }
        let mut t3 = 0.0;
        for (k, (o, w)) in self.sphere.iter().enumerate() {
            t3 += w * self.initial_k3(k, &(x + o * ct));
        }
        let (p1, p2, p3) = self.kind.prefactors(c);
        Ok(GsTerms { t1: p1 * t1, t2: p2 * t2, t3: p3 * ct * ct / t * t3 })
    }

    /// Right-hand side of the wave equation solved by [`Self::terms`].
    pub fn wave_source(&self, t: f64, x: &Vec3) -> f64 {
        let c = self.c;
        self.velocity
            .nodes
            .iter()
            .map(|(v, w)| {
                let vh = rel_velocity(v, c);
                let gt = self.source.time_derivative(t, x, v);
                let gx = self.source.spatial_gradient(t, x, v);
                w * match self.kind {
                    FieldKind::Electric(i) => -(vh[i] * gt + c * c * gx[i]),
                    FieldKind::Magnetic(i, j) => c * (vh[i] * gx[j] - vh[j] * gx[i]),
                }
            })
            .sum()
    }

    /// Wave residual `|D_tt F - c^2 Lap_h F - source|` of `F = t1 + t2 + t3`
    /// for spatial steps `h0 / 2^k` and time steps `h / c`.
    pub fn wave_residual_study(&self, t: f64, x: &Vec3, h0: f64, halvings: usize) -> Result<ConvergenceStudy> {
        let c = self.c;
        let steps: Vec<f64> = (0..=halvings).map(|k| h0 / (1u64 << k) as f64).collect();
        if t <= 2.0 * h0 / c {
            return Err(Error::Parameter("wave residual needs t > 2 h0 / c".into()));
        }
        let mut points = vec![(t, *x)];
        for &h in &steps {
            let k = h / c;
            points.push((t + k, *x));
            points.push((t - k, *x));
            for a in 0..3 {
                let mut e = Vec3::zeros();
                e[a] = h;
                points.push((t, x + e));
                points.push((t, x - e));
            }
        }
        let values: Vec<f64> = points
            .iter()
            .map(|(s, y)| self.terms(*s, y).map(|r| r.sum()))
            .collect::<Result<_>>()?;
        let source = self.wave_source(t, x);
        let f0 = values[0];
        let residuals = steps
            .iter()
            .enumerate()
            .map(|(n, &h)| {
                let b = 1 + 8 * n;
                let k = h / c;
                let dtt = (values[b] - 2.0 * f0 + values[b + 1]) / (k * k);
                let lap: f64 = (0..3).map(|a| (values[b + 2 + 2 * a] - 2.0 * f0 + values[b + 3 + 2 * a]) / (h * h)).sum();
                (dtt - c * c * lap - source).abs()
            })
            .collect();
        Ok(ConvergenceStudy::from_residuals(steps, residuals))
    }
}

/// `(term1, term2, term3)` for one field component.
pub fn gs_field_terms(kind: FieldKind, source: &dyn PhaseDensity, t: f64, x: &Vec3, c: f64, grid: &GsGrid) -> Result<GsTerms> {
    GlasseyStrauss::new(kind, source, c, *grid)?.terms(t, x)
}

/// Driven electric field (zero Cauchy data).
pub fn electric_field(source: &dyn PhaseDensity, t: f64, x: &Vec3, c: f64, grid: &GsGrid) -> Result<Vec3> {
    let mut e = Vec3::zeros();
    for i in 0..3 {
        e[i] = gs_field_terms(FieldKind::Electric(i), source, t, x, c, grid)?.sum();
    }
    Ok(e)
}

/// Driven magnetic field `B = (f_32, f_13, f_21)`.
pub fn magnetic_field(source: &dyn PhaseDensity, t: f64, x: &Vec3, c: f64, grid: &GsGrid) -> Result<Vec3> {
    let comp = |i, j| gs_field_terms(FieldKind::Magnetic(i, j), source, t, x, c, grid).map(|r| r.sum());
    Ok(Vec3::new(comp(2, 1)?, comp(0, 2)?, comp(1, 0)?))
}

/// A weighted point particle `(x, v, w)`; the field kernels use the
/// retarded position on the backward light cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedParticle {
    pub position: Vec3,
    pub momentum: Vec3,
    pub weight: f64,
    /// Time at which `position` is attained.
    pub time: f64,
}

/// Distance `tau = c (t - s)` to the retarded position of a particle
/// moving freely through `(time, position)`, or `None` if the retarded
/// time precedes `t_min`.
pub fn retarded_distance(p: &RetardedParticle, t: f64, x: &Vec3, c: f64, t_min: f64) -> Option<(f64, Vec3)> {
    let vh = rel_velocity(&p.momentum, c);
    // |x - p(t) + vhat tau / c| = tau with p(t) the position at time t
    let d = x - p.position - vh * (t - p.time);
    let b = vh / c;
    let bb = b.norm_squared();
    let db = d.dot(&b);
    let tau = (db + (db * db + (1.0 - bb) * d.norm_squared()).sqrt()) / (1.0 - bb);
    let s = t - tau / c;
    if s < t_min {
        return None;
    }
    let y = p.position + vh * (s - p.time);
    Some((tau, y))
}

/// `1/|y - x|^2` parts of `E` and `B` at `(t, x)` generated by freely
/// moving point particles, with `tau^2` softened to `tau^2 + eps^2`.
///
/// Particles are summed in fixed chunks, so the result does not depend on
/// the number of worker threads.
pub fn free_particle_fields(particles: &[RetardedParticle], t: f64, x: &Vec3, c: f64, eps: f64) -> (Vec3, Vec3) {
    const CHUNK: usize = 4096;
    let parts: Vec<(Vec3, Vec3)> = particles
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut e = Vec3::zeros();
            let mut f = [0.0f64; 3];
            for p in chunk {
                let Some((tau, y)) = retarded_distance(p, t, x, c, 0.0) else { continue };
                if tau == 0.0 {
                    continue;
                }
                let o = (y - x) / tau;
                let (b, v0) = beta(&p.momentum, c);
                let d = 1.0 + o.dot(&b);
                let common = p.weight * c * c / (v0 * v0 * (tau * tau + eps * eps) * d * d * d);
                e -= (o + b) * (common / (4.0 * PI));
                // f_ij = (1 / 4 pi c) int (vhat_i w_j - vhat_j w_i) ... with vhat = c b
                let m = |i: usize, j: usize| (b[i] * o[j] - b[j] * o[i]) * common / (4.0 * PI);
                f[0] += m(2, 1);
                f[1] += m(0, 2);
                f[2] += m(1, 0);
            }
            (e, Vec3::new(f[0], f[1], f[2]))
        })
        .collect();
    let mut e = Vec3::zeros();
    let mut bf = Vec3::zeros();
    for (a, b) in parts {
        e += a;
        bf += b;
    }
    (e, bf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        for x in [Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.0, 0.0, 2.0), Vec3::new(0.0, 0.0, -1.0)] {
            let f = NullFrame::new(&x).unwrap();
            assert!(f.defect() < 1e-14);
        }
        assert!(NullFrame::new(&Vec3::zeros()).is_err());
        assert!(NullFrame::new(&Vec3::z()).unwrap().is_polar());
    }

    #[test]
    fn lorentz_ratio_examples() {
        let x = Vec3::new(1.0, 0.5, -0.2);
        let v = Vec3::new(0.3, 0.1, 0.0);
        assert_eq!(lorentz_force_bound_ratio(&Vec3::zeros(), &Vec3::zeros(), &x, &v, 1.0).unwrap(), 0.0);
        assert!(lorentz_force_bound_ratio(&Vec3::x(), &Vec3::zeros(), &Vec3::zeros(), &v, 1.0).is_err());
    }

    #[test]
    fn identities_on_axes() {
        assert!(cross_identities_check(&Vec3::x(), &Vec3::y(), &Vec3::z(), &Vec3::x()) == 0.0);
        assert!(frame_identities_check(&Vec3::new(1.0, -2.0, 0.5), &Vec3::new(0.3, 0.4, 1.0)).unwrap() < 1e-14);
    }

    #[test]
    fn kirchhoff_at_zero_time() {
        let b = BumpSum(vec![Bump { amplitude: 1.0, center: Vec3::zeros(), radius: 1.0 }]);
        let x = Vec3::new(0.2, 0.0, 0.0);
        assert_eq!(homogeneous_wave(&b, &BumpSum::default(), 0.0, &x, 1.0), b.value(&x));
        assert_eq!(homogeneous_wave(&BumpSum::default(), &BumpSum::default(), 1.0, &x, 1.0), 0.0);
    }

    #[test]
    fn kernels_at_rest() {
        let rule = kernel_sphere_rule(16, 8);
        for i in 0..3 {
            for k in 0..3 {
                assert!(gs_kernel_a_integral(&Vec3::zeros(), 1.0, i, k, &rule).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let r = gs_field_terms(FieldKind::Electric(0), &ZeroSource, 1.0, &Vec3::x(), 1.0, &GsGrid::default()).unwrap();
        assert_eq!(r, GsTerms::default());
    }
}
