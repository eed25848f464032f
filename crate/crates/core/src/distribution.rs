//! Analytic momentum densities with exact gradients.

use nalgebra::Matrix3;

use crate::kinematics::energy;
use crate::{Error, Result, Vec3};

/// Region outside of which a density is negligible: a ball of the given
/// radius around `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub center: Vec3,
    pub radius: f64,
}

/// A smooth function of momentum.
pub trait MomentumDensity: Sync {
    fn value(&self, v: &Vec3) -> f64;

    /// Negligible-tail envelope used to truncate momentum integrals.
    fn envelope(&self) -> Envelope;

    /// True when the density depends on `|v|` only.
    fn is_isotropic(&self) -> bool {
        self.spherical_center() == Some(Vec3::zeros())
    }

    /// `Some(a)` when the density depends on `|v - a|` only.
    fn spherical_center(&self) -> Option<Vec3> {
        None
    }

    /// `Some((a, T))` for an isotropic Gaussian `exp(-|v - a|^2 / (2 T))`.
    fn isotropic_gaussian(&self) -> Option<(Vec3, f64)> {
        None
    }

    /// True when the density vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }
}

/// A density with an exact gradient oracle.
pub trait Differentiable: MomentumDensity {
    fn gradient(&self, v: &Vec3) -> Vec3;
}

/// `A exp(-(v - m)^T C^{-1} (v - m) / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: Vec3,
    pub covariance: Matrix3<f64>,
    precision: Matrix3<f64>,
    sigma_max: f64,
}

impl Gaussian {
    pub fn new(amplitude: f64, center: Vec3, covariance: Matrix3<f64>) -> Result<Self> {
        let eig = covariance.symmetric_eigen();
        let min = eig.eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::Parameter("covariance must be positive definite".into()));
        }
        let precision = covariance
            .try_inverse()
            .ok_or_else(|| Error::Parameter("covariance is singular".into()))?;
        Ok(Self {
            amplitude,
            center,
            covariance,
            precision,
            sigma_max: eig.eigenvalues.max().sqrt(),
        })
    }

    /// Isotropic Gaussian with variance `temperature` in each direction.
    pub fn isotropic(amplitude: f64, center: Vec3, temperature: f64) -> Result<Self> {
        Self::new(amplitude, center, Matrix3::identity() * temperature)
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// `int A exp(...) dv = A (2 pi)^{3/2} sqrt(det C)`.
    pub fn mass(&self) -> f64 {
        self.amplitude * (2.0 * std::f64::consts::PI).powf(1.5) * self.covariance.determinant().sqrt()
    }
}

/// Standard tail cut: eight standard deviations.
pub const TAIL_SIGMAS: f64 = 8.0;

impl MomentumDensity for Gaussian {
    fn value(&self, v: &Vec3) -> f64 {
        let d = v - self.center;
        self.amplitude * (-0.5 * d.dot(&(self.precision * d))).exp()
    }

    fn envelope(&self) -> Envelope {
        Envelope { center: self.center, radius: TAIL_SIGMAS * self.sigma_max }
    }

    fn spherical_center(&self) -> Option<Vec3> {
        self.isotropic_gaussian().map(|p| p.0)
    }

    fn isotropic_gaussian(&self) -> Option<(Vec3, f64)> {
        let d = self.covariance[(0, 0)];
        (self.covariance == Matrix3::identity() * d).then_some((self.center, d))
    }

    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

impl Differentiable for Gaussian {
    fn gradient(&self, v: &Vec3) -> Vec3 {
        -(self.precision * (v - self.center)) * self.value(v)
    }
}

/// Finite sum of Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<Gaussian>,
}

impl MomentumDensity for GaussianMixture {
    fn value(&self, v: &Vec3) -> f64 {
        self.components.iter().map(|g| g.value(v)).sum()
    }

    fn envelope(&self) -> Envelope {
        let mut it = self.components.iter().map(|g| g.envelope());
        let Some(first) = it.next() else {
            return Zero.envelope();
        };
        it.fold(first, |acc, e| {
            let d = (e.center - acc.center).norm();
            if d + e.radius <= acc.radius {
                acc
            } else if d + acc.radius <= e.radius {
                e
            } else {
                let radius = 0.5 * (d + acc.radius + e.radius);
                let center = acc.center + (e.center - acc.center) * ((radius - acc.radius) / d);
                Envelope { center, radius }
            }
        })
    }

    fn spherical_center(&self) -> Option<Vec3> {
        let first = self.components.first()?.spherical_center()?;
        self.components
            .iter()
            .all(|g| g.spherical_center() == Some(first))
            .then_some(first)
    }

    fn isotropic_gaussian(&self) -> Option<(Vec3, f64)> {
        match self.components.as_slice() {
            [g] => g.isotropic_gaussian(),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.components.iter().all(|g| g.is_zero())
    }
}

impl Differentiable for GaussianMixture {
    fn gradient(&self, v: &Vec3) -> Vec3 {
        self.components.iter().map(|g| g.gradient(v)).sum()
    }
}

/// Juttner equilibrium `A exp(-v0 / T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Juttner {
    pub amplitude: f64,
    pub temperature: f64,
    pub c: f64,
}

impl Juttner {
    pub fn new(amplitude: f64, temperature: f64, c: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::Parameter(format!("temperature must be positive, got {temperature}")));
        }
        Ok(Self { amplitude, temperature, c })
    }
}

impl MomentumDensity for Juttner {
    fn value(&self, v: &Vec3) -> f64 {
        // the rest energy is factored out to keep values O(amplitude)
        let k = crate::kinematics::kinetic_energy(v, self.c);
        self.amplitude * (-k / self.temperature).exp()
    }

    fn envelope(&self) -> Envelope {
        // exp(-(v0 - c)/T) < e^{-32} beyond this radius
        let k = 32.0 * self.temperature;
        Envelope { center: Vec3::zeros(), radius: (k * k + 2.0 * k * self.c).sqrt() }
    }

    fn spherical_center(&self) -> Option<Vec3> {
        Some(Vec3::zeros())
    }

    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

impl Differentiable for Juttner {
    fn gradient(&self, v: &Vec3) -> Vec3 {
        -v * (self.value(v) / (self.temperature * energy(v, self.c)))
    }
}

/// The zero density.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Zero;

impl MomentumDensity for Zero {
    fn value(&self, _: &Vec3) -> f64 {
        0.0
    }

    fn envelope(&self) -> Envelope {
        Envelope { center: Vec3::zeros(), radius: 1.0 }
    }

    fn spherical_center(&self) -> Option<Vec3> {
        Some(Vec3::zeros())
    }

    fn is_zero(&self) -> bool {
        true
    }
}

impl Differentiable for Zero {
    fn gradient(&self, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// `v0 d_{v_j} f`, the first-order lift used by the chain rule.
pub struct EnergyDerivative<'a, F: Differentiable> {
    pub inner: &'a F,
    pub axis: usize,
    pub c: f64,
}

impl<F: Differentiable> MomentumDensity for EnergyDerivative<'_, F> {
    fn value(&self, v: &Vec3) -> f64 {
        energy(v, self.c) * self.inner.gradient(v)[self.axis]
    }

    fn envelope(&self) -> Envelope {
        self.inner.envelope()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

/// `(v_j d_{v_i} - v_i d_{v_j}) f`.
pub struct RotationDerivative<'a, F: Differentiable> {
    pub inner: &'a F,
    pub i: usize,
    pub j: usize,
}

impl<F: Differentiable> MomentumDensity for RotationDerivative<'_, F> {
    fn value(&self, v: &Vec3) -> f64 {
        let g = self.inner.gradient(v);
        v[self.j] * g[self.i] - v[self.i] * g[self.j]
    }

    fn envelope(&self) -> Envelope {
        self.inner.envelope()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero() || self.i == self.j
    }
}

/// Free-streamed phase-space profile `A(x - t vhat) M(v)` restricted to a
/// fixed `(t, x)`, with `A` an isotropic spatial Gaussian of width `width`.
pub struct Streamed<'a, M: Differentiable> {
    pub momentum: &'a M,
    pub width: f64,
    pub t: f64,
    pub x: Vec3,
    pub c: f64,
}

impl<M: Differentiable> Streamed<'_, M> {
    fn spatial(&self, v: &Vec3) -> f64 {
        let y = self.x - crate::kinematics::rel_velocity(v, self.c) * self.t;
        (-0.5 * y.norm_squared() / (self.width * self.width)).exp()
    }
}

impl<M: Differentiable> MomentumDensity for Streamed<'_, M> {
    fn value(&self, v: &Vec3) -> f64 {
        self.spatial(v) * self.momentum.value(v)
    }

    fn envelope(&self) -> Envelope {
        let base = self.momentum.envelope();
        if self.t <= 0.0 {
            return base;
        }
        // the profile lives where |vhat - x/t| < 8 width / t
        let y = self.x / self.t;
        let span = TAIL_SIGMAS * self.width / self.t;
        if y.norm() + span >= 0.999 * self.c {
            return base;
        }
        let check = |p: Vec3| crate::kinematics::check_map(&p, self.c).expect("inside the light ball");
        let centre = check(y);
        let mut radius: f64 = 0.0;
        for dir in crate::quadrature::SphereRule::product(4, 8).nodes() {
            radius = radius.max((check(y + dir.0 * span) - centre).norm());
        }
        radius *= 1.05;
        if radius < base.radius {
            Envelope { center: centre, radius }
        } else {
            base
        }
    }
}

impl<M: Differentiable> Differentiable for Streamed<'_, M> {
    fn gradient(&self, v: &Vec3) -> Vec3 {
        let c = self.c;
        let v0 = energy(v, c);
        let y = self.x - v * (c * self.t / v0);
        let a = self.spatial(v);
        // d vhat_i / d v_j = (c / v0) (delta_ij - v_i v_j / v0^2)
        let dy_dv = |w: &Vec3| -> Vec3 { (w - v * (v.dot(w) / (v0 * v0))) * (c / v0) };
        let grad_a = dy_dv(&y) * (a * self.t / (self.width * self.width));
        grad_a * self.momentum.value(v) + self.momentum.gradient(v) * a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: &dyn MomentumDensity, v: &Vec3, h: f64) -> Vec3 {
        let mut g = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            g[k] = (f.value(&(v + e)) - f.value(&(v - e))) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gaussian_gradient_matches_differences() {
        let cov = Matrix3::new(1.0, 0.2, 0.0, 0.2, 0.8, 0.1, 0.0, 0.1, 1.3);
        let g = Gaussian::new(1.5, Vec3::new(0.3, -0.2, 0.5), cov).unwrap();
        let v = Vec3::new(0.7, 0.1, -0.4);
        let e1 = (fd_gradient(&g, &v, 1e-3) - g.gradient(&v)).norm();
        let e2 = (fd_gradient(&g, &v, 5e-4) - g.gradient(&v)).norm();
        assert!(e1 < 1e-6 && (e1 / e2 - 4.0).abs() < 0.2, "{e1} {e2}");
    }

    #[test]
    fn juttner_and_streamed_gradients() {
        let j = Juttner::new(1.0, 0.7, 2.0).unwrap();
        let v = Vec3::new(0.4, -0.9, 0.3);
        assert!((fd_gradient(&j, &v, 1e-5) - j.gradient(&v)).norm() < 1e-9);
        let m = Gaussian::isotropic(1.0, Vec3::zeros(), 1.0).unwrap();
        let s = Streamed { momentum: &m, width: 1.0, t: 3.0, x: Vec3::new(0.5, 0.2, 0.0), c: 1.0 };
        assert!((fd_gradient(&s, &v, 1e-5) - s.gradient(&v)).norm() < 1e-8);
    }

    #[test]
    fn gaussian_mass() {
        let g = Gaussian::isotropic(2.0, Vec3::zeros(), 0.5).unwrap();
        let expected = 2.0 * (std::f64::consts::PI).powf(1.5);
        assert!((g.mass() - expected).abs() < 1e-12);
        assert!(g.is_isotropic());
    }
}
