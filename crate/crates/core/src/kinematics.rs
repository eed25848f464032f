//! Relativistic two-body kinematics with unit masses.
//!
//! Differences of energies are always formed through
//! `v0 - u0 = (v - u).(v + u) / (v0 + u0)` so that the invariants stay
//! accurate when `c` is large compared with the momenta.

use crate::{Error, Result, Vec3};

/// Tolerance on `| |omega| - 1 |` accepted by [`post_collision`].
pub const OMEGA_TOLERANCE: f64 = 1e-9;

/// `v0 = sqrt(c^2 + |v|^2)`.
#[inline]
pub fn energy(v: &Vec3, c: f64) -> f64 {
    (c * c + v.norm_squared()).sqrt()
}

/// Kinetic energy `v0 - c`, evaluated without cancellation.
#[inline]
pub fn kinetic_energy(v: &Vec3, c: f64) -> f64 {
    let n2 = v.norm_squared();
    n2 / ((c * c + n2).sqrt() + c)
}

/// Relativistic velocity `c v / v0`.
#[inline]
pub fn rel_velocity(v: &Vec3, c: f64) -> Vec3 {
    v * (c / energy(v, c))
}

/// Inverse of [`rel_velocity`] on the open ball `|y| < c`.
pub fn check_map(y: &Vec3, c: f64) -> Result<Vec3> {
    let q = y.norm_squared() / (c * c);
    if !(q < 1.0) {
        return Err(Error::Domain(format!(
            "check map needs |y| < c, got |y| = {} with c = {c}",
            y.norm()
        )));
    }
    Ok(y / (1.0 - q).sqrt())
}

/// A momentum together with the speed of light it refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum {
    pub v: Vec3,
    pub c: f64,
}

impl Momentum {
    pub fn new(v: Vec3, c: f64) -> Result<Self> {
        if !(c >= 1.0) {
            return Err(Error::Parameter(format!("speed of light must be >= 1, got {c}")));
        }
        Ok(Self { v, c })
    }

    pub fn energy(&self) -> f64 {
        energy(&self.v, self.c)
    }

    pub fn velocity(&self) -> Vec3 {
        rel_velocity(&self.v, self.c)
    }
}

/// `v0 - u0` computed as `(v - u).(v + u) / (v0 + u0)`.
#[inline]
pub fn energy_difference(v: &Vec3, u: &Vec3, c: f64) -> f64 {
    (v - u).dot(&(v + u)) / (energy(v, c) + energy(u, c))
}

/// Squared relative momentum `g^2 = |v - u|^2 - (v0 - u0)^2`.
#[inline]
pub fn relative_momentum_sq(v: &Vec3, u: &Vec3, c: f64) -> f64 {
    let d = v - u;
    let de = d.dot(&(v + u)) / (energy(v, c) + energy(u, c));
    (d.norm_squared() - de * de).max(0.0)
}

/// Relative momentum `g = sqrt(2 (v0 u0 - v.u - c^2))`.
#[inline]
pub fn relative_momentum(v: &Vec3, u: &Vec3, c: f64) -> f64 {
    relative_momentum_sq(v, u, c).sqrt()
}

/// Squared centre-of-momentum energy `s = g^2 + 4 c^2`.
#[inline]
pub fn s_invariant(v: &Vec3, u: &Vec3, c: f64) -> f64 {
    relative_momentum_sq(v, u, c) + 4.0 * c * c
}

/// Moller velocity `c g sqrt(s) / (4 v0 u0)`.
#[inline]
pub fn moller_velocity(v: &Vec3, u: &Vec3, c: f64) -> f64 {
    let g2 = relative_momentum_sq(v, u, c);
    c * g2.sqrt() * (g2 + 4.0 * c * c).sqrt() / (4.0 * energy(v, c) * energy(u, c))
}

/// Precomputed centre-of-momentum data for a pre-collision pair.
#[derive(Debug, Clone, Copy)]
pub struct CollisionPair {
    pub v: Vec3,
    pub u: Vec3,
    pub c: f64,
    pub v0: f64,
    pub u0: f64,
    pub g: f64,
    pub s: f64,
    /// `zeta = (v0 + u0) / sqrt(s)`.
    pub zeta: f64,
    pub v_phi: f64,
    total: Vec3,
    sqrt_s: f64,
    boost: f64,
}

impl CollisionPair {
    pub fn new(v: Vec3, u: Vec3, c: f64) -> Self {
        let v0 = energy(&v, c);
        let u0 = energy(&u, c);
        let total = v + u;
        let d = v - u;
        let de = d.dot(&total) / (v0 + u0);
        let g2 = (d.norm_squared() - de * de).max(0.0);
        let g = g2.sqrt();
        let s = g2 + 4.0 * c * c;
        let sqrt_s = s.sqrt();
        let e = v0 + u0;
        Self {
            v,
            u,
            c,
            v0,
            u0,
            g,
            s,
            zeta: e / sqrt_s,
            v_phi: c * g * sqrt_s / (4.0 * v0 * u0),
            total,
            sqrt_s,
            // (zeta - 1) / |v + u|^2, finite as v + u -> 0
            boost: 1.0 / (sqrt_s * (e + sqrt_s)),
        }
    }

    pub fn sqrt_s(&self) -> f64 {
        self.sqrt_s
    }

    /// Lab-frame image of the unit centre-of-momentum direction `omega`.
    #[inline]
    pub fn half_difference(&self, omega: &Vec3) -> Vec3 {
        (omega + self.total * (self.boost * self.total.dot(omega))) * (0.5 * self.g)
    }

    /// Post-collision momenta for a unit vector `omega` (not re-normalised).
    #[inline]
    pub fn outgoing(&self, omega: &Vec3) -> (Vec3, Vec3) {
        let mid = self.total * 0.5;
        let h = self.half_difference(omega);
        (mid + h, mid - h)
    }

    /// Outgoing energies `v0'` from the closed form
    /// `(v0 + u0)/2 + g/(2 sqrt s) omega.(v + u)`, and `u0'` likewise.
    pub fn outgoing_energies(&self, omega: &Vec3) -> (f64, f64) {
        let mid = 0.5 * (self.v0 + self.u0);
        let h = 0.5 * self.g / self.sqrt_s * omega.dot(&self.total);
        (mid + h, mid - h)
    }
}

fn normalized_omega(omega: &Vec3) -> Result<Vec3> {
    let n = omega.norm();
    if (n - 1.0).abs() > OMEGA_TOLERANCE {
        return Err(Error::Domain(format!("omega must be a unit vector, |omega| = {n}")));
    }
    Ok(omega / n)
}

/// Post-collision momenta `(v', u')` for the scattering direction `omega`.
pub fn post_collision(v: &Vec3, u: &Vec3, omega: &Vec3, c: f64) -> Result<(Vec3, Vec3)> {
    let w = normalized_omega(omega)?;
    Ok(CollisionPair::new(*v, *u, c).outgoing(&w))
}

/// Cosine of the scattering angle between `(v, u)` and `(v', u')`.
pub fn scattering_cosine(v: &Vec3, u: &Vec3, vp: &Vec3, up: &Vec3, c: f64) -> Result<f64> {
    let g2 = relative_momentum_sq(v, u, c);
    if g2 <= 0.0 {
        return Err(Error::Degenerate("scattering angle undefined for g = 0".into()));
    }
    Ok(scattering_cosine_with(v, u, vp, up, c, g2))
}

#[inline]
pub(crate) fn scattering_cosine_with(v: &Vec3, u: &Vec3, vp: &Vec3, up: &Vec3, c: f64, g2: f64) -> f64 {
    let d = v - u;
    let dp = vp - up;
    let de = energy_difference(v, u, c);
    let dep = energy_difference(vp, up, c);
    ((-de * dep + d.dot(&dp)) / g2).clamp(-1.0, 1.0)
}

/// Absolute Jacobian `c^5 t^3 / v0^5` of `v -> x - t vhat`.
pub fn transport_jacobian(v: &Vec3, t: f64, c: f64) -> f64 {
    let r = c / energy(v, c);
    t * t * t * r.powi(5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&Vec3::zeros(), 1.0), 1.0);
        assert!((energy(&Vec3::new(3.0, 4.0, 0.0), 1.0) - 26f64.sqrt()).abs() < 1e-15);
        assert!((energy(&Vec3::new(3.0, 4.0, 0.0), 10.0) - 125f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn check_map_examples() {
        assert_eq!(check_map(&Vec3::zeros(), 3.0).unwrap(), Vec3::zeros());
        let y = check_map(&Vec3::new(0.6, 0.0, 0.0), 1.0).unwrap();
        assert!((y - Vec3::new(0.75, 0.0, 0.0)).norm() < 1e-15);
        assert!(check_map(&Vec3::new(1.0, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn head_on_pair() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let u = -v;
        assert!((relative_momentum(&v, &u, 1.0) - 2.0).abs() < 1e-15);
        assert!((s_invariant(&v, &u, 1.0) - 8.0).abs() < 1e-14);
        assert!((moller_velocity(&v, &u, 1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(relative_momentum(&v, &v, 1.0), 0.0);
        assert_eq!(moller_velocity(&v, &v, 1.0), 0.0);
    }

    #[test]
    fn post_collision_examples() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let u = -v;
        let (vp, up) = post_collision(&v, &u, &Vec3::x(), 1.0).unwrap();
        assert!((vp - v).norm() < 1e-15 && (up - u).norm() < 1e-15);
        let (vp, up) = post_collision(&v, &u, &Vec3::y(), 1.0).unwrap();
        assert!((vp - Vec3::y()).norm() < 1e-15 && (up + Vec3::y()).norm() < 1e-15);
        assert!(post_collision(&v, &u, &Vec3::new(0.0, 1.1, 0.0), 1.0).is_err());
    }

    #[test]
    fn scattering_cosine_examples() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let u = -v;
        assert!((scattering_cosine(&v, &u, &v, &u, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let c = scattering_cosine(&v, &u, &Vec3::y(), &-Vec3::y(), 1.0).unwrap();
        assert!(c.abs() < 1e-15);
        assert!(scattering_cosine(&v, &v, &v, &v, 1.0).is_err());
    }

    #[test]
    fn jacobian_examples() {
        assert!((transport_jacobian(&Vec3::zeros(), 2.0, 3.0) - 8.0).abs() < 1e-14);
        assert_eq!(transport_jacobian(&Vec3::new(1.0, 2.0, 3.0), 0.0, 1.0), 0.0);
    }
}
