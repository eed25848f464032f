//! Closed-form references written independently of the library code.
#![allow(dead_code)]

use rvmb::Vec3;

/// Classical elastic collision of equal masses: `v' = (v + u)/2 + |v - u| omega / 2`.
pub fn classical_elastic(v: &Vec3, u: &Vec3, omega: &Vec3) -> (Vec3, Vec3) {
    let mid = (v + u) * 0.5;
    let h = omega * (0.5 * (v - u).norm());
    (mid + h, mid - h)
}

/// `sqrt(c^2 + |v|^2)`.
pub fn v0(v: &Vec3, c: f64) -> f64 {
    (c * c + v.norm_squared()).sqrt()
}

/// Even antiderivative of `s A (1 - s^2 / R^2)^6`.
fn bump_moment(a: f64, radius: f64, s: f64) -> f64 {
    let q = 1.0 - s * s / (radius * radius);
    if q <= 0.0 {
        0.0
    } else {
        -a * radius * radius / 14.0 * q.powi(7)
    }
}

fn bump(a: f64, radius: f64, s: f64) -> f64 {
    let q = 1.0 - s * s / (radius * radius);
    if q <= 0.0 {
        0.0
    } else {
        a * q.powi(6)
    }
}

/// d'Alembert solution of the radial wave equation at distance `r > 0` from
/// the bump center, data `u(0) = bump` (`initial_value`) or `d_t u(0) = bump`.
pub fn radial_wave(a: f64, radius: f64, r: f64, t: f64, c: f64, initial_value: bool) -> f64 {
    let (p, m) = (r + c * t, r - c * t);
    if initial_value {
        (p * bump(a, radius, p) + m * bump(a, radius, m.abs())) / (2.0 * r)
    } else {
        (bump_moment(a, radius, p) - bump_moment(a, radius, m.abs())) / (2.0 * c * r)
    }
}

/// Moments `(mass, momentum, energy)` of `exp(-|v - a|^2 / (2 T))` in the
/// Newtonian normalisation, for sanity checks of samplers.
pub fn gaussian_mass(amplitude: f64, temperature: f64) -> f64 {
    amplitude * (2.0 * std::f64::consts::PI * temperature).powf(1.5)
}
