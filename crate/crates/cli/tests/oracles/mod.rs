//! Independent reference solutions used by the integration tests.

use rvmb::fields::{Bump, BumpSum};
use rvmb::Vec3;

fn profile(b: &Bump, r: f64) -> f64 {
    let q = r * r / (b.radius * b.radius);
    if q >= 1.0 {
        0.0
    } else {
        b.amplitude * (1.0 - q).powi(6)
    }
}

/// `int_a^b s phi(|s|) ds` by 8-point Gauss-Legendre on pieces split at
/// `-R, 0, R`, exact for the polynomial bump.
fn moment(b: &Bump, lo: f64, hi: f64) -> f64 {
    const X: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
    const W: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
    let mut cuts = vec![lo, hi];
    for p in [-b.radius, 0.0, b.radius] {
        if p > lo && p < hi {
            cuts.push(p);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (m, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in X.iter().zip(&W) {
            for s in [m - h * x, m + h * x] {
                total += h * wt * s * profile(b, s.abs());
            }
        }
    }
    total
}

/// Radial solution about one bump: leapfrog for `w = r u` on `w_tt = c^2 w_rr`
/// at CFL number one, odd extension through `r = 0`, d'Alembert first step.
fn radial_leapfrog(b0: Option<&Bump>, b1: Option<&Bump>, t: f64, r: f64, c: f64, h_target: f64) -> f64 {
    let n = ((c * t / h_target).ceil() as usize).max(2);
    let h = c * t / n as f64;
    let cells = (r / h).ceil() as usize + n + 4;
    let w0 = |s: f64| b0.map_or(0.0, |b| s * profile(b, s.abs()));
    let mut prev: Vec<f64> = (0..=cells).map(|j| w0(j as f64 * h)).collect();
    let mut cur: Vec<f64> = (0..=cells)
        .map(|j| {
            let s = j as f64 * h;
            let pulse = b1.map_or(0.0, |b| moment(b, s - h, s + h) / (2.0 * c));
            0.5 * (w0(s - h) + w0(s + h)) + pulse
        })
        .collect();
    cur[0] = 0.0;
    for _ in 1..n {
        let mut next = vec![0.0; cells + 1];
        for j in 1..cells {
            next[j] = cur[j + 1] + cur[j - 1] - prev[j];
        }
        prev = cur;
        cur = next;
    }
    // odd extension for the stencil at the origin
    let w = |j: isize| if j < 0 { -cur[(-j) as usize] } else { cur[j as usize] };
    if r < h {
        return w(1) / h;
    }
    let k = (r / h).floor() as isize;
    let s = r / h - k as f64;
    // cubic Lagrange through k-1 .. k+2
    let l = [-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0, -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0];
    let wr: f64 = (0..4).map(|i| l[i] * w(k - 1 + i as isize)).sum();
    wr / r
}

/// Free wave with data `u(0) = f0`, `d_t u(0) = f1`, by superposing radial
/// finite-difference solutions about each bump center.
pub fn wave_fd(f0: &BumpSum, f1: &BumpSum, t: f64, x: &Vec3, c: f64) -> f64 {
    let h = 2e-3;
    f0.0.iter().map(|b| radial_leapfrog(Some(b), None, t, (x - b.center).norm(), c, h)).sum::<f64>()
        + f1.0.iter().map(|b| radial_leapfrog(None, Some(b), t, (x - b.center).norm(), c, h)).sum::<f64>()
}
