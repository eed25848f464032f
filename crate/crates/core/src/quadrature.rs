//! Gauss rules on intervals and product rules on the unit sphere.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

use crate::{Error, Result, Vec3};

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Affine image of a rule on `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule1d {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        Rule1d {
            nodes: self.nodes.iter().map(|x| m + h * x).collect(),
            weights: self.weights.iter().map(|w| w * h).collect(),
        }
    }

    fn append(&mut self, other: Rule1d) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}

/// Gauss-Legendre rule on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Rule1d {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule1d { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss-Jacobi rule on `[-1, 1]` for the weight `(1 - x)^a (1 + x)^b`,
/// computed with the Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<Rule1d> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::Parameter(format!("Jacobi exponents must exceed -1, got ({a}, {b})")));
    }
    if n == 0 {
        return Ok(Rule1d { nodes: vec![], weights: vec![] });
    }
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let t = 2.0 * m + ab;
            let beta = 4.0 * m * (m + a) * (m + b) * (m + ab) / (t * t * (t + 1.0) * (t - 1.0));
            jac[(k, k + 1)] = beta.sqrt();
            jac[(k + 1, k)] = beta.sqrt();
        }
    }
    let mu0 = (ab + 1.0).exp2() * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Lanczos approximation of the gamma function, accurate to ~1e-15 for
/// positive arguments.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &ci) in C.iter().enumerate().skip(1) {
        a += ci / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Composite Gauss-Legendre rule with `panels` equal panels on `[a, b]`.
pub fn composite_legendre(n: usize, panels: usize, a: f64, b: f64) -> Rule1d {
    let base = gauss_legendre(n);
    let mut out = Rule1d { nodes: Vec::new(), weights: Vec::new() };
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        out.append(base.mapped(a + p as f64 * h, a + (p + 1) as f64 * h));
    }
    out
}

/// Radial rule on `(0, U]` for integrands `r^p phi(r)` with smooth `phi`.
///
/// The weights absorb `r^p`, so `integrate` expects `phi` only.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRule {
    pub power: f64,
    pub radius: f64,
    pub rule: Rule1d,
}

impl RadialRule {
    pub fn jacobi(n: usize, power: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Parameter(format!("radial truncation must be positive, got {radius}")));
        }
        let base = gauss_jacobi(n, 0.0, power)?;
        let half = 0.5 * radius;
        let scale = half.powf(power + 1.0);
        Ok(Self {
            power,
            radius,
            rule: Rule1d {
                nodes: base.nodes.iter().map(|x| half * (1.0 + x)).collect(),
                weights: base.weights.iter().map(|w| w * scale).collect(),
            },
        })
    }

    /// Jacobi rule on the first panel `(0, radius/panels]` followed by
    /// Gauss-Legendre panels carrying the weight `r^p` explicitly.
    pub fn composite(n: usize, panels: usize, power: f64, radius: f64) -> Result<Self> {
        let panels = panels.max(1);
        let h = radius / panels as f64;
        let mut rule = Self::jacobi(n, power, h)?.rule;
        if panels > 1 {
            let gl = composite_legendre(n, panels - 1, h, radius);
            rule.append(Rule1d {
                weights: gl.nodes.iter().zip(&gl.weights).map(|(r, w)| w * r.powf(power)).collect(),
                nodes: gl.nodes,
            });
        }
        Ok(Self { power, radius, rule })
    }

    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.rule.integrate(phi)
    }
}

/// Orthonormal pair completing `axis` to a right-handed frame.
///
/// The map is the rotation taking `e_z` to `axis`, which is smooth away
/// from `axis = -e_z`.
pub fn frame(axis: &Vec3) -> (Vec3, Vec3) {
    let (a, b, c) = (axis.x, axis.y, axis.z);
    if c > -0.999_999 {
        let k = 1.0 / (1.0 + c);
        (
            Vec3::new(1.0 - a * a * k, -a * b * k, -a),
            Vec3::new(-a * b * k, 1.0 - b * b * k, -b),
        )
    } else {
        let k = 1.0 / (1.0 - c);
        (
            Vec3::new(1.0 - a * a * k, -a * b * k, a),
            Vec3::new(a * b * k, b * b * k - 1.0, -b),
        )
    }
}

/// Product rule on the unit sphere: Gauss-Legendre in `cos(theta)` about a
/// polar axis and the trapezoidal rule in the azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    /// `(cos theta, sin theta, weight_theta)`.
    pub polar: Vec<(f64, f64, f64)>,
    /// `(cos phi, sin phi)`.
    pub azimuth: Vec<(f64, f64)>,
    pub azimuth_weight: f64,
}

impl SphereRule {
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        Self::from_polar(&gauss_legendre(n_theta), n_phi)
    }

    /// Product rule with an arbitrary rule for `cos(theta)` on `[-1, 1]`.
    pub fn from_polar(polar: &Rule1d, n_phi: usize) -> Self {
        let polar = polar
            .nodes
            .iter()
            .zip(&polar.weights)
            .map(|(&x, &w)| (x, (1.0 - x * x).max(0.0).sqrt(), w))
            .collect();
        let azimuth = (0..n_phi)
            .map(|k| {
                let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                (phi.cos(), phi.sin())
            })
            .collect();
        Self { polar, azimuth, azimuth_weight: 2.0 * PI / n_phi as f64 }
    }

    pub fn len(&self) -> usize {
        self.polar.len() * self.azimuth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes and weights about the polar axis `e_z`.
    pub fn nodes(&self) -> Vec<(Vec3, f64)> {
        self.oriented(&Vec3::z())
    }

    /// Nodes and weights about a unit polar axis.
    pub fn oriented(&self, axis: &Vec3) -> Vec<(Vec3, f64)> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_oriented(axis, |w, o| out.push((o, w)));
        out
    }

    /// Visit `(weight, node)` about a unit polar axis without allocating.
    #[inline]
    pub fn for_each_oriented(&self, axis: &Vec3, mut f: impl FnMut(f64, Vec3)) {
        let (e1, e2) = frame(axis);
        for &(ct, st, wt) in &self.polar {
            let w = wt * self.azimuth_weight;
            let base = axis * ct;
            for &(cp, sp) in &self.azimuth {
                f(w, base + (e1 * cp + e2 * sp) * st);
            }
        }
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        let mut s = 0.0;
        self.for_each_oriented(&Vec3::z(), |w, o| s += w * f(&o));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(10);
        for k in 0..20 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((r.integrate(|x| x.powi(k)) - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn jacobi_reproduces_moments() {
        for &b in &[-0.9, -0.5, 0.0, 1.0, 2.5] {
            let r = gauss_jacobi(12, 0.0, b).unwrap();
            for k in 0..12 {
                // int_{-1}^{1} (1 + x)^{b + k} dx
                let exact = 2f64.powf(b + k as f64 + 1.0) / (b + k as f64 + 1.0);
                let got = r.integrate(|x| (1.0 + x).powi(k));
                assert!((got - exact).abs() < 1e-12 * exact, "b={b} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn radial_rule_power() {
        for &g in &[0.0, -0.5, -1.0, -1.9] {
            let rr = RadialRule::jacobi(8, g + 1.0, 3.0).unwrap();
            let exact = 3f64.powf(g + 2.0) / (g + 2.0);
            assert!((rr.integrate(|_| 1.0) - exact).abs() < 1e-12 * exact);
            let rc = RadialRule::composite(8, 4, g + 1.0, 3.0).unwrap();
            assert!((rc.integrate(|_| 1.0) - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn sphere_weights_and_frame() {
        let s = SphereRule::product(12, 24);
        let total: f64 = s.nodes().iter().map(|p| p.1).sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        for axis in [Vec3::new(0.3, -0.4, 0.5).normalize(), -Vec3::z(), Vec3::x()] {
            let (e1, e2) = frame(&axis);
            assert!(e1.dot(&e2).abs() < 1e-14 && e1.dot(&axis).abs() < 1e-14);
            assert!((e1.cross(&e2) - axis).norm() < 1e-14);
            let m: f64 = s.oriented(&axis).iter().map(|(o, w)| w * o.x * o.x).sum();
            assert!((m - 4.0 * PI / 3.0).abs() < 1e-12);
        }
    }
}
