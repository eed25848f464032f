//! The eleven `c`-dependent commuting vector fields and their complete lifts.
//!
//! On `(t, x)`:
//!
//! ```text
//! c^-1 d_t,  d_{x_i},  S = c^-1 (t d_t + x . grad_x),
//! Omega_i = t d_{x_i} + c^-2 x_i d_t,  Omega_jk = x_j d_{x_k} - x_k d_{x_j}
//! ```
//!
//! The lifts add `(v0 / c) d_{v_i}` to the boosts and
//! `v_j d_{v_k} - v_k d_{v_j}` to the rotations. Every field is linear in
//! the derivatives, so it is represented by its coefficient vector `a(z)`
//! and Jacobian `Da(z)` on the phase variables `z = (t, x, v)`.

use crate::fields::NullFrame;
use crate::jet::{vi, xi, Jet2, DIM, T};
use crate::kinematics::energy;
use crate::{Error, Result, Vec3};

/// Generator tag without the lift flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `c^-1 d_t`
    Dt,
    /// `d_{x_i}`, zero-based `i`.
    Dx(usize),
    /// Scaling `S`.
    S,
    /// Boost `Omega_i`, zero-based `i`.
    Boost(usize),
    /// Rotation `Omega_jk` with `j < k`.
    Rotation(usize, usize),
}

impl Generator {
    /// The eleven generators in table order.
    pub const ALL: [Generator; 11] = [
        Generator::Dt,
        Generator::Dx(0),
        Generator::Dx(1),
        Generator::Dx(2),
        Generator::S,
        Generator::Boost(0),
        Generator::Boost(1),
        Generator::Boost(2),
        Generator::Rotation(0, 1),
        Generator::Rotation(0, 2),
        Generator::Rotation(1, 2),
    ];

    pub fn name(&self) -> String {
        match *self {
            Generator::Dt => "Dt".into(),
            Generator::Dx(i) => format!("Dx{}", i + 1),
            Generator::S => "S".into(),
            Generator::Boost(i) => format!("Omega{}", i + 1),
            Generator::Rotation(j, k) => format!("Omega{}{}", j + 1, k + 1),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.name() == name)
            .ok_or_else(|| Error::Parameter(format!("unknown vector field {name:?}")))
    }

    /// Scaling, boosts and rotations.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self, Generator::S | Generator::Boost(_) | Generator::Rotation(..))
    }

    pub fn lifted(self) -> VectorFieldId {
        VectorFieldId { tag: self, lifted: true }
    }

    pub fn unlifted(self) -> VectorFieldId {
        VectorFieldId { tag: self, lifted: false }
    }
}

/// `(H, T)`: numbers of homogeneous and translation fields in a word.
pub fn word_counts(word: &[Generator]) -> (usize, usize) {
    let h = word.iter().filter(|g| g.is_homogeneous()).count();
    (h, word.len() - h)
}

/// A generator together with the choice between `Z` and its lift `Z^`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VectorFieldId {
    pub tag: Generator,
    pub lifted: bool,
}

impl VectorFieldId {
    pub fn name(&self) -> String {
        if self.lifted {
            format!("{}^", self.tag.name())
        } else {
            self.tag.name()
        }
    }
}

/// Coefficients `a` and Jacobian `Da[m][n] = d a_m / d z_n`.
type Coefficients = ([f64; DIM], [[f64; DIM]; DIM]);

fn coefficients(id: VectorFieldId, z: &[f64; DIM], c: f64) -> Coefficients {
    let mut a = [0.0; DIM];
    let mut da = [[0.0; DIM]; DIM];
    match id.tag {
        Generator::Dt => a[T] = 1.0 / c,
        Generator::Dx(i) => a[xi(i)] = 1.0,
        Generator::S => {
            a[T] = z[T] / c;
            da[T][T] = 1.0 / c;
            for i in 0..3 {
                a[xi(i)] = z[xi(i)] / c;
                da[xi(i)][xi(i)] = 1.0 / c;
            }
        }
        Generator::Boost(i) => {
            a[xi(i)] = z[T];
            a[T] = z[xi(i)] / (c * c);
            da[xi(i)][T] = 1.0;
            da[T][xi(i)] = 1.0 / (c * c);
            if id.lifted {
                let v = Vec3::new(z[vi(0)], z[vi(1)], z[vi(2)]);
                let v0 = energy(&v, c);
                a[vi(i)] = v0 / c;
                for k in 0..3 {
                    da[vi(i)][vi(k)] = v[k] / (v0 * c);
                }
            }
        }
        Generator::Rotation(j, k) => {
            a[xi(k)] = z[xi(j)];
            a[xi(j)] = -z[xi(k)];
            da[xi(k)][xi(j)] = 1.0;
            da[xi(j)][xi(k)] = -1.0;
            if id.lifted {
                a[vi(k)] = z[vi(j)];
                a[vi(j)] = -z[vi(k)];
                da[vi(k)][vi(j)] = 1.0;
                da[vi(j)][vi(k)] = -1.0;
            }
        }
    }
    (a, da)
}

/// Coefficients of `v0 T0 = v0 d_t + c v . grad_x`.
fn transport_coefficients(z: &[f64; DIM], c: f64) -> Coefficients {
    let v = Vec3::new(z[vi(0)], z[vi(1)], z[vi(2)]);
    let v0 = energy(&v, c);
    let mut a = [0.0; DIM];
    let mut da = [[0.0; DIM]; DIM];
    a[T] = v0;
    for k in 0..3 {
        a[xi(k)] = c * v[k];
        da[T][vi(k)] = v[k] / v0;
        da[xi(k)][vi(k)] = c;
    }
    (a, da)
}

/// A function of `(t, x, v)` at one point with exact first and, optionally,
/// second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseJet {
    pub point: [f64; DIM],
    pub value: f64,
    pub grad: [f64; DIM],
    pub hess: Option<[[f64; DIM]; DIM]>,
}

impl PhaseJet {
    pub fn from_jet(point: [f64; DIM], j: &Jet2) -> Self {
        Self { point, value: j.value, grad: j.grad, hess: Some(j.hess) }
    }

    /// Evaluate `f` on coordinate jets at `point`.
    pub fn from_fn(point: [f64; DIM], f: impl Fn(&[Jet2; DIM]) -> Jet2) -> Self {
        Self::from_jet(point, &f(&Jet2::coordinates(&point)))
    }

    /// Central-difference gradient and Hessian with step `h`.
    pub fn finite_difference(point: [f64; DIM], h: f64, f: impl Fn(&[f64; DIM]) -> f64) -> Self {
        let at = |shifts: &[(usize, f64)]| {
            let mut z = point;
            for &(k, s) in shifts {
                z[k] += s;
            }
            f(&z)
        };
        let f0 = f(&point);
        let mut grad = [0.0; DIM];
        let mut hess = [[0.0; DIM]; DIM];
        for a in 0..DIM {
            let (p, m) = (at(&[(a, h)]), at(&[(a, -h)]));
            grad[a] = (p - m) / (2.0 * h);
            hess[a][a] = (p - 2.0 * f0 + m) / (h * h);
            for b in 0..a {
                let d = at(&[(a, h), (b, h)]) - at(&[(a, h), (b, -h)]) - at(&[(a, -h), (b, h)]) + at(&[(a, -h), (b, -h)]);
                hess[a][b] = d / (4.0 * h * h);
                hess[b][a] = hess[a][b];
            }
        }
        Self { point, value: f0, grad, hess: Some(hess) }
    }

    pub fn first_order(&self) -> Self {
        Self { hess: None, ..*self }
    }

    pub fn t(&self) -> f64 {
        self.point[T]
    }

    pub fn x(&self) -> Vec3 {
        Vec3::new(self.point[xi(0)], self.point[xi(1)], self.point[xi(2)])
    }

    pub fn v(&self) -> Vec3 {
        Vec3::new(self.point[vi(0)], self.point[vi(1)], self.point[vi(2)])
    }

    fn hessian(&self, what: &str) -> Result<&[[f64; DIM]; DIM]> {
        self.hess.as_ref().ok_or_else(|| Error::MissingDerivative(what.into()))
    }
}

#[inline]
fn dot(a: &[f64; DIM], g: &[f64; DIM]) -> f64 {
    a.iter().zip(g).map(|(p, q)| p * q).sum()
}

/// `X (Y f)` for fields with coefficients `x = (a, Da)` and `y = (b, Db)`.
fn compose(x: &Coefficients, y: &Coefficients, grad: &[f64; DIM], hess: &[[f64; DIM]; DIM]) -> f64 {
    let (a, _) = x;
    let (b, db) = y;
    let mut s = 0.0;
    for n in 0..DIM {
        if a[n] == 0.0 {
            continue;
        }
        let mut d = 0.0;
        for m in 0..DIM {
            d += db[m][n] * grad[m] + b[m] * hess[m][n];
        }
        s += a[n] * d;
    }
    s
}

/// `Z f` (or `Z^ f`) at the jet's point.
pub fn apply(id: VectorFieldId, jet: &PhaseJet, c: f64) -> f64 {
    dot(&coefficients(id, &jet.point, c).0, &jet.grad)
}

/// Constant coefficients `C` with `[Z1, Z2] = sum C_b Z_b`; the same table
/// holds for the lifts.
pub fn commutator_table(a: Generator, b: Generator, c: f64) -> Vec<(Generator, f64)> {
    use Generator::*;
    let index = |g: Generator| Generator::ALL.iter().position(|h| *h == g).unwrap_or(usize::MAX);
    if index(a) > index(b) {
        return commutator_table(b, a, c).into_iter().map(|(g, k)| (g, -k)).collect();
    }
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let mut out: Vec<(Generator, f64)> = Vec::new();
    let mut push = |g: Generator, k: f64| {
        if k != 0.0 {
            out.push((g, k));
        }
    };
    // Omega_{pq} with any index order
    fn rot(p: usize, q: usize, k: f64) -> Option<(Generator, f64)> {
        match p.cmp(&q) {
            std::cmp::Ordering::Less => Some((Generator::Rotation(p, q), k)),
            std::cmp::Ordering::Greater => Some((Generator::Rotation(q, p), -k)),
            std::cmp::Ordering::Equal => None,
        }
    }
    match (a, b) {
        (Dt, S) => push(Dt, 1.0 / c),
        (Dt, Boost(i)) => push(Dx(i), 1.0 / c),
        (Dx(i), S) => push(Dx(i), 1.0 / c),
        (Dx(i), Boost(j)) => push(Dt, delta(i, j) / c),
        (Dx(i), Rotation(j, k)) => {
            push(Dx(k), delta(i, j));
            push(Dx(j), -delta(i, k));
        }
        (Boost(i), Boost(j)) => {
            if let Some((g, k)) = rot(i, j, 1.0 / (c * c)) {
                push(g, k);
            }
        }
        (Boost(i), Rotation(j, k)) => {
            push(Boost(k), delta(i, j));
            push(Boost(j), -delta(i, k));
        }
        (Rotation(p, q), Rotation(r, s)) => {
            // [R_pq, R_rs] = d_qr R_ps - d_pr R_qs - d_qs R_pr + d_ps R_qr
            for (d, x, y) in [(delta(q, r), p, s), (-delta(p, r), q, s), (-delta(q, s), p, r), (delta(p, s), q, r)] {
                if d != 0.0 {
                    if let Some((g, k)) = rot(x, y, d) {
                        push(g, k);
                    }
                }
            }
        }
        _ => {}
    }
    // merge repeated generators
    let mut merged: Vec<(Generator, f64)> = Vec::new();
    for (g, k) in out {
        match merged.iter_mut().find(|(h, _)| *h == g) {
            Some(e) => e.1 += k,
            None => merged.push((g, k)),
        }
    }
    merged.retain(|(_, k)| *k != 0.0);
    merged
}

fn scale_of(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// `|[Z1, Z2] f - sum C_b Z_b f|` relative to `max(1, |Z1 Z2 f|, |Z2 Z1 f|)`.
///
/// Both fields must be lifted or both unlifted.
pub fn commutator_residual(id1: VectorFieldId, id2: VectorFieldId, jet: &PhaseJet, c: f64) -> Result<f64> {
    if id1.lifted != id2.lifted {
        return Err(Error::Parameter("commutator of a lifted and an unlifted field".into()));
    }
    let hess = jet.hessian("commutator_residual")?;
    let x = coefficients(id1, &jet.point, c);
    let y = coefficients(id2, &jet.point, c);
    let xy = compose(&x, &y, &jet.grad, hess);
    let yx = compose(&y, &x, &jet.grad, hess);
    let rhs: f64 = commutator_table(id1.tag, id2.tag, c)
        .into_iter()
        .map(|(g, k)| k * apply(VectorFieldId { tag: g, lifted: id1.lifted }, jet, c))
        .sum();
    Ok((xy - yx - rhs).abs() / scale_of(&[xy, yx]))
}

/// `|[v0 T0, Z^] f|`, or `|[v0 T0, S] f - c^-1 v0 T0 f|` for the scaling,
/// relative to `max(1, |v0 T0 Z^ f|, |Z^ v0 T0 f|)`.
pub fn transport_commutation_residual(tag: Generator, jet: &PhaseJet, c: f64) -> Result<f64> {
    let hess = jet.hessian("transport_commutation_residual")?;
    let tr = transport_coefficients(&jet.point, c);
    let z = coefficients(tag.lifted(), &jet.point, c);
    let tz = compose(&tr, &z, &jet.grad, hess);
    let zt = compose(&z, &tr, &jet.grad, hess);
    let expected = if tag == Generator::S { dot(&tr.0, &jet.grad) / c } else { 0.0 };
    Ok((tz - zt - expected).abs() / scale_of(&[tz, zt]))
}

/// `v0 T0 f`.
pub fn transport(jet: &PhaseJet, c: f64) -> f64 {
    dot(&transport_coefficients(&jet.point, c).0, &jet.grad)
}

/// `|Z^ f - Z f|`; zero for jets that do not depend on `v`.
pub fn lift_defect(tag: Generator, jet: &PhaseJet, c: f64) -> f64 {
    (apply(tag.lifted(), jet, c) - apply(tag.unlifted(), jet, c)).abs()
}

/// Relative distance of `Omega_i^ f` from the Newtonian lift
/// `(t d_{x_i} + d_{v_i}) f`.
pub fn newtonian_boost_defect(i: usize, jet: &PhaseJet, c: f64) -> f64 {
    let rel = apply(Generator::Boost(i).lifted(), jet, c);
    let newton = jet.t() * jet.grad[xi(i)] + jet.grad[vi(i)];
    (rel - newton).abs() / newton.abs().max(1.0)
}

/// Residual of the frame reduction of `e_a' . grad_x f` (1-based `a`):
///
/// ```text
/// e1' . grad = (c S - t d_t) / r
/// e2' . grad =  e3' . (Omega_23, Omega_31, Omega_12) / r
/// e3' . grad = -e2' . (Omega_23, Omega_31, Omega_12) / r
/// ```
///
/// relative to `max(1, |grad_x f|)`.
pub fn null_frame_reduction(a: usize, jet: &PhaseJet, c: f64) -> Result<f64> {
    let x = jet.x();
    let frame = NullFrame::new(&x)?;
    if frame.is_polar() {
        return Err(Error::Degenerate("spherical frame is singular on the polar axis".into()));
    }
    let grad = Vec3::new(jet.grad[xi(0)], jet.grad[xi(1)], jet.grad[xi(2)]);
    let rot = |j, k| apply(Generator::Rotation(j, k).unlifted(), jet, c);
    let omega = Vec3::new(rot(1, 2), -rot(0, 2), rot(0, 1));
    let r = frame.r;
    let (lhs, rhs) = match a {
        1 => (frame.e1.dot(&grad), (c * apply(Generator::S.unlifted(), jet, c) - jet.t() * jet.grad[T]) / r),
        2 => (frame.e2.dot(&grad), frame.e3.dot(&omega) / r),
        3 => (frame.e3.dot(&grad), -frame.e2.dot(&omega) / r),
        _ => return Err(Error::Parameter(format!("frame index must be 1, 2 or 3, got {a}"))),
    };
    Ok((lhs - rhs).abs() / grad.norm().max(1.0))
}

/// Residuals of
///
/// ```text
/// c^-1 d_t = (t S - c^-1 sum x_i Omega_i) / D
/// d_{x_i}  = (t Omega_i - c^-1 x_i S + c^-2 sum_j x_j Omega_ij) / D
/// ```
///
/// with `D = t^2 - |x|^2 / c^2` and unlifted fields; the largest over the
/// four identities, relative to `max(1, |grad_{t,x} f|)`.
pub fn reconstruction_residual(jet: &PhaseJet, c: f64) -> Result<f64> {
    let t = jet.t();
    let x = jet.x();
    let d = t * t - x.norm_squared() / (c * c);
    if d.abs() <= 1e-12 * (t * t).max(1.0) {
        return Err(Error::Degenerate("reconstruction is singular on the light cone".into()));
    }
    let z = |g: Generator| apply(g.unlifted(), jet, c);
    let s = z(Generator::S);
    let boosts = [z(Generator::Boost(0)), z(Generator::Boost(1)), z(Generator::Boost(2))];
    let rot = |i: usize, j: usize| match i.cmp(&j) {
        std::cmp::Ordering::Less => z(Generator::Rotation(i, j)),
        std::cmp::Ordering::Greater => -z(Generator::Rotation(j, i)),
        std::cmp::Ordering::Equal => 0.0,
    };
    let scale = jet.grad[..4].iter().fold(1.0f64, |m, g| m.max(g.abs()));
    let dt = (t * s - (0..3).map(|i| x[i] * boosts[i]).sum::<f64>() / c) / d;
    let mut worst = (jet.grad[T] / c - dt).abs();
    for i in 0..3 {
        let sum: f64 = (0..3).map(|j| x[j] * rot(i, j)).sum();
        let di = (t * boosts[i] - x[i] * s / c + sum / (c * c)) / d;
        worst = worst.max((jet.grad[xi(i)] - di).abs());
    }
    Ok(worst / scale)
}

/// Closed-form test functions with exact jets.
#[derive(Debug, Clone, PartialEq)]
pub enum JetFamily {
    /// `exp(-(z - z0)^T A (z - z0))`.
    Gaussian { center: [f64; DIM], form: [[f64; DIM]; DIM] },
    /// `exp(-|x - x0 - t vhat|^2 / (2 w^2)) exp(-|v - u|^2 / 2)`, a free
    /// transport solution.
    Transported { x0: Vec3, width: f64, u: Vec3 },
    /// `t^2 - |x|^2 / c^2 + t x1 v2 + v0 x3`.
    Polynomial,
    /// `sin(k . z) cos(v1 v3 + x3)`.
    Oscillatory { k: [f64; DIM] },
    /// `t^2 - |x|^2 / c^2`, a function of `(t, x)` only.
    Interval,
}

impl JetFamily {
    pub fn name(&self) -> &'static str {
        match self {
            JetFamily::Gaussian { .. } => "gaussian",
            JetFamily::Transported { .. } => "transported",
            JetFamily::Polynomial => "polynomial",
            JetFamily::Oscillatory { .. } => "oscillatory",
            JetFamily::Interval => "interval",
        }
    }

    pub fn eval(&self, z: &[Jet2; DIM], c: f64) -> Jet2 {
        let v0 = || (z[vi(0)] * z[vi(0)] + z[vi(1)] * z[vi(1)] + z[vi(2)] * z[vi(2)] + c * c).sqrt();
        let interval = || z[T] * z[T] - (z[xi(0)] * z[xi(0)] + z[xi(1)] * z[xi(1)] + z[xi(2)] * z[xi(2)]) / (c * c);
        match self {
            JetFamily::Gaussian { center, form } => {
                let d: [Jet2; DIM] = std::array::from_fn(|k| z[k] - center[k]);
                let mut q = Jet2::constant(0.0);
                for a in 0..DIM {
                    for b in 0..DIM {
                        if form[a][b] != 0.0 {
                            q = q + d[a] * d[b] * form[a][b];
                        }
                    }
                }
                (-q).exp()
            }
            JetFamily::Transported { x0, width, u } => {
                let e = v0();
                let mut q = Jet2::constant(0.0);
                let mut p = Jet2::constant(0.0);
                for i in 0..3 {
                    let y = z[xi(i)] - x0[i] - z[T] * z[vi(i)] * c / e;
                    q = q + y * y;
                    let w = z[vi(i)] - u[i];
                    p = p + w * w;
                }
                (q * (-0.5 / (width * width)) - p * 0.5).exp()
            }
            JetFamily::Polynomial => interval() + z[T] * z[xi(0)] * z[vi(1)] + v0() * z[xi(2)],
            JetFamily::Oscillatory { k } => {
                let mut phase = Jet2::constant(0.0);
                for a in 0..DIM {
                    phase = phase + z[a] * k[a];
                }
                phase.sin() * (z[vi(0)] * z[vi(2)] + z[xi(2)]).cos()
            }
            JetFamily::Interval => interval(),
        }
    }

    pub fn jet(&self, point: [f64; DIM], c: f64) -> PhaseJet {
        PhaseJet::from_fn(point, |z| self.eval(z, c))
    }
}

/// Largest residual of the full lifted commutator table on one jet.
pub fn commutator_table_residual(jet: &PhaseJet, c: f64, lifted: bool) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in Generator::ALL {
        for b in Generator::ALL {
            let id = |g: Generator| VectorFieldId { tag: g, lifted };
            worst = worst.max(commutator_residual(id(a), id(b), jet, c)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for g in Generator::ALL {
            assert_eq!(Generator::parse(&g.name()).unwrap(), g);
        }
        assert!(Generator::parse("Omega4").is_err());
        assert_eq!(word_counts(&[Generator::S, Generator::Dt, Generator::Rotation(0, 1)]), (2, 1));
    }

    #[test]
    fn apply_examples() {
        let c = 2.0;
        let p = [0.7, 0.3, -0.2, 0.5, 0.4, -0.1, 0.9];
        let v0 = PhaseJet::from_fn(p, |z| (z[4] * z[4] + z[5] * z[5] + z[6] * z[6] + c * c).sqrt());
        assert!(apply(Generator::Rotation(0, 1).lifted(), &v0, c).abs() < 1e-15);
        let x1 = PhaseJet::from_fn(p, |z| z[1]);
        assert_eq!(apply(Generator::Boost(0).lifted(), &x1, c), 0.7);
        let s = JetFamily::Interval.jet(p, c);
        let want = 2.0 / c * s.value;
        assert!((apply(Generator::S.lifted(), &s, c) - want).abs() < 1e-15);
    }

    #[test]
    fn self_commutator_is_zero() {
        let jet = JetFamily::Polynomial.jet([0.5, 1.0, 2.0, 3.0, 0.1, 0.2, 0.3], 1.0);
        for g in Generator::ALL {
            assert_eq!(commutator_residual(g.lifted(), g.lifted(), &jet, 1.0).unwrap(), 0.0);
        }
        assert!(commutator_residual(Generator::S.lifted(), Generator::Dt.lifted(), &jet.first_order(), 1.0).is_err());
    }

    #[test]
    fn table_is_antisymmetric() {
        for a in Generator::ALL {
            for b in Generator::ALL {
                let ab = commutator_table(a, b, 3.0);
                let ba = commutator_table(b, a, 3.0);
                assert_eq!(ab.len(), ba.len());
                for (g, k) in ab {
                    assert!(ba.contains(&(g, -k)));
                }
            }
        }
    }
}
