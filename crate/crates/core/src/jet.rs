//! Second-order forward-mode jets over the phase variables
//! `(t, x1, x2, x3, v1, v2, v3)`.
//!
//! A [`Jet2`] carries a value, its gradient and its Hessian; arithmetic
//! propagates all three exactly, so any closed-form expression built from
//! the operations below yields exact first and second derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of phase variables.
pub const DIM: usize = 7;

/// Index of `t`.
pub const T: usize = 0;

/// Index of `x_i` (zero-based `i`).
#[inline]
pub const fn xi(i: usize) -> usize {
    1 + i
}

/// Index of `v_i` (zero-based `i`).
#[inline]
pub const fn vi(i: usize) -> usize {
    4 + i
}

/// Value, gradient and Hessian of a scalar function of the phase variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; DIM],
    pub hess: [[f64; DIM]; DIM],
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Self { value, grad: [0.0; DIM], hess: [[0.0; DIM]; DIM] }
    }

    /// The coordinate `z_k` evaluated at `value`.
    pub fn variable(k: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.grad[k] = 1.0;
        j
    }

    /// All seven coordinates at the point `z`.
    pub fn coordinates(z: &[f64; DIM]) -> [Jet2; DIM] {
        std::array::from_fn(|k| Self::variable(k, z[k]))
    }

    /// Compose with a scalar function given `(g, g', g'')` at `self.value`.
    #[inline]
    pub fn chain(&self, g: f64, d1: f64, d2: f64) -> Self {
        let mut out = Self::constant(g);
        for a in 0..DIM {
            out.grad[a] = d1 * self.grad[a];
            for b in 0..DIM {
                out.hess[a][b] = d1 * self.hess[a][b] + d2 * self.grad[a] * self.grad[b];
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn powi(&self, n: i32) -> Self {
        let x = self.value;
        let nf = n as f64;
        let d2 = if n == 0 || n == 1 { 0.0 } else { nf * (nf - 1.0) * x.powi(n - 2) };
        self.chain(x.powi(n), if n == 0 { 0.0 } else { nf * x.powi(n - 1) }, d2)
    }

    pub fn powf(&self, p: f64) -> Self {
        let x = self.value;
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = *self;
        out.value *= k;
        for a in 0..DIM {
            out.grad[a] *= k;
            for b in 0..DIM {
                out.hess[a][b] *= k;
            }
        }
        out
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, o: Jet2) -> Jet2 {
        self.value += o.value;
        for a in 0..DIM {
            self.grad[a] += o.grad[a];
            for b in 0..DIM {
                self.hess[a][b] += o.hess[a][b];
            }
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.value * o.value);
        for a in 0..DIM {
            out.grad[a] = self.grad[a] * o.value + self.value * o.grad[a];
            for b in 0..DIM {
                out.hess[a][b] = self.hess[a][b] * o.value
                    + self.grad[a] * o.grad[b]
                    + o.grad[a] * self.grad[b]
                    + self.value * o.hess[a][b];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, k: f64) -> Jet2 {
        self.value += k;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(mut self, k: f64) -> Jet2 {
        self.value -= k;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, k: f64) -> Jet2 {
        self.scale(k)
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    fn div(self, k: f64) -> Jet2 {
        self.scale(1.0 / k)
    }
}

impl Add<Jet2> for f64 {
    type Output = Jet2;
    fn add(self, j: Jet2) -> Jet2 {
        j + self
    }
}

impl Sub<Jet2> for f64 {
    type Output = Jet2;
    fn sub(self, j: Jet2) -> Jet2 {
        (-j) + self
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j.scale(self)
    }
}
