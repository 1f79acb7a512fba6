//! Second-order forward-mode dual numbers.
//!
//! A [`Jet2`] carries a value together with its first and second derivative
//! with respect to a single independent variable. Arithmetic propagates all
//! three orders exactly (up to rounding), so curvature and tangent angles
//! never see finite-difference noise.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Truncated Taylor jet `(f, f', f'')` of a scalar function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }

    pub const fn constant(v: f64) -> Self {
        Self::new(v, 0.0, 0.0)
    }

    /// The independent variable seeded at `x`.
    pub const fn variable(x: f64) -> Self {
        Self::new(x, 1.0, 0.0)
    }

    /// Composes an outer function `F` with this jet, given `F(v)`, `F'(v)`, `F''(v)`.
    pub fn compose(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self::new(f0, f1 * self.d1, f2 * self.d1 * self.d1 + f1 * self.d2)
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.compose(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.compose(self.v.ln(), r, -r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.compose(s, 0.5 / s, -0.25 / (s * self.v))
    }

    /// `self^p` for a constant exponent.
    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::constant(1.0);
        }
        let x = self.v;
        if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
            let n = p as i32;
            let f1 = if n == 1 { 1.0 } else { p * x.powi(n - 1) };
            let f2 = match n {
                1 => 0.0,
                2 => 2.0,
                _ => p * (p - 1.0) * x.powi(n - 2),
            };
            self.compose(x.powi(n), f1, f2)
        } else {
            self.compose(
                x.powf(p),
                p * x.powf(p - 1.0),
                p * (p - 1.0) * x.powf(p - 2.0),
            )
        }
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }
}

impl Div for Jet2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d1, -self.d2)
    }
}
