//! Complex hyper-dual numbers `a + b e1 + c e2 + d e1 e2` with `e1^2 = e2^2 = 0`.
//!
//! Evaluating a holomorphic expression on `x + e1` in one variable and
//! `y + e2` in another yields the exact mixed derivative in the `e1 e2`
//! slot, with no truncation or cancellation error.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual {
    pub re: C64,
    pub e1: C64,
    pub e2: C64,
    pub e12: C64,
}

impl HyperDual {
    pub fn constant(re: C64) -> Self {
        Self { re, e1: C64::new(0.0, 0.0), e2: C64::new(0.0, 0.0), e12: C64::new(0.0, 0.0) }
    }

    pub fn var1(re: C64) -> Self {
        Self { e1: C64::new(1.0, 0.0), ..Self::constant(re) }
    }

    pub fn var2(re: C64) -> Self {
        Self { e2: C64::new(1.0, 0.0), ..Self::constant(re) }
    }

    /// Lift a scalar function with value `f`, first derivative `df`
    /// and second derivative `d2f` at `self.re`.
    pub fn chain(self, f: C64, df: C64, d2f: C64) -> Self {
        Self { re: f, e1: df * self.e1, e2: df * self.e2, e12: df * self.e12 + d2f * self.e1 * self.e2 }
    }

    pub fn recip(self) -> Self {
        let r = self.re.inv();
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn ln(self) -> Self {
        let r = self.re.inv();
        self.chain(self.re.ln(), r, -r * r)
    }

    pub fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e, e)
    }

    /// Principal power `self^a`.
    pub fn powf(self, a: f64) -> Self {
        let p = self.re.powf(a);
        let r = self.re.inv();
        self.chain(p, a * p * r, a * (a - 1.0) * p * r * r)
    }

    pub fn powi(self, n: i32) -> Self {
        let p = self.re.powi(n);
        let r = self.re.inv();
        let nf = n as f64;
        self.chain(p, nf * p * r, nf * (nf - 1.0) * p * r * r)
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn scale(self, s: C64) -> Self {
        Self { re: self.re * s, e1: self.e1 * s, e2: self.e2 * s, e12: self.e12 * s }
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, e1: self.e1 + o.e1, e2: self.e2 + o.e2, e12: self.e12 + o.e12 }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, e1: self.e1 - o.e1, e2: self.e2 - o.e2, e12: self.e12 - o.e12 }
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re * o.re,
            e1: self.re * o.e1 + self.e1 * o.re,
            e2: self.re * o.e2 + self.e2 * o.re,
            e12: self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Add<f64> for HyperDual {
    type Output = Self;
    fn add(self, s: f64) -> Self {
        Self { re: self.re + s, ..self }
    }
}

impl Sub<f64> for HyperDual {
    type Output = Self;
    fn sub(self, s: f64) -> Self {
        Self { re: self.re - s, ..self }
    }
}

impl Mul<f64> for HyperDual {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }
}

impl Mul<HyperDual> for f64 {
    type Output = HyperDual;
    fn mul(self, h: HyperDual) -> HyperDual {
        h * self
    }
}

impl Sub<HyperDual> for f64 {
    type Output = HyperDual;
    fn sub(self, h: HyperDual) -> HyperDual {
        -h + self
    }
}
