//! Truncated Taylor polynomials in one real variable, used to differentiate
//! defining functions along lines `t ↦ z + t·u`.

use std::ops::{Add, Mul, Neg, Sub};

/// `c[0] + c[1] t + c[2] t² + c[3] t³`, arithmetic truncated at order 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet3 {
    pub c: [f64; 4],
}

impl Jet3 {
    pub const fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
        Self { c: [c0, c1, c2, c3] }
    }

    pub const fn constant(a: f64) -> Self {
        Self::new(a, 0.0, 0.0, 0.0)
    }

    /// `k`-th derivative at `t = 0`.
    pub fn derivative(&self, k: usize) -> f64 {
        const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
        self.c[k] * FACT[k]
    }

    pub fn scale(self, s: f64) -> Self {
        Self { c: self.c.map(|x| x * s) }
    }

    pub fn recip(self) -> Self {
        let [a0, a1, a2, a3] = self.c;
        let b0 = 1.0 / a0;
        let b1 = -a1 * b0 * b0;
        let b2 = -(a1 * b1 + a2 * b0) * b0;
        let b3 = -(a1 * b2 + a2 * b1 + a3 * b0) * b0;
        Self::new(b0, b1, b2, b3)
    }

    pub fn sqrt(self) -> Self {
        let [a0, a1, a2, a3] = self.c;
        let b0 = a0.sqrt();
        let b1 = a1 / (2.0 * b0);
        let b2 = (a2 - b1 * b1) / (2.0 * b0);
        let b3 = (a3 - 2.0 * b1 * b2) / (2.0 * b0);
        Self::new(b0, b1, b2, b3)
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, o: Jet3) -> Jet3 {
        Jet3::new(self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2], self.c[3] + o.c[3])
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        self + (-o)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        let a = self.c;
        let b = o.c;
        Jet3::new(
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
            a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0],
        )
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        o.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(f: impl Fn(f64) -> f64, t: f64) -> f64 {
        f(t)
    }

    #[test]
    fn sqrt_and_recip_match_series() {
        // q(t) = 2 + t + 3t²
        let q = Jet3::new(2.0, 1.0, 3.0, 0.0);
        let f = |t: f64| (2.0 + t + 3.0 * t * t).sqrt() / (2.0 + t + 3.0 * t * t);
        let j = q.sqrt() * q.recip();
        // Compare with central differences of the closed form.
        let h = 1e-3;
        let d1 = (eval(f, h) - eval(f, -h)) / (2.0 * h);
        let d2 = (eval(f, h) - 2.0 * eval(f, 0.0) + eval(f, -h)) / (h * h);
        let d3 = (eval(f, 2.0 * h) - 2.0 * eval(f, h) + 2.0 * eval(f, -h) - eval(f, -2.0 * h)) / (2.0 * h * h * h);
        assert!((j.derivative(0) - f(0.0)).abs() < 1e-15);
        assert!((j.derivative(1) - d1).abs() < 1e-6);
        assert!((j.derivative(2) - d2).abs() < 1e-5);
        assert!((j.derivative(3) - d3).abs() < 1e-4);
    }

    #[test]
    fn product_of_linear_terms() {
        let a = Jet3::new(1.0, 2.0, 0.0, 0.0);
        let b = Jet3::new(3.0, -1.0, 0.0, 0.0);
        assert_eq!((a * b).c, [3.0, 5.0, -2.0, 0.0]);
        assert_eq!((a - b).c, [-2.0, 3.0, 0.0, 0.0]);
    }
}
