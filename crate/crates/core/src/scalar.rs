// SPDX-License-Identifier: Apache-2.0

//! Forward-mode automatic differentiation.
//!
//! [`Dual<T>`] carries a value and one directional derivative. Nesting it
//! (`Dual<Dual<f64>>`, `Dual<Dual<Dual<f64>>>`) yields second and third
//! mixed partials without any divided differences: seed a different
//! coordinate direction at each nesting level and read the derivative
//! out of the innermost `du` chain.
//!
//! Every geometric routine in the chart layer is written against the
//! [`Scalar`] trait so that it can be re-run one derivative level up.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Real-like number type that chart computations are generic over.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn from_f64(v: f64) -> Self;
    /// The primal (order-zero) part.
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;

    fn powi(self, k: i32) -> Self {
        if k < 0 {
            return Self::from_f64(1.0) / self.powi(-k);
        }
        let mut acc = Self::from_f64(1.0);
        let mut base = self;
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn scale(self, k: f64) -> Self {
        self * Self::from_f64(k)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
}

/// A dual number `re + du·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub du: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, du: T) -> Self {
        Self { re, du }
    }

    pub fn constant(re: T) -> Self {
        Self { re, du: T::zero() }
    }

    /// Independent variable with unit derivative.
    pub fn variable(re: T) -> Self {
        Self { re, du: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.du + rhs.du)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.du - rhs.du)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.du * rhs.re + self.re * rhs.du)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let q = self.re * inv;
        Dual::new(q, (self.du - q * rhs.du) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.du * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.du * self.re.sin()))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.du * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.du / self.re)
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.du / r.scale(2.0))
    }
    fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::one();
        }
        let lower = self.re.powi(k - 1);
        Dual::new(lower * self.re, self.du * lower.scale(k as f64))
    }
}

/// Lift a point into `Dual<S>` coordinates, seeding the derivative along
/// `direction` (a tangent vector, not necessarily a coordinate axis).
pub fn seed_along<S: Scalar>(point: &[S], direction: &[f64]) -> Vec<Dual<S>> {
    point
        .iter()
        .zip(direction)
        .map(|(&x, &v)| Dual::new(x, S::from_f64(v)))
        .collect()
}

/// Lift a point into `Dual<S>` coordinates with the derivative seeded along
/// coordinate axis `axis`.
pub fn seed_axis<S: Scalar>(point: &[S], axis: usize) -> Vec<Dual<S>> {
    point
        .iter()
        .enumerate()
        .map(|(k, &x)| Dual::new(x, if k == axis { S::one() } else { S::zero() }))
        .collect()
}

/// Derivative of a scalar function along `direction` at `point`.
pub fn directional_derivative<S, F>(point: &[S], direction: &[f64], f: F) -> S
where
    S: Scalar,
    F: FnOnce(&[Dual<S>]) -> Dual<S>,
{
    f(&seed_along(point, direction)).du
}

#[cfg(test)]
mod tests {
    use super::*;

    type D3 = Dual<Dual<Dual<f64>>>;

    #[test]
    fn first_derivative_of_product_and_quotient() {
        let x = Dual::variable(3.0);
        let y = x * x / (x + Dual::from_f64(1.0));
        // d/dx x^2/(x+1) = (x^2 + 2x)/(x+1)^2
        assert!((y.du - 15.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn transcendental_derivatives() {
        let x = Dual::variable(0.7);
        assert!((x.sin().du - 0.7f64.cos()).abs() < 1e-15);
        assert!((x.cos().du + 0.7f64.sin()).abs() < 1e-15);
        assert!((x.exp().du - 0.7f64.exp()).abs() < 1e-15);
        assert!((x.ln().du - 1.0 / 0.7).abs() < 1e-15);
        assert!((x.sqrt().du - 0.5 / 0.7f64.sqrt()).abs() < 1e-15);
        assert!((x.powi(-2).du + 2.0 / 0.7f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn third_derivative_through_nesting() {
        // f(x) = x^4 sin(x), f''' computed by hand
        let x0 = 0.4f64;
        let x: D3 = Dual::new(
            Dual::new(Dual::new(x0, 1.0), Dual::new(1.0, 0.0)),
            Dual::new(Dual::new(1.0, 0.0), Dual::new(0.0, 0.0)),
        );
        let f = x.powi(4) * x.sin();
        let (s, c) = (x0.sin(), x0.cos());
        let expected = 24.0 * x0 * s + 36.0 * x0 * x0 * c - 12.0 * x0.powi(3) * s - x0.powi(4) * c;
        assert!((f.du.du.du - expected).abs() < 1e-12);
    }

    #[test]
    fn mixed_partials_commute() {
        // f(x, y) = exp(x y) + x^3 y
        let (x0, y0) = (0.3, -1.2);
        let f = |x: Dual<Dual<f64>>, y: Dual<Dual<f64>>| (x * y).exp() + x.powi(3) * y;
        let seed = |a: f64, b: f64| Dual::new(Dual::new(x0, a), Dual::new(b, 0.0));
        let sy = |a: f64, b: f64| Dual::new(Dual::new(y0, a), Dual::new(b, 0.0));
        let fxy = f(seed(1.0, 0.0), sy(0.0, 1.0)).du.du;
        let fyx = f(seed(0.0, 1.0), sy(1.0, 0.0)).du.du;
        assert!((fxy - fyx).abs() < 1e-13);
        let expected = (x0 * y0).exp() * (1.0 + x0 * y0) + 3.0 * x0 * x0;
        assert!((fxy - expected).abs() < 1e-12);
    }
}
