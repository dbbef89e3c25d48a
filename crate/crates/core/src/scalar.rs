//! Real scalar abstraction shared by the double-precision and extended-precision paths.
//!
//! `f64` is the default backend. With the `extended` feature, [`Mp`] wraps a 128-bit
//! MPFR float (about 38 significant digits).

use num_complex::Complex;
use num_traits::{Num, One, Zero};
use std::fmt::Debug;
use std::ops::Neg;
use std::sync::OnceLock;

/// Minimal real-field interface needed by the special-function code.
pub trait Real:
    Clone + Debug + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn pi() -> Self;
    /// Unit roundoff of the backend.
    fn epsilon() -> f64;
    /// Decimal digits carried by the backend.
    fn digits() -> u32;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn atan2(&self, x: &Self) -> Self;
    fn abs(&self) -> Self;
    fn floor(&self) -> Self;
    /// Cached Gauss–Legendre rules `(n, n/2)` used by the strip quadrature.
    fn gl_pair() -> &'static GlPair<Self>;

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
    fn is_finite(&self) -> bool {
        self.to_f64().is_finite()
    }
    fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

/// A Gauss–Legendre rule together with its half-order companion for error estimates.
pub struct GlPair<T> {
    pub full: Vec<(T, T)>,
    pub half: Vec<(T, T)>,
}

impl<T: Real> GlPair<T> {
    pub fn new(n: usize) -> Self {
        GlPair { full: gauss_legendre(n), half: gauss_legendre(n / 2) }
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn digits() -> u32 {
        15
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn gl_pair() -> &'static GlPair<f64> {
        static RULE: OnceLock<GlPair<f64>> = OnceLock::new();
        RULE.get_or_init(|| GlPair::new(24))
    }
}

pub type C<T> = Complex<T>;

pub fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::from_f64(re), T::from_f64(im))
}

pub fn lift<T: Real>(z: Complex<f64>) -> C<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

pub fn lower<T: Real>(z: &C<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn real<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

pub fn i_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

pub fn cabs<T: Real>(z: &C<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn cexp<T: Real>(z: &C<T>) -> C<T> {
    let r = z.re.exp();
    Complex::new(r.clone() * z.im.cos(), r * z.im.sin())
}

/// Principal logarithm.
pub fn cln<T: Real>(z: &C<T>) -> C<T> {
    Complex::new(cabs(z).ln(), z.im.atan2(&z.re))
}

pub fn csin<T: Real>(z: &C<T>) -> C<T> {
    Complex::new(z.re.sin() * z.im.cosh(), z.re.cos() * z.im.sinh())
}

pub fn csinh<T: Real>(z: &C<T>) -> C<T> {
    Complex::new(z.re.sinh() * z.im.cos(), z.re.cosh() * z.im.sin())
}

/// Principal square root.
pub fn csqrt<T: Real>(z: &C<T>) -> C<T> {
    if z.is_zero() {
        return C::zero();
    }
    let r = cabs(z);
    let two = T::from_f64(2.0);
    let a = ((r.clone() + z.re.abs()) / two.clone()).sqrt();
    if z.re >= T::zero() {
        Complex::new(a.clone(), z.im.clone() / (two * a))
    } else {
        let b = if z.im >= T::zero() { a.clone() } else { -a.clone() };
        Complex::new(z.im.clone() / (two * b.clone()), b)
    }
}

pub fn cpowi<T: Real>(z: &C<T>, n: i32) -> C<T> {
    let mut base = if n < 0 { C::<T>::one() / z.clone() } else { z.clone() };
    let mut e = n.unsigned_abs();
    let mut acc = C::<T>::one();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base.clone();
        }
        base = base.clone() * base;
        e >>= 1;
    }
    acc
}

pub fn scale<T: Real>(z: &C<T>, s: f64) -> C<T> {
    Complex::new(z.re.clone() * T::from_f64(s), z.im.clone() * T::from_f64(s))
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration in `T`.
pub fn gauss_legendre<T: Real>(n: usize) -> Vec<(T, T)> {
    let one = T::one();
    let two = T::from_f64(2.0);
    let mut out = Vec::with_capacity(n);
    let tol = T::from_f64(T::epsilon() * 4.0);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = T::from_f64(guess);
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre(n, &x);
            let dx = p / d.clone();
            dp = d;
            x = x - dx.clone();
            if dx.abs() <= tol {
                let (_, d) = legendre(n, &x);
                dp = d;
                break;
            }
        }
        let w = two.clone() / ((one.clone() - x.clone() * x.clone()) * dp.clone() * dp.clone());
        out.push((x, w));
    }
    out
}

fn legendre<T: Real>(n: usize, x: &T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x.clone();
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::from_f64(k as f64);
        let p2 = ((T::from_f64(2.0 * k as f64 - 1.0)) * x.clone() * p1.clone()
            - (kf.clone() - T::one()) * p0)
            / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_f64(n as f64);
    let d = nf * (x.clone() * p1.clone() - p0) / (x.clone() * x.clone() - T::one());
    (p1, d)
}

#[cfg(feature = "extended")]
mod mp;
#[cfg(feature = "extended")]
pub use mp::Mp;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let nodes = gauss_legendre::<f64>(8);
        let s: f64 = nodes.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn complex_helpers_match_num_complex() {
        let z = Complex::new(0.3, -1.7);
        assert!((cexp(&z) - z.exp()).norm() < 1e-15);
        assert!((csin(&z) - z.sin()).norm() < 1e-15);
        assert!((csinh(&z) - z.sinh()).norm() < 1e-15);
        assert!((cln(&z) - z.ln()).norm() < 1e-15);
        for w in [z, Complex::new(-2.0, 0.5), Complex::new(-2.0, -0.5), Complex::new(-4.0, 0.0)] {
            assert!((csqrt(&w) - w.sqrt()).norm() < 1e-15, "{w}");
        }
        assert!((cpowi(&z, -3) - z.powi(-3)).norm() < 1e-14);
    }
}
