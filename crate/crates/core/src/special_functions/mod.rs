//! Double sine function `S₂(z|ω)` and its relatives.
//!
//! Evaluation reduces `z` into the fundamental strip with the quasi-periodicity
//! `S₂(z) = 2 sin(πz/ω_o) S₂(z + ω_s)` and then integrates the logarithm there
//! (see [`strip`]). All shift factors are accumulated as logarithms, so the
//! result stays representable far from the real axis.

mod product;
mod strip;

pub use product::double_sine_product;

use crate::error::{Error, LatticePoint, Result};
use crate::scalar::{cexp, cln, csin, i_unit, lower, Real, C};
#[cfg(feature = "extended")]
use crate::scalar::lift;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative distance (in units of `|ω₁+ω₂|`) below which a point counts as on-lattice.
pub const POLE_PROXIMITY: f64 = 1e-8;

/// Pair of quasi-periods with positive real parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periods {
    pub omega1: Complex64,
    pub omega2: Complex64,
}

impl Periods {
    pub fn new(omega1: Complex64, omega2: Complex64) -> Result<Self> {
        if !(omega1.re > 0.0 && omega2.re > 0.0) || !(omega1.is_finite() && omega2.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "periods need positive real parts, got {omega1} and {omega2}"
            )));
        }
        Ok(Periods { omega1, omega2 })
    }

    pub fn real(a: f64, b: f64) -> Result<Self> {
        Self::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0))
    }

    pub fn sum(&self) -> Complex64 {
        self.omega1 + self.omega2
    }

    pub fn product(&self) -> Complex64 {
        self.omega1 * self.omega2
    }

    pub fn swapped(&self) -> Self {
        Periods { omega1: self.omega2, omega2: self.omega1 }
    }

    pub fn scaled(&self, gamma: Complex64) -> Result<Self> {
        Self::new(self.omega1 * gamma, self.omega2 * gamma)
    }

    /// The periods lifted to an extended-precision scalar.
    #[cfg(feature = "extended")]
    pub(crate) fn lifted<T: Real>(&self) -> (C<T>, C<T>) {
        (lift(self.omega1), lift(self.omega2))
    }
}

/// Precision knobs shared by every double sine evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    /// Decimal digits of the working scalar; anything above 15 selects the extended backend.
    pub digits: u32,
    /// Absolute tolerance for the strip quadrature of `ln S₂`.
    pub tolerance: f64,
    pub max_shift_depth: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { digits: 15, tolerance: 1e-14, max_shift_depth: 64 }
    }
}

impl PrecisionPolicy {
    pub fn extended() -> Self {
        PrecisionPolicy { digits: 38, tolerance: 1e-34, max_shift_depth: 64 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.digits < 15 {
            return Err(Error::InvalidParams("working precision below 15 digits".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// `B₂₂(z|ω)`, the second multiple Bernoulli polynomial.
pub fn bernoulli_b22(z: Complex64, om: &Periods) -> Complex64 {
    b22_t(&z, &om.omega1, &om.omega2)
}

pub(crate) fn b22_t<T: Real>(z: &C<T>, a: &C<T>, b: &C<T>) -> C<T> {
    let ab = a.clone() * b.clone();
    let sum = a.clone() + b.clone();
    let c0 = (a.clone() * a.clone() + ab.clone() * T::from_f64(3.0) + b.clone() * b.clone())
        / (ab.clone() * T::from_f64(6.0));
    (z.clone() * z.clone() - sum * z.clone()) / ab + c0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum LatticeHit {
    Pole(LatticePoint),
    Zero(LatticePoint),
}

/// Finds a pole `mω₁+kω₂` (m,k ≥ 1) or zero `-mω₁-kω₂` (m,k ≥ 0) within [`POLE_PROXIMITY`].
pub(crate) fn lattice_hit(z: Complex64, a: Complex64, b: Complex64) -> Option<LatticeHit> {
    let eps = POLE_PROXIMITY * (a + b).norm();
    let scan = |target: Complex64, start: i64| -> Option<LatticePoint> {
        let mmax = ((target.re + eps) / a.re).floor() as i64;
        if mmax > 100_000 {
            return None;
        }
        for m in start..=mmax {
            let rest = target.re + eps - m as f64 * a.re;
            let kmax = (rest / b.re).floor() as i64;
            let kmax = kmax.min(100_000);
            for k in start..=kmax {
                if (target - a * m as f64 - b * k as f64).norm() < eps {
                    return Some(LatticePoint::new(m, k));
                }
            }
        }
        None
    };
    if let Some(p) = scan(z, 1) {
        return Some(LatticeHit::Pole(p));
    }
    scan(-z, 0).map(LatticeHit::Zero)
}

/// Periods in a canonical order so that evaluation is symmetric under swapping.
fn canonical<T: Real>(a: &C<T>, b: &C<T>) -> (C<T>, C<T>) {
    let key = |c: &C<T>| (c.re.to_f64(), c.im.to_f64());
    if key(a) <= key(b) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// `ln(2 sin x)` written so that neither exponential can overflow.
pub(crate) fn ln_two_sin<T: Real>(x: &C<T>) -> C<T> {
    let i = i_unit::<T>();
    let one = C::<T>::one();
    let half_pi = T::pi() / T::from_f64(2.0);
    if x.im > T::zero() {
        let e = cexp(&(i.clone() * x.clone() * T::from_f64(2.0)));
        C::new(T::zero(), half_pi) - i * x.clone() + cln(&(one - e))
    } else {
        let e = cexp(&(-(i.clone() * x.clone() * T::from_f64(2.0))));
        C::new(T::zero(), -half_pi) + i * x.clone() + cln(&(one - e))
    }
}

/// `ln S₂(z|a,b)` for a generic scalar; the imaginary part is defined only modulo `2π`.
pub fn ln_double_sine_t<T: Real>(z: &C<T>, a: &C<T>, b: &C<T>, pol: &PrecisionPolicy) -> Result<C<T>> {
    match lattice_hit(lower(z), lower(a), lower(b)) {
        Some(LatticeHit::Pole(p)) => return Err(Error::PoleHit(p)),
        Some(LatticeHit::Zero(p)) => return Err(Error::ZeroHit(p)),
        None => {}
    }
    let (a, b) = canonical(a, b);
    let (step, other) = if b.re < a.re { (b.clone(), a.clone()) } else { (a.clone(), b.clone()) };

    let w_re = (z.re.clone() * T::from_f64(2.0) - a.re.clone() - b.re.clone()).to_f64();
    let s_re = step.re.to_f64();
    let n = ((w_re - s_re) / (2.0 * s_re)).ceil();
    if n.abs() > pol.max_shift_depth as f64 {
        return Err(Error::ShiftDepthExceeded { needed: n.abs() as u64, limit: pol.max_shift_depth });
    }
    let n = n as i64;
    let pi = T::pi();
    let mut acc = C::<T>::zero();
    let mut cur = z.clone();
    if n > 0 {
        for _ in 0..n {
            cur = cur - step.clone();
            acc = acc - ln_two_sin(&(cur.clone() * pi.clone() / other.clone()));
        }
    } else {
        for _ in 0..(-n) {
            acc = acc + ln_two_sin(&(cur.clone() * pi.clone() / other.clone()));
            cur = cur + step.clone();
        }
    }
    Ok(acc + strip::ln_s2_strip(&cur, &a, &b, pol.tolerance)?)
}

/// `S₂(z|a,b)` for a generic scalar, exact zero on the zero lattice.
pub fn double_sine_t<T: Real>(z: &C<T>, a: &C<T>, b: &C<T>, pol: &PrecisionPolicy) -> Result<C<T>> {
    match ln_double_sine_t(z, a, b, pol) {
        Ok(l) => Ok(cexp(&l)),
        Err(Error::ZeroHit(_)) => Ok(C::zero()),
        Err(e) => Err(e),
    }
}

fn dispatch(z: Complex64, om: &Periods, pol: &PrecisionPolicy, log: bool) -> Result<Complex64> {
    pol.validate()?;
    if pol.digits > 15 {
        #[cfg(feature = "extended")]
        {
            use crate::scalar::Mp;
            let (a, b) = om.lifted::<Mp>();
            let zz = lift::<Mp>(z);
            let v = if log { ln_double_sine_t(&zz, &a, &b, pol)? } else { double_sine_t(&zz, &a, &b, pol)? };
            return Ok(lower(&v));
        }
        #[cfg(not(feature = "extended"))]
        return Err(Error::ExtendedUnavailable);
    }
    if log {
        ln_double_sine_t(&z, &om.omega1, &om.omega2, pol)
    } else {
        double_sine_t(&z, &om.omega1, &om.omega2, pol)
    }
}

/// `S₂(z|ω)` on the whole plane.
pub fn double_sine(z: Complex64, om: &Periods, pol: &PrecisionPolicy) -> Result<Complex64> {
    dispatch(z, om, pol, false)
}

/// A logarithm of `S₂(z|ω)`; `ZeroHit` on the zero lattice.
pub fn ln_double_sine(z: Complex64, om: &Periods, pol: &PrecisionPolicy) -> Result<Complex64> {
    dispatch(z, om, pol, true)
}

/// `S₂` from the integral representation alone; `z` must lie in the strip.
pub fn double_sine_strip(z: Complex64, om: &Periods, pol: &PrecisionPolicy) -> Result<Complex64> {
    pol.validate()?;
    let width = om.omega1.re + om.omega2.re;
    if !(z.re > 0.0 && z.re < width) {
        return Err(Error::OutOfStrip);
    }
    let (a, b) = canonical(&om.omega1, &om.omega2);
    if pol.digits > 15 {
        #[cfg(feature = "extended")]
        {
            use crate::scalar::Mp;
            let v = strip::ln_s2_strip(&lift::<Mp>(z), &lift(a), &lift(b), pol.tolerance)?;
            return Ok(lower(&cexp(&v)));
        }
        #[cfg(not(feature = "extended"))]
        return Err(Error::ExtendedUnavailable);
    }
    Ok(strip::ln_s2_strip(&z, &a, &b, pol.tolerance)?.exp())
}

/// `G(z) = S₂(iz + (ω₁+ω₂)/2)`.
pub fn hyperbolic_gamma(z: Complex64, om: &Periods, pol: &PrecisionPolicy) -> Result<Complex64> {
    double_sine(Complex64::i() * z + om.sum() / 2.0, om, pol)
}

/// `⟨x⟩_{m,k} = (-1)^{mk} S₂(x)/S₂(x+mω₁+kω₂)` through its trigonometric factorization,
/// valid for all integers `m`, `k`.
pub fn hyp_pochhammer_t<T: Real>(x: &C<T>, m: i64, k: i64, a: &C<T>, b: &C<T>) -> C<T> {
    pochhammer_one(x, m, a, b) * pochhammer_one(x, k, b, a)
}

/// `S₂(x)/S₂(x + m·step)` as a product of `2 sin(π(·)/other)` factors.
fn pochhammer_one<T: Real>(x: &C<T>, m: i64, step: &C<T>, other: &C<T>) -> C<T> {
    let pi = T::pi();
    let two = T::from_f64(2.0);
    let factor = |y: C<T>| csin(&(y * pi.clone() / other.clone())) * two.clone();
    let mut acc = C::<T>::one();
    if m >= 0 {
        for s in 0..m {
            acc = acc * factor(x.clone() + step.clone() * T::from_i64(s));
        }
        acc
    } else {
        for s in m..0 {
            acc = acc * factor(x.clone() + step.clone() * T::from_i64(s));
        }
        C::<T>::one() / acc
    }
}

/// Detects `ω₁/ω₂ = p/q` with `q ≤ 1000` within tolerance.
pub fn rational_ratio(om: &Periods) -> Option<(i64, i64)> {
    let r = om.omega1 / om.omega2;
    if r.im.abs() > 1e-12 * r.norm() {
        return None;
    }
    let x = r.re;
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut f = x;
    for _ in 0..40 {
        let a = f.floor();
        let ai = a as i64;
        let h2 = ai.saturating_mul(h1).saturating_add(h0);
        let k2 = ai.saturating_mul(k1).saturating_add(k0);
        if k2 > 1000 {
            break;
        }
        if (x - h2 as f64 / k2 as f64).abs() < 1e-9 * x.abs().max(1.0) {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = f - a;
        if frac.abs() < 1e-15 {
            break;
        }
        f = 1.0 / frac;
    }
    None
}

/// `∏_{s=1}^m 2 sin(πsω₁/ω₂) · ∏_{l=1}^k 2 sin(πlω₂/ω₁)`.
pub fn sine_products(om: &Periods, m: i64, k: i64) -> Complex64 {
    let (a, b) = (om.omega1, om.omega2);
    let mut acc = Complex64::one();
    for s in 1..=m {
        acc *= 2.0 * (PI * s as f64 * a / b).sin();
    }
    for l in 1..=k {
        acc *= 2.0 * (PI * l as f64 * b / a).sin();
    }
    acc
}

/// Residue of `S₂` at the pole `mω₁ + kω₂`, `m, k ≥ 1`.
pub fn s2_residue(at: LatticePoint, om: &Periods) -> Result<Complex64> {
    if at.m < 1 || at.k < 1 {
        return Err(Error::InvalidParams(format!("{at} is not on the pole lattice")));
    }
    if let Some((p, q)) = rational_ratio(om) {
        return Err(Error::DegenerateLattice(p, q));
    }
    let sign = if (at.m * at.k) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(om.product().sqrt() / (2.0 * PI) * sign / sine_products(om, at.m - 1, at.k - 1))
}

/// Residue of `1/S₂` at the zero `-mω₁ - kω₂`, `m, k ≥ 0`.
pub fn s2_inv_residue(at: LatticePoint, om: &Periods) -> Result<Complex64> {
    if at.m < 0 || at.k < 0 {
        return Err(Error::InvalidParams(format!("{at} is not on the zero lattice")));
    }
    if let Some((p, q)) = rational_ratio(om) {
        return Err(Error::DegenerateLattice(p, q));
    }
    let e = at.m * at.k + at.m + at.k;
    let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
    Ok(om.product().sqrt() / (2.0 * PI) * sign / sine_products(om, at.m, at.k))
}

/// Distance from `z` to the closed cone spanned by the directions of `ω₁` and `ω₂`.
fn cone_distance(z: Complex64, lo: f64, hi: f64) -> f64 {
    let arg = z.arg();
    if arg >= lo && arg <= hi {
        return 0.0;
    }
    [lo, hi]
        .iter()
        .map(|&th| {
            let r = z * Complex64::from_polar(1.0, -th);
            if r.re <= 0.0 {
                z.norm()
            } else {
                r.im.abs()
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Leading asymptotics `±(πi/2) B₂₂(z|ω)` away from the cones around `±ω`.
///
/// The margin is `|ω₁| + |ω₂|`; the sign is `+` on the side containing `+i`.
pub fn log_s2_asymptotic(z: Complex64, om: &Periods) -> Result<Complex64> {
    let (t1, t2) = (om.omega1.arg(), om.omega2.arg());
    let (lo, hi) = (t1.min(t2), t1.max(t2));
    let margin = om.omega1.norm() + om.omega2.norm();
    let d = cone_distance(z, lo, hi).min(cone_distance(-z, lo, hi));
    if d < margin {
        return Err(Error::InsideCone);
    }
    let arg = z.arg();
    let upper = arg > hi && arg < lo + PI;
    let sign = if upper { 1.0 } else { -1.0 };
    Ok(sign * Complex64::i() * PI / 2.0 * bernoulli_b22(z, om))
}

/// Evaluates `S₂(x + mω₁ + kω₂)` from a known `S₂(x)` using the trigonometric shift factors.
pub fn shifted_from_base<T: Real>(s2_base: &C<T>, x: &C<T>, m: i64, k: i64, a: &C<T>, b: &C<T>) -> C<T> {
    let sign = if (m * k).rem_euclid(2) == 0 { T::one() } else { -T::one() };
    s2_base.clone() * sign / hyp_pochhammer_t(x, m, k, a, b)
}
