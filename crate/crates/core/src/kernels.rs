//! Kernel `K`, measure `μ` and the Q- and Λ-operator kernels built from them.

use crate::error::{Error, Result};
use crate::special_functions::{double_sine, hyperbolic_gamma, ln_double_sine, Periods, PrecisionPolicy};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which of the stronger parameter regimes hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// `Re g < Re ω₂`, needed for the shifted contour in the Macdonald commutation.
    pub re_g_below_omega2: bool,
    /// `ν_g > 0`, needed for convergence of the Q-integrals.
    pub nu_g_positive: bool,
}

/// Periods, coupling and derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: Periods,
    pub g: Complex64,
    pub gstar: Complex64,
    pub nu_g: f64,
    pub flags: RegimeFlags,
    pub policy: PrecisionPolicy,
}

impl ModelParams {
    /// Rejects `Re g ≤ 0` and `Re g ≥ Re ω₁ + Re ω₂`; records the stronger regimes as flags.
    pub fn new(omega: Periods, g: Complex64) -> Result<Self> {
        if !(g.re > 0.0) || !(g.re < omega.omega1.re + omega.omega2.re) {
            return Err(Error::InvalidParams(format!(
                "coupling {g} outside 0 < Re g < Re ω₁ + Re ω₂"
            )));
        }
        let gstar = omega.sum() - g;
        let nu_g = (g / omega.product()).re;
        Ok(ModelParams {
            omega,
            g,
            gstar,
            nu_g,
            flags: RegimeFlags { re_g_below_omega2: g.re < omega.omega2.re, nu_g_positive: nu_g > 0.0 },
            policy: PrecisionPolicy::default(),
        })
    }

    pub fn real(w1: f64, w2: f64, g: f64) -> Result<Self> {
        Self::new(Periods::real(w1, w2)?, Complex64::new(g, 0.0))
    }

    pub fn with_policy(mut self, policy: PrecisionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn s2(&self, z: Complex64) -> Result<Complex64> {
        double_sine(z, &self.omega, &self.policy)
    }

    pub fn require_re_g_below_omega2(&self) -> Result<()> {
        if self.flags.re_g_below_omega2 {
            Ok(())
        } else {
            Err(Error::RegimeViolation(format!(
                "need Re g < Re ω₂, have g = {} and ω₂ = {}",
                self.g, self.omega.omega2
            )))
        }
    }
}

/// Ordered tuple of complex coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTuple {
    pub coords: Vec<Complex64>,
}

impl PointTuple {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParams("point tuple must be nonempty".into()));
        }
        Ok(PointTuple { coords })
    }

    pub fn real(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinate sum, the underlined tuple.
    pub fn sum(&self) -> Complex64 {
        self.coords.iter().sum()
    }

    /// `(z₁,…,z_n, x₁,…,x_n)`.
    pub fn concat(&self, other: &PointTuple) -> PointTuple {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        PointTuple { coords }
    }
}

/// Logarithm of a factor that may vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogValue {
    Zero,
    Finite(Complex64),
}

impl LogValue {
    pub fn exp(self) -> Complex64 {
        match self {
            LogValue::Zero => Complex64::new(0.0, 0.0),
            LogValue::Finite(l) => l.exp(),
        }
    }

    fn mul(self, other: LogValue) -> LogValue {
        match (self, other) {
            (LogValue::Finite(a), LogValue::Finite(b)) => LogValue::Finite(a + b),
            _ => LogValue::Zero,
        }
    }
}

/// `ln(1/S₂(z))`: zero where `S₂` has a pole, error where `S₂` vanishes.
fn ln_s2_inverse(z: Complex64, p: &ModelParams) -> Result<LogValue> {
    match ln_double_sine(z, &p.omega, &p.policy) {
        Ok(l) => Ok(LogValue::Finite(-l)),
        Err(Error::PoleHit(_)) => Ok(LogValue::Zero),
        Err(Error::ZeroHit(at)) => Err(Error::PoleHit(at)),
        Err(e) => Err(e),
    }
}

fn ln_s2(z: Complex64, p: &ModelParams) -> Result<LogValue> {
    match ln_double_sine(z, &p.omega, &p.policy) {
        Ok(l) => Ok(LogValue::Finite(l)),
        Err(Error::ZeroHit(_)) => Ok(LogValue::Zero),
        Err(e) => Err(e),
    }
}

pub fn ln_kernel_k(z: Complex64, p: &ModelParams) -> Result<LogValue> {
    let i = Complex64::i();
    let h = p.gstar / 2.0;
    Ok(ln_s2_inverse(i * z + h, p)?.mul(ln_s2_inverse(-i * z + h, p)?))
}

pub fn ln_measure_mu(z: Complex64, p: &ModelParams) -> Result<LogValue> {
    let i = Complex64::i();
    Ok(ln_s2(i * z, p)?.mul(ln_s2(-i * z + p.gstar, p)?))
}

/// `K(z) = S₂⁻¹(iz + g*/2) S₂⁻¹(-iz + g*/2)`.
pub fn kernel_k(z: Complex64, p: &ModelParams) -> Result<Complex64> {
    Ok(ln_kernel_k(z, p)?.exp())
}

/// `K(z) = G(z - ig/2) / G(z + ig/2)`, the hyperbolic gamma form.
pub fn kernel_k_gamma_form(z: Complex64, p: &ModelParams) -> Result<Complex64> {
    let i = Complex64::i();
    let num = hyperbolic_gamma(z - i * p.g / 2.0, &p.omega, &p.policy)?;
    let den = hyperbolic_gamma(z + i * p.g / 2.0, &p.omega, &p.policy)?;
    Ok(num / den)
}

/// `μ(z) = S₂(iz) S₂(-iz + g*)`.
pub fn measure_mu(z: Complex64, p: &ModelParams) -> Result<Complex64> {
    Ok(ln_measure_mu(z, p)?.exp())
}

fn factor_error(e: Error, i: usize, j: usize) -> Error {
    match e {
        Error::PoleHit(at) => Error::DegenerateConfiguration(format!("factor ({i}, {j}) on pole lattice at {at}")),
        other => other,
    }
}

/// Multiplies factors, switching to log-space accumulation for three or more coordinates.
fn accumulate(n: usize, logs: Vec<LogValue>) -> Complex64 {
    if n >= 3 {
        logs.into_iter().fold(LogValue::Finite(Complex64::new(0.0, 0.0)), LogValue::mul).exp()
    } else {
        logs.into_iter().map(LogValue::exp).product()
    }
}

/// `∏ᵢ ∏ⱼ K(zᵢ - yⱼ)`.
pub fn kernel_product(z: &PointTuple, y: &PointTuple, p: &ModelParams) -> Result<Complex64> {
    let mut logs = Vec::with_capacity(z.len() * y.len());
    for (i, zi) in z.coords.iter().enumerate() {
        for (j, yj) in y.coords.iter().enumerate() {
            logs.push(ln_kernel_k(zi - yj, p).map_err(|e| factor_error(e, i, j))?);
        }
    }
    Ok(accumulate(z.len().max(y.len()), logs))
}

/// `∏_{i≠j} μ(xᵢ - xⱼ)`; one for a single coordinate.
pub fn measure_product(x: &PointTuple, p: &ModelParams) -> Result<Complex64> {
    let mut logs = Vec::new();
    for (i, xi) in x.coords.iter().enumerate() {
        for (j, xj) in x.coords.iter().enumerate() {
            if i != j {
                logs.push(ln_measure_mu(xi - xj, p).map_err(|e| factor_error(e, i, j))?);
            }
        }
    }
    Ok(accumulate(x.len(), logs))
}

fn plane_wave(lambda: Complex64, z: &PointTuple, y: &PointTuple) -> Complex64 {
    (2.0 * PI * Complex64::i() * lambda * (z.sum() - y.sum())).exp()
}

/// `e^{2πiλ(Σz - Σy)} K(z, y) μ(y)`.
pub fn q_kernel(z: &PointTuple, y: &PointTuple, lambda: Complex64, p: &ModelParams) -> Result<Complex64> {
    if z.len() != y.len() {
        return Err(Error::InvalidParams("Q-kernel needs tuples of equal length".into()));
    }
    Ok(plane_wave(lambda, z, y) * kernel_product(z, y, p)? * measure_product(y, p)?)
}

/// `e^{2πiλ(Σx - Σy)} K(x, y) μ(y)` with `y` one coordinate shorter than `x`.
pub fn lambda_kernel(x: &PointTuple, y: &PointTuple, lambda: Complex64, p: &ModelParams) -> Result<Complex64> {
    if x.len() < 2 || y.len() + 1 != x.len() {
        return Err(Error::InvalidParams("Λ-kernel needs n ≥ 2 and n-1 integration variables".into()));
    }
    Ok(plane_wave(lambda, x, y) * kernel_product(x, y, p)? * measure_product(y, p)?)
}

/// `d_{n-1}(g) = [√(ω₁ω₂) S₂(g)]^{1-n} / (n-1)!`.
pub fn d_const(n: usize, p: &ModelParams) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::InvalidParams("d_const needs n ≥ 2".into()));
    }
    let base = p.omega.product().sqrt() * p.s2(p.g)?;
    let fact: f64 = (1..n).map(|k| k as f64).product();
    Ok(base.powi(1 - n as i32) / fact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params() -> ModelParams {
        ModelParams::new(Periods::new(c(1.0, 0.0), c(0.8, 0.3)).unwrap(), c(0.6, 0.1)).unwrap()
    }

    #[test]
    fn construction_checks_coupling_range() {
        assert!(ModelParams::real(1.0, 1.0, 2.5).is_err());
        assert!(ModelParams::real(1.0, 1.0, -0.1).is_err());
        let p = ModelParams::real(1.0, 1.0, 1.5).unwrap();
        assert!(!p.flags.re_g_below_omega2);
        assert!(p.flags.nu_g_positive);
        assert!((p.gstar - c(0.5, 0.0)).norm() < 1e-15);
        assert!((p.nu_g - 1.5).abs() < 1e-15);
    }

    #[test]
    fn kernel_at_origin_for_unit_coupling() {
        let p = ModelParams::real(1.0, 1.0, 1.0).unwrap();
        let k = kernel_k(c(0.0, 0.0), &p).unwrap();
        assert!((k - 0.5).norm() < 1e-13, "{k}");
    }

    #[test]
    fn measure_vanishes_at_origin() {
        let p = params();
        assert_eq!(measure_mu(c(0.0, 0.0), &p).unwrap(), c(0.0, 0.0));
        let x = PointTuple::real(&[0.3, 0.3]).unwrap();
        assert_eq!(measure_product(&x, &p).unwrap(), c(0.0, 0.0));
        assert_eq!(measure_product(&PointTuple::real(&[0.7]).unwrap(), &p).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn gamma_form_matches_double_sine_form() {
        let p = params();
        for z in [c(0.3, 0.0), c(-1.2, 0.1), c(2.5, -0.05)] {
            let a = kernel_k(z, &p).unwrap();
            let b = kernel_k_gamma_form(z, &p).unwrap();
            assert!((a - b).norm() < 1e-10 * a.norm(), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn d_const_for_unit_coupling() {
        let p = ModelParams::real(1.0, 1.0, 1.0).unwrap();
        let s = p.s2(c(1.0, 0.0)).unwrap();
        assert!(s.re > 0.0 && s.im.abs() < 1e-14);
        assert!((d_const(2, &p).unwrap() - 1.0 / s).norm() < 1e-14);
    }

    #[test]
    fn q_kernel_reductions() {
        let p = params();
        let z = PointTuple::real(&[0.4]).unwrap();
        let y = PointTuple::real(&[-0.3]).unwrap();
        let q = q_kernel(&z, &y, c(0.0, 0.0), &p).unwrap();
        assert!((q - kernel_k(c(0.7, 0.0), &p).unwrap()).norm() < 1e-15);
        let y2 = PointTuple::real(&[0.1, 0.1]).unwrap();
        let z2 = PointTuple::real(&[0.1, 0.1]).unwrap();
        assert_eq!(q_kernel(&z2, &y2, c(0.3, 0.0), &p).unwrap(), c(0.0, 0.0));
        let lam = lambda_kernel(&z2, &y, c(0.0, 0.0), &p).unwrap();
        let k = kernel_k(c(0.4, 0.0), &p).unwrap();
        assert!((lam - k * k).norm() < 1e-14);
    }

    #[test]
    fn q_kernel_modulus_for_real_lambda() {
        let p = ModelParams::real(1.0, 1.3, 0.7).unwrap();
        let z = PointTuple::real(&[0.4, -0.9]).unwrap();
        let y = PointTuple::real(&[1.1, 0.2]).unwrap();
        let q = q_kernel(&z, &y, c(0.37, 0.0), &p).unwrap();
        let bare = kernel_product(&z, &y, &p).unwrap() * measure_product(&y, &p).unwrap();
        assert!((q.norm() - bare.norm()).abs() < 1e-14 * bare.norm());
    }

    #[test]
    fn envelopes_hold_with_fitted_constant() {
        let p = ModelParams::real(1.0, 1.0, 0.5).unwrap();
        let k0 = kernel_k(c(0.0, 0.0), &p).unwrap().norm();
        let m1 = measure_mu(c(1.0, 0.0), &p).unwrap().norm() / (PI * p.nu_g).exp();
        for j in -30..=30 {
            let y = j as f64;
            let k = kernel_k(c(y, 0.0), &p).unwrap().norm();
            assert!(k <= 1.01 * k0 * (-PI * p.nu_g * y.abs()).exp() * 4.0, "K at {y}");
            if j != 0 {
                let m = measure_mu(c(y, 0.0), &p).unwrap().norm();
                assert!(m <= 4.0 * m1 * (PI * p.nu_g * y.abs()).exp(), "μ at {y}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kernel_is_even(x in -3.0f64..3.0, y in -0.2f64..0.2) {
            let p = params();
            let a = kernel_k(c(x, y), &p).unwrap();
            let b = kernel_k(c(-x, -y), &p).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm());
        }

        #[test]
        fn kernel_product_is_permutation_invariant(z in prop::collection::vec(-2.0f64..2.0, 3), y in prop::collection::vec(-2.0f64..2.0, 3)) {
            let p = params();
            let zt = PointTuple::real(&z).unwrap();
            let yt = PointTuple::real(&y).unwrap();
            let zr = PointTuple::real(&[z[2], z[0], z[1]]).unwrap();
            let yr = PointTuple::real(&[y[1], y[2], y[0]]).unwrap();
            let a = kernel_product(&zt, &yt, &p).unwrap();
            let b = kernel_product(&zr, &yr, &p).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm());
        }

        #[test]
        fn real_measure_pair_is_nonnegative(x in 0.05f64..4.0) {
            let p = ModelParams::real(1.0, 1.4, 0.9).unwrap();
            let v = measure_mu(c(x, 0.0), &p).unwrap() * measure_mu(c(-x, 0.0), &p).unwrap();
            prop_assert!(v.re > 0.0 && v.im.abs() < 1e-10 * v.re);
            let two = measure_product(&PointTuple::real(&[x, 0.0]).unwrap(), &p).unwrap();
            prop_assert!((two - v).norm() < 1e-12 * v.norm());
        }
    }
}
