use super::{bernoulli_b22, lattice_hit, LatticeHit, Periods, PrecisionPolicy};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const MAX_FACTORS: usize = 1_000_000;

/// `S₂(z|ω) = e^{(πi/2)B₂₂(z)} · ∏_{m≥0}(1 - q^{2m} e^{2πiz/ω₂}) / ∏_{m≥1}(1 - q̃^{2m} e^{2πiz/ω₁})`
/// with `q = e^{πiω₁/ω₂}`, `q̃ = e^{-πiω₂/ω₁}`.
///
/// Requires a non-real period ratio; the periods are ordered internally so that
/// `Im(ω₁/ω₂) > 0`.
pub fn double_sine_product(z: Complex64, om: &Periods, pol: &PrecisionPolicy) -> Result<Complex64> {
    let ratio = om.omega1 / om.omega2;
    if ratio.im.abs() <= 1e-12 * ratio.norm() {
        return Err(Error::RealPeriodRatio);
    }
    let om = if ratio.im > 0.0 { *om } else { om.swapped() };
    let (a, b) = (om.omega1, om.omega2);
    match lattice_hit(z, a, b) {
        Some(LatticeHit::Pole(p)) => return Err(Error::PoleHit(p)),
        Some(LatticeHit::Zero(_)) => return Ok(Complex64::new(0.0, 0.0)),
        None => {}
    }
    let i = Complex64::i();
    let q = (i * PI * a / b).exp();
    let qt = (-i * PI * b / a).exp();
    for nome in [q, qt] {
        if nome.norm() >= 1.0 {
            return Err(Error::NonconvergentProduct(nome.norm()));
        }
    }
    let x2 = (2.0 * PI * i * z / b).exp();
    let x1 = (2.0 * PI * i * z / a).exp();
    let num = partial_product(q * q, x2, pol.tolerance)?;
    let den = partial_product(qt * qt, x1 * qt * qt, pol.tolerance)?;
    Ok((i * PI / 2.0 * bernoulli_b22(z, &om)).exp() * num / den)
}

/// `∏_{m≥0} (1 - r^m x)`, stopped once the factors are within `tol` of one.
fn partial_product(r: Complex64, x: Complex64, tol: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut term = x;
    for _ in 0..MAX_FACTORS {
        acc *= 1.0 - term;
        if term.norm() < tol * 1e-3 {
            return Ok(acc);
        }
        term *= r;
    }
    Err(Error::NonconvergentProduct(r.norm()))
}
