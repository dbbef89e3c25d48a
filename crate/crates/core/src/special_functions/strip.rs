//! Logarithm of the double sine inside its fundamental strip.
//!
//! With `w = 2z - ω₁ - ω₂`,
//!
//! ```text
//! ln S₂(z) = ∫₀^∞ [ sinh(wt) / (sinh(ω₁t) sinh(ω₂t)) - w/(ω₁ω₂ t) ] dt / (2t)
//! ```
//!
//! The range is split at `t_s` and `T₀`. Below `t_s` the integrand is expanded in
//! powers of `t²` and integrated termwise. On `[t_s, T₀]` we substitute `t = eᵘ` and
//! run adaptive Gauss–Legendre panels. Above `T₀` the hyperbolic part is below
//! tolerance and the subtraction term integrates in closed form.

use crate::error::{Error, Result};
use crate::scalar::{cabs, csinh, cexp, Real, C};
use num_traits::{One, Zero};

const MAX_BISECTIONS: u32 = 40;

pub(crate) struct StripSetup<T> {
    w: C<T>,
    a: C<T>,
    b: C<T>,
    ab: C<T>,
}

pub(crate) fn ln_s2_strip<T: Real>(z: &C<T>, a: &C<T>, b: &C<T>, tol: f64) -> Result<C<T>> {
    let two = T::from_f64(2.0);
    let w = z.clone() * two.clone() - a.clone() - b.clone();
    let width = (a.re.clone() + b.re.clone()).to_f64();
    let delta = width - w.re.to_f64().abs();
    if !(delta > 0.0) {
        return Err(Error::OutOfStrip);
    }
    let setup = StripSetup { ab: a.clone() * b.clone(), w, a: a.clone(), b: b.clone() };
    let tol = tol.max(T::epsilon() * 8.0);

    let s = [cabs(&setup.w), cabs(a), cabs(b)]
        .into_iter()
        .map(|x| x.to_f64())
        .fold(0.0, f64::max);
    let t_small = 0.5 / s;
    let t_big = ((4.0 / (tol * delta)).ln() / delta).max(4.0 * t_small);

    let small = setup.small_t_part(&T::from_f64(t_small));
    let middle = setup.middle_part(t_small, t_big, tol)?;
    let half = T::one() / two;
    let tail = -(setup.w.clone() / setup.ab.clone()) * half / T::from_f64(t_big);
    Ok(small + middle + tail)
}

impl<T: Real> StripSetup<T> {
    /// Termwise integral of the power series on `[0, ts]`.
    fn small_t_part(&self, ts: &T) -> C<T> {
        let terms = (T::digits() as f64 / 1.5) as usize + 4;
        let sw = sinhc_coeffs(&self.w, terms);
        let sa = sinhc_coeffs(&self.a, terms);
        let sb = sinhc_coeffs(&self.b, terms);
        let d = series_mul(&sa, &sb);
        let p = series_div(&sw, &d);
        let ts2 = ts.clone() * ts.clone();
        let mut pow = ts.clone();
        let mut acc = C::<T>::zero();
        for (k, pk) in p.iter().enumerate().skip(1) {
            let denom = T::from_f64((2 * k - 1) as f64);
            acc = acc + pk.clone() * (pow.clone() / denom);
            pow = pow * ts2.clone();
        }
        acc * self.w.clone() / (self.ab.clone() * T::from_f64(2.0))
    }

    /// Integrand in `u = ln t`: `½ (R(t) - w/(ab t))`.
    fn integrand(&self, u: &T) -> C<T> {
        let t = u.exp();
        let r = self.hyperbolic_ratio(&t);
        let sub = self.w.clone() / (self.ab.clone() * t);
        (r - sub) / T::from_f64(2.0)
    }

    /// `sinh(wt) / (sinh(at) sinh(bt))`, switched to the decaying exponential form for large `t`.
    fn hyperbolic_ratio(&self, t: &T) -> C<T> {
        let growth = ((self.a.re.clone() + self.b.re.clone()) * t.clone()).to_f64();
        if growth < 30.0 {
            let wt = self.w.clone() * t.clone();
            let at = self.a.clone() * t.clone();
            let bt = self.b.clone() * t.clone();
            csinh(&wt) / (csinh(&at) * csinh(&bt))
        } else {
            let one = C::<T>::one();
            let sum = self.w.clone() + self.a.clone() + self.b.clone();
            let diff = self.w.clone() - self.a.clone() - self.b.clone();
            let up = cexp(&(diff * t.clone()));
            let down = cexp(&(-(sum * t.clone())));
            let ea = cexp(&(-(self.a.clone() * t.clone() * T::from_f64(2.0))));
            let eb = cexp(&(-(self.b.clone() * t.clone() * T::from_f64(2.0))));
            (up - down) * T::from_f64(2.0) / ((one.clone() - ea) * (one - eb))
        }
    }

    fn middle_part(&self, t0: f64, t1: f64, tol: f64) -> Result<C<T>> {
        let pole_gap = [&self.a, &self.b]
            .iter()
            .map(|c| {
                let (re, im) = (c.re.to_f64(), c.im.to_f64());
                std::f64::consts::PI * re / (re * re + im * im)
            })
            .fold(f64::INFINITY, f64::min);
        let freq = self.w.im.to_f64().abs() + self.a.im.to_f64().abs() + self.b.im.to_f64().abs();
        let osc = if freq > 0.0 { 6.0 / freq } else { f64::INFINITY };

        let (u0, u1) = (t0.ln(), t1.ln());
        let mut edges = vec![u0];
        let mut u = u0;
        while u < u1 {
            let t = u.exp();
            let step = 1.0f64.min(pole_gap / t).min(osc / t).max(1e-6);
            u = (u + step).min(u1);
            edges.push(u);
        }
        let per_panel = tol / (edges.len() as f64);
        // Outer edges in the working scalar so they meet the series and tail pieces exactly.
        let last = edges.len() - 1;
        let edge = |j: usize| match j {
            0 => T::from_f64(t0).ln(),
            j if j == last => T::from_f64(t1).ln(),
            j => T::from_f64(edges[j]),
        };
        let mut total = C::<T>::zero();
        for j in 0..last {
            total = total + self.adaptive(edge(j), edge(j + 1), per_panel, 0)?;
        }
        Ok(total)
    }

    fn adaptive(&self, lo: T, hi: T, tol: f64, depth: u32) -> Result<C<T>> {
        let (full, half) = self.panel(&lo, &hi);
        let diff = cabs(&(full.clone() - half)).to_f64();
        let scale = cabs(&full).to_f64().max(tol);
        let estimate = diff * (diff / scale).min(1.0);
        if estimate <= tol {
            return Ok(full);
        }
        if depth >= MAX_BISECTIONS {
            return Err(Error::QuadratureFailure(format!(
                "panel [{:.3e}, {:.3e}] error estimate {estimate:.2e}",
                lo.to_f64().exp(),
                hi.to_f64().exp()
            )));
        }
        let mid = (lo.clone() + hi.clone()) / T::from_f64(2.0);
        let left = self.adaptive(lo, mid.clone(), tol / 2.0, depth + 1)?;
        let right = self.adaptive(mid, hi, tol / 2.0, depth + 1)?;
        Ok(left + right)
    }

    fn panel(&self, lo: &T, hi: &T) -> (C<T>, C<T>) {
        let rule = T::gl_pair();
        let two = T::from_f64(2.0);
        let c = (lo.clone() + hi.clone()) / two.clone();
        let h = (hi.clone() - lo.clone()) / two;
        let apply = |nodes: &[(T, T)]| {
            let mut acc = C::<T>::zero();
            for (x, wgt) in nodes {
                let u = c.clone() + h.clone() * x.clone();
                acc = acc + self.integrand(&u) * wgt.clone();
            }
            acc * h.clone()
        };
        (apply(&rule.full), apply(&rule.half))
    }
}

/// Coefficients of `sinh(ct)/(ct) = Σ c^{2k} y^k / (2k+1)!` in `y = t²`.
fn sinhc_coeffs<T: Real>(c: &C<T>, terms: usize) -> Vec<C<T>> {
    let c2 = c.clone() * c.clone();
    let mut out = Vec::with_capacity(terms);
    let mut cur = C::<T>::one();
    for k in 0..terms {
        out.push(cur.clone());
        let f = T::from_f64(((2 * k + 2) * (2 * k + 3)) as f64);
        cur = cur * c2.clone() / f;
    }
    out
}

fn series_mul<T: Real>(x: &[C<T>], y: &[C<T>]) -> Vec<C<T>> {
    let n = x.len().min(y.len());
    (0..n)
        .map(|k| {
            let mut acc = C::<T>::zero();
            for j in 0..=k {
                acc = acc + x[j].clone() * y[k - j].clone();
            }
            acc
        })
        .collect()
}

/// Power-series quotient; `den[0]` must be nonzero.
fn series_div<T: Real>(num: &[C<T>], den: &[C<T>]) -> Vec<C<T>> {
    let n = num.len().min(den.len());
    let mut out: Vec<C<T>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = num[k].clone();
        for j in 1..=k {
            acc = acc - den[j].clone() * out[k - j].clone();
        }
        out.push(acc / den[0].clone());
    }
    out
}
