//! Macdonald and Ruijsenaars difference operators acting on black-box functions,
//! and the trigonometric kernel-function identity.

use crate::error::{Error, Result};
use crate::kernels::{measure_product, ModelParams, PointTuple};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

pub type Evaluator = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

/// Function of `n` complex variables, analytic for `|Im xᵢ| < strip_halfwidth`.
#[derive(Clone)]
pub struct AnalyticTestFunction {
    pub evaluator: Evaluator,
    pub strip_halfwidth: f64,
}

impl std::fmt::Debug for AnalyticTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticTestFunction").field("strip_halfwidth", &self.strip_halfwidth).finish()
    }
}

impl AnalyticTestFunction {
    pub fn new(evaluator: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static, strip_halfwidth: f64) -> Self {
        AnalyticTestFunction { evaluator: Arc::new(evaluator), strip_halfwidth }
    }

    /// Entire function `exp(Σ -aᵢ(xᵢ - cᵢ)²)`.
    pub fn gaussian(centers: Vec<f64>, widths: Vec<f64>) -> Self {
        Self::new(
            move |x: &[Complex64]| {
                let s: Complex64 = x
                    .iter()
                    .zip(centers.iter().zip(&widths))
                    .map(|(xi, (c, a))| -(*a) * (xi - c) * (xi - c))
                    .sum();
                s.exp()
            },
            f64::INFINITY,
        )
    }

    /// `exp(2πiλ Σ xᵢ)`.
    pub fn plane_wave(lambda: Complex64) -> Self {
        Self::new(
            move |x: &[Complex64]| (2.0 * PI * Complex64::i() * lambda * x.iter().sum::<Complex64>()).exp(),
            f64::INFINITY,
        )
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        (self.evaluator)(x)
    }
}

/// All `r`-element subsets of `{0, …, n-1}` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    if r <= n {
        rec(0, n, r, &mut cur, &mut out);
    }
    out
}

/// `e_r(vals)`; zero for `r > n`.
pub fn elementary_symmetric(r: usize, vals: &[Complex64]) -> Complex64 {
    let mut e = vec![Complex64::new(0.0, 0.0); r + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for v in vals {
        for k in (1..=r).rev() {
            e[k] = e[k] + e[k - 1] * v;
        }
    }
    e[r]
}

fn sh(z: Complex64) -> Complex64 {
    z.sinh()
}

fn check_r(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::InvalidParams(format!("operator index r = {r} outside 1..={n}")));
    }
    Ok(())
}

fn in_set(set: &[usize], i: usize) -> bool {
    set.contains(&i)
}

/// `x - iω₁ 1_I`.
pub fn shift_subset(x: &[Complex64], set: &[usize], p: &ModelParams) -> Vec<Complex64> {
    let step = Complex64::i() * p.omega.omega1;
    x.iter().enumerate().map(|(i, xi)| if in_set(set, i) { xi - step } else { *xi }).collect()
}

/// `∏_{i∈I, j∉I} sh(π(xᵢ-xⱼ-ig)/ω₂) / sh(π(xᵢ-xⱼ)/ω₂)`.
pub fn macdonald_coefficient(x: &[Complex64], set: &[usize], g: Complex64, p: &ModelParams) -> Result<Complex64> {
    let w2 = p.omega.omega2;
    let i_unit = Complex64::i();
    let mut acc = Complex64::new(1.0, 0.0);
    for &i in set {
        for j in (0..x.len()).filter(|j| !in_set(set, *j)) {
            let d = x[i] - x[j];
            let den = sh(PI * d / w2);
            if den.norm() < 1e-13 {
                return Err(Error::CoincidingCoordinates(i, j));
            }
            acc *= sh(PI * (d - i_unit * g) / w2) / den;
        }
    }
    Ok(acc)
}

fn check_strip(f: &AnalyticTestFunction, pts: &[Complex64]) -> Result<()> {
    if pts.iter().any(|z| !(z.im.abs() < f.strip_halfwidth)) {
        return Err(Error::StripExceeded);
    }
    Ok(())
}

/// `(M_r f)(x) = Σ_{|I|=r} ∏_{i∈I, j∉I} sh(π(xᵢ-xⱼ-ig)/ω₂)/sh(π(xᵢ-xⱼ)/ω₂) · f(x - iω₁1_I)`.
pub fn macdonald_apply(r: usize, f: &AnalyticTestFunction, x: &PointTuple, p: &ModelParams) -> Result<Complex64> {
    let n = x.len();
    check_r(r, n)?;
    check_strip(f, &x.coords)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for set in subsets(n, r) {
        let c = macdonald_coefficient(&x.coords, &set, p.g, p)?;
        let shifted = shift_subset(&x.coords, &set, p);
        check_strip(f, &shifted)?;
        acc += c * f.eval(&shifted);
    }
    Ok(acc)
}

/// Square root of `h(s)` continued from `s = 0` to `s = 1`, starting at `start_root`.
///
/// Steps are halved whenever the root turns by more than π/8 between samples.
fn tracked_sqrt(h: impl Fn(f64) -> Result<Complex64>, start_root: Complex64) -> Result<Complex64> {
    let mut root = start_root;
    let mut s = 0.0f64;
    let mut ds = 1.0f64 / 16.0;
    while s < 1.0 {
        let next = (s + ds).min(1.0);
        let v = h(next)?;
        if v.norm() == 0.0 {
            return Err(Error::GaugeSingular);
        }
        let cand = v.sqrt();
        let cand = if (cand - root).norm() <= (cand + root).norm() { cand } else { -cand };
        let turn = (cand / root).arg().abs();
        if turn > PI / 8.0 && ds > 1e-6 {
            ds /= 2.0;
            continue;
        }
        root = cand;
        s = next;
        if turn < PI / 32.0 {
            ds = (ds * 2.0).min(1.0 / 4.0);
        }
    }
    Ok(root)
}

/// Gauge route: `√μ(x) · M_r(f/√μ)(x)`, with `√μ` positive at real points and continued
/// along the straight path to each shifted point.
pub fn ruijsenaars_apply(r: usize, f: &AnalyticTestFunction, x: &PointTuple, p: &ModelParams) -> Result<Complex64> {
    let n = x.len();
    check_r(r, n)?;
    check_strip(f, &x.coords)?;
    let mu0 = measure_product(x, p)?;
    if mu0.norm() == 0.0 {
        return Err(Error::GaugeSingular);
    }
    let root0 = mu0.sqrt();
    let step = Complex64::i() * p.omega.omega1;
    let mut acc = Complex64::new(0.0, 0.0);
    for set in subsets(n, r) {
        let c = macdonald_coefficient(&x.coords, &set, p.g, p)?;
        let shifted = shift_subset(&x.coords, &set, p);
        check_strip(f, &shifted)?;
        let path = |s: f64| {
            let coords: Vec<Complex64> =
                x.coords.iter().enumerate().map(|(i, xi)| if in_set(&set, i) { xi - s * step } else { *xi }).collect();
            measure_product(&PointTuple { coords }, p)
        };
        let root1 = tracked_sqrt(path, root0)?;
        acc += c * root0 / root1 * f.eval(&shifted);
    }
    Ok(acc)
}

/// Direct route: the symmetric coefficients with half-power `sh` factors on both sides of the
/// shift. Square roots are continued in the coupling from `g = 0`, where every ratio is one.
pub fn ruijsenaars_apply_direct(
    r: usize,
    f: &AnalyticTestFunction,
    x: &PointTuple,
    p: &ModelParams,
) -> Result<Complex64> {
    let n = x.len();
    check_r(r, n)?;
    check_strip(f, &x.coords)?;
    let w2 = p.omega.omega2;
    let i_unit = Complex64::i();
    let mut acc = Complex64::new(0.0, 0.0);
    for set in subsets(n, r) {
        let shifted = shift_subset(&x.coords, &set, p);
        check_strip(f, &shifted)?;
        let coefficient = |s: f64| -> Result<Complex64> {
            let g = p.g * s;
            let mut c = Complex64::new(1.0, 0.0);
            for &i in &set {
                for j in (0..n).filter(|j| !in_set(&set, *j)) {
                    let d = x.coords[i] - x.coords[j];
                    let ds = shifted[i] - shifted[j];
                    let den = sh(PI * d / w2) * sh(PI * ds / w2);
                    if den.norm() < 1e-13 {
                        return Err(Error::CoincidingCoordinates(i, j));
                    }
                    c *= sh(PI * (d - i_unit * g) / w2) * sh(PI * (ds + i_unit * g) / w2) / den;
                }
            }
            Ok(c)
        };
        let root = tracked_sqrt(coefficient, Complex64::new(1.0, 0.0))?;
        acc += root * f.eval(&shifted);
    }
    Ok(acc)
}

fn sin_ratio(num: Complex64, den: Complex64) -> Result<Complex64> {
    let d = den.sin();
    if d.norm() < 1e-12 {
        return Err(Error::SingularDenominator);
    }
    Ok(num.sin() / d)
}

/// Both sides of the trigonometric kernel-function identity.
pub fn check_kernel_identity(z: &PointTuple, y: &PointTuple, alpha: Complex64, r: usize) -> Result<(Complex64, Complex64)> {
    let n = z.len();
    if y.len() != n {
        return Err(Error::InvalidParams("kernel identity needs tuples of equal length".into()));
    }
    check_r(r, n)?;
    let (z, y) = (&z.coords, &y.coords);
    let mut lhs = Complex64::new(0.0, 0.0);
    for set in subsets(n, r) {
        let mut t = Complex64::new(1.0, 0.0);
        for &i in &set {
            for j in (0..n).filter(|j| !in_set(&set, *j)) {
                t *= sin_ratio(z[i] - z[j] - alpha, z[i] - z[j])?;
            }
            for ya in y {
                t *= sin_ratio(z[i] - ya + alpha, z[i] - ya)?;
            }
        }
        lhs += t;
    }
    let mut rhs = Complex64::new(0.0, 0.0);
    for set in subsets(n, r) {
        let mut t = Complex64::new(1.0, 0.0);
        for &a in &set {
            for b in (0..n).filter(|b| !in_set(&set, *b)) {
                t *= sin_ratio(y[a] - y[b] + alpha, y[a] - y[b])?;
            }
            for zi in z {
                t *= sin_ratio(zi - y[a] + alpha, zi - y[a])?;
            }
        }
        rhs += t;
    }
    Ok((lhs, rhs))
}

fn sh_ratio(num: Complex64, den: Complex64) -> Result<Complex64> {
    let d = den.sinh();
    if d.norm() < 1e-12 {
        return Err(Error::SingularDenominator);
    }
    Ok(num.sinh() / d)
}

/// Hyperbolic sums `S_r(z, y)` and `S̃_r(y, z)` arising when the Macdonald operator is moved
/// through the Q-kernel; they coincide by the kernel-function identity.
pub fn hyperbolic_dressing(z: &PointTuple, y: &PointTuple, r: usize, p: &ModelParams) -> Result<(Complex64, Complex64)> {
    let n = z.len();
    if y.len() != n {
        return Err(Error::InvalidParams("dressing needs tuples of equal length".into()));
    }
    check_r(r, n)?;
    let k = PI / p.omega.omega2;
    let i_unit = Complex64::i();
    let (g, h) = (p.g, p.gstar / 2.0);
    let (z, y) = (&z.coords, &y.coords);
    let cross = |zi: Complex64, ya: Complex64| sh_ratio(k * (zi - ya - i_unit * h), k * (zi - ya - i_unit * h - i_unit * g));
    let mut s = Complex64::new(0.0, 0.0);
    for set in subsets(n, r) {
        let mut t = Complex64::new(1.0, 0.0);
        for &i in &set {
            for j in (0..n).filter(|j| !in_set(&set, *j)) {
                t *= sh_ratio(k * (z[i] - z[j] - i_unit * g), k * (z[i] - z[j]))?;
            }
            for ya in y {
                t *= cross(z[i], *ya)?;
            }
        }
        s += t;
    }
    let mut st = Complex64::new(0.0, 0.0);
    for set in subsets(n, r) {
        let mut t = Complex64::new(1.0, 0.0);
        for &a in &set {
            for b in (0..n).filter(|b| !in_set(&set, *b)) {
                t *= sh_ratio(k * (y[a] - y[b] + i_unit * g), k * (y[a] - y[b]))?;
            }
            for zi in z {
                t *= cross(*zi, y[a])?;
            }
        }
        st += t;
    }
    Ok((s, st))
}
