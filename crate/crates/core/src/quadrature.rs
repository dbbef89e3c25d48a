//! Direct evaluation of the Q-operator integrals for one and two integration variables,
//! and the operator identities checked through them.
//!
//! Integrals run over the lines `Im yᵢ = -c` with the trapezoid rule. The integrands are
//! analytic in a strip around the line and decay exponentially, so halving the step converges
//! geometrically; the error estimate is the change under the last halving plus the size of
//! the integrand at the truncation boundary.

use crate::difference_operators::{macdonald_apply, macdonald_coefficient, shift_subset, subsets, AnalyticTestFunction};
use crate::error::{Error, Result};
use crate::kernels::{d_const, kernel_k, lambda_kernel, measure_mu, ModelParams, PointTuple};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Truncation and refinement controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationPlan {
    /// Half-width of the truncated box per axis; `None` derives it from the decay envelope.
    pub radius: Option<f64>,
    /// Target for the halving difference, relative to `∫|integrand|`.
    pub tolerance: f64,
    /// Maximum number of step halvings.
    pub max_depth: u32,
    pub initial_step: f64,
    /// `2π|Re λ|`, the angular frequency of the plane-wave factor on the real line.
    pub oscillation: f64,
}

impl Default for IntegrationPlan {
    fn default() -> Self {
        IntegrationPlan { radius: None, tolerance: 1e-12, max_depth: 7, initial_step: 0.2, oscillation: 0.0 }
    }
}

impl IntegrationPlan {
    /// Plan for spectral parameter `λ`; requires `|Im λ| < ν_g`.
    pub fn for_lambda(lambda: Complex64, p: &ModelParams, tolerance: f64) -> Result<Self> {
        check_lambda(lambda, p)?;
        let oscillation = 2.0 * PI * lambda.re.abs();
        let initial_step = if oscillation > 0.0 { 0.2f64.min(PI / (2.0 * oscillation)) } else { 0.2 };
        Ok(IntegrationPlan { tolerance, initial_step, oscillation, ..Default::default() })
    }

    pub fn coarse() -> Self {
        IntegrationPlan { tolerance: 1e-9, ..Default::default() }
    }
}

fn check_lambda(lambda: Complex64, p: &ModelParams) -> Result<()> {
    if !(lambda.im.abs() < p.nu_g) {
        return Err(Error::RegimeViolation(format!("|Im λ| = {} is not below ν_g = {}", lambda.im.abs(), p.nu_g)));
    }
    Ok(())
}

/// Cone of directions around the real axis used in the decay estimates off the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub sigma: f64,
    /// `|tan φ_g tan σ|` with `g/(ω₁ω₂) = ν_g(1 + i tan φ_g)`.
    pub alpha: f64,
}

impl ConeSpec {
    pub fn new(sigma: f64, p: &ModelParams) -> Self {
        let ghat = p.g / p.omega.product();
        let tan_phi = ghat.im / ghat.re;
        ConeSpec { sigma, alpha: (tan_phi * sigma.tan()).abs() }
    }

    /// `2πν_g(1 - (2n-1)α) - |θ|`; the integrand decays on the cone when this exceeds `ε > 0`.
    pub fn margin(&self, theta: f64, n: usize, p: &ModelParams) -> f64 {
        2.0 * PI * p.nu_g * (1.0 - (2.0 * n as f64 - 1.0) * self.alpha) - theta.abs()
    }

    pub fn admits(&self, theta: f64, n: usize, eps: f64, p: &ModelParams) -> bool {
        eps > 0.0 && self.margin(theta, n, p) > eps
    }
}

/// Quadrature result with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadValue {
    pub value: Complex64,
    pub error: f64,
    pub step: f64,
    pub radius: f64,
    pub nodes: usize,
}

type AxisFn<'a> = &'a (dyn Fn(Complex64) -> Result<Complex64> + Sync);
type JointFn<'a> = &'a (dyn Fn(&[Complex64]) -> Result<Complex64> + Sync);

/// `∫ ∏ᵢ axis(yᵢ) · ∏_{i≠j} pair(yᵢ-yⱼ) · joint(y) dy` over `Im yᵢ = -shift`.
///
/// `pair` receives one difference and must return the product over both orders.
struct Integrand<'a> {
    dim: usize,
    shift: f64,
    axis: AxisFn<'a>,
    pair: Option<AxisFn<'a>>,
    joint: Option<JointFn<'a>>,
}

struct Sum {
    value: Complex64,
    mass: f64,
    edge: f64,
    peak: f64,
    nodes: usize,
}

impl Sum {
    fn zero() -> Self {
        Sum { value: Complex64::new(0.0, 0.0), mass: 0.0, edge: 0.0, peak: 0.0, nodes: 0 }
    }
}

/// Factor values keyed by node position in units of the finest half-step, shared between
/// refinement levels and box sizes.
struct Cache {
    unit: f64,
    axis: HashMap<i64, Complex64>,
    pair: HashMap<i64, Complex64>,
}

impl Cache {
    fn new(plan: &IntegrationPlan) -> Self {
        Cache { unit: plan.initial_step / 2f64.powi(plan.max_depth as i32 + 1), axis: HashMap::new(), pair: HashMap::new() }
    }

    fn key(&self, t: f64) -> i64 {
        (t / self.unit).round() as i64
    }
}

fn fill(map: &mut HashMap<i64, Complex64>, keys: &[i64], unit: f64, f: impl Fn(f64) -> Result<Complex64> + Sync) -> Result<()> {
    let missing: Vec<i64> = keys.iter().copied().filter(|k| !map.contains_key(k)).collect();
    let vals = crate::par::map(&missing, |k| f(*k as f64 * unit));
    for (k, v) in missing.into_iter().zip(vals) {
        map.insert(k, v?);
    }
    Ok(())
}

fn trapezoid(ig: &Integrand, h: f64, radius: f64, cache: &mut Cache) -> Result<Sum> {
    let kmax = (radius / h).ceil() as i64;
    let line = Complex64::new(0.0, -ig.shift);
    let unit = cache.unit;
    let first: Vec<i64> = (-kmax..=kmax).collect();
    let k1: Vec<i64> = first.iter().map(|k| cache.key(*k as f64 * h)).collect();
    fill(&mut cache.axis, &k1, unit, |t| (ig.axis)(t + line))?;
    let a1: Vec<Complex64> = k1.iter().map(|k| cache.axis[k]).collect();
    if ig.dim == 1 {
        let mut s = Sum { nodes: first.len(), ..Sum::zero() };
        for (idx, k) in first.iter().enumerate() {
            let y = *k as f64 * h + line;
            let t = a1[idx] * match ig.joint {
                Some(j) => j(&[y])?,
                None => Complex64::new(1.0, 0.0),
            };
            accumulate(&mut s, t, k.abs() == kmax);
        }
        s.value *= h;
        s.mass *= h;
        return finite(s);
    }
    // Second axis on the half-shifted grid, so that y₁ ≠ y₂ at every node.
    let second: Vec<i64> = (-kmax - 1..=kmax).collect();
    let y2 = |l: i64| (l as f64 + 0.5) * h + line;
    let k2: Vec<i64> = second.iter().map(|l| cache.key((*l as f64 + 0.5) * h)).collect();
    fill(&mut cache.axis, &k2, unit, |t| (ig.axis)(t + line))?;
    let a2: Vec<Complex64> = k2.iter().map(|k| cache.axis[k]).collect();
    let offsets: Vec<i64> = (-2 * kmax..=2 * kmax + 1).collect();
    let pairs: Vec<Complex64> = match ig.pair {
        Some(pf) => {
            let kp: Vec<i64> = offsets.iter().map(|j| cache.key((*j as f64 - 0.5) * h)).collect();
            fill(&mut cache.pair, &kp, unit, |d| pf(Complex64::new(d, 0.0)))?;
            kp.iter().map(|k| cache.pair[k]).collect()
        }
        None => vec![Complex64::new(1.0, 0.0); offsets.len()],
    };
    let rows = crate::par::map(&first, |k| -> Result<Sum> {
        let ik = (k + kmax) as usize;
        let y1 = *k as f64 * h + line;
        let mut s = Sum::zero();
        for (il, l) in second.iter().enumerate() {
            let pj = (k - l + 2 * kmax) as usize;
            let mut t = a1[ik] * a2[il] * pairs[pj];
            if let Some(j) = ig.joint {
                t *= j(&[y1, y2(*l)])?;
            }
            let on_edge = k.abs() == kmax || *l == -kmax - 1 || *l == kmax;
            accumulate(&mut s, t, on_edge);
            s.nodes += 1;
        }
        Ok(s)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut s = Sum::zero();
    for r in rows {
        s.value += r.value;
        s.mass += r.mass;
        s.edge = s.edge.max(r.edge);
        s.peak = s.peak.max(r.peak);
        s.nodes += r.nodes;
    }
    s.value *= h * h;
    s.mass *= h * h;
    finite(s)
}

fn accumulate(s: &mut Sum, t: Complex64, on_edge: bool) {
    let a = t.norm();
    s.value += t;
    s.mass += a;
    s.peak = s.peak.max(a);
    if on_edge {
        s.edge = s.edge.max(a);
    }
}

fn finite(s: Sum) -> Result<Sum> {
    if !(s.value.re.is_finite() && s.value.im.is_finite()) {
        return Err(Error::QuadratureFailure("non-finite integrand value".into()));
    }
    Ok(s)
}

/// Refines the step until the halving difference meets the plan; grows the box while the
/// integrand at its boundary is not negligible.
fn integrate(ig: &Integrand, plan: &IntegrationPlan, radius0: f64, rate: f64) -> Result<QuadValue> {
    let mut radius = plan.radius.unwrap_or(radius0);
    let mut cache = Cache::new(plan);
    for _ in 0..12 {
        let mut h = plan.initial_step;
        let mut prev = trapezoid(ig, h, radius, &mut cache)?;
        // A truncation jump spoils the geometric convergence, so settle the box first.
        if plan.radius.is_none() && prev.edge > plan.tolerance * prev.peak {
            radius *= 1.3;
            continue;
        }
        let mut done = None;
        for _ in 0..plan.max_depth {
            h /= 2.0;
            let cur = trapezoid(ig, h, radius, &mut cache)?;
            let diff = (cur.value - prev.value).norm();
            if diff <= plan.tolerance * cur.mass.max(f64::MIN_POSITIVE) {
                done = Some((cur, diff));
                break;
            }
            prev = cur;
        }
        let Some((cur, diff)) = done else {
            return Err(Error::ToleranceNotMet(format!("step halving did not settle after {} levels", plan.max_depth)));
        };
        let tail = cur.edge * ig.dim as f64 * (2.0 * radius).powi(ig.dim as i32 - 1) / rate.max(1e-3);
        if cur.edge <= plan.tolerance * cur.peak || plan.radius.is_some() {
            return Ok(QuadValue { value: cur.value, error: diff + tail, step: h, radius, nodes: cur.nodes });
        }
        radius *= 1.3;
    }
    Err(Error::ToleranceNotMet("integrand not negligible at the truncation boundary".into()))
}

fn decay_radius(points: &[Complex64], lambda: Complex64, p: &ModelParams, tolerance: f64) -> (f64, f64) {
    let rate = 2.0 * PI * (p.nu_g - lambda.im.abs());
    let m = points.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    // The envelope ignores decay from test functions; the boundary check grows the box if needed.
    (m + 2.0 + ((1.0 / tolerance).ln() / rate).min(4.0), rate)
}

fn dimension(len: usize, per: usize) -> Result<usize> {
    if len == 0 || len % per != 0 || len / per > 2 {
        return Err(Error::InvalidParams(format!(
            "quadrature handles one or two integration variables; got {len} parameters"
        )));
    }
    Ok(len / per)
}

fn pair_measure(p: &ModelParams) -> impl Fn(Complex64) -> Result<Complex64> + Sync + '_ {
    move |d| Ok(measure_mu(d, p)? * measure_mu(-d, p)?)
}

/// `Q_n(z; λ) = ∫ e^{2πiλΣy} ∏ K(z_a - yᵢ) μ(y) dy` for `2n` real parameters, `n ≤ 2`.
pub fn integrate_q(z: &PointTuple, lambda: Complex64, p: &ModelParams, plan: &IntegrationPlan) -> Result<QuadValue> {
    let n = dimension(z.len(), 2)?;
    check_lambda(lambda, p)?;
    if z.coords.iter().any(|c| c.im != 0.0) {
        return Err(Error::InvalidParams("parameters must be real".into()));
    }
    let axis = |y: Complex64| -> Result<Complex64> {
        let mut v = (2.0 * PI * Complex64::i() * lambda * y).exp();
        for za in &z.coords {
            v *= kernel_k(za - y, p)?;
        }
        Ok(v)
    };
    let pair = pair_measure(p);
    let ig = Integrand { dim: n, shift: 0.0, axis: &axis, pair: Some(&pair), joint: None };
    let (r0, rate) = decay_radius(&z.coords, lambda, p, plan.tolerance);
    integrate(&ig, plan, r0, rate)
}

/// Line `Im y = -c` separating the two pole series of `K(zᵢ - y)` for every `zᵢ`, and also for
/// the real points the continuation starts from. Returns `(c, margin)`.
fn separating_line(z: &[Complex64], p: &ModelParams) -> Result<(f64, f64)> {
    let half = p.gstar.re / 2.0;
    let depths = z.iter().map(|c| -c.im).chain(std::iter::once(0.0));
    let (lo, hi) = depths.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let (a, b) = (hi - half, lo + half);
    let margin = (b - a) / 2.0;
    if !(margin > 0.02) {
        return Err(Error::StripExceeded);
    }
    Ok(((a + b) / 2.0, margin))
}

/// `(Q_n(λ) f)(z) = ∫ e^{2πiλ(Σz-Σy)} K(z, y) μ(y) f(y) dy` for `n ≤ 2`; complex `z` is handled
/// by integrating over a line that keeps the kernel poles separated.
pub fn apply_q_operator(
    f: &AnalyticTestFunction,
    z: &PointTuple,
    lambda: Complex64,
    p: &ModelParams,
    plan: &IntegrationPlan,
) -> Result<QuadValue> {
    let n = dimension(z.len(), 1)?;
    check_lambda(lambda, p)?;
    let (c, _) = separating_line(&z.coords, p)?;
    if !(c.abs() < f.strip_halfwidth) {
        return Err(Error::StripExceeded);
    }
    let i = Complex64::i();
    let axis = |y: Complex64| -> Result<Complex64> {
        let mut v = (-2.0 * PI * i * lambda * y).exp();
        for zi in &z.coords {
            v *= kernel_k(zi - y, p)?;
        }
        Ok(v)
    };
    let pair = pair_measure(p);
    let joint = |y: &[Complex64]| -> Result<Complex64> {
        let v = f.eval(y);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::QuadratureFailure("test function not finite on the contour".into()));
        }
        Ok(v)
    };
    let ig = Integrand { dim: n, shift: c, axis: &axis, pair: Some(&pair), joint: Some(&joint) };
    let (r0, rate) = decay_radius(&z.coords, lambda, p, plan.tolerance);
    let mut q = integrate(&ig, plan, r0, rate)?;
    let pre = (2.0 * PI * i * lambda * z.sum()).exp();
    q.value *= pre;
    q.error *= pre.norm();
    Ok(q)
}

/// Both sides of an identity with their quadrature errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidesReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    pub relative_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SidesReport {
    fn new(lhs: Complex64, lhs_error: f64, rhs: Complex64, rhs_error: f64, tolerance: f64) -> Self {
        let scale = lhs.norm().max(rhs.norm());
        let relative_residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).norm() / scale };
        SidesReport { lhs, rhs, lhs_error, rhs_error, relative_residual, tolerance, pass: relative_residual < tolerance }
    }
}

/// `Q_n(z; λ)` against `e^{2πiλΣz} Q_n(z; -λ)`.
pub fn verify_commutativity(
    z: &PointTuple,
    lambda: Complex64,
    p: &ModelParams,
    plan: &IntegrationPlan,
    tolerance: f64,
) -> Result<SidesReport> {
    let lhs = integrate_q(z, lambda, p, plan)?;
    let rhs = integrate_q(z, -lambda, p, plan)?;
    let pre = (2.0 * PI * Complex64::i() * lambda * z.sum()).exp();
    Ok(SidesReport::new(lhs.value, lhs.error, pre * rhs.value, pre.norm() * rhs.error, tolerance))
}

/// `M_r Q_n(λ) f` against `Q_n(λ) M_r f` at a real point `z`.
pub fn verify_mq_commutation(
    r: usize,
    f: &AnalyticTestFunction,
    z: &PointTuple,
    lambda: Complex64,
    p: &ModelParams,
    plan: &IntegrationPlan,
    tolerance: f64,
) -> Result<SidesReport> {
    p.require_re_g_below_omega2()?;
    if !(f.strip_halfwidth > p.omega.omega1.re) {
        return Err(Error::StripExceeded);
    }
    if z.coords.iter().any(|c| c.im != 0.0) {
        return Err(Error::InvalidParams("commutation is checked at a real point".into()));
    }
    let n = z.len();
    if r == 0 || r > n {
        return Err(Error::InvalidParams(format!("operator index r = {r} outside 1..={n}")));
    }
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut lhs_error = 0.0;
    for set in subsets(n, r) {
        let coef = macdonald_coefficient(&z.coords, &set, p.g, p)?;
        let shifted = PointTuple { coords: shift_subset(&z.coords, &set, p) };
        let q = apply_q_operator(f, &shifted, lambda, p, plan)?;
        lhs += coef * q.value;
        lhs_error += coef.norm() * q.error;
    }
    let inner = f.clone();
    let pp = *p;
    let mf = AnalyticTestFunction::new(
        move |y: &[Complex64]| {
            macdonald_apply(r, &inner, &PointTuple { coords: y.to_vec() }, &pp)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        },
        f.strip_halfwidth - p.omega.omega1.re,
    );
    let rhs = apply_q_operator(&mf, z, lambda, p, plan)?;
    Ok(SidesReport::new(lhs, lhs_error, rhs.value, rhs.error, tolerance))
}

/// `Ψ_{λ₁,λ₂}(x) = d₁ ∫ Λ(x, y; λ₂) e^{2πiλ₁y} dy`; `x` may be shifted into the lower strip.
pub fn eigenfunction_n2(lambda1: Complex64, lambda2: Complex64, x: &PointTuple, p: &ModelParams, plan: &IntegrationPlan) -> Result<QuadValue> {
    if x.len() != 2 {
        return Err(Error::InvalidParams("two coordinates expected".into()));
    }
    check_lambda(lambda1 - lambda2, p)?;
    let (c, _) = separating_line(&x.coords, p)?;
    let i = Complex64::i();
    let axis = |y: Complex64| -> Result<Complex64> {
        Ok(lambda_kernel(x, &PointTuple { coords: vec![y] }, lambda2, p)? * (2.0 * PI * i * lambda1 * y).exp())
    };
    let ig = Integrand { dim: 1, shift: c, axis: &axis, pair: None, joint: None };
    let (r0, rate) = decay_radius(&x.coords, lambda1 - lambda2, p, plan.tolerance);
    let mut q = integrate(&ig, plan, r0, rate)?;
    let d = d_const(2, p)?;
    q.value *= d;
    q.error *= d.norm();
    Ok(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub psi: Complex64,
    pub m1_psi: Complex64,
    pub m2_psi: Complex64,
    pub e1: Complex64,
    pub e2: Complex64,
    pub residual_m1: f64,
    pub residual_m2: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `M_r Ψ = e_r(e^{2πλ₁ω₁}, e^{2πλ₂ω₁}) Ψ` for `r = 1, 2`.
pub fn eigenfunction_check_n2(
    lambda1: Complex64,
    lambda2: Complex64,
    x: &PointTuple,
    p: &ModelParams,
    plan: &IntegrationPlan,
    tolerance: f64,
) -> Result<EigenReport> {
    p.require_re_g_below_omega2()?;
    if p.omega.omega1.im != 0.0 || p.omega.omega2.im != 0.0 {
        return Err(Error::InvalidParams("eigenfunction check needs real periods".into()));
    }
    if x.len() != 2 || x.coords.iter().any(|c| c.im != 0.0) {
        return Err(Error::InvalidParams("two real coordinates expected".into()));
    }
    let psi_at = |coords: Vec<Complex64>| eigenfunction_n2(lambda1, lambda2, &PointTuple { coords }, p, plan).map(|q| q.value);
    let psi = psi_at(x.coords.clone())?;
    let mut m1_psi = Complex64::new(0.0, 0.0);
    for set in subsets(2, 1) {
        let coef = macdonald_coefficient(&x.coords, &set, p.g, p)?;
        m1_psi += coef * psi_at(shift_subset(&x.coords, &set, p))?;
    }
    let m2_psi = psi_at(shift_subset(&x.coords, &[0, 1], p))?;
    let a = (2.0 * PI * lambda1 * p.omega.omega1).exp();
    let b = (2.0 * PI * lambda2 * p.omega.omega1).exp();
    let (e1, e2) = (a + b, a * b);
    let residual_m1 = (m1_psi - e1 * psi).norm() / (e1 * psi).norm();
    let residual_m2 = (m2_psi - e2 * psi).norm() / (e2 * psi).norm();
    Ok(EigenReport {
        psi,
        m1_psi,
        m2_psi,
        e1,
        e2,
        residual_m1,
        residual_m2,
        tolerance,
        pass: residual_m1 < tolerance && residual_m2 < tolerance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityReport {
    pub center: Complex64,
    pub radius: f64,
    pub probe: Complex64,
    pub predicted: Complex64,
    pub computed: Complex64,
    pub relative_error: f64,
}

/// Fits a degree-4 polynomial in `λ` to `Q₁` at 9 points on a circle and compares its value at
/// an interior probe with direct quadrature.
///
/// For equispaced nodes the least-squares coefficients are the discrete Fourier coefficients.
pub fn analyticity_fit(
    z: &PointTuple,
    center: Complex64,
    radius: f64,
    probe: Complex64,
    p: &ModelParams,
    plan: &IntegrationPlan,
) -> Result<AnalyticityReport> {
    const NODES: usize = 9;
    const DEGREE: usize = 4;
    if !((probe - center).norm() < radius) {
        return Err(Error::InvalidParams("probe must lie inside the sampling circle".into()));
    }
    let angles: Vec<f64> = (0..NODES).map(|k| 2.0 * PI * k as f64 / NODES as f64).collect();
    let vals = crate::par::map(&angles, |t| integrate_q(z, center + Complex64::from_polar(radius, *t), p, plan).map(|q| q.value))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let w = (probe - center) / radius;
    let mut predicted = Complex64::new(0.0, 0.0);
    for j in 0..=DEGREE {
        let coeff: Complex64 =
            angles.iter().zip(&vals).map(|(t, v)| v * Complex64::from_polar(1.0, -(j as f64) * t)).sum::<Complex64>() / NODES as f64;
        predicted += coeff * w.powu(j as u32);
    }
    let computed = integrate_q(z, probe, p, plan)?.value;
    let relative_error = (predicted - computed).norm() / computed.norm();
    Ok(AnalyticityReport { center, radius, probe, predicted, computed, relative_error })
}
