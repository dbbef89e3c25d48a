//! Exact checks of the basic-hypergeometric duality and the Pochhammer lemmas behind it.
//!
//! Theorem-level checks use the nonsymmetric symbols `(z;q)_k` over `BigRational`.
//! The lemmas are stated for the symmetric symbols `[z;q]_k`, which involve square
//! roots; they are checked on samples where `q = Q²`, `t = T²`, `uᵢ = Uᵢ²`, `vₐ = Vₐ²`
//! with rational `Q, T, U, V`, so every factor `m - 1/m` stays rational.

use crate::error::{Error, Result};
use crate::kernels::ModelParams;
use crate::special_functions::hyp_pochhammer_t;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn pow(x: &Rational, e: i64) -> Rational {
    x.pow(e as i32)
}

/// `(z;q)_k`; for `k = -n < 0` this is `1/∏_{j=1}^{n} (1 - q^{-j} z)`.
pub fn q_pochhammer(z: &Rational, q: &Rational, k: i64) -> Result<Rational> {
    if k >= 0 {
        let mut acc = Rational::one();
        let mut qz = z.clone();
        for _ in 0..k {
            acc *= Rational::one() - &qz;
            qz *= q;
        }
        return Ok(acc);
    }
    if q.is_zero() {
        return Err(Error::ZeroDenominator("(z;q)_k with q = 0 and k < 0".into()));
    }
    let mut den = Rational::one();
    for j in 1..=(-k) {
        den *= Rational::one() - pow(q, -j) * z;
    }
    if den.is_zero() {
        return Err(Error::ZeroDenominator(format!("({z};{q})_{k}")));
    }
    Ok(den.recip())
}

/// `[z;q]_k` given square roots `ζ² = z`, `Q² = q`.
///
/// Factors are `Q^j ζ - Q^{-j} ζ^{-1}` for `0 ≤ j < k`; negative index `k = -n` gives
/// `1/∏_{j=1}^{n} (Q^{-j} ζ - Q^{j} ζ^{-1})`, so that `[z]_a [q^a z]_b = [z]_{a+b}` for all integers.
pub fn sym_pochhammer(zeta: &Rational, q_root: &Rational, k: i64) -> Result<Rational> {
    let factor = |j: i64| {
        let m = pow(q_root, j) * zeta;
        &m - m.recip()
    };
    if k >= 0 {
        return Ok((0..k).map(factor).fold(Rational::one(), |a, f| a * f));
    }
    let den = (1..=(-k)).map(|j| factor(-j)).fold(Rational::one(), |a, f| a * f);
    if den.is_zero() {
        return Err(Error::ZeroDenominator(format!("[{zeta}²;{q_root}²]_{k}")));
    }
    Ok(den.recip())
}

/// `⟨x⟩_{m,k} = (-1)^{mk} S₂(x)/S₂(x + mω₁ + kω₂)` via its sine factorization.
pub fn hyp_pochhammer(x: Complex64, m: i64, k: i64, p: &ModelParams) -> Result<Complex64> {
    let v = hyp_pochhammer_t(&x, m, k, &p.omega.omega1, &p.omega.omega2);
    if !v.is_finite() {
        let target = x + p.omega.omega1 * m as f64 + p.omega.omega2 * k as f64;
        return Err(Error::DegenerateConfiguration(format!(
            "⟨{x}⟩_{{{m},{k}}} has a pole: shifted argument {target} lies on a sine zero"
        )));
    }
    Ok(v)
}

/// Tuple of non-negative integers with a fixed total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Composition {
    pub parts: Vec<i64>,
    pub total: i64,
}

/// All compositions of `total` into `n` parts, first part descending.
pub fn compositions(n: usize, total: i64) -> impl Iterator<Item = Composition> {
    let mut out = Vec::new();
    if n >= 1 && total >= 0 {
        let mut cur = vec![0i64; n];
        fill(&mut cur, 0, total, &mut out);
    }
    out.into_iter().map(move |parts| Composition { parts, total })
}

fn fill(cur: &mut Vec<i64>, pos: usize, left: i64, out: &mut Vec<Vec<i64>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for v in (0..=left).rev() {
        cur[pos] = v;
        fill(cur, pos + 1, left - v, out);
    }
}

/// Multiplicative sample `q, t, u, v`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypSample {
    pub q: Rational,
    pub t: Rational,
    pub u: Vec<Rational>,
    pub v: Vec<Rational>,
}

/// Sample given through square roots: `q = Q²`, `t = T²`, `uᵢ = Uᵢ²`, `vₐ = Vₐ²`.
#[derive(Clone, Debug, PartialEq)]
pub struct SqrtSample {
    pub q_root: Rational,
    pub t_root: Rational,
    pub u_root: Vec<Rational>,
    pub v_root: Vec<Rational>,
}

fn random_rational<R: Rng>(rng: &mut R, bound: i64) -> Rational {
    let num = rng.gen_range(1..=bound);
    let den = rng.gen_range(1..=bound);
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    rat(sign * num, den)
}

impl HypSample {
    /// Signed rationals with numerators and denominators at most 64.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        loop {
            let q = random_rational(rng, 64);
            if q.abs().is_one() {
                continue;
            }
            return HypSample {
                q,
                t: random_rational(rng, 64),
                u: (0..n).map(|_| random_rational(rng, 64)).collect(),
                v: (0..n).map(|_| random_rational(rng, 64)).collect(),
            };
        }
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }
}

impl SqrtSample {
    /// Roots with numerators and denominators at most 8, so the squares stay within 64.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        loop {
            let q_root = random_rational(rng, 8);
            if q_root.abs().is_one() {
                continue;
            }
            return SqrtSample {
                q_root,
                t_root: random_rational(rng, 8),
                u_root: (0..n).map(|_| random_rational(rng, 8)).collect(),
                v_root: (0..n).map(|_| random_rational(rng, 8)).collect(),
            };
        }
    }

    /// Random sample with no accidental coincidence `r T^e Q^j = ±1` for
    /// `r ∈ {1, Uᵢ/Uⱼ, Vₐ/V_b, Uⱼ/Vₐ}`, `|e| ≤ 1`, `|j| ≤ reach`.
    pub fn random_generic<R: Rng>(n: usize, reach: i64, rng: &mut R) -> Self {
        loop {
            let s = Self::random(n, rng);
            if s.is_generic(reach) {
                return s;
            }
        }
    }

    pub fn is_generic(&self, reach: i64) -> bool {
        let n = self.n();
        let mut ratios = vec![Rational::one()];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    ratios.push(&self.u_root[i] / &self.u_root[j]);
                    ratios.push(&self.v_root[i] / &self.v_root[j]);
                }
                ratios.push(&self.u_root[i] / &self.v_root[j]);
            }
        }
        let t_pows = [self.t_root.recip(), Rational::one(), self.t_root.clone()];
        for (idx, r) in ratios.iter().enumerate() {
            for (e, tp) in t_pows.iter().enumerate() {
                for j in -reach..=reach {
                    if idx == 0 && e == 1 && j == 0 {
                        continue;
                    }
                    let m = r * tp * pow(&self.q_root, j);
                    if m.abs().is_one() {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn n(&self) -> usize {
        self.u_root.len()
    }

    pub fn squared(&self) -> HypSample {
        let sq = |x: &Rational| x * x;
        HypSample {
            q: sq(&self.q_root),
            t: sq(&self.t_root),
            u: self.u_root.iter().map(sq).collect(),
            v: self.v_root.iter().map(sq).collect(),
        }
    }

    /// Image under `uᵢ → 1/vᵢ`, `vᵢ → 1/uᵢ`.
    pub fn involution(&self) -> SqrtSample {
        SqrtSample {
            q_root: self.q_root.clone(),
            t_root: self.t_root.clone(),
            u_root: self.v_root.iter().map(|x| x.recip()).collect(),
            v_root: self.u_root.iter().map(|x| x.recip()).collect(),
        }
    }

    fn values(&self) -> Vec<Rational> {
        let mut out = vec![self.q_root.clone(), self.t_root.clone()];
        out.extend(self.u_root.iter().cloned());
        out.extend(self.v_root.iter().cloned());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

fn checked_ratio(num: Rational, den: Rational, what: impl FnOnce() -> String) -> Result<Rational> {
    if den.is_zero() {
        return Err(Error::ZeroDenominator(what()));
    }
    Ok(num / den)
}

/// One side of the nonsymmetric duality, summed over all compositions of `K`.
pub fn theorem2_side(side: Side, s: &HypSample, total: i64) -> Result<Rational> {
    let n = s.n();
    if s.v.len() != n || n == 0 {
        return Err(Error::InvalidParams("sample needs equally many u and v, at least one".into()));
    }
    if s.q.is_zero() || s.t.is_zero() || s.u.iter().chain(&s.v).any(Zero::is_zero) {
        return Err(Error::InvalidParams("sample entries must be nonzero".into()));
    }
    let q = &s.q;
    let t = &s.t;
    let qt = q * t;
    let poch = |z: &Rational, k: i64| q_pochhammer(z, q, k);
    let mut sum = Rational::zero();
    for comp in compositions(n, total) {
        let k = &comp.parts;
        let mut term = Rational::one();
        for &ki in k {
            term *= checked_ratio(poch(&qt, ki)?, poch(q, ki)?, || format!("(q;q)_{ki}"))?;
        }
        // Within-group variables: u on the left, v on the right.
        let w = match side {
            Side::Left => &s.u,
            Side::Right => &s.v,
        };
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                // Left: (t⁻¹q^{-k_j}uᵢ/uⱼ;q)_{kᵢ}; right: (t⁻¹q^{-k_a}v_a/v_b;q)_{k_b} with a = i, b = j.
                let (shift, len) = match side {
                    Side::Left => (k[j], k[i]),
                    Side::Right => (k[i], k[j]),
                };
                let base = pow(q, -shift) * &w[i] / &w[j];
                let num = poch(&(&base / t), len)?;
                let den = poch(&base, len)?;
                term *= checked_ratio(num, den, || format!("(q^-{shift} w{i}/w{j};q)_{len}"))?;
            }
        }
        for a in 0..n {
            for j in 0..n {
                let len = match side {
                    Side::Left => k[j],
                    Side::Right => k[a],
                };
                let base = &s.u[j] / &s.v[a];
                let num = poch(&(t * &base), len)?;
                let den = poch(&base, len)?;
                term *= checked_ratio(num, den, || format!("(u{j}/v{a};q)_{len}"))?;
            }
        }
        sum += term;
    }
    Ok(sum)
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleOutcome {
    pub q: String,
    pub t: String,
    pub u: Vec<String>,
    pub v: Vec<String>,
    pub left: String,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem2Report {
    pub n: usize,
    pub total: i64,
    pub trials: usize,
    pub seed: u64,
    pub resampled: usize,
    pub samples: Vec<SampleOutcome>,
    pub all_equal: bool,
}

fn describe(s: &HypSample) -> String {
    let join = |xs: &[Rational]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    format!("q = {}, t = {}, u = ({}), v = ({})", s.q, s.t, join(&s.u), join(&s.v))
}

/// Compares both sides exactly on `trials` random samples, resampling on denominator hits.
pub fn verify_theorem2(n: usize, total: i64, trials: usize, seed: u64) -> Result<Theorem2Report> {
    if n == 0 || total < 0 {
        return Err(Error::InvalidParams("need n ≥ 1 and K ≥ 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials);
    let mut resampled = 0;
    while samples.len() < trials {
        let s = HypSample::random(n, &mut rng);
        let sides = theorem2_side(Side::Left, &s, total).and_then(|l| Ok((l, theorem2_side(Side::Right, &s, total)?)));
        let (left, right) = match sides {
            Ok(v) => v,
            Err(Error::ZeroDenominator(_)) => {
                resampled += 1;
                if resampled > 100 * (trials + 1) {
                    return Err(Error::DegenerateConfiguration("sampler keeps hitting denominator zeros".into()));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if left != right {
            return Err(Error::IdentityViolation(format!("{}: left {left}, right {right}", describe(&s))));
        }
        samples.push(SampleOutcome {
            q: s.q.to_string(),
            t: s.t.to_string(),
            u: s.u.iter().map(|x| x.to_string()).collect(),
            v: s.v.iter().map(|x| x.to_string()).collect(),
            left: left.to_string(),
            equal: true,
        });
    }
    Ok(Theorem2Report { n, total, trials, seed, resampled, samples, all_equal: true })
}

/// Exact checks of the two shift/reflection rules for symmetric symbols.
#[derive(Clone, Debug, Serialize)]
pub struct PochhammerLemmaReport {
    pub m: i64,
    pub n: i64,
    pub p: i64,
    pub shift_rule: bool,
    pub reflection_rule: bool,
}

/// `[qᵖu]_m [u]_n = [qᵖu]_{n-p} [u]_{m+p}` and
/// `[qu]_m [q^{-(m+p)}u⁻¹]_n = (-1)ᵖ [qu]_{m+p} [q^{-m}u⁻¹]_{n-p}`, with `u = U²`, `q = Q²`.
pub fn verify_pochhammer_lemmas(u_root: &Rational, q_root: &Rational, m: i64, n: i64, p: i64) -> Result<PochhammerLemmaReport> {
    let sp = |z: &Rational, k: i64| sym_pochhammer(z, q_root, k);
    let qp_u = pow(q_root, p) * u_root;
    let lhs_a = sp(&qp_u, m)? * sp(u_root, n)?;
    let rhs_a = sp(&qp_u, n - p)? * sp(u_root, m + p)?;
    let qu = q_root * u_root;
    let inv = u_root.recip();
    let lhs_b = sp(&qu, m)? * sp(&(pow(q_root, -(m + p)) * &inv), n)?;
    let sign = if p.rem_euclid(2) == 0 { Rational::one() } else { -Rational::one() };
    let rhs_b = sign * sp(&qu, m + p)? * sp(&(pow(q_root, -m) * &inv), n - p)?;
    let report = PochhammerLemmaReport { m, n, p, shift_rule: lhs_a == rhs_a, reflection_rule: lhs_b == rhs_b };
    if !report.shift_rule {
        return Err(Error::IdentityViolation(format!("shift rule at m={m}, n={n}, p={p}: {lhs_a} vs {rhs_a}")));
    }
    if !report.reflection_rule {
        return Err(Error::IdentityViolation(format!("reflection rule at m={m}, n={n}, p={p}: {lhs_b} vs {rhs_b}")));
    }
    Ok(report)
}

// Symbolic summands of the symmetric identity. Variables are indexed as
// Q, T, U₁..Uₙ, V₁..Vₙ; every factor is `m - 1/m` for a Laurent monomial `m`.

#[derive(Clone, Debug)]
struct Factor {
    exps: Vec<i32>,
    denominator: bool,
}

#[derive(Clone, Debug)]
struct Term {
    factors: Vec<Factor>,
}

struct Layout {
    n: usize,
}

impl Layout {
    fn width(&self) -> usize {
        2 + 2 * self.n
    }
    fn q(&self) -> usize {
        0
    }
    fn t(&self) -> usize {
        1
    }
    fn u(&self, i: usize) -> usize {
        2 + i
    }
    fn v(&self, a: usize) -> usize {
        2 + self.n + a
    }
    fn mono(&self, parts: &[(usize, i32)]) -> Vec<i32> {
        let mut e = vec![0; self.width()];
        for &(var, p) in parts {
            e[var] += p;
        }
        e
    }
}

impl Term {
    fn new() -> Self {
        Term { factors: Vec::new() }
    }

    /// Appends `[ζ²;Q²]_k`, inverted when `denominator` is set.
    fn bracket(&mut self, lay: &Layout, zeta: Vec<i32>, k: i64, denominator: bool) {
        let q = lay.q();
        let push = |f: &mut Vec<Factor>, j: i64, den: bool| {
            let mut e = zeta.clone();
            e[q] += j as i32;
            f.push(Factor { exps: e, denominator: den });
        };
        if k >= 0 {
            for j in 0..k {
                push(&mut self.factors, j, denominator);
            }
        } else {
            for j in 1..=(-k) {
                push(&mut self.factors, -j, !denominator);
            }
        }
    }

    fn ratio(&mut self, lay: &Layout, num: Vec<i32>, den: Vec<i32>, k: i64) {
        self.bracket(lay, num, k, false);
        self.bracket(lay, den, k, true);
    }
}

fn mono_value(exps: &[i32], vals: &[Rational]) -> Rational {
    exps.iter().zip(vals).filter(|(e, _)| **e != 0).fold(Rational::one(), |acc, (e, v)| acc * v.pow(*e))
}

fn factor_value(m: &Rational) -> Rational {
    m - m.recip()
}

/// Summand `U_k` of the left side of the symmetric identity.
fn u_term(k: &[i64]) -> Term {
    let lay = Layout { n: k.len() };
    let n = lay.n;
    let mut term = Term::new();
    for &ki in k {
        term.ratio(&lay, lay.mono(&[(lay.q(), 1), (lay.t(), 1)]), lay.mono(&[(lay.q(), 1)]), ki);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let base = [(lay.q(), -k[j] as i32), (lay.u(i), 1), (lay.u(j), -1)];
                let mut with_t = base.to_vec();
                with_t.push((lay.t(), -1));
                term.ratio(&lay, lay.mono(&with_t), lay.mono(&base), k[i]);
            }
        }
    }
    for a in 0..n {
        for j in 0..n {
            let base = [(lay.u(j), 1), (lay.v(a), -1)];
            let mut with_t = base.to_vec();
            with_t.push((lay.t(), 1));
            term.ratio(&lay, lay.mono(&with_t), lay.mono(&base), k[j]);
        }
    }
    term
}

/// Summand `V_k` of the right side of the symmetric identity.
fn v_term(k: &[i64]) -> Term {
    let lay = Layout { n: k.len() };
    let n = lay.n;
    let mut term = Term::new();
    for &ka in k {
        term.ratio(&lay, lay.mono(&[(lay.q(), 1), (lay.t(), 1)]), lay.mono(&[(lay.q(), 1)]), ka);
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let base = [(lay.q(), -k[a] as i32), (lay.v(a), 1), (lay.v(b), -1)];
                let mut with_t = base.to_vec();
                with_t.push((lay.t(), -1));
                term.ratio(&lay, lay.mono(&with_t), lay.mono(&base), k[b]);
            }
        }
    }
    for a in 0..n {
        for j in 0..n {
            let base = [(lay.u(j), 1), (lay.v(a), -1)];
            let mut with_t = base.to_vec();
            with_t.push((lay.t(), 1));
            term.ratio(&lay, lay.mono(&with_t), lay.mono(&base), k[a]);
        }
    }
    term
}

fn eval_term(term: &Term, vals: &[Rational]) -> Result<Rational> {
    let mut num = Rational::one();
    let mut den = Rational::one();
    for f in &term.factors {
        let v = factor_value(&mono_value(&f.exps, vals));
        if f.denominator {
            den *= v;
        } else {
            num *= v;
        }
    }
    checked_ratio(num, den, || "symmetric summand".into())
}

/// `Res_{X=α}` of a summand in the root variable `X = vals[var]`.
///
/// A factor `m - 1/m` vanishing at `α` has derivative `2eσ/α` there, with `e` the
/// exponent of `X` in `m` and `σ = m(α) = ±1`.
fn residue_term(term: &Term, vals: &[Rational], var: usize, alpha: &Rational) -> Result<Rational> {
    let mut at = vals.to_vec();
    at[var] = alpha.clone();
    let mut order = 0i32;
    let mut num = Rational::one();
    let mut den = Rational::one();
    for f in &term.factors {
        let m = mono_value(&f.exps, &at);
        let v = factor_value(&m);
        let v = if v.is_zero() {
            let e = f.exps[var];
            if e == 0 {
                return Err(Error::DegenerateConfiguration("factor vanishes identically at the sample".into()));
            }
            order += if f.denominator { 1 } else { -1 };
            Rational::from_integer(BigInt::from(2 * e)) * m / alpha
        } else {
            v
        };
        if f.denominator {
            den *= v;
        } else {
            num *= v;
        }
    }
    match order {
        o if o <= 0 => Ok(Rational::zero()),
        1 => Ok(num / den),
        o => Err(Error::DegenerateConfiguration(format!("pole of order {o} at the residue point"))),
    }
}

/// Symmetric form of either side, used as a cross-check of the nonsymmetric evaluation.
pub fn symmetric_side(side: Side, s: &SqrtSample, total: i64) -> Result<Rational> {
    let vals = s.values();
    let mut sum = Rational::zero();
    for comp in compositions(s.n(), total) {
        let term = match side {
            Side::Left => u_term(&comp.parts),
            Side::Right => v_term(&comp.parts),
        };
        sum += eval_term(&term, &vals)?;
    }
    Ok(sum)
}

/// `U_k` under the involution equals `V_k`.
pub fn verify_involution(k: &[i64], s: &SqrtSample) -> Result<bool> {
    let u = eval_term(&u_term(k), &s.involution().values())?;
    let v = eval_term(&v_term(k), &s.values())?;
    if u != v {
        return Err(Error::IdentityViolation(format!("involution maps U_{k:?} to {u}, V_{k:?} is {v}")));
    }
    Ok(true)
}

/// `k ∈ I_p`: `k₁ ≥ k₂ + 1 - p` and `k₂ ≥ p`.
pub fn in_first_group(k: &[i64], p: i64) -> bool {
    k.len() >= 2 && k[0] >= k[1] + 1 - p && k[1] >= p
}

/// `l ∈ II_p`: `l₁ ≥ -p` and `l₂ ≥ l₁ + 1 + p`.
pub fn in_second_group(l: &[i64], p: i64) -> bool {
    l.len() >= 2 && l[0] >= -p && l[1] >= l[0] + 1 + p
}

/// `(k₁, k₂, k') ↦ (k₂ - p, k₁ + p, k')`, used for both directions.
pub fn phi_p(k: &[i64], p: i64) -> Vec<i64> {
    let mut out = k.to_vec();
    out[0] = k[1] - p;
    out[1] = k[0] + p;
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaP1Report {
    pub n: usize,
    pub total: i64,
    pub p: i64,
    pub pairs: usize,
    pub nonzero_pairs: usize,
    pub regular_terms: usize,
    pub bijection_ok: bool,
}

/// Pairwise cancellation of residues at `u₁ = u₂qᵖ` (and `v₂ = v₁qᵖ` for the right side).
pub fn verify_lemma_p1(n: usize, total: i64, p: i64, s: &SqrtSample) -> Result<LemmaP1Report> {
    if n < 2 || s.n() != n {
        return Err(Error::InvalidParams("lemma needs n ≥ 2 and a matching sample".into()));
    }
    let lay = Layout { n };
    let vals = s.values();
    let first: Vec<Vec<i64>> = compositions(n, total).map(|c| c.parts).filter(|k| in_first_group(k, p)).collect();
    if first.is_empty() {
        return Err(Error::InvalidParams(format!("I_p is empty for K = {total}, p = {p}")));
    }
    let second: Vec<Vec<i64>> = compositions(n, total).map(|c| c.parts).filter(|k| in_second_group(k, p)).collect();
    let bijection_ok = first.len() == second.len()
        && first.iter().all(|k| {
            let l = phi_p(k, p);
            in_second_group(&l, p) && phi_p(&l, p) == *k
        });
    if !bijection_ok {
        return Err(Error::IdentityViolation(format!("φ_p is not a bijection I_p → II_p for K = {total}, p = {p}")));
    }

    let qp = pow(&s.q_root, p);
    let u_alpha = &qp * &s.u_root[1];
    let v_alpha = &qp * &s.v_root[0];
    let mut nonzero = 0;
    for k in &first {
        let l = phi_p(k, p);
        for (build, var, alpha, label) in [
            (u_term as fn(&[i64]) -> Term, lay.u(0), &u_alpha, "U"),
            (v_term as fn(&[i64]) -> Term, lay.v(1), &v_alpha, "V"),
        ] {
            let a = residue_term(&build(k), &vals, var, alpha)?;
            let b = residue_term(&build(&l), &vals, var, alpha)?;
            if !(&a + &b).is_zero() {
                return Err(Error::IdentityViolation(format!("{label}-residues at k = {k:?}, p = {p}: {a} + {b} ≠ 0")));
            }
            if !a.is_zero() {
                nonzero += 1;
            }
        }
    }
    let mut regular = 0;
    for c in compositions(n, total) {
        let k = c.parts;
        if in_first_group(&k, p) || in_second_group(&k, p) {
            continue;
        }
        let a = residue_term(&u_term(&k), &vals, lay.u(0), &u_alpha)?;
        let b = residue_term(&v_term(&k), &vals, lay.v(1), &v_alpha)?;
        if !a.is_zero() || !b.is_zero() {
            return Err(Error::IdentityViolation(format!("unpaired summand k = {k:?} has a pole for p = {p}")));
        }
        regular += 1;
    }
    Ok(LemmaP1Report { n, total, p, pairs: first.len(), nonzero_pairs: nonzero, regular_terms: regular, bijection_ok })
}

/// `φ_p(u; v) = (-1)ᵖ [tq^{1-p};q]_{2p} / ([q;q]_p [q;q]_{p-1}) · ∏_{j≥2} [tuⱼ/v₁;q]_p/[u₁/uⱼ;q]_p · ∏_{b≥2} [tu₁/v_b;q]_p/[v_b/v₁;q]_p`
/// in root variables. The first factor is forced by the single-variable case.
fn lemma_2p_prefactor(vals: &[Rational], n: usize, p: i64) -> Result<Rational> {
    let lay = Layout { n };
    let q = &vals[lay.q()];
    let t = &vals[lay.t()];
    let u = |i: usize| &vals[lay.u(i)];
    let v = |a: usize| &vals[lay.v(a)];
    let sp = |z: Rational, k: i64| sym_pochhammer(&z, q, k);
    let sign = if p % 2 == 0 { Rational::one() } else { -Rational::one() };
    let mut acc = sign * sp(t * pow(q, 1 - p), 2 * p)?;
    acc = checked_ratio(acc, sp(q.clone(), p)? * sp(q.clone(), p - 1)?, || "[q;q]_p [q;q]_{p-1}".into())?;
    for j in 1..n {
        acc = checked_ratio(acc * sp(t * u(j) / v(0), p)?, sp(u(0) / u(j), p)?, || format!("[u1/u{j};q]_p"))?;
    }
    for b in 1..n {
        acc = checked_ratio(acc * sp(t * u(0) / v(b), p)?, sp(v(b) / v(0), p)?, || format!("[v{b}/v1;q]_p"))?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma2pReport {
    pub n: usize,
    pub k1: i64,
    pub p: i64,
    pub rest: Vec<i64>,
    pub v_side: String,
    pub u_side: String,
}

/// `Res_{v₁=q^{p-1}u₁} v₁⁻¹ X_{k₁,k'}(u;v) = φ_p(u;v) X_{k₁-p,k'}(qv₁,u'; q⁻¹u₁,v')` for `X = V, U`.
pub fn verify_lemma_2p(n: usize, k1: i64, rest: &[i64], p: i64, s: &SqrtSample) -> Result<Lemma2pReport> {
    if n < 1 || s.n() != n || rest.len() + 1 != n {
        return Err(Error::InvalidParams("lemma needs k' of length n - 1 and a matching sample".into()));
    }
    if !(1 <= p && p <= k1) {
        return Err(Error::InvalidParams(format!("need 1 ≤ p ≤ k₁, have p = {p}, k₁ = {k1}")));
    }
    let lay = Layout { n };
    let mut k = vec![k1];
    k.extend_from_slice(rest);
    let mut reduced = vec![k1 - p];
    reduced.extend_from_slice(rest);

    let q = s.q_root.clone();
    let alpha = pow(&q, p - 1) * &s.u_root[0];
    let mut at = s.values();
    at[lay.v(0)] = alpha.clone();
    let phi = lemma_2p_prefactor(&at, n, p)?;
    // Starred point: U₁* = Q V₁, V₁* = U₁ / Q.
    let mut star = at.clone();
    star[lay.u(0)] = &q * &alpha;
    star[lay.v(0)] = &s.u_root[0] / &q;

    // Res_{v=a} v⁻¹ f = (2/α) Res_{V=α} f.
    let jac = Rational::from_integer(BigInt::from(2)) / &alpha;
    let mut out = Vec::new();
    for (build, label) in [(v_term as fn(&[i64]) -> Term, "V"), (u_term as fn(&[i64]) -> Term, "U")] {
        let lhs = &jac * residue_term(&build(&k), &s.values(), lay.v(0), &alpha)?;
        let rhs = &phi * eval_term(&build(&reduced), &star)?;
        if lhs != rhs {
            return Err(Error::IdentityViolation(format!(
                "{label}-recursion at k = {k:?}, p = {p}: residue {lhs}, predicted {rhs}"
            )));
        }
        out.push(lhs.to_string());
    }
    Ok(Lemma2pReport { n, k1, p, rest: rest.to_vec(), v_side: out[0].clone(), u_side: out[1].clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(seed: u64, n: usize) -> SqrtSample {
        SqrtSample::random_generic(n, 12, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn pochhammer_examples() {
        let z = rat(3, 7);
        let q = rat(-2, 5);
        assert!(q_pochhammer(&z, &q, 0).unwrap().is_one());
        let two = (Rational::one() - &z) * (Rational::one() - &q * &z);
        assert_eq!(q_pochhammer(&z, &q, 2).unwrap(), two);
        // (z/q;q)₁ · (z;q)₋₁ = 1
        let inv = q_pochhammer(&z, &q, -1).unwrap();
        assert!((q_pochhammer(&(&z / &q), &q, 1).unwrap() * inv).is_one());
        assert!(matches!(q_pochhammer(&q, &q, -1), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn nonsymmetric_cocycle_for_negative_index() {
        let z = rat(5, 3);
        let q = rat(2, 9);
        for a in -3..=3i64 {
            for b in -3..=3i64 {
                let lhs = q_pochhammer(&z, &q, a + b).unwrap();
                let rhs = q_pochhammer(&z, &q, a).unwrap() * q_pochhammer(&(pow(&q, a) * &z), &q, b).unwrap();
                assert_eq!(lhs, rhs, "a={a}, b={b}");
            }
        }
    }

    #[test]
    fn symmetric_matches_nonsymmetric_up_to_prefactor() {
        // [z;q]_k = (-1)^k z^{-k/2} q^{-k(k-1)/4} (z;q)_k
        let zeta = rat(3, 4);
        let qr = rat(-5, 2);
        for k in 0..5i64 {
            let sym = sym_pochhammer(&zeta, &qr, k).unwrap();
            let non = q_pochhammer(&(&zeta * &zeta), &(&qr * &qr), k).unwrap();
            let sign = if k % 2 == 0 { rat(1, 1) } else { rat(-1, 1) };
            let pre = sign * pow(&zeta, -k) * pow(&qr, -(k * (k - 1) / 2));
            assert_eq!(sym, pre * non);
        }
    }

    #[test]
    fn composition_enumeration() {
        let two: Vec<Vec<i64>> = compositions(2, 2).map(|c| c.parts).collect();
        assert_eq!(two, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(compositions(1, 5).map(|c| c.parts).collect::<Vec<_>>(), vec![vec![5]]);
        assert_eq!(compositions(3, 4).count(), 15);
        assert!(compositions(3, 4).all(|c| c.parts.iter().sum::<i64>() == 4 && c.total == 4));
    }

    /// Direct expansion of the two two-term sums for `n = 2`, `K = 1`.
    fn two_term_oracle(s: &HypSample) -> (Rational, Rational) {
        let one = Rational::one();
        let (q, t) = (&s.q, &s.t);
        let f = |z: Rational| one.clone() - z;
        let pre = f(q * t) / f(q.clone());
        // Left: k = (1,0) and (0,1). Factor (t⁻¹ q^{-k_j} uᵢ/uⱼ; q)_{kᵢ} is nontrivial only for kᵢ = 1.
        let left_term = |i: usize, j: usize| {
            let cross = f(&s.u[i] / &s.u[j] / t) / f(&s.u[i] / &s.u[j]);
            let mixed = (0..2).map(|a| f(t * &s.u[i] / &s.v[a]) / f(&s.u[i] / &s.v[a])).fold(one.clone(), |x, y| x * y);
            &pre * cross * mixed
        };
        let right_term = |a: usize, b: usize| {
            // (t⁻¹ q^{-k_a} v_a/v_b; q)_{k_b} nontrivial for k_b = 1, where k_a = 0.
            let cross = f(&s.v[a] / &s.v[b] / t) / f(&s.v[a] / &s.v[b]);
            let mixed = (0..2).map(|j| f(t * &s.u[j] / &s.v[b]) / f(&s.u[j] / &s.v[b])).fold(one.clone(), |x, y| x * y);
            &pre * cross * mixed
        };
        (left_term(0, 1) + left_term(1, 0), right_term(1, 0) + right_term(0, 1))
    }

    #[test]
    fn theorem2_fixed_sample() {
        let s = HypSample {
            q: rat(2, 1),
            t: rat(3, 1),
            u: vec![rat(1, 1), rat(5, 1)],
            v: vec![rat(7, 1), rat(11, 1)],
        };
        let left = theorem2_side(Side::Left, &s, 1).unwrap();
        let right = theorem2_side(Side::Right, &s, 1).unwrap();
        let (ol, or) = two_term_oracle(&s);
        assert_eq!(left, ol);
        assert_eq!(right, or);
        assert_eq!(left, right);
        assert!(theorem2_side(Side::Left, &s, 0).unwrap().is_one());
        assert!(theorem2_side(Side::Right, &s, 0).unwrap().is_one());
    }

    #[test]
    fn theorem2_single_variable_is_termwise() {
        let s = HypSample { q: rat(3, 7), t: rat(-2, 5), u: vec![rat(4, 9)], v: vec![rat(-8, 3)] };
        for k in 0..6 {
            let l = theorem2_side(Side::Left, &s, k).unwrap();
            let r = theorem2_side(Side::Right, &s, k).unwrap();
            let expect = q_pochhammer(&(&s.q * &s.t), &s.q, k).unwrap() / q_pochhammer(&s.q, &s.q, k).unwrap()
                * q_pochhammer(&(&s.t * &s.u[0] / &s.v[0]), &s.q, k).unwrap()
                / q_pochhammer(&(&s.u[0] / &s.v[0]), &s.q, k).unwrap();
            assert_eq!(l, expect);
            assert_eq!(r, expect);
        }
    }

    #[test]
    fn theorem2_random_samples() {
        for (n, k, trials) in [(2usize, 3i64, 20usize), (3, 2, 10), (1, 5, 5), (2, 1, 20), (3, 1, 20)] {
            let rep = verify_theorem2(n, k, trials, 7).unwrap();
            assert!(rep.all_equal && rep.samples.len() == trials);
        }
    }

    #[test]
    fn symmetric_form_agrees_on_root_samples() {
        for seed in 0..6 {
            let s = sample(seed, 2);
            for k in 0..=3 {
                let l = symmetric_side(Side::Left, &s, k).unwrap();
                let r = symmetric_side(Side::Right, &s, k).unwrap();
                assert_eq!(l, r, "seed {seed}, K = {k}");
            }
        }
    }

    #[test]
    fn pochhammer_lemma_examples() {
        let u = rat(3, 5);
        let q = rat(7, 2);
        verify_pochhammer_lemmas(&u, &q, 2, 3, 0).unwrap();
        verify_pochhammer_lemmas(&u, &q, 1, 1, 1).unwrap();
        verify_pochhammer_lemmas(&u, &q, 0, 0, 2).unwrap();
        for m in -2..=3 {
            for n in -2..=3 {
                for p in -2..=3 {
                    verify_pochhammer_lemmas(&u, &q, m, n, p).unwrap();
                }
            }
        }
    }

    #[test]
    fn lemma_p1_maps_and_residues() {
        for k in compositions(2, 3).map(|c| c.parts) {
            if in_second_group(&k, 1) {
                assert!(in_first_group(&phi_p(&k, 1), 1));
                assert_eq!(phi_p(&phi_p(&k, 1), 1), k);
            }
        }
        let s = sample(11, 2);
        let rep = verify_lemma_p1(2, 2, 1, &s).unwrap();
        assert!(rep.nonzero_pairs > 0);
        for total in 1..=3i64 {
            for p in (1 - total)..=(total - 1) {
                for seed in 0..3 {
                    verify_lemma_p1(2, total, p, &sample(100 + seed, 2)).unwrap();
                }
            }
        }
        verify_lemma_p1(3, 2, 1, &sample(5, 3)).unwrap();
    }

    #[test]
    fn lemma_2p_recursion() {
        for k1 in 1..=3 {
            for p in 1..=k1 {
                for k2 in 0..=2 {
                    for seed in 0..2 {
                        verify_lemma_2p(2, k1, &[k2], p, &sample(200 + seed, 2)).unwrap();
                    }
                }
            }
        }
        verify_lemma_2p(2, 1, &[0], 1, &sample(3, 2)).unwrap();
        for k1 in 1..=4 {
            for p in 1..=k1 {
                verify_lemma_2p(1, k1, &[], p, &sample(300 + k1 as u64, 1)).unwrap();
            }
        }
        verify_lemma_2p(3, 2, &[1, 0], 2, &sample(4, 3)).unwrap();
    }

    #[test]
    fn involution_exchanges_summands() {
        let s = sample(9, 3);
        for k in compositions(3, 3).map(|c| c.parts) {
            verify_involution(&k, &s).unwrap();
        }
    }

    #[test]
    fn hyp_pochhammer_examples() {
        let p = ModelParams::new(
            crate::special_functions::Periods::new(Complex64::new(1.0, 0.0), Complex64::new(0.7, 0.2)).unwrap(),
            Complex64::new(0.5, 0.0),
        )
        .unwrap();
        let x = Complex64::new(0.31, -0.4);
        assert_eq!(hyp_pochhammer(x, 0, 0, &p).unwrap(), Complex64::new(1.0, 0.0));
        let one = hyp_pochhammer(x, 1, 0, &p).unwrap();
        let expect = 2.0 * (std::f64::consts::PI * x / p.omega.omega2).sin();
        assert!((one - expect).norm() < 1e-14);
        let full = hyp_pochhammer(x, 2, 3, &p).unwrap();
        let split = hyp_pochhammer(x, 2, 0, &p).unwrap() * hyp_pochhammer(x, 0, 3, &p).unwrap();
        assert!((full - split).norm() < 1e-12 * full.norm());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn theorem2_holds_small(seed in 0u64..1000, n in 1usize..=3, k in 0i64..=3) {
            let rep = verify_theorem2(n, k, 2, seed).unwrap();
            prop_assert!(rep.all_equal);
        }

        #[test]
        fn symmetric_cocycle(zn in 1i64..9, zd in 1i64..9, a in -3i64..=3, b in -3i64..=3) {
            let z = rat(zn, zd);
            let q = rat(3, 2);
            prop_assume!(z != rat(1, 1));
            let lhs = sym_pochhammer(&z, &q, a + b);
            let rhs = sym_pochhammer(&z, &q, a).and_then(|x| Ok(x * sym_pochhammer(&(pow(&q, a) * &z), &q, b)?));
            if let (Ok(l), Ok(r)) = (lhs, rhs) {
                prop_assert_eq!(l, r);
            }
        }
    }
}
