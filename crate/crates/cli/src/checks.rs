//! The verification suites behind each subcommand.

use crate::config::{parse_grid, Preset, RunConfig};
use crate::report::{Case, Report};
use num_complex::Complex64;
use qbaxter::difference_operators::{check_kernel_identity, AnalyticTestFunction};
use qbaxter::kernels::{ModelParams, PointTuple};
use qbaxter::q_identities::{
    compositions, rat, verify_involution, verify_lemma_2p, verify_lemma_p1, verify_pochhammer_lemmas, verify_theorem2,
    SqrtSample,
};
use qbaxter::quadrature::{
    eigenfunction_check_n2, integrate_q, verify_commutativity, verify_mq_commutation, IntegrationPlan,
};
use qbaxter::residue_series::{check_generic, double_zero_check, series_q_sum, verify_lr_equality, PairCoincidence, SeriesOrder};
use qbaxter::special_functions::{
    double_sine, double_sine_product, double_sine_strip, s2_inv_residue, s2_residue, PrecisionPolicy, Periods,
};
use qbaxter::{Error, LatticePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;
use std::time::Instant;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Independent stream per check, fixed by the run seed.
fn rng(cfg: &RunConfig, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(stream);
    r
}

fn n_values(cfg: &RunConfig, max: usize) -> Vec<usize> {
    match (cfg.scenario.n, cfg.preset) {
        (Some(n), _) => vec![n.min(max)],
        (None, Preset::Quick) => vec![1],
        (None, Preset::Desk) => (1..=max).collect(),
    }
}

fn timed(check: &str, cfg: &RunConfig, body: impl FnOnce() -> Vec<Case>) -> Report {
    let t = Instant::now();
    let cases = body();
    Report::new(check, cfg, cases, vec![], t.elapsed().as_secs_f64() * 1e3)
}

/// Folds a residual computation into a case, turning errors into failed cases.
fn case_from(case: Case, r: Result<Case, Error>) -> Case {
    match r {
        Ok(c) => c,
        Err(e) => case.failed(e),
    }
}

fn max_of(vals: impl IntoIterator<Item = f64>) -> f64 {
    vals.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

/// Random points in `|Re| < 2.5`, `|Im| < 1.5` at distance ≥ 0.05 from both lattices.
fn s2_points(r: &mut ChaCha8Rng, count: usize, om: &Periods) -> Vec<Complex64> {
    let near = |z: Complex64| {
        (-6i64..=6).any(|m| (-6i64..=6).any(|k| (z - om.omega1 * m as f64 - om.omega2 * k as f64).norm() < 0.05))
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = c(r.gen_range(-2.5..2.5), r.gen_range(-1.5..1.5));
        if !near(z) {
            out.push(z);
        }
    }
    out
}

/// `(1/2πi)∮ f` on a circle of radius `r` by the 128-point trapezoid rule.
fn contour_residue(f: impl Fn(Complex64) -> Result<Complex64, Error>, at: Complex64, r: f64) -> Result<Complex64, Error> {
    let n = 128;
    let mut acc = c(0.0, 0.0);
    for j in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        acc += f(at + r * e)? * r * e;
    }
    Ok(acc / n as f64)
}

pub fn verify_s2(cfg: &RunConfig) -> Report {
    timed("verify-s2", cfg, || {
        let om = cfg.model().omega;
        let pol = PrecisionPolicy::default();
        let s = |z: Complex64, om: &Periods| double_sine(z, om, &pol);
        let mut r = rng(cfg, 1);
        let pts = s2_points(&mut r, 100, &om);
        let tol = cfg.tol("s2_identity");
        let inputs = json!({ "omega": [om.omega1, om.omega2], "points": pts.len() });
        let mut cases = Vec::new();

        let run = |name: &str, f: &dyn Fn() -> Result<f64, Error>, tol: f64, inputs: serde_json::Value| {
            let case = Case::new(name, inputs);
            case_from(case.clone(), f().map(|v| case.residual("max", v, tol)))
        };

        cases.push(run(
            "reflection",
            &|| Ok(max_of(pts.iter().map(|&z| Ok::<f64, Error>((s(z, &om)? * s(om.sum() - z, &om)? - 1.0).norm())).collect::<Result<Vec<_>, _>>()?)),
            tol,
            inputs.clone(),
        ));
        cases.push(run(
            "shifts",
            &|| {
                let mut out = Vec::new();
                for &z in &pts {
                    let v = s(z, &om)?;
                    out.push(rel(2.0 * (PI * z / om.omega2).sin() * s(z + om.omega1, &om)?, v));
                    out.push(rel(2.0 * (PI * z / om.omega1).sin() * s(z + om.omega2, &om)?, v));
                }
                Ok(max_of(out))
            },
            tol,
            inputs.clone(),
        ));
        cases.push(run(
            "factorization",
            &|| {
                let mut out = Vec::new();
                for &z in pts.iter().take(20) {
                    for m in -2i64..=2 {
                        for k in -2i64..=2 {
                            let (a, b) = (om.omega1 * m as f64, om.omega2 * k as f64);
                            let sign = if (m * k).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                            out.push(rel(s(z, &om)? * s(z + a + b, &om)?, sign * s(z + a, &om)? * s(z + b, &om)?));
                        }
                    }
                }
                Ok(max_of(out))
            },
            tol,
            json!({ "omega": [om.omega1, om.omega2], "points": 20, "shifts": "m, k in -2..=2" }),
        ));
        cases.push(run(
            "homogeneity",
            &|| {
                let mut out = Vec::new();
                for gamma in [c(0.5, 0.0), c(2.0, 0.0), Complex64::from_polar(1.0, 0.3)] {
                    let scaled = om.scaled(gamma)?;
                    for &z in &pts {
                        out.push(rel(s(gamma * z, &scaled)?, s(z, &om)?));
                    }
                }
                Ok(max_of(out))
            },
            tol,
            inputs.clone(),
        ));
        cases.push(run(
            "period_swap",
            &|| Ok(max_of(pts.iter().map(|&z| Ok::<f64, Error>(rel(s(z, &om.swapped())?, s(z, &om)?))).collect::<Result<Vec<_>, _>>()?)),
            tol,
            inputs.clone(),
        ));

        let tilted = Periods::new(c(1.0, 0.0), c(1.0, 1.0)).expect("fixed periods");
        let strip_pts: Vec<Complex64> = (0..50).map(|_| c(r.gen_range(0.05..1.95), r.gen_range(-1.0..1.0))).collect();
        cases.push(run(
            "product_vs_integral",
            &|| {
                Ok(max_of(
                    strip_pts
                        .iter()
                        .map(|&z| Ok::<f64, Error>(rel(double_sine_product(z, &tilted, &pol)?, double_sine_strip(z, &tilted, &pol)?)))
                        .collect::<Result<Vec<_>, _>>()?,
                ))
            },
            cfg.tol("s2_product"),
            json!({ "omega": [tilted.omega1, tilted.omega2], "points": strip_pts.len() }),
        ));

        let unit = Periods::real(1.0, 1.0).expect("fixed periods");
        cases.push(run(
            "special_values",
            &|| {
                Ok(max_of([
                    (s(om.sum() / 2.0, &om)? - 1.0).norm(),
                    (s(tilted.sum() / 2.0, &tilted)? - 1.0).norm(),
                    (s(c(0.5, 0.0), &unit)? - 2f64.sqrt()).norm(),
                ]))
            },
            cfg.tol("s2_special"),
            json!({ "values": ["S2((w1+w2)/2) = 1", "S2(1/2|1,1) = sqrt 2"] }),
        ));

        // Closed-form residues need an irrational period ratio.
        let res_om = if qbaxter::special_functions::rational_ratio(&om).is_some() { Periods::real(1.0, 2f64.sqrt()).expect("fixed") } else { om };
        cases.push(run(
            "residues",
            &|| {
                let mut out = Vec::new();
                for (m, k) in [(1, 1), (2, 1), (1, 2)] {
                    let at = res_om.omega1 * m as f64 + res_om.omega2 * k as f64;
                    let numeric = contour_residue(|z| s(z, &res_om), at, 0.05)?;
                    out.push(rel(numeric, s2_residue(LatticePoint::new(m, k), &res_om)?));
                }
                for (m, k) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let at = -(res_om.omega1 * m as f64 + res_om.omega2 * k as f64);
                    let numeric = contour_residue(|z| Ok(1.0 / s(z, &res_om)?), at, 0.05)?;
                    out.push(rel(numeric, s2_inv_residue(LatticePoint::new(m, k), &res_om)?));
                }
                Ok(max_of(out))
            },
            cfg.tol("s2_residue"),
            json!({ "omega": [res_om.omega1, res_om.omega2], "poles": [[1, 1], [2, 1], [1, 2]], "zeros": [[0, 0], [1, 0], [0, 1], [1, 1]] }),
        ));
        cases
    })
}

pub fn verify_kernel_identity(cfg: &RunConfig) -> Report {
    timed("verify-kernel-identity", cfg, || {
        let samples = cfg.scenario.trials.unwrap_or(50);
        let mut r = rng(cfg, 2);
        let mut cases = Vec::new();
        for n in n_values(cfg, 3) {
            for rr in 1..=n {
                let mut worst: f64 = 0.0;
                let mut done = 0;
                while done < samples {
                    let mut pick = |k: usize| PointTuple::new((0..k).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-0.5..0.5))).collect()).expect("finite");
                    let (z, y) = (pick(n), pick(n));
                    let alpha = c(r.gen_range(-1.0..1.0), r.gen_range(-0.5..0.5));
                    match check_kernel_identity(&z, &y, alpha, rr) {
                        Ok((l, rhs)) => {
                            worst = worst.max((l - rhs).norm() / l.norm().max(rhs.norm()).max(1.0));
                            done += 1;
                        }
                        Err(Error::SingularDenominator) => continue,
                        Err(e) => return vec![Case::new(format!("n={n},r={rr}"), json!({})).failed(e)],
                    }
                }
                cases.push(
                    Case::new(format!("n={n},r={rr}"), json!({ "n": n, "r": rr, "samples": samples }))
                        .residual("max", worst, cfg.tol("kernel_identity")),
                );
            }
        }
        cases
    })
}

pub fn verify_theorem2_check(cfg: &RunConfig) -> Report {
    timed("verify-theorem2", cfg, || {
        let trials = cfg.scenario.trials.unwrap_or(20);
        let ks: Vec<i64> = match cfg.scenario.k {
            Some(k) => vec![k],
            None => (0..=4).collect(),
        };
        let mut cases = Vec::new();
        for n in n_values(cfg, 3) {
            for &k in &ks {
                let seed = cfg.seed.wrapping_add(1000 * n as u64 + k as u64);
                let case = Case::new(format!("n={n},K={k}"), json!({ "n": n, "K": k, "trials": trials, "seed": seed }));
                cases.push(match verify_theorem2(n, k, trials, seed) {
                    Ok(rep) => {
                        let unequal = rep.samples.iter().filter(|s| !s.equal).count();
                        case.residual("unequal_samples", unequal as f64, 0.5)
                            .outputs(json!({ "samples": rep.samples.len(), "resampled": rep.resampled }))
                    }
                    Err(e) => case.failed(e),
                });
            }
        }
        cases
    })
}

pub fn verify_lemmas_q(cfg: &RunConfig) -> Report {
    timed("verify-lemmas-q", cfg, || {
        let mut r = rng(cfg, 4);
        let mut cases = Vec::new();

        let (u, q) = (rat(r.gen_range(2..9), r.gen_range(2..9)), rat(r.gen_range(2..9), r.gen_range(11..19)));
        let mut bad = 0;
        let mut checked = 0;
        let mut err = None;
        for m in -2..=3 {
            for n in -2..=3 {
                for p in -2..=3 {
                    match verify_pochhammer_lemmas(&u, &q, m, n, p) {
                        Ok(rep) => {
                            checked += 1;
                            bad += (!rep.shift_rule || !rep.reflection_rule) as usize;
                        }
                        Err(Error::ZeroDenominator(_)) => {}
                        Err(e) => err = Some(e),
                    }
                }
            }
        }
        let case = Case::new("pochhammer_rules", json!({ "u_root": u.to_string(), "q_root": q.to_string(), "range": "m, n, p in -2..=3" }));
        cases.push(match err {
            Some(e) => case.failed(e),
            None => case.residual("violations", bad as f64, 0.5).outputs(json!({ "checked": checked })),
        });

        let kmax = cfg.scenario.k.unwrap_or(3);
        for total in 1..=kmax {
            for p in (1 - total)..=(total - 1) {
                let s = SqrtSample::random_generic(2, 12, &mut r);
                let case = Case::new(format!("p1:K={total},p={p}"), json!({ "n": 2, "K": total, "p": p }));
                cases.push(match verify_lemma_p1(2, total, p, &s) {
                    Ok(rep) => case.residual("violations", 0.0, 0.5).outputs(json!({ "pairs": rep.pairs, "nonzero_pairs": rep.nonzero_pairs })),
                    Err(Error::InvalidParams(_)) => continue,
                    Err(e) => case.failed(e),
                });
            }
        }
        for k1 in 1..=kmax {
            for p in 1..=k1 {
                for k2 in 0..=(kmax - k1) {
                    let s = SqrtSample::random_generic(2, 12, &mut r);
                    let case = Case::new(format!("2p:k1={k1},k2={k2},p={p}"), json!({ "n": 2, "k1": k1, "rest": [k2], "p": p }));
                    cases.push(match verify_lemma_2p(2, k1, &[k2], p, &s) {
                        Ok(_) => case.residual("violations", 0.0, 0.5),
                        Err(e) => case.failed(e),
                    });
                }
            }
        }
        let s = SqrtSample::random_generic(2, 12, &mut r);
        let case = Case::new("involution", json!({ "n": 2, "K": kmax }));
        let res: Result<usize, Error> =
            compositions(2, kmax).map(|k| verify_involution(&k.parts, &s).map(|_| 1)).sum::<Result<usize, Error>>();
        cases.push(match res {
            Ok(cnt) => case.residual("violations", 0.0, 0.5).outputs(json!({ "compositions": cnt })),
            Err(e) => case.failed(e),
        });
        cases
    })
}

fn generic_point(r: &mut ChaCha8Rng, len: usize, p: &ModelParams) -> PointTuple {
    loop {
        let z = PointTuple::real(&(0..len).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<_>>()).expect("finite");
        if check_generic(&z, p).is_ok() {
            return z;
        }
    }
}

/// Smallest distance from the double sine arguments of every term in the symmetrized sum to
/// the zero and pole lattices, leaving out the coinciding factor inside each pair.
fn pair_clearance(pc: &PairCoincidence, p: &ModelParams) -> f64 {
    let (w1, w2) = (p.omega.omega1, p.omega.omega2);
    let k = pc.anchors.len();
    let n = 2 * k;
    let h = p.gstar / 2.0;
    let zs: Vec<Complex64> = pc.z.coords.iter().map(|z| Complex64::i() * z).collect();
    let mut args = Vec::new();
    for pattern in 0..1usize << n {
        let w: Vec<Complex64> = (0..n)
            .map(|i| {
                let j = i / 2;
                let mut v = pc.anchors[j];
                for (c, om) in [w1, w2].into_iter().enumerate() {
                    let swapped = pattern >> (2 * j + c) & 1 == 1;
                    let m = if (i % 2 == 0) != swapped { pc.p[j][c] } else { pc.q[j][c] };
                    v += om * m as f64;
                }
                v
            })
            .collect();
        for i in 0..n {
            for za in &zs {
                args.push(w[i] - za + h);
                args.push(za - w[i] + h);
            }
            for j in (0..n).filter(|j| *j != i) {
                let d = w[i] - w[j];
                if i / 2 != j / 2 {
                    args.push(d);
                }
                args.push(d + p.g);
            }
        }
    }
    lattice_distance(args, p)
}

fn lattice_distance(args: Vec<Complex64>, p: &ModelParams) -> f64 {
    let (w1, w2) = (p.omega.omega1, p.omega.omega2);
    let lat = |m: [i64; 2]| w1 * m[0] as f64 + w2 * m[1] as f64;
    let mut best = f64::INFINITY;
    for x in args {
        for m in 0..=6 {
            for k in 0..=6 {
                let l = lat([m, k]);
                best = best.min((x + l).norm()).min((x - w1 - w2 - l).norm());
            }
        }
    }
    best
}

fn pair_config(n: usize, r: &mut ChaCha8Rng, p: &ModelParams) -> Option<PairCoincidence> {
    let k = n / 2;
    let (w1, w2) = (p.omega.omega1, p.omega.omega2);
    // Pair differences `p - q` whose paired factor stays clear of the lattices.
    let clear = |d: [i64; 2]| {
        let args = [1.0, -1.0]
            .into_iter()
            .flat_map(|s0| [1.0, -1.0].map(|s1| p.g + w1 * (s0 * d[0] as f64) + w2 * (s1 * d[1] as f64)))
            .collect();
        lattice_distance(args, p) > 0.1
    };
    let offsets: Vec<[i64; 2]> = (0..k)
        .map(|j| {
            let d = [[2 + j as i64, 2], [1, 1], [1, 2], [2, 1]].into_iter().find(|d| clear(*d)).unwrap_or([2 + j as i64, 2]);
            [d[0], d[1] - 1]
        })
        .collect();
    for attempt in 0..1500 {
        let need = [0.2, 0.15, 0.1, 0.05][attempt / 400];
        let pc = PairCoincidence {
            z: PointTuple::real(&(0..2 * n).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<_>>()).expect("finite"),
            lambda: c(-0.3, 0.05),
            anchors: (0..k).map(|_| c(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5))).collect(),
            p: offsets.clone(),
            q: (0..k).map(|_| [0, -1]).collect(),
            free: Vec::new(),
        };
        if pair_clearance(&pc, p) > need {
            return Some(pc);
        }
    }
    None
}

pub fn verify_residue_series(cfg: &RunConfig) -> Report {
    timed("verify-residue-series", cfg, || {
        let p = cfg.model();
        let mut r = rng(cfg, 5);
        let mut cases = Vec::new();
        let mmax = cfg.scenario.k.unwrap_or(2).min(2) as usize;
        for n in n_values(cfg, 2) {
            let z = generic_point(&mut r, 2 * n, &p);
            for m in 0..=mmax {
                for k in 0..=mmax {
                    let case = Case::new(format!("blocks:n={n},M={m},K={k}"), json!({ "n": n, "M": m, "K": k, "z": z.coords }));
                    cases.push(match verify_lr_equality(n, m, k, &z, &p) {
                        Ok(rep) => case.residual("worst_relative", rep.worst, cfg.tol("lr_blocks")).outputs(json!({ "subsets": rep.blocks.len() })),
                        Err(e) => case.failed(e),
                    });
                }
            }
        }
        if cfg.preset == Preset::Desk && cfg.scenario.n.is_none() {
            let eps = [1e-2, 1e-3, 1e-4];
            for (label, n) in [("double_zero:one_pair", 2), ("double_zero:two_pairs", 4)] {
                let Some(pc) = pair_config(n, &mut r, &p) else {
                    cases.push(Case::new(label, json!({ "n": n })).failed("no sample configuration clear of the lattices"));
                    continue;
                };
                let case = Case::new(label, json!({
                    "n": n, "pairs": n / 2, "eps": eps, "lambda": pc.lambda, "anchors": pc.anchors, "z": pc.z.coords,
                    "p": pc.p, "q": pc.q, "clearance": pair_clearance(&pc, &p)
                }));
                cases.push(match double_zero_check(&pc, &eps, &p) {
                    Ok(rep) => case
                        .residual("slope_relative", (rep.slope - rep.expected).abs() / rep.expected, cfg.tol("double_zero_slope"))
                        .outputs(json!({ "slope": rep.slope, "expected": rep.expected, "terms": rep.terms, "single_term_slope": rep.single_slope })),
                    Err(e) => case.failed(e),
                });
            }
        }
        let z = generic_point(&mut r, 2, &p);
        let plan = IntegrationPlan::default();
        for lambda in [c(-1.0, 0.0), c(-1.25, 0.1), c(-1.5, -0.1)] {
            let case = Case::new(format!("series_vs_quadrature:lambda={lambda}"), json!({ "n": 1, "z": z.coords, "lambda": lambda, "order": [12, 12] }));
            let res = integrate_q(&z, lambda, &p, &plan).and_then(|q| {
                let s = series_q_sum(&z, lambda, SeriesOrder { m_max: 12, k_max: 12 }, &p)?;
                Ok(case.clone().residual("relative", rel(s.value, q.value), cfg.tol("series_quadrature")).outputs(json!({
                    "quadrature": q.value, "quadrature_error": q.error, "series": s.value, "series_tail": s.tail_bound
                })))
            });
            cases.push(case_from(case, res));
        }
        cases
    })
}

fn lambdas(cfg: &RunConfig) -> Vec<Complex64> {
    match cfg.scenario.lambda {
        Some([re, im]) => vec![c(re, im)],
        None => [0.2, -0.2, 0.5, -0.5, 0.8].iter().map(|&x| c(x, 0.0)).collect(),
    }
}

pub fn verify_q_commutativity(cfg: &RunConfig) -> Report {
    timed("verify-q-commutativity", cfg, || {
        let p = cfg.model();
        let mut r = rng(cfg, 6);
        let mut cases = Vec::new();
        for n in n_values(cfg, 2) {
            let z = PointTuple::real(&(0..2 * n).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<_>>()).expect("finite");
            let (plan, tol) = if n == 1 {
                (IntegrationPlan::default(), cfg.tol("commutativity_n1"))
            } else {
                (IntegrationPlan::coarse(), cfg.tol("commutativity_n2"))
            };
            for lambda in lambdas(cfg) {
                let case = Case::new(format!("n={n},lambda={lambda}"), json!({ "n": n, "z": z.coords, "lambda": lambda }));
                let res = verify_commutativity(&z, lambda, &p, &plan, tol).map(|rep| {
                    case.clone().residual("relative", rep.relative_residual, tol).outputs(json!({
                        "lhs": rep.lhs, "rhs": rep.rhs, "lhs_error": rep.lhs_error, "rhs_error": rep.rhs_error
                    }))
                });
                cases.push(case_from(case, res));
            }
        }
        cases
    })
}

pub fn verify_mq(cfg: &RunConfig) -> Report {
    timed("verify-mq-commutation", cfg, || {
        let p = cfg.model();
        let mut r = rng(cfg, 7);
        let mut cases = Vec::new();
        for n in n_values(cfg, 2) {
            let centers: Vec<f64> = (0..n).map(|_| r.gen_range(-0.3..0.3)).collect();
            let widths: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..1.0)).collect();
            let f = AnalyticTestFunction::gaussian(centers.clone(), widths.clone());
            let z = PointTuple::real(&(0..n).map(|_| r.gen_range(-0.6..0.6)).collect::<Vec<_>>()).expect("finite");
            let lambda = match cfg.scenario.lambda {
                Some([re, im]) => c(re, im),
                None => c(r.gen_range(-0.3..0.3), 0.0),
            };
            let (plan, tol) = if n == 1 {
                (IntegrationPlan::default(), cfg.tol("mq_n1"))
            } else {
                (IntegrationPlan { tolerance: 1e-9, ..Default::default() }, cfg.tol("mq_n2"))
            };
            for rr in 1..=n {
                let case = Case::new(
                    format!("n={n},r={rr}"),
                    json!({ "n": n, "r": rr, "z": z.coords, "lambda": lambda, "gaussian_centers": centers, "gaussian_widths": widths }),
                );
                let res = verify_mq_commutation(rr, &f, &z, lambda, &p, &plan, tol).map(|rep| {
                    case.clone().residual("relative", rep.relative_residual, tol).outputs(json!({
                        "lhs": rep.lhs, "rhs": rep.rhs, "lhs_error": rep.lhs_error, "rhs_error": rep.rhs_error
                    }))
                });
                cases.push(case_from(case, res));
            }
        }
        cases
    })
}

pub fn verify_eigenfunction(cfg: &RunConfig) -> Report {
    timed("verify-eigenfunction-n2", cfg, || {
        let p = cfg.model();
        let mut r = rng(cfg, 8);
        let l1 = c(r.gen_range(-0.4..0.4), 0.0);
        let l2 = c(r.gen_range(-0.4..0.4), 0.0);
        let x = PointTuple::real(&[r.gen_range(-0.6..0.6), r.gen_range(-0.6..0.6)]).expect("finite");
        let tol = cfg.tol("eigenfunction");
        let case = Case::new("n=2", json!({ "lambda1": l1, "lambda2": l2, "x": x.coords }));
        let res = eigenfunction_check_n2(l1, l2, &x, &p, &IntegrationPlan::default(), tol).map(|rep| {
            case.clone()
                .residual("m1", rep.residual_m1, tol)
                .residual("m2", rep.residual_m2, tol)
                .outputs(json!({ "psi": rep.psi, "m1_psi": rep.m1_psi, "m2_psi": rep.m2_psi, "e1": rep.e1, "e2": rep.e2 }))
        });
        vec![case_from(case, res)]
    })
}

/// Grid evaluation with a reflection check per point; the CSV goes to `Report::csv`.
pub fn eval_s2(cfg: &RunConfig) -> Report {
    let t = Instant::now();
    let om = cfg.model().omega;
    let pol = PrecisionPolicy::default();
    let res = parse_grid(cfg.scenario.grid.as_deref().unwrap_or("-2:2:0.1")).expect("validated");
    let ims = parse_grid(cfg.scenario.im_grid.as_deref().unwrap_or("0")).expect("validated");
    let pts: Vec<Complex64> = ims.iter().flat_map(|&y| res.iter().map(move |&x| c(x, y))).collect();
    let rows = qbaxter::par::map(&pts, |&z| {
        let v = double_sine(z, &om, &pol);
        let w = double_sine(om.sum() - z, &om, &pol);
        match (v, w) {
            (Ok(v), _) if v == c(0.0, 0.0) => (z, Some(v), None, "zero"),
            (Ok(v), Ok(w)) => (z, Some(v), Some((v * w - 1.0).norm()), "ok"),
            (Err(Error::PoleHit(_)), _) => (z, None, None, "pole"),
            (Ok(v), Err(_)) => (z, Some(v), None, "error"),
            (Err(_), _) => (z, None, None, "error"),
        }
    });
    let mut csv = String::from("re,im,s2_re,s2_im,s2_abs,reflection_residual,status\n");
    let blank = String::new;
    for (z, v, refl, status) in &rows {
        let (a, b, m) = v.map_or((blank(), blank(), blank()), |v| (format!("{:e}", v.re), format!("{:e}", v.im), format!("{:e}", v.norm())));
        let rr = refl.map_or(blank(), |x| format!("{x:e}"));
        csv.push_str(&format!("{},{},{a},{b},{m},{rr},{status}\n", z.re, z.im));
    }
    let worst = max_of(rows.iter().filter_map(|r| r.2));
    let errors = rows.iter().filter(|r| r.3 == "error").count();
    let case = Case::new("grid", json!({ "omega": [om.omega1, om.omega2], "re_points": res.len(), "im_points": ims.len() }))
        .residual("max_reflection", worst, cfg.tol("s2_identity"))
        .residual("errors", errors as f64, 0.5)
        .outputs(json!({
            "rows": rows.len(),
            "zeros": rows.iter().filter(|r| r.3 == "zero").count(),
            "poles": rows.iter().filter(|r| r.3 == "pole").count(),
        }));
    let mut rep = Report::new("eval-s2", cfg, vec![case], vec![], t.elapsed().as_secs_f64() * 1e3);
    rep.csv = Some(csv);
    rep
}

pub fn all(cfg: &RunConfig) -> Report {
    let t = Instant::now();
    let mut children = vec![verify_s2(cfg), verify_kernel_identity(cfg), verify_theorem2_check(cfg)];
    if cfg.preset == Preset::Desk {
        children.push(verify_lemmas_q(cfg));
    }
    children.push(verify_residue_series(cfg));
    children.push(verify_q_commutativity(cfg));
    children.push(verify_mq(cfg));
    if cfg.preset == Preset::Desk {
        children.push(verify_eigenfunction(cfg));
    }
    Report::new("all", cfg, vec![], children, t.elapsed().as_secs_f64() * 1e3)
}
