use super::*;
use crate::kernels::{kernel_k, kernel_product, measure_product};
use crate::special_functions::Periods;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn real_params() -> ModelParams {
    ModelParams::real(1.0, 2f64.sqrt(), 0.6).unwrap()
}

fn complex_params() -> ModelParams {
    ModelParams::new(Periods::new(c(1.0, 0.0), c(1.1, 0.45)).unwrap(), c(0.55, 0.1)).unwrap()
}

fn tuple(xs: &[f64]) -> PointTuple {
    PointTuple::real(xs).unwrap()
}

fn idx(subset: &[usize], m1: &[i64], m2: &[i64]) -> ResidueIndex {
    ResidueIndex::new(subset.to_vec(), m1.to_vec(), m2.to_vec()).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

/// `(1/2πi)∮ f` over a circle, trapezoid rule.
fn circle_residue(center: Complex64, r: f64, pts: usize, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let mut acc = c(0.0, 0.0);
    for j in 0..pts {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / pts as f64);
        acc += f(center + r * e) * r * e;
    }
    acc / pts as f64
}

#[test]
fn zero_index_closed_form() {
    let p = real_params();
    let z = tuple(&[0.3, -0.2]);
    let i = Complex64::i();
    let (zz, xx) = (i * 0.3, i * -0.2);
    let expect = p.omega.product().sqrt() / (-2.0 * PI * i * p.s2(p.gstar).unwrap())
        / p.s2(zz - xx + p.gstar).unwrap()
        / p.s2(xx - zz).unwrap();
    let l = residue_l_term(&idx(&[0], &[0], &[0]), &z, &p).unwrap();
    assert!(rel(l, expect) < 1e-13);
    let r = residue_r_term(&idx(&[1], &[0], &[0]), &z, &p).unwrap();
    assert!(rel(r, -expect) < 1e-13);
}

#[test]
fn single_variable_terms_match_contour_residues() {
    for p in [real_params(), complex_params()] {
        let z = tuple(&[0.3, -0.2]);
        let integrand = |y: Complex64| kernel_k(y - z.coords[0], &p).unwrap() * kernel_k(y - z.coords[1], &p).unwrap();
        for m1 in 0..=2 {
            for m2 in 0..=2 {
                let lat = lattice(&p, m1, m2);
                let i = Complex64::i();
                for (a, b) in [(0usize, 1usize), (1, 0)] {
                    // iy = iz_a + g*/2 + lat on the lower side, iy = iz_b - g*/2 - lat on the upper.
                    let lower_pole = z.coords[a] - i * (p.gstar / 2.0 + lat);
                    let num = circle_residue(lower_pole, 0.02, 64, integrand);
                    let l = residue_l_term(&idx(&[a], &[m1], &[m2]), &z, &p).unwrap();
                    let ld = residue_l_term_direct(&idx(&[a], &[m1], &[m2]), &z, &p).unwrap();
                    assert!(rel(l, num) < 1e-9, "L, m=({m1},{m2}), a={a}: {l} vs {num}");
                    assert!(rel(ld, num) < 1e-9);

                    let upper_pole = z.coords[b] + i * (p.gstar / 2.0 + lat);
                    let num = circle_residue(upper_pole, 0.02, 64, integrand);
                    let r = residue_r_term(&idx(&[b], &[m1], &[m2]), &z, &p).unwrap();
                    let rd = residue_r_term_direct(&idx(&[b], &[m1], &[m2]), &z, &p).unwrap();
                    assert!(rel(r, num) < 1e-9, "R, m=({m1},{m2}), b={b}: {r} vs {num}");
                    assert!(rel(rd, num) < 1e-9);
                }
            }
        }
    }
}

#[test]
fn two_variable_term_matches_torus_residue() {
    let p = complex_params();
    let z = tuple(&[0.35, -0.6, 0.9, -0.15]);
    let ix = idx(&[2, 0], &[1, 0], &[0, 1]);
    let i = Complex64::i();
    let centers: Vec<Complex64> =
        (0..2).map(|a| z.coords[ix.subset[a]] - i * (p.gstar / 2.0 + lattice(&p, ix.m1[a], ix.m2[a]))).collect();
    let pts = 32;
    let r = 0.02;
    let mut acc = c(0.0, 0.0);
    for j in 0..pts {
        let e1 = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / pts as f64);
        for l in 0..pts {
            let e2 = Complex64::from_polar(1.0, 2.0 * PI * l as f64 / pts as f64);
            let y = PointTuple::new(vec![centers[0] + r * e1, centers[1] + r * e2]).unwrap();
            let f = kernel_product(&z, &y, &p).unwrap() * measure_product(&y, &p).unwrap();
            acc += f * r * e1 * r * e2;
        }
    }
    let num = acc / (pts * pts) as f64;
    let closed = residue_l_term(&ix, &z, &p).unwrap();
    assert!(rel(closed, num) < 1e-8, "{closed} vs {num}");
}

#[test]
fn simplified_and_direct_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [real_params(), complex_params()] {
        for _ in 0..10 {
            let z = PointTuple::real(&(0..4).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<_>>()).unwrap();
            if check_generic(&z, &p).is_err() {
                continue;
            }
            let set = subsets(4, 2)[rng.gen_range(0..6)].clone();
            let m1 = vec![rng.gen_range(0..3), rng.gen_range(0..3)];
            let m2 = vec![rng.gen_range(0..3), rng.gen_range(0..3)];
            let ix = ResidueIndex::new(set, m1, m2).unwrap();
            let (a, b) = (residue_l_term(&ix, &z, &p).unwrap(), residue_l_term_direct(&ix, &z, &p).unwrap());
            assert!(rel(a, b) < 1e-9, "{ix:?}: {a} vs {b}");
            let (a, b) = (residue_r_term(&ix, &z, &p).unwrap(), residue_r_term_direct(&ix, &z, &p).unwrap());
            assert!(rel(a, b) < 1e-9, "{ix:?}: {a} vs {b}");
        }
    }
}

#[test]
fn relabelling_residue_variables() {
    let p = complex_params();
    let z = tuple(&[0.35, -0.6, 0.9, -0.15]);
    let a = residue_l_term(&idx(&[0, 2], &[1, 0], &[0, 2]), &z, &p).unwrap();
    let b = residue_l_term(&idx(&[2, 0], &[0, 1], &[2, 0]), &z, &p).unwrap();
    assert!(rel(a, b) < 1e-10);
}

#[test]
fn single_variable_terms_are_complementary() {
    let p = real_params();
    let z = tuple(&[0.3, -0.2]);
    for m1 in 0..=2 {
        for m2 in 0..=(2 - m1) {
            for a in 0..2 {
                let l = residue_l_term(&idx(&[a], &[m1], &[m2]), &z, &p).unwrap();
                let r = residue_r_term(&idx(&[1 - a], &[m1], &[m2]), &z, &p).unwrap();
                assert!(rel(l, -r) < 1e-12);
            }
        }
    }
}

#[test]
fn block_equality() {
    for p in [real_params(), complex_params()] {
        let z1 = tuple(&[0.3, -0.2]);
        let z2 = tuple(&[0.35, -0.6, 0.9, -0.15]);
        for m in 0..=2 {
            for k in 0..=2 {
                let r1 = verify_lr_equality(1, m, k, &z1, &p).unwrap();
                assert!(r1.pass, "n=1 ({m},{k}): {}", r1.worst);
                let r2 = verify_lr_equality(2, m, k, &z2, &p).unwrap();
                assert!(r2.pass, "n=2 ({m},{k}): {}", r2.worst);
                assert_eq!(r2.blocks.len(), 6);
            }
        }
    }
}

#[test]
fn nongeneric_parameters_rejected() {
    let p = real_params();
    assert!(matches!(check_generic(&tuple(&[0.3, 0.3, 0.1, 0.5]), &p), Err(Error::DegenerateConfiguration(_))));
    assert!(matches!(verify_lr_equality(2, 0, 0, &tuple(&[0.3, 0.3, 0.1, 0.5]), &p), Err(Error::DegenerateConfiguration(_))));
    assert!(check_generic(&tuple(&[0.35, -0.6, 0.9, -0.15]), &p).is_ok());
}

#[test]
fn series_variables_and_convergence() {
    let p = ModelParams::real(1.0, 1.0, 1.0).unwrap();
    let (u, v) = series_variables(c(-1.0, 0.0), &p);
    assert!((u - (-2.0 * PI).exp()).norm() < 1e-18 && (v - u).norm() < 1e-18);
    let z = tuple(&[0.3, -0.2]);
    assert!(matches!(
        series_q_sum(&z, c(0.1, 0.0), SeriesOrder::default(), &real_params()),
        Err(Error::NonconvergentSeries(_, _))
    ));
}

#[test]
fn lowest_order_series_by_hand() {
    let p = real_params();
    let z = tuple(&[0.3, -0.2]);
    let lambda = c(-1.0, 0.0);
    let s = series_q_sum(&z, lambda, SeriesOrder { m_max: 0, k_max: 0 }, &p).unwrap();
    let i = Complex64::i();
    let base = |a: usize, b: usize| {
        let (za, xb) = (i * z.coords[a], i * z.coords[b]);
        p.omega.product().sqrt() / (-2.0 * PI * i * p.s2(p.gstar).unwrap())
            / p.s2(za - xb + p.gstar).unwrap()
            / p.s2(xb - za).unwrap()
    };
    let expect: Complex64 = [(0usize, 1usize), (1, 0)]
        .iter()
        .map(|&(a, b)| (2.0 * PI * lambda * (p.gstar / 2.0 + i * z.coords[a])).exp() * (-2.0 * PI * i) * base(a, b))
        .sum();
    assert!(rel(s.value, expect) < 1e-13);
    assert!(s.tail_bound > 0.0);
}

#[test]
fn series_tail_shrinks() {
    let p = real_params();
    let z = tuple(&[0.3, -0.2]);
    let mut prev = f64::INFINITY;
    for ord in [2, 4, 6, 8] {
        let s = series_q_sum(&z, c(-1.0, 0.0), SeriesOrder { m_max: ord, k_max: ord }, &p).unwrap();
        assert!(s.tail_bound < prev);
        prev = s.tail_bound;
    }
    assert!(prev < 1e-12);
}

#[test]
fn slope_fit() {
    let x = [1e-2, 1e-3, 1e-4];
    let y: Vec<f64> = x.iter().map(|e| 3.0 * e * e).collect();
    assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
}

fn pair_config(n: usize, rng: &mut ChaCha8Rng) -> PairCoincidence {
    let k = n / 2;
    PairCoincidence {
        z: PointTuple::real(&(0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap(),
        lambda: c(-0.3, 0.05),
        anchors: (0..k).map(|_| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect(),
        p: (0..k).map(|j| [2 + j as i64, 1]).collect(),
        q: (0..k).map(|_| [0, -1]).collect(),
        free: Vec::new(),
    }
}

#[test]
fn integrand_matches_kernel_evaluation() {
    let p = complex_params();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = pair_config(2, &mut rng);
    let eps = 0.01;
    let (_, single) = symmetrized_sums::<f64>(&cfg, eps, &p, &p.policy).unwrap();
    let i = Complex64::i();
    let w = [
        cfg.anchors[0] + eps + lattice(&p, cfg.p[0][0], cfg.p[0][1]),
        cfg.anchors[0] + lattice(&p, cfg.q[0][0], cfg.q[0][1]),
    ];
    let y = PointTuple::new(w.iter().map(|w| -i * w).collect()).unwrap();
    let direct = (2.0 * PI * i * cfg.lambda * y.sum()).exp() * kernel_product(&cfg.z, &y, &p).unwrap() * measure_product(&y, &p).unwrap();
    assert!(rel(single, direct) < 1e-9, "{single} vs {direct}");
}

#[test]
fn double_zero_one_pair() {
    let p = complex_params();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = pair_config(2, &mut rng);
    let rep = double_zero_check(&cfg, &[1e-2, 1e-3, 1e-4], &p).unwrap();
    assert!(rep.pass && (rep.slope - 2.0).abs() < 0.1, "{rep:?}");
    // Each term alone stays finite at the hyperplane.
    assert!(rep.single_slope.abs() < 0.1, "{rep:?}");
}

#[cfg(feature = "extended")]
#[test]
fn double_zero_two_pairs() {
    let p = complex_params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = pair_config(4, &mut rng);
    let rep = double_zero_check(&cfg, &[1e-2, 1e-3, 1e-4], &p).unwrap();
    assert_eq!(rep.terms, 16);
    assert!(rep.pass && (rep.slope - 4.0).abs() < 0.2, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn single_variable_blocks_agree(a in -1.5f64..1.5, b in -1.5f64..1.5, m in 0usize..3, k in 0usize..3) {
        prop_assume!((a - b).abs() > 0.05);
        let p = complex_params();
        let z = tuple(&[a, b]);
        prop_assume!(check_generic(&z, &p).is_ok());
        let rep = verify_lr_equality(1, m, k, &z, &p).unwrap();
        prop_assert!(rep.pass);
    }
}
