//! Acceptance gate: runs `all --preset desk` twice and checks every criterion against its
//! stated tolerance. Prints one PASS/FAIL line per criterion and exits non-zero on failure.

use num_complex::Complex64;
use qbaxter::special_functions::{double_sine, Periods, PrecisionPolicy};
use qbaxter_cli::report::strip_timing;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, ExitCode};

fn run_all(out: &Path) -> Value {
    let status = Command::new(env!("CARGO_BIN_EXE_qbaxter"))
        .args(["all", "--preset", "desk", "--seed", "7", "--out"])
        .arg(out)
        .status()
        .expect("binary runs");
    assert!(status.code().is_some(), "binary terminated by a signal");
    serde_json::from_str(&std::fs::read_to_string(out).expect("report written")).expect("report is JSON")
}

struct Suite<'a>(&'a Value);

impl<'a> Suite<'a> {
    fn cases(&self, prefix: &str) -> Vec<&'a Value> {
        self.0["cases"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with(prefix)).collect()
    }

    fn seconds(&self) -> f64 {
        self.0["timing"]["elapsed_ms"].as_f64().unwrap() / 1e3
    }
}

fn child<'a>(report: &'a Value, check: &str) -> Suite<'a> {
    Suite(report["children"].as_array().unwrap().iter().find(|c| c["check"] == check).unwrap_or_else(|| panic!("missing {check}")))
}

/// Residual `key` of a case; null (non-finite) counts as infinite.
fn res(case: &Value, key: &str) -> f64 {
    case["residuals"][key].as_f64().unwrap_or(f64::INFINITY)
}

fn all_below(cases: &[&Value], key: &str, tol: f64) -> (bool, f64) {
    let worst = cases.iter().map(|c| res(c, key)).fold(0.0, f64::max);
    (!cases.is_empty() && worst < tol, worst)
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let first = run_all(&dir.path().join("a.json"));
    let second = run_all(&dir.path().join("b.json"));
    let mut results: Vec<(u32, bool, String)> = Vec::new();

    let s2 = child(&first, "verify-s2");
    {
        let cases: Vec<&Value> = ["reflection", "shifts", "factorization", "homogeneity", "period_swap"]
            .iter()
            .flat_map(|n| s2.cases(n))
            .collect();
        let (ok, worst) = all_below(&cases, "max", 1e-10);
        let points = cases.iter().all(|c| c["inputs"]["points"].as_u64() == Some(100) || c["name"] == "factorization");
        let ok = ok && cases.len() == 5 && points && s2.seconds() < 10.0;
        results.push((1, ok, format!("double sine identities: max residual {worst:.2e} < 1e-10, {:.1} s < 10 s", s2.seconds())));
    }
    {
        let prod = s2.cases("product_vs_integral");
        let (ok_p, worst_p) = all_below(&prod, "max", 1e-9);
        let tilted = prod.first().map(|c| c["inputs"]["omega"] == serde_json::json!([[1.0, 0.0], [1.0, 1.0]]) && c["inputs"]["points"] == 50);
        let (ok_s, worst_s) = all_below(&s2.cases("special_values"), "max", 1e-10);
        // Direct evaluation of the two special values.
        let pol = PrecisionPolicy::default();
        let unit = Periods::real(1.0, 1.0).unwrap();
        let om = Periods::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 1.0)).unwrap();
        let direct = (double_sine(Complex64::new(0.5, 0.0), &unit, &pol).unwrap() - 2f64.sqrt()).norm()
            + (double_sine(om.sum() / 2.0, &om, &pol).unwrap() - 1.0).norm();
        let ok = ok_p && tilted == Some(true) && ok_s && direct < 1e-10;
        results.push((2, ok, format!("product vs integral {worst_p:.2e} < 1e-9 at 50 points; special values {worst_s:.2e}, direct {direct:.2e} < 1e-10")));
    }
    {
        let (ok, worst) = all_below(&s2.cases("residues"), "max", 1e-8);
        results.push((3, ok, format!("contour residues vs closed forms {worst:.2e} < 1e-8")));
    }
    {
        let k = child(&first, "verify-kernel-identity");
        let cases = k.cases("n=");
        let (ok, worst) = all_below(&cases, "max", 1e-11);
        let samples = cases.iter().all(|c| c["inputs"]["samples"] == 50);
        let ok = ok && cases.len() == 6 && samples && k.seconds() < 5.0;
        results.push((4, ok, format!("kernel identity n<=3, all r: {worst:.2e} < 1e-11, {:.2} s < 5 s", k.seconds())));
    }
    {
        let t = child(&first, "verify-theorem2");
        let cases = t.cases("n=");
        let exact = cases.iter().all(|c| res(c, "unequal_samples") == 0.0 && c["inputs"]["trials"] == 20 && c["pass"] == true);
        let ok = exact && cases.len() == 15 && t.seconds() < 120.0;
        results.push((5, ok, format!("duality identity exact for {} (n, K) pairs x 20 samples, {:.1} s < 120 s", cases.len(), t.seconds())));
    }
    {
        let l = child(&first, "verify-lemmas-q");
        let (p1, p2) = (l.cases("p1:"), l.cases("2p:"));
        let ok = !p1.is_empty() && !p2.is_empty() && p1.iter().chain(&p2).all(|c| res(c, "violations") == 0.0 && c["pass"] == true);
        results.push((6, ok, format!("residue cancellation ({} cases) and recursion ({} cases) exact", p1.len(), p2.len())));
    }
    let rs = child(&first, "verify-residue-series");
    {
        let blocks = rs.cases("blocks:");
        let (ok, worst) = all_below(&blocks, "worst_relative", 1e-8);
        results.push((7, ok && blocks.len() == 18, format!("block equality n<=2, M,K<=2: {worst:.2e} < 1e-8 over {} cases", blocks.len())));
    }
    {
        let slope = |name: &str| rs.cases(name).first().map(|c| (c["outputs"]["slope"].as_f64().unwrap_or(f64::NAN), c["outputs"]["terms"].as_u64()));
        let (one, two) = (slope("double_zero:one_pair"), slope("double_zero:two_pairs"));
        let ok = matches!(one, Some((s, Some(4))) if (s - 2.0).abs() <= 0.1) && matches!(two, Some((s, Some(16))) if (s - 4.0).abs() <= 0.2);
        results.push((8, ok, format!("double-zero slopes {:.4} (2 +- 0.1), {:.4} (4 +- 0.2)", one.map_or(f64::NAN, |s| s.0), two.map_or(f64::NAN, |s| s.0))));
    }
    {
        let q = child(&first, "verify-q-commutativity");
        let (ok1, w1) = all_below(&q.cases("n=1,"), "relative", 1e-6);
        let (ok2, w2) = all_below(&q.cases("n=2,"), "relative", 1e-4);
        let ok = ok1 && ok2 && q.cases("n=").len() == 10 && q.seconds() < 300.0;
        results.push((9, ok, format!("Q commutativity n=1 {w1:.2e} < 1e-6, n=2 {w2:.2e} < 1e-4, {:.0} s < 300 s", q.seconds())));
    }
    {
        let cases = rs.cases("series_vs_quadrature");
        let re_ok = cases.iter().all(|c| c["inputs"]["lambda"][0].as_f64().is_some_and(|re| re <= -1.0));
        let (ok, worst) = all_below(&cases, "relative", 1e-6);
        results.push((10, ok && re_ok, format!("series vs quadrature at Re lambda <= -1: {worst:.2e} < 1e-6")));
    }
    {
        let m = child(&first, "verify-mq-commutation");
        let (ok1, w1) = all_below(&m.cases("n=1,"), "relative", 1e-6);
        let (ok2, w2) = all_below(&m.cases("n=2,"), "relative", 1e-5);
        let ok = ok1 && ok2 && m.cases("n=2,").len() == 2;
        results.push((11, ok, format!("difference operator commutation n=1 {w1:.2e} < 1e-6, n=2 (r=1,2) {w2:.2e} < 1e-5")));
    }
    {
        let e = child(&first, "verify-eigenfunction-n2");
        let cases = e.cases("n=2");
        let worst = cases.iter().map(|c| res(c, "m1").max(res(c, "m2"))).fold(0.0, f64::max);
        let ok = !cases.is_empty() && worst < 1e-5 && e.seconds() < 120.0;
        results.push((12, ok, format!("two-particle eigenrelations {worst:.2e} < 1e-5, {:.1} s < 120 s", e.seconds())));
    }
    {
        let (mut a, mut b) = (first.clone(), second.clone());
        strip_timing(&mut a);
        strip_timing(&mut b);
        let same = serde_json::to_string_pretty(&a).unwrap() == serde_json::to_string_pretty(&b).unwrap();
        let ok = same && first["pass"] == true;
        results.push((13, ok, format!("two desk runs identical modulo timing: {same}; aggregate pass: {}", first["pass"])));
    }

    let mut failed = 0;
    for (n, ok, msg) in &results {
        println!("criterion {n:>2}: {} {msg}", if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
