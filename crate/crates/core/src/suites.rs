//! Seeded property suites behind the `suite` command. Reports serialize to
//! byte-stable JSON for a given seed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{ExpBump, GraphSpec, PowerLaw};
use crate::error::{Error, Result};
use crate::geometry::{
    curvature_at, decay_report, linearize_from_derivatives, mean_convexity_scan, scalar_curvature_operator,
    SignVerdict,
};
use crate::graph::{GraphFunction, RadialGraph, Sum};
use crate::identities::{hhr_residual, sigma_identity_residual, sigma_inequality_check, SigmaDecomposition};
use crate::mass::elementary_power_inequality;
use crate::radial::{strict_ellipticity_bound, SchwarzschildProfile};
use crate::rigidity::{global_ellipticity_check, slide_comparison, SlideOptions};
use crate::sampling::{log_spaced, SamplePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteId {
    Identities,
    Hhr,
    Ellipticity,
    Decay,
    Slide,
}

impl SuiteId {
    pub const ALL: [SuiteId; 5] = [
        SuiteId::Identities,
        SuiteId::Hhr,
        SuiteId::Ellipticity,
        SuiteId::Decay,
        SuiteId::Slide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::Identities => "identities",
            SuiteId::Hhr => "hhr",
            SuiteId::Ellipticity => "ellipticity",
            SuiteId::Decay => "decay",
            SuiteId::Slide => "slide",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.name() == s.trim())
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown suite `{s}` (expected one of identities, hhr, ellipticity, decay, slide)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random matrices per dimension.
    pub matrices: usize,
    /// Level-set points per catalog graph.
    pub samples: usize,
    /// Replaces the per-graph decay order.
    pub decay_q: Option<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            matrices: 1000,
            samples: 1000,
            decay_q: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
    /// At most `MAX_WITNESSES` failing inputs.
    pub witnesses: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: SuiteId,
    pub seed: u64,
    pub options: SuiteOptions,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite reports serialize")
    }
}

const MAX_WITNESSES: usize = 10;

struct Check {
    name: String,
    witnesses: Vec<Value>,
    failures: usize,
}

impl Check {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            witnesses: Vec::new(),
            failures: 0,
        }
    }

    fn fail(&mut self, witness: Value) {
        self.failures += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    fn finish(self, mut detail: Value) -> CheckResult {
        if let Value::Object(map) = &mut detail {
            map.insert("failures".into(), json!(self.failures));
        }
        CheckResult {
            name: self.name,
            passed: self.failures == 0,
            detail,
            witnesses: self.witnesses,
        }
    }
}

fn errored(name: impl Into<String>, err: &Error) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: false,
        detail: json!({ "error": err.to_string() }),
        witnesses: Vec::new(),
    }
}

/// Independent stream per sub-check.
fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn matrix_json(b: &DMatrix<f64>) -> Value {
    json!(b.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn vec_json(x: &DVector<f64>) -> Value {
    json!(x.iter().copied().collect::<Vec<_>>())
}

pub fn run_suite(id: SuiteId, options: &SuiteOptions) -> Result<SuiteReport> {
    let checks = match id {
        SuiteId::Identities => identities_suite(options)?,
        SuiteId::Hhr => hhr_suite(options)?,
        SuiteId::Ellipticity => ellipticity_suite(options)?,
        SuiteId::Decay => decay_suite(options),
        SuiteId::Slide => slide_suite()?,
    };
    Ok(SuiteReport {
        suite: id,
        seed: options.seed,
        options: options.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn identities_suite(o: &SuiteOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 1));
    let mut check = Check::new("sigma-identity");
    let mut worst = Vec::new();
    for n in 2..=6 {
        let mut worst_n = 0.0_f64;
        for index in 0..o.matrices {
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
            for k in 0..n {
                let r = sigma_identity_residual(&b, k)?;
                let rel = r.residual.abs() / (1.0 + r.lhs.abs());
                worst_n = worst_n.max(rel);
                if rel > 1e-12 {
                    check.fail(json!({ "n": n, "index": index, "k": k, "relative": rel, "b": matrix_json(&b) }));
                }
            }
        }
        worst.push(json!({ "n": n, "max_relative_residual": worst_n }));
    }
    out.push(check.finish(json!({ "matrices_per_n": o.matrices, "tolerance": 1e-12, "worst": worst })));

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 2));
    let mut check = Check::new("sigma-equality-constructed");
    let cases = 100;
    for case in 0..cases {
        let n = 2 + case % 5;
        let k = case % n;
        let mut b = DMatrix::from_diagonal_element(n, n, rng.gen_range(-2.0..2.0));
        b[(k, k)] = rng.gen_range(-2.0..2.0);
        for i in 0..n {
            for j in (i + 1)..n {
                b[(i, j)] = rng.gen_range(-2.0..2.0);
            }
        }
        let r = sigma_inequality_check(&b, k)?;
        if !(r.equality && r.witness.holds()) {
            check.fail(json!({ "case": case, "k": k, "gap": r.gap, "b": matrix_json(&b) }));
        }
    }
    out.push(check.finish(json!({ "cases": cases })));

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 3));
    let mut check = Check::new("sigma-inequality-symmetric");
    let mut min_gap = f64::INFINITY;
    for n in 2..=6 {
        for index in 0..o.matrices {
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
            let b = (&m + m.transpose()) * 0.5;
            for k in 0..n {
                let r = sigma_inequality_check(&b, k)?;
                let scale = 1.0 + b.amax().powi(2) * (n * n) as f64;
                min_gap = min_gap.min(r.gap / scale);
                // the equality flag and the witness use different tolerances, so only
                // gross disagreement counts
                let inconsistent = (r.equality && !r.witness.holds()) || (r.witness.holds() && r.gap > 1e-6 * scale);
                if r.gap < -1e-12 * scale || inconsistent {
                    check.fail(json!({ "n": n, "index": index, "k": k, "gap": r.gap, "b": matrix_json(&b) }));
                }
            }
        }
    }
    out.push(check.finish(json!({ "min_scaled_gap": min_gap })));

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 4));
    let mut check = Check::new("semidefinite-mechanism");
    let mut retained = 0usize;
    for n in 2..=6 {
        for index in 0..o.matrices {
            let eig = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..3.0));
            let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
            let b = &q * DMatrix::from_diagonal(&eig) * q.transpose();
            let d = SigmaDecomposition::new(&b)?;
            if d.sigma1 < 0.0 || d.sigma2 < 0.0 {
                continue;
            }
            retained += 1;
            for (k, s) in d.sigma1_without.iter().enumerate() {
                if *s < -1e-12 * (1.0 + d.sigma1) {
                    check.fail(json!({ "n": n, "index": index, "k": k, "sigma1_without": s, "b": matrix_json(&b) }));
                }
            }
        }
    }
    out.push(check.finish(json!({ "retained": retained })));

    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 5));
    let mut check = Check::new("power-subadditivity");
    for index in 0..o.matrices {
        let len = rng.gen_range(1..6);
        let a: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
        let beta = rng.gen_range(0.0..=1.0);
        let r = elementary_power_inequality(&a, beta)?;
        if r.lhs < r.rhs * (1.0 - 1e-12) {
            check.fail(json!({ "index": index, "a": a, "beta": beta, "lhs": r.lhs, "rhs": r.rhs }));
        }
    }
    out.push(check.finish(json!({ "cases": o.matrices })));
    Ok(out)
}

fn hhr_suite(o: &SuiteOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (index, spec) in GraphSpec::all_examples().into_iter().enumerate() {
        let name = format!("hhr:{spec}");
        let n = spec.dimension().unwrap_or(3);
        let g = spec.build(n)?;
        let window = spec.sample_window();
        let scan = mean_convexity_scan(&g, &SamplePlan::annulus(n, window.r_min, window.r_max, 8, 4))?;
        if scan.verdict != SignVerdict::Nonnegative {
            out.push(CheckResult {
                name,
                passed: true,
                detail: json!({ "skipped": true, "verdict": scan.verdict, "min_h": scan.min_h }),
                witnesses: Vec::new(),
            });
            continue;
        }
        let plan = SamplePlan::random_annulus(n, window.r_min, window.r_max, o.samples, sub_seed(o.seed, 100 + index as u64))?;
        let points = plan.points()?;
        let results: Vec<Option<(DVector<f64>, f64, bool)>> = points
            .par_iter()
            .map(|s| match hhr_residual(&g, &s.x) {
                Ok(rep) => Ok(Some((s.x.clone(), rep.residual, rep.equality))),
                Err(Error::SingularLevelSet { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let mut check = Check::new(name);
        let mut min_residual = f64::INFINITY;
        let mut singular = 0usize;
        let mut equality = 0usize;
        for r in &results {
            match r {
                None => singular += 1,
                Some((x, residual, eq)) => {
                    min_residual = min_residual.min(*residual);
                    equality += usize::from(*eq);
                    if *residual < -1e-8 {
                        check.fail(json!({ "x": vec_json(x), "residual": residual }));
                    }
                }
            }
        }
        out.push(check.finish(json!({
            "verdict": scan.verdict,
            "samples": points.len(),
            "singular": singular,
            "equality_points": equality,
            "min_residual": if min_residual.is_finite() { json!(min_residual) } else { Value::Null },
        })));
    }

    let mut check = Check::new("hhr-schwarzschild-equality");
    let g = RadialGraph::new(3, SchwarzschildProfile::new(3, 1.0)?);
    let rep = hhr_residual(&g, &DVector::from_vec(vec![4.0, 0.0, 0.0]))?;
    if !(rep.residual.abs() <= 1e-9 && (rep.lhs - 0.09375).abs() <= 1e-9 && rep.equality) {
        check.fail(json!({ "n": 3, "m": 1.0, "r": 4.0, "lhs": rep.lhs, "rhs": rep.rhs }));
    }
    let anchor = json!({ "lhs": rep.lhs, "rhs": rep.rhs, "residual": rep.residual, "kappa": rep.kappa });
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 200));
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n = rng.gen_range(3..=6);
        let m = rng.gen_range(0.25..2.0);
        let profile = SchwarzschildProfile::new(n, m)?;
        let r = profile.r0 * rng.gen_range(1.05..30.0);
        let dir = loop {
            let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            if (0.1..=1.0).contains(&d.norm()) {
                break d.normalize();
            }
        };
        let g = RadialGraph::new(n, profile);
        let rep = hhr_residual(&g, &(dir.clone() * r))?;
        let rel = rep.residual.abs() / (1.0 + rep.lhs.abs());
        worst = worst.max(rel);
        if rel > 1e-9 || !rep.equality {
            check.fail(json!({ "n": n, "m": m, "x": vec_json(&(dir * r)), "residual": rep.residual, "equality": rep.equality }));
        }
    }
    out.push(check.finish(json!({ "anchor": anchor, "random_spheres": 100, "max_relative_residual": worst })));
    Ok(out)
}

fn ellipticity_suite(o: &SuiteOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    let mut check = Check::new("strict-ellipticity-bound");
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 300));
    let mut rows = Vec::new();
    for (n, m) in [(3, 1.0), (3, 0.25), (4, 0.5), (5, 2.0), (6, 1.0)] {
        let profile = SchwarzschildProfile::new(n, m)?;
        let r0 = profile.r0;
        let g = RadialGraph::new(n, profile);
        let radii = log_spaced(1.01 * r0, 1000.0 * r0, 1000);
        let dirs: Vec<DVector<f64>> = (0..radii.len())
            .map(|_| loop {
                let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                if (0.1..=1.0).contains(&d.norm()) {
                    break d.normalize();
                }
            })
            .collect();
        let margins: Vec<(f64, f64)> = radii
            .par_iter()
            .zip(dirs.par_iter())
            .map(|(&r, d)| -> Result<(f64, f64)> {
                let c = curvature_at(&g, &(d * r))?;
                let kappa = c.principal_curvatures()?;
                let min_eig = c.mean_curvature - kappa.max();
                Ok((min_eig, strict_ellipticity_bound(n, m, r)?))
            })
            .collect::<Result<_>>()?;
        let mut worst = f64::INFINITY;
        for (r, (eig, bound)) in radii.iter().zip(&margins) {
            worst = worst.min(eig - bound);
            if *eig < bound - 1e-10 {
                check.fail(json!({ "n": n, "m": m, "r": r, "min_eigenvalue": eig, "bound": bound }));
            }
        }
        rows.push(json!({ "n": n, "m": m, "radii": radii.len(), "min_margin": worst }));
    }
    out.push(check.finish(json!({ "cases": rows })));

    let mut check = Check::new("linearization-vs-differences");
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(o.seed, 301));
    let mut worst = 0.0_f64;
    for index in 0..100 {
        let n = 2 + index % 5;
        let p = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        let xi = (&m + m.transpose()) * 0.5;
        let lin = linearize_from_derivatives(DVector::zeros(n), p.clone(), xi.clone())?;
        let h = 1e-5;
        for i in 0..n {
            for j in 0..n {
                // perturb the symmetric pair, then split the derivative
                let mut plus = xi.clone();
                let mut minus = xi.clone();
                plus[(i, j)] += h;
                minus[(i, j)] -= h;
                if i != j {
                    plus[(j, i)] += h;
                    minus[(j, i)] -= h;
                }
                let mut fd = (scalar_curvature_operator(&p, &plus) - scalar_curvature_operator(&p, &minus)) / (2.0 * h);
                if i != j {
                    fd *= 0.5;
                }
                let err = (fd - lin.a[(i, j)]).abs();
                worst = worst.max(err);
                if err > 1e-5 {
                    check.fail(json!({ "index": index, "i": i, "j": j, "fd": fd, "a": lin.a[(i, j)] }));
                }
            }
        }
    }
    out.push(check.finish(json!({ "instances": 100, "max_abs_error": worst })));

    let h = RadialGraph::new(3, SchwarzschildProfile::new(3, 1.0)?);
    let radii = log_spaced(2.05, 200.0, 40);
    let cases: Vec<(&str, Box<dyn GraphFunction>)> = vec![
        ("v=h", Box::new(RadialGraph::new(3, SchwarzschildProfile::new(3, 1.0)?))),
        ("v=plane", Box::new(crate::catalog::Affine::zero(3))),
        (
            "v=h+0.01|x|^-2",
            Box::new(Sum::new(
                RadialGraph::new(3, SchwarzschildProfile::new(3, 1.0)?),
                RadialGraph::new(3, PowerLaw::new(0.01, -2.0)),
            )),
        ),
    ];
    for (label, v) in cases {
        let mut check = Check::new(format!("global-ellipticity:{label}"));
        let rep = global_ellipticity_check(&v, &h, &radii, 4)?;
        if rep.r_pass.is_none() {
            check.fail(json!({ "min_eigenvalues": rep.min_eigenvalues }));
        }
        out.push(check.finish(json!({ "r_pass": rep.r_pass, "radii": radii.len() })));
    }
    Ok(out)
}

fn decay_suite(o: &SuiteOptions) -> Vec<CheckResult> {
    let cases: Vec<(GraphSpec, f64)> = vec![
        (GraphSpec::Plane, 1.0),
        (GraphSpec::Schwarzschild { n: 3, m: 1.0 }, 1.0),
        (GraphSpec::Schwarzschild { n: 4, m: 1.0 }, 2.0),
        (GraphSpec::Schwarzschild { n: 5, m: 1.0 }, 3.0),
        (GraphSpec::PerturbedSchwarzschild { n: 3, m: 1.0, amp: 0.01, freq: 2.0 }, 1.0),
        (
            GraphSpec::PrescribedRadial { n: 3, c1: 2.0, exponent: -5.0, r_on: 3.0, r_max: 1000.0 },
            1.0,
        ),
    ];
    let mut out = Vec::new();
    for (spec, default_q) in cases {
        let name = format!("decay:{spec}");
        let q = o.decay_q.unwrap_or(default_q);
        let n = spec.dimension().unwrap_or(3);
        let scale = spec.boundary_radius().max(1.0);
        let radii = log_spaced(10.0 * scale, 400.0 * scale, 5);
        let report = spec.build(n).and_then(|g| decay_report(&g, q, &radii));
        match report {
            Err(e) => out.push(errored(name, &e)),
            Ok(rep) => {
                let mut check = Check::new(name);
                if !rep.pass {
                    check.fail(json!({
                        "q": q,
                        "gradient_exponent": rep.gradient_exponent,
                        "hessian_exponent": rep.hessian_exponent,
                    }));
                }
                out.push(check.finish(serde_json::to_value(&rep).expect("decay reports serialize")));
            }
        }
    }
    out
}

fn slide_suite() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let opts = SlideOptions::default();
    for spec in GraphSpec::all_examples() {
        let n = spec.dimension().unwrap_or(3);
        let g = spec.build(n)?;
        let w = spec.sample_window();
        let plan = SamplePlan::annulus(n, w.r_min, w.r_max, 6, 4);
        let options = SlideOptions {
            boundary_radius: spec.boundary_radius(),
            ..opts
        };
        let res = slide_comparison(&g, &g, 5.0, 0.5, &plan, &options)?;
        let mut check = Check::new(format!("reflexivity:{spec}"));
        let ok = res.lambda_star.is_some_and(|l| l.abs() <= 1e-8) && res.touch_count == res.samples;
        if !ok {
            check.fail(json!({ "lambda_star": res.lambda_star, "touch_count": res.touch_count }));
        }
        out.push(check.finish(json!({ "lambda_star": res.lambda_star, "samples": res.samples })));
    }

    let s = || SchwarzschildProfile::new(3, 1.0).map(|p| RadialGraph::new(3, p));
    let plan = SamplePlan::annulus(3, 2.1, 50.0, 12, 4);
    let options = SlideOptions {
        boundary_radius: 2.0,
        ..opts
    };

    let f = Sum::new(s()?, RadialGraph::new(3, ExpBump { amplitude: 0.1 }));
    let res = slide_comparison(&f, &s()?, 1.0, 0.05, &plan, &options)?;
    let upper = 0.1 * (-2.0_f64).exp();
    let mut check = Check::new("perturbed-bracket");
    if !res.lambda_star.is_some_and(|l| l > 0.0 && l <= upper) {
        check.fail(json!({ "lambda_star": res.lambda_star }));
    }
    out.push(check.finish(json!({
        "lambda_star": res.lambda_star,
        "bracket": [0.0, upper],
        "classification": res.classification,
        "touch_count": res.touch_count,
    })));

    let plane = crate::catalog::Affine::zero(3);
    let h = s()?;
    let res = slide_comparison(&plane, &h, 0.0, 0.5, &plan, &options)?;
    let expected = -h.value(&DVector::from_vec(vec![2.1, 0.0, 0.0]));
    let mut check = Check::new("plane-below-schwarzschild");
    if !(res.lambda_star.is_some_and(|l| (l - expected).abs() <= 1e-8) && res.window_edge) {
        check.fail(json!({ "lambda_star": res.lambda_star, "expected": expected }));
    }
    out.push(check.finish(json!({
        "lambda_star": res.lambda_star,
        "expected": expected,
        "classification": res.classification,
        "window_edge": res.window_edge,
    })));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_ids_parse() {
        for id in SuiteId::ALL {
            assert_eq!(id.name().parse::<SuiteId>().unwrap(), id);
        }
        assert!(matches!("nope".parse::<SuiteId>(), Err(Error::Parse(_))));
    }

    #[test]
    fn small_identity_suite_is_reproducible() {
        let o = SuiteOptions {
            matrices: 50,
            ..SuiteOptions::default()
        };
        let a = run_suite(SuiteId::Identities, &o).unwrap();
        let b = run_suite(SuiteId::Identities, &o).unwrap();
        assert!(a.passed, "{}", a.to_json());
        assert_eq!(a.to_json(), b.to_json());
        let c = run_suite(SuiteId::Identities, &SuiteOptions { seed: 7, ..o }).unwrap();
        assert_ne!(a.to_json(), c.to_json());
    }

    #[test]
    fn wrong_decay_order_fails_with_exponents() {
        let rep = run_suite(
            SuiteId::Decay,
            &SuiteOptions {
                decay_q: Some(3.0),
                ..SuiteOptions::default()
            },
        )
        .unwrap();
        assert!(!rep.passed);
        let failed = rep.failures().find(|c| c.name.starts_with("decay:schwarzschild(3")).unwrap();
        assert!(failed.witnesses[0]["gradient_exponent"].is_number());
    }
}
