//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use penrose_lab::catalog::{GraphSpec, PowerLaw, QuadraticForm};
use penrose_lab::geometry::{curvature_at, divergence_step, scalar_curvature_divergence_form};
use penrose_lab::mass::{
    adm_mass, alexandrov_fenchel_check, lam_identity_residual, penrose_report, sample_level_set, BoundaryDescriptor,
    LamOptions,
};
use penrose_lab::quadrature::SphereQuadrature;
use penrose_lab::sampling::log_spaced;
use penrose_lab::suites::{run_suite, SuiteId, SuiteOptions, SuiteReport};
use penrose_lab::{GraphFunction, RadialGraph, Result, SchwarzschildProfile};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn schwarzschild(n: usize, m: f64) -> Result<RadialGraph<SchwarzschildProfile>> {
    Ok(RadialGraph::new(n, SchwarzschildProfile::new(n, m)?))
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if (0.1..=1.0).contains(&d.norm()) {
            return d.normalize();
        }
    }
}

fn check_passed(report: &SuiteReport, name: &str) -> bool {
    report.checks.iter().any(|c| c.name == name && c.passed)
}

fn timed(limit: Duration, start: Instant) -> (bool, String) {
    let took = start.elapsed();
    (took < limit, format!("{:.2}s of {}s", took.as_secs_f64(), limit.as_secs()))
}

fn scalar_flatness() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut sigma, mut divergence) = (0.0_f64, 0.0_f64);
    for n in 3..=8 {
        for m in [0.25, 0.5, 1.0, 2.0] {
            let g = schwarzschild(n, m)?;
            let r0 = g.profile().r0;
            for r in log_spaced(1.1 * r0, 100.0 * r0, 50) {
                let x = unit_direction(&mut rng, n) * r;
                sigma = sigma.max(curvature_at(&g, &x)?.scalar_curvature.abs());
                divergence = divergence.max(scalar_curvature_divergence_form(&g, &x, divergence_step(&x))?.abs());
            }
        }
    }
    let (fast, time) = timed(Duration::from_secs(10), start);
    Ok(outcome(
        sigma <= 1e-9 && divergence <= 1e-6 && fast,
        format!("max |R| sigma-form {sigma:.2e} (tol 1e-9), divergence-form {divergence:.2e} (tol 1e-6), {time}"),
    ))
}

fn mass_recovery() -> Result<Outcome> {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, tol) in [(3, 1e-3), (4, 5e-3), (5, 5e-3)] {
        let est = adm_mass(&schwarzschild(n, 1.0)?, &[50.0, 100.0, 200.0])?;
        ok &= (est.mass - 1.0).abs() <= tol;
        parts.push(format!("n={n} m={:.6} (tol {tol:e})", est.mass));
    }
    let (fast, time) = timed(Duration::from_secs(30), start);
    Ok(outcome(ok && fast, format!("{}, {time}", parts.join(", "))))
}

fn penrose_equality() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, m) in [(3, 1.0), (4, 0.5), (5, 2.0)] {
        let g = schwarzschild(n, m)?;
        let radius = g.domain().boundary_radius();
        let expected = (2.0 * m).powf(1.0 / (n as f64 - 2.0));
        let rep = penrose_report(&g, &BoundaryDescriptor::Sphere { radius }, &[50.0, 100.0, 200.0], SphereQuadrature::default_order(n), true)?;
        let radius_error = rep.residuals.equality_radius.unwrap_or(f64::INFINITY);
        ok &= rep.slack.abs() <= 1e-3 && (radius - expected).abs() <= 1e-6 && radius_error <= 1e-6 && rep.equality;
        parts.push(format!("n={n} m={m} slack {:.2e} radius error {radius_error:.1e}", rep.slack));
    }
    Ok(outcome(ok, parts.join(", ")))
}

fn penrose_strictness() -> Result<Outcome> {
    let spec: GraphSpec = "prescribed-radial(3,2,-5,3,1000)".parse()?;
    let g = spec.build(3)?;
    let rep = penrose_report(
        &g,
        &BoundaryDescriptor::Sphere {
            radius: spec.boundary_radius(),
        },
        &[100.0, 200.0, 400.0],
        SphereQuadrature::default_order(3),
        true,
    )?;
    let lam = lam_identity_residual(&g, 2.05, 400.0, &LamOptions::for_dimension(3))?;
    let share = lam.residual.abs() / lam.flux_term.abs();
    Ok(outcome(
        rep.slack > 0.0 && share <= 5e-3,
        format!(
            "mass {:.6} bound {:.6} slack {:.3e}; identity residual {:.2e} of the flux term (tol 5e-3)",
            rep.mass, rep.bound, rep.slack, share
        ),
    ))
}

fn matrix_identity() -> Result<Outcome> {
    let start = Instant::now();
    let rep = run_suite(SuiteId::Identities, &SuiteOptions::default())?;
    let (fast, time) = timed(Duration::from_secs(5), start);
    let ok = check_passed(&rep, "sigma-identity") && check_passed(&rep, "sigma-equality-constructed");
    Ok(outcome(
        ok && rep.passed && fast,
        format!("1000 matrices per n in 2..=6, 100 equality cases, seed {}, {time}", rep.seed),
    ))
}

fn hhr_inequality() -> Result<Outcome> {
    let rep = run_suite(SuiteId::Hhr, &SuiteOptions::default())?;
    let g = schwarzschild(3, 1.0)?;
    let anchor = penrose_lab::hhr_residual(&g, &DVector::from_vec(vec![4.0, 0.0, 0.0]))?;
    let swept = rep
        .checks
        .iter()
        .filter(|c| c.name.starts_with("hhr:") && c.detail.get("skipped").is_none())
        .count();
    Ok(outcome(
        rep.passed && anchor.residual.abs() <= 1e-9 && anchor.equality,
        format!(
            "{swept} mean-convex catalog graphs swept at 1000 points; (3,1,4): {:.5} = {:.5}, residual {:.1e}",
            anchor.lhs, anchor.rhs, anchor.residual
        ),
    ))
}

fn ellipticity() -> Result<Outcome> {
    let rep = run_suite(SuiteId::Ellipticity, &SuiteOptions::default())?;
    let ok = check_passed(&rep, "strict-ellipticity-bound") && check_passed(&rep, "linearization-vs-differences");
    let err = rep
        .checks
        .iter()
        .find(|c| c.name == "linearization-vs-differences")
        .and_then(|c| c.detail.get("max_abs_error").and_then(|v| v.as_f64()))
        .unwrap_or(f64::NAN);
    Ok(outcome(
        ok,
        format!("bound held at 1000 radii per (n, m); linearization max error {err:.1e} (tol 1e-5)"),
    ))
}

fn alexandrov_fenchel() -> Result<Outcome> {
    let s3 = sample_level_set(&RadialGraph::new(3, PowerLaw::new(1.0, 1.0)), 2.0, (0.5, 4.0), 12)?;
    let s4 = sample_level_set(&RadialGraph::new(4, PowerLaw::new(1.0, 1.0)), 1.5, (0.5, 4.0), 8)?;
    let ell = sample_level_set(&QuadraticForm::ellipsoid(&[2.0, 1.0, 1.0]), 1.0, (0.5, 3.0), 24)?;
    let (g3, g4, ge) = (
        alexandrov_fenchel_check(&s3)?.gap,
        alexandrov_fenchel_check(&s4)?.gap,
        alexandrov_fenchel_check(&ell)?,
    );
    let e = 0.75_f64.sqrt();
    let prolate_area = 2.0 * PI * (1.0 + 2.0 / e * e.asin());
    Ok(outcome(
        g3.abs() <= 1e-8 && g4.abs() <= 1e-8 && ge.gap > 0.0,
        format!(
            "sphere gaps {g3:.1e} (n=3), {g4:.1e} (n=4); ellipsoid gap {:.4e}, area {:.8} vs {:.8}",
            ge.gap, ge.area, prolate_area
        ),
    ))
}

fn rigidity() -> Result<Outcome> {
    let rep = run_suite(SuiteId::Slide, &SuiteOptions::default())?;
    let reflexive = rep.checks.iter().filter(|c| c.name.starts_with("reflexivity:"));
    let (count, all) = reflexive.fold((0, true), |(k, ok), c| (k + 1, ok && c.passed));
    let bracket = rep.checks.iter().find(|c| c.name == "perturbed-bracket");
    let lambda = bracket.and_then(|c| c.detail["lambda_star"].as_f64()).unwrap_or(f64::NAN);
    Ok(outcome(
        all && bracket.is_some_and(|c| c.passed),
        format!(
            "{count} catalog graphs reflexive within 1e-8; perturbed lambda* {lambda:.6e} in (0, {:.6e}]",
            0.1 * (-2.0_f64).exp()
        ),
    ))
}

fn determinism() -> Result<Outcome> {
    let options = SuiteOptions::default();
    let mut ok = true;
    let mut mismatched = Vec::new();
    let pool = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
    };
    let (one, four) = (pool(1), pool(4));
    for id in SuiteId::ALL {
        let a = four.install(|| run_suite(id, &options))?.to_json();
        let b = four.install(|| run_suite(id, &options))?.to_json();
        let c = one.install(|| run_suite(id, &options))?.to_json();
        if a != b || a != c {
            ok = false;
            mismatched.push(id.name());
        }
    }
    Ok(outcome(
        ok,
        if ok {
            "all five suites byte-identical on re-run (4 threads) and across 1 and 4 threads".to_string()
        } else {
            format!("reports differ for {}", mismatched.join(", "))
        },
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("scalar-flatness", scalar_flatness),
        ("mass recovery", mass_recovery),
        ("Penrose equality", penrose_equality),
        ("Penrose strictness", penrose_strictness),
        ("matrix identity", matrix_identity),
        ("HHR inequality", hhr_inequality),
        ("ellipticity", ellipticity),
        ("Alexandrov-Fenchel", alexandrov_fenchel),
        ("rigidity reflexivity", rigidity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let result = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let tag = if result.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!result.passed);
        println!("{tag} criterion {:>2} {name}: {}", k + 1, result.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
