use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use penrose_lab::catalog::GraphSpec;
use penrose_lab::error::Error;
use penrose_lab::geometry::curvature_over_plan;
use penrose_lab::io::{fmt_f64, read_points_csv, read_scalar_table, write_profile_csv, write_table};
use penrose_lab::mass::{adm_mass_with_order, penrose_report, BoundaryDescriptor, MassEstimate};
use penrose_lab::quadrature::SphereQuadrature;
use penrose_lab::radial::{solve_radial_from_scalar, ScalarSource};
use penrose_lab::rigidity::{slide_comparison, SlideOptions};
use penrose_lab::sampling::SamplePlan;
use penrose_lab::suites::{run_suite, SuiteId, SuiteOptions};
use penrose_lab::GraphFunction;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    NonConvergent(String),
    Numeric(String),
    SuiteFailed(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::NonConvergent(_) | Failure::Numeric(_) => 3,
            Failure::SuiteFailed(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::NonConvergent(m) | Failure::Numeric(m) | Failure::SuiteFailed(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. }
            | Error::Radius { .. }
            | Error::Argument(_)
            | Error::Dimension { .. }
            | Error::UnknownGraph(_)
            | Error::Parse(_)
            | Error::Io(_) => Failure::Config(e.to_string()),
            Error::Convergence(_) => Failure::NonConvergent(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<(), Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

fn format_of(cfg: &RunConfig, default: Format) -> Result<Format, Failure> {
    match cfg.str("format") {
        None => Ok(default),
        Some("text") => Ok(Format::Text),
        Some("json") => Ok(Format::Json),
        Some("csv") => Ok(Format::Csv),
        Some(other) => Err(Failure::Config(format!("unknown format `{other}` (text, json or csv)"))),
    }
}

fn output(cfg: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match cfg.str("out") {
        Some(path) if path != "-" => {
            let file = File::create(Path::new(path))
                .map_err(|e| Failure::Config(format!("cannot create output file {path}: {e}")))?;
            Box::new(BufWriter::new(file))
        }
        _ => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

/// Resolves `graph.id`, expanding bare parametrized names from the other
/// `graph.*` keys and `n`.
pub fn graph_spec(cfg: &RunConfig) -> Result<(GraphSpec, usize), Failure> {
    let id = cfg
        .str("graph.id")
        .ok_or_else(|| Failure::Config("no graph given (use --graph or graph.id)".into()))?;
    let n_cfg: Option<usize> = cfg.get("n")?;
    let n = n_cfg.unwrap_or(3);
    let m: f64 = cfg.get_or("graph.m", 1.0)?;
    let expanded = match id.trim() {
        "schwarzschild" => format!("schwarzschild({n},{m})"),
        "perturbed-schwarzschild" => format!(
            "perturbed-schwarzschild({n},{m},{},{})",
            cfg.get_or("graph.amp", 0.01)?,
            cfg.get_or("graph.freq", 2.0)?
        ),
        "hemisphere" => format!("hemisphere({})", cfg.get_or("graph.rho", 1.0)?),
        "prescribed-radial" => format!("prescribed-radial({n},2,-5,3,1000)"),
        other => other.to_string(),
    };
    let spec: GraphSpec = expanded.parse()?;
    let n = match (spec.dimension(), n_cfg) {
        (Some(d), Some(n)) if d != n => {
            return Err(Failure::Config(format!("n = {n} does not match graph {spec} of dimension {d}")))
        }
        (Some(d), _) => d,
        (None, n) => n.unwrap_or(3),
    };
    Ok((spec, n))
}

fn radii_outside_boundary(cfg: &RunConfig, spec: &GraphSpec) -> Result<Vec<f64>, Failure> {
    let r0 = spec.boundary_radius();
    let radii = match cfg.list("radii")? {
        Some(r) => r,
        None => [50.0, 100.0, 200.0].iter().map(|r| r * r0.max(1.0)).collect(),
    };
    if let Some(bad) = radii.iter().find(|r| r.is_nan() || **r <= r0) {
        return Err(Failure::Config(format!(
            "radius {bad} does not lie outside the boundary radius {r0} of {spec}"
        )));
    }
    Ok(radii)
}

fn quad_order(cfg: &RunConfig, n: usize) -> Result<usize, Failure> {
    Ok(cfg.get_or("quad.order", SphereQuadrature::default_order(n))?)
}

fn sample_plan(cfg: &RunConfig, spec: &GraphSpec, n: usize, seed: u64) -> Result<SamplePlan, Failure> {
    if let Some(path) = cfg.str("sample.points") {
        let file = File::open(path).map_err(|e| Failure::Config(format!("cannot read points {path}: {e}")))?;
        return Ok(SamplePlan::Points(read_points_csv(file, n)?));
    }
    let w = spec.sample_window();
    let r_min = cfg.get_or("sample.r_min", w.r_min)?;
    let r_max = cfg.get_or("sample.r_max", w.r_max)?;
    match cfg.get::<usize>("sample.count")? {
        Some(count) => Ok(SamplePlan::random_annulus(n, r_min, r_max, count, seed)?),
        None => Ok(SamplePlan::annulus(
            n,
            r_min,
            r_max,
            cfg.get_or("sample.shells", 10)?,
            cfg.get_or("sample.order", 3)?,
        )),
    }
}

pub fn curvature(cfg: &RunConfig) -> Outcome {
    let (spec, n) = graph_spec(cfg)?;
    let format = format_of(cfg, Format::Csv)?;
    let g = spec.build(n)?;
    let plan = sample_plan(cfg, &spec, n, cfg.get_or("seed", 42)?)?;
    let rows: Vec<Vec<f64>> = curvature_over_plan(&g, &plan)?
        .into_iter()
        .map(|(s, c)| -> Result<Vec<f64>, Failure> {
            let mut row: Vec<f64> = s.x.iter().copied().collect();
            row.extend([c.grad_norm_sq.sqrt(), c.mean_curvature, c.scalar_curvature, c.min_ellipticity()?]);
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut out = output(cfg)?;
    match format {
        Format::Csv => {
            let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            header.extend(["grad_norm", "mean_curvature", "scalar_curvature", "min_eig_e"].map(String::from));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_table(&mut out, &header, rows)?;
        }
        Format::Json => {
            let points: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "x": &r[..n],
                        "grad_norm": r[n],
                        "mean_curvature": r[n + 1],
                        "scalar_curvature": r[n + 2],
                        "min_eig_e": r[n + 3],
                    })
                })
                .collect();
            write_json(&mut out, &json!({ "graph": spec.to_string(), "n": n, "points": points }))?;
        }
        Format::Text => {
            let col = |k: usize| rows.iter().map(move |r| r[n + k]);
            let max_abs = |k: usize| col(k).fold(0.0_f64, |a, v| a.max(v.abs()));
            let min = |k: usize| col(k).fold(f64::INFINITY, f64::min);
            writeln!(out, "graph {spec} (n = {n}), {} points", rows.len())?;
            writeln!(out, "max |R|        {}", fmt_f64(max_abs(2)))?;
            writeln!(out, "min H          {}", fmt_f64(min(1)))?;
            writeln!(out, "max |H|        {}", fmt_f64(max_abs(1)))?;
            writeln!(out, "min eig(E)     {}", fmt_f64(min(3)))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_mass_table(out: &mut dyn Write, est: &MassEstimate) -> io::Result<()> {
    writeln!(out, "{:>24} {:>24}", "radius", "flux")?;
    for (r, f) in est.radii.iter().zip(&est.fluxes) {
        writeln!(out, "{:>24} {:>24}", fmt_f64(*r), fmt_f64(*f))?;
    }
    for e in &est.extrapolants {
        let p = e.exponent.map_or("none".to_string(), fmt_f64);
        writeln!(out, "fit {:?}: mass {} exponent {p}", e.radii, fmt_f64(e.mass))?;
    }
    Ok(())
}

fn mass_csv(out: &mut dyn Write, est: &MassEstimate) -> Result<(), Failure> {
    let rows = est.radii.iter().zip(&est.fluxes).map(|(r, f)| vec![*r, *f]);
    write_table(out, &["radius", "flux"], rows)?;
    Ok(())
}

fn non_convergent(est: &MassEstimate) -> Failure {
    Failure::NonConvergent(format!(
        "mass extrapolation did not converge (mass {}, residual {}); table written to the output",
        fmt_f64(est.mass),
        fmt_f64(est.residual)
    ))
}

pub fn mass(cfg: &RunConfig) -> Outcome {
    let (spec, n) = graph_spec(cfg)?;
    let format = format_of(cfg, Format::Text)?;
    let radii = radii_outside_boundary(cfg, &spec)?;
    let g = spec.build(n)?;
    let est = adm_mass_with_order(&g, &radii, quad_order(cfg, n)?)?;
    let mut out = output(cfg)?;
    match format {
        Format::Json => write_json(&mut out, &est)?,
        Format::Csv => mass_csv(&mut out, &est)?,
        Format::Text => {
            writeln!(out, "graph {spec} (n = {n}), sphere rule order {}", est.quad_order)?;
            write_mass_table(&mut out, &est)?;
            writeln!(out, "mass {} (residual {})", fmt_f64(est.mass), fmt_f64(est.residual))?;
        }
    }
    out.flush()?;
    if est.converged {
        Ok(())
    } else {
        Err(non_convergent(&est))
    }
}

fn boundary(cfg: &RunConfig, spec: &GraphSpec) -> Result<BoundaryDescriptor, Failure> {
    if let Some(area) = cfg.get("boundary.area")? {
        return Ok(BoundaryDescriptor::Area { area });
    }
    if let Some(level_radius) = cfg.get("boundary.level_radius")? {
        return Ok(BoundaryDescriptor::LevelSet { level_radius });
    }
    let radius = cfg.get("boundary.radius")?.unwrap_or(spec.boundary_radius());
    if radius > 0.0 {
        Ok(BoundaryDescriptor::Sphere { radius })
    } else {
        Err(Failure::Config(format!(
            "{spec} has no inner boundary; set boundary.radius, boundary.level_radius or boundary.area"
        )))
    }
}

pub fn penrose(cfg: &RunConfig) -> Outcome {
    let (spec, n) = graph_spec(cfg)?;
    let format = format_of(cfg, Format::Text)?;
    let radii = radii_outside_boundary(cfg, &spec)?;
    let descriptor = boundary(cfg, &spec)?;
    let g = spec.build(n)?;
    let rep = penrose_report(
        &g,
        &descriptor,
        &radii,
        quad_order(cfg, n)?,
        cfg.get_or("boundary.outer_minimizing", false)?,
    )?;
    let mut out = output(cfg)?;
    match format {
        Format::Json => write_json(&mut out, &rep)?,
        Format::Csv => mass_csv(&mut out, &rep.mass_estimate)?,
        Format::Text => {
            writeln!(out, "graph {spec} (n = {n})")?;
            writeln!(out, "mass           {}", fmt_f64(rep.mass))?;
            writeln!(out, "bound          {}", fmt_f64(rep.bound))?;
            writeln!(out, "slack          {}", fmt_f64(rep.slack))?;
            writeln!(out, "equality       {}", rep.equality)?;
            writeln!(out, "verdict        {:?}", rep.verdict)?;
            writeln!(out, "boundary area  {}", fmt_f64(rep.boundary.area))?;
            if let Some(d) = rep.residuals.equality_radius {
                writeln!(out, "radius error   {}", fmt_f64(d))?;
            }
            writeln!(out, "hypotheses     {}", serde_json::to_string(&rep.hypotheses).unwrap_or_default())?;
            write_mass_table(&mut out, &rep.mass_estimate)?;
        }
    }
    out.flush()?;
    if rep.converged {
        Ok(())
    } else {
        Err(non_convergent(&rep.mass_estimate))
    }
}

pub fn radial(cfg: &RunConfig) -> Outcome {
    let n: usize = cfg.get_or("n", 3)?;
    if n < 3 {
        return Err(Failure::Config(format!("radial profiles need n ≥ 3, got {n}")));
    }
    let format = format_of(cfg, Format::Csv)?;
    let source = match (cfg.str("radial.table"), cfg.str("radial.source")) {
        (Some(_), Some(_)) => {
            return Err(Failure::Config("give either radial.table or radial.source, not both".into()))
        }
        (Some(path), None) => {
            let file = File::open(path).map_err(|e| Failure::Config(format!("cannot read table {path}: {e}")))?;
            read_scalar_table(file)?
        }
        (None, Some(s)) => ScalarSource::parse(s)?,
        (None, None) => ScalarSource::Zero,
    };
    let c1: f64 = cfg.get_or("radial.c1", 2.0)?;
    let r0 = c1.max(0.0).powf(1.0 / (n as f64 - 2.0));
    let first = source.breakpoints().first().copied().unwrap_or(0.0);
    let r_start = cfg.get_or("radial.r_start", first.max(1.01 * r0).max(1e-3))?;
    let r_end = cfg.get_or("radial.r_end", 100.0 * r_start)?;
    let step = cfg.get_or("radial.step", 1e-2 * r_start)?;
    let profile = solve_radial_from_scalar(n, source, c1, (r_start, r_end), step)?;
    let rows = profile.rows();
    let mut out = output(cfg)?;
    match format {
        Format::Csv => write_profile_csv(&mut out, &rows)?,
        Format::Json => write_json(&mut out, &json!({ "profile": &profile, "rows": rows }))?,
        Format::Text => {
            writeln!(out, "n = {n}, C1 = {c1}, source {}", profile.source.label())?;
            writeln!(out, "span [{r_start}, {r_end}], step {step}, {} nodes", rows.len())?;
            writeln!(out, "richardson defect  {}", fmt_f64(profile.richardson_defect))?;
            writeln!(out, "flux at r_end      {}", fmt_f64(profile.radial_flux(r_end)))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn slide(cfg: &RunConfig) -> Outcome {
    let (spec, n) = graph_spec(cfg)?;
    let format = format_of(cfg, Format::Text)?;
    let reference: GraphSpec = match cfg.str("slide.reference") {
        Some(id) => id.parse()?,
        None => format!("schwarzschild({n},{})", cfg.get_or("graph.m", 1.0)?).parse()?,
    };
    if reference.dimension().is_some_and(|d| d != n) {
        return Err(Failure::Config(format!("reference {reference} does not have dimension {n}")));
    }
    let f = spec.build(n)?;
    let h = reference.build(n)?;
    let (wf, wh) = (spec.sample_window(), reference.sample_window());
    let window = penrose_lab::catalog::SampleWindow {
        r_min: wf.r_min.max(wh.r_min),
        r_max: wf.r_max.min(wh.r_max),
    };
    let r_min = cfg.get_or("sample.r_min", window.r_min)?;
    let r_max = cfg.get_or("sample.r_max", window.r_max)?;
    let plan = SamplePlan::annulus(
        n,
        r_min,
        r_max,
        cfg.get_or("sample.shells", 10)?,
        cfg.get_or("sample.order", 4)?,
    );
    let lambda_start = match cfg.get("slide.lambda_start")? {
        Some(l) => l,
        None => {
            let mut worst = f64::NEG_INFINITY;
            for s in plan.points()? {
                f.check_point(&s.x)?;
                h.check_point(&s.x)?;
                worst = worst.max(f.value(&s.x) - h.value(&s.x));
            }
            worst + 1.0
        }
    };
    let defaults = SlideOptions::default();
    let options = SlideOptions {
        gap_tolerance: cfg.get_or("slide.gap_tolerance", defaults.gap_tolerance)?,
        lambda_min: cfg.get_or("slide.lambda_min", defaults.lambda_min)?,
        boundary_radius: spec.boundary_radius().max(reference.boundary_radius()),
        ..defaults
    };
    let step = cfg.get_or("slide.lambda_step", 0.05 * lambda_start.abs().max(1.0))?;
    let res = slide_comparison(&f, &h, lambda_start, step, &plan, &options)?;
    let mut out = output(cfg)?;
    match format {
        Format::Json => write_json(&mut out, &json!({ "graph": spec.to_string(), "reference": reference.to_string(), "result": res }))?,
        Format::Csv => {
            let rows = res.gap_profile.iter().map(|(l, g)| vec![*l, *g]);
            write_table(&mut out, &["lambda", "min_gap"], rows)?;
        }
        Format::Text => {
            writeln!(out, "slide {reference} + lambda onto {spec}, {} samples", res.samples)?;
            match res.lambda_star {
                Some(l) => writeln!(out, "lambda*        {}", fmt_f64(l))?,
                None => writeln!(out, "lambda*        none (no touch above {})", options.lambda_min)?,
            }
            writeln!(out, "classification {:?}", res.classification)?;
            writeln!(out, "window edge    {}", res.window_edge)?;
            writeln!(out, "touch count    {}", res.touch_count)?;
            if let Some(t) = &res.first_touch {
                writeln!(out, "first touch    {:?}", t.x)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn suite(cfg: &RunConfig) -> Outcome {
    let id: SuiteId = cfg
        .str("suite.id")
        .ok_or_else(|| Failure::Config("no suite given".into()))?
        .parse()?;
    let format = format_of(cfg, Format::Text)?;
    if format == Format::Csv {
        return Err(Failure::Config("suite reports are text or json".into()));
    }
    let defaults = SuiteOptions::default();
    let options = SuiteOptions {
        seed: cfg.get_or("seed", defaults.seed)?,
        matrices: cfg.get_or("suite.matrices", defaults.matrices)?,
        samples: cfg.get_or("suite.samples", defaults.samples)?,
        decay_q: cfg.get("suite.decay_q")?,
    };
    let rep = run_suite(id, &options)?;
    let mut out = output(cfg)?;
    match format {
        Format::Json => writeln!(out, "{}", rep.to_json())?,
        _ => {
            writeln!(out, "suite {id}, seed {}", rep.seed)?;
            for c in &rep.checks {
                writeln!(out, "{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name)?;
                if !c.passed {
                    writeln!(out, "     detail {}", c.detail)?;
                    for w in &c.witnesses {
                        writeln!(out, "     witness {w}")?;
                    }
                }
            }
        }
    }
    out.flush()?;
    if rep.passed {
        Ok(())
    } else {
        let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::SuiteFailed(format!(
            "suite {id} failed (seed {}): {}",
            rep.seed,
            names.join(", ")
        )))
    }
}
