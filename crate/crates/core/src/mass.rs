//! ADM mass, the Penrose bound, level-set curvature and the divergence
//! identity relating mass, scalar curvature and the inner boundary.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{curvature_at, curvature_flux_field};
use crate::graph::GraphFunction;
use crate::quadrature::{composite_gauss_legendre, gauss_legendre, unit_sphere_volume, SphereQuadrature};
use crate::radial::radial_scalar_curvature;
use crate::sampling::SamplePlan;

/// Below this gradient norm a level set is treated as singular.
pub const REGULARITY_THRESHOLD: f64 = 1e-8;

/// `2(n−1)ω_{n−1}`, the normalization of the mass flux.
pub fn mass_normalization(n: usize) -> f64 {
    2.0 * (n as f64 - 1.0) * unit_sphere_volume(n - 1)
}

/// `F(Df, D²f)·x/|x|`, the integrand of the mass flux.
pub fn flux_integrand(p: &DVector<f64>, xi: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    curvature_flux_field(p, xi).dot(x) / x.norm()
}

/// `∫_{S_r} F·x/|x| dσ / (2(n−1)ω_{n−1})`.
pub fn mass_flux<G: GraphFunction + ?Sized>(f: &G, quad: &SphereQuadrature) -> Result<f64> {
    let n = f.dim();
    if quad.n != n {
        return Err(Error::Dimension {
            expected: n,
            got: quad.n,
        });
    }
    let integral = quad.try_integrate(|x| {
        f.check_point(x)?;
        let v = flux_integrand(&f.gradient(x), &f.hessian(x), x);
        ensure_finite("mass flux integrand", [v])?;
        Ok(v)
    })?;
    Ok(integral / mass_normalization(n))
}

/// One consecutive-triple fit of `flux(r) = m + c r^{−p}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrapolant {
    pub radii: [f64; 3],
    pub mass: f64,
    /// `None` when the triple is flat or not monotonically converging.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassEstimate {
    pub radii: Vec<f64>,
    pub fluxes: Vec<f64>,
    pub extrapolants: Vec<Extrapolant>,
    pub mass: f64,
    pub residual: f64,
    pub converged: bool,
    pub quad_order: usize,
    pub nodes_per_sphere: usize,
}

const MAX_EXPONENT: f64 = 60.0;

/// `((r₂/r₁)^p − 1) / (1 − (r₂/r₃)^p)`, increasing in `p`.
fn difference_ratio(r: [f64; 3], p: f64) -> f64 {
    ((r[1] / r[0]).powf(p) - 1.0) / (1.0 - (r[1] / r[2]).powf(p))
}

fn extrapolate_triple(r: [f64; 3], flux: [f64; 3]) -> Extrapolant {
    let d1 = flux[1] - flux[0];
    let d2 = flux[2] - flux[1];
    let flat = 1e-13 * (1.0 + flux[2].abs());
    let fallback = Extrapolant {
        radii: r,
        mass: flux[2],
        exponent: None,
    };
    if (d1.abs() <= flat && d2.abs() <= flat) || d1 * d2 <= 0.0 {
        return fallback;
    }
    let target = d1 / d2;
    let (mut lo, mut hi) = (1e-8, MAX_EXPONENT);
    if target <= difference_ratio(r, lo) {
        return fallback;
    }
    let p = if target >= difference_ratio(r, hi) {
        MAX_EXPONENT
    } else {
        while hi - lo > 1e-14 * hi {
            let mid = 0.5 * (lo + hi);
            if difference_ratio(r, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mass = flux[2] + d2 / ((r[2] / r[1]).powf(p) - 1.0);
    Extrapolant {
        radii: r,
        mass,
        exponent: Some(p),
    }
}

/// Extrapolates a flux table to `r → ∞`. The residual is the spread of the
/// last two extrapolants, or `|m − flux(r_last)|` when only one triple exists.
pub fn extrapolate_mass(radii: &[f64], fluxes: &[f64]) -> Result<(Vec<Extrapolant>, f64, f64, bool)> {
    if radii.len() < 3 || radii.len() != fluxes.len() {
        return Err(Error::Argument(format!(
            "mass extrapolation needs at least 3 radii, got {}",
            radii.len()
        )));
    }
    let extrapolants: Vec<Extrapolant> = radii
        .windows(3)
        .zip(fluxes.windows(3))
        .map(|(r, fl)| extrapolate_triple([r[0], r[1], r[2]], [fl[0], fl[1], fl[2]]))
        .collect();
    let mass = extrapolants.last().map(|e| e.mass).unwrap_or(0.0);
    let residual = match extrapolants.len() {
        1 => (mass - fluxes[fluxes.len() - 1]).abs(),
        k => (extrapolants[k - 1].mass - extrapolants[k - 2].mass).abs(),
    };
    let converged = residual <= 0.1 * mass.abs() || residual <= 1e-12;
    Ok((extrapolants, mass, residual, converged))
}

pub fn adm_mass<G: GraphFunction + ?Sized>(f: &G, radii: &[f64]) -> Result<MassEstimate> {
    adm_mass_with_order(f, radii, SphereQuadrature::default_order(f.dim()))
}

pub fn adm_mass_with_order<G: GraphFunction + ?Sized>(f: &G, radii: &[f64], order: usize) -> Result<MassEstimate> {
    if radii.len() < 3 {
        return Err(Error::Argument(format!("ADM mass needs at least 3 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("radii must be strictly increasing".into()));
    }
    let mut fluxes = Vec::with_capacity(radii.len());
    let mut nodes = 0;
    for &r in radii {
        let quad = SphereQuadrature::new(f.dim(), r, order)?;
        nodes = quad.len();
        fluxes.push(mass_flux(f, &quad)?);
    }
    let (extrapolants, mass, residual, converged) = extrapolate_mass(radii, &fluxes)?;
    Ok(MassEstimate {
        radii: radii.to_vec(),
        fluxes,
        extrapolants,
        mass,
        residual,
        converged,
        quad_order: order,
        nodes_per_sphere: nodes,
    })
}

/// `½ (A/ω_{n−1})^{(n−2)/(n−1)}`.
pub fn penrose_bound(n: usize, boundary_area: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Argument(format!("the bound needs n ≥ 3, got {n}")));
    }
    if !(boundary_area > 0.0 && boundary_area.is_finite()) {
        return Err(Error::Argument(format!("boundary area must be positive, got {boundary_area}")));
    }
    let nf = n as f64;
    Ok(0.5 * (boundary_area / unit_sphere_volume(n - 1)).powf((nf - 2.0) / (nf - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub equality: bool,
}

/// `Σ aᵢ^β` against `(Σ aᵢ)^β`.
pub fn elementary_power_inequality(a: &[f64], beta: f64) -> Result<PowerInequality> {
    if let Some(bad) = a.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Argument(format!("entries must be non-negative, got {bad}")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Argument(format!("exponent must lie in [0, 1], got {beta}")));
    }
    let lhs: f64 = a.iter().map(|v| v.powf(beta)).sum();
    let rhs = a.iter().sum::<f64>().powf(beta);
    Ok(PowerInequality {
        lhs,
        rhs,
        equality: (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs),
    })
}

/// Orientation of a level-set normal relative to `Df`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    AlongGradient,
    AgainstGradient,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::AlongGradient => 1.0,
            Orientation::AgainstGradient => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::AlongGradient => Orientation::AgainstGradient,
            Orientation::AgainstGradient => Orientation::AlongGradient,
        }
    }
}

fn singular(x: &DVector<f64>, grad_norm: f64) -> Error {
    Error::SingularLevelSet {
        points: 1,
        first: x.iter().copied().collect(),
        grad_norm,
    }
}

/// Shape operator of the level set through `x` (on ℝⁿ, zero on the normal
/// line) for the normal `o·Df/|Df|`, with `H_Σ = −div(o·Df/|Df|)` as trace.
pub fn level_set_shape_operator(p: &DVector<f64>, xi: &DMatrix<f64>, orientation: Orientation) -> DMatrix<f64> {
    let n = p.len();
    let norm = p.norm();
    let eta = p / norm;
    let proj = DMatrix::identity(n, n) - &eta * eta.transpose();
    &proj * xi * &proj * (-orientation.sign() / norm)
}

/// `H_Σ = −o (Δf − ηᵀD²f η)/|Df|` from first and second derivatives.
pub fn level_set_mean_curvature_from(p: &DVector<f64>, xi: &DMatrix<f64>, orientation: Orientation) -> f64 {
    let norm = p.norm();
    let eta = p / norm;
    -orientation.sign() * (xi.trace() - eta.dot(&(xi * &eta))) / norm
}

pub fn level_set_mean_curvature<G: GraphFunction + ?Sized>(
    f: &G,
    x: &DVector<f64>,
    orientation: Orientation,
) -> Result<f64> {
    f.check_point(x)?;
    let p = f.gradient(x);
    let norm = p.norm();
    if !(norm >= REGULARITY_THRESHOLD) {
        return Err(singular(x, norm));
    }
    let xi = f.hessian(x);
    let h = level_set_mean_curvature_from(&p, &xi, orientation);
    ensure_finite("level-set mean curvature", [h])?;
    Ok(h)
}

/// Quadrature node on a star-shaped level set.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetNode {
    pub x: DVector<f64>,
    /// Quadrature weight times the area element `ρ^{n−1}/⟨θ, ν_out⟩`.
    pub weight: f64,
    pub grad_norm: f64,
    /// Mean curvature for the inward normal.
    pub inward_mean_curvature: f64,
}

/// A level set `{f = level}` that meets every ray from the origin once.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetSurface {
    pub n: usize,
    pub level: f64,
    pub order: usize,
    pub nodes: Vec<LevelSetNode>,
}

impl LevelSetSurface {
    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|s| s.weight).sum()
    }

    pub fn integrate(&self, g: impl Fn(&LevelSetNode) -> f64) -> f64 {
        self.nodes.iter().map(|s| s.weight * g(s)).sum()
    }
}

/// Root of `f(rθ) = level` in `[lo, hi]` by bisection to `1e-10·max(1, r)`.
fn root_on_ray<G: GraphFunction + ?Sized>(f: &G, theta: &DVector<f64>, level: f64, lo: f64, hi: f64) -> Result<f64> {
    let g = |r: f64| f.value(&(theta * r)) - level;
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if !(ga * gb < 0.0) {
        return Err(Error::Argument(format!(
            "level {level} is not bracketed on [{lo}, {hi}] along direction {:?}",
            theta.as_slice()
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-10 * b.max(1.0) * 1e-2 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Samples `{f = level}` by bisection along the rays through the nodes of a
/// unit-sphere rule, searching radii in `bracket`.
pub fn sample_level_set<G: GraphFunction + ?Sized>(
    f: &G,
    level: f64,
    bracket: (f64, f64),
    order: usize,
) -> Result<LevelSetSurface> {
    let n = f.dim();
    let unit = SphereQuadrature::new(n, 1.0, order)?;
    let raw: Vec<Result<(DVector<f64>, f64, DVector<f64>, DMatrix<f64>)>> = unit
        .nodes
        .par_iter()
        .map(|theta| {
            let rho = root_on_ray(f, theta, level, bracket.0, bracket.1)?;
            let x = theta * rho;
            f.check_point(&x)?;
            let (p, xi) = (f.gradient(&x), f.hessian(&x));
            Ok((x, rho, p, xi))
        })
        .collect();
    let mut nodes = Vec::with_capacity(raw.len());
    let mut bad: Vec<(DVector<f64>, f64)> = Vec::new();
    for (item, (theta, w)) in raw.into_iter().zip(unit.nodes.iter().zip(&unit.weights)) {
        let (x, rho, p, xi) = item?;
        let norm = p.norm();
        if !(norm >= REGULARITY_THRESHOLD) {
            bad.push((x, norm));
            continue;
        }
        let outward = theta.dot(&p).signum();
        let cosine = (theta.dot(&p) / norm).abs();
        if cosine < 1e-12 {
            return Err(Error::Argument(format!(
                "level set is not star-shaped near {:?}",
                x.as_slice()
            )));
        }
        let inward = if outward > 0.0 {
            Orientation::AgainstGradient
        } else {
            Orientation::AlongGradient
        };
        let h = level_set_mean_curvature_from(&p, &xi, inward);
        ensure_finite("level-set mean curvature", [h])?;
        nodes.push(LevelSetNode {
            weight: w * rho.powi(n as i32 - 1) / cosine,
            x,
            grad_norm: norm,
            inward_mean_curvature: h,
        });
    }
    if let Some((x, g)) = bad.first() {
        return Err(Error::SingularLevelSet {
            points: bad.len(),
            first: x.iter().copied().collect(),
            grad_norm: *g,
        });
    }
    Ok(LevelSetSurface {
        n,
        level,
        order,
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LamIdentity {
    pub level: f64,
    pub level_radius: f64,
    pub r_out: f64,
    /// `∫_{S_{r_out}} F·x/|x| dσ`.
    pub flux_term: f64,
    /// `∫ R dx` between the level set and `S_{r_out}`.
    pub scalar_term: f64,
    /// `∫_Σ |Df|²/(1+|Df|²) H_Σ dσ` for the inward normal.
    pub boundary_term: f64,
    pub residual: f64,
    pub relative_residual: f64,
    /// `(scalar_term + boundary_term)/(2(n−1)ω_{n−1})`.
    pub identity_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LamOptions {
    pub angular_order: usize,
    pub radial_panels: usize,
    pub radial_order: usize,
}

impl LamOptions {
    pub fn for_dimension(n: usize) -> Self {
        Self {
            angular_order: SphereQuadrature::default_order(n),
            radial_panels: 48,
            radial_order: 12,
        }
    }
}

/// Checks `flux(S_{r_out}) = ∫R + ∫_Σ |Df|²/(1+|Df|²) H_Σ` for the level set
/// `Σ` of `f` through `level_radius·e₁`. Radial graphs use the exact sphere
/// reduction for the last two terms; other graphs use star-shaped sampling.
pub fn lam_identity_residual<G: GraphFunction + ?Sized>(
    f: &G,
    level_radius: f64,
    r_out: f64,
    options: &LamOptions,
) -> Result<LamIdentity> {
    let n = f.dim();
    if !(level_radius > 0.0 && r_out > level_radius) {
        return Err(Error::Argument(format!(
            "need 0 < level radius ({level_radius}) < outer radius ({r_out})"
        )));
    }
    let mut anchor = DVector::zeros(n);
    anchor[0] = level_radius;
    f.check_point(&anchor)?;
    let level = f.value(&anchor);
    let omega = unit_sphere_volume(n - 1);
    let outer = SphereQuadrature::new(n, r_out, options.angular_order)?;
    let flux_term = mass_flux(f, &outer)? * mass_normalization(n);
    let rule = gauss_legendre(options.radial_order)?;

    let (scalar_term, boundary_term) = if let Some(profile) = f.radial() {
        let nf = n as f64;
        let d = profile.eval(level_radius);
        ensure_finite("profile at the level radius", [d.dh])?;
        let boundary = omega * (nf - 1.0) * level_radius.powi(n as i32 - 2) * d.dh * d.dh / (1.0 + d.dh * d.dh);
        let integrand = |r: f64| {
            let d = profile.eval(r);
            radial_scalar_curvature(n, r, d.dh, d.d2h).unwrap_or(f64::NAN) * r.powi(n as i32 - 1)
        };
        let scalar = omega
            * composite_gauss_legendre(
                integrand,
                level_radius,
                r_out,
                options.radial_panels,
                &rule,
                &profile.breakpoints(),
            );
        ensure_finite("annulus scalar-curvature integral", [scalar])?;
        (scalar, boundary)
    } else {
        lam_terms_star_shaped(f, level, level_radius, r_out, options, &rule)?
    };
    let residual = flux_term - scalar_term - boundary_term;
    let relative_residual = if flux_term != 0.0 {
        (residual / flux_term).abs()
    } else {
        residual.abs()
    };
    Ok(LamIdentity {
        level,
        level_radius,
        r_out,
        flux_term,
        scalar_term,
        boundary_term,
        residual,
        relative_residual,
        identity_mass: (scalar_term + boundary_term) / mass_normalization(n),
    })
}

fn lam_terms_star_shaped<G: GraphFunction + ?Sized>(
    f: &G,
    level: f64,
    level_radius: f64,
    r_out: f64,
    options: &LamOptions,
    rule: &crate::quadrature::GaussRule,
) -> Result<(f64, f64)> {
    let n = f.dim();
    let inner = f.domain().boundary_radius() * (1.0 + 1e-7);
    let unit = SphereQuadrature::new(n, 1.0, options.angular_order)?;
    let per_direction: Vec<Result<(f64, f64)>> = unit
        .nodes
        .par_iter()
        .map(|theta| -> Result<(f64, f64)> {
            let hint = theta * level_radius;
            let on_hint = (f.value(&hint) - level).abs() <= 1e-12 * (1.0 + level.abs());
            let rho = if on_hint {
                level_radius
            } else {
                root_on_ray(f, theta, level, inner.max(1e-9 * r_out), r_out)?
            };
            let x = theta * rho;
            f.check_point(&x)?;
            let p = f.gradient(&x);
            let xi = f.hessian(&x);
            let norm = p.norm();
            let boundary = if norm >= REGULARITY_THRESHOLD {
                let cosine = (theta.dot(&p) / norm).abs();
                let inward = if theta.dot(&p) > 0.0 {
                    Orientation::AgainstGradient
                } else {
                    Orientation::AlongGradient
                };
                let h = level_set_mean_curvature_from(&p, &xi, inward);
                rho.powi(n as i32 - 1) / cosine * norm * norm / (1.0 + norm * norm) * h
            } else if norm * xi.amax() * n as f64 <= 1e-12 {
                // |Df|² H_Σ = O(|Df|·|D²f|): the integrand vanishes here.
                0.0
            } else {
                return Err(singular(&x, norm));
            };
            let scalar = composite_gauss_legendre(
                |r| {
                    curvature_at(f, &(theta * r))
                        .map(|c| c.scalar_curvature)
                        .unwrap_or(f64::NAN)
                        * r.powi(n as i32 - 1)
                },
                rho,
                r_out,
                options.radial_panels / 4 + 1,
                rule,
                &[],
            );
            Ok((scalar, boundary))
        })
        .collect();
    let (mut scalar, mut boundary) = (0.0, 0.0);
    let mut failures = Vec::new();
    for (item, w) in per_direction.into_iter().zip(&unit.weights) {
        match item {
            Ok((s, b)) => {
                scalar += w * s;
                boundary += w * b;
            }
            Err(Error::SingularLevelSet { first, grad_norm, .. }) => failures.push((first, grad_norm)),
            Err(e) => return Err(e),
        }
    }
    if let Some((first, grad_norm)) = failures.first() {
        return Err(Error::SingularLevelSet {
            points: failures.len(),
            first: first.clone(),
            grad_norm: *grad_norm,
        });
    }
    ensure_finite("identity terms", [scalar, boundary])?;
    Ok((scalar, boundary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlexandrovFenchel {
    /// `∫ H_Σ dσ / (2(n−1)ω_{n−1})`.
    pub mean_curvature_term: f64,
    /// `½ (|Σ|/ω_{n−1})^{(n−2)/(n−1)}`.
    pub area_term: f64,
    pub gap: f64,
    pub area: f64,
}

pub fn alexandrov_fenchel_check(surface: &LevelSetSurface) -> Result<AlexandrovFenchel> {
    let n = surface.n;
    if let Some(bad) = surface
        .nodes
        .iter()
        .find(|s| s.inward_mean_curvature < -REGULARITY_THRESHOLD)
    {
        return Err(Error::MeanConvexity {
            point: bad.x.iter().copied().collect(),
            value: bad.inward_mean_curvature,
        });
    }
    let area = surface.area();
    let mean_curvature_term = surface.integrate(|s| s.inward_mean_curvature) / mass_normalization(n);
    let area_term = penrose_bound(n, area)?;
    Ok(AlexandrovFenchel {
        mean_curvature_term,
        area_term,
        gap: mean_curvature_term - area_term,
        area,
    })
}

/// How the inner boundary of a graph is described to the Penrose report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryDescriptor {
    /// Round sphere `|x| = radius`.
    Sphere { radius: f64 },
    /// The level set of `f` through `level_radius·e₁`.
    LevelSet { level_radius: f64 },
    /// Declared area only.
    Area { area: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenroseVerdict {
    Equality,
    Strict,
    BoundViolated,
    HypothesesViolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenroseResiduals {
    pub extrapolation: f64,
    /// `|boundary radius − (2m)^{1/(n−2)}|` for round boundaries.
    pub equality_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryInfo {
    pub descriptor: BoundaryDescriptor,
    pub area: f64,
    pub radius: Option<f64>,
    pub round_sphere_at_equality_radius: bool,
}

/// Sampled hypotheses. Outer-minimizing is never checked; it is recorded as
/// a user assertion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenroseHypotheses {
    /// The graph turns vertical along the inner boundary of its domain.
    pub minimal_boundary: bool,
    pub nonnegative_scalar_curvature: bool,
    pub min_sampled_scalar_curvature: f64,
    /// Sampled sign of the boundary mean curvature in the hyperplane.
    pub boundary_mean_convex: Option<bool>,
    pub outer_minimizing_asserted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenroseReport {
    pub graph: String,
    pub n: usize,
    pub mass: f64,
    pub bound: f64,
    pub slack: f64,
    pub equality: bool,
    pub residuals: PenroseResiduals,
    pub verdict: PenroseVerdict,
    pub converged: bool,
    pub boundary: BoundaryInfo,
    pub hypotheses: PenroseHypotheses,
    pub mass_estimate: MassEstimate,
}

pub const PENROSE_EQUALITY_TOLERANCE: f64 = 1e-3;

fn boundary_geometry<G: GraphFunction + ?Sized>(
    f: &G,
    boundary: &BoundaryDescriptor,
    order: usize,
) -> Result<(f64, Option<f64>, Option<bool>)> {
    let n = f.dim();
    match *boundary {
        BoundaryDescriptor::Sphere { radius } => {
            if !(radius > 0.0) {
                return Err(Error::Argument(format!("boundary radius must be positive, got {radius}")));
            }
            Ok((unit_sphere_volume(n - 1) * radius.powi(n as i32 - 1), Some(radius), Some(true)))
        }
        BoundaryDescriptor::Area { area } => {
            if !(area > 0.0) {
                return Err(Error::Argument(format!("boundary area must be positive, got {area}")));
            }
            Ok((area, None, None))
        }
        BoundaryDescriptor::LevelSet { level_radius } => {
            if f.radial().is_some() {
                return Ok((
                    unit_sphere_volume(n - 1) * level_radius.powi(n as i32 - 1),
                    Some(level_radius),
                    Some(true),
                ));
            }
            let mut anchor = DVector::zeros(n);
            anchor[0] = level_radius;
            f.check_point(&anchor)?;
            let level = f.value(&anchor);
            let inner = (f.domain().boundary_radius() * (1.0 + 1e-7)).max(1e-9 * level_radius);
            let surface = sample_level_set(f, level, (inner, 4.0 * level_radius), order)?;
            let convex = surface.nodes.iter().all(|s| s.inward_mean_curvature >= -REGULARITY_THRESHOLD);
            Ok((surface.area(), None, Some(convex)))
        }
    }
}

fn boundary_is_minimal<G: GraphFunction + ?Sized>(f: &G) -> Result<bool> {
    let n = f.dim();
    let rb = f.domain().boundary_radius();
    if !(rb > 0.0) {
        return Ok(false);
    }
    let probe = SphereQuadrature::new(n, rb * (1.0 + 1e-6), 3)?;
    Ok(probe.nodes.iter().all(|x| f.check_point(x).is_ok() && f.gradient(x).norm() > 1e2))
}

/// Mass, bound and verdict. Non-convergence of the mass is reported through
/// `converged`, not as an error.
pub fn penrose_report<G: GraphFunction + ?Sized>(
    f: &G,
    boundary: &BoundaryDescriptor,
    radii: &[f64],
    order: usize,
    outer_minimizing_asserted: bool,
) -> Result<PenroseReport> {
    let n = f.dim();
    let estimate = adm_mass_with_order(f, radii, order)?;
    let (area, radius, boundary_mean_convex) = boundary_geometry(f, boundary, order)?;
    let m = estimate.mass;
    let bound = penrose_bound(n, area)?;
    let slack = m - bound;
    let equality = slack.abs() <= PENROSE_EQUALITY_TOLERANCE * m.max(bound);
    let equality_radius = radius.map(|r| {
        let target = if m > 0.0 { (2.0 * m).powf(1.0 / (n as f64 - 2.0)) } else { 0.0 };
        (r - target).abs()
    });
    let round_sphere_at_equality_radius = matches!(boundary, BoundaryDescriptor::Sphere { .. } | BoundaryDescriptor::LevelSet { .. })
        && radius.is_some()
        && equality_radius.is_some_and(|d| d <= 1e-6 * (1.0 + radius.unwrap_or(0.0)));

    let rb = f.domain().boundary_radius();
    let r_lo = if rb > 0.0 { rb * 1.05 } else { radii[0] * 0.1 };
    let r_hi = radii[radii.len() - 1].max(r_lo);
    let plan = SamplePlan::annulus(n, r_lo, r_hi, 8, 3);
    let min_r = plan
        .points()?
        .par_iter()
        .map(|s| curvature_at(f, &s.x).map(|c| c.scalar_curvature))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let hypotheses = PenroseHypotheses {
        minimal_boundary: boundary_is_minimal(f)?,
        nonnegative_scalar_curvature: min_r >= -REGULARITY_THRESHOLD,
        min_sampled_scalar_curvature: min_r,
        boundary_mean_convex,
        outer_minimizing_asserted,
    };
    let hypotheses_hold = hypotheses.minimal_boundary
        && hypotheses.nonnegative_scalar_curvature
        && hypotheses.boundary_mean_convex != Some(false);
    let verdict = if !hypotheses_hold {
        PenroseVerdict::HypothesesViolated
    } else if equality {
        PenroseVerdict::Equality
    } else if slack > 0.0 {
        PenroseVerdict::Strict
    } else {
        PenroseVerdict::BoundViolated
    };
    Ok(PenroseReport {
        graph: f.label(),
        n,
        mass: m,
        bound,
        slack,
        equality,
        residuals: PenroseResiduals {
            extrapolation: estimate.residual,
            equality_radius,
        },
        verdict,
        converged: estimate.converged,
        boundary: BoundaryInfo {
            descriptor: *boundary,
            area,
            radius,
            round_sphere_at_equality_radius,
        },
        hypotheses,
        mass_estimate: estimate,
    })
}
