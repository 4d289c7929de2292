//! Pointwise curvature of a graph `x ↦ (x, u(x))` in `ℝⁿ⁺¹`.
//!
//! With `p = Du`, `ξ = D²u` and `W = √(1+|p|²)`:
//! `g = I + ppᵀ`, `g⁻¹ = I − ppᵀ/W²`, `A = ξ/W` (upward normal),
//! `S = g⁻¹A`, `H = tr S`, `R = H² − tr(S²)` and `E = H g⁻¹ − S g⁻¹`.
//! Flipping the normal flips `A`, `S` and `H` but leaves `R` unchanged.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::graph::{GraphFunction, StepRule};
use crate::linalg::{min_eigenvalue, spectral_radius_sym};
use crate::quadrature::{gauss_legendre, SphereQuadrature};
use crate::sampling::{SamplePlan, SamplePoint};

/// All pointwise geometric data of a graph at one base point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePoint {
    pub x: DVector<f64>,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub grad_norm_sq: f64,
    pub metric: DMatrix<f64>,
    pub inverse_metric: DMatrix<f64>,
    pub second_fundamental_form: DMatrix<f64>,
    /// `A^i_j = g^{ik} A_{kj}`; not symmetric in general.
    pub shape_operator: DMatrix<f64>,
    pub mean_curvature: f64,
    pub scalar_curvature: f64,
    pub ellipticity: DMatrix<f64>,
}

impl CurvaturePoint {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `√(1+|Du|²)`.
    pub fn w(&self) -> f64 {
        (1.0 + self.grad_norm_sq).sqrt()
    }

    /// Frobenius norm of the second fundamental form in orthonormal frames,
    /// `√tr(S²)` (the shape operator is self-adjoint for `g`).
    pub fn second_fundamental_form_norm(&self) -> f64 {
        let s = &self.shape_operator;
        (s * s).trace().max(0.0).sqrt()
    }

    /// Flags a (numerically) geodesic point, `|A| < tol`.
    pub fn is_geodesic(&self, tol: f64) -> bool {
        self.second_fundamental_form_norm() < tol
    }

    /// Smallest eigenvalue of the symmetrized ellipticity matrix.
    pub fn min_ellipticity(&self) -> Result<f64> {
        min_eigenvalue(&self.ellipticity)
    }

    /// `H δ − S`.
    pub fn mean_minus_shape(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::identity(n, n) * self.mean_curvature - &self.shape_operator
    }

    /// Principal curvatures: eigenvalues of `g^{−1/2} A g^{−1/2}`, ascending.
    pub fn principal_curvatures(&self) -> Result<DVector<f64>> {
        let root = inverse_metric_sqrt(&self.gradient);
        let sym = &root * &self.second_fundamental_form * &root;
        crate::linalg::symmetric_eigenvalues(&sym)
    }
}

/// `g^{−1/2} = I + (1/W − 1) ppᵀ/|p|²`.
pub fn inverse_metric_sqrt(p: &DVector<f64>) -> DMatrix<f64> {
    let n = p.len();
    let s = p.norm_squared();
    let mut out = DMatrix::identity(n, n);
    if s > 0.0 {
        let w = (1.0 + s).sqrt();
        out += (p * p.transpose()) * ((1.0 / w - 1.0) / s);
    }
    out
}

/// `g⁻¹ = I − ppᵀ/(1+|p|²)`.
pub fn inverse_metric(p: &DVector<f64>) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::identity(n, n) - (p * p.transpose()) / (1.0 + p.norm_squared())
}

/// Builds the curvature record from `Du = p` and `D²u = ξ`.
pub fn curvature_from_derivatives(
    x: DVector<f64>,
    p: DVector<f64>,
    xi: DMatrix<f64>,
) -> Result<CurvaturePoint> {
    let n = p.len();
    if xi.nrows() != n || xi.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: xi.nrows(),
        });
    }
    ensure_finite("gradient", p.iter().copied())?;
    ensure_finite("hessian", xi.iter().copied())?;
    let s = p.norm_squared();
    let w = (1.0 + s).sqrt();
    let outer = &p * p.transpose();
    let metric = DMatrix::identity(n, n) + &outer;
    let inverse_metric = DMatrix::identity(n, n) - &outer / (1.0 + s);
    let second = &xi / w;
    let shape = &inverse_metric * &second;
    let mean = shape.trace();
    let scalar = mean * mean - (&shape * &shape).trace();
    let ellipticity = &inverse_metric * mean - &shape * &inverse_metric;
    Ok(CurvaturePoint {
        x,
        gradient: p,
        hessian: xi,
        grad_norm_sq: s,
        metric,
        inverse_metric,
        second_fundamental_form: second,
        shape_operator: shape,
        mean_curvature: mean,
        scalar_curvature: scalar,
        ellipticity,
    })
}

pub fn curvature_at<G: GraphFunction + ?Sized>(f: &G, x: &DVector<f64>) -> Result<CurvaturePoint> {
    f.check_point(x)?;
    curvature_from_derivatives(x.clone(), f.gradient(x), f.hessian(x))
}

/// `R(p, ξ)` as a function of the first and second derivatives. Accepts a
/// non-symmetric `ξ` so that partial derivatives in single entries make sense.
pub fn scalar_curvature_operator(p: &DVector<f64>, xi: &DMatrix<f64>) -> f64 {
    let w = (1.0 + p.norm_squared()).sqrt();
    let shape = inverse_metric(p) * xi / w;
    let h = shape.trace();
    h * h - (&shape * &shape).trace()
}

/// `H(p, ξ)`.
pub fn mean_curvature_operator(p: &DVector<f64>, xi: &DMatrix<f64>) -> f64 {
    let w = (1.0 + p.norm_squared()).sqrt();
    (inverse_metric(p) * xi).trace() / w
}

/// `H(p,ξ) δ − S(p,ξ)`.
pub fn mean_minus_shape_operator(p: &DVector<f64>, xi: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.len();
    let w = (1.0 + p.norm_squared()).sqrt();
    let shape = inverse_metric(p) * xi / w;
    DMatrix::identity(n, n) * shape.trace() - shape
}

/// `E(p, ξ) = H g⁻¹ − S g⁻¹`.
pub fn ellipticity_operator(p: &DVector<f64>, xi: &DMatrix<f64>) -> DMatrix<f64> {
    let w = (1.0 + p.norm_squared()).sqrt();
    let ginv = inverse_metric(p);
    let shape = &ginv * xi / w;
    &ginv * shape.trace() - shape * ginv
}

/// `F_j = Σ_i (u_ii u_j − u_ij u_i) / (1+|Du|²)`, whose divergence is `R`.
pub fn curvature_flux_field(p: &DVector<f64>, xi: &DMatrix<f64>) -> DVector<f64> {
    (p * xi.trace() - xi * p) / (1.0 + p.norm_squared())
}

/// `R` as `Σ_j ∂_j F_j`, with the divergence taken by central differences.
pub fn scalar_curvature_divergence_form<G: GraphFunction + ?Sized>(
    f: &G,
    x: &DVector<f64>,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Argument(format!("difference step must be positive, got {step}")));
    }
    f.check_point(x)?;
    let flux = |y: &DVector<f64>| -> Result<DVector<f64>> {
        f.check_point(y)?;
        let v = curvature_flux_field(&f.gradient(y), &f.hessian(y));
        ensure_finite("flux field", v.iter().copied())?;
        Ok(v)
    };
    let mut total = 0.0;
    for j in 0..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += step;
        minus[j] -= step;
        total += (flux(&plus)?[j] - flux(&minus)?[j]) / (2.0 * step);
    }
    Ok(total)
}

/// Default step for the divergence form: cube-root-of-epsilon scaling.
pub fn divergence_step(x: &DVector<f64>) -> f64 {
    StepRule::THIRD.step_at(x)
}

/// Linearization of `u ↦ R(Du, D²u)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationPoint {
    /// `∂R/∂u_ij = (2/W) E^{ij}`.
    pub a: DMatrix<f64>,
    /// `∂R/∂u_i`, by central differences in the gradient slot.
    pub b: DVector<f64>,
    pub base: CurvaturePoint,
}

fn gradient_slot_derivative(p: &DVector<f64>, xi: &DMatrix<f64>) -> DVector<f64> {
    let step = StepRule::FIRST_SECOND.step_at(p);
    DVector::from_fn(p.len(), |i, _| {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[i] += step;
        minus[i] -= step;
        (scalar_curvature_operator(&plus, xi) - scalar_curvature_operator(&minus, xi)) / (2.0 * step)
    })
}

pub fn linearize_from_derivatives(
    x: DVector<f64>,
    p: DVector<f64>,
    xi: DMatrix<f64>,
) -> Result<LinearizationPoint> {
    let base = curvature_from_derivatives(x, p, xi)?;
    let a = &base.ellipticity * (2.0 / base.w());
    let b = gradient_slot_derivative(&base.gradient, &base.hessian);
    Ok(LinearizationPoint { a, b, base })
}

pub fn linearize_at<G: GraphFunction + ?Sized>(f: &G, x: &DVector<f64>) -> Result<LinearizationPoint> {
    f.check_point(x)?;
    linearize_from_derivatives(x.clone(), f.gradient(x), f.hessian(x))
}

/// Coefficients of `R(u) − R(v) = a^{ij}(u−v)_ij + b^i(u−v)_i`, where `a` and
/// `b` are averages of the pointwise linearization along
/// `t ↦ (tDu + (1−t)Dv, tD²u + (1−t)D²v)`, taken with a Gauss–Legendre
/// rule of the given order in `t`.
pub fn averaged_linearization<U, V>(
    u: &U,
    v: &V,
    x: &DVector<f64>,
    t_order: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)>
where
    U: GraphFunction + ?Sized,
    V: GraphFunction + ?Sized,
{
    u.check_point(x)?;
    v.check_point(x)?;
    let rule = gauss_legendre(t_order)?;
    let (pu, pv) = (u.gradient(x), v.gradient(x));
    let (xu, xv) = (u.hessian(x), v.hessian(x));
    let n = x.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
        let t = 0.5 * (node + 1.0);
        let w = 0.5 * weight;
        let p = &pu * t + &pv * (1.0 - t);
        let xi = &xu * t + &xv * (1.0 - t);
        let lin = linearize_from_derivatives(x.clone(), p, xi)?;
        a += lin.a * w;
        b += lin.b * w;
    }
    Ok((a, b))
}

/// Sign verdict of a mean-curvature scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignVerdict {
    Nonnegative,
    Nonpositive,
    SignChange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanConvexityReport {
    pub points: usize,
    pub min_h: f64,
    pub max_h: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    pub nonnegative: bool,
    pub nonpositive: bool,
    pub verdict: SignVerdict,
    /// Points where `H` has the sign that breaks the opposite verdict.
    pub witnesses: Vec<Vec<f64>>,
}

pub const MEAN_CONVEXITY_TOLERANCE: f64 = 1e-8;

pub fn mean_convexity_scan<G: GraphFunction + ?Sized>(f: &G, plan: &SamplePlan) -> Result<MeanConvexityReport> {
    let points = plan.points()?;
    if points.is_empty() {
        return Err(Error::Argument("empty sample plan".into()));
    }
    let values: Vec<f64> = points
        .par_iter()
        .map(|s| curvature_at(f, &s.x).map(|c| c.mean_curvature))
        .collect::<Result<_>>()?;
    let (mut imin, mut imax) = (0, 0);
    for (i, &h) in values.iter().enumerate() {
        if h < values[imin] {
            imin = i;
        }
        if h > values[imax] {
            imax = i;
        }
    }
    let (min_h, max_h) = (values[imin], values[imax]);
    let nonnegative = min_h >= -MEAN_CONVEXITY_TOLERANCE;
    let nonpositive = max_h <= MEAN_CONVEXITY_TOLERANCE;
    let verdict = match (nonnegative, nonpositive) {
        (true, _) => SignVerdict::Nonnegative,
        (false, true) => SignVerdict::Nonpositive,
        (false, false) => SignVerdict::SignChange,
    };
    let witnesses = if verdict == SignVerdict::SignChange {
        vec![to_vec(&points[imin].x), to_vec(&points[imax].x)]
    } else {
        Vec::new()
    };
    Ok(MeanConvexityReport {
        points: points.len(),
        min_h,
        max_h,
        argmin: to_vec(&points[imin].x),
        argmax: to_vec(&points[imax].x),
        nonnegative,
        nonpositive,
        verdict,
        witnesses,
    })
}

fn to_vec(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

/// Sampled decay rates of `|Df|` and `|D²f|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub q: f64,
    pub radii: Vec<f64>,
    pub sup_gradient: Vec<f64>,
    pub sup_hessian: Vec<f64>,
    /// Log–log slopes; `None` when the sampled norms vanish identically.
    pub gradient_exponent: Option<f64>,
    pub hessian_exponent: Option<f64>,
    pub required_gradient_exponent: f64,
    pub required_hessian_exponent: f64,
    /// `∫ R` over the annulus between consecutive radii; a trend, not a verdict.
    pub annulus_scalar_integrals: Vec<f64>,
    pub pass: bool,
}

const DECAY_SLACK: f64 = 0.1;
const DECAY_ANGULAR_ORDER: usize = 4;

fn log_log_slope(radii: &[f64], values: &[f64]) -> Option<f64> {
    if values.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

pub fn decay_report<G: GraphFunction + ?Sized>(f: &G, q: f64, radii: &[f64]) -> Result<DecayReport> {
    let n = f.dim();
    if radii.len() < 3 {
        return Err(Error::Argument(format!("decay fit needs at least 3 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("radii must be strictly increasing".into()));
    }
    let r0 = f.domain().boundary_radius();
    if radii[0] < 2.0 * r0 {
        return Err(Error::Radius {
            radius: radii[0],
            reason: format!("decay radii must be at least twice the boundary radius {r0}"),
        });
    }
    let floor = (n as f64 - 2.0) / 2.0;
    if !(q > floor) {
        return Err(Error::Argument(format!("decay order q = {q} must exceed (n-2)/2 = {floor}")));
    }
    let mut sup_gradient = Vec::with_capacity(radii.len());
    let mut sup_hessian = Vec::with_capacity(radii.len());
    for &r in radii {
        let sphere = SphereQuadrature::new(n, r, DECAY_ANGULAR_ORDER)?;
        let norms: Vec<(f64, f64)> = sphere
            .nodes
            .par_iter()
            .map(|x| -> Result<(f64, f64)> {
                f.check_point(x)?;
                let g = f.gradient(x).norm();
                let h = spectral_radius_sym(&f.hessian(x))?;
                ensure_finite("derivative norms", [g, h])?;
                Ok((g, h))
            })
            .collect::<Result<_>>()?;
        sup_gradient.push(norms.iter().map(|v| v.0).fold(0.0, f64::max));
        sup_hessian.push(norms.iter().map(|v| v.1).fold(0.0, f64::max));
    }
    let gradient_exponent = log_log_slope(radii, &sup_gradient);
    let hessian_exponent = log_log_slope(radii, &sup_hessian);
    let required_gradient_exponent = -q / 2.0;
    let required_hessian_exponent = -q / 2.0 - 1.0;
    let ok = |e: Option<f64>, req: f64| e.is_none_or(|e| e <= req + DECAY_SLACK);
    let pass = ok(gradient_exponent, required_gradient_exponent) && ok(hessian_exponent, required_hessian_exponent);
    let annulus_scalar_integrals = radii
        .windows(2)
        .map(|w| annulus_scalar_integral(f, w[0], w[1], DECAY_ANGULAR_ORDER, 8))
        .collect::<Result<_>>()?;
    Ok(DecayReport {
        q,
        radii: radii.to_vec(),
        sup_gradient,
        sup_hessian,
        gradient_exponent,
        hessian_exponent,
        required_gradient_exponent,
        required_hessian_exponent,
        annulus_scalar_integrals,
        pass,
    })
}

/// `∫_{r_a ≤ |x| ≤ r_b} R dx` by a sphere rule times Gauss–Legendre in `r`.
pub fn annulus_scalar_integral<G: GraphFunction + ?Sized>(
    f: &G,
    r_a: f64,
    r_b: f64,
    angular_order: usize,
    radial_order: usize,
) -> Result<f64> {
    let n = f.dim();
    let unit = SphereQuadrature::new(n, 1.0, angular_order)?;
    let rule = gauss_legendre(radial_order)?;
    let half = 0.5 * (r_b - r_a);
    let mid = 0.5 * (r_b + r_a);
    let mut total = 0.0;
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let r = mid + half * t;
        let shell = unit.try_integrate(|theta| {
            let x = theta * r;
            Ok(curvature_at(f, &x)?.scalar_curvature)
        })?;
        total += w * half * shell * r.powi(n as i32 - 1);
    }
    Ok(total)
}

/// Pointwise curvature over a sample plan, in plan order.
pub fn curvature_over_plan<G: GraphFunction + ?Sized>(
    f: &G,
    plan: &SamplePlan,
) -> Result<Vec<(SamplePoint, CurvaturePoint)>> {
    let points = plan.points()?;
    let curv: Vec<CurvaturePoint> = points
        .par_iter()
        .map(|s| curvature_at(f, &s.x))
        .collect::<Result<_>>()?;
    Ok(points.into_iter().zip(curv).collect())
}
