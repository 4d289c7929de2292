//! Graphing functions `f: ℝⁿ ⊃ D → ℝ` with gradient and Hessian access.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a point sits inside an open
/// domain; keeps evaluation off the singular boundary sphere.
pub const BOUNDARY_CUTOFF: f64 = 1e-8;

/// Where a graphing function is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    /// All of ℝⁿ.
    Whole,
    /// `|x| > radius`.
    Exterior { radius: f64 },
    /// `|x| < radius`.
    Ball { radius: f64 },
    /// `inner < |x| < outer`.
    Annulus { inner: f64, outer: f64 },
}

impl Domain {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        let r = x.norm();
        match *self {
            Domain::Whole => true,
            Domain::Exterior { radius } => radius <= 0.0 || r >= radius * (1.0 + BOUNDARY_CUTOFF),
            Domain::Ball { radius } => r <= radius * (1.0 - BOUNDARY_CUTOFF),
            Domain::Annulus { inner, outer } => {
                r >= inner * (1.0 + BOUNDARY_CUTOFF) && r <= outer * (1.0 + 1e-12)
            }
        }
    }

    /// Radius of the inner boundary sphere, zero when there is none.
    pub fn boundary_radius(&self) -> f64 {
        match *self {
            Domain::Whole | Domain::Ball { .. } => 0.0,
            Domain::Exterior { radius } => radius,
            Domain::Annulus { inner, .. } => inner,
        }
    }

    /// Largest admissible radius.
    pub fn outer_radius(&self) -> f64 {
        match *self {
            Domain::Ball { radius } => radius,
            Domain::Annulus { outer, .. } => outer,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Whole => write!(f, "all of R^n"),
            Domain::Exterior { radius } => write!(f, "|x| > {radius}"),
            Domain::Ball { radius } => write!(f, "|x| < {radius}"),
            Domain::Annulus { inner, outer } => write!(f, "{inner} < |x| <= {outer}"),
        }
    }
}

/// Central-difference step `max(abs, rel·|x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRule {
    pub abs: f64,
    pub rel: f64,
}

impl StepRule {
    pub const FIRST_SECOND: StepRule = StepRule { abs: 1e-5, rel: 1e-5 };
    /// Hessians from function values only: fourth root of machine epsilon.
    pub const VALUES_HESSIAN: StepRule = StepRule { abs: 1.2e-4, rel: 1.2e-4 };
    /// Third derivatives: cube root of machine epsilon.
    pub const THIRD: StepRule = StepRule { abs: 6e-6, rel: 6e-6 };

    pub fn step_at(&self, x: &DVector<f64>) -> f64 {
        self.abs.max(self.rel * x.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: StepRule },
}

/// Value, slope and second derivative of a rotationally symmetric profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialDerivs {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

/// A profile `h(r)` whose graph over ℝⁿ is `x ↦ h(|x|)`.
pub trait RadialFunction: Send + Sync {
    fn eval(&self, r: f64) -> RadialDerivs;

    /// Inner radius of the domain (zero when the profile reaches the origin).
    fn inner_radius(&self) -> f64 {
        0.0
    }

    /// Outer radius for profiles defined on a bounded ball or table.
    fn outer_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// Radii where `h''` (and so the scalar curvature) may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn label(&self) -> String;
}

/// An evaluable graphing function with first and second derivatives.
///
/// Implementations must be re-entrant; callers may evaluate from many threads.
pub trait GraphFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::Whole
    }

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Symmetric matrix of second partials.
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    fn mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }

    /// The profile when the function is rotationally symmetric about the origin.
    fn radial(&self) -> Option<&dyn RadialFunction> {
        None
    }

    fn label(&self) -> String;

    /// Dimension and domain membership check.
    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let domain = self.domain();
        if !domain.contains(x) {
            return Err(Error::Domain {
                point: x.iter().copied().collect(),
                domain: domain.to_string(),
            });
        }
        Ok(())
    }
}

impl<G: GraphFunction + ?Sized> GraphFunction for Box<G> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).hessian(x)
    }
    fn mode(&self) -> DerivativeMode {
        (**self).mode()
    }
    fn radial(&self) -> Option<&dyn RadialFunction> {
        (**self).radial()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<G: GraphFunction + ?Sized> GraphFunction for Arc<G> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).hessian(x)
    }
    fn mode(&self) -> DerivativeMode {
        (**self).mode()
    }
    fn radial(&self) -> Option<&dyn RadialFunction> {
        (**self).radial()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// The graph of `x ↦ h(|x|)` in ℝⁿ.
#[derive(Clone)]
pub struct RadialGraph<P> {
    n: usize,
    profile: P,
}

impl<P: RadialFunction> RadialGraph<P> {
    pub fn new(n: usize, profile: P) -> Self {
        Self { n, profile }
    }

    pub fn profile(&self) -> &P {
        &self.profile
    }
}

const ORIGIN_CUTOFF: f64 = 1e-12;

impl<P: RadialFunction> GraphFunction for RadialGraph<P> {
    fn dim(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        let inner = self.profile.inner_radius();
        let outer = self.profile.outer_radius();
        if outer.is_finite() && inner > 0.0 {
            Domain::Annulus { inner, outer }
        } else if outer.is_finite() {
            Domain::Ball { radius: outer }
        } else if inner > 0.0 {
            Domain::Exterior { radius: inner }
        } else {
            Domain::Whole
        }
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.profile.eval(x.norm()).h
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = x.norm();
        if r < ORIGIN_CUTOFF {
            return DVector::zeros(self.n);
        }
        let d = self.profile.eval(r);
        x * (d.dh / r)
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let r = x.norm();
        let d = self.profile.eval(r);
        if r < ORIGIN_CUTOFF {
            return DMatrix::identity(self.n, self.n) * d.d2h;
        }
        let unit = x / r;
        let radial = &unit * unit.transpose();
        let tangential = DMatrix::identity(self.n, self.n) - &radial;
        radial * d.d2h + tangential * (d.dh / r)
    }

    fn radial(&self) -> Option<&dyn RadialFunction> {
        Some(&self.profile)
    }

    fn label(&self) -> String {
        self.profile.label()
    }
}

/// Pointwise sum of two graphing functions; domain is the first summand's.
pub struct Sum<A, B> {
    pub base: A,
    pub perturbation: B,
}

impl<A: GraphFunction, B: GraphFunction> Sum<A, B> {
    pub fn new(base: A, perturbation: B) -> Self {
        assert_eq!(base.dim(), perturbation.dim(), "summands must share a dimension");
        Self { base, perturbation }
    }
}

impl<A: GraphFunction, B: GraphFunction> GraphFunction for Sum<A, B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn domain(&self) -> Domain {
        self.base.domain()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.base.value(x) + self.perturbation.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.base.gradient(x) + self.perturbation.gradient(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.base.hessian(x) + self.perturbation.hessian(x)
    }
    fn mode(&self) -> DerivativeMode {
        match (self.base.mode(), self.perturbation.mode()) {
            (DerivativeMode::Analytic, m) => m,
            (m, _) => m,
        }
    }
    fn label(&self) -> String {
        format!("{} + {}", self.base.label(), self.perturbation.label())
    }
}

/// `f + c`; every curvature quantity is unchanged.
pub struct Shifted<G> {
    pub inner: G,
    pub constant: f64,
}

impl<G: GraphFunction> GraphFunction for Shifted<G> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain(&self) -> Domain {
        self.inner.domain()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.inner.value(x) + self.constant
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner.gradient(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.inner.hessian(x)
    }
    fn mode(&self) -> DerivativeMode {
        self.inner.mode()
    }
    fn radial(&self) -> Option<&dyn RadialFunction> {
        None
    }
    fn label(&self) -> String {
        format!("{} + {}", self.inner.label(), self.constant)
    }
}

/// `x ↦ f(Q x)` for an orthogonal `Q`.
pub struct Rotated<G> {
    pub inner: G,
    pub rotation: DMatrix<f64>,
}

impl<G: GraphFunction> GraphFunction for Rotated<G> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain(&self) -> Domain {
        self.inner.domain()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.inner.value(&(&self.rotation * x))
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.rotation.transpose() * self.inner.gradient(&(&self.rotation * x))
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let h = self.inner.hessian(&(&self.rotation * x));
        self.rotation.transpose() * h * &self.rotation
    }
    fn mode(&self) -> DerivativeMode {
        self.inner.mode()
    }
    fn label(&self) -> String {
        format!("rotated({})", self.inner.label())
    }
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// Derivatives by central differences of a value closure (and optionally of
/// an exact gradient closure, which gives a far better Hessian).
pub struct FiniteDifferenceGraph {
    n: usize,
    domain: Domain,
    label: String,
    value: Box<ValueFn>,
    gradient: Option<Box<GradientFn>>,
    pub step: StepRule,
    pub hessian_step: StepRule,
}

impl FiniteDifferenceGraph {
    pub fn new(
        n: usize,
        domain: Domain,
        label: impl Into<String>,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            domain,
            label: label.into(),
            value: Box::new(value),
            gradient: None,
            step: StepRule::FIRST_SECOND,
            hessian_step: StepRule::VALUES_HESSIAN,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Box::new(gradient));
        self.hessian_step = StepRule::FIRST_SECOND;
        self
    }

    /// Wraps another graph, using only its values.
    pub fn from_values_of(inner: Arc<dyn GraphFunction>) -> Self {
        let n = inner.dim();
        let domain = inner.domain();
        let label = format!("fd({})", inner.label());
        Self::new(n, domain, label, move |x| inner.value(x))
    }

    fn shifted(x: &DVector<f64>, i: usize, delta: f64) -> DVector<f64> {
        let mut y = x.clone();
        y[i] += delta;
        y
    }
}

impl GraphFunction for FiniteDifferenceGraph {
    fn dim(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        self.domain
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        if let Some(g) = &self.gradient {
            return g(x);
        }
        let h = self.step.step_at(x);
        DVector::from_fn(self.n, |i, _| {
            let plus = (self.value)(&Self::shifted(x, i, h));
            let minus = (self.value)(&Self::shifted(x, i, -h));
            (plus - minus) / (2.0 * h)
        })
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let h = self.hessian_step.step_at(x);
        let n = self.n;
        let mut out = DMatrix::zeros(n, n);
        if let Some(g) = &self.gradient {
            for j in 0..n {
                let col = (g(&Self::shifted(x, j, h)) - g(&Self::shifted(x, j, -h))) / (2.0 * h);
                out.set_column(j, &col);
            }
            return crate::linalg::symmetrize(&out);
        }
        let f0 = (self.value)(x);
        for i in 0..n {
            let plus = (self.value)(&Self::shifted(x, i, h));
            let minus = (self.value)(&Self::shifted(x, i, -h));
            out[(i, i)] = (plus - 2.0 * f0 + minus) / (h * h);
            for j in (i + 1)..n {
                let eval = |si: f64, sj: f64| {
                    let mut y = x.clone();
                    y[i] += si * h;
                    y[j] += sj * h;
                    (self.value)(&y)
                };
                let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * h * h);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    fn mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference {
            step: if self.gradient.is_some() {
                self.hessian_step
            } else {
                self.step
            },
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Paraboloid, PowerLaw};

    #[test]
    fn exterior_domain_excludes_boundary() {
        let d = Domain::Exterior { radius: 2.0 };
        assert!(!d.contains(&DVector::from_vec(vec![2.0, 0.0, 0.0])));
        assert!(d.contains(&DVector::from_vec(vec![2.0 + 1e-6, 0.0, 0.0])));
    }

    #[test]
    fn radial_hessian_is_symmetric() {
        let g = RadialGraph::new(4, PowerLaw::new(1.0, 0.25));
        let x = DVector::from_vec(vec![0.3, -1.2, 2.0, 0.7]);
        let h = g.hessian(&x);
        let scale = h.amax();
        for i in 0..4 {
            for j in 0..4 {
                assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-12 * (1.0 + scale));
            }
        }
    }

    #[test]
    fn finite_difference_matches_analytic() {
        let exact: Arc<dyn GraphFunction> = Arc::new(RadialGraph::new(3, PowerLaw::new(1.0, 0.25)));
        let fd = FiniteDifferenceGraph::from_values_of(exact.clone());
        let x = DVector::from_vec(vec![1.0, 2.0, -0.5]);
        let dg = (fd.gradient(&x) - exact.gradient(&x)).amax();
        let dh = (fd.hessian(&x) - exact.hessian(&x)).amax();
        assert!(dg < 1e-9, "gradient error {dg}");
        assert!(dh < 1e-6, "hessian error {dh}");
    }

    #[test]
    fn finite_difference_gradient_error_is_second_order() {
        let exact: Arc<dyn GraphFunction> = Arc::new(RadialGraph::new(3, PowerLaw::new(1.0, 0.25)));
        let x = DVector::from_vec(vec![0.4, 0.2, -0.3]);
        let err = |h: f64| {
            let mut fd = FiniteDifferenceGraph::from_values_of(exact.clone());
            fd.step = StepRule { abs: h, rel: 0.0 };
            (fd.gradient(&x) - exact.gradient(&x)).amax()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn hessian_from_gradient_closure() {
        let exact = Arc::new(RadialGraph::new(3, Paraboloid));
        let e2 = exact.clone();
        let fd = FiniteDifferenceGraph::new(3, Domain::Whole, "p", move |x| exact.value(x))
            .with_gradient(move |x| e2.gradient(x));
        let x = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let err = (fd.hessian(&x) - DMatrix::<f64>::identity(3, 3)).amax();
        assert!(err < 1e-9);
    }
}
