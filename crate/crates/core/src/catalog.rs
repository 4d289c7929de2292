//! Built-in analytic graphs and their string ids.
//!
//! Ids: `plane`, `hemisphere(rho)`, `paraboloid`, `schwarzschild(n,m)`,
//! `perturbed-schwarzschild(n,m,amp,freq)`, `sin-test`, and
//! `prescribed-radial(n,c1,p,r_on,r_max)` for the graph whose radial scalar
//! curvature is `r^p` beyond `r_on`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Domain, GraphFunction, RadialDerivs, RadialFunction, RadialGraph, Sum};
use crate::radial::{solve_radial_from_scalar, SchwarzschildProfile, ScalarSource};

/// `f(x) = a·x + b`; `plane` is the zero function.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub coefficients: DVector<f64>,
    pub constant: f64,
}

impl Affine {
    pub fn zero(n: usize) -> Self {
        Self {
            coefficients: DVector::zeros(n),
            constant: 0.0,
        }
    }

    pub fn coordinate(n: usize, axis: usize) -> Self {
        let mut coefficients = DVector::zeros(n);
        coefficients[axis] = 1.0;
        Self {
            coefficients,
            constant: 0.0,
        }
    }
}

impl GraphFunction for Affine {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.coefficients.dot(x) + self.constant
    }
    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        self.coefficients.clone()
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::zeros(n, n)
    }
    fn label(&self) -> String {
        if self.coefficients.iter().all(|&c| c == 0.0) && self.constant == 0.0 {
            "plane".into()
        } else {
            format!("affine({:?}, {})", self.coefficients.as_slice(), self.constant)
        }
    }
}

/// `|x|²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Paraboloid;

impl RadialFunction for Paraboloid {
    fn eval(&self, r: f64) -> RadialDerivs {
        RadialDerivs {
            h: 0.5 * r * r,
            dh: r,
            d2h: 1.0,
        }
    }
    fn label(&self) -> String {
        "paraboloid".into()
    }
}

/// Upper hemisphere `√(ρ² − r²)` over the open ball of radius `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hemisphere {
    pub rho: f64,
}

impl RadialFunction for Hemisphere {
    fn eval(&self, r: f64) -> RadialDerivs {
        let s2 = self.rho * self.rho - r * r;
        let s = s2.sqrt();
        RadialDerivs {
            h: s,
            dh: -r / s,
            d2h: -self.rho * self.rho / (s2 * s),
        }
    }
    fn outer_radius(&self) -> f64 {
        self.rho
    }
    fn label(&self) -> String {
        format!("hemisphere({})", self.rho)
    }
}

/// `c · r^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn new(coefficient: f64, exponent: f64) -> Self {
        Self {
            coefficient,
            exponent,
        }
    }
}

impl RadialFunction for PowerLaw {
    fn eval(&self, r: f64) -> RadialDerivs {
        let (c, p) = (self.coefficient, self.exponent);
        RadialDerivs {
            h: c * r.powf(p),
            dh: c * p * r.powf(p - 1.0),
            d2h: c * p * (p - 1.0) * r.powf(p - 2.0),
        }
    }
    fn label(&self) -> String {
        format!("{}*|x|^{}", self.coefficient, self.exponent)
    }
}

/// `amp · e^{−r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpBump {
    pub amplitude: f64,
}

impl RadialFunction for ExpBump {
    fn eval(&self, r: f64) -> RadialDerivs {
        let e = self.amplitude * (-r).exp();
        RadialDerivs { h: e, dh: -e, d2h: e }
    }
    fn label(&self) -> String {
        format!("{}*exp(-|x|)", self.amplitude)
    }
}

/// `amp · cos(freq · x¹/|x|) · |x|^{−2}`; radial when `freq = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularPerturbation {
    pub n: usize,
    pub amplitude: f64,
    pub frequency: f64,
}

impl GraphFunction for AngularPerturbation {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r = x.norm();
        self.amplitude * (self.frequency * x[0] / r).cos() / (r * r)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (g, dg, _) = self.radial_factor(x);
        let (phi, dphi, _) = self.angular_factor(x);
        dg * phi + dphi * g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (g, dg, d2g) = self.radial_factor(x);
        let (phi, dphi, d2phi) = self.angular_factor(x);
        let cross = &dg * dphi.transpose();
        d2g * phi + &cross + cross.transpose() + d2phi * g
    }

    fn label(&self) -> String {
        format!("{}*cos({}*x1/|x|)/|x|^2", self.amplitude, self.frequency)
    }
}

impl AngularPerturbation {
    /// `amp·r^{−2}` with gradient and Hessian.
    fn radial_factor(&self, x: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let r2 = x.norm_squared();
        let a = self.amplitude;
        let g = a / r2;
        let dg = x * (-2.0 * a / (r2 * r2));
        let d2g = DMatrix::identity(n, n) * (-2.0 * a / (r2 * r2)) + (x * x.transpose()) * (8.0 * a / (r2 * r2 * r2));
        (g, dg, d2g)
    }

    /// `cos(freq·u)` with `u = x¹/r`.
    fn angular_factor(&self, x: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let r = x.norm();
        let r3 = r * r * r;
        let u = x[0] / r;
        let mut e1 = DVector::zeros(n);
        e1[0] = 1.0;
        let du = &e1 / r - x * (x[0] / r3);
        let xe = x * e1.transpose();
        let d2u = -(&xe + xe.transpose()) / r3 - DMatrix::identity(n, n) * (x[0] / r3)
            + (x * x.transpose()) * (3.0 * x[0] / (r3 * r * r));
        let w = self.frequency;
        let (s, c) = (w * u).sin_cos();
        let phi = c;
        let dphi = &du * (-w * s);
        let d2phi = (&du * du.transpose()) * (-w * w * c) + d2u * (-w * s);
        (phi, dphi, d2phi)
    }
}

/// `sin(x¹)`: changes the sign of its mean curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinTest {
    pub n: usize,
}

impl GraphFunction for SinTest {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x[0].sin()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n);
        g[0] = x[0].cos();
        g
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        h[(0, 0)] = -x[0].sin();
        h
    }
    fn label(&self) -> String {
        "sin-test".into()
    }
}

/// `Σ cᵢ (xⁱ)²`; its level sets are ellipsoids.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub coefficients: Vec<f64>,
}

impl QuadraticForm {
    /// Level set `1` is the ellipsoid with the given semi-axes.
    pub fn ellipsoid(semi_axes: &[f64]) -> Self {
        Self {
            coefficients: semi_axes.iter().map(|a| 1.0 / (a * a)).collect(),
        }
    }
}

impl GraphFunction for QuadraticForm {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.coefficients.iter().zip(x.iter()).map(|(c, v)| c * v * v).sum()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(x.len(), self.coefficients.iter().zip(x.iter()).map(|(c, v)| 2.0 * c * v))
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.coefficients.iter().map(|c| 2.0 * c),
        ))
    }
    fn label(&self) -> String {
        format!("quadratic({:?})", self.coefficients)
    }
}

/// Parsed catalog id.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum GraphSpec {
    Plane,
    Hemisphere { rho: f64 },
    Paraboloid,
    Schwarzschild { n: usize, m: f64 },
    PerturbedSchwarzschild { n: usize, m: f64, amp: f64, freq: f64 },
    SinTest,
    PrescribedRadial { n: usize, c1: f64, exponent: f64, r_on: f64, r_max: f64 },
}

/// Annulus `r_min ≤ |x| ≤ r_max` used when sampling a catalog graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleWindow {
    pub r_min: f64,
    pub r_max: f64,
}

impl GraphSpec {
    /// All ids with representative parameters, in a fixed order.
    pub fn all_examples() -> Vec<GraphSpec> {
        vec![
            GraphSpec::Plane,
            GraphSpec::Hemisphere { rho: 2.0 },
            GraphSpec::Paraboloid,
            GraphSpec::Schwarzschild { n: 3, m: 1.0 },
            GraphSpec::PerturbedSchwarzschild { n: 3, m: 1.0, amp: 0.01, freq: 2.0 },
            GraphSpec::SinTest,
            GraphSpec::PrescribedRadial { n: 3, c1: 2.0, exponent: -5.0, r_on: 3.0, r_max: 1000.0 },
        ]
    }

    /// Dimension fixed by the id, if any.
    pub fn dimension(&self) -> Option<usize> {
        match *self {
            GraphSpec::Schwarzschild { n, .. }
            | GraphSpec::PerturbedSchwarzschild { n, .. }
            | GraphSpec::PrescribedRadial { n, .. } => Some(n),
            _ => None,
        }
    }

    pub fn build(&self, n: usize) -> Result<Arc<dyn GraphFunction>> {
        if let Some(fixed) = self.dimension() {
            if fixed != n {
                return Err(Error::Dimension { expected: fixed, got: n });
            }
        }
        if n < 2 {
            return Err(Error::Argument(format!("graphs need n ≥ 2, got {n}")));
        }
        Ok(match *self {
            GraphSpec::Plane => Arc::new(Affine::zero(n)),
            GraphSpec::Hemisphere { rho } => {
                if !(rho > 0.0) {
                    return Err(Error::Argument(format!("hemisphere radius must be positive, got {rho}")));
                }
                Arc::new(RadialGraph::new(n, Hemisphere { rho }))
            }
            GraphSpec::Paraboloid => Arc::new(RadialGraph::new(n, Paraboloid)),
            GraphSpec::Schwarzschild { n, m } => {
                Arc::new(RadialGraph::new(n, SchwarzschildProfile::new(n, m)?))
            }
            GraphSpec::PerturbedSchwarzschild { n, m, amp, freq } => Arc::new(Sum::new(
                RadialGraph::new(n, SchwarzschildProfile::new(n, m)?),
                AngularPerturbation {
                    n,
                    amplitude: amp,
                    frequency: freq,
                },
            )),
            GraphSpec::SinTest => Arc::new(SinTest { n }),
            GraphSpec::PrescribedRadial { n, c1, exponent, r_on, r_max } => {
                let start = r_on.max(c1.powf(1.0 / (n as f64 - 2.0)) * 1.01);
                let profile = solve_radial_from_scalar(
                    n,
                    ScalarSource::Power { exponent, r_on },
                    c1,
                    (start, r_max),
                    1e-2 * start,
                )?;
                Arc::new(RadialGraph::new(n, profile))
            }
        })
    }

    /// Inner boundary radius of the graph's domain (0 when none).
    pub fn boundary_radius(&self) -> f64 {
        match *self {
            GraphSpec::Schwarzschild { n, m } | GraphSpec::PerturbedSchwarzschild { n, m, .. } => {
                (2.0 * m).powf(1.0 / (n as f64 - 2.0))
            }
            GraphSpec::PrescribedRadial { n, c1, .. } => c1.powf(1.0 / (n as f64 - 2.0)),
            _ => 0.0,
        }
    }

    /// Default sampling annulus inside the domain.
    pub fn sample_window(&self) -> SampleWindow {
        match *self {
            GraphSpec::Plane | GraphSpec::SinTest => SampleWindow { r_min: 0.5, r_max: 10.0 },
            GraphSpec::Hemisphere { rho } => SampleWindow { r_min: 0.05 * rho, r_max: 0.95 * rho },
            GraphSpec::Paraboloid => SampleWindow { r_min: 0.1, r_max: 5.0 },
            GraphSpec::PrescribedRadial { r_max, .. } => {
                let r0 = self.boundary_radius();
                SampleWindow { r_min: r0 * 1.05, r_max: r_max.min(50.0 * r0) }
            }
            _ => {
                let r0 = self.boundary_radius();
                SampleWindow { r_min: r0 * 1.05, r_max: 25.0 * r0 }
            }
        }
    }

    /// Whether the graph is posed over the exterior of a ball.
    pub fn domain_hint(&self) -> Domain {
        match *self {
            GraphSpec::Hemisphere { rho } => Domain::Ball { radius: rho },
            _ if self.boundary_radius() > 0.0 => Domain::Exterior {
                radius: self.boundary_radius(),
            },
            _ => Domain::Whole,
        }
    }
}

fn parse_args(name: &str, args: &str, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("arguments of `{name}`: {e}")))?;
    if values.len() != expected {
        return Err(Error::Parse(format!(
            "`{name}` takes {expected} argument(s), got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn dimension_arg(name: &str, v: f64) -> Result<usize> {
    if v.fract() != 0.0 || v < 2.0 {
        return Err(Error::Parse(format!("`{name}`: dimension must be an integer ≥ 2, got {v}")));
    }
    Ok(v as usize)
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in `{s}`")))?;
                (&s[..open], Some(inner))
            }
            None => (s, None),
        };
        match (name, args) {
            ("plane", None) => Ok(GraphSpec::Plane),
            ("paraboloid", None) => Ok(GraphSpec::Paraboloid),
            ("sin-test", None) => Ok(GraphSpec::SinTest),
            ("hemisphere", Some(a)) => {
                let v = parse_args(name, a, 1)?;
                Ok(GraphSpec::Hemisphere { rho: v[0] })
            }
            ("schwarzschild", Some(a)) => {
                let v = parse_args(name, a, 2)?;
                Ok(GraphSpec::Schwarzschild { n: dimension_arg(name, v[0])?, m: v[1] })
            }
            ("perturbed-schwarzschild", Some(a)) => {
                let v = parse_args(name, a, 4)?;
                Ok(GraphSpec::PerturbedSchwarzschild {
                    n: dimension_arg(name, v[0])?,
                    m: v[1],
                    amp: v[2],
                    freq: v[3],
                })
            }
            ("prescribed-radial", Some(a)) => {
                let v = parse_args(name, a, 5)?;
                Ok(GraphSpec::PrescribedRadial {
                    n: dimension_arg(name, v[0])?,
                    c1: v[1],
                    exponent: v[2],
                    r_on: v[3],
                    r_max: v[4],
                })
            }
            _ => Err(Error::UnknownGraph(s.to_string())),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Plane => write!(f, "plane"),
            GraphSpec::Hemisphere { rho } => write!(f, "hemisphere({rho})"),
            GraphSpec::Paraboloid => write!(f, "paraboloid"),
            GraphSpec::Schwarzschild { n, m } => write!(f, "schwarzschild({n},{m})"),
            GraphSpec::PerturbedSchwarzschild { n, m, amp, freq } => {
                write!(f, "perturbed-schwarzschild({n},{m},{amp},{freq})")
            }
            GraphSpec::SinTest => write!(f, "sin-test"),
            GraphSpec::PrescribedRadial { n, c1, exponent, r_on, r_max } => {
                write!(f, "prescribed-radial({n},{c1},{exponent},{r_on},{r_max})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FiniteDifferenceGraph;

    #[test]
    fn parse_round_trip() {
        for spec in GraphSpec::all_examples() {
            let text = spec.to_string();
            assert_eq!(text.parse::<GraphSpec>().unwrap(), spec, "{text}");
        }
    }

    #[test]
    fn unknown_and_malformed_ids() {
        assert!(matches!("torus".parse::<GraphSpec>(), Err(Error::UnknownGraph(id)) if id == "torus"));
        assert!(matches!("schwarzschild(3)".parse::<GraphSpec>(), Err(Error::Parse(_))));
        assert!(matches!("schwarzschild(3.5,1)".parse::<GraphSpec>(), Err(Error::Parse(_))));
        assert!("hemisphere(1".parse::<GraphSpec>().is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec: GraphSpec = "schwarzschild(3,1)".parse().unwrap();
        assert!(matches!(spec.build(4), Err(Error::Dimension { expected: 3, got: 4 })));
        assert!(spec.build(3).is_ok());
    }

    #[test]
    fn angular_perturbation_derivatives() {
        let p = Arc::new(AngularPerturbation { n: 3, amplitude: 0.3, frequency: 2.5 });
        let q = p.clone();
        let fd = FiniteDifferenceGraph::new(3, Domain::Whole, "p", move |x| q.value(x));
        for x in [vec![1.0, 2.0, -0.5], vec![-3.0, 0.2, 1.1], vec![0.7, -0.7, 0.9]] {
            let x = DVector::from_vec(x);
            let dg = (fd.gradient(&x) - p.gradient(&x)).amax();
            let dh = (fd.hessian(&x) - p.hessian(&x)).amax();
            assert!(dg < 1e-9, "gradient {dg}");
            assert!(dh < 1e-6, "hessian {dh}");
        }
    }

    #[test]
    fn quadratic_and_sin_derivatives() {
        let q = QuadraticForm::ellipsoid(&[2.0, 1.0, 1.0]);
        let x = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        assert_eq!(q.value(&x), 1.0);
        assert_eq!(q.gradient(&x)[0], 1.0);
        let s = SinTest { n: 2 };
        let x = DVector::from_vec(vec![0.5, 3.0]);
        assert_eq!(s.hessian(&x)[(0, 0)], -(0.5f64).sin());
    }
}
