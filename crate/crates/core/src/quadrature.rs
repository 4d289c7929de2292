//! Gauss rules, product quadrature on round spheres, and 1-D helpers.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

/// `Γ(k/2)` for integer `k ≥ 1`, by the exact half-integer recursion.
pub fn gamma_half_integer(k: u32) -> f64 {
    assert!(k >= 1, "Γ(k/2) needs k ≥ 1");
    let (mut value, mut arg) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = k as f64 / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// Volume of the unit k-sphere, `ω_k = 2π^{(k+1)/2} / Γ((k+1)/2)`.
pub fn unit_sphere_volume(k: usize) -> f64 {
    assert!(k >= 1, "unit sphere dimension must be at least 1");
    2.0 * PI.powf((k as f64 + 1.0) / 2.0) / gamma_half_integer(k as u32 + 1)
}

/// A 1-D rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss rule for the weight `(1 − t²)^α` on `[-1, 1]` (Gegenbauer family),
/// by Golub–Welsch. `α = 0` is Gauss–Legendre.
pub fn gauss_gegenbauer(order: usize, alpha: f64) -> Result<GaussRule> {
    if order == 0 {
        return Err(Error::Argument("Gauss rule needs at least one node".into()));
    }
    if alpha <= -1.0 {
        return Err(Error::Argument(format!("Gegenbauer weight exponent {alpha} ≤ -1")));
    }
    let mut jac = DMatrix::<f64>::zeros(order, order);
    for j in 1..order {
        let jf = j as f64;
        let beta = jf * (jf + 2.0 * alpha) / (4.0 * (jf + alpha).powi(2) - 1.0);
        jac[(j - 1, j)] = beta.sqrt();
        jac[(j, j - 1)] = beta.sqrt();
    }
    // ∫(1 − t²)^α dt = √π Γ(α + 1) / Γ(α + 3/2)
    let mu0 = if (2.0 * alpha).fract() == 0.0 {
        let twice = (2.0 * alpha) as u32;
        PI.sqrt() * gamma_half_integer(twice + 2) / gamma_half_integer(twice + 3)
    } else {
        return Err(Error::Argument(format!(
            "Gegenbauer exponent {alpha} must be a half-integer"
        )));
    };
    let eig = jacobi_eigen(&jac)?;
    let mut nodes: Vec<f64> = eig.values.iter().copied().collect();
    let mut weights: Vec<f64> = (0..order).map(|k| mu0 * eig.vectors[(0, k)].powi(2)).collect();
    // Exact symmetry about t = 0.
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let t = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -t;
        nodes[j] = t;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    Ok(GaussRule { nodes, weights })
}

pub fn gauss_legendre(order: usize) -> Result<GaussRule> {
    gauss_gegenbauer(order, 0.0)
}

/// Composite Gauss–Legendre on `[a, b]`. Panels are geometrically graded when
/// `0 < a`, and every breakpoint strictly inside `(a, b)` starts a new panel.
pub fn composite_gauss_legendre(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    rule: &GaussRule,
    breakpoints: &[f64],
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = if a > 0.0 {
        let ratio = (b / a).powf(1.0 / panels as f64);
        (0..=panels).map(|k| a * ratio.powi(k as i32)).collect()
    } else {
        (0..=panels).map(|k| a + (b - a) * k as f64 / panels as f64).collect()
    };
    cuts[panels] = b;
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let panel: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, wt)| wt * f(mid + half * t))
            .sum();
        total += half * panel;
    }
    total
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Product quadrature on the round sphere `S_r ⊂ ℝⁿ`.
///
/// The circle uses the trapezoid rule; each further polar angle contributes a
/// Gauss rule in `t = cos θ` for the weight `(1 − t²)^{(k−2)/2}`, so every
/// polynomial of per-direction degree below `2·order` integrates exactly.
#[derive(Debug, Clone, Serialize)]
pub struct SphereQuadrature {
    pub n: usize,
    pub radius: f64,
    pub order: usize,
    pub scheme: String,
    #[serde(skip)]
    pub nodes: Vec<DVector<f64>>,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Node count per polar angle that keeps the higher-dimensional rules small.
    pub fn default_order(n: usize) -> usize {
        match n {
            0..=3 => 24,
            4 => 12,
            5 => 8,
            6 => 6,
            7 => 5,
            _ => 4,
        }
    }

    pub fn new(n: usize, radius: f64, order: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!("sphere quadrature needs n ≥ 2, got {n}")));
        }
        if order < 2 {
            return Err(Error::Argument(format!("quadrature order {order} < 2")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Radius {
                radius,
                reason: "sphere radius must be positive".into(),
            });
        }
        let unit = unit_sphere_rule(n, order)?;
        let scale = radius.powi(n as i32 - 1);
        let (nodes, weights) = unit
            .into_iter()
            .map(|(x, w)| (DVector::from_vec(x) * radius, w * scale))
            .unzip();
        Ok(Self {
            n,
            radius,
            order,
            scheme: format!("gauss-gegenbauer-product(order={order}, azimuth={})", azimuth_count(order)),
            nodes,
            weights,
        })
    }

    pub fn with_default_order(n: usize, radius: f64) -> Result<Self> {
        Self::new(n, radius, Self::default_order(n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Unit directions of the nodes.
    pub fn directions(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        self.nodes.iter().map(move |x| x / self.radius)
    }

    /// `∫_{S_r} f dσ`. Node evaluation runs in parallel; the sum is taken in
    /// node order so the result does not depend on the thread count.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&DVector<f64>) -> f64 + Sync,
    {
        let values: Vec<f64> = self.nodes.par_iter().map(&f).collect();
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn try_integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&DVector<f64>) -> Result<f64> + Sync,
    {
        let values: Vec<f64> = self.nodes.par_iter().map(&f).collect::<Result<_>>()?;
        Ok(values.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }
}

fn azimuth_count(order: usize) -> usize {
    (2 * order).max(3)
}

fn unit_sphere_rule(n: usize, order: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    if n == 2 {
        let m = azimuth_count(order);
        let w = 2.0 * PI / m as f64;
        return Ok((0..m)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / m as f64;
                (vec![phi.cos(), phi.sin()], w)
            })
            .collect());
    }
    let alpha = (n as f64 - 3.0) / 2.0;
    let rule = gauss_gegenbauer(order, alpha)?;
    let lower = unit_sphere_rule(n - 1, order)?;
    let mut out = Vec::with_capacity(rule.nodes.len() * lower.len());
    for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (y, wy) in &lower {
            let mut x = Vec::with_capacity(n);
            x.push(*t);
            x.extend(y.iter().map(|v| s * v));
            out.push((x, wt * wy));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_volumes() {
        assert_relative_eq!(unit_sphere_volume(1), 2.0 * PI, epsilon = 1e-15);
        assert_relative_eq!(unit_sphere_volume(2), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_volume(3), 2.0 * PI * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_volume(4), 8.0 * PI * PI / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gamma_half_values() {
        assert_relative_eq!(gamma_half_integer(1), PI.sqrt(), epsilon = 1e-15);
        assert_eq!(gamma_half_integer(2), 1.0);
        assert_eq!(gamma_half_integer(8), 6.0);
        assert_relative_eq!(gamma_half_integer(5), 0.75 * PI.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for order in 1..=12 {
            let rule = gauss_legendre(order).unwrap();
            for deg in 0..(2 * order) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * t.powi(deg as i32)).sum();
                assert!((approx - exact).abs() < 1e-13, "order {order} degree {deg}");
            }
        }
    }

    #[test]
    fn gegenbauer_weight_moments() {
        // ∫ (1 − t²)^{1/2} t² dt = π/8
        let rule = gauss_gegenbauer(5, 0.5).unwrap();
        let m2: f64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * t * t).sum();
        assert_relative_eq!(m2, PI / 8.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_weights_and_moments() {
        for n in 2..=7 {
            let r = 1.7;
            let q = SphereQuadrature::new(n, r, 4).unwrap();
            let area = unit_sphere_volume(n - 1) * r.powi(n as i32 - 1);
            let total: f64 = q.weights.iter().sum();
            assert!(((total - area) / area).abs() < 1e-12, "n={n}");
            for i in 0..n {
                let first = q.integrate(|x| x[i]);
                assert!(first.abs() < 1e-12 * area, "n={n} i={i}");
                for j in 0..n {
                    let second = q.integrate(|x| x[i] * x[j]);
                    let exact = if i == j { area * r * r / n as f64 } else { 0.0 };
                    assert!((second - exact).abs() <= 1e-10 * area * r * r, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn adaptive_simpson_smooth() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, PI, 1e-12);
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
    }

    #[test]
    fn composite_rule_respects_breakpoints() {
        let rule = gauss_legendre(4).unwrap();
        let step = |x: f64| if x < 1.3 { 0.0 } else { 1.0 };
        let v = composite_gauss_legendre(step, 1.0, 2.0, 3, &rule, &[1.3]);
        assert_relative_eq!(v, 0.7, epsilon = 1e-14);
    }
}
