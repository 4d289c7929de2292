//! Rotationally symmetric graphs: Schwarzschild profiles, the radial scalar
//! curvature equation and graphs with prescribed radial scalar curvature.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{RadialDerivs, RadialFunction, BOUNDARY_CUTOFF};
use crate::quadrature::adaptive_simpson;

/// Absolute tolerance for the quadrature behind `n ≥ 5` heights.
const HEIGHT_TOLERANCE: f64 = 1e-10;

/// The Schwarzschild graph of mass `m > 0` over `ℝⁿ ∖ B_{r₀}`, with
/// `(h')² = 2m / (r^{n−2} − 2m)` and `r₀ = (2m)^{1/(n−2)}`.
///
/// Heights use the closed forms for `n = 3, 4` with no additive constant; for
/// `n ≥ 5` the height is `∫_{2r₀}^{r} h'` so that `h(2r₀) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchwarzschildProfile {
    pub n: usize,
    pub m: f64,
    pub c1: f64,
    pub r0: f64,
}

impl SchwarzschildProfile {
    pub fn new(n: usize, m: f64) -> Result<Self> {
        if !(3..=8).contains(&n) {
            return Err(Error::Argument(format!(
                "Schwarzschild profiles are supported for 3 ≤ n ≤ 8, got n = {n}"
            )));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Argument(format!("mass must be positive, got {m}")));
        }
        let c1 = 2.0 * m;
        Ok(Self {
            n,
            m,
            c1,
            r0: c1.powf(1.0 / (n as f64 - 2.0)),
        })
    }

    /// Smallest radius at which the profile is evaluated.
    pub fn cutoff(&self) -> f64 {
        self.r0 * (1.0 + BOUNDARY_CUTOFF)
    }

    fn check(&self, r: f64) -> Result<()> {
        if r >= self.cutoff() && r.is_finite() {
            Ok(())
        } else {
            Err(Error::Radius {
                radius: r,
                reason: format!("Schwarzschild profile needs r > r0 = {}", self.r0),
            })
        }
    }

    fn excess(&self, r: f64) -> f64 {
        r.powi(self.n as i32 - 2) - self.c1
    }

    fn slope_unchecked(&self, r: f64) -> f64 {
        (self.c1 / self.excess(r)).sqrt()
    }

    fn second_unchecked(&self, r: f64) -> f64 {
        let nm2 = self.n as f64 - 2.0;
        -0.5 * nm2 * self.c1.sqrt() * r.powi(self.n as i32 - 3) * self.excess(r).powf(-1.5)
    }

    fn height_unchecked(&self, r: f64) -> f64 {
        match self.n {
            3 => (4.0 * self.c1 * (r - self.c1)).sqrt(),
            4 => self.c1.sqrt() * (r + (r * r - self.c1).sqrt()).ln(),
            _ => {
                // r = r₀ + s² removes the inverse-square-root singularity at r₀.
                let nm2 = self.n as f64 - 2.0;
                let r0 = self.r0;
                let c1 = self.c1;
                let integrand = |s: f64| {
                    let ex = c1 * (nm2 * (s * s / r0).ln_1p()).exp_m1();
                    if ex <= 0.0 {
                        2.0 * (c1 / (nm2 * r0.powf(nm2 - 1.0))).sqrt()
                    } else {
                        2.0 * s * (c1 / ex).sqrt()
                    }
                };
                let s_anchor = r0.sqrt();
                let s = (r - r0).max(0.0).sqrt();
                adaptive_simpson(&integrand, s_anchor, s, HEIGHT_TOLERANCE)
            }
        }
    }

    pub fn slope(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.slope_unchecked(r))
    }

    pub fn height(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.height_unchecked(r))
    }

    pub fn second_derivative(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.second_unchecked(r))
    }

    /// Closed-form principal curvatures `(−(n−2)/2·√(2m) r^{−n/2}, √(2m) r^{−n/2})`,
    /// valid down to and including `r₀`.
    pub fn principal_curvatures(&self, r: f64) -> Result<PrincipalCurvatures> {
        if !(r >= self.r0 * (1.0 - 1e-12)) {
            return Err(Error::Radius {
                radius: r,
                reason: format!("principal curvatures need r ≥ r0 = {}", self.r0),
            });
        }
        let base = self.c1.sqrt() * r.powf(-(self.n as f64) / 2.0);
        Ok(PrincipalCurvatures {
            radial: -(self.n as f64 - 2.0) / 2.0 * base,
            tangential: base,
            multiplicity: self.n - 1,
        })
    }
}

impl RadialFunction for SchwarzschildProfile {
    fn eval(&self, r: f64) -> RadialDerivs {
        if r < self.cutoff() {
            return RadialDerivs {
                h: f64::NAN,
                dh: f64::NAN,
                d2h: f64::NAN,
            };
        }
        RadialDerivs {
            h: self.height_unchecked(r),
            dh: self.slope_unchecked(r),
            d2h: self.second_unchecked(r),
        }
    }

    fn inner_radius(&self) -> f64 {
        self.r0
    }

    fn label(&self) -> String {
        format!("schwarzschild({},{})", self.n, self.m)
    }
}

/// `(h, h′, h″)` of the Schwarzschild graph at radius `r`.
pub fn schwarzschild_profile(n: usize, m: f64, r: f64) -> Result<RadialDerivs> {
    let p = SchwarzschildProfile::new(n, m)?;
    p.check(r)?;
    Ok(p.eval(r))
}

/// Scalar curvature of the graph of `h(|x|)`:
/// `R = 2[(n−1)h″h′ / (r(1+h′²)²) + C(n−1,2) h′² / (r²(1+h′²))]`.
pub fn radial_scalar_curvature(n: usize, r: f64, dh: f64, d2h: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Radius {
            radius: r,
            reason: "radial curvature needs r > 0".into(),
        });
    }
    let nm1 = n as f64 - 1.0;
    let w2 = 1.0 + dh * dh;
    let binom = nm1 * (nm1 - 1.0) / 2.0;
    Ok(2.0 * (nm1 * d2h * dh / (r * w2 * w2) + binom * dh * dh / (r * r * w2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrincipalCurvatures {
    pub radial: f64,
    /// Repeated `multiplicity` times.
    pub tangential: f64,
    pub multiplicity: usize,
}

impl PrincipalCurvatures {
    pub fn mean(&self) -> f64 {
        self.radial + self.multiplicity as f64 * self.tangential
    }

    /// `2σ₂` of the principal curvatures.
    pub fn scalar(&self) -> f64 {
        let k = self.multiplicity as f64;
        2.0 * (k * self.radial * self.tangential + k * (k - 1.0) / 2.0 * self.tangential.powi(2))
    }

    /// Smallest eigenvalue of `Hδ − A`, i.e. `min_k σ₁(A|k)`.
    pub fn min_ellipticity(&self) -> f64 {
        let h = self.mean();
        let without_radial = h - self.radial;
        let without_tangential = h - self.tangential;
        if self.multiplicity == 0 {
            without_radial
        } else {
            without_radial.min(without_tangential)
        }
    }
}

/// Principal curvatures of the graph of `h(|x|)` with respect to the upward
/// normal: `h″/(1+h′²)^{3/2}` once and `h′/(r√(1+h′²))` with multiplicity `n−1`.
pub fn principal_curvatures_rotational(
    n: usize,
    r: f64,
    dh: f64,
    d2h: f64,
) -> Result<PrincipalCurvatures> {
    if !(r > 0.0) {
        return Err(Error::Radius {
            radius: r,
            reason: "principal curvatures need r > 0".into(),
        });
    }
    let w = dh.hypot(1.0);
    let tangential = if dh.is_infinite() { dh.signum() / r } else { dh / (r * w) };
    Ok(PrincipalCurvatures {
        radial: d2h / (w * w * w),
        tangential,
        multiplicity: n - 1,
    })
}

/// `(n−2)/2 · √(2m) · r^{−n/2}`, a lower bound for the eigenvalues of `Hδ − A`
/// on the Schwarzschild graph.
pub fn strict_ellipticity_bound(n: usize, m: f64, r: f64) -> Result<f64> {
    let p = SchwarzschildProfile::new(n, m)?;
    if !(r >= p.r0 * (1.0 - 1e-12)) {
        return Err(Error::Radius {
            radius: r,
            reason: format!("ellipticity bound needs r ≥ r0 = {}", p.r0),
        });
    }
    Ok((n as f64 - 2.0) / 2.0 * p.c1.sqrt() * r.powf(-(n as f64) / 2.0))
}

/// Prescribed scalar curvature as a function of the radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarSource {
    Zero,
    /// `r^exponent` for `r ≥ r_on`, zero inside.
    Power { exponent: f64, r_on: f64 },
    /// Piecewise-linear table; constant beyond either end.
    Table { r: Vec<f64>, value: Vec<f64> },
}

impl ScalarSource {
    pub fn table(r: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if r.len() != value.len() || r.is_empty() {
            return Err(Error::Argument("scalar table needs matching, non-empty columns".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("scalar table radii must increase strictly".into()));
        }
        Ok(ScalarSource::Table { r, value })
    }

    /// Parses `zero` or `power(p, r_on)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "zero" {
            return Ok(ScalarSource::Zero);
        }
        if let Some(args) = spec.strip_prefix("power(").and_then(|s| s.strip_suffix(')')) {
            let parts: Vec<f64> = args
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("`{spec}`: {e}")))?;
            if let [exponent, r_on] = parts[..] {
                return Ok(ScalarSource::Power { exponent, r_on });
            }
        }
        Err(Error::Parse(format!(
            "unknown scalar source `{spec}` (expected `zero` or `power(p, r_on)`)"
        )))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            ScalarSource::Zero => 0.0,
            ScalarSource::Power { exponent, r_on } => {
                if r >= *r_on {
                    r.powf(*exponent)
                } else {
                    0.0
                }
            }
            ScalarSource::Table { r: rs, value } => {
                let last = rs.len() - 1;
                if r <= rs[0] {
                    return value[0];
                }
                if r >= rs[last] {
                    return value[last];
                }
                let k = rs.partition_point(|&x| x <= r) - 1;
                let t = (r - rs[k]) / (rs[k + 1] - rs[k]);
                value[k] + t * (value[k + 1] - value[k])
            }
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ScalarSource::Zero => Vec::new(),
            ScalarSource::Power { r_on, .. } => vec![*r_on],
            ScalarSource::Table { r, .. } => r.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScalarSource::Zero => "zero".into(),
            ScalarSource::Power { exponent, r_on } => format!("power({exponent},{r_on})"),
            ScalarSource::Table { r, .. } => format!("table({} rows)", r.len()),
        }
    }
}

/// Right-hand side of the linear equation for `y = −1/(1+h′²)`:
/// `y′ = rR/(n−1) − (n−2)(1+y)/r`.
fn y_rate(n: usize, source: &ScalarSource, r: f64, y: f64) -> f64 {
    let nf = n as f64;
    r * source.eval(r) / (nf - 1.0) - (nf - 2.0) * (1.0 + y) / r
}

fn slope_from_y(y: f64) -> f64 {
    (-(1.0 + y) / y).max(0.0).sqrt()
}

/// One tabulated node of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
    pub y: f64,
}

/// Graph with prescribed radial scalar curvature, tabulated on
/// `[r_start, r_end]` and equal to the Schwarzschild graph with constant `C₁`
/// inside `r_start` (the constant fixes the data `y(r_start) = C₁ r^{2−n} − 1`).
#[derive(Debug, Clone, Serialize)]
pub struct TabulatedProfile {
    pub n: usize,
    pub c1: f64,
    pub source: ScalarSource,
    pub r_start: f64,
    pub r_end: f64,
    pub step: f64,
    /// Largest `|y_h − y_{h/2}|` over the shared nodes.
    pub richardson_defect: f64,
    #[serde(skip)]
    pub inner: Option<SchwarzschildProfile>,
    #[serde(skip)]
    radii: Vec<f64>,
    #[serde(skip)]
    ys: Vec<f64>,
    #[serde(skip)]
    heights: Vec<f64>,
}

/// Fixed-step classical RK4 on `(y, h)`; returns the node values.
fn integrate_rk4(
    n: usize,
    source: &ScalarSource,
    r_start: f64,
    r_end: f64,
    steps: usize,
    y0: f64,
    h0: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let dr = (r_end - r_start) / steps as f64;
    let rate = |r: f64, y: f64| -> (f64, f64) { (y_rate(n, source, r, y), slope_from_y(y)) };
    let mut radii = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut hs = Vec::with_capacity(steps + 1);
    let (mut y, mut h) = (y0, h0);
    radii.push(r_start);
    ys.push(y);
    hs.push(h);
    for k in 0..steps {
        let r = r_start + dr * k as f64;
        let (k1y, k1h) = rate(r, y);
        let (k2y, k2h) = rate(r + 0.5 * dr, y + 0.5 * dr * k1y);
        let (k3y, k3h) = rate(r + 0.5 * dr, y + 0.5 * dr * k2y);
        let (k4y, k4h) = rate(r + dr, y + dr * k3y);
        y += dr / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        h += dr / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
        let r_next = if k + 1 == steps { r_end } else { r_start + dr * (k + 1) as f64 };
        if !(-1.0..0.0).contains(&y) {
            return Err(Error::InfeasibleProfile { radius: r_next, y });
        }
        radii.push(r_next);
        ys.push(y);
        hs.push(h);
    }
    Ok((radii, ys, hs))
}

/// Integrates `y′ + (n−2)(y+1)/r = rR/(n−1)` from `r_span.0` with
/// `y = C₁ r^{2−n} − 1`, reconstructs `h′ = √(−1/y − 1)`, and checks the run
/// against one at half the step (agreement to `1e-6` required).
pub fn solve_radial_from_scalar(
    n: usize,
    source: ScalarSource,
    c1: f64,
    r_span: (f64, f64),
    step: f64,
) -> Result<TabulatedProfile> {
    let (r_start, r_end) = r_span;
    if n < 3 {
        return Err(Error::Argument(format!("radial equation needs n ≥ 3, got {n}")));
    }
    if !(step > 0.0) {
        return Err(Error::Argument(format!("step must be positive, got {step}")));
    }
    if !(r_start > 0.0 && r_end > r_start && r_end.is_finite()) {
        return Err(Error::Argument(format!("bad radial span [{r_start}, {r_end}]")));
    }
    if !(c1 >= 0.0) {
        return Err(Error::Argument(format!("C1 must be non-negative, got {c1}")));
    }
    let y0 = c1 * r_start.powi(2 - n as i32) - 1.0;
    if !(-1.0..0.0).contains(&y0) {
        return Err(Error::InfeasibleProfile { radius: r_start, y: y0 });
    }
    let inner = if c1 > 0.0 {
        Some(SchwarzschildProfile::new(n, c1 / 2.0)?)
    } else {
        None
    };
    let h0 = match &inner {
        Some(p) => p.height(r_start)?,
        None => 0.0,
    };
    let steps = ((r_end - r_start) / step).ceil().max(1.0) as usize;
    let (_, coarse, _) = integrate_rk4(n, &source, r_start, r_end, steps, y0, h0)?;
    let (radii, ys, heights) = integrate_rk4(n, &source, r_start, r_end, 2 * steps, y0, h0)?;
    let defect = coarse
        .iter()
        .enumerate()
        .map(|(k, y)| (y - ys[2 * k]).abs())
        .fold(0.0_f64, f64::max);
    if defect > 1e-6 {
        return Err(Error::Convergence(format!(
            "radial integration: step {step} and its half disagree by {defect:e}"
        )));
    }
    Ok(TabulatedProfile {
        n,
        c1,
        source,
        r_start,
        r_end,
        step: (r_end - r_start) / (2 * steps) as f64,
        richardson_defect: defect,
        inner,
        radii,
        ys,
        heights,
    })
}

impl TabulatedProfile {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    fn y_and_rate(&self, r: f64) -> (f64, f64) {
        let last = self.radii.len() - 1;
        let dr = self.step;
        let k = (((r - self.r_start) / dr).floor() as usize).min(last - 1);
        let (ra, rb) = (self.radii[k], self.radii[k + 1]);
        let (ya, yb) = (self.ys[k], self.ys[k + 1]);
        let (da, db) = (
            y_rate(self.n, &self.source, ra, ya),
            y_rate(self.n, &self.source, rb, yb),
        );
        let len = rb - ra;
        let t = (r - ra) / len;
        let y = hermite(t, ya, yb, da * len, db * len);
        (y, y_rate(self.n, &self.source, r, y))
    }

    fn height_at(&self, r: f64) -> f64 {
        let last = self.radii.len() - 1;
        let k = (((r - self.r_start) / self.step).floor() as usize).min(last - 1);
        let (ra, rb) = (self.radii[k], self.radii[k + 1]);
        let len = rb - ra;
        let t = (r - ra) / len;
        hermite(
            t,
            self.heights[k],
            self.heights[k + 1],
            slope_from_y(self.ys[k]) * len,
            slope_from_y(self.ys[k + 1]) * len,
        )
    }

    /// Nodes as `(r, h, h′, h″, y)`.
    pub fn rows(&self) -> Vec<ProfileRow> {
        self.radii
            .iter()
            .map(|&r| {
                let d = self.eval(r);
                let (y, _) = self.y_and_rate(r);
                ProfileRow {
                    r,
                    h: d.h,
                    dh: d.dh,
                    d2h: d.d2h,
                    y,
                }
            })
            .collect()
    }

    /// `r^{n−2}(1+y)/2`, the flux of the mass integral through `S_r`.
    pub fn radial_flux(&self, r: f64) -> f64 {
        let (y, _) = if r >= self.r_start {
            self.y_and_rate(r)
        } else {
            (self.c1 * r.powi(2 - self.n as i32) - 1.0, 0.0)
        };
        r.powi(self.n as i32 - 2) * (1.0 + y) / 2.0
    }
}

fn hermite(t: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * m1
}

impl RadialFunction for TabulatedProfile {
    fn eval(&self, r: f64) -> RadialDerivs {
        let nan = RadialDerivs {
            h: f64::NAN,
            dh: f64::NAN,
            d2h: f64::NAN,
        };
        if r > self.r_end * (1.0 + 1e-12) || !r.is_finite() {
            return nan;
        }
        if r < self.r_start {
            return match &self.inner {
                Some(p) => p.eval(r),
                None => RadialDerivs {
                    h: 0.0,
                    dh: 0.0,
                    d2h: 0.0,
                },
            };
        }
        let (y, rate) = self.y_and_rate(r.min(self.r_end));
        let dh = slope_from_y(y);
        let w2 = 1.0 + dh * dh;
        let d2h = if dh > 0.0 { rate * w2 * w2 / (2.0 * dh) } else { 0.0 };
        RadialDerivs {
            h: self.height_at(r.min(self.r_end)),
            dh,
            d2h,
        }
    }

    fn inner_radius(&self) -> f64 {
        self.inner.map_or(0.0, |p| p.r0)
    }

    fn outer_radius(&self) -> f64 {
        self.r_end
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.r_start];
        b.extend(self.source.breakpoints());
        b
    }

    fn label(&self) -> String {
        format!(
            "prescribed-radial(n={}, c1={}, R={}, r in [{}, {}])",
            self.n,
            self.c1,
            self.source.label(),
            self.r_start,
            self.r_end
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_values() {
        let d = schwarzschild_profile(3, 1.0, 4.0).unwrap();
        assert_relative_eq!(d.h, 4.0, epsilon = 1e-14);
        assert_relative_eq!(d.dh, 1.0, epsilon = 1e-14);
        let d = schwarzschild_profile(4, 0.5, 2.0).unwrap();
        assert_relative_eq!(d.dh, 1.0 / 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn inside_horizon_is_domain_error() {
        assert!(matches!(schwarzschild_profile(3, 1.0, 2.0), Err(Error::Radius { .. })));
        assert!(matches!(schwarzschild_profile(3, 1.0, 1.0), Err(Error::Radius { .. })));
        assert!(schwarzschild_profile(9, 1.0, 4.0).is_err());
    }

    #[test]
    fn slope_blows_up_at_horizon() {
        let p = SchwarzschildProfile::new(3, 1.0).unwrap();
        assert!(p.slope(p.r0 + 1e-6).unwrap() > 1e2);
    }

    #[test]
    fn slope_squared_identity() {
        for n in 3..=8 {
            let p = SchwarzschildProfile::new(n, 0.7).unwrap();
            for k in 1..20 {
                let r = p.r0 * (1.0 + 0.37 * k as f64);
                let s = p.slope(r).unwrap();
                let expect = p.c1 / (r.powi(n as i32 - 2) - p.c1);
                assert!((s * s - expect).abs() <= 1e-10 * (1.0 + expect));
            }
        }
    }

    #[test]
    fn high_dimensional_height_derivative_matches_slope() {
        for n in 5..=8 {
            let p = SchwarzschildProfile::new(n, 1.0).unwrap();
            for &f in &[1.05, 1.5, 2.0, 4.0, 10.0] {
                let r = p.r0 * f;
                let eps = 1e-4 * r;
                let fd = (p.height(r + eps).unwrap() - p.height(r - eps).unwrap()) / (2.0 * eps);
                assert_relative_eq!(fd, p.slope(r).unwrap(), max_relative = 1e-6);
            }
            assert!(p.height(2.0 * p.r0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        let p = SchwarzschildProfile::new(6, 0.25).unwrap();
        let r = 2.0 * p.r0;
        let eps = 1e-6;
        let fd = (p.slope(r + eps).unwrap() - p.slope(r - eps).unwrap()) / (2.0 * eps);
        assert_relative_eq!(fd, p.second_derivative(r).unwrap(), max_relative = 1e-7);
    }

    #[test]
    fn radial_curvature_examples() {
        assert_eq!(radial_scalar_curvature(3, 1.0, 0.0, 0.0).unwrap(), 0.0);
        let d = schwarzschild_profile(3, 1.0, 3.0).unwrap();
        assert!(radial_scalar_curvature(3, 3.0, d.dh, d.d2h).unwrap().abs() < 1e-12);
        assert_relative_eq!(radial_scalar_curvature(3, 2.0, 1.0, 0.0).unwrap(), 0.25, epsilon = 1e-15);
        assert!(radial_scalar_curvature(3, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn principal_curvature_examples() {
        let p = SchwarzschildProfile::new(3, 1.0).unwrap();
        let k = p.principal_curvatures(2.0).unwrap();
        assert_relative_eq!(k.radial, -0.25, epsilon = 1e-15);
        assert_relative_eq!(k.tangential, 0.5, epsilon = 1e-15);

        // The generic formula approaches the same limit at the horizon.
        let r = 2.0 * (1.0 + 1e-8);
        let d = p.eval(r);
        let g = principal_curvatures_rotational(3, r, d.dh, d.d2h).unwrap();
        assert!((g.radial + 0.25).abs() < 1e-6 && (g.tangential - 0.5).abs() < 1e-6);

        let z = principal_curvatures_rotational(3, 1.0, 0.0, 0.0).unwrap();
        assert_eq!((z.radial, z.tangential), (0.0, 0.0));

        // Upper unit hemisphere h = √(1 − r²): umbilic with curvature −1.
        let r: f64 = 0.6;
        let dh = -r / (1.0 - r * r).sqrt();
        let d2h = -1.0 / (1.0 - r * r).powf(1.5);
        let u = principal_curvatures_rotational(3, r, dh, d2h).unwrap();
        assert!((u.radial - u.tangential).abs() <= 1e-10);
        assert_relative_eq!(u.radial, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn ellipticity_bound_examples() {
        assert_relative_eq!(strict_ellipticity_bound(3, 1.0, 4.0).unwrap(), 0.5 * 2f64.sqrt() / 8.0, epsilon = 1e-15);
        assert_relative_eq!(strict_ellipticity_bound(4, 0.5, 10.0).unwrap(), 0.01, epsilon = 1e-15);
        let b = strict_ellipticity_bound(3, 1.0, 2.0).unwrap();
        assert_relative_eq!(b, 0.25, epsilon = 1e-15);
        let k = SchwarzschildProfile::new(3, 1.0).unwrap().principal_curvatures(2.0).unwrap();
        assert_relative_eq!(k.min_ellipticity(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn scalar_flat_source_reproduces_closed_form() {
        for n in 3..=6 {
            let p = SchwarzschildProfile::new(n, 1.0).unwrap();
            let span = (p.r0 * 1.5, p.r0 * 30.0);
            let t = solve_radial_from_scalar(n, ScalarSource::Zero, 2.0, span, 1e-2 * p.r0).unwrap();
            for row in t.rows() {
                let y_exact = 2.0 * row.r.powi(2 - n as i32) - 1.0;
                assert!((row.y - y_exact).abs() < 1e-8, "n={n} r={}", row.r);
                assert!((row.dh - p.slope(row.r).unwrap()).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn zero_constant_gives_hyperplane() {
        let t = solve_radial_from_scalar(4, ScalarSource::Zero, 0.0, (1.0, 5.0), 0.1).unwrap();
        for row in t.rows() {
            assert_eq!(row.y, -1.0);
            assert_eq!(row.dh, 0.0);
            assert_eq!(row.h, 0.0);
        }
    }

    #[test]
    fn prescribed_curvature_is_recovered() {
        let source = ScalarSource::Power { exponent: -5.0, r_on: 3.0 };
        let t = solve_radial_from_scalar(3, source.clone(), 2.0, (3.0, 100.0), 1e-2).unwrap();
        for &r in &[3.3, 4.71, 10.0, 55.5, 99.0] {
            let d = t.eval(r);
            let rc = radial_scalar_curvature(3, r, d.dh, d.d2h).unwrap();
            assert!((rc - source.eval(r)).abs() < 1e-9, "r={r}: {rc}");
        }
        // Mass flux r(1 + y)/2 = C₁(r)/2 with C₁(r) = 2 + (1/9 − 1/r²)/4 for n = 3.
        let r = 80.0;
        let exact = (2.0 + (1.0 / 9.0 - 1.0 / (r * r)) / 4.0) / 2.0;
        assert!((t.radial_flux(r) - exact).abs() < 1e-9, "{} vs {exact}", t.radial_flux(r));
    }

    #[test]
    fn infeasible_source_reports_radius() {
        // Strongly negative curvature drives y below −1.
        let source = ScalarSource::Power { exponent: 0.0, r_on: 0.0 };
        let bad = ScalarSource::Table { r: vec![1.0, 2.0], value: vec![-50.0, -50.0] };
        assert!(matches!(
            solve_radial_from_scalar(3, bad, 0.1, (1.0, 3.0), 1e-3),
            Err(Error::InfeasibleProfile { .. })
        ));
        // Large positive curvature drives y up to 0.
        let big = ScalarSource::Table { r: vec![1.0, 2.0], value: vec![50.0, 50.0] };
        assert!(matches!(
            solve_radial_from_scalar(3, big, 0.1, (1.0, 3.0), 1e-3),
            Err(Error::InfeasibleProfile { .. })
        ));
        assert!(solve_radial_from_scalar(3, source, 2.0, (1.0, 3.0), 1e-3).is_err());
    }

    #[test]
    fn scalar_source_parsing() {
        assert_eq!(ScalarSource::parse("zero").unwrap(), ScalarSource::Zero);
        assert_eq!(
            ScalarSource::parse("power(-5, 3)").unwrap(),
            ScalarSource::Power { exponent: -5.0, r_on: 3.0 }
        );
        assert!(ScalarSource::parse("cubic").is_err());
        let t = ScalarSource::table(vec![1.0, 2.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(t.eval(1.5), 1.0);
        assert_eq!(t.eval(5.0), 2.0);
    }
}
