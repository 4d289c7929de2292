//! Sliding comparison of two graphs and the matrix positivity behind the
//! global comparison argument.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::mean_minus_shape_operator;
use crate::graph::GraphFunction;
use crate::linalg::min_eigenvalue;
use crate::quadrature::SphereQuadrature;
use crate::sampling::SamplePlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TouchKind {
    Interior,
    /// Within `r₀(1 + 10⁻³)` of the inner boundary.
    Boundary,
    /// On the first or last shell of the sample plan.
    WindowEdge,
    NoTouch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlideOptions {
    pub gap_tolerance: f64,
    pub bisection_tolerance: f64,
    /// The sweep gives up below this offset.
    pub lambda_min: f64,
    /// Inner boundary radius used for the classification.
    pub boundary_radius: f64,
}

impl Default for SlideOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-8,
            bisection_tolerance: 1e-10,
            lambda_min: -1e6,
            boundary_radius: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchPoint {
    pub index: usize,
    pub x: Vec<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlideResult {
    /// `None` when the sweep reached `lambda_min` without touching.
    pub lambda_star: Option<f64>,
    pub first_touch: Option<TouchPoint>,
    /// Every sample within `gap_tolerance` at `λ*`.
    pub touch_count: usize,
    pub classification: TouchKind,
    pub window_edge: bool,
    /// `(λ, min(h + λ − f))` along the sweep.
    pub gap_profile: Vec<(f64, f64)>,
    pub samples: usize,
}

/// Lowers `h + λ` onto `f` from `λ_start` in steps of `λ_step`, then bisects
/// the crossing to `bisection_tolerance`. Ties in the minimum go to the
/// smallest sample index.
pub fn slide_comparison<F, H>(
    f: &F,
    h: &H,
    lambda_start: f64,
    lambda_step: f64,
    plan: &SamplePlan,
    options: &SlideOptions,
) -> Result<SlideResult>
where
    F: GraphFunction + ?Sized,
    H: GraphFunction + ?Sized,
{
    if !(lambda_step > 0.0) {
        return Err(Error::Argument(format!("lambda step must be positive, got {lambda_step}")));
    }
    let points = plan.points()?;
    if points.is_empty() {
        return Err(Error::Argument("empty sample plan".into()));
    }
    let diffs: Vec<f64> = points
        .par_iter()
        .map(|s| -> Result<f64> {
            f.check_point(&s.x)?;
            h.check_point(&s.x)?;
            let d = h.value(&s.x) - f.value(&s.x);
            ensure_finite("graph values", [d])?;
            Ok(d)
        })
        .collect::<Result<_>>()?;
    let mut argmin = 0;
    for (i, d) in diffs.iter().enumerate() {
        if *d < diffs[argmin] {
            argmin = i;
        }
    }
    let min_d = diffs[argmin];
    let gap = |lambda: f64| lambda + min_d;
    if gap(lambda_start) < 0.0 {
        return Err(Error::Argument(format!(
            "h + {lambda_start} lies below f at sample {argmin} (gap {:e})",
            gap(lambda_start)
        )));
    }

    let mut profile = vec![(lambda_start, gap(lambda_start))];
    let mut lambda = lambda_start;
    let mut previous = lambda_start;
    let mut steps = 0u64;
    while gap(lambda) > options.gap_tolerance {
        if lambda < options.lambda_min {
            return Ok(SlideResult {
                lambda_star: None,
                first_touch: None,
                touch_count: 0,
                classification: TouchKind::NoTouch,
                window_edge: false,
                gap_profile: profile,
                samples: points.len(),
            });
        }
        previous = lambda;
        steps += 1;
        lambda = lambda_start - lambda_step * steps as f64;
        profile.push((lambda, gap(lambda)));
    }
    // gap(previous) > tol ≥ gap(lambda); bisect on gap ≥ 0.
    let (mut lo, mut hi) = (lambda.min(previous), previous);
    if gap(lo) >= 0.0 {
        hi = lo;
    }
    while hi - lo > options.bisection_tolerance {
        let mid = 0.5 * (lo + hi);
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda_star = hi;
    let touch_count = diffs
        .iter()
        .filter(|d| lambda_star + **d <= options.gap_tolerance)
        .count();
    let touch = &points[argmin];
    let r = touch.x.norm();
    let classification = if options.boundary_radius > 0.0 && r <= options.boundary_radius * (1.0 + 1e-3) {
        TouchKind::Boundary
    } else if touch.window_edge {
        TouchKind::WindowEdge
    } else {
        TouchKind::Interior
    };
    Ok(SlideResult {
        lambda_star: Some(lambda_star),
        first_touch: Some(TouchPoint {
            index: touch.index,
            x: touch.x.iter().copied().collect(),
            gap: gap(lambda_star),
        }),
        touch_count,
        classification,
        window_edge: touch.window_edge,
        gap_profile: profile,
        samples: points.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticityCheck {
    pub radii: Vec<f64>,
    /// Smallest symmetrized eigenvalue over the angular nodes at each radius.
    pub min_eigenvalues: Vec<f64>,
    /// Smallest sampled radius beyond which every sampled value is positive.
    pub r_pass: Option<f64>,
}

/// Symmetrized `(H(Dh,D²h)δ − S(Dh,D²h)) + (H(Dh,D²v)δ − S(Dh,D²v))` at the
/// nodes of a sphere rule on each radius.
pub fn global_ellipticity_check<V, H>(v: &V, h: &H, radii: &[f64], angular_order: usize) -> Result<EllipticityCheck>
where
    V: GraphFunction + ?Sized,
    H: GraphFunction + ?Sized,
{
    if v.dim() != h.dim() {
        return Err(Error::Dimension {
            expected: h.dim(),
            got: v.dim(),
        });
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("radii must be strictly increasing".into()));
    }
    let n = h.dim();
    let mut mins = Vec::with_capacity(radii.len());
    for &r in radii {
        let sphere = SphereQuadrature::new(n, r, angular_order)?;
        let values: Vec<f64> = sphere
            .nodes
            .par_iter()
            .map(|x| -> Result<f64> {
                h.check_point(x)?;
                v.check_point(x)?;
                let p = h.gradient(x);
                let m = mean_minus_shape_operator(&p, &h.hessian(x)) + mean_minus_shape_operator(&p, &v.hessian(x));
                min_eigenvalue(&m)
            })
            .collect::<Result<_>>()?;
        mins.push(values.into_iter().fold(f64::INFINITY, f64::min));
    }
    let r_pass = positive_tail(radii, &mins);
    Ok(EllipticityCheck {
        radii: radii.to_vec(),
        min_eigenvalues: mins,
        r_pass,
    })
}

fn positive_tail(radii: &[f64], values: &[f64]) -> Option<f64> {
    let mut start = None;
    for (k, v) in values.iter().enumerate().rev() {
        if *v > 0.0 {
            start = Some(k);
        } else {
            break;
        }
    }
    start.map(|k| radii[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Affine, AngularPerturbation, ExpBump, GraphSpec};
    use crate::graph::{RadialGraph, Sum};
    use crate::radial::{strict_ellipticity_bound, SchwarzschildProfile};

    fn schwarzschild(n: usize, m: f64) -> RadialGraph<SchwarzschildProfile> {
        RadialGraph::new(n, SchwarzschildProfile::new(n, m).unwrap())
    }

    fn opts() -> SlideOptions {
        SlideOptions {
            boundary_radius: 2.0,
            ..SlideOptions::default()
        }
    }

    #[test]
    fn identical_graphs_touch_everywhere() {
        let plan = SamplePlan::annulus(3, 2.1, 50.0, 5, 4);
        let s = schwarzschild(3, 1.0);
        let res = slide_comparison(&s, &s, 5.0, 0.25, &plan, &opts()).unwrap();
        assert!(res.lambda_star.unwrap().abs() <= 1e-8);
        assert_eq!(res.touch_count, res.samples);
    }

    #[test]
    fn perturbation_bracket() {
        let plan = SamplePlan::annulus(3, 2.1, 50.0, 8, 4);
        let f = Sum::new(schwarzschild(3, 1.0), RadialGraph::new(3, ExpBump { amplitude: 0.1 }));
        let res = slide_comparison(&f, &schwarzschild(3, 1.0), 5.0, 0.25, &plan, &opts()).unwrap();
        let l = res.lambda_star.unwrap();
        assert!(l > 0.0 && l <= 0.1 * (-2.0f64).exp(), "{l}");
        assert!((l - 0.1 * (-2.1f64).exp()).abs() < 1e-9);
        assert_eq!(res.classification, TouchKind::WindowEdge);
        let gap = res.first_touch.unwrap().gap;
        assert!((0.0..=1e-8).contains(&gap));
    }

    #[test]
    fn plane_below_schwarzschild() {
        let plan = SamplePlan::annulus(3, 2.1, 50.0, 6, 4);
        let h = schwarzschild(3, 1.0);
        let res = slide_comparison(&Affine::zero(3), &h, 5.0, 0.5, &plan, &opts()).unwrap();
        let hmin = h.profile().height(2.1).unwrap();
        assert!((res.lambda_star.unwrap() + hmin).abs() < 1e-9);
        assert!(res.window_edge);
        assert!((res.first_touch.unwrap().x.iter().map(|v| v * v).sum::<f64>().sqrt() - 2.1).abs() < 1e-12);
    }

    #[test]
    fn no_touch_and_bad_start() {
        let plan = SamplePlan::annulus(3, 2.1, 10.0, 3, 3);
        let s = schwarzschild(3, 1.0);
        let below = Sum::new(schwarzschild(3, 1.0), crate::graph::Shifted { inner: Affine::zero(3), constant: -100.0 });
        let o = SlideOptions { lambda_min: -1.0, ..opts() };
        let res = slide_comparison(&below, &s, 5.0, 1.0, &plan, &o).unwrap();
        assert_eq!(res.classification, TouchKind::NoTouch);
        assert!(res.lambda_star.is_none());
        let above = crate::graph::Shifted { inner: schwarzschild(3, 1.0), constant: 100.0 };
        assert!(slide_comparison(&above, &s, 5.0, 1.0, &plan, &opts()).is_err());
    }

    #[test]
    fn reflexive_on_catalog() {
        for spec in GraphSpec::all_examples() {
            let n = spec.dimension().unwrap_or(3);
            let g = spec.build(n).unwrap();
            let w = spec.sample_window();
            let plan = SamplePlan::annulus(n, w.r_min, w.r_max, 4, 3);
            let res = slide_comparison(&g, &g, 1.0, 0.3, &plan, &SlideOptions::default()).unwrap();
            assert!(res.lambda_star.unwrap().abs() <= 1e-8, "{spec}");
        }
    }

    #[test]
    fn ellipticity_examples() {
        let h = schwarzschild(3, 1.0);
        let radii = [2.5, 3.0, 5.0, 10.0];
        let same = global_ellipticity_check(&h, &h, &radii, 4).unwrap();
        assert_eq!(same.r_pass, Some(2.5));
        for (r, e) in radii.iter().zip(&same.min_eigenvalues) {
            assert!(*e >= 2.0 * strict_ellipticity_bound(3, 1.0, *r).unwrap() - 1e-10);
        }
        let flat = global_ellipticity_check(&Affine::zero(3), &h, &[2.01, 3.0, 100.0], 4).unwrap();
        assert_eq!(flat.r_pass, Some(2.01));
        let v = Sum::new(schwarzschild(3, 1.0), AngularPerturbation { n: 3, amplitude: 0.01, frequency: 0.0 });
        let pert = global_ellipticity_check(&v, &h, &[2.2, 3.0, 5.0, 10.0, 20.0], 4).unwrap();
        assert!(pert.r_pass.is_some());
    }

    #[test]
    fn positive_tail_picks_last_run() {
        assert_eq!(positive_tail(&[1.0, 2.0, 3.0, 4.0], &[1.0, -1.0, 1.0, 2.0]), Some(3.0));
        assert_eq!(positive_tail(&[1.0, 2.0], &[1.0, -1.0]), None);
    }
}
