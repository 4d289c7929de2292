//! Deterministic sample plans: annuli, coordinate boxes and explicit point lists.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::SphereQuadrature;

#[derive(Debug, Clone, PartialEq)]
pub enum SamplePlan {
    /// Log-spaced shells `r_min..=r_max`, each carrying the nodes of a sphere
    /// rule of the given order.
    Annulus {
        n: usize,
        r_min: f64,
        r_max: f64,
        shells: usize,
        order: usize,
    },
    /// Tensor grid with `per_axis` points on each edge of `[lo, hi]`.
    Grid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        per_axis: usize,
    },
    Points(Vec<DVector<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePoint {
    pub index: usize,
    #[serde(skip)]
    pub x: DVector<f64>,
    pub shell: Option<usize>,
    /// On the first or last shell (or a face of the box).
    pub window_edge: bool,
}

impl SamplePlan {
    pub fn annulus(n: usize, r_min: f64, r_max: f64, shells: usize, order: usize) -> Self {
        SamplePlan::Annulus {
            n,
            r_min,
            r_max,
            shells,
            order,
        }
    }

    pub fn grid(lo: Vec<f64>, hi: Vec<f64>, per_axis: usize) -> Self {
        SamplePlan::Grid { lo, hi, per_axis }
    }

    /// `count` seeded points, log-uniform in radius and uniform in direction.
    pub fn random_annulus(n: usize, r_min: f64, r_max: f64, count: usize, seed: u64) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min) {
            return Err(Error::Argument(format!("bad annulus [{r_min}, {r_max}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (la, lb) = (r_min.ln(), r_max.ln());
        let mut points = Vec::with_capacity(count);
        while points.len() < count {
            let dir = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let norm = dir.norm();
            if !(0.1..=1.0).contains(&norm) {
                continue;
            }
            let r = if lb > la { rng.gen_range(la..lb).exp() } else { r_min };
            points.push(dir * (r / norm));
        }
        Ok(SamplePlan::Points(points))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SamplePlan::Annulus { n, .. } => Some(*n),
            SamplePlan::Grid { lo, .. } => Some(lo.len()),
            SamplePlan::Points(p) => p.first().map(|x| x.len()),
        }
    }

    /// Shell radii of an annulus plan.
    pub fn shell_radii(&self) -> Vec<f64> {
        match *self {
            SamplePlan::Annulus {
                r_min, r_max, shells, ..
            } => log_spaced(r_min, r_max, shells),
            _ => Vec::new(),
        }
    }

    /// Points in a fixed order.
    pub fn points(&self) -> Result<Vec<SamplePoint>> {
        match self {
            SamplePlan::Annulus {
                n,
                r_min,
                r_max,
                shells,
                order,
            } => {
                if !(*r_min > 0.0 && r_max >= r_min && *shells >= 1) {
                    return Err(Error::Argument(format!(
                        "bad annulus plan [{r_min}, {r_max}] with {shells} shell(s)"
                    )));
                }
                let unit = SphereQuadrature::new(*n, 1.0, *order)?;
                let radii = self.shell_radii();
                let last = radii.len() - 1;
                let mut out = Vec::with_capacity(radii.len() * unit.len());
                for (k, r) in radii.iter().enumerate() {
                    for dir in &unit.nodes {
                        out.push(SamplePoint {
                            index: out.len(),
                            x: dir * *r,
                            shell: Some(k),
                            window_edge: k == 0 || k == last,
                        });
                    }
                }
                Ok(out)
            }
            SamplePlan::Grid { lo, hi, per_axis } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::Argument("grid corners must share a positive dimension".into()));
                }
                if *per_axis < 2 || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    return Err(Error::Argument("grid needs per_axis >= 2 and lo < hi".into()));
                }
                let n = lo.len();
                let total = per_axis.pow(n as u32);
                let mut out = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rest = flat;
                    let mut edge = false;
                    let x = DVector::from_fn(n, |i, _| {
                        let k = rest % per_axis;
                        rest /= per_axis;
                        edge |= k == 0 || k == per_axis - 1;
                        lo[i] + (hi[i] - lo[i]) * k as f64 / (*per_axis - 1) as f64
                    });
                    out.push(SamplePoint {
                        index: flat,
                        x,
                        shell: None,
                        window_edge: edge,
                    });
                }
                Ok(out)
            }
            SamplePlan::Points(points) => Ok(points
                .iter()
                .enumerate()
                .map(|(index, x)| SamplePoint {
                    index,
                    x: x.clone(),
                    shell: None,
                    window_edge: false,
                })
                .collect()),
        }
    }
}

/// `count` log-spaced values from `a` to `b` inclusive.
pub fn log_spaced(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..count)
                .map(|k| {
                    if k == count - 1 {
                        b
                    } else {
                        (la + (lb - la) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_points_and_edges() {
        let plan = SamplePlan::annulus(3, 2.0, 8.0, 3, 3);
        let pts = plan.points().unwrap();
        assert_eq!(pts.len(), 3 * 18);
        let radii = plan.shell_radii();
        assert!((radii[1] - 4.0).abs() < 1e-12);
        for p in &pts {
            let r = p.x.norm();
            let k = p.shell.unwrap();
            assert!((r - radii[k]).abs() < 1e-12);
            assert_eq!(p.window_edge, k != 1);
        }
    }

    #[test]
    fn grid_covers_box() {
        let pts = SamplePlan::grid(vec![0.0, -1.0], vec![1.0, 1.0], 3).points().unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts.iter().filter(|p| !p.window_edge).count(), 1);
        assert!(SamplePlan::grid(vec![0.0], vec![0.0], 3).points().is_err());
    }

    #[test]
    fn random_plan_is_seeded() {
        let a = SamplePlan::random_annulus(4, 1.0, 5.0, 50, 9).unwrap();
        let b = SamplePlan::random_annulus(4, 1.0, 5.0, 50, 9).unwrap();
        assert_eq!(a, b);
        for p in a.points().unwrap() {
            let r = p.x.norm();
            assert!((1.0..=5.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let r = log_spaced(1.0, 100.0, 3);
        assert_eq!(r[0], 1.0);
        assert!((r[1] - 10.0).abs() < 1e-12);
        assert_eq!(r[2], 100.0);
    }
}
