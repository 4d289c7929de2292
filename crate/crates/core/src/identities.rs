//! The `σ₁σ₁(B|k)` identity for square matrices and the level-set inequality
//! it yields for graphs.
//!
//! Indices `k` are zero-based throughout.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::curvature_at;
use crate::graph::GraphFunction;
use crate::linalg::spectral_radius_sym;
use crate::mass::{level_set_mean_curvature_from, level_set_shape_operator, Orientation, REGULARITY_THRESHOLD};

/// Symmetric-function data of a square matrix `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaDecomposition {
    pub b: DMatrix<f64>,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `σ₁(B|k) = σ₁(B) − b_kk` for each `k`.
    pub sigma1_without: Vec<f64>,
    /// `Σ_{i<j} b_ij b_ji`.
    pub off_diagonal_products: f64,
    /// `Σ_{i<j; i,j≠k} (b_ii − b_jj)²` for each `k`.
    pub spread: Vec<f64>,
}

impl SigmaDecomposition {
    pub fn new(b: &DMatrix<f64>) -> Result<Self> {
        let n = b.nrows();
        if n < 2 || b.ncols() != n {
            return Err(Error::Argument(format!(
                "need a square matrix of order at least 2, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        crate::error::ensure_finite("matrix entries", b.iter().copied())?;
        let sigma1 = b.trace();
        let mut off = 0.0;
        let mut diag_pairs = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += b[(i, j)] * b[(j, i)];
                diag_pairs += b[(i, i)] * b[(j, j)];
            }
        }
        let sigma1_without = (0..n).map(|k| sigma1 - b[(k, k)]).collect();
        let spread = (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in (0..n).filter(|&i| i != k) {
                    for j in ((i + 1)..n).filter(|&j| j != k) {
                        s += (b[(i, i)] - b[(j, j)]).powi(2);
                    }
                }
                s
            })
            .collect();
        Ok(Self {
            b: b.clone(),
            sigma1,
            sigma2: diag_pairs - off,
            sigma1_without,
            off_diagonal_products: off,
            spread,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.dim() {
            return Err(Error::Argument(format!("index {k} out of range for order {}", self.dim())));
        }
        Ok(())
    }

    /// `n/(2(n−1))`.
    fn ratio(&self) -> f64 {
        let n = self.dim() as f64;
        n / (2.0 * (n - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `σ₁σ₁(B|k) − [σ₂ + n/(2(n−1)) σ₁(B|k)² + Σ_{i<j} b_ij b_ji + spread_k/(2(n−1))]`.
pub fn sigma_identity_residual(b: &DMatrix<f64>, k: usize) -> Result<SigmaIdentity> {
    let d = SigmaDecomposition::new(b)?;
    d.check_index(k)?;
    let n = d.dim() as f64;
    let sk = d.sigma1_without[k];
    let lhs = d.sigma1 * sk;
    let rhs = d.sigma2 + d.ratio() * sk * sk + d.off_diagonal_products + d.spread[k] / (2.0 * (n - 1.0));
    Ok(SigmaIdentity {
        lhs,
        rhs,
        residual: lhs - rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EqualityWitness {
    /// `b_ii` agree for all `i ≠ k`.
    pub equal_diagonal: bool,
    /// `b_ij b_ji = 0` for all `i < j`.
    pub vanishing_products: bool,
}

impl EqualityWitness {
    pub fn holds(&self) -> bool {
        self.equal_diagonal && self.vanishing_products
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaInequality {
    /// `σ₁σ₁(B|k) − σ₂ − n/(2(n−1)) σ₁(B|k)²`.
    pub gap: f64,
    pub equality: bool,
    pub witness: EqualityWitness,
}

const WITNESS_TOLERANCE: f64 = 1e-8;

pub fn sigma_inequality_check(b: &DMatrix<f64>, k: usize) -> Result<SigmaInequality> {
    let d = SigmaDecomposition::new(b)?;
    d.check_index(k)?;
    let n = d.dim();
    for i in 0..n {
        for j in (i + 1)..n {
            let prod = b[(i, j)] * b[(j, i)];
            if prod < -1e-14 {
                return Err(Error::Hypothesis(format!(
                    "b_{i}{j} b_{j}{i} = {prod:e} is negative"
                )));
            }
        }
    }
    let sk = d.sigma1_without[k];
    let gap = d.sigma1 * sk - d.sigma2 - d.ratio() * sk * sk;
    let scale = 1.0 + b.amax().powi(2) * (n * n) as f64;
    let diag: Vec<f64> = (0..n).filter(|&i| i != k).map(|i| b[(i, i)]).collect();
    let dmax = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let dscale = 1.0 + diag.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let witness = EqualityWitness {
        equal_diagonal: dmax - dmin <= WITNESS_TOLERANCE * dscale,
        vanishing_products: (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .all(|(i, j)| (b[(i, j)] * b[(j, i)]).abs() <= WITNESS_TOLERANCE * scale),
    };
    Ok(SigmaInequality {
        gap,
        equality: gap <= 1e-12 * scale,
        witness,
    })
}

/// Level-set diagnostics of a graph at a regular point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HHRReport {
    pub level: f64,
    pub point: Vec<f64>,
    /// Upward unit normal of the graph in `ℝⁿ⁺¹`.
    pub nu: Vec<f64>,
    /// `Df/|Df|`, with a zero last component.
    pub eta: Vec<f64>,
    pub nu_dot_eta: f64,
    pub mean_curvature: f64,
    /// `H_Σ` for `η = Df/|Df|`.
    pub level_mean_curvature: f64,
    pub scalar_curvature: f64,
    /// `⟨ν,η⟩ H H_Σ`.
    pub lhs: f64,
    /// `R/2 + n/(2(n−1)) ⟨ν,η⟩² H_Σ²`.
    pub rhs: f64,
    pub residual: f64,
    /// The residual recomputed for `η = −Df/|Df|`.
    pub residual_flipped: f64,
    /// Spectral norm of `S_Σ − κ·id` on the tangent space.
    pub umbilicity_defect: f64,
    /// `H_Σ/(n−1)`, reported when the level set is umbilic at the point.
    pub kappa: Option<f64>,
    pub principal_curvatures: Vec<f64>,
    /// At least `n−1` principal curvatures of the graph equal `⟨ν,η⟩κ`.
    pub two_curvature_condition: bool,
    pub equality: bool,
    /// `|⟨ν,η⟩|` is tiny, so the equality diagnostics are unreliable.
    pub delicate: bool,
}

/// Residual of `⟨ν,η⟩ H H_Σ ≥ R/2 + n/(2(n−1)) ⟨ν,η⟩² H_Σ²`.
pub fn hhr_residual<G: GraphFunction + ?Sized>(f: &G, x: &DVector<f64>) -> Result<HHRReport> {
    let c = curvature_at(f, x)?;
    let n = x.len();
    let nf = n as f64;
    let norm = c.gradient.norm();
    if !(norm >= REGULARITY_THRESHOLD) {
        return Err(Error::SingularLevelSet {
            points: 1,
            first: x.iter().copied().collect(),
            grad_norm: norm,
        });
    }
    let w = c.w();
    let eta_n = &c.gradient / norm;
    let mut nu: Vec<f64> = c.gradient.iter().map(|v| -v / w).collect();
    nu.push(1.0 / w);
    let mut eta: Vec<f64> = eta_n.iter().copied().collect();
    eta.push(0.0);
    let nu_dot_eta: f64 = nu.iter().zip(&eta).map(|(a, b)| a * b).sum();

    let residual_for = |o: Orientation| {
        let hs = level_set_mean_curvature_from(&c.gradient, &c.hessian, o);
        let ne = o.sign() * nu_dot_eta;
        let lhs = ne * c.mean_curvature * hs;
        let rhs = c.scalar_curvature / 2.0 + nf / (2.0 * (nf - 1.0)) * ne * ne * hs * hs;
        (hs, lhs, rhs)
    };
    let (h_sigma, lhs, rhs) = residual_for(Orientation::AlongGradient);
    let (_, lhs_f, rhs_f) = residual_for(Orientation::AgainstGradient);

    let kappa = h_sigma / (nf - 1.0);
    let shape = level_set_shape_operator(&c.gradient, &c.hessian, Orientation::AlongGradient);
    let proj = DMatrix::identity(n, n) - &eta_n * eta_n.transpose();
    let umbilicity_defect = spectral_radius_sym(&(shape - proj * kappa))?;
    let umbilic = umbilicity_defect <= WITNESS_TOLERANCE;

    let principal = c.principal_curvatures()?;
    let target = nu_dot_eta * kappa;
    let pscale = 1.0 + principal.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let matches = principal
        .iter()
        .filter(|&&k| (k - target).abs() <= WITNESS_TOLERANCE * pscale)
        .count();
    let two_curvature_condition = matches + 1 >= n;

    Ok(HHRReport {
        level: f.value(x),
        point: x.iter().copied().collect(),
        nu,
        eta,
        nu_dot_eta,
        mean_curvature: c.mean_curvature,
        level_mean_curvature: h_sigma,
        scalar_curvature: c.scalar_curvature,
        lhs,
        rhs,
        residual: lhs - rhs,
        residual_flipped: lhs_f - rhs_f,
        umbilicity_defect,
        kappa: umbilic.then_some(kappa),
        principal_curvatures: principal.iter().copied().collect(),
        two_curvature_condition,
        equality: umbilic && two_curvature_condition,
        delicate: nu_dot_eta.abs() < 1e-6,
    })
}
