//! Small dense symmetric eigenproblems.
//!
//! Everything in this crate works with matrices of order at most a few dozen
//! (the hypersurface dimension, or a Golub–Welsch matrix for a Gauss rule), so
//! a cyclic Jacobi sweep is accurate and fast enough.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: DVector<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi rotation sweep. Only the upper triangle of `a` is read after
/// the input is symmetrized, so slightly asymmetric input is acceptable.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    if a.nrows() != a.ncols() {
        return Err(Error::Argument(format!(
            "eigenvalue problem needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite("matrix entries", a.iter().copied())?;
    let n = a.nrows();
    let mut m = symmetrize(a);
    let mut v = DMatrix::<f64>::identity(n, n);

    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if n <= 1 || scale == 0.0 {
        return Ok(sorted(m.diagonal(), v));
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)] * m[(p, q)])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                m[(p, p)] = app - t * apq;
                m[(q, q)] = aqq + t * apq;
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = m[(r, p)];
                        let arq = m[(r, q)];
                        m[(r, p)] = c * arp - s * arq;
                        m[(p, r)] = m[(r, p)];
                        m[(r, q)] = s * arp + c * arq;
                        m[(q, r)] = m[(r, q)];
                    }
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    Ok(sorted(m.diagonal(), v))
}

fn sorted(values: DVector<f64>, vectors: DMatrix<f64>) -> SymmetricEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut out = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &vectors.column(src));
    }
    SymmetricEigen {
        values,
        vectors: out,
    }
}

/// `(E + Eᵀ)/2`.
pub fn symmetrize(e: &DMatrix<f64>) -> DMatrix<f64> {
    (e + e.transpose()) * 0.5
}

/// Ascending eigenvalues of the symmetric part of `e`.
pub fn symmetric_eigenvalues(e: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(jacobi_eigen(e)?.values)
}

/// Smallest eigenvalue of `(E + Eᵀ)/2`.
pub fn min_eigenvalue(e: &DMatrix<f64>) -> Result<f64> {
    let values = symmetric_eigenvalues(e)?;
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest absolute eigenvalue of the symmetric part (spectral norm for
/// symmetric input).
pub fn spectral_radius_sym(e: &DMatrix<f64>) -> Result<f64> {
    let values = symmetric_eigenvalues(e)?;
    Ok(values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Tolerance used for semidefiniteness checks: `1e-9 · (1 + spectral scale)`.
pub fn semidefinite_tolerance(e: &DMatrix<f64>) -> f64 {
    let scale = e.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    1e-9 * (1.0 + scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_has_unit_eigenvalue() {
        let e = DMatrix::<f64>::identity(3, 3);
        assert_eq!(min_eigenvalue(&e).unwrap(), 1.0);
    }

    #[test]
    fn diagonal_minimum() {
        let e = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]));
        assert_eq!(min_eigenvalue(&e).unwrap(), -1.0);
    }

    #[test]
    fn non_finite_entries_rejected() {
        let mut e = DMatrix::<f64>::identity(2, 2);
        e[(0, 1)] = f64::NAN;
        assert!(matches!(min_eigenvalue(&e), Err(Error::NonFinite(_))));
    }

    #[test]
    fn uses_symmetric_part() {
        // [[1, 4], [0, 1]] has symmetric part [[1, 2], [2, 1]] with eigenvalues -1, 3.
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 0.0, 1.0]);
        assert_relative_eq!(min_eigenvalue(&e).unwrap(), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn agrees_with_nalgebra_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=9 {
            for _ in 0..20 {
                let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
                let s = symmetrize(&a);
                let ours = jacobi_eigen(&s).unwrap();
                let mut theirs: Vec<f64> = s.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
                theirs.sort_by(f64::total_cmp);
                for (x, y) in ours.values.iter().zip(&theirs) {
                    assert_relative_eq!(*x, *y, epsilon = 1e-10 * (1.0 + y.abs()));
                }
                // A V = V Λ
                let lhs = &s * &ours.vectors;
                let rhs = &ours.vectors * DMatrix::from_diagonal(&ours.values);
                assert!((lhs - rhs).amax() < 1e-11);
            }
        }
    }
}
