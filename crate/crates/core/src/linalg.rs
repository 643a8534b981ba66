//! Dense symmetric linear algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Mat) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Cholesky factor of a symmetric positive-definite matrix. `k` tags the error.
pub fn cholesky(a: &Mat, k: usize) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a.clone()).ok_or_else(|| Error::NotPositiveDefinite {
        k,
        min_eigenvalue: min_eigenvalue(a),
    })
}

/// Eigendecomposition with eigenvalues sorted in descending order (stable on ties).
pub fn sorted_eigen(a: &Mat) -> (Vector, Mat) {
    let eig = SymmetricEigen::new(a.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// A factor `S` with `S Sᵀ = a`: the Cholesky factor when it exists, otherwise
/// the symmetric square root with negative round-off eigenvalues clamped to zero.
pub fn sym_factor(a: &Mat) -> Mat {
    if let Some(ch) = Cholesky::new(a.clone()) {
        return ch.l();
    }
    let eig = SymmetricEigen::new(a.clone());
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// 2-norm condition number of a symmetric positive semi-definite matrix.
pub fn spd_condition(a: &Mat) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest absolute entry.
pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Symmetrize in place: `a = (a + aᵀ)/2`.
pub fn symmetrize(a: &mut Mat) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let a = Mat::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        let (v, vecs) = sorted_eigen(&a);
        assert_eq!(v.as_slice(), &[3.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn factor_of_singular_matrix() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = sym_factor(&a);
        assert!(max_abs(&(&s * s.transpose() - &a)) < 1e-12);
        assert!(max_abs(&sym_factor(&Mat::zeros(3, 3))) == 0.0);
    }

    #[test]
    fn cholesky_reports_min_eigenvalue() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky(&a, 4) {
            Err(Error::NotPositiveDefinite { k, min_eigenvalue }) => {
                assert_eq!(k, 4);
                assert!((min_eigenvalue + 1.0).abs() < 1e-12);
            }
            _ => panic!("expected failure"),
        }
        assert!((spd_condition(&Mat::from_diagonal_element(2, 2, 3.0)) - 1.0).abs() < 1e-14);
    }
}
