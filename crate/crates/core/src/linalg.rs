//! Small dense kernels: Cholesky factorization, power iteration, and
//! conversions to nalgebra for the decompositions we do not hand-roll.

use ndarray::{Array1, Array2, ArrayView2};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ X = B` in place given the lower factor `L`.
pub fn cholesky_solve(l: &Array2<f64>, b: &mut Array2<f64>) {
    let n = l.nrows();
    for col in 0..b.ncols() {
        // forward: L y = b
        for i in 0..n {
            let mut s = b[[i, col]];
            for k in 0..i {
                s -= l[[i, k]] * b[[k, col]];
            }
            b[[i, col]] = s / l[[i, i]];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = b[[i, col]];
            for k in (i + 1)..n {
                s -= l[[k, i]] * b[[k, col]];
            }
            b[[i, col]] = s / l[[i, i]];
        }
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration; stops after `max_iter` steps or once the estimate changes by
/// less than `rel_tol` relative.
pub fn power_iteration(gram: ArrayView2<f64>, max_iter: usize, rel_tol: f64) -> f64 {
    let n = gram.nrows();
    if n == 0 {
        return 0.0;
    }
    // Slightly uneven start so no eigenvector is orthogonal to it by symmetry.
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3);
    let norm = v.dot(&v).sqrt();
    v /= norm;
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = gram.dot(&v);
        let next = v.dot(&w);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        let done = (next - estimate).abs() <= rel_tol * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Spectral norm `‖H‖₂` via power iteration on `HᵀH`.
pub fn spectral_norm(h: ArrayView2<f64>) -> f64 {
    let gram = h.t().dot(&h);
    power_iteration(gram.view(), 100, 1e-10).max(0.0).sqrt()
}

pub(crate) fn to_nalgebra(a: ArrayView2<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Frobenius norm.
pub fn fro(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut b = array![[1.0], [2.0], [3.0]];
        cholesky_solve(&l, &mut b);
        let r = a.dot(&b) - array![[1.0], [2.0], [3.0]];
        assert!(fro(r.view()) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_none());
        assert!(cholesky(array![[0.0, 0.0], [0.0, 1.0]].view()).is_none());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let h = array![[3.0, 0.0], [0.0, -4.0], [0.0, 0.0]];
        assert!((spectral_norm(h.view()) - 4.0).abs() < 1e-8);
        assert_eq!(spectral_norm(Array2::zeros((3, 2)).view()), 0.0);
    }
}
