#![allow(dead_code)]

use helm::RngStream;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, rng: &mut RngStream) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Cyclic coordinate descent for `‖Hβ − X‖² + λ‖β‖₁`, column by column.
pub fn lasso_cd(h: &Array2<f64>, x: &Array2<f64>, lambda: f64) -> Array2<f64> {
    let (k, l) = h.dim();
    let d = x.ncols();
    let norms: Vec<f64> = (0..l).map(|j| h.column(j).iter().map(|v| v * v).sum()).collect();
    let mut beta = Array2::<f64>::zeros((l, d));
    for c in 0..d {
        let mut r: Vec<f64> = x.column(c).to_vec();
        for _sweep in 0..100_000 {
            let mut change = 0.0f64;
            for j in 0..l {
                if norms[j] == 0.0 {
                    continue;
                }
                let old = beta[[j, c]];
                let mut rho = 0.0;
                for i in 0..k {
                    rho += h[[i, j]] * (r[i] + h[[i, j]] * old);
                }
                let t = lambda / 2.0;
                let new = if rho > t {
                    (rho - t) / norms[j]
                } else if rho < -t {
                    (rho + t) / norms[j]
                } else {
                    0.0
                };
                if new != old {
                    for i in 0..k {
                        r[i] -= h[[i, j]] * (new - old);
                    }
                    beta[[j, c]] = new;
                    change = change.max((new - old).abs());
                }
            }
            if change < 1e-15 {
                break;
            }
        }
    }
    beta
}

/// Dense Gaussian elimination with partial pivoting; solves `M y = b` for each column of `b`.
pub fn gauss_solve(m: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut y = b.clone();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().partial_cmp(&a[[j, col]].abs()).unwrap())
            .unwrap();
        for c in 0..n {
            a.swap([col, c], [p, c]);
        }
        for c in 0..y.ncols() {
            y.swap([col, c], [p, c]);
        }
        for r in col + 1..n {
            let f = a[[r, col]] / a[[col, col]];
            for c in col..n {
                a[[r, c]] -= f * a[[col, c]];
            }
            for c in 0..y.ncols() {
                y[[r, c]] -= f * y[[col, c]];
            }
        }
    }
    for c in 0..y.ncols() {
        for r in (0..n).rev() {
            let mut s = y[[r, c]];
            for j in r + 1..n {
                s -= a[[r, j]] * y[[j, c]];
            }
            y[[r, c]] = s / a[[r, r]];
        }
    }
    y
}

pub fn fro(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
