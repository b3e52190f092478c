//! Householder QR least squares, used by the autoregressive baseline.

use super::Matrix;
use crate::error::{Error, Result};

/// Solves `min ‖a·x − b‖₂` for full-column-rank `a` (rows ≥ cols).
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Dimension {
            op: "lstsq",
            lhs: a.shape(),
            rhs: (b.len(), 1),
        });
    }
    if m < n {
        return Err(Error::Rank { rank: m, cols: n });
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let scale = a.max_abs().max(1.0);
    let tol = 1e-12 * scale * (m.max(n) as f64);

    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(Error::Rank { rank: k, cols: n });
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm_sq;
            for i in k..m {
                r[(i, j)] -= s * v[i - k];
            }
        }
        let s: f64 = (k..m).map(|i| v[i - k] * y[i]).sum::<f64>() * 2.0 / vnorm_sq;
        for i in k..m {
            y[i] -= s * v[i - k];
        }
        if r[(k, k)].abs() <= tol {
            return Err(Error::Rank { rank: k, cols: n });
        }
    }

    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| r[(k, j)] * x[j]).sum();
        x[k] = (y[k] - s) / r[(k, k)];
    }
    Ok(x)
}
