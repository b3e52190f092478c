use super::Matrix;

/// Floor applied to the norm in [`center_unit_normalize`].
pub const NORM_EPS: f64 = 1e-8;

#[inline]
pub fn elu_scalar(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// Derivative of ELU (α = 1) evaluated at the pre-activation.
#[inline]
pub fn elu_grad_scalar(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

pub fn elu(x: &Matrix) -> Matrix {
    x.map(elu_scalar)
}

/// Centers `x` and scales it to unit L2 norm.
///
/// Constant inputs hit the `NORM_EPS` floor and come back as the zero vector.
pub fn center_unit_normalize(x: &[f64]) -> Vec<f64> {
    let (out, _) = center_unit_normalize_with_norm(x);
    out
}

/// Same as [`center_unit_normalize`], also returning the (unfloored) norm of
/// the centered vector.
pub fn center_unit_normalize_with_norm(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    let denom = norm.max(NORM_EPS);
    (centered.into_iter().map(|v| v / denom).collect(), norm)
}
