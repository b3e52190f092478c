use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;
const DENOM_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Coordinate where the maximum was attained.
    pub worst: usize,
}

/// Compares `analytic` against central differences of `f` at `theta`.
///
/// Per coordinate the relative error is
/// `|a - n| / max(|a|, |n|, 1e-8)`; the maximum over coordinates is returned.
pub fn finite_difference_check<F>(
    mut f: F,
    analytic: &[f64],
    theta: &[f64],
    h: f64,
) -> Result<GradCheck>
where
    F: FnMut(&[f64]) -> f64,
{
    if analytic.len() != theta.len() {
        return Err(Error::Dimension {
            op: "finite_difference_check",
            lhs: (analytic.len(), 1),
            rhs: (theta.len(), 1),
        });
    }
    let mut x = theta.to_vec();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        worst: 0,
    };
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let fp = f(&x);
        x[i] = orig - h;
        let fm = f(&x);
        x[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Evaluation { coordinate: i });
        }
        let numeric = (fp - fm) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOM_FLOOR);
        if rel > out.max_rel_error {
            out = GradCheck {
                max_rel_error: rel,
                worst: i,
            };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let r = finite_difference_check(|w| w[0] * w[0], &[6.0], &[3.0], DEFAULT_STEP).unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn doubled_gradient_is_caught() {
        let f = |w: &[f64]| w[0].powi(3) + w[1].sin();
        let theta = [0.7, 0.3];
        let wrong = [2.0 * 3.0 * 0.49, 2.0 * 0.3f64.cos()];
        let r = finite_difference_check(f, &wrong, &theta, DEFAULT_STEP).unwrap();
        assert!((r.max_rel_error - 0.5).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn non_finite_names_coordinate() {
        let f = |w: &[f64]| if w[1] > 0.0 { f64::NAN } else { w[0] };
        let err = finite_difference_check(f, &[1.0, 0.0], &[0.0, 0.0], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Evaluation { coordinate: 1 }));
    }
}
