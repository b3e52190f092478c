//! Closed-form reverse pass through [`forward`](super::forward) and
//! [`loss`](super::loss).

use super::forward::{batch_sse, forward, GraphActivations, LossMode};
use super::{Gradients, ModelParams, NeighborhoodMask};
use crate::error::{Error, Result};
use crate::numerics::{dot, elu_grad_scalar, Matrix, NORM_EPS};

#[derive(Clone, Debug)]
pub struct LossBreakdown {
    pub total: f64,
    /// Data term as configured by the loss mode.
    pub data: f64,
    /// `λ‖T‖²_F`
    pub penalty: f64,
    /// `‖T‖²_F`
    pub t_frob_sq: f64,
}

/// Multiplies `upstream` elementwise by ELU'(pre).
fn through_elu(upstream: &Matrix, pre: &Matrix) -> Result<Matrix> {
    upstream.zip_map(pre, |g, x| g * elu_grad_scalar(x))
}

fn check(m: &Matrix, stage: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            stage: stage.to_string(),
        })
    }
}

/// Loss and exact gradients for all six weight matrices.
///
/// `y` holds targets for every graph node; only rows in `batch` enter the
/// data term, while the penalty always covers the whole adjacency.
pub fn gradients(
    chi: &Matrix,
    y: &Matrix,
    params: &ModelParams,
    mask: &NeighborhoodMask,
    lambda: f64,
    batch: &[usize],
    mode: LossMode,
) -> Result<(LossBreakdown, GraphActivations, Gradients)> {
    let act = forward(chi, params, mask)?;
    let (loss, grads) = backward(&act, chi, y, params, mask, lambda, batch, mode)?;
    Ok((loss, act, grads))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward(
    act: &GraphActivations,
    chi: &Matrix,
    y: &Matrix,
    params: &ModelParams,
    mask: &NeighborhoodMask,
    lambda: f64,
    batch: &[usize],
    mode: LossMode,
) -> Result<(LossBreakdown, Gradients)> {
    let n = chi.rows();
    let q = params.q();
    if batch.is_empty() {
        return Err(Error::Argument("gradients over an empty batch".into()));
    }
    if y.shape() != (n, q) {
        return Err(Error::Dimension {
            op: "gradients",
            lhs: y.shape(),
            rhs: (n, q),
        });
    }
    if lambda < 0.0 {
        return Err(Error::Argument(format!("negative penalty weight {lambda}")));
    }

    let sse = batch_sse(y, &act.y_hat, batch);
    let (data, coef) = match mode {
        LossMode::Averaged => {
            let denom = (batch.len() * q) as f64;
            (sse / denom, 2.0 / denom)
        }
        LossMode::Summed => (sse, 2.0),
    };
    let t_frob_sq = act.t.frobenius_sq();
    let penalty = if lambda == 0.0 { 0.0 } else { lambda * t_frob_sq };

    // dL/dŶ, nonzero on batch rows only (a node listed twice counts twice).
    let mut d_yhat = Matrix::zeros(n, q);
    for &v in batch {
        for j in 0..q {
            d_yhat[(v, j)] += coef * (act.y_hat[(v, j)] - y[(v, j)]);
        }
    }

    // Regression head: Ŷ = R · W_regr, R = H⁰ + H¹ + H².
    let d_wregr = act.r.t_matmul(&d_yhat)?;
    let d_r = d_yhat.matmul_t(&params.w_regr)?;

    let t = &act.t.t;

    // Layer 2: H² = elu(B²), B² = G² · W, G² = T · H¹.
    let d_b2 = through_elu(&d_r, &act.b2)?;
    let d_wgnn2 = act.g2.t_matmul(&d_b2)?;
    let d_g2 = d_b2.matmul_t(&params.w_gnn2)?;
    let mut d_t = d_g2.matmul_t(&act.h1)?;
    let mut d_h1 = d_r.clone();
    d_h1.add_assign(&t.t_matmul(&d_g2)?)?;
    check(&d_h1, "backward gnn layer 2")?;

    // Layer 1: H¹ = elu(B¹), B¹ = G¹ · W, G¹ = T · H⁰.
    let d_b1 = through_elu(&d_h1, &act.b1)?;
    let d_wgnn1 = act.g1.t_matmul(&d_b1)?;
    let d_g1 = d_b1.matmul_t(&params.w_gnn1)?;
    d_t.add_assign(&d_g1.matmul_t(&act.s)?)?;
    let mut d_s = d_r;
    d_s.add_assign(&t.t_matmul(&d_g1)?)?;
    check(&d_s, "backward gnn layer 1")?;

    if lambda != 0.0 {
        d_t.axpy(2.0 * lambda, t)?;
    }
    mask.apply(&mut d_t);

    // T = Z·Zᵀ on masked entries: dZ_v = Σ_u (dT[v][u] + dT[u][v]) z_u.
    let sym = d_t.add(&d_t.transpose())?;
    let z = &act.proj.z;
    let d_z = sym.matmul(z)?;

    // Z rows = (P_v − mean P_v) / max(‖·‖, ε).
    let h = z.cols();
    let mut d_p = Matrix::zeros(n, h);
    for v in 0..n {
        let zv = z.row(v);
        let gv = d_z.row(v);
        let norm = act.proj.norms[v];
        let row = d_p.row_mut(v);
        if norm > NORM_EPS {
            let proj = dot(zv, gv);
            for k in 0..h {
                row[k] = (gv[k] - zv[k] * proj) / norm;
            }
        } else {
            for k in 0..h {
                row[k] = gv[k] / NORM_EPS;
            }
        }
        let mean = row.iter().sum::<f64>() / h as f64;
        for x in row.iter_mut() {
            *x -= mean;
        }
    }
    check(&d_p, "backward normalization")?;

    // P = S · W_line_proj
    let d_wproj = act.s.t_matmul(&d_p)?;
    d_s.add_assign(&d_p.matmul_t(&params.w_line_proj)?)?;

    // S = elu(A²), A² = Z¹ · W_mlp2, Z¹ = elu(A¹), A¹ = chi · W_mlp1
    let d_a2 = through_elu(&d_s, &act.a2)?;
    let d_wmlp2 = act.z1.t_matmul(&d_a2)?;
    let d_z1 = d_a2.matmul_t(&params.w_mlp2)?;
    let d_a1 = through_elu(&d_z1, &act.a1)?;
    let d_wmlp1 = chi.t_matmul(&d_a1)?;

    let grads = Gradients {
        w_mlp1: d_wmlp1,
        w_mlp2: d_wmlp2,
        w_line_proj: d_wproj,
        w_gnn1: d_wgnn1,
        w_gnn2: d_wgnn2,
        w_regr: d_wregr,
    };
    for (m, name) in grads.matrices().iter().zip(ModelParams::NAMES) {
        check(m, name)?;
    }
    Ok((
        LossBreakdown {
            total: data + penalty,
            data,
            penalty,
            t_frob_sq,
        },
        grads,
    ))
}
