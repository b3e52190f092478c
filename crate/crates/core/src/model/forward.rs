use serde::{Deserialize, Serialize};

use super::{ModelParams, NeighborhoodMask};
use crate::error::{Error, Result};
use crate::numerics::{center_unit_normalize_with_norm, elu, Matrix};

/// Which form of the data term to optimize.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    /// `1/(|batch|·q) · Σ‖y − ŷ‖²`
    #[default]
    Averaged,
    /// `Σ‖y − ŷ‖²`
    Summed,
}

impl std::str::FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "averaged" => Ok(LossMode::Averaged),
            "summed" => Ok(LossMode::Summed),
            other => Err(Error::Argument(format!("unknown loss mode {other:?}"))),
        }
    }
}

/// Adjacency of the virtual graph: `t[v][u]` is the learned similarity of
/// nodes `v` and `u` on permitted edges and zero elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SignificanceMatrix {
    pub t: Matrix,
}

impl SignificanceMatrix {
    pub fn len(&self) -> usize {
        self.t.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.t.rows() == 0
    }

    pub fn get(&self, v: usize, u: usize) -> f64 {
        self.t[(v, u)]
    }

    pub fn row(&self, v: usize) -> &[f64] {
        self.t.row(v)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.t.frobenius_sq()
    }
}

/// Node embeddings after linear projection and normalization, kept for backprop.
#[derive(Clone, Debug)]
pub(crate) struct Projection {
    pub z: Matrix,
    /// Unfloored L2 norm of each centered projected row.
    pub norms: Vec<f64>,
}

/// Everything the forward pass computed.
#[derive(Clone, Debug)]
pub struct GraphActivations {
    /// First MLP pre-activation, `chi · W_mlp1`.
    pub(crate) a1: Matrix,
    pub(crate) z1: Matrix,
    pub(crate) a2: Matrix,
    /// Node embeddings, `H⁰`.
    pub s: Matrix,
    pub(crate) proj: Projection,
    pub t: SignificanceMatrix,
    pub(crate) g1: Matrix,
    pub(crate) b1: Matrix,
    pub h1: Matrix,
    pub(crate) g2: Matrix,
    pub(crate) b2: Matrix,
    pub h2: Matrix,
    pub(crate) r: Matrix,
    pub y_hat: Matrix,
}

fn check_finite(m: &Matrix, stage: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            stage: stage.to_string(),
        })
    }
}

/// Per-node two-layer perceptron: `elu(elu(chi · W1) · W2)`.
pub fn embed_nodes(chi: &Matrix, params: &ModelParams) -> Result<Matrix> {
    let (_, _, _, s) = embed_parts(chi, params)?;
    Ok(s)
}

fn embed_parts(chi: &Matrix, params: &ModelParams) -> Result<(Matrix, Matrix, Matrix, Matrix)> {
    let a1 = chi.matmul(&params.w_mlp1)?;
    let z1 = elu(&a1);
    let a2 = z1.matmul(&params.w_mlp2)?;
    let s = elu(&a2);
    Ok((a1, z1, a2, s))
}

fn project(s: &Matrix, params: &ModelParams) -> Result<Projection> {
    let p = s.matmul(&params.w_line_proj)?;
    let mut z = Matrix::zeros(p.rows(), p.cols());
    let mut norms = Vec::with_capacity(p.rows());
    for v in 0..p.rows() {
        let (row, norm) = center_unit_normalize_with_norm(p.row(v));
        z.row_mut(v).copy_from_slice(&row);
        norms.push(norm);
    }
    Ok(Projection { z, norms })
}

/// Masked Gram matrix of the normalized rows. Entries `(v, u)` and `(u, v)`
/// sum the same products in the same order, so the result is exactly
/// symmetric where the mask is.
fn masked_gram(z: &Matrix, mask: &NeighborhoodMask) -> Result<Matrix> {
    let mut t = z.matmul_t(z)?;
    mask.apply(&mut t);
    Ok(t)
}

/// `t[v][u] = ẑ_v · ẑ_u` with `ẑ = center_unit_normalize(s · W_line_proj)`.
pub fn edge_significance(
    s: &Matrix,
    params: &ModelParams,
    mask: &NeighborhoodMask,
) -> Result<SignificanceMatrix> {
    if s.rows() != mask.len() {
        return Err(Error::Dimension {
            op: "edge_significance",
            lhs: s.shape(),
            rhs: (mask.len(), mask.len()),
        });
    }
    let proj = project(s, params)?;
    Ok(SignificanceMatrix {
        t: masked_gram(&proj.z, mask)?,
    })
}

/// Returns `(T·H, T·H·W, elu(T·H·W))`.
fn gnn_parts(
    h_prev: &Matrix,
    t: &SignificanceMatrix,
    w: &Matrix,
) -> Result<(Matrix, Matrix, Matrix)> {
    let g = t.t.matmul(h_prev)?;
    let b = g.matmul(w)?;
    let h = elu(&b);
    Ok((g, b, h))
}

/// Significance-weighted sum aggregation over `N(v) ∪ {v}` followed by a
/// shared linear map and ELU.
pub fn gnn_layer(
    h_prev: &Matrix,
    t: &SignificanceMatrix,
    w: &Matrix,
    mask: &NeighborhoodMask,
) -> Result<Matrix> {
    if t.len() != mask.len() || h_prev.rows() != t.len() {
        return Err(Error::Dimension {
            op: "gnn_layer",
            lhs: h_prev.shape(),
            rhs: t.t.shape(),
        });
    }
    let mut masked = t.t.clone();
    mask.apply(&mut masked);
    let (_, _, h) = gnn_parts(h_prev, &SignificanceMatrix { t: masked }, w)?;
    Ok(h)
}

/// Full pass over one graph whose nodes are the rows of `chi`.
pub fn forward(
    chi: &Matrix,
    params: &ModelParams,
    mask: &NeighborhoodMask,
) -> Result<GraphActivations> {
    if chi.rows() != mask.len() {
        return Err(Error::Dimension {
            op: "forward",
            lhs: chi.shape(),
            rhs: (mask.len(), mask.len()),
        });
    }
    if chi.cols() != params.p() {
        return Err(Error::Dimension {
            op: "embed_nodes",
            lhs: chi.shape(),
            rhs: params.w_mlp1.shape(),
        });
    }
    let (a1, z1, a2, s) = embed_parts(chi, params)?;
    check_finite(&s, "embedding")?;
    let proj = project(&s, params)?;
    let t = SignificanceMatrix {
        t: masked_gram(&proj.z, mask)?,
    };
    check_finite(&t.t, "significance")?;
    let (g1, b1, h1) = gnn_parts(&s, &t, &params.w_gnn1)?;
    check_finite(&h1, "gnn layer 1")?;
    let (g2, b2, h2) = gnn_parts(&h1, &t, &params.w_gnn2)?;
    check_finite(&h2, "gnn layer 2")?;
    let r = s.add(&h1)?.add(&h2)?;
    let y_hat = r.matmul(&params.w_regr)?;
    check_finite(&y_hat, "regression")?;
    Ok(GraphActivations {
        a1,
        z1,
        a2,
        s,
        proj,
        t,
        g1,
        b1,
        h1,
        g2,
        b2,
        h2,
        r,
        y_hat,
    })
}

/// Sum of squared residuals over `batch` rows.
pub(crate) fn batch_sse(y: &Matrix, y_hat: &Matrix, batch: &[usize]) -> f64 {
    batch
        .iter()
        .map(|&v| {
            y.row(v)
                .iter()
                .zip(y_hat.row(v))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Data term over `batch` plus `λ‖T‖²_F` over the whole graph.
pub fn loss(
    y: &Matrix,
    y_hat: &Matrix,
    t: &SignificanceMatrix,
    lambda: f64,
    batch: &[usize],
    mode: LossMode,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Argument("loss over an empty batch".into()));
    }
    if lambda < 0.0 {
        return Err(Error::Argument(format!("negative penalty weight {lambda}")));
    }
    if y.shape() != y_hat.shape() {
        return Err(Error::Dimension {
            op: "loss",
            lhs: y.shape(),
            rhs: y_hat.shape(),
        });
    }
    if let Some(&bad) = batch.iter().find(|&&v| v >= y.rows()) {
        return Err(Error::Argument(format!(
            "batch node {bad} outside graph of {} nodes",
            y.rows()
        )));
    }
    let sse = batch_sse(y, y_hat, batch);
    let data = match mode {
        LossMode::Averaged => sse / (batch.len() * y.cols()) as f64,
        LossMode::Summed => sse,
    };
    let penalty = if lambda == 0.0 {
        0.0
    } else {
        lambda * t.frobenius_sq()
    };
    Ok(data + penalty)
}
