use serde::{Deserialize, Serialize};

use crate::numerics::{uniform_init, Matrix, Rng};

/// Default hidden width of every layer.
pub const HIDDEN: usize = 256;

/// All trainable weights. Row-vector convention: a node's features are a
/// row, so layers compute `x · W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// p × hidden
    pub w_mlp1: Matrix,
    /// hidden × hidden
    pub w_mlp2: Matrix,
    /// hidden × hidden, projection before the similarity inner product
    pub w_line_proj: Matrix,
    /// hidden × hidden
    pub w_gnn1: Matrix,
    /// hidden × hidden
    pub w_gnn2: Matrix,
    /// hidden × q
    pub w_regr: Matrix,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

impl ModelParams {
    pub const NAMES: [&'static str; 6] = [
        "w_mlp1",
        "w_mlp2",
        "w_line_proj",
        "w_gnn1",
        "w_gnn2",
        "w_regr",
    ];

    /// Uniform initialization with bound `1/sqrt(fan_in)`, drawn in field order.
    pub fn init(p: usize, q: usize, hidden: usize, rng: &mut Rng) -> Self {
        Self {
            w_mlp1: uniform_init(rng, p, hidden, p),
            w_mlp2: uniform_init(rng, hidden, hidden, hidden),
            w_line_proj: uniform_init(rng, hidden, hidden, hidden),
            w_gnn1: uniform_init(rng, hidden, hidden, hidden),
            w_gnn2: uniform_init(rng, hidden, hidden, hidden),
            w_regr: uniform_init(rng, hidden, q, hidden),
        }
    }

    /// [`ModelParams::init`] with both graph-layer weights divided by
    /// `max_degree`, the largest neighborhood (self included) in the graph.
    ///
    /// A sum over `d` neighbors with `|t| ≤ 1` can grow activations `d`-fold
    /// per layer; this keeps the first forward pass at the embedding scale.
    pub fn init_for_graph(p: usize, q: usize, hidden: usize, max_degree: usize, rng: &mut Rng) -> Self {
        let mut params = Self::init(p, q, hidden, rng);
        let k = 1.0 / max_degree.max(1) as f64;
        params.w_gnn1 = params.w_gnn1.scale(k);
        params.w_gnn2 = params.w_gnn2.scale(k);
        params
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Self {
            w_mlp1: z(&self.w_mlp1),
            w_mlp2: z(&self.w_mlp2),
            w_line_proj: z(&self.w_line_proj),
            w_gnn1: z(&self.w_gnn1),
            w_gnn2: z(&self.w_gnn2),
            w_regr: z(&self.w_regr),
        }
    }

    pub fn p(&self) -> usize {
        self.w_mlp1.rows()
    }

    pub fn q(&self) -> usize {
        self.w_regr.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_mlp1.cols()
    }

    pub fn matrices(&self) -> [&Matrix; 6] {
        [
            &self.w_mlp1,
            &self.w_mlp2,
            &self.w_line_proj,
            &self.w_gnn1,
            &self.w_gnn2,
            &self.w_regr,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix; 6] {
        [
            &mut self.w_mlp1,
            &mut self.w_mlp2,
            &mut self.w_line_proj,
            &mut self.w_gnn1,
            &mut self.w_gnn2,
            &mut self.w_regr,
        ]
    }

    pub fn n_params(&self) -> usize {
        self.matrices().iter().map(|m| m.as_slice().len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for m in self.matrices() {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    /// Overwrites all weights from a flat vector in [`ModelParams::flatten`] order.
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length");
        let mut off = 0;
        for m in self.matrices_mut() {
            let len = m.as_slice().len();
            m.as_mut_slice().copy_from_slice(&flat[off..off + len]);
            off += len;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.matrices().iter().all(|m| m.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_follow_config() {
        let p = ModelParams::init(9, 3, HIDDEN, &mut Rng::new(0));
        assert_eq!(p.w_mlp1.shape(), (9, 256));
        assert_eq!(p.w_mlp2.shape(), (256, 256));
        assert_eq!(p.w_line_proj.shape(), (256, 256));
        assert_eq!(p.w_gnn1.shape(), (256, 256));
        assert_eq!(p.w_gnn2.shape(), (256, 256));
        assert_eq!(p.w_regr.shape(), (256, 3));
        assert_eq!((p.p(), p.q(), p.hidden()), (9, 3, 256));
    }

    #[test]
    fn flat_round_trip() {
        let p = ModelParams::init(3, 2, 8, &mut Rng::new(1));
        let mut z = p.zeros_like();
        z.set_flat(&p.flatten());
        assert_eq!(z, p);
    }
}
