//! The virtual-graph forecaster: node embedding, learned edge significance,
//! two significance-weighted aggregation layers, a residual regression head,
//! the penalized loss and its gradients.
//!
//! Every node of a graph is one timepoint; its features are the observation
//! window `[o_v, …, o_{v-p+1}]`. For a graph with `n` nodes:
//!
//! ```text
//! S   = elu(elu(chi · W_mlp1) · W_mlp2)                    n × hidden
//! Z   = rownorm(S · W_line_proj)                           centered, unit L2
//! T   = (Z · Zᵀ) ⊙ mask                                    n × n, in [-1, 1]
//! H¹  = elu(T · S  · W_gnn1)
//! H²  = elu(T · H¹ · W_gnn2)
//! Ŷ   = (S + H¹ + H²) · W_regr                             n × q
//! L   = mean_batch ‖y − ŷ‖² + λ ‖T‖²_F
//! ```
//!
//! There are no bias terms. The per-node dense layers are equivalent to
//! width-1 convolutions over the node axis.

mod backward;
mod forward;
mod mask;
mod params;

pub use backward::{gradients, LossBreakdown};
pub(crate) use backward::backward;
pub use forward::{
    edge_significance, embed_nodes, forward, gnn_layer, loss, GraphActivations, LossMode,
    SignificanceMatrix,
};
pub use mask::NeighborhoodMask;
pub use params::{Gradients, ModelParams, HIDDEN};

#[cfg(test)]
mod tests;
