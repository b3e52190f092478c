use crate::numerics::Matrix;

/// Which edges participate in aggregation. The diagonal (self-loop) is always set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodMask {
    n: usize,
    bits: Vec<bool>,
    complete: bool,
}

impl NeighborhoodMask {
    /// Every node linked to every other node.
    pub fn complete(n: usize) -> Self {
        Self {
            n,
            bits: vec![true; n * n],
            complete: true,
        }
    }

    /// Self-loops only.
    pub fn diagonal(n: usize) -> Self {
        Self::from_fn(n, |v, u| v == u)
    }

    /// `allow(v, u)` decides whether row `v` aggregates from column `u`.
    /// The diagonal is forced on.
    pub fn from_fn(n: usize, mut allow: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = vec![false; n * n];
        let mut complete = true;
        for v in 0..n {
            for u in 0..n {
                let b = v == u || allow(v, u);
                bits[v * n + u] = b;
                complete &= b;
            }
        }
        Self { n, bits, complete }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    #[inline]
    pub fn allows(&self, v: usize, u: usize) -> bool {
        self.bits[v * self.n + u]
    }

    pub fn row_count(&self, v: usize) -> usize {
        self.bits[v * self.n..(v + 1) * self.n]
            .iter()
            .filter(|b| **b)
            .count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|v| (0..v).all(|u| self.allows(v, u) == self.allows(u, v)))
    }

    /// Restriction to the listed nodes, in the listed order.
    pub fn submask(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self.allows(idx[a], idx[b]))
    }

    /// Zeroes entries of `m` outside the mask.
    pub fn apply(&self, m: &mut Matrix) {
        if self.complete {
            return;
        }
        for (x, &b) in m.as_mut_slice().iter_mut().zip(&self.bits) {
            if !b {
                *x = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_forced() {
        let m = NeighborhoodMask::from_fn(4, |_, _| false);
        assert!((0..4).all(|v| m.allows(v, v) && m.row_count(v) == 1));
        assert_eq!(m, NeighborhoodMask::diagonal(4));
        assert!(NeighborhoodMask::from_fn(3, |_, _| true).is_complete());
    }

    #[test]
    fn submask_keeps_order() {
        let m = NeighborhoodMask::from_fn(5, |v, u| u + 1 == v);
        let s = m.submask(&[1, 2, 4]);
        assert!(s.allows(1, 0)); // 2 -> 1
        assert!(!s.allows(2, 1)); // 4 -> 2
    }
}
