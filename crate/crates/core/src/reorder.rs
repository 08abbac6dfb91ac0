//! Reverse Cuthill-McKee reordering.
//!
//! The permutation is computed on the symmetrized pattern `L̃ + L̃^T` (the
//! generator itself is non-symmetric) and applied symmetrically, which is a
//! similarity transformation and therefore leaves the physics unchanged. In
//! the Fock basis the effect is that basis states are no longer visited in
//! ascending number order.
//!
//! Determinism is required for the structural regression numbers, so every
//! choice is pinned: the start node of each connected component is a
//! George-Liu pseudo-peripheral node (repeated breadth-first searches towards
//! maximal eccentricity, lowest degree as tie-break), neighbors within a
//! level set are visited from lowest to highest degree with ascending index
//! breaking ties, and degrees exclude the diagonal.

use crate::error::{Error, Result};
use crate::liouvillian::ConstrainedLiouvillian;
use crate::sparse::{CsrMatrix, Permutation};

/// Undirected adjacency of a structurally symmetric pattern, diagonal
/// excluded.
pub struct AdjacencyView {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    degree: Vec<usize>,
}

impl AdjacencyView {
    /// Build from a structurally symmetric pattern (the caller normally
    /// passes [`CsrMatrix::symmetrized_pattern`] output).
    pub fn from_pattern(pattern: &CsrMatrix) -> Result<AdjacencyView> {
        if !pattern.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "adjacency requires a square pattern, got {}x{}",
                pattern.nrows(),
                pattern.ncols()
            )));
        }
        let n = pattern.nrows();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        let mut neighbors = Vec::with_capacity(pattern.nnz());
        for i in 0..n {
            let (cols, _) = pattern.row(i);
            neighbors.extend(cols.iter().copied().filter(|&j| j != i));
            offsets.push(neighbors.len());
        }
        let degree = (0..n).map(|i| offsets[i + 1] - offsets[i]).collect();
        Ok(AdjacencyView {
            n,
            offsets,
            neighbors,
            degree,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    /// Breadth-first level structure from `root` restricted to unvisited
    /// nodes; returns the visited nodes in BFS order and the eccentricity.
    /// `level` must be `usize::MAX` for untouched nodes and is reset before
    /// returning.
    fn level_structure(
        &self,
        root: usize,
        level: &mut [usize],
        order: &mut Vec<usize>,
    ) -> usize {
        order.clear();
        order.push(root);
        level[root] = 0;
        let mut ecc = 0;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &v in self.neighbors(u) {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    ecc = ecc.max(level[v]);
                    order.push(v);
                }
            }
        }
        ecc
    }

    /// George-Liu pseudo-peripheral node of the component containing `seed`.
    fn pseudo_peripheral(&self, seed: usize, level: &mut [usize], order: &mut Vec<usize>) -> usize {
        let reset = |level: &mut [usize], order: &[usize]| {
            for &u in order {
                level[u] = usize::MAX;
            }
        };
        // min-degree node of the component as the initial guess
        self.level_structure(seed, level, order);
        let root = *order
            .iter()
            .min_by_key(|&&u| (self.degree(u), u))
            .expect("component is nonempty");
        reset(level, order);
        let mut ecc = self.level_structure(root, level, order);
        loop {
            // lowest-degree node of the deepest level, ascending index tie-break
            let candidate = *order
                .iter()
                .filter(|&&u| level[u] == ecc)
                .min_by_key(|&&u| (self.degree(u), u))
                .expect("last level is nonempty");
            reset(level, order);
            let ecc_cand = self.level_structure(candidate, level, order);
            if ecc_cand > ecc {
                // adopt the candidate; its level structure is now current
                ecc = ecc_cand;
            } else {
                reset(level, order);
                return candidate;
            }
        }
    }
}

/// Reverse Cuthill-McKee permutation of a structurally symmetric pattern.
///
/// Returns the forward map: `forward[old_index] = new_index`.
pub fn rcm(pattern: &CsrMatrix) -> Result<Permutation> {
    let adj = AdjacencyView::from_pattern(pattern)?;
    let n = adj.len();
    let mut level = vec![usize::MAX; n];
    let mut scratch: Vec<usize> = Vec::new();
    let mut visited = vec![false; n];
    let mut cm_order: Vec<usize> = Vec::with_capacity(n);
    let mut nbrs: Vec<usize> = Vec::new();

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = if adj.degree(seed) == 0 {
            seed
        } else {
            adj.pseudo_peripheral(seed, &mut level, &mut scratch)
        };
        // Cuthill-McKee breadth-first sweep of this component
        let component_start = cm_order.len();
        visited[start] = true;
        cm_order.push(start);
        let mut head = component_start;
        while head < cm_order.len() {
            let u = cm_order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(adj.neighbors(u).iter().copied().filter(|&v| !visited[v]));
            nbrs.sort_unstable_by_key(|&v| (adj.degree(v), v));
            for &v in &nbrs {
                visited[v] = true;
                cm_order.push(v);
            }
        }
    }
    debug_assert_eq!(cm_order.len(), n);
    // reverse the full CM ordering
    let mut forward = vec![0usize; n];
    for (pos, &old) in cm_order.iter().rev().enumerate() {
        forward[old] = pos;
    }
    Permutation::from_forward(forward)
}

/// RCM-reorder a constrained system: the permutation of the symmetrized
/// pattern of `L̃` is applied symmetrically to all three matrices and to the
/// right-hand side, so the returned system satisfies the same
/// `constrained = liouvillian + w·trace_matrix` identity in the permuted
/// frame. The permutation is returned so solutions can be mapped back.
pub fn reorder_system(
    sys: &ConstrainedLiouvillian,
) -> Result<(ConstrainedLiouvillian, Permutation)> {
    let pattern = sys.constrained.symmetrized_pattern()?;
    let perm = rcm(&pattern)?;
    let reordered = ConstrainedLiouvillian {
        liouvillian: sys.liouvillian.permute_symmetric(&perm)?,
        trace_matrix: sys.trace_matrix.permute_symmetric(&perm)?,
        weight: sys.weight,
        constrained: sys.constrained.permute_symmetric(&perm)?,
        rhs: perm.permute_vec(&sys.rhs),
        hilbert_dim: sys.hilbert_dim,
        weight_fallback: sys.weight_fallback,
    };
    Ok((reordered, perm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::TruncationConfig;
    use crate::liouvillian::{build_constrained, ModelParams};
    use num_complex::Complex64;

    fn c1() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn sym_pattern(n: usize, edges: &[(usize, usize)]) -> CsrMatrix {
        let mut t: Vec<(usize, usize, Complex64)> = (0..n).map(|i| (i, i, c1())).collect();
        for &(i, j) in edges {
            t.push((i, j, c1()));
            t.push((j, i, c1()));
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn path_graph_stays_optimal() {
        let m = sym_pattern(4, &[(0, 1), (1, 2), (2, 3)]);
        let p = rcm(&m).unwrap();
        let r = m.permute_symmetric(&p).unwrap();
        let s = r.structure_metrics().unwrap();
        assert_eq!(s.upper_bandwidth, 1);
        assert_eq!(s.lower_bandwidth, 1);
    }

    #[test]
    fn star_graph_center_goes_interior() {
        let m = sym_pattern(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let p = rcm(&m).unwrap();
        let center = p.apply(0);
        assert!(center != 0 && center != 4, "center at end position {center}");
        let b_nat = m.structure_metrics().unwrap().total_bandwidth;
        let b_rcm = m
            .permute_symmetric(&p)
            .unwrap()
            .structure_metrics()
            .unwrap()
            .total_bandwidth;
        assert!(b_rcm <= b_nat);

        // brute-force reference: the true minimum over all 5! orders
        let mut best = usize::MAX;
        let idx = [0usize, 1, 2, 3, 4];
        let mut perms: Vec<Vec<usize>> = Vec::new();
        fn heap_perms(k: usize, arr: &mut [usize; 5], out: &mut Vec<Vec<usize>>) {
            if k == 1 {
                out.push(arr.to_vec());
                return;
            }
            for i in 0..k {
                heap_perms(k - 1, arr, out);
                if k % 2 == 0 {
                    arr.swap(i, k - 1);
                } else {
                    arr.swap(0, k - 1);
                }
            }
        }
        let mut arr = idx;
        heap_perms(5, &mut arr, &mut perms);
        for fw in perms {
            let p = Permutation::from_forward(fw).unwrap();
            let b = m
                .permute_symmetric(&p)
                .unwrap()
                .structure_metrics()
                .unwrap()
                .total_bandwidth;
            best = best.min(b);
        }
        assert!(b_rcm >= best);
        assert_eq!(best, 5); // K_{1,4} optimum: center in the middle
    }

    #[test]
    fn rcm_is_bijection_on_disconnected_graph() {
        let m = sym_pattern(7, &[(0, 1), (1, 2), (4, 5)]);
        let p = rcm(&m).unwrap(); // node 3 and 6 isolated
        let mut image: Vec<usize> = (0..7).map(|i| p.apply(i)).collect();
        image.sort_unstable();
        assert_eq!(image, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn fig1_reduction_factors() {
        let mut p = ModelParams::new(TruncationConfig::new(4, 8).unwrap());
        p.delta = -0.05;
        p.g0 = 0.15;
        p.drive = 0.25;
        p.kappa = 0.05;
        p.q_mech = 1e4;
        p.n_th = 31.0;
        let sys = build_constrained(&p).unwrap();
        let before = sys.constrained.structure_metrics().unwrap();
        let (reordered, _) = reorder_system(&sys).unwrap();
        let after = reordered.constrained.structure_metrics().unwrap();
        let b_ratio = before.total_bandwidth as f64 / after.total_bandwidth as f64;
        let p_ratio = before.total_profile as f64 / after.total_profile as f64;
        assert!(
            (4.0..=6.0).contains(&b_ratio),
            "bandwidth reduction {b_ratio:.2} outside [4, 6]"
        );
        assert!(
            (2.0..=3.0).contains(&p_ratio),
            "profile reduction {p_ratio:.2} outside [2, 3]"
        );
        assert_eq!(after.nnz, before.nnz);
    }

    #[test]
    fn reorder_preserves_nnz_and_diagonal_multiset() {
        let mut p = ModelParams::new(TruncationConfig::new(2, 4).unwrap());
        p.delta = 0.3;
        p.g0 = 0.2;
        p.drive = 0.1;
        p.n_th = 0.5;
        let sys = build_constrained(&p).unwrap();
        let (reordered, _) = reorder_system(&sys).unwrap();
        assert_eq!(reordered.constrained.nnz(), sys.constrained.nnz());
        let sort_key = |v: &Complex64| (v.re, v.im);
        let mut d0: Vec<Complex64> = sys.constrained.diagonal();
        let mut d1: Vec<Complex64> = reordered.constrained.diagonal();
        d0.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        d1.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        assert_eq!(d0, d1);
    }

    #[test]
    fn permuted_solve_matches_natural_solve() {
        // two-level decay toy: solve naturally and RCM-permuted, map back
        use crate::dense::{DenseLu, DenseMatrix};
        let kappa = 1.3;
        let a = crate::fock::destroy(2).unwrap();
        let n = crate::fock::number(2).unwrap();
        let l = crate::liouvillian::dissipator_matrix(&a, &n, kappa).unwrap();
        let sys = crate::liouvillian::constrain(&l, 2).unwrap();

        let solve = |m: &CsrMatrix, rhs: &[Complex64]| {
            DenseLu::factor(&DenseMatrix::from_sparse(m))
                .unwrap()
                .solve(rhs)
                .unwrap()
        };
        let x_nat = solve(&sys.constrained, &sys.rhs);
        let (rsys, perm) = reorder_system(&sys).unwrap();
        let x_perm = solve(&rsys.constrained, &rsys.rhs);
        let x_back = perm.inverse().permute_vec(&x_perm);
        for (a, b) in x_nat.iter().zip(&x_back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn reordered_system_keeps_constraint_identity() {
        let mut p = ModelParams::new(TruncationConfig::new(2, 3).unwrap());
        p.g0 = 0.1;
        p.drive = 0.05;
        p.n_th = 1.0;
        let sys = build_constrained(&p).unwrap();
        let (r, perm) = reorder_system(&sys).unwrap();
        let rebuilt = r.liouvillian.add(&r.trace_matrix.scale(r.weight)).unwrap();
        assert_eq!(rebuilt, r.constrained);
        // rhs permuted consistently: nonzero entry sits at the image of row 0
        assert_eq!(r.rhs[perm.apply(0)], sys.weight);
    }
}
