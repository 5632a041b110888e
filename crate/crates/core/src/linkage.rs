//! Variable linkage graph and its symmetric normalized Laplacian.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::mip::MipInstance;

/// Graph over decision variables: two variables are adjacent iff they share a
/// row with nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkageGraph {
    /// Sorted, duplicate-free neighbor lists.
    pub neighbors: Vec<Vec<usize>>,
}

impl LinkageGraph {
    pub fn nnodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn nedges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// One `u v` line per edge, `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}

pub fn build_linkage_graph(inst: &MipInstance) -> LinkageGraph {
    let mut neighbors = vec![Vec::new(); inst.nvars];
    for row in &inst.rows {
        let cols: Vec<usize> = row.columns().collect();
        for (a, &k) in cols.iter().enumerate() {
            for &l in &cols[a + 1..] {
                if k != l {
                    neighbors[k].push(l);
                    neighbors[l].push(k);
                }
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    LinkageGraph { neighbors }
}

/// `L = I - D^{-1/2} A D^{-1/2}` in CSR form. Isolated nodes get an identity row.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedLaplacian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedLaplacian {
    pub fn identity(n: usize) -> Self {
        NormalizedLaplacian {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// `L · H` for a dense `n × k` matrix.
    pub fn apply(&self, h: &Array2<f64>) -> Array2<f64> {
        assert_eq!(h.nrows(), self.n, "Laplacian/feature row mismatch");
        let mut out = Array2::zeros(h.raw_dim());
        for i in 0..self.n {
            let mut dst = out.row_mut(i);
            for (j, v) in self.row(i) {
                dst.scaled_add(v, &h.row(j));
            }
        }
        out
    }
}

pub fn normalized_laplacian(g: &LinkageGraph) -> NormalizedLaplacian {
    let n = g.nnodes();
    let inv_sqrt: Vec<f64> = g
        .neighbors
        .iter()
        .map(|nb| if nb.is_empty() { 0.0 } else { 1.0 / (nb.len() as f64).sqrt() })
        .collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let mut diag_done = false;
        for &j in &g.neighbors[i] {
            if !diag_done && j > i {
                cols.push(i);
                vals.push(1.0);
                diag_done = true;
            }
            cols.push(j);
            vals.push(-inv_sqrt[i] * inv_sqrt[j]);
        }
        if !diag_done {
            cols.push(i);
            vals.push(1.0);
        }
        row_ptr.push(cols.len());
    }
    NormalizedLaplacian {
        n,
        row_ptr,
        cols,
        vals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{formulate_misp, gen_graph, UGraph};
    use crate::mip::{ConstraintRow, Relation, Sense};

    fn rows_instance(n: usize, rows: &[&[usize]]) -> MipInstance {
        let rows = rows
            .iter()
            .map(|cols| ConstraintRow::new(cols.iter().map(|&j| (j, 1.0)), Relation::Le, 1.0))
            .collect();
        MipInstance::new("rows", Sense::Maximize, vec![1.0; n], rows)
    }

    #[test]
    fn edges_from_rows() {
        let g = build_linkage_graph(&rows_instance(3, &[&[0, 1], &[1, 2]]));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        let clique = build_linkage_graph(&rows_instance(3, &[&[0, 1, 2]]));
        assert_eq!(clique.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(clique.to_edge_list(), "0 1\n0 2\n1 2\n");
    }

    #[test]
    fn misp_graph_is_the_problem_graph() {
        let tri = UGraph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let g = build_linkage_graph(&formulate_misp(&tri));
        assert_eq!(g.edges().collect::<std::collections::BTreeSet<_>>(), tri.edges);
    }

    #[test]
    fn laplacian_examples() {
        let k2 = build_linkage_graph(&rows_instance(2, &[&[0, 1]]));
        let l = normalized_laplacian(&k2).to_dense();
        assert_eq!(l, ndarray::arr2(&[[1.0, -1.0], [-1.0, 1.0]]));

        let p3 = normalized_laplacian(&build_linkage_graph(&rows_instance(3, &[&[0, 1], &[1, 2]])));
        let r = 1.0 / 2f64.sqrt();
        assert!((p3.get(0, 1) + r).abs() < 1e-15);
        assert!((p3.get(1, 2) + r).abs() < 1e-15);
        assert_eq!(p3.get(0, 2), 0.0);
        assert!((0..3).all(|i| p3.get(i, i) == 1.0));

        let empty = normalized_laplacian(&build_linkage_graph(&rows_instance(3, &[])));
        assert_eq!(empty, NormalizedLaplacian::identity(3));
    }

    #[test]
    fn sqrt_degree_vector_is_in_the_kernel() {
        for seed in 0..10 {
            let g = build_linkage_graph(&formulate_misp(&gen_graph(40, 4, seed).unwrap()));
            let l = normalized_laplacian(&g);
            let dense = l.to_dense();
            assert_eq!(dense, dense.t());
            let root_deg: Vec<f64> = g.degrees().iter().map(|&d| (d as f64).sqrt()).collect();
            for i in 0..g.nnodes() {
                assert_eq!(l.get(i, i), 1.0);
                assert!(l.row(i).all(|(j, v)| j == i || (-1.0..=0.0).contains(&v)));
                if g.degree(i) > 0 {
                    let lv: f64 = l.row(i).map(|(j, v)| v * root_deg[j]).sum();
                    assert!(lv.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let g = build_linkage_graph(&formulate_misp(&gen_graph(12, 4, 2).unwrap()));
        let l = normalized_laplacian(&g);
        let h = Array2::from_shape_fn((12, 3), |(i, j)| (i * 3 + j) as f64 * 0.1 - 1.0);
        let diff = &l.apply(&h) - &l.to_dense().dot(&h);
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
    }
}
