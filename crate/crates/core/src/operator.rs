//! Finite-dimensional operator strategies: magic unitaries, the conditions that
//! tie them to incidence and adjacency matrices, and trace correlations.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::game::{Correlation, IsoRule, Kind, RuleFunction, Side};
use crate::hypergraph::{graph_edge_label, Hypergraph, SimpleGraph};
use crate::linalg::{CMatrix, IntMatrix};
use crate::solver::PermutationPair;

/// Default residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Trace correlations with more entries than this are refused.
pub const MAX_CORRELATION_ENTRIES: usize = 1 << 25;

/// A `rows × cols` grid of `d × d` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMagicUnitary {
    rows: Vec<String>,
    cols: Vec<String>,
    dim: usize,
    blocks: Vec<CMatrix>,
}

impl OperatorMagicUnitary {
    /// `blocks` is row-major.
    pub fn new(rows: Vec<String>, cols: Vec<String>, dim: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != rows.len() * cols.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks for a {}x{} grid",
                blocks.len(),
                rows.len(),
                cols.len()
            )));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.rows() != dim || b.cols() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "block ({}, {}) is {}x{}, expected {dim}x{dim}",
                    k / cols.len().max(1),
                    k % cols.len().max(1),
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(Self { rows, cols, dim, blocks })
    }

    /// Builds from nested rows; all rows must have the same length.
    pub fn from_grid(rows: Vec<String>, cols: Vec<String>, dim: usize, grid: Vec<Vec<CMatrix>>) -> Result<Self> {
        if grid.len() != rows.len() {
            return Err(Error::RaggedGrid(format!("{} block rows for {} labels", grid.len(), rows.len())));
        }
        if let Some((i, r)) = grid.iter().enumerate().find(|(_, r)| r.len() != cols.len()) {
            return Err(Error::RaggedGrid(format!("block row {i} has {} entries, expected {}", r.len(), cols.len())));
        }
        Self::new(rows, cols, dim, grid.into_iter().flatten().collect())
    }

    /// The `d = 1` grid of the bijection `i ↦ map[i]`.
    pub fn from_permutation(rows: Vec<String>, cols: Vec<String>, map: &[usize]) -> Result<Self> {
        if map.len() != rows.len() || map.iter().any(|&j| j >= cols.len()) {
            return Err(Error::ShapeMismatch("permutation does not fit the grid".into()));
        }
        let nc = cols.len();
        let blocks = (0..rows.len() * nc)
            .map(|k| CMatrix::scalar((map[k / nc] == k % nc) as u8 as f64))
            .collect();
        Self::new(rows, cols, 1, blocks)
    }

    pub fn from_fn<F>(rows: Vec<String>, cols: Vec<String>, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> CMatrix,
    {
        let nc = cols.len();
        let blocks = (0..rows.len() * nc).map(|k| f(k / nc, k % nc)).collect();
        Self::new(rows, cols, dim, blocks)
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, i: usize, j: usize) -> &CMatrix {
        &self.blocks[i * self.cols.len() + j]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn set_block(&mut self, i: usize, j: usize, m: CMatrix) -> Result<()> {
        if m.rows() != self.dim || m.cols() != self.dim {
            return Err(Error::ShapeMismatch("replacement block has the wrong size".into()));
        }
        let nc = self.cols.len();
        self.blocks[i * nc + j] = m;
        Ok(())
    }

    /// The grid with rows and columns exchanged; blocks are not transposed.
    pub fn transposed(&self) -> Self {
        let (nr, nc) = (self.rows.len(), self.cols.len());
        let blocks = (0..nr * nc)
            .map(|k| self.block(k % nr, k / nr).clone())
            .collect();
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            dim: self.dim,
            blocks,
        }
    }

    /// Every block replaced by `W B W*`.
    pub fn conjugated(&self, w: &CMatrix) -> Self {
        let wa = w.adjoint();
        Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            dim: self.dim,
            blocks: self.blocks.iter().map(|b| &(w * b) * &wa).collect(),
        }
    }

    /// Rows and columns relabeled by two index permutations: block `(i, j)` of
    /// the result is block `(row_perm[i], col_perm[j])` of `self`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let blocks = row_perm
            .iter()
            .flat_map(|&i| col_perm.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.block(i, j).clone())
            .collect();
        Self {
            rows: row_perm.iter().map(|&i| self.rows[i].clone()).collect(),
            cols: col_perm.iter().map(|&j| self.cols[j].clone()).collect(),
            dim: self.dim,
            blocks,
        }
    }

    /// `A · U` for an integer matrix `A` with `A.cols() = rows`.
    pub fn left_mul(&self, a: &IntMatrix, row_labels: Vec<String>) -> Result<Self> {
        if a.cols() != self.num_rows() || a.rows() != row_labels.len() {
            return Err(Error::ShapeMismatch("left factor does not match the grid".into()));
        }
        Self::from_fn(row_labels, self.cols.clone(), self.dim, |i, j| {
            let mut acc = CMatrix::zeros(self.dim, self.dim);
            for k in 0..a.cols() {
                let c = a[(i, k)];
                if c != 0 {
                    acc += &self.block(k, j).scale_real(c as f64);
                }
            }
            acc
        })
    }

    /// `U · A` for an integer matrix `A` with `A.rows() = cols`.
    pub fn right_mul(&self, a: &IntMatrix, col_labels: Vec<String>) -> Result<Self> {
        if a.rows() != self.num_cols() || a.cols() != col_labels.len() {
            return Err(Error::ShapeMismatch("right factor does not match the grid".into()));
        }
        Self::from_fn(self.rows.clone(), col_labels, self.dim, |i, j| {
            let mut acc = CMatrix::zeros(self.dim, self.dim);
            for k in 0..a.rows() {
                let c = a[(k, j)];
                if c != 0 {
                    acc += &self.block(i, k).scale_real(c as f64);
                }
            }
            acc
        })
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_difference(&self, other: &Self) -> Result<f64> {
        if self.num_rows() != other.num_rows() || self.num_cols() != other.num_cols() || self.dim != other.dim {
            return Err(Error::ShapeMismatch("grids differ in shape".into()));
        }
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).max_norm())
            .fold(0.0, f64::max))
    }
}

fn require_square(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(())
}

/// `max(‖M − M*‖, ‖M² − M‖)` in the max-entry norm.
pub fn projection_residual(m: &CMatrix) -> Result<f64> {
    require_square(m)?;
    let sa = (m - &m.adjoint()).max_norm();
    let idem = (&(m * m) - m).max_norm();
    Ok(sa.max(idem))
}

pub fn is_projection(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(projection_residual(m)? <= tol)
}

/// Worst residual per magic-unitary axiom, with the grid position where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct MagicUnitaryReport {
    pub tol: f64,
    pub projection: f64,
    pub worst_projection_block: Option<(usize, usize)>,
    pub row_sums: f64,
    pub column_sums: f64,
    pub orthogonality: f64,
}

impl MagicUnitaryReport {
    pub fn projections_ok(&self) -> bool {
        self.projection <= self.tol
    }

    pub fn row_sums_ok(&self) -> bool {
        self.row_sums <= self.tol
    }

    pub fn column_sums_ok(&self) -> bool {
        self.column_sums <= self.tol
    }

    pub fn orthogonality_ok(&self) -> bool {
        self.orthogonality <= self.tol
    }

    pub fn passed(&self) -> bool {
        self.projections_ok() && self.row_sums_ok() && self.column_sums_ok() && self.orthogonality_ok()
    }

    pub fn worst(&self) -> f64 {
        self.projection.max(self.row_sums).max(self.column_sums).max(self.orthogonality)
    }
}

/// Largest `‖AB‖_max` over pairs of distinct blocks in one line, skipping pairs
/// whose product cannot beat the current maximum (`‖AB‖max ≤ d‖A‖max‖B‖max`).
fn line_orthogonality(line: &[&CMatrix], norms: &[f64], d: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..line.len() {
        for k in 0..line.len() {
            if j == k || d as f64 * norms[j] * norms[k] <= worst {
                continue;
            }
            worst = worst.max((line[j] * line[k]).max_norm());
        }
    }
    worst
}

pub fn is_magic_unitary(u: &OperatorMagicUnitary, tol: f64) -> MagicUnitaryReport {
    let (nr, nc, d) = (u.num_rows(), u.num_cols(), u.dim());
    let identity = CMatrix::identity(d);
    let mut projection: f64 = 0.0;
    let mut worst_block = None;
    for i in 0..nr {
        for j in 0..nc {
            let r = projection_residual(u.block(i, j)).unwrap_or(f64::INFINITY);
            if r > projection || worst_block.is_none() {
                if r > projection {
                    projection = r;
                }
                worst_block = Some((i, j));
            }
        }
    }
    if projection == 0.0 {
        worst_block = None;
    }
    let norms: Vec<f64> = u.blocks().iter().map(CMatrix::max_norm).collect();
    let mut row_sums: f64 = 0.0;
    let mut orthogonality: f64 = 0.0;
    for i in 0..nr {
        let mut acc = CMatrix::zeros(d, d);
        for j in 0..nc {
            acc += u.block(i, j);
        }
        row_sums = row_sums.max((&acc - &identity).max_norm());
        let line: Vec<&CMatrix> = (0..nc).map(|j| u.block(i, j)).collect();
        let ln: Vec<f64> = (0..nc).map(|j| norms[i * nc + j]).collect();
        orthogonality = orthogonality.max(line_orthogonality(&line, &ln, d));
    }
    let mut column_sums: f64 = 0.0;
    for j in 0..nc {
        let mut acc = CMatrix::zeros(d, d);
        for i in 0..nr {
            acc += u.block(i, j);
        }
        column_sums = column_sums.max((&acc - &identity).max_norm());
        let line: Vec<&CMatrix> = (0..nr).map(|i| u.block(i, j)).collect();
        let ln: Vec<f64> = (0..nr).map(|i| norms[i * nc + j]).collect();
        orthogonality = orthogonality.max(line_orthogonality(&line, &ln, d));
    }
    if nr == 0 || nc == 0 {
        row_sums = if nr == 0 { 0.0 } else { 1.0 };
        column_sums = if nc == 0 { 0.0 } else { 1.0 };
    }
    MagicUnitaryReport {
        tol,
        projection,
        worst_projection_block: worst_block,
        row_sums,
        column_sums,
        orthogonality,
    }
}

/// A vertex grid `P_V` over `V1 × V2` and an edge grid `P_E` over `E1 × E2` of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDimRep {
    pub p_v: OperatorMagicUnitary,
    pub p_e: OperatorMagicUnitary,
}

impl FiniteDimRep {
    pub fn new(p_v: OperatorMagicUnitary, p_e: OperatorMagicUnitary) -> Result<Self> {
        if p_v.dim() != p_e.dim() {
            return Err(Error::ShapeMismatch(format!(
                "vertex blocks are {0}x{0}, edge blocks are {1}x{1}",
                p_v.dim(),
                p_e.dim()
            )));
        }
        Ok(Self { p_v, p_e })
    }

    /// The scalar representation of a classical witness.
    pub fn from_pair(pair: &PermutationPair, h1: &Hypergraph, h2: &Hypergraph) -> Result<Self> {
        let p_v = OperatorMagicUnitary::from_permutation(h1.vertices().to_vec(), h2.vertices().to_vec(), &pair.vertex_map)?;
        let p_e = OperatorMagicUnitary::from_permutation(h1.edge_labels().to_vec(), h2.edge_labels().to_vec(), &pair.edge_map)?;
        Self::new(p_v, p_e)
    }

    pub fn dim(&self) -> usize {
        self.p_v.dim()
    }

    fn check_shape(&self, h1: &Hypergraph, h2: &Hypergraph) -> Result<()> {
        let ok = self.p_v.num_rows() == h1.num_vertices()
            && self.p_v.num_cols() == h2.num_vertices()
            && self.p_e.num_rows() == h1.num_edges()
            && self.p_e.num_cols() == h2.num_edges();
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "representation grids are {}x{} and {}x{}, hypergraphs need {}x{} and {}x{}",
                self.p_v.num_rows(),
                self.p_v.num_cols(),
                self.p_e.num_rows(),
                self.p_e.num_cols(),
                h1.num_vertices(),
                h2.num_vertices(),
                h1.num_edges(),
                h2.num_edges()
            )));
        }
        Ok(())
    }
}

/// `‖A_1 P_E − P_V A_2‖_max`, computed with block-matrix products.
pub fn check_intertwining(rep: &FiniteDimRep, h1: &Hypergraph, h2: &Hypergraph) -> Result<f64> {
    rep.check_shape(h1, h2)?;
    let lhs = rep.p_e.left_mul(&h1.incidence_matrix(), h1.vertices().to_vec())?;
    let rhs = rep.p_v.right_mul(&h2.incidence_matrix(), h2.edge_labels().to_vec())?;
    lhs.max_difference(&rhs)
}

/// Worst violation of `Σ_{e1 ∋ v1} p_{e1,e2} = Σ_{v2 ∈ e2} p_{v1,v2}`, summed along member lists.
pub fn fiber_sum_residual(rep: &FiniteDimRep, h1: &Hypergraph, h2: &Hypergraph) -> Result<f64> {
    rep.check_shape(h1, h2)?;
    let (s1, s2) = (h1.structure(), h2.structure());
    let d = rep.dim();
    let containing: Vec<Vec<usize>> = (0..s1.num_vertices())
        .map(|v| (0..s1.num_edges()).filter(|&e| s1.contains(v, e)).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for (v1, edges) in containing.iter().enumerate() {
        for e2 in 0..s2.num_edges() {
            let mut diff = CMatrix::zeros(d, d);
            for &e1 in edges {
                diff += rep.p_e.block(e1, e2);
            }
            for &v2 in s2.members(e2) {
                diff = &diff - rep.p_v.block(v1, v2);
            }
            worst = worst.max(diff.max_norm());
        }
    }
    Ok(worst)
}

/// Worst `‖p_{v1,v2} p_{e1,e2}‖` or `‖p_{e1,e2} p_{v1,v2}‖` over incidence mismatches
/// `(v1 ∈ e1) ≠ (v2 ∈ e2)`.
pub fn incidence_product_residual(rep: &FiniteDimRep, h1: &Hypergraph, h2: &Hypergraph) -> Result<f64> {
    rep.check_shape(h1, h2)?;
    let (s1, s2) = (h1.structure(), h2.structure());
    let d = rep.dim() as f64;
    let vn: Vec<f64> = rep.p_v.blocks().iter().map(CMatrix::max_norm).collect();
    let en: Vec<f64> = rep.p_e.blocks().iter().map(CMatrix::max_norm).collect();
    let (n2, m2) = (s2.num_vertices(), s2.num_edges());
    let mut worst: f64 = 0.0;
    for v1 in 0..s1.num_vertices() {
        for v2 in 0..n2 {
            let a = rep.p_v.block(v1, v2);
            let na = vn[v1 * n2 + v2];
            if na == 0.0 {
                continue;
            }
            for e1 in 0..s1.num_edges() {
                let in1 = s1.contains(v1, e1);
                for e2 in 0..m2 {
                    if in1 == s2.contains(v2, e2) {
                        continue;
                    }
                    if d * na * en[e1 * m2 + e2] <= worst {
                        continue;
                    }
                    let b = rep.p_e.block(e1, e2);
                    worst = worst.max((a * b).max_norm()).max((b * a).max_norm());
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionReport {
    pub tol: f64,
    pub intertwining: f64,
    pub fiber_sums: f64,
    pub vanishing_products: f64,
}

impl InclusionReport {
    /// The three verdicts: intertwining, fiber sums, vanishing products.
    pub fn verdicts(&self) -> (bool, bool, bool) {
        (
            self.intertwining <= self.tol,
            self.fiber_sums <= self.tol,
            self.vanishing_products <= self.tol,
        )
    }

    pub fn all(&self) -> bool {
        let (a, b, c) = self.verdicts();
        a && b && c
    }
}

/// Evaluates the three equivalent ways of saying that `P_V`, `P_E` respect incidence.
pub fn check_inclusion_conditions(rep: &FiniteDimRep, h1: &Hypergraph, h2: &Hypergraph, tol: f64) -> Result<InclusionReport> {
    Ok(InclusionReport {
        tol,
        intertwining: check_intertwining(rep, h1, h2)?,
        fiber_sums: fiber_sum_residual(rep, h1, h2)?,
        vanishing_products: incidence_product_residual(rep, h1, h2)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeReport {
    pub tol: f64,
    /// `‖D_1 P_V − P_V D_2‖_max`.
    pub commutation: f64,
    /// Blocks `(v1, v2)` with `deg v1 ≠ deg v2` and norm above `tol`.
    pub offending: Vec<(usize, usize, f64)>,
}

impl DegreeReport {
    pub fn passed(&self) -> bool {
        self.commutation <= self.tol && self.offending.is_empty()
    }
}

pub fn check_degree_vanishing(rep: &FiniteDimRep, h1: &Hypergraph, h2: &Hypergraph, tol: f64) -> Result<DegreeReport> {
    rep.check_shape(h1, h2)?;
    let deg = |h: &Hypergraph| -> Vec<i64> { h.structure().degrees().into_iter().map(|d| d as i64).collect() };
    let (d1, d2) = (deg(h1), deg(h2));
    let lhs = rep.p_v.left_mul(&IntMatrix::diagonal(&d1), h1.vertices().to_vec())?;
    let rhs = rep.p_v.right_mul(&IntMatrix::diagonal(&d2), h2.vertices().to_vec())?;
    let commutation = lhs.max_difference(&rhs)?;
    let mut offending = Vec::new();
    for (i, &a) in d1.iter().enumerate() {
        for (j, &b) in d2.iter().enumerate() {
            if a != b {
                let n = rep.p_v.block(i, j).max_norm();
                if n > tol {
                    offending.push((i, j, n));
                }
            }
        }
    }
    Ok(DegreeReport {
        tol,
        commutation,
        offending,
    })
}

fn check_graph_grid(u: &OperatorMagicUnitary, g1: &SimpleGraph, g2: &SimpleGraph) -> Result<()> {
    if u.num_rows() != g1.num_vertices() || u.num_cols() != g2.num_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "grid is {}x{}, graphs have {} and {} vertices",
            u.num_rows(),
            u.num_cols(),
            g1.num_vertices(),
            g2.num_vertices()
        )));
    }
    Ok(())
}

/// `‖A^{(g1)} U − U A^{(g2)}‖_max`.
pub fn check_adjacency_intertwining(u: &OperatorMagicUnitary, g1: &SimpleGraph, g2: &SimpleGraph) -> Result<f64> {
    check_graph_grid(u, g1, g2)?;
    let lhs = u.left_mul(&g1.adjacency_matrix(), g1.vertices().to_vec())?;
    let rhs = u.right_mul(&g2.adjacency_matrix(), g2.vertices().to_vec())?;
    lhs.max_difference(&rhs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationViolation {
    pub v1: usize,
    pub w1: usize,
    pub v2: usize,
    pub w2: usize,
    /// Spectral norm of `[u_{v1,v2}, u_{w1,w2}]`.
    pub norm: f64,
}

/// Every `v1 ~ w1` (with `v1 < w1`) and ordered `v2 ~ w2` whose blocks have a
/// commutator of spectral norm above `tol`.
pub fn check_edgewise_commutation(
    u: &OperatorMagicUnitary,
    g1: &SimpleGraph,
    g2: &SimpleGraph,
    tol: f64,
) -> Result<Vec<CommutationViolation>> {
    check_graph_grid(u, g1, g2)?;
    let d = u.dim() as f64;
    let n2 = g2.num_vertices();
    let norms: Vec<f64> = u.blocks().iter().map(CMatrix::max_norm).collect();
    let edges2: Vec<(usize, usize)> = g2
        .edge_list()
        .into_iter()
        .flat_map(|(a, b)| [(a, b), (b, a)])
        .collect();
    let mut out = Vec::new();
    for (v1, w1) in g1.edge_list() {
        for &(v2, w2) in &edges2 {
            // ‖[A,B]‖₂ ≤ 2‖A‖₂‖B‖₂ ≤ 2d²‖A‖max‖B‖max
            if 2.0 * d * d * norms[v1 * n2 + v2] * norms[w1 * n2 + w2] <= tol {
                continue;
            }
            let c = u.block(v1, v2).commutator(u.block(w1, w2));
            if d * c.max_norm() <= tol {
                continue;
            }
            let norm = c.spectral_norm();
            if norm > tol {
                out.push(CommutationViolation { v1, w1, v2, w2, norm });
            }
        }
    }
    Ok(out)
}

/// Edge grid `p_{{v1,w1},{v2,w2}} = u_{v1,v2} u_{w1,w2} + u_{v1,w2} u_{w1,v2}` over the
/// graph edges in [`SimpleGraph::edge_list`] order.
pub fn lift_edge_magic_unitary(u: &OperatorMagicUnitary, g1: &SimpleGraph, g2: &SimpleGraph) -> Result<OperatorMagicUnitary> {
    check_graph_grid(u, g1, g2)?;
    let (e1, e2) = (g1.edge_list(), g2.edge_list());
    let label = |g: &SimpleGraph, (a, b): (usize, usize)| graph_edge_label(&g.vertices()[a], &g.vertices()[b]);
    let rows = e1.iter().map(|&e| label(g1, e)).collect();
    let cols = e2.iter().map(|&e| label(g2, e)).collect();
    OperatorMagicUnitary::from_fn(rows, cols, u.dim(), |i, j| {
        let ((v1, w1), (v2, w2)) = (e1[i], e2[j]);
        &(u.block(v1, v2) * u.block(w1, w2)) + &(u.block(v1, w2) * u.block(w1, v2))
    })
}

/// Projections `e_{x,a}` for every question `x` and answer `a`; `None` marks a zero block.
#[derive(Debug, Clone)]
pub struct PvmFamily {
    questions: Vec<String>,
    answers: Vec<String>,
    dim: usize,
    blocks: Vec<Option<Arc<CMatrix>>>,
}

impl PvmFamily {
    pub fn new(questions: Vec<String>, answers: Vec<String>, dim: usize, blocks: Vec<Option<Arc<CMatrix>>>) -> Result<Self> {
        if blocks.len() != questions.len() * answers.len() {
            return Err(Error::ShapeMismatch("PVM table has the wrong number of entries".into()));
        }
        if blocks.iter().flatten().any(|b| b.rows() != dim || b.cols() != dim) {
            return Err(Error::ShapeMismatch("PVM block of the wrong size".into()));
        }
        Ok(Self {
            questions,
            answers,
            dim,
            blocks,
        })
    }

    pub fn questions(&self) -> &[String] {
        &self.questions
    }

    pub fn answers(&self) -> &[String] {
        &self.answers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, x: usize, a: usize) -> Option<&CMatrix> {
        self.blocks[x * self.answers.len() + a].as_deref()
    }

    /// Shared handle to `e_{x,a}`, so callers can check block reuse.
    pub fn get_shared(&self, x: usize, a: usize) -> Option<&Arc<CMatrix>> {
        self.blocks[x * self.answers.len() + a].as_ref()
    }

    /// Worst `‖Σ_a e_{x,a} − I‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        let id = CMatrix::identity(self.dim);
        (0..self.questions.len())
            .map(|x| {
                let mut acc = CMatrix::zeros(self.dim, self.dim);
                for a in 0..self.answers.len() {
                    if let Some(b) = self.get(x, a) {
                        acc += b;
                    }
                }
                (&acc - &id).max_norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn projection_residual(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .map(|b| projection_residual(b).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.completeness_residual() <= tol && self.projection_residual() <= tol
    }

    fn nonzero_answers(&self) -> Vec<Vec<usize>> {
        (0..self.questions.len())
            .map(|x| (0..self.answers.len()).filter(|&a| self.get(x, a).is_some_and(|b| !b.is_zero())).collect())
            .collect()
    }
}

fn check_rule_grid(grid: &OperatorMagicUnitary, rows: usize, cols: usize, what: &str) -> Result<()> {
    if grid.num_rows() != rows || grid.num_cols() != cols {
        return Err(Error::ShapeMismatch(format!(
            "{what} grid is {}x{}, the game needs {rows}x{cols}",
            grid.num_rows(),
            grid.num_cols()
        )));
    }
    Ok(())
}

fn fill_block(
    blocks: &mut [Option<Arc<CMatrix>>],
    rule: &IsoRule,
    grid: &OperatorMagicUnitary,
    kind: Kind,
) {
    let n = rule.size();
    for i in 0..grid.num_rows() {
        for j in 0..grid.num_cols() {
            let b = Arc::new(grid.block(i, j).clone());
            let x1 = rule.global_index(Side::H1, kind, i);
            let x2 = rule.global_index(Side::H2, kind, j);
            blocks[x1 * n + x2] = Some(Arc::clone(&b));
            blocks[x2 * n + x1] = Some(b);
        }
    }
}

/// PVMs of the isomorphism game read off a representation: `q_{v1,v2} = q_{v2,v1} = p_{v1,v2}`,
/// likewise for edges (the same block is shared by both entries), and zero elsewhere.
pub fn pvm_table_from_rep(rep: &FiniteDimRep, rule: &IsoRule) -> Result<PvmFamily> {
    if !rule.includes_edges() {
        return pvm_table_from_vertex_unitary(&rep.p_v, rule);
    }
    let (s1, s2) = rule.structures();
    check_rule_grid(&rep.p_v, s1.num_vertices(), s2.num_vertices(), "vertex")?;
    check_rule_grid(&rep.p_e, s1.num_edges(), s2.num_edges(), "edge")?;
    let n = rule.size();
    let mut blocks = vec![None; n * n];
    fill_block(&mut blocks, rule, &rep.p_v, Kind::Vertex);
    fill_block(&mut blocks, rule, &rep.p_e, Kind::Edge);
    let labels: Vec<String> = rule.labels().iter().map(ToString::to_string).collect();
    PvmFamily::new(labels.clone(), labels, rep.dim(), blocks)
}

/// The vertex-only table, for the graph isomorphism game.
pub fn pvm_table_from_vertex_unitary(u: &OperatorMagicUnitary, rule: &IsoRule) -> Result<PvmFamily> {
    if rule.includes_edges() {
        return Err(Error::InvalidParameter("edge questions need an edge grid".into()));
    }
    let (s1, s2) = rule.structures();
    check_rule_grid(u, s1.num_vertices(), s2.num_vertices(), "vertex")?;
    let n = rule.size();
    let mut blocks = vec![None; n * n];
    fill_block(&mut blocks, rule, u, Kind::Vertex);
    let labels: Vec<String> = rule.labels().iter().map(ToString::to_string).collect();
    PvmFamily::new(labels.clone(), labels, u.dim(), blocks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicViolation {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
    pub norm: f64,
}

fn check_pvm_against<R: RuleFunction + ?Sized>(pvm: &PvmFamily, game: &R) -> Result<()> {
    let (nx, ny, na, nb) = game.dims();
    let (q, a) = (pvm.questions.len(), pvm.answers.len());
    if nx != q || ny != q || na != a || nb != a {
        return Err(Error::ShapeMismatch(format!(
            "PVM family has {q} questions and {a} answers, game is {nx}x{ny}x{na}x{nb}"
        )));
    }
    Ok(())
}

/// Losing tuples `(x, y, a, b)` with `‖e_{x,a} e_{y,b}‖_max > tol`.
pub fn verify_perfect_algebraic<R: RuleFunction + ?Sized>(pvm: &PvmFamily, game: &R, tol: f64) -> Result<Vec<AlgebraicViolation>> {
    check_pvm_against(pvm, game)?;
    let support = pvm.nonzero_answers();
    let n = pvm.questions.len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            for &a in &support[x] {
                for &b in &support[y] {
                    if game.wins(x, y, a, b) {
                        continue;
                    }
                    let norm = (pvm.get(x, a).unwrap() * pvm.get(y, b).unwrap()).max_norm();
                    if norm > tol {
                        out.push(AlgebraicViolation { x, y, a, b, norm });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `p(a, b | x, y) = Re Tr(e_{x,a} e_{y,b}) / d`.
pub fn correlation_from_rep(pvm: &PvmFamily) -> Result<Correlation> {
    let (n, m) = (pvm.questions.len(), pvm.answers.len());
    let total = n * n * m * m;
    if total > MAX_CORRELATION_ENTRIES {
        return Err(Error::TooLarge(total));
    }
    let support = pvm.nonzero_answers();
    let d = pvm.dim as f64;
    let mut corr = Correlation::zeros(pvm.questions.clone(), pvm.questions.clone(), pvm.answers.clone(), pvm.answers.clone());
    for x in 0..n {
        for y in 0..n {
            for &a in &support[x] {
                for &b in &support[y] {
                    let t: Complex64 = pvm.get(x, a).unwrap().trace_of_product(pvm.get(y, b).unwrap());
                    corr.set(x, y, a, b, t.re / d);
                }
            }
        }
    }
    Ok(corr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{check_ns, is_perfect_strategy};
    use crate::hypergraph::{graph_to_hypergraph, lambda_nk};
    use crate::solver::find_hypergraph_isomorphism;

    fn px_plus() -> CMatrix {
        CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5])
    }

    fn labels(p: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    fn path() -> SimpleGraph {
        SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3")]).unwrap()
    }

    #[test]
    fn projections() {
        assert!(is_projection(&CMatrix::identity(3), 0.0).unwrap());
        assert!(is_projection(&px_plus(), 1e-15).unwrap());
        assert!(!is_projection(&CMatrix::identity(2).scale_real(0.5), 1e-9).unwrap());
        assert!(matches!(
            is_projection(&CMatrix::zeros(2, 3), 1e-9),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn magic_unitary_axioms() {
        let p = OperatorMagicUnitary::from_permutation(labels("r", 3), labels("c", 3), &[2, 0, 1]).unwrap();
        assert!(is_magic_unitary(&p, 0.0).passed());
        let mut broken = p.clone();
        broken.set_block(0, 2, CMatrix::zeros(1, 1)).unwrap();
        let r = is_magic_unitary(&broken, 1e-9);
        assert!(!r.row_sums_ok() && !r.column_sums_ok());
        assert!(r.projections_ok());
        // Two complementary rank-one projections placed in a 2x2 grid.
        let q = &CMatrix::identity(2) - &px_plus();
        let grid = OperatorMagicUnitary::from_grid(
            labels("r", 2),
            labels("c", 2),
            2,
            vec![vec![px_plus(), q.clone()], vec![q, px_plus()]],
        )
        .unwrap();
        assert!(is_magic_unitary(&grid, 1e-12).passed());
        assert!(matches!(
            OperatorMagicUnitary::from_grid(labels("r", 2), labels("c", 2), 1, vec![vec![CMatrix::scalar(1.0)], vec![]]),
            Err(Error::RaggedGrid(_))
        ));
    }

    #[test]
    fn classical_rep_checks() {
        let h = graph_to_hypergraph(&path()).unwrap();
        let pair = find_hypergraph_isomorphism(&h, &h).unwrap();
        let rep = FiniteDimRep::from_pair(&pair, &h, &h).unwrap();
        assert_eq!(check_intertwining(&rep, &h, &h).unwrap(), 0.0);
        assert_eq!(check_inclusion_conditions(&rep, &h, &h, 0.0).unwrap().verdicts(), (true, true, true));
        assert!(check_degree_vanishing(&rep, &h, &h, 0.0).unwrap().passed());
        // edges swapped while vertices stay put
        let mut bad = rep.clone();
        bad.p_e = bad.p_e.permuted(&[1, 0], &[0, 1]);
        assert!(check_intertwining(&bad, &h, &h).unwrap() >= 1.0);
        assert_eq!(check_inclusion_conditions(&bad, &h, &h, 1e-9).unwrap().verdicts(), (false, false, false));
        // vertex map sending the middle vertex to an end
        let mut skew = rep.clone();
        skew.p_v = OperatorMagicUnitary::from_permutation(h.vertices().to_vec(), h.vertices().to_vec(), &[1, 0, 2]).unwrap();
        let report = check_degree_vanishing(&skew, &h, &h, 1e-9).unwrap();
        assert!(!report.passed());
        assert_eq!(report.offending.len(), 2);
    }

    #[test]
    fn perturbed_block_breaks_every_condition() {
        let path_h = graph_to_hypergraph(&path()).unwrap();
        let pair = find_hypergraph_isomorphism(&path_h, &path_h).unwrap();
        let mut rep = FiniteDimRep::from_pair(&pair, &path_h, &path_h).unwrap();
        rep.p_v.set_block(0, 2, CMatrix::scalar(0.1)).unwrap();
        let v = check_inclusion_conditions(&rep, &path_h, &path_h, 1e-9).unwrap().verdicts();
        assert_eq!(v, (false, false, false));
    }

    #[test]
    fn adjacency_and_lift_for_classical_maps() {
        let g = path();
        let u = OperatorMagicUnitary::from_permutation(g.vertices().to_vec(), g.vertices().to_vec(), &[2, 1, 0]).unwrap();
        assert_eq!(check_adjacency_intertwining(&u, &g, &g).unwrap(), 0.0);
        assert!(check_edgewise_commutation(&u, &g, &g, 0.0).unwrap().is_empty());
        let lifted = lift_edge_magic_unitary(&u, &g, &g).unwrap();
        let expected = OperatorMagicUnitary::from_permutation(lifted.rows().to_vec(), lifted.cols().to_vec(), &[1, 0]).unwrap();
        assert_eq!(lifted, expected);
        let wrong = OperatorMagicUnitary::from_permutation(g.vertices().to_vec(), g.vertices().to_vec(), &[1, 0, 2]).unwrap();
        assert!(check_adjacency_intertwining(&wrong, &g, &g).unwrap() >= 1.0);

        let k2 = SimpleGraph::new(["1", "2"], &[("1", "2")]).unwrap();
        let swap = OperatorMagicUnitary::from_permutation(k2.vertices().to_vec(), k2.vertices().to_vec(), &[1, 0]).unwrap();
        let lifted = lift_edge_magic_unitary(&swap, &k2, &k2).unwrap();
        assert_eq!(lifted.block(0, 0), &CMatrix::scalar(1.0));
    }

    #[test]
    fn pvm_tables_and_correlations() {
        let h = lambda_nk(2, 1).unwrap();
        let rule = IsoRule::hypergraph(&h, &h);
        let rep = FiniteDimRep::from_pair(&PermutationPair::identity(2, 1), &h, &h).unwrap();
        let pvm = pvm_table_from_rep(&rep, &rule).unwrap();
        assert!(pvm.is_valid(0.0));
        let (x, a) = (rule.global_index(Side::H1, Kind::Vertex, 1), rule.global_index(Side::H2, Kind::Vertex, 1));
        assert!(Arc::ptr_eq(pvm.get_shared(x, a).unwrap(), pvm.get_shared(a, x).unwrap()));
        assert!(verify_perfect_algebraic(&pvm, &rule, 0.0).unwrap().is_empty());
        let corr = correlation_from_rep(&pvm).unwrap();
        let game = rule.materialize().unwrap();
        assert!(is_perfect_strategy(&game, &corr, 0.0).unwrap().perfect);
        assert!(check_ns(&corr, 1e-12));
        for v in corr.values() {
            assert!(*v == 0.0 || *v == 1.0);
        }
    }

    #[test]
    fn maximally_mixed_marginals() {
        // one question, two answers given by complementary rank-one projections
        let p = px_plus();
        let q = &CMatrix::identity(2) - &p;
        let pvm = PvmFamily::new(labels("x", 1), labels("a", 2), 2, vec![Some(Arc::new(p)), Some(Arc::new(q))]).unwrap();
        let corr = correlation_from_rep(&pvm).unwrap();
        assert!((corr.alice_marginal(0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((corr.get(0, 0, 0, 0) - 0.5).abs() < 1e-15);
        assert!(corr.get(0, 0, 0, 1).abs() < 1e-15);
    }
}
