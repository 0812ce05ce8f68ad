//! Hypergraphs, simple graphs and the constructions built from them.
//!
//! Vertices and edges are identified by string labels and keep the order in
//! which they were supplied, so every matrix derived from a hypergraph has a
//! deterministic row/column order.

use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::IntMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexRelation {
    Equal,
    Adjacent,
    DistinctNonAdjacent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeRelation {
    Equal,
    Intersecting,
    Disjoint,
}

/// Vertex/edge membership data with precomputed relation tables.
///
/// Unlike [`Hypergraph`] this does not require fullness or nonempty edges;
/// it is the common substrate for the isomorphism game rules, which only
/// ever look at membership and the two relation classifiers.
#[derive(Clone, PartialEq)]
pub struct IncidenceStructure {
    vertices: Vec<String>,
    edges: Vec<String>,
    members: Vec<Vec<usize>>,
    member_of: Vec<bool>,
    share_edge: Vec<bool>,
    meets: Vec<bool>,
}

impl IncidenceStructure {
    /// `members[e]` lists the vertex indices of edge `e`; indices must be in range.
    pub fn new(vertices: Vec<String>, edges: Vec<String>, members: Vec<Vec<usize>>) -> Self {
        assert_eq!(edges.len(), members.len());
        let nv = vertices.len();
        let ne = edges.len();
        let mut member_of = vec![false; nv * ne];
        let mut sorted = Vec::with_capacity(ne);
        for (e, m) in members.into_iter().enumerate() {
            let mut m = m;
            m.sort_unstable();
            m.dedup();
            for &v in &m {
                assert!(v < nv, "member index out of range");
                member_of[v * ne + e] = true;
            }
            sorted.push(m);
        }
        let mut share_edge = vec![false; nv * nv];
        for m in &sorted {
            for &v in m {
                for &w in m {
                    share_edge[v * nv + w] = true;
                }
            }
        }
        let mut meets = vec![false; ne * ne];
        for v in 0..nv {
            let containing: Vec<usize> = (0..ne).filter(|&e| member_of[v * ne + e]).collect();
            for &e in &containing {
                for &f in &containing {
                    meets[e * ne + f] = true;
                }
            }
        }
        Self {
            vertices,
            edges,
            members: sorted,
            member_of,
            share_edge,
            meets,
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[String] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted vertex indices of edge `e`.
    pub fn members(&self, e: usize) -> &[usize] {
        &self.members[e]
    }

    pub fn contains(&self, v: usize, e: usize) -> bool {
        self.member_of[v * self.edges.len() + e]
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.edges.len()).filter(|&e| self.contains(v, e)).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.vertices.len()).map(|v| self.degree(v)).collect()
    }

    pub fn vertex_relation(&self, v: usize, w: usize) -> VertexRelation {
        if v == w {
            VertexRelation::Equal
        } else if self.share_edge[v * self.vertices.len() + w] {
            VertexRelation::Adjacent
        } else {
            VertexRelation::DistinctNonAdjacent
        }
    }

    pub fn edge_relation(&self, e: usize, f: usize) -> EdgeRelation {
        if e == f {
            EdgeRelation::Equal
        } else if self.meets[e * self.edges.len() + f] {
            EdgeRelation::Intersecting
        } else {
            EdgeRelation::Disjoint
        }
    }

    /// The `V×E` 0/1 matrix of the membership relation.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let ne = self.edges.len();
        let mut m = IntMatrix::zeros(self.vertices.len(), ne);
        for (e, members) in self.members.iter().enumerate() {
            for &v in members {
                m[(v, e)] = 1;
            }
        }
        IncidenceMatrix(m)
    }
}

impl fmt::Debug for IncidenceStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IncidenceStructure")
            .field("vertices", &self.vertices)
            .field("edges", &self.edges)
            .field("members", &self.members)
            .finish()
    }
}

/// Vertex × edge membership matrix (entry 1 iff the vertex lies in the edge).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix(IntMatrix);

impl IncidenceMatrix {
    pub fn into_inner(self) -> IntMatrix {
        self.0
    }
}

impl Deref for IncidenceMatrix {
    type Target = IntMatrix;
    fn deref(&self) -> &IntMatrix {
        &self.0
    }
}

/// A full hypergraph with labeled vertices and an indexed family of labeled edges.
///
/// Distinct edge labels may carry identical member sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    structure: IncidenceStructure,
    member_order: Vec<Vec<usize>>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl Hypergraph {
    /// Validates labels, members and fullness.
    pub fn new<V, E, M>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, M)>,
        M: IntoIterator,
        M::Item: Into<String>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.clone()));
            }
        }
        let mut edge_labels = Vec::new();
        let mut edge_index = HashMap::new();
        let mut member_order = Vec::new();
        for (label, members) in edges {
            if edge_index.insert(label.clone(), edge_labels.len()).is_some() {
                return Err(Error::DuplicateEdge(label));
            }
            let mut seen = vec![false; vertices.len()];
            let mut idx = Vec::new();
            for m in members {
                let m: String = m.into();
                let &v = vertex_index.get(&m).ok_or_else(|| Error::UnknownMember {
                    edge: label.clone(),
                    vertex: m.clone(),
                })?;
                if seen[v] {
                    return Err(Error::RepeatedMember { edge: label, vertex: m });
                }
                seen[v] = true;
                idx.push(v);
            }
            if idx.is_empty() {
                return Err(Error::EmptyEdge(label));
            }
            edge_labels.push(label);
            member_order.push(idx);
        }
        if edge_labels.is_empty() {
            return Err(Error::NoEdges);
        }
        let mut covered = vec![false; vertices.len()];
        for m in &member_order {
            for &v in m {
                covered[v] = true;
            }
        }
        let uncovered: Vec<String> = vertices
            .iter()
            .zip(&covered)
            .filter(|(_, &c)| !c)
            .map(|(v, _)| v.clone())
            .collect();
        if !uncovered.is_empty() {
            return Err(Error::NotFull(uncovered));
        }
        let structure = IncidenceStructure::new(vertices, edge_labels, member_order.clone());
        Ok(Self {
            structure,
            member_order,
            vertex_index,
            edge_index,
        })
    }

    pub fn structure(&self) -> &IncidenceStructure {
        &self.structure
    }

    pub fn vertices(&self) -> &[String] {
        self.structure.vertices()
    }

    pub fn edge_labels(&self) -> &[String] {
        self.structure.edges()
    }

    pub fn num_vertices(&self) -> usize {
        self.structure.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.structure.num_edges()
    }

    /// Members of edge `e` in the order they were supplied.
    pub fn edge_members(&self, e: usize) -> impl Iterator<Item = &str> {
        self.member_order[e]
            .iter()
            .map(move |&v| self.structure.vertices[v].as_str())
    }

    pub fn vertex_index(&self, label: &str) -> Result<usize> {
        self.vertex_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn edge_index(&self, label: &str) -> Result<usize> {
        self.edge_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(label.to_string()))
    }

    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        self.structure.incidence_matrix()
    }

    /// Number of edges containing `v`.
    pub fn degree(&self, v: &str) -> Result<usize> {
        Ok(self.structure.degree(self.vertex_index(v)?))
    }

    pub fn vertex_relation(&self, v: &str, w: &str) -> Result<VertexRelation> {
        Ok(self
            .structure
            .vertex_relation(self.vertex_index(v)?, self.vertex_index(w)?))
    }

    pub fn edge_relation(&self, e: &str, f: &str) -> Result<EdgeRelation> {
        Ok(self
            .structure
            .edge_relation(self.edge_index(e)?, self.edge_index(f)?))
    }

    /// Edges as `(label, members)` pairs, members in supplied order.
    pub fn edge_list(&self) -> Vec<(String, Vec<String>)> {
        (0..self.num_edges())
            .map(|e| {
                (
                    self.structure.edges[e].clone(),
                    self.edge_members(e).map(str::to_string).collect(),
                )
            })
            .collect()
    }

    /// Rebuilds a hypergraph from its incidence matrix and label lists.
    pub fn from_incidence(
        vertices: &[String],
        edges: &[String],
        incidence: &IntMatrix,
    ) -> Result<Self> {
        if incidence.rows() != vertices.len() || incidence.cols() != edges.len() {
            return Err(Error::ShapeMismatch(format!(
                "incidence matrix is {}x{}, labels are {}x{}",
                incidence.rows(),
                incidence.cols(),
                vertices.len(),
                edges.len()
            )));
        }
        let edge_list = edges.iter().enumerate().map(|(e, label)| {
            let members: Vec<String> = (0..vertices.len())
                .filter(|&v| incidence[(v, e)] != 0)
                .map(|v| vertices[v].clone())
                .collect();
            (label.clone(), members)
        });
        Self::new(vertices.iter().cloned(), edge_list)
    }
}

/// Finite simple graph: symmetric 0/1 adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleGraph {
    vertices: Vec<String>,
    vertex_index: HashMap<String, usize>,
    adjacency: Vec<bool>,
}

impl SimpleGraph {
    pub fn new<V, S>(vertices: V, edges: &[(S, S)]) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        S: AsRef<str>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.clone()));
            }
        }
        let n = vertices.len();
        let mut adjacency = vec![false; n * n];
        for (u, v) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            let i = *vertex_index
                .get(u)
                .ok_or_else(|| Error::UnknownVertex(u.to_string()))?;
            let j = *vertex_index
                .get(v)
                .ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
            if i == j {
                return Err(Error::SelfLoop(u.to_string()));
            }
            adjacency[i * n + j] = true;
            adjacency[j * n + i] = true;
        }
        Ok(Self {
            vertices,
            vertex_index,
            adjacency,
        })
    }

    pub fn from_adjacency<V>(vertices: V, adjacency: &IntMatrix) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let n = vertices.len();
        if adjacency.rows() != n || adjacency.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "adjacency is {}x{} for {} vertices",
                adjacency.rows(),
                adjacency.cols(),
                n
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a != adjacency[(j, i)] || !(a == 0 || a == 1) || (i == j && a != 0) {
                    return Err(Error::BadAdjacency(i, j));
                }
                if i < j && a == 1 {
                    edges.push((vertices[i].clone(), vertices[j].clone()));
                }
            }
        }
        Self::new(vertices, &edges)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_index(&self, label: &str) -> Result<usize> {
        self.vertex_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.vertices.len() + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(move |&j| self.adjacent(i, j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Edges as index pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let n = self.vertices.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.adjacent(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn adjacency_matrix(&self) -> IntMatrix {
        let n = self.vertices.len();
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if self.adjacent(i, j) {
                    m[(i, j)] = 1;
                }
            }
        }
        m
    }

    pub fn degree_matrix(&self) -> IntMatrix {
        let degrees: Vec<i64> = (0..self.num_vertices()).map(|i| self.degree(i) as i64).collect();
        IntMatrix::diagonal(&degrees)
    }

    /// Vertex × edge incidence over [`SimpleGraph::edge_list`]; isolated vertices allowed.
    pub fn incidence_matrix(&self) -> IntMatrix {
        let edges = self.edge_list();
        let mut m = IntMatrix::zeros(self.num_vertices(), edges.len());
        for (e, &(i, j)) in edges.iter().enumerate() {
            m[(i, e)] = 1;
            m[(j, e)] = 1;
        }
        m
    }

    /// Vertices plus two-element edges, labeled as in [`graph_to_hypergraph`].
    pub fn incidence_structure(&self) -> IncidenceStructure {
        let edges = self.edge_list();
        let labels = edges
            .iter()
            .map(|&(i, j)| graph_edge_label(&self.vertices[i], &self.vertices[j]))
            .collect();
        let members = edges.iter().map(|&(i, j)| vec![i, j]).collect();
        IncidenceStructure::new(self.vertices.clone(), labels, members)
    }

    pub fn isolated_vertex(&self) -> Option<&str> {
        (0..self.num_vertices())
            .find(|&i| self.degree(i) == 0)
            .map(|i| self.vertices[i].as_str())
    }
}

/// Label given to the edge `{u, v}` when a graph is viewed as a hypergraph.
pub fn graph_edge_label(u: &str, v: &str) -> String {
    format!("{{{u},{v}}}")
}

/// The graph as a hypergraph whose edges are the two-element sets `{u, v}`, `u ~ v`.
pub fn graph_to_hypergraph(g: &SimpleGraph) -> Result<Hypergraph> {
    if let Some(v) = g.isolated_vertex() {
        return Err(Error::IsolatedVertex(v.to_string()));
    }
    let edges = g.edge_list().into_iter().map(|(i, j)| {
        let (u, v) = (&g.vertices[i], &g.vertices[j]);
        (graph_edge_label(u, v), vec![u.clone(), v.clone()])
    });
    Hypergraph::new(g.vertices.iter().cloned(), edges)
}

/// One edge `N(x) = {x' : x' ~ x}` per vertex `x`, labeled by `x`.
pub fn neighborhood_hypergraph(g: &SimpleGraph) -> Result<Hypergraph> {
    if let Some(v) = g.isolated_vertex() {
        return Err(Error::IsolatedVertex(v.to_string()));
    }
    let edges = (0..g.num_vertices()).map(|x| {
        let members: Vec<String> = g.neighbors(x).map(|y| g.vertices[y].clone()).collect();
        (g.vertices[x].clone(), members)
    });
    Hypergraph::new(g.vertices.iter().cloned(), edges)
}

/// Permutation matrix `C` of `x ↦ N(x)` against the edge order of [`neighborhood_hypergraph`].
///
/// With that edge order `C` is the identity.
pub fn neighborhood_edge_bijection(g: &SimpleGraph) -> Result<IntMatrix> {
    let h = neighborhood_hypergraph(g)?;
    neighborhood_edge_bijection_for(g, &h)
}

/// Permutation matrix `C` (`V×E`) of `x ↦ N(x)` against the edge order of `h`,
/// which must be a neighborhood hypergraph of `g` with edges labeled by vertex.
pub fn neighborhood_edge_bijection_for(g: &SimpleGraph, h: &Hypergraph) -> Result<IntMatrix> {
    if h.vertices() != g.vertices() || h.num_edges() != g.num_vertices() {
        return Err(Error::ShapeMismatch(
            "hypergraph is not a neighborhood hypergraph of the graph".into(),
        ));
    }
    let n = g.num_vertices();
    let mut c = IntMatrix::zeros(n, n);
    for e in 0..h.num_edges() {
        let label = &h.edge_labels()[e];
        let x = g.vertex_index(label)?;
        let expected: Vec<usize> = g.neighbors(x).collect();
        if h.structure().members(e) != expected.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "edge `{label}` is not the neighborhood of vertex `{label}`"
            )));
        }
        c[(x, e)] = 1;
    }
    Ok(c)
}

/// `k` identically-membered edges, each the full vertex set `{1, …, n}`.
pub fn lambda_nk(n: usize, k: usize) -> Result<Hypergraph> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "lambda_nk needs n, k >= 1 (got n={n}, k={k})"
        )));
    }
    let vertices: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let edges = (1..=k).map(|j| (format!("e{j}"), vertices.clone()));
    Hypergraph::new(vertices.clone(), edges)
}

/// `A·Aᵀ − (A_adj + D)` over the integers; the zero matrix for every simple graph.
pub fn check_graph_identity(g: &SimpleGraph) -> IntMatrix {
    let a = g.incidence_matrix();
    let gram = &a * &a.transpose();
    let rhs = &g.adjacency_matrix() + &g.degree_matrix();
    &gram - &rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triangle() -> SimpleGraph {
        SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap()
    }

    fn path3() -> SimpleGraph {
        SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3")]).unwrap()
    }

    #[test]
    fn triangle_incidence_has_two_ones_per_column() {
        let h = graph_to_hypergraph(&triangle()).unwrap();
        let a = h.incidence_matrix();
        assert_eq!((a.rows(), a.cols()), (3, 3));
        for e in 0..3 {
            assert_eq!(a.column(e).iter().sum::<i64>(), 2);
        }
        for v in ["1", "2", "3"] {
            assert_eq!(h.degree(v).unwrap(), 2);
        }
    }

    #[test]
    fn lambda_nk_shapes() {
        let l21 = lambda_nk(2, 1).unwrap();
        assert_eq!(l21.incidence_matrix().to_rows(), vec![vec![1], vec![1]]);
        let l32 = lambda_nk(3, 2).unwrap();
        assert_eq!(l32.incidence_matrix().to_rows(), vec![vec![1, 1]; 3]);
        for v in l32.vertices() {
            assert_eq!(l32.degree(v).unwrap(), 2);
        }
        assert!(matches!(lambda_nk(0, 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(lambda_nk(2, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn relations_on_lambda_and_path() {
        let l32 = lambda_nk(3, 2).unwrap();
        assert_eq!(l32.vertex_relation("1", "1").unwrap(), VertexRelation::Equal);
        assert_eq!(l32.vertex_relation("1", "3").unwrap(), VertexRelation::Adjacent);
        assert_eq!(l32.edge_relation("e1", "e2").unwrap(), EdgeRelation::Intersecting);
        assert_eq!(l32.edge_relation("e2", "e2").unwrap(), EdgeRelation::Equal);
        let p = graph_to_hypergraph(&path3()).unwrap();
        assert_eq!(
            p.vertex_relation("1", "3").unwrap(),
            VertexRelation::DistinctNonAdjacent
        );
        assert_eq!(p.edge_relation("{1,2}", "{2,3}").unwrap(), EdgeRelation::Intersecting);
        assert!(matches!(p.vertex_relation("1", "9"), Err(Error::UnknownVertex(_))));
        assert!(matches!(p.edge_relation("{1,3}", "{1,2}"), Err(Error::UnknownEdge(_))));
    }

    #[test]
    fn construction_errors() {
        let e = |l: &str, m: &[&str]| (l.to_string(), m.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        assert_eq!(
            Hypergraph::new(["a", "a"], vec![e("x", &["a"])]).unwrap_err(),
            Error::DuplicateVertex("a".into())
        );
        assert_eq!(
            Hypergraph::new(["a", "b"], vec![e("x", &["a", "b"]), e("x", &["a"])]).unwrap_err(),
            Error::DuplicateEdge("x".into())
        );
        assert_eq!(
            Hypergraph::new(["a", "b"], vec![e("x", &["a", "b"]), e("y", &[])]).unwrap_err(),
            Error::EmptyEdge("y".into())
        );
        assert_eq!(
            Hypergraph::new(["a", "b"], vec![e("x", &["a"])]).unwrap_err(),
            Error::NotFull(vec!["b".into()])
        );
        assert!(matches!(
            Hypergraph::new(["a"], vec![e("x", &["c"])]),
            Err(Error::UnknownMember { .. })
        ));
        assert!(matches!(
            Hypergraph::new(["a"], vec![e("x", &["a", "a"])]),
            Err(Error::RepeatedMember { .. })
        ));
        assert_eq!(
            Hypergraph::new(["a"], Vec::<(String, Vec<String>)>::new()).unwrap_err(),
            Error::NoEdges
        );
    }

    #[test]
    fn repeated_subsets_are_allowed() {
        let h = lambda_nk(2, 3).unwrap();
        assert_eq!(h.num_edges(), 3);
    }

    #[test]
    fn neighborhoods() {
        let k3 = neighborhood_hypergraph(&triangle()).unwrap();
        let lists: Vec<_> = k3.edge_list();
        assert_eq!(
            lists,
            vec![
                ("1".to_string(), vec!["2".to_string(), "3".to_string()]),
                ("2".to_string(), vec!["1".to_string(), "3".to_string()]),
                ("3".to_string(), vec!["1".to_string(), "2".to_string()]),
            ]
        );
        let p = neighborhood_hypergraph(&path3()).unwrap();
        let members: Vec<Vec<String>> = p.edge_list().into_iter().map(|(_, m)| m).collect();
        assert_eq!(members, vec![vec!["2"], vec!["1", "3"], vec!["2"]]);
        let k2 = SimpleGraph::new(["1", "2"], &[("1", "2")]).unwrap();
        let n2 = neighborhood_hypergraph(&k2).unwrap();
        let members: Vec<Vec<String>> = n2.edge_list().into_iter().map(|(_, m)| m).collect();
        assert_eq!(members, vec![vec!["2"], vec!["1"]]);
        let lonely = SimpleGraph::new(["1", "2", "3"], &[("1", "2")]).unwrap();
        assert_eq!(
            neighborhood_hypergraph(&lonely).unwrap_err(),
            Error::IsolatedVertex("3".into())
        );
        assert!(graph_to_hypergraph(&lonely).is_err());
    }

    #[test]
    fn neighborhood_bijection_identity_and_reversal() {
        let g = triangle();
        assert_eq!(neighborhood_edge_bijection(&g).unwrap(), IntMatrix::identity(3));
        let n = neighborhood_hypergraph(&g).unwrap();
        let mut edges = n.edge_list();
        edges.reverse();
        let reversed = Hypergraph::new(n.vertices().to_vec(), edges).unwrap();
        let c = neighborhood_edge_bijection_for(&g, &reversed).unwrap();
        assert_eq!(c.to_rows(), vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
        assert_eq!(*reversed.incidence_matrix(), &g.adjacency_matrix() * &c);
    }

    #[test]
    fn graph_identity_vanishes() {
        assert!(check_graph_identity(&triangle()).is_zero());
        let k2 = SimpleGraph::new(["a", "b"], &[("a", "b")]).unwrap();
        assert!(check_graph_identity(&k2).is_zero());
    }

    #[test]
    fn adjacency_validation() {
        let bad = IntMatrix::from_rows(&[vec![0, 1], vec![0, 0]]);
        assert!(matches!(
            SimpleGraph::from_adjacency(["a", "b"], &bad),
            Err(Error::BadAdjacency(..))
        ));
        let good = triangle().adjacency_matrix();
        assert_eq!(SimpleGraph::from_adjacency(["1", "2", "3"], &good).unwrap(), triangle());
        assert!(matches!(
            SimpleGraph::new(["a"], &[("a", "a")]),
            Err(Error::SelfLoop(_))
        ));
    }

    #[test]
    fn round_trip_through_incidence() {
        let h = graph_to_hypergraph(&path3()).unwrap();
        let back =
            Hypergraph::from_incidence(h.vertices(), h.edge_labels(), &h.incidence_matrix()).unwrap();
        assert_eq!(back, h);
    }
}
