//! Classical isomorphism search for hypergraphs and simple graphs.
//!
//! The search individualizes one node at a time and refines the colorings of
//! both sides together until every branchable node sits in its own cell. A
//! branch is cut as soon as the two sides disagree on the size of some cell.
//! Hypergraphs are searched through their bipartite incidence graph, branching
//! on vertices only; edges are matched afterwards by member set.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{Correlation, IsoRule, Kind, Side};
use crate::hypergraph::{Hypergraph, IncidenceStructure, SimpleGraph};
use crate::linalg::IntMatrix;

/// Environment variable capping the number of search threads.
pub const THREADS_ENV: &str = "HYPISO_THREADS";

type LabelPairs = Vec<(String, String)>;

/// A vertex bijection `V1 → V2` together with an edge bijection `E1 → E2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermutationPair {
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

impl PermutationPair {
    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            vertex_map: (0..n).collect(),
            edge_map: (0..m).collect(),
        }
    }

    pub fn vertex_matrix(&self) -> IntMatrix {
        IntMatrix::permutation(&self.vertex_map, self.vertex_map.len())
    }

    pub fn edge_matrix(&self) -> IntMatrix {
        IntMatrix::permutation(&self.edge_map, self.edge_map.len())
    }

    /// `(vertex pairs, edge pairs)` as labels.
    pub fn labeled(&self, h1: &Hypergraph, h2: &Hypergraph) -> (LabelPairs, LabelPairs) {
        let v = self
            .vertex_map
            .iter()
            .enumerate()
            .map(|(i, &j)| (h1.vertices()[i].clone(), h2.vertices()[j].clone()))
            .collect();
        let e = self
            .edge_map
            .iter()
            .enumerate()
            .map(|(i, &j)| (h1.edge_labels()[i].clone(), h2.edge_labels()[j].clone()))
            .collect();
        (v, e)
    }
}

fn is_bijection(map: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    map.len() == n && map.iter().all(|&j| j < n && !std::mem::replace(&mut seen[j], true))
}

fn verify_structures(pair: &PermutationPair, s1: &IncidenceStructure, s2: &IncidenceStructure) -> Result<bool> {
    if !is_bijection(&pair.vertex_map, s2.num_vertices()) || s1.num_vertices() != s2.num_vertices() {
        return Err(Error::NotBijective("vertex map".into()));
    }
    if !is_bijection(&pair.edge_map, s2.num_edges()) || s1.num_edges() != s2.num_edges() {
        return Err(Error::NotBijective("edge map".into()));
    }
    let lhs = &*s1.incidence_matrix() * &pair.edge_matrix();
    let rhs = &pair.vertex_matrix() * &*s2.incidence_matrix();
    Ok(lhs == rhs)
}

/// Exact integer check of `A_1 P_E = P_V A_2`.
pub fn verify_intertwiner(pair: &PermutationPair, h1: &Hypergraph, h2: &Hypergraph) -> Result<bool> {
    verify_structures(pair, h1.structure(), h2.structure())
}

/// Exact integer check of `A^{(g1)} P = P A^{(g2)}`.
pub fn verify_graph_isomorphism(map: &[usize], g1: &SimpleGraph, g2: &SimpleGraph) -> Result<bool> {
    if g1.num_vertices() != g2.num_vertices() || !is_bijection(map, g2.num_vertices()) {
        return Err(Error::NotBijective("vertex map".into()));
    }
    let p = IntMatrix::permutation(map, map.len());
    Ok(&g1.adjacency_matrix() * &p == &p * &g2.adjacency_matrix())
}

/// Runs `f` on a pool limited by [`THREADS_ENV`] when that variable is set.
fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok());
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

struct Refiner {
    adj1: Vec<Vec<usize>>,
    adj2: Vec<Vec<usize>>,
    branchable: usize,
}

type Coloring = Vec<usize>;

impl Refiner {
    fn n(&self) -> usize {
        self.adj1.len()
    }

    /// Renumbers keys of both sides jointly; `None` if some class sizes differ.
    fn canonicalize<K: Ord + Clone>(&self, k1: &[K], k2: &[K]) -> Option<(Coloring, Coloring, usize)> {
        let mut all: Vec<&K> = k1.iter().chain(k2).collect();
        all.sort();
        all.dedup();
        let id = |k: &K| all.binary_search(&k).unwrap();
        let c1: Coloring = k1.iter().map(id).collect();
        let c2: Coloring = k2.iter().map(id).collect();
        let mut count = vec![0isize; all.len()];
        for &c in &c1 {
            count[c] += 1;
        }
        for &c in &c2 {
            count[c] -= 1;
        }
        count.iter().all(|&d| d == 0).then_some((c1, c2, all.len()))
    }

    fn refine(&self, mut c1: Coloring, mut c2: Coloring, mut colors: usize) -> Option<(Coloring, Coloring, usize)> {
        loop {
            let sig = |c: &Coloring, adj: &Vec<Vec<usize>>| -> Vec<(usize, Vec<usize>)> {
                adj.iter()
                    .enumerate()
                    .map(|(v, nb)| {
                        let mut s: Vec<usize> = nb.iter().map(|&w| c[w]).collect();
                        s.sort_unstable();
                        (c[v], s)
                    })
                    .collect()
            };
            let (s1, s2) = (sig(&c1, &self.adj1), sig(&c2, &self.adj2));
            let (n1, n2, k) = self.canonicalize(&s1, &s2)?;
            if k == colors {
                return Some((n1, n2, k));
            }
            (c1, c2, colors) = (n1, n2, k);
        }
    }

    /// Smallest non-singleton cell among branchable nodes, lowest color on ties.
    fn target_cell(&self, c1: &Coloring, colors: usize) -> Option<usize> {
        let mut size = vec![0usize; colors];
        for &c in &c1[..self.branchable] {
            size[c] += 1;
        }
        (0..colors).filter(|&c| size[c] > 1).min_by_key(|&c| (size[c], c))
    }

    fn individualize(
        &self,
        c1: &Coloring,
        c2: &Coloring,
        colors: usize,
        u: usize,
        w: usize,
    ) -> Option<(Coloring, Coloring, usize)> {
        let (mut d1, mut d2) = (c1.clone(), c2.clone());
        d1[u] = colors;
        d2[w] = colors;
        self.refine(d1, d2, colors + 1)
    }

    fn search<T, F>(&self, c1: &Coloring, c2: &Coloring, colors: usize, leaf: &F) -> Option<T>
    where
        F: Fn(&Coloring, &Coloring) -> Option<T>,
    {
        let Some(cell) = self.target_cell(c1, colors) else {
            return leaf(c1, c2);
        };
        let u = (0..self.branchable).find(|&v| c1[v] == cell)?;
        (0..self.branchable).filter(|&w| c2[w] == cell).find_map(|w| {
            let (d1, d2, k) = self.individualize(c1, c2, colors, u, w)?;
            self.search(&d1, &d2, k, leaf)
        })
    }

    /// Like [`Refiner::search`], exploring the top-level candidates in parallel;
    /// the first success in candidate order is returned.
    fn run<T, F>(&self, init1: Vec<(usize, usize)>, init2: Vec<(usize, usize)>, leaf: F) -> Option<T>
    where
        T: Send,
        F: Fn(&Coloring, &Coloring) -> Option<T> + Sync,
    {
        debug_assert_eq!(self.adj2.len(), self.n());
        let (c1, c2, k) = self.canonicalize(&init1, &init2)?;
        let (c1, c2, k) = self.refine(c1, c2, k)?;
        let Some(cell) = self.target_cell(&c1, k) else {
            return leaf(&c1, &c2);
        };
        let u = (0..self.branchable).find(|&v| c1[v] == cell)?;
        let candidates: Vec<usize> = (0..self.branchable).filter(|&w| c2[w] == cell).collect();
        with_pool(|| {
            candidates.par_iter().find_map_first(|&w| {
                let (d1, d2, k) = self.individualize(&c1, &c2, k, u, w)?;
                self.search(&d1, &d2, k, &leaf)
            })
        })
    }
}

fn incidence_adjacency(s: &IncidenceStructure) -> Vec<Vec<usize>> {
    let n = s.num_vertices();
    let mut adj = vec![Vec::new(); n + s.num_edges()];
    for e in 0..s.num_edges() {
        for &v in s.members(e) {
            adj[v].push(n + e);
            adj[n + e].push(v);
        }
    }
    adj
}

fn incidence_colors(s: &IncidenceStructure) -> Vec<(usize, usize)> {
    (0..s.num_vertices())
        .map(|v| (0, s.degree(v)))
        .chain((0..s.num_edges()).map(|e| (1, s.members(e).len())))
        .collect()
}

/// Matches each edge of `s1`, in order, with the first unused edge of `s2`
/// whose member set is the image of its own.
fn complete_edge_map(vertex_map: &[usize], s1: &IncidenceStructure, s2: &IncidenceStructure) -> Option<Vec<usize>> {
    let mut used = vec![false; s2.num_edges()];
    (0..s1.num_edges())
        .map(|e| {
            let mut image: Vec<usize> = s1.members(e).iter().map(|&v| vertex_map[v]).collect();
            image.sort_unstable();
            let f = (0..s2.num_edges()).find(|&f| !used[f] && s2.members(f) == image.as_slice())?;
            used[f] = true;
            Some(f)
        })
        .collect()
}

fn find_structure_isomorphism(s1: &IncidenceStructure, s2: &IncidenceStructure) -> Option<PermutationPair> {
    let n = s1.num_vertices();
    if n != s2.num_vertices() || s1.num_edges() != s2.num_edges() {
        return None;
    }
    let refiner = Refiner {
        adj1: incidence_adjacency(s1),
        adj2: incidence_adjacency(s2),
        branchable: n,
    };
    refiner.run(incidence_colors(s1), incidence_colors(s2), |c1, c2| {
        let mut vertex_map = vec![0; n];
        for v in 0..n {
            vertex_map[v] = (0..n).find(|&w| c2[w] == c1[v])?;
        }
        let edge_map = complete_edge_map(&vertex_map, s1, s2)?;
        let pair = PermutationPair { vertex_map, edge_map };
        matches!(verify_structures(&pair, s1, s2), Ok(true)).then_some(pair)
    })
}

/// A witness of `h1 ≅ h2`, or `None` after an exhaustive search.
pub fn find_hypergraph_isomorphism(h1: &Hypergraph, h2: &Hypergraph) -> Option<PermutationPair> {
    find_structure_isomorphism(h1.structure(), h2.structure())
}

/// A vertex bijection intertwining the adjacency matrices, or `None` after an exhaustive search.
pub fn find_graph_isomorphism(g1: &SimpleGraph, g2: &SimpleGraph) -> Option<Vec<usize>> {
    let n = g1.num_vertices();
    if n != g2.num_vertices() || g1.edge_list().len() != g2.edge_list().len() {
        return None;
    }
    let adj = |g: &SimpleGraph| (0..n).map(|v| g.neighbors(v).collect()).collect();
    let refiner = Refiner {
        adj1: adj(g1),
        adj2: adj(g2),
        branchable: n,
    };
    let init = |g: &SimpleGraph| (0..n).map(|v| (0, g.degree(v))).collect();
    refiner.run(init(g1), init(g2), |c1, c2| {
        let mut map = vec![0; n];
        for v in 0..n {
            map[v] = (0..n).find(|&w| c2[w] == c1[v])?;
        }
        matches!(verify_graph_isomorphism(&map, g1, g2), Ok(true)).then_some(map)
    })
}

#[allow(clippy::too_many_arguments)]
fn extend_edge_maps(
    e: usize,
    vertex_map: &[usize],
    s1: &IncidenceStructure,
    s2: &IncidenceStructure,
    used: &mut [bool],
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if e == s1.num_edges() {
        out.push(current.clone());
        return;
    }
    for f in 0..s2.num_edges() {
        if used[f] {
            continue;
        }
        let consistent = (0..s1.num_vertices()).all(|v| s1.contains(v, e) == s2.contains(vertex_map[v], f));
        if consistent {
            used[f] = true;
            current.push(f);
            extend_edge_maps(e + 1, vertex_map, s1, s2, used, current, out, limit);
            current.pop();
            used[f] = false;
        }
    }
}

/// Brute force over all vertex permutations (lexicographic), each extended by
/// every consistent edge bijection; stops after `limit` witnesses.
pub fn enumerate_isomorphisms(h1: &Hypergraph, h2: &Hypergraph, limit: usize) -> Vec<PermutationPair> {
    let (s1, s2) = (h1.structure(), h2.structure());
    let n = s1.num_vertices();
    let mut out = Vec::new();
    if n != s2.num_vertices() || s1.num_edges() != s2.num_edges() {
        return out;
    }
    for vertex_map in (0..n).permutations(n) {
        let mut maps = Vec::new();
        let mut used = vec![false; s2.num_edges()];
        extend_edge_maps(0, &vertex_map, s1, s2, &mut used, &mut Vec::new(), &mut maps, limit - out.len());
        out.extend(maps.into_iter().map(|edge_map| PermutationPair {
            vertex_map: vertex_map.clone(),
            edge_map,
        }));
        if out.len() >= limit {
            break;
        }
    }
    out
}

/// Brute force over all vertex permutations in lexicographic order.
pub fn enumerate_graph_isomorphisms(g1: &SimpleGraph, g2: &SimpleGraph, limit: usize) -> Vec<Vec<usize>> {
    let n = g1.num_vertices();
    if n != g2.num_vertices() {
        return Vec::new();
    }
    (0..n)
        .permutations(n)
        .filter(|p| (0..n).all(|i| (0..n).all(|j| g1.adjacent(i, j) == g2.adjacent(p[i], p[j]))))
        .take(limit)
        .collect()
}

/// Edge bijection of the graph edges induced by a vertex isomorphism, in
/// [`SimpleGraph::edge_list`] order.
pub fn induced_edge_map(map: &[usize], g1: &SimpleGraph, g2: &SimpleGraph) -> Option<Vec<usize>> {
    let edges2 = g2.edge_list();
    g1.edge_list()
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (map[i].min(map[j]), map[i].max(map[j]));
            edges2.iter().position(|&e| e == (a, b))
        })
        .collect()
}

/// Answer function of the classical strategy given by `pair`: a question on
/// one side is answered with its image (or preimage) on the other side.
pub fn answer_map(pair: &PermutationPair, rule: &IsoRule) -> Result<Vec<usize>> {
    let (s1, s2) = rule.structures();
    if rule.includes_edges() {
        if !verify_structures(pair, s1, s2)? {
            return Err(Error::NotIntertwiner);
        }
    } else {
        let adjacency_ok = s1.num_vertices() == s2.num_vertices()
            && is_bijection(&pair.vertex_map, s2.num_vertices())
            && (0..s1.num_vertices()).all(|v| {
                (0..s1.num_vertices()).all(|w| {
                    s1.vertex_relation(v, w) == s2.vertex_relation(pair.vertex_map[v], pair.vertex_map[w])
                })
            });
        if !adjacency_ok {
            return Err(Error::NotIntertwiner);
        }
    }
    let invert = |m: &[usize]| {
        let mut inv = vec![0; m.len()];
        for (i, &j) in m.iter().enumerate() {
            inv[j] = i;
        }
        inv
    };
    let vinv = invert(&pair.vertex_map);
    let mut f = vec![0; rule.size()];
    for (v, &w) in pair.vertex_map.iter().enumerate() {
        f[rule.global_index(Side::H1, Kind::Vertex, v)] = rule.global_index(Side::H2, Kind::Vertex, w);
        f[rule.global_index(Side::H2, Kind::Vertex, w)] = rule.global_index(Side::H1, Kind::Vertex, vinv[w]);
    }
    if rule.includes_edges() {
        let einv = invert(&pair.edge_map);
        for (e, &g) in pair.edge_map.iter().enumerate() {
            f[rule.global_index(Side::H1, Kind::Edge, e)] = rule.global_index(Side::H2, Kind::Edge, g);
            f[rule.global_index(Side::H2, Kind::Edge, g)] = rule.global_index(Side::H1, Kind::Edge, einv[g]);
        }
    }
    Ok(f)
}

/// The deterministic correlation `p(a,b|x,y) = [a = f(x)][b = f(y)]` of [`answer_map`].
pub fn deterministic_strategy(pair: &PermutationPair, rule: &IsoRule) -> Result<Correlation> {
    let f = answer_map(pair, rule)?;
    let labels: Vec<String> = rule.labels().iter().map(ToString::to_string).collect();
    Ok(Correlation::from_fn(
        labels.clone(),
        labels.clone(),
        labels.clone(),
        labels,
        |x, y, a, b| (a == f[x] && b == f[y]) as u8 as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{is_perfect_strategy, NonlocalGame};
    use crate::hypergraph::{graph_to_hypergraph, lambda_nk};

    fn triangle() -> Hypergraph {
        let g = SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap();
        graph_to_hypergraph(&g).unwrap()
    }

    #[test]
    fn identity_is_found_first() {
        let h = triangle();
        let pair = find_hypergraph_isomorphism(&h, &h).unwrap();
        assert_eq!(pair, PermutationPair::identity(3, 3));
        assert!(verify_intertwiner(&pair, &h, &h).unwrap());
    }

    #[test]
    fn swapped_edge_labels() {
        let l = lambda_nk(3, 2).unwrap();
        let mut edges = l.edge_list();
        edges.swap(0, 1);
        let swapped = Hypergraph::new(l.vertices().to_vec(), edges).unwrap();
        let pair = find_hypergraph_isomorphism(&l, &swapped).unwrap();
        assert!(verify_intertwiner(&pair, &l, &swapped).unwrap());
        assert_eq!(enumerate_isomorphisms(&l, &swapped, usize::MAX).len(), 12);
    }

    #[test]
    fn scrambled_edges_fail() {
        let path = SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3")]).unwrap();
        let h = graph_to_hypergraph(&path).unwrap();
        let pair = PermutationPair {
            vertex_map: vec![0, 1, 2],
            edge_map: vec![1, 0],
        };
        assert!(!verify_intertwiner(&pair, &h, &h).unwrap());
        let bad = PermutationPair {
            vertex_map: vec![0, 0, 2],
            edge_map: vec![0, 1],
        };
        assert!(matches!(verify_intertwiner(&bad, &h, &h), Err(Error::NotBijective(_))));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_isomorphisms(&triangle(), &triangle(), usize::MAX).len(), 6);
        let l21 = lambda_nk(2, 1).unwrap();
        assert_eq!(enumerate_isomorphisms(&l21, &l21, usize::MAX).len(), 2);
        assert!(enumerate_isomorphisms(&lambda_nk(2, 2).unwrap(), &l21, usize::MAX).is_empty());
        assert!(find_hypergraph_isomorphism(&lambda_nk(2, 2).unwrap(), &l21).is_none());
        let first = enumerate_isomorphisms(&triangle(), &triangle(), 1);
        assert_eq!(first, vec![PermutationPair::identity(3, 3)]);
    }

    #[test]
    fn graphs() {
        let k3 = SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap();
        assert_eq!(find_graph_isomorphism(&k3, &k3), Some(vec![0, 1, 2]));
        let path = SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3")]).unwrap();
        let star = SimpleGraph::new(["1", "2", "3"], &[("2", "1"), ("2", "3")]).unwrap();
        assert_eq!(find_graph_isomorphism(&path, &star), Some(vec![0, 1, 2]));
        assert!(find_graph_isomorphism(&path, &k3).is_none());
        let shifted = SimpleGraph::new(["1", "2", "3"], &[("1", "3"), ("3", "2")]).unwrap();
        let map = find_graph_isomorphism(&path, &shifted).unwrap();
        assert!(verify_graph_isomorphism(&map, &path, &shifted).unwrap());
        assert_eq!(enumerate_graph_isomorphisms(&k3, &k3, 100).len(), 6);
    }

    #[test]
    fn deterministic_strategies_are_perfect() {
        let l21 = lambda_nk(2, 1).unwrap();
        let rule = IsoRule::hypergraph(&l21, &l21);
        let game: NonlocalGame = rule.materialize().unwrap();
        let id = PermutationPair::identity(2, 1);
        let corr = deterministic_strategy(&id, &rule).unwrap();
        assert!(is_perfect_strategy(&game, &corr, 0.0).unwrap().perfect);
        // question H1:V:1 is answered with H2:V:1
        assert_eq!(corr.get(0, 0, 2, 2), 1.0);
        let swap = PermutationPair {
            vertex_map: vec![1, 0],
            edge_map: vec![0],
        };
        let corr = deterministic_strategy(&swap, &rule).unwrap();
        assert!(is_perfect_strategy(&game, &corr, 0.0).unwrap().perfect);
        assert_eq!(corr.get(0, 1, 3, 2), 1.0);
        let path = graph_to_hypergraph(
            &SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3")]).unwrap(),
        )
        .unwrap();
        let rule = IsoRule::hypergraph(&path, &path);
        let mut bad = PermutationPair::identity(3, 2);
        bad.edge_map = vec![1, 0];
        assert_eq!(deterministic_strategy(&bad, &rule).unwrap_err(), Error::NotIntertwiner);
    }

    #[test]
    fn induced_edges() {
        let path = SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3")]).unwrap();
        assert_eq!(induced_edge_map(&[2, 1, 0], &path, &path), Some(vec![1, 0]));
    }
}
