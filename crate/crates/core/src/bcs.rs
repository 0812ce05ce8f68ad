//! Binary constraint systems, their conflict graphs, and the magic-square strategy.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hypergraph::{neighborhood_edge_bijection_for, neighborhood_hypergraph, Hypergraph, SimpleGraph};
use crate::linalg::CMatrix;
use crate::operator::{FiniteDimRep, OperatorMagicUnitary};

/// Parity constraint `⊕_{i ∈ support} x_i = parity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub support: Vec<usize>,
    pub parity: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BcsSystem {
    num_vars: usize,
    constraints: Vec<Constraint>,
}

impl BcsSystem {
    /// Constraints are named `c1, c2, …`.
    pub fn new(num_vars: usize, constraints: Vec<(Vec<usize>, u8)>) -> Result<Self> {
        let named = constraints
            .into_iter()
            .enumerate()
            .map(|(i, (support, parity))| Constraint {
                name: format!("c{}", i + 1),
                support,
                parity,
            })
            .collect();
        Self::with_constraints(num_vars, named)
    }

    pub fn with_constraints(num_vars: usize, constraints: Vec<Constraint>) -> Result<Self> {
        for c in &constraints {
            if c.support.is_empty() {
                return Err(Error::InvalidParameter(format!("constraint {} has empty support", c.name)));
            }
            if let Some(&i) = c.support.iter().find(|&&i| i >= num_vars) {
                return Err(Error::InvalidParameter(format!(
                    "constraint {} uses variable {i} of {num_vars}",
                    c.name
                )));
            }
            let mut s = c.support.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != c.support.len() {
                return Err(Error::InvalidParameter(format!("constraint {} repeats a variable", c.name)));
            }
            if c.parity > 1 {
                return Err(Error::InvalidParameter(format!("constraint {} has parity {}", c.name, c.parity)));
            }
        }
        Ok(Self { num_vars, constraints })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn parities(&self) -> Vec<u8> {
        self.constraints.iter().map(|c| c.parity).collect()
    }
}

/// A satisfying assignment of one constraint; `bits[k]` is the value of `support[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SatAssignment {
    pub constraint: usize,
    pub bits: Vec<u8>,
}

impl SatAssignment {
    /// `name:bits`, e.g. `R1:011`.
    pub fn label(&self, sys: &BcsSystem) -> String {
        let bits: String = self.bits.iter().map(|b| char::from(b'0' + b)).collect();
        format!("{}:{bits}", sys.constraints[self.constraint].name)
    }
}

/// All assignments of the support with the right parity, in lexicographic order.
pub fn enumerate_sat(sys: &BcsSystem, constraint: usize) -> Result<Vec<SatAssignment>> {
    let c = sys
        .constraints
        .get(constraint)
        .ok_or_else(|| Error::InvalidParameter(format!("no constraint {constraint}")))?;
    let k = c.support.len();
    if k >= usize::BITS as usize {
        return Err(Error::TooLarge(k));
    }
    Ok((0..1usize << k)
        .map(|m| (0..k).map(|i| ((m >> (k - 1 - i)) & 1) as u8).collect::<Vec<u8>>())
        .filter(|bits| bits.iter().fold(0, |acc, b| acc ^ b) == c.parity)
        .map(|bits| SatAssignment { constraint, bits })
        .collect())
}

pub fn homogenize(sys: &BcsSystem) -> BcsSystem {
    BcsSystem {
        num_vars: sys.num_vars,
        constraints: sys
            .constraints
            .iter()
            .map(|c| Constraint { parity: 0, ..c.clone() })
            .collect(),
    }
}

/// All satisfying assignments, constraints in order.
pub fn all_assignments(sys: &BcsSystem) -> Result<Vec<SatAssignment>> {
    let mut out = Vec::new();
    for l in 0..sys.constraints.len() {
        out.extend(enumerate_sat(sys, l)?);
    }
    Ok(out)
}

fn conflict(sys: &BcsSystem, s: &SatAssignment, t: &SatAssignment) -> bool {
    let (cs, ct) = (&sys.constraints[s.constraint], &sys.constraints[t.constraint]);
    cs.support.iter().zip(&s.bits).any(|(v, b)| {
        ct.support
            .iter()
            .position(|w| w == v)
            .is_some_and(|k| t.bits[k] != *b)
    })
}

/// Vertices are the satisfying assignments; two are adjacent when they give a
/// shared variable different values.
pub fn bcs_graph(sys: &BcsSystem) -> Result<SimpleGraph> {
    let verts = all_assignments(sys)?;
    let labels: Vec<String> = verts.iter().map(|s| s.label(sys)).collect();
    let mut edges = Vec::new();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            if conflict(sys, &verts[i], &verts[j]) {
                edges.push((labels[i].clone(), labels[j].clone()));
            }
        }
    }
    SimpleGraph::new(labels, &edges)
}

/// Variable index of the grid cell `x_{rc}` (1-based row and column).
pub fn magic_square_var(r: usize, c: usize) -> usize {
    (r - 1) * 3 + (c - 1)
}

/// Rows `R1..R3` with parity 0, columns `C1, C2` with parity 0 and `C3` with parity 1.
pub fn magic_square_bcs() -> BcsSystem {
    let mut constraints = Vec::with_capacity(6);
    for r in 1..=3 {
        constraints.push(Constraint {
            name: format!("R{r}"),
            support: (1..=3).map(|c| magic_square_var(r, c)).collect(),
            parity: 0,
        });
    }
    for c in 1..=3 {
        constraints.push(Constraint {
            name: format!("C{c}"),
            support: (1..=3).map(|r| magic_square_var(r, c)).collect(),
            parity: (c == 3) as u8,
        });
    }
    BcsSystem::with_constraints(9, constraints).expect("magic square system is well formed")
}

/// `(G(M, b), G(M, 0))`.
pub fn magic_square_graphs() -> Result<(SimpleGraph, SimpleGraph)> {
    let sys = magic_square_bcs();
    Ok((bcs_graph(&sys)?, bcs_graph(&homogenize(&sys))?))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn pauli_y() -> CMatrix {
    let i = Complex64::new(0.0, 1.0);
    CMatrix::from_vec(2, 2, vec![Complex64::new(0.0, 0.0), -i, i, Complex64::new(0.0, 0.0)])
}

/// `(I ± A)/2` for a `±1`-valued observable `A`.
pub fn eigenprojector(a: &CMatrix, sign: f64) -> CMatrix {
    (&CMatrix::identity(a.rows()) + &a.scale_real(sign)).scale_real(0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliProjectors {
    pub x_plus: CMatrix,
    pub x_minus: CMatrix,
    pub z_plus: CMatrix,
    pub z_minus: CMatrix,
}

pub fn pauli_projectors() -> PauliProjectors {
    PauliProjectors {
        x_plus: eigenprojector(&pauli_x(), 1.0),
        x_minus: eigenprojector(&pauli_x(), -1.0),
        z_plus: eigenprojector(&pauli_z(), 1.0),
        z_minus: eigenprojector(&pauli_z(), -1.0),
    }
}

/// A 3×3 grid of two-qubit observables.
#[derive(Debug, Clone, PartialEq)]
pub struct MagicSquareSquare {
    entries: Vec<CMatrix>,
}

impl MagicSquareSquare {
    /// `r`, `c` are 0-based.
    pub fn entry(&self, r: usize, c: usize) -> &CMatrix {
        &self.entries[r * 3 + c]
    }

    /// Observable attached to variable `i` of the magic-square system.
    pub fn observable(&self, var: usize) -> &CMatrix {
        &self.entries[var]
    }

    /// Selfadjoint involutions, pairwise commuting along rows and columns, with
    /// row products `+I` and column products `+I, +I, −I`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let id = CMatrix::identity(4);
        for (k, o) in self.entries.iter().enumerate() {
            if (o - &o.adjoint()).max_norm() > tol || (&(o * o) - &id).max_norm() > tol {
                return Err(Error::Invariant(format!("entry {k} is not a selfadjoint involution")));
            }
        }
        let lines = (0..3)
            .map(|r| ([r * 3, r * 3 + 1, r * 3 + 2], 1.0, format!("row {}", r + 1)))
            .chain((0..3).map(|c| ([c, 3 + c, 6 + c], if c == 2 { -1.0 } else { 1.0 }, format!("column {}", c + 1))));
        for (cells, sign, name) in lines {
            let [a, b, c] = cells.map(|i| &self.entries[i]);
            for (p, q) in [(a, b), (a, c), (b, c)] {
                if p.commutator(q).max_norm() > tol {
                    return Err(Error::Invariant(format!("{name} has noncommuting entries")));
                }
            }
            if (&(&(a * b) * c) - &id.scale_real(sign)).max_norm() > tol {
                return Err(Error::Invariant(format!("{name} has the wrong product")));
            }
        }
        Ok(())
    }
}

/// Rows `X⊗I, I⊗X, X⊗X`; `I⊗Z, Z⊗I, Z⊗Z`; `X⊗Z, Z⊗X, Y⊗Y`, validated before return.
pub fn magic_square_observables() -> Result<MagicSquareSquare> {
    let (i, x, y, z) = (CMatrix::identity(2), pauli_x(), pauli_y(), pauli_z());
    let entries = vec![
        x.kron(&i),
        i.kron(&x),
        x.kron(&x),
        i.kron(&z),
        z.kron(&i),
        z.kron(&z),
        x.kron(&z),
        z.kron(&x),
        y.kron(&y),
    ];
    let square = MagicSquareSquare { entries };
    square.check(1e-12)?;
    Ok(square)
}

/// `F^{(a)} = Π_k P^{(a_k)}(O_{support[k]})` where bit 0 selects the `+1` eigenspace.
pub fn outcome_projector(square: &MagicSquareSquare, support: &[usize], bits: &[u8]) -> CMatrix {
    support.iter().zip(bits).fold(CMatrix::identity(4), |acc, (&v, &b)| {
        let sign = if b == 0 { 1.0 } else { -1.0 };
        &acc * &eigenprojector(square.observable(v), sign)
    })
}

/// The measurement `{F_ℓ^{(a)}}` over the satisfying assignments of constraint `ℓ`
/// of a system on the nine magic-square variables.
pub fn constraint_pvm(square: &MagicSquareSquare, sys: &BcsSystem, constraint: usize) -> Result<Vec<(SatAssignment, CMatrix)>> {
    if sys.num_vars() != 9 {
        return Err(Error::InvalidParameter("the square provides observables for nine variables".into()));
    }
    let sat = enumerate_sat(sys, constraint)?;
    let support = &sys.constraints()[constraint].support;
    Ok(sat
        .into_iter()
        .map(|s| {
            let f = outcome_projector(square, support, &s.bits);
            (s, f)
        })
        .collect())
}

/// `u_{(ℓ,f),(ℓ',g)} = δ_{ℓℓ'} F_ℓ^{(f⊕g)}` over `V(G(M,b)) × V(G(M,0))`.
pub fn magic_square_strategy() -> Result<OperatorMagicUnitary> {
    let sys = magic_square_bcs();
    let hom = homogenize(&sys);
    let square = magic_square_observables()?;
    let rows = all_assignments(&sys)?;
    let cols = all_assignments(&hom)?;
    let row_labels = rows.iter().map(|s| s.label(&sys)).collect();
    let col_labels = cols.iter().map(|s| s.label(&hom)).collect();
    OperatorMagicUnitary::from_fn(row_labels, col_labels, 4, |i, j| {
        let (f, g) = (&rows[i], &cols[j]);
        if f.constraint != g.constraint {
            return CMatrix::zeros(4, 4);
        }
        let bits: Vec<u8> = f.bits.iter().zip(&g.bits).map(|(a, b)| a ^ b).collect();
        outcome_projector(&square, &sys.constraints()[f.constraint].support, &bits)
    })
}

/// Vertex labels `((v1, v2), (w1, w2))` of two adjacent pairs whose strategy blocks do not commute.
pub fn noncommuting_witness() -> ((String, String), (String, String)) {
    let v = "R1:000".to_string();
    let w = "C1:110".to_string();
    ((v.clone(), v), (w.clone(), w))
}

/// `(N(g1), N(g2), rep)` with `P_V' = U` and `P_E' = C_1ᵀ U C_2`.
pub fn neighborhood_pullback(
    u: &OperatorMagicUnitary,
    g1: &SimpleGraph,
    g2: &SimpleGraph,
) -> Result<(Hypergraph, Hypergraph, FiniteDimRep)> {
    if u.num_rows() != g1.num_vertices() || u.num_cols() != g2.num_vertices() {
        return Err(Error::ShapeMismatch("grid does not match the graphs".into()));
    }
    let (n1, n2) = (neighborhood_hypergraph(g1)?, neighborhood_hypergraph(g2)?);
    let c1 = neighborhood_edge_bijection_for(g1, &n1)?;
    let c2 = neighborhood_edge_bijection_for(g2, &n2)?;
    let p_e = u
        .left_mul(&c1.transpose(), n1.edge_labels().to_vec())?
        .right_mul(&c2, n2.edge_labels().to_vec())?;
    let rep = FiniteDimRep::new(u.clone(), p_e)?;
    Ok((n1, n2, rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{check_adjacency_intertwining, is_magic_unitary};

    #[test]
    fn sat_enumeration() {
        let sys = BcsSystem::new(3, vec![(vec![0, 1, 2], 0), (vec![1], 1), (vec![0, 1, 2], 1)]).unwrap();
        let even: Vec<Vec<u8>> = enumerate_sat(&sys, 0).unwrap().into_iter().map(|s| s.bits).collect();
        assert_eq!(even, vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        assert_eq!(enumerate_sat(&sys, 1).unwrap()[0].bits, vec![1]);
        assert_eq!(enumerate_sat(&sys, 2).unwrap().len(), 4);
        assert!(enumerate_sat(&sys, 3).is_err());
    }

    #[test]
    fn system_validation() {
        assert!(BcsSystem::new(2, vec![(vec![], 0)]).is_err());
        assert!(BcsSystem::new(2, vec![(vec![2], 0)]).is_err());
        assert!(BcsSystem::new(2, vec![(vec![0], 2)]).is_err());
        let single = BcsSystem::new(2, vec![(vec![0, 1], 1)]).unwrap();
        assert_eq!(homogenize(&single).parities(), vec![0]);
        assert_eq!(homogenize(&homogenize(&single)), homogenize(&single));
    }

    #[test]
    fn magic_square_system() {
        let sys = magic_square_bcs();
        assert_eq!(sys.parities(), vec![0, 0, 0, 0, 0, 1]);
        for l in 0..6 {
            assert_eq!(enumerate_sat(&sys, l).unwrap().len(), 4);
        }
        let (g, g0) = magic_square_graphs().unwrap();
        assert_eq!((g.num_vertices(), g0.num_vertices()), (24, 24));
        assert_eq!(&g.vertices()[..4], &["R1:000", "R1:011", "R1:101", "R1:110"]);
        for v in 0..24 {
            assert_eq!(g.degree(v), 9);
            assert_eq!(g0.degree(v), 9);
        }
        // same constraint, different assignments
        assert!(g.adjacent(0, 1));
    }

    #[test]
    fn disjoint_supports_have_no_cross_edges() {
        let sys = BcsSystem::new(4, vec![(vec![0, 1], 0), (vec![2, 3], 1)]).unwrap();
        let g = bcs_graph(&sys).unwrap();
        assert_eq!(g.edge_list(), vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn projectors() {
        let p = pauli_projectors();
        assert_eq!(p.x_plus, CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]));
        assert_eq!(p.z_plus, CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(&p.x_plus + &p.x_minus, CMatrix::identity(2));
        assert_eq!(&p.z_plus + &p.z_minus, CMatrix::identity(2));
    }

    #[test]
    fn observables_and_measurements() {
        let sq = magic_square_observables().unwrap();
        let (i, x, z) = (CMatrix::identity(2), pauli_x(), pauli_z());
        assert_eq!(sq.entry(0, 0), &x.kron(&i));
        assert_eq!(sq.entry(1, 0), &i.kron(&z));
        let col3 = &(sq.entry(0, 2) * sq.entry(1, 2)) * sq.entry(2, 2);
        assert!((&col3 + &CMatrix::identity(4)).max_norm() < 1e-15);

        let sys = magic_square_bcs();
        let p = pauli_projectors();
        let r1 = constraint_pvm(&sq, &sys, 0).unwrap();
        assert!((&r1[0].1 - &p.x_plus.kron(&p.x_plus)).max_norm() < 1e-15);
        let c1 = constraint_pvm(&sq, &sys, 3).unwrap();
        assert!((&c1[0].1 - &p.x_plus.kron(&p.z_plus)).max_norm() < 1e-15);
        let mut sum = CMatrix::zeros(4, 4);
        for (_, f) in &r1 {
            sum += f;
        }
        assert!((&sum - &CMatrix::identity(4)).max_norm() < 1e-15);
    }

    #[test]
    fn broken_square_is_rejected() {
        let mut sq = magic_square_observables().unwrap();
        sq.entries[8] = sq.entries[8].scale_real(-1.0);
        assert!(matches!(sq.check(1e-12), Err(Error::Invariant(_))));
    }

    #[test]
    fn strategy_shape_and_checks() {
        let u = magic_square_strategy().unwrap();
        assert_eq!((u.num_rows(), u.num_cols(), u.dim()), (24, 24, 4));
        let sys = magic_square_bcs();
        let sq = magic_square_observables().unwrap();
        let f000 = &constraint_pvm(&sq, &sys, 0).unwrap()[0].1;
        assert_eq!(u.block(0, 0), f000);
        assert!(u.block(0, 4).is_zero());
        assert!(is_magic_unitary(&u, 1e-10).passed());
        let (g, g0) = magic_square_graphs().unwrap();
        assert!(check_adjacency_intertwining(&u, &g, &g0).unwrap() <= 1e-10);
    }

    #[test]
    fn pullback_of_identity() {
        let k3 = SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap();
        let id = OperatorMagicUnitary::from_permutation(k3.vertices().to_vec(), k3.vertices().to_vec(), &[0, 1, 2]).unwrap();
        let (n1, _, rep) = neighborhood_pullback(&id, &k3, &k3).unwrap();
        assert_eq!(rep.p_v, id);
        assert_eq!(rep.p_e.rows(), n1.edge_labels());
        assert_eq!(rep.p_e.blocks(), id.blocks());
    }
}
