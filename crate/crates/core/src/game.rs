//! Nonlocal games, correlations, and the isomorphism game rule functions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, IncidenceStructure, SimpleGraph};

/// Dense rule tensors larger than this are refused; use [`IsoRule::wins`] instead.
pub const MAX_DENSE_ENTRIES: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    H1,
    H2,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::H1 => Side::H2,
            Side::H2 => Side::H1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Vertex,
    Edge,
}

/// A question/answer of an isomorphism game, printed as `H1:V:name` or `H2:E:name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuestionAnswerLabel {
    pub side: Side,
    pub kind: Kind,
    pub name: String,
}

impl fmt::Display for QuestionAnswerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::H1 => "H1",
            Side::H2 => "H2",
        };
        let kind = match self.kind {
            Kind::Vertex => "V",
            Kind::Edge => "E",
        };
        write!(f, "{side}:{kind}:{}", self.name)
    }
}

impl FromStr for QuestionAnswerLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.splitn(3, ':');
        let side = match parts.next() {
            Some("H1") => Side::H1,
            Some("H2") => Side::H2,
            _ => return Err(Error::BadLabel(s.to_string())),
        };
        let kind = match parts.next() {
            Some("V") => Kind::Vertex,
            Some("E") => Kind::Edge,
            _ => return Err(Error::BadLabel(s.to_string())),
        };
        let name = parts.next().ok_or_else(|| Error::BadLabel(s.to_string()))?;
        Ok(Self {
            side,
            kind,
            name: name.to_string(),
        })
    }
}

/// Anything that can answer `λ(x, y, a, b)` by index.
pub trait RuleFunction: Sync {
    /// `(|X|, |Y|, |A|, |B|)`.
    fn dims(&self) -> (usize, usize, usize, usize);
    fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool;
}

impl RuleFunction for NonlocalGame {
    fn dims(&self) -> (usize, usize, usize, usize) {
        NonlocalGame::dims(self)
    }

    fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        NonlocalGame::wins(self, x, y, a, b)
    }
}

impl RuleFunction for IsoRule {
    fn dims(&self) -> (usize, usize, usize, usize) {
        let n = self.size();
        (n, n, n, n)
    }

    fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        IsoRule::wins(self, x, y, a, b)
    }
}

/// A game over `(X, Y, A, B)` with a dense rule tensor indexed `(x, y, a, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonlocalGame {
    x: Vec<String>,
    y: Vec<String>,
    a: Vec<String>,
    b: Vec<String>,
    lambda: Vec<bool>,
}

impl NonlocalGame {
    pub fn from_fn<F>(
        x: Vec<String>,
        y: Vec<String>,
        a: Vec<String>,
        b: Vec<String>,
        mut rule: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize, usize, usize) -> bool,
    {
        let total = x.len() * y.len() * a.len() * b.len();
        if total > MAX_DENSE_ENTRIES {
            return Err(Error::TooLarge(total));
        }
        let mut lambda = Vec::with_capacity(total);
        for i in 0..x.len() {
            for j in 0..y.len() {
                for k in 0..a.len() {
                    for l in 0..b.len() {
                        lambda.push(rule(i, j, k, l));
                    }
                }
            }
        }
        Ok(Self { x, y, a, b, lambda })
    }

    /// Builds a game from its list of winning index tuples.
    pub fn from_winning(
        x: Vec<String>,
        y: Vec<String>,
        a: Vec<String>,
        b: Vec<String>,
        winning: &[[usize; 4]],
    ) -> Result<Self> {
        let mut game = Self::from_fn(x, y, a, b, |_, _, _, _| false)?;
        for &[i, j, k, l] in winning {
            if i >= game.x.len() || j >= game.y.len() || k >= game.a.len() || l >= game.b.len() {
                return Err(Error::ShapeMismatch(format!(
                    "winning tuple ({i},{j},{k},{l}) out of range"
                )));
            }
            let idx = game.index(i, j, k, l);
            game.lambda[idx] = true;
        }
        Ok(game)
    }

    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.y.len() + y) * self.a.len() + a) * self.b.len() + b
    }

    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.lambda[self.index(x, y, a, b)]
    }

    pub fn questions_x(&self) -> &[String] {
        &self.x
    }

    pub fn questions_y(&self) -> &[String] {
        &self.y
    }

    pub fn answers_a(&self) -> &[String] {
        &self.a
    }

    pub fn answers_b(&self) -> &[String] {
        &self.b
    }

    /// `(|X|, |Y|, |A|, |B|)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.x.len(), self.y.len(), self.a.len(), self.b.len())
    }

    pub fn winning_tuples(&self) -> Vec<[usize; 4]> {
        let (nx, ny, na, nb) = self.dims();
        let mut out = Vec::new();
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for b in 0..nb {
                        if self.wins(x, y, a, b) {
                            out.push([x, y, a, b]);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn num_winning(&self) -> usize {
        self.lambda.iter().filter(|&&w| w).count()
    }
}

/// Rule function of the hypergraph (or graph) isomorphism game, evaluated on demand.
///
/// Questions and answers are indexed `V1, V2, E1, E2` in that order; the graph
/// game omits the two edge blocks.
#[derive(Debug, Clone)]
pub struct IsoRule {
    s1: IncidenceStructure,
    s2: IncidenceStructure,
    include_edges: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Item {
    side: Side,
    kind: Kind,
    index: usize,
}

impl IsoRule {
    pub fn hypergraph(h1: &Hypergraph, h2: &Hypergraph) -> Self {
        Self {
            s1: h1.structure().clone(),
            s2: h2.structure().clone(),
            include_edges: true,
        }
    }

    /// Rule over arbitrary incidence structures; empty edges and uncovered vertices are allowed.
    pub fn from_structures(s1: IncidenceStructure, s2: IncidenceStructure, include_edges: bool) -> Self {
        Self { s1, s2, include_edges }
    }

    pub fn graph(g1: &SimpleGraph, g2: &SimpleGraph) -> Self {
        Self {
            s1: g1.incidence_structure(),
            s2: g2.incidence_structure(),
            include_edges: false,
        }
    }

    pub fn includes_edges(&self) -> bool {
        self.include_edges
    }

    pub fn structures(&self) -> (&IncidenceStructure, &IncidenceStructure) {
        (&self.s1, &self.s2)
    }

    pub fn size(&self) -> usize {
        let v = self.s1.num_vertices() + self.s2.num_vertices();
        if self.include_edges {
            v + self.s1.num_edges() + self.s2.num_edges()
        } else {
            v
        }
    }

    /// Offsets of the `V1, V2, E1, E2` blocks.
    pub fn offsets(&self) -> [usize; 4] {
        let n1 = self.s1.num_vertices();
        let n2 = self.s2.num_vertices();
        let m1 = self.s1.num_edges();
        [0, n1, n1 + n2, n1 + n2 + m1]
    }

    fn item(&self, i: usize) -> Item {
        let [_, v2, e1, e2] = self.offsets();
        let (side, kind, index) = if i < v2 {
            (Side::H1, Kind::Vertex, i)
        } else if i < e1 {
            (Side::H2, Kind::Vertex, i - v2)
        } else if i < e2 {
            (Side::H1, Kind::Edge, i - e1)
        } else {
            (Side::H2, Kind::Edge, i - e2)
        };
        Item { side, kind, index }
    }

    pub fn label(&self, i: usize) -> QuestionAnswerLabel {
        let it = self.item(i);
        let s = match it.side {
            Side::H1 => &self.s1,
            Side::H2 => &self.s2,
        };
        let name = match it.kind {
            Kind::Vertex => s.vertices()[it.index].clone(),
            Kind::Edge => s.edges()[it.index].clone(),
        };
        QuestionAnswerLabel {
            side: it.side,
            kind: it.kind,
            name,
        }
    }

    pub fn labels(&self) -> Vec<QuestionAnswerLabel> {
        (0..self.size()).map(|i| self.label(i)).collect()
    }

    /// Index of `(side, kind, local)` in the combined alphabet.
    pub fn global_index(&self, side: Side, kind: Kind, local: usize) -> usize {
        let o = self.offsets();
        match (side, kind) {
            (Side::H1, Kind::Vertex) => o[0] + local,
            (Side::H2, Kind::Vertex) => o[1] + local,
            (Side::H1, Kind::Edge) => o[2] + local,
            (Side::H2, Kind::Edge) => o[3] + local,
        }
    }

    fn structure(&self, side: Side) -> &IncidenceStructure {
        match side {
            Side::H1 => &self.s1,
            Side::H2 => &self.s2,
        }
    }

    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        let (x, y, a, b) = (self.item(x), self.item(y), self.item(a), self.item(b));
        if a.kind != x.kind || a.side == x.side || b.kind != y.kind || b.side == y.side {
            return false;
        }
        // One item of each pair lands in each hypergraph.
        let pick = |side: Side, p: Item, q: Item| if p.side == side { p } else { q };
        [Side::H1, Side::H2]
            .map(|side| (side, pick(side, x, a), pick(side, y, b)))
            .iter()
            .map(|&(side, p, q)| {
                let s = self.structure(side);
                match (p.kind, q.kind) {
                    (Kind::Vertex, Kind::Vertex) => Relation::V(s.vertex_relation(p.index, q.index)),
                    (Kind::Edge, Kind::Edge) => Relation::E(s.edge_relation(p.index, q.index)),
                    (Kind::Vertex, Kind::Edge) => Relation::M(s.contains(p.index, q.index)),
                    (Kind::Edge, Kind::Vertex) => Relation::M(s.contains(q.index, p.index)),
                }
            })
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] == w[1])
    }

    pub fn materialize(&self) -> Result<NonlocalGame> {
        let labels: Vec<String> = self.labels().iter().map(ToString::to_string).collect();
        NonlocalGame::from_fn(
            labels.clone(),
            labels.clone(),
            labels.clone(),
            labels,
            |x, y, a, b| self.wins(x, y, a, b),
        )
    }
}

#[derive(PartialEq)]
enum Relation {
    V(crate::hypergraph::VertexRelation),
    E(crate::hypergraph::EdgeRelation),
    M(bool),
}

pub fn build_hypiso_game(h1: &Hypergraph, h2: &Hypergraph) -> Result<NonlocalGame> {
    IsoRule::hypergraph(h1, h2).materialize()
}

pub fn build_graph_iso_game(g1: &SimpleGraph, g2: &SimpleGraph) -> Result<NonlocalGame> {
    IsoRule::graph(g1, g2).materialize()
}

fn require_square(game: &NonlocalGame) -> Result<()> {
    let (nx, ny, na, nb) = game.dims();
    if nx != ny || na != nb {
        return Err(Error::ShapeMismatch(format!(
            "synchronicity needs X=Y and A=B (got {nx},{ny},{na},{nb})"
        )));
    }
    Ok(())
}

/// `λ(x, x, a, b) = 0` whenever `a ≠ b`.
pub fn is_synchronous(game: &NonlocalGame) -> Result<bool> {
    require_square(game)?;
    let (n, _, m, _) = game.dims();
    Ok((0..n).all(|x| (0..m).all(|a| (0..m).all(|b| a == b || !game.wins(x, x, a, b)))))
}

/// Synchronous, and `λ(x, y, a, a) = 0` whenever `x ≠ y`.
pub fn is_bisynchronous(game: &NonlocalGame) -> Result<bool> {
    if !is_synchronous(game)? {
        return Ok(false);
    }
    let (n, _, m, _) = game.dims();
    Ok((0..n).all(|x| (0..n).all(|y| x == y || (0..m).all(|a| !game.wins(x, y, a, a)))))
}

/// Vertices `(x,y)` are question pairs, edges `(a,b)` collect the pairs that `(a,b)` wins.
pub fn game_to_hypergraph(game: &NonlocalGame) -> Result<Hypergraph> {
    let (nx, ny, na, nb) = game.dims();
    let pair = |s: &str, t: &str| format!("({s},{t})");
    let mut vertices = Vec::with_capacity(nx * ny);
    for x in 0..nx {
        for y in 0..ny {
            let label = pair(&game.x[x], &game.y[y]);
            if !(0..na).any(|a| (0..nb).any(|b| game.wins(x, y, a, b))) {
                return Err(Error::NoWinningAnswer(label));
            }
            vertices.push(label);
        }
    }
    let mut edges = Vec::new();
    for a in 0..na {
        for b in 0..nb {
            let members: Vec<String> = (0..nx * ny)
                .filter(|&v| game.wins(v / ny, v % ny, a, b))
                .map(|v| vertices[v].clone())
                .collect();
            if !members.is_empty() {
                edges.push((pair(&game.a[a], &game.b[b]), members));
            }
        }
    }
    Hypergraph::new(vertices, edges)
}

/// Conditional table `p(a, b | x, y)` stored densely in `(x, y, a, b)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    x: Vec<String>,
    y: Vec<String>,
    a: Vec<String>,
    b: Vec<String>,
    p: Vec<f64>,
}

impl Correlation {
    pub fn zeros(x: Vec<String>, y: Vec<String>, a: Vec<String>, b: Vec<String>) -> Self {
        let n = x.len() * y.len() * a.len() * b.len();
        Self {
            x,
            y,
            a,
            b,
            p: vec![0.0; n],
        }
    }

    /// A zero table shaped like `game`.
    pub fn for_game(game: &NonlocalGame) -> Self {
        Self::zeros(game.x.clone(), game.y.clone(), game.a.clone(), game.b.clone())
    }

    pub fn from_fn<F>(
        x: Vec<String>,
        y: Vec<String>,
        a: Vec<String>,
        b: Vec<String>,
        mut f: F,
    ) -> Self
    where
        F: FnMut(usize, usize, usize, usize) -> f64,
    {
        let mut c = Self::zeros(x, y, a, b);
        let (nx, ny, na, nb) = c.dims();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..na {
                    for l in 0..nb {
                        let idx = c.index(i, j, k, l);
                        c.p[idx] = f(i, j, k, l);
                    }
                }
            }
        }
        c
    }

    /// Deterministic strategy answering `alice[x]` and `bob[y]`.
    pub fn deterministic(game: &NonlocalGame, alice: &[usize], bob: &[usize]) -> Result<Self> {
        let (nx, ny, na, nb) = game.dims();
        if alice.len() != nx || bob.len() != ny || alice.iter().any(|&a| a >= na) || bob.iter().any(|&b| b >= nb) {
            return Err(Error::ShapeMismatch("deterministic answer maps do not fit the game".into()));
        }
        let mut c = Self::for_game(game);
        for (x, &a) in alice.iter().enumerate() {
            for (y, &b) in bob.iter().enumerate() {
                c.set(x, y, a, b, 1.0);
            }
        }
        Ok(c)
    }

    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.y.len() + y) * self.a.len() + a) * self.b.len() + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[self.index(x, y, a, b)]
    }

    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, value: f64) {
        let idx = self.index(x, y, a, b);
        self.p[idx] = value;
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.x.len(), self.y.len(), self.a.len(), self.b.len())
    }

    pub fn questions_x(&self) -> &[String] {
        &self.x
    }

    pub fn questions_y(&self) -> &[String] {
        &self.y
    }

    pub fn answers_a(&self) -> &[String] {
        &self.a
    }

    pub fn answers_b(&self) -> &[String] {
        &self.b
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Largest `|Σ_{a,b} p(a,b|x,y) − 1|` over question pairs.
    pub fn normalization_deviation(&self) -> f64 {
        let block = self.a.len() * self.b.len();
        if block == 0 {
            return if self.p.is_empty() { 0.0 } else { 1.0 };
        }
        self.p
            .chunks(block)
            .map(|c| (c.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.p.iter().all(|&v| v >= -tol)
    }

    /// Nonnegative and normalized for every question pair.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.is_nonnegative(tol) && self.normalization_deviation() <= tol
    }

    /// Marginal of the first party: `Σ_b p(a,b|x,y)`.
    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.b.len()).map(|b| self.get(x, y, a, b)).sum()
    }

    /// Marginal of the second party: `Σ_a p(a,b|x,y)`.
    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.a.len()).map(|a| self.get(x, y, a, b)).sum()
    }

    pub fn check_shape(&self, game: &NonlocalGame) -> Result<()> {
        if self.dims() != game.dims() {
            return Err(Error::ShapeMismatch(format!(
                "correlation is {:?}, game is {:?}",
                self.dims(),
                game.dims()
            )));
        }
        Ok(())
    }
}

/// Worst change of either party's marginal when the other party's question changes.
pub fn ns_deviation(corr: &Correlation) -> f64 {
    let (nx, ny, na, nb) = corr.dims();
    let mut worst: f64 = 0.0;
    for x in 0..nx {
        for a in 0..na {
            let m0 = if ny > 0 { corr.alice_marginal(x, 0, a) } else { 0.0 };
            for y in 1..ny {
                worst = worst.max((corr.alice_marginal(x, y, a) - m0).abs());
            }
        }
    }
    for y in 0..ny {
        for b in 0..nb {
            let m0 = if nx > 0 { corr.bob_marginal(0, y, b) } else { 0.0 };
            for x in 1..nx {
                worst = worst.max((corr.bob_marginal(x, y, b) - m0).abs());
            }
        }
    }
    worst
}

pub fn check_ns(corr: &Correlation, tol: f64) -> bool {
    ns_deviation(corr) <= tol
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfectnessReport {
    pub perfect: bool,
    pub violations: Vec<Violation>,
    pub worst: f64,
}

/// Every forbidden entry must be at most `tol`.
pub fn is_perfect_strategy<R: RuleFunction + ?Sized>(game: &R, corr: &Correlation, tol: f64) -> Result<PerfectnessReport> {
    if corr.dims() != game.dims() {
        return Err(Error::ShapeMismatch(format!(
            "correlation is {:?}, game is {:?}",
            corr.dims(),
            game.dims()
        )));
    }
    let (nx, ny, na, nb) = game.dims();
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                for b in 0..nb {
                    if game.wins(x, y, a, b) {
                        continue;
                    }
                    let value = corr.get(x, y, a, b);
                    worst = worst.max(value.abs());
                    if value.abs() > tol {
                        violations.push(Violation { x, y, a, b, value });
                    }
                }
            }
        }
    }
    Ok(PerfectnessReport {
        perfect: violations.is_empty(),
        violations,
        worst,
    })
}

fn uniform_prior(game: &NonlocalGame) -> Vec<f64> {
    let n = game.x.len() * game.y.len();
    vec![1.0 / n as f64; n]
}

fn check_prior(game: &NonlocalGame, prior: &[f64]) -> Result<()> {
    if prior.len() != game.x.len() * game.y.len() {
        return Err(Error::ShapeMismatch(format!(
            "prior has {} entries for {} question pairs",
            prior.len(),
            game.x.len() * game.y.len()
        )));
    }
    Ok(())
}

/// `Σ_{x,y} π(x,y) Σ_{a,b} λ(x,y,a,b) p(a,b|x,y)`; the prior (row-major over
/// `X×Y`) defaults to uniform.
pub fn referee_value(game: &NonlocalGame, corr: &Correlation, prior: Option<&[f64]>) -> Result<f64> {
    corr.check_shape(game)?;
    let owned;
    let prior = match prior {
        Some(p) => {
            check_prior(game, p)?;
            p
        }
        None => {
            owned = uniform_prior(game);
            &owned
        }
    };
    let (nx, ny, na, nb) = game.dims();
    let mut total = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let w = prior[x * ny + y];
            if w == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for a in 0..na {
                for b in 0..nb {
                    if game.wins(x, y, a, b) {
                        s += corr.get(x, y, a, b);
                    }
                }
            }
            total += w * s;
        }
    }
    Ok(total)
}

/// [`referee_value`] in exact rational arithmetic: every `f64` entry is taken at
/// its exact binary value, and the default uniform prior is exactly `1/|X×Y|`.
pub fn referee_value_exact(
    game: &NonlocalGame,
    corr: &Correlation,
    prior: Option<&[f64]>,
) -> Result<BigRational> {
    corr.check_shape(game)?;
    let (nx, ny, na, nb) = game.dims();
    let exact = |v: f64| {
        BigRational::from_float(v).ok_or_else(|| Error::InvalidParameter(format!("non-finite value {v}")))
    };
    let weights: Vec<BigRational> = match prior {
        Some(p) => {
            check_prior(game, p)?;
            p.iter().map(|&v| exact(v)).collect::<Result<_>>()?
        }
        None => {
            let w = BigRational::new(BigInt::one(), BigInt::from(nx * ny));
            vec![w; nx * ny]
        }
    };
    let mut total = BigRational::zero();
    for x in 0..nx {
        for y in 0..ny {
            let w = &weights[x * ny + y];
            if w.is_zero() {
                continue;
            }
            let mut s = BigRational::zero();
            for a in 0..na {
                for b in 0..nb {
                    if game.wins(x, y, a, b) {
                        s += exact(corr.get(x, y, a, b))?;
                    }
                }
            }
            total += w * s;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{graph_to_hypergraph, lambda_nk};

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn k2() -> SimpleGraph {
        SimpleGraph::new(["1", "2"], &[("1", "2")]).unwrap()
    }

    #[test]
    fn label_round_trip() {
        for s in ["H1:V:a", "H2:E:{1,2}", "H1:E:x:y"] {
            let l: QuestionAnswerLabel = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
        assert!("H3:V:a".parse::<QuestionAnswerLabel>().is_err());
        assert!("H1:Q:a".parse::<QuestionAnswerLabel>().is_err());
        assert!("H1:V".parse::<QuestionAnswerLabel>().is_err());
    }

    #[test]
    fn hypiso_rules_on_lambda() {
        let h1 = lambda_nk(2, 1).unwrap();
        let h2 = lambda_nk(3, 1).unwrap();
        let rule = IsoRule::hypergraph(&h1, &h2);
        let v1 = |i| rule.global_index(Side::H1, Kind::Vertex, i);
        let v2 = |i| rule.global_index(Side::H2, Kind::Vertex, i);
        let e1 = |i| rule.global_index(Side::H1, Kind::Edge, i);
        let e2 = |i| rule.global_index(Side::H2, Kind::Edge, i);
        // same question, different answers
        assert!(!rule.wins(v1(0), v1(0), v2(0), v2(1)));
        assert!(rule.wins(v1(0), v1(0), v2(1), v2(1)));
        // answer on the question's own side
        assert!(!rule.wins(v1(0), v1(0), v1(0), v1(0)));
        // kind mismatch
        assert!(!rule.wins(v1(0), v1(0), e2(0), e2(0)));
        // incidence preserved
        assert!(rule.wins(v1(0), e1(0), v2(2), e2(0)));
        // mixed cross-side question
        assert!(rule.wins(v1(1), e2(0), v2(0), e1(0)));
        // vertices distinct in H1 must map to distinct vertices in H2
        assert!(rule.wins(v1(0), v1(1), v2(0), v2(2)));
        assert!(!rule.wins(v1(0), v1(1), v2(1), v2(1)));
        assert!(rule.wins(v1(0), v2(1), v2(0), v1(1)));
        assert!(!rule.wins(v1(0), v2(1), v2(1), v1(1)));
    }

    #[test]
    fn incidence_rule_matches_membership() {
        let path = SimpleGraph::new(["1", "2", "3"], &[("1", "2"), ("2", "3")]).unwrap();
        let h = graph_to_hypergraph(&path).unwrap();
        let rule = IsoRule::hypergraph(&h, &h);
        for v1 in 0..3 {
            for e1 in 0..2 {
                for v2 in 0..3 {
                    for e2 in 0..2 {
                        let expected = h.structure().contains(v1, e1) == h.structure().contains(v2, e2);
                        let got = rule.wins(
                            rule.global_index(Side::H1, Kind::Vertex, v1),
                            rule.global_index(Side::H1, Kind::Edge, e1),
                            rule.global_index(Side::H2, Kind::Vertex, v2),
                            rule.global_index(Side::H2, Kind::Edge, e2),
                        );
                        assert_eq!(got, expected);
                    }
                }
            }
        }
    }

    #[test]
    fn synchronicity() {
        let h = lambda_nk(3, 2).unwrap();
        let g = build_hypiso_game(&h, &h).unwrap();
        assert!(is_synchronous(&g).unwrap());
        assert!(is_bisynchronous(&g).unwrap());
        let iso = build_graph_iso_game(&k2(), &k2()).unwrap();
        assert!(is_synchronous(&iso).unwrap());
        let l = labels("q", 2);
        let loose = NonlocalGame::from_fn(l.clone(), l.clone(), l.clone(), l, |_, _, _, _| true).unwrap();
        assert!(!is_synchronous(&loose).unwrap());
        let rect = NonlocalGame::from_fn(labels("x", 2), labels("y", 1), labels("a", 1), labels("b", 1), |_, _, _, _| true).unwrap();
        assert!(is_synchronous(&rect).is_err());
    }

    #[test]
    fn game_hypergraph_encoding() {
        let all = NonlocalGame::from_fn(labels("x", 2), labels("y", 1), labels("a", 2), labels("b", 2), |_, _, _, _| true).unwrap();
        let h = game_to_hypergraph(&all).unwrap();
        assert_eq!((h.num_vertices(), h.num_edges()), (2, 4));
        assert!(h.incidence_matrix().to_rows().iter().flatten().all(|&v| v == 1));

        let iso = build_graph_iso_game(&k2(), &k2()).unwrap();
        let h = game_to_hypergraph(&iso).unwrap();
        assert_eq!(h.num_vertices(), 16);
        for (label, members) in h.edge_list() {
            let (a, b) = label.trim_matches(|c| c == '(' || c == ')').split_once(',').unwrap();
            if a != b {
                for m in members {
                    let (x, y) = m.trim_matches(|c| c == '(' || c == ')').split_once(',').unwrap();
                    assert_ne!(x, y);
                }
            }
        }

        let dead = NonlocalGame::from_fn(labels("x", 2), labels("y", 1), labels("a", 1), labels("b", 1), |x, _, _, _| x == 0).unwrap();
        assert_eq!(game_to_hypergraph(&dead).unwrap_err(), Error::NoWinningAnswer("(x1,y0)".into()));
    }

    #[test]
    fn referee_and_perfection() {
        let iso = build_graph_iso_game(&k2(), &k2()).unwrap();
        // identity isomorphism 1->1, 2->2, answered across sides
        let map = [2, 3, 0, 1];
        let det = Correlation::deterministic(&iso, &map, &map).unwrap();
        let report = is_perfect_strategy(&iso, &det, 0.0).unwrap();
        assert!(report.perfect);
        assert_eq!(referee_value(&iso, &det, None).unwrap(), 1.0);
        assert!(referee_value_exact(&iso, &det, None).unwrap().is_one());

        let uniform = Correlation::from_fn(
            iso.questions_x().to_vec(),
            iso.questions_y().to_vec(),
            iso.answers_a().to_vec(),
            iso.answers_b().to_vec(),
            |_, _, _, _| 1.0 / 16.0,
        );
        assert!(referee_value(&iso, &uniform, None).unwrap() < 1.0);
        let report = is_perfect_strategy(&iso, &uniform, 1e-9).unwrap();
        assert!(!report.perfect);
        assert!(report.violations.iter().all(|v| v.value == 1.0 / 16.0));

        // prior supported only where the uniform table never loses is irrelevant;
        // a perfect strategy scores 1 under any prior
        let mut prior = vec![0.0; 16];
        prior[0] = 1.0;
        assert_eq!(referee_value(&iso, &det, Some(&prior)).unwrap(), 1.0);
        assert!(referee_value(&iso, &det, Some(&prior[..3])).is_err());
    }

    #[test]
    fn no_signalling() {
        let l = |p: &str| labels(p, 2);
        let product = Correlation::from_fn(l("x"), l("y"), l("a"), l("b"), |x, y, a, b| {
            ((a == x) && (b == 1 - y)) as u8 as f64
        });
        assert!(check_ns(&product, 0.0));
        let mixture = Correlation::from_fn(l("x"), l("y"), l("a"), l("b"), |_, _, a, b| {
            0.5 * ((a == 0 && b == 0) as u8 as f64) + 0.5 * ((a == 1 && b == 1) as u8 as f64)
        });
        assert!(check_ns(&mixture, 0.0));
        // Alice's answer copies Bob's question
        let signalling = Correlation::from_fn(l("x"), l("y"), l("a"), l("b"), |_, y, a, b| {
            ((a == y) && b == 0) as u8 as f64
        });
        assert!(!check_ns(&signalling, 1e-9));
        assert_eq!(ns_deviation(&signalling), 1.0);
    }
}
