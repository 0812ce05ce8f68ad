//! The game-of-games layer: strongly no-signalling correlations over the
//! isomorphism game of two winning-pair hypergraphs, simulation of strategies,
//! and classical relabelings.
//!
//! For games `G_i = (X_i, Y_i, A_i, B_i, λ_i)` the supergame alphabet is
//! `U1 ⊔ U2 ⊔ W1 ⊔ W2` with `U_i = X_i × Y_i` and `W_i = A_i × B_i`, every pair
//! listed row-major. A correlation `Γ(u1, w2 | u2, w1)` is stored as the table
//! `p(a, b | x, y)` with `x = u2`, `y = w1`, `a = u1`, `b = w2`.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{check_ns, is_perfect_strategy, ns_deviation, Correlation, IsoRule, NonlocalGame, PerfectnessReport};
use crate::hypergraph::IncidenceStructure;
use crate::linalg::CMatrix;
use crate::operator::{is_magic_unitary, projection_residual, MagicUnitaryReport, OperatorMagicUnitary};

/// A product block `first × second` at `offset` in the supergame alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub first: usize,
    pub second: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.first * self.second
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global index of the pair `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> usize {
        self.offset + i * self.second + j
    }

    pub fn local(&self, i: usize, j: usize) -> usize {
        i * self.second + j
    }
}

/// Label sets of the two games, which fix the supergame alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupergameLayout {
    games: [[Vec<String>; 4]; 2],
}

impl SupergameLayout {
    pub fn new(game1: &NonlocalGame, game2: &NonlocalGame) -> Self {
        let labels = |g: &NonlocalGame| {
            [
                g.questions_x().to_vec(),
                g.questions_y().to_vec(),
                g.answers_a().to_vec(),
                g.answers_b().to_vec(),
            ]
        };
        Self {
            games: [labels(game1), labels(game2)],
        }
    }

    fn count(&self, game: usize, axis: usize) -> usize {
        self.games[game][axis].len()
    }

    pub fn u1(&self) -> Block {
        Block {
            offset: 0,
            first: self.count(0, 0),
            second: self.count(0, 1),
        }
    }

    pub fn u2(&self) -> Block {
        Block {
            offset: self.u1().len(),
            first: self.count(1, 0),
            second: self.count(1, 1),
        }
    }

    pub fn w1(&self) -> Block {
        let u2 = self.u2();
        Block {
            offset: u2.offset + u2.len(),
            first: self.count(0, 2),
            second: self.count(0, 3),
        }
    }

    pub fn w2(&self) -> Block {
        let w1 = self.w1();
        Block {
            offset: w1.offset + w1.len(),
            first: self.count(1, 2),
            second: self.count(1, 3),
        }
    }

    pub fn size(&self) -> usize {
        let w2 = self.w2();
        w2.offset + w2.len()
    }

    /// `U1:(x,y)`, `U2:(x,y)`, `W1:(a,b)`, `W2:(a,b)` in alphabet order.
    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.size());
        for (name, game, axes) in [("U1", 0, (0, 1)), ("U2", 1, (0, 1)), ("W1", 0, (2, 3)), ("W2", 1, (2, 3))] {
            for s in &self.games[game][axes.0] {
                for t in &self.games[game][axes.1] {
                    out.push(format!("{name}:({s},{t})"));
                }
            }
        }
        out
    }

    /// The layout with the two games exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            games: [self.games[1].clone(), self.games[0].clone()],
        }
    }
}

/// Winning-pair incidence of a game: vertices are all question pairs, edge
/// `(a, b)` holds the pairs it wins. Empty edges and uncovered vertices are kept
/// so that the supergame alphabet is the full product.
pub fn winning_pair_structure(game: &NonlocalGame) -> IncidenceStructure {
    let (nx, ny, na, nb) = game.dims();
    let pair = |s: &str, t: &str| format!("({s},{t})");
    let vertices = game
        .questions_x()
        .iter()
        .flat_map(|x| game.questions_y().iter().map(move |y| pair(x, y)))
        .collect();
    let edges = game
        .answers_a()
        .iter()
        .flat_map(|a| game.answers_b().iter().map(move |b| pair(a, b)))
        .collect();
    let members = (0..na * nb)
        .map(|w| (0..nx * ny).filter(|&u| game.wins(u / ny, u % ny, w / nb, w % nb)).collect())
        .collect();
    IncidenceStructure::new(vertices, edges, members)
}

/// Rule of the hypergraph isomorphism game between the winning-pair hypergraphs.
pub fn supergame_rule(game1: &NonlocalGame, game2: &NonlocalGame) -> IsoRule {
    IsoRule::from_structures(winning_pair_structure(game1), winning_pair_structure(game2), true)
}

/// A correlation over the supergame alphabet together with its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SnsCorrelation {
    layout: SupergameLayout,
    corr: Correlation,
}

impl SnsCorrelation {
    pub fn new(layout: SupergameLayout, corr: Correlation) -> Result<Self> {
        let n = layout.size();
        if corr.dims() != (n, n, n, n) {
            return Err(Error::ShapeMismatch(format!(
                "correlation is {:?}, the supergame alphabet has {n} symbols",
                corr.dims()
            )));
        }
        Ok(Self { layout, corr })
    }

    pub fn from_fn<F>(layout: SupergameLayout, f: F) -> Self
    where
        F: FnMut(usize, usize, usize, usize) -> f64,
    {
        let labels = layout.labels();
        let corr = Correlation::from_fn(labels.clone(), labels.clone(), labels.clone(), labels, f);
        Self { layout, corr }
    }

    pub fn layout(&self) -> &SupergameLayout {
        &self.layout
    }

    pub fn correlation(&self) -> &Correlation {
        &self.corr
    }

    /// `Γ(u1, w2 | u2, w1)` with block-local indices.
    pub fn gamma(&self, u1: usize, w2: usize, u2: usize, w1: usize) -> f64 {
        let l = &self.layout;
        self.corr.get(
            l.u2().offset + u2,
            l.w1().offset + w1,
            l.u1().offset + u1,
            l.w2().offset + w2,
        )
    }

    /// `Γ*(x, y | a, b) = Γ(a, b | x, y)`, over the swapped layout.
    pub fn transpose(&self) -> Self {
        let n = self.layout.size();
        let swapped = self.layout.swapped();
        let this = self.layout.clone();
        // index in the swapped alphabet -> index in ours
        let map: Vec<usize> = {
            let (a, b) = (&swapped, &this);
            let mut m = vec![0; n];
            for (src, dst) in [(a.u1(), b.u2()), (a.u2(), b.u1()), (a.w1(), b.w2()), (a.w2(), b.w1())] {
                for k in 0..src.len() {
                    m[src.offset + k] = dst.offset + k;
                }
            }
            m
        };
        Self::from_fn(swapped, |x, y, a, b| self.corr.get(map[a], map[b], map[x], map[y]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCheck {
    pub name: &'static str,
    pub deviation: f64,
    pub location: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnsReport {
    pub tol: f64,
    pub normalization: f64,
    pub negativity: f64,
    pub ns: f64,
    pub families: [FamilyCheck; 4],
}

impl SnsReport {
    pub fn passed(&self) -> bool {
        self.normalization <= self.tol
            && self.negativity <= self.tol
            && self.ns <= self.tol
            && self.families.iter().all(|f| f.deviation <= self.tol)
    }

    pub fn worst(&self) -> f64 {
        self.families
            .iter()
            .map(|f| f.deviation)
            .fold(self.normalization.max(self.negativity).max(self.ns), f64::max)
    }
}

/// Worst spread, over the varying component of the question in block `q`, of
/// sums over the matching component of the answer in block `r`. `second_party`
/// selects whether `q`/`r` are the `y`/`b` coordinates instead of `x`/`a`.
fn fiber_family(
    corr: &Correlation,
    labels: &[String],
    second_party: bool,
    q: Block,
    r: Block,
    component: usize,
    name: &'static str,
) -> FamilyCheck {
    let n = labels.len();
    let (q_vary, q_fixed) = if component == 0 { (q.first, q.second) } else { (q.second, q.first) };
    let (r_vary, r_fixed) = if component == 0 { (r.first, r.second) } else { (r.second, r.first) };
    let at = |b: Block, vary: usize, fixed: usize| if component == 0 { b.at(vary, fixed) } else { b.at(fixed, vary) };
    let get = |qi: usize, other_q: usize, ri: usize, other_r: usize| {
        if second_party {
            corr.get(other_q, qi, other_r, ri)
        } else {
            corr.get(qi, other_q, ri, other_r)
        }
    };
    let mut worst = FamilyCheck {
        name,
        deviation: 0.0,
        location: None,
    };
    for other_q in 0..n {
        for other_r in 0..n {
            for qf in 0..q_fixed {
                for rf in 0..r_fixed {
                    let sum = |k: usize| -> f64 {
                        (0..r_vary).map(|t| get(at(q, k, qf), other_q, at(r, t, rf), other_r)).sum()
                    };
                    if q_vary == 0 {
                        continue;
                    }
                    let base = sum(0);
                    for k in 1..q_vary {
                        let dev = (sum(k) - base).abs();
                        if dev > worst.deviation {
                            let (qa, qb) = (labels[at(q, 0, qf)].as_str(), labels[at(q, k, qf)].as_str());
                            let answer = labels[at(r, 0, rf)].as_str();
                            worst.deviation = dev;
                            worst.location = Some(format!(
                                "questions {qa} vs {qb}, answer fiber of {answer}, other question {}, other answer {}",
                                labels[other_q], labels[other_r]
                            ));
                        }
                    }
                }
            }
        }
    }
    worst
}

fn strong_ns_report(corr: &Correlation, layout: &SupergameLayout, tol: f64) -> SnsReport {
    let labels = layout.labels();
    let (u1, u2, w1, w2) = (layout.u1(), layout.u2(), layout.w1(), layout.w2());
    SnsReport {
        tol,
        normalization: corr.normalization_deviation(),
        negativity: corr.values().iter().fold(0.0, |m, &v| m.max(-v)),
        ns: ns_deviation(corr),
        families: [
            fiber_family(corr, &labels, false, u2, u1, 0, "sum over x1 independent of x2"),
            fiber_family(corr, &labels, false, u2, u1, 1, "sum over y1 independent of y2"),
            fiber_family(corr, &labels, true, w1, w2, 0, "sum over a2 independent of a1"),
            fiber_family(corr, &labels, true, w1, w2, 1, "sum over b2 independent of b1"),
        ],
    }
}

/// NS plus the four strong marginal equality families.
pub fn check_strong_ns(gamma: &SnsCorrelation, tol: f64) -> SnsReport {
    strong_ns_report(&gamma.corr, &gamma.layout, tol)
}

/// The transpose must again be a valid, NS and strongly NS correlation.
pub fn check_bicorrelation(gamma: &SnsCorrelation, tol: f64) -> bool {
    let t = gamma.transpose();
    t.corr.is_valid(tol) && check_ns(&t.corr, tol) && check_strong_ns(&t, tol).passed()
}

/// Bijections `α_X: X1 → X2`, `α_Y: Y1 → Y2`, `β_A: A1 → A2`, `β_B: B1 → B2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelabelingQuadruple {
    pub alpha_x: Vec<usize>,
    pub alpha_y: Vec<usize>,
    pub beta_a: Vec<usize>,
    pub beta_b: Vec<usize>,
}

impl RelabelingQuadruple {
    pub fn identity(game: &NonlocalGame) -> Self {
        let (nx, ny, na, nb) = game.dims();
        Self {
            alpha_x: (0..nx).collect(),
            alpha_y: (0..ny).collect(),
            beta_a: (0..na).collect(),
            beta_b: (0..nb).collect(),
        }
    }

    /// First tuple `(x, y, a, b)` with `λ2(α(x), α(y), β(a), β(b)) ≠ λ1(x, y, a, b)`.
    pub fn counterexample(&self, game1: &NonlocalGame, game2: &NonlocalGame) -> Result<Option<[usize; 4]>> {
        self.check_bijective(game1, game2)?;
        let (nx, ny, na, nb) = game1.dims();
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for b in 0..nb {
                        let image = game2.wins(self.alpha_x[x], self.alpha_y[y], self.beta_a[a], self.beta_b[b]);
                        if image != game1.wins(x, y, a, b) {
                            return Ok(Some([x, y, a, b]));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    fn check_bijective(&self, game1: &NonlocalGame, game2: &NonlocalGame) -> Result<()> {
        let (d1, d2) = (game1.dims(), game2.dims());
        let sizes = [(d1.0, d2.0, &self.alpha_x, "alpha_x"), (d1.1, d2.1, &self.alpha_y, "alpha_y"), (d1.2, d2.2, &self.beta_a, "beta_a"), (d1.3, d2.3, &self.beta_b, "beta_b")];
        for (n1, n2, map, name) in sizes {
            let mut seen = vec![false; n2];
            let ok = n1 == n2 && map.len() == n1 && map.iter().all(|&j| j < n2 && !std::mem::replace(&mut seen[j], true));
            if !ok {
                return Err(Error::NotBijective(name.to_string()));
            }
        }
        Ok(())
    }

    /// The induced bijection of the supergame alphabet: `U1 → U2`, `U2 → U1`
    /// (inverse), `W1 → W2`, `W2 → W1` (inverse).
    fn alphabet_map(&self, layout: &SupergameLayout) -> Vec<usize> {
        let (u1, u2, w1, w2) = (layout.u1(), layout.u2(), layout.w1(), layout.w2());
        let mut f = vec![0; layout.size()];
        for x in 0..u1.first {
            for y in 0..u1.second {
                let (s, t) = (u1.at(x, y), u2.at(self.alpha_x[x], self.alpha_y[y]));
                f[s] = t;
                f[t] = s;
            }
        }
        for a in 0..w1.first {
            for b in 0..w1.second {
                let (s, t) = (w1.at(a, b), w2.at(self.beta_a[a], self.beta_b[b]));
                f[s] = t;
                f[t] = s;
            }
        }
        f
    }
}

/// Deterministic strategy `p(a, b | x, y) = [a = f(x)][b = f(y)]` for the induced
/// alphabet bijection `f`.
pub fn relabeling_sns_strategy(q: &RelabelingQuadruple, game1: &NonlocalGame, game2: &NonlocalGame) -> Result<SnsCorrelation> {
    if let Some([x, y, a, b]) = q.counterexample(game1, game2)? {
        return Err(Error::RuleNotPreserved {
            x: game1.questions_x()[x].clone(),
            y: game1.questions_y()[y].clone(),
            a: game1.answers_a()[a].clone(),
            b: game1.answers_b()[b].clone(),
        });
    }
    let layout = SupergameLayout::new(game1, game2);
    let f = q.alphabet_map(&layout);
    Ok(SnsCorrelation::from_fn(layout, |x, y, a, b| (a == f[x] && b == f[y]) as u8 as f64))
}

/// For every question, the uniform distribution over the block of the same kind on the other side.
pub fn uniform_sns_correlation(game1: &NonlocalGame, game2: &NonlocalGame) -> SnsCorrelation {
    let layout = SupergameLayout::new(game1, game2);
    let blocks = [layout.u1(), layout.u2(), layout.w1(), layout.w2()];
    let opposite = |i: usize| -> Block {
        let k = blocks.iter().position(|b| i >= b.offset && i < b.offset + b.len()).unwrap();
        blocks[k ^ 1]
    };
    let inside = |b: Block, i: usize| i >= b.offset && i < b.offset + b.len();
    SnsCorrelation::from_fn(layout.clone(), |x, y, a, b| {
        let (ox, oy) = (opposite(x), opposite(y));
        if inside(ox, a) && inside(oy, b) {
            1.0 / (ox.len() * oy.len()) as f64
        } else {
            0.0
        }
    })
}

/// A conditional table `E(w | u)` stored input-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: Vec<String>,
    outputs: Vec<String>,
    table: Vec<f64>,
}

impl Channel {
    pub fn new(inputs: Vec<String>, outputs: Vec<String>, table: Vec<f64>) -> Result<Self> {
        if table.len() != inputs.len() * outputs.len() {
            return Err(Error::ShapeMismatch(format!(
                "channel table has {} entries for {}x{}",
                table.len(),
                inputs.len(),
                outputs.len()
            )));
        }
        Ok(Self { inputs, outputs, table })
    }

    /// The correlation `p(a, b | x, y)` read as a channel `(x, y) ↦ (a, b)`.
    pub fn from_correlation(corr: &Correlation) -> Self {
        let pairs = |s: &[String], t: &[String]| -> Vec<String> {
            s.iter().flat_map(|p| t.iter().map(move |q| format!("({p},{q})"))).collect()
        };
        Self {
            inputs: pairs(corr.questions_x(), corr.questions_y()),
            outputs: pairs(corr.answers_a(), corr.answers_b()),
            table: corr.values().to_vec(),
        }
    }

    /// Inverse of [`Channel::from_correlation`] for the label sets of `game`.
    pub fn to_correlation(&self, game: &NonlocalGame) -> Result<Correlation> {
        let (nx, ny, na, nb) = game.dims();
        if self.inputs.len() != nx * ny || self.outputs.len() != na * nb {
            return Err(Error::ShapeMismatch("channel does not match the game".into()));
        }
        let mut c = Correlation::for_game(game);
        for u in 0..nx * ny {
            for w in 0..na * nb {
                c.set(u / ny, u % ny, w / nb, w % nb, self.get(w, u));
            }
        }
        Ok(c)
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// `E(w | u)`.
    pub fn get(&self, w: usize, u: usize) -> f64 {
        self.table[u * self.outputs.len() + w]
    }

    /// Worst `|Σ_w E(w|u) − 1|`.
    pub fn stochastic_deviation(&self) -> f64 {
        let m = self.outputs.len();
        (0..self.inputs.len())
            .map(|u| (self.table[u * m..(u + 1) * m].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.table.iter().all(|&v| v >= -tol) && self.stochastic_deviation() <= tol
    }
}

/// `Γ[E](w2 | u2) = Σ_{u1, w1} Γ(u1, w2 | u2, w1) E(w1 | u1)`.
pub fn simulate(gamma: &SnsCorrelation, e: &Channel) -> Result<Channel> {
    let l = &gamma.layout;
    let (u1, u2, w1, w2) = (l.u1(), l.u2(), l.w1(), l.w2());
    if e.inputs.len() != u1.len() || e.outputs.len() != w1.len() {
        return Err(Error::ShapeMismatch(format!(
            "channel is {}->{}, expected {}->{}",
            e.inputs.len(),
            e.outputs.len(),
            u1.len(),
            w1.len()
        )));
    }
    let labels = l.labels();
    let strip = |b: Block| -> Vec<String> {
        labels[b.offset..b.offset + b.len()]
            .iter()
            .map(|s| s.split_once(':').map_or(s.clone(), |(_, r)| r.to_string()))
            .collect()
    };
    let mut table = vec![0.0; u2.len() * w2.len()];
    for s2 in 0..u2.len() {
        for t2 in 0..w2.len() {
            let mut acc = 0.0;
            for s1 in 0..u1.len() {
                for t1 in 0..w1.len() {
                    let e_val = e.get(t1, s1);
                    if e_val != 0.0 {
                        acc += gamma.gamma(s1, t2, s2, t1) * e_val;
                    }
                }
            }
            table[s2 * w2.len() + t2] = acc;
        }
    }
    Channel::new(strip(u2), strip(w2), table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportReport {
    /// `Γ[E]` as a correlation for the second game.
    pub transported: Correlation,
    pub perfectness: PerfectnessReport,
    pub valid: bool,
}

impl TransportReport {
    pub fn succeeded(&self) -> bool {
        self.valid && self.perfectness.perfect
    }
}

/// Refuses unless `Γ` is strongly NS and perfect for the supergame, then checks
/// whether `Γ[E]` is perfect for `game2`.
pub fn transport_check(
    gamma: &SnsCorrelation,
    game1: &NonlocalGame,
    game2: &NonlocalGame,
    e_corr: &Correlation,
    tol: f64,
) -> Result<TransportReport> {
    if gamma.layout != SupergameLayout::new(game1, game2) {
        return Err(Error::ShapeMismatch("supergame layout does not match the games".into()));
    }
    e_corr.check_shape(game1)?;
    let sns = check_strong_ns(gamma, tol);
    if !sns.passed() {
        return Err(Error::NotPerfectSupergame(format!(
            "strong no-signalling fails (worst deviation {:.3e})",
            sns.worst()
        )));
    }
    let rule = supergame_rule(game1, game2);
    let perfect = is_perfect_strategy(&rule, &gamma.corr, tol)?;
    if !perfect.perfect {
        return Err(Error::NotPerfectSupergame(format!(
            "{} losing entries above tolerance (worst {:.3e})",
            perfect.violations.len(),
            perfect.worst
        )));
    }
    let out = simulate(gamma, &Channel::from_correlation(e_corr))?;
    let transported = out.to_correlation(game2)?;
    let perfectness = is_perfect_strategy(game2, &transported, tol)?;
    Ok(TransportReport {
        valid: transported.is_valid(tol) && check_ns(&transported, tol),
        transported,
        perfectness,
    })
}

/// Which half of the supergame an operator grid lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `P_U` over `U1 × U2`.
    Questions,
    /// `P_W` over `W1 × W2`.
    Answers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMarginals {
    pub tol: f64,
    /// `p^X` (`X1 × X2`) or `p^A` (`A1 × A2`).
    pub first: OperatorMagicUnitary,
    /// `p^Y` (`Y1 × Y2`) or `p^B` (`B1 × B2`).
    pub second: OperatorMagicUnitary,
    /// Worst operator fiber-equality deviation (at most `tol`, else the call fails).
    pub fiber: f64,
    /// Worst projection or completeness residual of the marginal PVMs.
    pub pvm: f64,
    /// Worst `‖p^U − p^X p^Y‖` or `‖p^U − p^Y p^X‖`.
    pub product: f64,
    /// Magic-unitary reports of both marginal grids when the sizes agree.
    pub magic: Option<(MagicUnitaryReport, MagicUnitaryReport)>,
}

impl OperatorMarginals {
    pub fn passed(&self) -> bool {
        self.fiber <= self.tol
            && self.pvm <= self.tol
            && self.product <= self.tol
            && self.magic.as_ref().is_none_or(|(a, b)| a.passed() && b.passed())
    }
}

/// Splits `P_U` into `p^X_{x1,x2} = Σ_{y1} p^U_{(x1,y1),(x2,y2)}` and
/// `p^Y_{y1,y2} = Σ_{x1} p^U_{(x1,y1),(x2,y2)}` (for `P_W`, the sums run over
/// `b2` and `a2`), after checking that the sums do not depend on the free index.
pub fn operator_marginals(
    grid: &OperatorMagicUnitary,
    game1: &NonlocalGame,
    game2: &NonlocalGame,
    kind: GridKind,
    tol: f64,
) -> Result<OperatorMarginals> {
    let (d1, d2) = (game1.dims(), game2.dims());
    let ((r1, r2, c1, c2), labels) = match kind {
        GridKind::Questions => (
            (d1.0, d1.1, d2.0, d2.1),
            [game1.questions_x(), game1.questions_y(), game2.questions_x(), game2.questions_y()],
        ),
        GridKind::Answers => (
            (d1.2, d1.3, d2.2, d2.3),
            [game1.answers_a(), game1.answers_b(), game2.answers_a(), game2.answers_b()],
        ),
    };
    if grid.num_rows() != r1 * r2 || grid.num_cols() != c1 * c2 {
        return Err(Error::ShapeMismatch(format!(
            "grid is {}x{}, expected {}x{}",
            grid.num_rows(),
            grid.num_cols(),
            r1 * r2,
            c1 * c2
        )));
    }
    // Work in the frame where the summed index belongs to the rows and the
    // free index to the columns; for P_W that is the transposed grid.
    let (t, (n1, n2, m1, m2)) = match kind {
        GridKind::Questions => (grid.clone(), (r1, r2, c1, c2)),
        GridKind::Answers => (grid.transposed(), (c1, c2, r1, r2)),
    };
    let d = t.dim();
    let block = |i1: usize, i2: usize, j1: usize, j2: usize| t.block(i1 * n2 + i2, j1 * m2 + j2);
    let sum_second = |i1: usize, j1: usize, j2: usize| {
        let mut acc = CMatrix::zeros(d, d);
        for i2 in 0..n2 {
            acc += block(i1, i2, j1, j2);
        }
        acc
    };
    let sum_first = |i2: usize, j1: usize, j2: usize| {
        let mut acc = CMatrix::zeros(d, d);
        for i1 in 0..n1 {
            acc += block(i1, i2, j1, j2);
        }
        acc
    };
    let mut fiber: f64 = 0.0;
    let mut fiber_at = (String::new(), String::new());
    for i1 in 0..n1 {
        for j1 in 0..m1 {
            let base = sum_second(i1, j1, 0);
            for j2 in 1..m2 {
                let dev = (&sum_second(i1, j1, j2) - &base).max_norm();
                if dev > fiber {
                    fiber = dev;
                    fiber_at = ("first marginal".into(), format!("row {i1}, column {j1}, free index {j2}"));
                }
            }
        }
    }
    for i2 in 0..n2 {
        for j2 in 0..m2 {
            let base = sum_first(i2, 0, j2);
            for j1 in 1..m1 {
                let dev = (&sum_first(i2, j1, j2) - &base).max_norm();
                if dev > fiber {
                    fiber = dev;
                    fiber_at = ("second marginal".into(), format!("row {i2}, column {j2}, free index {j1}"));
                }
            }
        }
    }
    if fiber > tol {
        return Err(Error::FiberEquality {
            family: fiber_at.0,
            residual: fiber,
            location: fiber_at.1,
        });
    }
    let first = |i1: usize, j1: usize| if m2 == 0 { CMatrix::zeros(d, d) } else { sum_second(i1, j1, 0) };
    let second = |i2: usize, j2: usize| if m1 == 0 { CMatrix::zeros(d, d) } else { sum_first(i2, 0, j2) };
    let p_first: Vec<Vec<CMatrix>> = (0..n1).map(|i| (0..m1).map(|j| first(i, j)).collect()).collect();
    let p_second: Vec<Vec<CMatrix>> = (0..n2).map(|i| (0..m2).map(|j| second(i, j)).collect()).collect();

    let id = CMatrix::identity(d);
    let mut pvm: f64 = 0.0;
    for grid in [&p_first, &p_second] {
        for row in grid.iter() {
            for b in row {
                pvm = pvm.max(projection_residual(b)?);
            }
        }
        let cols = grid.first().map_or(0, Vec::len);
        for j in 0..cols {
            let mut acc = CMatrix::zeros(d, d);
            for row in grid.iter() {
                acc += &row[j];
            }
            pvm = pvm.max((&acc - &id).max_norm());
        }
    }
    let mut product: f64 = 0.0;
    for (i1, row1) in p_first.iter().enumerate() {
        for (i2, row2) in p_second.iter().enumerate() {
            for (j1, x) in row1.iter().enumerate() {
                for (j2, y) in row2.iter().enumerate() {
                    let u = block(i1, i2, j1, j2);
                    product = product.max((&(x * y) - u).max_norm()).max((&(y * x) - u).max_norm());
                }
            }
        }
    }
    let grid_of = |g: Vec<Vec<CMatrix>>, rows: &[String], cols: &[String]| {
        OperatorMagicUnitary::from_grid(rows.to_vec(), cols.to_vec(), d, g)
    };
    let (first, second) = match kind {
        GridKind::Questions => (grid_of(p_first, labels[0], labels[2])?, grid_of(p_second, labels[1], labels[3])?),
        GridKind::Answers => (
            grid_of(p_first, labels[2], labels[0])?.transposed(),
            grid_of(p_second, labels[3], labels[1])?.transposed(),
        ),
    };
    let magic = (first.num_rows() == first.num_cols() && second.num_rows() == second.num_cols())
        .then(|| (is_magic_unitary(&first, tol), is_magic_unitary(&second, tol)));
    Ok(OperatorMarginals {
        tol,
        first,
        second,
        fiber,
        pvm,
        product,
        magic,
    })
}

/// Outcome of the classical game isomorphism search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameIsoSearch {
    Found(RelabelingQuadruple),
    /// Label set sizes differ.
    SizeMismatch(String),
    /// A relabeling-invariant count differs.
    InvariantMismatch(String),
    /// Every candidate was tried.
    Exhausted,
}

fn axis_counts(game: &NonlocalGame) -> [Vec<usize>; 4] {
    let (nx, ny, na, nb) = game.dims();
    let mut c = [vec![0; nx], vec![0; ny], vec![0; na], vec![0; nb]];
    for [x, y, a, b] in game.winning_tuples() {
        c[0][x] += 1;
        c[1][y] += 1;
        c[2][a] += 1;
        c[3][b] += 1;
    }
    c
}

fn candidate_maps(c1: &[usize], c2: &[usize]) -> Vec<Vec<usize>> {
    let n = c1.len();
    (0..n)
        .permutations(n)
        .filter(|p| (0..n).all(|i| c1[i] == c2[p[i]]))
        .collect()
}

/// Brute force over the four bijections, pruned by per-label winning counts
/// and partial rule checks; the first witness in lexicographic order is returned.
pub fn find_game_isomorphism_classical(game1: &NonlocalGame, game2: &NonlocalGame) -> GameIsoSearch {
    let (d1, d2) = (game1.dims(), game2.dims());
    if d1 != d2 {
        return GameIsoSearch::SizeMismatch(format!("label set sizes {d1:?} vs {d2:?}"));
    }
    if game1.num_winning() != game2.num_winning() {
        return GameIsoSearch::InvariantMismatch(format!(
            "{} vs {} winning tuples",
            game1.num_winning(),
            game2.num_winning()
        ));
    }
    let (k1, k2) = (axis_counts(game1), axis_counts(game2));
    let names = ["X", "Y", "A", "B"];
    for i in 0..4 {
        let (mut s1, mut s2) = (k1[i].clone(), k2[i].clone());
        s1.sort_unstable();
        s2.sort_unstable();
        if s1 != s2 {
            return GameIsoSearch::InvariantMismatch(format!("winning counts per {} label differ", names[i]));
        }
    }
    let cands: Vec<Vec<Vec<usize>>> = (0..4).map(|i| candidate_maps(&k1[i], &k2[i])).collect();
    let (nx, ny, na, nb) = d1;
    let xy_ok = |ax: &[usize], ay: &[usize]| {
        (0..nx).all(|x| {
            (0..ny).all(|y| {
                let c1 = (0..na).flat_map(|a| (0..nb).map(move |b| (a, b))).filter(|&(a, b)| game1.wins(x, y, a, b)).count();
                let c2 = (0..na).flat_map(|a| (0..nb).map(move |b| (a, b))).filter(|&(a, b)| game2.wins(ax[x], ay[y], a, b)).count();
                c1 == c2
            })
        })
    };
    let xya_ok = |ax: &[usize], ay: &[usize], ba: &[usize]| {
        (0..nx).all(|x| {
            (0..ny).all(|y| {
                (0..na).all(|a| {
                    let c1 = (0..nb).filter(|&b| game1.wins(x, y, a, b)).count();
                    let c2 = (0..nb).filter(|&b| game2.wins(ax[x], ay[y], ba[a], b)).count();
                    c1 == c2
                })
            })
        })
    };
    let found = cands[0].par_iter().find_map_first(|ax| {
        for ay in &cands[1] {
            if !xy_ok(ax, ay) {
                continue;
            }
            for ba in &cands[2] {
                if !xya_ok(ax, ay, ba) {
                    continue;
                }
                for bb in &cands[3] {
                    let q = RelabelingQuadruple {
                        alpha_x: ax.clone(),
                        alpha_y: ay.clone(),
                        beta_a: ba.clone(),
                        beta_b: bb.clone(),
                    };
                    if matches!(q.counterexample(game1, game2), Ok(None)) {
                        return Some(q);
                    }
                }
            }
        }
        None
    });
    found.map_or(GameIsoSearch::Exhausted, GameIsoSearch::Found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(p: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    /// Win iff `a ⊕ b = x ∧ y`.
    pub(crate) fn chsh() -> NonlocalGame {
        NonlocalGame::from_fn(labels("x", 2), labels("y", 2), labels("a", 2), labels("b", 2), |x, y, a, b| (a ^ b) == (x & y)).unwrap()
    }

    fn primed(game: &NonlocalGame) -> NonlocalGame {
        let p = |v: &[String]| v.iter().map(|s| format!("{s}'")).collect::<Vec<_>>();
        let winning = game.winning_tuples();
        NonlocalGame::from_winning(p(game.questions_x()), p(game.questions_y()), p(game.answers_a()), p(game.answers_b()), &winning).unwrap()
    }

    #[test]
    fn layout_blocks() {
        let g = chsh();
        let l = SupergameLayout::new(&g, &g);
        assert_eq!(l.size(), 16);
        assert_eq!(l.w2(), Block { offset: 12, first: 2, second: 2 });
        assert_eq!(l.labels()[5], "U2:(x0,y1)");
    }

    #[test]
    fn relabeling_is_sns_and_perfect() {
        let g = chsh();
        let h = primed(&g);
        let q = RelabelingQuadruple::identity(&g);
        let gamma = relabeling_sns_strategy(&q, &g, &h).unwrap();
        assert!(check_strong_ns(&gamma, 0.0).passed());
        assert!(check_bicorrelation(&gamma, 0.0));
        let rule = supergame_rule(&g, &h);
        assert!(is_perfect_strategy(&rule, gamma.correlation(), 0.0).unwrap().perfect);
    }

    #[test]
    fn relabeling_rejects_bad_quadruple() {
        let g = chsh();
        let mut q = RelabelingQuadruple::identity(&g);
        q.beta_a = vec![1, 0];
        match relabeling_sns_strategy(&q, &g, &g) {
            Err(Error::RuleNotPreserved { x, y, a, b }) => {
                assert_eq!((x.as_str(), y.as_str(), a.as_str(), b.as_str()), ("x0", "y0", "a0", "b0"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_gamma() {
        let g = chsh();
        let gamma = uniform_sns_correlation(&g, &g);
        assert!(check_strong_ns(&gamma, 1e-12).passed());
        let e = Channel::from_correlation(&Correlation::from_fn(labels("x", 2), labels("y", 2), labels("a", 2), labels("b", 2), |x, _, a, b| {
            (a == x && b == 0) as u8 as f64
        }));
        let out = simulate(&gamma, &e).unwrap();
        for u in 0..4 {
            for w in 0..4 {
                assert!((out.get(w, u) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fiber_violation_is_located() {
        // Alice answers (y2, 0) on question (x2, y2): the x1-marginal
        // depends on y2.
        let g = chsh();
        let layout = SupergameLayout::new(&g, &g);
        let (u1, u2, w1, w2) = (layout.u1(), layout.u2(), layout.w1(), layout.w2());
        let gamma = SnsCorrelation::from_fn(layout.clone(), |x, y, a, b| {
            let alice = if x >= u2.offset && x < u2.offset + 4 {
                let k = x - u2.offset;
                u1.at(k % 2, 0)
            } else {
                0
            };
            let bob = if y >= w1.offset && y < w1.offset + 4 { w2.offset } else { 0 };
            (a == alice && b == bob) as u8 as f64
        });
        let r = check_strong_ns(&gamma, 1e-12);
        assert!(r.ns <= 1e-12);
        assert!(r.families[0].deviation <= 1e-12);
        assert_eq!(r.families[1].deviation, 1.0);
        assert!(r.families[1].location.is_some());
        assert!(!r.passed());
    }

    #[test]
    fn non_normalizing_transpose() {
        let g = chsh();
        let layout = SupergameLayout::new(&g, &g);
        // everyone answers the first symbol: valid but the transpose is not normalized
        let gamma = SnsCorrelation::from_fn(layout, |_, _, a, b| (a == 0 && b == 0) as u8 as f64);
        assert!(gamma.correlation().is_valid(0.0));
        assert!(!check_bicorrelation(&gamma, 1e-9));
    }

    #[test]
    fn simulate_identity_relabeling() {
        let g = chsh();
        let h = primed(&g);
        let gamma = relabeling_sns_strategy(&RelabelingQuadruple::identity(&g), &g, &h).unwrap();
        let e = Channel::from_correlation(&Correlation::from_fn(labels("x", 2), labels("y", 2), labels("a", 2), labels("b", 2), |x, y, a, b| {
            if (a ^ b) == (x & y) { 0.5 } else { 0.0 }
        }));
        let out = simulate(&gamma, &e).unwrap();
        for u in 0..4 {
            for w in 0..4 {
                assert_eq!(out.get(w, u), e.get(w, u));
            }
        }
        assert_eq!(out.inputs()[1], "(x0',y1')");
    }

    #[test]
    fn transport_of_perfect_strategies() {
        // a game with a perfect classical strategy: win iff a = x and b = y
        let g = NonlocalGame::from_fn(labels("x", 2), labels("y", 2), labels("a", 2), labels("b", 2), |x, y, a, b| a == x && b == y).unwrap();
        let h = primed(&g);
        let gamma = relabeling_sns_strategy(&RelabelingQuadruple::identity(&g), &g, &h).unwrap();
        let e = Correlation::deterministic(&g, &[0, 1], &[0, 1]).unwrap();
        let report = transport_check(&gamma, &g, &h, &e, 0.0).unwrap();
        assert!(report.succeeded());
        let bad = Correlation::deterministic(&g, &[1, 1], &[0, 1]).unwrap();
        let report = transport_check(&gamma, &g, &h, &bad, 0.0).unwrap();
        assert!(!report.succeeded());
        assert!(!report.perfectness.violations.is_empty());
        let uniform = uniform_sns_correlation(&g, &h);
        assert!(matches!(transport_check(&uniform, &g, &h, &e, 1e-9), Err(Error::NotPerfectSupergame(_))));
    }

    #[test]
    fn marginals_of_relabeling_blocks() {
        let g = chsh();
        let (ax, ay) = ([1usize, 0], [0usize, 1]);
        let rows = labels("u", 4);
        let p_u = OperatorMagicUnitary::from_fn(rows.clone(), rows.clone(), 1, |i, j| {
            CMatrix::scalar((ax[i / 2] == j / 2 && ay[i % 2] == j % 2) as u8 as f64)
        })
        .unwrap();
        let m = operator_marginals(&p_u, &g, &g, GridKind::Questions, 0.0).unwrap();
        assert!(m.passed());
        assert_eq!(m.first.block(0, 1), &CMatrix::scalar(1.0));
        assert_eq!(m.first.block(0, 0), &CMatrix::scalar(0.0));
        assert_eq!(m.second.block(1, 1), &CMatrix::scalar(1.0));
        let m = operator_marginals(&p_u, &g, &g, GridKind::Answers, 0.0).unwrap();
        assert!(m.passed());
        assert_eq!(m.first.block(1, 0), &CMatrix::scalar(1.0));

        let mut broken = p_u.clone();
        broken.set_block(0, 2, CMatrix::scalar(0.5)).unwrap();
        assert!(matches!(
            operator_marginals(&broken, &g, &g, GridKind::Questions, 1e-9),
            Err(Error::FiberEquality { .. })
        ));
    }

    #[test]
    fn game_isomorphism_search() {
        let g = chsh();
        assert_eq!(find_game_isomorphism_classical(&g, &g), GameIsoSearch::Found(RelabelingQuadruple::identity(&g)));
        let h = NonlocalGame::from_fn(labels("x", 2), labels("y", 2), labels("a", 2), labels("b", 2), |x, y, a, b| (a ^ b) == ((1 - x) & y)).unwrap();
        match find_game_isomorphism_classical(&g, &h) {
            GameIsoSearch::Found(q) => assert_eq!(q.counterexample(&g, &h).unwrap(), None),
            other => panic!("unexpected {other:?}"),
        }
        let easy = NonlocalGame::from_fn(labels("x", 2), labels("y", 2), labels("a", 2), labels("b", 2), |_, _, a, _| a == 0).unwrap();
        assert!(matches!(find_game_isomorphism_classical(&g, &easy), GameIsoSearch::InvariantMismatch(_)));
        let small = NonlocalGame::from_fn(labels("x", 1), labels("y", 2), labels("a", 2), labels("b", 2), |_, _, _, _| true).unwrap();
        assert!(matches!(find_game_isomorphism_classical(&g, &small), GameIsoSearch::SizeMismatch(_)));
    }
}
