//! JSON file formats for hypergraphs, graphs, games, correlations, operator
//! strategies and supergame correlations.

use std::fs;
use std::path::Path;

use hypiso::game::{Correlation, NonlocalGame};
use hypiso::hypergraph::{Hypergraph, SimpleGraph};
use hypiso::linalg::CMatrix;
use hypiso::operator::{FiniteDimRep, OperatorMagicUnitary};
use hypiso::supergame::{SnsCorrelation, SupergameLayout};
use hypiso::{Error, Result};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

fn parse_err(location: impl Into<String>, message: impl ToString) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.to_string(),
    }
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("line {}, column {}", e.line(), e.column()), e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file formats serialize");
    s.push('\n');
    s
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| parse_err(path.display().to_string(), e))
}

/// Prefixes the location of a parse error with the file name.
fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { location, message } => parse_err(format!("{}: {location}", path.display()), message),
        other => parse_err(path.display().to_string(), other),
    })
}

/// A label given by name or by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelRef {
    Index(usize),
    Name(String),
}

impl LabelRef {
    fn resolve(&self, labels: &[String], field: &str) -> Result<usize> {
        match self {
            LabelRef::Index(i) if *i < labels.len() => Ok(*i),
            LabelRef::Index(i) => Err(parse_err(field, format!("index {i} out of range (0..{})", labels.len()))),
            LabelRef::Name(s) => labels
                .iter()
                .position(|l| l == s)
                .ok_or_else(|| parse_err(field, format!("unknown label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub label: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypergraphFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeEntry>,
}

impl HypergraphFile {
    pub fn from_hypergraph(h: &Hypergraph) -> Self {
        Self {
            vertices: h.vertices().to_vec(),
            edges: h
                .edge_list()
                .into_iter()
                .map(|(label, members)| EdgeEntry { label, members })
                .collect(),
        }
    }

    pub fn build(self) -> Result<Hypergraph> {
        let edges = self.edges.into_iter().map(|e| (e.label, e.members));
        Hypergraph::new(self.vertices, edges).map_err(|e| {
            let field = match &e {
                Error::DuplicateVertex(_) => "vertices",
                _ => "edges",
            };
            parse_err(field, e)
        })
    }
}

pub fn hypergraph_from_str(text: &str) -> Result<Hypergraph> {
    from_json::<HypergraphFile>(text)?.build()
}

pub fn hypergraph_to_string(h: &Hypergraph) -> String {
    to_json(&HypergraphFile::from_hypergraph(h))
}

pub fn parse_hypergraph(path: &Path) -> Result<Hypergraph> {
    in_file(path, read_file(path).and_then(|t| hypergraph_from_str(&t)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

impl GraphFile {
    pub fn from_graph(g: &SimpleGraph) -> Self {
        let v = g.vertices();
        Self {
            vertices: v.to_vec(),
            edges: g.edge_list().into_iter().map(|(i, j)| [v[i].clone(), v[j].clone()]).collect(),
        }
    }

    pub fn build(self) -> Result<SimpleGraph> {
        let edges: Vec<(&str, &str)> = self.edges.iter().map(|[u, v]| (u.as_str(), v.as_str())).collect();
        SimpleGraph::new(self.vertices.clone(), &edges).map_err(|e| {
            let field = match &e {
                Error::DuplicateVertex(_) => "vertices",
                _ => "edges",
            };
            parse_err(field, e)
        })
    }
}

pub fn graph_from_str(text: &str) -> Result<SimpleGraph> {
    from_json::<GraphFile>(text)?.build()
}

pub fn graph_to_string(g: &SimpleGraph) -> String {
    to_json(&GraphFile::from_graph(g))
}

pub fn parse_graph(path: &Path) -> Result<SimpleGraph> {
    in_file(path, read_file(path).and_then(|t| graph_from_str(&t)))
}

/// Either a graph or a hypergraph file, told apart by the shape of `edges`.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Graph(SimpleGraph),
    Hypergraph(Hypergraph),
}

pub fn parse_structure(path: &Path) -> Result<Structure> {
    let text = in_file(path, read_file(path))?;
    let value: serde_json::Value = in_file(path, from_json(&text))?;
    let is_graph = value
        .get("edges")
        .and_then(|e| e.as_array())
        .is_some_and(|edges| edges.first().is_some_and(|e| e.is_array()));
    if is_graph {
        in_file(path, graph_from_str(&text)).map(Structure::Graph)
    } else {
        in_file(path, hypergraph_from_str(&text)).map(Structure::Hypergraph)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(rename = "X")]
    pub x: Vec<String>,
    #[serde(rename = "Y")]
    pub y: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<String>,
    pub lambda: Vec<[LabelRef; 4]>,
}

impl GameFile {
    pub fn from_game(g: &NonlocalGame) -> Self {
        let name = |labels: &[String], i: usize| LabelRef::Name(labels[i].clone());
        Self {
            x: g.questions_x().to_vec(),
            y: g.questions_y().to_vec(),
            a: g.answers_a().to_vec(),
            b: g.answers_b().to_vec(),
            lambda: g
                .winning_tuples()
                .into_iter()
                .map(|[x, y, a, b]| {
                    [
                        name(g.questions_x(), x),
                        name(g.questions_y(), y),
                        name(g.answers_a(), a),
                        name(g.answers_b(), b),
                    ]
                })
                .collect(),
        }
    }

    pub fn build(self) -> Result<NonlocalGame> {
        for (field, labels) in [("X", &self.x), ("Y", &self.y), ("A", &self.a), ("B", &self.b)] {
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = labels.iter().find(|l| !seen.insert(*l)) {
                return Err(parse_err(field, format!("duplicate label `{dup}`")));
            }
        }
        let axes = [&self.x, &self.y, &self.a, &self.b];
        let winning = self
            .lambda
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let mut idx = [0; 4];
                for (i, r) in t.iter().enumerate() {
                    idx[i] = r.resolve(axes[i], &format!("lambda[{k}][{i}]"))?;
                }
                Ok(idx)
            })
            .collect::<Result<Vec<_>>>()?;
        NonlocalGame::from_winning(self.x, self.y, self.a, self.b, &winning).map_err(|e| parse_err("lambda", e))
    }
}

pub fn game_from_str(text: &str) -> Result<NonlocalGame> {
    from_json::<GameFile>(text)?.build()
}

/// Compact, since winning lists of isomorphism games run to millions of tuples.
pub fn game_to_string(g: &NonlocalGame) -> String {
    let mut s = serde_json::to_string(&GameFile::from_game(g)).expect("file formats serialize");
    s.push('\n');
    s
}

pub fn parse_game(path: &Path) -> Result<NonlocalGame> {
    in_file(path, read_file(path).and_then(|t| game_from_str(&t)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationEntry {
    pub x: LabelRef,
    pub y: LabelRef,
    pub a: LabelRef,
    pub b: LabelRef,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationFile {
    pub p: Vec<CorrelationEntry>,
}

impl CorrelationFile {
    /// Nonzero entries only.
    pub fn from_correlation(c: &Correlation) -> Self {
        let (nx, ny, na, nb) = c.dims();
        let mut p = Vec::new();
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for b in 0..nb {
                        let value = c.get(x, y, a, b);
                        if value != 0.0 {
                            p.push(CorrelationEntry {
                                x: LabelRef::Name(c.questions_x()[x].clone()),
                                y: LabelRef::Name(c.questions_y()[y].clone()),
                                a: LabelRef::Name(c.answers_a()[a].clone()),
                                b: LabelRef::Name(c.answers_b()[b].clone()),
                                value,
                            });
                        }
                    }
                }
            }
        }
        Self { p }
    }

    /// Entries are resolved against the given label sets; repeated entries are an error.
    pub fn build(&self, x: &[String], y: &[String], a: &[String], b: &[String]) -> Result<Correlation> {
        let mut c = Correlation::zeros(x.to_vec(), y.to_vec(), a.to_vec(), b.to_vec());
        let mut seen = std::collections::HashSet::new();
        for (k, e) in self.p.iter().enumerate() {
            let f = |name: &str| format!("p[{k}].{name}");
            let idx = (
                e.x.resolve(x, &f("x"))?,
                e.y.resolve(y, &f("y"))?,
                e.a.resolve(a, &f("a"))?,
                e.b.resolve(b, &f("b"))?,
            );
            if !e.value.is_finite() {
                return Err(parse_err(f("value"), "value is not finite"));
            }
            if !seen.insert(idx) {
                return Err(parse_err(format!("p[{k}]"), "entry repeats an earlier (x, y, a, b)"));
            }
            c.set(idx.0, idx.1, idx.2, idx.3, e.value);
        }
        Ok(c)
    }
}

pub fn correlation_from_str(text: &str, game: &NonlocalGame) -> Result<Correlation> {
    from_json::<CorrelationFile>(text)?.build(game.questions_x(), game.questions_y(), game.answers_a(), game.answers_b())
}

pub fn correlation_to_string(c: &Correlation) -> String {
    to_json(&CorrelationFile::from_correlation(c))
}

pub fn parse_correlation(path: &Path, game: &NonlocalGame) -> Result<Correlation> {
    in_file(path, read_file(path).and_then(|t| correlation_from_str(&t, game)))
}

/// Blocks as `blocks[i][j][r][c] = [re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub blocks: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl GridFile {
    pub fn from_grid(u: &OperatorMagicUnitary) -> Self {
        let d = u.dim();
        let block = |m: &CMatrix| -> Vec<Vec<[f64; 2]>> {
            (0..d).map(|r| (0..d).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
        };
        Self {
            rows: u.rows().to_vec(),
            cols: u.cols().to_vec(),
            blocks: (0..u.num_rows())
                .map(|i| (0..u.num_cols()).map(|j| block(u.block(i, j))).collect())
                .collect(),
        }
    }

    pub fn build(self, dim: usize, field: &str) -> Result<OperatorMagicUnitary> {
        if self.blocks.len() != self.rows.len() {
            return Err(parse_err(
                format!("{field}.blocks"),
                format!("{} block rows for {} row labels", self.blocks.len(), self.rows.len()),
            ));
        }
        let mut grid = Vec::with_capacity(self.blocks.len());
        for (i, row) in self.blocks.into_iter().enumerate() {
            if row.len() != self.cols.len() {
                return Err(parse_err(
                    format!("{field}.blocks[{i}]"),
                    format!("{} blocks for {} column labels", row.len(), self.cols.len()),
                ));
            }
            let mut out = Vec::with_capacity(row.len());
            for (j, m) in row.into_iter().enumerate() {
                let loc = format!("{field}.blocks[{i}][{j}]");
                if m.len() != dim {
                    return Err(parse_err(loc, format!("block has {} rows, expected {dim}", m.len())));
                }
                let mut data = Vec::with_capacity(dim * dim);
                for (r, line) in m.into_iter().enumerate() {
                    if line.len() != dim {
                        return Err(parse_err(loc, format!("row {r} has {} entries, expected {dim}", line.len())));
                    }
                    data.extend(line.into_iter().map(|[re, im]| Complex64::new(re, im)));
                }
                out.push(CMatrix::from_vec(dim, dim, data));
            }
            grid.push(out);
        }
        OperatorMagicUnitary::from_grid(self.rows, self.cols, dim, grid).map_err(|e| parse_err(field, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub dim: usize,
    #[serde(rename = "P_V")]
    pub p_v: GridFile,
    #[serde(rename = "P_E", default, skip_serializing_if = "Option::is_none")]
    pub p_e: Option<GridFile>,
}

/// A vertex grid with an optional edge grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub p_v: OperatorMagicUnitary,
    pub p_e: Option<OperatorMagicUnitary>,
}

impl Strategy {
    pub fn dim(&self) -> usize {
        self.p_v.dim()
    }

    pub fn from_rep(rep: &FiniteDimRep) -> Self {
        Self {
            p_v: rep.p_v.clone(),
            p_e: Some(rep.p_e.clone()),
        }
    }
}

pub fn strategy_from_str(text: &str) -> Result<Strategy> {
    let f: StrategyFile = from_json(text)?;
    if f.dim == 0 {
        return Err(parse_err("dim", "dimension must be positive"));
    }
    Ok(Strategy {
        p_v: f.p_v.build(f.dim, "P_V")?,
        p_e: f.p_e.map(|g| g.build(f.dim, "P_E")).transpose()?,
    })
}

pub fn strategy_to_string(s: &Strategy) -> String {
    to_json(&StrategyFile {
        dim: s.dim(),
        p_v: GridFile::from_grid(&s.p_v),
        p_e: s.p_e.as_ref().map(GridFile::from_grid),
    })
}

pub fn parse_strategy(path: &Path) -> Result<Strategy> {
    in_file(path, read_file(path).and_then(|t| strategy_from_str(&t)))
}

/// A supergame correlation with the two games that fix its alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaFile {
    pub game1: GameFile,
    pub game2: GameFile,
    pub p: Vec<CorrelationEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gamma {
    pub game1: NonlocalGame,
    pub game2: NonlocalGame,
    pub gamma: SnsCorrelation,
}

pub fn gamma_from_str(text: &str) -> Result<Gamma> {
    let f: GammaFile = from_json(text)?;
    let in_field = |field: &str, e: Error| match e {
        Error::Parse { location, message } => parse_err(format!("{field}.{location}"), message),
        other => parse_err(field, other),
    };
    let game1 = f.game1.build().map_err(|e| in_field("game1", e))?;
    let game2 = f.game2.build().map_err(|e| in_field("game2", e))?;
    let layout = SupergameLayout::new(&game1, &game2);
    let labels = layout.labels();
    let corr = CorrelationFile { p: f.p }.build(&labels, &labels, &labels, &labels)?;
    let gamma = SnsCorrelation::new(layout, corr)?;
    Ok(Gamma { game1, game2, gamma })
}

pub fn gamma_to_string(g: &Gamma) -> String {
    to_json(&GammaFile {
        game1: GameFile::from_game(&g.game1),
        game2: GameFile::from_game(&g.game2),
        p: CorrelationFile::from_correlation(g.gamma.correlation()).p,
    })
}

pub fn parse_gamma(path: &Path) -> Result<Gamma> {
    in_file(path, read_file(path).and_then(|t| gamma_from_str(&t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hypiso::bcs::magic_square_strategy;
    use hypiso::hypergraph::lambda_nk;

    const TRIANGLE: &str = r#"{"vertices":["1","2","3"],"edges":[{"label":"a","members":["1","2"]},{"label":"b","members":["2","3"]},{"label":"c","members":["1","3"]}]}"#;

    #[test]
    fn triangle_parses() {
        let h = hypergraph_from_str(TRIANGLE).unwrap();
        assert_eq!(h.num_edges(), 3);
        assert_eq!(hypergraph_from_str(&hypergraph_to_string(&h)).unwrap(), h);
    }

    #[test]
    fn duplicate_vertex_is_named() {
        let err = hypergraph_from_str(r#"{"vertices":["1","1"],"edges":[{"label":"a","members":["1"]}]}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("vertices:"), "{msg}");
        assert!(msg.contains("`1`"), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = hypergraph_from_str("{\n\"vertices\": [\"1\",]\n}").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
        let err = hypergraph_from_str(r#"{"vertices":["1"]}"#).unwrap_err();
        assert!(err.to_string().contains("edges"), "{err}");
    }

    #[test]
    fn non_square_block_is_located() {
        let text = r#"{"dim":2,"P_V":{"rows":["r"],"cols":["c"],"blocks":[[[[[1,0],[0,0]],[[0,0]]]]]}}"#;
        let err = strategy_from_str(text).unwrap_err().to_string();
        assert!(err.starts_with("P_V.blocks[0][0]"), "{err}");
        assert!(err.contains("row 1"), "{err}");
    }

    #[test]
    fn strategy_round_trip() {
        let s = Strategy {
            p_v: magic_square_strategy().unwrap(),
            p_e: None,
        };
        assert_eq!(strategy_from_str(&strategy_to_string(&s)).unwrap(), s);
    }

    #[test]
    fn game_accepts_indices() {
        let text = r#"{"X":["0","1"],"Y":["0"],"A":["a"],"B":["b"],"lambda":[[1,"0","a",0]]}"#;
        let g = game_from_str(text).unwrap();
        assert!(g.wins(1, 0, 0, 0));
        assert!(!g.wins(0, 0, 0, 0));
        let err = game_from_str(r#"{"X":["0"],"Y":["0"],"A":["a"],"B":["b"],"lambda":[[0,0,"z",0]]}"#).unwrap_err();
        assert!(err.to_string().starts_with("lambda[0][2]"), "{err}");
    }

    #[test]
    fn lambda_family_round_trip() {
        let h = lambda_nk(3, 2).unwrap();
        assert_eq!(hypergraph_from_str(&hypergraph_to_string(&h)).unwrap(), h);
    }
}
