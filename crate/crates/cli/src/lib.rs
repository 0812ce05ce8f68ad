//! Command-line front end: file formats, run reports and subcommand dispatch.

pub mod io;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use hypiso::bcs::{
    all_assignments, enumerate_sat, magic_square_bcs, magic_square_graphs, magic_square_strategy, neighborhood_pullback,
    noncommuting_witness,
};
use hypiso::game::{
    build_graph_iso_game, build_hypiso_game, check_ns, game_to_hypergraph, is_perfect_strategy, IsoRule, Kind,
    NonlocalGame, QuestionAnswerLabel, Side,
};
use hypiso::hypergraph::{graph_to_hypergraph, neighborhood_hypergraph, Hypergraph, SimpleGraph};
use hypiso::linalg::CMatrix;
use hypiso::operator::{
    check_adjacency_intertwining, check_degree_vanishing, check_edgewise_commutation, check_inclusion_conditions,
    correlation_from_rep, is_magic_unitary, lift_edge_magic_unitary, pvm_table_from_rep, pvm_table_from_vertex_unitary,
    verify_perfect_algebraic, FiniteDimRep, OperatorMagicUnitary, PvmFamily, DEFAULT_TOL, MAX_CORRELATION_ENTRIES,
};
use hypiso::solver::{find_graph_isomorphism, find_hypergraph_isomorphism, verify_graph_isomorphism, verify_intertwiner};
use hypiso::supergame::{
    check_bicorrelation, check_strong_ns, relabeling_sns_strategy, simulate, supergame_rule, transport_check, Channel,
    GameIsoSearch,
};
use hypiso::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::io::{Gamma, Strategy, Structure};
use crate::report::{InputHash, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hypiso", version, about = "Hypergraph and nonlocal game isomorphism verification")]
pub struct Cli {
    /// Residual tolerance for every numeric check.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Graphs,
    Strategy,
    Witness,
    Pullback,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a classical isomorphism between two graph or hypergraph files.
    CheckIso {
        first: PathBuf,
        second: PathBuf,
        /// Treat graph inputs as hypergraphs with two-element edges.
        #[arg(long)]
        as_hypergraph: bool,
    },
    /// Write the isomorphism game of two graphs or hypergraphs.
    BuildGame {
        first: PathBuf,
        second: PathBuf,
        /// Build the hypergraph game even for graph inputs.
        #[arg(long)]
        as_hypergraph: bool,
        /// Write the game here instead of embedding it in the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an operator strategy against a game file or a pair of structures.
    VerifyStrategy {
        /// Game file whose labels name the strategy's rows and columns.
        #[arg(long, conflicts_with_all = ["g1", "g2"])]
        game: Option<PathBuf>,
        #[arg(long, requires = "g2")]
        g1: Option<PathBuf>,
        #[arg(long, requires = "g1")]
        g2: Option<PathBuf>,
        /// Strategy file with `P_V` and optionally `P_E`.
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        as_hypergraph: bool,
    },
    /// Build the magic-square graphs, their quantum strategy and derived objects.
    MagicSquare {
        #[arg(long, value_enum)]
        emit: Emit,
        /// Directory for the emitted files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write the neighborhood hypergraph of a graph.
    Neighborhood {
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the hypergraph of winning pairs of a game.
    EncodeGame {
        game: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check strong no-signalling, the transpose and perfectness of a supergame correlation.
    CheckSns { gamma: PathBuf },
    /// Simulate a strategy of the first game through a supergame correlation.
    Simulate {
        #[arg(long)]
        gamma: PathBuf,
        /// Correlation file of a strategy for the first game.
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a relabeling isomorphism between two games.
    GameIso {
        #[arg(long)]
        g1: PathBuf,
        #[arg(long)]
        g2: PathBuf,
        /// Also write the relabeling supergame strategy.
        #[arg(long)]
        emit_gamma: Option<PathBuf>,
    },
    /// Reproduce the magic-square separation end to end.
    Report {
        /// Number of random unitary conjugations of the strategy to check.
        #[arg(long, default_value_t = 4)]
        cases: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant(m) => CliError::Internal(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Positive,
    Negative,
    /// A check that must hold by construction failed.
    Broken,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Positive
        } else {
            Outcome::Negative
        }
    }

    pub fn code(self) -> i32 {
        match self {
            Outcome::Positive => EXIT_OK,
            Outcome::Negative => EXIT_NEGATIVE,
            Outcome::Broken => EXIT_INTERNAL,
        }
    }
}

pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let (code, stdout) = run(&cli);
    if let Some(s) = stdout {
        print!("{s}");
    }
    code
}

/// Runs a parsed command; returns the exit code and the report text.
pub fn run(cli: &Cli) -> (i32, Option<String>) {
    let start = Instant::now();
    let mut report = RunReport::new(command_name(&cli.command), cli.tol, cli.seed);
    let outcome = execute(cli, &mut report);
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(o) => {
            let failed: Vec<&str> = report.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
            let word = match o {
                Outcome::Positive => "ok",
                Outcome::Negative => "negative",
                Outcome::Broken => "internal check failed",
            };
            if failed.is_empty() {
                eprintln!("{}: {word} ({} checks)", report.command, report.verdicts.len());
            } else {
                eprintln!("{}: {word}; failing: {}", report.command, failed.join(", "));
            }
            (o.code(), Some(report.to_json()))
        }
        Err(CliError::Input(m)) => {
            eprintln!("error: {m}");
            (EXIT_INPUT, None)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            (EXIT_INTERNAL, None)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckIso { .. } => "check-iso",
        Command::BuildGame { .. } => "build-game",
        Command::VerifyStrategy { .. } => "verify-strategy",
        Command::MagicSquare { .. } => "magic-square",
        Command::Neighborhood { .. } => "neighborhood",
        Command::EncodeGame { .. } => "encode-game",
        Command::CheckSns { .. } => "check-sns",
        Command::Simulate { .. } => "simulate",
        Command::GameIso { .. } => "game-iso",
        Command::Report { .. } => "report",
    }
}

fn execute(cli: &Cli, report: &mut RunReport) -> CliResult<Outcome> {
    let tol = cli.tol;
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Input(format!("--tol must be a finite nonnegative number, got {tol}")));
    }
    match &cli.command {
        Command::CheckIso { first, second, as_hypergraph } => check_iso(report, first, second, *as_hypergraph),
        Command::BuildGame { first, second, as_hypergraph, out } => build_game(report, first, second, *as_hypergraph, out.as_deref()),
        Command::VerifyStrategy { game, g1, g2, strategy, as_hypergraph } => {
            let s = load(report, strategy, io::parse_strategy)?;
            match (game, g1, g2) {
                (Some(g), _, _) => {
                    let game = load(report, g, io::parse_game)?;
                    verify_against_game(report, &game, &s, tol)
                }
                (None, Some(a), Some(b)) => {
                    let a = load(report, a, io::parse_structure)?;
                    let b = load(report, b, io::parse_structure)?;
                    verify_against_structures(report, a, b, &s, *as_hypergraph, tol)
                }
                _ => Err(CliError::Input("give either --game or both --g1 and --g2".into())),
            }
        }
        Command::MagicSquare { emit, out_dir } => magic_square(report, *emit, out_dir.as_deref(), tol),
        Command::Neighborhood { graph, out } => {
            let g = load(report, graph, io::parse_graph)?;
            let n = neighborhood_hypergraph(&g)?;
            emit_file(report, "hypergraph", io::hypergraph_to_string(&n), out.as_deref())?;
            Ok(Outcome::Positive)
        }
        Command::EncodeGame { game, out } => {
            let g = load(report, game, io::parse_game)?;
            let h = game_to_hypergraph(&g)?;
            report.set("vertices", h.num_vertices());
            report.set("edges", h.num_edges());
            emit_file(report, "hypergraph", io::hypergraph_to_string(&h), out.as_deref())?;
            Ok(Outcome::Positive)
        }
        Command::CheckSns { gamma } => {
            let g = load(report, gamma, io::parse_gamma)?;
            check_sns(report, &g, tol)
        }
        Command::Simulate { gamma, channel, out } => {
            let g = load(report, gamma, io::parse_gamma)?;
            let e = load(report, channel, |p| io::parse_correlation(p, &g.game1))?;
            simulate_cmd(report, &g, &e, out.as_deref(), tol)
        }
        Command::GameIso { g1, g2, emit_gamma } => {
            let a = load(report, g1, io::parse_game)?;
            let b = load(report, g2, io::parse_game)?;
            game_iso(report, &a, &b, emit_gamma.as_deref())
        }
        Command::Report { cases } => full_report(report, *cases, cli.seed, tol),
    }
}

/// Hashes and parses an input file.
fn load<T>(report: &mut RunReport, path: &Path, parse: impl FnOnce(&Path) -> hypiso::Result<T>) -> CliResult<T> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    report.inputs.push(InputHash::of(path, &bytes));
    Ok(parse(path)?)
}

/// Writes a file, or embeds it in the report when no path is given.
fn emit_file(report: &mut RunReport, key: &str, text: String, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            report.set(&format!("{key}_file"), path.display().to_string());
        }
        None => {
            let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Internal(e.to_string()))?;
            report.set(key, value);
        }
    }
    Ok(())
}

fn as_hypergraph(s: Structure) -> CliResult<Hypergraph> {
    Ok(match s {
        Structure::Hypergraph(h) => h,
        Structure::Graph(g) => graph_to_hypergraph(&g)?,
    })
}

fn check_iso(report: &mut RunReport, first: &Path, second: &Path, force_hyper: bool) -> CliResult<Outcome> {
    let a = load(report, first, io::parse_structure)?;
    let b = load(report, second, io::parse_structure)?;
    match (a, b) {
        (Structure::Graph(g1), Structure::Graph(g2)) if !force_hyper => {
            report.set("kind", "graph");
            match find_graph_isomorphism(&g1, &g2) {
                Some(map) => {
                    if !verify_graph_isomorphism(&map, &g1, &g2)? {
                        return Err(CliError::Internal("returned vertex map does not verify".into()));
                    }
                    report.flag("isomorphic", true);
                    let pairs: Vec<[&str; 2]> =
                        map.iter().enumerate().map(|(i, &j)| [g1.vertices()[i].as_str(), g2.vertices()[j].as_str()]).collect();
                    report.set("vertex_map", pairs);
                    Ok(Outcome::Positive)
                }
                None => {
                    report.flag("isomorphic", false);
                    Ok(Outcome::Negative)
                }
            }
        }
        (a, b) => {
            let (h1, h2) = (as_hypergraph(a)?, as_hypergraph(b)?);
            report.set("kind", "hypergraph");
            match find_hypergraph_isomorphism(&h1, &h2) {
                Some(pair) => {
                    if !verify_intertwiner(&pair, &h1, &h2)? {
                        return Err(CliError::Internal("returned witness does not intertwine".into()));
                    }
                    report.flag("isomorphic", true);
                    let (v, e) = pair.labeled(&h1, &h2);
                    report.set("vertex_map", v.into_iter().map(|(a, b)| [a, b]).collect::<Vec<_>>());
                    report.set("edge_map", e.into_iter().map(|(a, b)| [a, b]).collect::<Vec<_>>());
                    Ok(Outcome::Positive)
                }
                None => {
                    report.flag("isomorphic", false);
                    Ok(Outcome::Negative)
                }
            }
        }
    }
}

fn build_game(report: &mut RunReport, first: &Path, second: &Path, force_hyper: bool, out: Option<&Path>) -> CliResult<Outcome> {
    let a = load(report, first, io::parse_structure)?;
    let b = load(report, second, io::parse_structure)?;
    let game = match (a, b) {
        (Structure::Graph(g1), Structure::Graph(g2)) if !force_hyper => build_graph_iso_game(&g1, &g2)?,
        (a, b) => build_hypiso_game(&as_hypergraph(a)?, &as_hypergraph(b)?)?,
    };
    let (n, _, m, _) = game.dims();
    report.set("questions", n);
    report.set("answers", m);
    report.set("winning_tuples", game.num_winning());
    emit_file(report, "game", io::game_to_string(&game), out)?;
    Ok(Outcome::Positive)
}

/// PVM table for a game whose labels are `H1:V:name`-style, read off the strategy grids.
fn pvm_from_labels(game: &NonlocalGame, s: &Strategy) -> CliResult<PvmFamily> {
    if game.questions_x() != game.questions_y() || game.answers_a() != game.answers_b() || game.questions_x() != game.answers_a() {
        return Err(CliError::Input("the game is not an isomorphism game (X, Y, A, B differ)".into()));
    }
    let labels = game.questions_x();
    let parsed = labels
        .iter()
        .map(|l| l.parse::<QuestionAnswerLabel>())
        .collect::<hypiso::Result<Vec<_>>>()?;
    let index = |grid: &OperatorMagicUnitary, row: &str, col: &str| -> CliResult<(usize, usize)> {
        let i = grid.rows().iter().position(|r| r == row);
        let j = grid.cols().iter().position(|c| c == col);
        match (i, j) {
            (Some(i), Some(j)) => Ok((i, j)),
            _ => Err(CliError::Input(format!("strategy has no block for ({row}, {col})"))),
        }
    };
    let n = labels.len();
    let mut blocks = vec![None; n * n];
    for (x, q) in parsed.iter().enumerate() {
        for (a, r) in parsed.iter().enumerate() {
            if q.side == r.side || q.kind != r.kind {
                continue;
            }
            let grid = match q.kind {
                Kind::Vertex => &s.p_v,
                Kind::Edge => s
                    .p_e
                    .as_ref()
                    .ok_or_else(|| CliError::Input("the game has edge questions but the strategy has no P_E".into()))?,
            };
            let (row, col) = if q.side == Side::H1 { (&q.name, &r.name) } else { (&r.name, &q.name) };
            let (i, j) = index(grid, row, col)?;
            blocks[x * n + a] = Some(std::sync::Arc::new(grid.block(i, j).clone()));
        }
    }
    Ok(PvmFamily::new(labels.to_vec(), labels.to_vec(), s.dim(), blocks)?)
}

fn pvm_checks<R: hypiso::game::RuleFunction>(report: &mut RunReport, pvm: &PvmFamily, rule: &R, tol: f64) -> CliResult<()> {
    report.residual("pvm projections", pvm.projection_residual(), tol);
    report.residual("pvm completeness", pvm.completeness_residual(), tol);
    let violations = verify_perfect_algebraic(pvm, rule, tol)?;
    let worst = violations.iter().map(|v| v.norm).fold(0.0, f64::max);
    report.residual("losing products vanish", worst, tol);
    report.set("algebraic_violations", violations.len());
    let (n, _, m, _) = rule.dims();
    if n * n * m * m <= MAX_CORRELATION_ENTRIES {
        let corr = correlation_from_rep(pvm)?;
        let perfect = is_perfect_strategy(rule, &corr, tol)?;
        report.residual("correlation forbidden mass", perfect.worst, tol);
        report.flag("correlation no-signalling", check_ns(&corr, tol));
    } else {
        report.set("correlation", "skipped: too many entries to materialize");
    }
    Ok(())
}

fn verify_against_game(report: &mut RunReport, game: &NonlocalGame, s: &Strategy, tol: f64) -> CliResult<Outcome> {
    let pvm = pvm_from_labels(game, s)?;
    pvm_checks(report, &pvm, game, tol)?;
    Ok(Outcome::from_bool(report.all_passed()))
}

fn magic_report(report: &mut RunReport, name: &str, u: &OperatorMagicUnitary, tol: f64) {
    let m = is_magic_unitary(u, tol);
    report.residual(format!("{name} projections"), m.projection, tol);
    report.residual(format!("{name} row sums"), m.row_sums, tol);
    report.residual(format!("{name} column sums"), m.column_sums, tol);
    report.residual(format!("{name} orthogonality"), m.orthogonality, tol);
}

fn verify_against_structures(
    report: &mut RunReport,
    a: Structure,
    b: Structure,
    s: &Strategy,
    force_hyper: bool,
    tol: f64,
) -> CliResult<Outcome> {
    match (a, b) {
        (Structure::Graph(g1), Structure::Graph(g2)) if !force_hyper => {
            report.set("game", "graph isomorphism");
            magic_report(report, "P_V", &s.p_v, tol);
            report.residual("adjacency intertwining", check_adjacency_intertwining(&s.p_v, &g1, &g2)?, tol);
            let rule = IsoRule::graph(&g1, &g2);
            let pvm = pvm_table_from_vertex_unitary(&s.p_v, &rule)?;
            pvm_checks(report, &pvm, &rule, tol)?;
            let noncommuting = check_edgewise_commutation(&s.p_v, &g1, &g2, tol)?;
            report.set("edgewise_commutation_violations", noncommuting.len());
            Ok(Outcome::from_bool(report.all_passed()))
        }
        (a, b) => {
            let graphs = match (&a, &b) {
                (Structure::Graph(g1), Structure::Graph(g2)) => Some((g1.clone(), g2.clone())),
                _ => None,
            };
            let (h1, h2) = (as_hypergraph(a)?, as_hypergraph(b)?);
            report.set("game", "hypergraph isomorphism");
            let p_e = match (&s.p_e, graphs) {
                (Some(p), _) => p.clone(),
                (None, Some((g1, g2))) => {
                    report.set("P_E", "lifted from P_V");
                    lift_edge_magic_unitary(&s.p_v, &g1, &g2)?
                }
                (None, None) => return Err(CliError::Input("hypergraph strategies need a P_E grid".into())),
            };
            let rep = FiniteDimRep::new(s.p_v.clone(), p_e)?;
            verify_rep(report, &rep, &h1, &h2, tol)?;
            Ok(Outcome::from_bool(report.all_passed()))
        }
    }
}

fn verify_rep(report: &mut RunReport, rep: &FiniteDimRep, h1: &Hypergraph, h2: &Hypergraph, tol: f64) -> CliResult<()> {
    magic_report(report, "P_V", &rep.p_v, tol);
    magic_report(report, "P_E", &rep.p_e, tol);
    let inc = check_inclusion_conditions(rep, h1, h2, tol)?;
    report.residual("incidence intertwining", inc.intertwining, tol);
    report.residual("fiber sums", inc.fiber_sums, tol);
    report.residual("vanishing incidence products", inc.vanishing_products, tol);
    let deg = check_degree_vanishing(rep, h1, h2, tol)?;
    report.residual("degree commutation", deg.commutation, tol);
    let rule = IsoRule::hypergraph(h1, h2);
    let pvm = pvm_table_from_rep(rep, &rule)?;
    pvm_checks(report, &pvm, &rule, tol)
}

fn write_into(dir: Option<&Path>, name: &str, text: &str, report: &mut RunReport) -> CliResult<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut files: Vec<Value> = report.result.get("files").and_then(Value::as_array).cloned().unwrap_or_default();
        files.push(Value::String(path.display().to_string()));
        report.set("files", files);
    }
    Ok(())
}

fn magic_square(report: &mut RunReport, emit: Emit, out_dir: Option<&Path>, tol: f64) -> CliResult<Outcome> {
    let (g, g0) = magic_square_graphs()?;
    match emit {
        Emit::Graphs => {
            let (t1, t2) = (io::graph_to_string(&g), io::graph_to_string(&g0));
            write_into(out_dir, "g1.json", &t1, report)?;
            write_into(out_dir, "g2.json", &t2, report)?;
            report.set("vertices", [g.num_vertices(), g0.num_vertices()]);
            report.set("edges", [g.edge_list().len(), g0.edge_list().len()]);
            if out_dir.is_none() {
                report.set("G1", io::GraphFile::from_graph(&g));
                report.set("G2", io::GraphFile::from_graph(&g0));
            }
        }
        Emit::Strategy => {
            let u = magic_square_strategy()?;
            let text = io::strategy_to_string(&Strategy { p_v: u.clone(), p_e: None });
            write_into(out_dir, "strategy.json", &text, report)?;
            magic_report(report, "P_V", &u, tol);
            report.residual("adjacency intertwining", check_adjacency_intertwining(&u, &g, &g0)?, tol);
            if out_dir.is_none() {
                report.set("strategy", serde_json::from_str::<Value>(&text).map_err(|e| CliError::Internal(e.to_string()))?);
            }
        }
        Emit::Witness => {
            let u = magic_square_strategy()?;
            let ((v1, v2), (w1, w2)) = noncommuting_witness();
            let idx = |gr: &SimpleGraph, l: &str| gr.vertex_index(l);
            let (i1, i2, j1, j2) = (idx(&g, &v1)?, idx(&g0, &v2)?, idx(&g, &w1)?, idx(&g0, &w2)?);
            report.flag("witness pairs adjacent", g.adjacent(i1, j1) && g0.adjacent(i2, j2));
            let norm = u.block(i1, i2).commutator(u.block(j1, j2)).spectral_norm();
            report.flag("blocks do not commute", norm > tol);
            report.set("witness", json!({"first": [v1, v2], "second": [w1, w2], "commutator_norm": norm}));
            let lifted = lift_edge_magic_unitary(&u, &g, &g0)?;
            let worst = is_magic_unitary(&lifted, tol).projection;
            report.set("lifted_edge_grid_projection_residual", worst);
            let violations = check_edgewise_commutation(&u, &g, &g0, tol)?;
            report.set("edgewise_commutation_violations", violations.len());
        }
        Emit::Pullback => {
            let u = magic_square_strategy()?;
            let (n1, n2, rep) = neighborhood_pullback(&u, &g, &g0)?;
            write_into(out_dir, "n1.json", &io::hypergraph_to_string(&n1), report)?;
            write_into(out_dir, "n2.json", &io::hypergraph_to_string(&n2), report)?;
            write_into(out_dir, "pullback.json", &io::strategy_to_string(&Strategy::from_rep(&rep)), report)?;
            verify_rep(report, &rep, &n1, &n2, tol)?;
        }
    }
    Ok(if report.all_passed() { Outcome::Positive } else { Outcome::Broken })
}

fn check_sns(report: &mut RunReport, g: &Gamma, tol: f64) -> CliResult<Outcome> {
    let sns = check_strong_ns(&g.gamma, tol);
    report.residual("normalization", sns.normalization, tol);
    report.residual("nonnegativity", sns.negativity, tol);
    report.residual("no-signalling", sns.ns, tol);
    for f in &sns.families {
        report.residual(f.name, f.deviation, tol);
        if let Some(loc) = &f.location {
            if f.deviation > tol {
                report.set(f.name, loc);
            }
        }
    }
    let sns_ok = sns.passed();
    report.set("strongly_no_signalling", sns_ok);
    report.set("bicorrelation", check_bicorrelation(&g.gamma, tol));
    let rule = supergame_rule(&g.game1, &g.game2);
    let perfect = is_perfect_strategy(&rule, g.gamma.correlation(), tol)?;
    report.set("perfect_for_supergame", perfect.perfect);
    report.set("forbidden_mass", perfect.worst);
    Ok(Outcome::from_bool(sns_ok))
}

fn simulate_cmd(report: &mut RunReport, g: &Gamma, e: &hypiso::game::Correlation, out: Option<&Path>, tol: f64) -> CliResult<Outcome> {
    let channel = Channel::from_correlation(e);
    report.residual("input channel stochastic", channel.stochastic_deviation(), tol);
    let result = simulate(&g.gamma, &channel)?;
    report.residual("output channel stochastic", result.stochastic_deviation(), tol);
    let transported = result.to_correlation(&g.game2)?;
    emit_file(report, "correlation", io::correlation_to_string(&transported), out)?;
    match transport_check(&g.gamma, &g.game1, &g.game2, e, tol) {
        Ok(t) => {
            report.set("transport", json!({
                "input_perfect": is_perfect_strategy(&g.game1, e, tol)?.perfect,
                "output_perfect": t.perfectness.perfect,
                "violations": t.perfectness.violations.len(),
            }));
        }
        Err(Error::NotPerfectSupergame(m)) => report.set("transport", format!("not applicable: {m}")),
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome::from_bool(report.all_passed()))
}

fn game_iso(report: &mut RunReport, a: &NonlocalGame, b: &NonlocalGame, emit_gamma: Option<&Path>) -> CliResult<Outcome> {
    match hypiso::supergame::find_game_isomorphism_classical(a, b) {
        GameIsoSearch::Found(q) => {
            if q.counterexample(a, b)?.is_some() {
                return Err(CliError::Internal("returned relabeling does not preserve the rule".into()));
            }
            report.flag("isomorphic", true);
            let named = |m: &[usize], s: &[String], t: &[String]| -> Vec<[String; 2]> {
                m.iter().enumerate().map(|(i, &j)| [s[i].clone(), t[j].clone()]).collect()
            };
            report.set("alpha_x", named(&q.alpha_x, a.questions_x(), b.questions_x()));
            report.set("alpha_y", named(&q.alpha_y, a.questions_y(), b.questions_y()));
            report.set("beta_a", named(&q.beta_a, a.answers_a(), b.answers_a()));
            report.set("beta_b", named(&q.beta_b, a.answers_b(), b.answers_b()));
            if let Some(path) = emit_gamma {
                let gamma = relabeling_sns_strategy(&q, a, b)?;
                let text = io::gamma_to_string(&Gamma {
                    game1: a.clone(),
                    game2: b.clone(),
                    gamma,
                });
                fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                report.set("gamma_file", path.display().to_string());
            }
            Ok(Outcome::Positive)
        }
        other => {
            report.flag("isomorphic", false);
            let reason = match other {
                GameIsoSearch::SizeMismatch(r) => format!("size mismatch: {r}"),
                GameIsoSearch::InvariantMismatch(r) => format!("invariant mismatch: {r}"),
                _ => "no relabeling preserves the rule".to_string(),
            };
            report.set("reason", reason);
            Ok(Outcome::Negative)
        }
    }
}

fn full_report(report: &mut RunReport, cases: usize, seed: u64, tol: f64) -> CliResult<Outcome> {
    let sys = magic_square_bcs();
    let (g, g0) = magic_square_graphs()?;
    report.flag("both graphs have 24 vertices", g.num_vertices() == 24 && g0.num_vertices() == 24);
    let counts = (0..sys.constraints().len())
        .map(|l| enumerate_sat(&sys, l).map(|v| v.len()))
        .collect::<hypiso::Result<Vec<_>>>()?;
    report.flag("4 satisfying assignments per constraint", counts.iter().all(|&c| c == 4));
    report.set("assignments", all_assignments(&sys)?.len());

    let t = Instant::now();
    report.flag("graphs are not isomorphic", find_graph_isomorphism(&g, &g0).is_none());
    let (n1, n2) = (neighborhood_hypergraph(&g)?, neighborhood_hypergraph(&g0)?);
    report.flag("neighborhood hypergraphs are not isomorphic", find_hypergraph_isomorphism(&n1, &n2).is_none());
    report.set("classical_search_ms", t.elapsed().as_secs_f64() * 1e3);

    let u = magic_square_strategy()?;
    magic_report(report, "P_V", &u, tol);
    report.residual("adjacency intertwining", check_adjacency_intertwining(&u, &g, &g0)?, tol);
    let rule = IsoRule::graph(&g, &g0);
    let pvm = pvm_table_from_vertex_unitary(&u, &rule)?;
    let corr = correlation_from_rep(&pvm)?;
    report.residual("graph game forbidden mass", is_perfect_strategy(&rule, &corr, tol)?.worst, tol);

    let ((v1, v2), (w1, w2)) = noncommuting_witness();
    let norm = u
        .block(g.vertex_index(&v1)?, g0.vertex_index(&v2)?)
        .commutator(u.block(g.vertex_index(&w1)?, g0.vertex_index(&w2)?))
        .spectral_norm();
    report.residual("witness commutator norm is 1/2", (norm - 0.5).abs(), tol);

    let (n1, n2, rep) = neighborhood_pullback(&u, &g, &g0)?;
    let inc = check_inclusion_conditions(&rep, &n1, &n2, tol)?;
    magic_report(report, "pullback P_E", &rep.p_e, tol);
    report.residual("pullback incidence intertwining", inc.intertwining, tol);
    report.residual("pullback fiber sums", inc.fiber_sums, tol);
    report.residual("pullback vanishing products", inc.vanishing_products, tol);
    report.residual("pullback degree commutation", check_degree_vanishing(&rep, &n1, &n2, tol)?.commutation, tol);

    // A unitary change of basis preserves every relation.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let w = CMatrix::random_unitary(u.dim(), &mut rng);
        let c = u.conjugated(&w);
        worst = worst.max(is_magic_unitary(&c, tol).worst());
        worst = worst.max(check_adjacency_intertwining(&c, &g, &g0)?);
    }
    report.residual(format!("{cases} random conjugations stay valid"), worst, tol);
    Ok(if report.all_passed() { Outcome::Positive } else { Outcome::Broken })
}
