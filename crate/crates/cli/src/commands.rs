//! Subcommands. Each one produces a JSON document on stdout and an exit
//! code: 0 on success, 1 when the input drawing is not simple, 2 on usage or
//! input errors. Errors are reported as a JSON object on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use quasicross::analysis::{
    bound_report_doc, Analysis, AnalysisResult, BoundReportDoc, SubsampleDoc,
};
use quasicross::bounds::{monte_carlo_subsample, BoundError};
use quasicross::drawing::{convex_complete, Drawing};
use quasicross::format::{parse_drawing, parse_rational, serialize_drawing, DrawingDoc};
use quasicross::search::{
    anneal_with, load_state, objective, Objective, SearchConfig, SearchError, TimelinePoint,
    TraceRecord,
};
use quasicross::svg::{write_svg, Palette, SvgError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "quasicross",
    version,
    about = "Simple drawings and triples of pairwise crossing edges"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a drawing is simple.
    Verify { file: PathBuf },
    /// Validate a drawing and count its crossing pairs and triples.
    Count { file: PathBuf },
    /// Lower bounds on the number of triples for n vertices and e edges.
    #[command(group(ArgGroup::new("graph").required(true).args(["n", "complete"])))]
    Bounds {
        #[arg(long, requires = "e")]
        n: Option<u64>,
        #[arg(long, requires = "n")]
        e: Option<u64>,
        /// Complete graph on this many vertices.
        #[arg(long, conflicts_with_all = ["n", "e"])]
        complete: Option<u64>,
    },
    /// Bounds for a range of complete graphs.
    Table {
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true)]
        complete_range: Vec<u64>,
    },
    /// Monte Carlo check of the vertex-subsampling expectations.
    Subsample {
        file: PathBuf,
        /// Keep probability, as a rational such as 1/2.
        #[arg(long)]
        p: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Anneal a drawing towards fewer triples.
    Search {
        file: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Continue from this checkpoint (its `.state.json` sidecar is read).
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Write checkpoints here; defaults to the resumed checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Write the best drawing here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-iteration records here, one JSON object per line.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Render a drawing with its triples circled.
    Svg {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the convex straight-line complete graph on n vertices.
    GenConvex {
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API on localhost.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(doc: &impl Serialize) -> Outcome {
        Outcome::with_code(EXIT_OK, doc)
    }

    fn with_code(code: i32, doc: &impl Serialize) -> Outcome {
        Outcome {
            code,
            stdout: to_json(doc),
            stderr: String::new(),
        }
    }

    fn fail(code: i32, kind: &str, message: impl ToString) -> Outcome {
        Outcome {
            code,
            stdout: String::new(),
            stderr: to_json(&json!({"error": kind, "message": message.to_string()})),
        }
    }

    /// Print to the process streams.
    pub fn emit(&self) {
        print!("{}", self.stdout);
        eprint!("{}", self.stderr);
        std::io::stdout().flush().ok();
    }
}

fn to_json(doc: &impl Serialize) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize") + "\n"
}

fn read_drawing(path: &Path) -> Result<Drawing, Outcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Outcome::fail(EXIT_USAGE, "io", format!("{}: {e}", path.display())))?;
    parse_drawing(&text)
        .map_err(|e| Outcome::fail(EXIT_USAGE, "parse", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Outcome> {
    std::fs::write(path, text)
        .map_err(|e| Outcome::fail(EXIT_USAGE, "io", format!("{}: {e}", path.display())))
}

fn invalid(d: &Drawing, analysis: &Analysis) -> Outcome {
    let result = analysis.to_result(d);
    Outcome {
        code: EXIT_INVALID,
        stdout: to_json(&result),
        stderr: to_json(&json!({"error": "invalid_drawing", "message": "drawing is not simple"})),
    }
}

/// Run every subcommand except `serve`.
pub fn execute(command: Command) -> Outcome {
    let result = match command {
        Command::Verify { file } => verify(&file),
        Command::Count { file } => count(&file),
        Command::Bounds { n, e, complete } => bounds(n, e, complete),
        Command::Table { complete_range } => table(complete_range[0], complete_range[1]),
        Command::Subsample {
            file,
            p,
            trials,
            seed,
        } => subsample(&file, &p, trials, seed),
        Command::Search {
            file,
            config,
            resume,
            checkpoint,
            out,
            trace,
        } => search(
            &file,
            &config,
            resume.as_deref(),
            checkpoint.as_deref(),
            out.as_deref(),
            trace.as_deref(),
        ),
        Command::Svg { file, out } => svg(&file, &out),
        Command::GenConvex { n, out } => gen_convex(n, &out),
        Command::Serve { .. } => Err(Outcome::fail(
            EXIT_USAGE,
            "usage",
            "serve runs from the binary",
        )),
    };
    result.unwrap_or_else(|o| o)
}

fn verify(file: &Path) -> Result<Outcome, Outcome> {
    let d = read_drawing(file)?;
    let result = Analysis::of(&d).to_result(&d);
    let code = if result.validation.is_valid {
        EXIT_OK
    } else {
        EXIT_INVALID
    };
    Ok(Outcome::with_code(code, &result.validation))
}

fn count(file: &Path) -> Result<Outcome, Outcome> {
    let d = read_drawing(file)?;
    let analysis = Analysis::of(&d);
    if !analysis.validation.is_valid {
        return Ok(invalid(&d, &analysis));
    }
    Ok(Outcome::ok(&analysis.to_result(&d)))
}

fn bound_doc(n: u64, e: u64) -> Result<BoundReportDoc, Outcome> {
    bound_report_doc(n, e).map_err(|err| Outcome::fail(EXIT_USAGE, "bounds", err))
}

fn complete_edges(n: u64) -> Result<u64, Outcome> {
    n.checked_mul(n.saturating_sub(1))
        .map(|x| x / 2)
        .ok_or_else(|| Outcome::fail(EXIT_USAGE, "bounds", "n too large"))
}

fn bounds(n: Option<u64>, e: Option<u64>, complete: Option<u64>) -> Result<Outcome, Outcome> {
    let (n, e) = match (n, e, complete) {
        (_, _, Some(k)) => (k, complete_edges(k)?),
        (Some(n), Some(e), None) => (n, e),
        _ => {
            return Err(Outcome::fail(
                EXIT_USAGE,
                "usage",
                "give --n and --e, or --complete",
            ))
        }
    };
    Ok(Outcome::ok(&bound_doc(n, e)?))
}

fn table(a: u64, b: u64) -> Result<Outcome, Outcome> {
    if a > b {
        return Err(Outcome::fail(EXIT_USAGE, "usage", "empty range"));
    }
    let rows = (a..=b)
        .map(|n| bound_doc(n, complete_edges(n)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome::ok(&json!({ "rows": rows })))
}

fn subsample(file: &Path, p: &str, trials: u64, seed: u64) -> Result<Outcome, Outcome> {
    let p = parse_rational(p)
        .map_err(|e| Outcome::fail(EXIT_USAGE, "usage", format!("--p {p}: {e}")))?;
    let d = read_drawing(file)?;
    match monte_carlo_subsample(&d, &p, trials, seed) {
        Ok(stats) => Ok(Outcome::ok(&SubsampleDoc::from(&stats))),
        Err(BoundError::Analysis(_)) => Ok(invalid(&d, &Analysis::of(&d))),
        Err(e) => Err(Outcome::fail(EXIT_USAGE, "subsample", e)),
    }
}

#[derive(Serialize)]
struct RestartSummary {
    restart: usize,
    best_objective: Objective,
    best_timeline: Vec<TimelinePoint>,
    accepted_moves: usize,
    rejected_invalid: usize,
}

#[derive(Serialize)]
struct SearchReport {
    initial_objective: Objective,
    best_objective: Objective,
    best_restart: usize,
    restarts: Vec<RestartSummary>,
    best: AnalysisResult,
    best_drawing: DrawingDoc,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    restart: usize,
    #[serde(flatten)]
    record: &'a TraceRecord,
}

fn search_error(e: SearchError) -> Outcome {
    match e {
        SearchError::InvalidDrawing(r) => {
            Outcome::fail(EXIT_INVALID, "invalid_drawing", format!("{:?}", r.kinds()))
        }
        SearchError::Inconsistent { .. } => Outcome::fail(EXIT_USAGE, "internal", e),
        other => Outcome::fail(EXIT_USAGE, "search", other),
    }
}

fn search(
    file: &Path,
    config: &Path,
    resume: Option<&Path>,
    checkpoint: Option<&Path>,
    out: Option<&Path>,
    trace: Option<&Path>,
) -> Result<Outcome, Outcome> {
    let d0 = read_drawing(file)?;
    let text = std::fs::read_to_string(config)
        .map_err(|e| Outcome::fail(EXIT_USAGE, "io", format!("{}: {e}", config.display())))?;
    let cfg: SearchConfig = serde_json::from_str(&text)
        .map_err(|e| Outcome::fail(EXIT_USAGE, "config", format!("{}: {e}", config.display())))?;
    let initial = objective(&d0).map_err(search_error)?;
    let state = resume.map(load_state).transpose().map_err(search_error)?;
    let checkpoint = checkpoint.or(resume);
    let outcome = anneal_with(&d0, &cfg, checkpoint, state.as_ref()).map_err(search_error)?;

    if let Some(path) = out {
        write_file(path, &serialize_drawing(&outcome.best))?;
    }
    if let Some(path) = trace {
        let mut text = String::new();
        for r in &outcome.trace.restarts {
            for record in &r.records {
                text.push_str(
                    &serde_json::to_string(&TraceLine {
                        restart: r.restart,
                        record,
                    })
                    .expect("records serialize"),
                );
                text.push('\n');
            }
        }
        write_file(path, &text)?;
    }
    let restarts = outcome
        .trace
        .restarts
        .iter()
        .map(|r| RestartSummary {
            restart: r.restart,
            best_objective: r
                .best_timeline
                .last()
                .expect("timeline starts at iteration 0")
                .objective,
            best_timeline: r.best_timeline.clone(),
            accepted_moves: r.records.iter().filter(|x| x.accepted).count(),
            rejected_invalid: r.records.iter().filter(|x| x.after.is_none()).count(),
        })
        .collect();
    let report = SearchReport {
        initial_objective: initial,
        best_objective: outcome.best_objective,
        best_restart: outcome.best_restart,
        restarts,
        best: Analysis::of(&outcome.best).to_result(&outcome.best),
        best_drawing: DrawingDoc::from_drawing(&outcome.best),
    };
    Ok(Outcome::ok(&report))
}

fn svg(file: &Path, out: &Path) -> Result<Outcome, Outcome> {
    let d = read_drawing(file)?;
    let palette = Palette::from_env().map_err(|e| Outcome::fail(EXIT_USAGE, "palette", e))?;
    let analysis = Analysis::of(&d);
    match write_svg(out, &d, &analysis, &palette) {
        Ok(()) => Ok(Outcome::ok(&json!({
            "out": out.display().to_string(),
            "triple_circles": analysis.triples.as_ref().map_or(0, |t| t.triple_count),
        }))),
        Err(SvgError::Invalid) => Ok(invalid(&d, &analysis)),
        Err(e) => Err(Outcome::fail(EXIT_USAGE, "io", e)),
    }
}

fn gen_convex(n: usize, out: &Path) -> Result<Outcome, Outcome> {
    let d = convex_complete(n).map_err(|e| Outcome::fail(EXIT_USAGE, "usage", e))?;
    write_file(out, &serialize_drawing(&d))?;
    let doc: Value = json!({"n": d.n(), "e": d.e(), "out": out.display().to_string()});
    Ok(Outcome::ok(&doc))
}
