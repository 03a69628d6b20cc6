//! The `mintykit` command line: JSON instances in, JSON reports out.
//!
//! Exit status is 0 when the property holds or the problem is feasible, 1
//! when it fails or is infeasible, and 2 on usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gamma::{build_gamma_system, check_kkm_capped, KkmVerdict, DEFAULT_SELECTION_CAP};
use crate::linalg::Vector;
use crate::minty::{construct_witness, solve_mvi, DualPair, MonotonicityWitness, MviProblem};
use crate::operator::{is_monotone, is_quasimonotone, Entry, OperatorGraph, PairVerdict};
use crate::polyhedra::{FeasibilityResult, Tolerance, ToleranceOverrides, VPolytope};
use crate::render::{render_svg, RenderSummary};
use crate::suite::{parse_config, run_suites, SuiteReport};

pub const SELECTION_CAP_VAR: &str = "MINTYKIT_SELECTION_CAP";

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mintykit",
    version,
    about = "Monotonicity, KKM and Minty checks on finite operator graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Slack accepted on non-strict comparisons.
    #[arg(long, global = true)]
    pub eq_tol: Option<f64>,
    /// Minimum slack certifying a strict inequality.
    #[arg(long, global = true)]
    pub strict_margin: Option<f64>,
    /// Target accuracy of the constructive intersection search.
    #[arg(long, global = true)]
    pub fip_tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Monotone,
    Quasimonotone,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise monotonicity or quasimonotonicity of an instance.
    Check {
        file: PathBuf,
        #[arg(long, value_enum)]
        kind: CheckKind,
    },
    /// Whether Γ_{T−x*} covers the hull of a base set.
    Kkm {
        file: PathBuf,
        /// Shift x*, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        xstar: String,
        /// Entry indices, comma separated, or "all".
        #[arg(long, default_value = "all")]
        subset: String,
    },
    /// Minty variational inequality over a polytope K.
    Mvi {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        xstar: String,
        /// "hull" for the hull of all points, or a JSON list of vertices.
        #[arg(long = "K", default_value = "hull")]
        k: String,
    },
    /// Witness shift for the worst monotonicity violation.
    Witness { file: PathBuf },
    /// Runs the property battery described by a suite config.
    Suite {
        config: PathBuf,
        /// Added to every suite seed of the config.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draws the Γ system of a planar instance as SVG.
    Render {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        xstar: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Instance file: `{"dim", "label"?, "points": [{"x", "duals"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub points: Vec<PointRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub duals: Vec<Vec<f64>>,
}

impl InstanceFile {
    /// Validates lengths entry by entry and merges coincident points.
    pub fn to_graph(&self, tol: &Tolerance) -> Result<OperatorGraph, String> {
        if self.dim == 0 {
            return Err("dim must be at least 1".into());
        }
        let mut entries = Vec::with_capacity(self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            if p.x.len() != self.dim {
                return Err(format!(
                    "entry {i}: x has length {} but dim is {}",
                    p.x.len(),
                    self.dim
                ));
            }
            let mut duals = Vec::with_capacity(p.duals.len());
            for (j, d) in p.duals.iter().enumerate() {
                if d.len() != self.dim {
                    return Err(format!(
                        "entry {i}: dual {j} has length {} but dim is {}",
                        d.len(),
                        self.dim
                    ));
                }
                duals.push(Vector::new(d.clone()).map_err(|e| format!("entry {i}: {e}"))?);
            }
            let point = Vector::new(p.x.clone()).map_err(|e| format!("entry {i}: {e}"))?;
            entries.push(Entry { point, duals });
        }
        OperatorGraph::with_tolerance(self.dim, entries, tol).map_err(|e| e.to_string())
    }

    pub fn from_graph(t: &OperatorGraph, label: Option<String>) -> InstanceFile {
        InstanceFile {
            dim: t.dim(),
            label,
            points: t
                .entries()
                .iter()
                .map(|e| PointRecord {
                    x: e.point.to_vec(),
                    duals: e.duals.iter().map(|d| d.to_vec()).collect(),
                })
                .collect(),
        }
    }
}

/// `(entry, dual)` behind one Minty constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintOrigin {
    pub entry: usize,
    pub dual: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Check {
        property: CheckKind,
        verdict: PairVerdict,
    },
    Kkm {
        subset: Vec<usize>,
        xstar: Vector,
        verdict: KkmVerdict,
    },
    Mvi {
        xstar: Vector,
        k: VPolytope,
        /// Source of every constraint, indexed like certificate entries.
        constraints: Vec<ConstraintOrigin>,
        result: FeasibilityResult,
    },
    Witness {
        witness: Option<MonotonicityWitness>,
        a: Option<f64>,
        b: Option<f64>,
        confirmation: Option<FeasibilityResult>,
        message: Option<String>,
    },
    Suite(SuiteReport),
    Render {
        out: String,
        summary: RenderSummary,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub instance_label: String,
    pub outcome: Outcome,
    pub tolerances: Tolerance,
    pub elapsed_ms: u64,
}

impl Report {
    /// The report as JSON with the timing field zeroed, for comparisons.
    pub fn without_timing(&self) -> Report {
        Report {
            elapsed_ms: 0,
            ..self.clone()
        }
    }
}

/// Input or usage problem: exit status 2.
#[derive(Debug)]
struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<(Outcome, String, i32), InputError>;

fn read_instance(path: &Path, tol: &Tolerance) -> Result<(OperatorGraph, String), InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let label = file.label.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let t = file
        .to_graph(tol)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok((t, label))
}

/// Parses `"1.5, -2"` into a vector of length `dim`.
pub fn parse_floats(text: &str, dim: usize) -> Result<Vector, String> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {:?}", s.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != dim {
        return Err(format!("expected {dim} coordinates, got {}", values.len()));
    }
    Vector::new(values).map_err(|e| e.to_string())
}

/// Parses `"all"` or `"0, 2, 3"`.
pub fn parse_subset(text: &str, t: &OperatorGraph) -> Result<Vec<usize>, String> {
    if text.trim() == "all" {
        return Ok(t.domain());
    }
    text.split(',')
        .map(|s| {
            let i = s
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("not an index: {:?}", s.trim()))?;
            if i >= t.len() {
                return Err(format!("entry {i} out of range for {} entries", t.len()));
            }
            Ok(i)
        })
        .collect()
}

/// Parses `"hull"` or a JSON vertex list.
pub fn parse_k(text: &str, t: &OperatorGraph) -> Result<VPolytope, String> {
    if text.trim() == "hull" {
        let pts = t.entries().iter().map(|e| e.point.clone()).collect();
        return VPolytope::new(pts).map_err(|e| e.to_string());
    }
    let raw: Vec<Vec<f64>> = serde_json::from_str(text)
        .map_err(|e| format!("--K is neither \"hull\" nor a vertex list: {e}"))?;
    let mut vertices = Vec::with_capacity(raw.len());
    for (i, v) in raw.into_iter().enumerate() {
        if v.len() != t.dim() {
            return Err(format!(
                "K vertex {i} has length {} but dim is {}",
                v.len(),
                t.dim()
            ));
        }
        vertices.push(Vector::new(v).map_err(|e| e.to_string())?);
    }
    VPolytope::new(vertices).map_err(|e| e.to_string())
}

fn selection_cap() -> Result<u64, InputError> {
    match std::env::var(SELECTION_CAP_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            InputError(format!(
                "{SELECTION_CAP_VAR} must be a non-negative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(DEFAULT_SELECTION_CAP),
    }
}

fn exit_for(ok: bool) -> i32 {
    if ok {
        EXIT_HOLDS
    } else {
        EXIT_FAILS
    }
}

fn cmd_check(file: &Path, kind: CheckKind, tol: &Tolerance) -> CmdResult {
    let (t, label) = read_instance(file, tol)?;
    let verdict = match kind {
        CheckKind::Monotone => is_monotone(&t, tol),
        CheckKind::Quasimonotone => is_quasimonotone(&t, tol),
    };
    let code = exit_for(verdict.holds);
    Ok((
        Outcome::Check {
            property: kind,
            verdict,
        },
        label,
        code,
    ))
}

fn cmd_kkm(file: &Path, xstar: &str, subset: &str, tol: &Tolerance) -> CmdResult {
    let (t, label) = read_instance(file, tol)?;
    let xstar = parse_floats(xstar, t.dim()).map_err(|e| InputError(format!("--xstar: {e}")))?;
    let subset = parse_subset(subset, &t).map_err(|e| InputError(format!("--subset: {e}")))?;
    let sys = build_gamma_system(&t, &subset, &xstar)?;
    let verdict = check_kkm_capped(&sys, tol, selection_cap()?)?;
    let code = exit_for(verdict.holds);
    Ok((
        Outcome::Kkm {
            subset,
            xstar,
            verdict,
        },
        label,
        code,
    ))
}

fn cmd_mvi(file: &Path, xstar: &str, k: &str, tol: &Tolerance) -> CmdResult {
    let (t, label) = read_instance(file, tol)?;
    let xstar = parse_floats(xstar, t.dim()).map_err(|e| InputError(format!("--xstar: {e}")))?;
    let k = parse_k(k, &t).map_err(InputError)?;
    let problem = MviProblem::new(t, xstar.clone(), k.clone())?;
    let constraints = problem
        .constraints(tol)?
        .into_iter()
        .map(|((entry, dual), _)| ConstraintOrigin { entry, dual })
        .collect();
    let result = solve_mvi(&problem, tol)?;
    let code = exit_for(result.is_feasible());
    Ok((
        Outcome::Mvi {
            xstar,
            k,
            constraints,
            result,
        },
        label,
        code,
    ))
}

fn cmd_witness(file: &Path, tol: &Tolerance) -> CmdResult {
    let (t, label) = read_instance(file, tol)?;
    let Some(v) = is_monotone(&t, tol).violation else {
        return Ok((
            Outcome::Witness {
                witness: None,
                a: None,
                b: None,
                confirmation: None,
                message: Some("no violation pair".into()),
            },
            label,
            EXIT_FAILS,
        ));
    };
    let w = construct_witness(&DualPair::from(&v), tol)?;
    let confirmation = w.confirm(tol)?;
    let code = exit_for(!confirmation.is_feasible());
    Ok((
        Outcome::Witness {
            a: Some(w.a()),
            b: Some(w.b()),
            witness: Some(w),
            confirmation: Some(confirmation),
            message: None,
        },
        label,
        code,
    ))
}

fn cmd_suite(config: &Path, seed: u64, tol: Tolerance) -> CmdResult {
    let text = std::fs::read_to_string(config)
        .map_err(|e| InputError(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg =
        parse_config(&text).map_err(|e| InputError(format!("{}: {e}", config.display())))?;
    for s in &mut cfg.suites {
        s.seed = s.seed.wrapping_add(seed);
    }
    let report = run_suites(&cfg, tol)?;
    let code = exit_for(report.passed());
    let label = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((Outcome::Suite(report), label, code))
}

fn cmd_render(file: &Path, xstar: &str, out: &Path, tol: &Tolerance) -> CmdResult {
    let (t, label) = read_instance(file, tol)?;
    if t.dim() != 2 {
        return Err(InputError(format!(
            "render needs a two-dimensional instance, got dimension {}",
            t.dim()
        )));
    }
    let xstar = parse_floats(xstar, t.dim()).map_err(|e| InputError(format!("--xstar: {e}")))?;
    let sys = build_gamma_system(&t, &t.domain(), &xstar)?;
    let (svg, summary) = render_svg(&sys, tol, selection_cap()?)?;
    std::fs::write(out, svg)
        .map_err(|e| InputError(format!("cannot write {}: {e}", out.display())))?;
    Ok((
        Outcome::Render {
            out: out.display().to_string(),
            summary,
        },
        label,
        EXIT_HOLDS,
    ))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check { .. } => "check",
        Command::Kkm { .. } => "kkm",
        Command::Mvi { .. } => "mvi",
        Command::Witness { .. } => "witness",
        Command::Suite { .. } => "suite",
        Command::Render { .. } => "render",
    }
}

fn text_summary(report: &Report, code: i32) -> String {
    let (yes, no) = match &report.outcome {
        Outcome::Mvi { .. } => ("feasible", "infeasible"),
        Outcome::Witness { .. } => ("confirmed", "no witness"),
        Outcome::Suite(_) => ("passed", "failed"),
        Outcome::Render { .. } => ("written", "failed"),
        _ => ("holds", "fails"),
    };
    let verdict = if code == EXIT_HOLDS { yes } else { no };
    let detail = match &report.outcome {
        Outcome::Check { verdict, .. } => verdict
            .violation
            .as_ref()
            .map(|v| {
                format!(
                    " (entries {} and {}, value {})",
                    v.first.entry, v.second.entry, v.value
                )
            })
            .unwrap_or_default(),
        Outcome::Kkm { verdict, .. } => verdict
            .counterexample
            .as_ref()
            .map(|c| format!(" (uncovered point {:?})", c.point.as_slice()))
            .unwrap_or_default(),
        Outcome::Mvi { result, .. } => match result {
            FeasibilityResult::Feasible { witness, .. } => {
                format!(" (solution {:?})", witness.as_slice())
            }
            FeasibilityResult::Infeasible(c) => format!(" (active constraints {:?})", c.active),
        },
        Outcome::Witness {
            witness, message, ..
        } => match (witness, message) {
            (Some(w), _) => format!(" (z* = {:?}, delta {})", w.zstar.as_slice(), w.delta),
            (None, Some(m)) => format!(" ({m})"),
            _ => String::new(),
        },
        Outcome::Suite(r) => format!(
            " ({} suites, {} failures, failing seeds {:?})",
            r.suites.len(),
            r.total_failures,
            r.failing_seeds
        ),
        Outcome::Render { out, summary } => format!(
            " (wrote {out}; {} of {} hull cells covered)",
            summary.covered_cells, summary.hull_cells
        ),
    };
    format!(
        "{} {}: {verdict}{detail}\n",
        report.command, report.instance_label
    )
}

/// Parses `args` (including the program name) and runs the command, writing
/// the report to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_HOLDS
            };
            let rendered = e.render().to_string();
            if code == EXIT_HOLDS {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let overrides = ToleranceOverrides {
        eq_tol: cli.eq_tol,
        strict_margin: cli.strict_margin,
        qp_tol: None,
        fip_tol: cli.fip_tol,
    };
    let tol = match overrides.apply(Tolerance::default()) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let start = Instant::now();
    let result = match &cli.command {
        Command::Check { file, kind } => cmd_check(file, *kind, &tol),
        Command::Kkm {
            file,
            xstar,
            subset,
        } => cmd_kkm(file, xstar, subset, &tol),
        Command::Mvi { file, xstar, k } => cmd_mvi(file, xstar, k, &tol),
        Command::Witness { file } => cmd_witness(file, &tol),
        Command::Suite { config, seed } => cmd_suite(config, *seed, tol),
        Command::Render { file, xstar, out } => cmd_render(file, xstar, out, &tol),
    };
    let (outcome, label, code) = match result {
        Ok(r) => r,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_INPUT;
        }
    };
    // a suite config may override tolerances of its own
    let tolerances = match &outcome {
        Outcome::Suite(r) => r.tolerance,
        _ => tol,
    };
    let report = Report {
        command: command_name(&cli.command).into(),
        instance_label: label,
        outcome,
        tolerances,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    if let Outcome::Witness {
        message: Some(m), ..
    } = &report.outcome
    {
        let _ = writeln!(err, "{m}");
    }
    let written = match cli.format {
        Format::Json => serde_json::to_string_pretty(&report)
            .map(|s| s + "\n")
            .map_err(|e| e.to_string()),
        Format::Text => Ok(text_summary(&report, code)),
    };
    match written {
        Ok(s) => {
            let _ = out.write_all(s.as_bytes());
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: cannot serialize report: {e}");
            EXIT_INPUT
        }
    }
}
