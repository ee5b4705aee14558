//! The `squarepack` command line.
//!
//! Exit status: 0 on success or when the algorithm stops through its own
//! error branch (the report then says `terminated-with-error`), 2 when a
//! geometric or accounting invariant fails, 3 on I/O or parse errors.

pub mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use squarepack::block::{pack_spec, BlockError, BlockSpec, GapCensus};
use squarepack::certificate::{Certificate, CertificateError};
use squarepack::engine::{Limits, PackingState, RunReport, RunStatus};
use squarepack::series::{side, Params, ParamsError};
use squarepack::svg::{self, SvgOptions};
use squarepack::sweep::{self, MonotonicityFinding, SweepGrid, SweepRow};
use squarepack::verify::{verify, VerificationReport, VerifyLevel};
use squarepack::Rect;

use config::{BlockDemoArgs, PackArgs, RenderArgs, SweepArgs, VerifyArgs};
pub use config::{CliConfig, Command};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVARIANT: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// Engine tolerances checked after every `pack`.
pub const AREA_TOL: f64 = 1e-8;
pub const DECOMPOSITION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamsError),
    #[error("{}: {source}", path.display())]
    Certificate {
        path: PathBuf,
        source: CertificateError,
    },
    #[error("writing sweep table: {0}")]
    Table(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The algorithm's failure branch fired; still a valid run.
    Terminated,
    InvariantViolation,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success | Outcome::Terminated => EXIT_OK,
            Outcome::InvariantViolation => EXIT_INVARIANT,
        }
    }
}

pub fn run(cfg: &CliConfig) -> Result<Outcome, CliError> {
    if cfg.dump_config {
        println!("{}", serde_json::to_string_pretty(cfg)?);
        return Ok(Outcome::Success);
    }
    match &cfg.command {
        Command::Pack(a) => cmd_pack(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Render(a) => cmd_render(a),
        Command::BlockDemo(a) => cmd_block_demo(a),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_certificate(path: &Path) -> Result<Certificate, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    Certificate::from_json(&text).map_err(|source| CliError::Certificate {
        path: path.to_owned(),
        source,
    })
}

/// Report JSON goes to `path` when given, otherwise to stdout.
fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => write_file(p, &text),
        None => {
            let mut out = io::stdout().lock();
            let _ = writeln!(out, "{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineInvariants {
    pub pass: bool,
    pub indices_contiguous: bool,
    pub max_conservation_rel_err: f64,
    pub max_area_rel_err: f64,
    pub max_decomposition_rel_err: f64,
    pub height_non_increasing: bool,
}

impl EngineInvariants {
    pub fn of(r: &RunReport) -> Self {
        let pass = r.indices_contiguous
            && r.max_conservation_rel_err <= AREA_TOL
            && r.max_area_rel_err <= AREA_TOL
            && r.max_decomposition_rel_err <= DECOMPOSITION_TOL
            && r.height_non_increasing;
        Self {
            pass,
            indices_contiguous: r.indices_contiguous,
            max_conservation_rel_err: r.max_conservation_rel_err,
            max_area_rel_err: r.max_area_rel_err,
            max_decomposition_rel_err: r.max_decomposition_rel_err,
            height_non_increasing: r.height_non_increasing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackReport {
    pub status: RunStatus,
    pub invariants: EngineInvariants,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    pub run: RunReport,
}

fn cmd_pack(a: &PackArgs) -> Result<Outcome, CliError> {
    let mut params = Params::new(a.t, a.m, a.n0)?;
    if let Some(cap) = a.n_max {
        params = params.with_n_max(cap)?;
    }
    let mut state = PackingState::init(params);
    let run = state.run(&Limits {
        budget: Some(a.budget),
        n_max: a.n_max,
        max_steps: a.max_steps,
    });
    let cert = Certificate::from_state(&state, Some(run.termination.clone()));
    let verification = (!a.no_verify).then(|| verify(&cert, VerifyLevel::Fast));

    if let Some(p) = &a.out {
        write_file(p, &cert.to_json())?;
    }
    if let Some(p) = &a.svg {
        write_file(p, &svg::render(&cert, &SvgOptions::default()))?;
    }
    let report = PackReport {
        status: run.status,
        invariants: EngineInvariants::of(&run),
        verification,
        run,
    };
    eprintln!(
        "{} squares placed, n = {}..{}, termination {}, max perim/budget {:.4}",
        report.run.squares_placed,
        report.run.n_start,
        report.run.n_final,
        report.run.termination.label(),
        report.run.max_budget_ratio
    );
    emit_json(&report, a.report.as_deref())?;

    let verified = report.verification.as_ref().is_none_or(|v| v.pass());
    Ok(if !report.invariants.pass || !verified {
        if let Some(v) = &report.verification {
            eprintln!("invariant violation: {:?}", v.failures());
        }
        Outcome::InvariantViolation
    } else if report.status == RunStatus::TerminatedWithError {
        Outcome::Terminated
    } else {
        Outcome::Success
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let cert = read_certificate(&a.path)?;
    let report = verify(&cert, a.level.into());
    emit_json(&report, a.report.as_deref())?;
    if report.pass() {
        eprintln!(
            "pass: {} squares, {} residuals",
            cert.squares.len(),
            cert.residuals.len()
        );
        Ok(Outcome::Success)
    } else {
        eprintln!("fail: {:?}", report.failures());
        Ok(Outcome::InvariantViolation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepOutput<'a> {
    grid: &'a SweepGrid,
    rows: &'a [SweepRow],
    findings: &'a [MonotonicityFinding],
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome, CliError> {
    let grid = SweepGrid {
        t: a.t.clone(),
        m: a.m.clone(),
        n0: a.n0.clone(),
        budget: a.budget,
    };
    let rows = sweep::run_sweep(&grid)?;
    let mut table = Vec::new();
    sweep::write_csv(&rows, &mut table).map_err(|e| CliError::Table(e.to_string()))?;
    let table = String::from_utf8(table).map_err(|e| CliError::Table(e.to_string()))?;
    match &a.out {
        Some(p) => write_file(p, &table)?,
        None => print!("{table}"),
    }
    let findings = sweep::monotonicity_findings(&rows, a.budget);
    for f in &findings {
        eprintln!(
            "finding: t = {}, M = {}: n0 = {} placed {} but n0 = {} placed {}",
            f.t, f.m, f.n0_lo, f.placed_lo, f.n0_hi, f.placed_hi
        );
    }
    if let Some(p) = &a.json {
        emit_json(
            &SweepOutput {
                grid: &grid,
                rows: &rows,
                findings: &findings,
            },
            Some(p),
        )?;
    }
    Ok(Outcome::Success)
}

fn cmd_render(a: &RenderArgs) -> Result<Outcome, CliError> {
    let cert = read_certificate(&a.path)?;
    let opts = SvgOptions {
        pixels: a.pixels,
        residuals: !a.no_residuals,
        ..SvgOptions::default()
    };
    write_file(&a.out, &svg::render(&cert, &opts))?;
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDemoReport {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<BlockError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<u64>,
    pub squares: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaps: Option<GapCensus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

fn cmd_block_demo(a: &BlockDemoArgs) -> Result<Outcome, CliError> {
    let params = Params::new(a.t, a.m, a.n0)?;
    let unit = side(a.n0, a.t);
    let grid = a.m1.zip(a.m2);
    let (gw, gh) = grid.unwrap_or((a.m, a.m));
    let w = a.width.unwrap_or(gw as f64 + 0.5) * unit;
    let h = a.height.unwrap_or(gh as f64 + 0.5) * unit;
    let rect = Rect::new(0.0, 0.0, w, h);
    let spec = match grid {
        Some((m1, m2)) => BlockSpec::new(rect, a.n0, a.t, m1, m2),
        None => BlockSpec::from_params(rect, a.n0, &params),
    };
    let result = spec.and_then(|s| pack_spec(&s));
    let block = match result {
        Ok(b) => b,
        Err(error) => {
            eprintln!("block precondition failed: {error}");
            emit_json(
                &BlockDemoReport {
                    status: RunStatus::TerminatedWithError,
                    error: Some(error),
                    m1: None,
                    m2: None,
                    squares: 0,
                    gaps: None,
                    verification: None,
                },
                None,
            )?;
            return Ok(Outcome::Terminated);
        }
    };
    let cert = Certificate::from_block(&block, params);
    let verification = verify(&cert, VerifyLevel::FullBruteforce);
    let pass = verification.pass();
    if let Some(p) = &a.out {
        write_file(p, &cert.to_json_pretty())?;
    }
    if let Some(p) = &a.svg {
        write_file(p, &svg::render(&cert, &SvgOptions::default()))?;
    }
    emit_json(
        &BlockDemoReport {
            status: RunStatus::Complete,
            error: None,
            m1: Some(block.spec.m1()),
            m2: Some(block.spec.m2()),
            squares: block.squares.len(),
            gaps: Some(block.census()),
            verification: Some(verification),
        },
        None,
    )?;
    Ok(if pass {
        Outcome::Success
    } else {
        Outcome::InvariantViolation
    })
}
