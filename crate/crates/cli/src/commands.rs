use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use smooth_rough::arith::floor_count;
use smooth_rough::bounds::{
    audit_delta, audit_grid, propagate_corexact, propagate_corexact2, trivial_bounds_check, BoundAuditRow, DeltaBoundKind,
    PropagationReport, PropagationStatus,
};
use smooth_rough::error_terms::delta;
use smooth_rough::identity::{run_suite, Grid, Suite, SuiteOptions, VerificationReport};
use smooth_rough::{Context64, Tables64};

use crate::functions::{evaluate, Function, Row};
use crate::grid::{parse_y_list, XSpec};
use crate::output::{csv_writer, sink, write_json, Metadata};
use crate::settings::Settings;
use crate::CliError;

pub struct ComputeArgs {
    pub functions: String,
    pub x: Option<String>,
    pub u: Option<String>,
    pub y: Option<String>,
    pub output: Option<PathBuf>,
    /// always emit CSV, even for one point
    pub table: bool,
}

fn write_rows(path: Option<&std::path::Path>, header: &[String], rows: &[Row]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn compute(args: ComputeArgs, tables: &Arc<Tables64>) -> Result<i32, CliError> {
    let fns = args
        .functions
        .split(',')
        .map(Function::parse)
        .collect::<Result<Vec<_>, _>>()?;
    if fns.len() > 1 && !args.table {
        return Err(CliError::Usage("compute takes one function; use table for several".into()));
    }
    let xs = args.x.as_deref().map(XSpec::parse).transpose()?;
    let us = args.u.as_deref().map(XSpec::parse).transpose()?;
    let ys = args.y.as_deref().map(parse_y_list).transpose()?;
    let rows = evaluate(
        &fns,
        xs.as_ref().map(|s| s.values.as_slice()),
        us.as_ref().map(|s| s.values.as_slice()),
        ys.as_deref(),
        tables,
    )?;
    if rows.is_empty() {
        return Err(CliError::Usage("empty grid".into()));
    }
    if rows.len() == 1 && !args.table {
        let mut w = sink(args.output.as_deref())?;
        writeln!(w, "{}", rows[0].values[0].render())?;
        w.flush()?;
        return Ok(0);
    }
    let mut header: Vec<String> = ["x", "y", "u"].map(String::from).to_vec();
    if fns.len() == 1 {
        header.push("value".into());
    } else {
        header.extend(fns.iter().map(|f| f.name().to_string()));
    }
    write_rows(args.output.as_deref(), &header, &rows)?;
    Ok(0)
}

pub struct VerifyArgs {
    pub suite: String,
    pub x: Option<String>,
    pub x_max: Option<u64>,
    pub y: Option<String>,
    pub tol: Option<f64>,
    pub truncation_x: Option<u64>,
    pub output: Option<PathBuf>,
    pub no_timestamp: bool,
}

#[derive(Serialize)]
struct GridJson {
    x_spec: String,
    y_list: Vec<u64>,
}

#[derive(Serialize)]
struct Worst {
    x: f64,
    y: u64,
}

#[derive(Serialize)]
struct ErroredJson {
    x: f64,
    y: u64,
    error: String,
}

#[derive(Serialize)]
struct SuiteJson {
    suite: &'static str,
    grid: GridJson,
    tol: f64,
    max_scaled_residual: f64,
    worst: Option<Worst>,
    pass: bool,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    inconclusive_budget: Option<f64>,
    points: usize,
    errored: Vec<ErroredJson>,
}

#[derive(Serialize)]
struct VerifyJson {
    #[serde(flatten)]
    report: SuiteJson,
    metadata: Metadata,
}

#[derive(Serialize)]
struct VerifyAllJson {
    suite: &'static str,
    pass: bool,
    status: &'static str,
    reports: Vec<SuiteJson>,
    metadata: Metadata,
}

fn status_name(code: i32) -> &'static str {
    match code {
        0 => "pass",
        4 => "inconclusive",
        _ => "fail",
    }
}

fn suite_json(rep: &VerificationReport, x_spec: &str, ys: &[u64]) -> SuiteJson {
    SuiteJson {
        suite: rep.suite.name(),
        grid: GridJson {
            x_spec: x_spec.to_string(),
            y_list: ys.to_vec(),
        },
        tol: rep.tol,
        max_scaled_residual: rep.max_scaled_residual,
        worst: rep.worst.map(|(x, y)| Worst { x, y }),
        pass: rep.pass,
        status: status_name(rep.exit_code()),
        inconclusive_budget: rep.inconclusive_budget,
        points: rep.points.len(),
        errored: rep
            .errored
            .iter()
            .map(|e| ErroredJson {
                x: e.x,
                y: e.y,
                error: e.error.clone(),
            })
            .collect(),
    }
}

/// Default u grid of the convolution suite.
const CONVOLUTION_GRID: &str = "0:20:201lin";

fn run_one(
    suite: Suite,
    xs: &XSpec,
    ys: &[u64],
    tol: f64,
    tables: &Arc<Tables64>,
    opts: SuiteOptions,
    explicit_x: bool,
) -> Result<(VerificationReport, String, Vec<u64>), CliError> {
    let (xs, ys) = match suite {
        Suite::Convolution297 => {
            let us = if explicit_x { xs.clone() } else { XSpec::parse(CONVOLUTION_GRID)? };
            (us, Vec::new())
        }
        Suite::BetaIntegral => {
            let x = opts.truncation_x as f64;
            (
                XSpec {
                    text: format!("truncation_x={}", opts.truncation_x),
                    values: vec![x],
                },
                ys.to_vec(),
            )
        }
        _ => (xs.clone(), ys.to_vec()),
    };
    if !suite.is_u_grid() && ys.is_empty() {
        return Err(CliError::Usage(format!("suite {} needs --y", suite.name())));
    }
    let grid = Grid {
        xs: xs.values.clone(),
        ys: ys.clone(),
    };
    let rep = run_suite(suite, &grid, tol, tables, opts)?;
    Ok((rep, xs.text, ys))
}

pub fn verify(args: VerifyArgs, settings: &Settings, tables: &Arc<Tables64>) -> Result<i32, CliError> {
    let all = args.suite == "all";
    let suite = if all {
        None
    } else {
        Some(Suite::parse(&args.suite).ok_or_else(|| CliError::Usage(format!("unknown suite {:?}", args.suite)))?)
    };
    let explicit_x = args.x.is_some() || args.x_max.is_some();
    let xs = match (&args.x, args.x_max) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give --x or --x-max, not both".into())),
        (Some(s), None) => XSpec::parse(s)?,
        (None, Some(n)) => XSpec::up_to(n)?,
        (None, None) => match suite {
            Some(Suite::Convolution297) | Some(Suite::BetaIntegral) => XSpec::parse(CONVOLUTION_GRID)?,
            _ => return Err(CliError::Usage("verify needs --x or --x-max".into())),
        },
    };
    let ys = args.y.as_deref().map(parse_y_list).transpose()?.unwrap_or_default();
    let tol = args.tol.unwrap_or(settings.tol);
    if !(tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let opts = SuiteOptions {
        truncation_x: args.truncation_x.unwrap_or(settings.truncation_x),
    };
    let metadata = Metadata::new(!args.no_timestamp);
    if let Some(suite) = suite {
        let (rep, x_text, ys) = run_one(suite, &xs, &ys, tol, tables, opts, explicit_x)?;
        let code = rep.exit_code();
        write_json(
            args.output.as_deref(),
            &VerifyJson {
                report: suite_json(&rep, &x_text, &ys),
                metadata,
            },
        )?;
        return Ok(code);
    }
    let mut reports = Vec::new();
    let mut code = 0;
    for suite in Suite::ALL {
        let (rep, x_text, ys) = run_one(suite, &xs, &ys, tol, tables, opts, false)?;
        code = match (code, rep.exit_code()) {
            (1, _) | (_, 1) => 1,
            (4, _) | (_, 4) => 4,
            _ => 0,
        };
        reports.push(suite_json(&rep, &x_text, &ys));
    }
    write_json(
        args.output.as_deref(),
        &VerifyAllJson {
            suite: "all",
            pass: code == 0,
            status: status_name(code),
            reports,
            metadata,
        },
    )?;
    Ok(code)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Unconditional,
    Rh,
    Trivial,
    Corexact,
    Corexact2,
}

impl BoundKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "unconditional" => BoundKind::Unconditional,
            "rh" => BoundKind::Rh,
            "trivial" => BoundKind::Trivial,
            "corexact" => BoundKind::Corexact,
            "corexact2" => BoundKind::Corexact2,
            _ => return Err(CliError::Usage(format!("unknown bound {s:?}"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            BoundKind::Unconditional => "unconditional",
            BoundKind::Rh => "rh",
            BoundKind::Trivial => "trivial",
            BoundKind::Corexact => "corexact",
            BoundKind::Corexact2 => "corexact2",
        }
    }
}

pub struct AuditArgs {
    pub bound: String,
    pub y: String,
    pub x: Option<String>,
    pub big_x: Option<u64>,
    pub f: Option<f64>,
    pub starred: bool,
    pub points: usize,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub no_timestamp: bool,
}

#[derive(Serialize)]
struct PropagationSummary {
    y: u64,
    f: f64,
    self_calibrated: bool,
    hypothesis_max: f64,
    status: PropagationStatus,
    min_margin: f64,
}

#[derive(Serialize)]
struct AuditSummary {
    bound: &'static str,
    grid: GridJson,
    rows: usize,
    min_margin: Option<f64>,
    trivial_rows: usize,
    status: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    propagation: Vec<PropagationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
    metadata: Metadata,
}

/// CSV row with the optional quantity label of propagation audits.
fn audit_record(r: &BoundAuditRow, quantity: Option<&str>) -> Vec<String> {
    let mut rec = vec![
        crate::output::fmt15(r.x),
        r.y.to_string(),
        crate::output::fmt15(r.observed),
        crate::output::fmt15(r.bound),
        crate::output::fmt15(r.margin),
        r.trivial_flag.to_string(),
    ];
    if let Some(q) = quantity {
        rec.push(q.to_string());
    }
    rec
}

fn propagation_labels(kind: BoundKind, starred: bool) -> [&'static str; 3] {
    match (kind, starred) {
        (BoundKind::Corexact2, _) => ["delta", "r_star", "q_star"],
        (_, true) => ["q_star", "r_star", "delta"],
        _ => ["q", "r", "delta"],
    }
}

pub fn audit(args: AuditArgs, tables: &Arc<Tables64>) -> Result<i32, CliError> {
    let kind = BoundKind::parse(&args.bound)?;
    let ys = parse_y_list(&args.y)?;
    let propagation = matches!(kind, BoundKind::Corexact | BoundKind::Corexact2);
    if args.f.is_some_and(|f| !(f >= 0.0)) {
        return Err(CliError::Usage("--f must be non-negative".into()));
    }
    if args.points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    // one grid per y: explicit x spec, or the refined grid up to X
    let grids: Vec<(u64, Vec<f64>)> = ys
        .iter()
        .map(|&y| -> Result<_, CliError> {
            let xs = match (&args.x, args.big_x) {
                (Some(_), Some(_)) => return Err(CliError::Usage("give --x or --X, not both".into())),
                (Some(s), None) => XSpec::parse(s)?.values,
                (None, Some(big)) => audit_grid(1.0, big as f64, args.points, y)?,
                (None, None) => return Err(CliError::Usage("audit needs --x or --X".into())),
            };
            Ok((y, xs))
        })
        .collect::<Result<_, _>>()?;
    let x_text = match (&args.x, args.big_x) {
        (Some(s), _) => s.clone(),
        (None, Some(big)) => format!("refined:1:{big}:{}log", args.points),
        _ => unreachable!("checked above"),
    };

    let mut w = csv_writer(args.output.as_deref())?;
    let mut header = vec!["x", "y", "observed", "bound", "margin", "trivial_flag"];
    if propagation {
        header.push("quantity");
    }
    w.write_record(&header)?;

    let mut rows = 0;
    let mut trivial_rows = 0;
    let mut min_margin: Option<f64> = None;
    let mut summaries = Vec::new();
    let mut code = 0;
    let mut note = None;
    let mut track = |r: &BoundAuditRow, rows: &mut usize, trivial_rows: &mut usize| {
        *rows += 1;
        *trivial_rows += usize::from(r.trivial_flag);
        min_margin = Some(min_margin.map_or(r.margin, |m| m.min(r.margin)));
    };
    for (y, xs) in &grids {
        let x_max = xs.iter().copied().fold(1.0f64, f64::max);
        let ctx = Context64::new(Arc::clone(tables), *y, floor_count(x_max).max(*y))?;
        match kind {
            BoundKind::Unconditional | BoundKind::Rh => {
                let fk = if kind == BoundKind::Rh { DeltaBoundKind::Rh } else { DeltaBoundKind::Unconditional };
                for r in audit_delta(fk, &ctx, xs)? {
                    track(&r, &mut rows, &mut trivial_rows);
                    w.write_record(audit_record(&r, None))?;
                }
                if kind == BoundKind::Rh {
                    note = Some("RH-conditional bound: rows are observations, not proofs");
                }
            }
            BoundKind::Trivial => {
                for &x in xs {
                    let flags = trivial_bounds_check(&ctx, x)?;
                    if !flags.all() {
                        code = 1;
                    }
                    let observed = delta(&ctx, x)?.abs() / x;
                    let r = BoundAuditRow {
                        x,
                        y: *y,
                        observed,
                        bound: 1.0,
                        margin: 1.0 - observed,
                        trivial_flag: true,
                    };
                    track(&r, &mut rows, &mut trivial_rows);
                    w.write_record(audit_record(&r, None))?;
                }
            }
            BoundKind::Corexact | BoundKind::Corexact2 => {
                let rep: PropagationReport = if kind == BoundKind::Corexact {
                    propagate_corexact(&ctx, args.f, xs, args.starred)?
                } else {
                    propagate_corexact2(&ctx, args.f, xs)?
                };
                let labels = propagation_labels(kind, args.starred);
                for pr in &rep.rows {
                    for (r, label) in [&pr.hypothesis, &pr.first, &pr.second].into_iter().zip(labels) {
                        w.write_record(audit_record(r, Some(label)))?;
                    }
                    // margins summarise the conclusions
                    track(&pr.first, &mut rows, &mut trivial_rows);
                    track(&pr.second, &mut rows, &mut trivial_rows);
                }
                code = match (code, rep.status) {
                    (1, _) | (_, PropagationStatus::ConclusionViolated) => 1,
                    (4, _) | (_, PropagationStatus::HypothesisViolated) => 4,
                    _ => 0,
                };
                summaries.push(PropagationSummary {
                    y: *y,
                    f: rep.f,
                    self_calibrated: rep.self_calibrated,
                    hypothesis_max: rep.hypothesis_max,
                    status: rep.status,
                    min_margin: rep.min_margin(),
                });
            }
        }
    }
    w.flush()?;
    drop(w);
    let summary = AuditSummary {
        bound: kind.name(),
        grid: GridJson {
            x_spec: x_text,
            y_list: ys,
        },
        rows,
        min_margin,
        trivial_rows,
        status: status_name(code),
        propagation: summaries,
        note,
        metadata: Metadata::new(!args.no_timestamp),
    };
    match &args.summary {
        Some(p) => write_json(Some(p), &summary)?,
        None => {
            let mut e = std::io::stderr().lock();
            serde_json::to_writer_pretty(&mut e, &summary)?;
            writeln!(e)?;
        }
    }
    Ok(code)
}
