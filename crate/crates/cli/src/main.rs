use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kedlab::density::RadialProfile;
use kedlab::fit::{fit_expansion, standard_basis, BasisTerm, Weighting};
use kedlab::io::{write_probe_csv, write_terms_csv, write_validation_csv, ProbeRow, TermRow};
use kedlab::probe::{
    default_validation_profiles, probe_periodic, probe_term, validate_bound_with_tol, ProbeWindow,
    DEFAULT_SAMPLES, DEFAULT_TOL,
};
use kedlab::quadrature::{RadialGrid, DEFAULT_GRID_POINTS};
use kedlab::reference::{reference_ked, ReferenceKind};
use kedlab::term::{classify, enumerate_terms, make_term, Boundary, ExponentVector, KedTerm};

const TERM_GRAMMAR: &str = "term tokens are n1,n2,...,nm (non-negative integers, nm >= 1; empty for rho alone)";
const EXIT_USAGE: u8 = 1;
const EXIT_DISAGREE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "kedlab", version, about = "Kinetic-energy-density monomials: admissibility, asymptotics and fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print every term up to the admissibility bound (or --max-order).
    Enumerate {
        #[arg(long)]
        dim: u32,
        /// Use the periodic bound D+2 instead of D+1.
        #[arg(long)]
        periodic: bool,
        #[arg(long)]
        max_order: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Report l, the decay index and the admissibility class of one term.
    Check {
        #[arg(long)]
        dim: u32,
        /// Exponent vector n1,n2,...,nm.
        #[arg(long, allow_hyphen_values = true)]
        term: String,
        #[command(flatten)]
        out: Output,
    },
    /// Fit the asymptotic log-slope of terms on model densities.
    Probe {
        /// Exponent vector; repeat for several terms.
        #[arg(long = "term", required = true)]
        terms: Vec<String>,
        /// Profile id; repeat for several profiles.
        #[arg(long = "profile", required = true)]
        profiles: Vec<String>,
        #[arg(long)]
        rlo: Option<f64>,
        #[arg(long)]
        rhi: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Number of cells scanned for periodic profiles.
        #[arg(long, default_value_t = 8)]
        cells: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Least-squares fit of a reference KED on a basis of terms.
    Fit {
        #[arg(long)]
        profile: String,
        #[arg(long, value_enum)]
        reference: ReferenceArg,
        /// `auto` for TF, vW and Laplacian shapes, or `;`-separated exponent vectors.
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        basis: String,
        #[arg(long, value_enum, default_value_t = WeightingArg::Measure)]
        weighting: WeightingArg,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Sweep every term against model densities and report the highest decaying order.
    Validate {
        #[arg(long)]
        dim: u32,
        /// Profile id; repeat to override the default set.
        #[arg(long = "profile")]
        profiles: Vec<String>,
        /// Defaults to D+3 so inadmissible witnesses are included.
        #[arg(long)]
        max_order: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug, Clone)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Serialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ReferenceArg {
    Tf,
    Vw,
    Positive,
    Laplacian,
}

impl From<ReferenceArg> for ReferenceKind {
    fn from(r: ReferenceArg) -> Self {
        match r {
            ReferenceArg::Tf => ReferenceKind::ThomasFermi,
            ReferenceArg::Vw => ReferenceKind::VonWeizsacker,
            ReferenceArg::Positive => ReferenceKind::SingleOrbitalPositive,
            ReferenceArg::Laplacian => ReferenceKind::SingleOrbitalLaplacian,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum WeightingArg {
    Measure,
    Uniform,
}

/// Effective settings of a run, echoed at the top of every output.
#[derive(Serialize, Debug, Clone)]
struct RunConfig {
    command: &'static str,
    dim: Option<u32>,
    boundary: &'static str,
    max_order: Option<u32>,
    profiles: Vec<String>,
    terms: Vec<String>,
    r_lo: Option<f64>,
    r_hi: Option<f64>,
    samples: usize,
    tol: f64,
    cells: usize,
    reference: Option<&'static str>,
    basis: Vec<String>,
    weighting: &'static str,
    grid_points: usize,
    format: Format,
    output: Option<String>,
    threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: "",
            dim: None,
            boundary: "localized",
            max_order: None,
            profiles: Vec::new(),
            terms: Vec::new(),
            r_lo: None,
            r_hi: None,
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOL,
            cells: 8,
            reference: None,
            basis: Vec::new(),
            weighting: "measure",
            grid_points: DEFAULT_GRID_POINTS,
            format: Format::Csv,
            output: None,
            threads: None,
        }
    }
}

/// A failure that maps to exit code 1 and is reported without a backtrace.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn parse_term(dim: u32, token: &str) -> Result<KedTerm> {
    let n: ExponentVector = token
        .parse()
        .map_err(|e| usage(format!("{e}\n{TERM_GRAMMAR}")))?;
    make_term(dim, n).map_err(|e| usage(format!("{e}\n{TERM_GRAMMAR}")))
}

fn parse_profile(id: &str) -> Result<RadialProfile> {
    id.parse().map_err(|e: kedlab::Error| usage(e.to_string()))
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("KEDLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!("KEDLAB_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

struct Report {
    config: RunConfig,
    /// Comment lines placed between the config header and the CSV body.
    notes: Vec<String>,
    csv: Vec<u8>,
    json: serde_json::Value,
    agrees: bool,
}

fn write_report(report: &Report, out: &Output) -> Result<()> {
    let mut buf = Vec::new();
    match out.format {
        Format::Csv => {
            writeln!(buf, "# kedlab {}", env!("CARGO_PKG_VERSION"))?;
            writeln!(buf, "# config: {}", serde_json::to_string(&report.config)?)?;
            for n in &report.notes {
                writeln!(buf, "# {n}")?;
            }
            buf.extend_from_slice(&report.csv);
        }
        Format::Json => {
            let doc = serde_json::json!({
                "kedlab": env!("CARGO_PKG_VERSION"),
                "config": report.config,
                "result": report.json,
            });
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
    }
    match &out.output {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(&buf))
            .with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn base_config(command: &'static str, out: &Output, threads: Option<usize>) -> RunConfig {
    RunConfig {
        command,
        format: out.format,
        output: out.output.as_ref().map(|p| p.display().to_string()),
        threads,
        ..RunConfig::default()
    }
}

fn run(cli: Cli, threads: Option<usize>) -> Result<bool> {
    let (report, out) = match cli.command {
        Command::Enumerate {
            dim,
            periodic,
            max_order,
            out,
        } => {
            let boundary = if periodic { Boundary::Periodic } else { Boundary::Localized };
            let terms = enumerate_terms(dim, boundary, max_order).map_err(|e| usage(e.to_string()))?;
            let mut csv = Vec::new();
            write_terms_csv(&mut csv, &terms)?;
            let rows: Vec<TermRow> = terms.iter().map(TermRow::from).collect();
            let config = RunConfig {
                dim: Some(dim),
                boundary: if periodic { "periodic" } else { "localized" },
                max_order,
                ..base_config("enumerate", &out, threads)
            };
            let report = Report {
                config,
                notes: vec![format!("{} terms", terms.len())],
                csv,
                json: serde_json::to_value(rows)?,
                agrees: true,
            };
            (report, out)
        }
        Command::Check { dim, term, out } => {
            let t = parse_term(dim, &term)?;
            let localized = classify(&t, Boundary::Localized).finite;
            let periodic = classify(&t, Boundary::Periodic).finite;
            let row = TermRow::from(&t);
            let mut w = csv_writer(Vec::new());
            w.write_record([
                "dim",
                "exponents",
                "total_order",
                "ell",
                "q_num",
                "q_den",
                "class",
                "finite_localized",
                "finite_periodic",
            ])?;
            w.write_record([
                row.dim.to_string(),
                row.exponents.clone(),
                row.total_order.to_string(),
                row.ell.to_string(),
                row.q_num.to_string(),
                row.q_den.to_string(),
                row.class.clone(),
                localized.to_string(),
                periodic.to_string(),
            ])?;
            let csv = w.into_inner().map_err(|e| anyhow!("{e}"))?;
            let json = serde_json::json!({
                "term": t.token(),
                "row": row,
                "finite_localized": localized,
                "finite_periodic": periodic,
            });
            let config = RunConfig {
                dim: Some(dim),
                terms: vec![t.exponents().to_string()],
                ..base_config("check", &out, threads)
            };
            (
                Report {
                    config,
                    notes: vec![t.token()],
                    csv,
                    json,
                    agrees: true,
                },
                out,
            )
        }
        Command::Probe {
            terms,
            profiles,
            rlo,
            rhi,
            samples,
            tol,
            cells,
            out,
        } => {
            let profiles = profiles
                .iter()
                .map(|p| parse_profile(p))
                .collect::<Result<Vec<_>>>()?;
            let mut reports = Vec::new();
            let mut periodic = Vec::new();
            for p in &profiles {
                for token in &terms {
                    let t = parse_term(p.dim(), token)?;
                    if p.decay().is_periodic() {
                        periodic.push(probe_periodic(&t, p, cells).map_err(|e| usage(e.to_string()))?);
                        continue;
                    }
                    let default = ProbeWindow::default_for(p).map_err(|e| usage(e.to_string()))?;
                    let window = ProbeWindow::new(
                        rlo.unwrap_or(default.r_lo),
                        rhi.unwrap_or(default.r_hi),
                        samples,
                        default.abscissa,
                    )
                    .map_err(|e| usage(e.to_string()))?;
                    let rep = probe_term(&t, p, &window, tol).map_err(|e| usage(format!("{t} on {p}: {e}")))?;
                    reports.push(rep);
                }
            }
            let agrees = reports.iter().all(|r| r.agrees_with_theory) && periodic.iter().all(|r| r.bounded);
            let mut csv = Vec::new();
            write_probe_csv(&mut csv, &reports)?;
            let notes = periodic
                .iter()
                .map(|r| {
                    format!(
                        "periodic: term={} profile={} bounded={} max={}",
                        r.term,
                        r.profile,
                        r.bounded,
                        shortest(r.max_over_cells)
                    )
                })
                .collect();
            let rows: Vec<ProbeRow> = reports.iter().map(ProbeRow::from).collect();
            let json = serde_json::json!({ "probes": reports, "rows": rows, "periodic": periodic });
            let config = RunConfig {
                profiles: profiles.iter().map(|p| p.id().to_string()).collect(),
                terms,
                r_lo: rlo,
                r_hi: rhi,
                samples,
                tol,
                cells,
                ..base_config("probe", &out, threads)
            };
            (
                Report {
                    config,
                    notes,
                    csv,
                    json,
                    agrees,
                },
                out,
            )
        }
        Command::Fit {
            profile,
            reference,
            basis,
            weighting,
            grid_points,
            out,
        } => {
            let p = parse_profile(&profile)?;
            let kind: ReferenceKind = reference.into();
            let reference_fn = reference_ked(kind, &p).map_err(|e| usage(e.to_string()))?;
            let basis_terms = if basis.trim() == "auto" {
                standard_basis(p.dim()).map_err(|e| usage(e.to_string()))?
            } else {
                basis
                    .split(';')
                    .map(|tok| parse_term(p.dim(), tok).map(BasisTerm::conventional))
                    .collect::<Result<Vec<_>>>()?
            };
            let grid = RadialGrid::for_profile(&p, grid_points).map_err(|e| usage(e.to_string()))?;
            let weighting_value = match weighting {
                WeightingArg::Measure => Weighting::Measure,
                WeightingArg::Uniform => Weighting::Uniform,
            };
            let fit = fit_expansion(|r| reference_fn.eval(r), &basis_terms, &p, &grid, weighting_value)
                .map_err(|e| usage(e.to_string()))?;
            let mut w = csv_writer(Vec::new());
            w.write_record(["term", "scale", "a"])?;
            for (b, a) in basis_terms.iter().zip(&fit.coefficients) {
                w.write_record([b.term.exponents().to_string(), shortest(b.scale), shortest(*a)])?;
            }
            let csv = w.into_inner().map_err(|e| anyhow!("{e}"))?;
            let notes = vec![format!(
                "residual_rms={} T_fit={} T_ref={} cond={}",
                shortest(fit.residual_rms),
                shortest(fit.t_fit),
                shortest(fit.t_ref),
                shortest(fit.cond)
            )];
            let config = RunConfig {
                dim: Some(p.dim()),
                profiles: vec![p.id().to_string()],
                reference: Some(kind.as_str()),
                basis: basis_terms.iter().map(|b| b.term.exponents().to_string()).collect(),
                weighting: match weighting {
                    WeightingArg::Measure => "measure",
                    WeightingArg::Uniform => "uniform",
                },
                grid_points,
                ..base_config("fit", &out, threads)
            };
            (
                Report {
                    config,
                    notes,
                    csv,
                    json: serde_json::to_value(&fit)?,
                    agrees: true,
                },
                out,
            )
        }
        Command::Validate {
            dim,
            profiles,
            max_order,
            tol,
            out,
        } => {
            let profiles = if profiles.is_empty() {
                default_validation_profiles(dim).map_err(|e| usage(e.to_string()))?
            } else {
                profiles
                    .iter()
                    .map(|p| parse_profile(p))
                    .collect::<Result<Vec<_>>>()?
            };
            let max_order = max_order.unwrap_or(dim + 3);
            let summary = validate_bound_with_tol(dim, &profiles, max_order, tol)
                .map_err(|e| usage(e.to_string()))?;
            let mut csv = Vec::new();
            write_validation_csv(&mut csv, &summary)?;
            let notes = vec![format!(
                "summary: m_measured={} m_predicted={} n_terms={} n_failures={}",
                summary.m_measured, summary.m_predicted, summary.n_terms, summary.n_failures
            )];
            let json = serde_json::json!({ "summary": summary, "cells": summary.cells });
            let config = RunConfig {
                dim: Some(dim),
                max_order: Some(max_order),
                profiles: profiles.iter().map(|p| p.id().to_string()).collect(),
                tol,
                ..base_config("validate", &out, threads)
            };
            (
                Report {
                    config,
                    notes,
                    csv,
                    json,
                    agrees: summary.passed(),
                },
                out,
            )
        }
    };
    write_report(&report, &out)?;
    Ok(report.agrees)
}

/// Shortest decimal that round-trips, in the same form the CSV serializer uses.
fn shortest(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

fn csv_writer(buf: Vec<u8>) -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(buf)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = threads_from_env().and_then(|threads| {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the thread pool")?;
        }
        run(cli, threads)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_DISAGREE),
        Err(e) => {
            if e.downcast_ref::<Usage>().is_some() {
                eprintln!("error: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(EXIT_USAGE)
        }
    }
}
