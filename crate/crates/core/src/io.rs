//! CSV and JSON encodings of terms, probe reports, grids and profile dumps.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::density::{RadialProfile, MAX_DERIVATIVE_ORDER};
use crate::error::{Error, Result};
use crate::probe::{BoundSummary, ProbeReport};
use crate::quadrature::RadialGrid;
use crate::term::{make_term, AdmissibilityClass, ExponentVector, KedTerm};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRow {
    pub dim: u32,
    pub exponents: String,
    pub total_order: u64,
    pub ell: i64,
    pub q_num: i64,
    pub q_den: i64,
    pub class: String,
}

impl From<&KedTerm> for TermRow {
    fn from(t: &KedTerm) -> Self {
        Self {
            dim: t.dim(),
            exponents: t.exponents().to_string(),
            total_order: t.total_order(),
            ell: t.ell(),
            q_num: *t.decay_index().numer(),
            q_den: *t.decay_index().denom(),
            class: t.class().to_string(),
        }
    }
}

impl TryFrom<TermRow> for KedTerm {
    type Error = Error;

    /// Rebuilds the term and rejects rows whose derived columns disagree.
    fn try_from(row: TermRow) -> Result<Self> {
        let exponents: ExponentVector = row.exponents.parse()?;
        let term = make_term(row.dim, exponents)?;
        let class: AdmissibilityClass = row.class.parse()?;
        if TermRow::from(&term) != row || term.class() != class {
            return Err(Error::Parse(format!(
                "row {row:?} is inconsistent with its exponents"
            )));
        }
        Ok(term)
    }
}

pub fn write_terms_csv<W: Write>(out: W, terms: &[KedTerm]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in terms {
        w.serialize(TermRow::from(t))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_terms_csv<R: Read>(input: R) -> Result<Vec<KedTerm>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    r.deserialize::<TermRow>()
        .map(|row| KedTerm::try_from(row?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub term: String,
    pub profile: String,
    pub r_lo: f64,
    pub r_hi: f64,
    pub abscissa: String,
    pub measured_slope: f64,
    pub predicted_slope: f64,
    pub verdict: String,
    pub agrees: bool,
}

impl From<&ProbeReport> for ProbeRow {
    fn from(p: &ProbeReport) -> Self {
        Self {
            term: p.term.clone(),
            profile: p.profile.clone(),
            r_lo: p.r_lo,
            r_hi: p.r_hi,
            abscissa: p.abscissa.to_string(),
            measured_slope: p.measured_slope,
            predicted_slope: p.predicted_slope,
            verdict: p.verdict.to_string(),
            agrees: p.agrees_with_theory,
        }
    }
}

pub fn write_probe_csv<W: Write>(out: W, reports: &[ProbeReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in reports {
        w.serialize(ProbeRow::from(p))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per validation cell; cells whose probe failed carry the error text.
pub fn write_validation_csv<W: Write>(out: W, summary: &BoundSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "term",
        "profile",
        "r_lo",
        "r_hi",
        "measured_slope",
        "predicted_slope",
        "verdict",
        "agrees",
        "exempt",
        "error",
    ])?;
    for c in &summary.cells {
        let rec = match &c.report {
            Some(p) => vec![
                c.term.clone(),
                c.profile.clone(),
                p.r_lo.to_string(),
                p.r_hi.to_string(),
                p.measured_slope.to_string(),
                p.predicted_slope.to_string(),
                p.verdict.to_string(),
                p.agrees_with_theory.to_string(),
                c.exempt.to_string(),
                String::new(),
            ],
            None => vec![
                c.term.clone(),
                c.profile.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
                c.exempt.to_string(),
                c.error.clone().unwrap_or_default(),
            ],
        };
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_json(summary: &BoundSummary) -> Result<String> {
    Ok(serde_json::to_string_pretty(summary)?)
}

pub fn write_grid_csv<W: Write>(out: W, grid: &RadialGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "w"])?;
    for (r, wt) in grid.nodes().iter().zip(grid.weights()) {
        w.write_record([r.to_string(), wt.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `(r, w)` table. Rust's shortest round-trip float formatting makes
/// dump followed by load bit-exact.
pub fn read_grid_csv<R: Read>(dim: u32, input: R) -> Result<RadialGrid> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for rec in r.deserialize::<(f64, f64)>() {
        let (x, w) = rec?;
        nodes.push(x);
        weights.push(w);
    }
    RadialGrid::from_table(dim, nodes, weights)
}

/// `r, rho, g1 .. g6` at each node.
pub fn write_profile_csv<W: Write>(out: W, profile: &RadialProfile, radii: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["r".to_string(), "rho".to_string()];
    header.extend((1..=MAX_DERIVATIVE_ORDER).map(|k| format!("g{k}")));
    w.write_record(&header)?;
    for &r in radii {
        let mut rec = vec![r.to_string()];
        for k in 0..=MAX_DERIVATIVE_ORDER {
            rec.push(profile.iterated_derivative(k, r)?.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
