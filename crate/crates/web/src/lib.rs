//! Browser bindings: every export takes plain strings and numbers and returns
//! a JSON document, so the page needs no generated type glue. The `*_json`
//! functions are ordinary Rust and are what the tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use kedlab::density::{log_term_eval, term_value, Abscissa, R_MIN};
use kedlab::io::TermRow;
use kedlab::probe::{probe_periodic, probe_term, ProbeWindow, DEFAULT_TOL};
use kedlab::term::{classify, enumerate_terms, make_term, predicted_log_slope, Boundary, ExponentVector};
use kedlab::{KedTerm, RadialProfile};

const PERIODIC_CELLS: usize = 3;

#[derive(Serialize)]
struct TermEntry {
    #[serde(flatten)]
    row: TermRow,
    token: String,
    finite_localized: bool,
    finite_periodic: bool,
}

#[derive(Serialize)]
struct Curve {
    profile: String,
    term: String,
    /// `"r"`, `"r2"` or `"x"` (periodic cell coordinate).
    abscissa: &'static str,
    /// `true` when `y` holds `ln|t|`, `false` for raw values on a periodic profile.
    log_scale: bool,
    x: Vec<f64>,
    ln_rho: Vec<Option<f64>>,
    y: Vec<Option<f64>>,
    /// Asymptote `slope * x + intercept`, anchored at the end of the probe window.
    predicted: Option<Line>,
    window: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct Line {
    slope: f64,
    intercept: f64,
}

fn parse(profile: &str, term: &str) -> Result<(RadialProfile, KedTerm), String> {
    let p: RadialProfile = profile.trim().parse().map_err(|e: kedlab::Error| e.to_string())?;
    let n: ExponentVector = term.trim().parse().map_err(|e: kedlab::Error| e.to_string())?;
    let t = make_term(p.dim(), n).map_err(|e| e.to_string())?;
    Ok((p, t))
}

fn finite(v: kedlab::Result<f64>) -> Option<f64> {
    v.ok().filter(|x| x.is_finite())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// All terms up to the admissibility bound for `dim`, with their classes.
pub fn enumerate_json(dim: u32, periodic: bool) -> Result<String, String> {
    let boundary = if periodic { Boundary::Periodic } else { Boundary::Localized };
    let terms = enumerate_terms(dim, boundary, None).map_err(|e| e.to_string())?;
    let rows: Vec<TermEntry> = terms
        .iter()
        .map(|t| TermEntry {
            row: TermRow::from(t),
            token: t.token(),
            finite_localized: classify(t, Boundary::Localized).finite,
            finite_periodic: classify(t, Boundary::Periodic).finite,
        })
        .collect();
    to_json(&rows)
}

/// Sampled `ln rho` and `ln|t|` out to the far end of the default probe window,
/// plus the predicted asymptote. Periodic profiles give raw values over a few cells.
pub fn curve_json(profile: &str, term: &str, samples: usize) -> Result<String, String> {
    let (p, t) = parse(profile, term)?;
    let samples = samples.clamp(16, 4000);
    if p.decay().is_periodic() {
        let cell = p.extent();
        let x: Vec<f64> = (0..samples)
            .map(|i| PERIODIC_CELLS as f64 * cell * i as f64 / (samples - 1) as f64)
            .collect();
        let curve = Curve {
            profile: p.id().to_string(),
            term: t.token(),
            abscissa: "x",
            log_scale: false,
            ln_rho: x.iter().map(|&r| finite(p.rho(r)).map(f64::ln)).collect(),
            y: x.iter().map(|&r| finite(term_value(&t, &p, r))).collect(),
            x,
            predicted: None,
            window: None,
        };
        return to_json(&curve);
    }
    let window = ProbeWindow::default_for(&p).map_err(|e| e.to_string())?;
    let prediction = predicted_log_slope(&t, p.decay()).map_err(|e| e.to_string())?;
    let abscissa = window.abscissa;
    // start a little off the origin so derivative singularities stay on the plot
    let r0 = (window.r_hi * 1e-3).max(R_MIN);
    let radii: Vec<f64> = (0..samples)
        .map(|i| r0 + (window.r_hi - r0) * i as f64 / (samples - 1) as f64)
        .collect();
    let y: Vec<Option<f64>> = radii.iter().map(|&r| finite(log_term_eval(&t, &p, r))).collect();
    let predicted = radii
        .iter()
        .zip(&y)
        .rev()
        .find_map(|(&r, v)| v.map(|v| (abscissa.of(r), v)))
        .map(|(x_end, y_end)| Line {
            slope: prediction.value(),
            intercept: y_end - prediction.value() * x_end,
        });
    let curve = Curve {
        profile: p.id().to_string(),
        term: t.token(),
        abscissa: match abscissa {
            Abscissa::Radius => "r",
            Abscissa::RadiusSquared => "r2",
        },
        log_scale: true,
        ln_rho: radii.iter().map(|&r| finite(p.rho(r)).map(f64::ln)).collect(),
        y,
        x: radii.iter().map(|&r| abscissa.of(r)).collect(),
        predicted,
        window: Some((abscissa.of(window.r_lo), abscissa.of(window.r_hi))),
    };
    to_json(&curve)
}

/// Probe report for one term on one profile; `tol <= 0` selects the default.
pub fn probe_json(profile: &str, term: &str, tol: f64) -> Result<String, String> {
    let (p, t) = parse(profile, term)?;
    if p.decay().is_periodic() {
        let rep = probe_periodic(&t, &p, 8).map_err(|e| e.to_string())?;
        return to_json(&serde_json::json!({ "periodic": rep }));
    }
    let tol = if tol > 0.0 { tol } else { DEFAULT_TOL };
    let window = ProbeWindow::default_for(&p).map_err(|e| e.to_string())?;
    let rep = probe_term(&t, &p, &window, tol).map_err(|e| e.to_string())?;
    to_json(&serde_json::json!({ "probe": rep, "class": t.class() }))
}

#[wasm_bindgen]
pub fn enumerate(dim: u32, periodic: bool) -> Result<String, JsValue> {
    enumerate_json(dim, periodic).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn curve(profile: &str, term: &str, samples: usize) -> Result<String, JsValue> {
    curve_json(profile, term, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn probe(profile: &str, term: &str, tol: f64) -> Result<String, JsValue> {
    probe_json(profile, term, tol).map_err(|e| JsValue::from_str(&e))
}
