//! Numerical checks of the asymptotic behaviour of KED terms.
//!
//! `probe_term` fits a straight line to `ln |t_j|` far from the origin and
//! compares its slope with `-q b` (or `-q alpha` against `r^2`).
//! `validate_bound` sweeps every term up to a chosen total order over a set
//! of profiles and reports the highest derivative order that still decays.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::density::{
    log_term_eval_with_floor, make_exponential, make_gaussian, make_hydrogenic, make_ho1d_ground,
    term_value, Abscissa, Decay, RadialProfile, DEFAULT_LOG_FLOOR,
};
use crate::error::{Error, Result};
use crate::term::{
    enumerate_terms, max_derivative_order, predicted_log_slope, AdmissibilityClass, Boundary,
    KedTerm,
};

pub const DEFAULT_TOL: f64 = 0.02;
pub const DEFAULT_SAMPLES: usize = 64;
pub const MIN_SAMPLES: usize = 16;
pub const PERIODIC_SAMPLES_PER_CELL: usize = 256;
pub const PERIODIC_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeWindow {
    pub r_lo: f64,
    pub r_hi: f64,
    pub samples: usize,
    pub abscissa: Abscissa,
}

impl ProbeWindow {
    pub fn new(r_lo: f64, r_hi: f64, samples: usize, abscissa: Abscissa) -> Result<Self> {
        if !(r_lo > 0.0 && r_hi > r_lo && r_hi.is_finite()) {
            return Err(Error::Window(format!("need 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]")));
        }
        if samples < MIN_SAMPLES {
            return Err(Error::Window(format!(
                "need at least {MIN_SAMPLES} samples, got {samples}"
            )));
        }
        Ok(Self {
            r_lo,
            r_hi,
            samples,
            abscissa,
        })
    }

    /// `r in [30/b, 90/b]` for exponential classes, `r^2 in [200/alpha, 600/alpha]`
    /// for Gaussians; 64 log-spaced samples.
    pub fn default_for(profile: &RadialProfile) -> Result<Self> {
        match *profile.decay() {
            Decay::Exponential { rate } | Decay::PolyExponential { rate, .. } => {
                Self::new(30.0 / rate, 90.0 / rate, DEFAULT_SAMPLES, Abscissa::Radius)
            }
            Decay::Gaussian { alpha } => Self::new(
                (200.0 / alpha).sqrt(),
                (600.0 / alpha).sqrt(),
                DEFAULT_SAMPLES,
                Abscissa::RadiusSquared,
            ),
            Decay::PeriodicCosine { .. } => {
                Err(Error::UnsupportedDecay("periodic-cosine".into()))
            }
        }
    }

    /// Same abscissa and sample count, different radii.
    pub fn with_range(&self, r_lo: f64, r_hi: f64) -> Result<Self> {
        Self::new(r_lo, r_hi, self.samples, self.abscissa)
    }

    fn sample(&self, i: usize) -> f64 {
        if i + 1 == self.samples {
            return self.r_hi;
        }
        let t = i as f64 / (self.samples - 1) as f64;
        self.r_lo * (self.r_hi / self.r_lo).powf(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Decaying,
    NonDecaying,
    Growing,
}

impl Verdict {
    /// The verdict implied by the sign of `-q`.
    pub fn expected(term: &KedTerm) -> Self {
        match term.class() {
            AdmissibilityClass::LocalizedAdmissible => Verdict::Decaying,
            AdmissibilityClass::PeriodicMarginal => Verdict::NonDecaying,
            AdmissibilityClass::Inadmissible => Verdict::Growing,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Decaying => "Decaying",
            Verdict::NonDecaying => "NonDecaying",
            Verdict::Growing => "Growing",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub term: String,
    pub profile: String,
    /// Window actually fitted, after node and underflow shrinking.
    pub r_lo: f64,
    pub r_hi: f64,
    pub samples: usize,
    pub abscissa: Abscissa,
    pub measured_slope: f64,
    pub predicted_slope: f64,
    pub fit_r2: f64,
    pub verdict: Verdict,
    pub agrees_with_theory: bool,
}

impl ProbeReport {
    /// `|measured - predicted| / |predicted|`, infinite for a zero prediction.
    pub fn relative_error(&self) -> f64 {
        (self.measured_slope - self.predicted_slope).abs() / self.predicted_slope.abs()
    }
}

/// Least-squares line `y = a + s x`; returns `(s, R^2)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Largest node-free sub-interval of `[lo, hi]` for every derivative the term needs.
fn node_free_interval(term: &KedTerm, profile: &RadialProfile, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let mut cuts = vec![lo, hi];
    for (k, _) in term.exponents().nonzero() {
        cuts.extend(profile.derivative_nodes(k, lo, hi)?);
    }
    cuts.sort_by(f64::total_cmp);
    // outermost wins ties: the asymptotic side is what we are after
    let mut best = (lo, lo);
    for w in cuts.windows(2) {
        if w[1] - w[0] >= best.1 - best.0 {
            best = (w[0], w[1]);
        }
    }
    Ok(best)
}

pub fn probe_term(
    term: &KedTerm,
    profile: &RadialProfile,
    window: &ProbeWindow,
    tol: f64,
) -> Result<ProbeReport> {
    probe_term_with_floor(term, profile, window, tol, DEFAULT_LOG_FLOOR)
}

pub fn probe_term_with_floor(
    term: &KedTerm,
    profile: &RadialProfile,
    window: &ProbeWindow,
    tol: f64,
    floor: f64,
) -> Result<ProbeReport> {
    if term.dim() != profile.dim() {
        return Err(Error::DimensionMismatch {
            term: term.dim(),
            profile: profile.dim(),
        });
    }
    let prediction = predicted_log_slope(term, profile.decay())?;
    let (lo, hi) = node_free_interval(term, profile, window.r_lo, window.r_hi)?;

    let mut xs = Vec::with_capacity(window.samples);
    let mut ys = Vec::with_capacity(window.samples);
    let mut used = (f64::NAN, f64::NAN);
    for i in 0..window.samples {
        let r = window.sample(i);
        let above_lo = r > lo || (lo == window.r_lo && r >= lo);
        let below_hi = r < hi || (hi == window.r_hi && r <= hi);
        if !below_hi {
            break;
        }
        if !above_lo {
            continue;
        }
        match log_term_eval_with_floor(term, profile, r, floor) {
            Ok(y) => {
                if xs.is_empty() {
                    used.0 = r;
                }
                used.1 = r;
                xs.push(window.abscissa.of(r));
                ys.push(y);
            }
            Err(Error::Underflow { .. }) | Err(Error::Node { .. }) if !xs.is_empty() => break,
            Err(Error::Underflow { .. }) | Err(Error::Node { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if xs.len() < MIN_SAMPLES {
        return Err(Error::Window(format!(
            "only {} valid samples for {} on {} in [{}, {}] (need {MIN_SAMPLES})",
            xs.len(),
            term,
            profile,
            window.r_lo,
            window.r_hi
        )));
    }

    let (measured, r2) = fit_line(&xs, &ys);
    let predicted = prediction.value();
    let eps = tol * prediction.rate;
    let verdict = if measured < -eps {
        Verdict::Decaying
    } else if measured > eps {
        Verdict::Growing
    } else {
        Verdict::NonDecaying
    };
    let expected = match prediction.sign() {
        Ordering::Less => Verdict::Decaying,
        Ordering::Equal => Verdict::NonDecaying,
        Ordering::Greater => Verdict::Growing,
    };
    let close = (measured - predicted).abs() <= tol * predicted.abs().max(1.0);

    Ok(ProbeReport {
        term: term.token(),
        profile: profile.id().to_string(),
        r_lo: used.0,
        r_hi: used.1,
        samples: xs.len(),
        abscissa: window.abscissa,
        measured_slope: measured,
        predicted_slope: predicted,
        fit_r2: r2,
        verdict,
        agrees_with_theory: close && verdict == expected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicReport {
    pub term: String,
    pub profile: String,
    pub bounded: bool,
    pub max_over_cells: f64,
    pub cell_max: Vec<f64>,
}

/// Evaluates `|t_j|` over `cells` periods and checks that it is finite and
/// repeats from cell to cell.
pub fn probe_periodic(term: &KedTerm, profile: &RadialProfile, cells: usize) -> Result<PeriodicReport> {
    let Decay::PeriodicCosine { period, .. } = *profile.decay() else {
        return Err(Error::KindMismatch(format!(
            "periodic probe needs a periodic profile, got {}",
            profile.id()
        )));
    };
    if term.dim() != profile.dim() {
        return Err(Error::DimensionMismatch {
            term: term.dim(),
            profile: profile.dim(),
        });
    }
    if cells == 0 {
        return Err(Error::InvalidParameter("need at least one cell".into()));
    }
    let n = PERIODIC_SAMPLES_PER_CELL;
    let mut cell_max = Vec::with_capacity(cells);
    for c in 0..cells {
        let mut m = 0.0f64;
        for i in 0..n {
            let x = (c as f64 + i as f64 / n as f64) * period;
            let v = term_value(term, profile, x)?.abs();
            if !v.is_finite() {
                m = f64::INFINITY;
                break;
            }
            m = m.max(v);
        }
        cell_max.push(m);
    }
    let max_over_cells = cell_max.iter().copied().fold(0.0, f64::max);
    let first = cell_max[0];
    let bounded = max_over_cells.is_finite()
        && cell_max
            .iter()
            .all(|&m| (m - first).abs() <= PERIODIC_REL_TOL * first.abs().max(f64::MIN_POSITIVE));
    Ok(PeriodicReport {
        term: term.token(),
        profile: profile.id().to_string(),
        bounded,
        max_over_cells,
        cell_max,
    })
}

/// Profiles swept by default for a given dimension.
pub fn default_validation_profiles(dim: u32) -> Result<Vec<RadialProfile>> {
    Ok(match dim {
        0 => return Err(Error::InvalidDimension(dim)),
        1 => vec![make_exponential(1.0, 1)?, make_ho1d_ground()],
        3 => vec![
            make_hydrogenic(),
            make_exponential(1.0, 3)?,
            make_gaussian(1.0, 3)?,
        ],
        d => vec![make_exponential(1.0, d)?, make_gaussian(1.0, d)?],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationCell {
    pub term: String,
    pub profile: String,
    pub total_order: u64,
    pub highest_order: usize,
    pub expected: Verdict,
    pub report: Option<ProbeReport>,
    pub error: Option<String>,
    /// Marginal terms on Gaussian profiles: reported, not asserted.
    pub exempt: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSummary {
    pub dim: u32,
    pub m_measured: usize,
    pub m_predicted: usize,
    pub n_terms: usize,
    pub n_failures: usize,
    #[serde(skip)]
    pub cells: Vec<ValidationCell>,
}

impl BoundSummary {
    pub fn passed(&self) -> bool {
        self.n_failures == 0 && self.m_measured == self.m_predicted
    }
}

pub fn validate_bound(dim: u32, profiles: &[RadialProfile], max_total_order: u32) -> Result<BoundSummary> {
    validate_bound_with_tol(dim, profiles, max_total_order, DEFAULT_TOL)
}

pub fn validate_bound_with_tol(
    dim: u32,
    profiles: &[RadialProfile],
    max_total_order: u32,
    tol: f64,
) -> Result<BoundSummary> {
    if max_total_order < dim + 3 {
        return Err(Error::InvalidParameter(format!(
            "max_total_order must be at least D + 3 = {} to include inadmissible witnesses",
            dim + 3
        )));
    }
    if profiles.is_empty() {
        return Err(Error::InvalidParameter("no profiles to validate against".into()));
    }
    if let Some(p) = profiles.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            term: dim,
            profile: p.dim(),
        });
    }
    let terms = enumerate_terms(dim, Boundary::Localized, Some(max_total_order))?;
    let windows = profiles
        .iter()
        .map(ProbeWindow::default_for)
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..terms.len())
        .flat_map(|t| (0..profiles.len()).map(move |p| (t, p)))
        .collect();

    let run = |&(t, p): &(usize, usize)| -> ValidationCell {
        let term = &terms[t];
        let profile = &profiles[p];
        let expected = Verdict::expected(term);
        let exempt = expected == Verdict::NonDecaying
            && matches!(profile.decay(), Decay::Gaussian { .. });
        let outcome = probe_term(term, profile, &windows[p], tol);
        let (report, error, passed) = match outcome {
            Ok(rep) => {
                let ok = rep.agrees_with_theory || exempt;
                (Some(rep), None, ok)
            }
            Err(e) => (None, Some(e.to_string()), false),
        };
        ValidationCell {
            term: term.token(),
            profile: profile.id().to_string(),
            total_order: term.total_order(),
            highest_order: term.highest_order(),
            expected,
            report,
            error,
            exempt,
            passed,
        }
    };

    #[cfg(feature = "parallel")]
    let cells: Vec<ValidationCell> = {
        use rayon::prelude::*;
        pairs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cells: Vec<ValidationCell> = pairs.iter().map(run).collect();

    let m_measured = cells
        .chunks(profiles.len())
        .filter(|row| {
            row.iter().all(|c| {
                c.report
                    .as_ref()
                    .is_some_and(|r| r.verdict == Verdict::Decaying)
            })
        })
        .map(|row| row[0].highest_order)
        .max()
        .unwrap_or(0);

    Ok(BoundSummary {
        dim,
        m_measured,
        m_predicted: max_derivative_order(dim, Boundary::Localized)?,
        n_terms: terms.len(),
        n_failures: cells.iter().filter(|c| !c.passed).count(),
        cells,
    })
}
