//! Analytic radial model densities and their iterated derivative chains.
//!
//! For a radial density the operator `grad^k` alternates gradient and
//! divergence, which reduces to the recursion
//!
//! ```text
//! g_0 = rho
//! g_k = g_{k-1}'                          k odd  (gradient)
//! g_k = g_{k-1}' + (D - 1)/r * g_{k-1}    k even (divergence)
//! ```
//!
//! Every catalog profile is `C * P(r) * envelope(r)` with `P` a finite sum
//! of real powers of `r`, and that family is closed under the recursion, so
//! the chain is derived symbolically once at construction time.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::term::KedTerm;

/// Highest derivative order carried by every profile.
pub const MAX_DERIVATIVE_ORDER: usize = 6;

/// Inner edge of default radial grids. The uncovered ball `[0, R_MIN]` holds
/// `~ R_MIN^D` of the density but `~ R_MIN` of a `1/r`-singular Laplacian in
/// `D = 2`, hence the small value.
pub const R_MIN: f64 = 1e-10;

/// Default lower bound on `ln rho` accepted by [`log_term_eval`].
pub const DEFAULT_LOG_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Decay {
    Exponential { rate: f64 },
    Gaussian { alpha: f64 },
    PolyExponential { beta: f64, rate: f64 },
    PeriodicCosine { rho0: f64, amplitude: f64, period: f64 },
}

impl Decay {
    /// `b` for exponential classes, `alpha` for Gaussians.
    pub fn rate(&self) -> Option<f64> {
        match *self {
            Decay::Exponential { rate } | Decay::PolyExponential { rate, .. } => Some(rate),
            Decay::Gaussian { alpha } => Some(alpha),
            Decay::PeriodicCosine { .. } => None,
        }
    }

    pub fn abscissa(&self) -> Option<Abscissa> {
        match self {
            Decay::Exponential { .. } | Decay::PolyExponential { .. } => Some(Abscissa::Radius),
            Decay::Gaussian { .. } => Some(Abscissa::RadiusSquared),
            Decay::PeriodicCosine { .. } => None,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Decay::PeriodicCosine { .. })
    }
}

/// Variable against which `ln t` is linear asymptotically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Abscissa {
    #[serde(rename = "r")]
    Radius,
    #[serde(rename = "r2")]
    RadiusSquared,
}

impl Abscissa {
    pub fn of(&self, r: f64) -> f64 {
        match self {
            Abscissa::Radius => r,
            Abscissa::RadiusSquared => r * r,
        }
    }
}

impl fmt::Display for Abscissa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Abscissa::Radius => "r",
            Abscissa::RadiusSquared => "r2",
        })
    }
}

/// `sum_i c_i r^(base + i)`
#[derive(Debug, Clone, PartialEq)]
struct PowerSum {
    base: f64,
    coeffs: BTreeMap<i32, f64>,
}

impl PowerSum {
    fn monomial(base: f64) -> Self {
        Self {
            base,
            coeffs: BTreeMap::from([(0, 1.0)]),
        }
    }

    fn add(&mut self, offset: i32, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.coeffs.entry(offset).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&offset);
        }
    }

    /// d/dr of `P(r) * envelope(r)`, divided by the envelope again.
    fn differentiate(&self, envelope: Envelope) -> Self {
        let mut out = Self {
            base: self.base,
            coeffs: BTreeMap::new(),
        };
        for (&i, &c) in &self.coeffs {
            let p = self.base + i as f64;
            out.add(i - 1, c * p);
            match envelope {
                Envelope::Exponential(b) => out.add(i, -b * c),
                Envelope::Gaussian(alpha) => out.add(i + 1, -2.0 * alpha * c),
            }
        }
        out
    }

    fn add_over_r(&mut self, other: &Self, factor: f64) {
        for (&i, &c) in &other.coeffs {
            self.add(i - 1, factor * c);
        }
    }

    fn eval(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&i, &c)| c * r.powf(self.base + i as f64))
            .sum()
    }

    /// `ln |P(r)|`, factoring out the leading power so large `r` stays finite.
    fn log_abs(&self, r: f64) -> f64 {
        let Some((&top, _)) = self.coeffs.last_key_value() else {
            return f64::NEG_INFINITY;
        };
        let lr = r.ln();
        let s: f64 = self
            .coeffs
            .iter()
            .map(|(&i, &c)| c * ((i - top) as f64 * lr).exp())
            .sum();
        (self.base + top as f64) * lr + s.abs().ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Envelope {
    Exponential(f64),
    Gaussian(f64),
}

impl Envelope {
    fn log(&self, r: f64) -> f64 {
        match *self {
            Envelope::Exponential(b) => -b * r,
            Envelope::Gaussian(alpha) => -alpha * r * r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Chain {
    Radial {
        log_scale: f64,
        envelope: Envelope,
        terms: Vec<PowerSum>,
    },
    /// `rho0 * (1 + A cos(w x))`
    Cosine { rho0: f64, amplitude: f64, wavenumber: f64 },
}

impl Chain {
    fn radial(dim: u32, log_scale: f64, envelope: Envelope, base: f64) -> Self {
        let mut terms = Vec::with_capacity(MAX_DERIVATIVE_ORDER + 1);
        terms.push(PowerSum::monomial(base));
        for k in 1..=MAX_DERIVATIVE_ORDER {
            let prev = &terms[k - 1];
            let mut next = prev.differentiate(envelope);
            if k % 2 == 0 && dim > 1 {
                next.add_over_r(prev, (dim - 1) as f64);
            }
            terms.push(next);
        }
        Chain::Radial {
            log_scale,
            envelope,
            terms,
        }
    }
}

/// An analytic radial density with closed-form `g_0 ... g_6`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    id: String,
    dim: u32,
    decay: Decay,
    norm: f64,
    single_orbital: bool,
    chain: Chain,
}

/// Surface area of the unit sphere in `D` dimensions (`S_1 = 2`).
pub fn sphere_area(dim: u32) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * PI.powf(half) / libm::tgamma(half)
}

fn check_dim(dim: u32) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `rho = e^(-2r)/pi`, the hydrogen 1s density.
pub fn make_hydrogenic() -> RadialProfile {
    RadialProfile {
        id: "hydrogenic".into(),
        dim: 3,
        decay: Decay::Exponential { rate: 2.0 },
        norm: 1.0,
        single_orbital: true,
        chain: Chain::radial(3, -PI.ln(), Envelope::Exponential(2.0), 0.0),
    }
}

/// `rho = C e^(-b r)` normalized to one electron.
pub fn make_exponential(rate: f64, dim: u32) -> Result<RadialProfile> {
    check_positive("b", rate)?;
    check_dim(dim)?;
    // C S_D Gamma(D) / b^D = 1
    let log_scale = dim as f64 * rate.ln() - sphere_area(dim).ln() - libm::lgamma(dim as f64);
    Ok(RadialProfile {
        id: format!("exp:b={rate},D={dim}"),
        dim,
        decay: Decay::Exponential { rate },
        norm: 1.0,
        single_orbital: true,
        chain: Chain::radial(dim, log_scale, Envelope::Exponential(rate), 0.0),
    })
}

/// `rho = (alpha/pi)^(D/2) e^(-alpha r^2)`
pub fn make_gaussian(alpha: f64, dim: u32) -> Result<RadialProfile> {
    check_positive("alpha", alpha)?;
    check_dim(dim)?;
    let log_scale = 0.5 * dim as f64 * (alpha / PI).ln();
    Ok(RadialProfile {
        id: format!("gauss:a={alpha},D={dim}"),
        dim,
        decay: Decay::Gaussian { alpha },
        norm: 1.0,
        single_orbital: true,
        chain: Chain::radial(dim, log_scale, Envelope::Gaussian(alpha), 0.0),
    })
}

/// `rho = C r^beta e^(-b r)`, the molecular asymptotic form, normalized to one electron.
pub fn make_poly_exponential(beta: f64, rate: f64, dim: u32) -> Result<RadialProfile> {
    check_positive("b", rate)?;
    check_dim(dim)?;
    if !beta.is_finite() || beta <= -(dim as f64) {
        return Err(Error::InvalidParameter(format!(
            "beta must exceed -D = {} for a normalizable density, got {beta}",
            -(dim as f64)
        )));
    }
    let p = beta + dim as f64;
    let log_scale = p * rate.ln() - sphere_area(dim).ln() - libm::lgamma(p);
    let id = if dim == 3 {
        format!("polyexp:beta={beta},b={rate}")
    } else {
        format!("polyexp:beta={beta},b={rate},D={dim}")
    };
    Ok(RadialProfile {
        id,
        dim,
        decay: Decay::PolyExponential { beta, rate },
        norm: 1.0,
        single_orbital: false,
        chain: Chain::radial(dim, log_scale, Envelope::Exponential(rate), beta),
    })
}

/// `rho = e^(-x^2)/sqrt(pi)`, the 1-D harmonic oscillator ground state.
pub fn make_ho1d_ground() -> RadialProfile {
    let mut p = make_gaussian(1.0, 1).expect("valid parameters");
    p.id = "ho1d".into();
    p
}

/// `rho = rho0 (1 + A cos(2 pi x / L))` on the line; normalized per cell.
pub fn make_periodic_cosine(rho0: f64, amplitude: f64, period: f64) -> Result<RadialProfile> {
    check_positive("rho0", rho0)?;
    check_positive("L", period)?;
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!(
            "amplitude must lie in [0, 1), got {amplitude}"
        )));
    }
    Ok(RadialProfile {
        id: format!("cos:rho0={rho0},A={amplitude},L={period}"),
        dim: 1,
        decay: Decay::PeriodicCosine {
            rho0,
            amplitude,
            period,
        },
        norm: rho0 * period,
        single_orbital: false,
        chain: Chain::Cosine {
            rho0,
            amplitude,
            wavenumber: 2.0 * PI / period,
        },
    })
}

impl RadialProfile {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn decay(&self) -> &Decay {
        &self.decay
    }

    /// Electron count (per cell for periodic profiles).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// True when `phi = sqrt(rho)` is a single normalized orbital.
    pub fn is_single_orbital(&self) -> bool {
        self.single_orbital
    }

    /// `c * rho`. The result is no longer a single orbital unless `c == 1`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        check_positive("scale", c)?;
        let mut out = self.clone();
        out.norm *= c;
        out.single_orbital &= c == 1.0;
        out.id = format!("{}*{c}", self.id);
        match &mut out.chain {
            Chain::Radial { log_scale, .. } => *log_scale += c.ln(),
            Chain::Cosine { rho0, .. } => *rho0 *= c,
        }
        if let Decay::PeriodicCosine { rho0, .. } = &mut out.decay {
            *rho0 *= c;
        }
        Ok(out)
    }

    /// Radius beyond which the density is negligible (`~e^-40` relative).
    pub fn extent(&self) -> f64 {
        match self.decay {
            Decay::Exponential { rate } => 40.0 / rate,
            Decay::PolyExponential { beta, rate } => (40.0 + 2.0 * beta.max(0.0)) / rate,
            Decay::Gaussian { alpha } => (40.0 / alpha).sqrt(),
            Decay::PeriodicCosine { period, .. } => period,
        }
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        let ok = match self.chain {
            Chain::Cosine { .. } => r.is_finite(),
            Chain::Radial { .. } if self.dim == 1 => r.is_finite() && r >= 0.0,
            Chain::Radial { .. } => r.is_finite() && r > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain { r })
        }
    }

    pub fn rho(&self, r: f64) -> Result<f64> {
        self.iterated_derivative(0, r)
    }

    /// `g_k(r)`, the radial component of `grad^k rho`.
    pub fn iterated_derivative(&self, k: usize, r: f64) -> Result<f64> {
        if k > MAX_DERIVATIVE_ORDER {
            return Err(Error::DerivativeOrder(k));
        }
        self.check_domain(r)?;
        Ok(match &self.chain {
            Chain::Radial {
                log_scale,
                envelope,
                terms,
            } => (log_scale + envelope.log(r)).exp() * terms[k].eval(r),
            Chain::Cosine {
                rho0,
                amplitude,
                wavenumber,
            } => {
                let phase = wavenumber * r;
                let wave = match k % 4 {
                    0 => phase.cos(),
                    1 => -phase.sin(),
                    2 => -phase.cos(),
                    _ => phase.sin(),
                };
                let v = rho0 * amplitude * wavenumber.powi(k as i32) * wave;
                if k == 0 {
                    rho0 + v
                } else {
                    v
                }
            }
        })
    }

    /// `ln |g_k(r)|`; `-inf` at a node.
    pub fn log_abs_derivative(&self, k: usize, r: f64) -> Result<f64> {
        if k > MAX_DERIVATIVE_ORDER {
            return Err(Error::DerivativeOrder(k));
        }
        self.check_domain(r)?;
        Ok(match &self.chain {
            Chain::Radial {
                log_scale,
                envelope,
                terms,
            } => log_scale + envelope.log(r) + terms[k].log_abs(r),
            Chain::Cosine { .. } => self.iterated_derivative(k, r)?.abs().ln(),
        })
    }

    /// Sign changes of `g_k` on `[lo, hi]`, located by bracketing and bisection.
    pub fn derivative_nodes(&self, k: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
        const SCAN: usize = 4096;
        self.check_domain(lo)?;
        self.check_domain(hi)?;
        let log_spaced = lo > 0.0 && !self.decay.is_periodic();
        let at = |i: usize| {
            let t = i as f64 / SCAN as f64;
            if log_spaced {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        };
        let sign = |r: f64| -> Result<f64> { Ok(self.iterated_derivative(k, r)?.signum()) };
        let mut nodes = Vec::new();
        let mut a = at(0);
        let mut sa = sign(a)?;
        for i in 1..=SCAN {
            let b = at(i);
            let sb = sign(b)?;
            if sa != sb {
                let (mut x0, mut x1) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (x0 + x1);
                    if mid <= x0 || mid >= x1 {
                        break;
                    }
                    if sign(mid)? == sa {
                        x0 = mid;
                    } else {
                        x1 = mid;
                    }
                }
                nodes.push(0.5 * (x0 + x1));
            }
            a = b;
            sa = sb;
        }
        Ok(nodes)
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

impl FromStr for RadialProfile {
    type Err = Error;

    /// Catalog ids: `hydrogenic`, `exp:b=<v>,D=<d>`, `gauss:a=<v>,D=<d>`,
    /// `polyexp:beta=<v>,b=<v>`, `ho1d`, `cos:rho0=<v>,A=<v>,L=<v>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let grammar = "profile ids: hydrogenic | ho1d | exp:b=<v>,D=<d> | gauss:a=<v>,D=<d> | \
                       polyexp:beta=<v>,b=<v> | cos:rho0=<v>,A=<v>,L=<v>";
        match s {
            "hydrogenic" => return Ok(make_hydrogenic()),
            "ho1d" => return Ok(make_ho1d_ground()),
            _ => {}
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unknown profile {s:?}; {grammar}")))?;
        let mut params = BTreeMap::new();
        for kv in args.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad parameter {kv:?} in {s:?}; {grammar}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value {v:?} in {s:?}; {grammar}")))?;
            params.insert(k.trim(), v);
        }
        let get = |key: &str| -> Result<f64> {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::Parse(format!("missing {key} in {s:?}; {grammar}")))
        };
        let dim = |default: Option<u32>| -> Result<u32> {
            match (params.get("D"), default) {
                (Some(&d), _) if d >= 1.0 && d.fract() == 0.0 => Ok(d as u32),
                (Some(d), _) => Err(Error::Parse(format!("bad dimension {d} in {s:?}"))),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::Parse(format!("missing D in {s:?}; {grammar}"))),
            }
        };
        let allowed: &[&str] = match kind {
            "exp" => &["b", "D"],
            "gauss" => &["a", "D"],
            "polyexp" => &["beta", "b", "D"],
            "cos" => &["rho0", "A", "L"],
            _ => return Err(Error::Parse(format!("unknown profile {s:?}; {grammar}"))),
        };
        if let Some(extra) = params.keys().find(|k| !allowed.contains(k)) {
            return Err(Error::Parse(format!("unexpected parameter {extra} in {s:?}; {grammar}")));
        }
        match kind {
            "exp" => make_exponential(get("b")?, dim(None)?),
            "gauss" => make_gaussian(get("a")?, dim(None)?),
            "polyexp" => make_poly_exponential(get("beta")?, get("b")?, dim(Some(3))?),
            _ => make_periodic_cosine(get("rho0")?, get("A")?, get("L")?),
        }
    }
}

/// Multiplicative constants `c_k` in `u_k = c_k |grad^k rho| / rho^((D+k)/D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeScales(pub [f64; MAX_DERIVATIVE_ORDER + 1]);

impl Default for DerivativeScales {
    fn default() -> Self {
        Self([1.0; MAX_DERIVATIVE_ORDER + 1])
    }
}

/// `u_k = |g_k| / rho^((D+k)/D)` with unit scale constants.
pub fn normalized_derivative(profile: &RadialProfile, k: usize, r: f64) -> Result<f64> {
    normalized_derivative_scaled(profile, k, r, &DerivativeScales::default())
}

pub fn normalized_derivative_scaled(
    profile: &RadialProfile,
    k: usize,
    r: f64,
    scales: &DerivativeScales,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "normalized derivatives start at k = 1".into(),
        ));
    }
    Ok(scales.0[k.min(MAX_DERIVATIVE_ORDER)] * signed_normalized(profile, k, r)?.abs())
}

/// `g_k / rho^((D+k)/D)`, keeping the sign of `g_k`.
pub(crate) fn signed_normalized(profile: &RadialProfile, k: usize, r: f64) -> Result<f64> {
    let d = profile.dim() as f64;
    let log_rho = profile.log_abs_derivative(0, r)?;
    if log_rho == f64::NEG_INFINITY {
        return Err(Error::Pole { r });
    }
    let g = profile.iterated_derivative(k, r)?;
    Ok(g.signum() * (profile.log_abs_derivative(k, r)? - (d + k as f64) / d * log_rho).exp())
}

fn check_term_dim(term: &KedTerm, profile: &RadialProfile) -> Result<()> {
    if term.dim() != profile.dim() {
        return Err(Error::DimensionMismatch {
            term: term.dim(),
            profile: profile.dim(),
        });
    }
    Ok(())
}

fn ratio_f64(q: crate::term::Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// `ln |t_j(r)| = (l/D) ln rho + sum_k n_k ln |g_k|`, never leaving the log domain.
pub fn log_term_eval(term: &KedTerm, profile: &RadialProfile, r: f64) -> Result<f64> {
    log_term_eval_with_floor(term, profile, r, DEFAULT_LOG_FLOOR)
}

pub fn log_term_eval_with_floor(
    term: &KedTerm,
    profile: &RadialProfile,
    r: f64,
    floor: f64,
) -> Result<f64> {
    check_term_dim(term, profile)?;
    let log_rho = profile.log_abs_derivative(0, r)?;
    if log_rho == f64::NEG_INFINITY {
        return Err(Error::Pole { r });
    }
    if log_rho < floor {
        return Err(Error::Underflow { r, log_rho, floor });
    }
    let mut acc = ratio_f64(term.density_power()) * log_rho;
    for (k, n) in term.exponents().nonzero() {
        let lg = profile.log_abs_derivative(k, r)?;
        if !lg.is_finite() {
            return Err(Error::Node { order: k, r });
        }
        acc += n as f64 * lg;
    }
    Ok(acc)
}

/// Direct evaluation `rho^(l/D) * prod_k g_k^(n_k)` with signed radial components.
pub fn term_value(term: &KedTerm, profile: &RadialProfile, r: f64) -> Result<f64> {
    check_term_dim(term, profile)?;
    let rho = profile.rho(r)?;
    let power = ratio_f64(term.density_power());
    let mut v = if power == 0.0 {
        1.0
    } else {
        if rho <= 0.0 {
            return Err(Error::Pole { r });
        }
        rho.powf(power)
    };
    for (k, n) in term.exponents().nonzero() {
        v *= profile.iterated_derivative(k, r)?.powi(n as i32);
    }
    Ok(v)
}
