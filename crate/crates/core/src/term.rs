//! Monomial kinetic-energy-density terms `rho^(l/D) * prod_k (grad^k rho)^(n_k)`.
//!
//! All exponents are exact rationals so that admissibility, which is a
//! strict inequality, never depends on rounding.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::density::{Abscissa, Decay};
use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Largest total order `sum k*n_k` that [`enumerate_terms`] accepts.
pub const MAX_ENUMERATION_ORDER: u32 = 64;

/// Powers `(n_1, ..., n_m)` of the successive density derivatives.
///
/// Canonical form: no trailing zeros, so the last entry is the positive
/// power of the highest derivative present. The empty vector is the pure
/// density term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.last() == Some(&0) {
            let hint = Self::canonicalize(entries.clone()).0;
            return Err(Error::NonCanonical { entries, hint });
        }
        Ok(Self(entries))
    }

    /// Strips trailing zeros.
    pub fn canonicalize(mut entries: Vec<u32>) -> Self {
        while entries.last() == Some(&0) {
            entries.pop();
        }
        Self(entries)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `n_order = 1`, every other power zero.
    pub fn single(order: usize) -> Self {
        if order == 0 {
            return Self::empty();
        }
        let mut entries = vec![0; order];
        entries[order - 1] = 1;
        Self(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Highest derivative order `m` present (0 for the pure density term).
    pub fn highest_order(&self) -> usize {
        self.0.len()
    }

    /// Power of the `k`-th derivative (1-based); zero beyond `m`.
    pub fn power(&self, k: usize) -> u32 {
        if k == 0 {
            return 0;
        }
        self.0.get(k - 1).copied().unwrap_or(0)
    }

    /// `(k, n_k)` for every derivative that actually appears.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (i + 1, n))
    }

    /// `sum_k k * n_k`
    pub fn total_order(&self) -> u64 {
        self.nonzero().map(|(k, n)| k as u64 * n as u64).sum()
    }

    /// `sum_k n_k`
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&n| n as u64).sum()
    }
}

impl TryFrom<Vec<u32>> for ExponentVector {
    type Error = Error;

    fn try_from(entries: Vec<u32>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ExponentVector> for Vec<u32> {
    fn from(v: ExponentVector) -> Self {
        v.0
    }
}

impl PartialOrd for ExponentVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExponentVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromStr for ExponentVector {
    type Err = Error;

    /// Grammar: `n1,n2,...,nm` with non-negative integers and `nm >= 1`.
    /// The empty string (or `{}`) is the pure density term.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "{}" {
            return Ok(Self::empty());
        }
        let entries = s
            .split(',')
            .map(|part| {
                part.trim().parse::<u32>().map_err(|_| {
                    Error::Parse(format!(
                        "bad exponent {part:?} in {s:?}; expected n1,n2,...,nm with non-negative integers and nm >= 1"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Localized,
    Periodic,
}

/// Ordered from most to least permissive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AdmissibilityClass {
    LocalizedAdmissible,
    PeriodicMarginal,
    Inadmissible,
}

impl AdmissibilityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LocalizedAdmissible => "LocalizedAdmissible",
            Self::PeriodicMarginal => "PeriodicMarginal",
            Self::Inadmissible => "Inadmissible",
        }
    }
}

impl fmt::Display for AdmissibilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdmissibilityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LocalizedAdmissible" => Ok(Self::LocalizedAdmissible),
            "PeriodicMarginal" => Ok(Self::PeriodicMarginal),
            "Inadmissible" => Ok(Self::Inadmissible),
            other => Err(Error::Parse(format!("unknown admissibility class {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: AdmissibilityClass,
    pub finite: bool,
}

/// One monomial term `t_j` with its exact density power and decay index.
#[derive(Debug, Clone, PartialEq)]
pub struct KedTerm {
    dim: u32,
    exponents: ExponentVector,
    ell: i64,
    density_power: Rational,
    decay_index: Rational,
    coefficient: f64,
}

/// Builds the dimensionally consistent term for `exponents` in `dim` dimensions.
pub fn make_term(dim: u32, exponents: ExponentVector) -> Result<KedTerm> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    let overflow = || Error::Overflow(exponents.entries().to_vec());
    let d = dim as i64;
    // l = D + 2 - sum_k (D + k) n_k
    let mut weighted: i64 = 0;
    let mut total: i64 = 0;
    for (k, n) in exponents.nonzero() {
        let k = i64::try_from(k).map_err(|_| overflow())?;
        let n = n as i64;
        weighted = (d + k)
            .checked_mul(n)
            .and_then(|x| x.checked_add(weighted))
            .ok_or_else(overflow)?;
        total = k.checked_mul(n).and_then(|x| x.checked_add(total)).ok_or_else(overflow)?;
    }
    let ell = (d + 2).checked_sub(weighted).ok_or_else(overflow)?;
    let density_power = Rational::new(ell, d);
    let decay_index = Rational::new(d + 2 - total, d);
    Ok(KedTerm {
        dim,
        exponents,
        ell,
        density_power,
        decay_index,
        coefficient: 1.0,
    })
}

impl KedTerm {
    pub fn from_entries(dim: u32, entries: &[u32]) -> Result<Self> {
        make_term(dim, ExponentVector::new(entries.to_vec())?)
    }

    /// `rho^((D+2)/D)`, the Thomas-Fermi shape.
    pub fn thomas_fermi(dim: u32) -> Result<Self> {
        make_term(dim, ExponentVector::empty())
    }

    /// `rho^(-1) |grad rho|^2`, the von Weizsaecker shape.
    pub fn von_weizsacker(dim: u32) -> Result<Self> {
        make_term(dim, ExponentVector(vec![2]))
    }

    /// `lap rho`
    pub fn laplacian(dim: u32) -> Result<Self> {
        make_term(dim, ExponentVector(vec![0, 1]))
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn exponents(&self) -> &ExponentVector {
        &self.exponents
    }

    pub fn ell(&self) -> i64 {
        self.ell
    }

    /// `l / D`
    pub fn density_power(&self) -> Rational {
        self.density_power
    }

    /// `q = (D + 2 - sum k n_k) / D`; the term behaves like `exp(-q b r)`.
    pub fn decay_index(&self) -> Rational {
        self.decay_index
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn with_coefficient(mut self, coefficient: f64) -> Self {
        self.coefficient = coefficient;
        self
    }

    pub fn total_order(&self) -> u64 {
        self.exponents.total_order()
    }

    pub fn highest_order(&self) -> usize {
        self.exponents.highest_order()
    }

    /// Exponent of length carried by the term when `rho ~ L^-D`.
    pub fn length_exponent(&self) -> Rational {
        let d = self.dim as i64;
        let mut exp = -self.density_power * Rational::from_integer(d);
        for (k, n) in self.exponents.nonzero() {
            exp -= Rational::from_integer((d + k as i64) * n as i64);
        }
        exp
    }

    pub fn class(&self) -> AdmissibilityClass {
        let bound = self.dim as u64 + 2;
        match self.total_order().cmp(&bound) {
            Ordering::Less => AdmissibilityClass::LocalizedAdmissible,
            Ordering::Equal => AdmissibilityClass::PeriodicMarginal,
            Ordering::Greater => AdmissibilityClass::Inadmissible,
        }
    }

    /// Canonical text token `D=<d>;n=<n1,...>;l=<ell>;q=<p>/<q>`.
    pub fn token(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for KedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "D={};n={};l={};q={}/{}",
            self.dim,
            self.exponents,
            self.ell,
            self.decay_index.numer(),
            self.decay_index.denom()
        )
    }
}

impl FromStr for KedTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad term token {s:?}; expected D=<d>;n=<n1,...>;l=<ell>;q=<p>/<q>"));
        let fields: Vec<&str> = s.trim().split(';').collect();
        let [d, n, l, q] = fields.as_slice() else {
            return Err(bad());
        };
        let dim: u32 = d.strip_prefix("D=").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let exponents: ExponentVector = n.strip_prefix("n=").ok_or_else(bad)?.parse()?;
        let ell: i64 = l.strip_prefix("l=").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let (qn, qd) = q.strip_prefix("q=").ok_or_else(bad)?.split_once('/').ok_or_else(bad)?;
        let qn: i64 = qn.parse().map_err(|_| bad())?;
        let qd: i64 = qd.parse().map_err(|_| bad())?;
        let term = make_term(dim, exponents)?;
        if term.ell != ell || *term.decay_index.numer() != qn || *term.decay_index.denom() != qd {
            return Err(Error::Parse(format!(
                "token {s:?} is inconsistent with its exponents; expected {term}"
            )));
        }
        Ok(term)
    }
}

/// Strict inequality for localized densities, relaxed to `<=` for periodic ones.
pub fn classify(term: &KedTerm, boundary: Boundary) -> Classification {
    let class = term.class();
    let finite = match boundary {
        Boundary::Localized => class == AdmissibilityClass::LocalizedAdmissible,
        Boundary::Periodic => class != AdmissibilityClass::Inadmissible,
    };
    Classification { class, finite }
}

/// `D + 1` for localized systems, `D + 2` for periodic ones.
pub fn max_derivative_order(dim: u32, boundary: Boundary) -> Result<usize> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(match boundary {
        Boundary::Localized => dim as usize + 1,
        Boundary::Periodic => dim as usize + 2,
    })
}

/// Every canonical term with `sum k n_k <= bound`, sorted by
/// `(total_order, exponents)`. The bound defaults to the largest finite
/// total order for `boundary`.
pub fn enumerate_terms(
    dim: u32,
    boundary: Boundary,
    max_total_order: Option<u32>,
) -> Result<Vec<KedTerm>> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    let bound = match max_total_order {
        Some(k) => k,
        None => max_derivative_order(dim, boundary)? as u32,
    };
    if bound > MAX_ENUMERATION_ORDER {
        return Err(Error::OrderLimit {
            requested: bound,
            limit: MAX_ENUMERATION_ORDER,
        });
    }

    #[cfg(feature = "parallel")]
    let strata: Vec<Vec<ExponentVector>> = {
        use rayon::prelude::*;
        (0..=bound).into_par_iter().map(partitions_of).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let strata: Vec<Vec<ExponentVector>> = (0..=bound).map(partitions_of).collect();

    let mut terms = strata
        .into_iter()
        .flatten()
        .map(|e| make_term(dim, e))
        .collect::<Result<Vec<_>>>()?;
    terms.sort_by(|a, b| {
        a.total_order()
            .cmp(&b.total_order())
            .then_with(|| a.exponents.cmp(&b.exponents))
    });
    Ok(terms)
}

/// Exponent vectors with `sum k n_k == total`, one per integer partition.
fn partitions_of(total: u32) -> Vec<ExponentVector> {
    fn walk(rem: u32, max_part: u32, mult: &mut Vec<u32>, out: &mut Vec<ExponentVector>) {
        if rem == 0 {
            out.push(ExponentVector::canonicalize(mult.clone()));
            return;
        }
        for part in (1..=rem.min(max_part)).rev() {
            mult[part as usize - 1] += 1;
            walk(rem - part, part, mult, out);
            mult[part as usize - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    let mut mult = vec![0; total as usize];
    walk(total, total, &mut mult, &mut out);
    out
}

/// Asymptotic `d ln t / d x` of a term on a density with the given decay,
/// where `x` is `r` (exponential class) or `r^2` (Gaussian class).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopePrediction {
    /// `-q`, exact.
    pub factor: Rational,
    /// `b` or `alpha`.
    pub rate: f64,
    pub abscissa: Abscissa,
}

impl SlopePrediction {
    pub fn value(&self) -> f64 {
        if self.factor.is_zero() {
            return 0.0;
        }
        let f = *self.factor.numer() as f64 / *self.factor.denom() as f64;
        f * self.rate
    }

    pub fn sign(&self) -> Ordering {
        if self.factor.is_zero() {
            Ordering::Equal
        } else if self.factor.is_negative() {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

pub fn predicted_log_slope(term: &KedTerm, decay: &Decay) -> Result<SlopePrediction> {
    let factor = -term.decay_index;
    match *decay {
        Decay::Exponential { rate } | Decay::PolyExponential { rate, .. } => Ok(SlopePrediction {
            factor,
            rate,
            abscissa: Abscissa::Radius,
        }),
        Decay::Gaussian { alpha } => Ok(SlopePrediction {
            factor,
            rate: alpha,
            abscissa: Abscissa::RadiusSquared,
        }),
        Decay::PeriodicCosine { .. } => Err(Error::UnsupportedDecay("periodic-cosine".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(dim: u32, n: &[u32]) -> KedTerm {
        KedTerm::from_entries(dim, n).unwrap()
    }

    #[test]
    fn ell_and_decay_index_by_substitution() {
        let vw = term(3, &[2]);
        assert_eq!(vw.ell(), -3);
        assert_eq!(vw.density_power(), Rational::new(-1, 1));
        assert_eq!(vw.decay_index(), Rational::from_integer(1));

        let fourth = term(3, &[0, 0, 0, 1]);
        assert_eq!(fourth.ell(), -2);
        assert_eq!(fourth.decay_index(), Rational::new(1, 3));

        let tf = term(1, &[]);
        assert_eq!(tf.ell(), 3);
        assert_eq!(tf.decay_index(), Rational::from_integer(3));
        assert_eq!(tf.coefficient(), 1.0);
    }

    #[test]
    fn rejects_zero_dim_and_trailing_zeros() {
        assert!(matches!(
            make_term(0, ExponentVector::empty()),
            Err(Error::InvalidDimension(0))
        ));
        match ExponentVector::new(vec![1, 0, 0]) {
            Err(Error::NonCanonical { hint, .. }) => assert_eq!(hint, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
        assert!("2,0".parse::<ExponentVector>().is_err());
        assert!("a".parse::<ExponentVector>().is_err());
    }

    #[test]
    fn classification_examples() {
        let c = classify(&term(3, &[0, 0, 0, 1]), Boundary::Localized);
        assert_eq!(c.class, AdmissibilityClass::LocalizedAdmissible);
        assert!(c.finite);

        let fifth = term(3, &[0, 0, 0, 0, 1]);
        let c = classify(&fifth, Boundary::Localized);
        assert_eq!(c.class, AdmissibilityClass::PeriodicMarginal);
        assert!(!c.finite);
        assert!(classify(&fifth, Boundary::Periodic).finite);

        let sixth = term(3, &[0, 0, 0, 0, 0, 1]);
        for b in [Boundary::Localized, Boundary::Periodic] {
            let c = classify(&sixth, b);
            assert_eq!(c.class, AdmissibilityClass::Inadmissible);
            assert!(!c.finite);
        }
    }

    #[test]
    fn max_order_examples() {
        assert_eq!(max_derivative_order(3, Boundary::Localized).unwrap(), 4);
        assert_eq!(max_derivative_order(1, Boundary::Localized).unwrap(), 2);
        assert_eq!(max_derivative_order(2, Boundary::Periodic).unwrap(), 4);
    }

    #[test]
    fn enumeration_order_and_counts() {
        let d1 = enumerate_terms(1, Boundary::Localized, None).unwrap();
        let got: Vec<Vec<u32>> = d1.iter().map(|t| t.exponents().entries().to_vec()).collect();
        assert_eq!(got, vec![vec![], vec![1], vec![0, 1], vec![2]]);
        assert_eq!(enumerate_terms(2, Boundary::Localized, None).unwrap().len(), 7);
        assert_eq!(enumerate_terms(3, Boundary::Localized, None).unwrap().len(), 12);
        assert!(matches!(
            enumerate_terms(3, Boundary::Localized, Some(65)),
            Err(Error::OrderLimit { requested: 65, limit: 64 })
        ));
    }

    #[test]
    fn slope_predictions() {
        let hydrogen = Decay::Exponential { rate: 2.0 };
        assert_eq!(predicted_log_slope(&term(3, &[2]), &hydrogen).unwrap().value(), -2.0);
        let marginal = predicted_log_slope(&term(3, &[0, 0, 0, 0, 1]), &hydrogen).unwrap();
        assert_eq!(marginal.value(), 0.0);
        assert_eq!(marginal.sign(), Ordering::Equal);
        let growing = predicted_log_slope(&term(3, &[0, 0, 0, 0, 0, 1]), &hydrogen).unwrap();
        assert_eq!(growing.factor, Rational::new(1, 3));
        assert!((growing.value() - 2.0 / 3.0).abs() < 1e-15);
        let periodic = Decay::PeriodicCosine { rho0: 1.0, amplitude: 0.5, period: 1.0 };
        assert!(matches!(
            predicted_log_slope(&term(1, &[1]), &periodic),
            Err(Error::UnsupportedDecay(_))
        ));
    }

    #[test]
    fn token_round_trip() {
        let t = term(3, &[0, 0, 0, 1]);
        assert_eq!(t.token(), "D=3;n=0,0,0,1;l=-2;q=1/3");
        assert_eq!(t.token().parse::<KedTerm>().unwrap(), t);
        let tf = term(1, &[]);
        assert_eq!(tf.token(), "D=1;n=;l=3;q=3/1");
        assert_eq!(tf.token().parse::<KedTerm>().unwrap(), tf);
        assert!("D=3;n=2;l=-2;q=1/1".parse::<KedTerm>().is_err());
    }
}
