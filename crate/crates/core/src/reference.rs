//! Exact reference kinetic energy densities.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{Decay, RadialProfile};
use crate::error::{Error, Result};

/// Spin-paired uniform-gas constant `c_TF` with `t_TF = c_TF rho^((D+2)/D)`.
pub fn tf_constant(dim: u32) -> Result<f64> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!(
            "Thomas-Fermi constant is tabulated for D = 1, 2, 3, got {dim}"
        )));
    }
    let d = dim as f64;
    // unit-ball volume; two spin states fill the Fermi sphere
    let ball = PI.powf(d / 2.0) / libm::tgamma(d / 2.0 + 1.0);
    Ok(d / (2.0 * (d + 2.0)) * (2.0 * PI).powi(2) * (2.0 * ball).powf(-2.0 / d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    ThomasFermi,
    VonWeizsacker,
    /// `|grad phi|^2 / 2`
    SingleOrbitalPositive,
    /// `-phi lap phi / 2`
    SingleOrbitalLaplacian,
}

impl ReferenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ThomasFermi => "tf",
            Self::VonWeizsacker => "vw",
            Self::SingleOrbitalPositive => "positive",
            Self::SingleOrbitalLaplacian => "laplacian",
        }
    }
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tf" => Ok(Self::ThomasFermi),
            "vw" => Ok(Self::VonWeizsacker),
            "positive" => Ok(Self::SingleOrbitalPositive),
            "laplacian" => Ok(Self::SingleOrbitalLaplacian),
            _ => Err(Error::Parse(format!(
                "unknown reference {s:?}; expected tf | vw | positive | laplacian"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceKed {
    kind: ReferenceKind,
    profile: RadialProfile,
    tf: f64,
}

pub fn reference_ked(kind: ReferenceKind, profile: &RadialProfile) -> Result<ReferenceKed> {
    let single = matches!(
        kind,
        ReferenceKind::SingleOrbitalPositive | ReferenceKind::SingleOrbitalLaplacian
    );
    if single && !profile.is_single_orbital() {
        return Err(Error::KindMismatch(format!(
            "reference {kind} needs a single-orbital profile; {} is not one",
            profile.id()
        )));
    }
    // e^{-b|x|} has a kink at the origin: its Laplacian carries a delta term
    // that no pointwise density can hold, so the gauge identity would fail.
    if kind == ReferenceKind::SingleOrbitalLaplacian
        && profile.dim() == 1
        && matches!(profile.decay(), Decay::Exponential { .. })
    {
        return Err(Error::KindMismatch(format!(
            "laplacian reference on {} needs the origin delta of the 1-D cusp; use positive",
            profile.id()
        )));
    }
    let tf = match kind {
        ReferenceKind::ThomasFermi => tf_constant(profile.dim())?,
        _ => 0.0,
    };
    Ok(ReferenceKed {
        kind,
        profile: profile.clone(),
        tf,
    })
}

impl ReferenceKed {
    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let p = &self.profile;
        let rho = p.rho(r)?;
        match self.kind {
            ReferenceKind::ThomasFermi => {
                let d = p.dim() as f64;
                Ok(self.tf * rho.powf((d + 2.0) / d))
            }
            ReferenceKind::VonWeizsacker | ReferenceKind::SingleOrbitalPositive => {
                let g1 = p.iterated_derivative(1, r)?;
                if g1 == 0.0 {
                    return Ok(0.0);
                }
                if rho <= 0.0 {
                    return Err(Error::Pole { r });
                }
                Ok(g1 * g1 / (8.0 * rho))
            }
            ReferenceKind::SingleOrbitalLaplacian => {
                let positive = Self {
                    kind: ReferenceKind::SingleOrbitalPositive,
                    profile: p.clone(),
                    tf: 0.0,
                };
                Ok(positive.eval(r)? - 0.25 * p.iterated_derivative(2, r)?)
            }
        }
    }
}
