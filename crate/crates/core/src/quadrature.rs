//! Dimension-aware radial quadrature with measure `S_D r^(D-1) dr`.

use serde::{Deserialize, Serialize};

use crate::density::{sphere_area, RadialProfile, R_MIN};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    /// Trapezoid in `x = ln r`, nodes on `[r_min, r_max]` (plus the origin for `D = 1`).
    LogTrapezoid,
    /// Trapezoid on `[0, r_max]` for the even half line (`D = 1`).
    UniformHalfLine,
    /// Equal weights over one period cell.
    PeriodicCell,
    /// Loaded from an external `(r, w)` table.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scheme: GridScheme,
}

impl RadialGrid {
    /// Trapezoid in `ln r` with `points` nodes on `[r_min, r_max]`. For `D = 1`
    /// the gap `[0, r_min]` carries weight `~ r_min` rather than `~ r_min^D`, so
    /// an extra node at the origin closes it with one linear panel.
    pub fn log_trapezoid(dim: u32, r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(r_min > 0.0 && r_max > r_min && points >= 2) {
            return Err(Error::InvalidParameter(format!(
                "log grid needs 0 < r_min < r_max and >= 2 points, got [{r_min}, {r_max}] x {points}"
            )));
        }
        let h = (r_max / r_min).ln() / (points - 1) as f64;
        let area = sphere_area(dim);
        let mut nodes = Vec::with_capacity(points);
        let mut weights = Vec::with_capacity(points);
        for i in 0..points {
            let r = r_min * (i as f64 * h).exp();
            let end = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
            nodes.push(r);
            // dr = r dx
            weights.push(end * h * area * r.powi(dim as i32));
        }
        if dim == 1 {
            let half_panel = 0.5 * area * r_min;
            weights[0] += half_panel;
            nodes.insert(0, 0.0);
            weights.insert(0, half_panel);
        }
        Ok(Self {
            dim,
            nodes,
            weights,
            scheme: GridScheme::LogTrapezoid,
        })
    }

    /// Full-line integral of an even function as `2 * int_0^r_max`.
    pub fn uniform_half_line(r_max: f64, points: usize) -> Result<Self> {
        if !(r_max > 0.0 && points >= 2) {
            return Err(Error::InvalidParameter(format!(
                "half-line grid needs r_max > 0 and >= 2 points, got {r_max} x {points}"
            )));
        }
        let h = r_max / (points - 1) as f64;
        let (nodes, weights) = (0..points)
            .map(|i| {
                let end = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
                (i as f64 * h, 2.0 * end * h)
            })
            .unzip();
        Ok(Self {
            dim: 1,
            nodes,
            weights,
            scheme: GridScheme::UniformHalfLine,
        })
    }

    /// `points` equally weighted nodes covering `[0, period)`.
    pub fn periodic_cell(period: f64, points: usize) -> Result<Self> {
        if !(period > 0.0 && points >= 1) {
            return Err(Error::InvalidParameter(format!(
                "periodic grid needs period > 0 and >= 1 point, got {period} x {points}"
            )));
        }
        let h = period / points as f64;
        Ok(Self {
            dim: 1,
            nodes: (0..points).map(|i| i as f64 * h).collect(),
            weights: vec![h; points],
            scheme: GridScheme::PeriodicCell,
        })
    }

    pub fn from_table(dim: u32, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if nodes.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid nodes must be strictly ascending".into()));
        }
        Ok(Self {
            dim,
            nodes,
            weights,
            scheme: GridScheme::Tabulated,
        })
    }

    /// Default grid for a profile: log trapezoid on `[R_MIN, extent]`, or one
    /// cell for periodic profiles.
    pub fn for_profile(profile: &RadialProfile, points: usize) -> Result<Self> {
        if profile.decay().is_periodic() {
            return Self::periodic_cell(profile.extent(), points);
        }
        Self::log_trapezoid(profile.dim(), R_MIN, profile.extent(), points)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Neumaier-compensated running sum; fixed visiting order keeps results bit-stable.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `sum_i w_i f(r_i)`, failing on the first non-finite sample.
pub fn integrate<F>(f: F, grid: &RadialGrid) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut acc = CompensatedSum::default();
    for (&r, &w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(r)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { r });
        }
        acc.add(w * v);
    }
    Ok(acc.value())
}
