//! Linear least-squares fits of `t = sum_j a_j t_j` against a reference KED.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::density::{signed_normalized, term_value, RadialProfile};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, CompensatedSum, RadialGrid};
use crate::reference::tf_constant;
use crate::term::{AdmissibilityClass, KedTerm};

/// Singular values below this fraction of the largest one count as null directions.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// A basis function `scale * t_j`. The scale fixes the conventional
/// normalization so that coefficients of known functionals come out as 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTerm {
    pub term: KedTerm,
    pub scale: f64,
}

impl BasisTerm {
    pub fn unit(term: KedTerm) -> Self {
        Self { term, scale: 1.0 }
    }

    /// `c_TF` for the pure density term, `1/8` for `|grad rho|^2 / rho`, 1 otherwise.
    pub fn conventional(term: KedTerm) -> Self {
        let scale = match term.exponents().entries() {
            [] => tf_constant(term.dim()).unwrap_or(1.0),
            [2] => 0.125,
            _ => 1.0,
        };
        Self { term, scale }
    }

    pub fn eval(&self, profile: &RadialProfile, r: f64) -> Result<f64> {
        Ok(self.scale * term_value(&self.term, profile, r)?)
    }
}

/// Thomas-Fermi, von Weizsaecker and Laplacian terms with conventional scales.
pub fn standard_basis(dim: u32) -> Result<Vec<BasisTerm>> {
    Ok(vec![
        BasisTerm::conventional(KedTerm::thomas_fermi(dim)?),
        BasisTerm::conventional(KedTerm::von_weizsacker(dim)?),
        BasisTerm::conventional(KedTerm::laplacian(dim)?),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// `W_i = w_i`, consistent with the energy integral.
    #[default]
    Measure,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub basis: Vec<String>,
    #[serde(rename = "a")]
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    #[serde(rename = "T_fit")]
    pub t_fit: f64,
    #[serde(rename = "T_ref")]
    pub t_ref: f64,
    pub cond: f64,
}

/// Solves `min_a sum_i W_i (t_ref(r_i) - sum_j a_j t_j(r_i))^2` by SVD.
pub fn fit_expansion<F>(
    reference: F,
    basis: &[BasisTerm],
    profile: &RadialProfile,
    grid: &RadialGrid,
    weighting: Weighting,
) -> Result<FitResult>
where
    F: Fn(f64) -> Result<f64>,
{
    for b in basis {
        if b.term.dim() != profile.dim() {
            return Err(Error::DimensionMismatch {
                term: b.term.dim(),
                profile: profile.dim(),
            });
        }
        if b.term.class() != AdmissibilityClass::LocalizedAdmissible {
            return Err(Error::InadmissibleBasis(b.term.token()));
        }
    }

    let rows = grid.len();
    let cols = basis.len();
    let mut target = Vec::with_capacity(rows);
    let mut weights = Vec::with_capacity(rows);
    let mut design = DMatrix::<f64>::zeros(rows, cols);
    for (i, (&r, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        let t = reference(r)?;
        if !t.is_finite() {
            return Err(Error::NonFinite { r });
        }
        let weight = match weighting {
            Weighting::Measure => w,
            Weighting::Uniform => 1.0,
        };
        let sw = weight.sqrt();
        for (j, b) in basis.iter().enumerate() {
            let v = b.eval(profile, r)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { r });
            }
            design[(i, j)] = sw * v;
        }
        target.push(t);
        weights.push(weight);
    }

    let coefficients: Vec<f64>;
    let cond;
    if cols == 0 {
        coefficients = Vec::new();
        cond = 1.0;
    } else {
        let svd = design.clone().svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > RANK_TOLERANCE * smax).count();
        if rank < cols {
            return Err(Error::RankDeficient {
                rank,
                null_dim: cols - rank,
            });
        }
        cond = smax / sv.min();
        let rhs = DVector::from_iterator(
            rows,
            target.iter().zip(&weights).map(|(t, w)| w.sqrt() * t),
        );
        let solution = svd
            .solve(&rhs, RANK_TOLERANCE * smax)
            .map_err(|e| Error::InvalidParameter(e.into()))?;
        coefficients = solution.iter().copied().collect();
    }

    let mut sq = CompensatedSum::default();
    let mut wsum = CompensatedSum::default();
    for (i, (&r, &w)) in grid.nodes().iter().zip(&weights).enumerate() {
        let mut model = CompensatedSum::default();
        for (j, b) in basis.iter().enumerate() {
            model.add(coefficients[j] * b.eval(profile, r)?);
        }
        let res = target[i] - model.value();
        sq.add(w * res * res);
        wsum.add(w);
    }
    let residual_rms = if wsum.value() > 0.0 {
        (sq.value() / wsum.value()).sqrt()
    } else {
        0.0
    };

    let mut t_fit = CompensatedSum::default();
    for (a, b) in coefficients.iter().zip(basis) {
        t_fit.add(a * integrate(|r| b.eval(profile, r), grid)?);
    }
    let t_ref = integrate(&reference, grid)?;

    Ok(FitResult {
        basis: basis.iter().map(|b| b.term.token()).collect(),
        coefficients,
        residual_rms,
        t_fit: t_fit.value(),
        t_ref,
        cond,
    })
}

/// `F(r)` in `t(r) = t_TF(r) F(r)` for a fitted expansion, built from the
/// normalized derivatives `g_k / rho^((D+k)/D)`.
pub fn enhancement_factor(
    basis: &[BasisTerm],
    coefficients: &[f64],
    profile: &RadialProfile,
    r: f64,
) -> Result<f64> {
    let c_tf = tf_constant(profile.dim())?;
    let mut acc = CompensatedSum::default();
    for (b, a) in basis.iter().zip(coefficients) {
        let mut prod = 1.0;
        for (k, n) in b.term.exponents().nonzero() {
            prod *= signed_normalized(profile, k, r)?.powi(n as i32);
        }
        acc.add(a * b.scale / c_tf * prod);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::make_hydrogenic;
    use crate::quadrature::DEFAULT_GRID_POINTS;
    use crate::reference::{reference_ked, ReferenceKind};
    use approx::assert_relative_eq;

    fn hydrogen_setup() -> (RadialProfile, RadialGrid) {
        let h = make_hydrogenic();
        let grid = RadialGrid::for_profile(&h, DEFAULT_GRID_POINTS).unwrap();
        (h, grid)
    }

    #[test]
    fn self_fit_of_thomas_fermi() {
        let (h, grid) = hydrogen_setup();
        let tf = reference_ked(ReferenceKind::ThomasFermi, &h).unwrap();
        let basis = vec![BasisTerm::conventional(KedTerm::thomas_fermi(3).unwrap())];
        let fit = fit_expansion(|r| tf.eval(r), &basis, &h, &grid, Weighting::Measure).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() <= 1e-12);
        assert_relative_eq!(fit.t_fit, fit.t_ref, max_relative = 1e-12);
    }

    #[test]
    fn empty_basis_reports_reference_rms() {
        let (h, grid) = hydrogen_setup();
        let t = reference_ked(ReferenceKind::SingleOrbitalPositive, &h).unwrap();
        let fit = fit_expansion(|r| t.eval(r), &[], &h, &grid, Weighting::Measure).unwrap();
        assert!(fit.coefficients.is_empty());
        let num: f64 = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(&r, &w)| w * t.eval(r).unwrap().powi(2))
            .sum();
        let den: f64 = grid.weights().iter().sum();
        assert_relative_eq!(fit.residual_rms, (num / den).sqrt(), max_relative = 1e-10);
        assert_eq!(fit.t_fit, 0.0);
    }

    #[test]
    fn duplicate_basis_is_rank_deficient() {
        let (h, grid) = hydrogen_setup();
        let t = reference_ked(ReferenceKind::SingleOrbitalPositive, &h).unwrap();
        let vw = KedTerm::von_weizsacker(3).unwrap();
        let basis = vec![BasisTerm::unit(vw.clone()), BasisTerm::conventional(vw)];
        match fit_expansion(|r| t.eval(r), &basis, &h, &grid, Weighting::Measure) {
            Err(Error::RankDeficient { rank: 1, null_dim: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_inadmissible_basis() {
        let (h, grid) = hydrogen_setup();
        let basis = vec![BasisTerm::unit(KedTerm::from_entries(3, &[0, 0, 0, 0, 1]).unwrap())];
        assert!(matches!(
            fit_expansion(|_| Ok(0.0), &basis, &h, &grid, Weighting::Measure),
            Err(Error::InadmissibleBasis(_))
        ));
    }

    #[test]
    fn enhancement_factor_reproduces_fitted_density() {
        let (h, _) = hydrogen_setup();
        let basis = standard_basis(3).unwrap();
        let a = [0.3, 0.9, -0.2];
        let c_tf = tf_constant(3).unwrap();
        for r in [0.4, 1.5, 6.0] {
            let direct: f64 = basis
                .iter()
                .zip(a)
                .map(|(b, a)| a * b.eval(&h, r).unwrap())
                .sum();
            let t_tf = c_tf * h.rho(r).unwrap().powf(5.0 / 3.0);
            let f = enhancement_factor(&basis, &a, &h, r).unwrap();
            assert_relative_eq!(t_tf * f, direct, max_relative = 1e-12);
        }
    }
}
