//! Kinetic-energy-density monomials for orbital-free DFT.
//!
//! * [`term`]: exact construction, classification and enumeration of
//!   `rho^(l/D) prod_k (grad^k rho)^(n_k)` terms.
//! * [`density`]: analytic radial model densities with closed-form
//!   derivative chains and log-domain term evaluation.
//! * [`probe`]: asymptotic slope probes and the derivative-order sweep.
//! * [`quadrature`], [`reference`], [`fit`]: radial integration, exact
//!   reference KEDs and least-squares expansion fits.
//! * [`io`]: text tokens, CSV rows and JSON records.

pub mod density;
pub mod error;
pub mod fit;
pub mod io;
pub mod probe;
pub mod quadrature;
pub mod reference;
pub mod term;

pub use density::{
    log_term_eval, make_exponential, make_gaussian, make_ho1d_ground, make_hydrogenic,
    make_periodic_cosine, make_poly_exponential, normalized_derivative, term_value, Abscissa,
    Decay, RadialProfile,
};
pub use error::{Error, Result};
pub use fit::{fit_expansion, standard_basis, BasisTerm, FitResult, Weighting};
pub use probe::{
    probe_periodic, probe_term, validate_bound, BoundSummary, PeriodicReport, ProbeReport,
    ProbeWindow, Verdict,
};
pub use quadrature::{integrate, RadialGrid};
pub use reference::{reference_ked, tf_constant, ReferenceKed, ReferenceKind};
pub use term::{
    classify, enumerate_terms, make_term, max_derivative_order, predicted_log_slope,
    AdmissibilityClass, Boundary, ExponentVector, KedTerm, Rational,
};
