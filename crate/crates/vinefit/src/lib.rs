//! Nonparametric estimation of simplified vine copula densities.
//!
//! The crate provides eight bivariate pair-copula estimators (a parametric
//! AIC selector, Bernstein, penalized Bernstein, penalized linear and
//! quadratic B-splines, and transformation local-likelihood kernels of
//! degree 0, 1 and 2), sequential vine estimation with structure selection
//! by Kendall's tau or corrected AIC, a randomized simulation-model
//! generator, and importance-sampling accuracy measures for benchmarking.
//!
//! See the guide in `book/` for the concepts and the `vinefit-cli` crate for
//! the batch front-end.

pub mod bernstein;
pub mod data;
pub mod dependence;
pub mod error;
pub mod families;
pub mod normal;
pub mod pair;
pub mod penalized;
pub mod qp;
pub mod quadrature;

pub use data::{pseudo_obs, read_csv_matrix, PseudoObservations};
pub use dependence::{kendalls_tau, spearmans_rho, DependenceStats};
pub use bernstein::{bernstein_basis, fit_bern, fit_bern_with_k, select_k, BernsteinFit};
pub use error::{Result, VinefitError};
pub use families::{fit_parametric, param_to_tau, tau_to_param, Family, FamilySpec, ParametricFit, Rotation};
pub use pair::{IndependenceCopula, PairCopula};
pub use penalized::{fit_penalized, BasisKind, BasisSpec, PenalizedFit};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
