//! The non-penalized empirical Bernstein copula density estimator:
//! contingency-table coefficients on a data-driven knot grid, projected onto
//! the uniform-margin simplex by a Euclidean quadratic program.

use crate::dependence::spearmans_rho;
use crate::error::{Result, VinefitError};
use crate::pair::{clamp_unit, PairCopula};
use crate::qp::{solve_qp_from, QpProblem, QpStatus};
use nalgebra::{DMatrix, DVector};

/// Normalized Bernstein polynomial B_{Kk}(u) = (K+1) C(K,k) u^k (1-u)^{K-k};
/// each basis function integrates to one.
pub fn bernstein_basis(k_deg: usize, k: usize, u: f64) -> f64 {
    assert!(k <= k_deg, "basis index {k} out of range for degree {k_deg}");
    bernstein_row(k_deg, u)[k]
}

/// All K+1 normalized Bernstein basis values at u, computed in log space so
/// large degrees stay stable near the boundary.
pub fn bernstein_row(k_deg: usize, u: f64) -> Vec<f64> {
    let u = u.clamp(0.0, 1.0);
    let n = k_deg + 1;
    let mut out = vec![0.0; n];
    if k_deg == 0 {
        out[0] = 1.0;
        return out;
    }
    if u == 0.0 {
        out[0] = n as f64;
        return out;
    }
    if u == 1.0 {
        out[k_deg] = n as f64;
        return out;
    }
    let lu = u.ln();
    let l1u = (1.0 - u).ln();
    let mut ln_binom = 0.0;
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            ln_binom += ((k_deg - k + 1) as f64).ln() - (k as f64).ln();
        }
        *slot = ((n as f64).ln() + ln_binom + k as f64 * lu + (k_deg - k) as f64 * l1u).exp();
    }
    out
}

/// Cumulatives int_0^u B_{Kk}(s) ds for all k, equal to the regularized
/// incomplete beta I_u(k+1, K-k+1), evaluated as binomial tail sums of a
/// single size-(K+2) pmf.
pub fn bernstein_cumulative_row(k_deg: usize, u: f64) -> Vec<f64> {
    let u = u.clamp(0.0, 1.0);
    let n = k_deg + 1; // basis count; pmf has n+1 entries
    let mut pmf = vec![0.0; n + 1];
    if u == 0.0 {
        pmf[0] = 1.0;
    } else if u == 1.0 {
        pmf[n] = 1.0;
    } else {
        let lu = u.ln();
        let l1u = (1.0 - u).ln();
        let mut ln_binom = 0.0;
        for (j, slot) in pmf.iter_mut().enumerate() {
            if j > 0 {
                ln_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
            }
            *slot = (ln_binom + j as f64 * lu + (n - j) as f64 * l1u).exp();
        }
    }
    // I_u(k+1, K-k+1) = sum_{j=k+1}^{K+1} pmf[j]
    let mut out = vec![0.0; n];
    let mut tail = 0.0;
    for k in (0..n).rev() {
        tail += pmf[k + 1];
        out[k] = tail.min(1.0);
    }
    out
}

/// Data-driven knot rule: floor(n^(1/3) exp(|rho|^(1/n)) (|rho| + 0.1)),
/// clamped below at 1 so the estimator never degenerates.
pub fn select_k(n: usize, rho_hat: f64) -> usize {
    let n_f = n as f64;
    let r = rho_hat.abs();
    let value = n_f.powf(1.0 / 3.0) * r.powf(1.0 / n_f).exp() * (r + 0.1);
    (value.floor() as isize).max(1) as usize
}

/// A fitted Bernstein copula density.
#[derive(Debug, Clone)]
pub struct BernsteinFit {
    /// Polynomial degree; the basis has k_deg + 1 functions per axis.
    pub k_deg: usize,
    /// (K+1) x (K+1) coefficient matrix, nonnegative, summing to one.
    pub coeffs: DMatrix<f64>,
    pub loglik: f64,
    pub edf: f64,
}

impl BernsteinFit {
    fn basis_n(&self) -> usize {
        self.k_deg + 1
    }
}

impl PairCopula for BernsteinFit {
    fn pdf(&self, u: f64, v: f64) -> f64 {
        let bu = bernstein_row(self.k_deg, clamp_unit(u));
        let bv = bernstein_row(self.k_deg, clamp_unit(v));
        let mut total = 0.0;
        for k1 in 0..self.basis_n() {
            if bu[k1] == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for k2 in 0..self.basis_n() {
                inner += self.coeffs[(k1, k2)] * bv[k2];
            }
            total += bu[k1] * inner;
        }
        total.max(0.0)
    }

    fn hfunc1(&self, u: f64, v: f64) -> f64 {
        // P(V <= v | U = u): integrate the second axis
        let bu = bernstein_row(self.k_deg, clamp_unit(u));
        let iv = bernstein_cumulative_row(self.k_deg, v.clamp(0.0, 1.0));
        let mut num = 0.0;
        let mut den = 0.0;
        for k1 in 0..self.basis_n() {
            if bu[k1] == 0.0 {
                continue;
            }
            let mut part = 0.0;
            let mut row_mass = 0.0;
            for k2 in 0..self.basis_n() {
                part += self.coeffs[(k1, k2)] * iv[k2];
                row_mass += self.coeffs[(k1, k2)];
            }
            num += bu[k1] * part;
            den += bu[k1] * row_mass;
        }
        if den <= 0.0 {
            return v;
        }
        (num / den).clamp(0.0, 1.0)
    }

    fn hfunc2(&self, u: f64, v: f64) -> f64 {
        // P(U <= u | V = v): integrate the first axis
        let iu = bernstein_cumulative_row(self.k_deg, u.clamp(0.0, 1.0));
        let bv = bernstein_row(self.k_deg, clamp_unit(v));
        let mut num = 0.0;
        let mut den = 0.0;
        for k2 in 0..self.basis_n() {
            if bv[k2] == 0.0 {
                continue;
            }
            let mut part = 0.0;
            let mut col_mass = 0.0;
            for k1 in 0..self.basis_n() {
                part += self.coeffs[(k1, k2)] * iu[k1];
                col_mass += self.coeffs[(k1, k2)];
            }
            num += bv[k2] * part;
            den += bv[k2] * col_mass;
        }
        if den <= 0.0 {
            return u;
        }
        (num / den).clamp(0.0, 1.0)
    }

    fn loglik(&self) -> f64 {
        self.loglik
    }

    fn edf(&self) -> f64 {
        self.edf
    }

    fn label(&self) -> String {
        format!("bern(K={})", self.k_deg)
    }
}

/// Margin constraint system for the (K+1)^2 coefficient vector: row sums and
/// column sums each equal 1/(K+1), plus the (redundant) total-mass row.
fn margin_constraints(n_basis: usize) -> (DMatrix<f64>, DVector<f64>) {
    let dim = n_basis * n_basis;
    let rows = 2 * n_basis + 1;
    let mut a = DMatrix::zeros(rows, dim);
    let mut b = DVector::zeros(rows);
    let target = 1.0 / n_basis as f64;
    for k1 in 0..n_basis {
        for k2 in 0..n_basis {
            a[(k1, k1 * n_basis + k2)] = 1.0;
        }
        b[k1] = target;
    }
    for k2 in 0..n_basis {
        for k1 in 0..n_basis {
            a[(n_basis + k2, k1 * n_basis + k2)] = 1.0;
        }
        b[n_basis + k2] = target;
    }
    for j in 0..dim {
        a[(2 * n_basis, j)] = 1.0;
    }
    b[2 * n_basis] = 1.0;
    (a, b)
}

/// Fits the estimator with the data-driven knot rule.
pub fn fit_bern(u: &[f64], v: &[f64]) -> Result<BernsteinFit> {
    let rho = spearmans_rho(u, v).unwrap_or(0.0);
    fit_bern_with_k(u, v, select_k(u.len(), rho))
}

/// Fits the estimator with a fixed degree K.
pub fn fit_bern_with_k(u: &[f64], v: &[f64], k_deg: usize) -> Result<BernsteinFit> {
    if u.len() != v.len() {
        return Err(VinefitError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let n = u.len();
    if n < 10 {
        return Err(VinefitError::TooFewObservations { need: 10, got: n });
    }
    let n_basis = k_deg + 1;
    let dim = n_basis * n_basis;

    // contingency table over the (K+1)^2 grid; boundary points fall in the
    // lower cell except the top edge, which belongs to the last cell
    let mut freq = DVector::zeros(dim);
    let cell = |x: f64| -> usize {
        ((x * n_basis as f64).floor() as usize).min(n_basis - 1)
    };
    for i in 0..n {
        freq[cell(u[i]) * n_basis + cell(v[i])] += 1.0 / n as f64;
    }

    // Euclidean projection onto the constrained simplex
    let (a, b) = margin_constraints(n_basis);
    let problem = QpProblem {
        q: DMatrix::identity(dim, dim),
        c: -freq,
        a,
        b,
        g: DMatrix::identity(dim, dim),
        h: DVector::zeros(dim),
    };
    let start = DVector::from_element(dim, 1.0 / dim as f64);
    let sol = solve_qp_from(&problem, Some(&start), None)?;
    if sol.status == QpStatus::Infeasible {
        return Err(VinefitError::QpInfeasible);
    }
    let mut coeffs = DMatrix::zeros(n_basis, n_basis);
    for k1 in 0..n_basis {
        for k2 in 0..n_basis {
            coeffs[(k1, k2)] = sol.x[k1 * n_basis + k2].max(0.0);
        }
    }

    let mut fit = BernsteinFit {
        k_deg,
        coeffs,
        loglik: 0.0,
        // free coefficients after the equality constraints
        edf: (n_basis * n_basis) as f64 - (2 * k_deg + 1) as f64 - 1.0,
    };
    fit.loglik = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| fit.pdf(a, b).max(1e-300).ln())
        .sum();
    Ok(fit)
}
