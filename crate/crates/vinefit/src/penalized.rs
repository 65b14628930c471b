//! Penalized Bernstein and B-spline copula density estimators: tensor
//! product bases with uniform-margin constraints, a roughness penalty, and
//! constrained penalized maximum likelihood via iterated quadratic
//! approximation. The penalty weight is selected by corrected AIC over a
//! fixed log-spaced grid.

use crate::bernstein::{bernstein_cumulative_row, bernstein_row};
use crate::error::{Result, VinefitError};
use crate::pair::{clamp_unit, PairCopula};
use crate::qp::{solve_qp_from, QpProblem};
use crate::quadrature::gauss_legendre;
use nalgebra::{DMatrix, DVector};

const LAMBDA_GRID_SIZE: usize = 15;
const LAMBDA_MIN: f64 = 1e-4;
const LAMBDA_MAX: f64 = 1e4;
const DENSITY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Bernstein,
    /// Piecewise polynomial of the given degree (1 or 2) on equidistant
    /// knots with clamped boundaries.
    BSpline {
        degree: usize,
    },
}

/// Basis specification: kind plus the knot parameter K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub k: usize,
}

impl BasisSpec {
    /// Penalized Bernstein default (K = 14).
    pub fn pbern() -> Self {
        Self {
            kind: BasisKind::Bernstein,
            k: 14,
        }
    }

    /// Penalized linear B-spline default (K = 14).
    pub fn pspl1() -> Self {
        Self {
            kind: BasisKind::BSpline { degree: 1 },
            k: 14,
        }
    }

    /// Penalized quadratic B-spline default (K = 10).
    pub fn pspl2() -> Self {
        Self {
            kind: BasisKind::BSpline { degree: 2 },
            k: 10,
        }
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    /// Difference order of the spline penalty, m = q + 1.
    fn diff_order(&self) -> usize {
        match self.kind {
            BasisKind::Bernstein => 2,
            BasisKind::BSpline { degree } => degree + 1,
        }
    }
}

/// One-dimensional basis evaluator shared by fit and density evaluation.
#[derive(Debug, Clone)]
pub struct Basis1d {
    spec: BasisSpec,
    pub n_basis: usize,
    /// Full clamped knot vector (B-spline only).
    knots: Vec<f64>,
    /// Integral of each unnormalized function; the normalized basis divides
    /// by this so every function integrates to one.
    pub alpha: Vec<f64>,
}

pub fn build_basis(spec: BasisSpec) -> Result<Basis1d> {
    match spec.kind {
        BasisKind::Bernstein => {
            let n_basis = spec.k + 1;
            Ok(Basis1d {
                spec,
                n_basis,
                knots: Vec::new(),
                alpha: vec![1.0 / n_basis as f64; n_basis],
            })
        }
        BasisKind::BSpline { degree } => {
            if !(1..=2).contains(&degree) {
                return Err(VinefitError::ParameterOutOfRange {
                    family: "bspline degree".to_string(),
                    value: degree as f64,
                });
            }
            let k = spec.k.max(2);
            let n_basis = k + degree;
            let mut knots = vec![0.0; degree + 1];
            for i in 1..k {
                knots.push(i as f64 / k as f64);
            }
            knots.extend(std::iter::repeat(1.0).take(degree + 1));
            let alpha: Vec<f64> = (0..n_basis)
                .map(|j| (knots[j + degree + 1] - knots[j]) / (degree + 1) as f64)
                .collect();
            Ok(Basis1d {
                spec: BasisSpec { kind: spec.kind, k },
                n_basis,
                knots,
                alpha,
            })
        }
    }
}

impl Basis1d {
    fn degree(&self) -> usize {
        match self.spec.kind {
            BasisKind::Bernstein => self.spec.k,
            BasisKind::BSpline { degree } => degree,
        }
    }

    /// Values of all normalized basis functions at x.
    pub fn eval_row(&self, x: f64) -> Vec<f64> {
        match self.spec.kind {
            BasisKind::Bernstein => bernstein_row(self.spec.k, x),
            BasisKind::BSpline { degree } => {
                let mut row = self.bspline_std_row(x, degree);
                for (r, a) in row.iter_mut().zip(&self.alpha) {
                    *r /= a;
                }
                row
            }
        }
    }

    /// Cumulative integrals of the normalized basis from 0 to x.
    pub fn cum_row(&self, x: f64) -> Vec<f64> {
        match self.spec.kind {
            BasisKind::Bernstein => bernstein_cumulative_row(self.spec.k, x),
            BasisKind::BSpline { degree } => {
                let x = x.clamp(0.0, 1.0);
                let (nodes, weights) = gauss_legendre(2);
                let mut out = vec![0.0; self.n_basis];
                for j in 0..self.n_basis {
                    let lo = self.knots[j];
                    let hi = self.knots[j + degree + 1].min(x);
                    if hi <= lo {
                        continue;
                    }
                    // integrate the piecewise polynomial segment by segment;
                    // a 2-point rule is exact for degree <= 3
                    let mut acc = 0.0;
                    let mut seg_lo = lo;
                    for seg in j..(j + degree + 1) {
                        let a = self.knots[seg].max(seg_lo);
                        let b = self.knots[seg + 1].min(hi);
                        if b > a {
                            let half = 0.5 * (b - a);
                            let mid = 0.5 * (a + b);
                            for (t, w) in nodes.iter().zip(&weights) {
                                acc += w * half * self.bspline_std_single(mid + half * t, degree, j);
                            }
                        }
                        seg_lo = b;
                        if b >= hi {
                            break;
                        }
                    }
                    out[j] = (acc / self.alpha[j]).clamp(0.0, 1.0);
                }
                out
            }
        }
    }

    // standard (partition of unity) B-spline row via the triangular recursion
    fn bspline_std_row(&self, x: f64, degree: usize) -> Vec<f64> {
        let x = x.clamp(0.0, 1.0);
        let n = self.n_basis;
        let t = &self.knots;
        let mut vals = vec![0.0; n];
        // locate the knot span, clamping x = 1 into the last interval
        let mut span = n - 1;
        for j in degree..(n + degree) {
            if x < t[j + 1] || (x >= 1.0 && t[j + 1] >= 1.0) {
                span = j;
                break;
            }
        }
        let span = span.min(n - 1).max(degree);
        // de Boor: N[span-degree ..= span] are the nonzero functions
        let mut nvals = vec![0.0; degree + 1];
        nvals[0] = 1.0;
        for d in 1..=degree {
            let mut saved = 0.0;
            for r in 0..d {
                let idx = span - d + 1 + r;
                let left = t[idx + d] - t[idx];
                let term = if left > 0.0 { nvals[r] / left } else { 0.0 };
                nvals[r] = saved + (t[idx + d] - x) * term;
                saved = (x - t[idx]) * term;
            }
            nvals[d] = saved;
        }
        for (r, &val) in nvals.iter().enumerate() {
            let idx = span - degree + r;
            if idx < n {
                vals[idx] = val;
            }
        }
        vals
    }

    fn bspline_std_single(&self, x: f64, degree: usize, j: usize) -> f64 {
        self.bspline_std_row(x, degree)[j]
    }

    /// Margin-constraint evaluation points on [0, 1].
    fn constraint_points(&self) -> Vec<f64> {
        match self.spec.kind {
            BasisKind::Bernstein => Vec::new(),
            BasisKind::BSpline { degree } => {
                let k = self.spec.k as f64;
                match degree {
                    1 => (0..=self.spec.k).map(|i| i as f64 / k).collect(),
                    _ => {
                        let mut pts = vec![0.0];
                        pts.extend((0..self.spec.k).map(|i| (2 * i + 1) as f64 / (2.0 * k)));
                        pts.push(1.0);
                        pts
                    }
                }
            }
        }
    }
}

/// Margin constraint system A v = rhs for the vectorized coefficients
/// (row-major: index = k1 * N + k2). Bernstein margins are coefficient sums
/// equal to 1/(K+1); spline margins pin the marginal function to one at the
/// constraint points. The total-mass row is included and is redundant by one.
pub fn build_margin_constraints(basis: &Basis1d) -> (DMatrix<f64>, DVector<f64>) {
    let n = basis.n_basis;
    let dim = n * n;
    match basis.spec.kind {
        BasisKind::Bernstein => {
            let rows = 2 * n + 1;
            let mut a = DMatrix::zeros(rows, dim);
            let mut b = DVector::zeros(rows);
            let target = 1.0 / n as f64;
            for k1 in 0..n {
                for k2 in 0..n {
                    a[(k1, k1 * n + k2)] = 1.0;
                }
                b[k1] = target;
            }
            for k2 in 0..n {
                for k1 in 0..n {
                    a[(n + k2, k1 * n + k2)] = 1.0;
                }
                b[n + k2] = target;
            }
            for j in 0..dim {
                a[(2 * n, j)] = 1.0;
            }
            b[2 * n] = 1.0;
            (a, b)
        }
        BasisKind::BSpline { .. } => {
            let pts = basis.constraint_points();
            let rows = 2 * pts.len() + 1;
            let mut a = DMatrix::zeros(rows, dim);
            let mut b = DVector::zeros(rows);
            for (r, &t) in pts.iter().enumerate() {
                let vals = basis.eval_row(t);
                for k1 in 0..n {
                    for k2 in 0..n {
                        // margin over axis 2 as a function of u1 = t
                        a[(r, k1 * n + k2)] += vals[k1];
                        // margin over axis 1 as a function of u2 = t
                        a[(pts.len() + r, k1 * n + k2)] += vals[k2];
                    }
                }
                b[r] = 1.0;
                b[pts.len() + r] = 1.0;
            }
            for j in 0..dim {
                a[(rows - 1, j)] = 1.0;
            }
            b[rows - 1] = 1.0;
            (a, b)
        }
    }
}

/// m-th order forward difference matrix with (p - m) rows.
pub fn difference_matrix(p: usize, m: usize) -> DMatrix<f64> {
    let mut l = DMatrix::identity(p, p);
    for _ in 0..m {
        let rows = l.nrows() - 1;
        let mut next = DMatrix::zeros(rows, p);
        for i in 0..rows {
            for j in 0..p {
                next[(i, j)] = l[(i, j)] - l[(i + 1, j)];
            }
        }
        l = next;
    }
    l
}

/// Symmetric positive semidefinite roughness penalty on the vectorized
/// coefficients. Bernstein: exact integrated squared second derivatives of
/// the tensor density, both axes. B-splines: squared m-th order coefficient
/// differences along each axis (m = q + 1).
pub fn build_penalty(basis: &Basis1d) -> DMatrix<f64> {
    let n = basis.n_basis;
    match basis.spec.kind {
        BasisKind::Bernstein => {
            let k_deg = basis.degree();
            // Gram matrices of the basis and its second derivative
            let (nodes, weights) = gauss_legendre(k_deg + 2);
            let mut m0 = DMatrix::zeros(n, n);
            let mut m2 = DMatrix::zeros(n, n);
            for (&t, &w) in nodes.iter().zip(&weights) {
                let x = 0.5 * (t + 1.0);
                let wx = 0.5 * w;
                let row = bernstein_row(k_deg, x);
                let d2 = bernstein_second_derivative_row(k_deg, x);
                for i in 0..n {
                    for j in i..n {
                        m0[(i, j)] += wx * row[i] * row[j];
                        m2[(i, j)] += wx * d2[i] * d2[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    m0[(i, j)] = m0[(j, i)];
                    m2[(i, j)] = m2[(j, i)];
                }
            }
            kron_sum(&m2, &m0)
        }
        BasisKind::BSpline { .. } => {
            let l = difference_matrix(n, basis.spec.diff_order());
            let d = l.transpose() * &l;
            let eye = DMatrix::identity(n, n);
            kron(&eye, &d) + kron(&d, &eye)
        }
    }
}

// P = A (x) B + B (x) A for the two axis terms
fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    kron(a, b) + kron(b, a)
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let scale = a[(i, j)];
            if scale == 0.0 {
                continue;
            }
            for p in 0..rb {
                for q in 0..cb {
                    out[(i * rb + p, j * cb + q)] = scale * b[(p, q)];
                }
            }
        }
    }
    out
}

fn bernstein_second_derivative_row(k_deg: usize, u: f64) -> Vec<f64> {
    let n = k_deg + 1;
    let mut out = vec![0.0; n];
    if k_deg < 2 {
        return out;
    }
    let kf = k_deg as f64;
    let scale = n as f64; // (K+1) normalization
    let mut ln_binom = 0.0;
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            ln_binom += ((k_deg - k + 1) as f64).ln() - (k as f64).ln();
        }
        let binom = ln_binom.exp();
        let kf_k = k as f64;
        let mut val = 0.0;
        if k >= 2 {
            val += kf_k * (kf_k - 1.0) * u.powi(k as i32 - 2) * (1.0 - u).powi((k_deg - k) as i32);
        }
        if k >= 1 && k_deg - k >= 1 {
            val -= 2.0
                * kf_k
                * (kf - kf_k)
                * u.powi(k as i32 - 1)
                * (1.0 - u).powi((k_deg - k - 1) as i32);
        }
        if k_deg - k >= 2 {
            val += (kf - kf_k)
                * (kf - kf_k - 1.0)
                * u.powi(k as i32)
                * (1.0 - u).powi((k_deg - k - 2) as i32);
        }
        *slot = scale * binom * val;
    }
    out
}

// ---------------------------------------------------------------------------
// fitting
// ---------------------------------------------------------------------------

/// Sparse tensor-basis row of one observation.
struct ObsBasis {
    idx: Vec<usize>,
    val: Vec<f64>,
}

fn tensor_rows(basis: &Basis1d, u: &[f64], v: &[f64]) -> Vec<ObsBasis> {
    let n = basis.n_basis;
    u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            let ra = basis.eval_row(clamp_unit(a));
            let rb = basis.eval_row(clamp_unit(b));
            let mut idx = Vec::new();
            let mut val = Vec::new();
            for (k1, &x) in ra.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                for (k2, &y) in rb.iter().enumerate() {
                    if y == 0.0 {
                        continue;
                    }
                    idx.push(k1 * n + k2);
                    val.push(x * y);
                }
            }
            ObsBasis { idx, val }
        })
        .collect()
}

fn log_likelihood(rows: &[ObsBasis], v: &DVector<f64>) -> f64 {
    rows.iter()
        .map(|r| {
            let c: f64 = r.idx.iter().zip(&r.val).map(|(&i, &x)| x * v[i]).sum();
            c.max(DENSITY_FLOOR).ln()
        })
        .sum()
}

fn gradient_and_hessian(
    rows: &[ObsBasis],
    v: &DVector<f64>,
    dim: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let mut g = DVector::zeros(dim);
    let mut h = DMatrix::zeros(dim, dim);
    for r in rows {
        let c: f64 = r.idx.iter().zip(&r.val).map(|(&i, &x)| x * v[i]).sum();
        let c = c.max(DENSITY_FLOOR);
        let inv = 1.0 / c;
        let inv2 = inv * inv;
        for (a, &ia) in r.idx.iter().enumerate() {
            let va = r.val[a];
            g[ia] += va * inv;
            for (b, &ib) in r.idx.iter().enumerate().skip(a) {
                h[(ia, ib)] += va * r.val[b] * inv2;
                if ib != ia {
                    h[(ib, ia)] = h[(ia, ib)];
                }
            }
        }
    }
    // the loop above fills both triangles for each observation but pairs
    // (ia, ib) appear once; symmetrize defensively
    for i in 0..dim {
        for j in (i + 1)..dim {
            let s = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }
    (g, h)
}

/// A fitted penalized copula density.
#[derive(Debug, Clone)]
pub struct PenalizedFit {
    pub basis_spec: BasisSpec,
    pub coeffs: DVector<f64>,
    pub lambda: f64,
    pub edf: f64,
    pub loglik: f64,
    pub converged: bool,
    basis: Basis1d,
}

impl PenalizedFit {
    fn n_basis(&self) -> usize {
        self.basis.n_basis
    }

    /// Uniform-coefficient (independence) fit, mainly for tests.
    pub fn uniform(spec: BasisSpec) -> Result<Self> {
        let basis = build_basis(spec)?;
        let n = basis.n_basis;
        let mut coeffs = DVector::zeros(n * n);
        for k1 in 0..n {
            for k2 in 0..n {
                coeffs[k1 * n + k2] = basis.alpha[k1] * basis.alpha[k2];
            }
        }
        Ok(Self {
            basis_spec: basis.spec,
            coeffs,
            lambda: 0.0,
            edf: 0.0,
            loglik: 0.0,
            converged: true,
            basis,
        })
    }
}

impl PairCopula for PenalizedFit {
    fn pdf(&self, u: f64, v: f64) -> f64 {
        let ra = self.basis.eval_row(clamp_unit(u));
        let rb = self.basis.eval_row(clamp_unit(v));
        let n = self.n_basis();
        let mut total = 0.0;
        for (k1, &x) in ra.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for (k2, &y) in rb.iter().enumerate() {
                inner += self.coeffs[k1 * n + k2] * y;
            }
            total += x * inner;
        }
        total.max(0.0)
    }

    fn hfunc1(&self, u: f64, v: f64) -> f64 {
        let ra = self.basis.eval_row(clamp_unit(u));
        let cb = self.basis.cum_row(v.clamp(0.0, 1.0));
        let n = self.n_basis();
        let mut num = 0.0;
        let mut den = 0.0;
        for (k1, &x) in ra.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for k2 in 0..n {
                let c = self.coeffs[k1 * n + k2];
                num += x * c * cb[k2];
                den += x * c;
            }
        }
        if den <= 0.0 {
            return v;
        }
        (num / den).clamp(0.0, 1.0)
    }

    fn hfunc2(&self, u: f64, v: f64) -> f64 {
        let ca = self.basis.cum_row(u.clamp(0.0, 1.0));
        let rb = self.basis.eval_row(clamp_unit(v));
        let n = self.n_basis();
        let mut num = 0.0;
        let mut den = 0.0;
        for (k2, &y) in rb.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            for k1 in 0..n {
                let c = self.coeffs[k1 * n + k2];
                num += y * c * ca[k1];
                den += y * c;
            }
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
        let name = match self.basis_spec.kind {
            BasisKind::Bernstein => "pbern".to_string(),
            BasisKind::BSpline { degree } => format!("pspl{degree}"),
        };
        format!(
            "{name}(K={}, lambda={:.3e}, edf={:.1})",
            self.basis_spec.k, self.lambda, self.edf
        )
    }
}

/// The log-spaced penalty grid searched by fit_penalized.
pub fn lambda_grid() -> Vec<f64> {
    (0..LAMBDA_GRID_SIZE)
        .map(|j| {
            let t = j as f64 / (LAMBDA_GRID_SIZE - 1) as f64;
            10f64.powf(LAMBDA_MIN.log10() + t * (LAMBDA_MAX.log10() - LAMBDA_MIN.log10()))
        })
        .collect()
}

/// Effective degrees of freedom trace[(H + lambda P)^-1 H] computed on the
/// null space of the equality constraints.
pub fn penalized_edf(
    h: &DMatrix<f64>,
    p: &DMatrix<f64>,
    lambda: f64,
    null_basis: &DMatrix<f64>,
) -> f64 {
    let hz = null_basis.transpose() * h * null_basis;
    let pz = null_basis.transpose() * p * null_basis;
    let dim = hz.nrows();
    let mut m = &hz + &pz * lambda;
    let mut ridge = 0.0;
    let chol = loop {
        match m.clone().cholesky() {
            Some(c) => break c,
            None => {
                ridge = if ridge == 0.0 { 1e-10 } else { ridge * 100.0 };
                for i in 0..dim {
                    m[(i, i)] += ridge;
                }
                assert!(ridge < 1.0, "edf system irrecoverably singular");
            }
        }
    };
    let solved = chol.solve(&hz);
    solved.trace()
}

/// Orthonormal null-space basis of the equality constraints, shared by the
/// Newton iterations (through the QP) and the EDF computation.
fn equality_null_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    crate::qp::null_space(a)
}

struct NewtonOutcome {
    v: DVector<f64>,
    converged: bool,
    hessian: DMatrix<f64>,
    active: Vec<usize>,
}

fn newton_fit(
    rows: &[ObsBasis],
    penalty: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambda: f64,
    v0: &DVector<f64>,
    warm_active: Option<&[usize]>,
) -> NewtonOutcome {
    let dim = v0.len();
    let mut v = v0.clone();
    let mut active: Vec<usize> = warm_active.map(|w| w.to_vec()).unwrap_or_default();
    let mut converged = false;
    let pen_obj = |v: &DVector<f64>| -> f64 {
        log_likelihood(rows, v) - 0.5 * lambda * (v.transpose() * penalty * v)[(0, 0)]
    };
    let mut hessian = DMatrix::zeros(dim, dim);
    for _ in 0..50 {
        let (g, h) = gradient_and_hessian(rows, &v, dim);
        let q = &h + penalty * lambda;
        hessian = h;
        let grad_pen = &g - penalty * (&v * lambda);

        let problem = QpProblem {
            q,
            c: -grad_pen,
            a: a.clone(),
            b: DVector::zeros(a.nrows()),
            g: DMatrix::identity(dim, dim),
            h: -v.clone(),
        };
        let zero = DVector::zeros(dim);
        let sol = match solve_qp_from(&problem, Some(&zero), Some(&active)) {
            Ok(s) => s,
            Err(_) => break,
        };
        active = sol.active.clone();
        let delta = sol.x;
        if delta.amax() <= 1e-6 {
            converged = true;
            break;
        }
        // damped step: halve until the penalized objective increases
        let base = pen_obj(&v);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-7 {
            let mut cand = &v + &delta * t;
            for x in cand.iter_mut() {
                if *x < 0.0 {
                    debug_assert!(*x > -1e-7, "step violated nonnegativity: {x}");
                    *x = 0.0;
                }
            }
            if pen_obj(&cand) > base {
                v = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // numerically at the constrained optimum
            converged = delta.amax() <= 1e-4;
            break;
        }
    }
    NewtonOutcome {
        v,
        converged,
        hessian,
        active,
    }
}

/// Projected Hessian (at the uniform start) and penalty, test use.
#[doc(hidden)]
pub fn debug_projected_mats(u: &[f64], v: &[f64], spec: BasisSpec) -> (DMatrix<f64>, DMatrix<f64>) {
    let basis = build_basis(spec).unwrap();
    let nb = basis.n_basis;
    let dim = nb * nb;
    let rows = tensor_rows(&basis, u, v);
    let penalty = build_penalty(&basis);
    let (a, _rhs) = build_margin_constraints(&basis);
    let z = equality_null_basis(&a);
    let mut v0 = DVector::zeros(dim);
    for k1 in 0..nb {
        for k2 in 0..nb {
            v0[k1 * nb + k2] = basis.alpha[k1] * basis.alpha[k2];
        }
    }
    let (_, h) = gradient_and_hessian(&rows, &v0, dim);
    (z.transpose() * &h * &z, z.transpose() * &penalty * &z)
}

/// Per-lambda diagnostics (lambda, loglik, edf, caic, converged), test use.
#[doc(hidden)]
pub fn debug_lambda_path(u: &[f64], v: &[f64], spec: BasisSpec) -> Vec<(f64, f64, f64, f64, bool)> {
    let basis = build_basis(spec).unwrap();
    let nb = basis.n_basis;
    let dim = nb * nb;
    let rows = tensor_rows(&basis, u, v);
    let penalty = build_penalty(&basis);
    let (a, _rhs) = build_margin_constraints(&basis);
    let null_basis = equality_null_basis(&a);
    let mut v_start = DVector::zeros(dim);
    for k1 in 0..nb {
        for k2 in 0..nb {
            v_start[k1 * nb + k2] = basis.alpha[k1] * basis.alpha[k2];
        }
    }
    let mut grid = lambda_grid();
    grid.reverse();
    let mut out = Vec::new();
    let mut current = v_start.clone();
    let mut warm: Option<Vec<usize>> = None;
    let n = u.len();
    for &lambda in &grid {
        let outcome = newton_fit(&rows, &penalty, &a, lambda, &current, warm.as_deref());
        current = outcome.v.clone();
        warm = Some(outcome.active.clone());
        let ll = log_likelihood(&rows, &outcome.v);
        let edf = penalized_edf(&outcome.hessian, &penalty, lambda, &null_basis);
        let caic = -2.0 * ll + 2.0 * edf + 2.0 * edf * (edf + 1.0) / (n as f64 - edf - 1.0);
        out.push((lambda, ll, edf, caic, outcome.converged));
    }
    out
}

/// Fits the penalized estimator: for every lambda on the grid, maximizes the
/// penalized log-likelihood under the margin constraints by damped Newton
/// steps with a QP subproblem, warm-starting from the previous (larger)
/// lambda; returns the fit minimizing the corrected AIC.
pub fn fit_penalized(u: &[f64], v: &[f64], spec: BasisSpec) -> Result<PenalizedFit> {
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

    let basis = build_basis(spec)?;
    let nb = basis.n_basis;
    let dim = nb * nb;
    let rows = tensor_rows(&basis, u, v);
    let penalty = build_penalty(&basis);
    let (a, _rhs) = build_margin_constraints(&basis);
    let null_basis = equality_null_basis(&a);

    // independence start: exactly feasible
    let mut v_start = DVector::zeros(dim);
    for k1 in 0..nb {
        for k2 in 0..nb {
            v_start[k1 * nb + k2] = basis.alpha[k1] * basis.alpha[k2];
        }
    }

    let mut grid = lambda_grid();
    grid.reverse(); // largest lambda first for warm starting

    let mut best: Option<(f64, PenalizedFit)> = None;
    let mut any_converged = false;
    let mut current = v_start.clone();
    let mut warm: Option<Vec<usize>> = None;
    for &lambda in &grid {
        let outcome = newton_fit(&rows, &penalty, &a, lambda, &current, warm.as_deref());
        current = outcome.v.clone();
        warm = Some(outcome.active.clone());
        any_converged |= outcome.converged;

        let ll = log_likelihood(&rows, &outcome.v);
        let edf = penalized_edf(&outcome.hessian, &penalty, lambda, &null_basis);
        let caic = if n as f64 > edf + 1.0 {
            -2.0 * ll + 2.0 * edf + 2.0 * edf * (edf + 1.0) / (n as f64 - edf - 1.0)
        } else {
            f64::INFINITY
        };
        let candidate = PenalizedFit {
            basis_spec: basis.spec,
            coeffs: outcome.v,
            lambda,
            edf,
            loglik: ll,
            converged: outcome.converged,
            basis: basis.clone(),
        };
        if best.as_ref().map(|(c, _)| caic < *c).unwrap_or(true) {
            best = Some((caic, candidate));
        }
    }
    let (_, mut fit) = best.expect("non-empty lambda grid");
    if !any_converged {
        fit.converged = false;
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Family, FamilySpec, Rotation};
    use crate::quadrature::integrate;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// integrates across knot intervals so kinks cannot hurt the rule
    fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, k: usize, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        let breaks: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
        let mut prev = lo;
        for &b in breaks.iter().chain(std::iter::once(&hi)) {
            let b = b.min(hi);
            if b > prev {
                total += integrate(&f, prev, b, 16);
                prev = b;
            }
            if prev >= hi {
                break;
            }
        }
        total
    }

    fn small_specs() -> Vec<BasisSpec> {
        vec![
            BasisSpec::pbern().with_k(6),
            BasisSpec::pspl1().with_k(6),
            BasisSpec::pspl2().with_k(5),
        ]
    }

    #[test]
    fn bernstein_degenerate_basis() {
        let basis = build_basis(BasisSpec {
            kind: BasisKind::Bernstein,
            k: 0,
        })
        .unwrap();
        assert_eq!(basis.n_basis, 1);
        assert_abs_diff_eq!(basis.eval_row(0.4)[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn normalized_bases_integrate_to_one() {
        for spec in small_specs() {
            let basis = build_basis(spec).unwrap();
            for j in 0..basis.n_basis {
                let mass = integrate_piecewise(|x| basis.eval_row(x)[j], spec.k, 0.0, 1.0);
                assert!(
                    (mass - 1.0).abs() < 1e-10,
                    "{spec:?} fn {j} mass {mass}"
                );
            }
        }
    }

    #[test]
    fn bspline_partition_of_unity_before_normalization() {
        let basis = build_basis(BasisSpec::pspl2().with_k(7)).unwrap();
        for x in [0.0, 0.013, 0.2, 0.5, 0.77, 0.999, 1.0] {
            let total: f64 = basis
                .bspline_std_row(x, 2)
                .iter()
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadratic_bspline_is_c1() {
        let basis = build_basis(BasisSpec::pspl2().with_k(5)).unwrap();
        // one-sided difference quotients agree across an interior knot
        let knot = 2.0 / 5.0;
        let eps = 1e-6;
        for j in 0..basis.n_basis {
            let left = (basis.eval_row(knot)[j] - basis.eval_row(knot - eps)[j]) / eps;
            let right = (basis.eval_row(knot + eps)[j] - basis.eval_row(knot)[j]) / eps;
            assert!(
                (left - right).abs() < 1e-3 * (1.0 + left.abs()),
                "fn {j}: left {left} right {right}"
            );
        }
    }

    #[test]
    fn cumulative_rows_match_quadrature() {
        for spec in small_specs() {
            let basis = build_basis(spec).unwrap();
            for x in [0.15, 0.5, 0.92] {
                let cum = basis.cum_row(x);
                for j in 0..basis.n_basis {
                    let direct = integrate_piecewise(|t| basis.eval_row(t)[j], spec.k, 0.0, x);
                    assert!(
                        (cum[j] - direct).abs() < 1e-9,
                        "{spec:?} fn {j} at {x}: {} vs {direct}",
                        cum[j]
                    );
                }
            }
        }
    }

    #[test]
    fn uniform_coefficients_satisfy_constraints() {
        for spec in [
            BasisSpec::pbern().with_k(1),
            BasisSpec::pspl1().with_k(2),
            BasisSpec::pspl2().with_k(3),
        ] {
            let basis = build_basis(spec).unwrap();
            let nb = basis.n_basis;
            let mut v = DVector::zeros(nb * nb);
            for k1 in 0..nb {
                for k2 in 0..nb {
                    v[k1 * nb + k2] = basis.alpha[k1] * basis.alpha[k2];
                }
            }
            let (a, rhs) = build_margin_constraints(&basis);
            let resid = (&a * &v - rhs).amax();
            assert!(resid < 1e-12, "{spec:?} residual {resid}");
        }
    }

    #[test]
    fn constraint_matrix_has_one_redundancy() {
        for spec in small_specs() {
            let basis = build_basis(spec).unwrap();
            let (a, _) = build_margin_constraints(&basis);
            let rank = a.clone().svd(false, false).rank(1e-10);
            assert!(
                rank < a.nrows(),
                "{spec:?}: rank {rank} not below rows {}",
                a.nrows()
            );
            assert_eq!(rank, 2 * basis.n_basis - 1, "{spec:?}");
        }
    }

    #[test]
    fn printed_first_difference_matrix() {
        let l1 = difference_matrix(5, 1);
        assert_eq!(l1.nrows(), 4);
        let expected = [
            [1.0, -1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, -1.0],
        ];
        for i in 0..4 {
            for j in 0..5 {
                assert_eq!(l1[(i, j)], expected[i][j]);
            }
        }
    }

    #[test]
    fn penalties_are_psd_and_kill_constants() {
        for spec in small_specs() {
            let basis = build_basis(spec).unwrap();
            let p = build_penalty(&basis);
            let dim = p.nrows();
            let ones = DVector::from_element(dim, 1.0 / dim as f64);
            let quad = (ones.transpose() * &p * &ones)[(0, 0)];
            assert!(quad.abs() < 1e-10, "{spec:?} constant penalty {quad}");
            let eig = p.clone().symmetric_eigen();
            let min = eig.eigenvalues.min();
            assert!(min > -1e-10, "{spec:?} min eigenvalue {min}");
        }
    }

    #[test]
    fn fit_on_independent_data_is_flat() {
        // the roughness penalty leaves a bilinear direction unpenalized, so
        // the deviation from 1 is driven by tau noise and needs n large
        // enough; median over three replications guards the odd draw
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let truth = FamilySpec::independence();
        for spec in [
            BasisSpec::pbern().with_k(8),
            BasisSpec::pspl1().with_k(8),
            BasisSpec::pspl2().with_k(8),
        ] {
            let mut deviations = Vec::new();
            let mut edfs = Vec::new();
            for _ in 0..3 {
                let (u, v): (Vec<f64>, Vec<f64>) =
                    truth.sample_pair(2000, &mut rng).into_iter().unzip();
                let fit = fit_penalized(&u, &v, spec).unwrap();
                let mut worst: f64 = 0.0;
                for i in 0..=10 {
                    for j in 0..=10 {
                        let x = 0.05 + 0.9 * i as f64 / 10.0;
                        let y = 0.05 + 0.9 * j as f64 / 10.0;
                        worst = worst.max((fit.pdf(x, y) - 1.0).abs());
                    }
                }
                deviations.push(worst);
                edfs.push(fit.edf);
            }
            deviations.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(
                deviations[1] < 0.05,
                "{spec:?}: median max deviation {deviations:?}"
            );
            edfs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(edfs[1] < 6.0, "{spec:?}: smoothing not selected, edfs {edfs:?}");
        }
    }

    #[test]
    fn constraints_hold_at_optimum() {
        let mut rng = ChaCha12Rng::seed_from_u64(22);
        let truth = FamilySpec::new(Family::Gaussian, Rotation::R0, 0.6).unwrap();
        let (u, v): (Vec<f64>, Vec<f64>) = truth.sample_pair(300, &mut rng).into_iter().unzip();
        for spec in small_specs() {
            let basis = build_basis(spec).unwrap();
            let fit = fit_penalized(&u, &v, spec).unwrap();
            let (a, rhs) = build_margin_constraints(&basis);
            let resid = (&a * &fit.coeffs - rhs).amax();
            assert!(resid <= 1e-8, "{spec:?} residual {resid}");
            assert!(fit.coeffs.min() >= -1e-12, "{spec:?} negative coefficient");
            assert!(fit.converged, "{spec:?} did not converge");
            // likelihood no worse than the uniform density
            assert!(fit.loglik >= -1e-9, "{spec:?} loglik {}", fit.loglik);
        }
    }

    #[test]
    fn margins_of_spline_fits_are_near_uniform() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let truth = FamilySpec::new(Family::Frank, Rotation::R0, 5.0).unwrap();
        let (u, v): (Vec<f64>, Vec<f64>) = truth.sample_pair(400, &mut rng).into_iter().unzip();
        for spec in [BasisSpec::pspl1().with_k(8), BasisSpec::pspl2().with_k(8)] {
            let basis = build_basis(spec).unwrap();
            let fit = fit_penalized(&u, &v, spec).unwrap();
            for &t in &basis.constraint_points() {
                let m = integrate_piecewise(|x| fit.pdf(x, t), spec.k, 0.0, 1.0);
                assert!(
                    (m - 1.0).abs() <= 1e-3,
                    "{spec:?} margin {m} at constraint point {t}"
                );
            }
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let m = integrate_piecewise(|x| fit.pdf(x, t), spec.k, 0.0, 1.0);
                assert!((m - 1.0).abs() <= 2e-2, "{spec:?} margin {m} at {t}");
            }
        }
    }

    #[test]
    fn hfunc_of_uniform_fit_is_identity() {
        for spec in small_specs() {
            let fit = PenalizedFit::uniform(spec).unwrap();
            for u in [0.0, 0.21, 0.68, 1.0] {
                assert_abs_diff_eq!(fit.hfunc2(u, 0.37), u, epsilon = 1e-9);
                assert_abs_diff_eq!(fit.hfunc1(0.37, u), u, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hfunc_is_integral_of_density() {
        let mut rng = ChaCha12Rng::seed_from_u64(24);
        let truth = FamilySpec::new(Family::Gumbel, Rotation::R0, 1.7).unwrap();
        let (u, v): (Vec<f64>, Vec<f64>) = truth.sample_pair(250, &mut rng).into_iter().unzip();
        for spec in small_specs() {
            let fit = fit_penalized(&u, &v, spec).unwrap();
            let eps = 1e-5;
            for u0 in [0.25, 0.5, 0.75] {
                for v0 in [0.3, 0.8] {
                    let fd = (fit.hfunc2(u0 + eps, v0) - fit.hfunc2(u0 - eps, v0)) / (2.0 * eps);
                    let d = fit.pdf(u0, v0);
                    assert!(
                        (fd - d).abs() <= 1e-4 * (1.0 + d),
                        "{spec:?}: fd {fd} vs pdf {d}"
                    );
                }
            }
            for w in [0.2, 0.6] {
                assert_abs_diff_eq!(fit.hfunc2(0.0, w), 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(fit.hfunc2(1.0, w), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn edf_limits_and_monotonicity() {
        let mut rng = ChaCha12Rng::seed_from_u64(25);
        let truth = FamilySpec::new(Family::Gaussian, Rotation::R0, 0.5).unwrap();
        let (u, v): (Vec<f64>, Vec<f64>) = truth.sample_pair(300, &mut rng).into_iter().unzip();
        let spec = BasisSpec::pspl1().with_k(6);
        let basis = build_basis(spec).unwrap();
        let fit = fit_penalized(&u, &v, spec).unwrap();
        let rows = tensor_rows(&basis, &u, &v);
        let (_, h) = gradient_and_hessian(&rows, &fit.coeffs, fit.coeffs.len());
        let penalty = build_penalty(&basis);
        let (a, _) = build_margin_constraints(&basis);
        let z = equality_null_basis(&a);

        // lambda -> 0 recovers the free coefficient count
        let free = z.ncols() as f64;
        assert_abs_diff_eq!(penalized_edf(&h, &penalty, 0.0, &z), free, epsilon = 1e-6);
        // large lambda shrinks the edf
        let hi = penalized_edf(&h, &penalty, 1e8, &z);
        let lo = penalized_edf(&h, &penalty, 1e-8, &z);
        assert!(hi < lo);
        // monotone decrease across the grid at fixed H
        let mut last = f64::INFINITY;
        for lambda in lambda_grid() {
            let e = penalized_edf(&h, &penalty, lambda, &z);
            assert!(e <= last + 1e-9, "edf not monotone at lambda {lambda}");
            last = e;
        }
    }
}
