//! Dense convex quadratic programming by a primal active-set method.
//!
//! Solves
//! ```text
//!     minimize    1/2 x' Q x + c' x
//!     subject to  A x  = b
//!                 G x >= h
//! ```
//! with Q positive semidefinite (a small ridge is added on demand so the
//! reduced Hessians stay positive definite). Equality rows may be rank
//! deficient; redundant rows are dropped by a rank-revealing QR with
//! tolerance 1e-10. The problem sizes here are small (at most a few hundred
//! variables), so each working-set change refactorizes from scratch.
//!
//! When the inequalities are exactly the identity (`G = I`, simple lower
//! bounds) the solver eliminates fixed variables instead of stacking unit
//! rows, and for `Q = I` the equality-constrained step reduces to a cheap
//! projection. Both shortcuts matter: the Bernstein margin correction is a
//! Euclidean projection with hundreds of bound constraints.

use crate::error::{Result, VinefitError};
use nalgebra::{DMatrix, DVector};

const RANK_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const MULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct QpProblem {
    /// Symmetric n x n objective matrix.
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    /// p x n equality constraint matrix (p possibly 0).
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// m x n inequality matrix for G x >= h (m possibly 0).
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    /// Indices of inequality rows active at the solution.
    pub active: Vec<usize>,
}

impl QpProblem {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.q * x)[(0, 0)] + self.c.dot(x)
    }
}

/// Solves the program, deriving a feasible start internally.
pub fn solve_qp(p: &QpProblem) -> Result<QpSolution> {
    solve_qp_from(p, None, None)
}

/// Solves the program from an optional feasible start and an optional warm
/// working set of inequality indices (a good guess cuts the iteration count
/// drastically when solving a sequence of related programs).
pub fn solve_qp_from(
    p: &QpProblem,
    x0: Option<&DVector<f64>>,
    warm_active: Option<&[usize]>,
) -> Result<QpSolution> {
    let n = p.q.nrows();
    assert_eq!(p.q.ncols(), n, "Q must be square");
    assert_eq!(p.c.len(), n);
    assert_eq!(p.a.ncols().max(n), n);
    debug_assert!(symmetry_gap(&p.q) <= 1e-10 * (1.0 + p.q.amax()), "Q not symmetric");

    // prune redundant equality rows
    let (a_r, b_r) = prune_equalities(&p.a, &p.b)?;

    // feasible start
    let mut x = match x0 {
        Some(x0) => x0.clone(),
        None => initial_point(p, &a_r, &b_r)?,
    };
    if !is_feasible(p, &a_r, &b_r, &x) {
        // one repair pass even for user-provided starts
        x = repair(p, &a_r, &b_r, x);
        if !is_feasible(p, &a_r, &b_r, &x) {
            return Err(VinefitError::QpInfeasible);
        }
    }

    let bounds = bound_structure(p);
    match bounds {
        Some(lower) => solve_bounds(p, &a_r, &lower, x, warm_active),
        None => solve_general(p, &a_r, x, warm_active),
    }
}

fn symmetry_gap(q: &DMatrix<f64>) -> f64 {
    let mut gap: f64 = 0.0;
    for i in 0..q.nrows() {
        for j in (i + 1)..q.ncols() {
            gap = gap.max((q[(i, j)] - q[(j, i)]).abs());
        }
    }
    gap
}

/// Orthonormal basis of the null space of a wide matrix, via the pivoted QR
/// of its transpose. Shared with the penalized-likelihood EDF computation.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(a.ncols(), a.ncols());
    }
    pivoted_qr(&a.transpose()).null_basis()
}

/// Detects G = I (simple lower bounds); returns the bound vector if so.
fn bound_structure(p: &QpProblem) -> Option<DVector<f64>> {
    let n = p.q.nrows();
    if p.g.nrows() == 0 {
        return Some(DVector::from_element(n, f64::NEG_INFINITY));
    }
    if p.g.nrows() != n || p.g.ncols() != n {
        return None;
    }
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            if p.g[(i, j)] != want {
                return None;
            }
        }
    }
    Some(p.h.clone())
}

// ---------------------------------------------------------------------------
// pivoted Householder QR (rank revealing), used for null spaces and LS solves
// ---------------------------------------------------------------------------

struct PivotedQr {
    /// Packed factors: R in the upper triangle, reflector tails below.
    f: DMatrix<f64>,
    beta: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
    nrows: usize,
    ncols: usize,
}

fn pivoted_qr(a: &DMatrix<f64>) -> PivotedQr {
    let (n, m) = (a.nrows(), a.ncols());
    let mut f = a.clone();
    let mut beta = vec![0.0; m.min(n)];
    let mut perm: Vec<usize> = (0..m).collect();
    let mut colnorm: Vec<f64> = (0..m).map(|j| f.column(j).norm_squared()).collect();
    let mut rank = 0;
    let scale = colnorm.iter().cloned().fold(0.0f64, f64::max).sqrt();
    let tol = RANK_TOL * scale.max(1.0);

    for k in 0..m.min(n) {
        // column pivot on remaining norms
        let (kp, &best) = colnorm[k..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, v)| (i + k, v))
            .unwrap();
        if best.sqrt() <= tol {
            break;
        }
        if kp != k {
            f.swap_columns(k, kp);
            colnorm.swap(k, kp);
            perm.swap(k, kp);
        }
        // Householder reflector for column k, rows k..
        let mut norm = 0.0;
        for i in k..n {
            norm += f[(i, k)] * f[(i, k)];
        }
        let norm = norm.sqrt();
        if norm <= tol {
            break;
        }
        let alpha = if f[(k, k)] >= 0.0 { -norm } else { norm };
        let v0 = f[(k, k)] - alpha;
        beta[k] = -v0 / alpha; // beta = 2 / ||v||^2 with v scaled so v[0] = 1
        let inv_v0 = 1.0 / v0;
        for i in (k + 1)..n {
            f[(i, k)] *= inv_v0;
        }
        f[(k, k)] = alpha;
        // apply to remaining columns
        for j in (k + 1)..m {
            let mut s = f[(k, j)];
            for i in (k + 1)..n {
                s += f[(i, k)] * f[(i, j)];
            }
            s *= beta[k];
            f[(k, j)] -= s;
            for i in (k + 1)..n {
                let vik = f[(i, k)];
                f[(i, j)] -= s * vik;
            }
        }
        for (j, cn) in colnorm.iter_mut().enumerate().skip(k + 1) {
            *cn = (*cn - f[(k, j)] * f[(k, j)]).max(0.0);
        }
        rank = k + 1;
    }
    PivotedQr {
        f,
        beta,
        perm,
        rank,
        nrows: n,
        ncols: m,
    }
}

impl PivotedQr {
    /// Applies Q' to a vector in place.
    fn apply_qt(&self, v: &mut DVector<f64>) {
        for k in 0..self.rank {
            let mut s = v[k];
            for i in (k + 1)..self.nrows {
                s += self.f[(i, k)] * v[i];
            }
            s *= self.beta[k];
            v[k] -= s;
            for i in (k + 1)..self.nrows {
                v[i] -= s * self.f[(i, k)];
            }
        }
    }

    /// Applies Q to a vector in place.
    fn apply_q(&self, v: &mut DVector<f64>) {
        for k in (0..self.rank).rev() {
            let mut s = v[k];
            for i in (k + 1)..self.nrows {
                s += self.f[(i, k)] * v[i];
            }
            s *= self.beta[k];
            v[k] -= s;
            for i in (k + 1)..self.nrows {
                v[i] -= s * self.f[(i, k)];
            }
        }
    }

    /// Orthonormal basis of the null space of A' (a is nrows x ncols here, Q
    /// from its factorization): the trailing nrows - rank columns of Q.
    fn null_basis(&self) -> DMatrix<f64> {
        let n = self.nrows;
        let z_cols = n - self.rank;
        let mut z = DMatrix::zeros(n, z_cols);
        for j in 0..z_cols {
            let mut e = DVector::zeros(n);
            e[self.rank + j] = 1.0;
            self.apply_q(&mut e);
            z.set_column(j, &e);
        }
        z
    }

    /// Minimum-norm-ish least squares solve of (original matrix) * y = rhs,
    /// truncated to the numerical rank.
    fn ls_solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut w = rhs.clone();
        self.apply_qt(&mut w);
        let mut y = DVector::zeros(self.ncols);
        for k in (0..self.rank).rev() {
            let mut s = w[k];
            for j in (k + 1)..self.rank {
                s -= self.f[(k, j)] * y_perm(&y, &self.perm, j);
            }
            let val = s / self.f[(k, k)];
            y[self.perm[k]] = val;
        }
        y
    }
}

fn y_perm(y: &DVector<f64>, perm: &[usize], j: usize) -> f64 {
    y[perm[j]]
}

// ---------------------------------------------------------------------------
// preprocessing
// ---------------------------------------------------------------------------

/// Drops equality rows that are linear combinations of earlier ones; errors
/// if a dropped row is inconsistent with the kept ones.
fn prune_equalities(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if a.nrows() == 0 {
        return Ok((a.clone(), b.clone()));
    }
    let qr = pivoted_qr(&a.transpose());
    let keep: Vec<usize> = qr.perm[..qr.rank].to_vec();
    let mut a_r = DMatrix::zeros(keep.len(), a.ncols());
    let mut b_r = DVector::zeros(keep.len());
    for (i, &row) in keep.iter().enumerate() {
        a_r.row_mut(i).copy_from(&a.row(row));
        b_r[i] = b[row];
    }
    // consistency of dropped rows is checked against the LS solution
    let x_ls = ls_min_norm(&a_r, &b_r);
    for row in 0..a.nrows() {
        if !keep.contains(&row) {
            let resid = (a.row(row) * &x_ls)[(0, 0)] - b[row];
            if resid.abs() > FEAS_TOL * (1.0 + b[row].abs()) {
                return Err(VinefitError::QpInfeasible);
            }
        }
    }
    Ok((a_r, b_r))
}

/// Minimum-norm solution of A x = b for full-row-rank A via QR of A'.
fn ls_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    // x = A'(AA')^{-1} b
    let aat = a * a.transpose();
    let chol = aat
        .clone()
        .cholesky()
        .unwrap_or_else(|| (aat + DMatrix::identity(a.nrows(), a.nrows()) * 1e-12).cholesky().unwrap());
    a.transpose() * chol.solve(b)
}

fn initial_point(p: &QpProblem, a_r: &DMatrix<f64>, b_r: &DVector<f64>) -> Result<DVector<f64>> {
    let x = if a_r.nrows() > 0 {
        ls_min_norm(a_r, b_r)
    } else {
        DVector::zeros(p.q.nrows())
    };
    let x = repair(p, a_r, b_r, x);
    if is_feasible(p, a_r, b_r, &x) {
        Ok(x)
    } else {
        Err(VinefitError::QpInfeasible)
    }
}

/// Alternating projection repair: equalities by affine projection,
/// inequalities by halfspace projection (clipping for simple bounds).
fn repair(p: &QpProblem, a_r: &DMatrix<f64>, b_r: &DVector<f64>, mut x: DVector<f64>) -> DVector<f64> {
    for _ in 0..200 {
        if a_r.nrows() > 0 {
            let resid = a_r * &x - b_r;
            if resid.amax() > 1e-12 {
                let aat = a_r * a_r.transpose();
                if let Some(chol) = aat.cholesky() {
                    x -= a_r.transpose() * chol.solve(&resid);
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..p.g.nrows() {
            let slack = (p.g.row(i) * &x)[(0, 0)] - p.h[i];
            if slack < 0.0 {
                worst = worst.max(-slack);
                let g = p.g.row(i).transpose();
                let nrm = g.norm_squared();
                if nrm > 0.0 {
                    x += g * (-slack / nrm);
                }
            }
        }
        if worst <= 1e-12 && (a_r.nrows() == 0 || (a_r * &x - b_r).amax() <= 1e-10) {
            break;
        }
    }
    x
}

fn is_feasible(p: &QpProblem, a_r: &DMatrix<f64>, b_r: &DVector<f64>, x: &DVector<f64>) -> bool {
    if a_r.nrows() > 0 && (a_r * x - b_r).amax() > FEAS_TOL {
        return false;
    }
    for i in 0..p.g.nrows() {
        if (p.g.row(i) * x)[(0, 0)] < p.h[i] - FEAS_TOL {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// active-set loop, simple-bounds specialization (fixed-variable elimination)
// ---------------------------------------------------------------------------

fn solve_bounds(
    p: &QpProblem,
    a_r: &DMatrix<f64>,
    lower: &DVector<f64>,
    mut x: DVector<f64>,
    warm_active: Option<&[usize]>,
) -> Result<QpSolution> {
    let n = p.q.nrows();
    let max_iter = (10 * n).max(100);
    let q_is_identity = is_identity(&p.q);
    let mut fixed = vec![false; n];
    if let Some(warm) = warm_active {
        for &i in warm {
            if i < n && lower[i].is_finite() && x[i] - lower[i] <= 1e-7 {
                fixed[i] = true;
                x[i] = lower[i];
            }
        }
    } else {
        for i in 0..n {
            if lower[i].is_finite() && x[i] - lower[i] <= 1e-12 {
                fixed[i] = true;
                x[i] = lower[i];
            }
        }
    }

    for iter in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let grad = &p.q * &x + &p.c;

        // equality-constrained step on the free variables
        let step = eqp_step_bounds(p, a_r, &x, &grad, &free, q_is_identity);

        if step.amax() <= 1e-11 * (1.0 + x.amax()) {
            // multipliers: grad = A' nu on free coords, lambda_i = (grad - A' nu)_i
            let nu = if a_r.nrows() > 0 {
                let a_f = select_columns(a_r, &free);
                let g_f = DVector::from_iterator(free.len(), free.iter().map(|&i| grad[i]));
                pivoted_qr(&a_f.transpose()).ls_solve(&g_f)
            } else {
                DVector::zeros(0)
            };
            let at_nu = if a_r.nrows() > 0 {
                a_r.transpose() * &nu
            } else {
                DVector::zeros(n)
            };
            let mut drop_idx: Option<usize> = None;
            let mut most_negative = -MULT_TOL * (1.0 + grad.amax());
            for i in 0..n {
                if fixed[i] {
                    let lambda = grad[i] - at_nu[i];
                    if lambda < most_negative {
                        most_negative = lambda;
                        drop_idx = Some(i);
                    }
                }
            }
            match drop_idx {
                None => {
                    return Ok(QpSolution {
                        x,
                        status: QpStatus::Optimal,
                        iterations: iter,
                        active: (0..n).filter(|&i| fixed[i]).collect(),
                    });
                }
                Some(i) => {
                    fixed[i] = false;
                    continue;
                }
            }
        }

        // ratio test against inactive lower bounds
        let mut alpha = 1.0;
        let mut blocking: Option<usize> = None;
        for &i in &free {
            if step[i] < -1e-13 && lower[i].is_finite() {
                let limit = (lower[i] - x[i]) / step[i];
                if limit < alpha {
                    alpha = limit.max(0.0);
                    blocking = Some(i);
                }
            }
        }
        x.axpy(alpha, &step, 1.0);
        if let Some(i) = blocking {
            fixed[i] = true;
            x[i] = lower[i];
        }
    }
    Ok(QpSolution {
        active: (0..n).filter(|&i| fixed[i]).collect(),
        x,
        status: QpStatus::MaxIter,
        iterations: max_iter,
    })
}

/// Newton step restricted to the free variables subject to A_F p_F = 0.
fn eqp_step_bounds(
    p: &QpProblem,
    a_r: &DMatrix<f64>,
    _x: &DVector<f64>,
    grad: &DVector<f64>,
    free: &[usize],
    q_is_identity: bool,
) -> DVector<f64> {
    let n = p.q.nrows();
    let mut step = DVector::zeros(n);
    if free.is_empty() {
        return step;
    }
    let g_f = DVector::from_iterator(free.len(), free.iter().map(|&i| grad[i]));

    if a_r.nrows() == 0 {
        let p_f = if q_is_identity {
            -g_f
        } else {
            let q_ff = select_submatrix(&p.q, free);
            neg_solve_spd(q_ff, &g_f)
        };
        for (k, &i) in free.iter().enumerate() {
            step[i] = p_f[k];
        }
        return step;
    }

    let a_f = select_columns(a_r, free);
    if q_is_identity {
        // projection of -grad onto the null space of A_F
        let p_f = project_null(&a_f, &(-g_f));
        for (k, &i) in free.iter().enumerate() {
            step[i] = p_f[k];
        }
        return step;
    }

    // explicit null-space basis
    let qr = pivoted_qr(&a_f.transpose());
    let z = qr.null_basis();
    if z.ncols() == 0 {
        return step;
    }
    let q_ff = select_submatrix(&p.q, free);
    let hz = z.transpose() * &q_ff * &z;
    let rhs = -(z.transpose() * &g_f);
    let xi = neg_solve_spd_rhs(hz, rhs);
    let p_f = z * xi;
    for (k, &i) in free.iter().enumerate() {
        step[i] = p_f[k];
    }
    step
}

/// w - A'(AA')^+ A w, the orthogonal projection onto null(A).
fn project_null(a: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let aw = a * w;
    let aat = a * a.transpose();
    let sol = spd_solve_ridged(aat, aw);
    w - a.transpose() * sol
}

fn spd_solve_ridged(mut m: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    let mut ridge = 0.0;
    let scale = m.diagonal().amax().max(1.0);
    loop {
        match m.clone().cholesky() {
            Some(ch) => return ch.solve(&rhs),
            None => {
                ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
                for i in 0..m.nrows() {
                    m[(i, i)] += ridge;
                }
                assert!(ridge < 1.0, "projection system irrecoverably singular");
            }
        }
    }
}

/// Solves Q p = -g with ridge escalation so a PSD Q cannot stall the step.
fn neg_solve_spd(q: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    neg_solve_spd_rhs(q, -g.clone())
}

fn neg_solve_spd_rhs(mut q: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    let scale = q.diagonal().amax().max(1.0);
    let mut ridge = 0.0;
    loop {
        match q.clone().cholesky() {
            Some(ch) => return ch.solve(&rhs),
            None => {
                ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 100.0 };
                for i in 0..q.nrows() {
                    q[(i, i)] += ridge;
                }
                assert!(
                    ridge < 1e6 * scale,
                    "reduced Hessian irrecoverably indefinite"
                );
            }
        }
    }
}

fn is_identity(q: &DMatrix<f64>) -> bool {
    if q.nrows() != q.ncols() {
        return false;
    }
    for i in 0..q.nrows() {
        for j in 0..q.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            if q[(i, j)] != want {
                return false;
            }
        }
    }
    true
}

fn select_columns(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), cols.len());
    for (k, &j) in cols.iter().enumerate() {
        out.set_column(k, &a.column(j));
    }
    out
}

fn select_submatrix(q: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(idx.len(), idx.len());
    for (r, &i) in idx.iter().enumerate() {
        for (s, &j) in idx.iter().enumerate() {
            out[(r, s)] = q[(i, j)];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// active-set loop, general inequalities
// ---------------------------------------------------------------------------

fn solve_general(
    p: &QpProblem,
    a_r: &DMatrix<f64>,
    mut x: DVector<f64>,
    warm_active: Option<&[usize]>,
) -> Result<QpSolution> {
    let n = p.q.nrows();
    let m = p.g.nrows();
    let max_iter = (10 * n).max(100);
    let mut active: Vec<usize> = Vec::new();
    if let Some(warm) = warm_active {
        for &i in warm {
            if i < m && ((p.g.row(i) * &x)[(0, 0)] - p.h[i]).abs() <= 1e-7 {
                active.push(i);
            }
        }
    } else {
        for i in 0..m {
            if ((p.g.row(i) * &x)[(0, 0)] - p.h[i]).abs() <= 1e-9 {
                active.push(i);
            }
        }
    }
    active.sort_unstable();
    active.dedup();

    for iter in 0..max_iter {
        // stacked working constraints
        let rows = a_r.nrows() + active.len();
        let mut cmat = DMatrix::zeros(rows, n);
        for i in 0..a_r.nrows() {
            cmat.row_mut(i).copy_from(&a_r.row(i));
        }
        for (k, &i) in active.iter().enumerate() {
            cmat.row_mut(a_r.nrows() + k).copy_from(&p.g.row(i));
        }

        let grad = &p.q * &x + &p.c;
        let (step, qr) = if rows == 0 {
            (neg_solve_spd(p.q.clone(), &grad), None)
        } else {
            let qr = pivoted_qr(&cmat.transpose());
            let z = qr.null_basis();
            if z.ncols() == 0 {
                (DVector::zeros(n), Some(qr))
            } else {
                let hz = z.transpose() * &p.q * &z;
                let rhs = -(z.transpose() * &grad);
                (&z * neg_solve_spd_rhs(hz, rhs), Some(qr))
            }
        };

        if step.amax() <= 1e-11 * (1.0 + x.amax()) {
            // Lagrange multipliers from C' y = grad
            let y = match &qr {
                Some(qr) => qr.ls_solve(&grad),
                None => DVector::zeros(0),
            };
            let mut drop_pos: Option<usize> = None;
            let mut most_negative = -MULT_TOL * (1.0 + grad.amax());
            for (k, _) in active.iter().enumerate() {
                let lambda = y[a_r.nrows() + k];
                if lambda < most_negative {
                    most_negative = lambda;
                    drop_pos = Some(k);
                }
            }
            match drop_pos {
                None => {
                    return Ok(QpSolution {
                        x,
                        status: QpStatus::Optimal,
                        iterations: iter,
                        active,
                    });
                }
                Some(k) => {
                    active.remove(k);
                    continue;
                }
            }
        }

        let mut alpha = 1.0;
        let mut blocking: Option<usize> = None;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let d = (p.g.row(i) * &step)[(0, 0)];
            if d < -1e-13 {
                let slack = (p.g.row(i) * &x)[(0, 0)] - p.h[i];
                let limit = (slack / -d).max(0.0);
                if limit < alpha {
                    alpha = limit;
                    blocking = Some(i);
                }
            }
        }
        x.axpy(alpha, &step, 1.0);
        if let Some(i) = blocking {
            active.push(i);
            active.sort_unstable();
        }
    }
    Ok(QpSolution {
        x,
        status: QpStatus::MaxIter,
        iterations: max_iter,
        active,
    })
}
