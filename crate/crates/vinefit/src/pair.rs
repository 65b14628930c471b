//! The bivariate pair-copula interface shared by all estimators.

/// Clamp used for conditional arguments throughout the vine recursion so
/// h-function outputs of exactly 0 or 1 cannot poison later trees.
pub const UNIT_EPS: f64 = 1e-10;

/// Clamps a probability into the open interval used by the recursion.
pub fn clamp_unit(p: f64) -> f64 {
    p.clamp(UNIT_EPS, 1.0 - UNIT_EPS)
}

/// A fitted bivariate copula density with its conditional distributions.
///
/// `hfunc1` conditions on the first argument, `hfunc2` on the second:
/// `hfunc1(u, v) = P(V <= v | U = u)` and `hfunc2(u, v) = P(U <= u | V = v)`.
pub trait PairCopula: Send + Sync {
    fn pdf(&self, u: f64, v: f64) -> f64;

    fn hfunc1(&self, u: f64, v: f64) -> f64;

    fn hfunc2(&self, u: f64, v: f64) -> f64;

    /// Solves hfunc1(u, v) = p for v. The default is a bisection on the
    /// monotone h-function, which always converges on (0,1).
    fn hinv1(&self, u: f64, p: f64) -> f64 {
        invert_monotone(|v| self.hfunc1(u, v), p)
    }

    /// Solves hfunc2(u, v) = p for u.
    fn hinv2(&self, p: f64, v: f64) -> f64 {
        invert_monotone(|u| self.hfunc2(u, v), p)
    }

    /// In-sample log-likelihood recorded at fit time.
    fn loglik(&self) -> f64;

    /// Effective degrees of freedom for the corrected AIC.
    fn edf(&self) -> f64;

    /// Short human-readable description for reports.
    fn label(&self) -> String;
}

/// Bisection for a nondecreasing function mapping (0,1) onto [0,1].
pub fn invert_monotone<F: Fn(f64) -> f64>(f: F, p: f64) -> f64 {
    let mut lo = UNIT_EPS;
    let mut hi = 1.0 - UNIT_EPS;
    if f(lo) >= p {
        return lo;
    }
    if f(hi) <= p {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The independence copula; also the fallback when an edge fit fails.
#[derive(Debug, Clone, Copy, Default)]
pub struct IndependenceCopula;

impl PairCopula for IndependenceCopula {
    fn pdf(&self, _u: f64, _v: f64) -> f64 {
        1.0
    }

    fn hfunc1(&self, _u: f64, v: f64) -> f64 {
        v
    }

    fn hfunc2(&self, u: f64, _v: f64) -> f64 {
        u
    }

    fn hinv1(&self, _u: f64, p: f64) -> f64 {
        p
    }

    fn hinv2(&self, p: f64, _v: f64) -> f64 {
        p
    }

    fn loglik(&self) -> f64 {
        0.0
    }

    fn edf(&self) -> f64 {
        0.0
    }

    fn label(&self) -> String {
        "independence".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independence_is_uniform() {
        let c = IndependenceCopula;
        assert_eq!(c.pdf(0.3, 0.9), 1.0);
        assert_eq!(c.hfunc2(0.4, 0.7), 0.4);
        assert_eq!(c.hinv2(0.4, 0.7), 0.4);
    }

    #[test]
    fn generic_inverse_round_trip() {
        let c = IndependenceCopula;
        let v = invert_monotone(|v| c.hfunc1(0.2, v), 0.37);
        assert!((v - 0.37).abs() < 1e-9);
    }
}
