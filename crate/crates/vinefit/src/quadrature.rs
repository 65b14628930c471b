//! Gauss-Legendre rules and the normal-scale mass check used in tests and
//! for the spline penalty matrices.

use crate::normal::{std_normal_cdf, std_normal_pdf};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// value and derivative of P_n at x
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates f over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Total mass of a copula density, integrated on the normal scale where the
/// integrand is bounded: int c(u,v) du dv = int c(Phi(x),Phi(y)) phi(x)
/// phi(y) dx dy. Tensor Gauss-Legendre on [-8, 8]^2.
pub fn copula_mass<F: Fn(f64, f64) -> f64>(pdf: F, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = 8.0;
    let mut total = 0.0;
    let us: Vec<(f64, f64)> = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| {
            let z = half * x;
            (std_normal_cdf(z), w * half * std_normal_pdf(z))
        })
        .collect();
    for (ui, wi) in &us {
        for (uj, wj) in &us {
            total += wi * wj * pdf(*ui, *uj);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_order_rules_are_exact_for_polynomials() {
        // 5-point rule integrates degree 9 exactly
        let val = integrate(|x| x.powi(8) + 3.0 * x.powi(3), 0.0, 1.0, 5);
        assert_abs_diff_eq!(val, 1.0 / 9.0 + 0.75, epsilon = 1e-14);
    }

    #[test]
    fn mass_of_independence_is_one() {
        assert_abs_diff_eq!(copula_mass(|_, _| 1.0, 64), 1.0, epsilon = 1e-10);
    }
}
