//! Parametric bivariate copula families with rotations: densities,
//! h-functions and their inverses, tau/parameter maps, sampling, and the
//! AIC-selecting parametric pair-copula estimator.

use crate::dependence::kendalls_tau;
use crate::error::{Result, VinefitError};
use crate::normal::{std_normal_cdf, std_normal_quantile};
use crate::pair::{clamp_unit, PairCopula};
use crate::quadrature::integrate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independence,
    Gaussian,
    StudentT,
    Clayton,
    Gumbel,
    Frank,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::StudentT => "student_t",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    #[serde(rename = "0")]
    R0,
    #[serde(rename = "90")]
    R90,
    #[serde(rename = "180")]
    R180,
    #[serde(rename = "270")]
    R270,
}

impl Rotation {
    pub fn degrees(&self) -> u32 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    fn flips_tau_sign(&self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }
}

/// A parametric pair-copula specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub rotation: Rotation,
    pub theta: f64,
    /// Degrees of freedom, Student t only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
}

impl FamilySpec {
    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            rotation: Rotation::R0,
            theta: 0.0,
            df: None,
        }
    }

    pub fn new(family: Family, rotation: Rotation, theta: f64) -> Result<Self> {
        let spec = Self {
            family,
            rotation,
            theta,
            df: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn student_t(theta: f64, df: f64) -> Result<Self> {
        let spec = Self {
            family: Family::StudentT,
            rotation: Rotation::R0,
            theta,
            df: Some(df),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| -> Result<()> {
            Err(VinefitError::ParameterOutOfRange {
                family: self.family.name().to_string(),
                value: v,
            })
        };
        if self.rotation != Rotation::R0
            && !matches!(self.family, Family::Clayton | Family::Gumbel)
        {
            return Err(VinefitError::ParameterOutOfRange {
                family: format!("{} rotated {}", self.family.name(), self.rotation.degrees()),
                value: self.theta,
            });
        }
        match self.family {
            Family::Independence => Ok(()),
            Family::Gaussian => {
                if self.theta.abs() >= 1.0 {
                    bad(self.theta)
                } else {
                    Ok(())
                }
            }
            Family::StudentT => {
                if self.theta.abs() >= 1.0 {
                    return bad(self.theta);
                }
                match self.df {
                    Some(df) if df > 2.0 => Ok(()),
                    Some(df) => bad(df),
                    None => bad(f64::NAN),
                }
            }
            Family::Clayton => {
                if self.theta <= 0.0 {
                    bad(self.theta)
                } else {
                    Ok(())
                }
            }
            Family::Gumbel => {
                if self.theta < 1.0 {
                    bad(self.theta)
                } else {
                    Ok(())
                }
            }
            Family::Frank => {
                if self.theta == 0.0 || !self.theta.is_finite() {
                    bad(self.theta)
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Kendall's tau implied by the specification (rotation included).
    pub fn tau(&self) -> f64 {
        let base = param_to_tau(self.family, self.theta);
        if self.rotation.flips_tau_sign() {
            -base
        } else {
            base
        }
    }

    /// Copula density.
    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        let u = clamp_unit(u);
        let v = clamp_unit(v);
        let (bu, bv) = match self.rotation {
            Rotation::R0 => (u, v),
            Rotation::R90 => (1.0 - u, v),
            Rotation::R180 => (1.0 - u, 1.0 - v),
            Rotation::R270 => (u, 1.0 - v),
        };
        self.base_pdf(bu, bv).max(0.0)
    }

    /// P(U <= u | V = v).
    pub fn hfunc2(&self, u: f64, v: f64) -> f64 {
        let u = clamp_unit(u);
        let v = clamp_unit(v);
        let h = match self.rotation {
            Rotation::R0 => self.base_h(u, v),
            Rotation::R90 => 1.0 - self.base_h(1.0 - u, v),
            Rotation::R180 => 1.0 - self.base_h(1.0 - u, 1.0 - v),
            Rotation::R270 => self.base_h(u, 1.0 - v),
        };
        h.clamp(0.0, 1.0)
    }

    /// P(V <= v | U = u); equals hfunc2 with swapped roles because the base
    /// families are exchangeable.
    pub fn hfunc1(&self, u: f64, v: f64) -> f64 {
        let u = clamp_unit(u);
        let v = clamp_unit(v);
        let h = match self.rotation {
            Rotation::R0 => self.base_h(v, u),
            Rotation::R90 => self.base_h(v, 1.0 - u),
            Rotation::R180 => 1.0 - self.base_h(1.0 - v, 1.0 - u),
            Rotation::R270 => 1.0 - self.base_h(1.0 - v, u),
        };
        h.clamp(0.0, 1.0)
    }

    /// Inverse of hfunc2 in its first argument.
    pub fn hinv2(&self, p: f64, v: f64) -> f64 {
        let p = clamp_unit(p);
        let v = clamp_unit(v);
        let u = match self.rotation {
            Rotation::R0 => self.base_hinv(p, v),
            Rotation::R90 => 1.0 - self.base_hinv(1.0 - p, v),
            Rotation::R180 => 1.0 - self.base_hinv(1.0 - p, 1.0 - v),
            Rotation::R270 => self.base_hinv(p, 1.0 - v),
        };
        clamp_unit(u)
    }

    /// Inverse of hfunc1 in its second argument.
    pub fn hinv1(&self, u: f64, p: f64) -> f64 {
        let u = clamp_unit(u);
        let p = clamp_unit(p);
        let v = match self.rotation {
            Rotation::R0 => self.base_hinv(p, u),
            Rotation::R90 => self.base_hinv(p, 1.0 - u),
            Rotation::R180 => 1.0 - self.base_hinv(1.0 - p, 1.0 - u),
            Rotation::R270 => 1.0 - self.base_hinv(1.0 - p, u),
        };
        clamp_unit(v)
    }

    /// Draws n pairs by the conditional distribution method: the second
    /// coordinate is hinv1(u, w) for independent uniforms (u, w).
    pub fn sample_pair<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<(f64, f64)> {
        (0..n)
            .map(|_| {
                let u: f64 = clamp_unit(rng.gen());
                let w: f64 = clamp_unit(rng.gen());
                (u, self.hinv1(u, w))
            })
            .collect()
    }

    // ----- unrotated (exchangeable) implementations -----

    fn base_pdf(&self, u: f64, v: f64) -> f64 {
        match self.family {
            Family::Independence => 1.0,
            Family::Gaussian => {
                let rho = self.theta;
                let x = std_normal_quantile(u);
                let y = std_normal_quantile(v);
                let r2 = 1.0 - rho * rho;
                (-(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)).exp()
                    / r2.sqrt()
            }
            Family::StudentT => {
                let rho = self.theta;
                let nu = self.df.expect("student t requires df");
                let x = t_quantile(u, nu);
                let y = t_quantile(v, nu);
                let r2 = 1.0 - rho * rho;
                // bivariate t density over the product of the marginals
                let quad = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2);
                let ln_num = ln_gamma((nu + 2.0) / 2.0) + ln_gamma(nu / 2.0)
                    - 2.0 * ln_gamma((nu + 1.0) / 2.0)
                    - 0.5 * r2.ln();
                let ln_den = -0.5 * (nu + 2.0) * (1.0 + quad).ln()
                    + 0.5 * (nu + 1.0) * ((1.0 + x * x / nu).ln() + (1.0 + y * y / nu).ln());
                (ln_num + ln_den).exp()
            }
            Family::Clayton => {
                let th = self.theta;
                let lu = u.ln();
                let lv = v.ln();
                let t = (-th * lu).exp() + (-th * lv).exp() - 1.0;
                if t <= 0.0 {
                    return 0.0;
                }
                ((1.0 + th).ln() - (1.0 + th) * (lu + lv) - (2.0 + 1.0 / th) * t.ln()).exp()
            }
            Family::Gumbel => {
                let th = self.theta;
                let a = -u.ln();
                let b = -v.ln();
                let s = a.powf(th) + b.powf(th);
                let t = s.powf(1.0 / th);
                let ln_c = -t - u.ln() - v.ln()
                    + (th - 1.0) * (a.ln() + b.ln())
                    + (2.0 / th - 2.0) * s.ln()
                    + (1.0 + (th - 1.0) * s.powf(-1.0 / th)).ln();
                ln_c.exp()
            }
            Family::Frank => {
                let th = self.theta;
                let gu = (-th * u).exp() - 1.0;
                let gv = (-th * v).exp() - 1.0;
                let g1 = (-th).exp() - 1.0;
                let denom = g1 + gu * gv;
                -th * g1 * (gu + 1.0) * (gv + 1.0) / (denom * denom)
            }
        }
    }

    /// h(u | v) for the unrotated family: P(U <= u | V = v).
    fn base_h(&self, u: f64, v: f64) -> f64 {
        match self.family {
            Family::Independence => u,
            Family::Gaussian => {
                let rho = self.theta;
                let x = std_normal_quantile(u);
                let y = std_normal_quantile(v);
                std_normal_cdf((x - rho * y) / (1.0 - rho * rho).sqrt())
            }
            Family::StudentT => {
                let rho = self.theta;
                let nu = self.df.expect("student t requires df");
                let x = t_quantile(u, nu);
                let y = t_quantile(v, nu);
                let scale = ((1.0 - rho * rho) * (nu + y * y) / (nu + 1.0)).sqrt();
                t_cdf((x - rho * y) / scale, nu + 1.0)
            }
            Family::Clayton => {
                let th = self.theta;
                let t = (-th * u.ln()).exp() + (-th * v.ln()).exp() - 1.0;
                if t <= 0.0 {
                    return 1.0;
                }
                ((-th - 1.0) * v.ln() + (-1.0 / th - 1.0) * t.ln()).exp()
            }
            Family::Gumbel => {
                let th = self.theta;
                let a = -u.ln();
                let b = -v.ln();
                let s = a.powf(th) + b.powf(th);
                let t = s.powf(1.0 / th);
                (-t - v.ln() + (th - 1.0) * b.ln() + (1.0 / th - 1.0) * s.ln()).exp()
            }
            Family::Frank => {
                let th = self.theta;
                let gu = (-th * u).exp() - 1.0;
                let gv = (-th * v).exp() - 1.0;
                let g1 = (-th).exp() - 1.0;
                gu * (gv + 1.0) / (g1 + gu * gv)
            }
        }
    }

    /// Inverse of base_h in u for fixed v.
    fn base_hinv(&self, p: f64, v: f64) -> f64 {
        match self.family {
            Family::Independence => p,
            Family::Gaussian => {
                let rho = self.theta;
                let y = std_normal_quantile(v);
                let x = std_normal_quantile(p) * (1.0 - rho * rho).sqrt() + rho * y;
                std_normal_cdf(x)
            }
            Family::StudentT => {
                let rho = self.theta;
                let nu = self.df.expect("student t requires df");
                let y = t_quantile(v, nu);
                let scale = ((1.0 - rho * rho) * (nu + y * y) / (nu + 1.0)).sqrt();
                let x = t_quantile(p, nu + 1.0) * scale + rho * y;
                t_cdf(x, nu)
            }
            Family::Clayton => {
                let th = self.theta;
                let vp = (-th * v.ln()).exp();
                let base = (p * v.powf(1.0 + th)).powf(-th / (1.0 + th)) + 1.0 - vp;
                if base <= 0.0 {
                    return 1.0 - crate::pair::UNIT_EPS;
                }
                base.powf(-1.0 / th)
            }
            Family::Gumbel => {
                // no closed form: monotone bisection with a Newton polish
                let f = |u: f64| self.base_h(u, v);
                let mut lo = 1e-12;
                let mut hi = 1.0 - 1e-12;
                if f(lo) >= p {
                    return lo;
                }
                if f(hi) <= p {
                    return hi;
                }
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let mut u = 0.5 * (lo + hi);
                for _ in 0..5 {
                    let err = f(u) - p;
                    let d = self.base_pdf(u, v);
                    if d <= 0.0 {
                        break;
                    }
                    let next = u - err / d;
                    if next <= lo || next >= hi {
                        break;
                    }
                    u = next;
                    if err.abs() < 1e-12 {
                        break;
                    }
                }
                u
            }
            Family::Frank => {
                let th = self.theta;
                let gv = (-th * v).exp() - 1.0;
                let g1 = (-th).exp() - 1.0;
                let gu = p * g1 / (1.0 + (1.0 - p) * gv);
                (-(gu + 1.0).ln() / th).clamp(1e-12, 1.0 - 1e-12)
            }
        }
    }
}

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

// ---------------------------------------------------------------------------
// Student t distribution function and quantile
// ---------------------------------------------------------------------------

pub(crate) fn t_cdf(x: f64, nu: f64) -> f64 {
    StudentsT::new(0.0, 1.0, nu).expect("valid df").cdf(x)
}

fn t_pdf(x: f64, nu: f64) -> f64 {
    StudentsT::new(0.0, 1.0, nu).expect("valid df").pdf(x)
}

/// Student t quantile by safeguarded Newton on the cdf; the start combines a
/// Cornish-Fisher expansion around the normal quantile with the polynomial
/// tail inversion, so a handful of iterations reaches 1e-12.
pub(crate) fn t_quantile(p: f64, nu: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "t quantile requires p in (0,1)");
    let flip = p > 0.5;
    let pp = if flip { 1.0 - p } else { p };

    let mut x = if pp < 0.05 {
        // tail: P(T < -x) ~ A x^{-nu} / nu
        let ln_a = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0)
            - 0.5 * (nu * std::f64::consts::PI).ln()
            + 0.5 * (nu - 1.0) * nu.ln();
        -(((ln_a - (pp * nu).ln()) / nu).exp())
    } else {
        let z = std_normal_quantile(pp);
        let g1 = (z * z * z + z) / (4.0 * nu);
        let g2 = (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / (96.0 * nu * nu);
        z + g1 + g2
    };
    if !x.is_finite() {
        x = -1.0;
    }

    // bracket the root
    let mut lo = x.min(-1e-8);
    let mut hi = -1e-10;
    for _ in 0..200 {
        if t_cdf(lo, nu) < pp {
            break;
        }
        lo *= 2.0;
    }
    if t_cdf(hi, nu) < pp {
        hi = 0.0;
    }
    x = x.clamp(lo, hi);
    for _ in 0..60 {
        let f = t_cdf(x, nu) - pp;
        if f.abs() < 1e-15 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = t_pdf(x, nu);
        let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * (1.0 + x.abs()) {
            break;
        }
        x = next;
    }
    if flip {
        -x
    } else {
        x
    }
}

// ---------------------------------------------------------------------------
// tau <-> parameter maps
// ---------------------------------------------------------------------------

/// Kendall's tau of the unrotated family at the given parameter.
pub fn param_to_tau(family: Family, theta: f64) -> f64 {
    match family {
        Family::Independence => 0.0,
        Family::Gaussian | Family::StudentT => 2.0 * theta.asin() / std::f64::consts::PI,
        Family::Clayton => theta / (theta + 2.0),
        Family::Gumbel => 1.0 - 1.0 / theta,
        Family::Frank => frank_tau(theta),
    }
}

/// Inverts tau to the family parameter. For Clayton and Gumbel the sign of
/// tau must be realized through a rotation, so only |tau| is attainable.
pub fn tau_to_param(family: Family, tau: f64) -> Result<f64> {
    if tau.abs() >= 1.0 {
        return Err(VinefitError::TauOutOfRange(tau));
    }
    match family {
        Family::Independence => Ok(0.0),
        Family::Gaussian | Family::StudentT => {
            Ok((std::f64::consts::PI * tau / 2.0).sin())
        }
        Family::Clayton => {
            if tau <= 0.0 {
                return Err(VinefitError::TauOutOfRange(tau));
            }
            Ok(2.0 * tau / (1.0 - tau))
        }
        Family::Gumbel => {
            if tau < 0.0 {
                return Err(VinefitError::TauOutOfRange(tau));
            }
            Ok(1.0 / (1.0 - tau))
        }
        Family::Frank => {
            if tau == 0.0 {
                // Frank at tau 0 degenerates to independence
                return Err(VinefitError::TauOutOfRange(tau));
            }
            Ok(frank_theta_from_tau(tau))
        }
    }
}

/// First Debye function D1(theta) = (1/theta) int_0^theta t/(e^t - 1) dt.
fn debye1(theta: f64) -> f64 {
    let th = theta.abs();
    if th < 1e-10 {
        return 1.0;
    }
    let val = integrate(
        |t| {
            if t.abs() < 1e-12 {
                1.0
            } else {
                t / t.exp_m1()
            }
        },
        0.0,
        th,
        64,
    ) / th;
    val
}

fn frank_tau(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let th = theta.abs();
    let tau = 1.0 - 4.0 / th * (1.0 - debye1(th));
    if theta < 0.0 {
        -tau
    } else {
        tau
    }
}

fn frank_theta_from_tau(tau: f64) -> f64 {
    let target = tau.abs();
    let mut lo = 1e-8;
    let mut hi = 50.0;
    // frank_tau is increasing in theta
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frank_tau(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let th = 0.5 * (lo + hi);
    if tau < 0.0 {
        -th
    } else {
        th
    }
}

// ---------------------------------------------------------------------------
// parametric estimator
// ---------------------------------------------------------------------------

/// A fitted parametric pair-copula.
#[derive(Debug, Clone)]
pub struct ParametricFit {
    pub spec: FamilySpec,
    pub loglik: f64,
    /// Number of estimated parameters: 0, 1 or 2.
    pub edf: u32,
}

impl PairCopula for ParametricFit {
    fn pdf(&self, u: f64, v: f64) -> f64 {
        self.spec.pdf(u, v)
    }

    fn hfunc1(&self, u: f64, v: f64) -> f64 {
        self.spec.hfunc1(u, v)
    }

    fn hfunc2(&self, u: f64, v: f64) -> f64 {
        self.spec.hfunc2(u, v)
    }

    fn hinv1(&self, u: f64, p: f64) -> f64 {
        self.spec.hinv1(u, p)
    }

    fn hinv2(&self, p: f64, v: f64) -> f64 {
        self.spec.hinv2(p, v)
    }

    fn loglik(&self) -> f64 {
        self.loglik
    }

    fn edf(&self) -> f64 {
        self.edf as f64
    }

    fn label(&self) -> String {
        match self.spec.family {
            Family::Independence => "independence".to_string(),
            Family::StudentT => format!(
                "student_t(theta={:.4}, df={:.1})",
                self.spec.theta,
                self.spec.df.unwrap_or(f64::NAN)
            ),
            f => {
                if self.spec.rotation == Rotation::R0 {
                    format!("{}(theta={:.4})", f.name(), self.spec.theta)
                } else {
                    format!(
                        "{}{}(theta={:.4})",
                        f.name(),
                        self.spec.rotation.degrees(),
                        self.spec.theta
                    )
                }
            }
        }
    }
}

fn loglik_of(spec: &FamilySpec, u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| spec.pdf(a, b).max(1e-300).ln())
        .sum()
}

/// Student t copula log-likelihood from precomputed t-scores, so the
/// quantile transform is paid once per df rather than once per likelihood
/// evaluation.
fn t_copula_loglik_scores(x: &[f64], y: &[f64], rho: f64, nu: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    let ln_const = ln_gamma((nu + 2.0) / 2.0) + ln_gamma(nu / 2.0)
        - 2.0 * ln_gamma((nu + 1.0) / 2.0)
        - 0.5 * r2.ln();
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let quad = (a * a + b * b - 2.0 * rho * a * b) / (nu * r2);
            ln_const - 0.5 * (nu + 2.0) * (1.0 + quad).ln()
                + 0.5 * (nu + 1.0) * ((1.0 + a * a / nu).ln() + (1.0 + b * b / nu).ln())
        })
        .sum()
}

/// Golden-section maximization of a unimodal function on [a, b].
fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// The tau-based independence test of Genest and Favre (2007): under
/// independence, tau_hat * sqrt(9n(n-1) / (2(2n+5))) is standard normal.
fn independence_test_accepts(tau: f64, n: usize) -> bool {
    let n = n as f64;
    let stat = tau.abs() * (9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0))).sqrt();
    stat < 1.959963984540054
}

/// Fits every candidate family by tau inversion with a one-dimensional
/// likelihood polish (profile over a df grid for Student t) and returns the
/// AIC-minimizing fit. An independence pre-test short-circuits to the
/// independence copula when tau is insignificant at the 5% level.
pub fn fit_parametric(u: &[f64], v: &[f64]) -> Result<ParametricFit> {
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
    let tau_hat = kendalls_tau(u, v)?.clamp(-0.95, 0.95);

    let indep = ParametricFit {
        spec: FamilySpec::independence(),
        loglik: 0.0,
        edf: 0,
    };
    if independence_test_accepts(tau_hat, n) {
        return Ok(indep);
    }

    let mut best = indep;
    let mut best_aic = 0.0; // independence: -2*0 + 0

    let mut consider = |fit: ParametricFit| {
        let aic = -2.0 * fit.loglik + 2.0 * fit.edf as f64;
        if aic < best_aic {
            best_aic = aic;
            best = fit;
        }
    };

    // tau search window per candidate, clamped to the attainable range
    let window = 0.1;

    // Gaussian and Frank take the signed tau directly
    for family in [Family::Gaussian, Family::Frank] {
        let lo = (tau_hat - window).max(-0.95);
        let hi = (tau_hat + window).min(0.95);
        let eval = |t: f64| -> f64 {
            match tau_to_param(family, t) {
                Ok(theta) => match FamilySpec::new(family, Rotation::R0, theta) {
                    Ok(spec) => loglik_of(&spec, u, v),
                    Err(_) => f64::NEG_INFINITY,
                },
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let (t_best, ll) = golden_max(eval, lo, hi, 30);
        if let Ok(theta) = tau_to_param(family, t_best) {
            if let Ok(spec) = FamilySpec::new(family, Rotation::R0, theta) {
                consider(ParametricFit {
                    spec,
                    loglik: ll,
                    edf: 1,
                });
            }
        }
    }

    // Student t: profile likelihood over a df grid with cached t-scores,
    // then polish theta at the best df
    {
        let theta0 = tau_to_param(Family::StudentT, tau_hat)?;
        let df_grid: Vec<f64> = std::iter::once(2.5)
            .chain((3..=30).map(|k| k as f64))
            .collect();
        let mut best_t: Option<(f64, Vec<f64>, Vec<f64>, f64)> = None;
        for &df in &df_grid {
            let x: Vec<f64> = u.iter().map(|&p| t_quantile(p, df)).collect();
            let y: Vec<f64> = v.iter().map(|&p| t_quantile(p, df)).collect();
            let ll = t_copula_loglik_scores(&x, &y, theta0, df);
            if best_t.as_ref().map(|(_, _, _, b)| ll > *b).unwrap_or(true) {
                best_t = Some((df, x, y, ll));
            }
        }
        if let Some((df, x, y, _)) = best_t {
            let lo = (tau_hat - window).max(-0.95);
            let hi = (tau_hat + window).min(0.95);
            let eval = |t: f64| -> f64 {
                let theta = (std::f64::consts::PI * t / 2.0).sin();
                t_copula_loglik_scores(&x, &y, theta, df)
            };
            let (t_best, ll) = golden_max(eval, lo, hi, 30);
            let spec = FamilySpec {
                family: Family::StudentT,
                rotation: Rotation::R0,
                theta: (std::f64::consts::PI * t_best / 2.0).sin(),
                df: Some(df),
            };
            consider(ParametricFit {
                spec,
                loglik: ll,
                edf: 2,
            });
        }
    }

    // Clayton and Gumbel: rotations consistent with the sign of tau
    let rotations: [Rotation; 2] = if tau_hat >= 0.0 {
        [Rotation::R0, Rotation::R180]
    } else {
        [Rotation::R90, Rotation::R270]
    };
    let abs_tau = tau_hat.abs().max(1e-3);
    for family in [Family::Clayton, Family::Gumbel] {
        for rot in rotations {
            let lo = (abs_tau - window).max(1e-3);
            let hi = (abs_tau + window).min(0.95);
            let eval = |t: f64| -> f64 {
                match tau_to_param(family, t) {
                    Ok(theta) => match FamilySpec::new(family, rot, theta) {
                        Ok(spec) => loglik_of(&spec, u, v),
                        Err(_) => f64::NEG_INFINITY,
                    },
                    Err(_) => f64::NEG_INFINITY,
                }
            };
            let (t_best, ll) = golden_max(eval, lo, hi, 30);
            if let Ok(theta) = tau_to_param(family, t_best) {
                if let Ok(spec) = FamilySpec::new(family, rot, theta) {
                    consider(ParametricFit {
                        spec,
                        loglik: ll,
                        edf: 1,
                    });
                }
            }
        }
    }

    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::copula_mass;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn spec(family: Family, rot: Rotation, theta: f64) -> FamilySpec {
        FamilySpec::new(family, rot, theta).unwrap()
    }

    fn all_test_specs() -> Vec<FamilySpec> {
        let mut specs = vec![
            FamilySpec::independence(),
            spec(Family::Gaussian, Rotation::R0, 0.5),
            spec(Family::Gaussian, Rotation::R0, -0.8),
            FamilySpec::student_t(0.5, 4.0).unwrap(),
            spec(Family::Frank, Rotation::R0, 5.0),
            spec(Family::Frank, Rotation::R0, -3.0),
        ];
        for rot in [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270] {
            specs.push(spec(Family::Clayton, rot, 2.0));
            specs.push(spec(Family::Gumbel, rot, 1.8));
        }
        specs
    }

    #[test]
    fn independence_and_zero_correlation_are_flat() {
        assert_eq!(FamilySpec::independence().pdf(0.3, 0.9), 1.0);
        let g = spec(Family::Gaussian, Rotation::R0, 0.0);
        assert_abs_diff_eq!(g.pdf(0.3, 0.7), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_density_at_median() {
        let g = spec(Family::Gaussian, Rotation::R0, 0.5);
        assert_abs_diff_eq!(g.pdf(0.5, 0.5), 1.0 / 0.75f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn gaussian_h_at_median() {
        let g = spec(Family::Gaussian, Rotation::R0, 0.5);
        assert_abs_diff_eq!(g.hfunc2(0.5, 0.5), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g.hinv2(0.5, 0.5), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn h_boundaries() {
        for s in all_test_specs() {
            for v in [0.2, 0.5, 0.9] {
                assert!(s.hfunc2(1e-12, v) < 1e-6, "{}", s.pdf(1e-12, v));
                assert!(s.hfunc2(1.0 - 1e-12, v) > 1.0 - 1e-6);
            }
        }
    }

    #[test]
    fn h_inverse_round_trips() {
        for s in all_test_specs() {
            for u in [0.05, 0.3, 0.7, 0.95] {
                for v in [0.1, 0.5, 0.9] {
                    let p = s.hfunc2(u, v);
                    if p > 1e-8 && p < 1.0 - 1e-8 {
                        assert_abs_diff_eq!(s.hinv2(p, v), u, epsilon = 1e-7);
                    }
                    let q = s.hfunc1(u, v);
                    if q > 1e-8 && q < 1.0 - 1e-8 {
                        assert_abs_diff_eq!(s.hinv1(u, q), v, epsilon = 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_round_trip_tight() {
        let s = spec(Family::Gaussian, Rotation::R0, 0.8);
        for u in [0.01, 0.25, 0.5, 0.75, 0.99] {
            for v in [0.1, 0.5, 0.9] {
                assert_abs_diff_eq!(s.hinv2(s.hfunc2(u, v), v), u, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        for s in all_test_specs() {
            let mass = copula_mass(|u, v| s.pdf(u, v), 96);
            assert!(
                (mass - 1.0).abs() < 1e-3,
                "{} mass {mass}",
                PairCopula::label(&ParametricFit {
                    spec: s,
                    loglik: 0.0,
                    edf: 0
                })
            );
        }
    }

    #[test]
    fn h_is_integral_of_density() {
        // finite-difference d/du h2(u|v) should equal the density
        let eps = 1e-5;
        for s in all_test_specs() {
            for u in [0.2, 0.5, 0.8] {
                for v in [0.3, 0.6] {
                    let fd = (s.hfunc2(u + eps, v) - s.hfunc2(u - eps, v)) / (2.0 * eps);
                    let d = s.pdf(u, v);
                    assert!(
                        (fd - d).abs() <= 1e-4 * (1.0 + d),
                        "fd {fd} vs pdf {d} at ({u},{v})"
                    );
                }
            }
        }
    }

    #[test]
    fn rotation_consistency() {
        let base = spec(Family::Clayton, Rotation::R0, 2.0);
        let r180 = spec(Family::Clayton, Rotation::R180, 2.0);
        for u in [0.2, 0.6] {
            for v in [0.3, 0.8] {
                assert_abs_diff_eq!(r180.pdf(u, v), base.pdf(1.0 - u, 1.0 - v), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tau_closed_forms() {
        assert_abs_diff_eq!(
            tau_to_param(Family::Gaussian, 0.5).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(tau_to_param(Family::Clayton, 0.5).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tau_to_param(Family::Gumbel, 0.5).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn frank_tau_reference() {
        // high-precision Debye oracle: tau(5) = 0.45670095816...
        assert_abs_diff_eq!(frank_tau(5.0), 0.456700958160117, epsilon = 1e-9);
        assert_abs_diff_eq!(
            frank_theta_from_tau(0.5),
            5.736282707019971,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(frank_tau(-5.0), -0.456700958160117, epsilon = 1e-9);
    }

    #[test]
    fn tau_round_trip_all_families() {
        for family in [Family::Gaussian, Family::Clayton, Family::Gumbel, Family::Frank] {
            for tau in [-0.8f64, -0.4, -0.1, 0.1, 0.45, 0.8] {
                let tau = if matches!(family, Family::Clayton | Family::Gumbel) {
                    tau.abs()
                } else {
                    tau
                };
                let theta = tau_to_param(family, tau).unwrap();
                assert_abs_diff_eq!(param_to_tau(family, theta), tau, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn tau_rejects_boundary() {
        assert!(tau_to_param(Family::Gaussian, 1.0).is_err());
        assert!(tau_to_param(Family::Clayton, -0.3).is_err());
        assert!(tau_to_param(Family::Frank, 0.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(FamilySpec::new(Family::Gaussian, Rotation::R90, 0.5).is_err());
        assert!(FamilySpec::new(Family::Gaussian, Rotation::R0, 1.2).is_err());
        assert!(FamilySpec::new(Family::Clayton, Rotation::R0, -1.0).is_err());
        assert!(FamilySpec::new(Family::Gumbel, Rotation::R0, 0.8).is_err());
        assert!(FamilySpec::new(Family::Frank, Rotation::R0, 0.0).is_err());
        assert!(FamilySpec::student_t(0.5, 1.5).is_err());
    }

    #[test]
    fn t_quantile_round_trip() {
        for nu in [2.5, 3.0, 4.0, 10.0, 25.0] {
            for p in [1e-8, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-6] {
                let x = t_quantile(p, nu);
                let back = t_cdf(x, nu);
                assert!(
                    (back - p).abs() <= 1e-11 * (1.0 + 1.0 / p.min(1.0 - p)).min(1e3),
                    "nu={nu} p={p} back={back}"
                );
            }
        }
    }

    #[test]
    fn sampling_matches_tau() {
        let mut rng = ChaCha12Rng::seed_from_u64(1234);
        let n = 10_000;

        let indep = FamilySpec::independence().sample_pair(n, &mut rng);
        let (u, v): (Vec<f64>, Vec<f64>) = indep.into_iter().unzip();
        assert!(kendalls_tau(&u, &v).unwrap().abs() < 0.03);

        let g = spec(Family::Gaussian, Rotation::R0, std::f64::consts::FRAC_1_SQRT_2);
        let (u, v): (Vec<f64>, Vec<f64>) = g.sample_pair(n, &mut rng).into_iter().unzip();
        assert!((kendalls_tau(&u, &v).unwrap() - 0.5).abs() < 0.03);

        let c = spec(Family::Clayton, Rotation::R0, 2.0);
        let (u, v): (Vec<f64>, Vec<f64>) = c.sample_pair(n, &mut rng).into_iter().unzip();
        assert!((kendalls_tau(&u, &v).unwrap() - 0.5).abs() < 0.03);

        let c90 = spec(Family::Clayton, Rotation::R90, 2.0);
        let (u, v): (Vec<f64>, Vec<f64>) = c90.sample_pair(n, &mut rng).into_iter().unzip();
        assert!((kendalls_tau(&u, &v).unwrap() + 0.5).abs() < 0.03);
    }

    #[test]
    fn selects_independence_on_independent_data() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let runs = 20;
        let mut hits = 0;
        for _ in 0..runs {
            let sample = FamilySpec::independence().sample_pair(2000, &mut rng);
            let (u, v): (Vec<f64>, Vec<f64>) = sample.into_iter().unzip();
            let fit = fit_parametric(&u, &v).unwrap();
            if fit.spec.family == Family::Independence {
                hits += 1;
            }
        }
        assert!(hits * 10 >= runs * 9, "only {hits}/{runs} independence");
    }

    #[test]
    fn recovers_gaussian_parameter() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let truth = spec(Family::Gaussian, Rotation::R0, std::f64::consts::FRAC_1_SQRT_2);
        let runs = 20;
        let mut hits = 0;
        for _ in 0..runs {
            let (u, v): (Vec<f64>, Vec<f64>) = truth.sample_pair(2000, &mut rng).into_iter().unzip();
            let fit = fit_parametric(&u, &v).unwrap();
            if (fit.spec.theta - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.05 {
                hits += 1;
            }
        }
        assert!(hits * 10 >= runs * 9, "only {hits}/{runs} recovered");
    }

    #[test]
    fn detects_lower_tail_dependence() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let truth = spec(Family::Clayton, Rotation::R0, 2.0);
        let runs = 20;
        let mut hits = 0;
        for _ in 0..runs {
            let (u, v): (Vec<f64>, Vec<f64>) = truth.sample_pair(2000, &mut rng).into_iter().unzip();
            let fit = fit_parametric(&u, &v).unwrap();
            let lower_tail = matches!(
                (fit.spec.family, fit.spec.rotation),
                (Family::Clayton, Rotation::R0) | (Family::StudentT, _) | (Family::Gumbel, Rotation::R180)
            );
            if lower_tail {
                hits += 1;
            }
        }
        assert!(hits * 10 >= runs * 8, "only {hits}/{runs} lower-tail");
    }
}
