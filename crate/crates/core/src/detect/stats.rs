use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const DEFAULT_KAPPA: f64 = 0.05;
pub const DEFAULT_LAMBDA: f64 = 0.05;

/// Margin `kappa`, significance `lambda_` and clean flag rate `p_c` of the
/// one-sided excess-watermark test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub kappa: f64,
    pub lambda_: f64,
    pub p_c: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { kappa: DEFAULT_KAPPA, lambda_: DEFAULT_LAMBDA, p_c: 0.0 }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::spec("kappa", format!("must be in (0, 1), got {}", self.kappa)));
        }
        if !(self.lambda_ > 0.0 && self.lambda_ < 1.0) {
            return Err(Error::spec("lambda_", format!("must be in (0, 1), got {}", self.lambda_)));
        }
        if !(0.0..1.0).contains(&self.p_c) {
            return Err(Error::spec("p_c", format!("must be in [0, 1), got {}", self.p_c)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub reject_h0: bool,
}

const CF_MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        for aa in [m * (b - m) * x / ((qam + m2) * (a + m2)), -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))] {
            d = 1.0 + aa * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = 1.0 + aa / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Student-t CDF.
pub fn t_cdf(t: f64, dof: u64) -> f64 {
    let nu = dof as f64;
    let tail = 0.5 * beta_reg(nu / 2.0, 0.5, nu / (nu + t * t));
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse CDF of Student's t with `dof` degrees of freedom.
///
/// Solves `I_y(1/2, dof/2) = |2p - 1|` for `y = t^2 / (dof + t^2)` by
/// bisection, which keeps full relative precision near `p = 1/2` and in
/// the far tails.
pub fn t_quantile(p: f64, dof: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level {p} outside (0, 1)")));
    }
    if dof == 0 {
        return Err(Error::Domain("t distribution needs at least one degree of freedom".into()));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let nu = dof as f64;
    let target = (2.0 * p - 1.0).abs();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(0.5, nu / 2.0, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    let t = (nu * y / (1.0 - y)).sqrt();
    Ok(if p > 0.5 { t } else { -t })
}

/// `sqrt(N-1) (P_u - P_c - kappa) - t_{1-lambda, N-1} sqrt(P_u - P_u^2)`;
/// the null of no excess watermarking is rejected when it is positive.
pub fn hypothesis_test(p_u: f64, n: usize, cfg: &TestConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::Domain(format!("hypothesis test needs N >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&p_u) {
        return Err(Error::Domain(format!("detection ratio {p_u} outside [0, 1]")));
    }
    let first = ((n - 1) as f64).sqrt() * (p_u - cfg.p_c - cfg.kappa);
    let spread = p_u - p_u * p_u;
    let second = if spread > 0.0 { t_quantile(1.0 - cfg.lambda_, (n - 1) as u64)? * spread.sqrt() } else { 0.0 };
    let statistic = first - second;
    Ok(TestOutcome { statistic, reject_h0: statistic > 0.0 })
}
