//! Odds-ratio correction between the original and the rebalanced model.
//!
//! Under-sampling keeps the class-conditional covariate laws and moves the
//! class-1 prior from `p` to `p_star`, so the odds of the two regression
//! functions differ by the constant factor `[p/(1-p)] / [p*/(1-p*)]`.
//! [`g`] maps the rebalanced regression function back to the original one,
//! [`g_inv`] goes the other way and [`g_n`] is the plug-in version built
//! from class and subsample counts.
//!
//! All maps are evaluated through their closed rational forms, so the
//! endpoints `z = 0` and `z = 1` are fixed points without going through
//! infinite odds. Inputs outside `[0, 1]` are rejected, never clipped.

use crate::error::{Error, Result};

/// Class-1 priors of the original (`p`) and rebalanced (`p_star`) models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorPair {
    pub p: f64,
    pub p_star: f64,
}

impl PriorPair {
    pub fn new(p: f64, p_star: f64) -> Result<Self> {
        for v in [p, p_star] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidPrior(v));
            }
        }
        Ok(Self { p, p_star })
    }

    /// `(1-p*) p`, the weight on `z` in `g`.
    pub(crate) fn a(&self) -> f64 {
        (1.0 - self.p_star) * self.p
    }

    /// `p* (1-p)`, the weight on `1-z` in `g`.
    pub(crate) fn b(&self) -> f64 {
        self.p_star * (1.0 - self.p)
    }
}

/// Class and subsample sizes feeding the plug-in correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmpiricalPriors {
    pub n0: usize,
    pub n1: usize,
    pub s0: usize,
    pub s1: usize,
}

impl EmpiricalPriors {
    pub fn new(n0: usize, n1: usize, s0: usize, s1: usize) -> Result<Self> {
        if n0 == 0 || n1 == 0 || s0 == 0 || s1 == 0 {
            return Err(Error::InvalidConfig(format!(
                "empirical priors need positive counts, got n0={n0} n1={n1} s0={s0} s1={s1}"
            )));
        }
        Ok(Self { n0, n1, s0, s1 })
    }

    /// `(p_hat, p_star_hat) = (n1/(n0+n1), s1/(s0+s1))`.
    pub fn priors(&self) -> PriorPair {
        PriorPair {
            p: self.n1 as f64 / (self.n0 + self.n1) as f64,
            p_star: self.s1 as f64 / (self.s0 + self.s1) as f64,
        }
    }
}

pub(crate) fn check_unit(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::OutOfUnitInterval(z))
    }
}

/// `z / (1 - z)` for `z` in `[0, 1)`.
pub fn odds(z: f64) -> Result<f64> {
    check_unit(z)?;
    if z == 1.0 {
        return Err(Error::OddsAtOne);
    }
    Ok(z / (1.0 - z))
}

/// Density ratio `R(x, p) = [p/(1-p)] / [mu/(1-mu)]` at a point whose
/// regression value is `mu`.
pub fn odds_ratio(mu: f64, p: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::DegenerateMu(mu));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidPrior(p));
    }
    Ok(p / (1.0 - p) * (1.0 - mu) / mu)
}

/// Maps the rebalanced regression value back to the original model.
pub fn g(z: f64, priors: PriorPair) -> Result<f64> {
    check_unit(z)?;
    let (a, b) = (priors.a(), priors.b());
    Ok(a * z / (b * (1.0 - z) + a * z))
}

/// Maps an original-model regression value to the rebalanced model.
pub fn g_inv(z: f64, priors: PriorPair) -> Result<f64> {
    check_unit(z)?;
    let (a, b) = (priors.a(), priors.b());
    Ok(b * z / (a * (1.0 - z) + b * z))
}

/// Plug-in correction `n1 s0 z / (n0 s1 (1-z) + n1 s0 z)`.
pub fn g_n(z: f64, emp: EmpiricalPriors) -> Result<f64> {
    check_unit(z)?;
    let up = (emp.n1 * emp.s0) as f64;
    let down = (emp.n0 * emp.s1) as f64;
    Ok(up * z / (down * (1.0 - z) + up * z))
}

/// Derivative of [`g`] at `z`.
pub fn g_prime(z: f64, priors: PriorPair) -> Result<f64> {
    check_unit(z)?;
    let (a, b) = (priors.a(), priors.b());
    let den = b * (1.0 - z) + a * z;
    Ok(a * b / (den * den))
}
