//! Leading-order asymptotic variances of the subsampling, under-sampling and
//! importance-sampling ensembles.
//!
//! Remainder terms of order `s^{-1/d}` relative to the leading term are
//! dropped. The `clt_var_*` functions return the variance of the limit law
//! of `sqrt(2n/s) * (estimate - target)`; for the under-sampling schemes
//! `s = s0 + s1`.

use crate::debias::{check_unit, g_inv, PriorPair};
use crate::error::Result;

/// Inputs shared by the closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryInputs {
    pub mu: f64,
    pub mu_star: f64,
    pub priors: PriorPair,
    pub n: usize,
    pub s: usize,
    pub s0: usize,
    pub s1: usize,
}

impl TheoryInputs {
    /// Fills `mu_star = g_inv(mu)`.
    pub fn new(mu: f64, priors: PriorPair, n: usize, s: usize, s0: usize, s1: usize) -> Result<Self> {
        Ok(Self { mu, mu_star: g_inv(mu, priors)?, priors, n, s, s0, s1 })
    }
}

/// Variance of the first Hajek kernel of the bagged 1-NN, `mu(1-mu)/(2s)`.
pub fn v1s_approx(mu: f64, s: usize) -> f64 {
    mu * (1.0 - mu) / (2.0 * s as f64)
}

/// Kernel variances `(V_{1,0}, V_{1,1})` of the under-sampling bagged 1-NN.
pub fn v10_v11_approx(mu_star: f64, p_star: f64, s: usize) -> (f64, f64) {
    let s = s as f64;
    let v10 = mu_star * mu_star * (1.0 - mu_star) / (2.0 * (1.0 - p_star) * s);
    let v11 = mu_star * (1.0 - mu_star) * (1.0 - mu_star) / (2.0 * p_star * s);
    (v10, v11)
}

/// Limit variance for the subsampling bagged 1-NN: `mu(1-mu)`.
pub fn clt_var_sub(mu: f64) -> f64 {
    mu * (1.0 - mu)
}

/// Limit variance for the under-sampling bagged 1-NN around `mu_star`.
pub fn clt_var_under(mu_star: f64, priors: PriorPair) -> f64 {
    let PriorPair { p, p_star } = priors;
    mu_star
        * (1.0 - mu_star)
        * ((1.0 - p_star) * mu_star / (1.0 - p) + p_star * (1.0 - mu_star) / p)
}

/// Squared slope of the importance map at `z`,
/// `(p p*(1-p*)(1-p))^2 / ((1-p) p* (1-z) + p (1-p*) z)^4`.
pub fn is_delta_factor(z: f64, priors: PriorPair) -> f64 {
    let PriorPair { p, p_star } = priors;
    let num = p * p_star * (1.0 - p_star) * (1.0 - p);
    let den = (1.0 - p) * p_star * (1.0 - z) + p * (1.0 - p_star) * z;
    (num * num) / den.powi(4)
}

/// Delta-method variance factor of the importance-sampling ensemble at a
/// point with original regression value `mu`.
///
/// The slope of the importance map is taken where the under-sampling
/// ensemble concentrates, at `mu_star = g_inv(mu)`. There
/// `g'(mu_star) = D^2 / (a b)` with `D = a + (b - a) mu`, which is exactly 1
/// when the priors coincide.
pub fn v_star(mu: f64, priors: PriorPair) -> Result<f64> {
    check_unit(mu)?;
    let (a, b) = (priors.a(), priors.b());
    let d = a + (b - a) * mu;
    let slope = d * d / (a * b);
    Ok(slope * slope)
}

/// Limit variance for the importance-sampling bagged 1-NN around `mu`:
/// `mu(1-mu) ((1-p*) p (1-mu) + p* (1-p) mu) / (p(1-p))`.
pub fn clt_var_is(mu: f64, priors: PriorPair) -> f64 {
    let PriorPair { p, p_star } = priors;
    let mix = (1.0 - p_star) * p * (1.0 - mu) + p_star * (1.0 - p) * mu;
    mu * (1.0 - mu) * mix / (p * (1.0 - p))
}

/// Variance of the centered Hajek projection of a subsampling ensemble.
pub fn hajek_var_sub(v1s: f64, n: usize, s: usize) -> f64 {
    let s = s as f64;
    s * s * v1s / n as f64
}

/// Variance of the centered Hajek projection of an under-sampling ensemble.
pub fn hajek_var_under(v10: f64, v11: f64, n0: usize, n1: usize, s0: usize, s1: usize) -> f64 {
    let (s0, s1) = (s0 as f64, s1 as f64);
    s0 * s0 * v10 / n0 as f64 + s1 * s1 * v11 / n1 as f64
}
