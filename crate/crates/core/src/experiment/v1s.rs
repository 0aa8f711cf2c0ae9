//! Nested Monte Carlo estimate of `V1s = Var(E[T | Z1])` for the 1-NN
//! kernel `T` of a size-`s` subsample at a probe point.
//!
//! The outer loop draws the first observation `Z1 = (X1, Y1)`, the inner
//! loop averages the kernel over `K` completions of the remaining `s - 1`
//! observations, and the variance of the inner means is corrected for the
//! inner Monte Carlo noise by subtracting the mean inner variance over `K`.
//!
//! Only a first observation landing near the probe can change the kernel,
//! so the plain estimator wastes most outer draws. [`V1sMethod::Localized`]
//! draws half of the `X1` from a box of volume about `8/s` around the probe
//! and reweights, and replaces each completion label by its conditional
//! mean `mu(X)`; the 1-NN kernel is linear in the labels given the
//! covariates, so this leaves `E[T | Z1]` unchanged.

use rayon::prelude::*;

use super::with_pool;
use crate::error::{Error, Result};
use crate::nn::max_dist;
use crate::rng::RandomStream;
use crate::synth::SyntheticModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum V1sMethod {
    Plain,
    Localized,
}

/// Kernel whose first-observation variance is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum V1sLearner {
    /// Label of the nearest of all `s` points.
    OneNn,
    /// Label of the nearest of the `s - 1` completion points; ignores `Z1`.
    LeaveFirstOut,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct V1sEstimate {
    pub value: f64,
    /// Monte Carlo standard error over the outer draws.
    pub se: f64,
}

struct Outer {
    weight: f64,
    mean: f64,
    var: f64,
}

#[allow(clippy::too_many_arguments)]
fn outer_draw(
    model: &SyntheticModel,
    probe: &[f64],
    s: usize,
    k_inner: usize,
    method: V1sMethod,
    learner: V1sLearner,
    half_width: f64,
    rng: &mut RandomStream,
) -> Outer {
    let d = probe.len();
    let mut x1 = vec![0.0; d];
    let mut weight = 1.0;
    match method {
        V1sMethod::Plain => x1.iter_mut().for_each(|v| *v = rng.uniform_in(-1.0, 1.0)),
        V1sMethod::Localized => {
            let lo: Vec<f64> = probe.iter().map(|c| (c - half_width).max(-1.0)).collect();
            let hi: Vec<f64> = probe.iter().map(|c| (c + half_width).min(1.0)).collect();
            if rng.bernoulli(0.5) {
                x1.iter_mut().for_each(|v| *v = rng.uniform_in(-1.0, 1.0));
            } else {
                for ((v, l), h) in x1.iter_mut().zip(&lo).zip(&hi) {
                    *v = rng.uniform_in(*l, *h);
                }
            }
            let cube = 2f64.powi(d as i32);
            let vol: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
            let inside = x1.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| l <= v && v <= h);
            let q = 0.5 / cube + if inside { 0.5 / vol } else { 0.0 };
            weight = 1.0 / (cube * q);
        }
    }
    let y1 = f64::from(u8::from(rng.bernoulli(model.mu(&x1))));
    let d1 = max_dist(probe, &x1);
    let mut point = vec![0.0; d];
    let mut nearest = vec![0.0; d];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..k_inner {
        let mut dmin = f64::INFINITY;
        for _ in 1..s {
            point.iter_mut().for_each(|v| *v = rng.uniform_in(-1.0, 1.0));
            let dist = max_dist(probe, &point);
            if dist < dmin {
                dmin = dist;
                nearest.copy_from_slice(&point);
            }
        }
        let f = match (learner, method) {
            (V1sLearner::OneNn, _) if d1 < dmin => y1,
            (V1sLearner::LeaveFirstOut, _) if s == 1 => 0.0,
            (_, V1sMethod::Plain) => f64::from(u8::from(rng.bernoulli(model.mu(&nearest)))),
            (_, V1sMethod::Localized) => model.mu(&nearest),
        };
        sum += f;
        sum2 += f * f;
    }
    let k = k_inner as f64;
    let mean = sum / k;
    Outer { weight, mean, var: ((sum2 - k * mean * mean) / (k - 1.0)).max(0.0) }
}

/// Bias-corrected nested Monte Carlo estimate of `V1s` at `probe`.
/// Outer draw `j` uses `rng.derive("outer", j)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_v1s(
    model: &SyntheticModel,
    s: usize,
    m_outer: usize,
    k_inner: usize,
    probe: &[f64],
    method: V1sMethod,
    learner: V1sLearner,
    rng: &RandomStream,
    threads: usize,
) -> Result<V1sEstimate> {
    if m_outer < 2 || k_inner < 2 || s == 0 {
        return Err(Error::InvalidConfig("need s >= 1 and at least 2 outer and inner draws".into()));
    }
    if probe.len() != model.d {
        return Err(Error::DimensionMismatch { expected: model.d, got: probe.len() });
    }
    let half_width = (8.0 / s as f64).powf(1.0 / model.d as f64).min(1.0);
    let outs: Vec<Outer> = with_pool(threads, || {
        (0..m_outer)
            .into_par_iter()
            .map(|j| {
                let mut stream = rng.derive("outer", j as u64);
                outer_draw(model, probe, s, k_inner, method, learner, half_width, &mut stream)
            })
            .collect()
    })?;
    let m = m_outer as f64;
    let k = k_inner as f64;
    let sw: f64 = outs.iter().map(|o| o.weight).sum();
    let center = outs.iter().map(|o| o.weight * o.mean).sum::<f64>() / sw;
    // finite-sample correction of the between-means variance
    let scale = match method {
        V1sMethod::Plain => m / (m - 1.0),
        V1sMethod::Localized => 1.0,
    };
    let terms: Vec<f64> = outs
        .iter()
        .map(|o| o.weight * m / sw * (scale * (o.mean - center).powi(2) - o.var / k))
        .collect();
    let value = terms.iter().sum::<f64>() / m;
    let sd = (terms.iter().map(|t| (t - value).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    Ok(V1sEstimate { value, se: sd / m.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_model, Scenario, Setup};
    use crate::theory::v1s_approx;

    fn model() -> SyntheticModel {
        make_model(Setup::MarginalImbalance, Scenario::Balanced, 2).unwrap()
    }

    #[test]
    fn learner_ignoring_first_point_has_zero_variance() {
        let m = model();
        for method in [V1sMethod::Plain, V1sMethod::Localized] {
            let e = estimate_v1s(&m, 20, 400, 50, &[0.0, 0.0], method, V1sLearner::LeaveFirstOut, &RandomStream::new(1), 1)
                .unwrap();
            assert!(e.value.abs() < 3.0 * e.se, "{method:?}: {} +- {}", e.value, e.se);
        }
    }

    #[test]
    fn plain_and_localized_agree_at_small_s() {
        let m = model();
        let probe = [0.0, 0.0];
        let a = estimate_v1s(&m, 10, 4000, 40, &probe, V1sMethod::Plain, V1sLearner::OneNn, &RandomStream::new(2), 1).unwrap();
        let b = estimate_v1s(&m, 10, 4000, 40, &probe, V1sMethod::Localized, V1sLearner::OneNn, &RandomStream::new(3), 1)
            .unwrap();
        let tol = 3.0 * (a.se.powi(2) + b.se.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < tol, "{a:?} vs {b:?}");
        assert!((b.value / v1s_approx(0.5, 10) - 1.0).abs() < 0.5);
    }

    #[test]
    fn rejects_bad_sizes() {
        let m = model();
        let r = RandomStream::new(0);
        assert!(estimate_v1s(&m, 10, 1, 10, &[0.0, 0.0], V1sMethod::Plain, V1sLearner::OneNn, &r, 1).is_err());
        assert!(estimate_v1s(&m, 10, 10, 10, &[0.0], V1sMethod::Plain, V1sLearner::OneNn, &r, 1).is_err());
    }
}
