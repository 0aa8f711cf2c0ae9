use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use super::config::{Estimator, ExperimentConfig};
use super::mc::{draw_dataset, evaluate_all, stratified_sizes};
use super::{resolve_s, with_pool};
use crate::debias::{g_inv, PriorPair};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::synth::make_model;
use crate::theory::{clt_var_is, clt_var_sub, clt_var_under};

/// One-sample Kolmogorov-Smirnov distance to the standard normal.
pub fn ks_one_sample_normal(samples: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &z)| {
        let f = normal.cdf(z);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS critical value for `alpha` in {0.01, 0.05}; `m` is the
/// second sample size for the two-sample test.
pub fn ks_critical(alpha: f64, n: usize, m: Option<usize>) -> Result<f64> {
    let c = if (alpha - 0.01).abs() < 1e-12 {
        1.63
    } else if (alpha - 0.05).abs() < 1e-12 {
        1.36
    } else {
        return Err(Error::InvalidConfig(format!("no KS critical value for alpha = {alpha}")));
    };
    let eff = match m {
        None => n as f64,
        Some(m) => (n * m) as f64 / (n + m) as f64,
    };
    Ok(c / eff.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltRow {
    pub estimator: Estimator,
    pub n: usize,
    pub probe: Vec<f64>,
    /// `sqrt(2n/s) (estimate - target) / sqrt(limit variance)` per rep.
    pub standardized: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Per-rep target (`mu` or `mu*` at the rep's rebalanced prior).
    pub targets: Vec<f64>,
    pub ks: f64,
    pub coverage95: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub rows: Vec<CltRow>,
    pub redraws: usize,
}

pub const CLT_HEADER: &str = "estimator,n,probe_x1,probe_x2,ks,coverage95,mean,sd";

impl CltReport {
    pub fn row(&self, e: Estimator, n: usize, probe: &[f64]) -> Option<&CltRow> {
        self.rows.iter().find(|r| r.estimator == e && r.n == n && r.probe == probe)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CLT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let x2 = r.probe.get(1).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.estimator, r.n, r.probe[0], x2, r.ks, r.coverage95, r.mean, r.sd
            );
        }
        out
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// `(standardized value, target)` for one estimate.
#[allow(clippy::too_many_arguments)]
fn standardize(
    e: Estimator,
    est: f64,
    mu: f64,
    p: f64,
    n: usize,
    s: usize,
    s0: usize,
    s1: usize,
) -> Result<(f64, f64)> {
    let priors = PriorPair::new(p, s1 as f64 / (s0 + s1) as f64)?;
    let (target, var, size) = match e {
        Estimator::NnSub => (mu, clt_var_sub(mu), s),
        Estimator::NnUnder => {
            let ms = g_inv(mu, priors)?;
            (ms, clt_var_under(ms, priors), s0 + s1)
        }
        Estimator::NnIs => (mu, clt_var_is(mu, priors), s0 + s1),
        other => {
            return Err(Error::InvalidConfig(format!("no limit variance available for {other}")));
        }
    };
    if var.is_nan() || var <= 0.0 {
        return Err(Error::ZeroTheoryVariance(mu));
    }
    Ok(((2.0 * n as f64 / size as f64).sqrt() * (est - target) / var.sqrt(), target))
}

/// Standardized estimates at every probe point, with KS distance to the
/// standard normal and 95% coverage. Only the 1-NN estimators have a
/// closed-form limit variance.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<CltReport> {
    cfg.validate()?;
    if cfg.probe_points.is_empty() {
        return Err(Error::InvalidConfig("no probe points".into()));
    }
    if let Some(e) = cfg.estimators.iter().find(|e| e.is_forest()) {
        return Err(Error::InvalidConfig(format!("no limit variance available for {e}")));
    }
    let model = make_model(cfg.setup, cfg.scenario, cfg.d)?;
    let mus: Vec<f64> = cfg.probe_points.iter().map(|x| model.mu(x)).collect();
    if let Some(&m) = mus.iter().find(|&&m| m <= 0.0 || m >= 1.0) {
        return Err(Error::ZeroTheoryVariance(m));
    }
    let root = RandomStream::new(cfg.seed).derive("clt", 0);
    let mut rows = Vec::new();
    let mut redraws = 0;
    for &n in &cfg.n_list {
        let stream_n = root.derive("n", n as u64);
        let per_rep = with_pool(cfg.threads, || {
            (0..cfg.reps)
                .into_par_iter()
                .map(|r| {
                    let rep = stream_n.derive("rep", r as u64);
                    let (ds, redrawn) = draw_dataset(&model, n, &rep)?;
                    let values = evaluate_all(&cfg.estimators, &cfg.probe_points, &ds, cfg, &rep.derive("est", 0))?;
                    let s = resolve_s(n, cfg.s_rule);
                    let (s0, s1) = stratified_sizes(cfg, ds.n0(), ds.n1());
                    let mut out = Vec::with_capacity(values.len());
                    for (&e, vals) in cfg.estimators.iter().zip(&values) {
                        let z: Vec<(f64, f64, f64)> = vals
                            .iter()
                            .zip(&mus)
                            .map(|(&v, &mu)| standardize(e, v, mu, model.prior, n, s, s0, s1).map(|(z, t)| (z, v, t)))
                            .collect::<Result<_>>()?;
                        out.push(z);
                    }
                    Ok((out, redrawn))
                })
                .collect::<Result<Vec<_>>>()
        })??;
        for (k, &e) in cfg.estimators.iter().enumerate() {
            for (j, probe) in cfg.probe_points.iter().enumerate() {
                let standardized: Vec<f64> = per_rep.iter().map(|(o, _)| o[k][j].0).collect();
                let estimates = per_rep.iter().map(|(o, _)| o[k][j].1).collect();
                let targets = per_rep.iter().map(|(o, _)| o[k][j].2).collect();
                let (mean, sd) = mean_sd(&standardized);
                let coverage95 =
                    standardized.iter().filter(|z| z.abs() <= 1.96).count() as f64 / standardized.len() as f64;
                rows.push(CltRow {
                    estimator: e,
                    n,
                    probe: probe.clone(),
                    ks: ks_one_sample_normal(&standardized),
                    standardized,
                    estimates,
                    targets,
                    coverage95,
                    mean,
                    sd,
                });
            }
        }
        redraws += per_rep.iter().map(|(_, r)| r).sum::<usize>();
    }
    Ok(CltReport { rows, redraws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ks_calibration_on_normal_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_one_sample_normal(&z) < ks_critical(0.01, 500, None).unwrap());
        let w: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_two_sample(&z, &w) < ks_critical(0.01, 500, Some(500)).unwrap());
        let shifted: Vec<f64> = w.iter().map(|v| v + 1.0).collect();
        assert!(ks_two_sample(&z, &shifted) > ks_critical(0.01, 500, Some(500)).unwrap());
        let wide: Vec<f64> = z.iter().map(|v| 3.0 * v).collect();
        assert!(ks_one_sample_normal(&wide) > ks_critical(0.01, 500, None).unwrap());
    }

    #[test]
    fn ks_hand_values() {
        assert!((ks_one_sample_normal(&[0.0]) - 0.5).abs() < 1e-12);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_critical(0.05, 100, None).unwrap() - 0.136).abs() < 1e-12);
        assert!(ks_critical(0.1, 100, None).is_err());
    }

    #[test]
    fn standardization_errors() {
        assert!(matches!(
            standardize(Estimator::NnSub, 0.5, 0.0, 0.1, 100, 10, 3, 3),
            Err(Error::ZeroTheoryVariance(_))
        ));
        assert!(standardize(Estimator::IrfSub, 0.5, 0.3, 0.1, 100, 10, 3, 3).is_err());
        let (z, t) = standardize(Estimator::NnSub, 0.6, 0.5, 0.5, 200, 50, 1, 1).unwrap();
        assert_eq!(t, 0.5);
        assert!((z - 8f64.sqrt() * 0.1 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_run_shapes() {
        let cfg = ExperimentConfig {
            n_list: vec![200],
            reps: 8,
            b: 0,
            estimators: vec![Estimator::NnSub, Estimator::NnUnder],
            ..ExperimentConfig::default()
        };
        let rep = run_clt(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.rows.iter().all(|r| r.standardized.len() == 8));
        let csv = rep.to_csv();
        assert!(csv.starts_with(CLT_HEADER));
        assert!(csv.lines().nth(1).unwrap().starts_with("nn_sub,200,0.25,0.25,"));
        let forest = ExperimentConfig { estimators: vec![Estimator::IrfSub], ..cfg };
        assert!(run_clt(&forest).is_err());
    }
}
