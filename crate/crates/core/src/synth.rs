//! Synthetic imbalanced classification models on `[-1, 1]^d`.
//!
//! Covariates are uniform on the cube and `Y | X = x` is Bernoulli with
//! mean `mu(x)`. Two shapes of `mu` are offered:
//!
//! * marginal imbalance: `mu(x) = sigmoid(a + 1.5 * sum(x))`;
//! * conditional imbalance: `mu` is close to 0.9 on the box
//!   `L = [0.25, 0.75]^d`, a logistic surface capped at 0.5 away from it, and
//!   the two are blended linearly over a max-norm collar of width 1/8
//!   around `L` so that `mu` stays Lipschitz.
//!
//! The offset `a` is calibrated by bisection so that the prior
//! `P(Y = 1) = E[mu(X)]` (computed by tensor Gauss-Legendre quadrature)
//! matches the scenario.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::dataset::Dataset;
use crate::debias::{g_inv, PriorPair};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

const SLOPE: f64 = 1.5;
const L_LO: f64 = 0.25;
const L_HI: f64 = 0.75;
const C_IN: f64 = 0.9;
const COLLAR: f64 = 0.125;
const CAP_OUT: f64 = 0.5;
const CALIBRATION_TOL: f64 = 1e-3;
const MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Setup {
    MarginalImbalance,
    ConditionalImbalance,
}

impl Setup {
    /// `1` or `2`.
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Setup::MarginalImbalance),
            2 => Ok(Setup::ConditionalImbalance),
            _ => Err(Error::InvalidConfig(format!("setup must be 1 or 2, got {i}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Setup::MarginalImbalance => 1,
            Setup::ConditionalImbalance => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Prior 0.5.
    Balanced,
    /// Prior 0.1.
    Imbalanced,
}

impl Scenario {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Scenario::Balanced),
            2 => Ok(Scenario::Imbalanced),
            _ => Err(Error::InvalidConfig(format!("scenario must be 1 or 2, got {i}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Scenario::Balanced => 1,
            Scenario::Imbalanced => 2,
        }
    }

    pub fn target_p(self) -> f64 {
        match self {
            Scenario::Balanced => 0.5,
            Scenario::Imbalanced => 0.1,
        }
    }
}

/// A calibrated regression function together with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticModel {
    pub setup: Setup,
    pub scenario: Scenario,
    pub d: usize,
    /// Calibrated logistic offset.
    pub offset: f64,
    pub lipschitz_bound: f64,
    /// `(lo, hi)` of the box `L = [lo, hi]^d` for the conditional setup.
    pub region_l: Option<(f64, f64)>,
    pub target_p: f64,
    /// Quadrature prior at the calibrated offset.
    pub prior: f64,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn mu_at(setup: Setup, offset: f64, x: &[f64]) -> f64 {
    let logit = offset + SLOPE * x.iter().sum::<f64>();
    match setup {
        Setup::MarginalImbalance => sigmoid(logit),
        Setup::ConditionalImbalance => {
            let dist = x
                .iter()
                .map(|&v| (L_LO - v).max(v - L_HI).max(0.0))
                .fold(0.0, f64::max);
            let w = (1.0 - dist / COLLAR).clamp(0.0, 1.0);
            w * C_IN + (1.0 - w) * sigmoid(logit).min(CAP_OUT)
        }
    }
}

// 4-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Nodes and weights of a composite rule on [-1, 1], weights summing to 1.
fn axis_rule(d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let panels = match d {
        1 | 2 => 16,
        3 => 8,
        4 => 4,
        5..=MAX_DIM => 1,
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let h = 2.0 / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 4);
    let mut weights = Vec::with_capacity(panels * 4);
    for p in 0..panels {
        let mid = -1.0 + h * (p as f64 + 0.5);
        for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            nodes.push(mid + 0.5 * h * t);
            weights.push(w * 0.25 * h);
        }
    }
    Ok((nodes, weights))
}

/// `E[f(X)]` for `X` uniform on `[-1, 1]^d` by a tensor Gauss-Legendre rule.
pub fn quadrature_mean(d: usize, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let (nodes, weights) = axis_rule(d)?;
    let m = nodes.len();
    let total = m.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    for flat in 0..total {
        let mut rest = flat;
        let mut w = 1.0;
        for xj in x.iter_mut() {
            let k = rest % m;
            rest /= m;
            *xj = nodes[k];
            w *= weights[k];
        }
        acc += w * f(&x);
    }
    Ok(acc)
}

fn prior_for(setup: Setup, d: usize, offset: f64) -> Result<f64> {
    quadrature_mean(d, |x| mu_at(setup, offset, x))
}

/// Builds and calibrates the model for a setup and scenario.
pub fn make_model(setup: Setup, scenario: Scenario, d: usize) -> Result<SyntheticModel> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let target = scenario.target_p();
    let (mut lo, mut hi) = (-30.0, 30.0);
    let (p_lo, p_hi) = (prior_for(setup, d, lo)?, prior_for(setup, d, hi)?);
    if !(p_lo - CALIBRATION_TOL <= target && target <= p_hi + CALIBRATION_TOL) {
        return Err(Error::CalibrationFailed { target });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if prior_for(setup, d, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let offset = 0.5 * (lo + hi);
    let prior = prior_for(setup, d, offset)?;
    if (prior - target).abs() > CALIBRATION_TOL {
        return Err(Error::CalibrationFailed { target });
    }
    let logistic = SLOPE * d as f64 / 4.0;
    let (lipschitz_bound, region_l) = match setup {
        Setup::MarginalImbalance => (logistic, None),
        Setup::ConditionalImbalance => (C_IN / COLLAR + logistic, Some((L_LO, L_HI))),
    };
    Ok(SyntheticModel {
        setup,
        scenario,
        d,
        offset,
        lipschitz_bound,
        region_l,
        target_p: target,
        prior,
    })
}

impl SyntheticModel {
    pub fn mu(&self, x: &[f64]) -> f64 {
        mu_at(self.setup, self.offset, x)
    }

    /// Regression function of the rebalanced model with class-1 prior
    /// `p_star`, taking `p` as the original prior.
    pub fn mu_star(&self, x: &[f64], p: f64, p_star: f64) -> Result<f64> {
        g_inv(self.mu(x), PriorPair::new(p, p_star)?)
    }

    /// `n` i.i.d. draws; covariates first, then the label, per sample.
    pub fn generate(&self, n: usize, rng: &mut RandomStream) -> Result<Dataset> {
        let mut xs = Vec::with_capacity(n * self.d);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let start = xs.len();
            for _ in 0..self.d {
                xs.push(rng.uniform_in(-1.0, 1.0));
            }
            ys.push(u8::from(rng.bernoulli(self.mu(&xs[start..]))));
        }
        Dataset::from_parts(self.d, xs, ys)
    }

    /// `key=value` description used for the `model.txt` sidecar.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "setup={}", self.setup.index());
        let _ = writeln!(out, "scenario={}", self.scenario.index());
        let _ = writeln!(out, "d={}", self.d);
        let _ = writeln!(out, "offset={}", self.offset);
        let _ = writeln!(out, "slope={SLOPE}");
        let _ = writeln!(out, "target_p={}", self.target_p);
        let _ = writeln!(out, "quadrature_prior={}", self.prior);
        let _ = writeln!(out, "lipschitz_bound={}", self.lipschitz_bound);
        if let Some((lo, hi)) = self.region_l {
            let _ = writeln!(out, "region_l={lo},{hi}");
            let _ = writeln!(out, "c_in={C_IN}");
            let _ = writeln!(out, "collar={COLLAR}");
            let _ = writeln!(out, "cap_out={CAP_OUT}");
        }
        out
    }

    pub fn write_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.describe().as_bytes())?;
        Ok(())
    }
}

/// Free-function form of [`SyntheticModel::mu`].
pub fn true_mu(model: &SyntheticModel, x: &[f64]) -> f64 {
    model.mu(x)
}

/// Free-function form of [`SyntheticModel::mu_star`].
pub fn true_mu_star(model: &SyntheticModel, x: &[f64], p: f64, p_star: f64) -> Result<f64> {
    model.mu_star(x, p, p_star)
}

/// Equally spaced tensor grid on `[-1, 1]^d`, endpoints included, first
/// coordinate varying slowest.
pub fn evaluation_grid(d: usize, per_axis: usize) -> Result<Vec<Vec<f64>>> {
    if !(1..=2).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if per_axis < 2 {
        return Err(Error::InvalidConfig(format!("grid needs at least 2 points per axis, got {per_axis}")));
    }
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64)
        .collect();
    Ok(match d {
        1 => axis.iter().map(|&a| vec![a]).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debias::g;

    #[test]
    fn calibrated_priors() {
        for setup in [Setup::MarginalImbalance, Setup::ConditionalImbalance] {
            for scenario in [Scenario::Balanced, Scenario::Imbalanced] {
                let m = make_model(setup, scenario, 2).unwrap();
                assert!((m.prior - scenario.target_p()).abs() < 1e-3, "{setup:?} {scenario:?}: {}", m.prior);
            }
        }
        let m = make_model(Setup::MarginalImbalance, Scenario::Balanced, 2).unwrap();
        assert!(m.offset.abs() < 1e-9);
    }

    #[test]
    fn conditional_shape() {
        let m = make_model(Setup::ConditionalImbalance, Scenario::Imbalanced, 2).unwrap();
        assert!(m.mu(&[0.5, 0.5]) > 0.5);
        for corner in [[-1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]] {
            assert!(m.mu(&corner) < 0.5, "{corner:?}");
        }
    }

    #[test]
    fn quadrature_is_exact_on_polynomials() {
        let v = quadrature_mean(2, |x| x[0] * x[0] * x[1] * x[1]).unwrap();
        assert!((v - 1.0 / 9.0).abs() < 1e-14);
        let v = quadrature_mean(3, |x| x[0].powi(4) + x[2]).unwrap();
        assert!((v - 0.2).abs() < 1e-13, "{v}");
        assert!(quadrature_mean(9, |_| 1.0).is_err());
    }

    #[test]
    fn lipschitz_spot_check() {
        let mut rng = RandomStream::new(3);
        for setup in [Setup::MarginalImbalance, Setup::ConditionalImbalance] {
            let m = make_model(setup, Scenario::Imbalanced, 2).unwrap();
            for _ in 0..10_000 {
                let a = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
                let b = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
                let dist = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
                assert!((m.mu(&a) - m.mu(&b)).abs() <= m.lipschitz_bound * dist + 1e-12);
            }
        }
    }

    #[test]
    fn generated_class_frequencies() {
        let n = 100_000;
        for (scenario, tol) in [(Scenario::Balanced, 0.01), (Scenario::Imbalanced, 0.006)] {
            let m = make_model(Setup::MarginalImbalance, scenario, 2).unwrap();
            let ds = m.generate(n, &mut RandomStream::new(11)).unwrap();
            let freq = ds.n1() as f64 / n as f64;
            assert!((freq - scenario.target_p()).abs() < tol, "{scenario:?}: {freq}");
        }
        let m = make_model(Setup::MarginalImbalance, Scenario::Balanced, 2).unwrap();
        let ds = m.generate(1, &mut RandomStream::new(0)).unwrap();
        assert_eq!(ds.len(), 1);
        assert!(ds.x(0).iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn monte_carlo_prior_agrees_with_quadrature() {
        let m = make_model(Setup::ConditionalImbalance, Scenario::Imbalanced, 2).unwrap();
        let mut rng = RandomStream::new(5);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| m.mu(&[rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)]))
            .sum::<f64>()
            / n as f64;
        // sd of mu(X) is below 0.5.
        assert!((mean - m.prior).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn mu_star_duality() {
        let m = make_model(Setup::MarginalImbalance, Scenario::Imbalanced, 2).unwrap();
        let priors = PriorPair::new(0.1, 0.5).unwrap();
        for x in evaluation_grid(2, 21).unwrap() {
            let ms = m.mu_star(&x, 0.1, 0.5).unwrap();
            assert!((g(ms, priors).unwrap() - m.mu(&x)).abs() < 1e-12);
            assert!((m.mu_star(&x, 0.3, 0.3).unwrap() - m.mu(&x)).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_examples() {
        assert_eq!(evaluation_grid(1, 3).unwrap(), vec![vec![-1.0], vec![0.0], vec![1.0]]);
        assert_eq!(evaluation_grid(2, 100).unwrap().len(), 10_000);
        let corners = evaluation_grid(2, 2).unwrap();
        assert_eq!(corners, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert!(matches!(evaluation_grid(3, 4), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn sidecar_lists_parameters() {
        let m = make_model(Setup::ConditionalImbalance, Scenario::Balanced, 2).unwrap();
        let text = m.describe();
        assert!(text.contains("setup=2\n"));
        assert!(text.contains("region_l=0.25,0.75\n"));
        assert!(text.lines().all(|l| l.contains('=')));
    }
}
