use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Estimator, ExperimentConfig, Target};
use super::{resolve_s, with_pool};
use crate::dataset::Dataset;
use crate::debias::{g_inv, PriorPair};
use crate::error::{Error, Result};
use crate::forest::{exact_irf_sub, exact_irf_under, irf_sub_batch, irf_under_batch, Partitioner};
use crate::nn::{alg2_sizes, bagged_sub_1nn_batch, bagged_under_1nn_batch, debias_under, exact_sub_1nn, exact_under_1nn};
use crate::rng::RandomStream;
use crate::synth::{evaluation_grid, make_model, SyntheticModel};

const MAX_REDRAWS: usize = 100;
const CHUNK: usize = 32;

/// Draws a dataset with both classes present, retrying up to 100 times.
/// Returns the dataset and the number of redraws.
pub(crate) fn draw_dataset(model: &SyntheticModel, n: usize, rep: &RandomStream) -> Result<(Dataset, usize)> {
    for attempt in 0..MAX_REDRAWS {
        let ds = model.generate(n, &mut rep.derive("data", attempt as u64))?;
        if ds.n0() > 0 && ds.n1() > 0 {
            return Ok((ds, attempt));
        }
    }
    Err(Error::RedrawLimit(MAX_REDRAWS))
}

/// `(s0, s1)` for the stratified estimators on a dataset with class sizes
/// `(n0, n1)`.
pub(crate) fn stratified_sizes(cfg: &ExperimentConfig, n0: usize, n1: usize) -> (usize, usize) {
    match cfg.under_split {
        None => {
            let (_, s0, s1) = alg2_sizes(n0, n1);
            (s0, s1)
        }
        Some(share) => {
            let s = resolve_s(n0 + n1, cfg.s_rule);
            let s1 = ((share * s as f64).round() as usize).clamp(1, n1);
            let s0 = s.saturating_sub(s1).clamp(1, n0);
            (s0, s1)
        }
    }
}

/// Class sizes at the exact model prior, used to label output rows.
pub(crate) fn nominal_classes(model: &SyntheticModel, n: usize) -> (usize, usize) {
    let n1 = ((model.target_p * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    (n - n1, n1)
}

/// Estimates at `points` for every estimator in `ests` on one dataset.
/// Under-sampling and importance-sampling variants share the same
/// ensemble, drawn from `stream.derive("nn_under", 0)` or
/// `stream.derive("irf_under", 0)`.
pub(crate) fn evaluate_all(
    ests: &[Estimator],
    points: &[Vec<f64>],
    ds: &Dataset,
    cfg: &ExperimentConfig,
    stream: &RandomStream,
) -> Result<Vec<Vec<f64>>> {
    let s = resolve_s(ds.len(), cfg.s_rule);
    let (s0, s1) = stratified_sizes(cfg, ds.n0(), ds.n1());
    let b = cfg.b;
    let part = cfg.partitioner;
    let need = |a: Estimator, c: Estimator| ests.contains(&a) || ests.contains(&c);
    let nn_under = if need(Estimator::NnUnder, Estimator::NnIs) {
        let rng = stream.derive("nn_under", 0);
        Some(if b == 0 {
            points.iter().map(|x| exact_under_1nn(x, ds, s0, s1)).collect::<Result<Vec<_>>>()?
        } else {
            bagged_under_1nn_batch(points, ds, s0, s1, b, &rng)?
        })
    } else {
        None
    };
    let irf_under = if need(Estimator::IrfUnder, Estimator::IrfIs) {
        let rng = stream.derive("irf_under", 0);
        Some(if b == 0 {
            exact_forest(part)?;
            points.iter().map(|x| exact_irf_under(x, ds, s0, s1, part)).collect::<Result<Vec<_>>>()?
        } else {
            irf_under_batch(points, ds, s0, s1, b, part, &rng)?
        })
    } else {
        None
    };
    let debias = |v: &[f64]| v.iter().map(|&z| debias_under(z, ds, s0, s1)).collect::<Result<Vec<_>>>();
    ests.iter()
        .map(|&e| match e {
            Estimator::NnSub => {
                if b == 0 {
                    points.iter().map(|x| exact_sub_1nn(x, ds, s)).collect()
                } else {
                    bagged_sub_1nn_batch(points, ds, s, b, &stream.derive("nn_sub", 0))
                }
            }
            Estimator::IrfSub => {
                if b == 0 {
                    exact_forest(part)?;
                    points.iter().map(|x| exact_irf_sub(x, ds, s, part)).collect()
                } else {
                    irf_sub_batch(points, ds, s, b, part, &stream.derive("irf_sub", 0))
                }
            }
            Estimator::NnUnder => Ok(nn_under.clone().unwrap_or_default()),
            Estimator::NnIs => debias(nn_under.as_deref().unwrap_or_default()),
            Estimator::IrfUnder => Ok(irf_under.clone().unwrap_or_default()),
            Estimator::IrfIs => debias(irf_under.as_deref().unwrap_or_default()),
        })
        .collect()
}

fn exact_forest(part: Partitioner) -> Result<()> {
    match part {
        Partitioner::Grid { .. } => Ok(()),
        Partitioner::RandomSplit(_) => Err(Error::InvalidConfig(
            "B = 0 for forests needs a grid partition (random trees have no closed form)".into(),
        )),
    }
}

/// Grid-averaged squared bias, variance and their sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub bias2: f64,
    pub variance: f64,
    pub mise: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McRow {
    pub estimator: Estimator,
    pub n: usize,
    pub s: usize,
    pub s0: Option<usize>,
    pub s1: Option<usize>,
    /// Errors measured against the estimator's own target.
    pub stats: Stats,
    /// For the stratified estimators, errors measured against the other
    /// function (`mu` for the under-sampling ones, `mu*` for the
    /// importance-sampling ones).
    pub swapped: Option<Stats>,
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McSummary {
    pub rows: Vec<McRow>,
    /// Datasets redrawn because a class was empty.
    pub redraws: usize,
}

pub const MC_HEADER: &str = "estimator,n,s,s0,s1,bias2,variance,mise";

impl McSummary {
    pub fn row(&self, e: Estimator, n: usize) -> Option<&McRow> {
        self.rows.iter().find(|r| r.estimator == e && r.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(MC_HEADER);
        out.push('\n');
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.estimator,
                r.n,
                r.s,
                opt(r.s0),
                opt(r.s1),
                r.stats.bias2,
                r.stats.variance,
                r.stats.mise
            );
        }
        out
    }
}

struct Accum {
    sum: Vec<f64>,
    sum2: Vec<f64>,
}

impl Accum {
    fn new(g: usize) -> Self {
        Self { sum: vec![0.0; g], sum2: vec![0.0; g] }
    }

    fn add(&mut self, errors: &[f64]) {
        for ((a, b), e) in self.sum.iter_mut().zip(&mut self.sum2).zip(errors) {
            *a += e;
            *b += e * e;
        }
    }

    fn stats(&self, reps: usize) -> Stats {
        let r = reps as f64;
        let g = self.sum.len() as f64;
        let (mut bias2, mut variance) = (0.0, 0.0);
        for (a, b) in self.sum.iter().zip(&self.sum2) {
            let m = a / r;
            bias2 += m * m;
            variance += (b / r - m * m).max(0.0);
        }
        let (bias2, variance) = (bias2 / g, variance / g);
        Stats { bias2, variance, mise: bias2 + variance }
    }
}

struct RepOutput {
    errors: Vec<Vec<f64>>,
    swapped: Vec<Option<Vec<f64>>>,
    seconds: f64,
    redraws: usize,
}

fn one_rep(
    cfg: &ExperimentConfig,
    model: &SyntheticModel,
    grid: &[Vec<f64>],
    mu: &[f64],
    n: usize,
    rep: &RandomStream,
) -> Result<RepOutput> {
    let (ds, redraws) = draw_dataset(model, n, rep)?;
    let (s0, s1) = stratified_sizes(cfg, ds.n0(), ds.n1());
    let priors = PriorPair::new(model.prior, s1 as f64 / (s0 + s1) as f64)?;
    let mu_star: Vec<f64> = mu.iter().map(|&m| g_inv(m, priors)).collect::<Result<_>>()?;
    let start = Instant::now();
    let values = evaluate_all(&cfg.estimators, grid, &ds, cfg, &rep.derive("est", 0))?;
    let seconds = start.elapsed().as_secs_f64();
    let diff = |v: &[f64], t: &[f64]| v.iter().zip(t).map(|(a, b)| a - b).collect::<Vec<f64>>();
    let mut errors = Vec::with_capacity(values.len());
    let mut swapped = Vec::with_capacity(values.len());
    for (e, v) in cfg.estimators.iter().zip(&values) {
        let (own, other) = match e.target() {
            Target::Mu => (mu, mu_star.as_slice()),
            Target::MuStar => (mu_star.as_slice(), mu),
        };
        errors.push(diff(v, own));
        swapped.push(e.stratified().then(|| diff(v, other)));
    }
    Ok(RepOutput { errors, swapped, seconds, redraws })
}

/// Bias, variance and MISE over the evaluation grid for every estimator
/// and sample size. Results depend only on the configuration, not on the
/// thread count.
pub fn run_mc(cfg: &ExperimentConfig) -> Result<McSummary> {
    cfg.validate()?;
    let model = make_model(cfg.setup, cfg.scenario, cfg.d)?;
    let grid = evaluation_grid(cfg.d, cfg.grid_per_axis)?;
    let mu: Vec<f64> = grid.iter().map(|x| model.mu(x)).collect();
    let root = RandomStream::new(cfg.seed).derive("mc", 0);
    let ne = cfg.estimators.len();
    let mut rows = Vec::new();
    let mut redraws = 0;
    for &n in &cfg.n_list {
        let stream_n = root.derive("n", n as u64);
        let mut acc: Vec<Accum> = (0..ne).map(|_| Accum::new(grid.len())).collect();
        let mut acc_swapped: Vec<Accum> = (0..ne).map(|_| Accum::new(grid.len())).collect();
        let mut seconds = 0.0;
        for chunk in (0..cfg.reps).collect::<Vec<_>>().chunks(CHUNK) {
            let outs: Vec<RepOutput> = with_pool(cfg.threads, || {
                chunk
                    .par_iter()
                    .map(|&r| one_rep(cfg, &model, &grid, &mu, n, &stream_n.derive("rep", r as u64)))
                    .collect::<Result<Vec<_>>>()
            })??;
            for out in outs {
                for (k, e) in out.errors.iter().enumerate() {
                    acc[k].add(e);
                }
                for (k, e) in out.swapped.iter().enumerate() {
                    if let Some(e) = e {
                        acc_swapped[k].add(e);
                    }
                }
                seconds += out.seconds;
                redraws += out.redraws;
            }
        }
        let (n0, n1) = nominal_classes(&model, n);
        let (s0, s1) = stratified_sizes(cfg, n0, n1);
        for (k, &e) in cfg.estimators.iter().enumerate() {
            let (s, s0, s1) = if e.stratified() { (s0 + s1, Some(s0), Some(s1)) } else { (resolve_s(n, cfg.s_rule), None, None) };
            rows.push(McRow {
                estimator: e,
                n,
                s,
                s0,
                s1,
                stats: acc[k].stats(cfg.reps),
                swapped: e.stratified().then(|| acc_swapped[k].stats(cfg.reps)),
                runtime_seconds: seconds,
            });
        }
    }
    Ok(McSummary { rows, redraws })
}
