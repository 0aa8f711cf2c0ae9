//! Cross-checks of the closed forms against brute-force enumeration and
//! against finite ensembles on tiny random instances.

use std::fmt;

use crate::dataset::{Dataset, IndexSampler, LabeledSample};
use crate::error::Result;
use crate::forest::{enumerate_irf_sub, enumerate_irf_under, exact_irf_sub, exact_irf_under, irf_sub, irf_under, Partitioner};
use crate::nn::{bagged_sub_1nn, bagged_under_1nn, enumerate_sub_1nn, enumerate_under_1nn, exact_sub_1nn, exact_under_1nn};
use crate::rng::RandomStream;

const EXACT_TOL: f64 = 1e-12;

/// Random 2-d dataset of size `n >= 2` with both classes present. About
/// one instance in four snaps coordinates to a coarse lattice so that exact
/// distance ties occur.
pub fn tiny_instance(rng: &mut RandomStream, n: usize) -> Dataset {
    let snap = rng.bernoulli(0.25);
    let coord = |rng: &mut RandomStream| {
        let v = rng.uniform_in(-1.0, 1.0);
        if snap {
            (v * 2.0).round() / 2.0
        } else {
            v
        }
    };
    let xs: Vec<f64> = (0..2 * n).map(|_| coord(rng)).collect();
    let mut ys = vec![0u8; n];
    let n1 = 1 + rng.below(n - 1);
    for i in IndexSampler::new((0..n).collect()).draw(n1, rng) {
        ys[i] = 1;
    }
    Dataset::from_parts(2, xs, ys).expect("nonempty finite instance")
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleLine {
    pub name: String,
    /// Largest absolute deviation, or the failing fraction for the
    /// Monte Carlo bands.
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for OracleLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: deviation {:.3e} (tolerance {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.deviation,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub lines: Vec<OracleLine>,
}

impl OracleReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

fn exact_line(name: &str, deviation: f64) -> OracleLine {
    OracleLine { name: name.into(), deviation, tolerance: EXACT_TOL, pass: deviation < EXACT_TOL }
}

/// Max deviations of the four closed forms from enumeration over
/// `instances` random datasets with `n <= 12`, every feasible size and a
/// random grid partition.
pub fn enumeration_check(seed: u64, instances: usize) -> Result<Vec<OracleLine>> {
    let rng = &mut RandomStream::new(seed).derive("oracle", 0);
    let mut dev = [0.0f64; 4];
    for _ in 0..instances {
        let n = 2 + rng.below(11);
        let ds = tiny_instance(rng, n);
        let x = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
        let grid = Partitioner::Grid { cells_per_axis: 1 + rng.below(3) };
        for s in 1..=n {
            dev[0] = dev[0].max((exact_sub_1nn(&x, &ds, s)? - enumerate_sub_1nn(&x, &ds, s)?).abs());
            dev[2] = dev[2].max((exact_irf_sub(&x, &ds, s, grid)? - enumerate_irf_sub(&x, &ds, s, grid)?).abs());
        }
        for s0 in 1..=ds.n0() {
            for s1 in 1..=ds.n1() {
                let e = exact_under_1nn(&x, &ds, s0, s1)?;
                dev[1] = dev[1].max((e - enumerate_under_1nn(&x, &ds, s0, s1)?).abs());
                let e = exact_irf_under(&x, &ds, s0, s1, grid)?;
                dev[3] = dev[3].max((e - enumerate_irf_under(&x, &ds, s0, s1, grid)?).abs());
            }
        }
    }
    Ok(vec![
        exact_line("exact nn_sub = enumeration", dev[0]),
        exact_line("exact nn_under = enumeration", dev[1]),
        exact_line("exact irf_sub = enumeration (grid partition)", dev[2]),
        exact_line("exact irf_under = enumeration (grid partition)", dev[3]),
    ])
}

/// Fraction of finite-ensemble estimates within `3 sqrt(e(1-e)/b)` of the
/// exact value `e`, over `trials` random `n = 6` instances, each checking
/// the four estimators (forests on a 2x2 grid) at random sizes.
pub fn mc_consistency(seed: u64, trials: usize, b: usize) -> Result<f64> {
    let root = RandomStream::new(seed).derive("mc-consistency", 0);
    let grid = Partitioner::Grid { cells_per_axis: 2 };
    let (mut within, mut total) = (0usize, 0usize);
    for t in 0..trials {
        let mut rng = root.derive("trial", t as u64);
        let ds = tiny_instance(&mut rng, 6);
        let x = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
        let s = 1 + rng.below(6);
        let s0 = 1 + rng.below(ds.n0());
        let s1 = 1 + rng.below(ds.n1());
        let ens = rng.derive("ensemble", 0);
        let pairs = [
            (bagged_sub_1nn(&x, &ds, s, b, &ens)?, exact_sub_1nn(&x, &ds, s)?),
            (bagged_under_1nn(&x, &ds, s0, s1, b, &ens)?, exact_under_1nn(&x, &ds, s0, s1)?),
            (irf_sub(&x, &ds, s, b, grid, &ens)?, exact_irf_sub(&x, &ds, s, grid)?),
            (irf_under(&x, &ds, s0, s1, b, grid, &ens)?, exact_irf_under(&x, &ds, s0, s1, grid)?),
        ];
        for (m, e) in pairs {
            total += 1;
            if (m - e).abs() <= 3.0 * (e * (1.0 - e) / b as f64).sqrt() + EXACT_TOL {
                within += 1;
            }
        }
    }
    Ok(within as f64 / total as f64)
}

/// Duplicated points with conflicting labels: the closed forms and the
/// enumeration must agree under the lowest-index tie rule.
pub fn tie_line() -> Result<OracleLine> {
    let pts = [
        (0.5, 0.5, 1),
        (0.5, 0.5, 0),
        (-0.5, 0.5, 0),
        (0.5, 0.5, 1),
        (-0.5, 0.5, 1),
        (0.0, -0.5, 0),
        (0.5, -0.5, 1),
    ];
    let ds = Dataset::new(pts.iter().map(|&(a, b, y)| LabeledSample::new(vec![a, b], y)).collect())?;
    let mut dev = 0.0f64;
    for x in [[0.0, 0.0], [0.5, 0.5], [0.0, 0.5], [0.25, 0.0]] {
        for s in 1..=ds.len() {
            dev = dev.max((exact_sub_1nn(&x, &ds, s)? - enumerate_sub_1nn(&x, &ds, s)?).abs());
        }
        for s0 in 1..=ds.n0() {
            for s1 in 1..=ds.n1() {
                dev = dev.max((exact_under_1nn(&x, &ds, s0, s1)? - enumerate_under_1nn(&x, &ds, s0, s1)?).abs());
            }
        }
    }
    Ok(exact_line("tie instance (duplicated points)", dev))
}

/// Runs every oracle comparison and reports one line per check.
pub fn oracle_check(seed: u64) -> Result<OracleReport> {
    let mut lines = enumeration_check(seed, 200)?;
    let frac = mc_consistency(seed, 100, 100_000)?;
    lines.push(OracleLine {
        name: "B = 1e5 ensembles within 3 sigma of exact".into(),
        deviation: 1.0 - frac,
        tolerance: 0.01,
        pass: frac >= 0.99,
    });
    lines.push(tie_line()?);
    Ok(OracleReport { lines })
}
