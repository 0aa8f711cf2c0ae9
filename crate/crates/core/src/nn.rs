//! The 1-NN base learner and its bagged ensembles.
//!
//! Distances use the max-norm. Exact distance ties are broken towards the
//! lower dataset index, so every neighbour ordering is the lexicographic
//! order on `(distance, index)`.
//!
//! For `B = infinity` the bagged estimators have closed forms: the nearest
//! neighbour of a uniform subsample is the `i`-th nearest point overall
//! with a hypergeometric probability that depends only on `i`.

use std::cmp::Ordering;

use itertools::Itertools;

use crate::combin::choose_u128;
use crate::dataset::{check_plain, check_stratified, Dataset, IndexSampler};
use crate::debias::{g_n, EmpiricalPriors};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Largest number of subsets the brute-force oracles will visit.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[inline]
pub fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

#[inline]
fn closer(d: f64, i: usize, best_d: f64, best_i: usize) -> bool {
    d < best_d || (d == best_d && i < best_i)
}

/// Position of the max-norm nearest point; ties go to the lowest position.
pub fn nn_index<P: AsRef<[f64]>>(x: &[f64], points: &[P]) -> Result<usize> {
    let mut best = None::<(f64, usize)>;
    for (i, p) in points.iter().enumerate() {
        let d = max_dist(x, p.as_ref());
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i).ok_or(Error::EmptyPointSet)
}

/// Dataset index of the nearest member of `subset`.
fn nearest_in(x: &[f64], ds: &Dataset, subset: &[usize]) -> Option<usize> {
    let mut best = (f64::INFINITY, usize::MAX);
    for &i in subset {
        let d = max_dist(x, ds.x(i));
        if closer(d, i, best.0, best.1) {
            best = (d, i);
        }
    }
    (best.1 != usize::MAX).then_some(best.1)
}

/// Label of the nearest member of `subset`.
pub fn one_nn_predict(x: &[f64], ds: &Dataset, subset: &[usize]) -> Result<u8> {
    check_dim(x, ds)?;
    nearest_in(x, ds, subset).map(|i| ds.y(i)).ok_or(Error::EmptySubset)
}

fn check_dim(x: &[f64], ds: &Dataset) -> Result<()> {
    if x.len() != ds.dim() {
        return Err(Error::DimensionMismatch { expected: ds.dim(), got: x.len() });
    }
    Ok(())
}

fn check_points(points: &[Vec<f64>], ds: &Dataset) -> Result<()> {
    points.iter().try_for_each(|x| check_dim(x, ds))
}

/// All dataset indices sorted by `(distance to x, index)`.
pub fn neighbour_order(x: &[f64], ds: &Dataset) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = (0..ds.len()).map(|i| (max_dist(x, ds.x(i)), i)).collect();
    keyed.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Probability that the `i`-th nearest point (1-based) is the nearest
/// member of a uniform size-`s` subset, for `i = 1..=n`.
pub fn sub_rank_weights(n: usize, s: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n);
    let mut cur = s as f64 / n as f64;
    for i in 1..=n {
        w.push(cur);
        // w_{i+1} / w_i = (n - i - s + 1) / (n - i)
        cur = if n - i + 1 > s && i < n {
            cur * (n - i + 1 - s) as f64 / (n - i) as f64
        } else {
            0.0
        };
    }
    w
}

/// Infinite-B subsampling bagged 1-NN at `x`.
pub fn exact_sub_1nn(x: &[f64], ds: &Dataset, s: usize) -> Result<f64> {
    check_dim(x, ds)?;
    check_plain(ds, s)?;
    let w = sub_rank_weights(ds.len(), s);
    Ok(neighbour_order(x, ds)
        .into_iter()
        .zip(w)
        .filter(|&(i, _)| ds.y(i) == 1)
        .map(|(_, w)| w)
        .sum())
}

/// Infinite-B under-sampling bagged 1-NN at `x`.
///
/// A class-1 point preceded (in neighbour order) by `a` class-1 and `b`
/// class-0 points wins when it is drawn, none of the `a` closer class-1
/// points is drawn and none of the `b` closer class-0 points is drawn.
pub fn exact_under_1nn(x: &[f64], ds: &Dataset, s0: usize, s1: usize) -> Result<f64> {
    check_dim(x, ds)?;
    check_stratified(ds, s0, s1)?;
    let (n0, n1) = (ds.n0(), ds.n1());
    // w1 = C(n1-1-a, s1-1)/C(n1, s1), q0 = C(n0-b, s0)/C(n0, s0)
    let mut w1 = s1 as f64 / n1 as f64;
    let mut q0 = 1.0;
    let (mut a, mut b) = (0usize, 0usize);
    let mut total = 0.0;
    for i in neighbour_order(x, ds) {
        if q0 == 0.0 {
            break;
        }
        if ds.y(i) == 1 {
            total += w1 * q0;
            w1 = if n1 - a > s1 { w1 * (n1 - a - s1) as f64 / (n1 - 1 - a) as f64 } else { 0.0 };
            a += 1;
            if w1 == 0.0 {
                break;
            }
        } else {
            q0 = if n0 - b > s0 { q0 * (n0 - b - s0) as f64 / (n0 - b) as f64 } else { 0.0 };
            b += 1;
        }
    }
    Ok(total)
}

/// Algorithm sizes for under-sampling: `s = min(n0, n1)`,
/// `s1 = floor(sqrt(s))`, `s0 = ceil(sqrt(s))`.
pub fn alg2_sizes(n0: usize, n1: usize) -> (usize, usize, usize) {
    let s = n0.min(n1);
    let r = s.isqrt();
    let s0 = if r * r == s { r } else { r + 1 };
    (s, s0, r)
}

fn check_ensemble(b: usize) -> Result<()> {
    if b == 0 {
        Err(Error::EmptyEnsemble)
    } else {
        Ok(())
    }
}

/// Subsampling bagged 1-NN at every point of `points`, sharing each of the
/// `b` subsamples across all points. Subsample `k` is drawn from
/// `rng.derive("bag", k)`.
pub fn bagged_sub_1nn_batch(
    points: &[Vec<f64>],
    ds: &Dataset,
    s: usize,
    b: usize,
    rng: &RandomStream,
) -> Result<Vec<f64>> {
    check_points(points, ds)?;
    check_plain(ds, s)?;
    check_ensemble(b)?;
    let mut sampler = IndexSampler::new((0..ds.len()).collect());
    let mut hits = vec![0u64; points.len()];
    let mut subset = Vec::with_capacity(s);
    for k in 0..b {
        let mut stream = rng.derive("bag", k as u64);
        subset.clear();
        sampler.draw_into(s, &mut stream, &mut subset);
        for (h, x) in hits.iter_mut().zip(points) {
            if let Some(i) = nearest_in(x, ds, &subset) {
                *h += u64::from(ds.y(i));
            }
        }
    }
    Ok(hits.into_iter().map(|h| h as f64 / b as f64).collect())
}

pub fn bagged_sub_1nn(x: &[f64], ds: &Dataset, s: usize, b: usize, rng: &RandomStream) -> Result<f64> {
    Ok(bagged_sub_1nn_batch(&[x.to_vec()], ds, s, b, rng)?[0])
}

/// Under-sampling bagged 1-NN at every point of `points`.
pub fn bagged_under_1nn_batch(
    points: &[Vec<f64>],
    ds: &Dataset,
    s0: usize,
    s1: usize,
    b: usize,
    rng: &RandomStream,
) -> Result<Vec<f64>> {
    check_points(points, ds)?;
    check_stratified(ds, s0, s1)?;
    check_ensemble(b)?;
    let mut pool0 = IndexSampler::new(ds.idx0().to_vec());
    let mut pool1 = IndexSampler::new(ds.idx1().to_vec());
    let mut hits = vec![0u64; points.len()];
    let mut subset = Vec::with_capacity(s0 + s1);
    for k in 0..b {
        let mut stream = rng.derive("bag", k as u64);
        subset.clear();
        pool0.draw_into(s0, &mut stream, &mut subset);
        pool1.draw_into(s1, &mut stream, &mut subset);
        for (h, x) in hits.iter_mut().zip(points) {
            if let Some(i) = nearest_in(x, ds, &subset) {
                *h += u64::from(ds.y(i));
            }
        }
    }
    Ok(hits.into_iter().map(|h| h as f64 / b as f64).collect())
}

pub fn bagged_under_1nn(
    x: &[f64],
    ds: &Dataset,
    s0: usize,
    s1: usize,
    b: usize,
    rng: &RandomStream,
) -> Result<f64> {
    Ok(bagged_under_1nn_batch(&[x.to_vec()], ds, s0, s1, b, rng)?[0])
}

/// Plug-in importance correction of an under-sampling estimate.
pub fn debias_under(z: f64, ds: &Dataset, s0: usize, s1: usize) -> Result<f64> {
    g_n(z, EmpiricalPriors::new(ds.n0(), ds.n1(), s0, s1)?)
}

/// Importance-sampling bagged 1-NN: the plug-in correction applied to the
/// under-sampling estimate. `b = 0` uses the exact under-sampling value.
pub fn is_bagged_1nn(
    x: &[f64],
    ds: &Dataset,
    s0: usize,
    s1: usize,
    b: usize,
    rng: &RandomStream,
) -> Result<f64> {
    let under = if b == 0 {
        exact_under_1nn(x, ds, s0, s1)?
    } else {
        bagged_under_1nn(x, ds, s0, s1, b, rng)?
    };
    debias_under(under, ds, s0, s1)
}

fn check_enumeration(count: Option<u128>) -> Result<()> {
    match count {
        Some(c) if c <= ENUMERATION_LIMIT => Ok(()),
        Some(c) => Err(Error::EnumerationTooLarge(c)),
        None => Err(Error::EnumerationTooLarge(u128::MAX)),
    }
}

/// Average of [`one_nn_predict`] over every size-`s` subset.
pub fn enumerate_sub_1nn(x: &[f64], ds: &Dataset, s: usize) -> Result<f64> {
    check_plain(ds, s)?;
    check_enumeration(choose_u128(ds.len(), s))?;
    let (mut sum, mut count) = (0u64, 0u64);
    for subset in (0..ds.len()).combinations(s) {
        sum += u64::from(one_nn_predict(x, ds, &subset)?);
        count += 1;
    }
    Ok(sum as f64 / count as f64)
}

/// Average of the nearest-label indicator over every stratified subset.
pub fn enumerate_under_1nn(x: &[f64], ds: &Dataset, s0: usize, s1: usize) -> Result<f64> {
    check_stratified(ds, s0, s1)?;
    let count = choose_u128(ds.n0(), s0).zip(choose_u128(ds.n1(), s1)).and_then(|(a, b)| a.checked_mul(b));
    check_enumeration(count)?;
    let (mut sum, mut count) = (0u64, 0u64);
    let mut subset = Vec::with_capacity(s0 + s1);
    for c0 in ds.idx0().iter().copied().combinations(s0) {
        for c1 in ds.idx1().iter().copied().combinations(s1) {
            subset.clear();
            subset.extend_from_slice(&c0);
            subset.extend_from_slice(&c1);
            sum += u64::from(one_nn_predict(x, ds, &subset)?);
            count += 1;
        }
    }
    Ok(sum as f64 / count as f64)
}
