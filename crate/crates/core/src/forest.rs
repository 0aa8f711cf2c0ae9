//! Partition trees and infinite random forests.
//!
//! A tree is grown on subsample covariates only: each split picks a
//! coordinate uniformly and a threshold uniformly between the node's
//! smallest and largest covariate on that coordinate. Labels enter only at
//! prediction time, as the proportion of class-1 points in the leaf that
//! contains the query (0 for an empty leaf).
//!
//! [`Partitioner::Grid`] replaces the random tree by a fixed regular grid.
//! Because that partition does not depend on the subsample, the infinite
//! forest has a closed hypergeometric form, which [`exact_irf_sub`] and
//! [`exact_irf_under`] evaluate.

use itertools::Itertools;

use crate::combin::{choose_ratio, choose_u128, hypergeom_pmf};
use crate::dataset::{check_plain, check_stratified, Dataset, IndexSampler};
use crate::error::{Error, Result};
use crate::nn::{debias_under, ENUMERATION_LIMIT};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeParams {
    /// Smallest number of subsample points a child may hold.
    pub min_leaf: usize,
    /// Depth cap; `None` means `ceil(log2 s)` for a subsample of size `s`.
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { min_leaf: 5, max_depth: None }
    }
}

impl TreeParams {
    pub fn depth_for(&self, s: usize) -> usize {
        self.max_depth.unwrap_or_else(|| ceil_log2(s))
    }
}

fn ceil_log2(s: usize) -> usize {
    if s <= 1 {
        0
    } else {
        (usize::BITS - (s - 1).leading_zeros()) as usize
    }
}

/// How the covariate cube is cut into leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partitioner {
    RandomSplit(TreeParams),
    /// `cells_per_axis^d` equal cells, independent of the data.
    Grid { cells_per_axis: usize },
}

impl Default for Partitioner {
    fn default() -> Self {
        Partitioner::RandomSplit(TreeParams::default())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Split { coord: usize, threshold: f64, left: usize, right: usize },
    Leaf(usize),
}

/// A leaf: positions (into the covariate rows the tree was built from)
/// and its axis-aligned cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub members: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Leaf {
    /// Max-norm diameter of the cell.
    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).fold(0.0, |m, (l, h)| m.max(h - l))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    Nodes(Vec<Node>),
    Grid { cells_per_axis: usize },
}

/// A partition of `[-1, 1]^d` with the build rows assigned to leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTree {
    dim: usize,
    layout: Layout,
    leaves: Vec<Leaf>,
}

impl PartitionTree {
    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf_of(&self, x: &[f64]) -> &Leaf {
        &self.leaves[self.leaf_id(x)]
    }

    fn leaf_id(&self, x: &[f64]) -> usize {
        match &self.layout {
            Layout::Grid { cells_per_axis } => grid_cell(x, *cells_per_axis),
            Layout::Nodes(nodes) => {
                let mut at = 0;
                loop {
                    match nodes[at] {
                        Node::Leaf(id) => return id,
                        Node::Split { coord, threshold, left, right } => {
                            at = if x[coord] <= threshold { left } else { right };
                        }
                    }
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn grid_cell(x: &[f64], k: usize) -> usize {
    x.iter().rev().fold(0, |acc, &v| {
        let c = (((v + 1.0) * 0.5 * k as f64).floor().max(0.0) as usize).min(k - 1);
        acc * k + c
    })
}

/// Builds a partition from row-major covariates of `dim` columns. Labels
/// are not an input.
pub fn build_tree(covs: &[f64], dim: usize, partitioner: Partitioner, rng: &mut RandomStream) -> PartitionTree {
    let m = covs.len() / dim;
    match partitioner {
        Partitioner::Grid { cells_per_axis: k } => {
            let k = k.max(1);
            let cells = k.pow(dim as u32);
            let mut leaves: Vec<Leaf> = (0..cells)
                .map(|mut id| {
                    let mut lo = Vec::with_capacity(dim);
                    for _ in 0..dim {
                        let c = id % k;
                        id /= k;
                        lo.push(-1.0 + 2.0 * c as f64 / k as f64);
                    }
                    let hi = lo.iter().map(|l| l + 2.0 / k as f64).collect();
                    Leaf { members: Vec::new(), lo, hi }
                })
                .collect();
            for i in 0..m {
                leaves[grid_cell(&covs[i * dim..(i + 1) * dim], k)].members.push(i);
            }
            PartitionTree { dim, layout: Layout::Grid { cells_per_axis: k }, leaves }
        }
        Partitioner::RandomSplit(params) => {
            let mut b = Builder {
                covs,
                dim,
                min_leaf: params.min_leaf.max(1),
                max_depth: params.depth_for(m),
                nodes: Vec::new(),
                leaves: Vec::new(),
            };
            b.grow((0..m).collect(), vec![-1.0; dim], vec![1.0; dim], 0, rng);
            PartitionTree { dim, layout: Layout::Nodes(b.nodes), leaves: b.leaves }
        }
    }
}

struct Builder<'a> {
    covs: &'a [f64],
    dim: usize,
    min_leaf: usize,
    max_depth: usize,
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
}

impl Builder<'_> {
    fn value(&self, i: usize, j: usize) -> f64 {
        self.covs[i * self.dim + j]
    }

    fn leaf(&mut self, at: usize, members: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) {
        self.nodes[at] = Node::Leaf(self.leaves.len());
        self.leaves.push(Leaf { members, lo, hi });
    }

    fn grow(&mut self, members: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>, depth: usize, rng: &mut RandomStream) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(usize::MAX));
        if depth >= self.max_depth || members.len() < 2 * self.min_leaf {
            self.leaf(at, members, lo, hi);
            return at;
        }
        let coord = rng.below(self.dim);
        let (min, max) = members
            .iter()
            .map(|&i| self.value(i, coord))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let threshold = rng.uniform_in(min, max);
        let (left, right): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&i| self.value(i, coord) <= threshold);
        if left.len() < self.min_leaf || right.len() < self.min_leaf {
            self.leaf(at, members, lo, hi);
            return at;
        }
        let (mut lo_r, mut hi_l) = (lo.clone(), hi.clone());
        hi_l[coord] = threshold;
        lo_r[coord] = threshold;
        let l = self.grow(left, lo, hi_l, depth + 1, rng);
        let r = self.grow(right, lo_r, hi, depth + 1, rng);
        self.nodes[at] = Node::Split { coord, threshold, left: l, right: r };
        at
    }
}

/// Leaf counts at a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreePrediction {
    pub count1: usize,
    pub count0: usize,
    /// `count1 / (count0 + count1)`, 0 for an empty leaf.
    pub value: f64,
}

impl TreePrediction {
    fn from_counts(count1: usize, count0: usize) -> Self {
        let total = count0 + count1;
        let value = if total == 0 { 0.0 } else { count1 as f64 / total as f64 };
        Self { count1, count0, value }
    }

    pub fn count_total(&self) -> usize {
        self.count0 + self.count1
    }
}

/// Gathers the covariates of `rows` into a fresh row-major buffer.
pub fn gather_covariates(ds: &Dataset, rows: &[usize]) -> Vec<f64> {
    rows.iter().flat_map(|&i| ds.x(i).iter().copied()).collect()
}

/// Leaf proportion of class 1 for a tree built on the covariates of
/// `subset` (in that order).
pub fn tree_predict_sub(x: &[f64], tree: &PartitionTree, ds: &Dataset, subset: &[usize]) -> TreePrediction {
    let leaf = tree.leaf_of(x);
    let count1 = leaf.members.iter().filter(|&&p| ds.y(subset[p]) == 1).count();
    TreePrediction::from_counts(count1, leaf.members.len() - count1)
}

/// Class-1 fraction for a tree built on `s0` class-0 rows followed by the
/// class-1 rows.
pub fn tree_predict_under(x: &[f64], tree: &PartitionTree, s0: usize) -> TreePrediction {
    let leaf = tree.leaf_of(x);
    let count0 = leaf.members.iter().filter(|&&p| p < s0).count();
    TreePrediction::from_counts(leaf.members.len() - count0, count0)
}

fn check_ensemble(b: usize) -> Result<()> {
    if b == 0 {
        Err(Error::EmptyEnsemble)
    } else {
        Ok(())
    }
}

/// Subsampling random forest with `b` trees at each point; tree `k` draws
/// its subsample and splits from `rng.derive("tree", k)`.
pub fn irf_sub_batch(
    points: &[Vec<f64>],
    ds: &Dataset,
    s: usize,
    b: usize,
    partitioner: Partitioner,
    rng: &RandomStream,
) -> Result<Vec<f64>> {
    check_plain(ds, s)?;
    check_ensemble(b)?;
    let mut sampler = IndexSampler::new((0..ds.len()).collect());
    let mut sums = vec![0.0; points.len()];
    let mut subset = Vec::with_capacity(s);
    for k in 0..b {
        let mut stream = rng.derive("tree", k as u64);
        subset.clear();
        sampler.draw_into(s, &mut stream, &mut subset);
        let tree = build_tree(&gather_covariates(ds, &subset), ds.dim(), partitioner, &mut stream);
        for (acc, x) in sums.iter_mut().zip(points) {
            *acc += tree_predict_sub(x, &tree, ds, &subset).value;
        }
    }
    Ok(sums.into_iter().map(|v| v / b as f64).collect())
}

pub fn irf_sub(x: &[f64], ds: &Dataset, s: usize, b: usize, partitioner: Partitioner, rng: &RandomStream) -> Result<f64> {
    Ok(irf_sub_batch(&[x.to_vec()], ds, s, b, partitioner, rng)?[0])
}

/// Under-sampling random forest with `b` trees at each point.
pub fn irf_under_batch(
    points: &[Vec<f64>],
    ds: &Dataset,
    s0: usize,
    s1: usize,
    b: usize,
    partitioner: Partitioner,
    rng: &RandomStream,
) -> Result<Vec<f64>> {
    check_stratified(ds, s0, s1)?;
    check_ensemble(b)?;
    let mut pool0 = IndexSampler::new(ds.idx0().to_vec());
    let mut pool1 = IndexSampler::new(ds.idx1().to_vec());
    let mut sums = vec![0.0; points.len()];
    let mut subset = Vec::with_capacity(s0 + s1);
    for k in 0..b {
        let mut stream = rng.derive("tree", k as u64);
        subset.clear();
        pool0.draw_into(s0, &mut stream, &mut subset);
        pool1.draw_into(s1, &mut stream, &mut subset);
        let tree = build_tree(&gather_covariates(ds, &subset), ds.dim(), partitioner, &mut stream);
        for (acc, x) in sums.iter_mut().zip(points) {
            *acc += tree_predict_under(x, &tree, s0).value;
        }
    }
    Ok(sums.into_iter().map(|v| v / b as f64).collect())
}

pub fn irf_under(
    x: &[f64],
    ds: &Dataset,
    s0: usize,
    s1: usize,
    b: usize,
    partitioner: Partitioner,
    rng: &RandomStream,
) -> Result<f64> {
    Ok(irf_under_batch(&[x.to_vec()], ds, s0, s1, b, partitioner, rng)?[0])
}

/// Importance-sampling forest: plug-in correction of [`irf_under`].
pub fn irf_is(
    x: &[f64],
    ds: &Dataset,
    s0: usize,
    s1: usize,
    b: usize,
    partitioner: Partitioner,
    rng: &RandomStream,
) -> Result<f64> {
    debias_under(irf_under(x, ds, s0, s1, b, partitioner, rng)?, ds, s0, s1)
}

fn grid_cells(partitioner: Partitioner) -> Result<usize> {
    match partitioner {
        Partitioner::Grid { cells_per_axis } if cells_per_axis >= 1 => Ok(cells_per_axis),
        _ => Err(Error::InvalidConfig("exact forests need a fixed grid partition".into())),
    }
}

/// Counts of class-0 and class-1 dataset points sharing `x`'s grid cell.
fn cell_counts(x: &[f64], ds: &Dataset, k: usize) -> (usize, usize) {
    let cell = grid_cell(x, k);
    (0..ds.len())
        .filter(|&i| grid_cell(ds.x(i), k) == cell)
        .fold((0, 0), |(c0, c1), i| if ds.y(i) == 1 { (c0, c1 + 1) } else { (c0 + 1, c1) })
}

/// Infinite subsampling forest over a fixed grid partition.
///
/// With `m` points (`m1` of class 1) in `x`'s cell, the leaf proportion
/// averages to `m1/m` whenever the cell is hit, so the value is
/// `(m1/m) * (1 - C(n-m, s)/C(n, s))`.
pub fn exact_irf_sub(x: &[f64], ds: &Dataset, s: usize, partitioner: Partitioner) -> Result<f64> {
    check_plain(ds, s)?;
    let k = grid_cells(partitioner)?;
    let (m0, m1) = cell_counts(x, ds, k);
    let m = m0 + m1;
    if m1 == 0 {
        return Ok(0.0);
    }
    let n = ds.len();
    Ok(m1 as f64 / m as f64 * (1.0 - choose_ratio(n - m, s, n, s)))
}

/// Infinite under-sampling forest over a fixed grid partition: the mean
/// of `K1 / (K0 + K1)` for independent hypergeometric cell counts.
pub fn exact_irf_under(x: &[f64], ds: &Dataset, s0: usize, s1: usize, partitioner: Partitioner) -> Result<f64> {
    check_stratified(ds, s0, s1)?;
    let k = grid_cells(partitioner)?;
    let (m0, m1) = cell_counts(x, ds, k);
    let p0: Vec<f64> = (0..=s0.min(m0)).map(|k0| hypergeom_pmf(ds.n0(), m0, s0, k0)).collect();
    let mut total = 0.0;
    for k1 in 1..=s1.min(m1) {
        let w1 = hypergeom_pmf(ds.n1(), m1, s1, k1);
        if w1 == 0.0 {
            continue;
        }
        let inner: f64 = p0.iter().enumerate().map(|(k0, w0)| w0 * k1 as f64 / (k0 + k1) as f64).sum();
        total += w1 * inner;
    }
    Ok(total)
}

fn check_enumeration(count: Option<u128>) -> Result<()> {
    match count {
        Some(c) if c <= ENUMERATION_LIMIT => Ok(()),
        Some(c) => Err(Error::EnumerationTooLarge(c)),
        None => Err(Error::EnumerationTooLarge(u128::MAX)),
    }
}

/// Brute-force average of the leaf proportion over all size-`s` subsets
/// under a fixed partition. Limited to `n <= 20`.
pub fn enumerate_irf_sub(x: &[f64], ds: &Dataset, s: usize, partitioner: Partitioner) -> Result<f64> {
    check_plain(ds, s)?;
    grid_cells(partitioner)?;
    if ds.len() > 20 {
        return Err(Error::EnumerationTooLarge(choose_u128(ds.len(), s).unwrap_or(u128::MAX)));
    }
    let mut rng = RandomStream::new(0);
    let (mut sum, mut count) = (0.0, 0u64);
    for subset in (0..ds.len()).combinations(s) {
        let tree = build_tree(&gather_covariates(ds, &subset), ds.dim(), partitioner, &mut rng);
        sum += tree_predict_sub(x, &tree, ds, &subset).value;
        count += 1;
    }
    Ok(sum / count as f64)
}

/// Brute-force average over all stratified subsets under a fixed partition.
pub fn enumerate_irf_under(x: &[f64], ds: &Dataset, s0: usize, s1: usize, partitioner: Partitioner) -> Result<f64> {
    check_stratified(ds, s0, s1)?;
    grid_cells(partitioner)?;
    let count = choose_u128(ds.n0(), s0).zip(choose_u128(ds.n1(), s1)).and_then(|(a, b)| a.checked_mul(b));
    check_enumeration(count)?;
    let mut rng = RandomStream::new(0);
    let (mut sum, mut count) = (0.0, 0u64);
    let mut subset = Vec::with_capacity(s0 + s1);
    for c0 in ds.idx0().iter().copied().combinations(s0) {
        for c1 in ds.idx1().iter().copied().combinations(s1) {
            subset.clear();
            subset.extend_from_slice(&c0);
            subset.extend_from_slice(&c1);
            let tree = build_tree(&gather_covariates(ds, &subset), ds.dim(), partitioner, &mut rng);
            sum += tree_predict_under(x, &tree, s0).value;
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Leaf diagnostics at `probe` over `reps` random trees on size-`s`
/// subsamples: `(mean diameter of the probe's leaf when occupied,
/// fraction of trees whose probe leaf is empty)`.
pub fn leaf_diagnostics(
    ds: &Dataset,
    s: usize,
    params: TreeParams,
    reps: usize,
    probe: &[f64],
    rng: &RandomStream,
) -> Result<(f64, f64)> {
    check_plain(ds, s)?;
    check_ensemble(reps)?;
    let mut sampler = IndexSampler::new((0..ds.len()).collect());
    let (mut diam, mut occupied, mut empty) = (0.0, 0usize, 0usize);
    for r in 0..reps {
        let mut stream = rng.derive("diag", r as u64);
        let subset = sampler.draw(s, &mut stream);
        let tree = build_tree(&gather_covariates(ds, &subset), ds.dim(), Partitioner::RandomSplit(params), &mut stream);
        let leaf = tree.leaf_of(probe);
        if leaf.members.is_empty() {
            empty += 1;
        } else {
            occupied += 1;
            diam += leaf.diameter();
        }
    }
    let mean_diam = if occupied == 0 { 0.0 } else { diam / occupied as f64 };
    Ok((mean_diam, empty as f64 / reps as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledSample;

    fn random_ds(rng: &mut RandomStream, n: usize) -> Dataset {
        let xs: Vec<f64> = (0..2 * n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut ys: Vec<u8> = (0..n).map(|_| u8::from(rng.bernoulli(0.4))).collect();
        ys[0] = 0;
        ys[n - 1] = 1;
        Dataset::from_parts(2, xs, ys).unwrap()
    }

    fn random_params(min_leaf: usize, max_depth: usize) -> Partitioner {
        Partitioner::RandomSplit(TreeParams { min_leaf, max_depth: Some(max_depth) })
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!([1, 2, 3, 4, 5, 44, 64].map(ceil_log2), [0, 1, 2, 2, 3, 6, 6]);
    }

    #[test]
    fn trivial_trees_are_single_leaves() {
        let mut rng = RandomStream::new(1);
        let d = random_ds(&mut rng, 10);
        let covs = gather_covariates(&d, &(0..10).collect::<Vec<_>>());
        let t = build_tree(&covs, 2, random_params(10, 5), &mut rng);
        assert_eq!(t.leaves().len(), 1);
        let t = build_tree(&covs, 2, random_params(1, 0), &mut rng);
        assert_eq!(t.leaves().len(), 1);
        assert_eq!(t.leaves()[0].diameter(), 2.0);
    }

    #[test]
    fn leaves_tile_the_cube() {
        let mut rng = RandomStream::new(2);
        let d = random_ds(&mut rng, 8);
        let covs = gather_covariates(&d, &(0..8).collect::<Vec<_>>());
        let t = build_tree(&covs, 2, random_params(1, 3), &mut rng);
        assert!(t.leaves().iter().all(|l| !l.members.is_empty()));
        let total: usize = t.leaves().iter().map(|l| l.members.len()).sum();
        assert_eq!(total, 8);
        for _ in 0..1000 {
            let x = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
            let hits = t
                .leaves()
                .iter()
                .filter(|l| (0..2).all(|j| l.lo[j] <= x[j] && x[j] <= l.hi[j]))
                .count();
            assert!(hits >= 1);
            let leaf = t.leaf_of(&x);
            assert!((0..2).all(|j| leaf.lo[j] <= x[j] && x[j] <= leaf.hi[j]));
        }
        for (i, _) in covs.chunks(2).enumerate() {
            assert!(t.leaf_of(&covs[2 * i..2 * i + 2]).members.contains(&i));
        }
    }

    #[test]
    fn splits_ignore_labels() {
        let mut rng = RandomStream::new(3);
        let d = random_ds(&mut rng, 40);
        let flipped = d.with_labels(d.labels().iter().map(|y| 1 - y).collect()).unwrap();
        let rows: Vec<usize> = (0..40).collect();
        let a = build_tree(&gather_covariates(&d, &rows), 2, Partitioner::default(), &mut RandomStream::new(9));
        let b = build_tree(&gather_covariates(&flipped, &rows), 2, Partitioner::default(), &mut RandomStream::new(9));
        assert_eq!(a, b);
    }

    #[test]
    fn leaf_proportions() {
        let pts = [(-0.5, -0.5, 1), (-0.4, -0.5, 0), (-0.6, -0.6, 0), (0.5, 0.5, 1), (0.6, 0.5, 1)];
        let d = Dataset::new(pts.iter().map(|&(a, b, y)| LabeledSample::new(vec![a, b], y)).collect()).unwrap();
        let grid = Partitioner::Grid { cells_per_axis: 2 };
        let rows: Vec<usize> = (0..5).collect();
        let t = build_tree(&gather_covariates(&d, &rows), 2, grid, &mut RandomStream::new(0));
        let p = tree_predict_sub(&[-0.5, -0.5], &t, &d, &rows);
        assert_eq!((p.count1, p.count_total()), (1, 3));
        assert!((p.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(tree_predict_sub(&[0.5, 0.5], &t, &d, &rows).value, 1.0);
        assert_eq!(tree_predict_sub(&[-0.5, 0.5], &t, &d, &rows).value, 0.0);

        let under0 = [1, 2];
        let under1 = [0, 3, 4];
        let rows: Vec<usize> = under0.iter().chain(&under1).copied().collect();
        let t = build_tree(&gather_covariates(&d, &rows), 2, grid, &mut RandomStream::new(0));
        let p = tree_predict_under(&[-0.5, -0.5], &t, under0.len());
        assert_eq!((p.count1, p.count0), (1, 2));
        assert_eq!(tree_predict_under(&[0.5, 0.5], &t, under0.len()).value, 1.0);
        assert_eq!(tree_predict_under(&[0.5, -0.5], &t, under0.len()).value, 0.0);
    }

    #[test]
    fn forest_examples() {
        let mut rng = RandomStream::new(4);
        let d = random_ds(&mut rng, 30);
        let root = RandomStream::new(5);
        // a root-only tree returns the subsample's class-1 fraction
        let v = irf_sub(&[0.0, 0.0], &d, 12, 1, random_params(12, 4), &root).unwrap();
        assert!((v * 12.0 - (v * 12.0).round()).abs() < 1e-12);
        let ones = d.with_labels(vec![1; 30]).unwrap();
        for s in [1, 7, 30] {
            assert_eq!(irf_sub(&[0.3, 0.1], &ones, s, 20, random_params(1, 8), &root).unwrap(), 1.0);
        }
        assert!(matches!(irf_sub(&[0.0, 0.0], &d, 5, 0, Partitioner::default(), &root), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn symmetric_under_forest_is_one_half() {
        // class 0 mirrors class 1 through the origin; probe at the origin
        let mut rng = RandomStream::new(6);
        let mut samples = Vec::new();
        for _ in 0..20 {
            let (a, b) = (rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0));
            samples.push(LabeledSample::new(vec![a, b], 1));
            samples.push(LabeledSample::new(vec![-a, -b], 0));
        }
        let d = Dataset::new(samples).unwrap();
        let b = 20_000;
        let v = irf_under(&[0.0, 0.0], &d, 5, 5, b, Partitioner::default(), &RandomStream::new(7)).unwrap();
        assert!((v - 0.5).abs() < 4.0 * (0.25 / b as f64).sqrt(), "{v}");
    }

    #[test]
    fn exact_forest_hand_cases() {
        // n = 4, s = 2, 2 cells along x1: the probe cell holds points 0 (y=1)
        // and 1 (y=0). Of the 6 pairs, {0,1} gives 1/2, {0,2},{0,3} give 1,
        // {1,2},{1,3} give 0, {2,3} misses the cell: mean 2.5/6.
        let pts = [(-0.5, 0.0, 1), (-0.2, 0.3, 0), (0.5, 0.0, 1), (0.7, -0.3, 0)];
        let d = Dataset::new(pts.iter().map(|&(a, b, y)| LabeledSample::new(vec![a, b], y)).collect()).unwrap();
        let grid = Partitioner::Grid { cells_per_axis: 2 };
        let x = [-0.6, 0.1];
        // cells_per_axis = 2 splits both axes; put the probe in the cell of
        // points 0 and 1 (both have x2 >= 0).
        let e = exact_irf_sub(&x, &d, 2, grid).unwrap();
        assert!((e - 2.5 / 6.0).abs() < 1e-15);
        assert!((enumerate_irf_sub(&x, &d, 2, grid).unwrap() - e).abs() < 1e-15);
        let full = exact_irf_sub(&x, &d, 4, grid).unwrap();
        assert!((full - 0.5).abs() < 1e-15);
        let single = Partitioner::Grid { cells_per_axis: 1 };
        for s in 1..=4 {
            assert!((exact_irf_sub(&x, &d, s, single).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_forest_matches_enumeration() {
        let mut rng = RandomStream::new(8);
        for trial in 0..30 {
            let n = 3 + trial % 10;
            let d = random_ds(&mut rng, n);
            let x = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
            for k in [1, 2, 3] {
                let grid = Partitioner::Grid { cells_per_axis: k };
                for s in 1..=n {
                    let e = exact_irf_sub(&x, &d, s, grid).unwrap();
                    let b = enumerate_irf_sub(&x, &d, s, grid).unwrap();
                    assert!((e - b).abs() < 1e-12);
                }
                for s0 in 1..=d.n0() {
                    for s1 in 1..=d.n1() {
                        let e = exact_irf_under(&x, &d, s0, s1, grid).unwrap();
                        let b = enumerate_irf_under(&x, &d, s0, s1, grid).unwrap();
                        assert!((e - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn monte_carlo_forest_matches_exact() {
        let mut rng = RandomStream::new(10);
        let d = random_ds(&mut rng, 6);
        let grid = Partitioner::Grid { cells_per_axis: 2 };
        let x = [0.2, -0.3];
        let b = 100_000;
        let e = exact_irf_sub(&x, &d, 3, grid).unwrap();
        let m = irf_sub(&x, &d, 3, b, grid, &RandomStream::new(11)).unwrap();
        // leaf proportions lie in [0, 1], so their variance is at most e(1-e)
        assert!((m - e).abs() <= 3.0 * (e * (1.0 - e) / b as f64).sqrt() + 1e-12);
        let e = exact_irf_under(&x, &d, 1, 1, grid).unwrap();
        let m = irf_under(&x, &d, 1, 1, b, grid, &RandomStream::new(11)).unwrap();
        assert!((m - e).abs() <= 3.0 * (e * (1.0 - e) / b as f64).sqrt() + 1e-12);
    }

    #[test]
    fn is_forest_fixed_points() {
        let pts = [(-0.5, -0.5, 1), (0.5, 0.5, 0), (0.6, 0.4, 0)];
        let d = Dataset::new(pts.iter().map(|&(a, b, y)| LabeledSample::new(vec![a, b], y)).collect()).unwrap();
        let grid = Partitioner::Grid { cells_per_axis: 2 };
        let root = RandomStream::new(0);
        assert_eq!(irf_is(&[-0.5, -0.5], &d, 2, 1, 10, grid, &root).unwrap(), 1.0);
        assert_eq!(irf_is(&[0.5, 0.5], &d, 2, 1, 10, grid, &root).unwrap(), 0.0);
        // n0 s1 = n1 s0
        let u = irf_under(&[0.0, 0.0], &d, 2, 1, 10, Partitioner::default(), &root).unwrap();
        assert_eq!(irf_is(&[0.0, 0.0], &d, 2, 1, 10, Partitioner::default(), &root).unwrap(), u);
    }

    #[test]
    fn enumeration_limits() {
        let mut rng = RandomStream::new(12);
        let d = random_ds(&mut rng, 21);
        let grid = Partitioner::Grid { cells_per_axis: 2 };
        assert!(matches!(enumerate_irf_sub(&[0.0, 0.0], &d, 3, grid), Err(Error::EnumerationTooLarge(_))));
        assert!(matches!(exact_irf_sub(&[0.0, 0.0], &d, 3, Partitioner::default()), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn diagnostics() {
        let mut rng = RandomStream::new(13);
        let d = random_ds(&mut rng, 1000);
        let root = RandomStream::new(14);
        let probe = [0.1, 0.1];
        let (diam, empty) = leaf_diagnostics(&d, 50, TreeParams { min_leaf: 50, max_depth: None }, 20, &probe, &root).unwrap();
        assert_eq!((diam, empty), (2.0, 0.0));
        let (d50, e50) = leaf_diagnostics(&d, 50, TreeParams::default(), 400, &probe, &root).unwrap();
        let (d800, e800) = leaf_diagnostics(&d, 800, TreeParams::default(), 400, &probe, &root).unwrap();
        assert!(d800 < d50, "{d800} vs {d50}");
        assert_eq!((e50, e800), (0.0, 0.0));
        let (_, e) = leaf_diagnostics(&d, 200, TreeParams { min_leaf: 1, max_depth: Some(30) }, 50, &probe, &root).unwrap();
        assert_eq!(e, 0.0);
    }
}
