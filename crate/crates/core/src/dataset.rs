//! Labeled samples, class bookkeeping and without-replacement subsampling.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// One observation: a covariate vector and a binary label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: u8,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: u8) -> Self {
        Self { x, y }
    }
}

/// An ordered collection of labeled samples with its class partition.
///
/// Covariates are stored row-major in one buffer; `idx0` / `idx1` list the
/// positions of class-0 / class-1 samples in dataset order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<u8>,
    idx0: Vec<usize>,
    idx1: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>) -> Result<Self> {
        let dim = samples.first().ok_or(Error::EmptyDataset)?.x.len();
        let mut xs = Vec::with_capacity(samples.len() * dim);
        let mut ys = Vec::with_capacity(samples.len());
        for s in samples {
            if s.x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.x.len() });
            }
            xs.extend_from_slice(&s.x);
            ys.push(s.y);
        }
        Self::from_parts(dim, xs, ys)
    }

    /// Builds a dataset from a row-major covariate buffer and labels.
    pub fn from_parts(dim: usize, xs: Vec<f64>, ys: Vec<u8>) -> Result<Self> {
        if ys.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if xs.len() != dim * ys.len() {
            return Err(Error::DimensionMismatch { expected: dim * ys.len(), got: xs.len() });
        }
        if let Some(i) = xs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCovariate(i / dim));
        }
        if let Some(&y) = ys.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidLabel(y.to_string()));
        }
        let (idx0, idx1) = split_labels(&ys);
        Ok(Self { dim, xs, ys, idx0, idx1 })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn y(&self, i: usize) -> u8 {
        self.ys[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.ys
    }

    pub fn covariates(&self) -> &[f64] {
        &self.xs
    }

    pub fn idx0(&self) -> &[usize] {
        &self.idx0
    }

    pub fn idx1(&self) -> &[usize] {
        &self.idx1
    }

    pub fn n0(&self) -> usize {
        self.idx0.len()
    }

    pub fn n1(&self) -> usize {
        self.idx1.len()
    }

    pub fn sample(&self, i: usize) -> LabeledSample {
        LabeledSample::new(self.x(i).to_vec(), self.y(i))
    }

    /// Class index lists `(idx0, idx1)`, each in dataset order.
    pub fn partition_by_class(&self) -> (Vec<usize>, Vec<usize>) {
        (self.idx0.clone(), self.idx1.clone())
    }

    /// Imbalance ratio `n0 / n1`.
    pub fn imbalance_ratio(&self) -> Result<f64> {
        if self.n1() == 0 {
            return Err(Error::EmptyMinorityClass);
        }
        Ok(self.n0() as f64 / self.n1() as f64)
    }

    /// Plug-in class-1 priors `(p_hat, p_star_hat)` of the original and the
    /// rebalanced sample. For plain subsampling both are `n1 / n`.
    pub fn empirical_priors(&self, scheme: SubsampleScheme) -> (f64, f64) {
        let p_hat = self.n1() as f64 / self.len() as f64;
        let p_star_hat = match scheme {
            SubsampleScheme::Plain(_) => p_hat,
            SubsampleScheme::Stratified { s0, s1 } => s1 as f64 / (s0 + s1) as f64,
        };
        (p_hat, p_star_hat)
    }

    /// Copy of the dataset with labels replaced (covariates untouched).
    pub fn with_labels(&self, ys: Vec<u8>) -> Result<Self> {
        Self::from_parts(self.dim, self.xs.clone(), ys)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols = headers.len();
        if cols < 2 || &headers[cols - 1] != "y" {
            return Err(Error::InvalidConfig("dataset header must end with `y`".into()));
        }
        for (j, h) in headers.iter().take(cols - 1).enumerate() {
            if h != format!("x{}", j + 1) {
                return Err(Error::InvalidConfig(format!("unexpected header column {h:?}")));
            }
        }
        let dim = cols - 1;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for record in rdr.records() {
            let record = record?;
            for field in record.iter().take(dim) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad covariate {field:?}")))?;
                xs.push(v);
            }
            ys.push(match record[dim].trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::InvalidLabel(other.to_string())),
            });
        }
        Self::from_parts(dim, xs, ys)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.x(i).iter().map(|v| v.to_string()).collect();
            row.push(self.y(i).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

fn split_labels(ys: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let mut idx0 = Vec::new();
    let mut idx1 = Vec::new();
    for (i, &y) in ys.iter().enumerate() {
        if y == 1 {
            idx1.push(i);
        } else {
            idx0.push(i);
        }
    }
    (idx0, idx1)
}

/// How subsamples are drawn from a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsampleScheme {
    /// `s` indices uniformly without replacement from the whole dataset.
    Plain(usize),
    /// `s0` class-0 and `s1` class-1 indices, independently per class.
    Stratified { s0: usize, s1: usize },
}

impl SubsampleScheme {
    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        match *self {
            SubsampleScheme::Plain(s) => check_plain(ds, s),
            SubsampleScheme::Stratified { s0, s1 } => check_stratified(ds, s0, s1),
        }
    }

    pub fn total(&self) -> usize {
        match *self {
            SubsampleScheme::Plain(s) => s,
            SubsampleScheme::Stratified { s0, s1 } => s0 + s1,
        }
    }
}

pub(crate) fn check_plain(ds: &Dataset, s: usize) -> Result<()> {
    if s == 0 || s > ds.len() {
        return Err(Error::SizeExceedsPopulation { s, n: ds.len() });
    }
    Ok(())
}

pub(crate) fn check_stratified(ds: &Dataset, s0: usize, s1: usize) -> Result<()> {
    if ds.n1() == 0 {
        return Err(Error::EmptyMinorityClass);
    }
    if ds.n0() == 0 {
        return Err(Error::EmptyMajorityClass);
    }
    if s0 == 0 || s0 > ds.n0() {
        return Err(Error::SizeExceedsClass { class: 0, s: s0, available: ds.n0() });
    }
    if s1 == 0 || s1 > ds.n1() {
        return Err(Error::SizeExceedsClass { class: 1, s: s1, available: ds.n1() });
    }
    Ok(())
}

/// Reusable without-replacement sampler over a fixed population.
///
/// Each draw is a partial Fisher-Yates shuffle of the first `s` slots of
/// the pool; the swaps are undone afterwards so the pool is back in its
/// original order and a draw costs O(s).
#[derive(Clone, Debug)]
pub struct IndexSampler {
    pool: Vec<usize>,
    swaps: Vec<usize>,
}

impl IndexSampler {
    pub fn new(pool: Vec<usize>) -> Self {
        Self { pool, swaps: Vec::new() }
    }

    pub fn population(&self) -> usize {
        self.pool.len()
    }

    /// Appends `s` distinct pool members to `out`. Panics if `s` exceeds
    /// the population; callers validate sizes first.
    pub fn draw_into(&mut self, s: usize, rng: &mut RandomStream, out: &mut Vec<usize>) {
        let n = self.pool.len();
        assert!(s <= n, "subsample size {s} exceeds population {n}");
        self.swaps.clear();
        for i in 0..s {
            let j = i + rng.below(n - i);
            self.pool.swap(i, j);
            self.swaps.push(j);
        }
        out.extend_from_slice(&self.pool[..s]);
        for (i, &j) in self.swaps.iter().enumerate().rev() {
            self.pool.swap(i, j);
        }
    }

    pub fn draw(&mut self, s: usize, rng: &mut RandomStream) -> Vec<usize> {
        let mut out = Vec::with_capacity(s);
        self.draw_into(s, rng, &mut out);
        out
    }
}

/// `s` distinct dataset indices, uniform over all size-`s` subsets.
pub fn subsample_plain(ds: &Dataset, s: usize, rng: &mut RandomStream) -> Result<Vec<usize>> {
    check_plain(ds, s)?;
    Ok(IndexSampler::new((0..ds.len()).collect()).draw(s, rng))
}

/// Independent uniform draws of `s0` class-0 and `s1` class-1 indices.
pub fn subsample_stratified(
    ds: &Dataset,
    s0: usize,
    s1: usize,
    rng: &mut RandomStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_stratified(ds, s0, s1)?;
    let a = IndexSampler::new(ds.idx0().to_vec()).draw(s0, rng);
    let b = IndexSampler::new(ds.idx1().to_vec()).draw(s1, rng);
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn labeled(labels: &[u8]) -> Dataset {
        let samples = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| LabeledSample::new(vec![i as f64 / 10.0, 0.0], y))
            .collect();
        Dataset::new(samples).unwrap()
    }

    fn counts(n0: usize, n1: usize) -> Dataset {
        let mut labels = vec![0u8; n0];
        labels.extend(std::iter::repeat_n(1u8, n1));
        labeled(&labels)
    }

    #[test]
    fn partition_examples() {
        assert_eq!(labeled(&[1, 0, 0, 1]).partition_by_class(), (vec![1, 2], vec![0, 3]));
        assert_eq!(labeled(&[0, 0]).partition_by_class(), (vec![0, 1], vec![]));
        assert_eq!(labeled(&[1]).partition_by_class(), (vec![], vec![0]));
    }

    #[test]
    fn imbalance_ratio_examples() {
        assert_eq!(counts(90, 10).imbalance_ratio().unwrap(), 9.0);
        assert_eq!(counts(50, 50).imbalance_ratio().unwrap(), 1.0);
        assert_eq!(counts(0, 5).imbalance_ratio().unwrap(), 0.0);
        assert!(matches!(counts(4, 0).imbalance_ratio(), Err(Error::EmptyMinorityClass)));
    }

    #[test]
    fn empirical_priors_examples() {
        let (p, ps) = counts(900, 100).empirical_priors(SubsampleScheme::Stratified { s0: 10, s1: 10 });
        assert!((p - 0.1).abs() < 1e-15 && (ps - 0.5).abs() < 1e-15);
        let (p, ps) = counts(50, 50).empirical_priors(SubsampleScheme::Plain(20));
        assert_eq!((p, ps), (0.5, 0.5));
        let (p, ps) = counts(90, 10).empirical_priors(SubsampleScheme::Stratified { s0: 3, s1: 3 });
        assert!((p - 0.1).abs() < 1e-15 && (ps - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Dataset::new(vec![]), Err(Error::EmptyDataset)));
        let bad = vec![LabeledSample::new(vec![f64::NAN], 0)];
        assert!(matches!(Dataset::new(bad), Err(Error::NonFiniteCovariate(0))));
        let bad = vec![LabeledSample::new(vec![0.0], 2)];
        assert!(matches!(Dataset::new(bad), Err(Error::InvalidLabel(_))));
        let ragged = vec![LabeledSample::new(vec![0.0], 0), LabeledSample::new(vec![0.0, 1.0], 1)];
        assert!(matches!(Dataset::new(ragged), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn full_and_singleton_subsamples() {
        let ds = counts(3, 4);
        let mut rng = RandomStream::new(3);
        let mut all = subsample_plain(&ds, 7, &mut rng).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert_eq!(subsample_plain(&counts(0, 1), 1, &mut rng).unwrap(), vec![0]);
        let (mut a, mut b) = subsample_stratified(&ds, 3, 4, &mut rng).unwrap();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!((a, b), (vec![0, 1, 2], vec![3, 4, 5, 6]));
    }

    #[test]
    fn size_errors() {
        let ds = counts(3, 2);
        let mut rng = RandomStream::new(3);
        assert!(matches!(subsample_plain(&ds, 6, &mut rng), Err(Error::SizeExceedsPopulation { .. })));
        assert!(matches!(subsample_plain(&ds, 0, &mut rng), Err(Error::SizeExceedsPopulation { .. })));
        assert!(matches!(
            subsample_stratified(&ds, 1, 3, &mut rng),
            Err(Error::SizeExceedsClass { class: 1, .. })
        ));
        assert!(matches!(subsample_stratified(&counts(3, 0), 1, 1, &mut rng), Err(Error::EmptyMinorityClass)));
        assert!(matches!(subsample_stratified(&counts(0, 3), 1, 1, &mut rng), Err(Error::EmptyMajorityClass)));
    }

    #[test]
    fn plain_subsets_are_uniform() {
        // n=5, s=2: 10 subsets, each with frequency 0.1 +- 0.01 over 1e5 draws.
        let ds = counts(2, 3);
        let mut rng = RandomStream::new(11);
        let mut sampler = IndexSampler::new((0..5).collect());
        let mut freq: HashMap<Vec<usize>, usize> = HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            let mut s = sampler.draw(2, &mut rng);
            s.sort_unstable();
            *freq.entry(s).or_default() += 1;
        }
        assert_eq!(freq.len(), 10);
        for (k, c) in &freq {
            let f = *c as f64 / draws as f64;
            assert!((f - 0.1).abs() < 0.01, "{k:?}: {f}");
        }
        // Pearson chi-square with 9 dof; 99.9% quantile is 27.88.
        let e = draws as f64 / 10.0;
        let chi2: f64 = freq.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 27.88, "chi2 = {chi2}");
        assert_eq!(ds.len(), 5);
    }

    #[test]
    fn stratified_pairs_are_uniform() {
        let ds = counts(2, 2);
        let mut rng = RandomStream::new(12);
        let mut freq: HashMap<(usize, usize), usize> = HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            let (a, b) = subsample_stratified(&ds, 1, 1, &mut rng).unwrap();
            *freq.entry((a[0], b[0])).or_default() += 1;
        }
        assert_eq!(freq.len(), 4);
        for c in freq.values() {
            assert!((*c as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn sampler_restores_pool_and_is_deterministic() {
        let mut s1 = IndexSampler::new((0..20).collect());
        let mut s2 = IndexSampler::new((0..20).collect());
        let mut r1 = RandomStream::new(5);
        let mut r2 = RandomStream::new(5);
        for _ in 0..50 {
            let a = s1.draw(7, &mut r1);
            assert_eq!(a, s2.draw(7, &mut r2));
            let mut sorted = a.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 7);
        }
        assert_eq!(s1.pool, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn csv_roundtrip_and_strict_labels() {
        let ds = labeled(&[1, 0, 1]);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), ds);
        let bad = "x1,y\n0.5,1.0\n";
        assert!(matches!(Dataset::read_csv(bad.as_bytes()), Err(Error::InvalidLabel(_))));
        let bad = "x1,label\n0.5,1\n";
        assert!(Dataset::read_csv(bad.as_bytes()).is_err());
    }
}
