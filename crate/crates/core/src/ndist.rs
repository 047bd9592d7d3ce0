//! N-distance machinery: kernels and two-sample estimators.
//!
//! Two strongly negative definite kernels are provided: plain Euclidean
//! distance for scalar observations, and a subset-depth kernel for functions
//! observed at n common evaluation points, which sums Euclidean distances
//! over every coordinate subset of size 1..=D. The N-distance estimator for
//! samples {x_i}, {y_j} is
//!
//!   2/(m1·m2) ΣΣ L(x_i,y_j) − 1/m1² ΣΣ L(x_i,x_j) − 1/m2² ΣΣ L(y_i,y_j)
//!
//! and is close to zero when the samples come from one distribution. For
//! permutation testing, kernel values between all pooled samples are cached
//! once in a symmetric matrix and every permutation round only reindexes it.
//! All accumulation runs in fixed row-major order so results are
//! bit-identical across runs and thread counts.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Kernel selector: which L(·,·) a channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    /// |x − y| on scalars.
    EuclideanScalar,
    /// Subset-depth kernel on function samples, depth D ≥ 1.
    SubsetDepth { depth: usize },
}

/// A function observed at n shared evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSample {
    pub values: Vec<f64>,
}

impl FunctionSample {
    pub fn new(values: Vec<f64>) -> Self {
        FunctionSample { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<&crate::descriptors::TestingFunction> for FunctionSample {
    fn from(t: &crate::descriptors::TestingFunction) -> Self {
        FunctionSample {
            values: t.values.clone(),
        }
    }
}

/// Euclidean kernel on scalars.
#[inline]
pub fn euclid_kernel(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

/// Subset-depth kernel: Σ over all coordinate subsets of size 1..=D of the
/// Euclidean norm of the coordinate differences on that subset.
pub fn depth_kernel(t1: &FunctionSample, t2: &FunctionSample, d: usize) -> Result<f64> {
    if t1.len() != t2.len() {
        return Err(Error::ShapeMismatch {
            expected: t1.len(),
            got: t2.len(),
        });
    }
    validate_depth(d, t1.len())?;
    let diff2: Vec<f64> = t1
        .values
        .iter()
        .zip(&t2.values)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    Ok(subset_norm_sum(&diff2, d))
}

fn validate_depth(d: usize, n: usize) -> Result<()> {
    if d < 1 || d > n {
        return Err(Error::InvalidParam(format!(
            "kernel depth {d} outside 1..={n} (number of evaluation points)"
        )));
    }
    Ok(())
}

/// Exact enumeration of all nonempty index subsets of size <= d, in
/// lexicographic DFS order (fixed order keeps sums reproducible).
fn subset_norm_sum(diff2: &[f64], d: usize) -> f64 {
    fn walk(diff2: &[f64], start: usize, depth_left: usize, acc: f64, total: &mut f64) {
        for i in start..diff2.len() {
            let s = acc + diff2[i];
            *total += s.sqrt();
            if depth_left > 1 {
                walk(diff2, i + 1, depth_left - 1, s, total);
            }
        }
    }
    let mut total = 0.0;
    walk(diff2, 0, d, 0.0, &mut total);
    total
}

/// Two-sample N-distance estimate for scalar samples under [`euclid_kernel`].
///
/// The estimator only depends on the samples as multisets, so both are
/// sorted before accumulation; samples that are equal as multisets then
/// run through bitwise-identical arithmetic and return exactly 0.
pub fn ndist_scalar(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyInput("N-distance sample".into()));
    }
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    Ok(bilinear(&xs, &ys, |a, b| euclid_kernel(*a, *b)))
}

/// Two-sample N-distance estimate for function samples under the
/// subset-depth kernel of depth `d`.
///
/// As with [`ndist_scalar`], samples are put into a canonical
/// (lexicographic) order first so multiset-equal inputs give exactly 0.
pub fn ndist_function(ts: &[FunctionSample], us: &[FunctionSample], d: usize) -> Result<f64> {
    if ts.is_empty() || us.is_empty() {
        return Err(Error::EmptyInput("N-distance sample".into()));
    }
    let n = ts[0].len();
    for t in ts.iter().chain(us) {
        if t.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: t.len(),
            });
        }
    }
    validate_depth(d, n)?;
    let lex = |a: &&FunctionSample, b: &&FunctionSample| {
        let mut ord = std::cmp::Ordering::Equal;
        for (x, y) in a.values.iter().zip(&b.values) {
            ord = x.total_cmp(y);
            if ord != std::cmp::Ordering::Equal {
                break;
            }
        }
        ord
    };
    let mut ts: Vec<&FunctionSample> = ts.iter().collect();
    let mut us: Vec<&FunctionSample> = us.iter().collect();
    ts.sort_by(lex);
    us.sort_by(lex);
    Ok(bilinear(&ts, &us, |a, b| {
        let diff2: Vec<f64> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .collect();
        subset_norm_sum(&diff2, d)
    }))
}

// The raw combination can round to a tiny negative when the true value is
// (near) zero; the statistic is nonnegative for these kernels, so results
// are clamped at 0.
fn bilinear<T>(xs: &[T], ys: &[T], l: impl Fn(&T, &T) -> f64) -> f64 {
    let m1 = xs.len() as f64;
    let m2 = ys.len() as f64;
    let mut sxy = 0.0;
    for x in xs {
        for y in ys {
            sxy += l(x, y);
        }
    }
    let mut sxx = 0.0;
    for a in xs {
        for b in xs {
            sxx += l(a, b);
        }
    }
    let mut syy = 0.0;
    for a in ys {
        for b in ys {
            syy += l(a, b);
        }
    }
    (2.0 * sxy / (m1 * m2) - sxx / (m1 * m1) - syy / (m2 * m2)).max(0.0)
}

/// Cached symmetric kernel matrix over a pooled sample list.
///
/// Built once per test; permutation rounds evaluate the estimator by
/// reindexing into it. Entries are stored as a full n×n row-major block
/// (the pools here are small enough that halving storage is not worth the
/// index gymnastics).
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    kernel: KernelChoice,
    vals: Vec<f64>,
}

impl KernelMatrix {
    /// Scalar-channel matrix: entry (i,j) = |pooled[i] − pooled[j]|.
    pub fn from_scalars(pooled: &[f64]) -> Result<Self> {
        if pooled.is_empty() {
            return Err(Error::EmptyInput("kernel matrix sample pool".into()));
        }
        let n = pooled.len();
        let mut vals = vec![0.0; n * n];
        vals.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = euclid_kernel(pooled[i], pooled[j]);
            }
        });
        Ok(KernelMatrix {
            n,
            kernel: KernelChoice::EuclideanScalar,
            vals,
        })
    }

    /// Function-channel matrix under the subset-depth kernel.
    pub fn from_functions(pooled: &[FunctionSample], depth: usize) -> Result<Self> {
        if pooled.is_empty() {
            return Err(Error::EmptyInput("kernel matrix sample pool".into()));
        }
        let len = pooled[0].len();
        for t in pooled {
            if t.len() != len {
                return Err(Error::ShapeMismatch {
                    expected: len,
                    got: t.len(),
                });
            }
        }
        validate_depth(depth, len)?;
        let n = pooled.len();
        let mut vals = vec![0.0; n * n];
        vals.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                let diff2: Vec<f64> = pooled[i]
                    .values
                    .iter()
                    .zip(&pooled[j].values)
                    .map(|(x, y)| (x - y) * (x - y))
                    .collect();
                *cell = subset_norm_sum(&diff2, depth);
            }
        });
        Ok(KernelMatrix {
            n,
            kernel: KernelChoice::SubsetDepth { depth },
            vals,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> KernelChoice {
        self.kernel
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.vals[i * self.n + j]
    }

    /// N-distance statistic for the split of `idx` into its first `m1`
    /// entries (group X) and the rest (group Y). `idx` must be a
    /// permutation of 0..n; the identity permutation gives the observed
    /// statistic. Accumulation is row-major over the index groups, and the
    /// result is clamped at 0 like the direct estimators.
    pub fn statistic(&self, idx: &[usize], m1: usize) -> f64 {
        debug_assert_eq!(idx.len(), self.n);
        debug_assert!(m1 >= 1 && m1 < idx.len());
        let (gx, gy) = idx.split_at(m1);
        let mf1 = gx.len() as f64;
        let mf2 = gy.len() as f64;
        let mut sxy = 0.0;
        for &i in gx {
            for &j in gy {
                sxy += self.at(i, j);
            }
        }
        let mut sxx = 0.0;
        for &i in gx {
            for &j in gx {
                sxx += self.at(i, j);
            }
        }
        let mut syy = 0.0;
        for &i in gy {
            for &j in gy {
                syy += self.at(i, j);
            }
        }
        (2.0 * sxy / (mf1 * mf2) - sxx / (mf1 * mf1) - syy / (mf2 * mf2)).max(0.0)
    }

    /// Debug dump: n rows of n comma-separated values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.at(i, j));
            }
            out.push('\n');
        }
        out
    }
}
