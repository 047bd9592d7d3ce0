//! Permutation tests for distributional similarity of component samples.
//!
//! The joint test takes two samples of shape descriptors, computes the
//! observed N-distance on each channel (perimeter/area ratios under the
//! Euclidean kernel, testing functions under the subset-depth kernel),
//! then relabels the pooled sample s times. Both channels are evaluated on
//! the same relabeling in every round, so the joint p-value reflects the
//! dependence between the channels instead of assuming independence.
//!
//! p-values use the add-one estimator (#{perm ≥ obs} + 1)/(s + 1), which is
//! never smaller than 1/(s+1) and never exceeds 1.
//!
//! Everything here is deterministic given the config seed: round i draws
//! its relabeling from an own counter-indexed RNG stream, so results do not
//! depend on thread scheduling.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::RngCore;
use rayon::prelude::*;

use crate::descriptors::{describe_component, ShapeDescriptor};
use crate::error::{Error, Result};
use crate::imagery::{BinaryImage, Component};
use crate::ndist::{FunctionSample, KernelMatrix};
use crate::rng::{child_seed, stream_rng};

/// Tuning knobs for the joint similarity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationConfig {
    /// Number of permutation rounds.
    pub s: usize,
    /// Master seed; every random draw derives from it.
    pub seed: u64,
    /// Depth of the subset kernel on the curve channel.
    pub depth: usize,
    /// Bins of the testing functions (consistency-checked against inputs).
    pub bins: usize,
    /// Disc radius the descriptors were computed with (bookkeeping only).
    pub radius: u32,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            s: 999,
            seed: 0,
            depth: 2,
            bins: 10,
            radius: 5,
        }
    }
}

/// Result of one joint similarity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    /// Observed N-distance between the ratio samples.
    pub n_ratio_obs: f64,
    /// Observed N-distance between the testing-function samples.
    pub n_curve_obs: f64,
    /// Marginal p-value of the ratio channel.
    pub p_ratio: f64,
    /// Marginal p-value of the curve channel.
    pub p_curve: f64,
    /// Joint p-value: both channels at or above their observed value in the
    /// same round.
    pub p_joint: f64,
    /// Number of permutation rounds actually run.
    pub s_used: usize,
}

/// Add-one permutation p-value: (#{perm ≥ obs} + 1) / (len + 1).
pub fn permutation_pvalue(obs: f64, perm: &[f64]) -> Result<f64> {
    if perm.is_empty() {
        return Err(Error::EmptyInput("permutation statistics".into()));
    }
    let hits = perm.iter().filter(|&&v| v >= obs).count();
    Ok((hits + 1) as f64 / (perm.len() + 1) as f64)
}

/// Runs the two-channel permutation test on descriptor samples.
pub fn joint_similarity_test(
    dx: &[ShapeDescriptor],
    dy: &[ShapeDescriptor],
    cfg: &PermutationConfig,
) -> Result<TestOutcome> {
    if dx.len() < 2 {
        return Err(Error::TooFewSamples {
            what: "descriptor sample X".into(),
            got: dx.len(),
            need: 2,
        });
    }
    if dy.len() < 2 {
        return Err(Error::TooFewSamples {
            what: "descriptor sample Y".into(),
            got: dy.len(),
            need: 2,
        });
    }
    if cfg.s < 1 {
        return Err(Error::InvalidParam(
            "permutation count must be at least 1".into(),
        ));
    }
    for d in dx.iter().chain(dy) {
        if d.curve.bins != cfg.bins {
            return Err(Error::ShapeMismatch {
                expected: cfg.bins,
                got: d.curve.bins,
            });
        }
    }

    let m1 = dx.len();
    let n = m1 + dy.len();
    let ratios: Vec<f64> = dx.iter().chain(dy).map(|d| d.ratio).collect();
    let curves: Vec<FunctionSample> = dx.iter().chain(dy).map(|d| (&d.curve).into()).collect();
    let ratio_m = KernelMatrix::from_scalars(&ratios)?;
    let curve_m = KernelMatrix::from_functions(&curves, cfg.depth)?;

    let identity: Vec<usize> = (0..n).collect();
    let obs_ratio = ratio_m.statistic(&identity, m1);
    let obs_curve = curve_m.statistic(&identity, m1);

    // Round i shuffles on stream i (1-based; stream 0 stays free for
    // callers that sample with the same seed).
    let rounds: Vec<(f64, f64)> = (1..=cfg.s)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let mut idx = identity.clone();
            idx.shuffle(&mut rng);
            (ratio_m.statistic(&idx, m1), curve_m.statistic(&idx, m1))
        })
        .collect();

    let mut hits_ratio = 0usize;
    let mut hits_curve = 0usize;
    let mut hits_joint = 0usize;
    for &(sr, sc) in &rounds {
        let hr = sr >= obs_ratio;
        let hc = sc >= obs_curve;
        hits_ratio += hr as usize;
        hits_curve += hc as usize;
        hits_joint += (hr && hc) as usize;
    }
    let denom = (cfg.s + 1) as f64;
    Ok(TestOutcome {
        n_ratio_obs: obs_ratio,
        n_curve_obs: obs_curve,
        p_ratio: (hits_ratio + 1) as f64 / denom,
        p_curve: (hits_curve + 1) as f64 / denom,
        p_joint: (hits_joint + 1) as f64 / denom,
        s_used: cfg.s,
    })
}

/// Uniform subset of `k` distinct indices out of 0..n, returned sorted.
fn sample_indices(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Draws `k` components without replacement, preserving input order.
///
/// With `k` at or above the pool size the whole pool is returned unchanged.
pub fn sample_components(comps: &[Component], k: usize, seed: u64) -> Result<Vec<Component>> {
    if comps.is_empty() {
        return Err(Error::EmptyInput("component pool".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParam("sample size k must be at least 1".into()));
    }
    if k >= comps.len() {
        return Ok(comps.to_vec());
    }
    let mut rng = stream_rng(seed, 0);
    let idx = sample_indices(comps.len(), k, &mut rng);
    Ok(idx.into_iter().map(|i| comps[i].clone()).collect())
}

/// Repeatedly samples `k` descriptors from each pool and runs the joint
/// test, producing one outcome per repeat.
///
/// Repeat j derives all of its randomness (both draws and the inner
/// permutation seed) from stream j of the config seed, so repeats are
/// independent and the whole batch is reproducible and parallel-safe.
pub fn bootstrap_pooled_outcomes(
    pool_x: &[ShapeDescriptor],
    pool_y: &[ShapeDescriptor],
    k: usize,
    repeats: usize,
    cfg: &PermutationConfig,
) -> Result<Vec<TestOutcome>> {
    if k < 2 {
        return Err(Error::InvalidParam(
            "bootstrap sample size k must be at least 2".into(),
        ));
    }
    if repeats < 1 {
        return Err(Error::InvalidParam("repeats must be at least 1".into()));
    }
    if pool_x.len() < k {
        return Err(Error::TooFewSamples {
            what: "descriptor pool X".into(),
            got: pool_x.len(),
            need: k,
        });
    }
    if pool_y.len() < k {
        return Err(Error::TooFewSamples {
            what: "descriptor pool Y".into(),
            got: pool_y.len(),
            need: k,
        });
    }
    (0..repeats)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(cfg.seed, j as u64);
            let xi = sample_indices(pool_x.len(), k, &mut rng);
            let yi = sample_indices(pool_y.len(), k, &mut rng);
            let dx: Vec<ShapeDescriptor> = xi.into_iter().map(|i| pool_x[i].clone()).collect();
            let dy: Vec<ShapeDescriptor> = yi.into_iter().map(|i| pool_y[i].clone()).collect();
            let inner = PermutationConfig {
                seed: rng.next_u64(),
                ..*cfg
            };
            joint_similarity_test(&dx, &dy, &inner)
        })
        .collect()
}

/// Like [`bootstrap_pooled_outcomes`], reduced to the joint p-values.
pub fn bootstrap_pooled_test(
    pool_x: &[ShapeDescriptor],
    pool_y: &[ShapeDescriptor],
    k: usize,
    repeats: usize,
    cfg: &PermutationConfig,
) -> Result<Vec<f64>> {
    Ok(bootstrap_pooled_outcomes(pool_x, pool_y, k, repeats, cfg)?
        .into_iter()
        .map(|o| o.p_joint)
        .collect())
}

/// One labeled image with its extracted components, ready for comparison.
#[derive(Debug, Clone)]
pub struct ImageComponents {
    pub label: String,
    pub image: BinaryImage,
    pub components: Vec<Component>,
}

/// Aggregate of the repeated tests behind one matrix cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSummary {
    pub mean_p: f64,
    pub count_below_05: usize,
    pub repeats: usize,
}

/// Upper-triangular (including diagonal) summary of all image pairs.
#[derive(Debug, Clone)]
pub struct PairwiseMatrix {
    pub labels: Vec<String>,
    /// cells[i][j - i] summarizes pair (i, j) for j >= i.
    pub cells: Vec<Vec<PairSummary>>,
}

/// Compares every unordered pair of images (self-pairs included) with
/// repeated subsampled joint tests.
///
/// Each cell repeatedly draws `k` components from each image (two
/// independent draws when an image is paired with itself), describes them
/// at the config radius and bin count, and records the joint p-value.
/// Images with fewer than `k` components are used whole, with a warning.
pub fn pairwise_matrix(
    items: &[ImageComponents],
    k: usize,
    repeats: usize,
    cfg: &PermutationConfig,
    restrict: bool,
) -> Result<PairwiseMatrix> {
    if items.len() < 2 {
        return Err(Error::TooFewSamples {
            what: "images for pairwise comparison".into(),
            got: items.len(),
            need: 2,
        });
    }
    if k < 2 {
        return Err(Error::InvalidParam(
            "per-image sample size k must be at least 2".into(),
        ));
    }
    if repeats < 1 {
        return Err(Error::InvalidParam("repeats must be at least 1".into()));
    }

    // Describe every component of every image once up front.
    let mut described: Vec<Vec<ShapeDescriptor>> = Vec::with_capacity(items.len());
    for item in items {
        if item.components.len() < 2 {
            return Err(Error::TooFewSamples {
                what: format!("components of image {}", item.label),
                got: item.components.len(),
                need: 2,
            });
        }
        if item.components.len() < k {
            log::warn!(
                "image {}: only {} components, sampling them all instead of k={}",
                item.label,
                item.components.len(),
                k
            );
        }
        let ds: Result<Vec<ShapeDescriptor>> = item
            .components
            .iter()
            .map(|c| describe_component(&item.image, c, cfg.radius, cfg.bins, restrict))
            .collect();
        described.push(ds?);
    }

    let n = items.len();
    let mut cells: Vec<Vec<PairSummary>> = Vec::with_capacity(n);
    let mut cell_index = 0u64;
    for i in 0..n {
        let mut row = Vec::with_capacity(n - i);
        for j in i..n {
            let cell_seed = child_seed(cfg.seed, cell_index);
            cell_index += 1;
            let cell_cfg = PermutationConfig {
                seed: cell_seed,
                ..*cfg
            };
            let kx = k.min(described[i].len());
            let ky = k.min(described[j].len());
            let outcomes = if i == j {
                // Self-pair: two independent draws from the same pool.
                bootstrap_self_outcomes(&described[i], kx, repeats, &cell_cfg)?
            } else {
                bootstrap_pooled_outcomes(&described[i], &described[j], kx.min(ky), repeats, &cell_cfg)?
            };
            let mean_p = outcomes.iter().map(|o| o.p_joint).sum::<f64>() / outcomes.len() as f64;
            let count_below_05 = outcomes.iter().filter(|o| o.p_joint < 0.05).count();
            row.push(PairSummary {
                mean_p,
                count_below_05,
                repeats: outcomes.len(),
            });
        }
        cells.push(row);
    }
    Ok(PairwiseMatrix {
        labels: items.iter().map(|it| it.label.clone()).collect(),
        cells,
    })
}

/// Self-pair bootstrap: per repeat, two disjoint-seeded draws from one pool.
fn bootstrap_self_outcomes(
    pool: &[ShapeDescriptor],
    k: usize,
    repeats: usize,
    cfg: &PermutationConfig,
) -> Result<Vec<TestOutcome>> {
    if k < 2 {
        return Err(Error::InvalidParam(
            "bootstrap sample size k must be at least 2".into(),
        ));
    }
    if pool.len() < k {
        return Err(Error::TooFewSamples {
            what: "descriptor pool".into(),
            got: pool.len(),
            need: k,
        });
    }
    (0..repeats)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(cfg.seed, j as u64);
            let xi = sample_indices(pool.len(), k, &mut rng);
            let yi = sample_indices(pool.len(), k, &mut rng);
            let dx: Vec<ShapeDescriptor> = xi.into_iter().map(|i| pool[i].clone()).collect();
            let dy: Vec<ShapeDescriptor> = yi.into_iter().map(|i| pool[i].clone()).collect();
            let inner = PermutationConfig {
                seed: rng.next_u64(),
                ..*cfg
            };
            joint_similarity_test(&dx, &dy, &inner)
        })
        .collect()
}

impl PairwiseMatrix {
    fn summary_csv(&self, value: impl Fn(&PairSummary) -> String) -> String {
        let mut out = String::new();
        out.push_str("image");
        for label in &self.labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(label);
            for j in 0..self.labels.len() {
                out.push(',');
                if j >= i {
                    out.push_str(&value(&self.cells[i][j - i]));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Upper-triangular table of mean joint p-values.
    pub fn mean_p_csv(&self) -> String {
        self.summary_csv(|c| format!("{:.6}", c.mean_p))
    }

    /// Upper-triangular table of counts of repeats with p_joint < 0.05.
    pub fn count_csv(&self) -> String {
        self.summary_csv(|c| c.count_below_05.to_string())
    }
}

/// CSV of one outcome per row over a batch of tests.
pub fn pvalues_csv(outcomes: &[TestOutcome]) -> String {
    let mut out = String::from("p_joint,p_ratio,p_curve\n");
    for o in outcomes {
        let _ = writeln!(out, "{},{},{}", o.p_joint, o.p_ratio, o.p_curve);
    }
    out
}

/// CSV of a single outcome, one field per column.
pub fn outcome_csv(o: &TestOutcome) -> String {
    format!(
        "n_ratio_obs,n_curve_obs,p_ratio,p_curve,p_joint,s_used\n{},{},{},{},{},{}\n",
        o.n_ratio_obs, o.n_curve_obs, o.p_ratio, o.p_curve, o.p_joint, o.s_used
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::TestingFunction;
    use crate::imagery::{label_components, Connectivity};

    fn descriptor(ratio: f64, hist: &[f64]) -> ShapeDescriptor {
        ShapeDescriptor {
            ratio,
            curve: TestingFunction {
                bins: hist.len(),
                values: hist.to_vec(),
                support_size: 10,
            },
        }
    }

    fn cfg(s: usize, seed: u64, bins: usize) -> PermutationConfig {
        PermutationConfig {
            s,
            seed,
            depth: 2,
            bins,
            radius: 5,
        }
    }

    fn synthetic_sample(seed: u64, m: usize, shift: f64) -> Vec<ShapeDescriptor> {
        let mut rng = stream_rng(seed, 7);
        (0..m)
            .map(|_| {
                let a: f64 = rng.gen::<f64>() * 0.5 + shift;
                let b = 1.0 - a;
                descriptor(0.3 + a * 0.4, &[a, b, 0.0, 0.0])
            })
            .collect()
    }

    #[test]
    fn pvalue_reference_values() {
        assert_eq!(permutation_pvalue(5.0, &[3.0, 5.0, 7.0]).unwrap(), 0.75);
        assert_eq!(permutation_pvalue(10.0, &[1.0, 2.0, 3.0]).unwrap(), 0.25);
        assert_eq!(permutation_pvalue(0.0, &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert!(permutation_pvalue(1.0, &[]).is_err());
    }

    #[test]
    fn identical_samples_give_zero_observed_and_p_one() {
        let d = synthetic_sample(1, 6, 0.2);
        let out = joint_similarity_test(&d, &d, &cfg(99, 3, 4)).unwrap();
        assert_eq!(out.n_ratio_obs, 0.0);
        assert_eq!(out.n_curve_obs, 0.0);
        // Every permuted statistic is >= 0 = observed, so all p-values are 1.
        assert_eq!(out.p_ratio, 1.0);
        assert_eq!(out.p_curve, 1.0);
        assert_eq!(out.p_joint, 1.0);
        assert_eq!(out.s_used, 99);
    }

    #[test]
    fn joint_pvalue_bounded_by_marginals() {
        // joint rounds are a subset of each marginal's exceedance rounds
        let dx = synthetic_sample(11, 8, 0.1);
        let dy = synthetic_sample(12, 8, 0.35);
        let out = joint_similarity_test(&dx, &dy, &cfg(199, 5, 4)).unwrap();
        assert!(out.p_joint <= out.p_ratio);
        assert!(out.p_joint <= out.p_curve);
        assert!(out.p_joint <= 1.0);
        assert!(out.p_joint >= 1.0 / 200.0);
        assert!(out.p_ratio >= 1.0 / 200.0 && out.p_curve >= 1.0 / 200.0);
    }

    #[test]
    fn outcome_is_deterministic_across_thread_counts() {
        let dx = synthetic_sample(21, 7, 0.15);
        let dy = synthetic_sample(22, 9, 0.3);
        let c = cfg(499, 42, 4);
        let baseline = joint_similarity_test(&dx, &dy, &c).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| joint_similarity_test(&dx, &dy, &c).unwrap());
        assert_eq!(baseline, single);
    }

    #[test]
    fn rejects_undersized_and_mismatched_samples() {
        let d = synthetic_sample(3, 6, 0.2);
        assert!(matches!(
            joint_similarity_test(&d[..1], &d, &cfg(9, 0, 4)),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            joint_similarity_test(&d, &d[..1], &cfg(9, 0, 4)),
            Err(Error::TooFewSamples { .. })
        ));
        let other = vec![descriptor(0.5, &[0.5, 0.5]); 4];
        assert!(matches!(
            joint_similarity_test(&d, &other, &cfg(9, 0, 4)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn relabeling_is_uniform_over_splits() {
        // m1 = m2 = 3: the permuted group assignment projects to one of
        // C(6,3) = 20 equally likely splits. Chi-square over the split
        // frequencies at alpha = 0.01 (19 df, critical 36.19).
        let n = 6;
        let m1 = 3;
        let rounds = 20_000usize;
        let mut freq = std::collections::HashMap::new();
        for i in 1..=rounds {
            let mut rng = stream_rng(0xfeed, i as u64);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let mut left: Vec<usize> = idx[..m1].to_vec();
            left.sort_unstable();
            *freq.entry(left).or_insert(0usize) += 1;
        }
        assert_eq!(freq.len(), 20);
        let expect = rounds as f64 / 20.0;
        let chi2: f64 = freq
            .values()
            .map(|&o| {
                let d = o as f64 - expect;
                d * d / expect
            })
            .sum();
        assert!(chi2 < 36.19, "chi2 = {chi2}");
    }

    #[test]
    fn pool_split_pvalues_are_roughly_uniform() {
        // Two samples drawn from one synthetic pool per run: p-values should
        // be close to uniform. KS distance against U(0,1) below 0.20.
        let pool = synthetic_sample(77, 60, 0.2);
        let runs = 100;
        let c = cfg(199, 1234, 4);
        let ps = bootstrap_pooled_test(&pool, &pool, 10, runs, &c).unwrap();
        let mut sorted = ps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = sorted
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let lo = i as f64 / runs as f64;
                let hi = (i + 1) as f64 / runs as f64;
                (p - lo).abs().max((p - hi).abs())
            })
            .fold(0.0f64, f64::max);
        assert!(ks < 0.20, "KS = {ks}");
    }

    #[test]
    fn sampling_components_preserves_order_and_is_deterministic() {
        let mut img = BinaryImage::new(20, 3);
        for i in 0..6 {
            img.set(i * 3, 1, true);
        }
        let comps = label_components(&img, Connectivity::Eight);
        assert_eq!(comps.len(), 6);

        let all = sample_components(&comps, 6, 9).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all, comps);
        let more = sample_components(&comps, 10, 9).unwrap();
        assert_eq!(more, comps);

        let a = sample_components(&comps, 3, 5).unwrap();
        let b = sample_components(&comps, 3, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let ids: Vec<u32> = a.iter().map(|c| c.id).collect();
        let mut sorted_ids = ids.clone();
        sorted_ids.sort_unstable();
        assert_eq!(ids, sorted_ids, "subset must keep pool order");

        assert!(sample_components(&[], 3, 5).is_err());
        assert!(sample_components(&comps, 0, 5).is_err());
    }

    #[test]
    fn sampling_inclusion_is_uniform() {
        let mut img = BinaryImage::new(20, 3);
        for i in 0..6 {
            img.set(i * 3, 1, true);
        }
        let comps = label_components(&img, Connectivity::Eight);
        let mut counts = vec![0usize; 6];
        let trials = 6000;
        for seed in 0..trials {
            for c in sample_components(&comps, 1, seed as u64).unwrap() {
                counts[(c.id - 1) as usize] += 1;
            }
        }
        for &c in &counts {
            let f = c as f64 / trials as f64;
            assert!((f - 1.0 / 6.0).abs() < 0.02, "inclusion {f}");
        }
    }

    #[test]
    fn bootstrap_errors_name_the_pool() {
        let pool = synthetic_sample(5, 5, 0.2);
        let err = bootstrap_pooled_outcomes(&pool, &pool, 10, 3, &cfg(9, 0, 4)).unwrap_err();
        assert!(err.to_string().contains("pool X"), "{err}");
        let big = synthetic_sample(5, 15, 0.2);
        let err = bootstrap_pooled_outcomes(&big, &pool, 10, 3, &cfg(9, 0, 4)).unwrap_err();
        assert!(err.to_string().contains("pool Y"), "{err}");
    }

    #[test]
    fn joint_counts_are_bounded_by_marginal_counts() {
        // exceedance counts recovered from p = (hits+1)/(s+1)
        for seed in 0..40u64 {
            let dx = synthetic_sample(seed * 2 + 1, 5, 0.1);
            let dy = synthetic_sample(seed * 2 + 2, 6, 0.25);
            let c = cfg(49, seed, 4);
            let out = joint_similarity_test(&dx, &dy, &c).unwrap();
            let denom = (c.s + 1) as f64;
            let hits = |p: f64| (p * denom).round() as i64 - 1;
            assert!(hits(out.p_joint) <= hits(out.p_ratio));
            assert!(hits(out.p_joint) <= hits(out.p_curve));
            assert!(out.p_joint >= 1.0 / denom && out.p_joint <= 1.0);
        }
    }

    #[test]
    fn pairwise_matrix_layout_and_determinism() {
        let mut img_a = BinaryImage::new(40, 40);
        let mut img_b = BinaryImage::new(40, 40);
        // image a: 3x3 squares; image b: 1x5 bars
        for gy in 0..4 {
            for gx in 0..4 {
                for dy in 0..3 {
                    for dx in 0..3 {
                        img_a.set(gx * 10 + dx, gy * 10 + dy, true);
                    }
                }
                for dx in 0..5 {
                    img_b.set(gx * 10 + dx, gy * 10, true);
                }
            }
        }
        let items = vec![
            ImageComponents {
                label: "a".into(),
                components: label_components(&img_a, Connectivity::Eight),
                image: img_a,
            },
            ImageComponents {
                label: "b".into(),
                components: label_components(&img_b, Connectivity::Eight),
                image: img_b,
            },
        ];
        let c = PermutationConfig {
            s: 99,
            seed: 11,
            depth: 2,
            bins: 5,
            radius: 2,
        };
        let m1 = pairwise_matrix(&items, 8, 5, &c, true).unwrap();
        let m2 = pairwise_matrix(&items, 8, 5, &c, true).unwrap();
        assert_eq!(m1.mean_p_csv(), m2.mean_p_csv());
        assert_eq!(m1.count_csv(), m2.count_csv());
        assert_eq!(m1.cells.len(), 2);
        assert_eq!(m1.cells[0].len(), 2);
        assert_eq!(m1.cells[1].len(), 1);
        let csv = m1.mean_p_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "image,a,b");
        assert!(lines[1].starts_with("a,"));
        // row for b leaves the sub-diagonal cell empty
        assert!(lines[2].starts_with("b,,"));
        for row in &m1.cells {
            for cell in row {
                assert!(cell.mean_p > 0.0 && cell.mean_p <= 1.0);
                assert!(cell.count_below_05 <= cell.repeats);
            }
        }
    }

    #[test]
    fn csv_formats() {
        let o = TestOutcome {
            n_ratio_obs: 0.5,
            n_curve_obs: 1.25,
            p_ratio: 0.1,
            p_curve: 0.2,
            p_joint: 0.25,
            s_used: 99,
        };
        assert_eq!(
            outcome_csv(&o),
            "n_ratio_obs,n_curve_obs,p_ratio,p_curve,p_joint,s_used\n0.5,1.25,0.1,0.2,0.25,99\n"
        );
        let csv = pvalues_csv(&[o]);
        assert_eq!(csv, "p_joint,p_ratio,p_curve\n0.25,0.1,0.2\n");
    }
}
