//! Total variation and Jensen-Shannon divergence (natural log) on finite
//! supports, plus a histogram estimator for low-dimensional samples.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDist;
use crate::nn::Tensor;
use crate::{Error, Result};

/// Histogram estimators are exponential in dimension; this is the cap.
pub const MAX_HISTOGRAM_DIM: usize = 3;

pub const DEFAULT_SMOOTHING: f64 = 1e-9;

/// `½ Σ |p - q|` over aligned probability vectors.
pub fn tv_probs(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    (0.5 * s).clamp(0.0, 1.0)
}

/// `½ KL(p‖m) + ½ KL(q‖m)` with `m = (p + q) / 2` over aligned vectors, in nats.
pub fn jsd_probs(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        let term = |x: f64| if x > 0.0 { x * (x / m).ln() } else { 0.0 };
        acc += term(a) + term(b);
    }
    (0.5 * acc).clamp(0.0, std::f64::consts::LN_2)
}

/// Total variation between two finite distributions; points missing from one
/// support carry probability zero there.
pub fn tv_discrete(p: &DiscreteDist, q: &DiscreteDist) -> f64 {
    let (_, a, b) = p.align(q);
    tv_probs(&a, &b)
}

/// Jensen-Shannon divergence in nats, in `[0, ln 2]`.
pub fn jsd_discrete(p: &DiscreteDist, q: &DiscreteDist) -> f64 {
    let (_, a, b) = p.align(q);
    jsd_probs(&a, &b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Histogram,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Histogram => "histogram",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub tv: f64,
    pub jsd_nats: f64,
    pub method: Method,
    pub n_p: usize,
    pub n_q: usize,
    /// Samples that fell outside the bounds and were clipped into edge bins.
    pub clipped_p: usize,
    pub clipped_q: usize,
}

impl DivergenceReport {
    pub const CSV_HEADER: &'static str = "tv,jsd_nats,method,n_p,n_q";

    pub fn exact(p: &DiscreteDist, q: &DiscreteDist) -> Self {
        Self {
            tv: tv_discrete(p, q),
            jsd_nats: jsd_discrete(p, q),
            method: Method::Exact,
            n_p: p.len(),
            n_q: q.len(),
            clipped_p: 0,
            clipped_q: 0,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.tv, self.jsd_nats, self.method, self.n_p, self.n_q
        )
    }
}

/// Equal-width grid histogram over a bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramEstimator {
    /// `[low, high]` per dimension.
    pub bounds: Vec<[f64; 2]>,
    #[serde(default = "default_bins")]
    pub bins_per_dim: usize,
    /// Pseudo-count added to every bin before normalizing.
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

fn default_bins() -> usize {
    64
}

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

impl HistogramEstimator {
    pub fn new(bounds: Vec<[f64; 2]>, bins_per_dim: usize) -> Result<Self> {
        let est = Self {
            bounds,
            bins_per_dim,
            smoothing: DEFAULT_SMOOTHING,
        };
        est.validate()?;
        Ok(est)
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Result<Self> {
        self.smoothing = smoothing;
        self.validate()?;
        Ok(self)
    }

    /// Box covering `samples` with each side widened by `pad` times its extent.
    pub fn covering(samples: &Tensor, pad: f64, bins_per_dim: usize) -> Result<Self> {
        if samples.rows() == 0 {
            return Err(Error::config("estimator.bounds", "no samples to cover"));
        }
        let d = samples.cols();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for row in samples.iter_rows() {
            for j in 0..d {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        let bounds = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| {
                let w = (h - l).max(1e-6);
                [l - pad * w, h + pad * w]
            })
            .collect();
        Self::new(bounds, bins_per_dim)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(Error::config(
                "estimator.bounds",
                "need at least one dimension",
            ));
        }
        if self.bounds.len() > MAX_HISTOGRAM_DIM {
            return Err(Error::UnsupportedDimension {
                dim: self.bounds.len(),
                max: MAX_HISTOGRAM_DIM,
            });
        }
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(
                    format!("estimator.bounds[{i}]"),
                    format!("need low < high, got [{lo}, {hi}]"),
                ));
            }
        }
        if self.bins_per_dim < 2 {
            return Err(Error::config(
                "estimator.bins_per_dim",
                "must be at least 2",
            ));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::config("estimator.smoothing", "must be >= 0"));
        }
        Ok(())
    }

    fn num_bins(&self) -> usize {
        self.bins_per_dim.pow(self.dim() as u32)
    }

    /// Bin counts and the number of clipped samples.
    fn counts(&self, samples: &Tensor) -> (Vec<f64>, usize) {
        let b = self.bins_per_dim;
        let mut counts = vec![0.0; self.num_bins()];
        let mut clipped = 0;
        for row in samples.iter_rows() {
            let mut flat = 0;
            let mut outside = false;
            for (x, [lo, hi]) in row.iter().zip(&self.bounds) {
                let pos = (x - lo) / (hi - lo) * b as f64;
                outside |= *x < *lo || *x > *hi;
                let idx = if pos < 0.0 {
                    0
                } else {
                    (pos as usize).min(b - 1)
                };
                flat = flat * b + idx;
            }
            clipped += outside as usize;
            counts[flat] += 1.0;
        }
        (counts, clipped)
    }

    fn normalize(&self, counts: &[f64], n: usize) -> Vec<f64> {
        let total = n as f64 + self.smoothing * counts.len() as f64;
        counts
            .iter()
            .map(|c| (c + self.smoothing) / total)
            .collect()
    }
}

/// Bins both sample sets on the estimator's grid and compares the binned laws.
pub fn estimate_divergences(
    samples_p: &Tensor,
    samples_q: &Tensor,
    est: &HistogramEstimator,
) -> Result<DivergenceReport> {
    est.validate()?;
    let d = samples_p.cols();
    if d > MAX_HISTOGRAM_DIM {
        return Err(Error::UnsupportedDimension {
            dim: d,
            max: MAX_HISTOGRAM_DIM,
        });
    }
    if samples_p.rows() == 0 || samples_q.rows() == 0 {
        return Err(Error::config(
            "samples",
            "both sample sets must be nonempty",
        ));
    }
    if samples_q.cols() != d {
        return Err(Error::shape("sample dimension", d, samples_q.cols()));
    }
    if est.dim() != d {
        return Err(Error::shape("estimator dimension", d, est.dim()));
    }
    let (cp, clipped_p) = est.counts(samples_p);
    let (cq, clipped_q) = est.counts(samples_q);
    let p = est.normalize(&cp, samples_p.rows());
    let q = est.normalize(&cq, samples_q.rows());
    Ok(DivergenceReport {
        tv: tv_probs(&p, &q),
        jsd_nats: jsd_probs(&p, &q),
        method: Method::Histogram,
        n_p: samples_p.rows(),
        n_q: samples_q.rows(),
        clipped_p,
        clipped_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_dataset, DatasetSpec, GaussianComponent};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn two(a: f64, b: f64) -> DiscreteDist {
        DiscreteDist::on_line(&[0.0, 1.0], &[a, b]).unwrap()
    }

    #[test]
    fn tv_examples() {
        let p = two(0.5, 0.5);
        assert_eq!(tv_discrete(&p, &p), 0.0);
        let far = DiscreteDist::on_line(&[5.0, 6.0], &[0.5, 0.5]).unwrap();
        assert_eq!(tv_discrete(&p, &far), 1.0);
        assert!((tv_discrete(&p, &two(0.75, 0.25)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn jsd_examples() {
        let p = two(0.5, 0.5);
        assert_eq!(jsd_discrete(&p, &p), 0.0);
        let far = DiscreteDist::on_line(&[5.0, 6.0], &[0.5, 0.5]).unwrap();
        assert!((jsd_discrete(&p, &far) - LN_2).abs() < 1e-15);
        // m = (0.75, 0.25)
        let q = two(1.0, 0.0);
        let oracle = 0.5 * (0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln())
            + 0.5 * (1.0f64 / 0.75).ln();
        let got = jsd_discrete(&p, &q);
        assert!((got - oracle).abs() < 1e-15);
        assert!((got - 0.215761).abs() < 1e-6);
    }

    #[test]
    fn identical_sample_sets_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = DatasetSpec::Ring {
            radius: 1.0,
            noise_std: 0.1,
        };
        let s = sample_dataset(&spec, 2000, &mut rng).unwrap();
        let est = HistogramEstimator::new(vec![[-2.0, 2.0]; 2], 16).unwrap();
        let r = estimate_divergences(&s, &s, &est).unwrap();
        assert_eq!((r.tv, r.jsd_nats), (0.0, 0.0));
        assert_eq!(r.method, Method::Histogram);
    }

    #[test]
    fn disjoint_point_masses() {
        let p = Tensor::zeros(vec![500, 1]);
        let q = Tensor::matrix(500, 1, vec![10.0; 500]).unwrap();
        let est = HistogramEstimator::new(vec![[-1.0, 11.0]], 64).unwrap();
        let r = estimate_divergences(&p, &q, &est).unwrap();
        assert!(r.tv >= 0.99, "{}", r.tv);
        assert_eq!((r.clipped_p, r.clipped_q), (0, 0));
    }

    #[test]
    fn out_of_bounds_samples_are_clipped_and_counted() {
        let p = Tensor::matrix(3, 1, vec![-5.0, 0.5, 9.0]).unwrap();
        let est = HistogramEstimator::new(vec![[0.0, 1.0]], 4).unwrap();
        let r = estimate_divergences(&p, &p, &est).unwrap();
        assert_eq!(r.clipped_p, 2);
        let (counts, _) = est.counts(&p);
        assert_eq!(counts, vec![1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn estimator_rejects_high_dimension_and_bad_bounds() {
        let p = Tensor::zeros(vec![4, 4]);
        let est = HistogramEstimator {
            bounds: vec![[0.0, 1.0]; 3],
            bins_per_dim: 4,
            smoothing: 0.0,
        };
        assert!(matches!(
            estimate_divergences(&p, &p, &est),
            Err(Error::UnsupportedDimension { dim: 4, .. })
        ));
        assert!(HistogramEstimator::new(vec![[1.0, 0.0]], 4).is_err());
        assert!(HistogramEstimator::new(vec![[0.0, 1.0]], 1).is_err());
        assert!(HistogramEstimator::new(vec![[0.0, 1.0]; 4], 2).is_err());
    }

    /// `½∫|φ(x) - φ(x - 1)| dx` by composite Simpson on [-12, 13].
    fn gaussian_shift_tv_quadrature() -> f64 {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let f = |x: f64| 0.5 * (phi(x) - phi(x - 1.0)).abs();
        let (a, b, n) = (-12.0, 13.0, 200_000usize);
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_pair_calibration() {
        let oracle = gaussian_shift_tv_quadrature();
        assert!((oracle - 0.38292).abs() < 1e-5, "{oracle}");
        let g = |mean: f64| DatasetSpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: vec![mean],
                covariance_diagonal: vec![1.0],
                weight: 1.0,
            }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = sample_dataset(&g(0.0), 50_000, &mut rng).unwrap();
        let q = sample_dataset(&g(1.0), 50_000, &mut rng).unwrap();
        let est = HistogramEstimator::new(vec![[-6.0, 7.0]], 64).unwrap();
        let r = estimate_divergences(&p, &q, &est).unwrap();
        assert!((r.tv - oracle).abs() < 0.03, "tv {} vs {oracle}", r.tv);
    }

    #[test]
    fn histogram_converges_to_exact_tv() {
        let p = DiscreteDist::on_line(&[0.1, 0.5, 0.9], &[0.2, 0.5, 0.3]).unwrap();
        let q = DiscreteDist::on_line(&[0.1, 0.5, 0.9], &[0.4, 0.4, 0.2]).unwrap();
        let exact = tv_discrete(&p, &q);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sp = sample_dataset(&DatasetSpec::Discrete { table: p }, 100_000, &mut rng).unwrap();
        let sq = sample_dataset(&DatasetSpec::Discrete { table: q }, 100_000, &mut rng).unwrap();
        let est = HistogramEstimator::new(vec![[0.0, 1.0]], 10).unwrap();
        let r = estimate_divergences(&sp, &sq, &est).unwrap();
        assert!((r.tv - exact).abs() < 0.02, "{} vs {exact}", r.tv);
    }

    /// Random distribution over the fixed support {0, .., 5}.
    fn dist_strategy() -> impl Strategy<Value = DiscreteDist> {
        prop::collection::vec(0.0f64..1.0, 6).prop_filter_map("zero mass", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-6).then(|| {
                let xs: Vec<f64> = (0..6).map(f64::from).collect();
                let ps: Vec<f64> = w.iter().map(|v| v / total).collect();
                DiscreteDist::on_line(&xs, &ps).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn symmetric_and_bounded(p in dist_strategy(), q in dist_strategy()) {
            let (tv, jsd) = (tv_discrete(&p, &q), jsd_discrete(&p, &q));
            prop_assert_eq!(tv, tv_discrete(&q, &p));
            prop_assert_eq!(jsd, jsd_discrete(&q, &p));
            prop_assert!((0.0..=1.0).contains(&tv));
            prop_assert!((0.0..=LN_2 + 1e-12).contains(&jsd));
            prop_assert!(jsd <= tv + 1e-12);
            prop_assert!(jsd <= LN_2 * tv + 1e-12);
        }

        #[test]
        fn sqrt_jsd_triangle(p in dist_strategy(), q in dist_strategy(), r in dist_strategy()) {
            let d = |a: &DiscreteDist, b: &DiscreteDist| jsd_discrete(a, b).sqrt();
            prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
        }

        #[test]
        fn tv_mixture_concavity(
            ps in prop::collection::vec(dist_strategy(), 3),
            qs in prop::collection::vec(dist_strategy(), 3),
            w in prop::collection::vec(0.01f64..1.0, 3),
        ) {
            let total: f64 = w.iter().sum();
            let alpha: Vec<f64> = w.iter().map(|v| v / total).collect();
            let mix = |ds: &[DiscreteDist]| {
                let parts: Vec<(f64, &DiscreteDist)> = alpha.iter().copied().zip(ds).collect();
                DiscreteDist::mixture(&parts).unwrap()
            };
            let lhs = tv_discrete(&mix(&ps), &mix(&qs));
            let rhs: f64 = alpha.iter().zip(ps.iter().zip(&qs)).map(|(a, (p, q))| a * tv_discrete(p, q)).sum();
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
