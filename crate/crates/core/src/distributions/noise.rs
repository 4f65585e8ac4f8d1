use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DiscreteDist;
use crate::nn::Tensor;
use crate::{Error, Result};

/// The free component `g` of the spike-and-slab channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlabSpec {
    /// Independent zero-mean Gaussians with the given per-coordinate std.
    Gaussian {
        std: Vec<f64>,
    },
    /// Flat Dirichlet (all concentrations 1): uniform on the probability simplex.
    DirichletFlat {
        dimension: usize,
    },
    PointMass {
        offset: Vec<f64>,
    },
    Discrete {
        table: DiscreteDist,
    },
}

impl SlabSpec {
    pub fn standard_gaussian(dim: usize) -> Self {
        SlabSpec::Gaussian {
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SlabSpec::Gaussian { std } => std.len(),
            SlabSpec::DirichletFlat { dimension } => *dimension,
            SlabSpec::PointMass { offset } => offset.len(),
            SlabSpec::Discrete { table } => table.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::config("slab", "dimension must be at least 1"));
        }
        match self {
            SlabSpec::Gaussian { std } if std.iter().any(|s| !(*s > 0.0 && s.is_finite())) => {
                Err(Error::config("slab.std", "entries must be positive"))
            }
            SlabSpec::PointMass { offset } if offset.iter().any(|v| !v.is_finite()) => {
                Err(Error::config("slab.offset", "entries must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// The slab as a finite table, if it has finite support.
    pub fn as_discrete(&self) -> Option<DiscreteDist> {
        match self {
            SlabSpec::PointMass { offset } => DiscreteDist::point_mass(offset.clone()).ok(),
            SlabSpec::Discrete { table } => Some(table.clone()),
            _ => None,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            SlabSpec::Gaussian { .. } => "gaussian",
            SlabSpec::DirichletFlat { .. } => "dirichlet_flat",
            SlabSpec::PointMass { .. } => "point_mass",
            SlabSpec::Discrete { .. } => "discrete",
        }
    }

    /// Writes one slab draw into `out` (length `dim()`).
    fn draw_into<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) {
        match self {
            SlabSpec::Gaussian { std } => {
                for (o, s) in out.iter_mut().zip(std) {
                    let e: f64 = StandardNormal.sample(rng);
                    *o = s * e;
                }
            }
            SlabSpec::DirichletFlat { .. } => {
                let mut total = 0.0;
                for o in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *o = e;
                    total += e;
                }
                out.iter_mut().for_each(|o| *o /= total);
            }
            SlabSpec::PointMass { offset } => out.copy_from_slice(offset),
            SlabSpec::Discrete { table } => {
                out.copy_from_slice(&table.support()[table.sample_index(rng)]);
            }
        }
    }
}

/// Additive noise law `(1 - gamma) · (point mass at 0) + gamma · slab`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeSlabNoise {
    pub gamma: f64,
    pub slab: SlabSpec,
}

impl SpikeSlabNoise {
    pub fn new(gamma: f64, slab: SlabSpec) -> Result<Self> {
        let noise = Self { gamma, slab };
        noise.validate()?;
        Ok(noise)
    }

    /// The identity channel (never perturbs).
    pub fn none(dim: usize) -> Self {
        Self {
            gamma: 0.0,
            slab: SlabSpec::PointMass {
                offset: vec![0.0; dim],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config(
                "gamma",
                format!("{} is outside [0, 1]", self.gamma),
            ));
        }
        self.slab.validate()
    }

    pub fn dim(&self) -> usize {
        self.slab.dim()
    }

    fn bernoulli<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.gamma
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeSlabDraw {
    pub z: Tensor,
    /// `true` where the row came from the slab.
    pub slab_mask: Vec<bool>,
}

/// `n` independent draws of the channel noise.
pub fn sample_spike_slab<R: Rng + ?Sized>(
    noise: &SpikeSlabNoise,
    n: usize,
    rng: &mut R,
) -> SpikeSlabDraw {
    let d = noise.dim();
    let mut z = Tensor::zeros(vec![n, d]);
    let mut slab_mask = Vec::with_capacity(n);
    for i in 0..n {
        let hit = noise.bernoulli(rng);
        if hit {
            noise.slab.draw_into(z.row_mut(i), rng);
        }
        slab_mask.push(hit);
    }
    SpikeSlabDraw { z, slab_mask }
}

/// How the Bernoulli switch of the channel is drawn for a minibatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionMode {
    /// One switch per row: each row's law is exactly the channel output.
    #[default]
    PerSample,
    /// One switch for the whole minibatch.
    PerBatch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Injected {
    pub noised: Tensor,
    pub mask: Vec<bool>,
}

/// Adds channel noise to every row of `batch`.
pub fn inject_noise<R: Rng + ?Sized>(
    batch: &Tensor,
    noise: &SpikeSlabNoise,
    mode: InjectionMode,
    rng: &mut R,
) -> Result<Injected> {
    if batch.cols() != noise.dim() {
        return Err(Error::shape("noise dimension", batch.cols(), noise.dim()));
    }
    let n = batch.rows();
    let mut noised = batch.clone();
    let mask = match mode {
        InjectionMode::PerSample => {
            let draw = sample_spike_slab(noise, n, rng);
            for (i, &hit) in draw.slab_mask.iter().enumerate() {
                if hit {
                    add_row(noised.row_mut(i), draw.z.row(i));
                }
            }
            draw.slab_mask
        }
        InjectionMode::PerBatch => {
            let hit = noise.bernoulli(rng);
            if hit {
                let mut z = vec![0.0; noise.dim()];
                for i in 0..n {
                    noise.slab.draw_into(&mut z, rng);
                    add_row(noised.row_mut(i), &z);
                }
            }
            vec![hit; n]
        }
    };
    Ok(Injected { noised, mask })
}

fn add_row(row: &mut [f64], z: &[f64]) {
    row.iter_mut().zip(z).for_each(|(x, v)| *x += v);
}

/// Exact law of `X + Z` for finite `X` and a finite-support slab.
pub fn discrete_convolve(p_x: &DiscreteDist, noise: &SpikeSlabNoise) -> Result<DiscreteDist> {
    noise.validate()?;
    let slab = noise
        .slab
        .as_discrete()
        .ok_or(Error::UnsupportedSlab(noise.slab.kind_name()))?;
    if slab.dim() != p_x.dim() {
        return Err(Error::shape("slab dimension", p_x.dim(), slab.dim()));
    }
    let gamma = noise.gamma;
    let spike = p_x.iter().map(|(x, p)| (x.to_vec(), (1.0 - gamma) * p));
    let shifted = p_x.iter().flat_map(|(x, p)| {
        slab.iter().map(move |(z, q)| {
            let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
            (y, gamma * p * q)
        })
    });
    DiscreteDist::from_atoms(spike.chain(shifted).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point_slab(offset: Vec<f64>, gamma: f64) -> SpikeSlabNoise {
        SpikeSlabNoise::new(gamma, SlabSpec::PointMass { offset }).unwrap()
    }

    #[test]
    fn gamma_zero_never_fires() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise = SpikeSlabNoise::none(3);
        let draw = sample_spike_slab(&noise, 1000, &mut rng);
        assert!(draw.slab_mask.iter().all(|&m| !m));
        assert!(draw.z.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gamma_one_always_fires() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise = SpikeSlabNoise::new(1.0, SlabSpec::standard_gaussian(2)).unwrap();
        let draw = sample_spike_slab(&noise, 1000, &mut rng);
        assert!(draw.slab_mask.iter().all(|&m| m));
    }

    #[test]
    fn half_gamma_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise = SpikeSlabNoise::new(0.5, SlabSpec::standard_gaussian(1)).unwrap();
        let draw = sample_spike_slab(&noise, 10_000, &mut rng);
        let frac = draw.slab_mask.iter().filter(|&&m| m).count() as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
    }

    #[test]
    fn inject_gamma_zero_is_identity_in_both_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = Tensor::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        for mode in [InjectionMode::PerSample, InjectionMode::PerBatch] {
            let out = inject_noise(&batch, &SpikeSlabNoise::none(2), mode, &mut rng).unwrap();
            assert_eq!(out.noised, batch);
            assert!(out.mask.iter().all(|&m| !m));
        }
    }

    #[test]
    fn per_batch_gamma_one_perturbs_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch = Tensor::zeros(vec![5, 2]);
        let noise = point_slab(vec![1.0, 2.0], 1.0);
        let out = inject_noise(&batch, &noise, InjectionMode::PerBatch, &mut rng).unwrap();
        assert!(out.mask.iter().all(|&m| m));
        assert!(out.noised.iter_rows().all(|r| r == [1.0, 2.0]));
    }

    #[test]
    fn per_batch_mask_is_uniform_within_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch = Tensor::zeros(vec![8, 1]);
        let noise = point_slab(vec![1.0], 0.5);
        let mut seen = [false; 2];
        for _ in 0..50 {
            let out = inject_noise(&batch, &noise, InjectionMode::PerBatch, &mut rng).unwrap();
            assert!(out.mask.iter().all(|&m| m == out.mask[0]));
            seen[out.mask[0] as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn per_sample_mean_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = Tensor::zeros(vec![10_000, 2]);
        let noise = point_slab(vec![1.0, 0.0], 0.3);
        let out = inject_noise(&batch, &noise, InjectionMode::PerSample, &mut rng).unwrap();
        let m = out.noised.column_means();
        assert!((m[0] - 0.3).abs() < 0.02, "{m:?}");
        assert_eq!(m[1], 0.0);
    }

    #[test]
    fn inject_rejects_dimension_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = Tensor::zeros(vec![2, 3]);
        assert!(inject_noise(
            &batch,
            &SpikeSlabNoise::none(2),
            InjectionMode::PerSample,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn dirichlet_draws_lie_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = SpikeSlabNoise::new(1.0, SlabSpec::DirichletFlat { dimension: 3 }).unwrap();
        let draw = sample_spike_slab(&noise, 200, &mut rng);
        for r in draw.z.iter_rows() {
            assert!(r.iter().all(|&v| v >= 0.0));
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_gamma_rejected() {
        assert!(SpikeSlabNoise::new(1.5, SlabSpec::standard_gaussian(1)).is_err());
        assert!(SpikeSlabNoise::new(-0.1, SlabSpec::standard_gaussian(1)).is_err());
        assert!(SpikeSlabNoise::new(0.5, SlabSpec::Gaussian { std: vec![0.0] }).is_err());
    }

    #[test]
    fn convolve_identity_channel() {
        let p = DiscreteDist::on_line(&[0.0, 2.0, 5.0], &[0.2, 0.3, 0.5]).unwrap();
        let y = discrete_convolve(&p, &point_slab(vec![1.0], 0.0)).unwrap();
        assert_eq!(y, p);
    }

    #[test]
    fn convolve_single_atom() {
        let p = DiscreteDist::point_mass(vec![0.0]).unwrap();
        let y = discrete_convolve(&p, &point_slab(vec![1.0], 0.3)).unwrap();
        assert_eq!(y.len(), 2);
        assert!((y.prob_at(&[0.0]) - 0.7).abs() < 1e-15);
        assert!((y.prob_at(&[1.0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn convolve_matches_pair_enumeration() {
        let p = DiscreteDist::on_line(&[0.0, 10.0], &[0.5, 0.5]).unwrap();
        let noise = point_slab(vec![1.0], 0.3);
        let y = discrete_convolve(&p, &noise).unwrap();
        // enumerate (x, z) with z ∈ {0 w.p. 0.7, 1 w.p. 0.3}
        let mut oracle = std::collections::BTreeMap::new();
        for (x, px) in [(0i64, 0.5), (10, 0.5)] {
            for (z, pz) in [(0i64, 0.7), (1, 0.3)] {
                *oracle.entry(x + z).or_insert(0.0) += px * pz;
            }
        }
        assert_eq!(oracle.len(), y.len());
        for (pt, prob) in oracle {
            assert!((y.prob_at(&[pt as f64]) - prob).abs() < 1e-15, "{pt}");
        }
        for (pt, want) in [(0.0, 0.35), (1.0, 0.15), (10.0, 0.35), (11.0, 0.15)] {
            assert!((y.prob_at(&[pt]) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn convolve_merges_overlapping_shift() {
        let p = DiscreteDist::on_line(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let y = discrete_convolve(&p, &point_slab(vec![1.0], 0.5)).unwrap();
        assert_eq!(y.len(), 3);
        assert!((y.prob_at(&[1.0]) - 0.5).abs() < 1e-15);
        assert!((y.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convolve_refuses_continuous_slab() {
        let p = DiscreteDist::point_mass(vec![0.0]).unwrap();
        let noise = SpikeSlabNoise::new(0.2, SlabSpec::standard_gaussian(1)).unwrap();
        assert!(matches!(
            discrete_convolve(&p, &noise),
            Err(Error::UnsupportedSlab("gaussian"))
        ));
    }
}
