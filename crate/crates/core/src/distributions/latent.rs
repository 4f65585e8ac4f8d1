use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::nn::Tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentKind {
    #[default]
    Gaussian,
    /// Uniform on `[-1, 1]^dimension`.
    Uniform,
}

/// Prior the generator's inputs are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentPrior {
    pub dimension: usize,
    #[serde(default)]
    pub kind: LatentKind,
}

impl LatentPrior {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::config("latent.dimension", "must be at least 1"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Tensor {
        let len = n * self.dimension;
        let data = match self.kind {
            LatentKind::Gaussian => (0..len).map(|_| StandardNormal.sample(rng)).collect(),
            LatentKind::Uniform => (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        };
        Tensor::from_raw(vec![n, self.dimension], data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_stays_in_cube() {
        let prior = LatentPrior {
            dimension: 3,
            kind: LatentKind::Uniform,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = prior.sample(500, &mut rng);
        assert_eq!(z.shape(), &[500, 3]);
        assert!(z.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn zero_dimension_rejected() {
        let prior = LatentPrior {
            dimension: 0,
            kind: LatentKind::Gaussian,
        };
        assert!(prior.validate().is_err());
    }
}
