use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Hashable identity of a support point: coordinates rounded to 12 decimals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct PointKey(Vec<i128>);

impl PointKey {
    pub(crate) fn of(point: &[f64]) -> Self {
        PointKey(point.iter().map(|&x| (x * 1e12).round() as i128).collect())
    }
}

/// Probability table over finitely many distinct points of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiscrete", into = "RawDiscrete")]
pub struct DiscreteDist {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiscrete {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl TryFrom<RawDiscrete> for DiscreteDist {
    type Error = Error;
    fn try_from(raw: RawDiscrete) -> Result<Self> {
        DiscreteDist::new(raw.support, raw.probs)
    }
}

impl From<DiscreteDist> for RawDiscrete {
    fn from(d: DiscreteDist) -> Self {
        RawDiscrete {
            support: d.support,
            probs: d.probs,
        }
    }
}

impl DiscreteDist {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        if support.is_empty() {
            return bad("empty support".into());
        }
        if support.len() != probs.len() {
            return bad(format!(
                "{} support points but {} probabilities",
                support.len(),
                probs.len()
            ));
        }
        let dim = support[0].len();
        if dim == 0 {
            return bad("support points must have at least one coordinate".into());
        }
        let mut seen = HashMap::with_capacity(support.len());
        for (i, pt) in support.iter().enumerate() {
            if pt.len() != dim {
                return bad(format!(
                    "point {i} has dimension {}, expected {dim}",
                    pt.len()
                ));
            }
            if pt.iter().any(|v| !v.is_finite()) {
                return bad(format!("point {i} has a non-finite coordinate"));
            }
            if let Some(j) = seen.insert(PointKey::of(pt), i) {
                return bad(format!("points {j} and {i} coincide"));
            }
        }
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad(format!("probability {i} is {}", probs[i]));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return bad(format!("probabilities sum to {total}"));
        }
        Ok(Self { support, probs })
    }

    pub fn point_mass(point: Vec<f64>) -> Result<Self> {
        Self::new(vec![point], vec![1.0])
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len().max(1);
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// One-dimensional table `{x_i: p_i}`.
    pub fn on_line(xs: &[f64], probs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), probs.to_vec())
    }

    /// Merges weighted atoms, summing coincident points (first-seen order) and
    /// dropping atoms whose total weight is exactly zero.
    pub(crate) fn from_atoms(atoms: impl IntoIterator<Item = (Vec<f64>, f64)>) -> Result<Self> {
        let mut index: HashMap<PointKey, usize> = HashMap::new();
        let mut support: Vec<Vec<f64>> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (pt, w) in atoms {
            if w == 0.0 {
                continue;
            }
            match index.get(&PointKey::of(&pt)) {
                Some(&i) => probs[i] += w,
                None => {
                    index.insert(PointKey::of(&pt), support.len());
                    support.push(pt);
                    probs.push(w);
                }
            }
        }
        Self::new(support, probs)
    }

    /// `Σ w_i · dists_i`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, &DiscreteDist)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "mixture weights must be nonnegative and sum to 1 (sum = {total})"
            )));
        }
        Self::from_atoms(parts.iter().flat_map(|(w, d)| {
            d.support
                .iter()
                .zip(&d.probs)
                .map(move |(pt, p)| (pt.clone(), w * p))
        }))
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.support
            .iter()
            .map(Vec::as_slice)
            .zip(self.probs.iter().copied())
    }

    /// Probability of `point` (0 off the support).
    pub fn prob_at(&self, point: &[f64]) -> f64 {
        let key = PointKey::of(point);
        self.support
            .iter()
            .position(|p| PointKey::of(p) == key)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Probabilities of `self` and `other` over the union of their supports,
    /// together with the union support itself (self's points first).
    pub fn align(&self, other: &DiscreteDist) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let mut index: HashMap<PointKey, usize> = HashMap::new();
        let mut points = Vec::new();
        let mut p = Vec::new();
        let mut q = Vec::new();
        for (pt, w) in self.iter() {
            index.insert(PointKey::of(pt), points.len());
            points.push(pt.to_vec());
            p.push(w);
            q.push(0.0);
        }
        for (pt, w) in other.iter() {
            match index.get(&PointKey::of(pt)) {
                Some(&i) => q[i] += w,
                None => {
                    index.insert(PointKey::of(pt), points.len());
                    points.push(pt.to_vec());
                    p.push(0.0);
                    q.push(w);
                }
            }
        }
        (points, p, q)
    }

    /// Largest pointwise probability difference over the union support.
    pub fn max_abs_diff(&self, other: &DiscreteDist) -> f64 {
        let (_, p, q) = self.align(other);
        p.iter().zip(&q).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Index of a support point drawn according to the probabilities.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // mass rounding: fall back to the last atom with positive probability
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_invariants() {
        assert!(DiscreteDist::on_line(&[0.0, 1.0], &[0.5, 0.6]).is_err());
        assert!(DiscreteDist::on_line(&[0.0, 1.0], &[1.5, -0.5]).is_err());
        assert!(DiscreteDist::on_line(&[0.0, 0.0], &[0.5, 0.5]).is_err());
        assert!(DiscreteDist::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDist::new(vec![], vec![]).is_err());
        let ok = DiscreteDist::on_line(&[0.0, 1.0, 2.0], &[0.1, 0.2, 0.7]).unwrap();
        assert_eq!(ok.prob_at(&[2.0]), 0.7);
        assert_eq!(ok.prob_at(&[3.0]), 0.0);
    }

    #[test]
    fn keys_absorb_float_noise() {
        assert_eq!(PointKey::of(&[0.1 + 0.2]), PointKey::of(&[0.3]));
        assert_eq!(PointKey::of(&[-0.0]), PointKey::of(&[0.0]));
        assert_ne!(PointKey::of(&[1.0]), PointKey::of(&[1.0 + 1e-9]));
    }

    #[test]
    fn mixture_merges_points() {
        let a = DiscreteDist::on_line(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let b = DiscreteDist::on_line(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        let m = DiscreteDist::mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.prob_at(&[1.0]), 0.5);
        assert!(DiscreteDist::mixture(&[(0.5, &a), (0.4, &b)]).is_err());
    }

    #[test]
    fn serde_validates() {
        let ok: DiscreteDist =
            serde_json::from_str(r#"{"support": [[0.0], [1.0]], "probs": [0.25, 0.75]}"#).unwrap();
        assert_eq!(ok.probs(), &[0.25, 0.75]);
        let bad = serde_json::from_str::<DiscreteDist>(r#"{"support": [[0.0]], "probs": [0.9]}"#);
        assert!(bad.is_err());
    }
}
