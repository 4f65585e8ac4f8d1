use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DiscreteDist;
use crate::nn::Tensor;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    pub covariance_diagonal: Vec<f64>,
    pub weight: f64,
}

/// Where training samples come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    GaussianMixture {
        components: Vec<GaussianComponent>,
    },
    /// Uniform angle on a circle in the plane plus isotropic Gaussian jitter.
    Ring {
        radius: f64,
        noise_std: f64,
    },
    Discrete {
        table: DiscreteDist,
    },
    /// Plain-text sample matrix, resampled uniformly with replacement.
    File {
        path: PathBuf,
    },
}

impl DatasetSpec {
    /// Validates the spec; `field` prefixes error messages.
    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            DatasetSpec::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::config(field, "mixture needs at least one component"));
                }
                let dim = components[0].mean.len();
                if dim == 0 {
                    return Err(Error::config(field, "component mean is empty"));
                }
                let mut total = 0.0;
                for (i, c) in components.iter().enumerate() {
                    let f = format!("{field}.components[{i}]");
                    if c.mean.len() != dim || c.covariance_diagonal.len() != dim {
                        return Err(Error::config(f, format!("expected dimension {dim}")));
                    }
                    if !(c.weight > 0.0) {
                        return Err(Error::config(f + ".weight", "must be positive"));
                    }
                    if c.covariance_diagonal
                        .iter()
                        .any(|v| !(*v > 0.0 && v.is_finite()))
                    {
                        return Err(Error::config(
                            f + ".covariance_diagonal",
                            "entries must be positive",
                        ));
                    }
                    if c.mean.iter().any(|v| !v.is_finite()) {
                        return Err(Error::config(f + ".mean", "entries must be finite"));
                    }
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::config(
                        format!("{field}.components"),
                        format!("weights sum to {total}, expected 1"),
                    ));
                }
            }
            DatasetSpec::Ring { radius, noise_std } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::config(format!("{field}.radius"), "must be >= 0"));
                }
                if !(noise_std.is_finite() && *noise_std >= 0.0) {
                    return Err(Error::config(format!("{field}.noise_std"), "must be >= 0"));
                }
            }
            DatasetSpec::Discrete { .. } | DatasetSpec::File { .. } => {}
        }
        Ok(())
    }
}

/// A validated, ready-to-sample dataset (file-backed specs are loaded once).
#[derive(Clone, Debug)]
pub enum DataSource {
    GaussianMixture {
        components: Vec<GaussianComponent>,
        weights: DiscreteDist,
    },
    Ring {
        radius: f64,
        noise_std: f64,
    },
    Discrete(DiscreteDist),
    Samples(Tensor),
}

impl DataSource {
    pub fn from_spec(spec: &DatasetSpec) -> Result<Self> {
        spec.validate("dataset")?;
        Ok(match spec {
            DatasetSpec::GaussianMixture { components } => {
                let ws: Vec<f64> = components.iter().map(|c| c.weight).collect();
                let total: f64 = ws.iter().sum();
                let idx: Vec<f64> = (0..ws.len()).map(|i| i as f64).collect();
                let norm: Vec<f64> = ws.iter().map(|w| w / total).collect();
                DataSource::GaussianMixture {
                    components: components.clone(),
                    weights: DiscreteDist::on_line(&idx, &norm)?,
                }
            }
            DatasetSpec::Ring { radius, noise_std } => DataSource::Ring {
                radius: *radius,
                noise_std: *noise_std,
            },
            DatasetSpec::Discrete { table } => DataSource::Discrete(table.clone()),
            DatasetSpec::File { path } => {
                let t = read_sample_file(path)?;
                if t.rows() == 0 {
                    return Err(Error::Parse {
                        path: path.clone(),
                        message: "no samples".into(),
                    });
                }
                DataSource::Samples(t)
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            DataSource::GaussianMixture { components, .. } => components[0].mean.len(),
            DataSource::Ring { .. } => 2,
            DataSource::Discrete(d) => d.dim(),
            DataSource::Samples(t) => t.cols(),
        }
    }

    /// `n` i.i.d. rows.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Tensor {
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            match self {
                DataSource::GaussianMixture {
                    components,
                    weights,
                } => {
                    let c = &components[weights.sample_index(rng)];
                    for (m, var) in c.mean.iter().zip(&c.covariance_diagonal) {
                        let e: f64 = StandardNormal.sample(rng);
                        data.push(m + var.sqrt() * e);
                    }
                }
                DataSource::Ring { radius, noise_std } => {
                    let theta = rng.random::<f64>() * std::f64::consts::TAU;
                    let (ex, ey): (f64, f64) = if *noise_std > 0.0 {
                        (StandardNormal.sample(rng), StandardNormal.sample(rng))
                    } else {
                        (0.0, 0.0)
                    };
                    data.push(radius * theta.cos() + noise_std * ex);
                    data.push(radius * theta.sin() + noise_std * ey);
                }
                DataSource::Discrete(table) => {
                    data.extend_from_slice(&table.support()[table.sample_index(rng)]);
                }
                DataSource::Samples(t) => {
                    data.extend_from_slice(t.row(rng.random_range(0..t.rows())));
                }
            }
        }
        Tensor::from_raw(vec![n, d], data)
    }
}

/// Draws `n ≥ 1` rows from `spec`.
pub fn sample_dataset<R: Rng + ?Sized>(
    spec: &DatasetSpec,
    n: usize,
    rng: &mut R,
) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::config("n", "sample count must be at least 1"));
    }
    Ok(DataSource::from_spec(spec)?.sample(n, rng))
}

/// Reads a whitespace-separated sample matrix, one sample per line.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_sample_file(path: &Path) -> Result<Tensor> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(i + 1, format!("invalid number `{tok}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match cols {
            None => cols = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(parse_err(
                    i + 1,
                    format!("expected {c} columns, found {}", values.len()),
                ))
            }
            _ => {}
        }
        data.extend(values);
        rows += 1;
    }
    Tensor::matrix(rows, cols.unwrap_or(0), data)
}

/// Renders rows in the sample-file format (full round-trip precision).
pub fn write_samples(samples: &Tensor) -> String {
    let mut out = String::new();
    for row in samples.iter_rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_mass_rows_are_constant() {
        let spec = DatasetSpec::Discrete {
            table: DiscreteDist::point_mass(vec![1.5, -2.0]).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_dataset(&spec, 50, &mut rng).unwrap();
        assert!(t.iter_rows().all(|r| r == [1.5, -2.0]));
    }

    #[test]
    fn noiseless_ring_has_unit_norm() {
        let spec = DatasetSpec::Ring {
            radius: 1.0,
            noise_std: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_dataset(&spec, 1000, &mut rng).unwrap();
        assert_eq!(t.shape(), &[1000, 2]);
        for r in t.iter_rows() {
            assert!(((r[0] * r[0] + r[1] * r[1]).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn standard_gaussian_mean_is_near_zero() {
        let spec = DatasetSpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: vec![0.0, 0.0],
                covariance_diagonal: vec![1.0, 1.0],
                weight: 1.0,
            }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_dataset(&spec, 10_000, &mut rng).unwrap();
        // standard error 0.01; 0.05 is five of them
        for m in t.column_means() {
            assert!(m.abs() < 0.05, "{m}");
        }
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let c = |w| GaussianComponent {
            mean: vec![0.0],
            covariance_diagonal: vec![1.0],
            weight: w,
        };
        let spec = DatasetSpec::GaussianMixture {
            components: vec![c(0.5), c(0.4)],
        };
        assert!(spec.validate("d").is_err());
        let spec = DatasetSpec::GaussianMixture {
            components: vec![GaussianComponent {
                covariance_diagonal: vec![0.0],
                ..c(1.0)
            }],
        };
        assert!(spec.validate("d").is_err());
    }

    #[test]
    fn zero_count_rejected() {
        let spec = DatasetSpec::Ring {
            radius: 1.0,
            noise_std: 0.1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_dataset(&spec, 0, &mut rng).is_err());
    }

    #[test]
    fn sample_file_roundtrip_and_resampling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.txt");
        let t = Tensor::from_rows(&[vec![0.1, 2.0], vec![-3.5, 1e-7]]).unwrap();
        fs::write(&path, format!("# header comment\n{}\n", write_samples(&t))).unwrap();
        let back = read_sample_file(&path).unwrap();
        assert_eq!(back, t);

        let spec = DatasetSpec::File { path: path.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_dataset(&spec, 20, &mut rng).unwrap();
        assert!(s.iter_rows().all(|r| r == t.row(0) || r == t.row(1)));
    }

    #[test]
    fn missing_or_ragged_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let missing = DatasetSpec::File {
            path: dir.path().join("nope.txt"),
        };
        assert!(matches!(
            sample_dataset(&missing, 1, &mut rng),
            Err(Error::Io { .. })
        ));
        let ragged = dir.path().join("ragged.txt");
        fs::write(&ragged, "1 2\n3\n").unwrap();
        assert!(matches!(
            read_sample_file(&ragged),
            Err(Error::Parse { .. })
        ));
    }
}
