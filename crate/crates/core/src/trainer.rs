//! The multi-dataset adversarial training loop.
//!
//! Each outer iteration runs `k` discriminator ascents followed by one
//! generator descent. A discriminator step draws one latent minibatch, then
//! for every dataset `l` a minibatch of the same size pushed through that
//! dataset's spike-and-slab channel, and climbs
//!
//! ```text
//! (1/n) Σ_i [ Σ_l α_l ln D(x̃_l⁽ⁱ⁾) + ln(1 - D(G(z⁽ⁱ⁾))) ]
//! ```
//!
//! The generator step descends `(1/n) Σ_i ln(1 - D(G(z⁽ⁱ⁾)))` (or the
//! non-saturating `-(1/n) Σ_i ln D(G(z⁽ⁱ⁾))`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    inject_noise, write_samples, DataSource, DatasetSpec, InjectionMode, LatentPrior, SlabSpec,
    SpikeSlabNoise,
};
use crate::divergence::{estimate_divergences, DivergenceReport, HistogramEstimator};
use crate::nn::{
    adam_step, save_checkpoint, Activation, AdamConfig, AdamState, Direction, Gradients, MlpParams,
    Tensor,
};
use crate::{clamped_log, Error, Result};

/// Random stream type used throughout training.
pub type Stream = ChaCha8Rng;

const INIT_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;
const BOUNDS_STREAM: u64 = 3;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLoss {
    /// Descend `ln(1 - D(G(z)))`.
    #[default]
    Minimax,
    /// Descend `-ln D(G(z))`.
    NonSaturating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub spec: DatasetSpec,
    pub alpha: f64,
    /// Channel weight for this dataset; defaults to the run's `delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Slab of the channel; defaults to a standard Gaussian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slab: Option<SlabSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// `[low, high]` per data dimension; derived from a pilot sample of the
    /// clean mixture when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_bins")]
    pub bins_per_dim: usize,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

fn default_bins() -> usize {
    64
}

fn default_smoothing() -> f64 {
    crate::divergence::DEFAULT_SMOOTHING
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            bounds: None,
            bins_per_dim: default_bins(),
            smoothing: default_smoothing(),
        }
    }
}

fn default_k() -> usize {
    1
}
fn default_eval_n() -> usize {
    20_000
}
fn default_output_samples() -> usize {
    2_000
}
fn default_margin() -> f64 {
    0.05
}
fn default_hidden() -> NetworkConfig {
    NetworkConfig {
        hidden: vec![32, 32],
        activation: Activation::Tanh,
    }
}

/// Every knob of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub datasets: Vec<DatasetEntry>,
    pub latent: LatentPrior,
    /// Default channel weight for every dataset.
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    pub batch_size: usize,
    /// Sample count `n` that sets `ceil(n / batch_size)` outer iterations per epoch.
    pub total_samples_n: usize,
    pub epochs: usize,
    #[serde(default)]
    pub injection_mode: InjectionMode,
    #[serde(default)]
    pub generator_loss: GeneratorLoss,
    #[serde(default = "default_hidden")]
    pub generator: NetworkConfig,
    #[serde(default = "default_hidden")]
    pub discriminator: NetworkConfig,
    #[serde(default)]
    pub adam_g: AdamConfig,
    #[serde(default)]
    pub adam_d: AdamConfig,
    /// Generator steps between divergence evaluations; 0 disables them.
    #[serde(default)]
    pub eval_every: usize,
    #[serde(default = "default_eval_n")]
    pub n_eval: usize,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Allowance added to `delta` in the soft budget check.
    #[serde(default = "default_margin")]
    pub estimator_margin: f64,
    /// Rows written to `samples.csv` at the end of a run.
    #[serde(default = "default_output_samples")]
    pub n_output_samples: usize,
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: TrainConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::config("datasets", "need at least one dataset"));
        }
        let mut total = 0.0;
        let mut dim = None;
        for (i, d) in self.datasets.iter().enumerate() {
            let f = format!("datasets[{i}]");
            d.spec.validate(&format!("{f}.spec"))?;
            if !(d.alpha > 0.0 && d.alpha <= 1.0) {
                return Err(Error::config(format!("{f}.alpha"), "must lie in (0, 1]"));
            }
            total += d.alpha;
            let this_dim = spec_dim(&d.spec);
            if let (Some(a), Some(b)) = (dim, this_dim) {
                if a != b {
                    return Err(Error::config(
                        format!("{f}.spec"),
                        format!("dimension {b} differs from dimension {a} of earlier datasets"),
                    ));
                }
            }
            dim = dim.or(this_dim);
            if let Some(g) = d.gamma {
                if !(0.0..=1.0).contains(&g) {
                    return Err(Error::config(format!("{f}.gamma"), "must lie in [0, 1]"));
                }
            }
            if let Some(slab) = &d.slab {
                slab.validate().map_err(|e| match e {
                    Error::InvalidConfig { field, reason } => {
                        Error::config(format!("{f}.{field}"), reason)
                    }
                    other => other,
                })?;
                if let Some(d) = this_dim {
                    if slab.dim() != d {
                        return Err(Error::config(
                            format!("{f}.slab"),
                            format!("dimension {} differs from data dimension {d}", slab.dim()),
                        ));
                    }
                }
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "datasets.alpha",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config("delta", "must lie in [0, 1]"));
        }
        self.latent.validate()?;
        if self.k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.total_samples_n == 0 {
            return Err(Error::config("total_samples_n", "must be at least 1"));
        }
        for (name, net) in [
            ("generator", &self.generator),
            ("discriminator", &self.discriminator),
        ] {
            if net.hidden.contains(&0) {
                return Err(Error::config(
                    format!("{name}.hidden"),
                    "widths must be positive",
                ));
            }
        }
        self.adam_g.validate("adam_g")?;
        self.adam_d.validate("adam_d")?;
        if self.n_eval == 0 {
            return Err(Error::config("n_eval", "must be at least 1"));
        }
        if !(self.estimator_margin >= 0.0) {
            return Err(Error::config("estimator_margin", "must be >= 0"));
        }
        if let Some(b) = &self.estimator.bounds {
            HistogramEstimator {
                bounds: b.clone(),
                bins_per_dim: self.estimator.bins_per_dim,
                smoothing: self.estimator.smoothing,
            }
            .validate()?;
        }
        Ok(())
    }

    /// Outer iterations per epoch, `ceil(total_samples_n / batch_size)`.
    pub fn iterations_per_epoch(&self) -> usize {
        self.total_samples_n.div_ceil(self.batch_size)
    }

    /// Channel of dataset `l`: its own `gamma` or the run's `delta`, its own
    /// slab or a standard Gaussian.
    pub fn noise_for(&self, l: usize, dim: usize) -> SpikeSlabNoise {
        let entry = &self.datasets[l];
        SpikeSlabNoise {
            gamma: entry.gamma.unwrap_or(self.delta),
            slab: entry
                .slab
                .clone()
                .unwrap_or_else(|| SlabSpec::standard_gaussian(dim)),
        }
    }

    /// Effective budget: the largest per-dataset channel weight.
    pub fn effective_delta(&self) -> f64 {
        self.datasets
            .iter()
            .map(|d| d.gamma.unwrap_or(self.delta))
            .fold(0.0, f64::max)
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.datasets.iter().map(|d| d.alpha).collect()
    }
}

fn spec_dim(spec: &DatasetSpec) -> Option<usize> {
    match spec {
        DatasetSpec::GaussianMixture { components } => components.first().map(|c| c.mean.len()),
        DatasetSpec::Ring { .. } => Some(2),
        DatasetSpec::Discrete { table } => Some(table.dim()),
        DatasetSpec::File { .. } => None,
    }
}

/// Anything that can produce samples for divergence evaluation.
pub trait Sampler {
    fn dim(&self) -> usize;
    fn sample(&self, n: usize, rng: &mut Stream) -> Result<Tensor>;
}

/// Pushes latent draws through a generator network.
pub struct GeneratorSampler<'a> {
    pub generator: &'a MlpParams,
    pub latent: LatentPrior,
}

impl Sampler for GeneratorSampler<'_> {
    fn dim(&self) -> usize {
        self.generator.output_dim()
    }

    fn sample(&self, n: usize, rng: &mut Stream) -> Result<Tensor> {
        self.generator.predict(&self.latent.sample(n, rng))
    }
}

/// The clean mixture `Σ α_l p_l`: each row picks its dataset by weight.
pub struct MixtureSampler {
    sources: Vec<DataSource>,
    alphas: Vec<f64>,
}

impl MixtureSampler {
    pub fn new(sources: Vec<DataSource>, alphas: Vec<f64>) -> Result<Self> {
        if sources.is_empty() || sources.len() != alphas.len() {
            return Err(Error::config("datasets", "need one weight per source"));
        }
        Ok(Self { sources, alphas })
    }

    pub fn from_config(config: &TrainConfig) -> Result<Self> {
        let sources = config
            .datasets
            .iter()
            .map(|d| DataSource::from_spec(&d.spec))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sources, config.alphas())
    }

    fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, a) in self.alphas.iter().enumerate() {
            acc += a;
            if u < acc {
                return i;
            }
        }
        self.alphas.len() - 1
    }
}

impl Sampler for MixtureSampler {
    fn dim(&self) -> usize {
        self.sources[0].dim()
    }

    fn sample(&self, n: usize, rng: &mut Stream) -> Result<Tensor> {
        use rand::Rng;
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let l = self.pick(rng.random());
            data.extend_from_slice(self.sources[l].sample(1, rng).data());
        }
        Tensor::matrix(n, d, data)
    }
}

/// Objective value and gradient for one discriminator minibatch.
#[derive(Clone, Debug)]
pub struct DiscObjective {
    pub value: f64,
    pub grads: Gradients,
    /// α-weighted mean of `D` over the real minibatches.
    pub d_real: f64,
    /// Mean of `D` over the generated minibatch.
    pub d_fake: f64,
}

/// `(1/n) Σ_i [Σ_l α_l ln D(x̃_l⁽ⁱ⁾) + ln(1 - D(fake⁽ⁱ⁾))]` and its gradient in
/// the discriminator's parameters. Every minibatch must have `n` rows.
pub fn discriminator_objective(
    disc: &MlpParams,
    real: &[(f64, Tensor)],
    fakes: &Tensor,
) -> Result<DiscObjective> {
    let n = fakes.rows();
    if n == 0 {
        return Err(Error::config("batch_size", "empty minibatch"));
    }
    if disc.output_dim() != 1 {
        return Err(Error::shape("discriminator output", 1, disc.output_dim()));
    }
    for (l, (_, x)) in real.iter().enumerate() {
        if x.rows() != n {
            return Err(Error::shape(
                format!("real minibatch {l} rows"),
                n,
                x.rows(),
            ));
        }
    }
    let mut parts: Vec<&Tensor> = real.iter().map(|(_, x)| x).collect();
    parts.push(fakes);
    let stacked = Tensor::vstack(&parts)?;
    let cache = disc.forward(&stacked)?;
    let out = cache.output().data();
    let inv_n = 1.0 / n as f64;

    let mut value = 0.0;
    let mut d_real = 0.0;
    let mut d_fake = 0.0;
    let mut seed = vec![0.0; out.len()];
    for (l, (alpha, _)) in real.iter().enumerate() {
        let w = alpha * inv_n;
        let mut term = 0.0;
        for i in l * n..(l + 1) * n {
            let (lg, dlg) = clamped_log(out[i]);
            term += lg;
            seed[i] = w * dlg;
            d_real += w * out[i];
        }
        value += w * term;
    }
    let base = real.len() * n;
    let mut term = 0.0;
    for i in base..base + n {
        let (lg, dlg) = clamped_log(1.0 - out[i]);
        term += lg;
        seed[i] = -inv_n * dlg;
        d_fake += inv_n * out[i];
    }
    value += inv_n * term;

    let seed = Tensor::matrix(out.len(), 1, seed)?;
    let (grads, _) = disc.backward(&cache, &seed)?;
    Ok(DiscObjective {
        value,
        grads,
        d_real,
        d_fake,
    })
}

#[derive(Clone, Debug)]
pub struct GenObjective {
    pub value: f64,
    pub grads: Gradients,
    pub d_fake: f64,
}

/// Generator loss on latent minibatch `z` (to be descended) and its gradient
/// in the generator's parameters; the discriminator is held fixed.
pub fn generator_objective(
    gen: &MlpParams,
    disc: &MlpParams,
    z: &Tensor,
    loss: GeneratorLoss,
) -> Result<GenObjective> {
    let n = z.rows();
    if n == 0 {
        return Err(Error::config("batch_size", "empty minibatch"));
    }
    let g_cache = gen.forward(z)?;
    let d_cache = disc.forward(g_cache.output())?;
    let out = d_cache.output().data();
    let inv_n = 1.0 / n as f64;
    let mut value = 0.0;
    let mut d_fake = 0.0;
    let seed: Vec<f64> = out
        .iter()
        .map(|&d| {
            d_fake += inv_n * d;
            match loss {
                GeneratorLoss::Minimax => {
                    let (lg, dlg) = clamped_log(1.0 - d);
                    value += inv_n * lg;
                    -inv_n * dlg
                }
                GeneratorLoss::NonSaturating => {
                    let (lg, dlg) = clamped_log(d);
                    value -= inv_n * lg;
                    -inv_n * dlg
                }
            }
        })
        .collect();
    let seed = Tensor::matrix(n, 1, seed)?;
    let (_, d_input) = disc.backward(&d_cache, &seed)?;
    let (grads, _) = gen.backward(&g_cache, &d_input)?;
    Ok(GenObjective {
        value,
        grads,
        d_fake,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub step: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub d_real: f64,
    pub d_fake: f64,
    pub tv: Option<f64>,
    pub jsd: Option<f64>,
}

impl MetricsRecord {
    pub const CSV_HEADER: &'static str = "step,d_loss,g_loss,d_real,d_fake,tv,jsd";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.step,
            self.d_loss,
            self.g_loss,
            self.d_real,
            self.d_fake,
            opt(self.tv),
            opt(self.jsd)
        )
    }
}

pub fn metrics_to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(MetricsRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscStep {
    pub d_loss: f64,
    pub d_real: f64,
    pub d_fake: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetReport {
    pub tv_estimate: f64,
    pub jsd_estimate: f64,
    pub delta: f64,
    /// `jsd_estimate ≤ delta + estimator_margin`.
    pub within_budget: bool,
    pub report: DivergenceReport,
}

/// Histogram estimator for `config`: its explicit bounds, or a box around a
/// pilot sample of the clean mixture drawn from a dedicated stream.
pub fn resolve_estimator(config: &TrainConfig) -> Result<HistogramEstimator> {
    let est = match &config.estimator.bounds {
        Some(b) => HistogramEstimator {
            bounds: b.clone(),
            bins_per_dim: config.estimator.bins_per_dim,
            smoothing: config.estimator.smoothing,
        },
        None => {
            let mix = MixtureSampler::from_config(config)?;
            let mut rng = stream(config.seed, BOUNDS_STREAM);
            let pilot = mix.sample(4096, &mut rng)?;
            HistogramEstimator::covering(&pilot, 0.25, config.estimator.bins_per_dim)?
                .with_smoothing(config.estimator.smoothing)?
        }
    };
    est.validate()?;
    Ok(est)
}

/// Compares `n_eval` draws from the clean mixture with `n_eval` draws from
/// `generator` against the run's budget.
pub fn evaluate_budget(
    generator: &dyn Sampler,
    config: &TrainConfig,
    n_eval: usize,
    rng: &mut Stream,
) -> Result<BudgetReport> {
    let est = resolve_estimator(config)?;
    let mix = MixtureSampler::from_config(config)?;
    evaluate_with(generator, &mix, &est, config, n_eval, rng)
}

fn evaluate_with(
    generator: &dyn Sampler,
    mix: &MixtureSampler,
    est: &HistogramEstimator,
    config: &TrainConfig,
    n_eval: usize,
    rng: &mut Stream,
) -> Result<BudgetReport> {
    let real = mix.sample(n_eval, rng)?;
    let fake = generator.sample(n_eval, rng)?;
    let report = estimate_divergences(&real, &fake, est)?;
    let delta = config.effective_delta();
    Ok(BudgetReport {
        tv_estimate: report.tv,
        jsd_estimate: report.jsd_nats,
        delta,
        within_budget: report.jsd_nats <= delta + config.estimator_margin,
        report,
    })
}

/// Networks, optimizer states and random streams of one run.
pub struct Trainer {
    config: TrainConfig,
    sources: Vec<DataSource>,
    noises: Vec<SpikeSlabNoise>,
    pub generator: MlpParams,
    pub discriminator: MlpParams,
    adam_g: AdamState,
    adam_d: AdamState,
    rng: Stream,
    eval_rng: Stream,
    estimator: Option<HistogramEstimator>,
    mixture: Option<MixtureSampler>,
    step: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let sources = config
            .datasets
            .iter()
            .map(|d| DataSource::from_spec(&d.spec))
            .collect::<Result<Vec<_>>>()?;
        let dim = sources[0].dim();
        if let Some((i, s)) = sources.iter().enumerate().find(|(_, s)| s.dim() != dim) {
            return Err(Error::config(
                format!("datasets[{i}].spec"),
                format!("dimension {} differs from {dim}", s.dim()),
            ));
        }
        let noises: Vec<SpikeSlabNoise> = (0..sources.len())
            .map(|l| config.noise_for(l, dim))
            .collect();
        for (l, n) in noises.iter().enumerate() {
            if n.dim() != dim {
                return Err(Error::config(
                    format!("datasets[{l}].slab"),
                    format!("dimension {} differs from data dimension {dim}", n.dim()),
                ));
            }
        }

        let mut init = stream(config.seed, INIT_STREAM);
        let network =
            |input: usize, net: &NetworkConfig, output: usize, out_act, rng: &mut Stream| {
                let mut sizes = vec![input];
                sizes.extend(&net.hidden);
                sizes.push(output);
                let mut acts = vec![net.activation; net.hidden.len()];
                acts.push(out_act);
                MlpParams::init(&sizes, &acts, rng)
            };
        let generator = network(
            config.latent.dimension,
            &config.generator,
            dim,
            Activation::Identity,
            &mut init,
        )?;
        let discriminator = network(
            dim,
            &config.discriminator,
            1,
            Activation::Sigmoid,
            &mut init,
        )?;
        let estimator = if config.eval_every > 0 && dim <= crate::divergence::MAX_HISTOGRAM_DIM {
            Some(resolve_estimator(&config)?)
        } else {
            None
        };
        let mixture = if config.eval_every > 0 {
            Some(MixtureSampler::new(sources.clone(), config.alphas())?)
        } else {
            None
        };
        Ok(Self {
            adam_g: AdamState::new(&generator, config.adam_g),
            adam_d: AdamState::new(&discriminator, config.adam_d),
            rng: stream(config.seed, TRAIN_STREAM),
            eval_rng: stream(config.seed, EVAL_STREAM),
            config,
            sources,
            noises,
            generator,
            discriminator,
            estimator,
            mixture,
            step: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn noises(&self) -> &[SpikeSlabNoise] {
        &self.noises
    }

    /// Generator steps taken so far.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Draws one latent minibatch and one noised minibatch per dataset.
    pub fn sample_disc_batch(&mut self) -> Result<(Vec<(f64, Tensor)>, Tensor)> {
        let n = self.config.batch_size;
        let z = self.config.latent.sample(n, &mut self.rng);
        let mut real = Vec::with_capacity(self.sources.len());
        for (l, source) in self.sources.iter().enumerate() {
            let x = source.sample(n, &mut self.rng);
            let noised = inject_noise(
                &x,
                &self.noises[l],
                self.config.injection_mode,
                &mut self.rng,
            )?;
            real.push((self.config.datasets[l].alpha, noised.noised));
        }
        Ok((real, z))
    }

    fn non_finite(&self, value: f64) -> Result<()> {
        if value.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteLoss {
                step: self.step,
                config: serde_json::to_string(&self.config).unwrap_or_default(),
            })
        }
    }

    /// One Adam ascent of the discriminator objective; the generator is untouched.
    pub fn discriminator_step(&mut self) -> Result<DiscStep> {
        let (real, z) = self.sample_disc_batch()?;
        let fakes = self.generator.predict(&z)?;
        let obj = discriminator_objective(&self.discriminator, &real, &fakes)?;
        self.non_finite(obj.value)?;
        adam_step(
            &mut self.discriminator,
            &obj.grads,
            &mut self.adam_d,
            Direction::Ascend,
        )?;
        Ok(DiscStep {
            d_loss: obj.value,
            d_real: obj.d_real,
            d_fake: obj.d_fake,
        })
    }

    /// One Adam descent of the generator loss with the discriminator frozen.
    pub fn generator_step(&mut self) -> Result<f64> {
        let z = self
            .config
            .latent
            .sample(self.config.batch_size, &mut self.rng);
        let obj = generator_objective(
            &self.generator,
            &self.discriminator,
            &z,
            self.config.generator_loss,
        )?;
        self.non_finite(obj.value)?;
        adam_step(
            &mut self.generator,
            &obj.grads,
            &mut self.adam_g,
            Direction::Descend,
        )?;
        Ok(obj.value)
    }

    /// Budget evaluation of the current generator on the evaluation stream.
    pub fn evaluate(&mut self, n_eval: usize) -> Result<BudgetReport> {
        let est = match &self.estimator {
            Some(e) => e.clone(),
            None => resolve_estimator(&self.config)?,
        };
        let mix = match self.mixture.take() {
            Some(m) => m,
            None => MixtureSampler::new(self.sources.clone(), self.config.alphas())?,
        };
        let sampler = GeneratorSampler {
            generator: &self.generator,
            latent: self.config.latent,
        };
        let out = evaluate_with(
            &sampler,
            &mix,
            &est,
            &self.config,
            n_eval,
            &mut self.eval_rng,
        );
        self.mixture = Some(mix);
        out
    }

    /// One outer iteration: `k` discriminator steps then one generator step.
    pub fn outer_step(&mut self) -> Result<MetricsRecord> {
        let mut last = None;
        for _ in 0..self.config.k {
            last = Some(self.discriminator_step()?);
        }
        let d = last.expect("k >= 1");
        let g_loss = self.generator_step()?;
        self.step += 1;
        let mut record = MetricsRecord {
            step: self.step,
            d_loss: d.d_loss,
            g_loss,
            d_real: d.d_real,
            d_fake: d.d_fake,
            tv: None,
            jsd: None,
        };
        if self.config.eval_every > 0 && self.step.is_multiple_of(self.config.eval_every) {
            let b = self.evaluate(self.config.n_eval)?;
            record.tv = Some(b.tv_estimate);
            record.jsd = Some(b.jsd_estimate);
        }
        Ok(record)
    }

    /// Runs `epochs × ceil(total_samples_n / batch_size)` outer iterations.
    pub fn run(mut self) -> Result<TrainOutcome> {
        let total = self.config.epochs * self.config.iterations_per_epoch();
        let mut metrics = Vec::with_capacity(total);
        for _ in 0..total {
            metrics.push(self.outer_step()?);
        }
        Ok(TrainOutcome {
            generator: self.generator,
            discriminator: self.discriminator,
            metrics,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub generator: MlpParams,
    pub discriminator: MlpParams,
    pub metrics: Vec<MetricsRecord>,
}

/// Trains from scratch with `config`.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(config.clone())?.run()
}

/// Writes `metrics.csv`, `samples.csv` and both checkpoints into `out`;
/// returns the paths written.
pub fn write_outputs(
    outcome: &TrainOutcome,
    config: &TrainConfig,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();

    let metrics_path = out.join("metrics.csv");
    fs::write(&metrics_path, metrics_to_csv(&outcome.metrics))
        .map_err(|e| Error::io(&metrics_path, e))?;
    written.push(metrics_path);

    let (g_manifest, g_bin) = save_checkpoint(&outcome.generator, out, "generator")?;
    let (d_manifest, d_bin) = save_checkpoint(&outcome.discriminator, out, "discriminator")?;
    written.extend([g_manifest, g_bin, d_manifest, d_bin]);

    let samples_path = out.join("samples.csv");
    let mut rng = stream(config.seed, EVAL_STREAM + 100);
    let sampler = GeneratorSampler {
        generator: &outcome.generator,
        latent: config.latent,
    };
    let samples = sampler.sample(config.n_output_samples, &mut rng)?;
    let header: Vec<String> = (0..samples.cols()).map(|j| format!("x{j}")).collect();
    let body = write_samples(&samples).replace(' ', ",");
    fs::write(&samples_path, format!("{}\n{body}", header.join(",")))
        .map_err(|e| Error::io(&samples_path, e))?;
    written.push(samples_path);
    Ok(written)
}
