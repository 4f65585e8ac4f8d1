//! Command-line driver.
//!
//! Exit codes: 0 success (all checks hold), 1 runtime failure or a failed
//! check, 2 unusable input (bad arguments, unreadable or invalid files).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::distributions::{
    read_sample_file, sample_dataset, write_samples, DatasetSpec, GaussianComponent, LatentPrior,
};
use crate::divergence::{estimate_divergences, DivergenceReport, HistogramEstimator};
use crate::game::{
    channel_bound_check, checks_to_csv, mixture_chain_check, neg_log4, value_floor_check,
    value_identity_check, verify_grid_optimum, GameInstance, InequalityCheck, IDENTITY_TOL,
    INEQUALITY_TOL, MAX_GRID_SUPPORT,
};
use crate::nn::{grad_check, Activation, MlpParams, Tensor};
use crate::trainer::{
    discriminator_objective, generator_objective, stream, train, write_outputs, GeneratorLoss,
    TrainConfig,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Largest relative error `gradcheck` accepts.
pub const GRADCHECK_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "tvgan",
    version,
    about = "GAN training under a total-variation budget"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a generator/discriminator pair from a TOML config.
    Train(TrainArgs),
    /// Check the exact finite-support bounds on a TOML game instance.
    Oracle(OracleArgs),
    /// Estimate TV and JSD between two sample files.
    Divergence(DivergenceArgs),
    /// Draw samples from a toy dataset.
    Sample(SampleArgs),
    /// Compare analytic and finite-difference gradients of both training objectives.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleCheck {
    All,
    Channel,
    Chain,
    Value,
    Grid,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub check: OracleCheck,
    /// Budget for the chain check; defaults to the largest channel weight.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    /// Whitespace-separated sample file, one point per line.
    pub p: PathBuf,
    pub q: PathBuf,
    /// Per-dimension `low:high`, comma separated; derived from the samples when absent.
    #[arg(long)]
    pub bounds: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long, default_value_t = crate::divergence::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    /// Unit circle with N(0, 0.05²) radial jitter.
    Ring,
    /// Standard normal in `--dim` dimensions.
    Gaussian,
    /// Equal mixture of N((±2, 0), 0.25 I).
    TwoGaussians,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(
        long,
        value_enum,
        conflicts_with = "spec",
        required_unless_present = "spec"
    )]
    pub kind: Option<SampleKind>,
    /// TOML file holding a dataset spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

fn usage(error: Error) -> CliError {
    CliError {
        code: EXIT_USAGE,
        error,
    }
}

fn runtime(error: Error) -> CliError {
    CliError {
        code: EXIT_FAILURE,
        error,
    }
}

type CliResult = std::result::Result<i32, CliError>;

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.error);
            e.code
        }
    }
}

/// Runs `command`, writing its report to `out`.
pub fn execute(command: Command, out: &mut dyn std::io::Write) -> CliResult {
    match command {
        Command::Train(a) => cmd_train(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
        Command::Divergence(a) => cmd_divergence(&a, out),
        Command::Sample(a) => cmd_sample(&a, out),
        Command::Gradcheck(a) => cmd_gradcheck(&a, out),
    }
}

fn emit(out: &mut dyn std::io::Write, text: &str) -> std::result::Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| runtime(Error::io("<stdout>", e)))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_path: PathBuf,
    /// Config file contents exactly as read.
    pub config_text: String,
    /// Config after defaults and overrides, as TOML.
    pub resolved_config: String,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: Option<u128>,
    pub status: &'static str,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub const FILE: &'static str = "run_manifest.json";

    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(Self::FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn cmd_train(args: &TrainArgs, out: &mut dyn std::io::Write) -> CliResult {
    let text = fs::read_to_string(&args.config).map_err(|e| usage(Error::io(&args.config, e)))?;
    let mut config: TrainConfig = toml::from_str(&text).map_err(|e| {
        usage(Error::Parse {
            path: args.config.clone(),
            message: e.to_string(),
        })
    })?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().map_err(usage)?;

    fs::create_dir_all(&args.out).map_err(|e| runtime(Error::io(&args.out, e)))?;
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_path: args.config.clone(),
        config_text: text,
        resolved_config: config.to_toml(),
        seed: config.seed,
        started_unix_ms: now_ms(),
        finished_unix_ms: None,
        status: "running",
        outputs: Vec::new(),
    };
    manifest.write(&args.out).map_err(runtime)?;

    let result = train(&config).and_then(|o| write_outputs(&o, &config, &args.out).map(|f| (o, f)));
    manifest.finished_unix_ms = Some(now_ms());
    match result {
        Ok((outcome, files)) => {
            manifest.status = "completed";
            manifest.outputs = files;
            manifest.write(&args.out).map_err(runtime)?;
            let summary = match outcome.metrics.last() {
                Some(m) => format!(
                    "steps={} d_loss={} g_loss={} d_real={} d_fake={}\n",
                    m.step, m.d_loss, m.g_loss, m.d_real, m.d_fake
                ),
                None => "steps=0\n".to_string(),
            };
            emit(out, &summary)?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            manifest.status = "failed";
            let _ = manifest.write(&args.out);
            Err(runtime(e))
        }
    }
}

/// Inequality rows for `check` on `inst`.
pub fn oracle_checks(
    inst: &GameInstance,
    check: OracleCheck,
    delta: Option<f64>,
    grid_step: f64,
) -> Result<Vec<InequalityCheck>> {
    let mut rows = Vec::new();
    let all = check == OracleCheck::All;
    if all || check == OracleCheck::Channel {
        for (l, (part, noise)) in inst
            .data_parts()
            .iter()
            .zip(inst.noise_per_part())
            .enumerate()
        {
            let b = channel_bound_check(&part.dist, noise)?;
            rows.push(InequalityCheck::new(
                format!("channel[{l}]"),
                b.tv,
                b.gamma,
                INEQUALITY_TOL,
            ));
        }
    }
    if all || check == OracleCheck::Chain {
        let delta = delta.unwrap_or_else(|| inst.max_gamma());
        rows.extend(mixture_chain_check(inst, delta)?.checks);
    }
    if all || check == OracleCheck::Value {
        rows.push(value_identity_check(inst)?);
        rows.push(value_floor_check(inst)?);
    }
    let p_mix = inst.p_mix()?;
    if check == OracleCheck::Grid || (all && p_mix.len() <= MAX_GRID_SUPPORT) {
        let r = verify_grid_optimum(&p_mix, grid_step)?;
        rows.push(InequalityCheck::new(
            "grid_argmin",
            r.argmin.max_abs_diff(&r.nearest),
            0.0,
            1e-12,
        ));
        let on_grid = p_mix
            .probs()
            .iter()
            .all(|p| ((p / grid_step).round() * grid_step - p).abs() <= 1e-12);
        if on_grid {
            rows.push(InequalityCheck::new(
                "grid_min",
                (r.min_value - neg_log4()).abs(),
                IDENTITY_TOL,
                0.0,
            ));
        } else {
            // -ln 4 is attained only at p_data itself, which is off the grid
            rows.push(InequalityCheck::new(
                "grid_floor",
                neg_log4(),
                r.min_value,
                IDENTITY_TOL,
            ));
        }
    }
    Ok(rows)
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn std::io::Write) -> CliResult {
    let inst = GameInstance::from_toml_file(&args.instance).map_err(usage)?;
    let rows = oracle_checks(&inst, args.check, args.delta, args.grid_step).map_err(usage)?;
    emit(out, &checks_to_csv(&rows))?;
    Ok(if rows.iter().all(|r| r.holds) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

/// Parses `low:high[,low:high...]`.
pub fn parse_bounds(text: &str) -> Result<Vec<[f64; 2]>> {
    text.split(',')
        .map(|pair| {
            let bad = || Error::config("bounds", format!("expected low:high, got `{pair}`"));
            let (lo, hi) = pair.split_once(':').ok_or_else(bad)?;
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            Ok([lo, hi])
        })
        .collect()
}

fn cmd_divergence(args: &DivergenceArgs, out: &mut dyn std::io::Write) -> CliResult {
    let p = read_sample_file(&args.p).map_err(usage)?;
    let q = read_sample_file(&args.q).map_err(usage)?;
    if p.cols() != q.cols() {
        return Err(usage(Error::shape("sample dimension", p.cols(), q.cols())));
    }
    let est = match &args.bounds {
        Some(b) => HistogramEstimator::new(parse_bounds(b).map_err(usage)?, args.bins),
        None => Tensor::vstack(&[&p, &q])
            .and_then(|both| HistogramEstimator::covering(&both, 0.0, args.bins)),
    }
    .and_then(|e| e.with_smoothing(args.smoothing))
    .map_err(usage)?;
    let report = estimate_divergences(&p, &q, &est).map_err(usage)?;
    emit(
        out,
        &format!("{}\n{}\n", DivergenceReport::CSV_HEADER, report.csv_row()),
    )?;
    Ok(EXIT_OK)
}

fn builtin_spec(kind: SampleKind, dim: usize) -> DatasetSpec {
    match kind {
        SampleKind::Ring => DatasetSpec::Ring {
            radius: 1.0,
            noise_std: 0.05,
        },
        SampleKind::Gaussian => DatasetSpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: vec![0.0; dim],
                covariance_diagonal: vec![1.0; dim],
                weight: 1.0,
            }],
        },
        SampleKind::TwoGaussians => DatasetSpec::GaussianMixture {
            components: [-2.0, 2.0]
                .iter()
                .map(|&x| GaussianComponent {
                    mean: vec![x, 0.0],
                    covariance_diagonal: vec![0.25, 0.25],
                    weight: 0.5,
                })
                .collect(),
        },
    }
}

fn cmd_sample(args: &SampleArgs, out: &mut dyn std::io::Write) -> CliResult {
    let spec = match (&args.spec, args.kind) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| usage(Error::io(path, e)))?;
            toml::from_str::<DatasetSpec>(&text).map_err(|e| {
                usage(Error::Parse {
                    path: path.clone(),
                    message: e.to_string(),
                })
            })?
        }
        (None, Some(kind)) => builtin_spec(kind, args.dim),
        (None, None) => return Err(usage(Error::config("kind", "pass --kind or --spec"))),
    };
    if args.dim == 0 {
        return Err(usage(Error::config("dim", "must be at least 1")));
    }
    let mut rng = stream(args.seed, 0);
    let samples = sample_dataset(&spec, args.n, &mut rng).map_err(usage)?;
    let text = write_samples(&samples);
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| runtime(Error::io(path, e)))?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_OK)
}

/// Largest relative gradient error of both training objectives on a seeded
/// pair of small networks: `(discriminator, generator)`.
pub fn gradcheck_default(seed: u64, h: f64) -> Result<(f64, f64)> {
    let mut rng = stream(seed, 0);
    let latent = LatentPrior {
        dimension: 3,
        kind: Default::default(),
    };
    let gen = MlpParams::init(
        &[3, 8, 8, 2],
        &[Activation::Tanh, Activation::Tanh, Activation::Identity],
        &mut rng,
    )?;
    let disc = MlpParams::init(
        &[2, 8, 8, 1],
        &[Activation::Tanh, Activation::Tanh, Activation::Sigmoid],
        &mut rng,
    )?;
    let n = 16;
    let data = LatentPrior {
        dimension: 2,
        ..latent
    };
    let real = vec![
        (0.4, data.sample(n, &mut rng)),
        (0.6, data.sample(n, &mut rng)),
    ];
    let z = latent.sample(n, &mut rng);
    let fakes = gen.predict(&z)?;
    let d_err = grad_check(
        &disc,
        |d| {
            let o = discriminator_objective(d, &real, &fakes)?;
            Ok((o.value, o.grads))
        },
        h,
    )?;
    let g_err = grad_check(
        &gen,
        |g| {
            let o = generator_objective(g, &disc, &z, GeneratorLoss::Minimax)?;
            Ok((o.value, o.grads))
        },
        h,
    )?;
    Ok((d_err, g_err))
}

fn cmd_gradcheck(args: &GradcheckArgs, out: &mut dyn std::io::Write) -> CliResult {
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(usage(Error::config("step", "must be positive")));
    }
    let (d_err, g_err) = gradcheck_default(args.seed, args.step).map_err(runtime)?;
    let worst = d_err.max(g_err);
    let mut text = String::from("objective,max_rel_error\n");
    text.push_str(&format!("discriminator,{d_err}\ngenerator,{g_err}\n"));
    text.push_str(&format!("max_rel_error={worst}\n"));
    emit(out, &text)?;
    let _ = out.flush();
    Ok(if worst <= GRADCHECK_TOL {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}
