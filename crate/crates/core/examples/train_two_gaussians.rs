//! Trains on the bundled two-Gaussian config and prints the divergence trace.
//!
//! Usage: `cargo run --release --example train_two_gaussians [config.toml] [out_dir]`

use std::path::PathBuf;

use tvgan::trainer::{write_outputs, TrainConfig, Trainer};

fn main() -> tvgan::Result<()> {
    let mut args = std::env::args().skip(1);
    let config_path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/train_mixture.toml")
    });
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("tvgan-two-gaussians"));

    let config = TrainConfig::from_toml_file(&config_path)?;
    let total = config.epochs * config.iterations_per_epoch();
    println!(
        "{} generator steps, k = {}, delta = {}",
        total,
        config.k,
        config.effective_delta()
    );
    let mut trainer = Trainer::new(config.clone())?;
    let mut metrics = Vec::with_capacity(total);
    println!("step,d_real,d_fake,tv,jsd");
    for _ in 0..total {
        let m = trainer.outer_step()?;
        if let (Some(tv), Some(jsd)) = (m.tv, m.jsd) {
            println!(
                "{},{:.3},{:.3},{tv:.4},{jsd:.4}",
                m.step, m.d_real, m.d_fake
            );
        }
        metrics.push(m);
    }
    let report = trainer.evaluate(config.n_eval)?;
    println!(
        "final: jsd {:.4} vs budget {} + margin {}: within budget = {}",
        report.jsd_estimate, report.delta, config.estimator_margin, report.within_budget
    );
    let outcome = tvgan::trainer::TrainOutcome {
        generator: trainer.generator,
        discriminator: trainer.discriminator,
        metrics,
    };
    for path in write_outputs(&outcome, &config, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
