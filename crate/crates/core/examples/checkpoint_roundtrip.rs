//! Saves a freshly initialized generator, reloads it and checks that both
//! copies map the same latent batch to the same points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvgan::distributions::{LatentKind, LatentPrior};
use tvgan::nn::{load_checkpoint, save_checkpoint, Activation, MlpParams};

fn main() -> tvgan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let generator = MlpParams::init(
        &[2, 32, 32, 2],
        &[Activation::Tanh, Activation::Tanh, Activation::Identity],
        &mut rng,
    )?;
    let dir = std::env::temp_dir().join("tvgan-checkpoint-example");
    let (manifest, weights) = save_checkpoint(&generator, &dir, "generator")?;
    println!("manifest: {}", manifest.display());
    println!("weights:  {}", weights.display());
    println!(
        "{}",
        std::fs::read_to_string(&manifest).expect("manifest readable")
    );

    let reloaded = load_checkpoint(&manifest)?;
    let z = LatentPrior {
        dimension: 2,
        kind: LatentKind::Gaussian,
    }
    .sample(5, &mut rng);
    let a = generator.predict(&z)?;
    let b = reloaded.predict(&z)?;
    println!("parameters: {}", reloaded.num_params());
    println!("identical outputs: {}", a == b);
    Ok(())
}
