//! Finite-difference check of a small MLP's backward pass and of both
//! adversarial training objectives.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvgan::cli::gradcheck_default;
use tvgan::nn::{grad_check, Activation, MlpParams, Tensor};

fn main() -> tvgan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = MlpParams::init(
        &[3, 16, 16, 2],
        &[Activation::Relu, Activation::Tanh, Activation::Identity],
        &mut rng,
    )?;
    let x = Tensor::matrix(4, 3, (0..12).map(|i| (i as f64 * 0.37).sin()).collect())?;
    let target = Tensor::matrix(4, 2, vec![0.5, -0.5, 1.0, 0.0, -1.0, 0.25, 0.0, 2.0])?;

    // mean squared error against a fixed target
    let err = grad_check(
        &net,
        |p| {
            let cache = p.forward(&x)?;
            let diff: Vec<f64> = cache
                .output()
                .data()
                .iter()
                .zip(target.data())
                .map(|(a, b)| a - b)
                .collect();
            let n = diff.len() as f64;
            let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
            let seed = Tensor::matrix(4, 2, diff.iter().map(|d| 2.0 * d / n).collect())?;
            let (grads, _) = p.backward(&cache, &seed)?;
            Ok((loss, grads))
        },
        1e-5,
    )?;
    println!("mse loss:                max rel error {err:e}");

    let (d_err, g_err) = gradcheck_default(0, 1e-5)?;
    println!("discriminator objective: max rel error {d_err:e}");
    println!("generator objective:     max rel error {g_err:e}");
    Ok(())
}
