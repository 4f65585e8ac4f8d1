use super::{Gradients, MlpParams};
use crate::{Error, Result};

/// Largest relative disagreement between `analytic` and central differences of `f` at `x`.
///
/// Relative error per coordinate is `|a - n| / max(1e-12, |a| + |n|)`.
pub fn grad_check_flat<F>(x: &[f64], analytic: &[f64], h: f64, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::config(
            "h",
            "finite-difference step must be positive",
        ));
    }
    if x.len() != analytic.len() {
        return Err(Error::shape("analytic gradient", x.len(), analytic.len()));
    }
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Checks the gradients returned by `loss` against central differences in every parameter.
///
/// `loss` returns the scalar value and its analytic gradient at the given parameters.
pub fn grad_check<F>(params: &MlpParams, mut loss: F, h: f64) -> Result<f64>
where
    F: FnMut(&MlpParams) -> Result<(f64, Gradients)>,
{
    let (_, grads) = loss(params)?;
    let analytic = grads.to_flat();
    let mut scratch = params.clone();
    grad_check_flat(&params.to_flat(), &analytic, h, |flat| {
        scratch.set_flat(flat)?;
        Ok(loss(&scratch)?.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer, Tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Loss = Σ outputs; gradient via backward with an all-ones seed.
    fn sum_loss(input: &Tensor) -> impl FnMut(&MlpParams) -> Result<(f64, Gradients)> + '_ {
        move |p: &MlpParams| {
            let cache = p.forward(input)?;
            let out = cache.output();
            let ones = Tensor::from_raw(out.shape().to_vec(), vec![1.0; out.len()]);
            let (g, _) = p.backward(&cache, &ones)?;
            Ok((out.data().iter().sum(), g))
        }
    }

    #[test]
    fn linear_model_is_exact() {
        let w = Tensor::matrix(3, 1, vec![0.5, -1.0, 2.0]).unwrap();
        let net =
            MlpParams::new(vec![Layer::new(w, vec![0.1], Activation::Identity).unwrap()]).unwrap();
        let x = Tensor::matrix(2, 3, vec![1., 2., 3., -1., 0.5, 4.]).unwrap();
        let err = grad_check(&net, sum_loss(&x), 1e-5).unwrap();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn tanh_mlp_seed_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = MlpParams::init(
            &[3, 6, 4, 2],
            &[Activation::Tanh, Activation::Tanh, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let x = Tensor::matrix(4, 3, (0..12).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let err = grad_check(&net, sum_loss(&x), 1e-5).unwrap();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn rejects_nonpositive_step() {
        let net = MlpParams::new(vec![Layer::new(
            Tensor::zeros(vec![1, 1]),
            vec![0.0],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap();
        let x = Tensor::zeros(vec![1, 1]);
        assert!(grad_check(&net, sum_loss(&x), 0.0).is_err());
    }
}
