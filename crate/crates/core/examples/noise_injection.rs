//! Injects spike-and-slab noise into a minibatch per sample and per batch and
//! reports how many rows each mode perturbs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvgan::distributions::{inject_noise, InjectionMode, SlabSpec, SpikeSlabNoise};
use tvgan::nn::Tensor;

fn main() -> tvgan::Result<()> {
    let batch = Tensor::zeros(vec![1000, 3]);
    let slabs = [
        SlabSpec::Gaussian { std: vec![0.5; 3] },
        SlabSpec::DirichletFlat { dimension: 3 },
        SlabSpec::PointMass {
            offset: vec![0.0, 0.0, 4.0],
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("slab,mode,rows_perturbed,mean_row_sum");
    for slab in slabs {
        let noise = SpikeSlabNoise::new(0.25, slab)?;
        for mode in [InjectionMode::PerSample, InjectionMode::PerBatch] {
            let out = inject_noise(&batch, &noise, mode, &mut rng)?;
            let hit = out.mask.iter().filter(|m| **m).count();
            let sum: f64 = out.noised.data().iter().sum::<f64>() / 1000.0;
            println!("{},{mode:?},{hit},{sum:.4}", slab_name(&noise.slab));
        }
    }
    Ok(())
}

fn slab_name(slab: &SlabSpec) -> &'static str {
    match slab {
        SlabSpec::Gaussian { .. } => "gaussian",
        SlabSpec::DirichletFlat { .. } => "dirichlet_flat",
        SlabSpec::PointMass { .. } => "point_mass",
        SlabSpec::Discrete { .. } => "discrete",
    }
}
