//! Samplers for datasets and latent priors, the spike-and-slab noise channel,
//! and exact finite-support distributions.

mod dataset;
mod discrete;
mod latent;
mod noise;

pub use dataset::{
    read_sample_file, sample_dataset, write_samples, DataSource, DatasetSpec, GaussianComponent,
};
pub use discrete::DiscreteDist;
pub(crate) use discrete::PointKey;
pub use latent::{LatentKind, LatentPrior};
pub use noise::{
    discrete_convolve, inject_noise, sample_spike_slab, Injected, InjectionMode, SlabSpec,
    SpikeSlabDraw, SpikeSlabNoise,
};
