//! Pushes a discrete law through spike-and-slab channels of increasing weight
//! and prints the exact total variation each one introduces.

use tvgan::distributions::{discrete_convolve, DiscreteDist, SlabSpec, SpikeSlabNoise};
use tvgan::game::channel_bound_check;

fn main() -> tvgan::Result<()> {
    let p_x = DiscreteDist::on_line(&[0.0, 10.0], &[0.5, 0.5])?;
    let slabs = [
        ("shift +1", SlabSpec::PointMass { offset: vec![1.0] }),
        ("shift +10", SlabSpec::PointMass { offset: vec![10.0] }),
        (
            "+-1 coin",
            SlabSpec::Discrete {
                table: DiscreteDist::on_line(&[-1.0, 1.0], &[0.5, 0.5])?,
            },
        ),
    ];
    println!("slab,gamma,tv,satisfied");
    for (name, slab) in &slabs {
        for gamma in [0.0, 0.1, 0.3, 0.7, 1.0] {
            let noise = SpikeSlabNoise::new(gamma, slab.clone())?;
            let b = channel_bound_check(&p_x, &noise)?;
            println!("{name},{gamma},{},{}", b.tv, b.satisfied);
        }
    }

    let noise = SpikeSlabNoise::new(0.3, SlabSpec::PointMass { offset: vec![1.0] })?;
    let p_y = discrete_convolve(&p_x, &noise)?;
    println!("\nlaw of X + Z for the shift +1 slab at gamma = 0.3:");
    for (x, p) in p_y.iter() {
        println!("  {:>5} {p}", x[0]);
    }
    Ok(())
}
