//! Enumerates every generator law on a three-point support (probabilities on
//! a 0.05 grid) and reports where the optimal-discriminator value is smallest.

use tvgan::distributions::DiscreteDist;
use tvgan::game::{neg_log4, verify_grid_optimum};

fn main() -> tvgan::Result<()> {
    let p_data = DiscreteDist::on_line(&[-1.0, 0.0, 1.0], &[0.2, 0.35, 0.45])?;
    let r = verify_grid_optimum(&p_data, 0.05)?;
    println!("grid points:     {}", r.grid_points);
    println!("argmin p_g:      {:?}", r.argmin.probs());
    println!("p_data:          {:?}", p_data.probs());
    println!("min C(G):        {}", r.min_value);
    println!("-ln 4:           {}", neg_log4());
    if let Some(next) = r.runner_up {
        println!("second smallest: {next}");
    }
    println!("argmin is p_data: {}", r.argmin_is_nearest());
    Ok(())
}
