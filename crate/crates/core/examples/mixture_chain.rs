//! Evaluates every link of the bound chain on a two-dataset instance and on
//! a family of generator laws sliding away from the clean mixture.

use tvgan::distributions::{DiscreteDist, SlabSpec, SpikeSlabNoise};
use tvgan::game::{
    checks_to_csv, mixture_chain_check, value_c, value_c_closed_form, DataPart, GameInstance,
};

fn main() -> tvgan::Result<()> {
    let parts = vec![
        DataPart {
            dist: DiscreteDist::on_line(&[0.0, 1.0], &[0.7, 0.3])?,
            alpha: 0.6,
        },
        DataPart {
            dist: DiscreteDist::on_line(&[1.0, 2.0], &[0.5, 0.5])?,
            alpha: 0.4,
        },
    ];
    let noises = vec![
        SpikeSlabNoise::new(0.2, SlabSpec::PointMass { offset: vec![1.0] })?,
        SpikeSlabNoise::new(0.1, SlabSpec::PointMass { offset: vec![-1.0] })?,
    ];
    let p_g = DiscreteDist::uniform(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]])?;
    let inst = GameInstance::new(parts, noises, p_g)?;

    let report = mixture_chain_check(&inst, 0.2)?;
    print!("{}", checks_to_csv(&report.checks));
    println!("all hold: {}\n", report.all_hold());

    println!("t,C(G),-ln4+2JSD");
    let p_mix = inst.p_mix_noised()?;
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let far = DiscreteDist::point_mass(vec![3.0])?;
        let p_g = DiscreteDist::mixture(&[(1.0 - t, &p_mix), (t, &far)])?;
        let inst = inst.with_p_g(p_g)?;
        println!("{t},{},{}", value_c(&inst)?, value_c_closed_form(&inst)?);
    }
    Ok(())
}
