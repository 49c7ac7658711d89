// Marginal intervals, the simultaneous credible ellipsoid and the two
// hypothesis tests, from a fitted chain.

use hgpr::inference::{summarize, test_homogeneous_null, test_sharp_null};
use hgpr::rng::{seeded, DATA_STREAM};
use hgpr::sampler::{run_chain, SamplerConfig};
use hgpr::simulation::{gen_dgp3, DeltaMode, ErrorMode};

pub fn run_example() -> hgpr::Result<()> {
    let (data, truth) = gen_dgp3(3, 40, DeltaMode::II, ErrorMode::A, &mut seeded(3, DATA_STREAM))?;
    let cfg = SamplerConfig {
        iterations: 300,
        burn_in: 100,
        seed: 3,
        ..SamplerConfig::default()
    };
    let chain = run_chain(&data, &cfg)?;
    let s = summarize(&chain, 0.05)?;
    for (j, (lo, hi)) in s.marginal_intervals.iter().enumerate() {
        println!("delta_{}: {:.3} [{:.3}, {:.3}] truth {:.3}", j + 1, s.delta_mean[j], lo, hi, truth.delta[j]);
    }
    println!("R = {:.3}, volume = {:.4}", s.r_alpha, s.volume);
    println!("truth inside region: {}", s.region_contains(&truth.delta)?);
    let sharp = test_sharp_null(&s)?;
    let homog = test_homogeneous_null(&s)?;
    println!("delta = 0: statistic {:.3}, reject {}", sharp.statistic, sharp.reject);
    println!(
        "common effect: C* = {:.3}, statistic {:.3}, reject {}",
        homog.c_star, homog.statistic, homog.reject
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
