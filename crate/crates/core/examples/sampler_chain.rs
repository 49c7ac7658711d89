// Runs the Metropolis-within-Gibbs chain on a simulated dataset and prints
// acceptance rates and a few trace summaries.

use hgpr::model::Coordinate;
use hgpr::rng::{seeded, DATA_STREAM};
use hgpr::sampler::{run_chain, SamplerConfig};
use hgpr::simulation::gen_dgp1;

pub fn run_example() -> hgpr::Result<()> {
    let (data, truth) = gen_dgp1(3, 40, &mut seeded(1, DATA_STREAM))?;
    let cfg = SamplerConfig {
        iterations: 300,
        burn_in: 100,
        seed: 1,
        ..SamplerConfig::default()
    };
    let chain = run_chain(&data, &cfg)?;
    println!("{} retained draws", chain.len());
    let theta = &chain.samples[0].theta;
    for (c, rate) in theta.coordinates().zip(&chain.acceptance_rates) {
        println!("{:>16} acceptance {:.2}", c.name(), rate);
    }
    let mu = chain.theta_trace(Coordinate::Mu);
    println!("mean of mu trace: {:.4}", mu.iter().sum::<f64>() / mu.len() as f64);
    let draws = chain.delta_draws();
    for j in 0..data.n_groups() {
        println!("delta_{} mean {:.4} (truth {})", j + 1, draws.column(j).mean(), truth.delta[j]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
