// Coordinate-wise likelihood updates. A candidate is evaluated without
// touching the cache and committed only if accepted.

use hgpr::kernels::KdeltaMode;
use hgpr::model::{Coordinate, LikelihoodCache, PriorConfig};
use hgpr::rng::{seeded, DATA_STREAM};
use hgpr::simulation::gen_dgp1;

pub fn run_example() -> hgpr::Result<()> {
    let (data, _) = gen_dgp1(3, 40, &mut seeded(7, DATA_STREAM))?;
    let theta = PriorConfig::default().sample(3, 1e6, &mut seeded(8, DATA_STREAM));
    let mut cache = LikelihoodCache::new(&data, &theta, KdeltaMode::SeOverIndex)?;
    println!("start: log p(Y | theta) = {:.3}", cache.log_marginal());

    for c in [Coordinate::Mu, Coordinate::FInvSqLength, Coordinate::SigmaPlus(1)] {
        let old = cache.theta().get(c);
        let cand = cache.evaluate(c, old * 0.5 + 0.1)?;
        println!(
            "{:>16}: {:.4} -> {:.4}, log p {:.3} -> {:.3}",
            c.name(),
            old,
            cand.theta().get(c),
            cache.log_marginal(),
            cand.log_marginal()
        );
        if cand.log_marginal() > cache.log_marginal() {
            cache.commit(cand);
        }
    }
    let post = cache.delta_posterior();
    println!("delta | Y, theta mean: {:.3?}", post.mean.as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
