// With θ fixed, δ | Y is Gaussian. Builds the joint over (δ, Y) for a
// small two-group dataset and prints the conditional mean and covariance.

use hgpr::kernels::{build_components, KdeltaMode};
use hgpr::model::{assemble_joint, canonicalize, delta_conditional, log_marginal, Observation, Theta};
use nalgebra::DVector;

pub fn run_example() -> hgpr::Result<()> {
    let data = canonicalize(&[
        Observation::sharp(0.12, -0.8, "a"),
        Observation::sharp(-0.35, -0.3, "b"),
        Observation::sharp(0.91, 0.2, "a"),
        Observation::sharp(1.40, 0.6, "b"),
        Observation::sharp(0.05, -0.1, "a"),
        Observation::sharp(1.10, 0.9, "b"),
    ])?;
    // mu, sigma-_a, sigma-_b, sigma+_a, sigma+_b, r_delta, r_f, r_g, 1/l_delta, 1/l_f, 1/l_g
    let theta = Theta::from_vec(&[0.6, 0.20, 0.15, 0.25, 0.30, 1.5, 0.8, 1.2, 0.7, 2.0, 1.0])?;

    let components = build_components(&data, &theta, KdeltaMode::SeOverIndex)?;
    let joint = assemble_joint(&components, &theta)?;
    let y = DVector::from_column_slice(data.y());
    let post = delta_conditional(&joint, &y)?;

    println!("log p(Y | theta) = {:.6}", log_marginal(&y, &joint)?);
    for (j, label) in data.labels().iter().enumerate() {
        println!(
            "delta[{label}] = {:.4} (sd {:.4})",
            post.mean[j],
            post.cov[(j, j)].sqrt()
        );
    }
    println!("corr = {:.4}", post.cov[(0, 1)] / (post.cov[(0, 0)] * post.cov[(1, 1)]).sqrt());
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
