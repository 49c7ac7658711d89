// Squared-exponential kernel matrices are numerically singular for close
// inputs. The factorization adds a small relative jitter when needed.

use hgpr::kernels::{kdelta_matrix, se_matrix, KdeltaMode, SeParams};
use hgpr::linalg::SpdFactor;
use nalgebra::DVector;

pub fn run_example() -> hgpr::Result<()> {
    let p = SeParams::new(2.0, 0.5)?;
    let z: Vec<f64> = (0..200).map(|i| -1.0 + i as f64 / 100.0).collect();
    let k = se_matrix(&z, &z, &p);
    let f = SpdFactor::new(&k)?;
    println!("n = {}, jitter = {:e}, log det = {:.3}", f.dim(), f.jitter(), f.log_det());

    let b = DVector::from_fn(z.len(), |i, _| z[i].sin());
    let x = f.solve(&b);
    let resid = (&k * &x - &b).amax();
    println!("max residual of K x = b: {resid:e}");

    let kd = kdelta_matrix(4, &SeParams::new(1.0, 1.0)?, KdeltaMode::SeOverIndex);
    println!("K_delta over group indices:\n{kd:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
