// A small replication study on the first process, with and without a
// window. Replicates run in parallel and the report is deterministic.

use hgpr::sampler::SamplerConfig;
use hgpr::simulation::{run_study, DgpKind, DgpSpec};
use hgpr::windowing::{SkewMode, WindowPolicy};

pub fn run_example() -> hgpr::Result<()> {
    let spec = DgpSpec::new(DgpKind::Dgp1).with_size(3, 30);
    let cfg = SamplerConfig {
        iterations: 200,
        burn_in: 50,
        ..SamplerConfig::default()
    };
    let cut = WindowPolicy::new(0.6, SkewMode::None)?;
    let report = run_study(&spec, 3, &cfg, Some(&cut), 11)?;
    for m in std::iter::once(&report.hgpr).chain(report.hgpr_cut.as_ref()) {
        println!("{:?}: {} ok, {} failed", m.method, m.rows.len(), m.n_failed());
        if let Some(mean) = &m.mean {
            println!(
                "  rmse {:.4} coverage {:.2} length {:.4} multi {:.2}",
                mean.rmse, mean.coverage, mean.avg_length, mean.multi_cover
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
