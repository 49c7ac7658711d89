// End to end through files: write a CSV, fit it as the `fit` command
// would, and read the JSON report and trace back.

use hgpr::cli::{read_fit_report, run_fit, write_observations_csv, FitConfig};
use hgpr::rng::{seeded, DATA_STREAM};
use hgpr::simulation::gen_dgp1;

pub fn run_example() -> hgpr::Result<()> {
    let dir = std::env::temp_dir().join(format!("hgpr-fit-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| hgpr::HgprError::Io { path: dir.clone(), source: e })?;
    let (data, _) = gen_dgp1(3, 30, &mut seeded(2, DATA_STREAM))?;
    let input = dir.join("data.csv");
    write_observations_csv(&input, &data.observations())?;

    let cfg = FitConfig {
        input: Some(input),
        iterations: 200,
        burn_in: 50,
        seed: 2,
        out: Some(dir.join("report.json")),
        trace: Some(dir.join("trace.csv")),
        ..FitConfig::default()
    };
    let outcome = run_fit(&cfg)?;
    let back = read_fit_report(cfg.out.as_ref().unwrap())?;
    assert_eq!(back, outcome.report);
    for g in &back.groups {
        println!("group {}: {:.4} [{:.4}, {:.4}]", g.label, g.mean, g.lower, g.upper);
    }
    println!("sharp null rejected: {}", back.sharp_null.reject);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
