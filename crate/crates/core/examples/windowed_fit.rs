// Restricting to a window around the cutoff. The running variable of the
// second process is skewed left, so with a tight imbalance ratio the
// window doubles to the right.

use hgpr::rng::{seeded, DATA_STREAM};
use hgpr::simulation::gen_dgp2;
use hgpr::windowing::{apply_cut, resolve_window, rule_of_thumb_half_width, SkewMode, WindowPolicy};

pub fn run_example() -> hgpr::Result<()> {
    let (data, _) = gen_dgp2(4, 100, &mut seeded(5, DATA_STREAM))?;
    let h = rule_of_thumb_half_width(&data)?;
    println!("rule-of-thumb half-width {h:.3}");
    let h = 0.2;
    for ratio in [2.0, 1.2] {
        let policy = WindowPolicy {
            half_width: h,
            skew_mode: SkewMode::Auto,
            imbalance_ratio: ratio,
        };
        let w = resolve_window(&data, &policy)?;
        let cut = apply_cut(&data, &policy)?;
        println!(
            "ratio {ratio}: window [{:.3}, {:.3}] keeps {} of {} rows ({} control, {} treated)",
            w.lower,
            w.upper,
            cut.len(),
            data.len(),
            cut.n_minus(),
            cut.n_plus()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hgpr::Result<()> {
    run_example()
}
