//! Verify the convergence assumptions for a kernel family and recover its
//! limit triplet numerically.
//!
//! ```bash
//! cargo run -p lamperti --example assumption_check
//! ```

use lamperti::analysis::{classify_regime, AnalysisConfig};
use lamperti::embedding::ScalingSequence;
use lamperti::kernels::TransitionKernel;

fn main() {
    let kernel = TransitionKernel::bessel(3.0);
    let scaling = ScalingSequence::power_law(2.0).unwrap();
    let config = AnalysisConfig::default_for(&scaling, 100_000);
    let report = classify_regime(&kernel, &scaling, &config).unwrap();

    println!("Bessel walk, d = 3, a_n = n²");
    println!("{:>9} {:>12} {:>12} {:>14}", "n", "a_n∫x", "a_n∫x²", "a_n∫x² (|x|<0.1)");
    for d in report.diagnostics.iter().step_by(3) {
        println!(
            "{:>9} {:>12.6} {:>12.6} {:>14.6}",
            d.n, d.first_moment, d.second_moment, d.small_second_moment
        );
    }
    println!();
    println!(
        "recovered limit: b = {:.6} (band {:.1e}), sigma² = {:.6} (band {:.1e})",
        report.estimate.b, report.estimate.b_band, report.estimate.sigma2, report.estimate.sigma2_band
    );
    println!(
        "foster drift functional at the top of the grid: {:.4} (threshold state M = {})",
        report.foster.as_ref().map_or(f64::NAN, |f| f.limit_value),
        report.foster.as_ref().map_or(0, |f| f.threshold),
    );
    println!(
        "assumption flags: A1 {} A2 {} A3 {} A4 {} A5 {}",
        report.a1_consistent, report.a2_pass, report.a3_pass, report.a4_pass, report.a5_pass
    );
    println!("drift {:?}, regime {:?}", report.drift, report.regime);
}
