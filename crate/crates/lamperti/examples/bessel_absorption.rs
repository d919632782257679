//! Absorption times of the Bessel-type walk: the rescaled time A/n² follows
//! an inverse-gamma law in the limit, with mean 1/(s²(r-1)).
//!
//! ```bash
//! cargo run --release -p lamperti --example bessel_absorption
//! ```

use lamperti::embedding::ScalingSequence;
use lamperti::kernels::TransitionKernel;
use lamperti::montecarlo::{moment_summary, run_absorption, ExperimentPlan};
use lamperti::stats;

fn main() {
    let d = 3.0; // r = d = 3, shape (1+r)/2 = 2
    let n = 200;
    let plan = ExperimentPlan {
        kernel: TransitionKernel::bessel(d),
        scaling: ScalingSequence::power_law(2.0).unwrap(),
        starts: vec![n],
        stop_bound: 1,
        t_list: vec![],
        replicas: 2000,
        cap_multiple: 200.0,
        master_seed: 1,
    };
    let set = run_absorption(&plan).unwrap().remove(0);

    let mean = moment_summary(&set, 1.0, 0.01).unwrap();
    println!(
        "mean(A)/n² = {:.4} ± {:.4}   (limit 1/(s²(r-1)) = {:.4})",
        mean.estimate,
        mean.ci_half_width,
        1.0 / (d - 1.0)
    );

    let frac = moment_summary(&set, 1.5, 0.01).unwrap();
    println!(
        "E[(A/n²)^1.5] = {:.4}        (limit {:.4})",
        frac.estimate,
        stats::inverse_gamma_moment(d, 1.0, 1.5).unwrap()
    );

    let sample = stats::EmpiricalDistribution::new(set.absorption_ratios()).unwrap();
    let (ks_d, p) = stats::ks_one_sample(&sample, |x| stats::inverse_gamma_cdf(x, d, 1.0).unwrap());
    let crit = stats::ks_critical_value(0.01, sample.len() as f64);
    println!("KS against the inverse-gamma law: D = {ks_d:.4}, p = {p:.3}, 1% critical = {crit:.4}");
}
