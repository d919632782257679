//! Transient regime: the rescaled chain marginal X(⌊n²t⌋)/n against the
//! self-similar limit marginal Y(t), compared by a two-sample KS test.
//!
//! ```bash
//! cargo run --release -p lamperti --example transient_marginals
//! ```

use lamperti::embedding::ScalingSequence;
use lamperti::kernels::TransitionKernel;
use lamperti::levy;
use lamperti::montecarlo::{run_limit_marginals, run_marginals, ExperimentPlan, LimitSimParams};
use lamperti::stats;

fn main() {
    let kernel = TransitionKernel::bessel(-3.0); // drifts up: never absorbed
    let plan = ExperimentPlan {
        kernel: kernel.clone(),
        scaling: ScalingSequence::power_law(2.0).unwrap(),
        starts: vec![300],
        stop_bound: 1,
        t_list: vec![0.1, 0.5],
        replicas: 1000,
        cap_multiple: 50.0,
        master_seed: 3,
    };
    let chain = run_marginals(&plan, false).unwrap().remove(0);

    let triplet = levy::limit_triplet(&kernel).unwrap();
    println!(
        "limit process: Brownian with drift b = {:.2}, sigma² = {:.2}, gamma = {:.0}",
        triplet.b, triplet.sigma2, triplet.gamma
    );
    let limit =
        run_limit_marginals(&triplet, &plan.t_list, 1000, 4, LimitSimParams::default()).unwrap();

    for (slot, &t) in plan.t_list.iter().enumerate() {
        let a = stats::EmpiricalDistribution::new(chain.marginal_samples(slot)).unwrap();
        let b = stats::EmpiricalDistribution::new(limit.marginal_samples(slot)).unwrap();
        let (d, p) = stats::ks_two_sample(&a, &b);
        println!(
            "t = {t}: chain mean {:.4}, limit mean {:.4}, KS D = {d:.4}, p = {p:.3}",
            a.mean(),
            b.mean()
        );
    }
}
