//! Block counts of a fragmentation-coagulation particle system: simple
//! coagulations driven by Λ, splits driven by μ. When the associated Lévy
//! process drifts down, the block count hits 1 in O(n) steps and
//! E[A]/n approaches E[∫₀^∞ e^{ξ(s)} ds].
//!
//! ```bash
//! cargo run --release -p lamperti --example fragmentation_blocks
//! ```

use lamperti::embedding::ScalingSequence;
use lamperti::kernels::{FragCoagParams, LambdaMeasure, TransitionKernel};
use lamperti::levy::{self, exponential_functional, PathSimulator};
use lamperti::montecarlo::{moment_summary, run_absorption, ExperimentPlan};

fn main() {
    // Λ = δ_{1/2} with mass 1, μ = δ_1 with mass 1.
    let params =
        FragCoagParams::new(LambdaMeasure::Atoms(vec![(0.5, 1.0)]), vec![(1, 1.0)]).unwrap();
    let triplet = levy::frag_coag_limit_triplet(&params).unwrap();
    println!(
        "E[xi_1] = m + ∫ ln(1-x) x^-2 Λ(dx) = {:.4} -> {:?}",
        triplet.mean_at_one().unwrap(),
        triplet.classify_drift().unwrap()
    );
    println!("Ψ(1) = {:.4}", triplet.laplace_exponent(1.0).unwrap());

    // Chain side: mean absorption time of the jump chain from n = 300.
    let plan = ExperimentPlan {
        kernel: TransitionKernel::frag_coag(params),
        scaling: ScalingSequence::power_law(1.0).unwrap(),
        starts: vec![300],
        stop_bound: 1,
        t_list: vec![],
        replicas: 1000,
        cap_multiple: 50.0,
        master_seed: 5,
    };
    let set = run_absorption(&plan).unwrap().remove(0);
    let mc = moment_summary(&set, 1.0, 0.01).unwrap();

    // Limit side: Monte Carlo estimate of E[∫ e^{xi}].
    let sim = PathSimulator::new(triplet, 1e-3, 1e-3).unwrap();
    let replicas = 1000u64;
    let mut sum = 0.0;
    for rep in 0..replicas {
        let mut rng = lamperti::rng::replica_rng(6, lamperti::rng::Purpose::LimitPath, rep);
        let mut horizon = 8.0;
        let mut path = sim.simulate(horizon, &mut rng).unwrap();
        let mut ef = exponential_functional(&path, 1.0, 1.0).unwrap();
        while ef.tail_bound > 1e-5 && horizon < 512.0 {
            horizon *= 2.0;
            sim.extend_to(&mut path, horizon, &mut rng);
            ef = exponential_functional(&path, 1.0, 1.0).unwrap();
        }
        sum += ef.integral + ef.tail_bound;
    }
    println!(
        "chain mean(A)/n = {:.4} ± {:.4}   limit E[∫e^xi] = {:.4}",
        mc.estimate,
        mc.ci_half_width,
        sum / replicas as f64
    );
}
