//! A non-increasing walk with a rare macroscopic drop: unit down-steps plus
//! a jump to ⌈ρn⌉ at probability θ/n. Its mean absorption time over n
//! converges to 1/|Ψ(1)|, checked here against an exact recursion.
//!
//! ```bash
//! cargo run --release -p lamperti --example rare_jump_moments
//! ```

use lamperti::embedding::ScalingSequence;
use lamperti::kernels::TransitionKernel;
use lamperti::levy;
use lamperti::montecarlo::{moment_summary, run_absorption, ExperimentPlan};

/// T(m) = 1 + (1 - θ/m) T(m-1) + (θ/m) T(⌈ρm⌉) for θ = 1, ρ = 1/2.
fn expected_absorption(n: usize) -> f64 {
    let mut t = vec![0.0f64; n + 1];
    for m in 2..=n {
        let q = 1.0 / m as f64;
        t[m] = 1.0 + (1.0 - q) * t[m - 1] + q * t[m.div_ceil(2)];
    }
    t[n]
}

fn main() {
    let kernel = TransitionKernel::rare_jump_drift(1.0, 0.5).unwrap();
    let triplet = levy::limit_triplet(&kernel).unwrap();
    let psi1 = triplet.laplace_exponent(1.0).unwrap();
    println!("Ψ(1) = {psi1:.4}, limit of E[A]/n = 1/|Ψ(1)| = {:.4}", 1.0 / psi1.abs());

    for &n in &[100u64, 300, 1000] {
        let oracle = expected_absorption(n as usize) / n as f64;
        let plan = ExperimentPlan {
            kernel: kernel.clone(),
            scaling: ScalingSequence::power_law(1.0).unwrap(),
            starts: vec![n],
            stop_bound: 1,
            t_list: vec![],
            replicas: 4000,
            cap_multiple: 50.0,
            master_seed: 2,
        };
        let set = run_absorption(&plan).unwrap().remove(0);
        let mc = moment_summary(&set, 1.0, 0.01).unwrap();
        println!(
            "n = {n:>5}: Monte Carlo {:.4} ± {:.4} | exact recursion {oracle:.4}",
            mc.estimate, mc.ci_half_width
        );
    }
}
