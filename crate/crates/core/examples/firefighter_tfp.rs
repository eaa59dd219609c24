//! Randomized and derandomized covering for the squared L2 objective.

use lptsp::cover::{tfp_approx_with, tfp_constant, tfp_derandomized_with, TFP_RATIO};
use lptsp::exact::pareto_dp_opt;
use lptsp::generate::random_tree;
use lptsp::ktree::{TreeMethod, TreeSweep};
use lptsp::{norm, visit_times, Objective};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lptsp::Result<()> {
    let inst = random_tree(10, 3)?;
    let trees = TreeSweep::build(&inst, TreeMethod::Auto)?;
    let (_, opt) = pareto_dp_opt(&inst, Objective::Lp(2.0))?;

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let runs = 200;
    let mut mean = 0.0;
    for _ in 0..runs {
        let route = tfp_approx_with(&inst, &trees, &mut rng)?;
        let l2 = norm(&visit_times(&inst, &route)?, Objective::Lp(2.0))?;
        mean += (l2 / opt).powi(2) / runs as f64;
    }
    println!("optimum L2 {opt:.4}");
    println!("mean squared ratio over {runs} runs: {mean:.4} (bound {:.3})", tfp_constant(TFP_RATIO)?);

    let best = tfp_derandomized_with(&inst, &trees, 32)?;
    println!(
        "derandomized: L2 {:.4}, ratio {:.4}, exponent {:.4}, {:?}",
        best.l2,
        best.l2 / opt,
        best.exponent,
        best.pattern
    );
    Ok(())
}
