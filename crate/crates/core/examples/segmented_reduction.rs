//! L_p routes from a segmented-TSP oracle, with the per-level DP table.

use lptsp::exact::pareto_dp_opt;
use lptsp::generate::random_line;
use lptsp::segdp::{lp_via_segmented, BruteForceOracle, ReductionConfig, SlowedOracle};
use lptsp::{norm, visit_times, Objective};

fn main() -> lptsp::Result<()> {
    let inst = random_line(7, 5)?;
    let p = 2.0;
    let config = ReductionConfig::new(0.75, 2);
    let (_, opt) = pareto_dp_opt(&inst, Objective::Lp(p))?;

    let exact = lp_via_segmented(&inst, p, &config, &BruteForceOracle)?;
    let achieved = norm(&visit_times(&inst, &exact.route)?, Objective::Lp(p))?;
    println!("route {:?}", exact.route.order());
    println!("L2 {achieved:.4}, bound {:.4}, optimum {opt:.4}", exact.bound);
    println!("{} oracle calls, best phase j = {}", exact.trace.oracle_calls, exact.trace.best_j);
    for level in &exact.trace.phases[exact.trace.best_j].levels {
        println!("  level {:>2}  lambda {:>10.3}  D = {:?}", level.level, level.lambda, level.entries);
    }

    let slowed = lp_via_segmented(&inst, p, &config, &SlowedOracle { alpha: 1.5 })?;
    println!("with a 1.5-approximate oracle: bound {:.4}", slowed.bound);
    Ok(())
}
