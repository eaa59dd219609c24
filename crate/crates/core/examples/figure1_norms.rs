//! The four-point line where the L1 and L2 optima disagree.

use lptsp::exact::{brute_force_opt, pareto_dp_opt};
use lptsp::generate::figure1;
use lptsp::{norm, visit_times, Objective};

fn main() -> lptsp::Result<()> {
    let inst = figure1(0.01)?;
    for obj in [Objective::Lp(1.0), Objective::Lp(2.0), Objective::LInf, Objective::TopK(2)] {
        let (route, value) = brute_force_opt(&inst, obj)?;
        println!("{obj:?}: route {:?}, value {value:.6}", route.order());
    }

    let (l1_route, _) = pareto_dp_opt(&inst, Objective::Lp(1.0))?;
    let times = visit_times(&inst, &l1_route)?;
    println!("L1-optimal route under L2: {:.6}", norm(&times, Objective::Lp(2.0))?);
    Ok(())
}
