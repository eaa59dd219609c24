//! All-norm approximation: geometric covering with budgets doubling from
//! the smallest distance, checked against exact k-strolls.

use lptsp::cover::{allnorm_approx_with, loop_visit_times};
use lptsp::exact::k_stroll_lengths;
use lptsp::generate::random_euclidean;
use lptsp::ktree::{TreeMethod, TreeSweep};
use lptsp::visit_times;

fn main() -> lptsp::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let inst = random_euclidean(9, seed)?;
    let trees = TreeSweep::build(&inst, TreeMethod::Exact)?;
    let (route, schedule) = allnorm_approx_with(&inst, &trees)?;
    println!("route {:?}", route.order());
    for sub in &schedule.subtours {
        println!("  budget {:>8.3}  tree k = {}  weight {:.3}", sub.budget, sub.tree_k, sub.tree_weight);
    }

    let strolls = k_stroll_lengths(&inst)?;
    let shortcut = visit_times(&inst, &route)?;
    let looped = loop_visit_times(&inst, &schedule);
    println!("k  t_k(route)  t_k(loops)  k-stroll");
    for k in 1..=inst.n() {
        println!(
            "{k:<2} {:>10.3}  {:>10.3}  {:>8.3}",
            shortcut.sorted[k - 1],
            looped.sorted[k - 1],
            strolls[k - 1]
        );
    }
    Ok(())
}
