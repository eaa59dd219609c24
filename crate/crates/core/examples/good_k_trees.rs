//! Exact and primal-dual good k-trees side by side.

use lptsp::exact::k_stroll_lengths;
use lptsp::generate::random_euclidean;
use lptsp::ktree::{good_k_tree_exact, good_k_tree_pd, pcst_primal_dual};

fn main() -> lptsp::Result<()> {
    let inst = random_euclidean(10, 8)?;
    let strolls = k_stroll_lengths(&inst)?;
    println!("k  exact    pd       k-stroll");
    for k in 1..=inst.n() {
        let exact = good_k_tree_exact(&inst, k)?;
        let pd = good_k_tree_pd(&inst, k)?;
        println!("{k:<2} {:>8.3} {:>8.3} {:>8.3}", exact.weight, pd.weight, strolls[k - 1]);
    }

    let pcst = pcst_primal_dual(&inst, 25.0)?;
    println!("PCST at penalty 25: {} vertices, weight {:.3}, dual {:.3}", pcst.vertices.len(), pcst.weight, pcst.dual_bound);
    Ok(())
}
