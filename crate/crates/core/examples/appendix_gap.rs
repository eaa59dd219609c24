//! Certifies that no single route is within 1.78 of every top-k optimum on
//! the appendix line instance.

use lptsp::lowerbound::{allnorm_gap, appendix_instance, exponential_family_ratios};

fn main() -> lptsp::Result<()> {
    let cert = allnorm_gap(&appendix_instance())?;
    println!("{} candidate routes, gap {:.6}", cert.routes.len(), cert.gap);
    println!("best route starts {:?}", &cert.routes[cert.best_route].order()[..8]);

    for n in [500, 1000, 2100, 4000] {
        let r = exponential_family_ratios(n, 1e-3)?;
        println!("exponential family n = {n}: Linf {:.4}, L1 {:.4}, min {:.4}", r.linf, r.l1, r.min);
    }
    Ok(())
}
