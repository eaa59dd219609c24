//! A heavy cluster near the start on the circle: going the wrong way round
//! costs about 4π² per unit weight.

use lptsp::lowerbound::circle_ratio_demo;

fn main() -> lptsp::Result<()> {
    for n in [10, 100, 1000] {
        let demo = circle_ratio_demo(n, 1_000_000, 0.5)?;
        println!(
            "n = {n:>4}: wrong {:>9.4}  right {:>8.5}  (4π² = {:.4})",
            demo.wrong_direction,
            demo.right_direction,
            4.0 * std::f64::consts::PI.powi(2)
        );
    }
    Ok(())
}
