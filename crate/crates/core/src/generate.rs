//! Instance generators. Random kinds are deterministic in the seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lowerbound::appendix_instance;
use crate::metrics::Instance;

fn need(n: usize, min: usize, kind: &str) -> Result<()> {
    if n < min {
        return Err(Error::InvalidParameter(format!("{kind} needs n >= {min}, got {n}")));
    }
    Ok(())
}

/// `n` uniform coordinates in [0, 100), start 0.
pub fn random_line(n: usize, seed: u64) -> Result<Instance> {
    need(n, 1, "line")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance::line(0, (0..n).map(|_| rng.random_range(0.0..100.0)).collect())
}

/// `n` uniform points in the square [0, 100)², start 0.
pub fn random_euclidean(n: usize, seed: u64) -> Result<Instance> {
    need(n, 1, "euclidean")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance::euclidean(
        0,
        (0..n)
            .map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
            .collect(),
    )
}

/// Random recursive tree: vertex `v` hangs off a uniform earlier vertex with
/// weight uniform in [1, 10). Start 0.
pub fn random_tree(n: usize, seed: u64) -> Result<Instance> {
    need(n, 1, "tree")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance::tree(
        0,
        (1..n)
            .map(|v| (rng.random_range(0..v), v, rng.random_range(1.0..10.0)))
            .collect(),
    )
}

/// Unit circle: start at angle 0, single points at `2πk/n` for
/// `k = 1..=n−2`, and `m` copies at `2π(n−1−ε)/n`.
pub fn circle(n: usize, m: usize, epsilon: f64) -> Result<Instance> {
    need(n, 3, "circle")?;
    if m == 0 || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("circle needs m >= 1 and 0 < eps < 1, got m = {m}, eps = {epsilon}")));
    }
    let at = |k: f64| {
        let a = 2.0 * PI * k / n as f64;
        [a.cos(), a.sin()]
    };
    let mut points = vec![[1.0, 0.0]];
    points.extend((1..=n - 2).map(|k| at(k as f64)));
    points.extend(std::iter::repeat_n(at(n as f64 - 1.0 - epsilon), m));
    Instance::euclidean(0, points)
}

/// Start S at 0, A at −1−ε, B at 1, C at 2.
pub fn figure1(epsilon: f64) -> Result<Instance> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("figure1 needs eps > 0, got {epsilon}")));
    }
    Instance::line(0, vec![0.0, -1.0 - epsilon, 1.0, 2.0])
}

/// The appendix line instance; vertex 1 sits at the start coordinate 200.
pub fn appendix() -> Result<Instance> {
    appendix_instance().to_instance()
}

/// Start at 0 with points at `2^0, …, 2^{n−1}`.
pub fn powers2(n: usize) -> Result<Instance> {
    need(n, 1, "powers2")?;
    if n > 60 {
        return Err(Error::InvalidParameter(format!("powers2 supports n <= 60, got {n}")));
    }
    let mut coords = vec![0.0];
    coords.extend((0..n).map(|i| (1u64 << i) as f64));
    Instance::line(0, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::instance_to_json;

    #[test]
    fn figure1_distances() {
        let f = figure1(0.01).unwrap();
        assert_eq!(f.n(), 4);
        assert!((f.d(1, 3) - 3.01).abs() < 1e-12);
        assert_eq!(f.d(0, 2), 1.0);
    }

    #[test]
    fn powers2_coords() {
        let p = powers2(8).unwrap();
        assert_eq!(p.n(), 9);
        let crate::metrics::MetricSpec::Line { coords } = p.spec() else { panic!() };
        assert_eq!(coords, &vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]);
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(
            instance_to_json(&random_euclidean(8, 7).unwrap()),
            instance_to_json(&random_euclidean(8, 7).unwrap())
        );
        assert_ne!(random_tree(8, 1).unwrap(), random_tree(8, 2).unwrap());
        assert_eq!(random_line(5, 3).unwrap(), random_line(5, 3).unwrap());
    }

    #[test]
    fn circle_layout() {
        let c = circle(6, 3, 0.5).unwrap();
        assert_eq!(c.n(), 6 - 1 + 3);
        assert!((c.d(0, 1) - 1.0).abs() < 1e-12); // 60° chord of the unit circle
        assert_eq!(c.d(6, 7), 0.0);
        assert!(circle(2, 1, 0.5).is_err());
    }

    #[test]
    fn appendix_start() {
        let a = appendix().unwrap();
        assert_eq!(a.n(), 150);
        assert_eq!(a.start(), 1);
    }
}
