//! Exact solvers used as ground truth: permutation enumeration, a subset DP
//! with Pareto frontiers over (length, cost), and the k-stroll DP.

use crate::error::{Error, Result};
use crate::metrics::Instance;
use crate::objectives::{Accumulator, Objective, Route};
use crate::tol::{improves, round_sig12};

pub const BRUTE_FORCE_MAX_N: usize = 11;
pub const PARETO_MAX_N: usize = 20;
pub const K_STROLL_MAX_N: usize = 15;

/// Exhaustive search over all routes in lexicographic order.
///
/// Partial routes are abandoned once their running cost can no longer
/// strictly improve on the incumbent, which keeps the first (lexicographically
/// smallest) optimal route.
pub fn brute_force_opt(instance: &Instance, obj: Objective) -> Result<(Route, f64)> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            op: "brute_force_opt",
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let acc = obj.accumulator(n)?;
    let s = instance.start();
    let mut search = Brute {
        instance,
        acc,
        used: vec![false; n],
        path: vec![s],
        best_cost: f64::INFINITY,
        best: Vec::new(),
    };
    search.used[s] = true;
    search.recurse(0.0, acc.add(0.0, 0, 0.0));
    Ok((Route::from_order(search.best), acc.finish(search.best_cost)))
}

struct Brute<'a> {
    instance: &'a Instance,
    acc: Accumulator,
    used: Vec<bool>,
    path: Vec<usize>,
    best_cost: f64,
    best: Vec<usize>,
}

impl Brute<'_> {
    fn recurse(&mut self, length: f64, cost: f64) {
        let n = self.used.len();
        if self.path.len() == n {
            if improves(cost, self.best_cost) {
                self.best_cost = cost;
                self.best.clone_from(&self.path);
            }
            return;
        }
        let last = *self.path.last().unwrap();
        for v in 0..n {
            if self.used[v] {
                continue;
            }
            let t = length + self.instance.d(last, v);
            let c = self.acc.add(cost, self.path.len(), t);
            if !improves(c, self.best_cost) {
                continue;
            }
            self.used[v] = true;
            self.path.push(v);
            self.recurse(t, c);
            self.path.pop();
            self.used[v] = false;
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Label {
    length: f64,
    cost: f64,
    /// (previous vertex, label index in that state's frontier)
    parent: Option<(usize, usize)>,
}

/// Subset DP over (visited set, last vertex) keeping the Pareto frontier of
/// (length, accumulated cost). Supports finite p-norms and Top-k.
pub fn pareto_dp_opt(instance: &Instance, obj: Objective) -> Result<(Route, f64)> {
    pareto_search(instance, obj, true)
}

fn pareto_search(instance: &Instance, obj: Objective, prune: bool) -> Result<(Route, f64)> {
    let n = instance.n();
    if n > PARETO_MAX_N {
        return Err(Error::TooLarge {
            op: "pareto_dp_opt",
            n,
            max: PARETO_MAX_N,
        });
    }
    if matches!(obj, Objective::LInf | Objective::AllNorm) {
        return Err(Error::UnsupportedObjective(obj.to_string()));
    }
    let acc = obj.accumulator(n)?;
    let s = instance.start();
    if n == 1 {
        return Ok((Route::from_order(vec![s]), 0.0));
    }
    // Non-start vertices are relabelled 0..m so masks skip the start bit.
    let others: Vec<usize> = (0..n).filter(|&v| v != s).collect();
    let m = others.len();
    let full = (1usize << m) - 1;
    let mut frontier: Vec<Vec<Label>> = vec![Vec::new(); (full + 1) * m];
    let idx = |mask: usize, v: usize| mask * m + v;

    for (i, &v) in others.iter().enumerate() {
        let t = instance.d(s, v);
        frontier[idx(1 << i, i)].push(Label {
            length: t,
            cost: acc.add(acc.add(0.0, 0, 0.0), 1, t),
            parent: None,
        });
    }
    for mask in 1..=full {
        let position = mask.count_ones() as usize + 1;
        for last in 0..m {
            if mask & (1 << last) == 0 || frontier[idx(mask, last)].is_empty() {
                continue;
            }
            let labels = std::mem::take(&mut frontier[idx(mask, last)]);
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let step = instance.d(others[last], others[next]);
                let target = idx(mask | (1 << next), next);
                for (li, label) in labels.iter().enumerate() {
                    let length = label.length + step;
                    let candidate = Label {
                        length,
                        cost: acc.add(label.cost, position, length),
                        parent: Some((last, li)),
                    };
                    insert(&mut frontier[target], candidate, prune);
                }
            }
            frontier[idx(mask, last)] = labels;
        }
    }

    let finals = (0..m).flat_map(|last| {
        frontier[idx(full, last)]
            .iter()
            .enumerate()
            .map(move |(li, l)| (last, li, l.cost))
    });
    let min_cost = finals.clone().map(|(_, _, c)| c).fold(f64::INFINITY, f64::min);
    // Among optimal labels, report the lexicographically smallest route.
    let (cost, order) = finals
        .filter(|&(_, _, c)| !improves(min_cost, c))
        .map(|(last, li, c)| (c, reconstruct(&frontier, m, full, last, li, &others, s)))
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("full mask always reachable");
    Ok((Route::from_order(order), acc.finish(cost)))
}

fn insert(front: &mut Vec<Label>, candidate: Label, prune: bool) {
    if !prune {
        front.push(candidate);
        return;
    }
    let (cl, cc) = (round_sig12(candidate.length), round_sig12(candidate.cost));
    for l in front.iter() {
        if round_sig12(l.length) <= cl && round_sig12(l.cost) <= cc {
            return;
        }
    }
    front.retain(|l| !(cl <= round_sig12(l.length) && cc <= round_sig12(l.cost)));
    front.push(candidate);
}

fn reconstruct(
    frontier: &[Vec<Label>],
    m: usize,
    mut mask: usize,
    mut last: usize,
    mut li: usize,
    others: &[usize],
    s: usize,
) -> Vec<usize> {
    let mut rev = Vec::new();
    loop {
        rev.push(others[last]);
        let label = frontier[mask * m + last][li];
        match label.parent {
            None => break,
            Some((prev, pli)) => {
                mask &= !(1 << last);
                last = prev;
                li = pli;
            }
        }
    }
    rev.push(s);
    rev.reverse();
    rev
}

/// Shortest path lengths from the start visiting at least k vertices (the
/// start included), endpoint free, for k = 1..=n. Index `k - 1`.
pub fn k_stroll_lengths(instance: &Instance) -> Result<Vec<f64>> {
    let n = instance.n();
    if n > K_STROLL_MAX_N {
        return Err(Error::TooLarge {
            op: "exact_k_stroll",
            n,
            max: K_STROLL_MAX_N,
        });
    }
    let s = instance.start();
    let others: Vec<usize> = (0..n).filter(|&v| v != s).collect();
    let m = others.len();
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    if m == 0 {
        return Ok(best);
    }
    let full = (1usize << m) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * m];
    for i in 0..m {
        dp[(1 << i) * m + i] = instance.d(s, others[i]);
    }
    for mask in 1..=full {
        let size = mask.count_ones() as usize + 1;
        for last in 0..m {
            let cur = dp[mask * m + last];
            if !cur.is_finite() {
                continue;
            }
            if cur < best[size - 1] {
                best[size - 1] = cur;
            }
            for next in 0..m {
                if mask & (1 << next) == 0 {
                    let t = cur + instance.d(others[last], others[next]);
                    let slot = &mut dp[(mask | (1 << next)) * m + next];
                    if t < *slot {
                        *slot = t;
                    }
                }
            }
        }
    }
    // "at least k": suffix minimum
    for k in (0..n - 1).rev() {
        best[k] = best[k].min(best[k + 1]);
    }
    Ok(best)
}

pub fn exact_k_stroll(instance: &Instance, k: usize) -> Result<f64> {
    let n = instance.n();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    Ok(k_stroll_lengths(instance)?[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{norm, visit_times};
    use approx::assert_relative_eq;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 0.01;

    fn figure1() -> Instance {
        Instance::line(0, vec![0.0, -1.0 - EPS, 1.0, 2.0]).unwrap()
    }

    fn random_euclidean(n: usize, rng: &mut ChaCha8Rng) -> Instance {
        let pts = (0..n)
            .map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
            .collect();
        Instance::euclidean(rng.random_range(0..n), pts).unwrap()
    }

    #[test]
    fn figure1_optima() {
        let inst = figure1();
        let (r, v) = brute_force_opt(&inst, Objective::Lp(2.0)).unwrap();
        assert_eq!(r.order(), &[0, 1, 2, 3]);
        let expected = (0.0f64 + (1.0 + EPS).powi(2) + (3.0 + 2.0 * EPS).powi(2)
            + (4.0 + 2.0 * EPS).powi(2))
        .sqrt();
        assert_relative_eq!(v, expected, max_relative = 1e-9);
        let (r, v) = brute_force_opt(&inst, Objective::Lp(1.0)).unwrap();
        assert_eq!(r.order(), &[0, 2, 3, 1]);
        assert_relative_eq!(v, 8.0 + EPS, max_relative = 1e-9);
    }

    #[test]
    fn two_vertices() {
        let inst = Instance::line(1, vec![4.0, 1.0]).unwrap();
        for obj in [Objective::Lp(1.0), Objective::LInf, Objective::TopK(2)] {
            let (r, v) = brute_force_opt(&inst, obj).unwrap();
            assert_eq!(r.order(), &[1, 0]);
            assert_eq!(v, 3.0);
        }
    }

    #[test]
    fn guards() {
        let inst = Instance::line(0, (0..12).map(f64::from).collect()).unwrap();
        assert!(matches!(
            brute_force_opt(&inst, Objective::Lp(1.0)),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            pareto_dp_opt(&figure1(), Objective::LInf),
            Err(Error::UnsupportedObjective(_))
        ));
        assert!(matches!(
            exact_k_stroll(&figure1(), 5),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn pareto_small_cases() {
        let one = Instance::line(0, vec![3.0]).unwrap();
        assert_eq!(pareto_dp_opt(&one, Objective::Lp(2.0)).unwrap().1, 0.0);
        let path = Instance::line(0, vec![0.0, 1.0, 2.0]).unwrap();
        let (r, v) = pareto_dp_opt(&path, Objective::Lp(1.0)).unwrap();
        assert_eq!(r.order(), &[0, 1, 2]);
        assert_relative_eq!(v, 3.0);
    }

    #[test]
    fn pareto_matches_brute_force_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let inst = random_euclidean(7, &mut rng);
            for p in [1.0, 2.0, 3.0] {
                let (_, bv) = brute_force_opt(&inst, Objective::Lp(p)).unwrap();
                let (route, pv) = pareto_dp_opt(&inst, Objective::Lp(p)).unwrap();
                assert_relative_eq!(bv, pv, max_relative = 1e-9);
                let t = visit_times(&inst, &route).unwrap();
                assert_relative_eq!(norm(&t, Objective::Lp(p)).unwrap(), pv, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pruning_does_not_change_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let inst = random_euclidean(6, &mut rng);
            for obj in [Objective::Lp(1.5), Objective::TopK(3)] {
                let (_, a) = pareto_search(&inst, obj, true).unwrap();
                let (_, b) = pareto_search(&inst, obj, false).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    /// Independent k-stroll oracle: permutations of every k-subset.
    fn k_stroll_by_enumeration(inst: &Instance, k: usize) -> f64 {
        let s = inst.start();
        let others: Vec<usize> = (0..inst.n()).filter(|&v| v != s).collect();
        let mut best = f64::INFINITY;
        for perm in others.iter().copied().permutations(k - 1) {
            let mut len = 0.0;
            let mut at = s;
            for v in perm {
                len += inst.d(at, v);
                at = v;
            }
            best = best.min(len);
        }
        best
    }

    #[test]
    fn k_stroll_examples() {
        let line = Instance::line(0, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(exact_k_stroll(&line, 1).unwrap(), 0.0);
        assert_eq!(exact_k_stroll(&line, 3).unwrap(), 2.0);
        assert_relative_eq!(exact_k_stroll(&figure1(), 3).unwrap(), 2.0);
    }

    #[test]
    fn k_stroll_matches_enumeration_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..40 {
            let inst = random_euclidean(7, &mut rng);
            let table = k_stroll_lengths(&inst).unwrap();
            for k in 1..=7 {
                assert_relative_eq!(
                    table[k - 1],
                    k_stroll_by_enumeration(&inst, k),
                    max_relative = 1e-12
                );
            }
            assert!(table.windows(2).all(|w| w[0] <= w[1]));
            let (_, linf) = brute_force_opt(&inst, Objective::LInf).unwrap();
            assert_relative_eq!(table[6], linf, max_relative = 1e-12);
        }
    }
}
