//! Routing by partial covering with geometrically growing budgets.
//!
//! Sub-tour `i` is a depth-first traversal of the largest good k-tree whose
//! weight fits in `b · c^i`; sub-tours are concatenated and repeated visits
//! short-cut. With `c = 2` and `b` the smallest positive distance this is the
//! all-norm 8-approximation. With `c ≈ 2.54`, `b` drawn log-uniformly from
//! one period and each sub-tour reversed by a fair coin, it is the
//! traveling-firefighter (L2) approximation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ktree::{GoodKTree, TreeMethod, TreeSweep};
use crate::metrics::Instance;
use crate::objectives::{lp_norm, visit_times_unchecked, Route, VisitTimes};

/// Growth ratio that minimizes the firefighter expectation constant.
pub const TFP_RATIO: f64 = 2.54;
pub const ALLNORM_RATIO: f64 = 2.0;
const MAX_SUBTOURS: usize = 10_000;

/// Maps a length budget to a tree containing the start of weight at most the budget.
pub trait TreeProvider {
    fn tree_within(&self, budget: f64) -> &GoodKTree;
}

impl TreeProvider for TreeSweep {
    /// Largest-cardinality tree of the sweep whose weight fits the budget.
    fn tree_within(&self, budget: f64) -> &GoodKTree {
        self.trees()
            .iter()
            .rev()
            .find(|t| t.weight <= budget)
            .unwrap_or(&self.trees()[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Subtour {
    pub budget: f64,
    pub tree_k: usize,
    pub tree_weight: f64,
    pub traversal: Vec<usize>,
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverSchedule {
    pub b: f64,
    pub c: f64,
    pub subtours: Vec<Subtour>,
}

/// Depth-first preorder of `tree` from `start`; children ascending, or
/// descending when `reversed` (the preorder of the reversed Euler tour).
pub fn dfs_traversal(tree: &GoodKTree, start: usize, reversed: bool) -> Vec<usize> {
    let mut children: Vec<(usize, usize)> = tree
        .edges
        .iter()
        .flat_map(|&(u, v, _)| [(u, v), (v, u)])
        .collect();
    children.sort_unstable();
    let neighbours = |x: usize| {
        let lo = children.partition_point(|&(a, _)| a < x);
        let hi = children.partition_point(|&(a, _)| a <= x);
        children[lo..hi].iter().map(|&(_, b)| b)
    };

    let mut order = Vec::with_capacity(tree.k);
    let mut stack = vec![(start, usize::MAX)];
    while let Some((x, parent)) = stack.pop() {
        order.push(x);
        let next: Vec<usize> = neighbours(x).filter(|&y| y != parent).collect();
        // Stack pops last-in first, so push in the opposite of visiting order.
        if reversed {
            stack.extend(next.into_iter().map(|y| (y, x)));
        } else {
            stack.extend(next.into_iter().rev().map(|y| (y, x)));
        }
    }
    order
}

/// Length of the open walk through `sequence`.
pub fn walk_length(instance: &Instance, sequence: &[usize]) -> f64 {
    sequence.windows(2).map(|w| instance.d(w[0], w[1])).sum()
}

/// Geometric covering with initial budget `b > 0` and ratio `c > 1`.
/// `reverse(i)` decides whether sub-tour `i` is traversed in reverse.
///
/// Vertices at distance zero from the start are emitted first.
pub fn geometric_cover(
    instance: &Instance,
    b: f64,
    c: f64,
    trees: &impl TreeProvider,
    mut reverse: impl FnMut(usize) -> bool,
) -> Result<(Route, CoverSchedule)> {
    if !(b > 0.0 && b.is_finite()) || !(c > 1.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cover needs b > 0 and c > 1, got b = {b}, c = {c}"
        )));
    }
    let n = instance.n();
    let s = instance.start();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for v in instance.zero_distance_class() {
        seen[v] = true;
        order.push(v);
    }
    let mut subtours = Vec::new();
    let mut i = 0;
    while order.len() < n {
        if i >= MAX_SUBTOURS {
            return Err(Error::InvalidParameter(format!(
                "cover did not finish within {MAX_SUBTOURS} sub-tours"
            )));
        }
        let budget = b * c.powi(i as i32);
        let tree = trees.tree_within(budget);
        if tree.weight > budget {
            return Err(Error::BudgetViolated {
                budget,
                weight: tree.weight,
            });
        }
        let reversed = reverse(i);
        let traversal = dfs_traversal(tree, s, reversed);
        for &v in &traversal {
            if !std::mem::replace(&mut seen[v], true) {
                order.push(v);
            }
        }
        subtours.push(Subtour {
            budget,
            tree_k: tree.k,
            tree_weight: tree.weight,
            traversal,
            reversed,
        });
        i += 1;
    }
    Ok((Route::from_order(order), CoverSchedule { b, c, subtours }))
}

/// First-visit times along the covering loop itself: each sub-tour walks its
/// traversal from the start and then returns to the start. The short-cut
/// route never visits a vertex later than this walk does.
pub fn loop_visit_times(instance: &Instance, schedule: &CoverSchedule) -> VisitTimes {
    let s = instance.start();
    let mut first = vec![f64::INFINITY; instance.n()];
    for v in instance.zero_distance_class() {
        first[v] = 0.0;
    }
    let mut clock = 0.0;
    for sub in &schedule.subtours {
        let mut at = s;
        for &v in &sub.traversal {
            clock += instance.d(at, v);
            at = v;
            first[v] = first[v].min(clock);
        }
        clock += instance.d(at, s);
    }
    VisitTimes::from_values(first)
}

/// All-norm route using a precomputed tree sweep: `b` is the smallest positive
/// distance, `c = 2`, no reversal.
pub fn allnorm_approx_with(instance: &Instance, trees: &TreeSweep) -> Result<(Route, CoverSchedule)> {
    let Some(b) = instance.min_positive_distance() else {
        return Ok((
            Route::identity(instance),
            CoverSchedule {
                b: 0.0,
                c: ALLNORM_RATIO,
                subtours: Vec::new(),
            },
        ));
    };
    geometric_cover(instance, b, ALLNORM_RATIO, trees, |_| false)
}

pub fn allnorm_approx(instance: &Instance) -> Result<Route> {
    let trees = TreeSweep::build(instance, TreeMethod::Auto)?;
    Ok(allnorm_approx_with(instance, &trees)?.0)
}

/// One draw of the randomized firefighter cover: `b = b0 · c^U` with `U`
/// uniform on [0, 1) and `b0` the smallest positive distance, each sub-tour
/// reversed with probability one half.
pub fn tfp_approx_with<R: Rng + ?Sized>(
    instance: &Instance,
    trees: &TreeSweep,
    rng: &mut R,
) -> Result<Route> {
    let Some(unit) = instance.min_positive_distance() else {
        return Ok(Route::identity(instance));
    };
    let u: f64 = rng.random();
    let b = unit * TFP_RATIO.powf(u);
    Ok(geometric_cover(instance, b, TFP_RATIO, trees, |_| rng.random_bool(0.5))?.0)
}

pub fn tfp_approx(instance: &Instance, seed: u64) -> Result<Route> {
    let trees = TreeSweep::build(instance, TreeMethod::Auto)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tfp_approx_with(instance, &trees, &mut rng)
}

/// Deterministic reversal policies tried by the derandomized cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReversalPattern {
    Forward,
    Reversed,
    AlternateEven,
    AlternateOdd,
}

impl ReversalPattern {
    pub const ALL: [ReversalPattern; 4] = [
        ReversalPattern::Forward,
        ReversalPattern::Reversed,
        ReversalPattern::AlternateEven,
        ReversalPattern::AlternateOdd,
    ];

    pub fn reverses(self, i: usize) -> bool {
        match self {
            ReversalPattern::Forward => false,
            ReversalPattern::Reversed => true,
            ReversalPattern::AlternateEven => i % 2 == 1,
            ReversalPattern::AlternateOdd => i % 2 == 0,
        }
    }
}

/// Base-2 radical inverse of `g`; the first `2^m` values are exactly `{j / 2^m}`.
pub fn van_der_corput(mut g: u64) -> f64 {
    let mut inv = 0.0;
    let mut digit = 0.5;
    while g > 0 {
        if g & 1 == 1 {
            inv += digit;
        }
        g >>= 1;
        digit *= 0.5;
    }
    inv
}

/// Exponents `u` with `b = b0 · c^u` evaluated for a grid of `grid_size`
/// points. The sets are nested in `grid_size` and equal the uniform
/// geometric grid whenever `grid_size` is a power of two.
pub fn derandomization_grid(grid_size: usize) -> Vec<f64> {
    (0..grid_size as u64).map(van_der_corput).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerandomizedChoice {
    pub route: Route,
    pub l2: f64,
    pub exponent: f64,
    pub pattern: ReversalPattern,
}

/// Best route by L2 norm over the budget grid and the reversal patterns.
pub fn tfp_derandomized_with(
    instance: &Instance,
    trees: &TreeSweep,
    grid_size: usize,
) -> Result<DerandomizedChoice> {
    if grid_size == 0 {
        return Err(Error::InvalidParameter("grid_size must be >= 1".into()));
    }
    let Some(unit) = instance.min_positive_distance() else {
        return Ok(DerandomizedChoice {
            route: Route::identity(instance),
            l2: 0.0,
            exponent: 0.0,
            pattern: ReversalPattern::Forward,
        });
    };
    let candidates: Vec<(f64, ReversalPattern)> = derandomization_grid(grid_size)
        .into_iter()
        .flat_map(|u| ReversalPattern::ALL.map(|p| (u, p)))
        .collect();
    let evaluated = candidates
        .par_iter()
        .map(|&(u, pattern)| {
            let b = unit * TFP_RATIO.powf(u);
            let (route, _) =
                geometric_cover(instance, b, TFP_RATIO, trees, |i| pattern.reverses(i))?;
            let l2 = lp_norm(&visit_times_unchecked(instance, route.order()).sorted, 2.0);
            Ok(DerandomizedChoice {
                route,
                l2,
                exponent: u,
                pattern,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // First minimum in candidate order keeps the choice deterministic.
    Ok(evaluated
        .into_iter()
        .reduce(|best, c| if c.l2 < best.l2 { c } else { best })
        .expect("grid_size >= 1"))
}

pub fn tfp_derandomized(instance: &Instance, grid_size: usize) -> Result<Route> {
    let trees = TreeSweep::build(instance, TreeMethod::Auto)?;
    Ok(tfp_derandomized_with(instance, &trees, grid_size)?.route)
}

/// Expectation constant `2c²(c+1) / ((c−1) ln c)` bounding `E‖T‖₂² / ‖T*‖₂²`.
pub fn tfp_constant(c: f64) -> Result<f64> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must exceed 1, got {c}")));
    }
    Ok(2.0 * c * c * (c + 1.0) / ((c - 1.0) * c.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{brute_force_opt, k_stroll_lengths};
    use crate::ktree::Certificate;
    use crate::objectives::{norm, visit_times, Objective};
    use approx::assert_relative_eq;

    fn tree(k: usize, vertices: Vec<usize>, edges: Vec<(usize, usize, f64)>) -> GoodKTree {
        let weight = edges.iter().map(|e| e.2).sum();
        GoodKTree {
            k,
            vertices,
            edges,
            weight,
            certificate: Certificate::Exact,
        }
    }

    #[test]
    fn dfs_child_order() {
        let star = tree(3, vec![0, 1, 2], vec![(0, 1, 1.0), (0, 2, 1.0)]);
        assert_eq!(dfs_traversal(&star, 0, false), vec![0, 1, 2]);
        assert_eq!(dfs_traversal(&star, 0, true), vec![0, 2, 1]);
    }

    #[test]
    fn dfs_path_walk() {
        let inst = Instance::line(0, vec![0.0, 1.0, 3.0]).unwrap();
        let path = tree(3, vec![0, 1, 2], vec![(0, 1, 1.0), (1, 2, 2.0)]);
        let seq = dfs_traversal(&path, 0, false);
        assert_eq!(seq, vec![0, 1, 2]);
        let walk = walk_length(&inst, &seq);
        assert_eq!(walk, 3.0);
        assert!(walk <= 2.0 * path.weight);
    }

    #[test]
    fn single_vertex_cover() {
        let inst = Instance::line(0, vec![0.0, 1.0]).unwrap();
        let sweep = TreeSweep::build(&inst, TreeMethod::Exact).unwrap();
        let (route, sched) = geometric_cover(&inst, 1.0, 2.0, &sweep, |_| false).unwrap();
        assert_eq!(route.order(), &[0, 1]);
        assert_eq!(sched.subtours.len(), 1);
    }

    #[test]
    fn budget_violation_is_reported() {
        struct Liar(GoodKTree);
        impl TreeProvider for Liar {
            fn tree_within(&self, _budget: f64) -> &GoodKTree {
                &self.0
            }
        }
        let inst = Instance::line(0, vec![0.0, 5.0]).unwrap();
        let liar = Liar(tree(2, vec![0, 1], vec![(0, 1, 5.0)]));
        let r = geometric_cover(&inst, 1.0, 2.0, &liar, |_| false);
        assert!(matches!(r, Err(Error::BudgetViolated { .. })));
    }

    #[test]
    fn zero_distance_vertices_first() {
        let inst = Instance::line(1, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let route = allnorm_approx(&inst).unwrap();
        assert_eq!(&route.order()[..2], &[1, 2]);
        route.validate(&inst).unwrap();
        let inst = Instance::line(2, vec![0.0, 5.0, 0.0]).unwrap();
        assert_eq!(allnorm_approx(&inst).unwrap().order(), &[2, 0, 1]);
    }

    #[test]
    fn all_zero_metric_gives_identity() {
        let inst = Instance::line(2, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(allnorm_approx(&inst).unwrap().order(), &[2, 0, 1]);
    }

    #[test]
    fn two_vertices_optimal() {
        let inst = Instance::euclidean(0, vec![[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(allnorm_approx(&inst).unwrap().order(), &[0, 1]);
        assert_eq!(tfp_approx(&inst, 9).unwrap().order(), &[0, 1]);
        assert_eq!(tfp_derandomized(&inst, 8).unwrap().order(), &[0, 1]);
    }

    #[test]
    fn figure1_within_eight() {
        let inst = Instance::line(0, vec![0.0, -1.01, 1.0, 2.0]).unwrap();
        let route = allnorm_approx(&inst).unwrap();
        let t = visit_times(&inst, &route).unwrap();
        for obj in [Objective::Lp(1.0), Objective::Lp(2.0), Objective::LInf] {
            let (_, opt) = brute_force_opt(&inst, obj).unwrap();
            assert!(norm(&t, obj).unwrap() <= 8.0 * opt);
        }
    }

    #[test]
    fn visit_time_bounded_by_budget_sum() {
        // k-th visit time <= sum_{j <= i+1} 2 b c^j where b c^i >= k-stroll.
        let inst = Instance::euclidean(
            0,
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [5.0, 5.0], [-2.0, 1.0], [4.0, -1.0]],
        )
        .unwrap();
        let sweep = TreeSweep::build(&inst, TreeMethod::Exact).unwrap();
        let (route, sched) = allnorm_approx_with(&inst, &sweep).unwrap();
        let t = visit_times(&inst, &route).unwrap();
        let strolls = k_stroll_lengths(&inst).unwrap();
        for k in 2..=inst.n() {
            let i = (0..).find(|&i| sched.b * 2f64.powi(i) >= strolls[k - 1]).unwrap();
            let bound: f64 = (0..=i + 1).map(|j| 2.0 * sched.b * 2f64.powi(j)).sum();
            assert!(t.sorted[k - 1] <= bound + 1e-9);
        }
    }

    #[test]
    fn loop_walk_on_powers_of_two() {
        // vertex 2^i is first reached at 3 * 2^i - 2 on the loop
        let mut coords = vec![0.0];
        coords.extend((0..6).map(|i| f64::from(1 << i)));
        let inst = Instance::line(0, coords).unwrap();
        let sweep = TreeSweep::build(&inst, TreeMethod::Exact).unwrap();
        let (route, sched) = allnorm_approx_with(&inst, &sweep).unwrap();
        let walk = loop_visit_times(&inst, &sched);
        for i in 0..6 {
            assert_eq!(walk.by_vertex[i + 1], 3.0 * f64::from(1 << i) - 2.0);
        }
        let t = visit_times(&inst, &route).unwrap();
        assert!(t.sorted.iter().zip(&walk.sorted).all(|(a, b)| a <= b));
    }

    #[test]
    fn tfp_is_deterministic_per_seed() {
        let inst = Instance::euclidean(
            0,
            vec![[0.0, 0.0], [1.0, 2.0], [3.0, 1.0], [-2.0, -2.0], [4.0, 4.0], [0.5, -3.0]],
        )
        .unwrap();
        assert_eq!(tfp_approx(&inst, 42).unwrap(), tfp_approx(&inst, 42).unwrap());
    }

    #[test]
    fn derandomized_grid_is_nested_and_improves() {
        let inst = Instance::euclidean(
            2,
            vec![[0.0, 0.0], [1.0, 2.0], [3.0, 1.0], [-2.0, -2.0], [4.0, 4.0], [0.5, -3.0], [2.0, 2.5]],
        )
        .unwrap();
        let sweep = TreeSweep::build(&inst, TreeMethod::Exact).unwrap();
        let mut prev = f64::INFINITY;
        for g in 1..=20 {
            let pick = tfp_derandomized_with(&inst, &sweep, g).unwrap();
            assert!(pick.l2 <= prev);
            prev = pick.l2;
        }
        assert_eq!(derandomization_grid(4), vec![0.0, 0.5, 0.25, 0.75]);
        let g64 = derandomization_grid(64);
        let mut sorted = g64.clone();
        sorted.sort_by(f64::total_cmp);
        for (j, u) in sorted.iter().enumerate() {
            assert_eq!(*u, j as f64 / 64.0);
        }
    }

    #[test]
    fn grid_of_one_is_the_unit_budget_cover() {
        let inst = Instance::euclidean(
            0,
            vec![[0.0, 0.0], [1.0, 2.0], [3.0, 1.0], [-2.0, -2.0], [4.0, 4.0]],
        )
        .unwrap();
        let sweep = TreeSweep::build(&inst, TreeMethod::Exact).unwrap();
        let pick = tfp_derandomized_with(&inst, &sweep, 1).unwrap();
        assert_eq!(pick.exponent, 0.0);
        let b = inst.min_positive_distance().unwrap();
        let best = ReversalPattern::ALL
            .iter()
            .map(|p| {
                let (r, _) = geometric_cover(&inst, b, TFP_RATIO, &sweep, |i| p.reverses(i)).unwrap();
                norm(&visit_times(&inst, &r).unwrap(), Objective::Lp(2.0)).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(pick.l2, best);
    }

    #[test]
    fn tfp_constant_values() {
        let f = tfp_constant(2.54).unwrap();
        assert!(f <= 31.82);
        assert!(f.sqrt() <= 5.641);
        assert!(tfp_constant(2.0).unwrap() > f);
        assert!(tfp_constant(1.0).is_err());
    }

    #[test]
    fn tfp_constant_has_unique_interior_minimum() {
        let grid: Vec<f64> = (0..=350).map(|i| 1.5 + 0.01 * f64::from(i)).collect();
        let values: Vec<f64> = grid.iter().map(|&c| tfp_constant(c).unwrap()).collect();
        let (argmin, _) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((grid[argmin] - 2.54).abs() < 0.02, "minimizer at {}", grid[argmin]);
        assert!(values[..argmin].windows(2).all(|w| w[0] > w[1]));
        assert!(values[argmin..].windows(2).all(|w| w[0] < w[1]));
        // discrete convexity
        assert!(values.windows(3).all(|w| w[0] + w[2] >= 2.0 * w[1]));
    }
}
