//! Good k-trees: trees on k vertices containing the start whose weight is at
//! most the shortest k-stroll from the start.
//!
//! Two constructions are provided. [`good_k_tree_exact`] returns the
//! minimum-weight k-vertex tree through the start, which never weighs more
//! than the optimal k-stroll because the stroll's edges span its k vertices.
//! [`good_k_tree_pd`] searches the uniform penalty of a Goemans–Williamson
//! prize-collecting Steiner tree growth until the tree holds k vertices; it
//! scales further and self-checks against the exact stroll length when the
//! instance is small enough.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exact_k_stroll, K_STROLL_MAX_N};
use crate::metrics::Instance;

pub const EXACT_TREE_MAX_N: usize = 15;
/// Largest instance for which primal-dual trees are checked against the exact stroll.
pub const PD_CHECK_MAX_N: usize = 12;
const MAX_BISECTIONS: usize = 200;
const LAMBDA_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrollCheck {
    Unchecked,
    Passed { stroll: f64 },
    Failed { stroll: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Exact,
    PrimalDual {
        lambda: f64,
        dual_bound: f64,
        check: StrollCheck,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodKTree {
    pub k: usize,
    /// Ascending, always contains the start.
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize, f64)>,
    pub weight: f64,
    pub certificate: Certificate,
}

impl GoodKTree {
    fn singleton(start: usize) -> Self {
        Self {
            k: 1,
            vertices: vec![start],
            edges: Vec::new(),
            weight: 0.0,
            certificate: Certificate::Exact,
        }
    }

    /// Whether the edge set is a spanning tree of `vertices` containing `start`.
    pub fn is_valid(&self, start: usize) -> bool {
        let k = self.vertices.len();
        if k != self.k || self.edges.len() + 1 != k || self.vertices.binary_search(&start).is_err()
        {
            return false;
        }
        let pos = |v: usize| self.vertices.binary_search(&v).ok();
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v, _) in &self.edges {
            let (Some(a), Some(b)) = (pos(u), pos(v)) else {
                return false;
            };
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    pub fn is_certified(&self) -> bool {
        !matches!(
            self.certificate,
            Certificate::PrimalDual {
                check: StrollCheck::Failed { .. },
                ..
            }
        )
    }
}

/// Prim's algorithm on the induced complete graph; ties go to the smaller index.
fn mst(instance: &Instance, vertices: &[usize]) -> (Vec<(usize, usize, f64)>, f64) {
    let k = vertices.len();
    if k <= 1 {
        return (Vec::new(), 0.0);
    }
    let mut in_tree = vec![false; k];
    let mut best = vec![(f64::INFINITY, 0usize); k];
    in_tree[0] = true;
    for i in 1..k {
        best[i] = (instance.d(vertices[0], vertices[i]), 0);
    }
    let mut edges = Vec::with_capacity(k - 1);
    let mut weight = 0.0;
    for _ in 1..k {
        let (next, _) = (0..k)
            .filter(|&i| !in_tree[i])
            .map(|i| (i, best[i].0))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        in_tree[next] = true;
        let (w, from) = best[next];
        let (a, b) = (vertices[from], vertices[next]);
        edges.push((a.min(b), a.max(b), w));
        weight += w;
        for i in 0..k {
            if !in_tree[i] {
                let d = instance.d(vertices[next], vertices[i]);
                if d < best[i].0 {
                    best[i] = (d, next);
                }
            }
        }
    }
    (edges, weight)
}

fn mst_weight(instance: &Instance, vertices: &[usize]) -> f64 {
    mst(instance, vertices).1
}

fn check_k(instance: &Instance, k: usize) -> Result<()> {
    let n = instance.n();
    if k == 0 || k > n {
        Err(Error::KOutOfRange { k, n })
    } else {
        Ok(())
    }
}

/// Minimum-weight tree on k vertices containing the start, by enumerating
/// k-subsets and taking each subset's minimum spanning tree.
pub fn good_k_tree_exact(instance: &Instance, k: usize) -> Result<GoodKTree> {
    check_k(instance, k)?;
    let n = instance.n();
    if n > EXACT_TREE_MAX_N {
        return Err(Error::TooLarge {
            op: "good_k_tree_exact",
            n,
            max: EXACT_TREE_MAX_N,
        });
    }
    let s = instance.start();
    if k == 1 {
        return Ok(GoodKTree::singleton(s));
    }
    let others: Vec<usize> = (0..n).filter(|&v| v != s).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut scratch = Vec::with_capacity(k);
    for combo in others.iter().copied().combinations(k - 1) {
        scratch.clear();
        scratch.push(s);
        scratch.extend_from_slice(&combo);
        let w = mst_weight(instance, &scratch);
        if best.as_ref().is_none_or(|(bw, _)| crate::tol::improves(w, *bw)) {
            best = Some((w, scratch.clone()));
        }
    }
    let (_, mut vertices) = best.expect("at least one subset");
    let (edges, weight) = mst(instance, &vertices);
    vertices.sort_unstable();
    Ok(GoodKTree {
        k,
        vertices,
        edges,
        weight,
        certificate: Certificate::Exact,
    })
}

/// Result of one primal-dual growth at a fixed uniform penalty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PcstSolution {
    pub lambda: f64,
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize, f64)>,
    pub weight: f64,
    /// Total dual grown; a lower bound on the rooted prize-collecting optimum.
    pub dual_bound: f64,
}

struct Component {
    members: Vec<usize>,
    active: bool,
    /// Dual grown by this set and everything merged into it.
    charge: f64,
}

/// Rooted prize-collecting Steiner tree by Goemans–Williamson growth with a
/// penalty of `lambda` on every non-start vertex, followed by pruning of
/// pendant inactive sets.
pub fn pcst_primal_dual(instance: &Instance, lambda: f64) -> Result<PcstSolution> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    let n = instance.n();
    let s = instance.start();
    let mut comp_of: Vec<usize> = (0..n).collect();
    let mut comps: Vec<Option<Component>> = (0..n)
        .map(|v| {
            Some(Component {
                members: vec![v],
                active: v != s && lambda > 0.0,
                charge: 0.0,
            })
        })
        .collect();
    let mut dead: Vec<Vec<usize>> = (0..n)
        .filter(|&v| v != s && lambda == 0.0)
        .map(|v| vec![v])
        .collect();
    let mut load = vec![0.0; n];
    let mut forest: Vec<(usize, usize)> = Vec::new();
    let mut dual = 0.0;

    enum Event {
        Edge(usize, usize),
        Deactivate(usize),
    }

    loop {
        let active: Vec<usize> = comps
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().filter(|c| c.active).map(|_| i))
            .collect();
        if active.is_empty() {
            break;
        }
        let is_active = |c: usize| comps[c].as_ref().is_some_and(|c| c.active);

        let mut step = f64::INFINITY;
        let mut event = None;
        for u in 0..n {
            for v in u + 1..n {
                let (cu, cv) = (comp_of[u], comp_of[v]);
                if cu == cv {
                    continue;
                }
                let rate = is_active(cu) as u8 + is_active(cv) as u8;
                if rate == 0 {
                    continue;
                }
                let slack = (instance.d(u, v) - load[u] - load[v]).max(0.0);
                let t = slack / f64::from(rate);
                if t < step {
                    step = t;
                    event = Some(Event::Edge(u, v));
                }
            }
        }
        for &c in &active {
            let comp = comps[c].as_ref().unwrap();
            let t = (lambda * comp.members.len() as f64 - comp.charge).max(0.0);
            // Edge events win ties.
            if t < step {
                step = t;
                event = Some(Event::Deactivate(c));
            }
        }

        for &c in &active {
            let comp = comps[c].as_mut().unwrap();
            comp.charge += step;
            for &v in &comp.members {
                load[v] += step;
            }
        }
        dual += step * active.len() as f64;

        match event.expect("an active component always has a pending event") {
            Event::Edge(u, v) => {
                forest.push((u, v));
                let (keep, gone) = (comp_of[u], comp_of[v]);
                let absorbed = comps[gone].take().unwrap();
                for &x in &absorbed.members {
                    comp_of[x] = keep;
                }
                let merged = comps[keep].as_mut().unwrap();
                merged.members.extend(absorbed.members);
                merged.charge += absorbed.charge;
                let has_root = merged.members.contains(&s);
                let slack = lambda * merged.members.len() as f64 - merged.charge;
                merged.active = !has_root && slack > 0.0;
                if !has_root && !merged.active {
                    dead.push(merged.members.clone());
                }
            }
            Event::Deactivate(c) => {
                let comp = comps[c].as_mut().unwrap();
                comp.active = false;
                dead.push(comp.members.clone());
            }
        }
    }

    let root = comp_of[s];
    let mut in_tree = vec![false; n];
    for &v in &comps[root].as_ref().unwrap().members {
        in_tree[v] = true;
    }
    let mut edges: Vec<(usize, usize)> = forest
        .into_iter()
        .filter(|&(u, v)| in_tree[u] && in_tree[v])
        .collect();

    for set in dead.iter().rev() {
        let mut in_set = vec![false; n];
        let mut touches = false;
        for &v in set {
            in_set[v] = true;
            touches |= in_tree[v];
        }
        if !touches || in_set[s] {
            continue;
        }
        let crossing = edges
            .iter()
            .filter(|&&(u, v)| in_set[u] != in_set[v] && in_tree[u] && in_tree[v])
            .count();
        if crossing == 1 {
            for &v in set {
                in_tree[v] = false;
            }
            edges.retain(|&(u, v)| in_tree[u] && in_tree[v]);
        }
    }

    let vertices: Vec<usize> = (0..n).filter(|&v| in_tree[v]).collect();
    let edges: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .map(|(u, v)| (u.min(v), u.max(v), instance.d(u, v)))
        .collect();
    let weight = edges.iter().map(|e| e.2).sum();
    Ok(PcstSolution {
        lambda,
        vertices,
        edges,
        weight,
        dual_bound: dual,
    })
}

/// Removes leaves farthest from the start (tree distance; ties to the smaller
/// index) until `k` vertices remain.
fn prune_to_size(
    start: usize,
    mut vertices: Vec<usize>,
    mut edges: Vec<(usize, usize, f64)>,
    k: usize,
) -> Vec<usize> {
    while vertices.len() > k {
        let mut depth = std::collections::HashMap::from([(start, 0.0)]);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            let dx = depth[&x];
            for &(u, v, w) in &edges {
                let y = if u == x { v } else if v == x { u } else { continue };
                if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(y) {
                    e.insert(dx + w);
                    stack.push(y);
                }
            }
        }
        let degree = |x: usize| edges.iter().filter(|&&(u, v, _)| u == x || v == x).count();
        let leaf = vertices
            .iter()
            .copied()
            .filter(|&v| v != start && degree(v) == 1)
            .max_by(|&a, &b| depth[&a].total_cmp(&depth[&b]).then(b.cmp(&a)))
            .expect("a tree with more than one vertex has a non-root leaf");
        vertices.retain(|&v| v != leaf);
        edges.retain(|&(u, v, _)| u != leaf && v != leaf);
    }
    vertices
}

/// Primal-dual good k-tree: bisects the uniform penalty until the grown tree
/// holds at least k vertices, prunes to exactly k, and respans the chosen
/// vertices by their minimum spanning tree.
///
/// On instances with at most [`PD_CHECK_MAX_N`] vertices the weight is
/// compared with the exact k-stroll and the outcome recorded in the
/// certificate; a failed check is reported there, never hidden.
pub fn good_k_tree_pd(instance: &Instance, k: usize) -> Result<GoodKTree> {
    check_k(instance, k)?;
    let s = instance.start();
    if k == 1 {
        return Ok(GoodKTree::singleton(s));
    }
    let n = instance.n();
    let size = |lambda: f64| pcst_primal_dual(instance, lambda).map(|t| t.vertices.len());

    let mut hi = 2.0 * (instance.max_distance() * n as f64 + 1.0);
    if size(hi)? < k {
        return Err(Error::NoBracket { k, iterations: 0 });
    }
    let mut lo = 0.0;
    let mut converged = false;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= LAMBDA_REL_TOL * hi {
            converged = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        if size(mid)? >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if !converged {
        return Err(Error::NoBracket {
            k,
            iterations: MAX_BISECTIONS,
        });
    }

    let grown = pcst_primal_dual(instance, hi)?;
    let mut vertices = prune_to_size(s, grown.vertices, grown.edges, k);
    vertices.sort_unstable();
    let (edges, weight) = mst(instance, &vertices);
    let check = if n <= PD_CHECK_MAX_N.min(K_STROLL_MAX_N) {
        let stroll = exact_k_stroll(instance, k)?;
        if weight <= stroll * (1.0 + 1e-6) + 1e-12 {
            StrollCheck::Passed { stroll }
        } else {
            StrollCheck::Failed { stroll }
        }
    } else {
        StrollCheck::Unchecked
    };
    Ok(GoodKTree {
        k,
        vertices,
        edges,
        weight,
        certificate: Certificate::PrimalDual {
            lambda: hi,
            dual_bound: grown.dual_bound,
            check,
        },
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TreeMethod {
    Exact,
    PrimalDual,
    /// Exact when the instance is small enough, primal-dual otherwise (with
    /// an exact fallback if the penalty search fails and n permits).
    #[default]
    Auto,
}

/// Good k-trees for every k = 1..=n, index `k - 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeSweep {
    trees: Vec<GoodKTree>,
}

impl TreeSweep {
    pub fn build(instance: &Instance, method: TreeMethod) -> Result<Self> {
        let n = instance.n();
        let trees = (1..=n)
            .into_par_iter()
            .map(|k| match method {
                TreeMethod::Exact => good_k_tree_exact(instance, k),
                TreeMethod::PrimalDual => good_k_tree_pd(instance, k),
                TreeMethod::Auto if n <= PD_CHECK_MAX_N => good_k_tree_exact(instance, k),
                TreeMethod::Auto => match good_k_tree_pd(instance, k) {
                    Err(Error::NoBracket { .. }) if n <= EXACT_TREE_MAX_N => {
                        good_k_tree_exact(instance, k)
                    }
                    other => other,
                },
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trees })
    }

    pub fn from_trees(trees: Vec<GoodKTree>) -> Self {
        Self { trees }
    }

    pub fn trees(&self) -> &[GoodKTree] {
        &self.trees
    }

    pub fn get(&self, k: usize) -> Option<&GoodKTree> {
        self.trees.get(k.checked_sub(1)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::k_stroll_lengths;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_euclidean(n: usize, rng: &mut ChaCha8Rng) -> Instance {
        let pts = (0..n)
            .map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
            .collect();
        Instance::euclidean(0, pts).unwrap()
    }

    #[test]
    fn exact_small_cases() {
        let line = Instance::line(0, vec![0.0, 1.0, 2.0]).unwrap();
        let t1 = good_k_tree_exact(&line, 1).unwrap();
        assert_eq!(t1.weight, 0.0);
        assert!(t1.edges.is_empty());
        let t2 = good_k_tree_exact(&line, 2).unwrap();
        assert_eq!(t2.edges, vec![(0, 1, 1.0)]);
        assert_eq!(t2.weight, 1.0);
        assert!(t2.is_valid(0));
        assert!(good_k_tree_exact(&line, 4).is_err());
    }

    #[test]
    fn exact_trees_are_good() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let inst = random_euclidean(8, &mut rng);
            let strolls = k_stroll_lengths(&inst).unwrap();
            for k in 1..=8 {
                let t = good_k_tree_exact(&inst, k).unwrap();
                assert!(t.is_valid(inst.start()));
                assert!(t.weight <= strolls[k - 1] + 1e-9);
            }
        }
    }

    #[test]
    fn pcst_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let inst = random_euclidean(10, &mut rng);
        let none = pcst_primal_dual(&inst, 0.0).unwrap();
        assert_eq!(none.vertices, vec![0]);
        assert_eq!(none.weight, 0.0);
        let lambda = inst.max_distance() * 10.0 + 1.0;
        let all = pcst_primal_dual(&inst, lambda).unwrap();
        assert_eq!(all.vertices.len(), 10);
        assert_eq!(all.edges.len(), 9);
        assert!(all.dual_bound > 0.0);
        assert!(pcst_primal_dual(&inst, f64::NAN).is_err());
    }

    #[test]
    fn pcst_size_monotone_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inst = random_euclidean(10, &mut rng);
        let top = inst.max_distance() * 2.0;
        let mut prev = 0;
        for i in 0..50 {
            let lambda = top * f64::from(i) / 49.0;
            let size = pcst_primal_dual(&inst, lambda).unwrap().vertices.len();
            assert!(size >= prev, "size dropped from {prev} to {size} at lambda {lambda}");
            prev = size;
        }
    }

    #[test]
    fn pd_spanning_case_on_tree_metric() {
        let edges = vec![(0, 1, 2.0), (1, 2, 1.0), (1, 3, 4.0), (0, 4, 0.5)];
        let inst = Instance::tree(0, edges).unwrap();
        let t = good_k_tree_pd(&inst, 5).unwrap();
        assert!(t.is_valid(0));
        assert_relative_eq!(t.weight, 7.5);
        assert_eq!(good_k_tree_pd(&inst, 1).unwrap().weight, 0.0);
    }

    #[test]
    fn pd_trees_structurally_valid_and_near_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let inst = random_euclidean(10, &mut rng);
            for k in 1..=10 {
                let pd = good_k_tree_pd(&inst, k).unwrap();
                assert_eq!(pd.vertices.len(), k);
                assert!(pd.is_valid(inst.start()));
                let ex = good_k_tree_exact(&inst, k).unwrap();
                assert!(
                    pd.weight <= 2.0 * ex.weight + 1e-9,
                    "k={k}: pd {} vs exact {}",
                    pd.weight,
                    ex.weight
                );
            }
        }
    }

    #[test]
    fn sweep_weights_monotone_for_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = random_euclidean(9, &mut rng);
        let sweep = TreeSweep::build(&inst, TreeMethod::Exact).unwrap();
        assert_eq!(sweep.trees().len(), 9);
        assert!(sweep.trees().windows(2).all(|w| w[0].weight <= w[1].weight));
    }
}
