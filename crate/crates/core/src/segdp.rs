//! Segmented-TSP decision oracle and the level dynamic program that reduces
//! L_p-TSP to it.
//!
//! Budgets are `λ_i = u (1+ε)^{−j} c^i` with `c = (1+ε)^k` and `u` the
//! smallest positive distance. Level `i` extends a schedule that has visited
//! `d′` vertices with `m_1..m_k` new vertices, the r-th batch charged at
//! `3λ_{i−1} + λ_i (1+ε)^{r−k}`: the sub-tour starts once every previous
//! sub-tour has returned to the start, which takes at most `2Σλ ≤ 3λ_{i−1}`
//! when `c ≥ 3`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::Instance;
use crate::objectives::{lp_norm, visit_times_unchecked, Route};
use crate::tol;

pub const SEGMENTED_MAX_N: usize = 15;
/// Cap on DP transitions examined per level.
pub const MAX_TRANSITIONS_PER_LEVEL: u128 = 5_000_000;

/// Decision instance: visit at least `counts[i]` distinct vertices (start
/// included) by time `deadlines[i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentedSpec {
    counts: Vec<usize>,
    deadlines: Vec<f64>,
}

impl SegmentedSpec {
    pub fn new(counts: Vec<usize>, deadlines: Vec<f64>) -> Result<Self> {
        if counts.len() != deadlines.len() {
            return Err(Error::InvalidSegmentedSpec(format!(
                "{} counts but {} deadlines",
                counts.len(),
                deadlines.len()
            )));
        }
        if let Some(t) = deadlines.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidSegmentedSpec(format!("deadline {t} is not a finite nonnegative number")));
        }
        if counts.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSegmentedSpec("counts must be nondecreasing".into()));
        }
        if deadlines.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSegmentedSpec("deadlines must be nondecreasing".into()));
        }
        Ok(SegmentedSpec { counts, deadlines })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn deadlines(&self) -> &[f64] {
        &self.deadlines
    }

    fn check_size(&self, n: usize) -> Result<()> {
        match self.counts.last() {
            Some(&c) if c > n => Err(Error::InvalidSegmentedSpec(format!(
                "count {c} exceeds the {n} vertices"
            ))),
            _ => Ok(()),
        }
    }

    /// Whether `order` meets every requirement with deadlines scaled by `alpha`.
    pub fn is_satisfied_by(&self, instance: &Instance, order: &[usize], alpha: f64) -> bool {
        let times = visit_times_unchecked(instance, order).sorted;
        self.counts
            .iter()
            .zip(&self.deadlines)
            .all(|(&c, &t)| c == 0 || (c <= times.len() && tol::le(times[c - 1], alpha * t)))
    }

    fn key(&self) -> (Vec<usize>, Vec<u64>) {
        (self.counts.clone(), self.deadlines.iter().map(|t| t.to_bits()).collect())
    }
}

/// Exact decision by subset DP over (visited set, last vertex), keeping the
/// shortest feasible path per state. The witness is the feasible prefix
/// followed by the unvisited vertices in ascending order.
pub fn segmented_bruteforce(instance: &Instance, spec: &SegmentedSpec) -> Result<Option<Route>> {
    let n = instance.n();
    if n > SEGMENTED_MAX_N {
        return Err(Error::TooLarge {
            op: "segmented_bruteforce",
            n,
            max: SEGMENTED_MAX_N,
        });
    }
    spec.check_size(n)?;
    // deadline[m] bounds the arrival at the m-th distinct vertex
    let mut deadline = vec![f64::INFINITY; n + 1];
    for (&c, &t) in spec.counts.iter().zip(&spec.deadlines) {
        if c >= 1 {
            deadline[c] = deadline[c].min(t);
        }
    }
    let target = spec.counts.last().copied().unwrap_or(0).max(1);
    let s = instance.start();
    let others: Vec<usize> = (0..n).filter(|&v| v != s).collect();
    let m = others.len();
    let finish = |prefix: Vec<usize>| {
        let mut seen = vec![false; n];
        prefix.iter().for_each(|&v| seen[v] = true);
        let mut order = prefix;
        order.extend((0..n).filter(|&v| !seen[v]));
        Route::from_order(order)
    };
    if target == 1 {
        return Ok(Some(finish(vec![s])));
    }

    let states = (1usize << m) * m;
    let mut dp = vec![f64::INFINITY; states];
    let mut parent = vec![usize::MAX; states];
    for (i, &v) in others.iter().enumerate() {
        let t = instance.d(s, v);
        if tol::le(t, deadline[2]) {
            dp[(1 << i) * m + i] = t;
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for mask in 1usize..(1 << m) {
        let size = mask.count_ones() as usize + 1;
        if size > target {
            continue;
        }
        for last in 0..m {
            let state = mask * m + last;
            let cur = dp[state];
            if !cur.is_finite() {
                continue;
            }
            if size == target {
                if best.is_none_or(|(b, _)| tol::improves(cur, b)) {
                    best = Some((cur, state));
                }
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let t = cur + instance.d(others[last], others[next]);
                if !tol::le(t, deadline[size + 1]) {
                    continue;
                }
                let slot = (mask | (1 << next)) * m + next;
                if t < dp[slot] {
                    dp[slot] = t;
                    parent[slot] = state;
                }
            }
        }
    }
    Ok(best.map(|(_, mut state)| {
        let mut rev = Vec::with_capacity(target);
        while state != usize::MAX {
            rev.push(others[state % m]);
            state = parent[state];
        }
        rev.push(s);
        rev.reverse();
        finish(rev)
    }))
}

/// Segmented-TSP decision procedure with approximation factor `alpha`: when
/// the spec is feasible it returns a route meeting every deadline scaled by
/// `alpha`; `None` certifies infeasibility of the unscaled spec.
pub trait SegmentedOracle: Sync {
    fn alpha(&self) -> f64 {
        1.0
    }
    fn decide(&self, instance: &Instance, spec: &SegmentedSpec) -> Result<Option<Route>>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BruteForceOracle;

impl SegmentedOracle for BruteForceOracle {
    fn decide(&self, instance: &Instance, spec: &SegmentedSpec) -> Result<Option<Route>> {
        segmented_bruteforce(instance, spec)
    }
}

/// Exact oracle run against deadlines multiplied by `alpha`.
#[derive(Clone, Copy, Debug)]
pub struct SlowedOracle {
    pub alpha: f64,
}

impl SegmentedOracle for SlowedOracle {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn decide(&self, instance: &Instance, spec: &SegmentedSpec) -> Result<Option<Route>> {
        let slowed = SegmentedSpec {
            counts: spec.counts.clone(),
            deadlines: spec.deadlines.iter().map(|t| t * self.alpha).collect(),
        };
        segmented_bruteforce(instance, &slowed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReductionConfig {
    pub epsilon: f64,
    pub k: usize,
    /// Fixed phase offset; `None` tries every `j` in `0..k`.
    pub j: Option<usize>,
}

impl ReductionConfig {
    pub fn new(epsilon: f64, k: usize) -> Self {
        ReductionConfig { epsilon, k, j: None }
    }

    /// `k = ⌈(3p)^p (1+ε) / ε²⌉`, the size for which the level rounding costs
    /// at most a `1+ε` factor in expectation over `j`.
    pub fn k_for(p: f64, epsilon: f64) -> usize {
        ((3.0 * p).powf(p) * (1.0 + epsilon) / (epsilon * epsilon)).ceil() as usize
    }

    pub fn ratio(&self) -> f64 {
        (1.0 + self.epsilon).powi(self.k as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.ratio() < 3.0 {
            return Err(Error::InvalidParameter(format!(
                "c = (1+ε)^k = {} must be at least 3",
                self.ratio()
            )));
        }
        if let Some(j) = self.j {
            if j >= self.k {
                return Err(Error::InvalidParameter(format!("j = {j} must be below k = {}", self.k)));
            }
        }
        Ok(())
    }

    /// `λ_i` for offset `j`, scaled by `unit`.
    pub fn lambda(&self, unit: f64, j: usize, i: usize) -> f64 {
        unit * (1.0 + self.epsilon).powi((self.k * i) as i32 - j as i32)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be finite and at least 1, got {p}")))
    }
}

/// `Σ T′^p` for the waiting tour built from `route`: the vertex reached at
/// time `T ∈ (λ_{i−1}, λ_i]` is reached at `T + 3λ_{i−1}` after waiting for
/// the earlier sub-tours; vertices within `λ_0` keep their time.
pub fn waiting_tour_cost(instance: &Instance, route: &Route, p: f64, config: &ReductionConfig) -> Result<f64> {
    let Some(j) = config.j else {
        return Err(Error::InvalidParameter("waiting_tour_cost needs a fixed j".into()));
    };
    config.validate()?;
    check_p(p)?;
    let times = crate::objectives::visit_times(instance, route)?;
    let Some(unit) = instance.min_positive_distance() else {
        return Ok(0.0);
    };
    Ok(times
        .sorted
        .iter()
        .map(|&t| {
            let mut i = 0;
            while !tol::le(t, config.lambda(unit, j, i)) {
                i += 1;
            }
            let shift = if i == 0 { 0.0 } else { 3.0 * config.lambda(unit, j, i - 1) };
            (t + shift).powf(p)
        })
        .sum())
}

/// Mean of [`waiting_tour_cost`] over `j = 0..k`.
pub fn mean_waiting_tour_cost(instance: &Instance, route: &Route, p: f64, config: &ReductionConfig) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..config.k {
        total += waiting_tour_cost(instance, route, p, &ReductionConfig { j: Some(j), ..*config })?;
    }
    Ok(total / config.k as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelTrace {
    pub level: usize,
    pub lambda: f64,
    /// `(d, D[i][d])` for every finite entry.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitStep {
    pub level: usize,
    pub from: usize,
    pub splits: Vec<usize>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseTrace {
    pub j: usize,
    pub bound: f64,
    pub levels: Vec<LevelTrace>,
    pub splits: Vec<SplitStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DpTrace {
    pub p: f64,
    pub epsilon: f64,
    pub k: usize,
    pub c: f64,
    pub alpha: f64,
    pub unit: f64,
    pub oracle_calls: usize,
    pub best_j: usize,
    pub bound: f64,
    pub phases: Vec<PhaseTrace>,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub route: Route,
    /// Upper bound on the route's L_p norm.
    pub bound: f64,
    pub trace: DpTrace,
}

#[derive(Clone, Debug)]
struct Parent {
    from: usize,
    splits: Vec<usize>,
    cost: f64,
    witness: Option<Route>,
}

/// Weak compositions of `total` into `parts` parts, lexicographic.
fn compositions(total: usize, parts: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(rest: usize, buf: &mut Vec<usize>, parts: usize, visit: &mut dyn FnMut(&[usize])) {
        if buf.len() + 1 == parts {
            buf.push(rest);
            visit(buf);
            buf.pop();
            return;
        }
        for first in 0..=rest {
            buf.push(first);
            rec(rest - first, buf, parts, visit);
            buf.pop();
        }
    }
    rec(total, &mut Vec::with_capacity(parts), parts, &mut visit);
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

type SpecKey = (Vec<usize>, Vec<u64>);

struct Memo {
    answers: HashMap<SpecKey, Option<Route>>,
    witnesses: Vec<Route>,
    calls: usize,
}

impl Memo {
    /// Queries every unseen spec in parallel and checks the answers.
    fn resolve(
        &mut self,
        instance: &Instance,
        oracle: &dyn SegmentedOracle,
        specs: Vec<SegmentedSpec>,
    ) -> Result<()> {
        let alpha = oracle.alpha();
        let mut fresh: Vec<SegmentedSpec> = specs
            .into_iter()
            .filter(|s| !self.answers.contains_key(&s.key()))
            .collect();
        fresh.sort_by(|a, b| a.key().cmp(&b.key()));
        fresh.dedup_by(|a, b| a.key() == b.key());
        let answers = fresh
            .par_iter()
            .map(|spec| oracle.decide(instance, spec))
            .collect::<Result<Vec<_>>>()?;
        self.calls += fresh.len();
        let inconsistent = |spec: &SegmentedSpec, witness: &Route| Error::OracleInconsistent {
            counts: spec.counts.clone(),
            deadlines: spec.deadlines.clone(),
            witness: witness.order().to_vec(),
        };
        for (spec, answer) in fresh.iter().zip(&answers) {
            match answer {
                Some(w) => {
                    if w.validate(instance).is_err() || !spec.is_satisfied_by(instance, w.order(), alpha) {
                        return Err(inconsistent(spec, w));
                    }
                }
                None => {
                    let known = self.witnesses.iter().chain(answers.iter().flatten());
                    if let Some(w) = known.into_iter().find(|w| spec.is_satisfied_by(instance, w.order(), 1.0)) {
                        return Err(inconsistent(spec, w));
                    }
                }
            }
        }
        for (spec, answer) in fresh.into_iter().zip(answers) {
            if let Some(w) = &answer {
                self.witnesses.push(w.clone());
            }
            self.answers.insert(spec.key(), answer);
        }
        Ok(())
    }
}

struct Phase {
    trace: PhaseTrace,
    route: Route,
    power_cost: f64,
}

fn run_phase(
    instance: &Instance,
    p: f64,
    config: &ReductionConfig,
    j: usize,
    unit: f64,
    oracle: &dyn SegmentedOracle,
    memo: &mut Memo,
) -> Result<Phase> {
    let n = instance.n();
    let k = config.k;
    let one_eps = 1.0 + config.epsilon;
    let zero_class = instance.zero_distance_class();
    let z = zero_class.len();
    let horizon = (n - 1) as f64 * instance.max_distance();

    let mut prev: Vec<f64> = (0..=n).map(|d| if (1..=z).contains(&d) { 0.0 } else { f64::INFINITY }).collect();
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut parents: Vec<Vec<Option<Parent>>> = Vec::new();
    let mut levels = Vec::new();
    let mut i = 0;
    loop {
        let lambda = config.lambda(unit, j, i);
        let lambda_prev = if i == 0 { 0.0 } else { config.lambda(unit, j, i - 1) };
        let bucket: Vec<f64> = (1..=k)
            .map(|r| 3.0 * lambda_prev + lambda * one_eps.powi(r as i32 - k as i32))
            .collect();
        let sources: Vec<usize> = (0..=n).filter(|&d| prev[d].is_finite()).collect();

        let transitions: u128 = sources
            .iter()
            .map(|&d| binomial((n - d + k) as u128, k as u128))
            .sum();
        if transitions > MAX_TRANSITIONS_PER_LEVEL {
            return Err(Error::InvalidParameter(format!(
                "level {i} needs {transitions} transitions (cap {MAX_TRANSITIONS_PER_LEVEL}); lower k or n"
            )));
        }

        let mut candidates: Vec<(usize, Vec<usize>, SegmentedSpec, f64)> = Vec::new();
        for &d in &sources {
            for total in 1..=n - d {
                compositions(total, k, |m| {
                    let mut counts = Vec::with_capacity(k + 1);
                    counts.push(d);
                    let mut acc = d;
                    for &x in m {
                        acc += x;
                        counts.push(acc);
                    }
                    let mut deadlines = Vec::with_capacity(k + 1);
                    deadlines.push(lambda_prev);
                    deadlines.extend((1..=k).map(|r| lambda * one_eps.powi(r as i32 - k as i32)));
                    let cost: f64 = m.iter().zip(&bucket).map(|(&x, &b)| x as f64 * b.powf(p)).sum();
                    candidates.push((d, m.to_vec(), SegmentedSpec { counts, deadlines }, cost));
                });
            }
        }
        memo.resolve(instance, oracle, candidates.iter().map(|c| c.2.clone()).collect())?;

        let mut cur = prev.clone();
        let mut par: Vec<Option<Parent>> = (0..=n)
            .map(|d| {
                prev[d].is_finite().then(|| Parent {
                    from: d,
                    splits: vec![0; k],
                    cost: 0.0,
                    witness: None,
                })
            })
            .collect();
        for (d, splits, spec, cost) in candidates {
            let Some(witness) = &memo.answers[&spec.key()] else {
                continue;
            };
            let to = *spec.counts.last().unwrap();
            let value = prev[d] + cost;
            if tol::improves(value, cur[to]) {
                cur[to] = value;
                par[to] = Some(Parent {
                    from: d,
                    splits,
                    cost,
                    witness: Some(witness.clone()),
                });
            }
        }
        levels.push(LevelTrace {
            level: i,
            lambda,
            entries: (0..=n).filter(|&d| cur[d].is_finite()).map(|d| (d, cur[d])).collect(),
        });
        table.push(cur.clone());
        parents.push(par);
        prev = cur;
        if lambda >= horizon && prev[n].is_finite() {
            break;
        }
        i += 1;
        if i > 10_000 {
            return Err(Error::InvalidParameter("reduction did not reach a full schedule".into()));
        }
    }

    // Walk the chain back from D[L][n].
    let mut steps = Vec::new();
    let mut d = n;
    for level in (0..table.len()).rev() {
        let parent = parents[level][d].clone().expect("finite entries have parents");
        let from = parent.from;
        steps.push((level, parent));
        d = from;
    }
    steps.reverse();

    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut push = |v: usize, order: &mut Vec<usize>| {
        if !std::mem::replace(&mut seen[v], true) {
            order.push(v);
        }
    };
    for &v in &zero_class {
        push(v, &mut order);
    }
    let mut splits = Vec::new();
    for (level, parent) in steps {
        let total: usize = parent.splits.iter().sum();
        if let Some(w) = &parent.witness {
            for &v in &w.order()[..parent.from + total] {
                push(v, &mut order);
            }
        }
        if total > 0 {
            splits.push(SplitStep {
                level,
                from: parent.from,
                splits: parent.splits,
                cost: parent.cost,
            });
        }
    }
    for v in 0..n {
        push(v, &mut order);
    }
    let power_cost = prev[n];
    Ok(Phase {
        trace: PhaseTrace {
            j,
            bound: oracle.alpha() * power_cost.powf(1.0 / p),
            levels,
            splits,
        },
        route: Route::from_order(order),
        power_cost,
    })
}

/// Route and norm upper bound for L_p-TSP through segmented-TSP queries.
///
/// The bound is `α · D[L][n]^{1/p}` for the best phase `j`, where `α` is the
/// oracle's factor.
pub fn lp_via_segmented(
    instance: &Instance,
    p: f64,
    config: &ReductionConfig,
    oracle: &dyn SegmentedOracle,
) -> Result<Reduction> {
    check_p(p)?;
    config.validate()?;
    let alpha = oracle.alpha();
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("oracle factor must be at least 1, got {alpha}")));
    }
    let n = instance.n();
    let c = config.ratio();
    let Some(unit) = instance.min_positive_distance() else {
        return Ok(Reduction {
            route: Route::identity(instance),
            bound: 0.0,
            trace: DpTrace {
                p,
                epsilon: config.epsilon,
                k: config.k,
                c,
                alpha,
                unit: 0.0,
                oracle_calls: 0,
                best_j: config.j.unwrap_or(0),
                bound: 0.0,
                phases: Vec::new(),
            },
        });
    };
    if n > SEGMENTED_MAX_N {
        return Err(Error::TooLarge {
            op: "lp_via_segmented",
            n,
            max: SEGMENTED_MAX_N,
        });
    }
    let js: Vec<usize> = match config.j {
        Some(j) => vec![j],
        None => (0..config.k).collect(),
    };
    let mut memo = Memo {
        answers: HashMap::new(),
        witnesses: Vec::new(),
        calls: 0,
    };
    let mut phases = Vec::with_capacity(js.len());
    for j in js {
        phases.push(run_phase(instance, p, config, j, unit, oracle, &mut memo)?);
    }
    let best = phases
        .iter()
        .enumerate()
        .fold(0, |b, (idx, ph)| if tol::improves(ph.power_cost, phases[b].power_cost) { idx } else { b });
    let route = phases[best].route.clone();
    let bound = phases[best].trace.bound;
    debug_assert!(tol::le(
        lp_norm(&visit_times_unchecked(instance, route.order()).sorted, p),
        bound
    ));
    Ok(Reduction {
        route,
        bound,
        trace: DpTrace {
            p,
            epsilon: config.epsilon,
            k: config.k,
            c,
            alpha,
            unit,
            oracle_calls: memo.calls,
            best_j: phases[best].trace.j,
            bound,
            phases: phases.into_iter().map(|ph| ph.trace).collect(),
        },
    })
}

/// Integral distances: every distance times `S = ⌈n²/ε⌉ / d_min`, rounded,
/// then closed under shortest paths so the table stays a metric. Returns the
/// quantized instance and `S`.
pub fn quantize_distances(instance: &Instance, epsilon: f64) -> Result<(Instance, f64)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = instance.n();
    let Some(dmin) = instance.min_positive_distance() else {
        return Ok((instance.clone(), 1.0));
    };
    let scale = ((n * n) as f64 / epsilon).ceil() / dmin;
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|u| (0..n).map(|v| (instance.d(u, v) * scale).round()).collect())
        .collect();
    for w in 0..n {
        for u in 0..n {
            for v in 0..n {
                let via = m[u][w] + m[w][v];
                if via < m[u][v] {
                    m[u][v] = via;
                }
            }
        }
    }
    Ok((Instance::explicit(instance.start(), m)?, scale))
}
