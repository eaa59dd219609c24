//! Routes, visit times, and the norms evaluated on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Instance;

/// Visiting order of all vertices, beginning at the start vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Route(Vec<usize>);

impl Route {
    pub fn new(order: Vec<usize>, instance: &Instance) -> Result<Self> {
        let route = Self(order);
        route.validate(instance)?;
        Ok(route)
    }

    pub(crate) fn from_order(order: Vec<usize>) -> Self {
        Self(order)
    }

    /// Identity order with the start moved to the front.
    pub fn identity(instance: &Instance) -> Self {
        let s = instance.start();
        Self(
            std::iter::once(s)
                .chain((0..instance.n()).filter(|&v| v != s))
                .collect(),
        )
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        let n = instance.n();
        if self.0.len() != n {
            return Err(Error::InvalidRoute(format!(
                "route has {} entries, instance has {n} vertices",
                self.0.len()
            )));
        }
        if self.0[0] != instance.start() {
            return Err(Error::InvalidRoute(format!(
                "route starts at {}, expected {}",
                self.0[0],
                instance.start()
            )));
        }
        let mut seen = vec![false; n];
        for &v in &self.0 {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidRoute(format!(
                    "vertex {v} repeated or out of range"
                )));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn into_order(self) -> Vec<usize> {
        self.0
    }

    /// Total length of the open path.
    pub fn length(&self, instance: &Instance) -> f64 {
        self.0.windows(2).map(|w| instance.d(w[0], w[1])).sum()
    }
}

/// Visit times of a route, per vertex and in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitTimes {
    pub by_vertex: Vec<f64>,
    pub sorted: Vec<f64>,
}

impl VisitTimes {
    /// Wraps an arbitrary nonnegative vector (used by verifiers).
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            by_vertex: values,
            sorted,
        }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

pub fn visit_times(instance: &Instance, route: &Route) -> Result<VisitTimes> {
    route.validate(instance)?;
    Ok(visit_times_unchecked(instance, route.order()))
}

/// Prefix sums along `order`; `sorted` is the visit-order sequence, which is
/// nondecreasing because distances are nonnegative.
pub(crate) fn visit_times_unchecked(instance: &Instance, order: &[usize]) -> VisitTimes {
    let mut by_vertex = vec![0.0; instance.n()];
    let mut sorted = Vec::with_capacity(order.len());
    let mut t = 0.0;
    let mut prev = order[0];
    for &v in order {
        t += instance.d(prev, v);
        by_vertex[v] = t;
        sorted.push(t);
        prev = v;
    }
    VisitTimes { by_vertex, sorted }
}

/// Objective applied to the visit-time vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// Minkowski p-norm, finite p ≥ 1.
    Lp(f64),
    LInf,
    /// Sum of the k largest visit times.
    TopK(usize),
    /// Every monotone symmetric norm at once; only meaningful to verifiers.
    AllNorm,
}

impl Objective {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Objective::Lp(p) if !(p >= 1.0) || !p.is_finite() => Err(Error::InvalidObjective(
                format!("p must be a finite value >= 1, got {p}"),
            )),
            Objective::TopK(k) if k == 0 || k > n => Err(Error::KOutOfRange { k, n }),
            _ => Ok(()),
        }
    }

    pub(crate) fn accumulator(&self, n: usize) -> Result<Accumulator> {
        self.validate(n)?;
        match *self {
            Objective::Lp(p) => Ok(Accumulator::Power(p)),
            Objective::TopK(k) => Ok(Accumulator::Top { from: n - k }),
            Objective::LInf => Ok(Accumulator::Max),
            Objective::AllNorm => Err(Error::UnsupportedObjective(self.to_string())),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Objective::Lp(p) if p == 1.0 => write!(f, "l1"),
            Objective::Lp(p) if p == 2.0 => write!(f, "l2"),
            Objective::Lp(p) => write!(f, "lp:{p}"),
            Objective::LInf => write!(f, "linf"),
            Objective::TopK(k) => write!(f, "topk:{k}"),
            Objective::AllNorm => write!(f, "allnorm"),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    /// `l1 | l2 | lp:<p> | linf | topk:<k>`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidObjective(format!("unrecognized norm '{s}'"));
        let obj = match s {
            "l1" => Objective::Lp(1.0),
            "l2" => Objective::Lp(2.0),
            "linf" => Objective::LInf,
            _ => {
                if let Some(p) = s.strip_prefix("lp:") {
                    let p: f64 = p.parse().map_err(|_| bad())?;
                    if p == f64::INFINITY {
                        Objective::LInf
                    } else {
                        Objective::Lp(p)
                    }
                } else if let Some(k) = s.strip_prefix("topk:") {
                    Objective::TopK(k.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        };
        if let Objective::TopK(0) = obj {
            return Err(Error::InvalidObjective("k must be >= 1".into()));
        }
        obj.validate(usize::MAX)?;
        Ok(obj)
    }
}

/// Incremental form of an objective along a route: each newly visited
/// position contributes to a running cost that `finish` turns into the value.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Accumulator {
    Power(f64),
    Top { from: usize },
    Max,
}

impl Accumulator {
    /// Cost after the vertex at 0-based route `position` is visited at time `t`.
    #[inline]
    pub fn add(&self, cost: f64, position: usize, t: f64) -> f64 {
        match *self {
            Accumulator::Power(p) => cost + pow(t, p),
            Accumulator::Top { from } => {
                if position >= from {
                    cost + t
                } else {
                    cost
                }
            }
            Accumulator::Max => cost.max(t),
        }
    }

    #[inline]
    pub fn finish(&self, cost: f64) -> f64 {
        match *self {
            Accumulator::Power(p) if p == 1.0 => cost,
            Accumulator::Power(p) if p == 2.0 => cost.sqrt(),
            Accumulator::Power(p) => cost.powf(1.0 / p),
            _ => cost,
        }
    }
}

#[inline]
fn pow(t: f64, p: f64) -> f64 {
    if p == 1.0 {
        t
    } else if p == 2.0 {
        t * t
    } else {
        t.powf(p)
    }
}

/// p-norm of a nonnegative vector, scaled by its maximum to avoid overflow.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return values.iter().sum();
    }
    let s: f64 = values.iter().map(|&v| pow(v / max, p)).sum();
    max * s.powf(1.0 / p)
}

/// Sums of the k largest entries for k = 1..=n.
pub fn top_k_sums(values: &[f64]) -> Vec<f64> {
    let mut desc = values.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    desc.iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

pub fn norm(times: &VisitTimes, obj: Objective) -> Result<f64> {
    obj.validate(times.len())?;
    let v = &times.sorted;
    match obj {
        Objective::Lp(p) => Ok(lp_norm(v, p)),
        Objective::LInf => Ok(v.iter().copied().fold(0.0, f64::max)),
        Objective::TopK(k) => Ok(v[v.len() - k..].iter().sum()),
        Objective::AllNorm => Err(Error::UnsupportedObjective(obj.to_string())),
    }
}

/// Smallest α with `TopK(k)(x) <= α · TopK(k)(y)` for every k; 0/0 counts as 1.
pub fn submajorization_factor(x: &VisitTimes, y: &VisitTimes) -> f64 {
    submajorization_factor_of(&x.sorted, &y.sorted)
}

pub fn submajorization_factor_of(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "vectors must have equal length");
    top_k_sums(x)
        .into_iter()
        .zip(top_k_sums(y))
        .map(|(a, b)| ratio_or_one(a, b))
        .fold(if x.is_empty() { 1.0 } else { 0.0 }, f64::max)
}

/// `a / b` with 0/0 → 1 and positive/0 → ∞.
pub(crate) fn ratio_or_one(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const EPS: f64 = 0.01;

    fn figure1() -> Instance {
        Instance::line(0, vec![0.0, -1.0 - EPS, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn figure1_visit_times() {
        let inst = figure1();
        let sabc = Route::new(vec![0, 1, 2, 3], &inst).unwrap();
        let t = visit_times(&inst, &sabc).unwrap();
        let expected = [0.0, 1.0 + EPS, 3.0 + 2.0 * EPS, 4.0 + 2.0 * EPS];
        for (a, b) in t.sorted.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
        let sbca = Route::new(vec![0, 2, 3, 1], &inst).unwrap();
        let t = visit_times(&inst, &sbca).unwrap();
        for (a, b) in t.sorted.iter().zip([0.0, 1.0, 2.0, 5.0 + EPS]) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
        assert_relative_eq!(norm(&t, Objective::Lp(1.0)).unwrap(), 8.0 + EPS);
    }

    #[test]
    fn figure1_l2_tends_to_sqrt26() {
        let t = VisitTimes::from_values(vec![0.0, 1.0, 3.0, 4.0]);
        assert_relative_eq!(norm(&t, Objective::Lp(2.0)).unwrap(), 26f64.sqrt());
    }

    #[test]
    fn single_vertex() {
        let inst = Instance::line(0, vec![5.0]).unwrap();
        let t = visit_times(&inst, &Route::identity(&inst)).unwrap();
        assert_eq!(t.sorted, vec![0.0]);
    }

    #[test]
    fn top_k_sum() {
        let t = VisitTimes::from_values(vec![0.0, 3.0, 4.0]);
        assert_eq!(norm(&t, Objective::TopK(2)).unwrap(), 7.0);
        assert_eq!(norm(&t, Objective::LInf).unwrap(), 4.0);
        assert!(norm(&t, Objective::TopK(4)).is_err());
    }

    #[test]
    fn bad_routes() {
        let inst = figure1();
        assert!(Route::new(vec![1, 0, 2, 3], &inst).is_err());
        assert!(Route::new(vec![0, 1, 1, 3], &inst).is_err());
        assert!(Route::new(vec![0, 1, 2], &inst).is_err());
    }

    #[test]
    fn parse_norms() {
        assert_eq!("l1".parse::<Objective>().unwrap(), Objective::Lp(1.0));
        assert_eq!("lp:3".parse::<Objective>().unwrap(), Objective::Lp(3.0));
        assert_eq!("linf".parse::<Objective>().unwrap(), Objective::LInf);
        assert_eq!("topk:4".parse::<Objective>().unwrap(), Objective::TopK(4));
        assert!("lp:0.5".parse::<Objective>().is_err());
        assert!("topk:0".parse::<Objective>().is_err());
        assert!("l7".parse::<Objective>().is_err());
    }

    #[test]
    fn submajorization_examples() {
        let y = VisitTimes::from_values(vec![0.0, 1.0, 2.0]);
        assert_eq!(submajorization_factor(&y, &y), 1.0);
        let x2 = VisitTimes::from_values(vec![0.0, 2.0, 4.0]);
        assert_eq!(submajorization_factor(&x2, &y), 2.0);
        let x = VisitTimes::from_values(vec![0.0, 8.0, 8.0]);
        // top-k sums: x = (8, 16, 16), y = (2, 3, 3)
        assert_relative_eq!(submajorization_factor(&x, &y), 16.0 / 3.0);
        let zero = VisitTimes::from_values(vec![0.0, 0.0]);
        let pos = VisitTimes::from_values(vec![0.0, 1.0]);
        assert_eq!(submajorization_factor(&zero, &zero), 1.0);
        assert_eq!(submajorization_factor(&pos, &zero), f64::INFINITY);
    }

    #[test]
    fn accumulator_matches_norm() {
        let inst = figure1();
        let route = Route::new(vec![0, 2, 1, 3], &inst).unwrap();
        let t = visit_times(&inst, &route).unwrap();
        for obj in [
            Objective::Lp(1.0),
            Objective::Lp(2.5),
            Objective::LInf,
            Objective::TopK(1),
            Objective::TopK(3),
        ] {
            let acc = obj.accumulator(4).unwrap();
            let cost = t
                .sorted
                .iter()
                .enumerate()
                .fold(0.0, |c, (i, &ti)| acc.add(c, i, ti));
            assert_relative_eq!(acc.finish(cost), norm(&t, obj).unwrap(), max_relative = 1e-12);
        }
    }

    const PS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

    fn all_norms(v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = PS.iter().map(|&p| lp_norm(v, p)).collect();
        out.push(v.iter().copied().fold(0.0, f64::max));
        out
    }

    proptest! {
        #[test]
        fn norms_decrease_in_p(v in prop::collection::vec(0.0f64..100.0, 1..20)) {
            let ns = all_norms(&v);
            for w in ns.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn ky_fan_dominance(
            pairs in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 1..15)
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let alpha = submajorization_factor_of(&x, &y);
            prop_assume!(alpha.is_finite());
            for (nx, ny) in all_norms(&x).into_iter().zip(all_norms(&y)) {
                prop_assert!(nx <= alpha * ny * (1.0 + 1e-9) + 1e-9);
            }
        }
    }
}
