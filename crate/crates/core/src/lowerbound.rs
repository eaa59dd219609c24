//! All-norm lower-bound certificates on line metrics.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Instance;
use crate::objectives::{ratio_or_one, top_k_sums, visit_times_unchecked, Route};

/// Cap on interval-route candidates.
pub const MAX_LINE_ROUTES: u128 = 1_000_000;

/// Points on the real line; `start` is one of the coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineInstance {
    pub coords: Vec<f64>,
    pub start: f64,
}

impl LineInstance {
    pub fn new(coords: Vec<f64>, start: f64) -> Result<Self> {
        let inst = LineInstance { coords, start };
        inst.start_index()?;
        Ok(inst)
    }

    /// First vertex at the start coordinate.
    pub fn start_index(&self) -> Result<usize> {
        if self.coords.is_empty() {
            return Err(Error::Empty);
        }
        self.coords
            .iter()
            .position(|&x| x == self.start)
            .ok_or_else(|| Error::InvalidParameter(format!("start {} is not one of the coordinates", self.start)))
    }

    pub fn to_instance(&self) -> Result<Instance> {
        Instance::line(self.start_index()?, self.coords.clone())
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }
}

const APPENDIX: [f64; 150] = [
    0., 200., 202., 204., 206., 208., 210., 212., 214., 216., 217., 218., 219., 220., 221., 222., 223.,
    224., 225., 226., 228., 230., 232., 234., 236., 238., 240., 242., 244., 246., 250., 254., 258., 262.,
    266., 270., 274., 278., 282., 286., 289., 292., 295., 298., 301., 304., 307., 310., 313., 316., 316.,
    316., 316., 316., 316., 316., 316., 316., 316., 316., 322., 328., 334., 340., 346., 352., 358., 364.,
    370., 376., 382., 388., 394., 400., 406., 412., 418., 424., 430., 436., 446., 456., 466., 476., 486.,
    496., 506., 516., 526., 536., 540., 544., 548., 552., 556., 560., 564., 568., 572., 576., 595., 614.,
    633., 652., 671., 690., 709., 728., 747., 766., 775., 784., 793., 802., 811., 820., 829., 838., 847.,
    856., 888., 920., 952., 984., 1016., 1048., 1080., 1112., 1144., 1176., 1199., 1222., 1245., 1268.,
    1291., 1314., 1337., 1360., 1383., 1406., 1519., 1632., 1745., 1858., 1971., 2084., 2197., 2310.,
    2423., 2536.,
];

/// The 150-point line instance certifying the 1.78 all-norm gap, start at 200.
pub fn appendix_instance() -> LineInstance {
    LineInstance {
        coords: APPENDIX.to_vec(),
        start: 200.0,
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k.min(n - k)).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All interval routes: every interleaving of left and right extensions over
/// the distinct coordinates. Points sharing a coordinate are visited together
/// in index order; the start vertex comes first.
pub fn enumerate_line_routes(line: &LineInstance) -> Result<Vec<Route>> {
    let s = line.start_index()?;
    let x0 = line.start;
    let mut distinct: Vec<f64> = line.coords.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    // nearest first on each side
    let left: Vec<f64> = distinct.iter().rev().copied().filter(|&x| x < x0).collect();
    let right: Vec<f64> = distinct.iter().copied().filter(|&x| x > x0).collect();
    let (a, b) = (left.len(), right.len());
    let count = binomial((a + b) as u128, a as u128);
    if count > MAX_LINE_ROUTES {
        return Err(Error::CandidateExplosion {
            count,
            cap: MAX_LINE_ROUTES,
        });
    }
    let at = |x: f64| (0..line.n()).filter(move |&v| line.coords[v] == x);
    let mut head = vec![s];
    head.extend(at(x0).filter(|&v| v != s));

    let mut routes = Vec::with_capacity(count as usize);
    let mut walk = |moves: &[bool]| {
        let mut order = head.clone();
        let (mut l, mut r) = (0, 0);
        for &go_left in moves {
            let x = if go_left {
                l += 1;
                left[l - 1]
            } else {
                r += 1;
                right[r - 1]
            };
            order.extend(at(x));
        }
        routes.push(Route::from_order(order));
    };
    // moves[i] == true means step i extends to the left
    fn rec(moves: &mut Vec<bool>, a: usize, b: usize, emit: &mut dyn FnMut(&[bool])) {
        if a == 0 && b == 0 {
            emit(moves);
            return;
        }
        if a > 0 {
            moves.push(true);
            rec(moves, a - 1, b, emit);
            moves.pop();
        }
        if b > 0 {
            moves.push(false);
            rec(moves, a, b - 1, emit);
            moves.pop();
        }
    }
    rec(&mut Vec::with_capacity(a + b), a, b, &mut walk);
    Ok(routes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCertificate {
    pub instance: LineInstance,
    pub routes: Vec<Route>,
    /// Minimum Top-k value over the candidates, index `k − 1`.
    pub per_k_optima: Vec<f64>,
    /// Per candidate, the worst ratio over k.
    pub route_ratios: Vec<f64>,
    pub gap: f64,
    pub best_route: usize,
}

impl GapCertificate {
    /// `(candidate, k, ratio)` for every candidate and k.
    pub fn ratio_rows(&self) -> Result<Vec<(usize, usize, f64)>> {
        let inst = self.instance.to_instance()?;
        Ok(self
            .routes
            .iter()
            .enumerate()
            .flat_map(|(c, route)| {
                let tops = top_k_sums(&visit_times_unchecked(&inst, route.order()).sorted);
                tops.into_iter()
                    .zip(&self.per_k_optima)
                    .enumerate()
                    .map(move |(k, (t, &o))| (c, k + 1, ratio_or_one(t, o)))
                    .collect::<Vec<_>>()
            })
            .collect())
    }
}

/// Min over interval routes of the max over k of `TopK_k(route) / min TopK_k`.
/// Top-k dominance bounds every monotone symmetric norm, so this is the
/// candidate-restricted all-norm ratio.
pub fn allnorm_gap(line: &LineInstance) -> Result<GapCertificate> {
    let inst = line.to_instance()?;
    let routes = enumerate_line_routes(line)?;
    let tops: Vec<Vec<f64>> = routes
        .par_iter()
        .map(|r| top_k_sums(&visit_times_unchecked(&inst, r.order()).sorted))
        .collect();
    let n = line.n();
    let per_k_optima: Vec<f64> = (0..n)
        .map(|k| tops.iter().map(|t| t[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let route_ratios: Vec<f64> = tops
        .iter()
        .map(|t| {
            t.iter()
                .zip(&per_k_optima)
                .map(|(&a, &b)| ratio_or_one(a, b))
                .fold(1.0, f64::max)
        })
        .collect();
    let best_route = route_ratios
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least one candidate");
    Ok(GapCertificate {
        instance: line.clone(),
        gap: route_ratios[best_route],
        routes,
        per_k_optima,
        route_ratios,
        best_route,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentialRatios {
    pub n: usize,
    pub epsilon: f64,
    /// `(2bⁿ−1)/(bⁿ+1)`: right-first route under L∞.
    pub linf: f64,
    /// Closed form for the left-first route under L1, as printed.
    pub l1: f64,
    pub min: f64,
}

/// Closed-form ratios for the family with one point at −1 and points at
/// `bⁱ − 1`, `i = 1..=n`, `b = 1 + ε`, start at 0.
pub fn exponential_family_ratios(n: usize, epsilon: f64) -> Result<ExponentialRatios> {
    if n == 0 || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("need n >= 1 and epsilon > 0, got n = {n}, epsilon = {epsilon}")));
    }
    let b = 1.0 + epsilon;
    let bn = b.powi(n as i32);
    let nf = n as f64;
    let geo = b.powi(n as i32 + 1) / (b - 1.0);
    let linf = (2.0 * bn - 1.0) / (bn + 1.0);
    let l1 = (1.0 + 2.0 * nf + geo - nf - 1.0) / (geo - nf - 1.0 + 2.0 * bn - 1.0);
    Ok(ExponentialRatios {
        n,
        epsilon,
        linf,
        l1,
        min: linf.min(l1),
    })
}

/// The exponential family as a line instance.
pub fn exponential_family_instance(n: usize, epsilon: f64) -> LineInstance {
    let b = 1.0 + epsilon;
    let mut coords = vec![0.0, -1.0];
    coords.extend((1..=n).map(|i| b.powi(i as i32) - 1.0));
    LineInstance { coords, start: 0.0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CircleDemo {
    pub n: usize,
    pub m: u64,
    pub epsilon: f64,
    /// Normalized `Σ ℓ² / m` walking the long way round first.
    pub wrong_direction: f64,
    /// Normalized `Σ ℓ² / m` visiting the heavy point first.
    pub right_direction: f64,
}

/// Unit circle with single points at angles `2πk/n`, `k = 1..=n−2`, and `m`
/// coincident points at `2π(n−1−ε)/n`, start at angle 0; the two perimeter
/// routes are evaluated with chord distances and the heavy point weighted.
pub fn circle_ratio_demo(n: usize, m: u64, epsilon: f64) -> Result<CircleDemo> {
    if n < 3 || m == 0 || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need n >= 3, m >= 1, 0 < epsilon < 1; got n = {n}, m = {m}, epsilon = {epsilon}"
        )));
    }
    let angle = |k: f64| 2.0 * PI * k / n as f64;
    let heavy = angle(n as f64 - 1.0 - epsilon);
    let chord = |a: f64, b: f64| 2.0 * ((a - b).abs() / 2.0).sin();
    // (angle, weight) in counterclockwise order
    let mut ccw: Vec<(f64, f64)> = (1..=n - 2).map(|k| (angle(k as f64), 1.0)).collect();
    ccw.push((heavy, m as f64));
    let damage = |stops: &[(f64, f64)]| {
        let (mut pos, mut t, mut total) = (0.0, 0.0, 0.0);
        for &(a, w) in stops {
            t += chord(pos, a);
            total += w * t * t;
            pos = a;
        }
        total / m as f64
    };
    let wrong = damage(&ccw);
    ccw.reverse();
    let right = damage(&ccw);
    Ok(CircleDemo {
        n,
        m,
        epsilon,
        wrong_direction: wrong,
        right_direction: right,
    })
}
