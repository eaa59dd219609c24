//! Metric construction and validation.
//!
//! Every solver works on a dense [`DistanceMatrix`] materialized once from a
//! [`MetricSpec`]. Line and Euclidean inputs become absolute differences and
//! planar distances; tree inputs become unique-path weights.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::REL_TOL;

/// Geometry an instance was built from. The serde form is the `metric`
/// object of the instance file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricSpec {
    Line { coords: Vec<f64> },
    Euclidean { points: Vec<[f64; 2]> },
    /// Spanning tree on `edges.len() + 1` vertices, edges as `[u, v, w]`.
    Tree { edges: Vec<(usize, usize, f64)> },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl MetricSpec {
    pub fn vertex_count(&self) -> usize {
        match self {
            MetricSpec::Line { coords } => coords.len(),
            MetricSpec::Euclidean { points } => points.len(),
            MetricSpec::Tree { edges } => edges.len() + 1,
            MetricSpec::Explicit { matrix } => matrix.len(),
        }
    }
}

/// Row-major n×n table of distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps raw rows without checking any metric axiom.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare { row, len: r.len(), n });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    #[inline]
    fn set(&mut self, u: usize, v: usize, value: f64) {
        self.data[u * self.n + v] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Symmetry,
    Identity,
    Triangle,
    Connectivity,
}

/// A concrete witness that a table is not a metric.
///
/// For `Triangle`, the witness `(x, y, z)` means `d(x,y) > d(x,z) + d(z,y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricViolation {
    pub kind: ViolationKind,
    pub witness: Vec<usize>,
    pub magnitude: f64,
}

/// Materializes the distance table for `spec`.
pub fn build_metric(spec: &MetricSpec) -> Result<DistanceMatrix> {
    match spec {
        MetricSpec::Line { coords } => {
            check_finite(coords.iter().copied())?;
            let n = coords.len();
            let mut table = DistanceMatrix::zeros(n);
            for u in 0..n {
                for v in 0..n {
                    table.set(u, v, (coords[u] - coords[v]).abs());
                }
            }
            Ok(table)
        }
        MetricSpec::Euclidean { points } => {
            check_finite(points.iter().flat_map(|p| p.iter().copied()))?;
            let n = points.len();
            let mut table = DistanceMatrix::zeros(n);
            for u in 0..n {
                for v in u + 1..n {
                    let d = (points[u][0] - points[v][0]).hypot(points[u][1] - points[v][1]);
                    table.set(u, v, d);
                    table.set(v, u, d);
                }
            }
            Ok(table)
        }
        MetricSpec::Tree { edges } => tree_distances(edges),
        MetricSpec::Explicit { matrix } => {
            let table = DistanceMatrix::from_rows(matrix)?;
            for (index, &value) in table.data.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NonFinite { index, value });
                }
                if value < 0.0 {
                    return Err(Error::Negative { index, value });
                }
            }
            Ok(table)
        }
    }
}

fn check_finite(values: impl Iterator<Item = f64>) -> Result<()> {
    for (index, value) in values.enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
    }
    Ok(())
}

fn tree_distances(edges: &[(usize, usize, f64)]) -> Result<DistanceMatrix> {
    let n = edges.len() + 1;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut adjacency = vec![Vec::new(); n];
    for (index, &(u, v, w)) in edges.iter().enumerate() {
        if u >= n || v >= n {
            return Err(Error::TreeVertexOutOfRange { u, v, n });
        }
        if !w.is_finite() {
            return Err(Error::NonFinite { index, value: w });
        }
        if w < 0.0 {
            return Err(Error::Negative { index, value: w });
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return Err(Error::TreeCycle { u, v });
        }
        parent[ru] = rv;
        adjacency[u].push((v, w));
        adjacency[v].push((u, w));
    }
    // n - 1 edges without a cycle is always connected; kept for clarity of the error path.
    let components = (0..n).filter(|&x| find(&mut parent, x) == x).count();
    if components != 1 {
        return Err(Error::TreeDisconnected { components });
    }

    let mut table = DistanceMatrix::zeros(n);
    let mut queue = VecDeque::new();
    for source in 0..n {
        let mut seen = vec![false; n];
        seen[source] = true;
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let dx = table.get(source, x);
            for &(y, w) in &adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    table.set(source, y, dx + w);
                    queue.push_back(y);
                }
            }
        }
    }
    Ok(table)
}

/// Checks symmetry, identity and the triangle inequality within relative
/// tolerance. Returns one violation per offending pair; for triangle
/// violations the worst intermediate vertex is reported.
pub fn validate_metric(table: &DistanceMatrix) -> Vec<MetricViolation> {
    let n = table.n();
    let mut out = Vec::new();
    let exceeds = |excess: f64, scale: f64| excess > REL_TOL * scale.abs().max(f64::MIN_POSITIVE);

    for x in 0..n {
        let dxx = table.get(x, x);
        if dxx != 0.0 {
            out.push(MetricViolation {
                kind: ViolationKind::Identity,
                witness: vec![x],
                magnitude: dxx.abs(),
            });
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            let (a, b) = (table.get(x, y), table.get(y, x));
            if !a.is_finite() || !b.is_finite() {
                out.push(MetricViolation {
                    kind: ViolationKind::Connectivity,
                    witness: vec![x, y],
                    magnitude: f64::INFINITY,
                });
                continue;
            }
            if exceeds((a - b).abs(), a.max(b)) {
                out.push(MetricViolation {
                    kind: ViolationKind::Symmetry,
                    witness: vec![x, y],
                    magnitude: (a - b).abs(),
                });
            }
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            let direct = table.get(x, y);
            if !direct.is_finite() {
                continue;
            }
            let mut worst: Option<(usize, f64)> = None;
            for z in 0..n {
                if z == x || z == y {
                    continue;
                }
                let detour = table.get(x, z) + table.get(z, y);
                let excess = direct - detour;
                if exceeds(excess, direct) && worst.is_none_or(|(_, e)| excess > e) {
                    worst = Some((z, excess));
                }
            }
            if let Some((z, excess)) = worst {
                out.push(MetricViolation {
                    kind: ViolationKind::Triangle,
                    witness: vec![x, y, z],
                    magnitude: excess,
                });
            }
        }
    }
    out
}

/// Vertex set, start vertex and metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    start: usize,
    spec: MetricSpec,
    dist: DistanceMatrix,
}

impl Instance {
    /// Builds and validates an instance. Explicit matrices must satisfy the
    /// metric axioms; the other geometries satisfy them by construction.
    pub fn new(start: usize, spec: MetricSpec) -> Result<Self> {
        let dist = build_metric(&spec)?;
        let n = dist.n();
        if n == 0 {
            return Err(Error::Empty);
        }
        if start >= n {
            return Err(Error::InvalidStart { start, n });
        }
        if matches!(spec, MetricSpec::Explicit { .. }) {
            let violations = validate_metric(&dist);
            if !violations.is_empty() {
                return Err(Error::NotAMetric(violations));
            }
        }
        Ok(Self { start, spec, dist })
    }

    pub fn line(start: usize, coords: Vec<f64>) -> Result<Self> {
        Self::new(start, MetricSpec::Line { coords })
    }

    pub fn euclidean(start: usize, points: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(start, MetricSpec::Euclidean { points })
    }

    pub fn tree(start: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::new(start, MetricSpec::Tree { edges })
    }

    pub fn explicit(start: usize, matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(start, MetricSpec::Explicit { matrix })
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dist
    }

    #[inline]
    pub fn d(&self, u: usize, v: usize) -> f64 {
        self.dist.get(u, v)
    }

    /// Smallest strictly positive pairwise distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .data
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .min_by(f64::total_cmp)
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.data.iter().copied().fold(0.0, f64::max)
    }

    /// Vertices at distance zero from the start: the start, then the others ascending.
    pub fn zero_distance_class(&self) -> Vec<usize> {
        std::iter::once(self.start)
            .chain((0..self.n()).filter(|&v| v != self.start && self.d(self.start, v) == 0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn figure1_line_distances() {
        let eps = 0.01;
        let table = build_metric(&MetricSpec::Line {
            coords: vec![0.0, -1.0 - eps, 1.0, 2.0],
        })
        .unwrap();
        assert_relative_eq!(table.get(1, 3), 3.0 + eps);
        assert_relative_eq!(table.get(0, 2), 1.0);
        assert!(validate_metric(&table).is_empty());
    }

    #[test]
    fn single_edge_tree() {
        let table = build_metric(&MetricSpec::Tree {
            edges: vec![(0, 1, 5.0)],
        })
        .unwrap();
        assert_eq!(table.get(0, 1), 5.0);
        assert_eq!(table.get(1, 0), 5.0);
        assert_eq!(table.get(0, 0), 0.0);
    }

    #[test]
    fn pythagorean_pair() {
        let table = build_metric(&MetricSpec::Euclidean {
            points: vec![[0.0, 0.0], [3.0, 4.0]],
        })
        .unwrap();
        assert_eq!(table.get(0, 1), 5.0);
    }

    #[test]
    fn tree_errors() {
        let cyc = MetricSpec::Tree {
            edges: vec![(0, 1, 1.0), (1, 0, 1.0)],
        };
        assert!(matches!(build_metric(&cyc), Err(Error::TreeCycle { .. })));
        let neg = MetricSpec::Tree {
            edges: vec![(0, 1, -1.0)],
        };
        assert!(matches!(build_metric(&neg), Err(Error::Negative { .. })));
        let out = MetricSpec::Tree {
            edges: vec![(0, 5, 1.0)],
        };
        assert!(matches!(
            build_metric(&out),
            Err(Error::TreeVertexOutOfRange { .. })
        ));
    }

    #[test]
    fn non_finite_coordinate_rejected() {
        let spec = MetricSpec::Line {
            coords: vec![0.0, f64::NAN],
        };
        assert!(matches!(build_metric(&spec), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn symmetry_violation_witness() {
        let table =
            DistanceMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let v = validate_metric(&table);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Symmetry);
        assert_eq!(v[0].witness, vec![0, 1]);
    }

    #[test]
    fn triangle_violation_witness() {
        let table = DistanceMatrix::from_rows(&[
            vec![0.0, 1.0, 10.0],
            vec![1.0, 0.0, 1.0],
            vec![10.0, 1.0, 0.0],
        ])
        .unwrap();
        let v = validate_metric(&table);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Triangle);
        assert_eq!(v[0].witness, vec![0, 2, 1]);
        assert_eq!(v[0].magnitude, 8.0);
    }

    #[test]
    fn explicit_non_metric_rejected() {
        let r = Instance::explicit(
            0,
            vec![vec![0.0, 1.0, 10.0], vec![1.0, 0.0, 1.0], vec![10.0, 1.0, 0.0]],
        );
        assert!(matches!(r, Err(Error::NotAMetric(_))));
    }

    #[test]
    fn duplicate_coordinates_are_distinct_vertices() {
        let inst = Instance::line(0, vec![0.0, 0.0, 3.0]).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.zero_distance_class(), vec![0, 1]);
        assert_eq!(inst.min_positive_distance(), Some(3.0));
    }

    #[test]
    fn bad_start() {
        assert!(matches!(
            Instance::line(3, vec![0.0, 1.0]),
            Err(Error::InvalidStart { .. })
        ));
    }

    fn random_tree() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
        (2usize..=10).prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            (parents, prop::collection::vec(0.0f64..10.0, n - 1)).prop_map(|(ps, ws)| {
                ps.into_iter()
                    .enumerate()
                    .map(|(i, p)| (i + 1, p, ws[i]))
                    .collect()
            })
        })
    }

    /// Path weight by explicit enumeration of the unique simple path.
    fn path_weight(edges: &[(usize, usize, f64)], from: usize, to: usize) -> f64 {
        fn dfs(
            edges: &[(usize, usize, f64)],
            at: usize,
            to: usize,
            prev: Option<usize>,
            acc: f64,
        ) -> Option<f64> {
            if at == to {
                return Some(acc);
            }
            for &(u, v, w) in edges {
                let next = if u == at { v } else if v == at { u } else { continue };
                if Some(next) == prev {
                    continue;
                }
                if let Some(found) = dfs(edges, next, to, Some(at), acc + w) {
                    return Some(found);
                }
            }
            None
        }
        dfs(edges, from, to, None, 0.0).unwrap()
    }

    proptest! {
        #[test]
        fn tree_distance_matches_path_enumeration(edges in random_tree()) {
            let table = build_metric(&MetricSpec::Tree { edges: edges.clone() }).unwrap();
            let n = table.n();
            for u in 0..n {
                for v in 0..n {
                    let expected = path_weight(&edges, u, v);
                    prop_assert!((table.get(u, v) - expected).abs() <= 1e-9 * expected.max(1.0));
                }
            }
            prop_assert!(validate_metric(&table).is_empty());
        }

        #[test]
        fn euclidean_tables_are_metrics(
            pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..12)
        ) {
            let points = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let table = build_metric(&MetricSpec::Euclidean { points }).unwrap();
            prop_assert!(validate_metric(&table).is_empty());
        }

        #[test]
        fn line_tables_are_metrics(coords in prop::collection::vec(-1e3f64..1e3, 1..12)) {
            let table = build_metric(&MetricSpec::Line { coords }).unwrap();
            prop_assert!(validate_metric(&table).is_empty());
        }
    }
}
