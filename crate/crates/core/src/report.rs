//! Self-verifying run reports, CSV tables and SVG route drawings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::instance_digest;
use crate::metrics::{Instance, MetricSpec};
use crate::objectives::{lp_norm, top_k_sums, visit_times, Route};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// Sum of the k largest visit times, index `k − 1`.
    pub topk: Vec<f64>,
}

impl Norms {
    pub fn of(instance: &Instance, route: &Route) -> Result<Self> {
        let t = visit_times(instance, route)?;
        Ok(Norms {
            l1: lp_norm(&t.sorted, 1.0),
            l2: lp_norm(&t.sorted, 2.0),
            linf: t.sorted.last().copied().unwrap_or(0.0),
            topk: top_k_sums(&t.sorted),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Algorithm {
    pub id: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_digest: String,
    pub algorithm: Algorithm,
    pub route: Route,
    pub norms: Norms,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(instance: &Instance, algorithm: Algorithm, route: Route, wall_time_ms: f64) -> Result<Self> {
        Ok(RunReport {
            instance_digest: instance_digest(instance),
            norms: Norms::of(instance, &route)?,
            algorithm,
            route,
            wall_time_ms,
        })
    }

    /// Checks the digest, the route and that every norm recomputes bit for bit.
    pub fn verify(&self, instance: &Instance) -> Result<()> {
        if self.instance_digest != instance_digest(instance) {
            return Err(Error::InvalidParameter("report was produced for a different instance".into()));
        }
        let norms = Norms::of(instance, &self.route)?;
        if norms != self.norms {
            return Err(Error::InvalidParameter(format!(
                "reported norms {:?} do not match recomputed {:?}",
                self.norms, norms
            )));
        }
        Ok(())
    }
}

/// Comma-separated table with a header row.
pub fn csv_table<R, I>(header: &[&str], rows: R) -> String
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.into_iter().collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// `k, T_k, TopK_k` for the route's sorted visit times.
pub fn topk_sweep_csv(instance: &Instance, route: &Route) -> Result<String> {
    let t = visit_times(instance, route)?;
    let tops = top_k_sums(&t.sorted);
    Ok(csv_table(
        &["k", "t_k", "topk"],
        t.sorted
            .iter()
            .zip(tops)
            .enumerate()
            .map(|(i, (tk, top))| [(i + 1).to_string(), tk.to_string(), top.to_string()]),
    ))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 30.0;

fn scale(values: impl Iterator<Item = f64> + Clone, span: f64) -> impl Fn(f64) -> f64 {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    move |v| MARGIN + (v - lo) / range * span
}

/// Static drawing of a route. Euclidean instances are drawn in the plane;
/// line instances as position (horizontal) against visit time (downward).
pub fn route_svg(instance: &Instance, route: &Route) -> Result<String> {
    route.validate(instance)?;
    let xy: Vec<(f64, f64)> = match instance.spec() {
        MetricSpec::Euclidean { points } => points.iter().map(|p| (p[0], -p[1])).collect(),
        MetricSpec::Line { coords } => {
            let t = visit_times(instance, route)?;
            coords.iter().zip(&t.by_vertex).map(|(&x, &tv)| (x, tv)).collect()
        }
        _ => {
            return Err(Error::InvalidParameter(
                "SVG output needs a line or Euclidean instance".into(),
            ))
        }
    };
    let sx = scale(xy.iter().map(|p| p.0), WIDTH - 2.0 * MARGIN);
    let sy = scale(xy.iter().map(|p| p.1), HEIGHT - 2.0 * MARGIN);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    svg.push('\n');
    let path: Vec<String> = route
        .order()
        .iter()
        .map(|&v| format!("{:.2},{:.2}", sx(xy[v].0), sy(xy[v].1)))
        .collect();
    writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        path.join(" ")
    )
    .unwrap();
    for (pos, &v) in route.order().iter().enumerate() {
        let (x, y) = (sx(xy[v].0), sy(xy[v].1));
        let fill = if pos == 0 { "crimson" } else { "black" };
        writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{fill}"/>"#).unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">{v}</text>"#,
            x + 4.0,
            y - 4.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
