//! Instance and route files.
//!
//! Instance: `{"start": 0, "metric": {"type": "line", "coords": [...]}}`.
//! Route: a JSON array of vertex indices.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{Instance, MetricSpec};
use crate::objectives::Route;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub start: usize,
    pub metric: MetricSpec,
}

impl From<&Instance> for InstanceFile {
    fn from(instance: &Instance) -> Self {
        InstanceFile {
            start: instance.start(),
            metric: instance.spec().clone(),
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        Instance::new(self.start, self.metric)
    }
}

fn parse_error(what: &str, e: serde_json::Error) -> Error {
    Error::InvalidParameter(format!("cannot parse {what}: {e}"))
}

/// Parses the file form without building the metric.
pub fn parse_instance_file(json: &str) -> Result<InstanceFile> {
    serde_json::from_str(json).map_err(|e| parse_error("instance", e))
}

pub fn parse_instance(json: &str) -> Result<Instance> {
    parse_instance_file(json)?.into_instance()
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from(instance)).expect("instance serializes") + "\n"
}

/// SHA-256 of the compact JSON form, hex encoded.
pub fn instance_digest(instance: &Instance) -> String {
    let compact = serde_json::to_string(&InstanceFile::from(instance)).expect("instance serializes");
    hex::encode(Sha256::digest(compact.as_bytes()))
}

pub fn parse_route(json: &str, instance: &Instance) -> Result<Route> {
    let order: Vec<usize> = serde_json::from_str(json).map_err(|e| parse_error("route", e))?;
    Route::new(order, instance)
}

pub fn route_to_json(route: &Route) -> String {
    serde_json::to_string(route).expect("route serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trip() {
        let inst = Instance::tree(1, vec![(0, 1, 2.5), (1, 2, 1.0)]).unwrap();
        let json = instance_to_json(&inst);
        let back = parse_instance(&json).unwrap();
        assert_eq!(back, inst);
        assert_eq!(instance_digest(&back), instance_digest(&inst));
        assert!(json.contains("\"type\": \"tree\""));
    }

    #[test]
    fn reads_the_documented_format() {
        let inst = parse_instance(r#"{"start": 0, "metric": {"type": "euclidean", "points": [[0, 0], [3, 4]]}}"#).unwrap();
        assert_eq!(inst.d(0, 1), 5.0);
        let inst = parse_instance(r#"{"start": 1, "metric": {"type": "explicit", "matrix": [[0, 1], [1, 0]]}}"#).unwrap();
        assert_eq!(inst.start(), 1);
    }

    #[test]
    fn rejects_unknown_type_and_fields() {
        assert!(parse_instance(r#"{"start": 0, "metric": {"type": "sphere", "coords": [0]}}"#).is_err());
        assert!(parse_instance(r#"{"start": 0, "metric": {"type": "line", "coords": [0], "x": 1}}"#).is_err());
        assert!(parse_instance(r#"{"start": 0, "metric": {"type": "line", "points": [0]}}"#).is_err());
        assert!(parse_instance(r#"{"start": 3, "metric": {"type": "line", "coords": [0]}}"#).is_err());
    }

    #[test]
    fn digest_distinguishes_instances() {
        let a = Instance::line(0, vec![0.0, 1.0]).unwrap();
        let b = Instance::line(0, vec![0.0, 2.0]).unwrap();
        assert_ne!(instance_digest(&a), instance_digest(&b));
        assert_eq!(instance_digest(&a).len(), 64);
    }

    #[test]
    fn route_round_trip() {
        let inst = Instance::line(0, vec![0.0, 1.0, 2.0]).unwrap();
        let route = parse_route("[0, 2, 1]", &inst).unwrap();
        assert_eq!(route_to_json(&route), "[0,2,1]\n");
        assert!(parse_route("[1, 0, 2]", &inst).is_err());
    }
}
