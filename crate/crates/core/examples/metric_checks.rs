//! Metric validation, JSON round trips and distance quantization.

use lptsp::io::{instance_digest, instance_to_json, parse_instance};
use lptsp::metrics::{validate_metric, DistanceMatrix};
use lptsp::segdp::quantize_distances;
use lptsp::Instance;

fn main() -> lptsp::Result<()> {
    let table = DistanceMatrix::from_rows(&[
        vec![0.0, 1.0, 5.0],
        vec![1.0, 0.0, 1.0],
        vec![5.0, 1.0, 0.0],
    ])?;
    for v in validate_metric(&table) {
        println!("{:?} at {:?}, excess {}", v.kind, v.witness, v.magnitude);
    }

    let inst = Instance::tree(0, vec![(0, 1, 1.0), (1, 2, 2.5), (1, 3, 7.0)])?;
    let json = instance_to_json(&inst);
    let back = parse_instance(&json)?;
    println!("{json}");
    println!("digest {} (round trip equal: {})", instance_digest(&inst), back == inst);

    let (q, scale) = quantize_distances(&inst, 0.5)?;
    println!("quantized with unit {scale}:");
    for row in q.distances().rows() {
        println!("  {row:?}");
    }
    Ok(())
}
