#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::OnceLock;

use taskbits::frontier::Point;
use taskbits::harness::{build_family, CheckpointFamily, ExperimentConfig};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn shipped_config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn tiny_config() -> ExperimentConfig {
    ExperimentConfig::load(&fixture_path("tiny_arith.json")).expect("tiny fixture config loads")
}

/// Checkpoint family of the tiny fixture config, built once per test binary.
pub fn tiny_family() -> &'static CheckpointFamily {
    static FAMILY: OnceLock<CheckpointFamily> = OnceLock::new();
    FAMILY.get_or_init(|| build_family(&tiny_config().pipeline).expect("tiny family builds"))
}

pub fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("taskbits-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Distinct `(κ, τ)` values not dominated by any other point: the
/// quadratic definition of a Pareto set.
pub fn brute_force_front(points: &[Point]) -> BTreeSet<(u64, u64)> {
    points
        .iter()
        .filter(|p| {
            !points.iter().any(|q| {
                q.kappa <= p.kappa && q.tau >= p.tau && (q.kappa < p.kappa || q.tau > p.tau)
            })
        })
        .map(key)
        .collect()
}

pub fn key(p: &Point) -> (u64, u64) {
    (p.kappa.to_bits(), p.tau.to_bits())
}
