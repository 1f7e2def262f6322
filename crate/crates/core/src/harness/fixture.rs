//! Published frontier points of large models, kept as lookup fixtures.

use serde::Serialize;

use super::accounting::{human_bytes, tokens_to_bytes};
use crate::frontier::{pareto_filter, ParetoFrontier, Point};

/// A transcribed published point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedPoint {
    pub model: &'static str,
    pub task: &'static str,
    pub kappa: f64,
    pub tau: f64,
    pub note: &'static str,
}

pub const PUBLISHED: &[PublishedPoint] = &[
    PublishedPoint {
        model: "olmo3-32b",
        task: "gsm8k",
        kappa: 4358.0,
        tau: 0.722,
        note: "short program reaching 72.2% accuracy",
    },
    PublishedPoint {
        model: "olmo3-32b",
        task: "gsm8k",
        kappa: 1.2e6,
        tau: 0.784,
        note: "program the size of one ImageNet image reaching 78.4%",
    },
    PublishedPoint {
        model: "olmo3-7b",
        task: "flores",
        kappa: 2952.0,
        tau: 0.2263,
        note: "pre-trained base model, 22.63 BLEU (base script only)",
    },
    PublishedPoint {
        model: "olmo3-7b",
        task: "flores",
        kappa: 3992.0,
        tau: 0.3443,
        note: "adapted to 34.43 BLEU",
    },
];

/// Published points of one (model, task) as frontier points.
pub fn published_points(model: &str, task: &str) -> Vec<Point> {
    PUBLISHED
        .iter()
        .filter(|p| p.model == model && p.task == task)
        .map(|p| Point::new(p.kappa, p.tau, "published"))
        .collect()
}

pub fn published_frontier(model: &str, task: &str) -> ParetoFrontier {
    pareto_filter(&published_points(model, task))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureCheck {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

impl FixtureCheck {
    fn new(name: &str, expected: impl ToString, actual: impl ToString) -> Self {
        let (expected, actual) = (expected.to_string(), actual.to_string());
        Self {
            name: name.to_string(),
            pass: expected == actual,
            expected,
            actual,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

/// Lookup and invariant checks over the published points.
pub fn cmd_fixture_check() -> Vec<FixtureCheck> {
    let mut checks = Vec::new();
    for (model, task) in [("olmo3-32b", "gsm8k"), ("olmo3-7b", "flores")] {
        let pool = published_points(model, task);
        let f = pareto_filter(&pool);
        checks.push(FixtureCheck::new(
            &format!("{model}/{task} points are non-dominated"),
            pool.len(),
            f.len(),
        ));
    }
    let gsm = published_frontier("olmo3-32b", "gsm8k");
    checks.push(FixtureCheck::new(
        "complexity at 72.2% gsm8k",
        "4358",
        opt(gsm.complexity_at(0.722)),
    ));
    checks.push(FixtureCheck::new(
        "adaptable within 5000 bits to 72%",
        true,
        gsm.is_adaptable(5000.0, 0.72),
    ));
    checks.push(FixtureCheck::new(
        "complexity above best published",
        "none",
        opt(gsm.complexity_at(0.9)),
    ));
    let flores = published_frontier("olmo3-7b", "flores");
    checks.push(FixtureCheck::new(
        "complexity at 34.43 BLEU flores",
        "3992",
        opt(flores.complexity_at(0.3443)),
    ));
    checks.push(FixtureCheck::new(
        "8e12 pre-training tokens",
        "32 TB",
        human_bytes(tokens_to_bytes(8e12)),
    ));
    checks.push(FixtureCheck::new(
        "37.5e9 post-training tokens",
        "150 GB",
        human_bytes(tokens_to_bytes(37.5e9)),
    ));
    checks
}
