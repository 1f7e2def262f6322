//! Pareto frontiers over evaluated `(κ, τ)` points and the complexity
//! estimates read off them.
//!
//! Every value here is an upper-bound *estimate*: a frontier point is a
//! witness program, and the absence of a point means no witness was found.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a point came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointProvenance {
    pub strategy: String,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, String>,
    pub seed: u64,
    pub n_eval: usize,
    /// Path of the descriptor file that realizes the point, if stored.
    #[serde(default)]
    pub witness: Option<String>,
}

/// One evaluated program: length `κ` in bits and score `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub kappa: f64,
    pub tau: f64,
    pub provenance: PointProvenance,
}

impl Point {
    pub fn new(kappa: f64, tau: f64, strategy: &str) -> Self {
        Self {
            kappa,
            tau,
            provenance: PointProvenance {
                strategy: strategy.to_string(),
                ..PointProvenance::default()
            },
        }
    }

    /// `self` dominates `other`: no longer, no worse, and strictly better
    /// in at least one coordinate.
    pub fn dominates(&self, other: &Point) -> bool {
        self.kappa <= other.kappa
            && self.tau >= other.tau
            && (self.kappa < other.kappa || self.tau > other.tau)
    }
}

/// Non-dominated points, sorted by `κ` ascending (and so by `τ` ascending).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFrontier {
    points: Vec<Point>,
}

/// The non-dominated subset of `points`. Among exact `(κ, τ)` duplicates
/// the earliest is kept.
pub fn pareto_filter(points: &[Point]) -> ParetoFrontier {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .kappa
            .total_cmp(&points[j].kappa)
            .then(points[j].tau.total_cmp(&points[i].tau))
            .then(i.cmp(&j))
    });
    let mut kept: Vec<Point> = Vec::new();
    for i in order {
        let p = &points[i];
        if kept.last().is_none_or(|best| p.tau > best.tau) {
            kept.push(p.clone());
        }
    }
    ParetoFrontier { points: kept }
}

/// Frontier of the union of several pools, provenance kept.
pub fn merge<'a>(pools: impl IntoIterator<Item = &'a [Point]>) -> ParetoFrontier {
    let all: Vec<Point> = pools.into_iter().flat_map(|p| p.iter().cloned()).collect();
    pareto_filter(&all)
}

impl ParetoFrontier {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shortest frontier point reaching `tau_target`.
    pub fn witness_at(&self, tau_target: f64) -> Option<&Point> {
        self.points.iter().find(|p| p.tau >= tau_target)
    }

    /// Estimated `C(T_τ | M)`: minimum `κ` among points with `τ ≥ tau_target`.
    pub fn complexity_at(&self, tau_target: f64) -> Option<f64> {
        self.witness_at(tau_target).map(|p| p.kappa)
    }

    /// A witness of `(κ, τ)`-adaptability exists within the budget.
    /// `false` means none was found, not that none exists.
    pub fn is_adaptable(&self, kappa_budget: f64, tau_target: f64) -> bool {
        self.complexity_at(tau_target)
            .is_some_and(|k| k <= kappa_budget)
    }

    pub fn max_tau(&self) -> Option<f64> {
        self.points.last().map(|p| p.tau)
    }

    /// Lowest-`κ` and highest-`κ` points.
    pub fn endpoints(&self) -> Option<(&Point, &Point)> {
        Some((self.points.first()?, self.points.last()?))
    }

    pub fn strategies(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self
            .points
            .iter()
            .map(|p| p.provenance.strategy.as_str())
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Writes `kappa_bits, tau, strategy, hyperparams, seed, n_eval,
    /// witness_descriptor_path` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_points_csv(&self.points, out)
    }
}

/// Difference of upper bounds `Ĉ(T_τ | ref) − Ĉ(T_τ | M)`. Its sign is not
/// guaranteed, since both sides are estimates.
pub fn information_estimate(
    reference: &ParetoFrontier,
    conditioned: &ParetoFrontier,
    tau_target: f64,
) -> Option<f64> {
    Some(reference.complexity_at(tau_target)? - conditioned.complexity_at(tau_target)?)
}

const CSV_HEADER: [&str; 7] = [
    "kappa_bits",
    "tau",
    "strategy",
    "hyperparams",
    "seed",
    "n_eval",
    "witness_descriptor_path",
];

fn encode_hyperparams(h: &BTreeMap<String, String>) -> String {
    h.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_hyperparams(s: &str) -> Result<BTreeMap<String, String>> {
    s.split(';')
        .filter(|f| !f.is_empty())
        .map(|f| {
            f.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::format("frontier csv", format!("bad hyperparameter {f:?}")))
        })
        .collect()
}

pub fn write_points_csv<W: Write>(points: &[Point], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in points {
        let v = &p.provenance;
        w.write_record([
            p.kappa.to_string(),
            p.tau.to_string(),
            v.strategy.clone(),
            encode_hyperparams(&v.hyperparams),
            v.seed.to_string(),
            v.n_eval.to_string(),
            v.witness.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<Point>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::format("frontier csv", "unexpected header"));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::format("frontier csv", format!("bad {what} {s:?}")))
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            Ok(Point {
                kappa: num(field(0), "kappa")?,
                tau: num(field(1), "tau")?,
                provenance: PointProvenance {
                    strategy: field(2).to_string(),
                    hyperparams: decode_hyperparams(field(3))?,
                    seed: num(field(4), "seed")? as u64,
                    n_eval: num(field(5), "n_eval")? as usize,
                    witness: Some(field(6).to_string()).filter(|s| !s.is_empty()),
                },
            })
        })
        .collect()
}
