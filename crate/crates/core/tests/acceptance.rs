//! End-to-end acceptance checks, one line of output per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use proptest::prelude::{prop_assert, prop_assert_eq};
use proptest::strategy::Strategy as _;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskbits::codec::{decode, encode, sequence_nll};
use taskbits::frontier::{merge, pareto_filter, read_points_csv, Point};
use taskbits::harness::{
    build_cell, build_family, cmd_fixture_check, expand, human_bytes, published_frontier,
    run_sweep, tokens_to_bytes, ExperimentConfig, SweepReport,
};
use taskbits::programs::{
    build_adapter, build_full_model, run_program, total_length, ProgramDescriptor, ScriptManifest,
    Strategy, View,
};
use taskbits::tasks::{make_task, sample_dataset};
use taskbits::toymodel::{
    AdapterConfig, Checkpoint, FitOptions, KgramModel, MatrixId, NeuralConfig, NeuralLm, ProbModel,
    TensorId, Vocab,
};
use taskbits::Token;

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Verdict);

fn check(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: u64, detail: String) -> Verdict {
    check(
        elapsed.as_secs_f64() < limit_s as f64,
        format!(
            "{detail}; {:.1} s (limit {limit_s} s)",
            elapsed.as_secs_f64()
        ),
    )
}

// ---- criteria 1 and 2: codec over 1000 random cases ----

struct CodecCase {
    mismatch: bool,
    code_bits: usize,
    nll: f64,
}

fn sample_from<M: ProbModel>(
    m: &M,
    context: &[Token],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Token> {
    let mut history = context.to_vec();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let p = m.next_distribution(&history).unwrap();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut t = p.len() - 1;
        for (i, q) in p.iter().enumerate() {
            acc += q;
            if u < acc {
                t = i;
                break;
            }
        }
        history.push(t as Token);
        out.push(t as Token);
    }
    out
}

fn run_case<M: ProbModel>(m: &M, rng: &mut ChaCha8Rng) -> CodecCase {
    let vocab = m.vocab_size();
    let ctx_len = rng.random_range(0..=16);
    let context: Vec<Token> = (0..ctx_len)
        .map(|_| rng.random_range(0..vocab) as Token)
        .collect();
    let len = rng.random_range(0..=256);
    let payload = if rng.random_bool(0.5) {
        sample_from(m, &context, len, rng)
    } else {
        (0..len)
            .map(|_| rng.random_range(0..vocab) as Token)
            .collect()
    };
    let precision = [12, 16, 16, 20, 24][rng.random_range(0..5)];
    let code = encode(m, &context, &payload, precision).unwrap();
    let back = decode(m, &context, &code, payload.len(), precision);
    CodecCase {
        mismatch: back.map_or(true, |b| b != payload),
        code_bits: code.len(),
        nll: sequence_nll(m, &context, &payload, precision)
            .unwrap()
            .value(),
    }
}

fn codec_cases() -> &'static (Vec<CodecCase>, Duration) {
    static CASES: OnceLock<(Vec<CodecCase>, Duration)> = OnceLock::new();
    CASES.get_or_init(|| {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(20_241_016);
        let cases = (0..1000)
            .map(|i| {
                let vocab = rng.random_range(3..=80);
                if i % 2 == 0 {
                    let config = NeuralConfig {
                        vocab_size: vocab,
                        window: rng.random_range(1..=8),
                        embed_dim: rng.random_range(1..=8),
                        hidden_dim: rng.random_range(1..=16),
                    };
                    // Scaled weights give peaked distributions.
                    let m = NeuralLm::random(config, rng.random());
                    let scale = [1.0, 4.0, 16.0][rng.random_range(0..3)];
                    let mut p = m.params().clone();
                    for id in [TensorId::OutputWeight, TensorId::OutputBias] {
                        p.get_mut(id)
                            .data_mut()
                            .iter_mut()
                            .for_each(|x| *x *= scale);
                    }
                    run_case(&m.with_params(p).unwrap(), &mut rng)
                } else {
                    let chars: String = (0..vocab - 2)
                        .map(|k| char::from_u32(0x100 + k as u32).unwrap())
                        .collect();
                    let v = Vocab::from_chars(&chars).unwrap();
                    let train: Vec<Vec<Token>> = (0..8)
                        .map(|_| {
                            (0..64)
                                .map(|_| rng.random_range(0..(vocab / 3).max(2)) as Token)
                                .collect()
                        })
                        .collect();
                    let order = rng.random_range(1..=3);
                    let alpha = [0.01, 0.1, 1.0][rng.random_range(0..3)];
                    run_case(
                        &KgramModel::fit(&v, order, alpha, &train).unwrap(),
                        &mut rng,
                    )
                }
            })
            .collect();
        (cases, start.elapsed())
    })
}

fn criterion_1() -> Verdict {
    let (cases, elapsed) = codec_cases();
    let mismatches = cases.iter().filter(|c| c.mismatch).count();
    let verdict = check(
        mismatches == 0,
        format!("{} roundtrips, {mismatches} mismatches", cases.len()),
    );
    verdict.and_then(|d| within(*elapsed, 60, d))
}

fn criterion_2() -> Verdict {
    let (cases, _) = codec_cases();
    let worst = cases
        .iter()
        .map(|c| c.code_bits as f64 - c.nll)
        .fold(f64::NEG_INFINITY, f64::max);
    let over = cases
        .iter()
        .filter(|c| c.code_bits as f64 > c.nll + 2.0)
        .count();
    check(
        over == 0,
        format!(
            "{over} of {} cases exceed NLL + 2; worst excess {worst:.3} bits",
            cases.len()
        ),
    )
}

// ---- criterion 3: gradients ----

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let config = NeuralConfig {
        vocab_size: 6,
        window: 4,
        embed_dim: 4,
        hidden_dim: 8,
    };
    let batch: Vec<Vec<Token>> = vec![vec![2, 3, 4, 5, 1, 2, 2], vec![5, 4, 3, 1], vec![3, 2]];
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..3 {
        let m = NeuralLm::random(config, seed);
        let (_, grad) = m.loss_and_grad(&batch).unwrap();
        for id in TensorId::ALL {
            for i in 0..m.tensor(id).len() {
                let at = |delta: f64| {
                    let mut p = m.params().clone();
                    p.get_mut(id).data_mut()[i] += delta;
                    m.with_params(p).unwrap().loss(&batch).unwrap()
                };
                let numeric = (at(eps) - at(-eps)) / (2.0 * eps);
                let analytic = grad.get(id).data()[i];
                let scale = analytic.abs().max(numeric.abs());
                if scale > 1e-7 {
                    worst = worst.max((analytic - numeric).abs() / scale);
                    checked += 1;
                }
            }
        }
    }
    check(
        worst <= 1e-5,
        format!("{checked} entries, max relative error {worst:.2e}"),
    )
    .and_then(|d| within(start.elapsed(), 10, d))
}

// ---- criterion 4: Pareto filter vs quadratic oracle ----

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut largest = 0;
    for pool_index in 0..100 {
        let n = if pool_index == 0 {
            10_000
        } else {
            rng.random_range(0..=10_000)
        };
        largest = largest.max(n);
        let grid = rng.random_bool(0.5);
        let points: Vec<Point> = (0..n)
            .map(|_| {
                if grid {
                    Point::new(
                        rng.random_range(0..200) as f64,
                        rng.random_range(0..100) as f64 / 100.0,
                        "p",
                    )
                } else {
                    Point::new(rng.random::<f64>() * 1e6, rng.random::<f64>(), "p")
                }
            })
            .collect();
        let got: BTreeSet<_> = pareto_filter(&points)
            .points()
            .iter()
            .map(common::key)
            .collect();
        if got != common::brute_force_front(&points) {
            return Err(format!(
                "pool {pool_index} of {n} points differs from the oracle"
            ));
        }
    }
    within(
        start.elapsed(),
        30,
        format!("100 pools up to {largest} points, all equal"),
    )
}

// ---- criterion 5: replay soundness ----

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let config = common::tiny_config();
    let family = common::tiny_family();
    let task = make_task("arith", None).unwrap();
    let data = sample_dataset(&task, config.sweep.train_examples, config.sweep.seed).unwrap();
    let manifest = ScriptManifest::measured();
    let dir = common::scratch_dir("acceptance-replay");
    let mut strategies = BTreeSet::new();
    let mut count = 0;
    for ck in [&family.pretrained, &family.posttrained] {
        for cell in expand(&config.sweep.strategies) {
            let built = build_cell(&cell, ck, &task, &data, &config.sweep)
                .map_err(|e| format!("{}: {e}", cell.label()))?;
            let kappa = total_length(&built.descriptor, &manifest)
                .unwrap()
                .total_bits();
            let tau = built
                .program
                .evaluate(
                    ck.vocab(),
                    &task,
                    config.sweep.eval_n,
                    config.sweep.eval_seed,
                )
                .unwrap()
                .mean;
            let path = dir.join(format!("{}-{}.tbp", ck.provenance().name(), cell.label()));
            built.descriptor.save(&path).unwrap();
            let stored = ProgramDescriptor::load(&path).unwrap();
            let (p, _) = run_program(
                ck,
                &stored,
                &task,
                config.sweep.eval_n,
                config.sweep.eval_seed,
                &manifest,
            )
            .map_err(|e| format!("{}: {e}", cell.label()))?;
            if (p.kappa, p.tau) != (kappa, tau) {
                return Err(format!(
                    "{}: builder ({kappa}, {tau}) vs replay ({}, {})",
                    cell.label(),
                    p.kappa,
                    p.tau
                ));
            }
            strategies.insert(stored.strategy);
            count += 1;
        }
    }
    check(
        strategies.len() == Strategy::ALL.len(),
        format!(
            "{count} programs over {} strategies, builder and replay (κ, τ) identical",
            strategies.len()
        ),
    )
    .and_then(|d| within(start.elapsed(), 300, d))
}

// ---- criterion 6: accounting ----

/// Independent parameter count: sum of the five tensor sizes.
fn oracle_params(v: usize, w: usize, de: usize, dh: usize) -> usize {
    v * de + (w * de) * dh + dh + dh * v + v
}

fn criterion_6() -> Verdict {
    let task = make_task("arith", None).unwrap();
    let data = sample_dataset(&task, 8, 1).unwrap();
    let frozen = FitOptions {
        lr: 0.0,
        epochs: 0,
        batch_size: 8,
    };
    // |V| = 70 for the worked example: the default alphabet minus two letters.
    let v70 =
        Vocab::from_chars(" 0123456789+-*()=:abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWX")
            .unwrap();
    let shapes = [
        (v70, 16, 16, 64),
        (Vocab::default_charset(), 32, 16, 64),
        (Vocab::default_charset(), 32, 8, 16),
        (Vocab::default_charset(), 4, 3, 5),
    ];
    let mut checked = 0;
    let mut worked = (0, 0);
    for (vocab, w, de, dh) in shapes {
        let v = vocab.size();
        let ck = Checkpoint::random_init(vocab, w, de, dh, 1);
        let expected_full = 16 * oracle_params(v, w, de, dh) as u64;
        let full = build_full_model(&ck, &task, &data, frozen, 1)
            .unwrap()
            .descriptor
            .payload_param_bits();
        if full != expected_full {
            return Err(format!("full model V={v} w={w}: {full} != {expected_full}"));
        }
        if v == 70 {
            worked.1 = full;
        }
        checked += 1;
        let dims = |m: MatrixId| match m {
            MatrixId::Embedding => (v, de),
            MatrixId::Hidden => (w * de, dh),
            MatrixId::Output => (dh, v),
        };
        for rank in [1, 2, 4] {
            for bits in [2u8, 4, 8, 16] {
                for targets in [vec![MatrixId::Output], MatrixId::ALL.to_vec()] {
                    let config = AdapterConfig {
                        targets: targets.clone(),
                        rank,
                        bits,
                    };
                    let got = build_adapter(&ck, &task, &data, &config, frozen, 1)
                        .unwrap()
                        .descriptor
                        .payload_param_bits();
                    let expected: u64 = targets
                        .iter()
                        .map(|&m| {
                            let (i, o) = dims(m);
                            bits as u64 * (rank * (i + o)) as u64
                        })
                        .sum();
                    if got != expected {
                        return Err(format!(
                            "adapter V={v} r={rank} q={bits}: {got} != {expected}"
                        ));
                    }
                    if v == 70 && rank == 1 && bits == 16 && targets.len() == 1 {
                        worked.0 = got;
                    }
                    checked += 1;
                }
            }
        }
    }
    check(
        worked == (2144, 16 * 22_118),
        format!(
            "{checked} payloads match; worked examples {} bits (r=1, q=16, 64x70) and {} bits (16 x 22 118 params)",
            worked.0, worked.1
        ),
    )
}

// ---- criterion 7: published-point lookups ----

fn criterion_7() -> Verdict {
    let gsm = published_frontier("olmo3-32b", "gsm8k").complexity_at(0.722);
    let flores = published_frontier("olmo3-7b", "flores").complexity_at(0.3443);
    let tb = human_bytes(tokens_to_bytes(8e12));
    let gb = human_bytes(tokens_to_bytes(37.5e9));
    let all = cmd_fixture_check().iter().all(|c| c.pass);
    check(
        gsm == Some(4358.0) && flores == Some(3992.0) && tb == "32 TB" && gb == "150 GB" && all,
        format!(
            "gsm8k {gsm:?} bits, flores {flores:?} bits, {tb}, {gb}, fixture checks pass: {all}"
        ),
    )
}

// ---- criteria 8 and 10: shipped arith sweep ----

struct ShippedSweep {
    config: ExperimentConfig,
    report: SweepReport,
    out: PathBuf,
    elapsed: Duration,
}

fn shipped_sweep() -> &'static ShippedSweep {
    static RUN: OnceLock<ShippedSweep> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let config =
            ExperimentConfig::load(&common::shipped_config_path("arith_checkpoints.json")).unwrap();
        let out = common::scratch_dir("shipped-sweep");
        let family = build_family(&config.pipeline).unwrap();
        let report = run_sweep(&config, &family, &out).unwrap();
        ShippedSweep {
            config,
            report,
            out,
            elapsed: start.elapsed(),
        }
    })
}

fn payload(p: &Point, manifest: &ScriptManifest) -> f64 {
    let s = Strategy::from_name(&p.provenance.strategy).unwrap();
    p.kappa - manifest.script_bits(s).unwrap() as f64
}

/// Least payload among points reaching `tau`.
fn min_payload(points: &[Point], tau: f64, manifest: &ScriptManifest) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.tau >= tau)
        .map(|p| payload(p, manifest))
        .min_by(f64::total_cmp)
}

fn criterion_8() -> Verdict {
    let run = shipped_sweep();
    let failed = run
        .report
        .records
        .iter()
        .filter(|r| r.error.is_some())
        .count();
    let f = &run.report.frontiers;
    let max = |tag: &str| f[tag].max_tau().unwrap_or(0.0);
    let (random, pre, post) = (max("random-init"), max("pretrained"), max("posttrained"));
    let a = pre >= random + 0.2;
    // The target is the post-trained maximum less the 0.02 tolerance.
    let manifest = ScriptManifest::measured();
    let target = post - 0.02;
    let post_payload = min_payload(&run.report.pools["posttrained"], target, &manifest);
    let pre_payload = min_payload(&run.report.pools["pretrained"], target, &manifest);
    let b = match (post_payload, pre_payload) {
        (Some(x), Some(y)) => x <= 0.01 * y,
        _ => false,
    };
    check(
        a && b,
        format!(
            "(a) max τ random-init {random:.3}, pretrained {pre:.3}: {}; (b) τ ≥ {target:.3}: post-trained payload {post_payload:?} bits, pretrained payload {pre_payload:?} bits: {}; {} cells, {failed} failed",
            if a { "ok" } else { "short" },
            if b { "ok" } else { "short" },
            run.report.records.len()
        ),
    )
    .and_then(|d| within(run.elapsed, 900, d))
}

fn criterion_10() -> Verdict {
    let run = shipped_sweep();
    let tag = "pretrained";
    let merged = merge([&run.report.pools[tag][..]]);
    let (lo, hi) = merged.endpoints().ok_or("empty frontier")?;
    let view = |p: &Point| Strategy::from_name(&p.provenance.strategy).unwrap().view();
    let ok = view(lo) == View::InferenceControl
        && matches!(view(hi), View::Parametric | View::FullModel);
    check(
        ok,
        format!(
            "{} sweep on {tag}: min κ {} ({:?}), max κ {} ({:?}); frontier strategies {:?}",
            run.config.sweep.task.id(),
            lo.provenance.strategy,
            lo.kappa,
            hi.provenance.strategy,
            hi.kappa,
            merged.strategies()
        ),
    )
}

// ---- criterion 9: structural invariants ----

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let mut runner = TestRunner::new(RunnerConfig {
        cases: 256,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    let pool = || {
        proptest::collection::vec((0u32..80, 0u32..50), 0..300).prop_map(|v| {
            v.into_iter()
                .map(|(k, t)| Point::new(k as f64, t as f64 / 50.0, "p"))
                .collect::<Vec<_>>()
        })
    };
    runner
        .run(
            &(pool(), pool(), 0.0f64..1.0, 0.0f64..1.0),
            |(a, b, t1, t2)| {
                let fa = pareto_filter(&a);
                prop_assert_eq!(pareto_filter(fa.points()), fa.clone());
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                if let Some(y) = fa.complexity_at(hi) {
                    prop_assert!(fa.complexity_at(lo).is_some_and(|x| x <= y));
                }
                let m = merge([&a[..], &b[..]]);
                for t in [t1, t2] {
                    if let Some(x) = fa.complexity_at(t) {
                        prop_assert!(m.complexity_at(t).is_some_and(|y| y <= x));
                    }
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    let mut stored = 0;
    for entry in std::fs::read_dir(shipped_sweep().out.join("frontiers")).unwrap() {
        let path = entry.unwrap().path();
        let points = read_points_csv(std::fs::File::open(&path).unwrap()).unwrap();
        let f = pareto_filter(&points);
        for w in f.points().windows(2) {
            if f.complexity_at(w[0].tau) > f.complexity_at(w[1].tau) {
                return Err(format!("{} is not monotone", path.display()));
            }
        }
        stored += 1;
    }
    within(
        start.elapsed(),
        10,
        format!("256 random pool pairs and {stored} stored frontiers satisfy monotonicity, superset and idempotence"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "codec losslessness", criterion_1),
        (2, "coding efficiency", criterion_2),
        (3, "gradient correctness", criterion_3),
        (4, "pareto oracle equivalence", criterion_4),
        (5, "replay soundness", criterion_5),
        (6, "accounting exactness", criterion_6),
        (7, "published-point lookups", criterion_7),
        (8, "checkpoint frontier shape", criterion_8),
        (9, "frontier invariants", criterion_9),
        (10, "strategy region structure", criterion_10),
    ];
    let mut failures = Vec::new();
    for (n, name, f) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match verdict {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                println!("criterion {n:>2} FAIL  {name}: {detail}");
                failures.push(n);
            }
        }
    }
    if !failures.is_empty() {
        eprintln!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
