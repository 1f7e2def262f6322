mod common;

use taskbits::frontier::{pareto_filter, Point};
use taskbits::harness::{
    build_family, cmd_accounting, cmd_fixture_check, cmd_plot, cmd_replay, expand, load_or_build,
    plot_coordinates, published_points, render_svg, run_sweep, ExperimentConfig, PromptGrid,
    RunStore, Series, StrategyGrids,
};
use taskbits::toymodel::PretrainOptions;

fn base_only(mut config: ExperimentConfig) -> ExperimentConfig {
    config.sweep.strategies = StrategyGrids {
        base: true,
        ..StrategyGrids::default()
    };
    config
}

#[test]
fn single_base_cell_gives_a_single_point_frontier() {
    let config = base_only(common::tiny_config());
    let out = common::scratch_dir("base-sweep");
    let report = run_sweep(&config, common::tiny_family(), &out).unwrap();
    assert_eq!(report.records.len(), 1);
    let f = &report.frontiers["pretrained"];
    assert_eq!(f.len(), 1);
    assert_eq!(f.points()[0].provenance.strategy, "base");
    assert!(out.join("frontiers/arith_pretrained.csv").exists());
    assert!(out.join("frontiers/arith_pretrained_pool.csv").exists());
}

#[test]
fn failing_cells_are_recorded_not_fatal() {
    let mut config = base_only(common::tiny_config());
    config.sweep.strategies.icl = Some(PromptGrid {
        examples: vec![30],
        explanation: None,
    });
    let out = common::scratch_dir("fail-sweep");
    let report = run_sweep(&config, common::tiny_family(), &out).unwrap();
    assert_eq!(report.records.len(), 2);
    let failed: Vec<_> = report
        .records
        .iter()
        .filter(|r| r.error.is_some())
        .collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0]
        .error
        .as_ref()
        .unwrap()
        .starts_with("prompt_too_long"));
    assert_eq!(report.pools["pretrained"].len(), 1);
}

#[test]
fn sweep_is_deterministic_and_records_replay() {
    let config = common::tiny_config();
    let family = common::tiny_family();
    let out = common::scratch_dir("full-sweep");
    let first = run_sweep(&config, family, &out).unwrap();
    let second = run_sweep(&config, family, &out).unwrap();
    assert_eq!(first.records.len(), expand(&config.sweep.strategies).len());
    assert!(
        first.records.iter().all(|r| r.error.is_none()),
        "{:?}",
        first.records
    );
    let values = |r: &taskbits::harness::SweepReport| -> Vec<(Option<f64>, Option<f64>)> {
        r.records.iter().map(|x| (x.kappa, x.tau)).collect()
    };
    assert_eq!(values(&first), values(&second));

    let stored = RunStore::new(out.join("runs.jsonl")).read_all().unwrap();
    assert_eq!(stored.len(), 2 * first.records.len());
    for record in &stored[..first.records.len()] {
        assert_eq!(record.tau, record.builder_tau);
        let path = record.descriptor_path.as_ref().unwrap();
        let p = cmd_replay(std::path::Path::new(path), &config, family).unwrap();
        assert_eq!((Some(p.kappa), Some(p.tau)), (record.kappa, record.tau));
    }
}

#[test]
fn zero_step_pretraining_keeps_random_init() {
    let mut config = common::tiny_config().pipeline;
    config.pretrain = PretrainOptions {
        steps: 0,
        ..config.pretrain
    };
    let family = build_family(&config).unwrap();
    assert!(family
        .pretrained
        .model()
        .params()
        .bit_eq(family.random_init.model().params()));
}

#[test]
fn checkpoints_are_reused_for_the_same_config() {
    let config = common::tiny_config();
    let out = common::scratch_dir("reuse");
    let a = load_or_build(&config.pipeline, &out).unwrap();
    let b = load_or_build(&config.pipeline, &out).unwrap();
    assert!(a.posttrained.bit_eq(&b.posttrained));
    assert!(a.pretrained.bit_eq(&common::tiny_family().pretrained));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = common::tiny_config();
    c.sweep.checkpoints = vec![];
    assert!(c.validate().is_err());
    let mut c = common::tiny_config();
    c.sweep.checkpoints = vec!["finetuned".into()];
    assert!(c.validate().is_err());
    let mut c = common::tiny_config();
    c.sweep
        .strategies
        .subset_training
        .as_mut()
        .unwrap()
        .sizes
        .clear();
    assert!(c.validate().is_err());
    let mut c = common::tiny_config();
    c.sweep.strategies.blora_grid.as_mut().unwrap().bits = vec![3];
    assert!(c.validate().is_err());
}

#[test]
fn shipped_config_is_valid_and_large_enough() {
    let config =
        ExperimentConfig::load(&common::shipped_config_path("arith_checkpoints.json")).unwrap();
    assert!(expand(&config.sweep.strategies).len() >= 20);
}

#[test]
fn plots() {
    let empty = render_svg(&[]);
    assert!(empty.contains("class=\"axes\""));
    assert!(!empty.contains("<polyline"));

    let single = render_svg(&[Series {
        label: "one".into(),
        points: vec![Point::new(3000.0, 0.4, "icl")],
    }]);
    assert_eq!(single.matches("class=\"marker\"").count(), 1);

    // Frontier CSVs render as polylines rising left to right.
    let dir = common::scratch_dir("plot");
    let mut paths = Vec::new();
    for (model, task) in [("olmo3-32b", "gsm8k"), ("olmo3-7b", "flores")] {
        let path = dir.join(format!("{model}_{task}.csv"));
        pareto_filter(&published_points(model, task))
            .write_csv(std::fs::File::create(&path).unwrap())
            .unwrap();
        paths.push(path);
    }
    let refs: Vec<&std::path::Path> = paths.iter().map(|p| p.as_path()).collect();
    let svg = cmd_plot(&refs).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let series: Vec<Series> = paths.iter().map(|p| Series::from_csv(p).unwrap()).collect();
    for coords in plot_coordinates(&series) {
        for w in coords.windows(2) {
            assert!(w[1].0 >= w[0].0);
            // SVG y grows downward.
            assert!(w[1].1 <= w[0].1);
        }
    }
}

#[test]
fn accounting_examples() {
    let r = cmd_accounting(Some(37.5e9), None, 16.0, None);
    assert_eq!(r.bytes, Some(150e9));
    assert_eq!(r.human.as_deref(), Some("150 GB"));
    let r = cmd_accounting(Some(0.0), None, 16.0, None);
    assert_eq!(r.bytes, Some(0.0));
    let r = cmd_accounting(None, Some(3e9), 1.0, Some(3e7));
    assert_eq!(r.ratio, Some(100.0));
}

#[test]
fn fixture_checks_pass() {
    let checks = cmd_fixture_check();
    assert!(checks.len() >= 6);
    for c in checks {
        assert!(c.pass, "{c:?}");
    }
}
