use proptest::prelude::*;
use taskbits::tasks::{
    eval_inputs, evaluate, evaluate_expression, make_pretraining_corpus, make_task, sample_dataset,
    Dataset, EvalResult, GreedyResponder, TaskConfig,
};
use taskbits::toymodel::{NeuralConfig, NeuralLm, Vocab};

const TASKS: [&str; 3] = ["arith", "cipher", "constraint"];

#[test]
fn reference_solver_scores_one_on_sampled_data() {
    for id in TASKS {
        let task = make_task(id, None).unwrap();
        let data = sample_dataset(&task, 1000, 7).unwrap();
        assert_eq!(data.len(), 1000);
        for e in &data.examples {
            assert_eq!(task.score(&e.input, &e.output), 1.0, "{id}: {e:?}");
        }
    }
}

#[test]
fn arith_answers_span_a_range() {
    let task = make_task("arith", None).unwrap();
    let data = sample_dataset(&task, 1000, 7).unwrap();
    let answers: std::collections::BTreeSet<i64> = data
        .examples
        .iter()
        .map(|e| e.output.parse().unwrap())
        .collect();
    assert!(answers.len() > 20);
    assert!(answers.iter().any(|&a| a < 0) || answers.iter().any(|&a| a > 50));
}

#[test]
fn constraint_rule_cases() {
    let task = make_task("constraint", None).unwrap();
    assert_eq!(task.score("low:ABC=", "abc"), 1.0);
    assert_eq!(task.score("low:ABC=", "Abc"), 0.0);
}

#[test]
fn empty_and_repeated_sampling() {
    let task = make_task("cipher", None).unwrap();
    assert!(sample_dataset(&task, 0, 1).unwrap().is_empty());
    assert_eq!(
        sample_dataset(&task, 50, 3).unwrap(),
        sample_dataset(&task, 50, 3).unwrap()
    );
    assert_ne!(
        sample_dataset(&task, 50, 3).unwrap(),
        sample_dataset(&task, 50, 4).unwrap()
    );
}

#[test]
fn corpus_contains_no_evaluation_input() {
    let vocab = Vocab::default_charset();
    let corpus = vocab.decode(&make_pretraining_corpus(&vocab, 1, 400_000).unwrap());
    for id in TASKS {
        let task = make_task(id, None).unwrap();
        for input in eval_inputs(&task, 500, 7) {
            assert!(!corpus.contains(&input), "{id}: {input:?}");
        }
    }
}

#[test]
fn reference_and_padding_responders() {
    for id in TASKS {
        let task = make_task(id, None).unwrap();
        let reference = |prompt: &str, _: usize| task.reference(prompt).unwrap();
        let r = evaluate(&reference, &task, 200, 7, task.max_output_tokens()).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_error, 0.0);
    }
    let arith = make_task("arith", None).unwrap();
    let blank = |_: &str, _: usize| String::new();
    assert_eq!(evaluate(&blank, &arith, 200, 7, 8).unwrap().mean, 0.0);
    assert!(evaluate(&blank, &arith, 0, 7, 8).is_err());
}

#[test]
fn random_init_model_sits_at_the_floor() {
    let vocab = Vocab::default_charset();
    let task = make_task("arith", None).unwrap();
    let m = NeuralLm::random(NeuralConfig::default(), 1);
    let r = evaluate(
        &GreedyResponder::new(&m, &vocab),
        &task,
        500,
        7,
        task.max_output_tokens(),
    )
    .unwrap();
    assert_eq!(r.mean, 0.0);
}

#[test]
fn standard_error_uses_sample_deviation() {
    let r = EvalResult::from_scores(&[1.0, 0.0, 1.0, 0.0]);
    assert_eq!(r.mean, 0.5);
    // sample variance 1/3, divided by n = 4
    assert!((r.std_error - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
}

#[test]
fn unknown_task_and_mismatched_config() {
    assert!(make_task("summarize", None).is_err());
    assert!(make_task("arith", Some(TaskConfig::default_for("cipher").unwrap())).is_err());
}

#[test]
fn dataset_file_roundtrip() {
    let dir = std::env::temp_dir().join(format!("taskbits-ds-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let task = make_task("constraint", None).unwrap();
    let data = sample_dataset(&task, 40, 2).unwrap();
    let path = dir.join("d.tsv");
    data.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap(), data);
}

/// Left-to-right evaluator for `a op b op c` with `*` binding tighter.
fn flat_value(a: i64, op1: char, b: i64, op2: char, c: i64) -> i64 {
    let apply = |x: i64, op: char, y: i64| match op {
        '+' => x + y,
        '-' => x - y,
        _ => x * y,
    };
    if op2 == '*' && op1 != '*' {
        apply(a, op1, b * c)
    } else {
        apply(apply(a, op1, b), op2, c)
    }
}

proptest! {
    #[test]
    fn evaluator_matches_precedence_rules(
        a in 0i64..100, b in 0i64..100, c in 0i64..100,
        op1 in proptest::sample::select(vec!['+', '-', '*']),
        op2 in proptest::sample::select(vec!['+', '-', '*']),
    ) {
        let text = format!("{a}{op1}{b}{op2}{c}");
        prop_assert_eq!(evaluate_expression(&text).unwrap(), flat_value(a, op1, b, op2, c));
        let paren = format!("({a}{op1}{b}){op2}{c}");
        let ab = flat_value(a, op1, b, '+', 0);
        prop_assert_eq!(evaluate_expression(&paren).unwrap(), flat_value(ab, op2, c, '+', 0));
    }

    #[test]
    fn prefixes_are_nested(n in 0usize..60, k in 0usize..60, seed in any::<u64>()) {
        let task = make_task("arith", None).unwrap();
        let data = sample_dataset(&task, n, seed).unwrap();
        let p = data.prefix(k);
        prop_assert_eq!(p.len(), k.min(n));
        prop_assert_eq!(&p.examples[..], &data.examples[..k.min(n)]);
    }

    #[test]
    fn scores_lie_in_unit_interval(id in proptest::sample::select(TASKS.to_vec()), seed in any::<u64>(), out in "[a-z0-9 ]{0,12}") {
        let task = make_task(id, None).unwrap();
        for e in sample_dataset(&task, 5, seed).unwrap().examples {
            let s = task.score(&e.input, &out);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
