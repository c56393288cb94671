//! Dataset plumbing: the serializer round-trip, the equal-parts partition
//! protocol, the parser's error taxonomy, and the synthetic stand-in corpus.

use dolfree::data::{
    build_task, synthetic_binary_dataset, DataError, DataTaskConfig, Dataset, SelectOptions,
};
use dolfree::losses::LossStream;
use proptest::prelude::*;
use std::sync::Arc;

fn example_rows() -> impl Strategy<Value = Vec<(f64, Vec<(u32, f64)>)>> {
    let label = prop_oneof![Just(-1.0f64), Just(1.0), Just(3.0), -10.0f64..10.0];
    // Distinct 0-based indices in arbitrary order with finite values.
    let pairs = proptest::collection::btree_map(0u32..80, -1.0e6f64..1.0e6, 0..12)
        .prop_map(|m| m.into_iter().collect::<Vec<_>>())
        .prop_shuffle();
    proptest::collection::vec((label, pairs), 1..60)
}

proptest! {
    #[test]
    fn writing_then_parsing_reproduces_every_example(rows in example_rows()) {
        let mut features = 0usize;
        for (_, pairs) in &rows {
            for &(i, _) in pairs {
                features = features.max(i as usize + 1);
            }
        }
        let mut classes: Vec<f64> = rows.iter().map(|(l, _)| *l).collect();
        classes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        classes.dedup();
        let original = Dataset {
            examples: rows.iter().map(|(_, p)| Arc::from(p.clone())).collect(),
            labels: rows.iter().map(|(l, _)| *l).collect(),
            features,
            classes,
        };

        let mut buf = Vec::new();
        original.write_libsvm(&mut buf).unwrap();
        let back = Dataset::parse_libsvm(&buf[..]).unwrap();

        prop_assert_eq!(back.len(), original.len());
        prop_assert_eq!(back.features, original.features);
        for i in 0..original.len() {
            prop_assert_eq!(back.labels[i], original.labels[i]);
            prop_assert_eq!(&back.examples[i][..], &original.examples[i][..]);
        }
    }
}

#[test]
fn ten_examples_over_three_nodes_run_for_nine_rounds() {
    let ds = synthetic_binary_dataset(10, 16, 4);
    let task =
        build_task(&ds, 3, &DataTaskConfig::default(), &SelectOptions::default()).unwrap();
    // floor(10 / 3) = 3 examples per node, each part replayed 3 times.
    assert_eq!(task.stream.rounds(), 9);
    assert_eq!(task.stream.nodes(), 3);
    let x0 = task.full_info_init();
    for node in 0..3 {
        for t in 0..6 {
            let now = task.stream.loss(t, node).value(&x0);
            let cycled = task.stream.loss(t + 3, node).value(&x0);
            assert_eq!(now, cycled, "node {node} must replay its part verbatim");
        }
    }
}

#[test]
fn parts_are_contiguous_in_selection_order() {
    let ds = synthetic_binary_dataset(12, 16, 8);
    let task =
        build_task(&ds, 4, &DataTaskConfig::default(), &SelectOptions::default()).unwrap();
    for node in 0..4usize {
        for offset in 0..3usize {
            let inst = task.stream.loss(offset, node);
            let expect = &ds.examples[node * 3 + offset];
            match inst {
                dolfree::losses::LossInstance::HingeL2 { example, .. } => {
                    assert_eq!(&example[..], &expect[..]);
                }
                other => panic!("expected hinge losses, got {other:?}"),
            }
        }
    }
}

#[test]
fn parser_error_taxonomy_points_at_the_right_lines() {
    assert!(matches!(Dataset::parse_libsvm("".as_bytes()), Err(DataError::Empty)));
    assert!(matches!(
        Dataset::parse_libsvm("# only a comment\n\n".as_bytes()),
        Err(DataError::Empty)
    ));
    match Dataset::parse_libsvm("+1 1:1\n+1 2:two\n".as_bytes()) {
        Err(DataError::BadFeature { line, token }) => {
            assert_eq!(line, 2);
            assert_eq!(token, "2:two");
        }
        other => panic!("wanted BadFeature, got {other:?}"),
    }
    match Dataset::parse_libsvm("+1 1:1\n-1 3:1 2:2 3:5\n".as_bytes()) {
        Err(DataError::DuplicateIndex { line, index }) => {
            assert_eq!(line, 2);
            assert_eq!(index, 3);
        }
        other => panic!("wanted DuplicateIndex, got {other:?}"),
    }
    // Out-of-order indices alone are fine.
    let ds = Dataset::parse_libsvm("+1 5:1 2:2\n".as_bytes()).unwrap();
    assert_eq!(ds.features, 5);
    assert_eq!(&ds.examples[0][..], &[(4, 1.0), (1, 2.0)]);
}

#[test]
fn file_based_parse_reads_and_reports_io() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.txt");
    std::fs::write(&path, "+1 1:0.5 2:1\n-1 1:-1\n").unwrap();
    let ds = Dataset::from_path(&path).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.features, 2);
    assert!(matches!(
        Dataset::from_path(dir.path().join("absent.txt")),
        Err(DataError::Io(_))
    ));
}

#[test]
fn too_few_examples_for_the_node_count_is_rejected() {
    let ds = synthetic_binary_dataset(3, 16, 1);
    match build_task(&ds, 4, &DataTaskConfig::default(), &SelectOptions::default()) {
        Err(DataError::TooFewExamples { needed: 4, got: 3 }) => {}
        Err(other) => panic!("wanted TooFewExamples, got {other:?}"),
        Ok(_) => panic!("wanted TooFewExamples, got a task"),
    }
}

#[test]
fn synthetic_corpus_is_deterministic_and_balanced_enough() {
    let a = synthetic_binary_dataset(200, 24, 11);
    let b = synthetic_binary_dataset(200, 24, 11);
    let c = synthetic_binary_dataset(200, 24, 12);
    assert_eq!(a.len(), 200);
    assert_eq!(a.features, 24);
    assert_eq!(a.classes, vec![-1.0, 1.0]);
    for i in 0..200 {
        assert_eq!(a.labels[i], b.labels[i]);
        assert_eq!(&a.examples[i][..], &b.examples[i][..]);
        assert!(a.labels[i] == 1.0 || a.labels[i] == -1.0);
        assert!(a.examples[i].iter().all(|&(j, v)| (j as usize) < 24 && v == 1.0));
    }
    let differs = (0..200).any(|i| a.examples[i] != c.examples[i] || a.labels[i] != c.labels[i]);
    assert!(differs, "different seeds must draw different corpora");
    let positives = a.labels.iter().filter(|&&l| l > 0.0).count();
    assert!(positives >= 40 && positives <= 160, "grossly unbalanced: {positives}");
}
