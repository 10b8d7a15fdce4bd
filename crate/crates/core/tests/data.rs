use std::io::Write;

use ovi_core::data::{gen_iid_regression, gen_toy_classification, load_csv, prepare_stream, CsvSchema, LabelColumn, StreamConfig};
use ovi_core::Error;
use proptest::prelude::*;

#[test]
fn toy_conditional_means() {
    let ds = gen_toy_classification(100_000, 1).unwrap();
    for label in [1.0, -1.0] {
        let rows: Vec<&Vec<f64>> = ds.features.iter().zip(&ds.targets).filter(|(_, y)| **y == label).map(|(x, _)| x).collect();
        let n = rows.len() as f64;
        let share = if label > 0.0 { 2.0 / 3.0 } else { 1.0 / 3.0 };
        assert!((n / 1e5 - share).abs() < 3.0 * (2.0f64 / 9.0 / 1e5).sqrt());
        let means: Vec<f64> = (0..2).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        for (j, mean) in means.iter().enumerate() {
            assert!((mean - label).abs() < 0.03, "label {label} coord {j}: {mean}");
        }
        let cov = |a: usize, b: usize| rows.iter().map(|r| (r[a] - means[a]) * (r[b] - means[b])).sum::<f64>() / (n - 1.0);
        let expected = if label > 0.0 { [[1.0, 1.0], [1.0, 3.0]] } else { [[1.0, 0.0], [0.0, 1.0]] };
        for a in 0..2 {
            for b in 0..2 {
                assert!((cov(a, b) - expected[a][b]).abs() < 0.05, "cov[{a}][{b}] = {}", cov(a, b));
            }
        }
    }
}

#[test]
fn generators_are_pure() {
    assert_eq!(gen_toy_classification(50, 7).unwrap(), gen_toy_classification(50, 7).unwrap());
    assert_ne!(gen_toy_classification(50, 7).unwrap(), gen_toy_classification(50, 8).unwrap());
    assert_eq!(
        gen_iid_regression(50, &[1.0, 2.0], 0.5, 3).unwrap(),
        gen_iid_regression(50, &[1.0, 2.0], 0.5, 3).unwrap()
    );
}

fn write_csv(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn csv_loading_and_errors() {
    let f = write_csv("a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n");
    let mut schema = CsvSchema::new(LabelColumn::Name("label".into()), "custom");
    schema.positive_label = Some("yes".into());
    let ds = load_csv(f.path(), &schema).unwrap();
    assert_eq!(ds.targets, vec![1.0, -1.0, 1.0]);
    assert_eq!(ds.features[1], vec![3.0, 4.0]);

    let bad = write_csv("a,b,label\n1,2,yes\n3,x,no\n");
    match load_csv(bad.path(), &schema) {
        Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (3, 2)),
        other => panic!("{other:?}"),
    }

    let mut by_index = CsvSchema::new(LabelColumn::Index(0), "reg");
    by_index.has_header = false;
    by_index.delimiter = b';';
    let g = write_csv("0.5;1;2\n-1.5;3;4\n");
    let reg = load_csv(g.path(), &by_index).unwrap();
    assert_eq!(reg.targets, vec![0.5, -1.5]);
    assert_eq!(reg.dim(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn prepare_keeps_shape_and_labels(n in 2usize..200, seed in any::<u64>(), permute in any::<bool>(), standardize in any::<bool>()) {
        let ds = gen_toy_classification(n, seed).unwrap();
        let cfg = StreamConfig { seed: seed ^ 1, permute, standardize, subsample: None };
        let out = prepare_stream(&ds, &cfg).unwrap();
        prop_assert_eq!(out.len(), ds.len());
        prop_assert_eq!(out.dim(), ds.dim());
        prop_assert!(out.targets.iter().all(|y| *y == 1.0 || *y == -1.0));
        prop_assert_eq!(&out, &prepare_stream(&ds, &cfg).unwrap());
        let mut a = ds.targets.clone();
        let mut b = out.targets.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }
}
