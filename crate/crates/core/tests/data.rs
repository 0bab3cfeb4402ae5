use adasa_core::data::{parse_libsvm, split, to_libsvm, SparseDataset, SparseRow};
use proptest::prelude::*;

fn row_strategy() -> impl Strategy<Value = SparseRow> {
    (
        -100.0f64..100.0,
        prop::collection::btree_map(1usize..200, -1e6f64..1e6, 0..12),
    )
        .prop_map(|(label, m)| {
            SparseRow::new(label, m.into_iter().map(|(i, v)| (i - 1, v)).collect()).unwrap()
        })
}

proptest! {
    #[test]
    fn libsvm_round_trip(rows in prop::collection::vec(row_strategy(), 1..30)) {
        let ds = SparseDataset::new(rows).unwrap();
        let text = to_libsvm(&ds);
        let back = parse_libsvm(text.as_bytes()).unwrap();
        prop_assert_eq!(back.rows, ds.rows);
        prop_assert_eq!(to_libsvm(&parse_libsvm(text.as_bytes()).unwrap()), text);
    }

    #[test]
    fn whitespace_is_normalised(rows in prop::collection::vec(row_strategy(), 1..10)) {
        let ds = SparseDataset::new(rows).unwrap();
        let messy: String = to_libsvm(&ds).lines().map(|l| format!("  {}\t # note\n", l.replace(' ', "   "))).collect();
        prop_assert_eq!(parse_libsvm(messy.as_bytes()).unwrap().rows, ds.rows);
    }

    #[test]
    fn split_is_deterministic_disjoint_exhaustive(seed in any::<u64>(), n in 1usize..200) {
        let rows: Vec<SparseRow> = (0..n).map(|i| SparseRow::new(i as f64, vec![(0, 1.0)]).unwrap()).collect();
        let ds = SparseDataset::new(rows).unwrap();
        let a = split(&ds, [4.0, 1.0, 1.0], seed).unwrap();
        let b = split(&ds, [4.0, 1.0, 1.0], seed).unwrap();
        prop_assert_eq!(&a.0.rows, &b.0.rows);
        prop_assert_eq!(&a.1.rows, &b.1.rows);
        prop_assert_eq!(&a.2.rows, &b.2.rows);
        let mut labels: Vec<f64> = [&a.0, &a.1, &a.2].iter().flat_map(|p| p.rows.iter().map(|r| r.label)).collect();
        labels.sort_by(f64::total_cmp);
        prop_assert_eq!(labels, (0..n).map(|i| i as f64).collect::<Vec<_>>());
    }
}
