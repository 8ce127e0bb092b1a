use banditbench::data::{ingest_csv, shuffle, CsvSchema, LabeledDataset, Manifest, PreparedRows};
use banditbench::harness::{DataSource, DatasetRef};
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = LabeledDataset> {
    (2usize..5, 1usize..6, 1usize..30).prop_flat_map(|(classes, dim, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, dim), n),
            proptest::collection::vec(0..classes, n),
        )
            .prop_map(move |(features, labels)| LabeledDataset::new(features, labels, classes).unwrap())
    })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arm_contexts_are_unit_block_sparse_and_duplicated(ds in dataset_strategy(), dup in any::<bool>()) {
        let rows = PreparedRows::new(&ds, dup);
        let k = ds.num_classes;
        let d = ds.raw_dim();
        for i in 0..rows.len() {
            let round = rows.round(i).unwrap();
            prop_assert_eq!(round.arms(), k);
            for (arm, c) in round.contexts.iter().enumerate() {
                prop_assert_eq!(c.len(), rows.context_dim());
                prop_assert!((norm(c) - 1.0).abs() < 1e-12);
                let half = if dup { c.len() / 2 } else { c.len() };
                if dup {
                    prop_assert_eq!(&c[..half], &c[half..]);
                }
                for (j, v) in c[..half].iter().enumerate() {
                    if j / d != arm {
                        prop_assert_eq!(*v, 0.0);
                    }
                }
            }
            let label = round.label.unwrap();
            prop_assert_eq!(round.rewards[label], 1.0);
            prop_assert_eq!(round.rewards.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn shuffle_preserves_the_multiset_of_rows(ds in dataset_strategy(), seed in any::<u64>()) {
        let s = shuffle(&ds, seed);
        let key = |d: &LabeledDataset| {
            let mut rows: Vec<(Vec<u64>, usize)> = d
                .features
                .iter()
                .zip(&d.labels)
                .map(|(x, &l)| (x.iter().map(|v| v.to_bits()).collect(), l))
                .collect();
            rows.sort();
            rows
        };
        prop_assert_eq!(key(&s), key(&ds));
        prop_assert_eq!(shuffle(&ds, seed), s);
    }
}

#[test]
fn csv_file_to_bandit_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    std::fs::write(&path, "colour,size,class\nred,1.5,a\nblue,2.0,b\nred,?,a\ngreen,0.5,c\n").unwrap();
    let schema = CsvSchema::parse("header = true\nlabel = class\ndefault = categorical\nnumeric = size\n").unwrap();
    let ds = ingest_csv(&path, &schema).unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.dropped_rows, 1);
    assert_eq!(ds.num_classes, 3);
    // Three colour levels plus one numeric column.
    assert_eq!(ds.raw_dim(), 4);

    let manifest = Manifest::build(&ds, &[path.clone()], true).unwrap();
    assert_eq!(manifest.context_dim, 2 * 3 * 4);
    let mpath = dir.path().join("manifest.json");
    manifest.write(&mpath).unwrap();
    assert_eq!(Manifest::read(&mpath).unwrap(), manifest);

    let source = DatasetRef::parse(&format!("csv:{}", path.display())).unwrap();
    assert!(matches!(source, DatasetRef::Csv { schema: None, .. }));
    let env = DataSource::Classification(ds.into()).environment(0, true).unwrap();
    assert_eq!(env.len(), 3);
    assert_eq!(env.arms(), 3);
    assert_eq!(env.context_dim(), 24);
}

#[test]
fn zero_rows_become_e1() {
    let ds = LabeledDataset::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]], vec![0, 1], 2).unwrap();
    let rows = PreparedRows::new(&ds, false);
    assert_eq!(rows.zero_rows, 1);
    assert_eq!(rows.rows[0], [1.0, 0.0]);
    assert_eq!(rows.rows[1], [0.6, 0.8]);
}
