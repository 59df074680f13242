use std::io::Write;

use fairshift::dataset::{inject_random_bias, load_dataset, split, Dataset, DatasetSchema, SplitRatios};
use fairshift::Label;
use proptest::prelude::*;

const SCHEMA: &str = r#"
name = "colors"
delimiter = ","

[label]
column = "y"
positive = ["1"]

[protected]
column = "shade"
equals = ["dark"]

[[columns]]
name = "color"
kind = "categorical"

[[columns]]
name = "size"
kind = "numeric"

[[columns]]
name = "shade"
kind = "categorical"

[[columns]]
name = "y"
kind = "ignore"
"#;

const COLORS: [&str; 5] = ["red", "green", "blue", "teal", "plum"];
const SHADES: [&str; 2] = ["dark", "light"];

fn labeled(n: usize, seed: u64) -> Dataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
    let labels: Vec<Label> = (0..n).map(|_| if rng.random_bool(0.3) { 1 } else { -1 }).collect();
    let protected = (0..n).map(|_| rng.random_bool(0.5)).collect();
    Dataset::from_rows(&rows, labels, protected).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn one_hot_blocks_decode_to_the_file_values(
        rows in prop::collection::vec((0usize..5, -50i32..50, 0usize..2, prop::bool::ANY), 1..40),
    ) {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for r in &rows {
            writeln!(file, "{},{},{},{}", COLORS[r.0], r.1, SHADES[r.2], u8::from(r.3)).unwrap();
        }
        file.flush().unwrap();
        let ds = load_dataset(file.path(), &DatasetSchema::from_toml(SCHEMA).unwrap()).unwrap();
        prop_assert_eq!(ds.n(), rows.len());
        for (i, r) in rows.iter().enumerate() {
            prop_assert_eq!(ds.decode_categorical("color", i), Some(COLORS[r.0]));
            prop_assert_eq!(ds.decode_categorical("shade", i), Some(SHADES[r.2]));
            prop_assert_eq!(ds.protected()[i], r.2 == 0);
            prop_assert_eq!(ds.labels()[i], if r.3 { 1 } else { -1 });
        }
    }

    #[test]
    fn splits_are_a_function_of_size_ratios_and_seed(n in 8usize..300, seed in any::<u64>()) {
        let ds = labeled(n, 3);
        let ratios = SplitRatios::default();
        let a = split(&ds, ratios, seed).unwrap();
        let b = split(&labeled(n, 4), ratios, seed).unwrap();
        prop_assert_eq!(&a.train_rows, &b.train_rows);
        prop_assert_eq!(&a.model_select_rows, &b.model_select_rows);
        prop_assert_eq!(&a.test_rows, &b.test_rows);
        let mut all: Vec<usize> = a.train_rows.iter().chain(&a.model_select_rows).chain(&a.test_rows).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn injection_only_demotes_positives_of_the_bit_zero_group(
        n in 10usize..400, eta in 0.0f64..0.49, seed in any::<u64>(),
    ) {
        let ds = labeled(n, seed ^ 1);
        let b = inject_random_bias(&ds, eta, seed).unwrap();
        for i in 0..n {
            let flipped = b.flipped.binary_search(&i).is_ok();
            let changed = b.biased_labels[i] != ds.labels()[i];
            prop_assert_eq!(flipped, changed);
            if changed {
                prop_assert_eq!(ds.labels()[i], 1);
                prop_assert_eq!(b.biased_labels[i], -1);
                prop_assert_eq!(b.bits[i], 0);
            }
        }
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn synthetic_bit_is_uncorrelated_with_the_original_label() {
    let ds = labeled(60_000, 21);
    let labels: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    for seed in 0..5u64 {
        let b = inject_random_bias(&ds, 0.2, seed).unwrap();
        let bits: Vec<f64> = b.bits.iter().map(|&x| f64::from(x)).collect();
        let r = correlation(&bits, &labels);
        assert!(r.abs() < 0.02, "seed {seed}: corr {r}");
    }
}
