use crate::data_model::LabelValue;
use crate::rng::SeededRng;

use super::PreprocessError;

/// Stratified split; returns sorted (train, test) row indices.
pub fn split_train_test(
    labels: &[LabelValue],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), PreprocessError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PreprocessError::Config(format!(
            "test_fraction {test_fraction} outside (0, 1)"
        )));
    }
    if let Some(i) = labels.iter().position(|l| !l.is_labeled()) {
        return Err(PreprocessError::Unlabeled { row: i });
    }
    let mut rng = SeededRng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [LabelValue::Suspicious, LabelValue::Normal] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < 2 {
            return Err(PreprocessError::DegenerateClass {
                class,
                count: rows.len(),
            });
        }
        rng.shuffle(&mut rows);
        let k = (rows.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&rows[..k]);
        train.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize, pos: usize) -> Vec<LabelValue> {
        (0..n).map(|i| LabelValue::from_bool(i < pos)).collect()
    }

    #[test]
    fn stratification_arithmetic() {
        let y = labels(100, 8);
        let (train, test) = split_train_test(&y, 0.2, 1).unwrap();
        assert_eq!(test.len(), 20);
        let pos = test.iter().filter(|&&i| y[i].is_suspicious()).count();
        assert!((1..=2).contains(&pos));
        assert_eq!(train.len(), 80);
        assert_eq!(split_train_test(&y, 0.2, 1).unwrap(), (train, test));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            split_train_test(&labels(10, 1), 0.2, 0),
            Err(PreprocessError::DegenerateClass { .. })
        ));
        assert!(split_train_test(&labels(10, 5), 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition(n in 4usize..200, pos_frac in 0.1f64..0.9, frac in 0.05f64..0.95, seed: u64) {
            let pos = ((n as f64 * pos_frac) as usize).clamp(2, n - 2);
            let y = labels(n, pos);
            let (train, test) = split_train_test(&y, frac, seed).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for class in [true, false] {
                let total = y.iter().filter(|l| l.is_suspicious() == class).count() as f64;
                let in_test = test.iter().filter(|&&i| y[i].is_suspicious() == class).count() as f64;
                prop_assert!((in_test - total * frac).abs() <= 1.0);
            }
        }
    }
}
