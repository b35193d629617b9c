use super::Example;
use crate::error::{Error, Result};
use crate::nnet::Rng;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
}

impl Split {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.dev.len(), self.test.len())
    }
}

/// Random train/dev/test partition.
///
/// Dev and test get `floor(ratio * n)` examples and train receives the
/// remainder. Membership is drawn from a seeded shuffle; each part keeps the
/// input order of its members.
pub fn split_corpus(examples: &[Example], ratios: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (train_r, dev_r, test_r) = ratios;
    let parts = [train_r, dev_r, test_r];
    if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidSplit(format!("ratios must be non-negative, got {ratios:?}")));
    }
    if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSplit(format!("ratios must sum to 1, got {ratios:?}")));
    }
    let nonzero = parts.iter().filter(|r| **r > 0.0).count();
    let n = examples.len();
    if n < nonzero {
        return Err(Error::InvalidSplit(format!(
            "{n} examples cannot fill {nonzero} non-empty parts"
        )));
    }

    let n_dev = (dev_r * n as f64).floor() as usize;
    let n_test = (test_r * n as f64).floor() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    Rng::seed_from(seed).shuffle(&mut order);
    // part[i] = 0 train, 1 dev, 2 test
    let mut part = vec![0u8; n];
    for &i in &order[..n_dev] {
        part[i] = 1;
    }
    for &i in &order[n_dev..n_dev + n_test] {
        part[i] = 2;
    }

    let mut split = Split::default();
    for (ex, p) in examples.iter().zip(part) {
        match p {
            0 => split.train.push(ex.clone()),
            1 => split.dev.push(ex.clone()),
            _ => split.test.push(ex.clone()),
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn corpus(n: usize) -> Vec<Example> {
        (0..n)
            .map(|i| Example::new(format!("ex{i}"), vec!["w".into()], "t"))
            .collect()
    }

    #[test]
    fn sixty_twenty_twenty_of_ten() {
        let s = split_corpus(&corpus(10), (0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!(s.sizes(), (6, 2, 2));
    }

    #[test]
    fn fifteen_thousand() {
        let s = split_corpus(&corpus(15000), (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!(s.sizes(), (9000, 3000, 3000));
    }

    #[test]
    fn remainder_goes_to_train() {
        let s = split_corpus(&corpus(11), (0.6, 0.2, 0.2), 3).unwrap();
        assert_eq!(s.sizes(), (7, 2, 2));
    }

    #[test]
    fn deterministic_for_seed() {
        let c = corpus(50);
        let a = split_corpus(&c, (0.6, 0.2, 0.2), 42).unwrap();
        let b = split_corpus(&c, (0.6, 0.2, 0.2), 42).unwrap();
        assert_eq!(a, b);
        let other = split_corpus(&c, (0.6, 0.2, 0.2), 43).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_bad_ratios_and_tiny_corpora() {
        assert!(split_corpus(&corpus(10), (0.5, 0.2, 0.2), 0).is_err());
        assert!(split_corpus(&corpus(10), (1.2, -0.1, -0.1), 0).is_err());
        assert!(split_corpus(&corpus(2), (0.6, 0.2, 0.2), 0).is_err());
        assert!(split_corpus(&corpus(2), (0.5, 0.0, 0.5), 0).is_ok());
    }

    proptest! {
        #[test]
        fn partition_is_exact(n in 3usize..200, seed in any::<u64>()) {
            let c = corpus(n);
            let s = split_corpus(&c, (0.6, 0.2, 0.2), seed).unwrap();
            let ids: Vec<&str> = s.train.iter().chain(&s.dev).chain(&s.test).map(|e| e.id.as_str()).collect();
            prop_assert_eq!(ids.len(), n);
            let unique: HashSet<&str> = ids.iter().copied().collect();
            prop_assert_eq!(unique.len(), n);
        }
    }
}
