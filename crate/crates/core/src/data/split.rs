use rand::seq::SliceRandom;

use super::SparseDataset;
use crate::rng::stream;
use crate::{Error, Result};

/// Shuffled train/validation/test partition. Part sizes follow the largest
/// remainder rule, so they always sum to the row count.
pub fn split(
    ds: &SparseDataset,
    ratios: [f64; 3],
    seed: u64,
) -> Result<(SparseDataset, SparseDataset, SparseDataset)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sizes = part_sizes(ds.len(), ratios)?;
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut stream(seed, 0));
    let (a, rest) = idx.split_at(sizes[0]);
    let (b, c) = rest.split_at(sizes[1]);
    Ok((ds.subset(a), ds.subset(b), ds.subset(c)))
}

pub fn part_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Precondition(format!(
            "split ratios must be finite and nonnegative, got {ratios:?}"
        )));
    }
    let total: f64 = ratios.iter().sum();
    if total <= 0.0 {
        return Err(Error::Precondition("split ratios sum to zero".into()));
    }
    let exact: Vec<f64> = ratios.iter().map(|r| r / total * n as f64).collect();
    let mut sizes = [0usize; 3];
    for k in 0..3 {
        sizes[k] = exact[k].floor() as usize;
    }
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| {
        (exact[j] - exact[j].floor())
            .total_cmp(&(exact[i] - exact[i].floor()))
            .then(i.cmp(&j))
    });
    let mut left = n - sizes.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if ratios[k] > 0.0 {
            sizes[k] += 1;
            left -= 1;
        }
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SparseRow;

    fn rows(n: usize) -> SparseDataset {
        SparseDataset::new(
            (0..n)
                .map(|i| SparseRow::new(i as f64, vec![]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn four_one_one() {
        let (a, b, c) = split(&rows(6), [4.0, 1.0, 1.0], 3).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (4, 1, 1));
    }

    #[test]
    fn all_train() {
        let (a, b, c) = split(&rows(7), [1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (7, 0, 0));
    }

    #[test]
    fn remainders() {
        assert_eq!(part_sizes(10, [1.0, 1.0, 1.0]).unwrap(), [4, 3, 3]);
        assert_eq!(part_sizes(1, [0.0, 0.0, 1.0]).unwrap(), [0, 0, 1]);
        assert!(part_sizes(3, [0.0, 0.0, 0.0]).is_err());
        assert!(part_sizes(3, [-1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(
            split(&SparseDataset::default(), [4.0, 1.0, 1.0], 0).unwrap_err(),
            Error::EmptyDataset
        );
    }

    #[test]
    fn deterministic_and_disjoint() {
        let ds = rows(50);
        let p1 = split(&ds, [4.0, 1.0, 1.0], 11).unwrap();
        let p2 = split(&ds, [4.0, 1.0, 1.0], 11).unwrap();
        assert_eq!(p1, p2);
        let mut labels: Vec<f64> = [&p1.0, &p1.1, &p1.2]
            .iter()
            .flat_map(|d| d.rows.iter().map(|r| r.label))
            .collect();
        labels.sort_by(f64::total_cmp);
        assert_eq!(labels, (0..50).map(|i| i as f64).collect::<Vec<_>>());
    }
}
