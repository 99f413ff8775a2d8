//! Keypoint match counting and ranking.
//!
//! Two signature sets are matched one-to-one by a greedy pass over all
//! candidate pairs sorted by ascending Hamming distance. Ties are ordered by
//! the unordered index pair `(min(i, j), max(i, j))`, which makes the count
//! independent of argument order. Because the pass is greedy in distance
//! order, the matches accepted under threshold `t` are exactly the accepted
//! pairs with distance `<= t` of one unthresholded pass, so one pass serves
//! every threshold.

use rayon::prelude::*;

use super::ImageIndex;
use crate::selection::{hamming, Signature};
use crate::{Error, Result};

fn check_lengths(a: &[Signature], b: &[Signature]) -> Result<()> {
    let len = a.first().or(b.first()).map(Signature::len);
    if let Some(len) = len {
        if let Some(s) = a.iter().chain(b).find(|s| s.len() != len) {
            return Err(Error::Usage(format!(
                "signature lengths differ ({} vs {len} bits)",
                s.len()
            )));
        }
    }
    Ok(())
}

/// Distances of the accepted one-to-one matches, ascending.
pub fn matched_distances(a: &[Signature], b: &[Signature]) -> Result<Vec<u32>> {
    check_lengths(a, b)?;
    let mut candidates = Vec::with_capacity(a.len() * b.len());
    for (i, sa) in a.iter().enumerate() {
        for (j, sb) in b.iter().enumerate() {
            let d = hamming(sa, sb)?;
            candidates.push((d, i.min(j) as u32, i.max(j) as u32, i as u32, j as u32));
        }
    }
    candidates.sort_unstable();
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::new();
    for (d, _, _, i, j) in candidates {
        let (i, j) = (i as usize, j as usize);
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push(d);
        }
    }
    Ok(out)
}

/// Number of one-to-one keypoint matches with distance `<= threshold`.
pub fn match_count(a: &[Signature], b: &[Signature], threshold: u32) -> Result<usize> {
    let d = matched_distances(a, b)?;
    Ok(d.partition_point(|&x| x <= threshold))
}

/// Accepted match distances for every unordered image pair of an index.
pub struct MatchTable {
    n: usize,
    bits: usize,
    // upper triangle, row-major: (i, j) with i < j
    pairs: Vec<Vec<u32>>,
    groups: Vec<String>,
}

impl MatchTable {
    pub fn build(index: &ImageIndex) -> Result<Self> {
        let n = index.len();
        let coords: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let pairs = coords
            .par_iter()
            .map(|&(i, j)| matched_distances(&index.entries()[i].signatures, &index.entries()[j].signatures))
            .collect::<Result<Vec<_>>>()?;
        Ok(MatchTable {
            n,
            bits: index.signature_bits(),
            pairs,
            groups: index.entries().iter().map(|e| e.group.clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i.min(j), i.max(j));
        // rows before i hold (n-1) + (n-2) + ... + (n-i) entries
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn count(&self, i: usize, j: usize, threshold: u32) -> usize {
        assert!(i != j && i < self.n && j < self.n);
        self.pairs[self.slot(i, j)].partition_point(|&x| x <= threshold)
    }

    /// The `k` images with most matches to `query` (ties: lower id first),
    /// as `(image id, match count)`.
    pub fn retrieve(&self, query: usize, k: usize, threshold: u32) -> Result<Vec<(usize, usize)>> {
        if query >= self.n {
            return Err(Error::Usage(format!("query {query} not in an index of {}", self.n)));
        }
        if k == 0 {
            return Err(Error::Param("k must be at least 1".into()));
        }
        let mut ranked: Vec<(usize, usize)> = (0..self.n)
            .filter(|&j| j != query)
            .map(|j| (j, self.count(query, j, threshold)))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked)
    }

    /// Mean over queries of (co-group images in the top `k`) / `k`.
    pub fn precision_at_k(&self, k: usize, threshold: u32) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::Usage("precision of an empty index".into()));
        }
        let per_query = (0..self.n)
            .map(|q| {
                let hits = self
                    .retrieve(q, k, threshold)?
                    .iter()
                    .filter(|(j, _)| self.groups[*j] == self.groups[q])
                    .count();
                Ok(hits as f64 / k as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(per_query.iter().sum::<f64>() / self.n as f64)
    }

    /// Sweeps every threshold `0..=b`; returns the one with the highest
    /// precision@k (smallest on ties) and that precision.
    pub fn tune_threshold(&self, k: usize) -> Result<(u32, f64)> {
        let scores = (0..=self.bits as u32)
            .into_par_iter()
            .map(|t| self.precision_at_k(k, t).map(|p| (t, p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(scores
            .into_iter()
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn random_sigs(rng: &mut Rng, n: usize, bits: usize) -> Vec<Signature> {
        (0..n)
            .map(|_| Signature::from_bits((0..bits).map(|_| rng.bernoulli(0.5))))
            .collect()
    }

    #[test]
    fn self_match_at_zero() {
        let mut rng = Rng::new(1);
        let a = random_sigs(&mut rng, 20, 64);
        assert_eq!(match_count(&a, &a, 0).unwrap(), 20);
    }

    #[test]
    fn threshold_below_all_distances() {
        let a = vec![Signature::from_bits([false; 16])];
        let b = vec![Signature::from_bits([true; 16]), Signature::from_bits((0..16).map(|i| i < 10))];
        assert_eq!(match_count(&a, &b, 9).unwrap(), 0);
        assert_eq!(match_count(&a, &b, 10).unwrap(), 1);
    }

    #[test]
    fn length_mismatch() {
        let a = vec![Signature::zeros(8)];
        let b = vec![Signature::zeros(16)];
        assert!(matches!(match_count(&a, &b, 4), Err(Error::Usage(_))));
    }

    /// Greedy-ascending assignment over an explicit distance matrix.
    #[allow(clippy::needless_range_loop)]
    fn greedy_oracle(dist: &[[u32; 3]; 3], t: u32) -> usize {
        let mut cands: Vec<(u32, usize, usize, usize, usize)> = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if dist[i][j] <= t {
                    cands.push((dist[i][j], i.min(j), i.max(j), i, j));
                }
            }
        }
        cands.sort();
        let (mut ua, mut ub) = ([false; 3], [false; 3]);
        let mut count = 0;
        for (_, _, _, i, j) in cands {
            if !ua[i] && !ub[j] {
                ua[i] = true;
                ub[j] = true;
                count += 1;
            }
        }
        count
    }

    #[test]
    fn three_by_three_against_oracle() {
        // signatures built so that the distance matrix is fully determined
        // by which of 8 disjoint bit blocks each signature sets
        let mk = |ones: &[usize]| Signature::from_bits((0..32).map(|k| ones.contains(&(k / 4))));
        let a = vec![mk(&[0]), mk(&[1]), mk(&[0, 1])];
        let b = vec![mk(&[0]), mk(&[2]), mk(&[0, 1, 2])];
        let dist: [[u32; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| hamming(&a[i], &b[j]).unwrap()));
        for t in 0..=32 {
            assert_eq!(match_count(&a, &b, t).unwrap(), greedy_oracle(&dist, t), "t = {t}");
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_monotone(seed in any::<u64>(), na in 0usize..12, nb in 0usize..12) {
            let mut rng = Rng::new(seed);
            // few bits so that distance ties are common
            let a = random_sigs(&mut rng, na, 6);
            let b = random_sigs(&mut rng, nb, 6);
            let mut prev = 0;
            for t in 0..=6 {
                let ab = match_count(&a, &b, t).unwrap();
                prop_assert_eq!(ab, match_count(&b, &a, t).unwrap());
                prop_assert!(ab >= prev);
                prev = ab;
            }
        }
    }
}
