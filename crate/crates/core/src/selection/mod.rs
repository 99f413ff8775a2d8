//! Choosing `b` bits out of a pool.
//!
//! All selectors work on a [`DisagreementTable`] plus the pair labels. The
//! hill climber is the main method; boosting, correlation and random
//! selection are baselines built on the same table.

mod auc;
mod boosting;
mod correlation;
mod hill_climb;
mod signature;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use auc::{auc, auc_ratio, AucRatio};
pub use boosting::{select_boosting, BoostingSelector};
pub use correlation::{pearson_binary, select_correlation, select_correlation_detailed, single_bit_auc, CorrelationOutcome};
pub use hill_climb::{
    default_iterations, select_hill_climb, HillClimber, PairDistanceState, SelectionTrace, Step, TraceEntry,
};
pub use signature::{hamming, Signature};

use crate::bitgen::{BitPool, DisagreementTable};
use crate::dataset::{Label, Patch};
use crate::rng::Rng;
use crate::{Error, Result};

/// An ordered list of distinct pool indices; bit `k` of a signature is the
/// output of pool bit `selected[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Descriptor {
    selected: Vec<usize>,
}

impl Descriptor {
    pub fn new(selected: Vec<usize>) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::Param("a descriptor needs at least one bit".into()));
        }
        let mut seen = HashSet::with_capacity(selected.len());
        if let Some(dup) = selected.iter().find(|&&i| !seen.insert(i)) {
            return Err(Error::Param(format!("pool index {dup} selected twice")));
        }
        Ok(Descriptor { selected })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Errors unless every index is inside a pool of `pool_size` bits.
    pub fn check_pool(&self, pool_size: usize) -> Result<()> {
        match self.selected.iter().find(|&&i| i >= pool_size) {
            Some(i) => Err(Error::Usage(format!(
                "descriptor uses pool index {i} but the pool has {pool_size} bits"
            ))),
            None => Ok(()),
        }
    }

    /// Text form: `DESCRIPTOR v1 <pool-file-name> <b>` and one index per line.
    pub fn to_text(&self, pool_ref: &str) -> Result<String> {
        if pool_ref.is_empty() || pool_ref.chars().any(char::is_whitespace) {
            return Err(Error::Param(format!("pool reference `{pool_ref}` must be a non-empty word")));
        }
        let mut out = format!("DESCRIPTOR v1 {pool_ref} {}\n", self.len());
        for i in &self.selected {
            out.push_str(&format!("{i}\n"));
        }
        Ok(out)
    }

    /// Parses the text form, returning the pool reference alongside.
    pub fn from_text(text: &str) -> Result<(String, Descriptor)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty descriptor file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Format(format!("bad descriptor header `{header}`"));
        if h.len() != 4 || h[0] != "DESCRIPTOR" || h[1] != "v1" {
            return Err(bad_header());
        }
        let b: usize = h[3].parse().map_err(|_| bad_header())?;
        let selected = lines
            .map(|l| {
                l.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Format(format!("bad descriptor index `{l}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if selected.len() != b {
            return Err(Error::Format(format!(
                "descriptor header announces {b} bits, found {}",
                selected.len()
            )));
        }
        let d = Descriptor::new(selected).map_err(|e| Error::Format(e.to_string()))?;
        Ok((h[2].to_string(), d))
    }

    pub fn write(&self, path: &Path, pool_ref: &str) -> Result<()> {
        fs::write(path, self.to_text(pool_ref)?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<(String, Descriptor)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Descriptor::from_text(&text)
    }
}

/// Shared preconditions: `1 <= b <= B`, one label per pair, both classes present.
pub(crate) fn check_problem(table: &DisagreementTable, labels: &[Label], b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::Param("descriptor size b must be at least 1".into()));
    }
    if b > table.num_bits() {
        return Err(Error::Param(format!(
            "cannot select {b} bits from a pool of {}",
            table.num_bits()
        )));
    }
    if labels.len() != table.num_pairs() {
        return Err(Error::Usage(format!(
            "{} labels given for {} pairs",
            labels.len(),
            table.num_pairs()
        )));
    }
    if !labels.iter().any(|l| l.is_match()) || labels.iter().all(|l| l.is_match()) {
        return Err(Error::Usage("selection needs at least one matching and one non-matching pair".into()));
    }
    Ok(())
}

/// `b` indices drawn uniformly without replacement from `0..pool_size`.
pub fn select_random(pool_size: usize, b: usize, seed: u64) -> Result<Descriptor> {
    if b > pool_size {
        return Err(Error::Param(format!("cannot select {b} bits from a pool of {pool_size}")));
    }
    Descriptor::new(Rng::new(seed).sample_without_replacement(pool_size, b))
}

pub fn compute_signature(descriptor: &Descriptor, pool: &BitPool, patch: &Patch) -> Result<Signature> {
    descriptor.check_pool(pool.len())?;
    let input = pool.prepare(patch);
    let mut sig = Signature::zeros(descriptor.len());
    for (k, &bit) in descriptor.selected().iter().enumerate() {
        sig.set(k, pool.eval(bit, &input)?);
    }
    Ok(sig)
}

/// Signatures of many patches, computed in parallel, returned in input order.
pub fn compute_signatures(descriptor: &Descriptor, pool: &BitPool, patches: &[Patch]) -> Result<Vec<Signature>> {
    descriptor.check_pool(pool.len())?;
    patches
        .par_iter()
        .map(|p| compute_signature(descriptor, pool, p))
        .collect()
}

/// Hex dump, one signature per line.
pub fn signatures_to_hex(signatures: &[Signature]) -> String {
    signatures.iter().map(|s| s.to_hex() + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitgen::{eval_bit, sample_brief_pool, sample_lbp_pool, LbpParams};
    use crate::dataset::generate_synthetic_pairset;

    #[test]
    fn random_descriptor_contract() {
        let d = select_random(1024, 256, 7).unwrap();
        assert_eq!(d.len(), 256);
        assert!(d.selected().iter().all(|&i| i < 1024));
        assert_eq!(d.selected().iter().collect::<HashSet<_>>().len(), 256);
        assert_eq!(d, select_random(1024, 256, 7).unwrap());

        let full = select_random(10, 10, 3).unwrap();
        let mut sorted = full.selected().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());

        assert!(matches!(select_random(10, 11, 3), Err(Error::Param(_))));
    }

    #[test]
    fn descriptor_rejects_duplicates() {
        assert!(Descriptor::new(vec![1, 2, 1]).is_err());
        assert!(Descriptor::new(vec![]).is_err());
    }

    #[test]
    fn descriptor_text_round_trip() {
        let d = select_random(100, 20, 1).unwrap();
        let text = d.to_text("pool.txt").unwrap();
        let (pool_ref, back) = Descriptor::from_text(&text).unwrap();
        assert_eq!(pool_ref, "pool.txt");
        assert_eq!(back, d);
        assert_eq!(back.to_text(&pool_ref).unwrap(), text);
        assert!(d.to_text("has space").is_err());
        assert!(Descriptor::from_text("DESCRIPTOR v1 p 3\n1\n2\n").is_err());
    }

    #[test]
    fn signature_bits_match_direct_evaluation() {
        let ps = generate_synthetic_pairset(2, 2, 2, 0.2).unwrap();
        let pool = sample_brief_pool(2, 1024, 2, 2.0).unwrap();
        let d = select_random(1024, 256, 4).unwrap();
        let patch = &ps.patches()[0];
        let sig = compute_signature(&d, &pool, patch).unwrap();
        assert_eq!(sig.bytes().len(), 32);
        let input = pool.prepare(patch);
        let mut rng = Rng::new(1);
        for _ in 0..100 {
            let k = rng.below_usize(256);
            assert_eq!(sig.get(k), eval_bit(&pool.specs()[d.selected()[k]], &input).unwrap());
        }
        let twin = compute_signature(&d, &pool, &patch.clone()).unwrap();
        assert_eq!(sig, twin);
    }

    #[test]
    fn signature_pool_mismatch() {
        let pool = sample_lbp_pool(1, 16, LbpParams::default()).unwrap();
        let d = Descriptor::new(vec![3, 40]).unwrap();
        assert!(matches!(compute_signature(&d, &pool, &Patch::constant(1)), Err(Error::Usage(_))));
    }
}
