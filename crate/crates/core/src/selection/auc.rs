//! ROC AUC from Hamming-distance histograms.
//!
//! With `M(d)` matching and `N(d)` non-matching pairs at distance `d`, the
//! tie-corrected Mann-Whitney statistic is
//!
//! ```text
//! AUC = [ sum_{dm < dn} M(dm) N(dn) + 1/2 sum_d M(d) N(d) ] / (|M| |N|)
//! ```
//!
//! which is also the trapezoidal area under the ROC traced by thresholding
//! the distance. The numerator is accumulated doubled, in integers, so two
//! descriptors over the same pairs compare exactly.

use crate::{Error, Result};

/// Doubled Mann-Whitney numerator and its matching denominator `2 |M| |N|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AucRatio {
    pub numerator: u128,
    pub denominator: u128,
}

impl AucRatio {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

pub(crate) fn auc_ratio_unchecked(match_hist: &[u64], nonmatch_hist: &[u64]) -> AucRatio {
    let len = match_hist.len().max(nonmatch_hist.len());
    let at = |h: &[u64], d: usize| h.get(d).copied().unwrap_or(0) as u128;
    let total_n: u128 = nonmatch_hist.iter().map(|&c| c as u128).sum();
    let total_m: u128 = match_hist.iter().map(|&c| c as u128).sum();
    let mut n_le = 0u128;
    let mut numerator = 0u128;
    for d in 0..len {
        let n_d = at(nonmatch_hist, d);
        n_le += n_d;
        let n_gt = total_n - n_le;
        numerator += at(match_hist, d) * (2 * n_gt + n_d);
    }
    AucRatio {
        numerator,
        denominator: 2 * total_m * total_n,
    }
}

/// Exact AUC ratio; both histograms need positive mass.
pub fn auc_ratio(match_hist: &[u64], nonmatch_hist: &[u64]) -> Result<AucRatio> {
    if match_hist.iter().all(|&c| c == 0) {
        return Err(Error::Usage("AUC needs at least one matching pair".into()));
    }
    if nonmatch_hist.iter().all(|&c| c == 0) {
        return Err(Error::Usage("AUC needs at least one non-matching pair".into()));
    }
    Ok(auc_ratio_unchecked(match_hist, nonmatch_hist))
}

/// AUC of the distance-thresholding ROC. Lower distances are predicted to
/// be matches.
pub fn auc(match_hist: &[u64], nonmatch_hist: &[u64]) -> Result<f64> {
    auc_ratio(match_hist, nonmatch_hist).map(|r| r.value())
}
