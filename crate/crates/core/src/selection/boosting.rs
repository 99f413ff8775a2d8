//! AdaBoost-style sequential bit selection with shrinkage.
//!
//! Pair `k` has label `y = +1` (match) or `-1` (non-match) and a weight `w`.
//! Pool bit `p` is a weak classifier predicting "match" when it agrees on the
//! two patches: `h_p(k) = +1` if `D[p][k] = 0`, else `-1`. Each round picks
//! the unselected bit with the lowest weighted error, sets
//! `alpha = shrinkage * ln((1 - eps) / eps) / 2`, multiplies every weight by
//! `exp(-alpha * y * h)` and renormalises.

use rayon::prelude::*;

use super::{check_problem, Descriptor};
use crate::bitgen::DisagreementTable;
use crate::bits::for_each_set_bit;
use crate::dataset::Label;
use crate::{Error, Result};

const EPS_CLAMP: f64 = 1e-12;

pub struct BoostingSelector<'a> {
    table: &'a DisagreementTable,
    labels: &'a [Label],
    shrinkage: f64,
    weights: Vec<f64>,
    selected: Vec<usize>,
    taken: Vec<bool>,
}

impl<'a> BoostingSelector<'a> {
    pub fn new(table: &'a DisagreementTable, labels: &'a [Label], shrinkage: f64) -> Result<Self> {
        if !(shrinkage > 0.0 && shrinkage <= 1.0) {
            return Err(Error::Param(format!("shrinkage {shrinkage} outside (0, 1]")));
        }
        check_problem(table, labels, 1)?;
        let n = labels.len();
        Ok(BoostingSelector {
            table,
            labels,
            shrinkage,
            weights: vec![1.0 / n as f64; n],
            selected: Vec::new(),
            taken: vec![false; table.num_bits()],
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Weighted error of every pool bit under the current weights.
    ///
    /// `eps_p = W_nonmatch + sum over pairs where bit p disagrees of y_k w_k`,
    /// which equals the direct sum over misclassified pairs.
    pub fn weighted_errors(&self) -> Vec<f64> {
        let signed: Vec<f64> = self
            .weights
            .iter()
            .zip(self.labels)
            .map(|(w, l)| if l.is_match() { *w } else { -*w })
            .collect();
        let w_nonmatch: f64 = self
            .weights
            .iter()
            .zip(self.labels)
            .filter(|(_, l)| !l.is_match())
            .map(|(w, _)| w)
            .sum();
        (0..self.table.num_bits())
            .into_par_iter()
            .map(|p| {
                let mut acc = w_nonmatch;
                for_each_set_bit(self.table.row(p), |k| acc += signed[k]);
                acc
            })
            .collect()
    }

    /// Runs one round; returns the chosen bit, or `None` once the pool is exhausted.
    pub fn next_round(&mut self) -> Option<usize> {
        let errors = self.weighted_errors();
        let (best, eps) = errors
            .iter()
            .enumerate()
            .filter(|(p, _)| !self.taken[*p])
            .fold(None, |acc: Option<(usize, f64)>, (p, &e)| match acc {
                Some((_, be)) if be <= e => acc,
                _ => Some((p, e)),
            })?;
        let eps = eps.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        let alpha = self.shrinkage * 0.5 * ((1.0 - eps) / eps).ln();

        let row = self.table.row(best);
        for (k, (w, label)) in self.weights.iter_mut().zip(self.labels).enumerate() {
            let h = if (row[k / 64] >> (k % 64)) & 1 == 0 { 1.0 } else { -1.0 };
            let y = if label.is_match() { 1.0 } else { -1.0 };
            *w *= (-alpha * y * h).exp();
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            // keep weights strictly positive even after extreme rounds
            *w = (*w / total).max(f64::MIN_POSITIVE);
        }

        self.taken[best] = true;
        self.selected.push(best);
        Some(best)
    }

    pub fn finish(self) -> Result<Descriptor> {
        Descriptor::new(self.selected)
    }
}

/// Selects `b` bits by boosting rounds without replacement.
pub fn select_boosting(table: &DisagreementTable, labels: &[Label], b: usize, shrinkage: f64) -> Result<Descriptor> {
    check_problem(table, labels, b)?;
    let mut booster = BoostingSelector::new(table, labels, shrinkage)?;
    for _ in 0..b {
        booster.next_round();
    }
    booster.finish()
}
