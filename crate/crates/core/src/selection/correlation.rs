//! Greedy selection of accurate, mutually uncorrelated bits.
//!
//! Bits are ranked by their single-bit AUC (the disagreement itself used as
//! a 0/1 distance). A bit is accepted when its absolute Pearson correlation
//! with every already accepted bit, measured over patch responses, is below
//! `tau`. If the ranking runs out first, the best rejected bits fill the
//! remaining slots in rank order.

use rayon::prelude::*;

use super::auc::auc_ratio_unchecked;
use super::{check_problem, Descriptor};
use crate::bitgen::{DisagreementTable, ResponseMatrix};
use crate::bits::words_for;
use crate::dataset::Label;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationOutcome {
    pub descriptor: Descriptor,
    /// How many of the trailing bits came from the fill-in path.
    pub filled: usize,
}

/// AUC of every pool bit taken alone.
pub fn single_bit_auc(table: &DisagreementTable, labels: &[Label]) -> Vec<f64> {
    let mut match_mask = vec![0u64; words_for(labels.len())];
    for (k, l) in labels.iter().enumerate() {
        if l.is_match() {
            match_mask[k / 64] |= 1 << (k % 64);
        }
    }
    let total_m = labels.iter().filter(|l| l.is_match()).count() as u64;
    let total_n = labels.len() as u64 - total_m;
    (0..table.num_bits())
        .into_par_iter()
        .map(|p| {
            let row = table.row(p);
            let ones = row.iter().map(|w| w.count_ones() as u64).sum::<u64>();
            let m1 = row.iter().zip(&match_mask).map(|(w, m)| (w & m).count_ones() as u64).sum::<u64>();
            let n1 = ones - m1;
            auc_ratio_unchecked(&[total_m - m1, m1], &[total_n - n1, n1]).value()
        })
        .collect()
}

/// Pearson correlation of two packed 0/1 rows of equal length; 0 when
/// either row is constant.
pub fn pearson_binary(a: &[u64], b: &[u64], len: usize) -> f64 {
    let n = len as f64;
    let na = a.iter().map(|w| w.count_ones() as f64).sum::<f64>();
    let nb = b.iter().map(|w| w.count_ones() as f64).sum::<f64>();
    let nab = a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as f64).sum::<f64>();
    let var = na * (n - na) * nb * (n - nb);
    if var == 0.0 {
        return 0.0;
    }
    (n * nab - na * nb) / var.sqrt()
}

pub fn select_correlation_detailed(
    table: &DisagreementTable,
    responses: &ResponseMatrix,
    labels: &[Label],
    b: usize,
    tau: f64,
) -> Result<CorrelationOutcome> {
    check_problem(table, labels, b)?;
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Param(format!("correlation threshold {tau} outside (0, 1]")));
    }
    if responses.num_bits() != table.num_bits() {
        return Err(Error::Usage(format!(
            "response matrix has {} bits but the disagreement table has {}",
            responses.num_bits(),
            table.num_bits()
        )));
    }

    let aucs = single_bit_auc(table, labels);
    let mut ranked: Vec<usize> = (0..table.num_bits()).collect();
    // stable: equal AUCs keep ascending index order
    ranked.sort_by(|&p, &q| aucs[q].total_cmp(&aucs[p]));

    let m = responses.matrix();
    let mut selected = Vec::with_capacity(b);
    let mut rejected = Vec::new();
    for &p in &ranked {
        if selected.len() == b {
            break;
        }
        let independent = selected
            .iter()
            .all(|&q| pearson_binary(m.row(p), m.row(q), m.cols()).abs() < tau);
        if independent {
            selected.push(p);
        } else {
            rejected.push(p);
        }
    }
    let filled = b - selected.len();
    selected.extend(rejected.into_iter().take(filled));
    Ok(CorrelationOutcome {
        descriptor: Descriptor::new(selected)?,
        filled,
    })
}

pub fn select_correlation(
    table: &DisagreementTable,
    responses: &ResponseMatrix,
    labels: &[Label],
    b: usize,
    tau: f64,
) -> Result<Descriptor> {
    select_correlation_detailed(table, responses, labels, b, tau).map(|o| o.descriptor)
}
