use rayon::prelude::*;

use super::BitPool;
use crate::bits::{words_for, BitMatrix};
use crate::dataset::{Patch, PatchPair};
use crate::{Error, Result};

/// Bit responses over a patch list: row `p` holds bit `p`'s output on every
/// patch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseMatrix(BitMatrix);

impl ResponseMatrix {
    pub fn from_matrix(m: BitMatrix) -> Self {
        ResponseMatrix(m)
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.0
    }

    pub fn num_bits(&self) -> usize {
        self.0.rows()
    }

    pub fn num_patches(&self) -> usize {
        self.0.cols()
    }
}

/// Disagreement of every pool bit on every pair: row `p`, column `k` is set
/// when bit `p` answers differently on the two patches of pair `k`. The
/// Hamming distance of pair `k` under a descriptor is the number of selected
/// rows with column `k` set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisagreementTable(BitMatrix);

impl DisagreementTable {
    pub fn from_matrix(m: BitMatrix) -> Self {
        DisagreementTable(m)
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.0
    }

    pub fn num_bits(&self) -> usize {
        self.0.rows()
    }

    pub fn num_pairs(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn row(&self, bit: usize) -> &[u64] {
        self.0.row(bit)
    }
}

/// Evaluates every pool bit on every patch. Patches are processed in blocks
/// of 64 (one output word) which may run in parallel; the result does not
/// depend on scheduling.
pub fn build_response_matrix(pool: &BitPool, patches: &[Patch]) -> Result<ResponseMatrix> {
    if pool.is_empty() {
        return Err(Error::Param("cannot build responses for an empty pool".into()));
    }
    let blocks: Vec<Vec<u64>> = patches
        .par_chunks(64)
        .map(|block| {
            let prepared: Vec<_> = block.iter().map(|p| pool.prepare(p)).collect();
            (0..pool.len())
                .map(|bit| {
                    let spec = &pool.specs()[bit];
                    prepared.iter().enumerate().fold(0u64, |w, (j, input)| {
                        let on = super::eval_bit(spec, input).expect("pool preprocessing matches its bit family");
                        w | (u64::from(on) << j)
                    })
                })
                .collect()
        })
        .collect();

    let words = words_for(patches.len());
    let rows: Vec<Vec<u64>> = (0..pool.len())
        .map(|bit| (0..words).map(|w| blocks[w][bit]).collect())
        .collect();
    Ok(ResponseMatrix(BitMatrix::from_rows(rows, patches.len())))
}

pub fn build_disagreement_table(responses: &ResponseMatrix, pairs: &[PatchPair]) -> Result<DisagreementTable> {
    let n = responses.num_patches();
    if let Some((k, p)) = pairs.iter().enumerate().find(|(_, p)| p.a >= n || p.b >= n) {
        return Err(Error::Usage(format!(
            "pair {k} references patch ({}, {}) but responses cover {n} patches",
            p.a, p.b
        )));
    }
    let m = responses.matrix();
    let words = words_for(pairs.len());
    let rows: Vec<Vec<u64>> = (0..m.rows())
        .into_par_iter()
        .map(|bit| {
            let row = m.row(bit);
            let get = |c: usize| (row[c / 64] >> (c % 64)) & 1;
            let mut out = vec![0u64; words];
            for (k, pair) in pairs.iter().enumerate() {
                out[k / 64] |= (get(pair.a) ^ get(pair.b)) << (k % 64);
            }
            out
        })
        .collect();
    Ok(DisagreementTable(BitMatrix::from_rows(rows, pairs.len())))
}
