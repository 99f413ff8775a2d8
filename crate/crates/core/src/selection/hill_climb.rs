//! Stochastic hill climbing over the training AUC.
//!
//! Starting from `b` bits drawn uniformly from the pool, each iteration swaps
//! a random selected bit for a random unselected one and keeps the swap only
//! if the AUC strictly increases. Evicted bits become selectable again.
//!
//! An iteration never recomputes distances from scratch. Swapping bit `old`
//! for `new` changes the distance of pair `k` by `D[new][k] - D[old][k]`, so
//! only pairs where the two disagreement rows differ are touched, and the AUC
//! is recomputed from the two distance histograms in `O(b)`.

use super::auc::{auc_ratio_unchecked, AucRatio};
use super::{check_problem, Descriptor};
use crate::bitgen::DisagreementTable;
use crate::bits::for_each_set_bit;
use crate::dataset::Label;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub auc: f64,
    pub accepted: bool,
}

/// One entry per iteration (plus the initial state as iteration 0). `auc`
/// is the candidate's AUC; accepted entries form a strictly increasing
/// sequence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionTrace {
    pub entries: Vec<TraceEntry>,
}

impl SelectionTrace {
    pub fn initial_auc(&self) -> Option<f64> {
        self.entries.first().map(|e| e.auc)
    }

    pub fn final_auc(&self) -> Option<f64> {
        self.entries.iter().rev().find(|e| e.accepted).map(|e| e.auc)
    }

    pub fn accepted(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| e.accepted)
    }

    /// CSV with header `iteration,auc,accepted`; `accepted` is 0 or 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,auc,accepted\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.iteration, e.auc, u8::from(e.accepted)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("iteration,auc,accepted") {
            return Err(Error::Format("trace CSV must start with `iteration,auc,accepted`".into()));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::Format(format!("trace line {}: `{line}`", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad());
            }
            entries.push(TraceEntry {
                iteration: f[0].parse().map_err(|_| bad())?,
                auc: f[1].parse().map_err(|_| bad())?,
                accepted: match f[2] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad()),
                },
            });
        }
        Ok(SelectionTrace { entries })
    }
}

/// Per-pair Hamming distances under a descriptor, with the match and
/// non-match distance histograms over `0..=b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairDistanceState {
    distances: Vec<u32>,
    match_hist: Vec<u64>,
    nonmatch_hist: Vec<u64>,
}

impl PairDistanceState {
    /// Counts distances directly from the disagreement rows of `selected`.
    pub fn from_scratch(table: &DisagreementTable, labels: &[Label], selected: &[usize]) -> Self {
        let mut distances = vec![0u32; table.num_pairs()];
        for &bit in selected {
            for_each_set_bit(table.row(bit), |k| distances[k] += 1);
        }
        let b = selected.len();
        let mut match_hist = vec![0u64; b + 1];
        let mut nonmatch_hist = vec![0u64; b + 1];
        for (d, label) in distances.iter().zip(labels) {
            match label {
                Label::Match => match_hist[*d as usize] += 1,
                Label::NonMatch => nonmatch_hist[*d as usize] += 1,
            }
        }
        PairDistanceState {
            distances,
            match_hist,
            nonmatch_hist,
        }
    }

    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    pub fn match_hist(&self) -> &[u64] {
        &self.match_hist
    }

    pub fn nonmatch_hist(&self) -> &[u64] {
        &self.nonmatch_hist
    }

    pub fn auc_ratio(&self) -> AucRatio {
        auc_ratio_unchecked(&self.match_hist, &self.nonmatch_hist)
    }
}

/// Result of one hill-climbing iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub auc: f64,
    pub accepted: bool,
    /// `(position in descriptor, evicted bit, inserted bit)` when a swap was tried.
    pub swap: Option<(usize, usize, usize)>,
}

/// Incremental hill-climbing engine. [`select_hill_climb`] drives it to
/// completion; tests can step it manually and audit its state.
pub struct HillClimber<'a> {
    table: &'a DisagreementTable,
    labels: &'a [Label],
    selected: Vec<usize>,
    available: Vec<usize>,
    state: PairDistanceState,
    current: AucRatio,
    rng: Rng,
    iteration: usize,
    trace: SelectionTrace,
    // scratch histograms reused across iterations
    cand_match: Vec<u64>,
    cand_nonmatch: Vec<u64>,
}

impl<'a> HillClimber<'a> {
    pub fn new(table: &'a DisagreementTable, labels: &'a [Label], b: usize, seed: u64) -> Result<Self> {
        check_problem(table, labels, b)?;
        let pool = table.num_bits();
        let mut rng = Rng::new(seed);
        let mut order = rng.partial_shuffle(pool, b);
        let available = order.split_off(b);
        let selected = order;
        let state = PairDistanceState::from_scratch(table, labels, &selected);
        let current = state.auc_ratio();
        let trace = SelectionTrace {
            entries: vec![TraceEntry {
                iteration: 0,
                auc: current.value(),
                accepted: true,
            }],
        };
        Ok(HillClimber {
            table,
            labels,
            selected,
            available,
            cand_match: state.match_hist.clone(),
            cand_nonmatch: state.nonmatch_hist.clone(),
            state,
            current,
            rng,
            iteration: 0,
            trace,
        })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn state(&self) -> &PairDistanceState {
        &self.state
    }

    pub fn current_auc(&self) -> f64 {
        self.current.value()
    }

    pub fn trace(&self) -> &SelectionTrace {
        &self.trace
    }

    /// True when the incrementally maintained state equals a from-scratch
    /// recount for the current selection.
    pub fn audit(&self) -> bool {
        self.state == PairDistanceState::from_scratch(self.table, self.labels, &self.selected)
    }

    pub fn step(&mut self) -> Step {
        self.iteration += 1;
        if self.available.is_empty() {
            // b == B: nothing to swap in
            let auc = self.current.value();
            self.trace.entries.push(TraceEntry {
                iteration: self.iteration,
                auc,
                accepted: false,
            });
            return Step {
                auc,
                accepted: false,
                swap: None,
            };
        }

        let pos = self.rng.below_usize(self.selected.len());
        let slot = self.rng.below_usize(self.available.len());
        let old = self.selected[pos];
        let new = self.available[slot];

        self.cand_match.copy_from_slice(&self.state.match_hist);
        self.cand_nonmatch.copy_from_slice(&self.state.nonmatch_hist);
        let old_row = self.table.row(old);
        let new_row = self.table.row(new);
        for (w, (&o, &n)) in old_row.iter().zip(new_row).enumerate() {
            let mut diff = o ^ n;
            while diff != 0 {
                let k = w * 64 + diff.trailing_zeros() as usize;
                let up = (n >> (k % 64)) & 1 == 1;
                let d = self.state.distances[k] as usize;
                let nd = if up { d + 1 } else { d - 1 };
                let hist = match self.labels[k] {
                    Label::Match => &mut self.cand_match,
                    Label::NonMatch => &mut self.cand_nonmatch,
                };
                hist[d] -= 1;
                hist[nd] += 1;
                diff &= diff - 1;
            }
        }
        let candidate = auc_ratio_unchecked(&self.cand_match, &self.cand_nonmatch);
        // same denominator, so compare numerators exactly
        let accepted = candidate.numerator > self.current.numerator;
        if accepted {
            for (w, (&o, &n)) in old_row.iter().zip(new_row).enumerate() {
                let mut up = n & !o;
                while up != 0 {
                    self.state.distances[w * 64 + up.trailing_zeros() as usize] += 1;
                    up &= up - 1;
                }
                let mut down = o & !n;
                while down != 0 {
                    self.state.distances[w * 64 + down.trailing_zeros() as usize] -= 1;
                    down &= down - 1;
                }
            }
            std::mem::swap(&mut self.state.match_hist, &mut self.cand_match);
            std::mem::swap(&mut self.state.nonmatch_hist, &mut self.cand_nonmatch);
            self.selected[pos] = new;
            self.available[slot] = old;
            self.current = candidate;
        }
        let auc = candidate.value();
        self.trace.entries.push(TraceEntry {
            iteration: self.iteration,
            auc,
            accepted,
        });
        Step {
            auc,
            accepted,
            swap: Some((pos, old, new)),
        }
    }

    pub fn finish(self) -> (Descriptor, SelectionTrace) {
        (Descriptor { selected: self.selected }, self.trace)
    }
}

/// Default iteration budget: four times the pool size.
pub fn default_iterations(pool_size: usize) -> usize {
    4 * pool_size
}

/// Selects `b` bits by stochastic hill climbing on the AUC of `labels`.
/// `iterations` defaults to `4 * B`.
pub fn select_hill_climb(
    table: &DisagreementTable,
    labels: &[Label],
    b: usize,
    iterations: Option<usize>,
    seed: u64,
) -> Result<(Descriptor, SelectionTrace)> {
    let mut climber = HillClimber::new(table, labels, b, seed)?;
    let n = iterations.unwrap_or_else(|| default_iterations(table.num_bits()));
    for _ in 0..n {
        climber.step();
    }
    Ok(climber.finish())
}
