//! Candidate bits and their cached responses.
//!
//! Two bit families are supported. Intensity-pair bits compare two pixels of
//! a Gaussian-smoothed patch (`I(x1, y1) < I(x2, y2)`); vector-pair bits
//! compare two components of a patch's CS-LBP histogram vector
//! (`v_i > v_j`). Both use strict comparisons, so ties produce 0.

mod lbp;
mod response;
mod smooth;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use lbp::{extract_lbp_vector, LbpParams, LbpVector, LBP_BINS};
pub use response::{build_disagreement_table, build_response_matrix, DisagreementTable, ResponseMatrix};
pub use smooth::{preprocess_patch, SmoothedPatch};

use crate::dataset::{Patch, PATCH_SIZE};
use crate::rng::Rng;
use crate::{Error, Result};

pub const DEFAULT_BRIEF_POOL_SIZE: usize = 1024;
pub const DEFAULT_LBP_POOL_SIZE: usize = 4096;
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_MARGIN: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BitSpec {
    /// 1 iff `I(x1, y1) < I(x2, y2)` on the smoothed patch.
    IntensityPair { x1: u8, y1: u8, x2: u8, y2: u8 },
    /// 1 iff `v[i] > v[j]` on the LBP vector.
    VectorPair { i: u16, j: u16 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    Brief,
    Lbp,
}

impl PoolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolKind::Brief => "brief",
            PoolKind::Lbp => "lbp",
        }
    }
}

impl std::str::FromStr for PoolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brief" => Ok(PoolKind::Brief),
            "lbp" => Ok(PoolKind::Lbp),
            _ => Err(Error::Param(format!("unknown pool kind `{s}` (expected brief or lbp)"))),
        }
    }
}

/// Preprocessing shared by every bit of a pool.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PoolParams {
    Brief { sigma: f64, margin: usize },
    Lbp(LbpParams),
}

impl PoolParams {
    pub fn kind(&self) -> PoolKind {
        match self {
            PoolParams::Brief { .. } => PoolKind::Brief,
            PoolParams::Lbp(_) => PoolKind::Lbp,
        }
    }
}

/// A patch after the pool's preprocessing step.
#[derive(Clone, Debug)]
pub enum Prepared {
    Smoothed(SmoothedPatch),
    Vector(LbpVector),
}

/// Evaluates one bit on a preprocessed input.
pub fn eval_bit(spec: &BitSpec, input: &Prepared) -> Result<bool> {
    match (spec, input) {
        (BitSpec::IntensityPair { x1, y1, x2, y2 }, Prepared::Smoothed(s)) => {
            Ok(s.get(*x1 as usize, *y1 as usize) < s.get(*x2 as usize, *y2 as usize))
        }
        (BitSpec::VectorPair { i, j }, Prepared::Vector(v)) => {
            let c = v.components();
            let (i, j) = (*i as usize, *j as usize);
            if i >= c.len() || j >= c.len() {
                return Err(Error::Usage(format!(
                    "vector bit ({i}, {j}) out of range for a {}-dim vector",
                    c.len()
                )));
            }
            Ok(c[i] > c[j])
        }
        _ => Err(Error::Usage(format!(
            "bit {spec:?} cannot be evaluated on a {} input",
            match input {
                Prepared::Smoothed(_) => "smoothed-patch",
                Prepared::Vector(_) => "LBP-vector",
            }
        ))),
    }
}

/// A pool of distinct candidate bits of one family.
#[derive(Clone, Debug, PartialEq)]
pub struct BitPool {
    specs: Vec<BitSpec>,
    params: PoolParams,
}

impl BitPool {
    /// Validates that every spec belongs to the family, lies in range, and
    /// appears once.
    pub fn new(specs: Vec<BitSpec>, params: PoolParams) -> Result<Self> {
        let mut seen = HashSet::with_capacity(specs.len());
        for (idx, spec) in specs.iter().enumerate() {
            validate_spec(spec, &params).map_err(|m| Error::Param(format!("bit {idx}: {m}")))?;
            if !seen.insert(*spec) {
                return Err(Error::Param(format!("bit {idx}: duplicate spec {spec:?}")));
            }
        }
        Ok(BitPool { specs, params })
    }

    pub fn specs(&self) -> &[BitSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn params(&self) -> &PoolParams {
        &self.params
    }

    pub fn kind(&self) -> PoolKind {
        self.params.kind()
    }

    pub fn prepare(&self, patch: &Patch) -> Prepared {
        match &self.params {
            PoolParams::Brief { sigma, .. } => Prepared::Smoothed(preprocess_patch(patch, *sigma)),
            PoolParams::Lbp(p) => Prepared::Vector(extract_lbp_vector(patch, p)),
        }
    }

    /// Evaluates bit `index` on an input prepared by [`BitPool::prepare`].
    pub fn eval(&self, index: usize, input: &Prepared) -> Result<bool> {
        let spec = self
            .specs
            .get(index)
            .ok_or_else(|| Error::Usage(format!("bit index {index} outside pool of {}", self.len())))?;
        eval_bit(spec, input)
    }

    /// Text form: `BITPOOL v1 <kind> <B> <params>` followed by one spec per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.specs.len() * 16 + 64);
        match &self.params {
            PoolParams::Brief { sigma, margin } => {
                writeln!(out, "BITPOOL v1 brief {} {sigma} {margin}", self.len()).unwrap()
            }
            PoolParams::Lbp(p) => writeln!(out, "BITPOOL v1 lbp {} {} {}", self.len(), p.dim(), p.threshold).unwrap(),
        }
        for spec in &self.specs {
            match spec {
                BitSpec::IntensityPair { x1, y1, x2, y2 } => writeln!(out, "ip {x1} {y1} {x2} {y2}").unwrap(),
                BitSpec::VectorPair { i, j } => writeln!(out, "vp {i} {j}").unwrap(),
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Format("empty pool file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Format(format!("bad pool header `{header}`"));
        if h.len() != 6 || h[0] != "BITPOOL" || h[1] != "v1" {
            return Err(bad_header());
        }
        let count: usize = h[3].parse().map_err(|_| bad_header())?;
        let params = match h[2] {
            "brief" => PoolParams::Brief {
                sigma: h[4].parse().map_err(|_| bad_header())?,
                margin: h[5].parse().map_err(|_| bad_header())?,
            },
            "lbp" => {
                let dim: usize = h[4].parse().map_err(|_| bad_header())?;
                let threshold: f64 = h[5].parse().map_err(|_| bad_header())?;
                PoolParams::Lbp(LbpParams::with_dim(dim, threshold).map_err(|e| Error::Format(e.to_string()))?)
            }
            _ => return Err(bad_header()),
        };

        let mut specs = Vec::with_capacity(count);
        for (lineno, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Format(format!("pool line {}: `{line}`", lineno + 1));
            let spec = match f.as_slice() {
                ["ip", x1, y1, x2, y2] => BitSpec::IntensityPair {
                    x1: x1.parse().map_err(|_| bad())?,
                    y1: y1.parse().map_err(|_| bad())?,
                    x2: x2.parse().map_err(|_| bad())?,
                    y2: y2.parse().map_err(|_| bad())?,
                },
                ["vp", i, j] => BitSpec::VectorPair {
                    i: i.parse().map_err(|_| bad())?,
                    j: j.parse().map_err(|_| bad())?,
                },
                _ => return Err(bad()),
            };
            specs.push(spec);
        }
        if specs.len() != count {
            return Err(Error::Format(format!(
                "pool header announces {count} bits, found {}",
                specs.len()
            )));
        }
        BitPool::new(specs, params).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BitPool::from_text(&text)
    }
}

fn validate_spec(spec: &BitSpec, params: &PoolParams) -> std::result::Result<(), String> {
    match (spec, params) {
        (BitSpec::IntensityPair { x1, y1, x2, y2 }, PoolParams::Brief { margin, .. }) => {
            let hi = PATCH_SIZE - 1 - margin;
            if [x1, y1, x2, y2].iter().any(|&&c| (c as usize) < *margin || c as usize > hi) {
                return Err(format!("coordinates outside [{margin}, {hi}]"));
            }
            if (x1, y1) == (x2, y2) {
                return Err("compares a pixel with itself".into());
            }
            Ok(())
        }
        (BitSpec::VectorPair { i, j }, PoolParams::Lbp(p)) => {
            if *i as usize >= p.dim() || *j as usize >= p.dim() {
                return Err(format!("component index outside [0, {})", p.dim()));
            }
            if i == j {
                return Err("compares a component with itself".into());
            }
            Ok(())
        }
        _ => Err(format!("{spec:?} does not belong to a {} pool", params.kind().as_str())),
    }
}

/// Samples `count` distinct intensity-pair bits with coordinates uniform in
/// `[margin, 63 - margin]`.
pub fn sample_brief_pool(seed: u64, count: usize, margin: usize, sigma: f64) -> Result<BitPool> {
    if count == 0 {
        return Err(Error::Param("pool size must be at least 1".into()));
    }
    if margin >= PATCH_SIZE / 2 {
        return Err(Error::Param(format!("margin {margin} must be below {}", PATCH_SIZE / 2)));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Param(format!("sigma {sigma} must be a finite non-negative number")));
    }
    let side = (PATCH_SIZE - 2 * margin) as u64;
    let points = side * side;
    let available = points * (points - 1);
    if count as u64 > available {
        return Err(Error::Param(format!(
            "{count} bits requested but only {available} distinct pixel pairs exist with margin {margin}"
        )));
    }

    let mut rng = Rng::new(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut specs = Vec::with_capacity(count);
    while specs.len() < count {
        let mut coord = || (margin as u64 + rng.below(side)) as u8;
        let spec = BitSpec::IntensityPair {
            x1: coord(),
            y1: coord(),
            x2: coord(),
            y2: coord(),
        };
        let BitSpec::IntensityPair { x1, y1, x2, y2 } = spec else { unreachable!() };
        if (x1, y1) != (x2, y2) && seen.insert(spec) {
            specs.push(spec);
        }
    }
    BitPool::new(specs, PoolParams::Brief { sigma, margin })
}

/// Samples `count` distinct ordered component pairs `(i, j)`, `i != j`.
pub fn sample_lbp_pool(seed: u64, count: usize, params: LbpParams) -> Result<BitPool> {
    let n = params.dim() as u64;
    if count == 0 {
        return Err(Error::Param("pool size must be at least 1".into()));
    }
    if count as u64 > n * (n - 1) {
        return Err(Error::Param(format!(
            "{count} bits requested but only {} ordered component pairs exist for n = {n}",
            n * (n - 1)
        )));
    }
    let mut rng = Rng::new(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut specs = Vec::with_capacity(count);
    while specs.len() < count {
        let i = rng.below(n) as u16;
        let j = rng.below(n) as u16;
        if i != j && seen.insert((i, j)) {
            specs.push(BitSpec::VectorPair { i, j });
        }
    }
    BitPool::new(specs, PoolParams::Lbp(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn brief_pool_full_size() {
        let pool = sample_brief_pool(1, 1024, 2, 2.0).unwrap();
        assert_eq!(pool.len(), 1024);
        let distinct: HashSet<_> = pool.specs().iter().collect();
        assert_eq!(distinct.len(), 1024);
        for s in pool.specs() {
            let BitSpec::IntensityPair { x1, y1, x2, y2 } = *s else { panic!() };
            for c in [x1, y1, x2, y2] {
                assert!((2..=61).contains(&c));
            }
            assert_ne!((x1, y1), (x2, y2));
        }
        assert_eq!(pool, sample_brief_pool(1, 1024, 2, 2.0).unwrap());
    }

    #[test]
    fn brief_pool_single_and_limits() {
        let pool = sample_brief_pool(3, 1, 2, 2.0).unwrap();
        assert_eq!(pool.len(), 1);
        // margin 31 leaves a 2x2 square: 4 * 3 ordered pairs
        assert_eq!(sample_brief_pool(3, 12, 31, 0.0).unwrap().len(), 12);
        assert!(matches!(sample_brief_pool(3, 13, 31, 0.0), Err(Error::Param(_))));
        assert!(matches!(sample_brief_pool(3, 0, 2, 2.0), Err(Error::Param(_))));
        assert!(matches!(sample_brief_pool(3, 4, 32, 2.0), Err(Error::Param(_))));
    }

    #[test]
    fn lbp_pool_sizes() {
        let pool = sample_lbp_pool(3, 4096, LbpParams::default()).unwrap();
        let distinct: HashSet<_> = pool.specs().iter().collect();
        assert_eq!(distinct.len(), 4096);
        assert_eq!(pool, sample_lbp_pool(3, 4096, LbpParams::default()).unwrap());

        let tiny = LbpParams { threshold: 0.01, grid: 1 };
        // n = 16 for a single cell, so 240 ordered pairs
        assert_eq!(sample_lbp_pool(1, 240, tiny).unwrap().len(), 240);
        assert!(matches!(sample_lbp_pool(1, 241, tiny), Err(Error::Param(_))));
    }

    #[test]
    fn intensity_bit_semantics() {
        let patch = Patch::from_fn(|x, y| if (x, y) == (5, 5) { 10 } else if (x, y) == (6, 7) { 20 } else { 0 });
        let prepared = Prepared::Smoothed(preprocess_patch(&patch, 0.0));
        let lt = BitSpec::IntensityPair { x1: 5, y1: 5, x2: 6, y2: 7 };
        let gt = BitSpec::IntensityPair { x1: 6, y1: 7, x2: 5, y2: 5 };
        let tie = BitSpec::IntensityPair { x1: 0, y1: 0, x2: 1, y2: 0 };
        assert!(eval_bit(&lt, &prepared).unwrap());
        assert!(!eval_bit(&gt, &prepared).unwrap());
        assert!(!eval_bit(&tie, &prepared).unwrap());
    }

    #[test]
    fn vector_bit_semantics() {
        let v = Prepared::Vector(LbpVector::from_components(vec![0.5, 0.2]));
        assert!(eval_bit(&BitSpec::VectorPair { i: 0, j: 1 }, &v).unwrap());
        assert!(!eval_bit(&BitSpec::VectorPair { i: 1, j: 0 }, &v).unwrap());
        let flat = Prepared::Vector(LbpVector::from_components(vec![0.3, 0.3]));
        assert!(!eval_bit(&BitSpec::VectorPair { i: 0, j: 1 }, &flat).unwrap());
    }

    #[test]
    fn variant_mismatch_is_usage_error() {
        let v = Prepared::Vector(LbpVector::from_components(vec![0.5, 0.2]));
        let spec = BitSpec::IntensityPair { x1: 2, y1: 2, x2: 3, y2: 3 };
        assert!(matches!(eval_bit(&spec, &v), Err(Error::Usage(_))));
    }

    #[test]
    fn pool_rejects_bad_specs() {
        let brief = PoolParams::Brief { sigma: 2.0, margin: 2 };
        let out_of_range = BitSpec::IntensityPair { x1: 1, y1: 5, x2: 6, y2: 7 };
        assert!(BitPool::new(vec![out_of_range], brief).is_err());
        let same = BitSpec::IntensityPair { x1: 5, y1: 5, x2: 5, y2: 5 };
        assert!(BitPool::new(vec![same], brief).is_err());
        let ok = BitSpec::IntensityPair { x1: 5, y1: 5, x2: 6, y2: 5 };
        assert!(BitPool::new(vec![ok, ok], brief).is_err());
        assert!(BitPool::new(vec![BitSpec::VectorPair { i: 0, j: 1 }], brief).is_err());
    }

    #[test]
    fn pool_text_round_trip() {
        for pool in [
            sample_brief_pool(4, 50, 3, 1.5).unwrap(),
            sample_lbp_pool(4, 50, LbpParams { threshold: 0.03, grid: 2 }).unwrap(),
        ] {
            let text = pool.to_text();
            let back = BitPool::from_text(&text).unwrap();
            assert_eq!(back, pool);
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn pool_text_errors() {
        assert!(matches!(BitPool::from_text(""), Err(Error::Format(_))));
        assert!(matches!(BitPool::from_text("BITPOOL v1 brief 2 2 2\nip 3 3 4 4\n"), Err(Error::Format(_))));
        assert!(matches!(BitPool::from_text("BITPOOL v1 lbp 1 100 0.01\nvp 0 1\n"), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn vector_bits_are_antisymmetric(v in proptest::collection::vec(0.0f64..1.0, 2..32), i in 0usize..32, j in 0usize..32) {
            let n = v.len();
            let (i, j) = (i % n, j % n);
            prop_assume!(v[i] != v[j]);
            let input = Prepared::Vector(LbpVector::from_components(v));
            let a = eval_bit(&BitSpec::VectorPair { i: i as u16, j: j as u16 }, &input).unwrap();
            let b = eval_bit(&BitSpec::VectorPair { i: j as u16, j: i as u16 }, &input).unwrap();
            prop_assert_eq!(a as u8 + b as u8, 1);
        }

        #[test]
        fn sampling_is_pure(seed in any::<u64>(), count in 1usize..200) {
            prop_assert_eq!(sample_brief_pool(seed, count, 2, 2.0).unwrap(), sample_brief_pool(seed, count, 2, 2.0).unwrap());
            let p = LbpParams::default();
            prop_assert_eq!(sample_lbp_pool(seed, count, p).unwrap(), sample_lbp_pool(seed, count, p).unwrap());
        }
    }
}
