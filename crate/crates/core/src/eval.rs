//! ROC curves and the FPR-at-95%-TPR error rate over held-out pairs.

use std::fmt::Write as _;

use crate::bitgen::BitPool;
use crate::dataset::PairSet;
use crate::selection::{auc, compute_signature, hamming, Descriptor, Signature};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: usize,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC over integer distance thresholds `0..=b`: a pair is called a match
/// when its distance is `<= threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Trapezoidal area under the points, starting from the implicit (0, 0).
    pub fn trapezoid_area(&self) -> f64 {
        let mut area = 0.0;
        let (mut fx, mut ty) = (0.0, 0.0);
        for p in &self.points {
            area += (p.fpr - fx) * (p.tpr + ty) / 2.0;
            fx = p.fpr;
            ty = p.tpr;
        }
        area
    }

    /// CSV with header `threshold,fpr,tpr`, one row per threshold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr).unwrap();
        }
        out
    }
}

pub fn roc(match_hist: &[u64], nonmatch_hist: &[u64]) -> Result<RocCurve> {
    let area = auc(match_hist, nonmatch_hist)?;
    let len = match_hist.len().max(nonmatch_hist.len());
    let total_m: u64 = match_hist.iter().sum();
    let total_n: u64 = nonmatch_hist.iter().sum();
    let (mut cm, mut cn) = (0u64, 0u64);
    let points = (0..len)
        .map(|t| {
            cm += match_hist.get(t).copied().unwrap_or(0);
            cn += nonmatch_hist.get(t).copied().unwrap_or(0);
            RocPoint {
                threshold: t,
                fpr: cn as f64 / total_n as f64,
                tpr: cm as f64 / total_m as f64,
            }
        })
        .collect();
    Ok(RocCurve { points, auc: area })
}

/// FPR at the smallest threshold whose TPR reaches `target_tpr`. Thresholds
/// are integers, so there is no interpolation between them.
pub fn fpr_at_tpr(curve: &RocCurve, target_tpr: f64) -> f64 {
    curve
        .points
        .iter()
        .find(|p| p.tpr >= target_tpr)
        .or(curve.points.last())
        .map_or(1.0, |p| p.fpr)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    pub fpr95: f64,
    pub curve: RocCurve,
}

/// Match and non-match distance histograms of a pair set under a descriptor.
pub fn distance_histograms(descriptor: &Descriptor, pool: &BitPool, pairs: &PairSet) -> Result<(Vec<u64>, Vec<u64>)> {
    descriptor.check_pool(pool.len())?;
    let mut needed = vec![false; pairs.patches().len()];
    for p in pairs.pairs() {
        needed[p.a] = true;
        needed[p.b] = true;
    }
    let ids: Vec<usize> = (0..needed.len()).filter(|&i| needed[i]).collect();
    let sigs: Vec<Signature> = {
        use rayon::prelude::*;
        ids.par_iter()
            .map(|&i| compute_signature(descriptor, pool, &pairs.patches()[i]))
            .collect::<Result<_>>()?
    };
    let mut slot = vec![usize::MAX; needed.len()];
    for (s, &i) in ids.iter().enumerate() {
        slot[i] = s;
    }
    let b = descriptor.len();
    let mut match_hist = vec![0u64; b + 1];
    let mut nonmatch_hist = vec![0u64; b + 1];
    for p in pairs.pairs() {
        let d = hamming(&sigs[slot[p.a]], &sigs[slot[p.b]])? as usize;
        if p.label.is_match() {
            match_hist[d] += 1;
        } else {
            nonmatch_hist[d] += 1;
        }
    }
    Ok((match_hist, nonmatch_hist))
}

pub fn evaluate_descriptor(descriptor: &Descriptor, pool: &BitPool, test: &PairSet) -> Result<EvalReport> {
    let (m, n) = distance_histograms(descriptor, pool, test)?;
    let curve = roc(&m, &n)?;
    Ok(EvalReport {
        auc: curve.auc,
        fpr95: fpr_at_tpr(&curve, 0.95),
        curve,
    })
}

/// One row of the `method,train,test,run,auc,fpr95` report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub train: String,
    pub test: String,
    pub run: usize,
    pub auc: f64,
    pub fpr95: f64,
}

pub const REPORT_HEADER: &str = "method,train,test,run,auc,fpr95";

pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        for field in [&r.method, &r.train, &r.test] {
            if field.contains([',', '\n']) {
                return Err(Error::Param(format!("report field `{field}` contains a separator")));
            }
        }
        writeln!(out, "{},{},{},{},{},{}", r.method, r.train, r.test, r.run, r.auc, r.fpr95).unwrap();
    }
    Ok(out)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
