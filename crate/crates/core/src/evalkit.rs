//! Error metrics and training traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::headmap::{associate_labels, AssociationConfig, HeadSet};
use crate::learner::Pool;
use crate::synthdata::LabeledSample;
use crate::Label;

/// Top-n error keyed by n.
pub type TopnErrors = BTreeMap<usize, f64>;

/// Callback that measures a pool at a training checkpoint.
pub type Probe<'a> = dyn FnMut(&Pool) -> Result<TopnErrors> + 'a;

/// Fraction of samples whose true label is not among the first `n` predictions.
pub fn topn_error<P: AsRef<[Label]>>(predictions: &[P], truths: &[Label], n: usize) -> Result<f64> {
    check_dim(truths.len(), predictions.len())?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if truths.is_empty() {
        return Ok(0.0);
    }
    let mut misses = 0usize;
    for (pred, truth) in predictions.iter().zip(truths) {
        let pred = pred.as_ref();
        if pred.len() < n {
            return Err(Error::invalid(format!(
                "prediction list of length {} is shorter than n = {n}",
                pred.len()
            )));
        }
        if !pred[..n].contains(truth) {
            misses += 1;
        }
    }
    Ok(misses as f64 / truths.len() as f64)
}

/// Integer confusion matrix with labelled rows and columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub rows: Vec<Label>,
    pub cols: Vec<Label>,
    pub counts: Vec<Vec<u64>>,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Sum of entries whose row and column labels agree.
    pub fn matched(&self) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| self.cols.iter().position(|c| c == r).map(|j| self.counts[i][j]))
            .sum()
    }

    pub fn get(&self, row: Label, col: Label) -> u64 {
        match (
            self.rows.iter().position(|r| *r == row),
            self.cols.iter().position(|c| *c == col),
        ) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    /// Tab-separated layout: a header row of column labels, then one row per
    /// true label.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in &self.cols {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(&self.counts) {
            let _ = write!(out, "{r}");
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Confusion matrix over the union of predicted and true labels; rows are
/// truths, columns predictions.
pub fn confusion(predictions: &[Label], truths: &[Label]) -> Result<Confusion> {
    check_dim(truths.len(), predictions.len())?;
    let labels: Vec<Label> = truths
        .iter()
        .chain(predictions)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (p, t) in predictions.iter().zip(truths) {
        counts[index[t]][index[p]] += 1;
    }
    Ok(Confusion {
        rows: labels.clone(),
        cols: labels,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub sample_index: usize,
    pub topn_errors: TopnErrors,
    pub wall_ms: f64,
    pub rotations_fired: u64,
    pub shifts_fired: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub checkpoints: Vec<Checkpoint>,
}

impl RunTrace {
    pub fn push(&mut self, cp: Checkpoint) -> Result<()> {
        if let Some(last) = self.checkpoints.last() {
            if cp.sample_index <= last.sample_index {
                return Err(Error::invalid("checkpoint sample indices must increase"));
            }
        }
        if cp.topn_errors.values().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::invalid("error rates must lie in [0, 1]"));
        }
        self.checkpoints.push(cp);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// CSV with columns `sample_index,top1,top3,top5,wall_ms,shifts,rotations`.
    /// Missing error entries are left empty. With `include_wall` false the
    /// wall-clock column is written as 0 so the file is reproducible.
    pub fn to_csv(&self, include_wall: bool) -> String {
        let mut out = String::from("sample_index,top1,top3,top5,wall_ms,shifts,rotations\n");
        for cp in &self.checkpoints {
            let err = |n: usize| cp.topn_errors.get(&n).map(|e| e.to_string()).unwrap_or_default();
            let wall = if include_wall { cp.wall_ms } else { 0.0 };
            let _ = writeln!(
                out,
                "{},{},{},{},{:.3},{},{}",
                cp.sample_index,
                err(1),
                err(3),
                err(5),
                wall,
                cp.shifts_fired,
                cp.rotations_fired
            );
        }
        out
    }
}

/// Top-n errors and the Top-1 confusion matrix of a set of rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub samples: usize,
    pub topn_errors: TopnErrors,
    pub confusion: Confusion,
}

/// Scores ranked predictions against `truths`. Each `n` is clamped to the
/// shortest ranking, so asking for Top-5 with four classes gives Top-4.
pub fn score_rankings(predictions: &[Vec<Label>], truths: &[Label], ns: &[usize]) -> Result<Evaluation> {
    check_dim(truths.len(), predictions.len())?;
    let width = predictions.iter().map(Vec::len).min().unwrap_or(1).max(1);
    let topn_errors = ns
        .iter()
        .map(|&n| Ok((n, topn_error(predictions, truths, n.min(width))?)))
        .collect::<Result<TopnErrors>>()?;
    let top1: Vec<Label> = predictions.iter().map(|p| p[0]).collect();
    Ok(Evaluation {
        samples: truths.len(),
        topn_errors,
        confusion: confusion(&top1, truths)?,
    })
}

/// Ranks every test sample with `heads` and scores the rankings.
pub fn evaluate_heads(pool: &Pool, heads: &HeadSet, test: &[LabeledSample], ns: &[usize]) -> Result<Evaluation> {
    let max_n = ns.iter().copied().max().unwrap_or(1).clamp(1, heads.len().max(1));
    let predictions = test
        .iter()
        .map(|s| heads.classify_topn(pool, &s.x, max_n))
        .collect::<Result<Vec<_>>>()?;
    let truths: Vec<Label> = test.iter().map(|s| s.label).collect();
    score_rankings(&predictions, &truths, ns)
}

/// Associates labels on `calib` and measures Top-n errors on `test`, without
/// touching the pool. Values of `n` larger than the class count are clamped.
pub fn probe_pool(
    pool: &Pool,
    calib: &[LabeledSample],
    test: &[LabeledSample],
    ns: &[usize],
    assoc: &AssociationConfig,
) -> Result<TopnErrors> {
    let heads = associate_labels(pool, calib, assoc)?;
    Ok(evaluate_heads(pool, &heads, test, ns)?.topn_errors)
}
