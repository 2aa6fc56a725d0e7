//! Grid sweeps over the interpolation weight.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AlphaGrid, FusionSet};
use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::evalkit::{judgments_for, metric, MetricKind};
use crate::scalar::Scalar;
use crate::ALL_QUERIES;

/// Per-query metric at every grid point, `[query][alpha]`, in query order.
fn metric_matrix<S: Scalar>(set: &FusionSet<S>, qrels: &Qrels, grid: &AlphaGrid, kind: MetricKind) -> Result<Vec<Vec<f64>>> {
    if set.is_empty() {
        return Err(Error::Empty("query set"));
    }
    set.queries()
        .par_iter()
        .map(|q| {
            let judgments = judgments_for(qrels, &q.query_id)?;
            grid.values()
                .iter()
                .map(|&a| metric(kind, &q.fuse(a)?, judgments))
                .collect()
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Index of the first maximum.
fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Aggregate metric for every grid alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub metric: MetricKind,
    pub alphas: Vec<f64>,
    pub query_ids: Vec<String>,
    /// `[query][alpha]`, rows in `query_ids` order.
    pub per_query: Vec<Vec<f64>>,
    pub aggregate: Vec<f64>,
    /// Smallest alpha attaining the best aggregate.
    pub best_alpha: f64,
    pub best_aggregate: f64,
}

pub fn sweep<S: Scalar>(set: &FusionSet<S>, qrels: &Qrels, grid: &AlphaGrid, kind: MetricKind) -> Result<SweepResult> {
    let per_query = metric_matrix(set, qrels, grid, kind)?;
    let aggregate: Vec<f64> = (0..grid.len())
        .map(|j| mean(per_query.iter().map(|row| row[j])))
        .collect();
    let best = first_argmax(&aggregate);
    Ok(SweepResult {
        metric: kind,
        alphas: grid.values().to_vec(),
        query_ids: set.queries().iter().map(|q| q.query_id.clone()).collect(),
        per_query,
        best_alpha: grid.values()[best],
        best_aggregate: aggregate[best],
        aggregate,
    })
}

/// The grid alpha maximizing the aggregate metric on `set`; ties go to the
/// smallest alpha.
pub fn tune_alpha<S: Scalar>(set: &FusionSet<S>, qrels: &Qrels, grid: &AlphaGrid, kind: MetricKind) -> Result<f64> {
    Ok(sweep(set, qrels, grid, kind)?.best_alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub metric: MetricKind,
    pub per_query_alpha: BTreeMap<String, f64>,
    pub per_query_metric: BTreeMap<String, f64>,
    pub aggregate_metric: f64,
    pub alpha_average: f64,
    pub count_alpha_zero: usize,
    pub count_alpha_one: usize,
    pub alpha_iqr: f64,
}

/// Picks, per query, the smallest grid alpha with the best metric.
pub fn oracle_sweep<S: Scalar>(set: &FusionSet<S>, qrels: &Qrels, grid: &AlphaGrid, kind: MetricKind) -> Result<OracleResult> {
    let matrix = metric_matrix(set, qrels, grid, kind)?;
    let mut per_query_alpha = BTreeMap::new();
    let mut per_query_metric = BTreeMap::new();
    let mut alphas = Vec::with_capacity(matrix.len());
    let mut best_values = Vec::with_capacity(matrix.len());
    for (q, row) in set.queries().iter().zip(&matrix) {
        let j = first_argmax(row);
        let alpha = grid.values()[j];
        per_query_alpha.insert(q.query_id.clone(), alpha);
        per_query_metric.insert(q.query_id.clone(), row[j]);
        alphas.push(alpha);
        best_values.push(row[j]);
    }
    Ok(OracleResult {
        metric: kind,
        aggregate_metric: mean(best_values.into_iter()),
        alpha_average: mean(alphas.iter().copied()),
        count_alpha_zero: alphas.iter().filter(|&&a| a == 0.0).count(),
        count_alpha_one: alphas.iter().filter(|&&a| a == 1.0).count(),
        alpha_iqr: iqr(&alphas)?,
        per_query_alpha,
        per_query_metric,
    })
}

/// Q3 - Q1 with linearly interpolated (type 7) quantiles.
pub fn iqr(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("values for IQR"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Validation("NaN in IQR input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok(quantile(0.75) - quantile(0.25))
}

/// Line record of a fusion report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionRecord {
    pub query_id: String,
    pub alpha: f64,
    pub metric_name: MetricKind,
    pub metric_value: f64,
}

/// Per-query records then the `ALL` aggregate, for every alpha in turn.
pub fn fusion_records(sweep: &SweepResult) -> Vec<FusionRecord> {
    let mut out = Vec::with_capacity(sweep.alphas.len() * (sweep.query_ids.len() + 1));
    for (j, &alpha) in sweep.alphas.iter().enumerate() {
        for (q, row) in sweep.query_ids.iter().zip(&sweep.per_query) {
            out.push(FusionRecord {
                query_id: q.clone(),
                alpha,
                metric_name: sweep.metric,
                metric_value: row[j],
            });
        }
        out.push(FusionRecord {
            query_id: ALL_QUERIES.into(),
            alpha,
            metric_name: sweep.metric,
            metric_value: sweep.aggregate[j],
        });
    }
    out
}

/// Line record of an oracle report. For `ALL`, `alpha` is the mean of the
/// per-query optima and the count and spread fields are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub query_id: String,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
    pub metric_name: MetricKind,
    pub metric_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_alpha_zero: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_alpha_one: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_iqr: Option<f64>,
}

pub fn oracle_records(result: &OracleResult) -> Vec<OracleRecord> {
    let mut out: Vec<OracleRecord> = result
        .per_query_alpha
        .iter()
        .map(|(q, &a)| OracleRecord {
            query_id: q.clone(),
            alpha: a,
            alpha_star: Some(a),
            metric_name: result.metric,
            metric_value: result.per_query_metric[q],
            count_alpha_zero: None,
            count_alpha_one: None,
            alpha_iqr: None,
        })
        .collect();
    out.push(OracleRecord {
        query_id: ALL_QUERIES.into(),
        alpha: result.alpha_average,
        alpha_star: None,
        metric_name: result.metric,
        metric_value: result.aggregate_metric,
        count_alpha_zero: Some(result.count_alpha_zero),
        count_alpha_one: Some(result.count_alpha_one),
        alpha_iqr: Some(result.alpha_iqr),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RelevanceJudgment;
    use crate::fuse::ZScope;
    use crate::rankers::ScoredList;

    type Fixture = (&'static str, [f64; 5], [f64; 5], &'static [&'static str]);

    // Optima verified by exhaustive evaluation over the 0.1 grid.
    const Q_HALF: Fixture = ("q_half", [2.0, 9.0, 3.0, 0.0, 6.0], [8.0, 2.0, 6.0, 5.0, 1.0], &["d1", "d2"]);
    const Q_ONE: Fixture = ("q_one", [9.0, 7.0, 0.0, 1.0, 8.0], [0.0, 3.0, 5.0, 7.0, 9.0], &["d1"]);
    const Q_ZERO: Fixture = ("q_zero", [0.0, 5.0, 4.0, 9.0, 2.0], [7.0, 9.0, 0.0, 6.0, 4.0], &["d1", "d2"]);
    const MID_PEAK: Fixture = ("mid_peak", [8.0, 3.0, 5.0, 4.0, 6.0], [0.0, 9.0, 3.0, 8.0, 2.0], &["d1", "d2"]);

    fn build(fixtures: &[Fixture]) -> (FusionSet<f64>, Qrels) {
        let mut b = BTreeMap::new();
        let mut c = BTreeMap::new();
        let mut qrels = Qrels::new();
        for (q, bs, cs, rel) in fixtures {
            let mk = |s: &[f64; 5]| {
                ScoredList::new(*q, s.iter().enumerate().map(|(i, &v)| (format!("d{}", i + 1), v)).collect()).unwrap()
            };
            b.insert(q.to_string(), mk(bs));
            c.insert(q.to_string(), mk(cs));
            for d in *rel {
                qrels
                    .insert(RelevanceJudgment {
                        query_id: q.to_string(),
                        doc_id: d.to_string(),
                        grade: 1,
                    })
                    .unwrap();
            }
        }
        (FusionSet::new(&b, &c, ZScope::Query).unwrap(), qrels)
    }

    #[test]
    fn oracle_on_planted_optima() {
        let (set, qrels) = build(&[Q_ZERO, Q_HALF, Q_ONE]);
        let r = oracle_sweep(&set, &qrels, &AlphaGrid::default(), MetricKind::Map).unwrap();
        assert_eq!(r.per_query_alpha["q_zero"], 0.0);
        assert_eq!(r.per_query_alpha["q_half"], 0.5);
        assert_eq!(r.per_query_alpha["q_one"], 1.0);
        assert_eq!(r.alpha_average, 0.5);
        assert_eq!((r.count_alpha_zero, r.count_alpha_one), (1, 1));
        assert_eq!(r.aggregate_metric, 1.0);
        let records = oracle_records(&r);
        assert_eq!(records.last().unwrap().query_id, "ALL");
    }

    #[test]
    fn tune_alpha_prefers_interior_optimum() {
        let (set, qrels) = build(&[Q_HALF, MID_PEAK]);
        assert_eq!(tune_alpha(&set, &qrels, &AlphaGrid::default(), MetricKind::Map).unwrap(), 0.5);
    }

    #[test]
    fn ties_resolve_to_smallest_alpha() {
        let same = ("q", [1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0, 5.0], &["d5"][..]);
        let (set, qrels) = build(&[same]);
        let grid = AlphaGrid::default();
        assert_eq!(tune_alpha(&set, &qrels, &grid, MetricKind::Ndcg).unwrap(), 0.0);
        let r = oracle_sweep(&set, &qrels, &grid, MetricKind::Ndcg).unwrap();
        assert_eq!(r.per_query_alpha["q"], 0.0);
        assert_eq!(r.alpha_iqr, 0.0);
    }

    #[test]
    fn dominant_endpoint() {
        let (set, qrels) = build(&[Q_ZERO]);
        let grid = AlphaGrid::from_values(vec![0.0, 1.0]).unwrap();
        assert_eq!(tune_alpha(&set, &qrels, &grid, MetricKind::Map).unwrap(), 0.0);
    }

    #[test]
    fn iqr_examples() {
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.5);
        assert_eq!(iqr(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 1.5);
        assert_eq!(iqr(&[0.3; 7]).unwrap(), 0.0);
        assert_eq!(iqr(&[0.9]).unwrap(), 0.0);
        assert!(iqr(&[]).is_err());
    }

    #[test]
    fn sweep_records_end_each_alpha_with_aggregate() {
        let (set, qrels) = build(&[Q_HALF, Q_ONE]);
        let s = sweep(&set, &qrels, &AlphaGrid::default(), MetricKind::Map).unwrap();
        let recs = fusion_records(&s);
        assert_eq!(recs.len(), 11 * 3);
        assert_eq!(recs[2].query_id, "ALL");
        assert_eq!(recs[2].metric_value, s.aggregate[0]);
    }
}
