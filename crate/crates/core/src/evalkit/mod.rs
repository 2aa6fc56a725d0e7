//! Ranking metrics, significance testing and TREC run files.

mod run;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::rankers::ScoredList;
use crate::scalar::Scalar;

pub use run::{load_run, read_run, write_run};
pub use stats::{bonferroni, paired_t_test, significance_reports, t_test_on_differences, SignificanceReport, TTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Map,
    Ndcg,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Map => "map",
            MetricKind::Ndcg => "ndcg",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "map" => Ok(MetricKind::Map),
            "ndcg" => Ok(MetricKind::Ndcg),
            other => Err(Error::Config(format!("unknown metric {other:?} (expected map or ndcg)"))),
        }
    }
}

fn num_relevant(query_id: &str, judgments: &BTreeMap<String, u8>) -> Result<usize> {
    match judgments.values().filter(|&&g| g > 0).count() {
        0 => Err(Error::Validation(format!("query {query_id:?} has no relevant documents"))),
        n => Ok(n),
    }
}

fn is_relevant(judgments: &BTreeMap<String, u8>, doc_id: &str) -> bool {
    judgments.get(doc_id).is_some_and(|&g| g > 0)
}

/// Mean precision at the rank of each relevant document, divided by the number
/// of judged relevant documents. Unjudged candidates are non-relevant.
pub fn average_precision<S: Scalar>(ranking: &ScoredList<S>, judgments: &BTreeMap<String, u8>) -> Result<f64> {
    let total = num_relevant(ranking.query_id(), judgments)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, doc) in ranking.doc_ids().enumerate() {
        if is_relevant(judgments, doc) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / total as f64)
}

/// Binary-gain nDCG over the whole list with a 1/log2(rank + 1) discount.
pub fn ndcg<S: Scalar>(ranking: &ScoredList<S>, judgments: &BTreeMap<String, u8>) -> Result<f64> {
    let total = num_relevant(ranking.query_id(), judgments)?;
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = ranking
        .doc_ids()
        .enumerate()
        .filter(|(_, d)| is_relevant(judgments, d))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let ideal: f64 = (1..=total).map(discount).sum();
    Ok(dcg / ideal)
}

pub fn metric<S: Scalar>(kind: MetricKind, ranking: &ScoredList<S>, judgments: &BTreeMap<String, u8>) -> Result<f64> {
    match kind {
        MetricKind::Map => average_precision(ranking, judgments),
        MetricKind::Ndcg => ndcg(ranking, judgments),
    }
}

pub(crate) fn judgments_for<'q>(qrels: &'q Qrels, query_id: &str) -> Result<&'q BTreeMap<String, u8>> {
    qrels.for_query(query_id).ok_or_else(|| Error::NotFound {
        what: "query in qrels",
        id: query_id.to_owned(),
    })
}

/// One metric value per query.
#[derive(Debug, Clone, PartialEq)]
pub struct PerQueryMetrics {
    pub metric: MetricKind,
    pub values: BTreeMap<String, f64>,
}

impl PerQueryMetrics {
    pub fn new(metric: MetricKind, values: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((q, v)) = values.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange(format!("{metric} for query {q:?} is {v}")));
        }
        Ok(Self { metric, values })
    }
}

/// Arithmetic mean over queries, accumulated in query-id order.
pub fn aggregate(per_query: &PerQueryMetrics) -> Result<f64> {
    if per_query.values.is_empty() {
        return Err(Error::Empty("per-query metrics"));
    }
    let sum: f64 = per_query.values.values().fold(0.0, |acc, v| acc + v);
    Ok(sum / per_query.values.len() as f64)
}

/// Evaluates every ranking. Each ranked query must be judged.
pub fn evaluate<S: Scalar>(rankings: &[ScoredList<S>], qrels: &Qrels, kind: MetricKind) -> Result<PerQueryMetrics> {
    let values = rankings
        .par_iter()
        .map(|r| {
            let j = judgments_for(qrels, r.query_id())?;
            Ok((r.query_id().to_owned(), metric(kind, r, j)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut map = BTreeMap::new();
    for (q, v) in values {
        if map.insert(q.clone(), v).is_some() {
            return Err(Error::Conflict { what: "query in run", id: q });
        }
    }
    PerQueryMetrics::new(kind, map)
}

/// Line record of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub query_id: String,
    pub metric: MetricKind,
    pub value: f64,
}

/// Per-query records followed by the `ALL` aggregate.
pub fn eval_records(per_query: &PerQueryMetrics) -> Result<Vec<EvalRecord>> {
    let mut out: Vec<EvalRecord> = per_query
        .values
        .iter()
        .map(|(q, &v)| EvalRecord {
            query_id: q.clone(),
            metric: per_query.metric,
            value: v,
        })
        .collect();
    out.push(EvalRecord {
        query_id: crate::ALL_QUERIES.to_owned(),
        metric: per_query.metric,
        value: aggregate(per_query)?,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(docs: &[&str]) -> ScoredList<f64> {
        let n = docs.len();
        ScoredList::new("q", docs.iter().enumerate().map(|(i, d)| (d.to_string(), (n - i) as f64)).collect()).unwrap()
    }

    fn judged(rel: &[&str]) -> BTreeMap<String, u8> {
        rel.iter().map(|d| (d.to_string(), 1)).collect()
    }

    #[test]
    fn average_precision_examples() {
        let r = ranking(&["a", "b", "c", "d", "e"]);
        assert!((average_precision(&r, &judged(&["a", "c"])).unwrap() - 0.833_333_333_333_333_4).abs() < 1e-12);
        assert_eq!(average_precision(&r, &judged(&["a", "b"])).unwrap(), 1.0);
        assert!((average_precision(&r, &judged(&["e"])).unwrap() - 0.2).abs() < 1e-15);
        assert!(average_precision(&r, &judged(&[])).is_err());
    }

    #[test]
    fn ndcg_examples() {
        let r = ranking(&["a", "b"]);
        assert!((ndcg(&r, &judged(&["b"])).unwrap() - 0.630_929_753_571_457_5).abs() < 1e-12);
        assert_eq!(ndcg(&r, &judged(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(ndcg(&r, &judged(&["a"])).unwrap(), 1.0);
    }

    #[test]
    fn unjudged_and_nonrelevant_judgments() {
        let r = ranking(&["a", "b", "c"]);
        let mut j = judged(&["c"]);
        j.insert("a".into(), 0);
        assert!((average_precision(&r, &j).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn aggregate_examples() {
        let m = |v: &[(&str, f64)]| {
            PerQueryMetrics::new(MetricKind::Map, v.iter().map(|(q, x)| (q.to_string(), *x)).collect()).unwrap()
        };
        assert_eq!(aggregate(&m(&[("q1", 1.0), ("q2", 0.0)])).unwrap(), 0.5);
        assert_eq!(aggregate(&m(&[("q1", 0.7)])).unwrap(), 0.7);
        assert!(aggregate(&m(&[])).is_err());
        assert!(PerQueryMetrics::new(MetricKind::Map, [("q".to_string(), 1.5)].into()).is_err());
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("MAP".parse::<MetricKind>().unwrap(), MetricKind::Map);
        assert_eq!("ndcg".parse::<MetricKind>().unwrap(), MetricKind::Ndcg);
        assert!("p@10".parse::<MetricKind>().is_err());
    }
}
