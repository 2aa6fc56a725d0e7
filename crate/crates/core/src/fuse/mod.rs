//! Score fusion: z-scaling, linear interpolation, alpha tuning and the
//! per-query oracle.

mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rankers::ScoredList;
use crate::scalar::{ordered_sum, Scalar};

pub use oracle::{
    fusion_records, iqr, oracle_records, oracle_sweep, sweep, tune_alpha, FusionRecord, OracleRecord,
    OracleResult, SweepResult,
};

/// (s - mean) / std with the population std. Constant input maps to zeros.
pub fn z_scale<S: Scalar>(scores: &[S]) -> Result<Vec<S>> {
    if scores.is_empty() {
        return Err(Error::Empty("score list"));
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Ok(vec![S::zero(); scores.len()]);
    }
    let (mean, std) = moments(scores.iter().copied(), scores.len());
    Ok(scores.iter().map(|&s| (s - mean) / std).collect())
}

fn moments<S: Scalar>(values: impl Iterator<Item = S> + Clone, n: usize) -> (S, S) {
    let nf = S::of_count(n);
    let mean = ordered_sum(values.clone()) / nf;
    let var = ordered_sum(values.map(|v| (v - mean) * (v - mean))) / nf;
    (mean, var.sqrt())
}

/// Where z-scaling statistics are gathered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZScope {
    /// Per query over its candidate pool.
    #[default]
    Query,
    /// Over every score of the run.
    Global,
}

impl FromStr for ZScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "query" => Ok(ZScope::Query),
            "global" => Ok(ZScope::Global),
            other => Err(Error::Config(format!("unknown z-scope {other:?} (expected query or global)"))),
        }
    }
}

/// Interpolation weights, strictly increasing within [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid {
    values: Vec<f64>,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self::with_step(0.1).expect("default grid")
    }
}

impl AlphaGrid {
    /// `0, step, 2 step, ..., 1`, computed as i/n so the endpoints are exact.
    /// `1 / step` must be an integer.
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::Config(format!("grid step {step} must lie in (0, 1]")));
        }
        let n = (1.0 / step).round();
        if (n * step - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("grid step {step} does not divide 1")));
        }
        let n = n as usize;
        Ok(Self {
            values: (0..=n).map(|i| i as f64 / n as f64).collect(),
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("alpha grid"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(format!("alpha grid {values:?} leaves [0, 1]")));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("alpha grid {values:?} is not strictly increasing")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha {alpha} must lie in [0, 1]")))
    }
}

/// One query's z-scaled scores from both rankers, aligned on doc id.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedQuery<S> {
    pub query_id: String,
    pub doc_ids: Vec<String>,
    pub bm25: Vec<S>,
    pub ctx: Vec<S>,
}

impl<S: Scalar> AlignedQuery<S> {
    /// α·z(bm25) + (1 - α)·z(ctx) for every candidate.
    pub fn fuse(&self, alpha: f64) -> Result<ScoredList<S>> {
        check_alpha(alpha)?;
        let a = S::of(alpha);
        let b = S::one() - a;
        let entries = self
            .doc_ids
            .iter()
            .zip(self.bm25.iter().zip(&self.ctx))
            .map(|(d, (&x, &y))| (d.clone(), a * x + b * y))
            .collect();
        ScoredList::new(self.query_id.clone(), entries)
    }
}

fn align<S: Scalar>(bm25: &ScoredList<S>, ctx: &ScoredList<S>) -> Result<(Vec<String>, Vec<S>, Vec<S>)> {
    let query_id = bm25.query_id();
    if ctx.query_id() != query_id {
        return Err(Error::Alignment {
            query_id: query_id.to_owned(),
            detail: format!("paired with a list for query {:?}", ctx.query_id()),
        });
    }
    let cmap: BTreeMap<&str, S> = ctx.entries().iter().map(|(d, s)| (d.as_str(), *s)).collect();
    let bmap: BTreeMap<&str, S> = bm25.entries().iter().map(|(d, s)| (d.as_str(), *s)).collect();
    let bset: BTreeSet<&str> = bmap.keys().copied().collect();
    let cset: BTreeSet<&str> = cmap.keys().copied().collect();
    if bset != cset {
        let diff: Vec<&str> = bset.symmetric_difference(&cset).copied().collect();
        return Err(Error::Alignment {
            query_id: query_id.to_owned(),
            detail: format!("candidates only in one list: {diff:?}"),
        });
    }
    let doc_ids = bmap.keys().map(|d| d.to_string()).collect();
    let b = bmap.values().copied().collect();
    let c = cmap.values().copied().collect();
    Ok((doc_ids, b, c))
}

/// Fuses one query's BM25 and contextualized rankings with per-query
/// z-scaling.
pub fn interpolate<S: Scalar>(bm25: &ScoredList<S>, ctx: &ScoredList<S>, alpha: f64) -> Result<ScoredList<S>> {
    check_alpha(alpha)?;
    let (doc_ids, b, c) = align(bm25, ctx)?;
    AlignedQuery {
        query_id: bm25.query_id().to_owned(),
        doc_ids,
        bm25: z_scale(&b)?,
        ctx: z_scale(&c)?,
    }
    .fuse(alpha)
}

/// Every query of a run pair, aligned and z-scaled once so that sweeping the
/// grid only recombines.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionSet<S> {
    queries: Vec<AlignedQuery<S>>,
}

impl<S: Scalar> FusionSet<S> {
    /// Both runs must rank the same queries over the same candidates.
    pub fn new(bm25: &BTreeMap<String, ScoredList<S>>, ctx: &BTreeMap<String, ScoredList<S>>, scope: ZScope) -> Result<Self> {
        let bq: BTreeSet<&String> = bm25.keys().collect();
        let cq: BTreeSet<&String> = ctx.keys().collect();
        if bq != cq {
            let diff: Vec<&str> = bq.symmetric_difference(&cq).map(|s| s.as_str()).collect();
            return Err(Error::Alignment {
                query_id: "*".into(),
                detail: format!("queries only in one run: {diff:?}"),
            });
        }
        if bm25.is_empty() {
            return Err(Error::Empty("run"));
        }
        let mut raw = Vec::with_capacity(bm25.len());
        for (q, b) in bm25 {
            let (doc_ids, bs, cs) = align(b, &ctx[q])?;
            raw.push((q.clone(), doc_ids, bs, cs));
        }
        let queries = match scope {
            ZScope::Query => raw
                .into_iter()
                .map(|(query_id, doc_ids, b, c)| {
                    Ok(AlignedQuery {
                        query_id,
                        doc_ids,
                        bm25: z_scale(&b)?,
                        ctx: z_scale(&c)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            ZScope::Global => {
                let scaler = |pick: fn(&(String, Vec<String>, Vec<S>, Vec<S>)) -> &Vec<S>| {
                    let n = raw.iter().map(|r| pick(r).len()).sum();
                    let all = raw.iter().flat_map(|r| pick(r).iter().copied());
                    let first = pick(&raw[0])[0];
                    if all.clone().all(|v| v == first) {
                        None
                    } else {
                        Some(moments(all, n))
                    }
                };
                let bstat = scaler(|r| &r.2);
                let cstat = scaler(|r| &r.3);
                let apply = |v: Vec<S>, stat: Option<(S, S)>| match stat {
                    None => vec![S::zero(); v.len()],
                    Some((m, s)) => v.into_iter().map(|x| (x - m) / s).collect(),
                };
                raw.into_iter()
                    .map(|(query_id, doc_ids, b, c)| AlignedQuery {
                        query_id,
                        doc_ids,
                        bm25: apply(b, bstat),
                        ctx: apply(c, cstat),
                    })
                    .collect()
            }
        };
        Ok(Self { queries })
    }

    /// Queries in id order.
    pub fn queries(&self) -> &[AlignedQuery<S>] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Keeps only the listed queries.
    pub fn restrict(&self, query_ids: &BTreeSet<String>) -> Self {
        Self {
            queries: self
                .queries
                .iter()
                .filter(|q| query_ids.contains(&q.query_id))
                .cloned()
                .collect(),
        }
    }

    pub fn fuse(&self, alpha: f64) -> Result<Vec<ScoredList<S>>> {
        self.queries.iter().map(|q| q.fuse(alpha)).collect()
    }
}

impl fmt::Display for ZScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZScope::Query => "query",
            ZScope::Global => "global",
        })
    }
}
