//! Paired t-test and Bonferroni correction.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::PerQueryMetrics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    /// The differences have zero variance. Identical systems report t = 0 and
    /// p = 1; a constant nonzero shift reports an infinite t and p = 0.
    pub degenerate: bool,
}

/// Two-sided paired t-test over the per-query differences `a - b`.
pub fn paired_t_test(a: &PerQueryMetrics, b: &PerQueryMetrics) -> Result<TTest> {
    let qa: BTreeSet<&String> = a.values.keys().collect();
    let qb: BTreeSet<&String> = b.values.keys().collect();
    if qa != qb {
        let diff: Vec<&str> = qa.symmetric_difference(&qb).map(|s| s.as_str()).collect();
        return Err(Error::Alignment {
            query_id: "*".into(),
            detail: format!("query sets differ on {diff:?}"),
        });
    }
    let d: Vec<f64> = a.values.iter().map(|(q, va)| va - b.values[q]).collect();
    t_test_on_differences(&d)
}

/// Two-sided one-sample t-test of paired differences against zero.
pub fn t_test_on_differences(d: &[f64]) -> Result<TTest> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Validation(format!("paired t-test needs at least 2 queries, got {n}")));
    }
    if d.iter().all(|&x| x == d[0]) {
        let (t, p) = if d[0] == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(d[0]), 0.0)
        };
        return Ok(TTest { t, p, degenerate: true });
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = mean / (var.sqrt() / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::Validation(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTest { t, p, degenerate: false })
}

/// min(1, p * k).
pub fn bonferroni(p: f64, num_comparisons: usize) -> f64 {
    (p * num_comparisons.max(1) as f64).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub system_a: String,
    pub system_b: String,
    #[serde(rename = "t")]
    pub t_statistic: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub num_comparisons: usize,
    pub adjusted_p: f64,
    pub significant: bool,
    pub degenerate: bool,
}

/// Tests every unordered pair of systems, in input order. `num_comparisons`
/// defaults to the number of pairs.
pub fn significance_reports(
    systems: &[(String, PerQueryMetrics)],
    num_comparisons: Option<usize>,
) -> Result<Vec<SignificanceReport>> {
    if systems.len() < 2 {
        return Err(Error::Validation("significance testing needs at least two systems".into()));
    }
    let pairs = systems.len() * (systems.len() - 1) / 2;
    let k = num_comparisons.unwrap_or(pairs);
    if k == 0 {
        return Err(Error::Config("--num-comparisons must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(pairs);
    for (i, (name_a, a)) in systems.iter().enumerate() {
        for (name_b, b) in &systems[i + 1..] {
            if a.metric != b.metric {
                return Err(Error::Validation(format!(
                    "{name_a} reports {} but {name_b} reports {}",
                    a.metric, b.metric
                )));
            }
            let test = paired_t_test(a, b).map_err(|e| match e {
                Error::Alignment { detail, .. } => Error::Alignment {
                    query_id: format!("{name_a} vs {name_b}"),
                    detail,
                },
                other => other,
            })?;
            let adjusted_p = bonferroni(test.p, k);
            out.push(SignificanceReport {
                system_a: name_a.clone(),
                system_b: name_b.clone(),
                t_statistic: test.t,
                p_value: test.p,
                num_comparisons: k,
                adjusted_p,
                significant: adjusted_p < 0.05,
                degenerate: test.degenerate,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::MetricKind;

    fn pq(v: &[f64]) -> PerQueryMetrics {
        PerQueryMetrics {
            metric: MetricKind::Map,
            values: v.iter().enumerate().map(|(i, x)| (format!("q{i}"), *x)).collect(),
        }
    }

    #[test]
    fn reference_t_test() {
        let a = pq(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let b = pq(&[0.0; 5]);
        // Differences scaled by 0.1 leave t and p unchanged.
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t - 4.242_640_687_119_285).abs() < 1e-9, "{}", r.t);
        assert!((r.p - 0.013_235_599_563_682_695).abs() < 1e-8, "{}", r.p);
        let s = paired_t_test(&b, &a).unwrap();
        assert_eq!(s.t, -r.t);
        assert_eq!(s.p, r.p);
    }

    #[test]
    fn degenerate_cases() {
        let a = pq(&[0.3, 0.6, 0.9]);
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p, r.degenerate), (0.0, 1.0, true));
        let b = pq(&[0.1, 0.4, 0.7]);
        let c = pq(&[0.5, 0.5, 0.5]);
        let d = pq(&[0.25, 0.25, 0.25]);
        let r = paired_t_test(&c, &d).unwrap();
        assert_eq!((r.p, r.degenerate), (0.0, true));
        assert!(r.t.is_infinite() && r.t > 0.0);
        assert!(paired_t_test(&a, &b).is_ok());
        assert!(paired_t_test(&pq(&[0.1]), &pq(&[0.2])).is_err());
    }

    #[test]
    fn mismatched_queries() {
        let a = pq(&[0.1, 0.2]);
        let mut b = pq(&[0.1, 0.2]);
        b.values.insert("extra".into(), 0.3);
        let err = paired_t_test(&a, &b).unwrap_err();
        assert!(err.to_string().contains("extra"));
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni(0.01, 8), 0.08);
        assert_eq!(bonferroni(0.5, 3), 1.0);
        assert_eq!(bonferroni(0.037, 1), 0.037);
    }

    #[test]
    fn reports_cover_all_pairs() {
        let systems = vec![
            ("a".to_string(), pq(&[0.1, 0.5, 0.9])),
            ("b".to_string(), pq(&[0.2, 0.4, 0.3])),
            ("c".to_string(), pq(&[0.1, 0.1, 0.2])),
        ];
        let r = significance_reports(&systems, None).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|x| x.num_comparisons == 3));
        assert_eq!((r[2].system_a.as_str(), r[2].system_b.as_str()), ("b", "c"));
        let r = significance_reports(&systems, Some(8)).unwrap();
        assert_eq!(r[0].adjusted_p, bonferroni(r[0].p_value, 8));
    }
}
