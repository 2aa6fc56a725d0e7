//! TREC run files: `query_id Q0 doc_id rank score tag`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::jsonl;
use crate::rankers::ScoredList;
use crate::scalar::Scalar;

/// Writes rankings in the order given, scores printed with six decimals.
pub fn write_run<'a, S: Scalar, W: Write>(
    lists: impl IntoIterator<Item = &'a ScoredList<S>>,
    tag: &str,
    out: &mut W,
) -> std::io::Result<()> {
    for list in lists {
        for (i, (doc, score)) in list.entries().iter().enumerate() {
            writeln!(out, "{} Q0 {} {} {:.6} {}", list.query_id(), doc, i + 1, score.as_f64(), tag)?;
        }
    }
    Ok(())
}

/// Reads a run into per-query rankings keyed by query id.
///
/// When a query's ranks are exactly 1..n in file order with non-increasing
/// scores, that order is kept as written, so rankings survive a round trip even
/// where rounding made printed scores tie. Otherwise the query is re-sorted by
/// score (then doc id) and a warning is logged.
pub fn read_run<S: Scalar, R: BufRead>(reader: R, origin: &Path) -> Result<BTreeMap<String, ScoredList<S>>> {
    let mut raw: BTreeMap<String, Vec<(usize, String, S)>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(Error::parse(origin, line_no, format!("expected 6 columns, found {}", cols.len())));
        }
        let rank: usize = cols[3]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad rank {:?}", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad score {:?}", cols[4])))?;
        if !score.is_finite() {
            return Err(Error::parse(origin, line_no, format!("non-finite score {:?}", cols[4])));
        }
        raw.entry(cols[0].to_owned())
            .or_default()
            .push((rank, cols[2].to_owned(), S::of(score)));
    }
    let mut out = BTreeMap::new();
    for (query_id, rows) in raw {
        let contiguous = rows.iter().enumerate().all(|(i, r)| r.0 == i + 1);
        let entries: Vec<(String, S)> = rows.into_iter().map(|(_, d, s)| (d, s)).collect();
        let list = if contiguous {
            match ScoredList::from_ranked(query_id.clone(), entries.clone()) {
                Ok(list) => list,
                Err(Error::Validation(msg)) => {
                    log::warn!("{}: {msg}; re-ranking by score", origin.display());
                    ScoredList::new(query_id.clone(), entries)?
                }
                Err(e) => return Err(e),
            }
        } else {
            log::warn!(
                "{}: ranks for query {query_id:?} are not contiguous from 1; re-ranking by score",
                origin.display()
            );
            ScoredList::new(query_id.clone(), entries)?
        };
        out.insert(query_id, list);
    }
    Ok(out)
}

pub fn load_run<S: Scalar>(path: impl AsRef<Path>) -> Result<BTreeMap<String, ScoredList<S>>> {
    let path = path.as_ref();
    read_run(jsonl::open(path)?, path)
}
