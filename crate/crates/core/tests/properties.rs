use std::collections::BTreeMap;
use std::path::Path;

use lexica::evalkit::{average_precision, ndcg, read_run, write_run};
use lexica::fuse::{interpolate, z_scale, AlphaGrid};
use lexica::lexindex::ImpactStore;
use lexica::rankers::{bm25_idf, bm25_term_score, tildev2_score, Bm25Params};
use lexica::{ScoredList32, ScoredList64};
use proptest::prelude::*;

fn scores(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![(-50i32..50).prop_map(f64::from), -1e3f64..1e3], 1..max_len)
}

fn ranked(q: &str, s: &[f64]) -> ScoredList64 {
    ScoredList64::new(q, s.iter().enumerate().map(|(i, &v)| (format!("d{i:02}"), v)).collect()).unwrap()
}

proptest! {
    #[test]
    fn scored_lists_sort_by_score_then_doc_id(s in scores(40)) {
        let l = ranked("q", &s);
        for w in l.entries().windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
    }

    #[test]
    fn z_scaling_centers_and_normalizes(s in scores(40)) {
        let z = z_scale(&s).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
        let var = z.iter().map(|x| x * x).sum::<f64>() / n;
        prop_assert!(var.abs() < 1e-9 || (var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interpolation_endpoints_keep_permutations(b in scores(30), c in scores(30)) {
        let n = b.len().min(c.len());
        let (lb, lc) = (ranked("q", &b[..n]), ranked("q", &c[..n]));
        let ids = |l: &ScoredList64| l.doc_ids().map(str::to_owned).collect::<Vec<_>>();
        prop_assert_eq!(ids(&interpolate(&lb, &lc, 1.0).unwrap()), ids(&lb));
        prop_assert_eq!(ids(&interpolate(&lb, &lc, 0.0).unwrap()), ids(&lc));
    }

    #[test]
    fn metrics_stay_in_unit_interval(s in scores(30), rel in prop::collection::btree_set(0usize..35, 1..6)) {
        let l = ranked("q", &s);
        let judgments: BTreeMap<String, u8> = rel.iter().map(|i| (format!("d{i:02}"), 1)).collect();
        for v in [average_precision(&l, &judgments).unwrap(), ndcg(&l, &judgments).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn run_files_round_trip(s in prop::collection::vec(-1e3f64..1e3, 1..30)) {
        let rounded: Vec<f64> = s.iter().map(|v| (v * 1e6).round() / 1e6).collect();
        let l = ranked("q1", &rounded);
        let mut buf = Vec::new();
        write_run(std::iter::once(&l), "t", &mut buf).unwrap();
        let back = read_run::<f64, _>(buf.as_slice(), Path::new("mem")).unwrap();
        prop_assert_eq!(back["q1"].doc_ids().collect::<Vec<_>>(), l.doc_ids().collect::<Vec<_>>());
    }

    #[test]
    fn bm25_grows_with_tf(tf in 0u32..200, n in 1u64..10_000, dl in 200f64..400.0, avg in 1f64..300.0) {
        let p = Bm25Params::<f64>::default();
        let idf = bm25_idf::<f64>(n, (n / 2).max(1));
        prop_assert!(idf > 0.0);
        prop_assert!(bm25_term_score(f64::from(tf + 1), idf, dl, avg, &p) > bm25_term_score(f64::from(tf), idf, dl, avg, &p));
    }

    #[test]
    fn tildev2_ignores_query_order(mut q in prop::collection::vec(0u32..20, 0..15), w in prop::collection::vec((0u32..20, 0f64..5.0), 0..30)) {
        let mut store = ImpactStore::<f64>::new(20);
        store.insert("d", w).unwrap();
        let a = tildev2_score(&q, "d", &store).unwrap();
        q.reverse();
        prop_assert_eq!(a, tildev2_score(&q, "d", &store).unwrap());
    }

    #[test]
    fn alpha_grid_spans_unit_interval(n in 1usize..50) {
        let g = AlphaGrid::with_step(1.0 / n as f64).unwrap();
        prop_assert_eq!(g.len(), n + 1);
        prop_assert_eq!(g.values()[0], 0.0);
        prop_assert_eq!(g.values()[n], 1.0);
    }
}

#[test]
fn single_precision_lists_order_like_double() {
    let s = [3.5f32, -1.0, 3.5, 7.25, 0.0];
    let a = ScoredList32::new("q", s.iter().enumerate().map(|(i, &v)| (format!("d{i:02}"), v)).collect()).unwrap();
    let b = ranked("q", &s.map(f64::from));
    assert!(a.doc_ids().eq(b.doc_ids()));
}
