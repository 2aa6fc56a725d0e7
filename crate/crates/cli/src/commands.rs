use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lexica::corpus::{
    derive_seed, load_corpus, load_pools, load_qrels, make_triplets, split_validation, write_triplets, Corpus,
    TextOrder,
};
use lexica::evalkit::{eval_records, evaluate, load_run, significance_reports, write_run, MetricKind};
use lexica::fuse::{fusion_records, oracle_records, oracle_sweep, sweep, tune_alpha, AlphaGrid, FusionSet, ZScope};
use lexica::lexindex::{
    build_index, load_impact_store, load_index, load_tilde_store, persist_index, ImpactStore, InvertedIndex,
    DEFAULT_FLOOR_LOGPROB,
};
use lexica::pipeline::{analyze_queries, expand_corpus, rerank_all, write_expansions, write_records};
use lexica::rankers::{expansion_stats, Bm25Params, ExpansionConfig, LmJmParams, Scorer};
use lexica::textproc::{Analyzer, AnalyzerKind, AnalyzerSpec, Vocabulary};

use crate::args::*;
use crate::error::{usage, CliError};
use crate::output::Outputs;

type Result<T> = std::result::Result<T, CliError>;

pub struct Context {
    pub seed: u64,
}

fn text_order(arg: TitleOrderArg) -> TextOrder {
    match arg {
        TitleOrderArg::TitleFirst => TextOrder::TitleFirst,
        TitleOrderArg::AbstractFirst => TextOrder::AbstractFirst,
    }
}

fn metric_kind(arg: MetricArg) -> MetricKind {
    match arg {
        MetricArg::Map => MetricKind::Map,
        MetricArg::Ndcg => MetricKind::Ndcg,
    }
}

fn analyzer_kind(arg: AnalyzerArg) -> AnalyzerKind {
    match arg {
        AnalyzerArg::Sa => AnalyzerKind::Sa,
        AnalyzerArg::Stm1 => AnalyzerKind::Stm1,
        AnalyzerArg::Stm2 => AnalyzerKind::Stm2,
        AnalyzerArg::Subword => AnalyzerKind::Subword,
    }
}

fn subword_spec(vocab: &Path, cased: bool, keep_accents: bool) -> AnalyzerSpec {
    AnalyzerSpec {
        lowercase: !cased,
        strip_accents: !keep_accents,
        ..AnalyzerSpec::subword(vocab)
    }
}

fn analysis_spec(a: &AnalysisArgs) -> Result<AnalyzerSpec> {
    let kind = analyzer_kind(a.analyzer);
    match (kind, &a.vocab) {
        (AnalyzerKind::Subword, Some(v)) => Ok(subword_spec(v, a.cased, a.keep_accents)),
        (AnalyzerKind::Subword, None) => Err(usage("--analyzer subword requires --vocab")),
        (_, _) if a.cased => Err(usage("--cased only applies to --analyzer subword")),
        (_, _) => Ok(AnalyzerSpec::new(kind)),
    }
}

fn analyzer_with(spec: AnalyzerSpec, vocab: Option<&Arc<Vocabulary>>) -> Result<Analyzer> {
    match vocab {
        Some(v) if spec.kind == AnalyzerKind::Subword => Ok(Analyzer::with_vocabulary(spec, v.clone())),
        _ => Ok(Analyzer::new(spec)?),
    }
}

fn load_vocab(path: &Path) -> Result<Arc<Vocabulary>> {
    Ok(Arc::new(Vocabulary::load(path)?))
}

pub fn index(args: IndexArgs, ctx: &Context) -> Result<Outputs> {
    let _ = ctx;
    let corpus = load_corpus(&args.corpus)?;
    let spec = analysis_spec(&args.analysis)?;
    let analyzer = Analyzer::new(spec)?;
    let index = build_index(&corpus, &analyzer, text_order(args.analysis.title_order))?;
    log::info!(
        "indexed {} documents, {} terms, {} tokens",
        index.stats().num_docs,
        index.num_terms(),
        index.stats().total_tokens
    );
    let mut out = Outputs::new();
    out.stage(&args.output, |w| persist_index(&index, w))?;
    Ok(out)
}

fn check_scorer_flags(a: &RerankArgs) -> Result<()> {
    let scorer = a.scorer;
    let forbid = |present: bool, flag: &str, owner: &str| {
        if present {
            Err(usage(format!("{flag} only applies to --scorer {owner}")))
        } else {
            Ok(())
        }
    };
    forbid(scorer != ScorerArg::Bm25 && a.k1.is_some(), "--k1", "bm25")?;
    forbid(scorer != ScorerArg::Bm25 && a.b.is_some(), "--b", "bm25")?;
    forbid(scorer != ScorerArg::Bm25 && a.query_multiplicity, "--query-multiplicity", "bm25")?;
    forbid(scorer != ScorerArg::Lmjm && a.lambda.is_some(), "--lambda", "lmjm")?;
    forbid(scorer != ScorerArg::Tilde && a.tilde_store.is_some(), "--tilde-store", "tilde")?;
    forbid(scorer != ScorerArg::Tilde && a.floor_logprob.is_some(), "--floor-logprob", "tilde")?;
    forbid(scorer != ScorerArg::Tildev2 && !a.impact_store.is_empty(), "--impact-store", "tildev2")?;
    let lexical = matches!(scorer, ScorerArg::Bm25 | ScorerArg::Lmjm);
    forbid(!lexical && a.index.is_some(), "--index", "bm25 or lmjm")?;
    if !lexical && !matches!(a.analysis.analyzer, AnalyzerArg::Subword | AnalyzerArg::Sa) {
        return Err(usage("contextualized scorers analyze queries with the subword analyzer"));
    }
    Ok(())
}

fn lexical_index(args: &RerankArgs, corpus: &Corpus, order: TextOrder) -> Result<(InvertedIndex, Analyzer)> {
    match &args.index {
        Some(path) => {
            let index = load_index(path)?;
            let mut spec = index.analyzer().clone();
            if let Some(v) = &args.analysis.vocab {
                spec.vocab_path = Some(v.clone());
            }
            Ok((index, Analyzer::new(spec)?))
        }
        None => {
            let analyzer = Analyzer::new(analysis_spec(&args.analysis)?)?;
            let index = build_index(corpus, &analyzer, order)?;
            Ok((index, analyzer))
        }
    }
}

pub fn rerank(args: RerankArgs, ctx: &Context) -> Result<Outputs> {
    let _ = ctx;
    check_scorer_flags(&args)?;
    let corpus = load_corpus(&args.corpus)?;
    let pools = load_pools(&args.pools, &corpus)?;
    let order = text_order(args.analysis.title_order);
    let tag = args.tag.clone().unwrap_or_else(|| format!("{:?}", args.scorer).to_lowercase());

    let lists = match args.scorer {
        ScorerArg::Bm25 | ScorerArg::Lmjm => {
            let (index, analyzer) = lexical_index(&args, &corpus, order)?;
            let queries = analyze_queries(&corpus, &pools, &analyzer, order)?;
            let scorer = if args.scorer == ScorerArg::Bm25 {
                let mut params = Bm25Params::<f64>::default();
                params.k1 = args.k1.unwrap_or(params.k1);
                params.b = args.b.unwrap_or(params.b);
                params.query_multiplicity = args.query_multiplicity;
                params.validate()?;
                Scorer::Bm25 { index: &index, params }
            } else {
                let params = match args.lambda {
                    Some(l) => LmJmParams::new(l)?,
                    None => LmJmParams::default(),
                };
                Scorer::LmJm { index: &index, params }
            };
            rerank_all(&pools, &queries, &scorer)?
        }
        ScorerArg::Tilde | ScorerArg::Tildev2 => {
            let vocab_path = args
                .analysis
                .vocab
                .as_deref()
                .ok_or_else(|| usage("contextualized scorers require --vocab"))?;
            let vocab = load_vocab(vocab_path)?;
            let spec = subword_spec(vocab_path, args.analysis.cased, args.analysis.keep_accents);
            let analyzer = analyzer_with(spec, Some(&vocab))?;
            let queries = analyze_queries(&corpus, &pools, &analyzer, order)?;
            let vocab_size = vocab.len() as u32;
            if args.scorer == ScorerArg::Tilde {
                let path = args.tilde_store.as_ref().ok_or_else(|| usage("--scorer tilde requires --tilde-store"))?;
                let floor = args.floor_logprob.unwrap_or(DEFAULT_FLOOR_LOGPROB);
                let store = load_tilde_store::<f64>(path, vocab_size, floor)?;
                rerank_all(&pools, &queries, &Scorer::Tilde { store: &store })?
            } else {
                if args.impact_store.is_empty() {
                    return Err(usage("--scorer tildev2 requires --impact-store"));
                }
                let mut store = ImpactStore::<f64>::new(vocab_size);
                for path in &args.impact_store {
                    store.merge_store(load_impact_store(path, vocab_size)?)?;
                }
                rerank_all(&pools, &queries, &Scorer::TildeV2 { store: &store })?
            }
        }
    };
    log::info!("reranked {} queries with {tag}", lists.len());
    let mut out = Outputs::new();
    out.stage(&args.output, |w| write_run(&lists, &tag, w))?;
    Ok(out)
}

fn z_scope(arg: ZScopeArg) -> ZScope {
    match arg {
        ZScopeArg::Query => ZScope::Query,
        ZScopeArg::Global => ZScope::Global,
    }
}

fn fusion_set(inputs: &FusionInputs) -> Result<FusionSet<f64>> {
    let bm25 = load_run::<f64>(&inputs.bm25_run)?;
    let ctx = load_run::<f64>(&inputs.ctx_run)?;
    Ok(FusionSet::new(&bm25, &ctx, z_scope(inputs.z_scope))?)
}

pub fn fuse(args: FuseArgs, ctx: &Context) -> Result<Outputs> {
    let set = fusion_set(&args.inputs)?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => {
            let path = args.qrels.as_ref().ok_or_else(|| usage("fuse needs --alpha or --qrels to tune it"))?;
            let qrels = load_qrels(path, None)?;
            let judged: Vec<String> = set
                .queries()
                .iter()
                .map(|q| q.query_id.clone())
                .filter(|q| qrels.for_query(q).is_some())
                .collect();
            let split = split_validation(&judged, args.train_fraction, ctx.seed)?;
            if split.validation_query_ids.is_empty() {
                return Err(CliError::Data("validation split is empty".into()));
            }
            let grid = AlphaGrid::with_step(args.grid_step)?;
            let validation = set.restrict(&split.validation_query_ids);
            let alpha = tune_alpha(&validation, &qrels, &grid, metric_kind(args.metric))?;
            log::info!(
                "tuned alpha = {alpha} on {} validation queries ({})",
                validation.len(),
                metric_kind(args.metric)
            );
            alpha
        }
    };
    let fused = set.fuse(alpha)?;
    let mut out = Outputs::new();
    out.stage(&args.output, |w| write_run(&fused, &args.tag, w))?;
    Ok(out)
}

pub fn sweep_cmd(args: SweepArgs, ctx: &Context) -> Result<Outputs> {
    let _ = ctx;
    let set = fusion_set(&args.inputs)?;
    let qrels = load_qrels(&args.qrels, None)?;
    let grid = AlphaGrid::with_step(args.grid_step)?;
    let kind = metric_kind(args.metric);
    let result = sweep(&set, &qrels, &grid, kind)?;
    let oracle = oracle_sweep(&set, &qrels, &grid, kind)?;
    log::info!(
        "{} alphas over {} queries; best fixed alpha {} ({kind} {:.4}); oracle {kind} {:.4}",
        grid.len(),
        set.len(),
        result.best_alpha,
        result.best_aggregate,
        oracle.aggregate_metric
    );
    let mut out = Outputs::new();
    out.stage(&args.output, |w| write_records(&fusion_records(&result), w))?;
    if let Some(path) = &args.oracle_output {
        out.stage(path, |w| write_records(&oracle_records(&oracle), w))?;
    }
    Ok(out)
}

pub fn evaluate_cmd(args: EvaluateArgs, ctx: &Context) -> Result<Outputs> {
    let _ = ctx;
    let run = load_run::<f64>(&args.run)?;
    let qrels = load_qrels(&args.qrels, None)?;
    let lists: Vec<_> = run.into_values().collect();
    let per_query = evaluate(&lists, &qrels, metric_kind(args.metric))?;
    let records = eval_records(&per_query)?;
    log::info!("{} = {:.4}", per_query.metric, records.last().expect("aggregate").value);
    let mut out = Outputs::new();
    out.stage(&args.output, |w| write_records(&records, w))?;
    Ok(out)
}

pub fn expand(args: ExpandArgs, ctx: &Context) -> Result<Outputs> {
    let _ = ctx;
    let corpus = load_corpus(&args.corpus)?;
    let vocab = load_vocab(&args.vocab)?;
    let analyzer = analyzer_with(subword_spec(&args.vocab, args.cased, args.keep_accents), Some(&vocab))?;
    let store = load_tilde_store::<f64>(
        &args.tilde_store,
        vocab.len() as u32,
        args.floor_logprob.unwrap_or(DEFAULT_FLOOR_LOGPROB),
    )?;
    let config = ExpansionConfig {
        exclude_continuation_pieces: !args.include_continuation_pieces,
        ..ExpansionConfig::new(args.expansion_m)
    };
    let additions = expand_corpus(&corpus, &analyzer, text_order(args.title_order), &store, &config)?;
    let stats = expansion_stats(&additions)?;
    log::info!(
        "m = {}: {:.2} new tokens per document on average over {} documents",
        args.expansion_m,
        stats.mean_added,
        stats.per_doc.len()
    );
    let mut out = Outputs::new();
    out.stage(&args.output, |w| write_expansions(&additions, w))?;
    Ok(out)
}

pub fn triplets(args: TripletsArgs, ctx: &Context) -> Result<Outputs> {
    let corpus = args.corpus.as_ref().map(load_corpus).transpose()?;
    let qrels = load_qrels(&args.qrels, corpus.as_ref())?;
    let pools = match (&args.pools, &corpus) {
        (Some(p), Some(c)) => Some(load_pools(p, c)?),
        _ => None,
    };
    let mut judged: BTreeMap<String, BTreeMap<String, u8>> = BTreeMap::new();
    match &pools {
        Some(pools) => {
            for pool in pools {
                let Some(j) = qrels.for_query(&pool.query_id) else { continue };
                let members: BTreeSet<&String> = pool.candidates.iter().collect();
                let kept = j.iter().filter(|(d, _)| members.contains(d)).map(|(d, g)| (d.clone(), *g)).collect();
                judged.insert(pool.query_id.clone(), kept);
            }
        }
        None => {
            for q in qrels.query_ids() {
                judged.insert(q.to_owned(), qrels.for_query(q).expect("listed query").clone());
            }
        }
    }
    let ids: Vec<String> = judged.keys().cloned().collect();
    let split = split_validation(&ids, args.train_fraction, ctx.seed)?;
    let mut all = Vec::new();
    for q in &split.train_query_ids {
        all.extend(make_triplets(q, &judged[q], args.negatives_per_positive, derive_seed(ctx.seed, q))?);
    }
    log::info!(
        "{} triplets from {} training queries ({} held out)",
        all.len(),
        split.train_query_ids.len(),
        split.validation_query_ids.len()
    );
    let mut out = Outputs::new();
    out.stage(&args.output, |w| write_triplets(&all, w))?;
    Ok(out)
}

fn system_name(spec: &str) -> Result<(String, PathBuf)> {
    if let Some((name, path)) = spec.split_once('=') {
        if name.is_empty() || path.is_empty() {
            return Err(usage(format!("bad --run {spec:?}; expected name=path")));
        }
        return Ok((name.to_owned(), PathBuf::from(path)));
    }
    let path = PathBuf::from(spec);
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| usage(format!("cannot name system for {spec:?}")))?
        .to_owned();
    Ok((name, path))
}

pub fn significance(args: SignificanceArgs, ctx: &Context) -> Result<Outputs> {
    let _ = ctx;
    if args.runs.len() < 2 {
        return Err(usage("significance needs at least two --run values"));
    }
    let qrels = load_qrels(&args.qrels, None)?;
    let kind = metric_kind(args.metric);
    let mut systems = Vec::new();
    let mut names = BTreeSet::new();
    for spec in &args.runs {
        let (name, path) = system_name(spec)?;
        if !names.insert(name.clone()) {
            return Err(usage(format!("system name {name:?} given twice")));
        }
        let lists: Vec<_> = load_run::<f64>(&path)?.into_values().collect();
        systems.push((name, evaluate(&lists, &qrels, kind)?));
    }
    let reports = significance_reports(&systems, args.num_comparisons)?;
    for r in &reports {
        log::info!(
            "{} vs {}: t = {:.4}, p = {:.4}, adjusted p = {:.4}{}",
            r.system_a,
            r.system_b,
            r.t_statistic,
            r.p_value,
            r.adjusted_p,
            if r.significant { " *" } else { "" }
        );
    }
    let mut out = Outputs::new();
    out.stage(&args.output, |w| write_records(&reports, w))?;
    Ok(out)
}

