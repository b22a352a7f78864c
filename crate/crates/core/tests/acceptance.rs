//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use assocmine::associate::{
    associations_for, count_pairs, rank_rows, Bucketing, MentionedDoc, TrendFilter, TrendMatrix,
};
use assocmine::dedup::{agglomerate, default_grid, silhouette, ClusterAssignment, DistanceMatrix};
use assocmine::extract::{
    default_categories, event_tag, gazetteer_extract, pattern_extract, CatalogEntry, EntityRecord,
    EventLexicon,
};
use assocmine::filter::{compile_phrases, lexical_filter};
use assocmine::graph::{build_graph, export_graph, export_heatmap, from_json, GraphFormat};
use assocmine::{
    Article, EntityCatalog, EntityType, Registry, Segmenter, Stage, WindowLevel,
};
use common::oracles::{self, SynthArticle, ENTITY_NAMES};
use common::published;
use common::stub::{self, StubServer};

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

const CORPORA: usize = 200;

fn registry() -> Registry {
    Registry::new(
        ENTITY_NAMES
            .iter()
            .map(|n| EntityRecord {
                canonical_id: n.to_lowercase(),
                canonical_name: n.to_string(),
                entity_type: EntityType::Org,
                aliases: Vec::new(),
                uri: None,
            })
            .collect(),
    )
    .unwrap()
}

/// Segment and extract a synthetic corpus with the library itself.
fn mentioned(corpus: &[SynthArticle], registry: &Registry) -> Vec<MentionedDoc> {
    let seg = Segmenter::default();
    corpus
        .iter()
        .map(|s| {
            let article = Article {
                id: s.id.clone(),
                source: String::new(),
                published_at: s.year.and_then(|y| chrono::NaiveDate::from_ymd_opt(y, 6, 15)),
                title: String::new(),
                body: s.body(),
            };
            let doc = seg.segment(&article);
            let mentions = gazetteer_extract(&doc, registry);
            MentionedDoc::new(&doc, article.published_at, mentions, None)
        })
        .collect()
}

type Counts = BTreeMap<(String, String, String), u64>;

fn counted(docs: &[MentionedDoc], level: WindowLevel) -> Result<Counts, String> {
    let recs = count_pairs(docs, level, Bucketing::Year).map_err(|e| e.to_string())?;
    Ok(recs
        .into_iter()
        .map(|r| ((r.pair.0, r.pair.1, r.bucket), r.count))
        .collect())
}

fn synthetic_corpora() -> Vec<Vec<SynthArticle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    (0..CORPORA).map(|_| oracles::synth_corpus(&mut rng)).collect()
}

fn cooccurrence_oracle(corpora: &[Vec<SynthArticle>]) -> Outcome {
    let start = Instant::now();
    let registry = registry();
    let mut windows = 0usize;
    for (i, corpus) in corpora.iter().enumerate() {
        let docs = mentioned(corpus, &registry);
        for (level, name) in [
            (WindowLevel::Sentence, "sentence"),
            (WindowLevel::Paragraph, "paragraph"),
            (WindowLevel::Article, "article"),
        ] {
            let want = oracles::cooc_oracle(corpus, name);
            let got = counted(&docs, level)?;
            windows += want.len();
            ensure(got == want, format!("corpus {i} at {name}: {got:?} != {want:?}"))?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1}s"))?;
    Ok(format!("{} corpora × 3 levels, {windows} pair-buckets, {secs:.2}s", corpora.len()))
}

fn window_nesting(corpora: &[Vec<SynthArticle>]) -> Outcome {
    let registry = registry();
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for (i, corpus) in corpora.iter().enumerate() {
        let docs = mentioned(corpus, &registry);
        let s = counted(&docs, WindowLevel::Sentence)?;
        let p = counted(&docs, WindowLevel::Paragraph)?;
        let a = counted(&docs, WindowLevel::Article)?;
        for (key, &n) in &s {
            checked += 1;
            if n > 0 && (p.get(key).copied().unwrap_or(0) == 0 || a.get(key).copied().unwrap_or(0) == 0) {
                violations.push(format!("corpus {i} {key:?}: sentence count without wider window"));
            }
        }
        let df = oracles::doc_frequency(corpus);
        let mut article_totals: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for ((x, y, _), n) in &a {
            *article_totals.entry((x, y)).or_default() += n;
        }
        for ((x, y), n) in article_totals {
            checked += 1;
            if n > df[x].min(df[y]) {
                violations.push(format!("corpus {i} ({x},{y}): article count {n} exceeds doc frequency"));
            }
        }
    }
    ensure(violations.is_empty(), format!("{} violations, first: {}", violations.len(), violations.first().cloned().unwrap_or_default()))?;
    Ok(format!("{checked} checks, 0 violations"))
}

fn lexical_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let seg = Segmenter::default();
    let cases = 600;
    let mut kept = 0;
    for i in 0..cases {
        let case = oracles::lexical_case(&mut rng);
        let matcher = compile_phrases(&case.phrases).map_err(|e| e.to_string())?;
        let doc = seg.segment_text("x", &case.text);
        let (result, decision) = lexical_filter(&doc, &matcher, 1);
        let got: BTreeMap<String, Vec<_>> = result
            .hits
            .iter()
            .map(|(k, h)| (k.clone(), h.offsets.clone()))
            .collect();
        let want = oracles::lexical_oracle(&case);
        ensure(got == want, format!("case {i} {:?} / {:?}: {got:?} != {want:?}", case.text, case.phrases))?;
        ensure(
            result.hits.values().all(|h| h.count == h.offsets.len()),
            format!("case {i}: counts disagree with offsets"),
        )?;
        ensure(decision.kept == !want.is_empty(), format!("case {i}: keep decision"))?;
        kept += decision.kept as usize;
    }
    Ok(format!("{cases} instances ({kept} kept), exact match"))
}

fn densify(raw: &[usize]) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    raw.iter()
        .map(|r| {
            let next = ids.len();
            *ids.entry(*r).or_insert(next)
        })
        .collect()
}

fn silhouette_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut defined = 0;
    for i in 0..100 {
        let n = rng.gen_range(2..=30);
        let d = oracles::random_distances(&mut rng, n);
        let m = DistanceMatrix::from_rows(n, d.clone());
        let k = rng.gen_range(1..=n);
        let random = densify(&(0..n).map(|_| rng.gen_range(0..k)).collect::<Vec<_>>());
        let agglo = agglomerate(&m, rng.gen_range(0.0..2.0)).labels;
        for labels in [random, agglo] {
            let c = ClusterAssignment { labels: labels.clone(), threshold: 0.0 };
            let got = silhouette(&m, &c).map_err(|e| e.to_string())?;
            let want = oracles::silhouette_oracle(n, &d, &labels);
            match (got, want) {
                (Some(g), Some(w)) => {
                    worst = worst.max((g - w).abs());
                    defined += 1;
                }
                (None, None) => {}
                other => return Err(format!("matrix {i}: {other:?}")),
            }
        }
    }
    ensure(worst <= 1e-9, format!("max deviation {worst:e}"))?;
    // two tight pairs, 0.05 apart inside, 0.9 across
    let d = vec![
        0.0, 0.05, 0.9, 0.9, //
        0.05, 0.0, 0.9, 0.9, //
        0.9, 0.9, 0.0, 0.05, //
        0.9, 0.9, 0.05, 0.0,
    ];
    let m = DistanceMatrix::from_rows(4, d);
    let c = agglomerate(&m, 0.2);
    ensure(c.cluster_count() == 2, "fixture does not split in two")?;
    let s = silhouette(&m, &c).map_err(|e| e.to_string())?.ok_or("fixture undefined")?;
    let expected = (0.9 - 0.05) / 0.9;
    ensure((s - expected).abs() <= 1e-6, format!("fixture silhouette {s}"))?;
    Ok(format!("{defined} defined cases, max deviation {worst:.1e}; fixture {s:.6}"))
}

fn clustering_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let grid = default_grid();
    for i in 0..100 {
        let n = rng.gen_range(2..=30);
        let mut d = oracles::random_distances(&mut rng, n);
        d.iter_mut().filter(|v| **v > 0.0).for_each(|v| *v = v.max(1e-3));
        let m = DistanceMatrix::from_rows(n, d);
        ensure(agglomerate(&m, 0.0).cluster_count() == n, format!("matrix {i}: threshold 0"))?;
        ensure(agglomerate(&m, m.max_distance()).cluster_count() == 1, format!("matrix {i}: max threshold"))?;
        let counts: Vec<usize> = grid.iter().map(|&t| agglomerate(&m, t).cluster_count()).collect();
        ensure(counts.windows(2).all(|w| w[0] >= w[1]), format!("matrix {i}: not monotone {counts:?}"))?;
    }
    Ok(format!("100 matrices over a {}-step grid", grid.len()))
}

fn top_labels(m: &TrendMatrix, k: usize) -> Vec<(String, u64)> {
    rank_rows(m, k).into_iter().map(|r| (r.label, r.total)).collect()
}

fn published_table_arithmetic() -> Outcome {
    let brands = top_labels(&published::matrix(&published::BRANDS), 3);
    let want = [("Morningstar", 167), ("Fidelity", 115), ("BlackRock", 105)];
    ensure(
        brands.iter().map(|(l, t)| (l.as_str(), *t)).eq(want),
        format!("brands {brands:?}"),
    )?;
    let vendors = top_labels(&published::matrix(&published::VENDORS), 3);
    let want = [("Morgan stanley", 366), ("Reuters", 364), ("Wells Fargo", 312)];
    ensure(
        vendors.iter().map(|(l, t)| (l.as_str(), *t)).eq(want),
        format!("vendors {vendors:?}"),
    )?;
    let (records, catalog) =
        published::records("Morgan Stanley", EntityType::Org, &published::MORGAN_STANLEY_RISKS, EntityType::Risk);
    let risks = associations_for("Morgan Stanley", &records, &TrendFilter::of_type(EntityType::Risk), &catalog);
    let pos = |p: &str| risks.iter().position(|a| a.partner == p);
    let (lawsuit, litigation) = (pos("lawsuit"), pos("litigation"));
    ensure(lawsuit.is_some() && lawsuit < litigation, "lawsuit does not outrank litigation")?;
    let totals = (risks[lawsuit.unwrap()].total, risks[litigation.unwrap()].total);
    ensure(totals == (58, 24), format!("risk totals {totals:?}"))?;
    Ok("167/115/105, 366/364/312, lawsuit 58 > litigation 24".into())
}

fn extraction_examples(server: &StubServer) -> Outcome {
    let seg = Segmenter::default();
    let doc = seg.segment_text("e1", "Schwab, which acquired TD Ameritrade in October 2020, cut staff.");
    let events = event_tag(&doc, &EventLexicon::default());
    ensure(
        events.iter().any(|m| m.canonical_id == "CORPORATE_ACQUISITION" && m.entity_type == EntityType::Event),
        format!("no acquisition event in {events:?}"),
    )?;
    let cats = default_categories();
    for (text, product) in [
        ("Fidelity launched a spot bitcoin etf today", "spot bitcoin etf"),
        ("the magellan fund outperformed", "magellan fund"),
    ] {
        let got: Vec<String> = pattern_extract(&seg.segment_text("p", text), &cats)
            .into_iter()
            .map(|m| m.canonical_id)
            .collect();
        ensure(got == [product], format!("{text:?} gave {got:?}"))?;
    }
    let registry = Registry::new(vec![EntityRecord {
        canonical_id: "sec".into(),
        canonical_name: "SEC".into(),
        entity_type: EntityType::Org,
        aliases: vec!["Stock Exchange Commission".into()],
        uri: Some(stub::SEC_URI.into()),
    }])
    .map_err(|e| e.to_string())?;
    let doc = seg.segment_text("s", "The SEC, also called the Stock Exchange Commission, agreed.");
    let ids: Vec<String> = gazetteer_extract(&doc, &registry).into_iter().map(|m| m.canonical_id).collect();
    ensure(ids == ["sec", "sec"], format!("alias case gave {ids:?}"))?;

    let fixtures = stub::all_fixtures();
    let doc = seg.segment_text("g1", &fixtures[1].text);
    let shared = stub::annotator(&server.url, 0.5).try_annotate(&doc).map_err(|e| e.to_string())?;
    let uris: BTreeSet<&str> = shared.mentions.iter().map(|m| m.canonical_id.as_str()).collect();
    ensure(shared.mentions.len() == 2 && uris.len() == 1, format!("shared URI gave {uris:?}"))?;
    let doc = seg.segment_text("n1", &fixtures[0].text);
    let normal = stub::annotator(&server.url, 0.5).try_annotate(&doc).map_err(|e| e.to_string())?;
    ensure(
        normal.mentions.iter().any(|m| m.surface == "SEC" && m.canonical_id == "sec"),
        "known URI did not resolve to the registry id",
    )?;
    Ok("acquisition event, 2 products, alias and URI identity".into())
}

fn golden_pipeline() -> Outcome {
    let mut artifacts = Vec::new();
    for threads in [1, 8] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let start = Instant::now();
        let p = common::run_demo(dir.path(), Some(threads));
        let secs = start.elapsed().as_secs_f64();
        ensure(secs < 10.0, format!("threads={threads} took {secs:.1}s"))?;
        let bad = common::golden_mismatches(dir.path());
        ensure(bad.is_empty(), format!("threads={threads}: {bad:?} differ from golden"))?;
        let bytes: Vec<Vec<u8>> = Stage::ALL
            .iter()
            .map(|&s| std::fs::read(p.artifact_path(s)).unwrap_or_default())
            .collect();
        artifacts.push(bytes);
    }
    ensure(artifacts[0] == artifacts[1], "artifacts differ between 1 and 8 threads")?;
    Ok("golden pairs/heatmap/graph match; 1 and 8 threads identical".into())
}

fn export_validity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut g = common::run_demo(dir.path(), None).load_graph().map_err(|e| e.to_string())?;
    let awkward = "Smith, \"Jones\" & <Co>";
    if let Some(n) = g.nodes.first_mut() {
        n.label = awkward.into();
    }
    let xml = String::from_utf8(export_graph(&g, GraphFormat::GraphMl).map_err(|e| e.to_string())?).unwrap();
    common::graphml::validate(&xml)?;
    let empty = build_graph(&[], &EntityCatalog::default(), 1).map_err(|e| e.to_string())?;
    common::graphml::validate(&String::from_utf8(export_graph(&empty, GraphFormat::GraphMl).unwrap()).unwrap())?;

    let json = String::from_utf8(export_graph(&g, GraphFormat::Json).map_err(|e| e.to_string())?).unwrap();
    ensure(from_json(&json).map_err(|e| e.to_string())? == g, "JSON round trip changed the graph")?;

    let mut catalog = EntityCatalog::default();
    catalog.entries.insert(
        "awk".into(),
        CatalogEntry { label: awkward.into(), entity_type: EntityType::Org, doc_count: 1 },
    );
    let counts = BTreeMap::from([
        ("awk".to_string(), BTreeMap::from([("2021".to_string(), 3)])),
        ("nl".to_string(), BTreeMap::from([("2020".to_string(), 1)])),
    ]);
    let m = TrendMatrix::from_counts(counts, |id| if id == "nl" { "a\nb".into() } else { catalog.label(id).to_string() });
    let bytes = export_heatmap(&m).map_err(|e| e.to_string())?;
    let text = String::from_utf8(bytes.clone()).unwrap();
    ensure(text.contains("\"Smith, \"\"Jones\"\" & <Co>\""), "quotes not doubled inside a quoted field")?;
    let rows: Vec<Vec<String>> = csv::Reader::from_reader(bytes.as_slice())
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(rows == [vec![awkward, "0", "3", "3"], vec!["a\nb", "1", "0", "1"]], format!("CSV parsed back as {rows:?}"))?;
    Ok(format!("GraphML valid ({} nodes, {} edges), JSON round-trips, CSV parses back", g.nodes.len(), g.edges.len()))
}

fn annotator_fixtures(server: &StubServer) -> Outcome {
    let fixtures = stub::all_fixtures();
    for (fixture, (_, id)) in fixtures.iter().zip(stub::FIXTURES) {
        stub::check_fixture(server, fixture, id)?;
    }
    stub::check_failure(server, &fixtures[0])?;
    Ok("normal, shared-URI, below-threshold exact; failure retried then skipped".into())
}

fn main() {
    let corpora = synthetic_corpora();
    let server = StubServer::start(&stub::all_fixtures());
    let criteria: Vec<(&str, Check)> = vec![
        ("co-occurrence oracle equivalence", Box::new(|| cooccurrence_oracle(&corpora))),
        ("window nesting invariant", Box::new(|| window_nesting(&corpora))),
        ("lexical matcher equivalence", Box::new(lexical_equivalence)),
        ("silhouette correctness", Box::new(silhouette_correctness)),
        ("clustering degenerate bounds", Box::new(clustering_bounds)),
        ("published table arithmetic", Box::new(published_table_arithmetic)),
        ("extraction examples", Box::new(|| extraction_examples(&server))),
        ("golden mini-corpus pipeline", Box::new(golden_pipeline)),
        ("export validity", Box::new(export_validity)),
        ("external annotator client", Box::new(|| annotator_fixtures(&server))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
