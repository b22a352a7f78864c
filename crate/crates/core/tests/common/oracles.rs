//! Independent reference implementations and synthetic-input generators.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use assocmine::corpus::Span;

/// Entity names used in synthetic corpora; each is a single capitalized
/// token so the gazetteer finds exactly one mention per occurrence.
pub const ENTITY_NAMES: [&str; 6] = ["Acme", "Borealis", "Cobalt", "Dynamo", "Ember", "Fjord"];
const FILLER: [&str; 6] = ["met", "and", "saw", "with", "near", "beside"];

/// A synthetic article: paragraphs of sentences of entity indices.
#[derive(Debug, Clone)]
pub struct SynthArticle {
    pub id: String,
    pub year: Option<i32>,
    pub paragraphs: Vec<Vec<Vec<usize>>>,
}

impl SynthArticle {
    pub fn body(&self) -> String {
        self.paragraphs
            .iter()
            .map(|p| {
                p.iter()
                    .map(|s| {
                        if s.is_empty() {
                            return "Nothing happened here.".to_string();
                        }
                        let words: Vec<&str> = s
                            .iter()
                            .enumerate()
                            .flat_map(|(i, &e)| [ENTITY_NAMES[e], FILLER[i % FILLER.len()]])
                            .collect();
                        format!("Then {} today.", words.join(" "))
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    pub fn jsonl(&self) -> String {
        let date = self.year.map(|y| format!("{y}-06-15"));
        serde_json::json!({"id": self.id, "published_at": date, "title": "", "body": self.body()})
            .to_string()
    }
}

/// ≤10 articles, ≤5 sentences each, ≤6 entities.
pub fn synth_corpus<R: Rng>(rng: &mut R) -> Vec<SynthArticle> {
    let n_entities = rng.gen_range(2..=ENTITY_NAMES.len());
    (0..rng.gen_range(1..=10))
        .map(|i| {
            let n_sent = rng.gen_range(1..=5);
            let mut sentences: Vec<Vec<usize>> = (0..n_sent)
                .map(|_| {
                    (0..rng.gen_range(0..=4))
                        .map(|_| rng.gen_range(0..n_entities))
                        .collect()
                })
                .collect();
            sentences.shuffle(rng);
            // split the sentences into 1..=n_sent paragraphs
            let mut paragraphs = Vec::new();
            let mut current = Vec::new();
            for (k, s) in sentences.into_iter().enumerate() {
                if k > 0 && rng.gen_bool(0.4) {
                    paragraphs.push(std::mem::take(&mut current));
                }
                current.push(s);
            }
            paragraphs.push(current);
            SynthArticle {
                id: format!("s{i:02}"),
                year: if rng.gen_bool(0.85) { Some(rng.gen_range(2018..=2021)) } else { None },
                paragraphs,
            }
        })
        .collect()
}

/// Pair counts keyed by (a, b, bucket), a < b by canonical id, enumerating
/// every window of the requested level directly from the generated layout.
/// `level` is "sentence", "paragraph" or "article".
pub fn cooc_oracle(corpus: &[SynthArticle], level: &str) -> BTreeMap<(String, String, String), u64> {
    let mut out = BTreeMap::new();
    for art in corpus {
        let bucket = art.year.map_or("unknown".to_string(), |y| y.to_string());
        let windows: Vec<BTreeSet<usize>> = match level {
            "sentence" => art.paragraphs.iter().flatten().map(|s| s.iter().copied().collect()).collect(),
            "paragraph" => art.paragraphs.iter().map(|p| p.iter().flatten().copied().collect()).collect(),
            "article" => vec![art.paragraphs.iter().flatten().flatten().copied().collect()],
            other => panic!("unknown level {other}"),
        };
        for w in windows {
            let ids: Vec<String> = w.iter().map(|&e| ENTITY_NAMES[e].to_lowercase()).collect();
            for a in &ids {
                for b in &ids {
                    if a < b {
                        *out.entry((a.clone(), b.clone(), bucket.clone())).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    out
}

/// Number of articles mentioning each entity (canonical id).
pub fn doc_frequency(corpus: &[SynthArticle]) -> BTreeMap<String, u64> {
    let mut df = BTreeMap::new();
    for art in corpus {
        let ids: BTreeSet<usize> = art.paragraphs.iter().flatten().flatten().copied().collect();
        for e in ids {
            *df.entry(ENTITY_NAMES[e].to_lowercase()).or_insert(0) += 1;
        }
    }
    df
}

const WORDS: [&str; 8] = ["Launch", "fund", "ETF", "bitcoin", "spot", "the", "new", "trending"];
const PUNCT: [&str; 3] = [",", ".", ";"];

/// Random text with its own token list (lowercased) and byte spans.
#[derive(Debug, Clone)]
pub struct LexicalCase {
    pub text: String,
    pub tokens: Vec<(String, Span)>,
    pub phrases: Vec<String>,
}

pub fn lexical_case<R: Rng>(rng: &mut R) -> LexicalCase {
    let mut text = String::new();
    let mut tokens = Vec::new();
    for i in 0..rng.gen_range(0..40) {
        let punct = i > 0 && rng.gen_bool(0.15);
        let tok = if punct {
            *PUNCT.choose(rng).unwrap()
        } else {
            *WORDS.choose(rng).unwrap()
        };
        if !punct && !text.is_empty() {
            text.push(if rng.gen_bool(0.2) { '\n' } else { ' ' });
        }
        let start = text.len();
        // vary the case so matching has to casefold
        let surface = if rng.gen_bool(0.3) { tok.to_uppercase() } else { tok.to_string() };
        text.push_str(&surface);
        tokens.push((tok.to_lowercase(), Span::new(start, text.len())));
    }
    let phrases = (0..rng.gen_range(1..=4))
        .map(|_| {
            let n = rng.gen_range(1..=3);
            let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
            let sep = if rng.gen_bool(0.2) { "  " } else { " " };
            words.join(sep)
        })
        .collect();
    LexicalCase { text, tokens, phrases }
}

/// Naive scan: for each distinct phrase, slide over the token list and take
/// non-overlapping matches left to right.
pub fn lexical_oracle(case: &LexicalCase) -> BTreeMap<String, Vec<Span>> {
    let mut out = BTreeMap::new();
    let phrases: BTreeSet<Vec<String>> = case
        .phrases
        .iter()
        .map(|p| p.split_whitespace().map(str::to_lowercase).collect())
        .collect();
    for phrase in phrases {
        let n = phrase.len();
        let mut spans = Vec::new();
        let mut i = 0;
        while i + n <= case.tokens.len() {
            if (0..n).all(|k| case.tokens[i + k].0 == phrase[k]) {
                spans.push(Span::new(case.tokens[i].1.start, case.tokens[i + n - 1].1.end));
                i += n;
            } else {
                i += 1;
            }
        }
        if !spans.is_empty() {
            out.insert(phrase.join(" "), spans);
        }
    }
    out
}

/// Random symmetric distance matrix with zero diagonal.
pub fn random_distances<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(0.0..2.0);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Silhouette straight from its definition, one point at a time.
pub fn silhouette_oracle(n: usize, d: &[f64], labels: &[usize]) -> Option<f64> {
    let clusters: BTreeSet<usize> = labels.iter().copied().collect();
    if clusters.len() <= 1 || clusters.len() == n {
        return None;
    }
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |c: usize| {
            let others: Vec<f64> = (0..n)
                .filter(|&j| j != i && labels[j] == c)
                .map(|j| d[i * n + j])
                .collect();
            others.iter().sum::<f64>() / others.len() as f64
        };
        if labels.iter().filter(|&&l| l == labels[i]).count() == 1 {
            continue;
        }
        let a = mean_to(labels[i]);
        let b = clusters
            .iter()
            .filter(|&&c| c != labels[i])
            .map(|&c| mean_to(c))
            .fold(f64::INFINITY, f64::min);
        let s = if a.max(b) == 0.0 { 0.0 } else { (b - a) / a.max(b) };
        total += s;
    }
    Some(total / n as f64)
}
