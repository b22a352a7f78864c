//! Corpus ingestion and segmentation.
//!
//! Articles arrive as JSONL, one object per line. [`Segmenter`] turns an
//! article body into paragraphs, sentences and tokens; these are the window
//! units that co-occurrence counting runs over.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::stopwords;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("read error at line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate article id {id:?} at lines {first} and {second}")]
    DuplicateId {
        id: String,
        first: usize,
        second: usize,
    },
}

/// One news article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    #[serde(default)]
    pub source: String,
    #[serde(default, deserialize_with = "lenient_date")]
    pub published_at: Option<NaiveDate>,
    #[serde(default)]
    pub title: String,
    pub body: String,
}

impl Article {
    /// Title and body joined by a single space, the text used for embeddings.
    pub fn full_text(&self) -> String {
        format!("{} {}", self.title, self.body)
    }
}

// Unparsable dates are treated like absent ones.
fn lenient_date<'de, D: Deserializer<'de>>(d: D) -> Result<Option<NaiveDate>, D::Error> {
    let raw: Option<String> = Option::deserialize(d)?;
    Ok(raw.and_then(|s| NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()))
}

/// Half-open byte range into an article body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PosHint {
    Content,
    Stop,
    Num,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Casefolded text.
    pub norm: String,
    pub start: usize,
    pub end: usize,
    pub is_stopword: bool,
    pub pos_hint: PosHint,
}

impl Token {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub span: Span,
    /// Indices into [`AnnotatedDoc::sentences`].
    pub sentences: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub span: Span,
    pub paragraph: usize,
    /// Indices into [`AnnotatedDoc::tokens`].
    pub tokens: Range<usize>,
}

/// A segmented article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedDoc {
    pub article_id: String,
    pub body: String,
    pub paragraphs: Vec<Paragraph>,
    pub sentences: Vec<Sentence>,
    pub tokens: Vec<Token>,
}

impl AnnotatedDoc {
    /// Index of the sentence containing `span`, if a single sentence does.
    pub fn sentence_containing(&self, span: Span) -> Option<usize> {
        let idx = self.sentences.partition_point(|s| s.span.end <= span.start);
        self.sentences
            .get(idx)
            .filter(|s| s.span.contains(&span))
            .map(|_| idx)
    }

    /// Index of the sentence owning token `token_idx`.
    pub fn sentence_of_token(&self, token_idx: usize) -> usize {
        self.sentences.partition_point(|s| s.tokens.end <= token_idx)
    }

    pub fn slice(&self, span: Span) -> &str {
        &self.body[span.start..span.end]
    }
}

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Inc.", "Corp.", "Co.", "Ltd.", "Bros.", "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Jr.", "Sr.",
    "St.", "Gen.", "Gov.", "Sen.", "Rep.", "U.S.", "U.K.", "U.N.", "E.U.", "vs.", "etc.", "e.g.",
    "i.e.", "No.", "Jan.", "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.", "Sep.", "Sept.", "Oct.",
    "Nov.", "Dec.",
];

const TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

/// Rule-based segmenter: blank-line paragraphs, punctuation sentences with
/// an abbreviation list, and whitespace/punctuation tokens.
#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: Vec<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Segmenter {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Segmenter {
            abbreviations: abbreviations.into_iter().map(Into::into).collect(),
        }
    }

    pub fn segment(&self, article: &Article) -> AnnotatedDoc {
        self.segment_text(&article.id, &article.body)
    }

    pub fn segment_text(&self, article_id: &str, body: &str) -> AnnotatedDoc {
        let mut doc = AnnotatedDoc {
            article_id: article_id.to_string(),
            body: body.to_string(),
            paragraphs: Vec::new(),
            sentences: Vec::new(),
            tokens: Vec::new(),
        };
        for para_span in paragraph_spans(body) {
            let para_idx = doc.paragraphs.len();
            let first_sentence = doc.sentences.len();
            for sent_span in self.sentence_spans(body, para_span) {
                let first_token = doc.tokens.len();
                doc.tokens
                    .extend(tokenize_at(&body[sent_span.start..sent_span.end], sent_span.start));
                doc.sentences.push(Sentence {
                    span: sent_span,
                    paragraph: para_idx,
                    tokens: first_token..doc.tokens.len(),
                });
            }
            doc.paragraphs.push(Paragraph {
                span: para_span,
                sentences: first_sentence..doc.sentences.len(),
            });
        }
        doc
    }

    fn sentence_spans(&self, body: &str, para: Span) -> Vec<Span> {
        let text = &body[para.start..para.end];
        let mut spans = Vec::new();
        let mut start = 0usize;
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if !TERMINATORS.contains(&c) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < chars.len() && TERMINATORS.contains(&chars[j].1) {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = if j == chars.len() || k == chars.len() {
                true
            } else {
                k > j && chars[k].1.is_uppercase()
            };
            if boundary && !(c == '.' && j == i + 1 && self.is_abbreviation(text, pos)) {
                spans.push(Span::new(para.start + start, para.start + end));
                if k == chars.len() {
                    start = text.len();
                    break;
                }
                start = chars[k].0;
            }
            i = j.max(i + 1);
        }
        if start < text.len() {
            let rest = text[start..].trim_end();
            if !rest.is_empty() {
                spans.push(Span::new(para.start + start, para.start + start + rest.len()));
            }
        }
        spans
    }

    // `dot` is the byte position of a '.' inside `text`.
    fn is_abbreviation(&self, text: &str, dot: usize) -> bool {
        let word_start = text[..dot]
            .char_indices()
            .rev()
            .find(|(_, c)| c.is_whitespace())
            .map_or(0, |(p, c)| p + c.len_utf8());
        let word = text[word_start..=dot].trim_start_matches(['(', '"', '\'', '[', '\u{201c}', '\u{2018}']);
        self.abbreviations.iter().any(|a| a == word)
    }
}

/// Segment with the default abbreviation list.
pub fn segment(article: &Article) -> AnnotatedDoc {
    Segmenter::default().segment(article)
}

fn paragraph_spans(body: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut current: Option<Span> = None;
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let content = line.trim();
        if content.is_empty() {
            spans.extend(current.take());
            continue;
        }
        let lead = line.len() - line.trim_start().len();
        let start = line_start + lead;
        let end = start + content.len();
        current = Some(match current {
            Some(s) => Span::new(s.start, end),
            None => Span::new(start, end),
        });
    }
    spans.extend(current);
    spans
}

/// Tokenize `text`; token offsets are relative to `text` plus `base`.
pub fn tokenize_at(text: &str, base: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((start, c)) = iter.next() {
        if c.is_whitespace() {
            continue;
        }
        let end = if c.is_alphanumeric() {
            let mut end = start + c.len_utf8();
            while let Some(&(p, n)) = iter.peek() {
                if !n.is_alphanumeric() {
                    break;
                }
                end = p + n.len_utf8();
                iter.next();
            }
            end
        } else {
            start + c.len_utf8()
        };
        let piece = &text[start..end];
        tokens.push(make_token(piece, base + start, base + end, c.is_alphanumeric()));
    }
    tokens
}

pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_at(text, 0)
}

fn make_token(text: &str, start: usize, end: usize, word: bool) -> Token {
    let norm = casefold(text);
    let is_stopword = word && stopwords::is_stopword(&norm);
    let pos_hint = if !word {
        PosHint::Punct
    } else if is_stopword {
        PosHint::Stop
    } else if text.chars().all(char::is_numeric) {
        PosHint::Num
    } else {
        PosHint::Content
    };
    Token {
        text: text.to_string(),
        norm,
        start,
        end,
        is_stopword,
        pos_hint,
    }
}

pub fn casefold(text: &str) -> String {
    text.to_lowercase()
}

/// Casefolded token norms of `text`, punctuation included.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.norm).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadSummary {
    pub loaded: usize,
    pub skipped: usize,
    /// `(line number, reason)` for every skipped line.
    pub malformed: Vec<(usize, String)>,
}

impl std::fmt::Display for LoadSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "loaded={} skipped={}", self.loaded, self.skipped)
    }
}

/// Streaming JSONL article reader. Malformed lines are skipped and recorded
/// in the summary; duplicate ids are fatal.
pub struct CorpusReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    seen: HashMap<String, usize>,
    summary: LoadSummary,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            seen: HashMap::new(),
            summary: LoadSummary::default(),
        }
    }

    pub fn summary(&self) -> &LoadSummary {
        &self.summary
    }

    pub fn into_summary(self) -> LoadSummary {
        self.summary
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Article, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(CorpusError::Io {
                        line: self.line_no + 1,
                        source,
                    }))
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let article = match serde_json::from_str::<Article>(&line) {
                Ok(a) if a.id.is_empty() => Err("empty id".to_string()),
                Ok(a) => Ok(a),
                Err(e) => Err(e.to_string()),
            };
            match article {
                Ok(article) => {
                    if let Some(&first) = self.seen.get(&article.id) {
                        return Some(Err(CorpusError::DuplicateId {
                            id: article.id,
                            first,
                            second: self.line_no,
                        }));
                    }
                    self.seen.insert(article.id.clone(), self.line_no);
                    self.summary.loaded += 1;
                    return Some(Ok(article));
                }
                Err(reason) => {
                    log::warn!("skipping malformed corpus line {}: {}", self.line_no, reason);
                    self.summary.skipped += 1;
                    self.summary.malformed.push((self.line_no, reason));
                }
            }
        }
    }
}

pub fn open_corpus(path: &Path) -> Result<CorpusReader<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(CorpusReader::new(BufReader::new(file)))
}

/// Read a whole corpus file into memory.
pub fn load_corpus(path: &Path) -> Result<(Vec<Article>, LoadSummary), CorpusError> {
    let mut reader = open_corpus(path)?;
    let articles = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((articles, reader.into_summary()))
}
