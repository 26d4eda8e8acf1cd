//! Corpus ingestion, cleaning, splitting and keyword-dataset construction.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stable_key;
use crate::text::{nfc, normalize_caption, word_count};

/// Shortest caption kept by [`clean`], in words.
pub const MIN_CAPTION_WORDS: usize = 5;
/// Longest caption kept by [`clean`], in words.
pub const MAX_CAPTION_WORDS: usize = 31;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub article_id: String,
    pub body: String,
    #[serde(default)]
    pub source: String,
    #[serde(rename = "keywords", default, skip_serializing_if = "Option::is_none")]
    pub gold_keywords: Option<Vec<String>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImageRef {
    pub image_id: String,
    pub uri: String,
    pub content_hash: Option<String>,
}

impl ImageRef {
    pub fn is_present(&self) -> bool {
        !self.uri.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Unassigned];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "CaptionLine", into = "CaptionLine")]
pub struct CaptionRecord {
    pub record_id: String,
    pub image: ImageRef,
    pub caption: String,
    pub article_id: String,
    pub split: Split,
}

/// Wire layout of one captions-file line.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaptionLine {
    record_id: String,
    #[serde(default)]
    image_id: String,
    #[serde(default, deserialize_with = "null_as_empty")]
    image_uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_hash: Option<String>,
    caption: String,
    article_id: String,
    #[serde(default, skip_serializing_if = "is_unassigned")]
    split: Split,
}

fn is_unassigned(split: &Split) -> bool {
    *split == Split::Unassigned
}

fn null_as_empty<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    Ok(Option::<String>::deserialize(d)?.unwrap_or_default())
}

impl From<CaptionLine> for CaptionRecord {
    fn from(line: CaptionLine) -> Self {
        CaptionRecord {
            record_id: line.record_id,
            image: ImageRef {
                image_id: line.image_id,
                uri: line.image_uri,
                content_hash: line.image_hash,
            },
            caption: line.caption,
            article_id: line.article_id,
            split: line.split,
        }
    }
}

impl From<CaptionRecord> for CaptionLine {
    fn from(rec: CaptionRecord) -> Self {
        CaptionLine {
            record_id: rec.record_id,
            image_id: rec.image.image_id,
            image_uri: rec.image.uri,
            image_hash: rec.image.content_hash,
            caption: rec.caption,
            article_id: rec.article_id,
            split: rec.split,
        }
    }
}

/// Cleaning rules, in the order they are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleanRule {
    NoImage,
    Short,
    Long,
    Dup,
}

impl CleanRule {
    pub const ALL: [CleanRule; 4] = [CleanRule::NoImage, CleanRule::Short, CleanRule::Long, CleanRule::Dup];

    pub fn as_str(self) -> &'static str {
        match self {
            CleanRule::NoImage => "no_image",
            CleanRule::Short => "short",
            CleanRule::Long => "long",
            CleanRule::Dup => "dup",
        }
    }
}

/// Per-rule removal counts accumulated by [`clean`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningLog {
    pub raw_count: usize,
    pub removed: BTreeMap<CleanRule, usize>,
}

impl CleaningLog {
    pub fn count(&self, rule: CleanRule) -> usize {
        self.removed.get(&rule).copied().unwrap_or(0)
    }

    pub fn total_removed(&self) -> usize {
        self.removed.values().sum()
    }

    /// The provenance document: `{"rule": count}` for every rule.
    pub fn to_counts(&self) -> BTreeMap<&'static str, usize> {
        CleanRule::ALL.iter().map(|r| (r.as_str(), self.count(*r))).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub articles: BTreeMap<String, Article>,
    pub records: Vec<CaptionRecord>,
    pub provenance: CleaningLog,
}

impl Corpus {
    pub fn article(&self, article_id: &str) -> Option<&Article> {
        self.articles.get(article_id)
    }

    /// Article body for a record. Referential integrity guarantees presence.
    pub fn context_of(&self, record: &CaptionRecord) -> &str {
        self.articles
            .get(&record.article_id)
            .map(|a| a.body.as_str())
            .unwrap_or_default()
    }

    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.split).or_insert(0) += 1;
        }
        counts
    }

    pub fn load(articles: &Path, captions: &Path) -> Result<Corpus> {
        let a = File::open(articles).map_err(|e| Error::io(articles, e))?;
        let c = File::open(captions).map_err(|e| Error::io(captions, e))?;
        ingest_named(
            BufReader::new(a),
            &articles.display().to_string(),
            BufReader::new(c),
            &captions.display().to_string(),
        )
    }

    pub fn write(&self, articles: &Path, captions: &Path) -> Result<()> {
        crate::jsonl::write_path(articles, self.articles.values())?;
        crate::jsonl::write_path(captions, &self.records)
    }
}

/// Read an articles stream and a captions stream into a [`Corpus`]. Bodies
/// and captions are stored NFC-normalized.
pub fn ingest<A: BufRead, C: BufRead>(articles: A, captions: C) -> Result<Corpus> {
    ingest_named(articles, "articles", captions, "captions")
}

pub fn ingest_named<A: BufRead, C: BufRead>(
    articles: A,
    articles_name: &str,
    captions: C,
    captions_name: &str,
) -> Result<Corpus> {
    let mut by_id = BTreeMap::new();
    for (line, article) in read_lines::<Article, _>(articles, articles_name)? {
        if article.article_id.is_empty() {
            return Err(Error::malformed(articles_name, line, "empty article_id"));
        }
        if article.body.trim().is_empty() {
            return Err(Error::malformed(articles_name, line, "empty article body"));
        }
        if by_id.contains_key(&article.article_id) {
            return Err(Error::malformed(
                articles_name,
                line,
                format!("duplicate article_id {:?}", article.article_id),
            ));
        }
        let article = Article {
            body: nfc(&article.body),
            ..article
        };
        by_id.insert(article.article_id.clone(), article);
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut dangling = BTreeSet::new();
    for (line, record) in read_lines::<CaptionRecord, _>(captions, captions_name)? {
        if record.record_id.is_empty() {
            return Err(Error::malformed(captions_name, line, "empty record_id"));
        }
        if !seen.insert(record.record_id.clone()) {
            return Err(Error::malformed(
                captions_name,
                line,
                format!("duplicate record_id {:?}", record.record_id),
            ));
        }
        if !by_id.contains_key(&record.article_id) {
            dangling.insert(record.article_id.clone());
        }
        records.push(CaptionRecord {
            caption: nfc(&record.caption),
            ..record
        });
    }
    if !dangling.is_empty() {
        return Err(Error::DanglingArticles(dangling.into_iter().collect()));
    }

    let raw_count = records.len();
    Ok(Corpus {
        articles: by_id,
        records,
        provenance: CleaningLog {
            raw_count,
            removed: BTreeMap::new(),
        },
    })
}

fn read_lines<T: serde::de::DeserializeOwned, R: BufRead>(reader: R, name: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::malformed(name, idx + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::malformed(name, idx + 1, e))?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

/// Apply the cleaning rules (missing image, caption length, duplicate caption)
/// and accumulate per-rule removal counts. The first occurrence of a duplicate
/// caption in input order is kept.
pub fn clean(corpus: &Corpus) -> Corpus {
    // Per-record checks are independent; dedup needs input order.
    let verdicts: Vec<(Option<CleanRule>, String)> = corpus
        .records
        .par_iter()
        .map(|r| {
            let norm = normalize_caption(&r.caption);
            let words = word_count(&norm);
            let rule = if !r.image.is_present() {
                Some(CleanRule::NoImage)
            } else if words < MIN_CAPTION_WORDS {
                Some(CleanRule::Short)
            } else if words > MAX_CAPTION_WORDS {
                Some(CleanRule::Long)
            } else {
                None
            };
            (rule, norm)
        })
        .collect();

    let mut provenance = corpus.provenance.clone();
    if provenance.raw_count == 0 && provenance.removed.is_empty() {
        provenance.raw_count = corpus.records.len();
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut records = Vec::with_capacity(corpus.records.len());
    for (record, (rule, norm)) in corpus.records.iter().zip(&verdicts) {
        let rule = rule.or_else(|| (!seen.insert(norm.as_str())).then_some(CleanRule::Dup));
        match rule {
            Some(rule) => *provenance.removed.entry(rule).or_insert(0) += 1,
            None => records.push(record.clone()),
        }
    }
    for rule in CleanRule::ALL {
        provenance.removed.entry(rule).or_insert(0);
    }

    Corpus {
        articles: corpus.articles.clone(),
        records,
        provenance,
    }
}

/// Train/val/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let parts = [train, val, test];
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidFractions(format!(
                "fractions must be finite and nonnegative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidFractions(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(SplitFractions { train, val, test })
    }

    /// Bucket sizes for `n` items by largest-remainder rounding. Ties in the
    /// remainder go to the earlier bucket (train, then val, then test).
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let quotas = [self.train, self.val, self.test].map(|f| f * n as f64);
        let mut counts = quotas.map(|q| q.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        for &bucket in order.iter().cycle().take(n.saturating_sub(assigned)) {
            counts[bucket] += 1;
        }
        // Floating error can overshoot by one in degenerate cases.
        while counts.iter().sum::<usize>() > n {
            let idx = (0..3).rev().find(|&i| counts[i] > 0).expect("nonzero bucket");
            counts[idx] -= 1;
        }
        counts
    }
}

impl FromStr for SplitFractions {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidFractions(format!("{s:?}: {e}")))?;
        match parts.as_slice() {
            [train, val, test] => SplitFractions::new(*train, *val, *test),
            _ => Err(Error::InvalidFractions(format!("expected three fractions, got {s:?}"))),
        }
    }
}

/// Assign every record to train/val/test. Records are ordered by a seeded
/// hash of their id, so the assignment does not depend on input order.
pub fn split(corpus: &Corpus, fractions: SplitFractions, seed: u64) -> Corpus {
    let mut keyed: Vec<(u64, &str, usize)> = corpus
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (stable_key(seed, "split", &r.record_id), r.record_id.as_str(), i))
        .collect();
    keyed.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let [train, val, _] = fractions.counts(keyed.len());
    let mut assignment = vec![Split::Unassigned; keyed.len()];
    for (rank, (_, _, idx)) in keyed.iter().enumerate() {
        assignment[*idx] = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        };
    }

    let records = corpus
        .records
        .iter()
        .zip(assignment)
        .map(|(r, split)| CaptionRecord { split, ..r.clone() })
        .collect();
    Corpus {
        articles: corpus.articles.clone(),
        records,
        provenance: corpus.provenance.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordInstance {
    pub article_id: String,
    pub input_text: String,
    pub target_keywords: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordDataset {
    pub instances: Vec<KeywordInstance>,
    pub skipped_no_keywords: usize,
    pub skipped_duplicate_body: usize,
}

/// One instance per article carrying gold keywords, in article-id order.
/// Articles whose body duplicates an earlier keyworded article are dropped.
pub fn build_keyword_dataset(corpus: &Corpus) -> KeywordDataset {
    let mut out = KeywordDataset::default();
    let mut bodies: HashMap<String, &str> = HashMap::new();
    for article in corpus.articles.values() {
        let keywords: Vec<String> = article
            .gold_keywords
            .iter()
            .flatten()
            .map(|k| k.trim())
            .filter(|k| !k.is_empty())
            .map(str::to_owned)
            .collect();
        if keywords.is_empty() {
            out.skipped_no_keywords += 1;
            continue;
        }
        let key = normalize_caption(&article.body);
        if bodies.contains_key(&key) {
            out.skipped_duplicate_body += 1;
            continue;
        }
        bodies.insert(key, &article.article_id);
        out.instances.push(KeywordInstance {
            article_id: article.article_id.clone(),
            input_text: article.body.clone(),
            target_keywords: keywords,
        });
    }
    out
}
