//! Caption and keyword scoring: BLEU-4, METEOR-lite, ROUGE-L, CIDEr-D,
//! named-entity precision/recall and F@10.
//!
//! All caption metrics share one tokenization, [`metric_tokens`].

pub mod bleu;
pub mod cider;
pub mod keywords;
pub mod meteor;
pub mod ne;
pub mod rouge;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bleu::BleuStats;
pub use cider::IdfTable;
pub use keywords::{keyword_f_at_10, keyword_f_at_k, keyword_report, KeywordReport};
pub use ne::NeScores;

use crate::error::{Error, Result};
use crate::text::metric_tokens;

/// Smoothing constant for per-instance BLEU-4.
pub const SENTENCE_BLEU_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub instance_id: String,
    pub candidate: String,
    pub references: Vec<String>,
    #[serde(default)]
    pub candidate_entities: Option<Vec<String>>,
    #[serde(default)]
    pub reference_entities: Option<Vec<String>>,
}

impl EvalPair {
    pub fn new(instance_id: impl Into<String>, candidate: impl Into<String>, references: Vec<String>) -> Self {
        EvalPair {
            instance_id: instance_id.into(),
            candidate: candidate.into(),
            references,
            candidate_entities: None,
            reference_entities: None,
        }
    }

    pub fn with_entities(mut self, candidate: Vec<String>, reference: Vec<String>) -> Self {
        self.candidate_entities = Some(candidate);
        self.reference_entities = Some(reference);
        self
    }
}

struct Tokenized {
    candidate: Vec<String>,
    references: Vec<Vec<String>>,
}

fn tokenize(pairs: &[EvalPair]) -> Vec<Tokenized> {
    pairs
        .par_iter()
        .map(|p| Tokenized {
            candidate: metric_tokens(&p.candidate),
            references: p.references.iter().map(|r| metric_tokens(r)).collect(),
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Corpus BLEU-4.
pub fn bleu4(pairs: &[EvalPair]) -> f64 {
    let mut total = BleuStats::default();
    for t in tokenize(pairs) {
        total.add(&BleuStats::of(&t.candidate, &t.references));
    }
    total.score()
}

/// Mean per-instance ROUGE-L.
pub fn rouge_l(pairs: &[EvalPair]) -> f64 {
    mean(tokenize(pairs).iter().map(|t| rouge::rouge_l_tokens(&t.candidate, &t.references)))
}

/// Mean per-instance METEOR-lite.
pub fn meteor_lite(pairs: &[EvalPair]) -> f64 {
    mean(tokenize(pairs).iter().map(|t| meteor::meteor_lite_tokens(&t.candidate, &t.references)))
}

/// Idf table over the pairs' references, one document per pair.
pub fn idf_from_pairs(pairs: &[EvalPair]) -> IdfTable {
    let toks = tokenize(pairs);
    IdfTable::from_references(toks.iter().map(|t| t.references.as_slice()))
}

/// Mean per-instance CIDEr-D.
pub fn cider_d(pairs: &[EvalPair], idf: &IdfTable) -> Result<f64> {
    if idf.is_empty() {
        return Err(Error::EmptyIdf);
    }
    let scores = tokenize(pairs)
        .iter()
        .map(|t| cider::cider_d_tokens(&t.candidate, &t.references, idf))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(scores.into_iter()))
}

/// Named-entity P/R over the pairs that carry both entity lists.
pub fn ne_pr(pairs: &[EvalPair]) -> NeScores {
    ne::ne_pr_surfaces(pairs.iter().filter_map(|p| {
        Some((p.candidate_entities.as_deref()?, p.reference_entities.as_deref()?))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub instance_id: String,
    pub bleu4: f64,
    pub meteor_lite: f64,
    pub rouge_l: f64,
    pub cider_d: f64,
    pub ne_precision: Option<f64>,
    pub ne_recall: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub instances: usize,
    pub ne_instances: usize,
    pub ne_undefined_precision: usize,
    pub ne_undefined_recall: usize,
    pub idf_images: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// Set when the reference set has at most one image, so every idf is 0.
    pub cider_degenerate_idf: bool,
    /// Set when the corpus-level NE precision or recall had a zero denominator.
    pub ne_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu4: f64,
    pub meteor_lite: f64,
    pub rouge_l: f64,
    pub cider_d: f64,
    pub ne_precision: f64,
    pub ne_recall: f64,
    pub counts: ReportCounts,
    pub flags: ReportFlags,
    pub per_instance: Vec<InstanceScores>,
}

/// Score every pair and aggregate. The idf table is built from the pairs'
/// own references.
pub fn evaluate(pairs: &[EvalPair]) -> Result<MetricReport> {
    if pairs.is_empty() {
        return Err(Error::Config("no evaluation pairs".into()));
    }
    if let Some(p) = pairs.iter().find(|p| p.references.is_empty()) {
        return Err(Error::Config(format!("instance {:?} has no references", p.instance_id)));
    }
    let toks = tokenize(pairs);
    let idf = IdfTable::from_references(toks.iter().map(|t| t.references.as_slice()));

    let per_instance: Vec<(InstanceScores, BleuStats)> = pairs
        .par_iter()
        .zip(toks.par_iter())
        .map(|(p, t)| {
            let stats = BleuStats::of(&t.candidate, &t.references);
            let ne = match (&p.candidate_entities, &p.reference_entities) {
                (Some(c), Some(r)) => {
                    let m = ne::surface_matches(c, r);
                    (
                        (!c.is_empty()).then(|| ne::ratio(m, c.len())),
                        (!r.is_empty()).then(|| ne::ratio(m, r.len())),
                    )
                }
                _ => (None, None),
            };
            let scores = InstanceScores {
                instance_id: p.instance_id.clone(),
                bleu4: stats.smoothed_score(SENTENCE_BLEU_EPSILON),
                meteor_lite: meteor::meteor_lite_tokens(&t.candidate, &t.references),
                rouge_l: rouge::rouge_l_tokens(&t.candidate, &t.references),
                cider_d: cider::cider_d_tokens(&t.candidate, &t.references, &idf).expect("nonempty idf"),
                ne_precision: ne.0,
                ne_recall: ne.1,
            };
            (scores, stats)
        })
        .collect();

    let mut corpus_stats = BleuStats::default();
    for (_, s) in &per_instance {
        corpus_stats.add(s);
    }
    let ne = ne_pr(pairs);
    let per_instance: Vec<InstanceScores> = per_instance.into_iter().map(|(s, _)| s).collect();
    Ok(MetricReport {
        bleu4: corpus_stats.score(),
        meteor_lite: mean(per_instance.iter().map(|s| s.meteor_lite)),
        rouge_l: mean(per_instance.iter().map(|s| s.rouge_l)),
        cider_d: mean(per_instance.iter().map(|s| s.cider_d)),
        ne_precision: ne.precision,
        ne_recall: ne.recall,
        counts: ReportCounts {
            instances: pairs.len(),
            ne_instances: ne.instances,
            ne_undefined_precision: ne.undefined_precision,
            ne_undefined_recall: ne.undefined_recall,
            idf_images: idf.images(),
        },
        flags: ReportFlags {
            cider_degenerate_idf: idf.is_degenerate(),
            ne_undefined: ne.instances > 0 && (ne.candidate_total == 0 || ne.reference_total == 0),
        },
        per_instance,
    })
}
