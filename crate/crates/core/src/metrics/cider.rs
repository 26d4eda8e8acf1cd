//! CIDEr-D: clipped tf-idf n-gram cosine with a Gaussian length penalty.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

use super::bleu::ngram_counts;

pub const CIDER_MAX_ORDER: usize = 4;
pub const CIDER_SIGMA: f64 = 6.0;
pub const CIDER_SCALE: f64 = 10.0;

/// Document frequencies of reference n-grams (n = 1..4), one document per image.
#[derive(Debug, Clone, Default)]
pub struct IdfTable {
    images: usize,
    df: HashMap<Vec<String>, usize>,
}

impl IdfTable {
    /// `references` yields the tokenized reference set of each image.
    pub fn from_references<'a, I>(references: I) -> Self
    where
        I: IntoIterator<Item = &'a [Vec<String>]>,
    {
        let mut table = IdfTable::default();
        for refs in references {
            table.images += 1;
            let mut seen: HashSet<&[String]> = HashSet::new();
            for r in refs {
                for n in 1..=CIDER_MAX_ORDER {
                    if r.len() >= n {
                        seen.extend(r.windows(n));
                    }
                }
            }
            for gram in seen {
                *table.df.entry(gram.to_vec()).or_insert(0) += 1;
            }
        }
        table
    }

    pub fn images(&self) -> usize {
        self.images
    }

    pub fn is_empty(&self) -> bool {
        self.images == 0
    }

    pub fn df(&self, gram: &[String]) -> usize {
        self.df.get(gram).copied().unwrap_or(0)
    }

    /// `ln(N / max(df, 1))`; n-grams never seen in the references get `ln N`.
    pub fn idf(&self, gram: &[String]) -> f64 {
        (self.images as f64).ln() - (self.df(gram).max(1) as f64).ln()
    }

    /// All idf values vanish when there is at most one image.
    pub fn is_degenerate(&self) -> bool {
        self.images <= 1
    }
}

struct Weighted<'t> {
    vecs: Vec<HashMap<&'t [String], f64>>,
    norms: Vec<f64>,
    len: usize,
}

fn weigh<'t>(tokens: &'t [String], idf: &IdfTable) -> Weighted<'t> {
    let mut vecs = Vec::with_capacity(CIDER_MAX_ORDER);
    let mut norms = Vec::with_capacity(CIDER_MAX_ORDER);
    for n in 1..=CIDER_MAX_ORDER {
        let v: HashMap<&[String], f64> = ngram_counts(tokens, n)
            .into_iter()
            .map(|(g, tf)| (g, tf as f64 * idf.idf(g)))
            .collect();
        norms.push(v.values().map(|x| x * x).sum::<f64>().sqrt());
        vecs.push(v);
    }
    Weighted {
        vecs,
        norms,
        len: tokens.len(),
    }
}

fn similarity(cand: &Weighted<'_>, reference: &Weighted<'_>) -> f64 {
    let delta = cand.len as f64 - reference.len as f64;
    let penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
    let mut total = 0.0;
    for n in 0..CIDER_MAX_ORDER {
        let mut dot = 0.0;
        for (gram, c) in &cand.vecs[n] {
            if let Some(r) = reference.vecs[n].get(gram) {
                dot += c.min(*r) * r;
            }
        }
        let denom = cand.norms[n] * reference.norms[n];
        if denom > 0.0 {
            total += dot / denom * penalty;
        }
    }
    total / CIDER_MAX_ORDER as f64
}

/// CIDEr-D of one candidate against its references, in `[0, 10]`.
pub fn cider_d_tokens(candidate: &[String], references: &[Vec<String>], idf: &IdfTable) -> Result<f64> {
    if idf.is_empty() {
        return Err(Error::EmptyIdf);
    }
    if references.is_empty() {
        return Ok(0.0);
    }
    let cand = weigh(candidate, idf);
    let sum: f64 = references.iter().map(|r| similarity(&cand, &weigh(r, idf))).sum();
    Ok(CIDER_SCALE * sum / references.len() as f64)
}
