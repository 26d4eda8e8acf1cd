//! F1 at the top-k predicted keyphrases.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::meteor::stem;
use crate::text::metric_tokens;

pub const TOP_K: usize = 10;

/// Lowercased, stemmed form used to compare keyphrases.
pub fn normalize_keyphrase(phrase: &str) -> String {
    metric_tokens(phrase).iter().map(|t| stem(t)).collect::<Vec<_>>().join(" ")
}

/// F1 between the first `k` distinct predictions and the gold set. Precision
/// always divides by `k`. `None` when `gold` is empty.
pub fn keyword_f_at_k(predicted: &[String], gold: &[String], k: usize) -> Option<f64> {
    let gold: HashSet<String> = gold
        .iter()
        .map(|g| normalize_keyphrase(g))
        .filter(|g| !g.is_empty())
        .collect();
    if gold.is_empty() || k == 0 {
        return None;
    }
    let mut seen = HashSet::new();
    let top: Vec<String> = predicted
        .iter()
        .map(|p| normalize_keyphrase(p))
        .filter(|p| !p.is_empty() && seen.insert(p.clone()))
        .take(k)
        .collect();
    let hits = top.iter().filter(|p| gold.contains(*p)).count();
    if hits == 0 {
        return Some(0.0);
    }
    let p = hits as f64 / k as f64;
    let r = hits as f64 / gold.len() as f64;
    Some(2.0 * p * r / (p + r))
}

pub fn keyword_f_at_10(predicted: &[String], gold: &[String]) -> Option<f64> {
    keyword_f_at_k(predicted, gold, TOP_K)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordReport {
    pub f_at_10: f64,
    pub evaluated: usize,
    pub skipped_empty_gold: usize,
    pub per_instance: Vec<(String, f64)>,
}

/// Mean F@10 over `(instance_id, predicted, gold)` triples.
pub fn keyword_report<'a, I>(items: I) -> KeywordReport
where
    I: IntoIterator<Item = (&'a str, &'a [String], &'a [String])>,
{
    let mut report = KeywordReport::default();
    for (id, predicted, gold) in items {
        match keyword_f_at_10(predicted, gold) {
            Some(f) => report.per_instance.push((id.to_owned(), f)),
            None => report.skipped_empty_gold += 1,
        }
    }
    report.evaluated = report.per_instance.len();
    if report.evaluated > 0 {
        report.f_at_10 = report.per_instance.iter().map(|(_, f)| f).sum::<f64>() / report.evaluated as f64;
    }
    report
}
