//! Shared fixtures and independent oracles for the integration suites.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use capforge_core::entity::{Entity, EntityType};
use serde_json::json;

pub const PEOPLE: &[&str] = &[
    "John Garrison",
    "Mark Pattinson",
    "Alice Smith",
    "Ana Lucía Pérez",
    "Zoë Kravitz",
    "Omar Haddad",
    "Mei Lin",
];
pub const PLACES: &[&str] = &["Berlin", "London", "Paris", "New York", "Köln", "São Paulo", "Lagos"];
pub const ORGS: &[&str] = &["United Nations", "Red Cross", "Acme Corp"];
pub const FACS: &[&str] = &["Heathrow Airport", "Wembley Stadium"];
pub const LOCS: &[&str] = &["Lake Tahoe", "the Alps"];
pub const EVENTS: &[&str] = &["World Cup", "Met Gala"];
pub const FILLER: &[&str] = &[
    "performing", "in", "during", "the", "rally", "crowd", "waits", "outside", "at", "a", "press", "conference",
    "on", "monday", "april", "2015", "speaks", "to", "reporters", "after", "match", "with", "fans", "near",
    "protest", "march", "supporters", "police", "officers", "stand", "by", "building",
];

/// Gazetteer file contents covering every name list above, plus one
/// out-of-set label that must be discarded.
pub fn gazetteer_tsv() -> String {
    let mut out = String::new();
    for (list, label) in [
        (PEOPLE, "PERSON"),
        (PLACES, "GPE"),
        (ORGS, "ORG"),
        (FACS, "FAC"),
        (LOCS, "LOC"),
        (EVENTS, "EVENT"),
    ] {
        for s in list {
            out.push_str(&format!("{s}\t{label}\n"));
        }
    }
    out.push_str("April 2015\tDATE\n");
    out
}

fn entity_lists() -> [&'static [&'static str]; 6] {
    [PEOPLE, PLACES, ORGS, FACS, LOCS, EVENTS]
}

/// Random caption of filler words with up to `max_entities` names spliced in.
pub fn random_caption<R: Rng>(rng: &mut R, max_entities: usize) -> String {
    let n_words = rng.random_range(5..14);
    let mut words: Vec<String> = (0..n_words).map(|_| FILLER.choose(rng).unwrap().to_string()).collect();
    let lists = entity_lists();
    // Keep names apart so adjacent names cannot fuse into one gazetteer match.
    let n_ents = rng.random_range(0..=max_entities);
    for k in 0..n_ents {
        let list = lists[rng.random_range(0..lists.len())];
        let name = list.choose(rng).unwrap().to_string();
        let slot = (k * 3).min(words.len());
        words.insert(slot, name);
        if rng.random_bool(0.3) {
            let w = words[slot].clone();
            words[slot] = format!("{w},");
        }
    }
    words.join(" ")
}

const SOURCES: [&str; 4] = ["guardian", "bbc", "usa_today", "washington_post"];

/// Articles and captions JSONL for a synthetic corpus of `n` records.
pub fn synthetic_corpus(n: usize, seed: u64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_articles = (n / 4).max(1);
    let mut articles = String::new();
    for a in 0..n_articles {
        let body: Vec<String> = (0..rng.random_range(20..60))
            .map(|_| FILLER.choose(&mut rng).unwrap().to_string())
            .collect();
        let line = json!({
            "article_id": format!("a{a:05}"),
            "body": format!("Story {a}: {}", body.join(" ")),
            "source": SOURCES[a % 4],
            "keywords": ["news", format!("topic{}", a % 7)],
        });
        articles.push_str(&line.to_string());
        articles.push('\n');
    }
    let mut captions = String::new();
    for r in 0..n {
        let line = json!({
            "record_id": format!("r{r:06}"),
            "image_id": format!("img{r:06}"),
            "image_uri": format!("images/{r:06}.jpg"),
            "caption": random_caption(&mut rng, 3),
            "article_id": format!("a{:05}", rng.random_range(0..n_articles)),
        });
        captions.push_str(&line.to_string());
        captions.push('\n');
    }
    (articles, captions)
}

/// 100 captions: 77 clean, 10 later exact duplicates of clean ones, 5 of four
/// words, 5 of 32 words and 3 without an image uri.
pub fn cleaning_fixture() -> (String, String) {
    let articles = (0..4)
        .map(|a| json!({"article_id": format!("a{a}"), "body": format!("article body {a}"), "source": "wire"}).to_string())
        .collect::<Vec<_>>()
        .join("\n");
    let unique = |i: usize, words: usize| -> String {
        (0..words).map(|w| format!("u{i}w{w}")).collect::<Vec<_>>().join(" ")
    };
    let mut rows: Vec<(String, String)> = Vec::new();
    for i in 0..77 {
        rows.push((unique(i, 5 + i % 27), format!("img/{i}.jpg")));
    }
    for i in 0..10 {
        rows.push((rows[i * 7].0.clone(), format!("img/dup{i}.jpg")));
    }
    for i in 0..5 {
        rows.push((unique(100 + i, 4), format!("img/s{i}.jpg")));
    }
    for i in 0..5 {
        rows.push((unique(200 + i, 32), format!("img/l{i}.jpg")));
    }
    for i in 0..3 {
        rows.push((unique(300 + i, 8), String::new()));
    }
    let captions = rows
        .iter()
        .enumerate()
        .map(|(r, (caption, uri))| {
            json!({
                "record_id": format!("r{r:03}"), "image_id": format!("i{r}"), "image_uri": uri,
                "caption": caption, "article_id": format!("a{}", r % 4)
            })
            .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n");
    (articles, captions)
}

// ---------------------------------------------------------------------------
// Brute-force metric oracles. These deliberately avoid the hash-map n-gram
// counting and DP LCS used by the library.

fn count_occurrences(haystack: &[String], gram: &[String]) -> usize {
    if haystack.len() < gram.len() {
        return 0;
    }
    (0..=haystack.len() - gram.len())
        .filter(|&i| (0..gram.len()).all(|k| haystack[i + k] == gram[k]))
        .count()
}

/// BLEU-4 of one candidate by exhaustive n-gram enumeration.
pub fn bleu4_oracle(candidate: &[String], references: &[Vec<String>]) -> f64 {
    let mut log_sum = 0.0;
    for n in 1..=4 {
        if candidate.len() < n {
            return 0.0;
        }
        let total = candidate.len() - n + 1;
        let mut matched = 0;
        let mut counted: Vec<&[String]> = Vec::new();
        for i in 0..total {
            let gram = &candidate[i..i + n];
            if counted.iter().any(|g| *g == gram) {
                continue;
            }
            counted.push(gram);
            let in_cand = count_occurrences(candidate, gram);
            let in_ref = references.iter().map(|r| count_occurrences(r, gram)).max().unwrap_or(0);
            matched += in_cand.min(in_ref);
        }
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    let c = candidate.len() as f64;
    let mut best = references[0].len();
    for r in references {
        let (d, bd) = (r.len().abs_diff(candidate.len()), best.abs_diff(candidate.len()));
        if d < bd || (d == bd && r.len() < best) {
            best = r.len();
        }
    }
    let bp = if c > best as f64 { 1.0 } else { (1.0 - best as f64 / c).exp() };
    bp * (log_sum / 4.0).exp()
}

/// LCS by plain recursion.
pub fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    match (a.split_first(), b.split_first()) {
        (Some((x, ra)), Some((y, rb))) => {
            if x == y {
                1 + lcs_oracle(ra, rb)
            } else {
                lcs_oracle(ra, b).max(lcs_oracle(a, rb))
            }
        }
        _ => 0,
    }
}

pub fn rouge_l_oracle(candidate: &[String], references: &[Vec<String>]) -> f64 {
    let beta2 = 1.2f64 * 1.2;
    references
        .iter()
        .map(|r| {
            let l = lcs_oracle(candidate, r) as f64;
            if l == 0.0 {
                return 0.0;
            }
            let p = l / candidate.len() as f64;
            let rc = l / r.len() as f64;
            (1.0 + beta2) * p * rc / (rc + beta2 * p)
        })
        .fold(0.0, f64::max)
}

/// Every sentence of length 1..=max_len over the alphabet.
pub fn all_sentences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for a in alphabet {
                let mut t = s.clone();
                t.push(a.to_string());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Segments of `text` outside the `(start, end)` char spans, in order.
pub fn residual(text: &str, spans: &[(usize, usize)]) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut cursor = 0;
    for &(s, e) in spans {
        out.push(chars[cursor..s].iter().collect());
        cursor = e;
    }
    out.push(chars[cursor..].iter().collect());
    out
}

fn char_substr(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end - start).collect()
}

/// Every entity's span reads back its surface from `text`.
pub fn spans_sound(text: &str, entities: &[Entity]) -> Result<(), String> {
    for e in entities {
        if char_substr(text, e.start, e.end) != e.surface {
            return Err(format!("span {}..{} of {text:?} is not {:?}", e.start, e.end, e.surface));
        }
    }
    Ok(())
}

/// Entity-swap negative: same non-entity text, same type sequence, sound spans.
pub fn check_entity_swap(source: &str, source_entities: &[Entity], out: &str, out_entities: &[Entity]) -> Result<(), String> {
    spans_sound(out, out_entities)?;
    let src_spans: Vec<_> = source_entities.iter().map(|e| (e.start, e.end)).collect();
    let out_spans: Vec<_> = out_entities.iter().map(|e| (e.start, e.end)).collect();
    if residual(source, &src_spans) != residual(out, &out_spans) {
        return Err(format!("residual differs: {source:?} -> {out:?}"));
    }
    let types = |es: &[Entity]| es.iter().map(|e| e.etype).collect::<Vec<_>>();
    if types(source_entities) != types(out_entities) {
        return Err(format!("type sequence differs: {source:?} -> {out:?}"));
    }
    Ok(())
}

/// Content-swap negative: the donor's non-entity text with exactly the
/// source's entity surfaces.
pub fn check_content_swap(
    source_entities: &[Entity],
    donor: &str,
    donor_entities: &[Entity],
    out: &str,
    out_entities: &[Entity],
) -> Result<(), String> {
    spans_sound(out, out_entities)?;
    let multiset = |es: &[Entity]| {
        let mut v: Vec<(String, EntityType)> = es.iter().map(|e| (e.surface.clone(), e.etype)).collect();
        v.sort();
        v
    };
    if multiset(source_entities) != multiset(out_entities) {
        return Err(format!("entity multiset not conserved in {out:?}"));
    }
    let donor_spans: Vec<_> = donor_entities.iter().map(|e| (e.start, e.end)).collect();
    let out_spans: Vec<_> = out_entities.iter().map(|e| (e.start, e.end)).collect();
    if residual(donor, &donor_spans) != residual(out, &out_spans) {
        return Err(format!("donor residual differs: {donor:?} -> {out:?}"));
    }
    Ok(())
}

/// Expected state of one task, tracked independently of the store.
#[derive(Debug, Clone, PartialEq)]
struct ModelTask {
    caption: Vec<char>,
    status: &'static str,
    claimant: Option<String>,
    claimed_at: i64,
    author: Option<String>,
    verifier: Option<String>,
    rejections: u32,
}

/// Drive `store` with `ops` random operations and check every outcome against
/// a reference model: legal edges only, no self-verification, rejected
/// operations leave no trace, and replaying the log rebuilds the state.
pub fn simulate_annotation(
    store: &mut capforge_core::annotation::AnnotationStore,
    clock: &capforge_core::annotation::ManualClock,
    timeout_ms: i64,
    ops: usize,
    seed: u64,
) -> Result<usize, String> {
    use capforge_core::annotation::replay;
    use capforge_core::annotation::{TaskInstance, TaskStatus, Verdict};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actors = ["ann", "bob", "cyd", "dee"];
    let captions = ["John Garrison performing in Berlin", "Zoë Kravitz at the Met Gala in New York", "crowd waits"];
    let instances: Vec<TaskInstance> = (0..12)
        .map(|i| TaskInstance {
            source_id: format!("t{i:02}"),
            image_id: format!("img{i}"),
            image_uri: format!("{i}.jpg"),
            caption: captions[i % captions.len()].to_owned(),
            context: "ctx".to_owned(),
        })
        .collect();
    let mut model: std::collections::BTreeMap<String, ModelTask> = instances
        .iter()
        .map(|t| {
            let task = ModelTask {
                caption: t.caption.chars().collect(),
                status: "pending",
                claimant: None,
                claimed_at: 0,
                author: None,
                verifier: None,
                rejections: 0,
            };
            (t.source_id.clone(), task)
        })
        .collect();
    let created = store.create_tasks(instances.clone(), "admin").map_err(|e| e.to_string())?;
    if created.created.len() != instances.len() {
        return Err("initial create failed".into());
    }
    if store.create_tasks(instances, "admin").map_err(|e| e.to_string())?.skipped != 12 {
        return Err("duplicate create was not skipped".into());
    }

    let mut ids: Vec<String> = model.keys().cloned().collect();
    let mut successes = 0;
    for step in 0..ops {
        if rng.random_bool(0.1) {
            clock.advance(rng.random_range(0..timeout_ms / 2));
        }
        if rng.random_bool(0.03) {
            let id = format!("t{:02}", ids.len());
            let caption = captions[ids.len() % captions.len()];
            let inst = TaskInstance {
                source_id: id.clone(),
                image_id: id.clone(),
                image_uri: format!("{id}.jpg"),
                caption: caption.to_owned(),
                context: "ctx".to_owned(),
            };
            let out = store.create_tasks(vec![inst], "admin").map_err(|e| e.to_string())?;
            if out.created.len() != 1 || out.created[0].status != TaskStatus::Pending {
                return Err(format!("step {step}: create failed"));
            }
            model.insert(
                id.clone(),
                ModelTask {
                    caption: caption.chars().collect(),
                    status: "pending",
                    claimant: None,
                    claimed_at: 0,
                    author: None,
                    verifier: None,
                    rejections: 0,
                },
            );
            ids.push(id);
        }
        let now = store.now();
        let id = ids[ids.len() - 1 - rng.random_range(0..12)].clone();
        let actor = *actors.choose(&mut rng).unwrap();
        let m = model.get_mut(&id).unwrap();
        if m.status == "claimed" && now - m.claimed_at >= timeout_ms {
            m.status = "pending";
            m.claimant = None;
        }
        let before_events = store.events().len();
        let before_task = store.raw_tasks()[&id].clone();
        let op = rng.random_range(0..5);
        let result = match op {
            0 | 1 => {
                let ok = m.status == "pending";
                (ok, store.claim(&id, actor))
            }
            2 => {
                let len = m.caption.len();
                let start = rng.random_range(0..len + 2);
                let end = rng.random_range(0..len + 2);
                let repl = ["London", "", "  ", "BERLIN", "Ana Lucía Pérez"].choose(&mut rng).unwrap().to_string();
                let span_ok = start < end && end <= len;
                let original: String = if span_ok { m.caption[start..end].iter().collect() } else { String::new() };
                let ok = m.status == "claimed"
                    && m.claimant.as_deref() == Some(actor)
                    && span_ok
                    && !repl.trim().is_empty()
                    && original.to_lowercase() != repl.to_lowercase();
                (ok, store.submit_edit(&id, actor, start, end, &repl))
            }
            _ => {
                let verdict = if rng.random_bool(0.7) { Verdict::Accept } else { Verdict::Reject };
                let ok = m.status == "edited" && m.author.as_deref() != Some(actor);
                (ok, store.verify(&id, actor, verdict))
            }
        };
        let (expected_ok, outcome) = result;
        match (expected_ok, outcome) {
            (true, Ok(task)) => {
                successes += 1;
                match op {
                    0 | 1 => {
                        m.status = "claimed";
                        m.claimant = Some(actor.to_owned());
                        m.claimed_at = now;
                    }
                    2 => {
                        m.status = "edited";
                        m.author = Some(actor.to_owned());
                    }
                    _ if task.status == TaskStatus::PeerVerified => {
                        m.status = "peer_verified";
                        m.verifier = Some(actor.to_owned());
                    }
                    _ => {
                        m.status = "pending";
                        m.claimant = None;
                        m.author = None;
                        m.rejections += 1;
                    }
                }
                let status = serde_json::to_value(task.status).unwrap();
                if status != m.status {
                    return Err(format!("step {step}: status {status} but model says {}", m.status));
                }
                if task.status == TaskStatus::PeerVerified {
                    let author = task.edit.as_ref().map(|e| e.author.clone());
                    if task.verifier.is_none() || task.verifier == author {
                        return Err(format!("step {step}: verified without a distinct peer"));
                    }
                }
                if task.rejections != m.rejections {
                    return Err(format!("step {step}: rejection count diverged"));
                }
                if store.events().len() != before_events + 1 {
                    return Err(format!("step {step}: success did not append exactly one event"));
                }
            }
            (false, Err(_)) => {
                if store.events().len() != before_events || store.raw_tasks()[&id] != before_task {
                    return Err(format!("step {step}: failed op changed state"));
                }
            }
            (want, got) => {
                return Err(format!("step {step}: op {op} on {id} by {actor}: expected ok={want}, got {got:?}"));
            }
        }
    }

    let rebuilt = replay(store.events(), timeout_ms).map_err(|e| e.to_string())?;
    if &rebuilt != store.raw_tasks() {
        return Err("replay diverged from live state".into());
    }
    for t in store.raw_tasks().values() {
        if t.status == TaskStatus::PeerVerified {
            let e = t.edit.as_ref().ok_or("verified task without edit")?;
            if t.verifier.as_deref() == Some(e.author.as_str()) {
                return Err("self-verified task".into());
            }
        }
    }
    Ok(successes)
}
