//! Contextual-entailment instances: positives from true triples and
//! synthetic negatives (random caption, entity swap, content swap).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CaptionRecord, Corpus, ImageRef, Split};
use crate::entity::{byte_span, signature_index, surface_key, Entity, EntitySignature, EntityType, TaggedCaption};
use crate::error::{Error, Result};
use crate::seed::record_rng;
use crate::text::{char_len, normalize_caption};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Entails,
    NotEntails,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NegClass {
    P,
    N1,
    N2,
    N3,
    Manual,
}

impl NegClass {
    pub const SYNTHETIC: [NegClass; 3] = [NegClass::N1, NegClass::N2, NegClass::N3];

    pub fn as_str(self) -> &'static str {
        match self {
            NegClass::P => "P",
            NegClass::N1 => "N1",
            NegClass::N2 => "N2",
            NegClass::N3 => "N3",
            NegClass::Manual => "Manual",
        }
    }
}

impl fmt::Display for NegClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "InstanceLine", into = "InstanceLine")]
pub struct EntailmentInstance {
    pub instance_id: String,
    pub image: ImageRef,
    pub caption: String,
    pub context: String,
    pub label: Label,
    pub neg_class: NegClass,
    pub source_record_id: String,
    pub donor_record_id: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct InstanceLine {
    instance_id: String,
    image_id: String,
    image_uri: String,
    caption: String,
    context: String,
    label: Label,
    neg_class: NegClass,
    source_record_id: String,
    #[serde(default)]
    donor_record_id: Option<String>,
}

impl From<InstanceLine> for EntailmentInstance {
    fn from(l: InstanceLine) -> Self {
        EntailmentInstance {
            instance_id: l.instance_id,
            image: ImageRef {
                image_id: l.image_id,
                uri: l.image_uri,
                content_hash: None,
            },
            caption: l.caption,
            context: l.context,
            label: l.label,
            neg_class: l.neg_class,
            source_record_id: l.source_record_id,
            donor_record_id: l.donor_record_id,
        }
    }
}

impl From<EntailmentInstance> for InstanceLine {
    fn from(i: EntailmentInstance) -> Self {
        InstanceLine {
            instance_id: i.instance_id,
            image_id: i.image.image_id,
            image_uri: i.image.uri,
            caption: i.caption,
            context: i.context,
            label: i.label,
            neg_class: i.neg_class,
            source_record_id: i.source_record_id,
            donor_record_id: i.donor_record_id,
        }
    }
}

impl EntailmentInstance {
    pub fn positive(record: &CaptionRecord, context: &str) -> Self {
        EntailmentInstance {
            instance_id: format!("{}/p", record.record_id),
            image: record.image.clone(),
            caption: record.caption.clone(),
            context: context.to_owned(),
            label: Label::Entails,
            neg_class: NegClass::P,
            source_record_id: record.record_id.clone(),
            donor_record_id: None,
        }
    }

    fn negative(record: &CaptionRecord, context: &str, caption: String, class: NegClass, donor: &str) -> Self {
        EntailmentInstance {
            instance_id: format!("{}/{}", record.record_id, class.as_str().to_ascii_lowercase()),
            image: record.image.clone(),
            caption,
            context: context.to_owned(),
            label: Label::NotEntails,
            neg_class: class,
            source_record_id: record.record_id.clone(),
            donor_record_id: Some(donor.to_owned()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    #[error("source caption has no entities")]
    NoEntities,
    #[error("no eligible donor caption")]
    NoMatch,
    #[error("retries exhausted")]
    RetriesExhausted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub no_entities: usize,
    pub no_match: usize,
    pub retries_exhausted: usize,
}

impl SkipCounts {
    fn bump(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::NoEntities => self.no_entities += 1,
            SkipReason::NoMatch => self.no_match += 1,
            SkipReason::RetriesExhausted => self.retries_exhausted += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.no_entities + self.no_match + self.retries_exhausted
    }
}

/// A generated negative together with the entity spans of its caption
/// (empty for random-caption negatives).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synthesized {
    pub instance: EntailmentInstance,
    pub entities: Vec<Entity>,
}

/// Rebuild `text` with each span replaced, left to right. Returns the new text
/// and the entities at their recomputed offsets, typed like the originals.
pub fn substitute_spans(text: &str, spans: &[(&Entity, &str)]) -> (String, Vec<Entity>) {
    let mut out = String::with_capacity(text.len());
    let mut entities = Vec::with_capacity(spans.len());
    let mut cursor = 0;
    let mut out_chars = 0;
    for (entity, replacement) in spans {
        let (from, to) = byte_span(text, entity);
        let between = &text[cursor..from];
        out.push_str(between);
        out_chars += char_len(between);
        let start = out_chars;
        out.push_str(replacement);
        out_chars += char_len(replacement);
        entities.push(Entity::new(*replacement, entity.etype, start, out_chars));
        cursor = to;
    }
    out.push_str(&text[cursor..]);
    (out, entities)
}

/// Donor candidates for one generation run, with precomputed lookups.
pub struct DonorPool<'a> {
    records: Vec<&'a CaptionRecord>,
    contexts: HashMap<&'a str, &'a str>,
    normalized: Vec<String>,
    norm_members: HashMap<String, Vec<usize>>,
    position: HashMap<&'a str, usize>,
    tags: HashMap<&'a str, &'a TaggedCaption>,
    by_signature: BTreeMap<EntitySignature, Vec<usize>>,
    max_retries: usize,
}

impl<'a> DonorPool<'a> {
    /// `tags` may cover any superset of `records`; untagged records count as
    /// entity-free.
    pub fn new(records: Vec<&'a CaptionRecord>, tags: &'a [TaggedCaption], max_retries: usize) -> Self {
        let position: HashMap<&str, usize> = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.record_id.as_str(), i))
            .collect();
        let tags: HashMap<&str, &TaggedCaption> = tags
            .iter()
            .filter(|t| position.contains_key(t.record_id.as_str()))
            .map(|t| (t.record_id.as_str(), t))
            .collect();
        let normalized: Vec<String> = records.par_iter().map(|r| normalize_caption(&r.caption)).collect();
        let mut norm_members: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, n) in normalized.iter().enumerate() {
            norm_members.entry(n.clone()).or_default().push(i);
        }

        let empty: Vec<TaggedCaption> = records
            .iter()
            .filter(|r| !tags.contains_key(r.record_id.as_str()))
            .map(|r| TaggedCaption::new(r.record_id.clone(), Vec::new()))
            .collect();
        let by_signature = signature_index(tags.values().copied().chain(empty.iter()))
            .into_iter()
            .map(|(sig, ids)| (sig, ids.iter().map(|id| position[id.as_str()]).collect()))
            .collect();

        DonorPool {
            records,
            contexts: HashMap::new(),
            normalized,
            norm_members,
            position,
            tags,
            by_signature,
            max_retries,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn entities_of(&self, idx: usize) -> &[Entity] {
        self.tags
            .get(self.records[idx].record_id.as_str())
            .map(|t| t.entities())
            .unwrap_or(&[])
    }

    fn attempts(&self) -> usize {
        self.max_retries + 1
    }

    /// Uniform index over the pool, skipping `exclude` when it is a member.
    fn sample_other<R: Rng>(&self, exclude: Option<usize>, rng: &mut R) -> Option<usize> {
        let n = self.records.len() - usize::from(exclude.is_some());
        if n == 0 {
            return None;
        }
        let mut idx = rng.random_range(0..n);
        if let Some(x) = exclude {
            if idx >= x {
                idx += 1;
            }
        }
        Some(idx)
    }

    /// Random caption whose normalized form differs from the source's.
    pub fn gen_n1<R: Rng>(&self, record: &CaptionRecord, context: &str, rng: &mut R) -> Result<Synthesized, SkipReason> {
        let norm = normalize_caption(&record.caption);
        let same = self.norm_members.get(&norm).map_or(0, Vec::len);
        if self.records.len() == same {
            return Err(SkipReason::NoMatch);
        }
        let donor = loop {
            let idx = rng.random_range(0..self.records.len());
            if self.normalized[idx] != norm {
                break idx;
            }
        };
        let donor = self.records[donor];
        Ok(Synthesized {
            instance: EntailmentInstance::negative(record, context, donor.caption.clone(), NegClass::N1, &donor.record_id),
            entities: Vec::new(),
        })
    }

    /// Swap every source entity for a same-typed entity of one random donor
    /// caption, keeping all other characters.
    pub fn gen_n2<R: Rng>(
        &self,
        record: &CaptionRecord,
        tagged: &TaggedCaption,
        context: &str,
        rng: &mut R,
    ) -> Result<Synthesized, SkipReason> {
        let source = tagged.entities();
        if source.is_empty() {
            return Err(SkipReason::NoEntities);
        }
        let self_idx = self.position.get(record.record_id.as_str()).copied();
        let source_norm = normalize_caption(&record.caption);
        for _ in 0..self.attempts() {
            let donor_idx = self.sample_other(self_idx, rng).ok_or(SkipReason::NoMatch)?;
            let donor_entities = self.entities_of(donor_idx);

            let mut queues: BTreeMap<EntityType, std::slice::Iter<'_, Entity>> = BTreeMap::new();
            let mut replacements = Vec::with_capacity(source.len());
            for e in source {
                let queue = queues.entry(e.etype).or_insert_with(|| donor_entities.iter());
                match queue.find(|d| d.etype == e.etype) {
                    Some(d) => replacements.push((e, d.surface.as_str())),
                    None => break,
                }
            }
            if replacements.len() < source.len() {
                continue;
            }
            if replacements.iter().all(|(e, r)| surface_key(e) == crate::text::fold_surface(r)) {
                continue;
            }
            let (caption, entities) = substitute_spans(&record.caption, &replacements);
            if normalize_caption(&caption) == source_norm {
                continue;
            }
            let donor = &self.records[donor_idx].record_id;
            return Ok(Synthesized {
                instance: EntailmentInstance::negative(record, context, caption, NegClass::N2, donor),
                entities,
            });
        }
        Err(SkipReason::RetriesExhausted)
    }

    /// Take a random donor caption with the same entity signature and put the
    /// source's entity surfaces into its entity slots, matched per type in
    /// left-to-right order.
    pub fn gen_n3<R: Rng>(
        &self,
        record: &CaptionRecord,
        tagged: &TaggedCaption,
        context: &str,
        rng: &mut R,
    ) -> Result<Synthesized, SkipReason> {
        let source = tagged.entities();
        if source.is_empty() {
            return Err(SkipReason::NoEntities);
        }
        let signature = tagged.signature();
        let Some(group) = self.by_signature.get(signature) else {
            return Err(SkipReason::NoMatch);
        };
        let source_norm = normalize_caption(&record.caption);
        let ineligible = |idx: usize| self.records[idx].record_id == record.record_id || self.normalized[idx] == source_norm;
        let blocked = group.iter().filter(|&&i| ineligible(i)).count();
        if blocked == group.len() {
            return Err(SkipReason::NoMatch);
        }

        for _ in 0..self.attempts() {
            let donor_idx = loop {
                let idx = group[rng.random_range(0..group.len())];
                if !ineligible(idx) {
                    break idx;
                }
            };
            let donor = self.records[donor_idx];
            let donor_entities = self.entities_of(donor_idx);

            let mut queues: BTreeMap<EntityType, std::slice::Iter<'_, Entity>> = BTreeMap::new();
            let mut slots = Vec::with_capacity(donor_entities.len());
            for d in donor_entities {
                let queue = queues.entry(d.etype).or_insert_with(|| source.iter());
                let s = queue
                    .find(|s| s.etype == d.etype)
                    .expect("equal signatures supply every type");
                slots.push((d, s.surface.as_str()));
            }
            let (caption, entities) = substitute_spans(&donor.caption, &slots);
            if normalize_caption(&caption) == source_norm {
                continue;
            }
            return Ok(Synthesized {
                instance: EntailmentInstance::negative(record, context, caption, NegClass::N3, &donor.record_id),
                entities,
            });
        }
        Err(SkipReason::RetriesExhausted)
    }

    fn context_for(&self, record: &CaptionRecord) -> &str {
        self.contexts.get(record.record_id.as_str()).copied().unwrap_or_default()
    }
}

/// Positive:negative ratio, class weights for N1:N2:N3 and retry budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    pub seed: u64,
    /// `(positives, negatives)`; 1:1 emits one negative per positive.
    pub ratio_pos_to_neg: (u32, u32),
    pub class_weights: [f64; 3],
    pub max_retries: usize,
}

impl MixConfig {
    pub fn new(seed: u64) -> Self {
        MixConfig {
            seed,
            ratio_pos_to_neg: (1, 1),
            class_weights: [1.0, 1.0, 1.0],
            max_retries: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (pos, neg) = self.ratio_pos_to_neg;
        if pos == 0 || neg == 0 {
            return Err(Error::Config(format!("ratio must be positive, got {pos}:{neg}")));
        }
        if self.class_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("class weights must be finite and nonnegative".into()));
        }
        if self.class_weights.iter().all(|w| *w == 0.0) {
            return Err(Error::Config("class weights are all zero".into()));
        }
        Ok(())
    }

    /// Negatives owed to the `i`-th positive so that the running total tracks
    /// the ratio exactly.
    pub fn negatives_for(&self, i: usize) -> usize {
        let (pos, neg) = (self.ratio_pos_to_neg.0 as u128, self.ratio_pos_to_neg.1 as u128);
        let i = i as u128;
        (((i + 1) * neg) / pos - (i * neg) / pos) as usize
    }
}

/// Parse a ratio such as `1:1` or `2:3`.
pub fn parse_ratio(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("ratio {s:?} is not of the form POS:NEG")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<u32>()
            .map_err(|e| Error::Config(format!("ratio {s:?}: {e}")))
    };
    Ok((parse(a)?, parse(b)?))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport(pub BTreeMap<NegClass, SkipCounts>);

impl SkipReport {
    pub fn get(&self, class: NegClass) -> SkipCounts {
        self.0.get(&class).copied().unwrap_or_default()
    }

    fn full() -> Self {
        SkipReport(NegClass::SYNTHETIC.iter().map(|c| (*c, SkipCounts::default())).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembled {
    pub instances: Vec<EntailmentInstance>,
    pub skips: SkipReport,
}

/// Emit one positive per selected record plus negatives drawn per `config`.
/// Donors come from the same selection. Each record gets its own PRNG stream
/// keyed on `(seed, record_id)`, so the output is independent of scheduling.
pub fn assemble(corpus: &Corpus, tagged: &[TaggedCaption], config: &MixConfig, splits: &[Split]) -> Result<Assembled> {
    config.validate()?;
    let selected: Vec<&CaptionRecord> = corpus.records.iter().filter(|r| splits.contains(&r.split)).collect();
    let mut pool = DonorPool::new(selected.clone(), tagged, config.max_retries);
    pool.contexts = selected
        .iter()
        .map(|r| (r.record_id.as_str(), corpus.context_of(r)))
        .collect();
    let classes = WeightedIndex::new(config.class_weights).map_err(|e| Error::Config(e.to_string()))?;

    let per_record: Vec<(Vec<EntailmentInstance>, Vec<(NegClass, SkipReason)>)> = selected
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let context = pool.context_for(record);
            let mut rng = record_rng(config.seed, "entailment", &record.record_id);
            let mut out = vec![EntailmentInstance::positive(record, context)];
            let mut skipped = Vec::new();
            let empty = TaggedCaption::new(record.record_id.clone(), Vec::new());
            let tags = pool.tags.get(record.record_id.as_str()).copied().unwrap_or(&empty);
            for k in 0..config.negatives_for(i) {
                let class = NegClass::SYNTHETIC[classes.sample(&mut rng)];
                let result = match class {
                    NegClass::N1 => pool.gen_n1(record, context, &mut rng),
                    NegClass::N2 => pool.gen_n2(record, tags, context, &mut rng),
                    _ => pool.gen_n3(record, tags, context, &mut rng),
                };
                match result {
                    Ok(mut s) => {
                        s.instance.instance_id = format!("{}/n{k}", record.record_id);
                        out.push(s.instance);
                    }
                    Err(reason) => skipped.push((class, reason)),
                }
            }
            (out, skipped)
        })
        .collect();

    let mut assembled = Assembled {
        instances: Vec::new(),
        skips: SkipReport::full(),
    };
    for (instances, skipped) in per_record {
        assembled.instances.extend(instances);
        for (class, reason) in skipped {
            assembled.skips.0.entry(class).or_default().bump(reason);
        }
    }
    Ok(assembled)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rec(id: &str, caption: &str) -> CaptionRecord {
        CaptionRecord {
            record_id: id.into(),
            image: ImageRef {
                image_id: format!("img-{id}"),
                uri: format!("{id}.jpg"),
                content_hash: None,
            },
            caption: caption.into(),
            article_id: "a1".into(),
            split: Split::Train,
        }
    }

    fn tag(id: &str, text: &str, ents: &[(&str, EntityType)]) -> TaggedCaption {
        let entities = ents
            .iter()
            .map(|(s, t)| {
                let byte = text.find(s).unwrap();
                let start = text[..byte].chars().count();
                Entity::new(*s, *t, start, start + s.chars().count())
            })
            .collect();
        TaggedCaption::new(id, entities)
    }

    const SOURCE: &str = "John Garrison performing in Berlin, April 2015";
    use EntityType::{Gpe, Person};

    #[test]
    fn n1_forced_choice_and_exhaustion() {
        let src = rec("s", "the same caption here ok");
        let twin = rec("t", "The same caption  here ok");
        let other = rec("o", "a different caption entirely here");
        let tags = vec![];
        let pool = DonorPool::new(vec![&src, &twin, &other], &tags, 20);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = pool.gen_n1(&src, "ctx", &mut rng).unwrap();
            assert_eq!(s.instance.donor_record_id.as_deref(), Some("o"));
            assert_eq!(s.instance.label, Label::NotEntails);
        }
        let pool = DonorPool::new(vec![&src, &twin], &tags, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(pool.gen_n1(&src, "ctx", &mut rng), Err(SkipReason::NoMatch));
    }

    #[test]
    fn n2_reproduces_entity_swap_example() {
        let src = rec("s", SOURCE);
        let donor_text = "Mark Pattinson arrives in London";
        let donor = rec("d", donor_text);
        let tags = vec![
            tag("s", SOURCE, &[("John Garrison", Person), ("Berlin", Gpe)]),
            tag("d", donor_text, &[("Mark Pattinson", Person), ("London", Gpe)]),
        ];
        let pool = DonorPool::new(vec![&src, &donor], &tags, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = pool.gen_n2(&src, &tags[0], "ctx", &mut rng).unwrap();
        assert_eq!(out.instance.caption, "Mark Pattinson performing in London, April 2015");
        assert_eq!(out.instance.neg_class, NegClass::N2);
        assert!(out.entities.iter().all(|e| e.is_sound_in(&out.instance.caption)));
    }

    #[test]
    fn n2_single_span() {
        let src = rec("s", "Berlin welcomes fans");
        let donor = rec("d", "Rain over Paris");
        let tags = vec![
            tag("s", "Berlin welcomes fans", &[("Berlin", Gpe)]),
            tag("d", "Rain over Paris", &[("Paris", Gpe)]),
        ];
        let pool = DonorPool::new(vec![&src, &donor], &tags, 20);
        let out = pool.gen_n2(&src, &tags[0], "", &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.instance.caption, "Paris welcomes fans");
    }

    #[test]
    fn n2_identical_donor_entities_exhaust_retries() {
        let src = rec("s", "Berlin welcomes fans");
        let donor = rec("d", "Snow in BERLIN");
        let tags = vec![
            tag("s", "Berlin welcomes fans", &[("Berlin", Gpe)]),
            tag("d", "Snow in BERLIN", &[("BERLIN", Gpe)]),
        ];
        let pool = DonorPool::new(vec![&src, &donor], &tags, 5);
        let r = pool.gen_n2(&src, &tags[0], "", &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(SkipReason::RetriesExhausted));
        let untagged = TaggedCaption::new("s", vec![]);
        let r = pool.gen_n2(&src, &untagged, "", &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(SkipReason::NoEntities));
    }

    #[test]
    fn n3_reproduces_content_swap_example() {
        let donor_text = "Alice Smith waiting in queue for filing tax returns in Paris, April 2015";
        let src = rec("s", SOURCE);
        let donor = rec("d", donor_text);
        let tags = vec![
            tag("s", SOURCE, &[("John Garrison", Person), ("Berlin", Gpe)]),
            tag("d", donor_text, &[("Alice Smith", Person), ("Paris", Gpe)]),
        ];
        let pool = DonorPool::new(vec![&src, &donor], &tags, 20);
        let out = pool.gen_n3(&src, &tags[0], "ctx", &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(
            out.instance.caption,
            "John Garrison waiting in queue for filing tax returns in Berlin, April 2015"
        );
        assert_eq!(out.instance.donor_record_id.as_deref(), Some("d"));
    }

    #[test]
    fn n3_requires_equal_signature_and_excludes_self() {
        let src = rec("s", "Ann Lee and Bo Park at lunch");
        let other = rec("o", "Cy Dow sings tonight");
        let tags = vec![
            tag("s", &src.caption, &[("Ann Lee", Person), ("Bo Park", Person)]),
            tag("o", &other.caption, &[("Cy Dow", Person)]),
        ];
        let pool = DonorPool::new(vec![&src, &other], &tags, 20);
        let r = pool.gen_n3(&src, &tags[0], "", &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(SkipReason::NoMatch));

        let twin = rec("t", "ann lee and bo park at LUNCH");
        let tags = vec![
            tag("s", &src.caption, &[("Ann Lee", Person), ("Bo Park", Person)]),
            tag("t", &twin.caption, &[("ann lee", Person), ("bo park", Person)]),
        ];
        let pool = DonorPool::new(vec![&src, &twin], &tags, 20);
        let r = pool.gen_n3(&src, &tags[0], "", &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(SkipReason::NoMatch));
    }

    #[test]
    fn substitution_recomputes_offsets() {
        let text = "Al met Bartholomew in Rome";
        let a = Entity::new("Al", Person, 0, 2);
        let b = Entity::new("Bartholomew", Person, 7, 18);
        let c = Entity::new("Rome", Gpe, 22, 26);
        let (out, ents) = substitute_spans(text, &[(&a, "Alexandra"), (&b, "Bo"), (&c, "Zürich")]);
        assert_eq!(out, "Alexandra met Bo in Zürich");
        assert!(ents.iter().all(|e| e.is_sound_in(&out)));
    }

    #[test]
    fn ratio_spreads_negatives() {
        let mut cfg = MixConfig::new(1);
        assert_eq!((0..10).map(|i| cfg.negatives_for(i)).sum::<usize>(), 10);
        cfg.ratio_pos_to_neg = (2, 3);
        let total: usize = (0..10).map(|i| cfg.negatives_for(i)).sum();
        assert_eq!(total, 15);
        cfg.ratio_pos_to_neg = (0, 1);
        assert!(cfg.validate().is_err());
        assert_eq!(parse_ratio("2:3").unwrap(), (2, 3));
        assert!(parse_ratio("2-3").is_err());
    }
}
