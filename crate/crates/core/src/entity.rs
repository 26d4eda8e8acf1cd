//! Named-entity spans, taggers and entity-signature indexes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use aho_corasick::{AhoCorasick, MatchKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{byte_offset, char_slice, fold_surface};

/// The six entity labels the pipeline keeps. Declared in name order so the
/// derived `Ord` matches the canonical signature encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Event,
    Fac,
    Gpe,
    Loc,
    Org,
    Person,
}

impl EntityType {
    pub const ALL: [EntityType; 6] = [
        EntityType::Event,
        EntityType::Fac,
        EntityType::Gpe,
        EntityType::Loc,
        EntityType::Org,
        EntityType::Person,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Event => "EVENT",
            EntityType::Fac => "FAC",
            EntityType::Gpe => "GPE",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
            EntityType::Person => "PERSON",
        }
    }

    /// `None` for any label outside the kept set (DATE, NORP, ...).
    pub fn parse(label: &str) -> Option<EntityType> {
        EntityType::ALL.into_iter().find(|t| t.as_str() == label.trim())
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntityType::parse(s).ok_or_else(|| Error::Config(format!("unsupported entity type {s:?}")))
    }
}

/// A typed span over a host text; offsets are half-open char indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub start: usize,
    pub end: usize,
}

impl Entity {
    pub fn new(surface: impl Into<String>, etype: EntityType, start: usize, end: usize) -> Self {
        Entity {
            surface: surface.into(),
            etype,
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// True when `text[start..end] == surface`.
    pub fn is_sound_in(&self, text: &str) -> bool {
        char_slice(text, self.start, self.end) == Some(self.surface.as_str())
    }

    fn overlaps(&self, other: &Entity) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Keep a non-overlapping subset: longer span first, then earlier start, then
/// smaller type name. The survivors are returned sorted by start.
pub fn resolve_overlaps(mut candidates: Vec<Entity>) -> Vec<Entity> {
    candidates.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then(a.start.cmp(&b.start))
            .then(a.etype.as_str().cmp(b.etype.as_str()))
    });
    let mut kept: Vec<Entity> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if c.is_empty() || kept.iter().any(|k| k.overlaps(&c)) {
            continue;
        }
        kept.push(c);
    }
    kept.sort_by_key(|e| e.start);
    kept
}

/// Multiset of entity types, encoded canonically as sorted `(type, count)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySignature(BTreeMap<EntityType, usize>);

impl EntitySignature {
    pub fn of<'a, I: IntoIterator<Item = &'a Entity>>(entities: I) -> Self {
        let mut counts = BTreeMap::new();
        for e in entities {
            *counts.entry(e.etype).or_insert(0) += 1;
        }
        EntitySignature(counts)
    }

    pub fn from_counts<I: IntoIterator<Item = (EntityType, usize)>>(counts: I) -> Self {
        EntitySignature(counts.into_iter().filter(|(_, n)| *n > 0).collect())
    }

    pub fn count(&self, etype: EntityType) -> usize {
        self.0.get(&etype).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityType, usize)> + '_ {
        self.0.iter().map(|(t, n)| (*t, *n))
    }
}

impl fmt::Display for EntitySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, n)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}:{n}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TaggedLine", into = "TaggedLine")]
pub struct TaggedCaption {
    pub record_id: String,
    entities: Vec<Entity>,
    signature: EntitySignature,
}

#[derive(Serialize, Deserialize)]
struct TaggedLine {
    record_id: String,
    entities: Vec<Entity>,
}

impl From<TaggedLine> for TaggedCaption {
    fn from(line: TaggedLine) -> Self {
        TaggedCaption::new(line.record_id, line.entities)
    }
}

impl From<TaggedCaption> for TaggedLine {
    fn from(t: TaggedCaption) -> Self {
        TaggedLine {
            record_id: t.record_id,
            entities: t.entities,
        }
    }
}

impl TaggedCaption {
    /// Entities are sorted by start offset; the signature is derived.
    pub fn new(record_id: impl Into<String>, mut entities: Vec<Entity>) -> Self {
        entities.sort_by_key(|e| (e.start, e.end));
        let signature = EntitySignature::of(&entities);
        TaggedCaption {
            record_id: record_id.into(),
            entities,
            signature,
        }
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn signature(&self) -> &EntitySignature {
        &self.signature
    }
}

/// Group record ids by signature. Every id lands under exactly one key; id
/// lists are sorted.
pub fn signature_index<'a, I>(tagged: I) -> BTreeMap<EntitySignature, Vec<String>>
where
    I: IntoIterator<Item = &'a TaggedCaption>,
{
    let mut index: BTreeMap<EntitySignature, Vec<String>> = BTreeMap::new();
    for t in tagged {
        index.entry(t.signature.clone()).or_default().push(t.record_id.clone());
    }
    for ids in index.values_mut() {
        ids.sort();
        ids.dedup();
    }
    index
}

/// Anything that can produce entities for a text identified by `id`.
pub trait EntityTagger: Send + Sync {
    fn tag(&self, id: &str, text: &str) -> Vec<Entity>;
}

/// Deterministic lexicon tagger: exact, case-sensitive surface matches at
/// word boundaries, resolved with [`resolve_overlaps`].
#[derive(Debug, Clone)]
pub struct Gazetteer {
    terms: Vec<(String, EntityType)>,
    matcher: Option<AhoCorasick>,
    /// Lines dropped because their label is outside the kept set.
    pub discarded: usize,
}

impl Gazetteer {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = (S, EntityType)>,
        S: Into<String>,
    {
        let mut terms: Vec<(String, EntityType)> = terms
            .into_iter()
            .map(|(s, t)| (s.into().trim().to_owned(), t))
            .filter(|(s, _)| !s.is_empty())
            .collect();
        terms.sort();
        terms.dedup();
        let matcher = (!terms.is_empty()).then(|| {
            AhoCorasick::builder()
                .match_kind(MatchKind::Standard)
                .build(terms.iter().map(|(s, _)| s.as_str()))
                .expect("gazetteer automaton")
        });
        Gazetteer {
            terms,
            matcher,
            discarded: 0,
        }
    }

    /// Parse `surface<TAB>TYPE` lines. Blank lines and `#` comments are ignored.
    pub fn from_reader<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut discarded = 0;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::malformed(source_name, idx + 1, e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, label) = line
                .split_once('\t')
                .ok_or_else(|| Error::malformed(source_name, idx + 1, "expected surface<TAB>TYPE"))?;
            if surface.trim().is_empty() {
                return Err(Error::malformed(source_name, idx + 1, "empty surface"));
            }
            match EntityType::parse(label) {
                Some(t) => terms.push((surface.to_owned(), t)),
                None => discarded += 1,
            }
        }
        let mut g = Gazetteer::new(terms);
        g.discarded = discarded;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Gazetteer::from_reader(BufReader::new(file), &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn tag_text(&self, text: &str) -> Vec<Entity> {
        let Some(matcher) = &self.matcher else {
            return Vec::new();
        };
        // Map byte offsets to char offsets once.
        let mut char_at = vec![0usize; text.len() + 1];
        let mut n = 0;
        for (b, c) in text.char_indices() {
            for slot in &mut char_at[b..b + c.len_utf8()] {
                *slot = n;
            }
            n += 1;
        }
        char_at[text.len()] = n;

        let mut candidates = Vec::new();
        for m in matcher.find_overlapping_iter(text) {
            let (start, end) = (m.start(), m.end());
            let before = text[..start].chars().next_back();
            let after = text[end..].chars().next();
            if before.is_some_and(char::is_alphanumeric) || after.is_some_and(char::is_alphanumeric) {
                continue;
            }
            let (surface, etype) = &self.terms[m.pattern().as_usize()];
            candidates.push(Entity::new(surface.clone(), *etype, char_at[start], char_at[end]));
        }
        resolve_overlaps(candidates)
    }
}

impl EntityTagger for Gazetteer {
    fn tag(&self, _id: &str, text: &str) -> Vec<Entity> {
        self.tag_text(text)
    }
}

/// One line of an external annotations file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExternalAnnotation {
    pub record_id: String,
    pub surface: String,
    #[serde(rename = "type")]
    pub label: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalTagReport {
    pub accepted: usize,
    pub filtered_type: usize,
    pub unknown_record: usize,
    pub span_mismatch: usize,
    pub overlapping: usize,
}

/// Entities supplied by a third-party tagger, validated against host texts.
#[derive(Debug, Clone, Default)]
pub struct ExternalTags {
    pub by_record: BTreeMap<String, Vec<Entity>>,
    pub report: ExternalTagReport,
}

impl EntityTagger for ExternalTags {
    fn tag(&self, id: &str, _text: &str) -> Vec<Entity> {
        self.by_record.get(id).cloned().unwrap_or_default()
    }
}

/// Read external annotations, keeping only the six labels and spans that
/// reproduce their surface in `texts`. Malformed lines are hard errors.
pub fn ingest_external_tags<R: BufRead>(
    reader: R,
    source_name: &str,
    texts: &HashMap<String, String>,
) -> Result<ExternalTags> {
    let mut out = ExternalTags::default();
    let mut raw: BTreeMap<String, Vec<Entity>> = BTreeMap::new();
    for ann in crate::jsonl::read_records::<ExternalAnnotation, _>(reader, source_name)? {
        let Some(etype) = EntityType::parse(&ann.label) else {
            out.report.filtered_type += 1;
            continue;
        };
        let Some(text) = texts.get(&ann.record_id) else {
            out.report.unknown_record += 1;
            continue;
        };
        let entity = Entity::new(ann.surface, etype, ann.start, ann.end);
        if !entity.is_sound_in(text) {
            out.report.span_mismatch += 1;
            continue;
        }
        raw.entry(ann.record_id).or_default().push(entity);
    }
    for (id, entities) in raw {
        let n = entities.len();
        let kept = resolve_overlaps(entities);
        out.report.overlapping += n - kept.len();
        out.report.accepted += kept.len();
        out.by_record.insert(id, kept);
    }
    Ok(out)
}

/// Byte range of an entity inside `text`.
pub(crate) fn byte_span(text: &str, e: &Entity) -> (usize, usize) {
    let s = byte_offset(text, e.start).expect("sound span");
    let t = byte_offset(text, e.end).expect("sound span");
    (s, t)
}

/// Case-insensitive comparison key of an entity's surface.
pub fn surface_key(e: &Entity) -> String {
    fold_surface(&e.surface)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaz(terms: &[(&str, EntityType)]) -> Gazetteer {
        Gazetteer::new(terms.iter().map(|(s, t)| (*s, *t)))
    }

    #[test]
    fn tags_the_example_caption() {
        let g = gaz(&[("John Garrison", EntityType::Person), ("Berlin", EntityType::Gpe)]);
        let text = "John Garrison performing in Berlin, April 2015";
        let ents = g.tag_text(text);
        assert_eq!(
            ents,
            vec![
                Entity::new("John Garrison", EntityType::Person, 0, 13),
                Entity::new("Berlin", EntityType::Gpe, 28, 34),
            ]
        );
        assert!(ents.iter().all(|e| e.is_sound_in(text)));
    }

    #[test]
    fn no_hits_is_empty() {
        let g = gaz(&[("Paris", EntityType::Gpe)]);
        assert!(g.tag_text("nothing to see").is_empty());
        assert!(gaz(&[]).tag_text("Paris").is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let g = gaz(&[("New York", EntityType::Gpe), ("York", EntityType::Gpe)]);
        let ents = g.tag_text("Snow in New York today");
        assert_eq!(ents, vec![Entity::new("New York", EntityType::Gpe, 8, 16)]);
    }

    #[test]
    fn ties_break_on_start_then_type_name() {
        let g = gaz(&[("ab cd", EntityType::Person), ("cd ef", EntityType::Org)]);
        let ents = g.tag_text("ab cd ef");
        assert_eq!(ents, vec![Entity::new("ab cd", EntityType::Person, 0, 5)]);

        let g = gaz(&[("Jordan", EntityType::Person), ("Jordan", EntityType::Gpe)]);
        assert_eq!(g.tag_text("Jordan")[0].etype, EntityType::Gpe);
    }

    #[test]
    fn word_boundaries_are_required() {
        let g = gaz(&[("York", EntityType::Gpe)]);
        assert!(g.tag_text("Yorkshire").is_empty());
        assert_eq!(g.tag_text("(York)").len(), 1);
    }

    #[test]
    fn multibyte_offsets_are_chars() {
        let g = gaz(&[("Köln", EntityType::Gpe)]);
        let text = "Zoë in Köln";
        let ents = g.tag_text(text);
        assert_eq!(ents[0].start, 7);
        assert_eq!(ents[0].end, 11);
        assert!(ents[0].is_sound_in(text));
    }

    #[test]
    fn gazetteer_file_drops_unknown_labels() {
        let src = "Berlin\tGPE\nMonday\tDATE\n\n# comment\nACME\tORG\n";
        let g = Gazetteer::from_reader(src.as_bytes(), "gaz").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.discarded, 1);
        assert!(Gazetteer::from_reader("no tab here\n".as_bytes(), "gaz").is_err());
    }

    #[test]
    fn external_tags_are_validated() {
        let texts: HashMap<String, String> = [("r1".to_string(), "John Garrison in Berlin".to_string())].into();
        let lines = [
            r#"{"record_id":"r1","surface":"John","type":"PERSON","start":0,"end":4}"#,
            r#"{"record_id":"r1","surface":"Mark","type":"PERSON","start":0,"end":4}"#,
            r#"{"record_id":"r1","surface":"2015","type":"DATE","start":0,"end":4}"#,
            r#"{"record_id":"r7","surface":"John","type":"PERSON","start":0,"end":4}"#,
        ]
        .join("\n");
        let tags = ingest_external_tags(lines.as_bytes(), "ext", &texts).unwrap();
        assert_eq!(tags.by_record["r1"], vec![Entity::new("John", EntityType::Person, 0, 4)]);
        assert_eq!(tags.report.filtered_type, 1);
        assert_eq!(tags.report.span_mismatch, 1);
        assert_eq!(tags.report.unknown_record, 1);
        assert_eq!(tags.report.accepted, 1);

        let err = ingest_external_tags("{\"record_id\":".as_bytes(), "ext", &texts).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }

    #[test]
    fn signature_grouping() {
        let p = |s: usize| Entity::new("x", EntityType::Person, s, s + 1);
        let tagged = vec![
            TaggedCaption::new("c", vec![p(0), p(2)]),
            TaggedCaption::new("a", vec![p(0)]),
            TaggedCaption::new("b", vec![p(0), p(4)]),
            TaggedCaption::new("d", vec![]),
        ];
        let index = signature_index(&tagged);
        assert_eq!(index.len(), 3);
        let two = EntitySignature::from_counts([(EntityType::Person, 2)]);
        assert_eq!(index[&two], vec!["b", "c"]);
        assert_eq!(index[&EntitySignature::default()], vec!["d"]);
        assert_eq!(two.to_string(), "{PERSON:2}");
    }

    #[test]
    fn signature_ignores_order() {
        let a = Entity::new("x", EntityType::Person, 0, 1);
        let b = Entity::new("y", EntityType::Gpe, 2, 3);
        assert_eq!(EntitySignature::of([&a, &b]), EntitySignature::of([&b, &a]));
        assert_eq!(EntitySignature::of([&a, &b]).to_string(), "{GPE:1, PERSON:1}");
    }
}
