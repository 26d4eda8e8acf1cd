//! Seq2seq instruction prompts for captioning, entailment and keyword
//! generation, with per-segment token budgets.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::negative::{EntailmentInstance, Label};

/// Separator between entity names in the augmented captioning prompt.
pub const ENTITY_SEPARATOR: &str = ", ";
/// Separator between keywords in the keyword-generation target.
pub const KEYWORD_SEPARATOR: &str = " , ";

/// Token counting and prefix clipping. `count(&clip(t, k)) <= k` must hold.
pub trait Tokenizer: Send + Sync + fmt::Debug {
    fn count(&self, text: &str) -> usize;

    /// Keep the first `max_tokens` tokens of `text`.
    fn clip(&self, text: &str, max_tokens: usize) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn clip(&self, text: &str, max_tokens: usize) -> String {
        if max_tokens == 0 {
            return String::new();
        }
        match text.split_whitespace().nth(max_tokens - 1) {
            Some(last) => {
                let end = last.as_ptr() as usize - text.as_ptr() as usize + last.len();
                text[..end].trim().to_owned()
            }
            None => text.trim().to_owned(),
        }
    }
}

/// Greedy longest-match subword tokenizer over a fixed piece vocabulary.
/// Characters not covered by any piece become single-char tokens.
/// Clipping stops at a word boundary, so a clipped text never splits a word.
#[derive(Debug, Clone, Default)]
pub struct SubwordTokenizer {
    pieces: HashSet<String>,
    longest: usize,
}

impl SubwordTokenizer {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(pieces: I) -> Self {
        let pieces: HashSet<String> = pieces.into_iter().map(Into::into).filter(|p: &String| !p.is_empty()).collect();
        let longest = pieces.iter().map(|p| p.chars().count()).max().unwrap_or(1);
        SubwordTokenizer { pieces, longest }
    }

    /// One piece per line.
    pub fn from_vocab(text: &str) -> Self {
        SubwordTokenizer::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn word_pieces(&self, word: &str) -> usize {
        let chars: Vec<char> = word.chars().collect();
        let mut i = 0;
        let mut n = 0;
        while i < chars.len() {
            let mut step = 1;
            for len in (2..=self.longest.min(chars.len() - i)).rev() {
                let piece: String = chars[i..i + len].iter().collect();
                if self.pieces.contains(&piece) {
                    step = len;
                    break;
                }
            }
            i += step;
            n += 1;
        }
        n
    }
}

impl Tokenizer for SubwordTokenizer {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().map(|w| self.word_pieces(w)).sum()
    }

    fn clip(&self, text: &str, max_tokens: usize) -> String {
        let mut used = 0;
        let mut end = 0;
        for word in text.split_whitespace() {
            let n = self.word_pieces(word);
            if used + n > max_tokens {
                break;
            }
            used += n;
            end = word.as_ptr() as usize - text.as_ptr() as usize + word.len();
        }
        text[..end].trim().to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub context_max: usize,
    pub caption_max: usize,
    pub entity_max: usize,
}

impl Default for TokenBudget {
    fn default() -> Self {
        TokenBudget {
            context_max: 512,
            caption_max: 30,
            entity_max: 64,
        }
    }
}

impl TokenBudget {
    pub fn validate(&self) -> Result<()> {
        if self.context_max == 0 || self.caption_max == 0 || self.entity_max == 0 {
            return Err(Error::Config(format!("token budgets must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// `Fidelity` keeps the original template bytes, including the irregular
/// double spaces and lowercase opening of the entity variant. `Normalized`
/// collapses repeated spaces and capitalizes the first letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateMode {
    #[default]
    Fidelity,
    Normalized,
}

impl FromStr for TemplateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fidelity" => Ok(TemplateMode::Fidelity),
            "normalized" => Ok(TemplateMode::Normalized),
            _ => Err(Error::Config(format!("unknown template mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Caption,
    Entailment,
    Keywords,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "caption" => Ok(Task::Caption),
            "entailment" => Ok(Task::Entailment),
            "keywords" => Ok(Task::Keywords),
            _ => Err(Error::Config(format!("unknown task {s:?}"))),
        }
    }
}

/// A template is a list of literal pieces with one slot between each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template(pub &'static [&'static str]);

pub const CAPTION_TEMPLATE: Template = Template(&["What does the image describe based on the text  ", " ?"]);
pub const CAPTION_WITH_NAMES_TEMPLATE: Template =
    Template(&["what does the image describe about the names ", " based on the text ", "?"]);
pub const ENTAILMENT_TEMPLATE: Template = Template(&["Is the text ", " consistent with the image  and the text ", " ?"]);
pub const KEYWORDS_TEMPLATE: Template = Template(&["What are the keywords in the article ", "?"]);

impl Template {
    pub fn slots(&self) -> usize {
        self.0.len() - 1
    }

    /// Literal text with all slots emptied.
    pub fn skeleton(&self, mode: TemplateMode) -> String {
        self.pieces(mode).concat()
    }

    pub fn pieces(&self, mode: TemplateMode) -> Vec<String> {
        match mode {
            TemplateMode::Fidelity => self.0.iter().map(|p| (*p).to_owned()).collect(),
            TemplateMode::Normalized => self
                .0
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut piece = collapse_spaces(p);
                    if i == 0 {
                        piece = capitalize(&piece);
                    }
                    piece
                })
                .collect(),
        }
    }

    pub fn fill(&self, mode: TemplateMode, values: &[&str]) -> String {
        assert_eq!(values.len(), self.slots(), "template slot count");
        let pieces = self.pieces(mode);
        let mut out = String::new();
        for (i, piece) in pieces.iter().enumerate() {
            out.push_str(piece);
            if let Some(v) = values.get(i) {
                out.push_str(v);
            }
        }
        out
    }
}

fn collapse_spaces(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev_space = false;
    for c in s.chars() {
        if c == ' ' && prev_space {
            continue;
        }
        prev_space = c == ' ';
        out.push(c);
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub task: Task,
    pub prompt: String,
    pub target: String,
    pub prompt_tokens: usize,
    pub target_tokens: usize,
    pub instance_id: String,
}

#[derive(Debug, Clone)]
pub struct Renderer {
    pub budget: TokenBudget,
    pub mode: TemplateMode,
    tokenizer: Arc<dyn Tokenizer>,
}

impl Default for Renderer {
    fn default() -> Self {
        Renderer::new(TokenBudget::default(), TemplateMode::Fidelity, Arc::new(WhitespaceTokenizer))
    }
}

impl Renderer {
    pub fn new(budget: TokenBudget, mode: TemplateMode, tokenizer: Arc<dyn Tokenizer>) -> Self {
        Renderer { budget, mode, tokenizer }
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        self.tokenizer.as_ref()
    }

    fn clip(&self, text: &str, max: usize) -> String {
        self.tokenizer.clip(text, max)
    }

    /// Entity names joined with [`ENTITY_SEPARATOR`] and clipped to the entity budget.
    pub fn entity_segment(&self, entities: &[String]) -> String {
        self.clip(&entities.join(ENTITY_SEPARATOR), self.budget.entity_max)
    }

    /// Captioning prompt; with `entities`, the names-augmented variant.
    pub fn caption_prompt(&self, context: &str, entities: Option<&[String]>) -> String {
        let context = self.clip(context, self.budget.context_max);
        match entities {
            None => CAPTION_TEMPLATE.fill(self.mode, &[&context]),
            Some(names) => {
                let names = self.entity_segment(names);
                CAPTION_WITH_NAMES_TEMPLATE.fill(self.mode, &[&names, &context])
            }
        }
    }

    pub fn entailment_prompt(&self, caption: &str, context: &str) -> String {
        let caption = self.clip(caption, self.budget.caption_max);
        let context = self.clip(context, self.budget.context_max);
        ENTAILMENT_TEMPLATE.fill(self.mode, &[&caption, &context])
    }

    pub fn keywords_prompt(&self, article: &str) -> String {
        let article = self.clip(article, self.budget.context_max);
        KEYWORDS_TEMPLATE.fill(self.mode, &[&article])
    }

    fn record(&self, task: Task, instance_id: &str, prompt: String, target: String) -> InstructionRecord {
        InstructionRecord {
            task,
            prompt_tokens: self.tokenizer.count(&prompt),
            target_tokens: self.tokenizer.count(&target),
            prompt,
            target,
            instance_id: instance_id.to_owned(),
        }
    }

    /// Captioning record; the target caption is clipped to the caption budget.
    pub fn caption_record(
        &self,
        instance_id: &str,
        context: &str,
        caption: &str,
        entities: Option<&[String]>,
    ) -> InstructionRecord {
        let prompt = self.caption_prompt(context, entities);
        let target = self.clip(caption, self.budget.caption_max);
        self.record(Task::Caption, instance_id, prompt, target)
    }

    pub fn entailment_record(&self, instance: &EntailmentInstance) -> InstructionRecord {
        let prompt = self.entailment_prompt(&instance.caption, &instance.context);
        let target = match instance.label {
            Label::Entails => "Yes",
            Label::NotEntails => "No",
        };
        self.record(Task::Entailment, &instance.instance_id, prompt, target.to_owned())
    }

    pub fn keywords_record(&self, instance_id: &str, article: &str, gold: &[String]) -> Result<InstructionRecord> {
        if gold.is_empty() {
            return Err(Error::EmptyGold(instance_id.to_owned()));
        }
        let prompt = self.keywords_prompt(article);
        Ok(self.record(Task::Keywords, instance_id, prompt, gold.join(KEYWORD_SEPARATOR)))
    }
}
