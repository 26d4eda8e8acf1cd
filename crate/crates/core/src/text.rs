//! Text normalization, character-offset slicing and metric tokenization.
//!
//! All offsets exposed by this crate are counted in Unicode scalar values
//! (Rust `char`s) over NFC-normalized text.

use unicode_normalization::UnicodeNormalization;

/// NFC-normalize a string.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Canonical form used for caption deduplication: NFC, lowercase, whitespace
/// runs collapsed to one space, trimmed.
pub fn normalize_caption(text: &str) -> String {
    let lowered = nfc(text).to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-insensitive comparison key for entity surfaces.
pub fn fold_surface(surface: &str) -> String {
    nfc(surface).to_lowercase()
}

/// Number of whitespace-separated tokens after normalization.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Number of chars in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte offset of the char at index `char_idx`; `char_idx == len` maps to the end.
pub fn byte_offset(text: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (byte, _) in text.char_indices() {
        if count == char_idx {
            return Some(byte);
        }
        count += 1;
    }
    (count == char_idx).then_some(text.len())
}

/// Slice `text` by half-open char offsets. Returns `None` when the span is
/// empty, inverted or out of range.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start >= end {
        return None;
    }
    let from = byte_offset(text, start)?;
    let to = byte_offset(text, end)?;
    Some(&text[from..to])
}

/// Replace the half-open char span with `replacement`.
pub fn replace_char_span(text: &str, start: usize, end: usize, replacement: &str) -> Option<String> {
    if start > end {
        return None;
    }
    let from = byte_offset(text, start)?;
    let to = byte_offset(text, end)?;
    let mut out = String::with_capacity(text.len() + replacement.len());
    out.push_str(&text[..from]);
    out.push_str(replacement);
    out.push_str(&text[to..]);
    Some(out)
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}' | '\u{00BF}' | '\u{00A1}'
        )
}

/// Tokenizer shared by every caption metric: NFC, lowercase, punctuation
/// split into standalone tokens, then whitespace split.
pub fn metric_tokens(text: &str) -> Vec<String> {
    let lowered = nfc(text).to_lowercase();
    let mut spaced = String::with_capacity(lowered.len() + 8);
    for c in lowered.chars() {
        if is_punct(c) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().map(str::to_owned).collect()
}
