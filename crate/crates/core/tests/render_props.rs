use std::sync::Arc;

use capforge_core::instruct::{Renderer, SubwordTokenizer, TemplateMode, TokenBudget, Tokenizer, WhitespaceTokenizer};
use proptest::prelude::*;

fn strip<'a>(prompt: &'a str, prefix: &str, suffix: &str) -> &'a str {
    prompt
        .strip_prefix(prefix)
        .and_then(|p| p.strip_suffix(suffix))
        .unwrap_or_else(|| panic!("prompt {prompt:?} does not fit the template"))
}

fn first_tokens(text: &str, k: usize) -> Vec<&str> {
    text.split_whitespace().take(k).collect()
}

fn adversarial_text() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("word".to_owned()),
        Just("Zoë".to_owned()),
        Just("東京".to_owned()),
        Just("\t".to_owned()),
        Just("\n\n".to_owned()),
        Just("\u{a0}".to_owned()),
        Just("?".to_owned()),
        Just("and the text".to_owned()),
        "[a-z]{1,12}",
    ];
    (prop::collection::vec(piece, 0..200), 0usize..100_000).prop_map(|(pieces, pad)| {
        let mut s = pieces.join(" ");
        if pad > 50_000 {
            s.push(' ');
            s.push_str(&"x ".repeat(pad));
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn whitespace_budgets_keep_the_leading_tokens(context in adversarial_text(), caption in adversarial_text()) {
        let r = Renderer::default();
        let tok = WhitespaceTokenizer;

        let prompt = r.caption_prompt(&context, None);
        let ctx = strip(&prompt, "What does the image describe based on the text  ", " ?");
        prop_assert!(tok.count(ctx) <= 512);
        prop_assert_eq!(first_tokens(ctx, usize::MAX), first_tokens(&context, 512));

        let prompt = r.entailment_prompt(&caption, &context);
        let body = strip(&prompt, "Is the text ", " ?");
        let clipped_caption = r.tokenizer().clip(&caption, 30);
        prop_assert_eq!(first_tokens(&clipped_caption, usize::MAX), first_tokens(&caption, 30));
        let clipped_context = r.tokenizer().clip(&context, 512);
        prop_assert_eq!(body, format!("{clipped_caption} consistent with the image  and the text {clipped_context}"));

        let rec = r.caption_record("i", &context, &caption, None);
        prop_assert!(rec.target_tokens <= 30);
        prop_assert!(rec.prompt_tokens <= 512 + tok.count("What does the image describe based on the text ?"));
    }

    #[test]
    fn entity_segment_respects_its_budget(names in prop::collection::vec("[A-Z][a-z]{0,8}( [A-Z][a-z]{0,8}){0,3}", 0..200)) {
        let r = Renderer::default();
        let seg = r.entity_segment(&names);
        prop_assert!(WhitespaceTokenizer.count(&seg) <= 64);
        let joined = names.join(", ");
        prop_assert_eq!(first_tokens(&seg, usize::MAX), first_tokens(&joined, 64));
    }

    #[test]
    fn subword_budgets_hold(context in adversarial_text()) {
        let tok: Arc<dyn Tokenizer> = Arc::new(SubwordTokenizer::new(["wo", "rd", "the", "and", "te", "xt", "x"]));
        let r = Renderer::new(TokenBudget::default(), TemplateMode::Fidelity, tok.clone());
        let prompt = r.keywords_prompt(&context);
        let body = strip(&prompt, "What are the keywords in the article ", "?");
        prop_assert!(tok.count(body) <= 512);
        prop_assert!(context.trim_start().starts_with(body));
    }
}

#[test]
fn hundred_thousand_token_context_is_clipped() {
    let context = (0..100_000).map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ");
    let r = Renderer::default();
    let prompt = r.keywords_prompt(&context);
    let body = strip(&prompt, "What are the keywords in the article ", "?");
    assert_eq!(body.split_whitespace().count(), 512);
    assert!(body.ends_with("t511"));
}
