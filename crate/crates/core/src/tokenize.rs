//! Deterministic tokenization on Unicode word boundaries.
//!
//! Segments come from UAX #29 word boundaries. A segment that contains at
//! least one alphanumeric character is a token as-is (so `don't` and `3.14`
//! stay whole); any other non-whitespace segment is split into one token per
//! grapheme, which emits punctuation as single-character tokens. Case is
//! preserved.

use std::ops::Range;

use unicode_segmentation::UnicodeSegmentation;

/// Tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|r| text[r].to_string())
        .collect()
}

/// Byte ranges of every token in `text`, in order.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    for (start, seg) in text.split_word_bound_indices() {
        if seg.chars().all(char::is_whitespace) {
            continue;
        }
        if seg.chars().any(char::is_alphanumeric) {
            spans.push(start..start + seg.len());
            continue;
        }
        for (off, g) in seg.grapheme_indices(true) {
            if g.chars().all(char::is_whitespace) {
                continue;
            }
            spans.push(start + off..start + off + g.len());
        }
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn trailing_ellipsis_splits_into_periods() {
        assert_eq!(
            tokenize("I enjoy walking with my cute dog..."),
            ["I", "enjoy", "walking", "with", "my", "cute", "dog", ".", ".", "."]
        );
    }

    #[test]
    fn contraction_stays_whole() {
        assert_eq!(tokenize("don't stop"), ["don't", "stop"]);
    }

    #[test]
    fn punctuation_runs_are_single_chars() {
        assert_eq!(tokenize("wait?!--ok"), ["wait", "?", "!", "-", "-", "ok"]);
    }

    #[test]
    fn spans_slice_back_to_tokens() {
        let text = "Héllo, wörld (again) 3.14!";
        let toks = tokenize(text);
        let spans = token_spans(text);
        assert_eq!(toks.len(), spans.len());
        for (t, s) in toks.iter().zip(spans) {
            assert_eq!(&text[s], t);
        }
        assert_eq!(
            toks,
            ["Héllo", ",", "wörld", "(", "again", ")", "3.14", "!"]
        );
    }
}
