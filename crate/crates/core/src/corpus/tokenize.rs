use std::ops::Range;

/// Characters split off the edges of whitespace-delimited chunks.
pub const PEELED_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', '(', ')', '[', ']'];

/// Tokens and their half-open offsets, counted in `char`s (Unicode scalar
/// values) of the original text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tokenized {
    pub tokens: Vec<String>,
    pub offsets: Vec<Range<usize>>,
}

impl Tokenized {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_peeled(c: char) -> bool {
    PEELED_PUNCTUATION.contains(&c)
}

/// Whitespace tokenizer that peels leading and trailing punctuation into
/// single-character tokens. Interior punctuation ("U.S.", "don't") stays
/// attached.
pub fn tokenize(text: &str) -> Tokenized {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Tokenized::default();
    let mut push = |range: Range<usize>| {
        out.tokens.push(chars[range.clone()].iter().collect());
        out.offsets.push(range);
    };

    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let end = i;

        let mut left = start;
        while left < end && is_peeled(chars[left]) {
            push(left..left + 1);
            left += 1;
        }
        let mut right = end;
        while right > left && is_peeled(chars[right - 1]) {
            right -= 1;
        }
        if left < right {
            push(left..right);
        }
        for k in right..end {
            push(k..k + 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<String> {
        tokenize(text).tokens
    }

    #[test]
    fn peels_trailing_period() {
        assert_eq!(toks("it continued."), ["it", "continued", "."]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(tokenize(""), Tokenized::default());
        assert_eq!(tokenize("  \n\t"), Tokenized::default());
    }

    #[test]
    fn offsets_count_chars() {
        let t = tokenize("due to rain");
        assert_eq!(t.tokens, ["due", "to", "rain"]);
        assert_eq!(t.offsets, vec![0..3, 4..6, 7..11]);
    }

    #[test]
    fn peels_both_sides_keeps_interior() {
        assert_eq!(toks("(\"don't\")"), ["(", "\"", "don't", "\"", ")"]);
        assert_eq!(toks("U.S. rates."), ["U.S", ".", "rates", "."]);
        assert_eq!(toks("..."), [".", ".", "."]);
    }

    #[test]
    fn non_ascii_offsets() {
        let t = tokenize("été, naïve");
        assert_eq!(t.tokens, ["été", ",", "naïve"]);
        assert_eq!(t.offsets, vec![0..3, 3..4, 5..10]);
    }

    proptest! {
        #[test]
        fn offsets_slice_back_to_tokens(text in "[ a-zé.,;:!?\"'()\\[\\]\t]{0,40}") {
            let chars: Vec<char> = text.chars().collect();
            let t = tokenize(&text);
            prop_assert_eq!(t.tokens.len(), t.offsets.len());
            let mut prev_end = 0;
            for (tok, range) in t.tokens.iter().zip(&t.offsets) {
                prop_assert_eq!(&chars[range.clone()].iter().collect::<String>(), tok);
                prop_assert!(range.start >= prev_end);
                // gaps between tokens are whitespace only
                prop_assert!(chars[prev_end..range.start].iter().all(|c| c.is_whitespace()));
                prev_end = range.end;
            }
            prop_assert!(chars[prev_end..].iter().all(|c| c.is_whitespace()));
        }
    }
}
