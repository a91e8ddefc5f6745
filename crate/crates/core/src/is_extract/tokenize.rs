//! Sentence token counting.

use std::sync::LazyLock;

use regex::Regex;

/// Counts subword tokens for the segment budget.
pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

static WORD_OR_PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\w+|[^\w\s]").unwrap());

/// Word and punctuation tokens scaled by a fixed subword ratio, rounded up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordpieceEstimate {
    pub ratio: f64,
}

impl Default for WordpieceEstimate {
    fn default() -> Self {
        Self { ratio: 1.3 }
    }
}

impl WordpieceEstimate {
    pub fn raw_tokens(text: &str) -> usize {
        WORD_OR_PUNCT.find_iter(text).count()
    }
}

impl Tokenizer for WordpieceEstimate {
    fn count(&self, text: &str) -> usize {
        let n = Self::raw_tokens(text);
        // subtract a hair so exact products such as 10 * 1.3 do not round up twice
        ((n as f64 * self.ratio) - 1e-9).ceil().max(0.0) as usize
    }
}

pub fn default_tokenizer() -> &'static dyn Tokenizer {
    static DEFAULT: WordpieceEstimate = WordpieceEstimate { ratio: 1.3 };
    &DEFAULT
}
