//! Minimal segmentation of strings into letter runs, digit runs and single
//! "other" characters.
//!
//! Two neighbouring tokens never both touch letters, and never both touch
//! digits, at their shared boundary. Every other boundary is a split point,
//! so the segmentation is the finest one satisfying that rule: maximal
//! letter runs, maximal digit runs, and everything else one character at a
//! time.

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

/// Character class used by the adjacency rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    LetterRun,
    DigitRun,
    Other,
}

/// `Lu | Ll | Lt | Lm | Lo`
pub fn is_letter(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::UppercaseLetter
            | GeneralCategory::LowercaseLetter
            | GeneralCategory::TitlecaseLetter
            | GeneralCategory::ModifierLetter
            | GeneralCategory::OtherLetter
    )
}

/// `Nd`
pub fn is_digit(c: char) -> bool {
    get_general_category(c) == GeneralCategory::DecimalNumber
}

pub fn classify(c: char) -> TokenKind {
    if is_letter(c) {
        TokenKind::LetterRun
    } else if is_digit(c) {
        TokenKind::DigitRun
    } else {
        TokenKind::Other
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Offset of the first character, in Unicode scalar values.
    pub char_offset: usize,
}

impl Token {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn char_end(&self) -> usize {
        self.char_offset + self.char_len()
    }
}

/// A source string together with its minimal segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    source: String,
    tokens: Vec<Token>,
}

impl TokenizedText {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Concatenated text of tokens `range`.
    pub fn slice_text(&self, range: std::ops::Range<usize>) -> String {
        self.tokens[range].iter().map(|t| t.text.as_str()).collect()
    }

    /// Length of the source in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.tokens.last().map_or(0, Token::char_end)
    }
}

/// Segments `source` into its unique minimal token sequence.
pub fn segment(source: &str) -> TokenizedText {
    let mut tokens: Vec<Token> = Vec::new();
    for (chars_seen, c) in source.chars().enumerate() {
        let kind = classify(c);
        match tokens.last_mut() {
            Some(last) if kind != TokenKind::Other && last.kind == kind => last.text.push(c),
            _ => tokens.push(Token {
                text: c.to_string(),
                kind,
                char_offset: chars_seen,
            }),
        }
    }
    TokenizedText {
        source: source.to_owned(),
        tokens,
    }
}
