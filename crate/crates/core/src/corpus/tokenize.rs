use std::collections::HashSet;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static BUNDLED_STOPWORDS: LazyLock<Arc<Stopwords>> =
    LazyLock::new(|| Arc::new(Stopwords::parse(include_str!("../../data/stopwords.txt"))));

static DEFAULT_TOKENIZER: LazyLock<Tokenizer> = LazyLock::new(Tokenizer::default);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub is_stopword: bool,
    pub is_punct: bool,
}

impl Token {
    /// Lowercased surface, the form used by every retrieval and metric computation.
    pub fn term(&self) -> String {
        self.surface.to_lowercase()
    }

    pub fn is_content(&self) -> bool {
        !self.is_punct && !self.is_stopword
    }
}

/// A lowercase stopword set. Entries starting with `#` and blank lines are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    pub fn bundled() -> Arc<Stopwords> {
        Arc::clone(&BUNDLED_STOPWORDS)
    }

    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stopwords { words }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, lowercase_word: &str) -> bool {
        self.words.contains(lowercase_word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Rule-based tokenizer: whitespace separates tokens, runs of alphanumeric
/// characters form words, and every other character becomes a one-character
/// punctuation token. Case is preserved.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: Arc<Stopwords>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            stopwords: Stopwords::bundled(),
        }
    }
}

impl Tokenizer {
    pub fn new(stopwords: Arc<Stopwords>) -> Self {
        Tokenizer { stopwords }
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut tokens = Vec::with_capacity(text.len() / 5);
        let mut word = String::new();
        for ch in text.chars() {
            if ch.is_alphanumeric() {
                word.push(ch);
                continue;
            }
            if !word.is_empty() {
                tokens.push(self.word_token(std::mem::take(&mut word)));
            }
            if !ch.is_whitespace() && !ch.is_control() {
                tokens.push(Token {
                    surface: ch.to_string(),
                    is_stopword: false,
                    is_punct: true,
                });
            }
        }
        if !word.is_empty() {
            tokens.push(self.word_token(word));
        }
        tokens
    }

    fn word_token(&self, surface: String) -> Token {
        let is_stopword = self.stopwords.contains(&surface.to_lowercase());
        Token {
            surface,
            is_stopword,
            is_punct: false,
        }
    }
}

/// Tokenize with the bundled stopword list.
pub fn tokenize(text: &str) -> Vec<Token> {
    DEFAULT_TOKENIZER.tokenize(text)
}

/// Space-joined surfaces; `tokenize(&join_tokens(&tokenize(x)))` is a fixed point.
pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.surface);
    }
    out
}

/// Lowercased non-punctuation terms, in order.
pub fn normalized_terms(tokens: &[Token]) -> Vec<String> {
    tokens.iter().filter(|t| !t.is_punct).map(Token::term).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t ").is_empty());
    }

    #[test]
    fn detaches_punctuation() {
        assert_eq!(surfaces("Hello, world!"), ["Hello", ",", "world", "!"]);
        assert_eq!(surfaces("O'Brien's"), ["O", "'", "Brien", "'", "s"]);
        assert_eq!(
            surfaces("well-known...yes"),
            ["well", "-", "known", ".", ".", ".", "yes"]
        );
    }

    #[test]
    fn flags() {
        let toks = tokenize("The whale, AND the ship");
        assert!(toks[0].is_stopword);
        assert!(!toks[1].is_stopword);
        assert!(toks[2].is_punct);
        assert!(toks[3].is_stopword, "case-insensitive stopword lookup");
        assert!(toks[5].is_content());
    }

    #[test]
    fn bundled_list_size() {
        let n = Stopwords::bundled().len();
        assert!((150..=190).contains(&n), "{n}");
    }

    #[test]
    fn custom_stopwords() {
        let tk = Tokenizer::new(Arc::new(Stopwords::parse("# comment\nwhale\n")));
        let toks = tk.tokenize("the whale");
        assert!(!toks[0].is_stopword);
        assert!(toks[1].is_stopword);
    }

    #[test]
    fn repeated_calls_are_byte_identical() {
        let para = "It was the best of times, it was the worst of times; it was the age of \
                    wisdom, it was the age of foolishness... \"Really?\" she asked. "
            .repeat(8);
        assert!(para.len() >= 1024);
        let a = serde_json::to_vec(&tokenize(&para)).unwrap();
        let b = serde_json::to_vec(&tokenize(&para)).unwrap();
        assert_eq!(a, b);
    }
}
