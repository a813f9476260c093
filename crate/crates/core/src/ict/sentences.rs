use std::ops::Range;

use crate::corpus::Token;

const TERMINALS: [&str; 3] = [".", "!", "?"];
const CLOSERS: [&str; 7] = ["\"", "'", ")", "]", "\u{201d}", "\u{2019}", "}"];

/// Lowercase words that, followed by a period, do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof", "rev", "gen", "col", "capt", "lt", "sgt", "mt", "ft", "vs",
    "etc", "no", "vol", "ch", "fig", "cf", "ie", "eg", "ave", "int", "ext",
];

fn is_terminal(t: &Token) -> bool {
    t.is_punct && TERMINALS.contains(&t.surface.as_str())
}

fn is_closer(t: &Token) -> bool {
    t.is_punct && CLOSERS.contains(&t.surface.as_str())
}

/// A period after an abbreviation or a single capital letter (an initial).
fn guarded(tokens: &[Token], i: usize) -> bool {
    if tokens[i].surface != "." || i == 0 {
        return false;
    }
    let prev = &tokens[i - 1];
    if prev.is_punct {
        return false;
    }
    let mut chars = prev.surface.chars();
    let single_cap = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase());
    single_cap || ABBREVIATIONS.contains(&prev.surface.to_lowercase().as_str())
}

/// Split a token sequence into sentences at `.`, `!` and `?`. Runs of
/// terminals stay together and closing quotes or brackets that follow are
/// attached to the sentence they close. Trailing tokens without a terminal
/// form a final sentence.
pub fn split_sentences(tokens: &[Token]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < tokens.len() {
        if is_terminal(&tokens[i]) && !guarded(tokens, i) {
            let mut end = i + 1;
            while end < tokens.len() && is_terminal(&tokens[end]) {
                end += 1;
            }
            while end < tokens.len() && is_closer(&tokens[end]) {
                end += 1;
            }
            out.push(start..end);
            start = end;
            i = end;
        } else {
            i += 1;
        }
    }
    if start < tokens.len() {
        out.push(start..tokens.len());
    }
    out
}

/// Share of uppercase letters among the alphabetic characters; 0 when there are none.
pub fn uppercase_ratio(tokens: &[Token]) -> f64 {
    let (mut upper, mut alpha) = (0usize, 0usize);
    for c in tokens.iter().filter(|t| !t.is_punct).flat_map(|t| t.surface.chars()) {
        if c.is_alphabetic() {
            alpha += 1;
            if c.is_uppercase() {
                upper += 1;
            }
        }
    }
    if alpha == 0 {
        0.0
    } else {
        upper as f64 / alpha as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{join_tokens, tokenize};

    fn split(text: &str) -> Vec<String> {
        let toks = tokenize(text);
        split_sentences(&toks)
            .into_iter()
            .map(|r| join_tokens(&toks[r]))
            .collect()
    }

    #[test]
    fn basic_split() {
        assert_eq!(
            split("It rained. Then it stopped!"),
            ["It rained .", "Then it stopped !"]
        );
        assert_eq!(split("No terminal here"), ["No terminal here"]);
        assert!(split("").is_empty());
    }

    #[test]
    fn guards() {
        assert_eq!(
            split("Mr. Smith met J. Doe. Done."),
            ["Mr . Smith met J . Doe .", "Done ."]
        );
    }

    #[test]
    fn runs_and_closers() {
        assert_eq!(
            split("\"Really?!\" she asked... Yes."),
            ["\" Really ? ! \"", "she asked . . .", "Yes ."]
        );
    }

    #[test]
    fn caps_ratio() {
        assert_eq!(uppercase_ratio(&tokenize("SWITCH THE SCENARIO.")), 1.0);
        assert_eq!(uppercase_ratio(&tokenize("Ab")), 0.5);
        assert_eq!(uppercase_ratio(&tokenize("...")), 0.0);
    }
}
