//! Code-point based text helpers.
//!
//! Every offset handled by this crate counts Unicode scalar values, never
//! bytes, so spans computed here can be sent to a browser unchanged.

use std::ops::Range;

/// A word token with its code-point range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Returns the substring covering code points `[start, end)`.
pub fn slice_chars(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '’' || c == '-'
}

/// Splits text into word tokens (letters, digits, inner apostrophes and hyphens).
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (i, c) in text.chars().enumerate() {
        if is_word_char(c) {
            if current.is_empty() {
                start = i;
            }
            current.push(c);
        } else if !current.is_empty() {
            push_token(&mut tokens, std::mem::take(&mut current), start);
        }
    }
    if !current.is_empty() {
        push_token(&mut tokens, current, start);
    }
    tokens
}

fn push_token(tokens: &mut Vec<Token>, raw: String, start: usize) {
    // strip leading/trailing apostrophes and hyphens ("'tis" stays, "--" goes)
    let chars: Vec<char> = raw.chars().collect();
    let lead = chars.iter().take_while(|c| !c.is_alphanumeric()).count();
    if lead == chars.len() {
        return;
    }
    let trail = chars.iter().rev().take_while(|c| !c.is_alphanumeric()).count();
    let text: String = chars[lead..chars.len() - trail].iter().collect();
    let s = start + lead;
    let e = start + chars.len() - trail;
    tokens.push(Token { text, start: s, end: e });
}

const ABBREVIATIONS: &[&str] = &["mr", "mrs", "ms", "dr", "st", "prof", "sr", "jr", "mt"];

/// Sentence ranges in code points. A sentence ends at `.`, `!` or `?`
/// (plus trailing quotes) followed by whitespace or end of text; common
/// honorific abbreviations do not end a sentence.
pub fn sentences(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '"' | '\'' | '”' | '’' | ')' | '.' | '!' | '?') {
                end += 1;
            }
            let boundary = end >= chars.len() || chars[end].is_whitespace();
            if boundary && !(c == '.' && ends_with_abbreviation(&chars[start..i])) {
                push_sentence(&chars, start, end, &mut out);
                start = end;
                i = end;
                continue;
            }
        }
        i += 1;
    }
    push_sentence(&chars, start, chars.len(), &mut out);
    out
}

fn ends_with_abbreviation(before: &[char]) -> bool {
    let word: String = before
        .iter()
        .rev()
        .take_while(|c| c.is_alphabetic())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    ABBREVIATIONS.contains(&word.to_lowercase().as_str())
}

fn push_sentence(chars: &[char], start: usize, end: usize, out: &mut Vec<Range<usize>>) {
    let mut s = start;
    let mut e = end;
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    if s < e {
        out.push(s..e);
    }
}

/// All case-insensitive, word-bounded occurrences of `needle` in `haystack`.
pub fn find_word_bounded(haystack: &[char], needle: &str) -> Vec<Range<usize>> {
    let needle: Vec<char> = needle.chars().flat_map(char::to_lowercase).collect();
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    let lowered: Vec<char> = haystack
        .iter()
        .map(|c| c.to_lowercase().next().unwrap_or(*c))
        .collect();
    let mut hits = Vec::new();
    let mut i = 0;
    while i + needle.len() <= lowered.len() {
        if lowered[i..i + needle.len()] == needle[..] {
            let end = i + needle.len();
            let left_ok = i == 0 || !haystack[i - 1].is_alphanumeric();
            let right_ok = end == haystack.len() || !haystack[end].is_alphanumeric();
            if left_ok && right_ok {
                hits.push(i..end);
                i = end;
                continue;
            }
        }
        i += 1;
    }
    hits
}

pub fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "said", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "upon", "very", "was", "we", "were", "what", "when", "where",
    "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours",
    "yourself", "yourselves", "one", "two", "went", "got", "also", "shall", "may", "might",
    "must", "let", "like", "yes", "oh",
];

pub fn is_stop_word(word: &str) -> bool {
    STOP_WORDS.contains(&word.to_lowercase().as_str())
}
