//! Deterministic text normalization: markup stripping, tokenization,
//! subtokenization, sentence splitting, description cleaning, and rendering
//! of model input sequences.
//!
//! Every function here is a pure function of its inputs and configuration,
//! and downstream metrics depend on the exact behavior, so the rules are
//! frozen and spelled out on each function.

pub mod stopwords;

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::corpus::{Example, ValidationError};

/// Marker inserted before the title in rendered input sequences.
pub const TITLE_START: &str = "<TITLE_START>";
/// Marker inserted before each utterance in rendered input sequences.
pub const UTTERANCE_START: &str = "<UTTERANCE_START>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("step {upto} out of range [1, {max}]")]
    StepOutOfRange { upto: usize, max: usize },
}

/// Tokenizer behavior knobs. The defaults are the frozen corpus settings;
/// `lowercase = false` exists for debugging only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub keep_inline_code: bool,
    terminators: BTreeSet<char>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            keep_inline_code: true,
            terminators: ['.', '!', '?'].into_iter().collect(),
        }
    }
}

impl TokenizerConfig {
    pub fn new(
        lowercase: bool,
        keep_inline_code: bool,
        terminators: BTreeSet<char>,
    ) -> Result<Self, ValidationError> {
        if terminators.is_empty() {
            return Err(ValidationError::new("sentence_terminators non-empty"));
        }
        Ok(TokenizerConfig { lowercase, keep_inline_code, terminators })
    }

    pub fn terminators(&self) -> &BTreeSet<char> {
        &self.terminators
    }
}

static FENCED_BLOCK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```.*?```").unwrap());
static UNMATCHED_FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```.*$").unwrap());
static INLINE_CODE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"`([^`\n]*)`").unwrap());
static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z][A-Za-z0-9+.-]*://\S+").unwrap());
static MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"((?m)^|[^A-Za-z0-9_])@[A-Za-z0-9][A-Za-z0-9-]*").unwrap());

/// Strips discussion markup, keeping only prose.
///
/// Frozen rules, applied in order:
/// 1. fenced code blocks (``` ... ```) are removed whole; an unmatched
///    opening fence removes everything to the end of the text;
/// 2. code-indented lines (a tab or four-plus spaces of indent) are removed;
/// 3. inline code spans lose their backticks but keep their content (or are
///    removed whole when `keep_inline_code` is off); stray backticks vanish;
/// 4. URLs (`scheme://...`) are removed up to the next whitespace;
/// 5. `@username` mentions are removed (but not email-like `a@b`);
/// 6. runs of spaces and tabs collapse to one space, lines are trimmed, and
///    blank lines are dropped; remaining newlines are preserved.
///
/// Idempotent: stripping stripped text changes nothing.
pub fn strip_markup(text: &str) -> String {
    strip_markup_cfg(text, &TokenizerConfig::default())
}

/// [`strip_markup`] with explicit configuration (`keep_inline_code`).
pub fn strip_markup_cfg(text: &str, cfg: &TokenizerConfig) -> String {
    let text = FENCED_BLOCK.replace_all(text, " ");
    let text = UNMATCHED_FENCE.replace_all(&text, " ");
    let text: String = text
        .split('\n')
        .filter(|line| {
            let code_indent = line.starts_with('\t') || line.starts_with("    ");
            !(code_indent && !line.trim().is_empty())
        })
        .collect::<Vec<_>>()
        .join("\n");
    let text = if cfg.keep_inline_code {
        INLINE_CODE.replace_all(&text, "$1")
    } else {
        INLINE_CODE.replace_all(&text, " ")
    };
    let text = text.replace('`', " ");
    let text = URL.replace_all(&text, " ");
    let text = MENTION.replace_all(&text, "$1");
    text.split('\n')
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Splits an identifier-like token into subtokens.
///
/// Splits on underscores, before an uppercase letter that follows a lowercase
/// letter or digit (`camelCase`), before the last uppercase of an uppercase
/// run followed by lowercase (`HTTPServer` → `http server`), and at
/// letter/digit boundaries. Non-alphanumeric characters become single-char
/// subtokens. Output is lowercased when `lowercase` is set.
pub fn subtokenize(token: &str) -> Vec<String> {
    subtokenize_cfg(token, true)
}

pub fn subtokenize_cfg(token: &str, lowercase: bool) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.is_empty() {
            out.push(if lowercase { cur.to_lowercase() } else { cur.clone() });
            cur.clear();
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' {
            flush(&mut cur, &mut out);
            continue;
        }
        if !c.is_alphanumeric() {
            flush(&mut cur, &mut out);
            out.push(c.to_string());
            continue;
        }
        if let Some(p) = cur.chars().last() {
            let camel = c.is_uppercase() && (p.is_lowercase() || p.is_numeric());
            let run_end = c.is_uppercase()
                && p.is_uppercase()
                && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            let digit_edge = (c.is_numeric() && p.is_alphabetic())
                || (c.is_alphabetic() && p.is_numeric());
            if camel || run_end || digit_edge {
                flush(&mut cur, &mut out);
            }
        }
        cur.push(c);
    }
    flush(&mut cur, &mut out);
    out
}

static VERSION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:\.\d+)+").unwrap());

/// Tokenizes markup-stripped text.
///
/// Splits on whitespace; punctuation becomes standalone tokens, except dots
/// between digits, which stay inside version-like tokens (`1.8.2`); every
/// alphanumeric piece is then subtokenized and (per config) lowercased.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut run = String::new();
        let flush_run = |run: &mut String, out: &mut Vec<String>| {
            if run.is_empty() {
                return;
            }
            // Version-like substrings stay whole; the rest is subtokenized.
            let mut pos = 0;
            for m in VERSION.find_iter(run) {
                out.extend(subtokenize_cfg(&run[pos..m.start()], cfg.lowercase));
                out.push(m.as_str().to_string());
                pos = m.end();
            }
            out.extend(subtokenize_cfg(&run[pos..], cfg.lowercase));
            run.clear();
        };
        for (i, &c) in chars.iter().enumerate() {
            let dot_in_version = c == '.'
                && i > 0
                && chars[i - 1].is_ascii_digit()
                && chars.get(i + 1).is_some_and(char::is_ascii_digit);
            if c.is_alphanumeric() || c == '_' || dot_in_version {
                run.push(c);
            } else {
                flush_run(&mut run, &mut out);
                out.push(c.to_string());
            }
        }
        flush_run(&mut run, &mut out);
    }
    out
}

/// Splits markup-stripped text into sentences.
///
/// A sentence ends after a terminator character followed by whitespace and an
/// uppercase letter, at a newline, or at the end of the text. Sentences are
/// trimmed; empty ones are dropped. A dot with a digit on each side never
/// ends a sentence (there is no whitespace after it).
pub fn split_sentences(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        let chars: Vec<char> = line.chars().collect();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            if cfg.terminators.contains(&chars[i]) {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                if j > i + 1 && j < chars.len() && chars[j].is_uppercase() {
                    push_sentence(&chars[start..=i], &mut out);
                    start = j;
                    i = j;
                    continue;
                }
            }
            i += 1;
        }
        if start < chars.len() {
            push_sentence(&chars[start..], &mut out);
        }
    }
    out
}

fn push_sentence(chars: &[char], out: &mut Vec<String>) {
    let s: String = chars.iter().collect();
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

static PAREN_REF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\(\s*(?:#|gh-)\d+\s*\)").unwrap());
static VERB_REF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:fix(?:e[sd])?|close[sd]?|resolve[sd]?)\s*:?\s*(?:#|gh-)\d+").unwrap()
});
static BARE_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:#|gh-)\d+").unwrap());

/// Cleans a commit message or PR title into reference-description tokens.
///
/// Removes issue/PR references — `(#123)`, `fixes #123` (and the
/// closes/resolves variants), bare `#123` / `GH-123` — then strips markup and
/// tokenizes. An empty result signals the caller to reject the example.
pub fn clean_description(text: &str) -> Vec<String> {
    let text = PAREN_REF.replace_all(text, " ");
    let text = VERB_REF.replace_all(&text, " ");
    let text = BARE_REF.replace_all(&text, " ");
    tokenize(&strip_markup(&text), &TokenizerConfig::default())
}

/// Renders the model input for a discussion prefix: the title marker and
/// title, then a marker and tokens for each utterance up to `upto_t`.
pub fn render_input(example: &Example, upto_t: usize) -> Result<Vec<String>, TextError> {
    if upto_t < 1 || upto_t > example.n_steps() {
        return Err(TextError::StepOutOfRange { upto: upto_t, max: example.n_steps() });
    }
    let mut out = Vec::with_capacity(
        1 + example.title_tokens().len()
            + example.utterances()[..upto_t]
                .iter()
                .map(|u| 1 + u.tokens().len())
                .sum::<usize>(),
    );
    out.push(TITLE_START.to_string());
    out.extend(example.title_tokens().iter().cloned());
    for u in &example.utterances()[..upto_t] {
        out.push(UTTERANCE_START.to_string());
        out.extend(u.tokens().iter().cloned());
    }
    Ok(out)
}

/// Full preprocessing of one raw comment: strip markup, split sentences,
/// tokenize each sentence, and return the flat token list plus sentence
/// spans over it. Returns `None` when nothing survives stripping.
pub fn preprocess_comment(
    text: &str,
    cfg: &TokenizerConfig,
) -> Option<(Vec<String>, Vec<(usize, usize)>)> {
    let stripped = strip_markup_cfg(text, cfg);
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    for sentence in split_sentences(&stripped, cfg) {
        let sent_tokens = tokenize(&sentence, cfg);
        if sent_tokens.is_empty() {
            continue;
        }
        let start = tokens.len();
        tokens.extend(sent_tokens);
        spans.push((start, tokens.len()));
    }
    if tokens.is_empty() {
        None
    } else {
        Some((tokens, spans))
    }
}
