use crate::corpus::Abbreviations;

/// A lowercase token and its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    /// Form used for lexicon lookup: a trailing abbreviation period is
    /// dropped so `Mr.` matches the entry `mr`.
    pub fn match_form(&self) -> &str {
        self.text.strip_suffix('.').unwrap_or(&self.text)
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

/// Splits on whitespace and punctuation. Hyphens and apostrophes between
/// two alphanumeric characters stay inside the token, as do the periods of
/// known abbreviations.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    abbreviations: Abbreviations,
}

impl Tokenizer {
    pub fn new(abbreviations: Abbreviations) -> Self {
        Tokenizer { abbreviations }
    }

    pub fn tokens(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut pos = 0;
        while let Some(c) = text[pos..].chars().next() {
            if !c.is_alphanumeric() {
                pos += c.len_utf8();
                continue;
            }
            let start = pos;
            if let Some(n) = self.abbreviations.match_prefix(&text[pos..]) {
                pos += n;
            } else {
                let mut chars = text[pos..].char_indices().peekable();
                let mut end = pos;
                while let Some((i, ch)) = chars.next() {
                    if ch.is_alphanumeric() {
                        end = pos + i + ch.len_utf8();
                    } else if is_joiner(ch)
                        && chars.peek().is_some_and(|(_, n)| n.is_alphanumeric())
                    {
                        continue;
                    } else {
                        break;
                    }
                }
                pos = end;
            }
            out.push(Token {
                text: normalize(&text[start..pos]),
                start,
                end: pos,
            });
        }
        out
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.tokens(text).into_iter().map(|t| t.text).collect()
    }
}

pub(crate) fn normalize(s: &str) -> String {
    s.to_lowercase().replace('\u{2019}', "'")
}

/// Tokenizes with the default abbreviation list.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}
