//! Surface-level helpers shared by both augmentation modes.

use crate::repbias::Tokenizer;

/// Tokens after which a following `her` is an object pronoun rather than a
/// possessive determiner.
const NON_NOUN_CUES: &[&str] = &[
    // determiners and pronouns
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "some", "any", "no", "every", "each", "all", "both", "either", "neither", "i", "you",
    "he", "she", "it", "we", "they", "me", "him", "us", "them", "herself", "himself", "what",
    "which", "who", "whom", "whose",
    // prepositions and particles
    "to", "in", "on", "at", "for", "from", "with", "by", "about", "into", "onto", "over", "under",
    "after", "before", "of", "off", "up", "down", "out", "away", "back", "around", "through",
    "across", "against", "between", "toward", "towards", "like", "as", "than", "without",
    // conjunctions
    "and", "or", "but", "nor", "so", "yet", "if", "because", "while", "when", "where", "until",
    "unless", "although", "though",
    // adverbs and time words
    "yesterday", "today", "tonight", "tomorrow", "now", "then", "again", "too", "also", "very",
    "there", "here", "once", "twice", "always", "never", "often", "soon", "later", "still", "just",
    "well", "really", "anymore", "already", "not",
    // auxiliaries and common verbs
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "will", "would", "can", "could", "shall", "should", "may", "might", "must",
];

/// Decides between possessive and object use of `her` from the token that
/// follows it. `rest` is the text right after the word.
pub fn her_is_possessive(rest: &str, tokenizer: &Tokenizer) -> bool {
    let trimmed = rest.trim_start();
    // punctuation directly after the word ends the phrase
    match trimmed.chars().next() {
        None => return false,
        Some(c) if !c.is_alphanumeric() => return false,
        _ => {}
    }
    match tokenizer.tokens(trimmed).first() {
        Some(t) => !NON_NOUN_CUES.contains(&t.match_form()),
        None => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Casing {
    Lower,
    Title,
    Upper,
}

impl Casing {
    pub fn of(surface: &str) -> Self {
        let letters: Vec<char> = surface.chars().filter(|c| c.is_alphabetic()).collect();
        if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
            Casing::Upper
        } else if letters.first().is_some_and(|c| c.is_uppercase()) {
            Casing::Title
        } else {
            Casing::Lower
        }
    }

    pub fn apply(self, word: &str) -> String {
        match self {
            Casing::Lower => word.to_string(),
            Casing::Upper => word.to_uppercase(),
            Casing::Title => {
                let mut chars = word.chars();
                match chars.next() {
                    Some(first) => first.to_uppercase().chain(chars).collect(),
                    None => String::new(),
                }
            }
        }
    }
}

/// Replacement text for `original`: `word` in the original's casing,
/// keeping an abbreviation period the entry itself lacks.
pub fn render(original: &str, word: &str) -> String {
    let mut out = Casing::of(original).apply(word);
    if original.ends_with('.') && !out.ends_with('.') {
        out.push('.');
    }
    out
}

/// Replaces the given byte spans (sorted, non-overlapping) in `text`.
pub fn splice(text: &str, replacements: &[(usize, usize, String)]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for (start, end, word) in replacements {
        out.push_str(&text[pos..*start]);
        out.push_str(word);
        pos = *end;
    }
    out.push_str(&text[pos..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_keeps_abbreviation_period() {
        assert_eq!(render("Mr.", "ms"), "Ms.");
        assert_eq!(render("Mrs.", "mr."), "Mr.");
        assert_eq!(render("HIS", "her"), "HER");
    }

    #[test]
    fn her_rule() {
        let t = Tokenizer::default();
        assert!(!her_is_possessive(" yesterday.", &t));
        assert!(her_is_possessive(" book is new", &t));
        assert!(!her_is_possessive(".", &t));
        assert!(!her_is_possessive("", &t));
        assert!(!her_is_possessive(" a gift", &t));
        assert!(her_is_possessive(" own car", &t));
        assert!(!her_is_possessive(", and", &t));
    }

    #[test]
    fn casing() {
        assert_eq!(Casing::of("He"), Casing::Title);
        assert_eq!(Casing::of("HE"), Casing::Upper);
        assert_eq!(Casing::of("he"), Casing::Lower);
        assert_eq!(Casing::of("I"), Casing::Title);
        assert_eq!(Casing::Title.apply("she"), "She");
        assert_eq!(Casing::Upper.apply("she"), "SHE");
    }

    #[test]
    fn splice_spans() {
        let s = splice("He saw him.", &[(0, 2, "She".into()), (7, 10, "her".into())]);
        assert_eq!(s, "She saw her.");
    }
}
