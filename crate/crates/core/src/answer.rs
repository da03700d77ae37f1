//! Answer normalization and matching.
//!
//! A reply is correct when its normalized text contains a normalized
//! accepted answer. Numeric questions additionally treat digits and English
//! number words as the same token ("21" and "twenty-one").

use alloc::string::{String, ToString};
use alloc::vec::Vec;

const TERMINAL_PUNCTUATION: &[char] = &[
    '.', ',', '!', '?', ';', ':', '\u{3002}', '\u{ff01}', '\u{ff1f}', '\u{ff0c}', '\u{ff1b}',
    '\u{2026}',
];

/// Case-folds, trims, collapses internal whitespace and strips trailing
/// sentence punctuation.
pub fn normalize(text: &str) -> String {
    let folded = text.to_lowercase();
    let collapsed = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(|c: char| TERMINAL_PUNCTUATION.contains(&c) || c.is_whitespace())
        .to_string()
}

/// `true` when the normalized `reply` contains the normalized `accepted`.
pub fn contains_answer(reply: &str, accepted: &str) -> bool {
    let accepted = normalize(accepted);
    !accepted.is_empty() && normalize(reply).contains(&accepted)
}

/// Like [`contains_answer`], but over tokens with number words folded into
/// digits; `accepted` must appear as a contiguous token run in `reply`.
pub fn contains_numeric_answer(reply: &str, accepted: &str) -> bool {
    let needle = numeric_tokens(accepted);
    if needle.is_empty() {
        return false;
    }
    let haystack = numeric_tokens(reply);
    haystack
        .windows(needle.len())
        .any(|w| w == needle.as_slice())
}

/// Splits text into lowercase word tokens and replaces every run of English
/// number words with its decimal rendering.
pub fn numeric_tokens(text: &str) -> Vec<String> {
    let words: Vec<String> = normalize(text)
        .split(|c: char| c.is_whitespace() || c == '-' || c == '\u{2013}')
        .filter_map(clean_token)
        .collect();

    let mut out = Vec::new();
    let mut number = NumberBuilder::default();
    for (i, word) in words.iter().enumerate() {
        let next_is_number = words
            .get(i + 1)
            .is_some_and(|w| NumberWord::parse(w).is_some());
        match NumberWord::parse(word) {
            Some(NumberWord::And) if number.accepts_and() && next_is_number => {
                number.last = Some(NumberWord::And);
            }
            Some(NumberWord::And) | None => {
                number.flush(&mut out);
                out.push(word.clone());
            }
            Some(w) => {
                if !number.accepts(w) {
                    number.flush(&mut out);
                }
                number.push(w);
            }
        }
    }
    number.flush(&mut out);
    out
}

fn clean_token(raw: &str) -> Option<String> {
    let t = raw.trim_matches(|c: char| !c.is_alphanumeric());
    if t.is_empty() {
        return None;
    }
    // "1,000" -> "1000"
    if t.chars().all(|c| c.is_ascii_digit() || c == ',') {
        return Some(t.chars().filter(|c| *c != ',').collect());
    }
    Some(t.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NumberWord {
    Unit(u64),
    Teen(u64),
    Tens(u64),
    Hundred,
    Scale(u64),
    And,
}

impl NumberWord {
    fn parse(word: &str) -> Option<Self> {
        const UNITS: [&str; 10] = [
            "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
        ];
        const TEENS: [&str; 10] = [
            "ten",
            "eleven",
            "twelve",
            "thirteen",
            "fourteen",
            "fifteen",
            "sixteen",
            "seventeen",
            "eighteen",
            "nineteen",
        ];
        const TENS: [&str; 8] = [
            "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
        ];
        if let Some(i) = UNITS.iter().position(|w| *w == word) {
            return Some(NumberWord::Unit(i as u64));
        }
        if let Some(i) = TEENS.iter().position(|w| *w == word) {
            return Some(NumberWord::Teen(10 + i as u64));
        }
        if let Some(i) = TENS.iter().position(|w| *w == word) {
            return Some(NumberWord::Tens(20 + 10 * i as u64));
        }
        match word {
            "hundred" => Some(NumberWord::Hundred),
            "thousand" => Some(NumberWord::Scale(1_000)),
            "million" => Some(NumberWord::Scale(1_000_000)),
            "billion" => Some(NumberWord::Scale(1_000_000_000)),
            "and" => Some(NumberWord::And),
            _ => None,
        }
    }
}

#[derive(Default)]
struct NumberBuilder {
    total: u64,
    current: u64,
    last: Option<NumberWord>,
}

impl NumberBuilder {
    fn accepts_and(&self) -> bool {
        matches!(self.last, Some(NumberWord::Hundred | NumberWord::Scale(_)))
    }

    fn accepts(&self, w: NumberWord) -> bool {
        use NumberWord::*;
        let Some(last) = self.last else { return true };
        match w {
            Unit(_) => matches!(last, Tens(_) | Hundred | Scale(_) | And),
            Teen(_) | Tens(_) => matches!(last, Hundred | Scale(_) | And),
            Hundred => matches!(last, Unit(_) | Teen(_)) && self.current < 100,
            Scale(s) => {
                matches!(last, Unit(_) | Teen(_) | Tens(_) | Hundred)
                    && (self.total == 0 || self.total > s * 999)
            }
            And => false,
        }
    }

    fn push(&mut self, w: NumberWord) {
        match w {
            NumberWord::Unit(v) | NumberWord::Teen(v) | NumberWord::Tens(v) => self.current += v,
            NumberWord::Hundred => self.current *= 100,
            NumberWord::Scale(s) => {
                self.total += self.current * s;
                self.current = 0;
            }
            NumberWord::And => {}
        }
        self.last = Some(w);
    }

    fn flush(&mut self, out: &mut Vec<String>) {
        if self.last.is_some() {
            out.push((self.total + self.current).to_string());
        }
        *self = NumberBuilder::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn normalization() {
        assert_eq!(normalize("  The   NILE river.  "), "the nile river");
        assert_eq!(normalize("Really?!"), "really");
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn containment() {
        assert!(contains_answer("The Nile", "nile"));
        assert!(contains_answer("It is the Nile River.", "the nile"));
        assert!(!contains_answer("The Amazon", "Nile"));
        assert!(!contains_answer("anything", "  "));
    }

    #[test]
    fn number_words_fold_to_digits() {
        assert_eq!(numeric_tokens("twenty-one"), vec!["21"]);
        assert_eq!(
            numeric_tokens("nine plus twelve is 21."),
            vec!["9", "plus", "12", "is", "21"]
        );
        assert_eq!(numeric_tokens("one hundred and five"), vec!["105"]);
        assert_eq!(numeric_tokens("two thousand three hundred"), vec!["2300"]);
        assert_eq!(numeric_tokens("1,000 apples"), vec!["1000", "apples"]);
        assert_eq!(numeric_tokens("nine twelve"), vec!["9", "12"]);
        assert_eq!(
            numeric_tokens("salt and pepper"),
            vec!["salt", "and", "pepper"]
        );
        assert_eq!(
            numeric_tokens("one hundred and apples"),
            vec!["100", "and", "apples"]
        );
    }

    #[test]
    fn numeric_equivalence() {
        assert!(contains_numeric_answer("The answer is twenty one", "21"));
        assert!(contains_numeric_answer(
            "nine plus twelve is 21.",
            "twenty-one"
        ));
        assert!(!contains_numeric_answer("121", "21"));
        assert!(!contains_numeric_answer("twenty", "21"));
    }
}
