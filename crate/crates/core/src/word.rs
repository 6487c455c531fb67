//! Words over a finite set of generator symbols and their inverses.

use std::fmt;

use crate::error::{Error, Result};

/// A generator index with an exponent of `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Self { inverse: !self.inverse, ..self }
    }

    /// Position in the enumeration alphabet `g0, g1, .., g0^-1, g1^-1, ..`.
    pub(crate) fn rank(self, generators: usize) -> usize {
        if self.inverse {
            generators + self.generator
        } else {
            self.generator
        }
    }
}

/// A freely reduced word. The group element `w = l0 l1 .. lk` acts as
/// `l0 ∘ l1 ∘ .. ∘ lk`, so the rightmost letter is applied first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Builds a word, cancelling adjacent inverse pairs.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub fn generator(g: usize) -> Self {
        Self(vec![Letter::new(g, false)])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    /// Reduced product `self · other`.
    pub fn concat(&self, other: &Word) -> Self {
        Self::new(self.0.iter().chain(other.0.iter()).copied())
    }

    /// Parses whitespace-separated tokens `name` or `name^-1`.
    pub fn parse(text: &str, names: &[String]) -> Result<Self> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            let (name, inverse) = match tok.strip_suffix("^-1") {
                Some(base) => (base, true),
                None => (tok, false),
            };
            let g = names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
            letters.push(Letter::new(g, inverse));
        }
        Ok(Self::new(letters))
    }

    /// Parses a comma-separated list of words.
    pub fn parse_list(text: &str, names: &[String]) -> Result<Vec<Self>> {
        text.split(',').filter(|s| !s.trim().is_empty()).map(|s| Self::parse(s, names)).collect()
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> WordDisplay<'a> {
        WordDisplay { word: self, names }
    }
}

pub struct WordDisplay<'a> {
    word: &'a Word,
    names: &'a [String],
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.word.letters().iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let name = self.names.get(l.generator).map(String::as_str).unwrap_or("?");
            f.write_str(name)?;
            if l.inverse {
                f.write_str("^-1")?;
            }
        }
        Ok(())
    }
}

/// Breadth-first enumeration of reduced words of length `1..=max_len`,
/// lexicographic within each length over `g0, g1, .., g0^-1, g1^-1, ..`.
pub struct ReducedWords {
    generators: usize,
    max_len: usize,
    current: Vec<Letter>,
}

impl ReducedWords {
    pub fn new(generators: usize, max_len: usize) -> Self {
        Self { generators, max_len, current: Vec::new() }
    }

    fn letter_at(&self, rank: usize) -> Letter {
        if rank < self.generators {
            Letter::new(rank, false)
        } else {
            Letter::new(rank - self.generators, true)
        }
    }

    /// Smallest-rank letter at or after `from` that does not cancel `prev`.
    fn next_allowed(&self, prev: Option<Letter>, from: usize) -> Option<usize> {
        (from..2 * self.generators).find(|&r| Some(self.letter_at(r).inv()) != prev)
    }

    fn first_of_len(&self, len: usize) -> Option<Vec<Letter>> {
        let mut w = Vec::with_capacity(len);
        for _ in 0..len {
            let r = self.next_allowed(w.last().copied(), 0)?;
            w.push(self.letter_at(r));
        }
        Some(w)
    }
}

impl Iterator for ReducedWords {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.generators == 0 {
            return None;
        }
        if self.current.is_empty() {
            if self.max_len == 0 {
                return None;
            }
            self.current = self.first_of_len(1)?;
            return Some(Word(self.current.clone()));
        }
        // Increment the rightmost position that can advance, then refill.
        let len = self.current.len();
        let mut pos = len;
        while pos > 0 {
            pos -= 1;
            let prev = if pos == 0 { None } else { Some(self.current[pos - 1]) };
            let r = self.current[pos].rank(self.generators);
            if let Some(nr) = self.next_allowed(prev, r + 1) {
                self.current[pos] = self.letter_at(nr);
                let mut ok = true;
                for i in pos + 1..len {
                    match self.next_allowed(Some(self.current[i - 1]), 0) {
                        Some(rr) => self.current[i] = self.letter_at(rr),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    return Some(Word(self.current.clone()));
                }
            }
        }
        if len >= self.max_len {
            return None;
        }
        self.current = self.first_of_len(len + 1)?;
        Some(Word(self.current.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn free_reduction_cancels_pairs() {
        let w = Word::parse("a b b^-1 a^-1 b", &names()).unwrap();
        assert_eq!(w, Word::generator(1));
        assert!(Word::parse("a a^-1", &names()).unwrap().is_empty());
    }

    #[test]
    fn inverse_and_display() {
        let w = Word::parse("a b^-1", &names()).unwrap();
        assert_eq!(w.inverse().display(&names()).to_string(), "b a^-1");
        assert!(w.concat(&w.inverse()).is_empty());
        assert_eq!(Word::empty().display(&names()).to_string(), "e");
    }

    #[test]
    fn unknown_generator_rejected() {
        assert!(matches!(Word::parse("c", &names()), Err(Error::UnknownGenerator(_))));
    }

    #[test]
    fn enumeration_counts_and_order() {
        // 2k(2k-1)^(l-1) reduced words of length l.
        let all: Vec<Word> = ReducedWords::new(2, 3).collect();
        assert_eq!(all.len(), 4 + 12 + 36);
        let shown: Vec<String> = all[..6].iter().map(|w| w.display(&names()).to_string()).collect();
        assert_eq!(shown, ["a", "b", "a^-1", "b^-1", "a a", "a b"]);
        assert!(all.iter().all(|w| Word::new(w.letters().iter().copied()) == *w));
        let one: Vec<Word> = ReducedWords::new(1, 4).collect();
        assert_eq!(one.len(), 8);
    }
}
