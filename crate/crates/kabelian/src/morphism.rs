//! Morphisms from a small domain alphabet into words, with the derived
//! data the square-freeness verifier needs: the longest common prefix and
//! suffix of the images, the shortest image length, and uniformity.
//!
//! The text format accepts `#` comments, optional macro lines
//! `let <name> = <digits>` and one image line `<letter> -> <expr>` per
//! domain letter, where the expression concatenates digit runs and macro
//! names.  Macros let long images with shared affixes stay readable.

use std::collections::HashMap;
use std::fmt;

use crate::words::{Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MorphismError {
    NoImages,
    DomainTooLarge(usize),
    MissingImage(u8),
    DuplicateImage(u8),
    EmptyImage(u8),
    LetterOutsideDomain(u8),
    Syntax { line: usize, reason: String },
    Word(WordError),
}

impl fmt::Display for MorphismError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismError::NoImages => write!(f, "morphism has no images"),
            MorphismError::DomainTooLarge(n) => write!(f, "domain of {n} letters is too large"),
            MorphismError::MissingImage(c) => write!(f, "no image for letter {c}"),
            MorphismError::DuplicateImage(c) => write!(f, "letter {c} has two images"),
            MorphismError::EmptyImage(c) => write!(f, "image of letter {c} is empty"),
            MorphismError::LetterOutsideDomain(c) => write!(f, "letter {c} outside the domain"),
            MorphismError::Syntax { line, reason } => write!(f, "line {line}: {reason}"),
            MorphismError::Word(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MorphismError {}

impl From<WordError> for MorphismError {
    fn from(e: WordError) -> Self {
        MorphismError::Word(e)
    }
}

/// Letter-to-word substitution over a contiguous domain `0..domain_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    images: Vec<Word>,
    prefix: Word,
    suffix: Word,
    min_image_len: usize,
    uniform: bool,
}

impl Morphism {
    /// `images[c]` becomes the image of letter `c`.  All images are
    /// rebuilt over the largest of their alphabets.
    pub fn from_images(images: Vec<Word>) -> Result<Morphism, MorphismError> {
        if images.is_empty() {
            return Err(MorphismError::NoImages);
        }
        if images.len() > crate::words::MAX_ALPHABET {
            return Err(MorphismError::DomainTooLarge(images.len()));
        }
        let sigma = images.iter().map(|w| w.alphabet()).max().unwrap();
        let images: Vec<Word> = images
            .into_iter()
            .map(|w| Word::from_raw(sigma, w.letters().to_vec()))
            .collect();
        for (c, w) in images.iter().enumerate() {
            if w.is_empty() {
                return Err(MorphismError::EmptyImage(c as u8));
            }
        }
        let prefix = common_prefix(&images);
        let suffix = common_suffix(&images);
        let min_image_len = images.iter().map(Word::len).min().unwrap();
        let uniform = images.iter().all(|w| w.len() == min_image_len);
        Ok(Morphism { images, prefix, suffix, min_image_len, uniform })
    }

    pub fn domain_size(&self) -> usize {
        self.images.len()
    }

    /// Size of the alphabet the images are written over.
    pub fn alphabet(&self) -> usize {
        self.images[0].alphabet()
    }

    pub fn image(&self, c: u8) -> Result<&Word, MorphismError> {
        self.images
            .get(c as usize)
            .ok_or(MorphismError::LetterOutsideDomain(c))
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    /// Longest word starting every image.
    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    /// Longest word ending every image.
    pub fn suffix(&self) -> &Word {
        &self.suffix
    }

    pub fn min_image_len(&self) -> usize {
        self.min_image_len
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn apply(&self, w: &Word) -> Result<Word, MorphismError> {
        let mut out = Vec::new();
        for c in w.letters() {
            out.extend_from_slice(self.image(*c)?.letters());
        }
        Ok(Word::from_raw(self.alphabet(), out))
    }

    /// Canonical text form; `parse` reads it back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (c, w) in self.images.iter().enumerate() {
            s.push_str(&format!("{c} -> {w}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Morphism, MorphismError> {
        let mut macros: HashMap<&str, String> = HashMap::new();
        let mut images: Vec<Option<String>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |reason: String| MorphismError::Syntax { line: i + 1, reason };
            if let Some(rest) = line.strip_prefix("let ") {
                let (name, body) = rest
                    .split_once('=')
                    .ok_or_else(|| syntax("macro line without '='".into()))?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphabetic() || c == '_') {
                    return Err(syntax(format!("bad macro name '{name}'")));
                }
                let body = body.trim();
                if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
                    return Err(syntax(format!("macro '{name}' must expand to digits")));
                }
                if macros.insert(name, body.to_string()).is_some() {
                    return Err(syntax(format!("macro '{name}' defined twice")));
                }
            } else if let Some((letter, expr)) = line.split_once("->") {
                let letter = letter.trim();
                let c: usize = letter
                    .parse()
                    .map_err(|_| syntax(format!("bad domain letter '{letter}'")))?;
                if c >= crate::words::MAX_ALPHABET {
                    return Err(MorphismError::DomainTooLarge(c + 1));
                }
                let expanded = expand(expr, &macros).map_err(syntax)?;
                if images.len() <= c {
                    images.resize(c + 1, None);
                }
                if images[c].replace(expanded).is_some() {
                    return Err(MorphismError::DuplicateImage(c as u8));
                }
            } else {
                return Err(syntax(format!("expected 'let' or '->' in '{line}'")));
            }
        }
        let mut words = Vec::with_capacity(images.len());
        for (c, img) in images.iter().enumerate() {
            match img {
                None => return Err(MorphismError::MissingImage(c as u8)),
                Some(s) if s.is_empty() => return Err(MorphismError::EmptyImage(c as u8)),
                Some(s) => words.push(s.parse::<Word>()?),
            }
        }
        Morphism::from_images(words)
    }
}

/// Concatenates the digit runs and macro references of an image expression.
fn expand(expr: &str, macros: &HashMap<&str, String>) -> Result<String, String> {
    let mut out = String::new();
    let mut chars = expr.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_digit() {
            let mut end = start;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push_str(&expr[start..end]);
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_ascii_alphabetic() || d == '_' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let name = &expr[start..end];
            match macros.get(name) {
                Some(body) => out.push_str(body),
                None => return Err(format!("unknown macro '{name}'")),
            }
        } else {
            return Err(format!("unexpected character '{c}'"));
        }
    }
    Ok(out)
}

impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::str::FromStr for Morphism {
    type Err = MorphismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Morphism::parse(s)
    }
}

fn common_prefix(images: &[Word]) -> Word {
    let mut n = images.iter().map(Word::len).min().unwrap_or(0);
    for w in &images[1..] {
        let first = images[0].letters();
        n = first[..n]
            .iter()
            .zip(w.letters())
            .take_while(|(a, b)| a == b)
            .count();
    }
    images[0].prefix(n)
}

fn common_suffix(images: &[Word]) -> Word {
    let mut n = images.iter().map(Word::len).min().unwrap_or(0);
    for w in &images[1..] {
        let first = images[0].letters();
        let len = first.len();
        n = first[len - n..]
            .iter()
            .rev()
            .zip(w.letters().iter().rev())
            .take_while(|(a, b)| a == b)
            .count();
    }
    images[0].suffix(n)
}

/// The four morphisms shipped with the crate, parsed from the fixture
/// files under `fixtures/`.
pub mod fixtures {
    use super::Morphism;

    /// 11-uniform binary images; images of abelian-square-free words
    /// avoid 3-abelian squares of period at least 3.
    pub fn uniform11() -> Morphism {
        Morphism::parse(UNIFORM11).unwrap()
    }

    /// 5-uniform ternary images; images of abelian-square-free words
    /// avoid 2-abelian squares of period at least 2.
    pub fn ternary() -> Morphism {
        Morphism::parse(TERNARY).unwrap()
    }

    /// Binary images of length 691 to 700; images of abelian-square-free
    /// words contain only the squares 00, 11 and 0101 under 5-abelian
    /// equivalence.
    pub fn three_squares() -> Morphism {
        Morphism::parse(THREE_SQUARES).unwrap()
    }

    /// Binary images of length 46 to 50; images of abelian-square-free
    /// words contain only the squares 00, 11, 0101 and 1010 under
    /// 3-abelian equivalence.
    pub fn four_squares() -> Morphism {
        Morphism::parse(FOUR_SQUARES).unwrap()
    }

    pub const UNIFORM11: &str = include_str!("../fixtures/uniform11.txt");
    pub const TERNARY: &str = include_str!("../fixtures/ternary.txt");
    pub const THREE_SQUARES: &str = include_str!("../fixtures/three_squares.txt");
    pub const FOUR_SQUARES: &str = include_str!("../fixtures/four_squares.txt");
}
