//! Reduced words in the free group `F_k`.
//!
//! A letter is a nonzero signed integer: `+i` is the generator `a_i` and `-i`
//! its inverse. Words are always stored fully reduced and carry their arity,
//! so words from different free groups never mix silently.
//!
//! The canonical order on words is shortlex with the letter order
//! `+1 < -1 < +2 < -2 < ...`. Ball enumeration emits words in this order, which
//! makes every serialization derived from it bit-stable.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Default bound on the number of words a ball enumeration may produce.
pub const DEFAULT_BALL_CAP: usize = 1_000_000;

/// A letter of `F_k`; never zero.
pub type Letter = i32;

/// Position of a letter in the canonical letter order `+1, -1, +2, -2, ...`.
#[inline]
pub fn letter_rank(letter: Letter) -> usize {
    2 * (letter.unsigned_abs() as usize - 1) + usize::from(letter < 0)
}

/// Inverse of [`letter_rank`].
#[inline]
pub fn letter_from_rank(rank: usize) -> Letter {
    let g = (rank / 2 + 1) as Letter;
    if rank % 2 == 0 {
        g
    } else {
        -g
    }
}

/// All `2k` letters of `F_k` in canonical order.
pub fn letters(arity: usize) -> Vec<Letter> {
    (0..2 * arity).map(letter_from_rank).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    arity: usize,
    letters: Vec<Letter>,
}

fn check_letter(arity: usize, letter: Letter) -> Result<()> {
    if letter == 0 || letter.unsigned_abs() as usize > arity {
        return Err(Error::Arity(format!(
            "letter {letter} is out of range for arity {arity}"
        )));
    }
    Ok(())
}

/// Free reduction of a raw letter sequence.
pub fn reduce(arity: usize, raw: &[Letter]) -> Result<Word> {
    if arity == 0 {
        return Err(Error::Arity("arity must be positive".into()));
    }
    let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
    for &x in raw {
        check_letter(arity, x)?;
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    Ok(Word {
        arity,
        letters: out,
    })
}

impl Word {
    pub fn identity(arity: usize) -> Self {
        Word {
            arity,
            letters: Vec::new(),
        }
    }

    /// The single-letter word `a_index` (1-based).
    pub fn generator(arity: usize, index: usize) -> Result<Self> {
        reduce(arity, &[index as Letter])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        if self.arity != other.arity {
            return Err(Error::Arity(format!(
                "cannot multiply words of arity {} and {}",
                self.arity, other.arity
            )));
        }
        let mut letters = self.letters.clone();
        for &x in &other.letters {
            if letters.last() == Some(&-x) {
                letters.pop();
            } else {
                letters.push(x);
            }
        }
        Ok(Word {
            arity: self.arity,
            letters,
        })
    }

    pub fn invert(&self) -> Word {
        Word {
            arity: self.arity,
            letters: self.letters.iter().rev().map(|x| -x).collect(),
        }
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.invert() } else { self.clone() };
        let mut out = Word::identity(self.arity);
        for _ in 0..n.unsigned_abs() {
            out = out.concat(&base).expect("same arity");
        }
        out
    }

    /// Extends a reduced word by one letter, returning `None` when the letter
    /// would cancel the last one.
    pub fn extended(&self, letter: Letter) -> Option<Word> {
        if self.letters.last() == Some(&-letter) {
            return None;
        }
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        letters.extend_from_slice(&self.letters);
        letters.push(letter);
        Some(Word {
            arity: self.arity,
            letters,
        })
    }

    /// Parses the text form `e` or `s1.S2.s1` (lowercase generator, uppercase
    /// inverse).
    pub fn parse(arity: usize, text: &str) -> Result<Word> {
        let text = text.trim();
        if text == "e" || text.is_empty() {
            return Ok(Word::identity(arity));
        }
        let mut raw = Vec::new();
        let mut pos = 0;
        for token in text.split('.') {
            let sign = match token.chars().next() {
                Some('s') => 1,
                Some('S') => -1,
                _ => return Err(Error::parse(pos, format!("bad letter `{token}`"))),
            };
            let index: Letter = token[1..]
                .parse()
                .map_err(|_| Error::parse(pos + 1, format!("bad generator index in `{token}`")))?;
            if index <= 0 {
                return Err(Error::parse(pos + 1, "generator index must be positive"));
            }
            raw.push(sign * index);
            pos += token.len() + 1;
        }
        reduce(arity, &raw)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for (i, &x) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            let c = if x > 0 { 's' } else { 'S' };
            write!(f, "{c}{}", x.unsigned_abs())?;
        }
        Ok(())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.arity
            .cmp(&other.arity)
            .then(self.letters.len().cmp(&other.letters.len()))
            .then_with(|| {
                let a = self.letters.iter().map(|&x| letter_rank(x));
                let b = other.letters.iter().map(|&x| letter_rank(x));
                a.cmp(b)
            })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Number of reduced words of length at most `radius` in `F_arity`, or `None`
/// on overflow.
pub fn ball_size(arity: usize, radius: usize) -> Option<u128> {
    let k = arity as u128;
    let mut total: u128 = 1;
    let mut sphere: u128 = 0;
    for r in 1..=radius {
        sphere = if r == 1 {
            2 * k
        } else {
            sphere.checked_mul(2 * k - 1)?
        };
        total = total.checked_add(sphere)?;
    }
    Some(total)
}

/// All reduced words of length `<= radius`, in canonical shortlex order.
pub fn enumerate_ball(arity: usize, radius: usize, cap: usize) -> Result<Vec<Word>> {
    if arity == 0 {
        return Err(Error::Arity("arity must be positive".into()));
    }
    match ball_size(arity, radius) {
        Some(n) if n <= cap as u128 => {}
        _ => {
            return Err(Error::CapExceeded(format!(
                "ball of radius {radius} in F_{arity} exceeds {cap} words"
            )))
        }
    }
    let alphabet = letters(arity);
    let mut out = vec![Word::identity(arity)];
    let mut layer_start = 0;
    for _ in 0..radius {
        let layer_end = out.len();
        for i in layer_start..layer_end {
            for &x in &alphabet {
                if let Some(w) = out[i].extended(x) {
                    out.push(w);
                }
            }
        }
        layer_start = layer_end;
    }
    Ok(out)
}
