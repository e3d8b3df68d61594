//! Bi-infinite, eventually periodic sequences over (Z | S).
//!
//! A point is stored as four words: a left tail repeating toward -inf, a
//! finite left part (indices -m..-1, over Z), a finite right part (indices
//! 0..n-1, over S) and a right tail repeating toward +inf. Every constructor
//! canonicalizes (primitive tail periods, maximal absorption of the finite
//! parts into the tails), so structural equality coincides with equality of
//! the underlying bi-infinite sequences.

use serde::{Deserialize, Serialize};

use super::system::{Letter, SSymbol, ZSymbol, ZipSystem};
use super::SymbolicError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZipSequence {
    left_tail: Vec<ZSymbol>,
    left: Vec<ZSymbol>,
    right: Vec<SSymbol>,
    right_tail: Vec<SSymbol>,
}

/// Name-based serialization of a sequence, the on-disk format:
/// `{"left_tail": [...], "left": [...], "right": [...], "right_tail": [...]}`
/// with index 0 being the first element of `right`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZipSequenceRepr {
    pub left_tail: Vec<String>,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub right_tail: Vec<String>,
}

impl ZipSequence {
    pub fn new(
        left_tail: Vec<ZSymbol>,
        left: Vec<ZSymbol>,
        right: Vec<SSymbol>,
        right_tail: Vec<SSymbol>,
    ) -> Result<Self, SymbolicError> {
        if left_tail.is_empty() || right_tail.is_empty() {
            return Err(SymbolicError::EmptyTail);
        }
        let mut seq = Self { left_tail, left, right, right_tail };
        seq.canonicalize();
        Ok(seq)
    }

    /// The periodic point generated by an S-word: the word repeats forward
    /// and its tau-image repeats backward.
    pub fn periodic_from_word(sys: &ZipSystem, word: &[SSymbol]) -> Result<Self, SymbolicError> {
        if word.is_empty() {
            return Err(SymbolicError::EmptyTail);
        }
        let left_tail = sys.tau_apply(word)?;
        Self::new(left_tail, Vec::new(), Vec::new(), word.to_vec())
    }

    pub fn symbol_at(&self, i: i64) -> Letter {
        if i >= 0 {
            let i = i as usize;
            if i < self.right.len() {
                Letter::S(self.right[i])
            } else {
                let off = (i - self.right.len()) % self.right_tail.len();
                Letter::S(self.right_tail[off])
            }
        } else {
            let k = (-i) as usize;
            if k <= self.left.len() {
                Letter::Z(self.left[self.left.len() - k])
            } else {
                // Tail repeats leftward, right-aligned before `left`.
                let d = k - self.left.len();
                let len = self.left_tail.len();
                Letter::Z(self.left_tail[len - 1 - ((d - 1) % len)])
            }
        }
    }

    pub fn left_tail(&self) -> &[ZSymbol] {
        &self.left_tail
    }

    pub fn left(&self) -> &[ZSymbol] {
        &self.left
    }

    pub fn right(&self) -> &[SSymbol] {
        &self.right
    }

    pub fn right_tail(&self) -> &[SSymbol] {
        &self.right_tail
    }

    /// Bound beyond which two sequences that agree on all |i| <= bound agree
    /// everywhere (preperiod plus one common period on each side).
    pub(crate) fn agreement_bound(&self, other: &Self) -> u64 {
        let right = self.right.len().max(other.right.len()) as u64
            + lcm(self.right_tail.len() as u64, other.right_tail.len() as u64);
        let left = self.left.len().max(other.left.len()) as u64
            + lcm(self.left_tail.len() as u64, other.left_tail.len() as u64);
        right.max(left) + 1
    }

    /// True if all symbols are valid indices for `sys`.
    pub fn is_valid_over(&self, sys: &ZipSystem) -> bool {
        let s_ok = |s: &SSymbol| (s.0 as usize) < sys.s_len();
        let z_ok = |z: &ZSymbol| (z.0 as usize) < sys.z_len();
        self.right.iter().all(s_ok)
            && self.right_tail.iter().all(s_ok)
            && self.left.iter().all(z_ok)
            && self.left_tail.iter().all(z_ok)
    }

    pub fn to_repr(&self, sys: &ZipSystem) -> ZipSequenceRepr {
        ZipSequenceRepr {
            left_tail: self.left_tail.iter().map(|&z| sys.z_name(z).to_string()).collect(),
            left: self.left.iter().map(|&z| sys.z_name(z).to_string()).collect(),
            right: self.right.iter().map(|&s| sys.s_name(s).to_string()).collect(),
            right_tail: self.right_tail.iter().map(|&s| sys.s_name(s).to_string()).collect(),
        }
    }

    pub fn from_repr(sys: &ZipSystem, repr: &ZipSequenceRepr) -> Result<Self, SymbolicError> {
        let z = |names: &[String]| -> Result<Vec<ZSymbol>, SymbolicError> {
            names
                .iter()
                .map(|n| {
                    sys.z_by_name(n).ok_or_else(|| {
                        SymbolicError::AlphabetMismatch(format!("`{n}` is not in Z"))
                    })
                })
                .collect()
        };
        let s = |names: &[String]| -> Result<Vec<SSymbol>, SymbolicError> {
            names
                .iter()
                .map(|n| {
                    sys.s_by_name(n).ok_or_else(|| {
                        SymbolicError::AlphabetMismatch(format!("`{n}` is not in S"))
                    })
                })
                .collect()
        };
        Self::new(z(&repr.left_tail)?, z(&repr.left)?, s(&repr.right)?, s(&repr.right_tail)?)
    }

    /// Compact display like `(ab|b . 1 2 |2p)`, tails marked with `|`.
    pub fn display(&self, sys: &ZipSystem) -> String {
        let lt: Vec<&str> = self.left_tail.iter().map(|&z| sys.z_name(z)).collect();
        let l: Vec<&str> = self.left.iter().map(|&z| sys.z_name(z)).collect();
        let r: Vec<&str> = self.right.iter().map(|&s| sys.s_name(s)).collect();
        let rt: Vec<&str> = self.right_tail.iter().map(|&s| sys.s_name(s)).collect();
        format!("(({})* {} . {} ({})*)", lt.join(" "), l.join(" "), r.join(" "), rt.join(" "))
    }

    fn canonicalize(&mut self) {
        reduce_to_primitive(&mut self.left_tail);
        reduce_to_primitive(&mut self.right_tail);
        // Absorb the right finite part: while its last symbol continues the
        // tail's period, move the tail boundary one step left.
        while let Some(&last) = self.right.last() {
            if last == *self.right_tail.last().expect("tail nonempty") {
                self.right.pop();
                self.right_tail.rotate_right(1);
            } else {
                break;
            }
        }
        // Absorb the left finite part: the tail is right-aligned, so its
        // periodic continuation one step right is the tail's first symbol.
        let mut start = 0usize;
        while start < self.left.len() && self.left[start] == self.left_tail[0] {
            start += 1;
            self.left_tail.rotate_left(1);
        }
        if start > 0 {
            self.left.drain(..start);
        }
    }
}

/// Replaces `word` by its shortest period (e.g. `abab` -> `ab`).
fn reduce_to_primitive<T: PartialEq + Clone>(word: &mut Vec<T>) {
    let n = word.len();
    for d in 1..n {
        if n % d == 0 && (d..n).all(|i| word[i] == word[i - d]) {
            word.truncate(d);
            return;
        }
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    a / gcd(a, b) * b
}
