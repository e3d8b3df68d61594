//! Cylinder sets: all sequences matching a fixed word on a window of indices.

use super::system::{Letter, SSymbol, ZSymbol, ZipSystem};
use super::{SymbolicError, ZipSequence};

/// The cylinder `[w_0 .. w_l]` anchored at `start`: membership means
/// `x_{start+j} = w_j` for all j. Entries at negative absolute index are
/// Z-symbols, entries at nonnegative index S-symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CylinderSpec {
    start: i64,
    word: Vec<Letter>,
}

impl CylinderSpec {
    pub fn new(start: i64, word: Vec<Letter>) -> Result<Self, SymbolicError> {
        if word.is_empty() {
            return Err(SymbolicError::InvalidCylinder("empty word".into()));
        }
        for (j, letter) in word.iter().enumerate() {
            let idx = start + j as i64;
            match (idx >= 0, letter) {
                (true, Letter::S(_)) | (false, Letter::Z(_)) => {}
                _ => {
                    return Err(SymbolicError::InvalidCylinder(format!(
                        "position {idx} must hold {} symbol",
                        if idx >= 0 { "an S" } else { "a Z" }
                    )))
                }
            }
        }
        Ok(Self { start, word })
    }

    /// Forward cylinder `[word]` at a nonnegative start index.
    pub fn forward(start: u32, word: &[SSymbol]) -> Result<Self, SymbolicError> {
        Self::new(start as i64, word.iter().copied().map(Letter::S).collect())
    }

    /// Backward cylinder ending strictly before index 0.
    pub fn backward(start: i64, word: &[ZSymbol]) -> Result<Self, SymbolicError> {
        Self::new(start, word.iter().copied().map(Letter::Z).collect())
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn word(&self) -> &[Letter] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end(&self) -> i64 {
        self.start + self.word.len() as i64 - 1
    }

    pub fn contains(&self, x: &ZipSequence) -> bool {
        self.word
            .iter()
            .enumerate()
            .all(|(j, &letter)| x.symbol_at(self.start + j as i64) == letter)
    }

    pub fn describe(&self, sys: &ZipSystem) -> String {
        let names: Vec<&str> = self
            .word
            .iter()
            .map(|l| match l {
                Letter::S(s) => sys.s_name(*s),
                Letter::Z(z) => sys.z_name(*z),
            })
            .collect();
        format!("[{}]@{}", names.join(" "), self.start)
    }
}

/// Enumerates every cylinder of the given word length and start index.
pub fn enumerate_cylinders(
    sys: &ZipSystem,
    len: usize,
    start: i64,
) -> Result<Vec<CylinderSpec>, SymbolicError> {
    if len == 0 {
        return Err(SymbolicError::InvalidCylinder("empty word".into()));
    }
    let mut out = vec![Vec::new()];
    for j in 0..len {
        let idx = start + j as i64;
        let mut next = Vec::new();
        for prefix in &out {
            if idx >= 0 {
                for s in sys.s_symbols() {
                    let mut w = prefix.clone();
                    w.push(Letter::S(s));
                    next.push(w);
                }
            } else {
                for z in sys.z_symbols() {
                    let mut w = prefix.clone();
                    w.push(Letter::Z(z));
                    next.push(w);
                }
            }
        }
        out = next;
    }
    out.into_iter().map(|w| CylinderSpec::new(start, w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_system() -> ZipSystem {
        ZipSystem::new(
            vec!["1".into(), "2".into(), "1p".into(), "2p".into()],
            vec!["a".into(), "b".into()],
            vec![0, 1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn membership_is_positionwise() {
        let sys = example_system();
        // (ab)* . (12)*, the period-2 point.
        let x = ZipSequence::periodic_from_word(&sys, &[SSymbol(0), SSymbol(1)]).unwrap();
        let c = CylinderSpec::forward(0, &[SSymbol(0), SSymbol(1)]).unwrap();
        assert!(c.contains(&x));

        let mismatch = CylinderSpec::backward(-1, &[ZSymbol(1)]).unwrap();
        // x_{-1} = tau(2) = b, so [b]@-1 contains x but [a]@-1 does not.
        assert!(mismatch.contains(&x));
        let a_at_m1 = CylinderSpec::backward(-1, &[ZSymbol(0)]).unwrap();
        assert!(!a_at_m1.contains(&x));
    }

    #[test]
    fn extension_by_matching_symbol_preserves_membership() {
        let sys = example_system();
        let x = ZipSequence::periodic_from_word(&sys, &[SSymbol(0), SSymbol(1)]).unwrap();
        let c = CylinderSpec::forward(0, &[SSymbol(0)]).unwrap();
        assert!(c.contains(&x));
        let extended = match x.symbol_at(1) {
            Letter::S(s) => CylinderSpec::forward(0, &[SSymbol(0), s]).unwrap(),
            _ => unreachable!(),
        };
        assert!(extended.contains(&x));
    }

    #[test]
    fn alphabet_sign_rule_enforced() {
        assert!(CylinderSpec::new(-1, vec![Letter::S(SSymbol(0))]).is_err());
        assert!(CylinderSpec::new(0, vec![Letter::Z(ZSymbol(0))]).is_err());
        // Straddling cylinders switch alphabets at index 0.
        assert!(CylinderSpec::new(-1, vec![Letter::Z(ZSymbol(0)), Letter::S(SSymbol(0))]).is_ok());
    }

    #[test]
    fn enumeration_counts_follow_position_alphabets() {
        let sys = example_system();
        assert_eq!(enumerate_cylinders(&sys, 2, 0).unwrap().len(), 16);
        assert_eq!(enumerate_cylinders(&sys, 2, -2).unwrap().len(), 4);
        assert_eq!(enumerate_cylinders(&sys, 2, -1).unwrap().len(), 8);
    }
}
