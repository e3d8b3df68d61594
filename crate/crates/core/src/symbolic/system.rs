//! Alphabet pair (S, Z) with the surjection `tau: S -> Z`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SymbolicError;

/// Symbol of the forward alphabet S, stored as an index into the declared order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SSymbol(pub u16);

/// Symbol of the backward alphabet Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ZSymbol(pub u16);

/// A single sequence entry: S on nonnegative indices, Z on negative ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    S(SSymbol),
    Z(ZSymbol),
}

/// Textual form of a [`ZipSystem`], the on-disk configuration format.
///
/// Example: `{"S": ["1","2","1p","2p"], "Z": ["a","b"],
/// "tau": {"1":"a","1p":"a","2":"b","2p":"b"}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZipSystemConfig {
    #[serde(rename = "S")]
    pub s: Vec<String>,
    #[serde(rename = "Z")]
    pub z: Vec<String>,
    pub tau: BTreeMap<String, String>,
}

/// Alphabet pair (S, Z) together with the surjection `tau` and its fibers.
///
/// The declared order of each alphabet is the total order used everywhere
/// ("lexicographic" enumeration of blocks, tie-breaking, canonical sorting).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZipSystem {
    s_names: Vec<String>,
    z_names: Vec<String>,
    tau: Vec<ZSymbol>,
    fibers: Vec<Vec<SSymbol>>,
}

impl ZipSystem {
    /// Builds a system from declared alphabets and `tau` given as index pairs
    /// (`tau[i]` is the Z-index of the image of the i-th S symbol).
    pub fn new(
        s_names: Vec<String>,
        z_names: Vec<String>,
        tau_idx: Vec<u16>,
    ) -> Result<Self, SymbolicError> {
        if s_names.is_empty() || z_names.is_empty() {
            return Err(SymbolicError::InvalidSystem("alphabets must be nonempty".into()));
        }
        if z_names.len() > s_names.len() {
            return Err(SymbolicError::InvalidSystem(format!(
                "#Z = {} exceeds #S = {}",
                z_names.len(),
                s_names.len()
            )));
        }
        if s_names.len() > u16::MAX as usize || z_names.len() > u16::MAX as usize {
            return Err(SymbolicError::InvalidSystem("alphabet too large".into()));
        }
        for (names, which) in [(&s_names, "S"), (&z_names, "Z")] {
            let mut sorted = names.to_vec();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != names.len() {
                return Err(SymbolicError::InvalidSystem(format!(
                    "duplicate symbol name in {which}"
                )));
            }
        }
        if tau_idx.len() != s_names.len() {
            return Err(SymbolicError::InvalidSystem("tau must be total on S".into()));
        }
        let mut fibers = vec![Vec::new(); z_names.len()];
        let mut tau = Vec::with_capacity(tau_idx.len());
        for (i, &zi) in tau_idx.iter().enumerate() {
            let z = *z_names
                .get(zi as usize)
                .map(|_| &zi)
                .ok_or_else(|| SymbolicError::InvalidSystem(format!("tau image {zi} not in Z")))?;
            tau.push(ZSymbol(z));
            fibers[zi as usize].push(SSymbol(i as u16));
        }
        if fibers.iter().any(Vec::is_empty) {
            return Err(SymbolicError::InvalidSystem("tau is not surjective onto Z".into()));
        }
        Ok(Self { s_names, z_names, tau, fibers })
    }

    pub fn from_config(cfg: &ZipSystemConfig) -> Result<Self, SymbolicError> {
        let z_index: BTreeMap<&str, u16> = cfg
            .z
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as u16))
            .collect();
        let mut tau_idx = Vec::with_capacity(cfg.s.len());
        for name in &cfg.s {
            let img = cfg.tau.get(name).ok_or_else(|| {
                SymbolicError::InvalidSystem(format!("tau undefined on symbol `{name}`"))
            })?;
            let zi = z_index.get(img.as_str()).ok_or_else(|| {
                SymbolicError::InvalidSystem(format!("tau(`{name}`) = `{img}` is not in Z"))
            })?;
            tau_idx.push(*zi);
        }
        Self::new(cfg.s.clone(), cfg.z.clone(), tau_idx)
    }

    pub fn to_config(&self) -> ZipSystemConfig {
        ZipSystemConfig {
            s: self.s_names.clone(),
            z: self.z_names.clone(),
            tau: self
                .s_names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), self.z_names[self.tau[i].0 as usize].clone()))
                .collect(),
        }
    }

    /// The doubling-map system: S = {0, 1}, Z = {a}, tau constant.
    pub fn doubling() -> Self {
        Self::new(vec!["0".into(), "1".into()], vec!["a".into()], vec![0, 0])
            .expect("doubling system is valid")
    }

    pub fn s_len(&self) -> usize {
        self.s_names.len()
    }

    pub fn z_len(&self) -> usize {
        self.z_names.len()
    }

    pub fn s_symbols(&self) -> impl Iterator<Item = SSymbol> + '_ {
        (0..self.s_len() as u16).map(SSymbol)
    }

    pub fn z_symbols(&self) -> impl Iterator<Item = ZSymbol> + '_ {
        (0..self.z_len() as u16).map(ZSymbol)
    }

    pub fn tau(&self, s: SSymbol) -> ZSymbol {
        self.tau[s.0 as usize]
    }

    /// Preimages of `z` under tau, in declared order.
    pub fn fiber(&self, z: ZSymbol) -> &[SSymbol] {
        &self.fibers[z.0 as usize]
    }

    pub fn s_name(&self, s: SSymbol) -> &str {
        &self.s_names[s.0 as usize]
    }

    pub fn z_name(&self, z: ZSymbol) -> &str {
        &self.z_names[z.0 as usize]
    }

    pub fn s_by_name(&self, name: &str) -> Option<SSymbol> {
        self.s_names.iter().position(|n| n == name).map(|i| SSymbol(i as u16))
    }

    pub fn z_by_name(&self, name: &str) -> Option<ZSymbol> {
        self.z_names.iter().position(|n| n == name).map(|i| ZSymbol(i as u16))
    }

    /// Position-wise image of an S-word under tau.
    pub fn tau_apply(&self, word: &[SSymbol]) -> Result<Vec<ZSymbol>, SymbolicError> {
        word.iter()
            .map(|&s| {
                if (s.0 as usize) < self.s_len() {
                    Ok(self.tau(s))
                } else {
                    Err(SymbolicError::AlphabetMismatch(format!(
                        "S-index {} out of range (#S = {})",
                        s.0,
                        self.s_len()
                    )))
                }
            })
            .collect()
    }

    /// All S-words of length `len` in lexicographic (declared) order.
    pub fn s_blocks(&self, len: usize) -> impl Iterator<Item = Vec<SSymbol>> + '_ {
        WordCounter::new(self.s_len() as u16, len).map(|w| w.into_iter().map(SSymbol).collect())
    }

    /// All Z-words of length `len` in lexicographic (declared) order.
    pub fn z_blocks(&self, len: usize) -> impl Iterator<Item = Vec<ZSymbol>> + '_ {
        WordCounter::new(self.z_len() as u16, len).map(|w| w.into_iter().map(ZSymbol).collect())
    }

    /// Renders an S-word with `.` separators, e.g. `1.2.1p`.
    pub fn format_s_word(&self, word: &[SSymbol]) -> String {
        word.iter().map(|&s| self.s_name(s)).collect::<Vec<_>>().join(".")
    }

    pub fn format_z_word(&self, word: &[ZSymbol]) -> String {
        word.iter().map(|&z| self.z_name(z)).collect::<Vec<_>>().join(".")
    }

    /// Parses a word over S. Accepts `.`, `,` or whitespace separators, or an
    /// unseparated string resolved by greedy longest-match tokenization.
    pub fn parse_s_word(&self, text: &str) -> Result<Vec<SSymbol>, SymbolicError> {
        parse_word(text, &self.s_names)
            .map(|v| v.into_iter().map(SSymbol).collect())
            .ok_or_else(|| SymbolicError::AlphabetMismatch(format!("cannot parse S-word `{text}`")))
    }

    pub fn parse_z_word(&self, text: &str) -> Result<Vec<ZSymbol>, SymbolicError> {
        parse_word(text, &self.z_names)
            .map(|v| v.into_iter().map(ZSymbol).collect())
            .ok_or_else(|| SymbolicError::AlphabetMismatch(format!("cannot parse Z-word `{text}`")))
    }
}

/// Counts words over `{0, .., base-1}` of a fixed length, lexicographically.
struct WordCounter {
    base: u16,
    current: Option<Vec<u16>>,
}

impl WordCounter {
    fn new(base: u16, len: usize) -> Self {
        let current = if base == 0 { None } else { Some(vec![0; len]) };
        Self { base, current }
    }
}

impl Iterator for WordCounter {
    type Item = Vec<u16>;

    fn next(&mut self) -> Option<Vec<u16>> {
        let word = self.current.take()?;
        let mut next = word.clone();
        let mut pos = next.len();
        loop {
            if pos == 0 {
                // Overflow: `word` was the last one. Zero-length words yield once.
                self.current = None;
                break;
            }
            pos -= 1;
            next[pos] += 1;
            if next[pos] < self.base {
                self.current = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(word)
    }
}

fn parse_word(text: &str, names: &[String]) -> Option<Vec<u16>> {
    let text = text.trim();
    if text.is_empty() {
        return Some(Vec::new());
    }
    if text.contains(['.', ',', ' ', '\t']) {
        return text
            .split(['.', ',', ' ', '\t'])
            .filter(|t| !t.is_empty())
            .map(|t| names.iter().position(|n| n == t).map(|i| i as u16))
            .collect();
    }
    // Greedy longest-match tokenization, e.g. "121p" -> ["1", "2", "1p"].
    let mut out = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let (idx, len) = names
            .iter()
            .enumerate()
            .filter(|(_, n)| rest.starts_with(n.as_str()))
            .max_by_key(|(_, n)| n.len())
            .map(|(i, n)| (i as u16, n.len()))?;
        out.push(idx);
        rest = &rest[len..];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_system() -> ZipSystem {
        // S = {1, 2, 1', 2'}, Z = {a, b}, tau(1) = tau(1') = a, tau(2) = tau(2') = b.
        ZipSystem::new(
            vec!["1".into(), "2".into(), "1p".into(), "2p".into()],
            vec!["a".into(), "b".into()],
            vec![0, 1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn tau_apply_maps_positionwise() {
        let sys = example_system();
        let word = sys.parse_s_word("1 2 1p").unwrap();
        let img = sys.tau_apply(&word).unwrap();
        assert_eq!(sys.format_z_word(&img), "a.b.a");
    }

    #[test]
    fn tau_apply_empty_word_is_empty() {
        let sys = example_system();
        assert!(sys.tau_apply(&[]).unwrap().is_empty());
    }

    #[test]
    fn tau_apply_on_doubling_system() {
        let sys = ZipSystem::doubling();
        let word = sys.parse_s_word("0 1 1 0").unwrap();
        let img = sys.tau_apply(&word).unwrap();
        assert_eq!(sys.format_z_word(&img), "a.a.a.a");
    }

    #[test]
    fn tau_must_be_surjective() {
        let err = ZipSystem::new(
            vec!["1".into(), "2".into()],
            vec!["a".into(), "b".into()],
            vec![0, 0],
        );
        assert!(err.is_err());
    }

    #[test]
    fn z_cannot_exceed_s() {
        let err = ZipSystem::new(
            vec!["1".into()],
            vec!["a".into(), "b".into()],
            vec![0],
        );
        assert!(err.is_err());
    }

    #[test]
    fn blocks_enumerate_lexicographically() {
        let sys = example_system();
        let blocks: Vec<String> = sys.s_blocks(1).map(|w| sys.format_s_word(&w)).collect();
        assert_eq!(blocks, ["1", "2", "1p", "2p"]);
        assert_eq!(sys.s_blocks(2).count(), 16);
        let z2: Vec<String> = sys.z_blocks(2).map(|w| sys.format_z_word(&w)).collect();
        assert_eq!(z2, ["a.a", "a.b", "b.a", "b.b"]);
    }

    #[test]
    fn greedy_tokenizer_handles_primes() {
        let sys = example_system();
        let word = sys.parse_s_word("121p2p").unwrap();
        assert_eq!(sys.format_s_word(&word), "1.2.1p.2p");
    }

    #[test]
    fn config_round_trips() {
        let sys = example_system();
        let cfg = sys.to_config();
        let back = ZipSystem::from_config(&cfg).unwrap();
        assert_eq!(sys, back);
    }
}
