//! The zip shift map and its orbit machinery: shift, preimages, periodic
//! points, dense orbits and expansivity witnesses.

use super::cylinder::CylinderSpec;
use super::metric::{distance, separation_index, DyadicDistance};
use super::system::{Letter, SSymbol, ZSymbol, ZipSystem};
use super::{SymbolicError, ZipSequence};

impl ZipSystem {
    /// One step of the zip shift: drops `x_0` forward and pushes `tau(x_0)`
    /// into the backward half.
    pub fn shift(&self, x: &ZipSequence) -> ZipSequence {
        let mut right = x.right().to_vec();
        if right.is_empty() {
            right = x.right_tail().to_vec();
        }
        let s0 = right.remove(0);
        let mut left = x.left().to_vec();
        left.push(self.tau(s0));
        ZipSequence::new(x.left_tail().to_vec(), left, right, x.right_tail().to_vec())
            .expect("tails preserved")
    }

    pub fn shift_n(&self, x: &ZipSequence, n: usize) -> ZipSequence {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.shift(&y);
        }
        y
    }

    /// All `x` with `shift(x) = y`; exactly one per preimage of `y_{-1}`
    /// under tau, in declared symbol order.
    pub fn preimages(&self, y: &ZipSequence) -> Vec<ZipSequence> {
        let z_last = match y.symbol_at(-1) {
            Letter::Z(z) => z,
            Letter::S(_) => unreachable!("negative indices hold Z symbols"),
        };
        let mut left = y.left().to_vec();
        if left.is_empty() {
            left = y.left_tail().to_vec();
        }
        left.pop();
        self.fiber(z_last)
            .iter()
            .map(|&s| {
                let mut right = Vec::with_capacity(y.right().len() + 1);
                right.push(s);
                right.extend_from_slice(y.right());
                ZipSequence::new(
                    y.left_tail().to_vec(),
                    left.clone(),
                    right,
                    y.right_tail().to_vec(),
                )
                .expect("tails preserved")
            })
            .collect()
    }

    /// All chains of `depth` successive preimages (the full backward tree).
    pub fn iterated_preimages(
        &self,
        y: &ZipSequence,
        depth: usize,
        cap: u64,
    ) -> Result<Vec<ZipSequence>, SymbolicError> {
        let mut level = vec![y.clone()];
        for _ in 0..depth {
            let next_len = level.len() as u64 * self.s_len() as u64;
            if next_len > cap {
                return Err(SymbolicError::EnumerationCap { required: next_len, cap });
            }
            level = level.iter().flat_map(|x| self.preimages(x)).collect();
        }
        Ok(level)
    }

    /// All fixed points of `shift^n`: one per S-word of length `n`, in
    /// lexicographic order of the generating word.
    pub fn enumerate_periodic(
        &self,
        n: usize,
        cap: u64,
    ) -> Result<Vec<ZipSequence>, SymbolicError> {
        if n == 0 {
            return Err(SymbolicError::InvalidCylinder("period must be >= 1".into()));
        }
        let count = (self.s_len() as u128)
            .checked_pow(n as u32)
            .filter(|&c| c <= cap as u128)
            .ok_or(SymbolicError::EnumerationCap { required: u64::MAX, cap })?;
        let mut out = Vec::with_capacity(count as usize);
        for word in self.s_blocks(n) {
            out.push(ZipSequence::periodic_from_word(self, &word)?);
        }
        Ok(out)
    }

    /// A periodic point inside the given cylinder. Free positions take the
    /// least symbol; preimage choices take the least fiber element.
    pub fn periodic_point_in_cylinder(
        &self,
        c: &CylinderSpec,
    ) -> Result<ZipSequence, SymbolicError> {
        let i = c.start();
        let end = c.end();
        let word: Vec<SSymbol> = if i >= 0 {
            // Forward window: repeat the word w_0 .. s_i .. s_{i+l}.
            (0..=end)
                .map(|q| match letter_at(c, q) {
                    Some(Letter::S(s)) => s,
                    _ => SSymbol(0),
                })
                .collect()
        } else if end < 0 {
            // Backward window: build an S-word of length -i whose tau-image
            // repeats through the window.
            let n = (-i) as usize;
            (0..n)
                .map(|j| {
                    let q = i + j as i64;
                    match letter_at(c, q) {
                        Some(Letter::Z(z)) => self.fiber(z)[0],
                        _ => SSymbol(0),
                    }
                })
                .collect()
        } else {
            // Straddling window: splice the forward part with fiber choices
            // for the backward part; period l+1.
            let n = (end + 1 + (-i)) as usize;
            (0..n)
                .map(|p| {
                    let p = p as i64;
                    if p <= end {
                        match letter_at(c, p) {
                            Some(Letter::S(s)) => s,
                            _ => SSymbol(0),
                        }
                    } else {
                        // Position p realizes backward index p - n.
                        match letter_at(c, p - n as i64) {
                            Some(Letter::Z(z)) => self.fiber(z)[0],
                            _ => SSymbol(0),
                        }
                    }
                })
                .collect()
        };
        let p = ZipSequence::periodic_from_word(self, &word)?;
        debug_assert!(c.contains(&p), "constructed point must lie in the cylinder");
        Ok(p)
    }

    /// The transitive point: the forward half concatenates every S-block of
    /// length 1..=n in lexicographic order; the backward half holds every
    /// Z-block, arranged so the blocks of each length end at index -1.
    pub fn dense_orbit_prefix(&self, n: usize, cap: u64) -> Result<ZipSequence, SymbolicError> {
        if n == 0 {
            return Err(SymbolicError::InvalidCylinder("depth must be >= 1".into()));
        }
        let mut total: u128 = 0;
        for j in 1..=n {
            total += j as u128 * (self.s_len() as u128).pow(j as u32);
            if total > cap as u128 {
                return Err(SymbolicError::EnumerationCap { required: total as u64, cap });
            }
        }
        let mut right = Vec::new();
        for j in 1..=n {
            for block in self.s_blocks(j) {
                right.extend(block);
            }
        }
        let mut left = Vec::new();
        for j in (1..=n).rev() {
            let blocks: Vec<Vec<ZSymbol>> = self.z_blocks(j).collect();
            for block in blocks.into_iter().rev() {
                left.extend(block);
            }
        }
        ZipSequence::new(vec![ZSymbol(0)], left, right, vec![SSymbol(0)])
    }

    /// For distinct `x, y`, an iterate `n` with
    /// `d(shift^n(x), shift^n(y)) = 1`. Backward witnesses (`n < 0`) hold for
    /// every preimage choice because distinct Z-symbols have disjoint fibers.
    pub fn expansivity_witness(&self, x: &ZipSequence, y: &ZipSequence) -> Option<i64> {
        let m = separation_index(x, y)?;
        let i = m as i64;
        if x.symbol_at(i) != y.symbol_at(i) {
            Some(i)
        } else {
            Some(-i)
        }
    }

    /// Distance between the sets of `depth`-fold preimages: the minimum of
    /// `d` over all preimage pairs.
    pub fn preimage_set_distance(
        &self,
        x: &ZipSequence,
        y: &ZipSequence,
        depth: usize,
        cap: u64,
    ) -> Result<DyadicDistance, SymbolicError> {
        let xs = self.iterated_preimages(x, depth, cap)?;
        let ys = self.iterated_preimages(y, depth, cap)?;
        if (xs.len() as u64).saturating_mul(ys.len() as u64) > cap {
            return Err(SymbolicError::EnumerationCap {
                required: xs.len() as u64 * ys.len() as u64,
                cap,
            });
        }
        Ok(xs
            .iter()
            .flat_map(|a| ys.iter().map(move |b| distance(a, b)))
            .min()
            .unwrap_or(DyadicDistance::Zero))
    }

    /// Searches preimage depths in increasing order for a chain from `x`
    /// into the cylinder; returns the depth and the witness preimage.
    ///
    /// A depth-d preimage of `x` carries the original symbol `x_{q-d}` at
    /// index q, except on `0 <= q < d` where it carries a free choice from
    /// the fiber of `x_{q-d}`. That makes membership at depth d decidable
    /// without materializing the preimage tree.
    pub fn pre_transitive_witness(
        &self,
        x: &ZipSequence,
        c: &CylinderSpec,
        max_depth: usize,
    ) -> Option<(usize, ZipSequence)> {
        for d in 0..=max_depth {
            if !self.admissible_preimage_depth(x, c, d) {
                continue;
            }
            let w = self.preimage_at_depth(x, c, d);
            if c.contains(&w) && self.shift_n(&w, d) == *x {
                return Some((d, w));
            }
        }
        None
    }

    fn admissible_preimage_depth(&self, x: &ZipSequence, c: &CylinderSpec, d: usize) -> bool {
        let d = d as i64;
        c.word().iter().enumerate().all(|(j, &letter)| {
            let q = c.start() + j as i64;
            let orig = x.symbol_at(q - d);
            match letter {
                Letter::S(s) if q >= d => orig == Letter::S(s),
                Letter::S(s) => orig == Letter::Z(self.tau(s)),
                Letter::Z(z) => orig == Letter::Z(z),
            }
        })
    }

    /// Builds the depth-d preimage whose free choices match the cylinder on
    /// its window and take least fiber elements elsewhere.
    fn preimage_at_depth(&self, x: &ZipSequence, c: &CylinderSpec, d: usize) -> ZipSequence {
        let mut new_right = Vec::with_capacity(d + x.right().len());
        for t in 0..d {
            let q = t as i64;
            let z = match x.symbol_at(q - d as i64) {
                Letter::Z(z) => z,
                Letter::S(_) => unreachable!("index below zero holds a Z symbol"),
            };
            let in_window = q >= c.start() && q <= c.end();
            let chosen = if in_window {
                match c.word()[(q - c.start()) as usize] {
                    Letter::S(s) => s,
                    Letter::Z(_) => self.fiber(z)[0],
                }
            } else {
                self.fiber(z)[0]
            };
            new_right.push(chosen);
        }
        new_right.extend_from_slice(x.right());
        let mut left = x.left().to_vec();
        while left.len() < d {
            let mut grown = x.left_tail().to_vec();
            grown.extend(left);
            left = grown;
        }
        left.truncate(left.len() - d);
        ZipSequence::new(x.left_tail().to_vec(), left, new_right, x.right_tail().to_vec())
            .expect("tails preserved")
    }
}

fn letter_at(c: &CylinderSpec, q: i64) -> Option<Letter> {
    let j = q - c.start();
    if j < 0 || j >= c.len() as i64 {
        None
    } else {
        Some(c.word()[j as usize])
    }
}
