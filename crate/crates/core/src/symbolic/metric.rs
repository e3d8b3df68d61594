//! Exact metric on the zip shift space: `d(x, y) = 2^(-M)` with
//! `M = min { |i| : x_i != y_i }`, and `d(x, x) = 0`.

use std::cmp::Ordering;
use std::fmt;

use super::ZipSequence;

/// A distance value of the form 0 or 2^(-m), kept exact.
///
/// Ordering follows the rational value: 0 is least, and among powers a larger
/// exponent means a smaller distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DyadicDistance {
    Zero,
    /// The value 2^(-m).
    PowHalf(u32),
}

impl DyadicDistance {
    pub const ONE: DyadicDistance = DyadicDistance::PowHalf(0);
    pub const HALF: DyadicDistance = DyadicDistance::PowHalf(1);

    pub fn pow_half(m: u32) -> Self {
        DyadicDistance::PowHalf(m)
    }

    pub fn is_zero(self) -> bool {
        matches!(self, DyadicDistance::Zero)
    }

    /// The separating index M, if the distance is nonzero.
    pub fn exponent(self) -> Option<u32> {
        match self {
            DyadicDistance::Zero => None,
            DyadicDistance::PowHalf(m) => Some(m),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            DyadicDistance::Zero => 0.0,
            DyadicDistance::PowHalf(m) => 0.5f64.powi(m as i32),
        }
    }
}

impl PartialOrd for DyadicDistance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicDistance {
    fn cmp(&self, other: &Self) -> Ordering {
        use DyadicDistance::*;
        match (self, other) {
            (Zero, Zero) => Ordering::Equal,
            (Zero, PowHalf(_)) => Ordering::Less,
            (PowHalf(_), Zero) => Ordering::Greater,
            // 2^(-a) < 2^(-b) iff a > b.
            (PowHalf(a), PowHalf(b)) => b.cmp(a),
        }
    }
}

impl fmt::Display for DyadicDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DyadicDistance::Zero => write!(f, "0"),
            DyadicDistance::PowHalf(0) => write!(f, "1"),
            DyadicDistance::PowHalf(m) => write!(f, "2^-{m}"),
        }
    }
}

/// Exact distance between two sequences.
pub fn distance(x: &ZipSequence, y: &ZipSequence) -> DyadicDistance {
    if x == y {
        // Equality is decidable on canonical forms; M is undefined there, so
        // the metric is extended by d(x, x) = 0.
        return DyadicDistance::Zero;
    }
    let bound = x.agreement_bound(y);
    for m in 0..=bound {
        let i = m as i64;
        if x.symbol_at(i) != y.symbol_at(i) || (m > 0 && x.symbol_at(-i) != y.symbol_at(-i)) {
            return DyadicDistance::PowHalf(m as u32);
        }
    }
    unreachable!("canonically distinct sequences differ within the agreement bound")
}

/// The separating index `M(x, y)`, if any.
pub fn separation_index(x: &ZipSequence, y: &ZipSequence) -> Option<u32> {
    distance(x, y).exponent()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{SSymbol, ZSymbol, ZipSystem};

    fn example_system() -> ZipSystem {
        ZipSystem::new(
            vec!["1".into(), "2".into(), "1p".into(), "2p".into()],
            vec!["a".into(), "b".into()],
            vec![0, 1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn equal_sequences_have_distance_zero() {
        let sys = example_system();
        let x = ZipSequence::periodic_from_word(&sys, &[SSymbol(0), SSymbol(1)]).unwrap();
        assert_eq!(distance(&x, &x), DyadicDistance::Zero);
    }

    #[test]
    fn first_difference_at_index_four() {
        let sys = example_system();
        // Agree on |i| <= 3, differ at i = 4.
        let x = ZipSequence::periodic_from_word(&sys, &[SSymbol(0); 8]).unwrap();
        let y = ZipSequence::new(
            sys.tau_apply(&[SSymbol(0)]).unwrap(),
            vec![],
            vec![SSymbol(0), SSymbol(0), SSymbol(0), SSymbol(0), SSymbol(1)],
            vec![SSymbol(0)],
        )
        .unwrap();
        assert_eq!(distance(&x, &y), DyadicDistance::pow_half(4));
    }

    #[test]
    fn difference_at_index_zero_gives_distance_one() {
        let sys = example_system();
        let x = ZipSequence::periodic_from_word(&sys, &[SSymbol(0), SSymbol(1)]).unwrap();
        let y = ZipSequence::periodic_from_word(&sys, &[SSymbol(2), SSymbol(3)]).unwrap();
        // Both have left (ab)*, but differ at index 0.
        assert_eq!(x.symbol_at(-1), y.symbol_at(-1));
        assert_eq!(distance(&x, &y), DyadicDistance::ONE);
    }

    #[test]
    fn backward_difference_detected() {
        let sys = example_system();
        // Same forward tail (1)*, left tails (a)* versus (ba)*: first
        // difference on the left.
        let x = ZipSequence::new(vec![ZSymbol(0)], vec![], vec![], vec![SSymbol(0)]).unwrap();
        let y =
            ZipSequence::new(vec![ZSymbol(1), ZSymbol(0)], vec![], vec![], vec![SSymbol(0)])
                .unwrap();
        let d = distance(&x, &y);
        assert_eq!(d.exponent(), Some(2));
        let _ = sys;
    }

    #[test]
    fn ordering_matches_rational_values() {
        use DyadicDistance as D;
        assert!(D::Zero < D::pow_half(10));
        assert!(D::pow_half(3) < D::pow_half(2));
        assert!(D::ONE > D::HALF);
        assert_eq!(D::pow_half(2).to_f64(), 0.25);
    }
}
