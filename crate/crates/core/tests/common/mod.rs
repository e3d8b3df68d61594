//! Shared generators for the integration suites.

use proptest::prelude::*;
use rand::Rng;

use zipshoe_core::geometry::{GridSpec, LipschitzCurve, Orientation, Strip};
use zipshoe_core::symbolic::{SSymbol, ZSymbol, ZipSequence, ZipSystem};

/// The 2-to-1 system with tau(1) = tau(1p) = a, tau(2) = tau(2p) = b.
pub fn paired_system() -> ZipSystem {
    ZipSystem::new(
        vec!["1".into(), "2".into(), "1p".into(), "2p".into()],
        vec!["a".into(), "b".into()],
        vec![0, 1, 0, 1],
    )
    .unwrap()
}

/// Proptest strategy for eventually periodic sequences over a system with
/// the given alphabet sizes.
pub fn arb_sequence(s_len: u16, z_len: u16) -> impl Strategy<Value = ZipSequence> {
    (
        prop::collection::vec(0..z_len, 1..4),
        prop::collection::vec(0..z_len, 0..5),
        prop::collection::vec(0..s_len, 0..5),
        prop::collection::vec(0..s_len, 1..4),
    )
        .prop_map(|(lt, l, r, rt)| {
            ZipSequence::new(
                lt.into_iter().map(ZSymbol).collect(),
                l.into_iter().map(ZSymbol).collect(),
                r.into_iter().map(SSymbol).collect(),
                rt.into_iter().map(SSymbol).collect(),
            )
            .unwrap()
        })
}

/// Random eventually periodic sequence (rand-based, for counted sample
/// loops).
pub fn random_sequence(rng: &mut impl Rng, s_len: u16, z_len: u16) -> ZipSequence {
    let zs = |rng: &mut dyn rand::RngCore, n: usize| -> Vec<ZSymbol> {
        (0..n).map(|_| ZSymbol(rng.random_range(0..z_len))).collect()
    };
    let ss = |rng: &mut dyn rand::RngCore, n: usize| -> Vec<SSymbol> {
        (0..n).map(|_| SSymbol(rng.random_range(0..s_len))).collect()
    };
    let lt = rng.random_range(1..4);
    let l = rng.random_range(0..5);
    let r = rng.random_range(0..5);
    let rt = rng.random_range(1..4);
    ZipSequence::new(zs(rng, lt), zs(rng, l), ss(rng, r), ss(rng, rt)).unwrap()
}

pub const STRIP_KNOTS: usize = 17;

/// Random Lipschitz polyline knots: a bounded-slope walk clamped inside
/// `[floor, ceil]` (clamping preserves the Lipschitz bound).
pub fn random_knots(rng: &mut impl Rng, mu: f64, floor: f64, ceil: f64) -> Vec<f64> {
    let dt = 1.0 / (STRIP_KNOTS - 1) as f64;
    let mut v = rng.random_range(floor..ceil);
    let mut knots = Vec::with_capacity(STRIP_KNOTS);
    for _ in 0..STRIP_KNOTS {
        knots.push(v);
        v = (v + rng.random_range(-mu * dt..=mu * dt)).clamp(floor, ceil);
    }
    knots
}

/// Random strip with `mu`-Lipschitz piecewise-linear boundaries and a
/// strictly positive gap.
pub fn random_strip(
    rng: &mut impl Rng,
    orientation: Orientation,
    mu: f64,
    grid: &GridSpec,
) -> Strip<f64> {
    let gap = rng.random_range(0.01..0.12);
    let lower = random_knots(rng, mu, 0.02, 0.85);
    let upper: Vec<f64> = lower.iter().map(|v| (v + gap).min(0.97)).collect();
    Strip::new(
        LipschitzCurve::piecewise_linear(orientation, lower, mu, grid).unwrap(),
        LipschitzCurve::piecewise_linear(orientation, upper, mu, grid).unwrap(),
        grid,
    )
    .unwrap()
}
