//! Finite-depth itinerary coding between the horseshoe and its zip shift:
//! decode boxes, the commuting-diagram check, geometric periodic orbits and
//! the entropy estimate.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Interval, Point, Rect};
use crate::horseshoe::{HorseshoeModel, ModelError};
use crate::scalar::{real, Real};
use crate::symbolic::{SSymbol, ZSymbol};

#[derive(Debug, Error)]
pub enum ConjugacyError {
    #[error("orbit escapes the strips at forward step {step}")]
    Escape { step: usize },
    #[error("invalid backward history at step {step}: {detail}")]
    History { step: usize, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

/// A finite-depth code: backward Z-word, forward S-word, and the rectangle
/// hull of `H_backward ∩ V^forward`.
#[derive(Clone, Debug)]
pub struct CodedPoint<F> {
    pub backward: Vec<ZSymbol>,
    pub forward: Vec<SSymbol>,
    pub rect: Rect<F>,
}

/// The box `H_{backward} ∩ V^{forward}`: x-extent from pulling the forward
/// word back through branch inverses, y-extent from pushing the backward
/// word forward through the legs. Nonempty for every word pair.
pub fn decode<F: Real>(
    model: &HorseshoeModel<F>,
    backward: &[ZSymbol],
    forward: &[SSymbol],
) -> Result<Rect<F>, ConjugacyError> {
    let x = match forward.split_last() {
        None => Interval::unit(),
        Some((&last, rest)) => {
            let mut interval = model.branch(last)?.domain_x;
            for &s in rest.iter().rev() {
                interval = model.branch(s)?.pull_back_x(&interval);
            }
            interval
        }
    };
    let mut y = Interval::unit();
    for &z in backward {
        y = model.push_forward_y(&y, z);
    }
    Ok(Rect::new(x, y))
}

/// Records which labeled strip each forward iterate of `p` occupies
/// (`n_fwd + 1` symbols), and the tau-images of the supplied backward
/// history (one Z-symbol per preimage choice, reversed into index order).
pub fn itinerary<F: Real>(
    model: &HorseshoeModel<F>,
    p: Point<F>,
    n_fwd: usize,
    history: &[SSymbol],
) -> Result<CodedPoint<F>, ConjugacyError> {
    let mut back_point = p;
    for (step, &label) in history.iter().enumerate() {
        back_point = model
            .apply_inverse(back_point, label)
            .map_err(|e| ConjugacyError::History { step, detail: e.to_string() })?;
    }
    let backward: Vec<ZSymbol> =
        history.iter().rev().map(|&s| model.zip_system.tau(s)).collect();

    let mut forward = Vec::with_capacity(n_fwd + 1);
    let mut cur = p;
    for step in 0..=n_fwd {
        let (next, label) = model.apply(cur).map_err(|_| ConjugacyError::Escape { step })?;
        forward.push(label);
        cur = next;
    }
    let rect = decode(model, &backward, &forward)?;
    Ok(CodedPoint { backward, forward, rect })
}

/// Result of the commuting-diagram verification, serialized as
/// `{"depth":..,"samples":..,"failures":..,"max_box_diag":..}`.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyReport {
    pub depth: usize,
    pub samples: usize,
    pub failures: usize,
    pub max_box_diag: f64,
    #[serde(skip)]
    pub failure_examples: Vec<String>,
}

/// Samples coded points at the given depth and verifies that applying the
/// map corresponds to the zip shift on the code: the forward word drops its
/// first symbol and the backward word gains its tau-image. Strip membership
/// is checked geometrically at every backward step, so mislabeled branches
/// are detected.
pub fn conjugacy_check<F: Real>(
    model: &HorseshoeModel<F>,
    depth: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<ConjugacyReport, ConjugacyError> {
    if depth == 0 {
        return Err(ConjugacyError::Numeric("depth must be >= 1".into()));
    }
    let s_len = model.zip_system.s_len() as u16;
    let z_len = model.zip_system.z_len() as u16;
    let mut failures = 0usize;
    let mut failure_examples = Vec::new();
    let mut max_diag = 0.0f64;
    for _ in 0..samples {
        let forward: Vec<SSymbol> =
            (0..depth).map(|_| SSymbol(rng.random_range(0..s_len))).collect();
        let backward: Vec<ZSymbol> =
            (0..depth).map(|_| ZSymbol(rng.random_range(0..z_len))).collect();
        let rect = decode(model, &backward, &forward)?;
        max_diag = max_diag.max(rect.diagonal().to_f64().unwrap());
        if let Err(detail) = check_sample(model, &backward, &forward, rect.center()) {
            failures += 1;
            if failure_examples.len() < 8 {
                failure_examples.push(detail);
            }
        }
    }
    Ok(ConjugacyReport { depth, samples, failures, max_box_diag: max_diag, failure_examples })
}

fn check_sample<F: Real>(
    model: &HorseshoeModel<F>,
    backward: &[ZSymbol],
    forward: &[SSymbol],
    p: Point<F>,
) -> Result<(), String> {
    let sys = &model.zip_system;
    let describe = |bw: &[ZSymbol], fw: &[SSymbol]| {
        format!("({} . {})", sys.format_z_word(bw), sys.format_s_word(fw))
    };
    let (q, label) = model
        .apply(p)
        .map_err(|e| format!("{}: {e}", describe(backward, forward)))?;
    if label != forward[0] {
        return Err(format!(
            "{}: image branch {} but code starts with {}",
            describe(backward, forward),
            sys.s_name(label),
            sys.s_name(forward[0])
        ));
    }
    // Forward window of the shifted code: the labels of the orbit of q.
    let mut cur = q;
    for (i, &expected) in forward[1..].iter().enumerate() {
        let (next, got) = model
            .apply(cur)
            .map_err(|e| format!("{}: forward step {i}: {e}", describe(backward, forward)))?;
        if got != expected {
            return Err(format!(
                "{}: forward symbol {} is {} but shifted code has {}",
                describe(backward, forward),
                i + 1,
                sys.s_name(got),
                sys.s_name(expected)
            ));
        }
        cur = next;
    }
    // Backward window: the shifted code must gain tau(s_0). Each backward
    // step checks the horizontal strip geometrically before inverting.
    let mut expected_strips = vec![sys.tau(forward[0])];
    expected_strips.extend(backward.iter().rev());
    let mut back = q;
    for (i, &z) in expected_strips.iter().enumerate() {
        match model.h_strip_of(back.y) {
            Some(strip) if strip == z => {}
            Some(strip) => {
                return Err(format!(
                    "{}: backward symbol -{} lies in H_{} but shifted code has {}",
                    describe(backward, forward),
                    i + 1,
                    sys.z_name(strip),
                    sys.z_name(z)
                ));
            }
            None => {
                return Err(format!(
                    "{}: backward iterate {} left both horizontal strips",
                    describe(backward, forward),
                    i
                ));
            }
        }
        if i + 1 < expected_strips.len() {
            let branch = sys.fiber(z)[0];
            back = model
                .apply_inverse(back, branch)
                .map_err(|e| format!("{}: backward step {i}: {e}", describe(backward, forward)))?;
        }
    }
    Ok(())
}

/// Solves the n-cycle whose orbit visits the labeled strips in word order.
/// The n-fold branch composition is affine, so the fixed point is a linear
/// solve; the orbit and residual are then verified by direct iteration.
pub fn periodic_orbit_solve<F: Real>(
    model: &HorseshoeModel<F>,
    word: &[SSymbol],
) -> Result<Point<F>, ConjugacyError> {
    if word.is_empty() {
        return Err(ConjugacyError::Numeric("empty orbit word".into()));
    }
    let mut ax = F::one();
    let mut bx = F::zero();
    let mut ay = F::one();
    let mut by = F::zero();
    for &s in word {
        let branch = model.branch(s)?;
        ax = branch.a_x * ax;
        bx = branch.a_x * bx + branch.b_x;
        ay = branch.a_y * ay;
        by = branch.a_y * by + branch.b_y;
    }
    let p = Point::new(bx / (F::one() - ax), by / (F::one() - ay));
    verify_orbit(model, p, word, real(1e-10))?;
    Ok(p)
}

pub(crate) fn verify_orbit<F: Real>(
    model: &HorseshoeModel<F>,
    p: Point<F>,
    word: &[SSymbol],
    residual_tol: F,
) -> Result<(), ConjugacyError> {
    let mut cur = p;
    for (step, &expected) in word.iter().enumerate() {
        let (next, label) =
            model.apply(cur).map_err(|_| ConjugacyError::Escape { step })?;
        if label != expected {
            return Err(ConjugacyError::Numeric(format!(
                "orbit visits {} at step {step}, expected {}",
                model.zip_system.s_name(label),
                model.zip_system.s_name(expected)
            )));
        }
        cur = next;
    }
    let residual = cur.dist(&p);
    if residual > residual_tol {
        return Err(ConjugacyError::Numeric(format!(
            "periodic residual {} exceeds {}",
            residual.to_f64().unwrap_or(f64::NAN),
            residual_tol.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

/// `log(#nonempty forward words of length k) / k`; equals `log 2N` for the
/// full horseshoe at every depth.
pub fn entropy_estimate<F: Real>(
    model: &HorseshoeModel<F>,
    depth: usize,
    cap: u64,
) -> Result<f64, ConjugacyError> {
    if depth == 0 {
        return Err(ConjugacyError::Numeric("depth must be >= 1".into()));
    }
    let tree = model.refine(depth - 1, cap)?;
    let count = tree
        .deepest_forward()
        .iter()
        .filter(|n| n.x.width() > F::zero())
        .count();
    if count == 0 {
        return Err(ConjugacyError::Numeric("no nonempty forward words".into()));
    }
    Ok((count as f64).ln() / depth as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horseshoe::HorseshoeParams;
    use crate::symbolic::DEFAULT_ENUMERATION_CAP as CAP;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> HorseshoeModel<f64> {
        HorseshoeModel::build(HorseshoeParams::new(2, 0.1).unwrap()).unwrap()
    }

    fn word(m: &HorseshoeModel<f64>, text: &str) -> Vec<SSymbol> {
        m.zip_system.parse_s_word(text).unwrap()
    }

    fn zword(m: &HorseshoeModel<f64>, text: &str) -> Vec<ZSymbol> {
        m.zip_system.parse_z_word(text).unwrap()
    }

    #[test]
    fn fixed_point_itinerary_repeats_its_branch() {
        let m = model();
        let p = periodic_orbit_solve(&m, &word(&m, "1")).unwrap();
        let code = itinerary(&m, p, 3, &[]).unwrap();
        assert_eq!(code.forward, word(&m, "1 1 1 1"));
        assert!(code.backward.is_empty());
        assert!(code.rect.contains(&p, 1e-12));
    }

    #[test]
    fn two_cycle_alternates_labels() {
        let m = model();
        let w = word(&m, "1 2");
        let p = periodic_orbit_solve(&m, &w).unwrap();
        let code = itinerary(&m, p, 3, &[]).unwrap();
        assert_eq!(code.forward, word(&m, "1 2 1 2"));
        // apply swaps the two cycle points, apply^2 fixes them.
        let (q, _) = m.apply(p).unwrap();
        let (back, _) = m.apply(q).unwrap();
        assert_abs_diff_eq!(back.x, p.x, epsilon = 1e-10);
        assert_abs_diff_eq!(back.y, p.y, epsilon = 1e-10);
        assert!(q.dist(&p) > 1e-3);
    }

    #[test]
    fn backward_history_records_tau_images() {
        let m = model();
        // The fixed point of branch 1p lies in H_b, so "1p" is a valid
        // backward choice and contributes tau(1p) = b, not a.
        let p = periodic_orbit_solve(&m, &word(&m, "1p")).unwrap();
        let one_p = m.zip_system.s_by_name("1p").unwrap();
        let code = itinerary(&m, p, 1, &[one_p]).unwrap();
        assert_eq!(code.backward, zword(&m, "b"));
        // Histories through the wrong strip are rejected.
        let one = m.zip_system.s_by_name("1").unwrap();
        assert!(matches!(
            itinerary(&m, p, 1, &[one]),
            Err(ConjugacyError::History { step: 0, .. })
        ));
    }

    #[test]
    fn solved_fixed_point_matches_closed_form() {
        let m = model();
        let p = periodic_orbit_solve(&m, &word(&m, "1")).unwrap();
        assert_abs_diff_eq!(p.x, 0.005376344086021505, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.2645161290322581, epsilon = 1e-12);
    }

    #[test]
    fn all_length_two_orbits_distinct_and_boxed() {
        let m = model();
        let words: Vec<Vec<SSymbol>> = m.zip_system.s_blocks(2).collect();
        assert_eq!(words.len(), 16);
        let mut points = Vec::new();
        for w in &words {
            let p = periodic_orbit_solve(&m, w).unwrap();
            let bw: Vec<ZSymbol> = w.iter().map(|&s| m.zip_system.tau(s)).collect();
            let rect = decode(&m, &bw, w).unwrap();
            assert!(rect.contains(&p, 1e-12), "orbit point outside its decode box");
            points.push(p);
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                assert!(points[i].dist(&points[j]) > 1e-6);
            }
        }
    }

    #[test]
    fn decode_examples() {
        let m = model();
        let v1 = decode(&m, &[], &word(&m, "1")).unwrap();
        assert_abs_diff_eq!(v1.x.lo, 0.004065040650406504, epsilon = 1e-12);
        assert_abs_diff_eq!(v1.x.hi, 0.24796747967479674, epsilon = 1e-12);
        assert_abs_diff_eq!(v1.y.lo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v1.y.hi, 1.0, epsilon = 1e-15);

        let a1 = decode(&m, &zword(&m, "a"), &word(&m, "1")).unwrap();
        assert_abs_diff_eq!(a1.y.lo, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(a1.y.hi, 0.2 + 1.0 / 4.1, epsilon = 1e-15);
        // Nesting under backward extension.
        assert!(a1.x.subset_of(&v1.x, 0.0) && a1.y.subset_of(&v1.y, 0.0));
    }

    #[test]
    fn conjugacy_check_passes_on_default_model() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let report = conjugacy_check(&m, 6, 500, &mut rng).unwrap();
        assert_eq!(report.failures, 0, "examples: {:?}", report.failure_examples);
        assert!(report.max_box_diag < 1.0);
    }

    #[test]
    fn label_swap_mutant_is_detected() {
        let mut m = model();
        // Swap the labels of V^2 and V^2p.
        let (i, j) = (1, 3);
        let tmp = m.branches[i].label;
        m.branches[i].label = m.branches[j].label;
        m.branches[j].label = tmp;
        m.branches.sort_by_key(|b| b.label);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let report = conjugacy_check(&m, 6, 500, &mut rng).unwrap();
        assert!(report.failures > 0, "label swap must break the diagram");
    }

    #[test]
    fn entropy_matches_log_2n() {
        for (n, expected) in [(1usize, 2.0f64), (2, 4.0), (3, 6.0)] {
            let m: HorseshoeModel<f64> =
                HorseshoeModel::build(HorseshoeParams::new(n, 0.1).unwrap()).unwrap();
            for depth in 1..=4 {
                let h = entropy_estimate(&m, depth, CAP).unwrap();
                assert_abs_diff_eq!(h, expected.ln(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coded_box_diagonal_obeys_continuity_bound() {
        let m = model();
        let depth = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beta = m.params.beta();
        let mu = 0.09;
        for _ in 0..50 {
            let fw: Vec<SSymbol> =
                (0..depth).map(|_| SSymbol(rng.random_range(0..4))).collect();
            let bw: Vec<ZSymbol> =
                (0..depth).map(|_| ZSymbol(rng.random_range(0..2))).collect();
            let rect = decode(&m, &bw, &fw).unwrap();
            let bound = (beta.powi(depth as i32 - 1) + beta.powi(depth as i32)) / (1.0 - mu);
            assert!(
                rect.diagonal() <= bound + 1e-12,
                "diag {} > bound {}",
                rect.diagonal(),
                bound
            );
        }
    }

    #[test]
    fn distinct_codes_decode_to_disjoint_boxes() {
        let m = model();
        let words: Vec<Vec<SSymbol>> = m.zip_system.s_blocks(2).collect();
        for (i, w1) in words.iter().enumerate() {
            for w2 in &words[i + 1..] {
                let r1 = decode(&m, &[], w1).unwrap();
                let r2 = decode(&m, &[], w2).unwrap();
                assert!(r1.x.disjoint_from(&r2.x), "forward words must separate strips");
            }
        }
    }
}
