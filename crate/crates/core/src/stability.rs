//! Perturbation experiment: apply a small smooth displacement to the branch
//! outputs, recover the curved strips, re-verify the strip and cone
//! conditions, and exhibit the finite-depth conjugacy with the base model
//! through their common symbolic tree.
//!
//! The displacement is evaluated at the output point, so all branches of a
//! leg share one curved target strip and the strip-mapping conditions stay
//! exact. Vertical strip boundaries are recovered by per-column bisection of
//! the image-boundary equation `g_x(x, y) = 0 or 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conjugacy::ConjugacyError;
use crate::geometry::{Interval, Point};
use crate::horseshoe::{
    cone_check, BackwardNode, BranchMap, ConeParams, ForwardNode, HorseshoeModel, Jacobian, Leg,
    ModelError, RefinementTree,
};
use crate::report::{CheckReport, ConeReport};
use crate::scalar::{real, Real};
use crate::symbolic::{SSymbol, ZSymbol};

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("perturbation too large: {0}")]
    TooLarge(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Conjugacy(#[from] ConjugacyError),
}

/// Smooth displacement field added to branch outputs:
/// `(eta c1 sin(2 pi y), eta c2 sin(2 pi x))` at the output point `(x, y)`.
#[derive(Clone, Copy, Debug)]
pub struct ShapeParams<F> {
    pub c1: F,
    pub c2: F,
}

impl<F: Real> Default for ShapeParams<F> {
    fn default() -> Self {
        Self { c1: F::one(), c2: F::one() }
    }
}

impl<F: Real> ShapeParams<F> {
    /// Bound on the displacement magnitude per unit eta.
    pub fn value_bound(&self) -> F {
        self.c1.abs().max(self.c2.abs())
    }

    /// Bound on the displacement derivative per unit eta.
    pub fn derivative_bound(&self) -> F {
        self.value_bound() * tau::<F>()
    }
}

/// On-disk form: `{"eta":0.001,"shape":"sin2pi","c1":1.0,"c2":1.0}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub eta: f64,
    pub shape: String,
    pub c1: f64,
    pub c2: f64,
}

fn tau<F: Real>() -> F {
    real(std::f64::consts::TAU)
}

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 33;
const BISECT_MAX_ITER: usize = 80;

/// Vertical strip with curved boundaries, sampled on a uniform y-grid:
/// `lower[i] = v_lo(y_i)`, `upper[i] = v_hi(y_i)`.
#[derive(Clone, Debug)]
pub struct PerturbedBranch<F> {
    pub label: SSymbol,
    pub leg: Leg,
    pub lower: Vec<F>,
    pub upper: Vec<F>,
}

impl<F: Real> PerturbedBranch<F> {
    pub fn hull(&self) -> Interval<F> {
        Interval::new(
            self.lower.iter().copied().fold(F::infinity(), F::min),
            self.upper.iter().copied().fold(F::neg_infinity(), F::max),
        )
    }
}

/// Horizontal strip boundary of the perturbed model. The displaced image of
/// the line `y = level` is the graph
/// `y'(x') = level + eta c2 sin(2 pi (x' - eta c1 sin(2 pi level)))`.
#[derive(Clone, Copy, Debug)]
pub struct HBoundary<F> {
    pub level: F,
    shift: F,
}

impl<F: Real> HBoundary<F> {
    fn new(level: F, eta: F, shape: &ShapeParams<F>) -> Self {
        Self { level, shift: eta * shape.c1 * (tau::<F>() * level).sin() }
    }

    pub fn eval(&self, x: F, eta: F, shape: &ShapeParams<F>) -> F {
        self.level + eta * shape.c2 * (tau::<F>() * (x - self.shift)).sin()
    }
}

#[derive(Clone, Debug)]
pub struct PerturbedModel<F: Real> {
    pub base: HorseshoeModel<F>,
    pub eta: F,
    pub shape: ShapeParams<F>,
    pub branches: Vec<PerturbedBranch<F>>,
    /// Boundary curve pairs (lower, upper) of the perturbed `H_a`, `H_b`.
    pub h_bounds: Vec<(HBoundary<F>, HBoundary<F>)>,
    samples: usize,
}

/// Builds the perturbed model with default boundary sampling.
pub fn perturb<F: Real>(
    model: &HorseshoeModel<F>,
    eta: F,
    shape: ShapeParams<F>,
) -> Result<PerturbedModel<F>, StabilityError> {
    PerturbedModel::build(model, eta, shape, DEFAULT_BOUNDARY_SAMPLES)
}

impl<F: Real> PerturbedModel<F> {
    pub fn build(
        model: &HorseshoeModel<F>,
        eta: F,
        shape: ShapeParams<F>,
        samples: usize,
    ) -> Result<Self, StabilityError> {
        if eta < F::zero() {
            return Err(StabilityError::Numeric("eta must be nonnegative".into()));
        }
        let samples = samples.max(3);
        let mut branches = Vec::with_capacity(model.branches.len());
        for b in &model.branches {
            let (lower, upper) = if eta.is_zero() {
                // Bit-exact base strips at eta = 0.
                (vec![b.domain_x.lo; samples], vec![b.domain_x.hi; samples])
            } else {
                let mut lo = Vec::with_capacity(samples);
                let mut hi = Vec::with_capacity(samples);
                for i in 0..samples {
                    let y = F::from_usize(i).unwrap() / F::from_usize(samples - 1).unwrap();
                    let x0 = solve_branch_x(model, b, eta, &shape, y, F::zero())?;
                    let x1 = solve_branch_x(model, b, eta, &shape, y, F::one())?;
                    lo.push(x0.min(x1));
                    hi.push(x0.max(x1));
                }
                (lo, hi)
            };
            branches.push(PerturbedBranch { label: b.label, leg: b.leg, lower, upper });
        }
        branches.sort_by_key(|b| b.label);

        let beta = model.params.beta();
        let h_bounds = vec![
            (
                HBoundary::new(model.params.y_a, eta, &shape),
                HBoundary::new(model.params.y_a + beta, eta, &shape),
            ),
            (
                HBoundary::new(model.params.y_b, eta, &shape),
                HBoundary::new(model.params.y_b + beta, eta, &shape),
            ),
        ];

        let pm = Self { base: model.clone(), eta, shape, branches, h_bounds, samples };
        pm.check_geometry()?;
        Ok(pm)
    }

    /// Rejects perturbations whose recovered strips collide or whose
    /// horizontal strips overlap or leave the square.
    fn check_geometry(&self) -> Result<(), StabilityError> {
        let mut hulls: Vec<(SSymbol, Interval<F>)> =
            self.branches.iter().map(|b| (b.label, b.hull())).collect();
        hulls.sort_by(|a, b| a.1.lo.partial_cmp(&b.1.lo).unwrap());
        for pair in hulls.windows(2) {
            if pair[0].1.hi >= pair[1].1.lo {
                return Err(StabilityError::TooLarge(format!(
                    "vertical strips {} and {} collide",
                    self.base.zip_system.s_name(pair[0].0),
                    self.base.zip_system.s_name(pair[1].0)
                )));
            }
        }
        let g = 65;
        let mut a_hi_max = F::neg_infinity();
        let mut b_lo_min = F::infinity();
        let mut a_lo_min = F::infinity();
        let mut b_hi_max = F::neg_infinity();
        for i in 0..g {
            let x = F::from_usize(i).unwrap() / F::from_usize(g - 1).unwrap();
            a_lo_min = a_lo_min.min(self.h_bounds[0].0.eval(x, self.eta, &self.shape));
            a_hi_max = a_hi_max.max(self.h_bounds[0].1.eval(x, self.eta, &self.shape));
            b_lo_min = b_lo_min.min(self.h_bounds[1].0.eval(x, self.eta, &self.shape));
            b_hi_max = b_hi_max.max(self.h_bounds[1].1.eval(x, self.eta, &self.shape));
        }
        if a_hi_max >= b_lo_min {
            return Err(StabilityError::TooLarge("horizontal strips overlap".into()));
        }
        if a_lo_min < F::zero() || b_hi_max > F::one() {
            return Err(StabilityError::TooLarge("horizontal strips leave the square".into()));
        }
        Ok(())
    }

    pub fn grid_len(&self) -> usize {
        self.samples
    }

    /// The perturbed map on a labeled branch.
    pub fn apply_branch(&self, b: &BranchMap<F>, p: Point<F>) -> Point<F> {
        displace(b.apply(p), self.eta, &self.shape)
    }

    /// Derivative of the perturbed branch map at `p`.
    pub fn jacobian(&self, b: &BranchMap<F>, p: Point<F>) -> Jacobian<F> {
        let q = b.apply(p);
        let t = tau::<F>();
        let dxp_dy = self.eta * self.shape.c1 * t * (t * q.y).cos();
        let dyp_dx = self.eta * self.shape.c2 * t * (t * q.x).cos();
        Jacobian {
            dx_dx: b.a_x,
            dx_dy: dxp_dy * b.a_y,
            dy_dx: dyp_dx * b.a_x,
            dy_dy: b.a_y,
        }
    }

    fn branch_data(&self, label: SSymbol) -> (&BranchMap<F>, &PerturbedBranch<F>) {
        let affine = self.base.branch(label).expect("label from this model");
        let curved = self
            .branches
            .iter()
            .find(|b| b.label == label)
            .expect("label from this model");
        (affine, curved)
    }

    /// Strip-condition and cone verification on the curved strips.
    pub fn verify(&self, cone: &ConeParams<F>) -> Result<StabilityReport, StabilityError> {
        cone.validate()?;
        let mut strips = CheckReport::default();
        let tol = real::<F>(1e-9);
        let sys = &self.base.zip_system;
        for pb in &self.branches {
            let (affine, _) = self.branch_data(pb.label);
            let name = sys.s_name(pb.label);
            let (h_lo, h_hi) = &self.h_bounds[pb.leg.z_symbol().0 as usize];

            // Vertical boundaries map onto the vertical edges x' = 0, 1.
            let mut edge_err = F::zero();
            for (i, (&lo, &hi)) in pb.lower.iter().zip(&pb.upper).enumerate() {
                let y = F::from_usize(i).unwrap() / F::from_usize(self.samples - 1).unwrap();
                for x in [lo, hi] {
                    let img = self.apply_branch(affine, Point::new(x, y));
                    let err = img.x.abs().min((img.x - F::one()).abs());
                    edge_err = edge_err.max(err);
                }
            }
            strips.push_margin(
                format!("branch {name}: vertical boundaries reach x' = 0, 1"),
                edge_err <= tol,
                edge_err.to_f64().unwrap(),
                String::new(),
            );

            // Horizontal edges y = 0, 1 land on the curved strip boundaries.
            let mut bound_err = F::zero();
            for i in 0..self.samples {
                let f = F::from_usize(i).unwrap() / F::from_usize(self.samples - 1).unwrap();
                for (y_edge, idx) in [(F::zero(), 0usize), (F::one(), 1)] {
                    let x = pb.lower[0] + (pb.upper[0] - pb.lower[0]) * f;
                    let img = self.apply_branch(affine, Point::new(x, y_edge));
                    // Orientation: leg a keeps y-order, leg b reverses it.
                    let curve = match (pb.leg, idx) {
                        (Leg::A, 0) | (Leg::B, 1) => h_lo,
                        _ => h_hi,
                    };
                    let expected = curve.eval(img.x, self.eta, &self.shape);
                    bound_err = bound_err.max((img.y - expected).abs());
                }
            }
            strips.push_margin(
                format!("branch {name}: horizontal edges land on strip boundaries"),
                bound_err <= tol,
                bound_err.to_f64().unwrap(),
                String::new(),
            );

            // Corners: boundary-curve endpoints map to strip corners.
            let mut corner_err = F::zero();
            for (x, y) in [
                (pb.lower[0], F::zero()),
                (pb.upper[0], F::zero()),
                (*pb.lower.last().unwrap(), F::one()),
                (*pb.upper.last().unwrap(), F::one()),
            ] {
                let img = self.apply_branch(affine, Point::new(x, y));
                let dx = img.x.abs().min((img.x - F::one()).abs());
                let on_lo = (img.y - h_lo.eval(img.x, self.eta, &self.shape)).abs();
                let on_hi = (img.y - h_hi.eval(img.x, self.eta, &self.shape)).abs();
                corner_err = corner_err.max(dx.max(on_lo.min(on_hi)));
            }
            strips.push_margin(
                format!("branch {name}: corners map to corners"),
                corner_err <= tol,
                corner_err.to_f64().unwrap(),
                String::new(),
            );
        }

        let disjoint = self.check_geometry().is_ok();
        strips.push("strips remain disjoint", disjoint, String::new());

        // Cones on sampled perturbed derivatives.
        let g = cone.grid_points.max(2);
        let mut jacobians = Vec::new();
        let mut max_dev = F::zero();
        for pb in &self.branches {
            let (affine, _) = self.branch_data(pb.label);
            let hull = pb.hull();
            for i in 0..g {
                for j in 0..g {
                    let fx = F::from_usize(i).unwrap() / F::from_usize(g - 1).unwrap();
                    let fy = F::from_usize(j).unwrap() / F::from_usize(g - 1).unwrap();
                    let p = Point::new(hull.lo + hull.width() * fx, fy);
                    let jac = self.jacobian(affine, p);
                    max_dev = max_dev.max(jac.dx_dy.abs()).max(jac.dy_dx.abs());
                    jacobians.push(jac);
                }
            }
        }
        let cones = cone_check(jacobians.into_iter(), cone);

        let mu_v_emp = self.empirical_mu_v();
        let mu_h_emp = self.empirical_mu_h();
        let passed = strips.all_passed() && cones.passed;
        Ok(StabilityReport {
            eta: self.eta.to_f64().unwrap(),
            strips,
            cones,
            mu_h_empirical: mu_h_emp,
            mu_v_empirical: mu_v_emp,
            mu_g: mu_h_emp * mu_v_emp,
            max_derivative_deviation: max_dev.to_f64().unwrap(),
            passed,
        })
    }

    /// Certification constants with slack for the perturbation: growth
    /// `1/mu = 2N` (the affine model has `alpha > 2N`).
    pub fn default_cone_params(&self) -> ConeParams<F> {
        ConeParams {
            mu: F::one() / (real::<F>(2.0) * F::from_usize(self.base.params.folds).unwrap()),
            mu_h: real(0.3),
            mu_v: real(0.3),
            grid_points: 5,
        }
    }

    fn empirical_mu_v(&self) -> f64 {
        let dy = 1.0 / (self.samples - 1) as f64;
        let mut worst = 0.0f64;
        for b in &self.branches {
            for curve in [&b.lower, &b.upper] {
                for w in curve.windows(2) {
                    let quot = (w[1] - w[0]).abs().to_f64().unwrap() / dy;
                    worst = worst.max(quot);
                }
            }
        }
        worst
    }

    fn empirical_mu_h(&self) -> f64 {
        let g = 257;
        let mut worst = 0.0f64;
        for (lo, hi) in &self.h_bounds {
            for curve in [lo, hi] {
                let mut prev: Option<f64> = None;
                for i in 0..g {
                    let x = real::<F>(i as f64 / (g - 1) as f64);
                    let v = curve.eval(x, self.eta, &self.shape).to_f64().unwrap();
                    if let Some(p) = prev {
                        worst = worst.max((v - p).abs() * (g - 1) as f64);
                    }
                    prev = Some(v);
                }
            }
        }
        worst
    }

    /// Strip refinement of the perturbed map. At `eta = 0` this is exactly
    /// the base refinement.
    pub fn refine(&self, depth: usize, cap: u64) -> Result<RefinementTree<F>, StabilityError> {
        if self.eta.is_zero() {
            return Ok(self.base.refine(depth, cap)?);
        }
        let s = self.base.zip_system.s_len() as u64;
        let required = s
            .checked_pow(depth as u32 + 1)
            .ok_or(ModelError::Cap { required: u64::MAX, cap })?;
        if required > cap {
            return Err(StabilityError::Model(ModelError::Cap { required, cap }));
        }

        // Forward: pull curved strips back through single branches.
        let mut fw_curves: Vec<Vec<CurveNodeV<F>>> = Vec::with_capacity(depth + 1);
        fw_curves.push(
            self.branches
                .iter()
                .map(|b| CurveNodeV {
                    word: vec![b.label],
                    lower: b.lower.clone(),
                    upper: b.upper.clone(),
                })
                .collect(),
        );
        for _ in 1..=depth {
            let prev = fw_curves.last().unwrap();
            let mut level = Vec::with_capacity(prev.len() * self.branches.len());
            for pb in &self.branches {
                let (affine, _) = self.branch_data(pb.label);
                for child in prev {
                    level.push(self.pull_back_curves(affine, pb, child)?);
                }
            }
            level.sort_by(|a, b| a.word.cmp(&b.word));
            fw_curves.push(level);
        }

        // Backward: push curved horizontal strips forward; the image of a
        // strip under the N same-leg branches is their envelope.
        let mut bw_curves: Vec<Vec<CurveNodeH<F>>> = Vec::with_capacity(depth + 1);
        bw_curves.push(
            self.base
                .zip_system
                .z_symbols()
                .map(|z| {
                    let (lo, hi) = &self.h_bounds[z.0 as usize];
                    CurveNodeH {
                        word: vec![z],
                        lower: self.sample_h(lo),
                        upper: self.sample_h(hi),
                    }
                })
                .collect(),
        );
        for _ in 1..=depth {
            let prev = bw_curves.last().unwrap();
            let mut level = Vec::with_capacity(prev.len() * 2);
            for node in prev {
                for z in self.base.zip_system.z_symbols() {
                    level.push(self.push_forward_curves(node, z)?);
                }
            }
            level.sort_by(|a, b| a.word.cmp(&b.word));
            bw_curves.push(level);
        }

        let forward_levels: Vec<Vec<ForwardNode<F>>> = fw_curves
            .into_iter()
            .map(|level| {
                level
                    .into_iter()
                    .map(|n| ForwardNode {
                        x: Interval::new(
                            n.lower.iter().copied().fold(F::infinity(), F::min),
                            n.upper.iter().copied().fold(F::neg_infinity(), F::max),
                        ),
                        word: n.word,
                    })
                    .collect()
            })
            .collect();
        let backward_levels: Vec<Vec<BackwardNode<F>>> = bw_curves
            .into_iter()
            .map(|level| {
                level
                    .into_iter()
                    .map(|n| BackwardNode {
                        y: Interval::new(
                            n.lower.iter().copied().fold(F::infinity(), F::min),
                            n.upper.iter().copied().fold(F::neg_infinity(), F::max),
                        ),
                        word: n.word,
                    })
                    .collect()
            })
            .collect();
        Ok(RefinementTree::from_levels(depth, forward_levels, backward_levels))
    }

    fn sample_h(&self, bound: &HBoundary<F>) -> Vec<F> {
        (0..self.samples)
            .map(|i| {
                let x = F::from_usize(i).unwrap() / F::from_usize(self.samples - 1).unwrap();
                bound.eval(x, self.eta, &self.shape)
            })
            .collect()
    }

    /// Boundary curves of `V^{s_0 w}` from those of `V^{w}`: solve
    /// `g_x(x, y) = v_child(g_y(x, y))` per grid row.
    fn pull_back_curves(
        &self,
        affine: &BranchMap<F>,
        pb: &PerturbedBranch<F>,
        child: &CurveNodeV<F>,
    ) -> Result<CurveNodeV<F>, StabilityError> {
        let mut word = Vec::with_capacity(child.word.len() + 1);
        word.push(pb.label);
        word.extend_from_slice(&child.word);
        let band = self.fold_band(affine);
        let mut lower = Vec::with_capacity(self.samples);
        let mut upper = Vec::with_capacity(self.samples);
        for i in 0..self.samples {
            let y = F::from_usize(i).unwrap() / F::from_usize(self.samples - 1).unwrap();
            // Orientation: an orientation-reversing x-map swaps which child
            // boundary the parent boundary lands on.
            let (child_lo, child_hi) = if affine.a_x > F::zero() {
                (&child.lower, &child.upper)
            } else {
                (&child.upper, &child.lower)
            };
            let solve = |target_curve: &Vec<F>| {
                bisect(band.lo, band.hi, BISECT_MAX_ITER, |x| {
                    let img = self.apply_branch(affine, Point::new(x, y));
                    img.x - interp(target_curve, img.y)
                })
            };
            let a = solve(child_lo)?;
            let b = solve(child_hi)?;
            lower.push(a.min(b));
            upper.push(a.max(b));
        }
        Ok(CurveNodeV { word, lower, upper })
    }

    /// Boundary curves of `H_{w z}` from those of `H_w`: the envelope over
    /// the leg-z branches of the image of each boundary curve.
    fn push_forward_curves(
        &self,
        node: &CurveNodeH<F>,
        z: ZSymbol,
    ) -> Result<CurveNodeH<F>, StabilityError> {
        let mut word = node.word.clone();
        word.push(z);
        let mut lower = vec![F::infinity(); self.samples];
        let mut upper = vec![F::neg_infinity(); self.samples];
        for pb in self.branches.iter().filter(|b| b.leg.z_symbol() == z) {
            let (affine, _) = self.branch_data(pb.label);
            let band = self.fold_band(affine);
            for i in 0..self.samples {
                let x_target =
                    F::from_usize(i).unwrap() / F::from_usize(self.samples - 1).unwrap();
                let mut ys = [F::zero(); 2];
                for (slot, curve) in [&node.lower, &node.upper].into_iter().enumerate() {
                    let x = bisect(band.lo, band.hi, BISECT_MAX_ITER, |x| {
                        let h = interp(curve, x);
                        self.apply_branch(affine, Point::new(x, h)).x - x_target
                    })?;
                    let h = interp(curve, x);
                    ys[slot] = self.apply_branch(affine, Point::new(x, h)).y;
                }
                lower[i] = lower[i].min(ys[0].min(ys[1]));
                upper[i] = upper[i].max(ys[0].max(ys[1]));
            }
        }
        Ok(CurveNodeH { word, lower, upper })
    }

    fn fold_band(&self, b: &BranchMap<F>) -> Interval<F> {
        let n = F::from_usize(self.base.params.folds).unwrap();
        let k = F::from_usize(b.fold).unwrap();
        Interval::new(k / n, (k + F::one()) / n)
    }

    /// Periodic orbit of the perturbed map along a label word: Newton
    /// iteration on `g^n(p) - p` seeded with the affine orbit point.
    pub fn periodic_orbit_solve(&self, word: &[SSymbol]) -> Result<Point<F>, StabilityError> {
        let seed = crate::conjugacy::periodic_orbit_solve(&self.base, word)?;
        let tol = real::<F>(1e-12);
        let mut p = seed;
        for _ in 0..50 {
            let (image, jac) = self.cycle_map(word, p);
            let rx = image.x - p.x;
            let ry = image.y - p.y;
            if rx.abs().max(ry.abs()) <= tol {
                return Ok(p);
            }
            // Solve (J - I) delta = -(residual).
            let m = Jacobian {
                dx_dx: jac.dx_dx - F::one(),
                dx_dy: jac.dx_dy,
                dy_dx: jac.dy_dx,
                dy_dy: jac.dy_dy - F::one(),
            };
            let inv = m.inverse();
            let (dx, dy) = inv.apply((-rx, -ry));
            p = Point::new(p.x + dx, p.y + dy);
        }
        Err(StabilityError::Numeric(format!(
            "periodic orbit for {} did not converge",
            self.base.zip_system.format_s_word(word)
        )))
    }

    fn cycle_map(&self, word: &[SSymbol], p: Point<F>) -> (Point<F>, Jacobian<F>) {
        let mut cur = p;
        let mut jac = Jacobian::diagonal(F::one(), F::one());
        for &s in word {
            let (affine, _) = self.branch_data(s);
            let step = self.jacobian(affine, cur);
            jac = Jacobian {
                dx_dx: step.dx_dx * jac.dx_dx + step.dx_dy * jac.dy_dx,
                dx_dy: step.dx_dx * jac.dx_dy + step.dx_dy * jac.dy_dy,
                dy_dx: step.dy_dx * jac.dx_dx + step.dy_dy * jac.dy_dx,
                dy_dy: step.dy_dx * jac.dx_dy + step.dy_dy * jac.dy_dy,
            };
            cur = self.apply_branch(affine, cur);
        }
        (cur, jac)
    }
}

/// Recovers one vertical strip boundary: the x with `g_x(x, y) = target`
/// on the branch's fold band.
fn solve_branch_x<F: Real>(
    model: &HorseshoeModel<F>,
    b: &BranchMap<F>,
    eta: F,
    shape: &ShapeParams<F>,
    y: F,
    target: F,
) -> Result<F, StabilityError> {
    let n = F::from_usize(model.params.folds).unwrap();
    let k = F::from_usize(b.fold).unwrap();
    bisect(k / n, (k + F::one()) / n, BISECT_MAX_ITER, |x| {
        displace(b.apply(Point::new(x, y)), eta, shape).x - target
    })
}

fn displace<F: Real>(q: Point<F>, eta: F, shape: &ShapeParams<F>) -> Point<F> {
    let t = tau::<F>();
    Point::new(
        q.x + eta * shape.c1 * (t * q.y).sin(),
        q.y + eta * shape.c2 * (t * q.x).sin(),
    )
}

/// Linear interpolation of uniformly spaced samples on [0, 1].
fn interp<F: Real>(samples: &[F], t: F) -> F {
    let n = samples.len();
    let pos = t.max(F::zero()).min(F::one()) * F::from_usize(n - 1).unwrap();
    let i = pos.floor().to_usize().unwrap_or(0).min(n - 2);
    let frac = pos - F::from_usize(i).unwrap();
    samples[i] + (samples[i + 1] - samples[i]) * frac
}

/// Bisection to ~1e-12 on a bracketing interval; the branch maps are
/// monotone in x across their fold band.
fn bisect<F: Real>(
    mut lo: F,
    mut hi: F,
    max_iter: usize,
    f: impl Fn(F) -> F,
) -> Result<F, StabilityError> {
    let tol = real::<F>(1e-12).max(F::epsilon() * real(4.0));
    let flo = f(lo);
    let fhi = f(hi);
    if flo.is_zero() {
        return Ok(lo);
    }
    if fhi.is_zero() {
        return Ok(hi);
    }
    if (flo > F::zero()) == (fhi > F::zero()) {
        return Err(StabilityError::TooLarge(
            "image boundary leaves the fold band (no bracketing sign change)".into(),
        ));
    }
    let lo_positive = flo > F::zero();
    for _ in 0..max_iter {
        let mid = (lo + hi) / real(2.0);
        if (f(mid) > F::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= tol {
            break;
        }
    }
    Ok((lo + hi) / real(2.0))
}

/// Verification outcome for a perturbed model.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub eta: f64,
    pub strips: CheckReport,
    pub cones: ConeReport,
    pub mu_h_empirical: f64,
    pub mu_v_empirical: f64,
    pub mu_g: f64,
    pub max_derivative_deviation: f64,
    pub passed: bool,
}

/// Finite-depth shadow of the conjugating homeomorphism: word-indexed box
/// pairing between the base and perturbed refinement trees.
#[derive(Clone, Debug, Serialize)]
pub struct MatchReport {
    pub depth: usize,
    pub mismatches: Vec<String>,
    pub base_max_diag: f64,
    pub perturbed_max_diag: f64,
    /// Symbol pairs where the perturbed model's labels differ in leg
    /// structure from the base; empty when tau agrees pointwise.
    pub label_permutation: Vec<(String, String)>,
    pub passed: bool,
}

/// Compares the two refinement trees combinatorially (same nonempty word
/// sets, same nesting) and reports the pairing precision.
pub fn match_conjugacy<F: Real>(
    model: &HorseshoeModel<F>,
    pm: &PerturbedModel<F>,
    depth: usize,
    cap: u64,
) -> Result<MatchReport, StabilityError> {
    let tf = model.refine(depth, cap)?;
    let tg = pm.refine(depth, cap)?;
    let mut mismatches = Vec::new();
    let nest_tol = real::<F>(1e-7);

    for level in 0..=depth {
        let lf = &tf.forward_levels[level];
        let lg = &tg.forward_levels[level];
        if lf.len() != lg.len() {
            mismatches.push(format!(
                "forward level {level}: {} base words vs {} perturbed",
                lf.len(),
                lg.len()
            ));
            continue;
        }
        for (nf, ng) in lf.iter().zip(lg) {
            if nf.word != ng.word {
                mismatches.push(format!(
                    "forward level {level}: word order diverges at {}",
                    model.zip_system.format_s_word(&nf.word)
                ));
            }
            if !(nf.x.width() > F::zero()) || !(ng.x.width() > F::zero()) {
                mismatches.push(format!(
                    "forward word {} decodes to an empty strip",
                    model.zip_system.format_s_word(&nf.word)
                ));
            }
        }
        if level > 0 {
            for (tree, which) in [(&tf, "base"), (&tg, "perturbed")] {
                for node in &tree.forward_levels[level] {
                    let parent = tree
                        .forward_node(&node.word[..node.word.len() - 1])
                        .expect("parent exists");
                    if !node.x.subset_of(&parent.x, nest_tol) {
                        mismatches.push(format!(
                            "{which} tree: {} is not nested in its parent",
                            model.zip_system.format_s_word(&node.word)
                        ));
                    }
                }
            }
        }
    }
    for level in 0..=depth {
        let lf = &tf.backward_levels[level];
        let lg = &tg.backward_levels[level];
        if lf.len() != lg.len() {
            mismatches.push(format!("backward level {level}: node counts differ"));
            continue;
        }
        for (nf, ng) in lf.iter().zip(lg) {
            if nf.word != ng.word {
                mismatches.push(format!(
                    "backward level {level}: word order diverges at {}",
                    model.zip_system.format_z_word(&nf.word)
                ));
            }
            if !(nf.y.width() > F::zero()) || !(ng.y.width() > F::zero()) {
                mismatches.push(format!(
                    "backward word {} decodes to an empty strip",
                    model.zip_system.format_z_word(&nf.word)
                ));
            }
        }
    }

    // Alphabet structure: fiber sizes must agree; a leg-preserving pairing
    // of labels records any induced permutation.
    let mut label_permutation = Vec::new();
    let sys_f = &model.zip_system;
    let sys_g = &pm.base.zip_system;
    if sys_f.s_len() != sys_g.s_len() || sys_f.z_len() != sys_g.z_len() {
        mismatches.push("alphabet cardinalities differ".into());
    } else {
        let leg_of = |m: &HorseshoeModel<F>, label: SSymbol| {
            m.branches.iter().find(|b| b.label == label).map(|b| b.leg.z_symbol())
        };
        for z in sys_f.z_symbols() {
            let fa: Vec<SSymbol> = sys_f
                .s_symbols()
                .filter(|&s| leg_of(model, s) == Some(z))
                .collect();
            let ga: Vec<SSymbol> = sys_g
                .s_symbols()
                .filter(|&s| leg_of(&pm.base, s) == Some(z))
                .collect();
            if fa.len() != ga.len() {
                mismatches.push(format!(
                    "leg {} has {} base branches vs {} perturbed",
                    sys_f.z_name(z),
                    fa.len(),
                    ga.len()
                ));
                continue;
            }
            for (sf, sg) in fa.iter().zip(&ga) {
                if sf != sg {
                    label_permutation
                        .push((sys_f.s_name(*sf).to_string(), sys_g.s_name(*sg).to_string()));
                }
            }
        }
    }

    let max_w = |tree: &RefinementTree<F>| {
        let w = tree
            .deepest_forward()
            .iter()
            .map(|n| n.x.width().to_f64().unwrap())
            .fold(0.0, f64::max);
        let h = tree
            .deepest_backward()
            .iter()
            .map(|n| n.y.width().to_f64().unwrap())
            .fold(0.0, f64::max);
        (w * w + h * h).sqrt()
    };
    let report = MatchReport {
        depth,
        passed: mismatches.is_empty(),
        base_max_diag: max_w(&tf),
        perturbed_max_diag: max_w(&tg),
        label_permutation,
        mismatches,
    };
    Ok(report)
}

/// Curved vertical strip (x = v(y)) sampled on the y-grid.
#[derive(Clone, Debug)]
struct CurveNodeV<F> {
    word: Vec<SSymbol>,
    lower: Vec<F>,
    upper: Vec<F>,
}

/// Curved horizontal strip (y = h(x)) sampled on the x-grid.
#[derive(Clone, Debug)]
struct CurveNodeH<F> {
    word: Vec<ZSymbol>,
    lower: Vec<F>,
    upper: Vec<F>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horseshoe::HorseshoeParams;
    use crate::symbolic::DEFAULT_ENUMERATION_CAP as CAP;
    use approx::assert_abs_diff_eq;

    fn model() -> HorseshoeModel<f64> {
        HorseshoeModel::build(HorseshoeParams::new(2, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn zero_perturbation_reproduces_base_exactly() {
        let m = model();
        let pm = perturb(&m, 0.0, ShapeParams::default()).unwrap();
        for (pb, b) in pm.branches.iter().zip(&m.branches) {
            assert!(pb.lower.iter().all(|&x| x == b.domain_x.lo));
            assert!(pb.upper.iter().all(|&x| x == b.domain_x.hi));
        }
        let tf = m.refine(3, CAP).unwrap();
        let tg = pm.refine(3, CAP).unwrap();
        for (lf, lg) in tf.forward_levels.iter().zip(&tg.forward_levels) {
            for (nf, ng) in lf.iter().zip(lg) {
                assert_eq!(nf.x.lo, ng.x.lo);
                assert_eq!(nf.x.hi, ng.x.hi);
            }
        }
    }

    #[test]
    fn small_perturbation_stays_near_affine_strips() {
        let m = model();
        let pm = perturb(&m, 1e-3, ShapeParams::default()).unwrap();
        for (pb, b) in pm.branches.iter().zip(&m.branches) {
            let hausdorff = pb
                .lower
                .iter()
                .map(|&x| (x - b.domain_x.lo).abs())
                .chain(pb.upper.iter().map(|&x| (x - b.domain_x.hi).abs()))
                .fold(0.0f64, f64::max);
            assert!(hausdorff < 1e-2, "strips moved by {hausdorff}");
            // Displacement over alpha is the expected scale.
            assert!(hausdorff <= 1e-3 / 4.1 + 1e-9);
        }
    }

    #[test]
    fn large_perturbation_is_rejected() {
        let m = model();
        assert!(matches!(
            perturb(&m, 0.5, ShapeParams::default()),
            Err(StabilityError::TooLarge(_))
        ));
    }

    #[test]
    fn verification_passes_at_small_eta() {
        let m = model();
        let pm = perturb(&m, 1e-3, ShapeParams::default()).unwrap();
        let report = pm.verify(&pm.default_cone_params()).unwrap();
        assert!(report.passed, "strips: {:?}", report.strips.failures().collect::<Vec<_>>());
        assert!(report.mu_g < 1e-4);
        assert!(report.cones.unstable_growth > 1.0);
    }

    #[test]
    fn tight_growth_constant_flags_any_perturbation() {
        let m = model();
        let pm = perturb(&m, 1e-3, ShapeParams::default()).unwrap();
        // mu = 1/alpha has zero margin on the affine model, so the perturbed
        // expansion falls short.
        let tight = ConeParams { mu: m.params.beta(), mu_h: 0.3, mu_v: 0.3, grid_points: 5 };
        let report = pm.verify(&tight).unwrap();
        assert!(report.cones.unstable_growth < 1.0);
        assert!(!report.passed);
    }

    #[test]
    fn margins_degrade_with_eta() {
        let m = model();
        let mut prev_growth = f64::INFINITY;
        for eta in [0.0, 1e-4, 1e-3, 5e-3] {
            let pm = perturb(&m, eta, ShapeParams::default()).unwrap();
            let report = pm.verify(&pm.default_cone_params()).unwrap();
            assert!(report.cones.unstable_growth <= prev_growth + 1e-9);
            prev_growth = report.cones.unstable_growth;
        }
    }

    #[test]
    fn match_conjugacy_zero_mismatches() {
        let m = model();
        let pm = perturb(&m, 1e-3, ShapeParams::default()).unwrap();
        let report = match_conjugacy(&m, &pm, 3, CAP).unwrap();
        assert!(report.passed, "mismatches: {:?}", report.mismatches);
        assert!(report.label_permutation.is_empty());
        let beta: f64 = 1.0 / 4.1;
        assert!(report.perturbed_max_diag < 2.0 * beta.powi(3));
    }

    #[test]
    fn identity_pairing_at_zero_eta() {
        let m = model();
        let pm = perturb(&m, 0.0, ShapeParams::default()).unwrap();
        let report = match_conjugacy(&m, &pm, 4, CAP).unwrap();
        assert!(report.passed);
        assert_eq!(report.base_max_diag, report.perturbed_max_diag);
    }

    #[test]
    fn label_permutation_is_recorded() {
        let m = model();
        let mut permuted = model();
        let tmp = permuted.branches[1].label;
        permuted.branches[1].label = permuted.branches[3].label;
        permuted.branches[3].label = tmp;
        permuted.branches.sort_by_key(|b| b.label);
        let pm = perturb(&permuted, 1e-3, ShapeParams::default()).unwrap();
        let report = match_conjugacy(&m, &pm, 2, CAP).unwrap();
        assert!(report.passed, "word sets still match: {:?}", report.mismatches);
        assert!(!report.label_permutation.is_empty());
    }

    #[test]
    fn induced_symbolic_invariants_agree() {
        let m = model();
        let pm = perturb(&m, 1e-3, ShapeParams::default()).unwrap();
        assert_eq!(m.zip_system.s_len(), pm.base.zip_system.s_len());
        assert_eq!(m.zip_system.z_len(), pm.base.zip_system.z_len());
        for z in m.zip_system.z_symbols() {
            assert_eq!(m.zip_system.fiber(z).len(), pm.base.zip_system.fiber(z).len());
        }
    }

    #[test]
    fn perturbed_periodic_orbit_close_to_affine() {
        let m = model();
        let pm = perturb(&m, 1e-3, ShapeParams::default()).unwrap();
        let word = m.zip_system.parse_s_word("1 2").unwrap();
        let p = pm.periodic_orbit_solve(&word).unwrap();
        let (image, _) = pm.cycle_map(&word, p);
        assert_abs_diff_eq!(image.x, p.x, epsilon = 1e-10);
        assert_abs_diff_eq!(image.y, p.y, epsilon = 1e-10);
        let affine = crate::conjugacy::periodic_orbit_solve(&m, &word).unwrap();
        assert!(p.dist(&affine) < 1e-2);
        assert!(p.dist(&affine) > 0.0);
    }
}
