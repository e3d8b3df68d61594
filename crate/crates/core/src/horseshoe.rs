//! Piecewise-affine 2N-branch horseshoe on the unit square.
//!
//! The square is stretched by `alpha = 2N + eps`, tent-folded N times onto a
//! width `alpha/N` band, and bent onto two horizontal strips `H_a`, `H_b`.
//! Each fold band contributes one branch per leg, so 2N disjoint vertical
//! strips map affinely onto the two horizontal strips. The branch map is
//! `x' = a_x x + b_x`, `y' = a_y y + b_y` with `|a_x| = alpha`, `|a_y| = beta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Interval, Point};
use crate::report::{CheckReport, ConeReport};
use crate::scalar::{affine_tol, real, Real};
use crate::symbolic::{SSymbol, ZSymbol, ZipSystem};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("point ({x}, {y}) escapes the vertical strips")]
    Escape { x: f64, y: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("refinement of {required} nodes exceeds cap {cap}")]
    Cap { required: u64, cap: u64 },
}

/// Which horizontal strip a branch lands on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    A,
    B,
}

impl Leg {
    pub fn z_symbol(self) -> ZSymbol {
        match self {
            Leg::A => ZSymbol(0),
            Leg::B => ZSymbol(1),
        }
    }
}

/// Plain-f64 configuration, the on-disk format:
/// `{"N":2,"eps":0.1,"y_a":0.2,"y_b":0.7}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HorseshoeConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    pub y_a: f64,
    pub y_b: f64,
}

/// Model parameters. `folds` is the fold count N; the stretch factor is
/// `alpha = 2N + eps` and the contraction `beta = 1/alpha`. The bend offsets
/// `delta0 = (alpha/N - 2)/3` and `delta1 = 1 + 2(alpha/N - 2)/3` leave equal
/// margins around the two legs inside each fold band.
#[derive(Clone, Copy, Debug)]
pub struct HorseshoeParams<F> {
    pub folds: usize,
    pub eps: F,
    pub y_a: F,
    pub y_b: F,
}

impl<F: Real> HorseshoeParams<F> {
    /// Standard anchors `y_a = 0.2`, `y_b = 0.7`; falls back to evenly spaced
    /// strips when `beta` is too large for them (small N).
    pub fn new(folds: usize, eps: F) -> Result<Self, ModelError> {
        let standard = Self { folds, eps, y_a: real(0.2), y_b: real(0.7) };
        if standard.validate().is_ok() {
            return Ok(standard);
        }
        let beta = F::one() / (real::<F>(2.0) * F::from_usize(folds).unwrap_or(F::one()) + eps);
        let gap = (F::one() - real::<F>(2.0) * beta) / real(3.0);
        let spaced =
            Self { folds, eps, y_a: gap, y_b: gap + gap + beta };
        spaced.validate()?;
        Ok(spaced)
    }

    pub fn with_anchors(folds: usize, eps: F, y_a: F, y_b: F) -> Result<Self, ModelError> {
        let params = Self { folds, eps, y_a, y_b };
        params.validate()?;
        Ok(params)
    }

    pub fn from_config(cfg: &HorseshoeConfig) -> Result<Self, ModelError> {
        Self::with_anchors(cfg.n, real(cfg.eps), real(cfg.y_a), real(cfg.y_b))
    }

    pub fn to_config(&self) -> HorseshoeConfig {
        HorseshoeConfig {
            n: self.folds,
            eps: self.eps.to_f64().unwrap(),
            y_a: self.y_a.to_f64().unwrap(),
            y_b: self.y_b.to_f64().unwrap(),
        }
    }

    pub fn alpha(&self) -> F {
        real::<F>(2.0) * F::from_usize(self.folds).unwrap() + self.eps
    }

    pub fn beta(&self) -> F {
        F::one() / self.alpha()
    }

    /// Margin parameter of the band geometry: `alpha/N = 2 + 3 delta0`.
    pub fn delta0(&self) -> F {
        (self.alpha() / F::from_usize(self.folds).unwrap() - real(2.0)) / real(3.0)
    }

    pub fn delta1(&self) -> F {
        F::one() + real::<F>(2.0) * self.delta0()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: &str| Err(ModelError::Config(msg.into()));
        if self.folds == 0 {
            return fail("N must be >= 1");
        }
        if !(self.eps > F::zero()) {
            return fail("eps must be positive (alpha must exceed 2N)");
        }
        let n = F::from_usize(self.folds).unwrap();
        if !(self.delta0() > F::zero()) {
            return fail("delta0 must be positive");
        }
        if self.delta1() + F::one() > self.alpha() / n {
            return fail("legs do not fit in a fold band (delta1 + 1 > alpha/N)");
        }
        if !(self.y_a >= F::zero()) {
            return fail("y_a must be nonnegative");
        }
        if self.y_a + self.beta() >= self.y_b {
            return fail("horizontal strips overlap (y_a + beta >= y_b)");
        }
        if self.y_b + self.beta() >= F::one() {
            return fail("upper strip leaves the square (y_b + beta >= 1)");
        }
        Ok(())
    }
}

/// 2x2 derivative matrix.
#[derive(Clone, Copy, Debug)]
pub struct Jacobian<F> {
    pub dx_dx: F,
    pub dx_dy: F,
    pub dy_dx: F,
    pub dy_dy: F,
}

impl<F: Real> Jacobian<F> {
    pub fn diagonal(a: F, d: F) -> Self {
        Self { dx_dx: a, dx_dy: F::zero(), dy_dx: F::zero(), dy_dy: d }
    }

    pub fn det(&self) -> F {
        self.dx_dx * self.dy_dy - self.dx_dy * self.dy_dx
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self {
            dx_dx: self.dy_dy / det,
            dx_dy: -self.dx_dy / det,
            dy_dx: -self.dy_dx / det,
            dy_dy: self.dx_dx / det,
        }
    }

    pub fn apply(&self, v: (F, F)) -> (F, F) {
        (self.dx_dx * v.0 + self.dx_dy * v.1, self.dy_dx * v.0 + self.dy_dy * v.1)
    }
}

/// One affine branch: a fold band and leg, its vertical strip, and the map
/// `(x, y) -> (a_x x + b_x, a_y y + b_y)`.
#[derive(Clone, Copy, Debug)]
pub struct BranchMap<F> {
    pub label: SSymbol,
    pub fold: usize,
    pub leg: Leg,
    pub domain_x: Interval<F>,
    pub a_x: F,
    pub b_x: F,
    pub a_y: F,
    pub b_y: F,
}

impl<F: Real> BranchMap<F> {
    pub fn apply(&self, p: Point<F>) -> Point<F> {
        Point::new(self.a_x * p.x + self.b_x, self.a_y * p.y + self.b_y)
    }

    pub fn invert(&self, q: Point<F>) -> Point<F> {
        Point::new((q.x - self.b_x) / self.a_x, (q.y - self.b_y) / self.a_y)
    }

    /// The y-extent of the branch image (the target horizontal strip).
    pub fn image_y(&self) -> Interval<F> {
        Interval::unit().affine_image(self.a_y, self.b_y)
    }

    pub fn jacobian(&self) -> Jacobian<F> {
        Jacobian::diagonal(self.a_x, self.a_y)
    }

    /// Preimage of an x-interval under the branch's x-map; callers keep it
    /// inside the domain strip by passing subsets of [0, 1].
    pub fn pull_back_x(&self, target: &Interval<F>) -> Interval<F> {
        Interval::new((target.lo - self.b_x) / self.a_x, (target.hi - self.b_x) / self.a_x)
    }
}

#[derive(Clone, Debug)]
pub struct HorseshoeModel<F: Real> {
    pub params: HorseshoeParams<F>,
    pub branches: Vec<BranchMap<F>>,
    pub zip_system: ZipSystem,
}

impl<F: Real> HorseshoeModel<F> {
    pub fn build(params: HorseshoeParams<F>) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self::build_unchecked(params))
    }

    /// Builds without validating the parameter invariants. Verification
    /// commands use this to inspect deliberately broken configurations.
    pub fn build_unchecked(params: HorseshoeParams<F>) -> Self {
        let n = params.folds;
        let nf = F::from_usize(n).unwrap();
        let alpha = params.alpha();
        let beta = params.beta();
        let d0 = params.delta0();
        let d1 = params.delta1();
        let mut branches = Vec::with_capacity(2 * n);
        for leg in [Leg::A, Leg::B] {
            for k in 0..n {
                let kf = F::from_usize(k).unwrap();
                // Tent fold on band k: u - k*alpha/N for even k, (k+1)*alpha/N - u
                // for odd k, with u = alpha x. Leg a bends to x' = F_k(u) - d0,
                // leg b to x' = d1 + 1 - F_k(u).
                let (a_x, b_x) = match (k % 2 == 0, leg) {
                    (true, Leg::A) => (alpha, -kf * alpha / nf - d0),
                    (false, Leg::A) => (-alpha, (kf + F::one()) * alpha / nf - d0),
                    (true, Leg::B) => (-alpha, kf * alpha / nf + d1 + F::one()),
                    (false, Leg::B) => (alpha, -(kf + F::one()) * alpha / nf + d1 + F::one()),
                };
                let (a_y, b_y) = match leg {
                    Leg::A => (beta, params.y_a),
                    Leg::B => (-beta, params.y_b + beta),
                };
                let label = match leg {
                    Leg::A => SSymbol(k as u16),
                    Leg::B => SSymbol((n + k) as u16),
                };
                let domain_x =
                    Interval::new((F::zero() - b_x) / a_x, (F::one() - b_x) / a_x);
                branches.push(BranchMap { label, fold: k, leg, domain_x, a_x, b_x, a_y, b_y });
            }
        }
        branches.sort_by_key(|b| b.label);
        let zip_system = induced_zip_system(n);
        Self { params, branches, zip_system }
    }

    pub fn branch(&self, label: SSymbol) -> Result<&BranchMap<F>, ModelError> {
        self.branches
            .iter()
            .find(|b| b.label == label)
            .ok_or_else(|| ModelError::Domain(format!("unknown branch label index {}", label.0)))
    }

    fn containment_tol(&self) -> F {
        F::epsilon() * real(16.0)
    }

    /// The horizontal strip `H_a` or `H_b` as a y-interval.
    pub fn h_interval(&self, z: ZSymbol) -> Interval<F> {
        let beta = self.params.beta();
        match z {
            ZSymbol(0) => Interval::new(self.params.y_a, self.params.y_a + beta),
            _ => Interval::new(self.params.y_b, self.params.y_b + beta),
        }
    }

    /// Which horizontal strip contains height `y`, if any.
    pub fn h_strip_of(&self, y: F) -> Option<ZSymbol> {
        let tol = self.containment_tol();
        self.zip_system
            .z_symbols()
            .find(|&z| self.h_interval(z).contains(y, tol))
    }

    /// Applies the horseshoe map; the point must lie in some vertical strip.
    /// On shared closed boundaries the lowest label wins.
    pub fn apply(&self, p: Point<F>) -> Result<(Point<F>, SSymbol), ModelError> {
        let tol = self.containment_tol();
        if !(p.y >= -tol && p.y <= F::one() + tol) {
            return Err(ModelError::Escape {
                x: p.x.to_f64().unwrap_or(f64::NAN),
                y: p.y.to_f64().unwrap_or(f64::NAN),
            });
        }
        let branch = self
            .branches
            .iter()
            .find(|b| b.domain_x.contains(p.x, tol))
            .ok_or(ModelError::Escape {
                x: p.x.to_f64().unwrap_or(f64::NAN),
                y: p.y.to_f64().unwrap_or(f64::NAN),
            })?;
        Ok((branch.apply(p), branch.label))
    }

    /// The unique preimage of `q` inside the labeled strip.
    pub fn apply_inverse(&self, q: Point<F>, label: SSymbol) -> Result<Point<F>, ModelError> {
        let branch = self.branch(label)?;
        let tol = self.containment_tol();
        let image_y = branch.image_y();
        if !Interval::unit().contains(q.x, tol) || !image_y.contains(q.y, tol) {
            return Err(ModelError::Domain(format!(
                "point ({}, {}) is outside the image strip of branch {}",
                q.x.to_f64().unwrap_or(f64::NAN),
                q.y.to_f64().unwrap_or(f64::NAN),
                self.zip_system.s_name(label),
            )));
        }
        Ok(branch.invert(q))
    }

    /// Checks the strip-mapping conditions: each branch maps its vertical
    /// strip onto the full target horizontal strip with boundaries going to
    /// boundaries, strips pairwise disjoint, and `H_a`, `H_b` disjoint.
    pub fn verify_assumption1(&self) -> CheckReport {
        let mut report = CheckReport::default();
        let tol = affine_tol::<F>();
        let samples = 9;
        for b in &self.branches {
            let name = self.zip_system.s_name(b.label);
            let target_y = b.image_y();
            let corners = [
                Point::new(b.domain_x.lo, F::zero()),
                Point::new(b.domain_x.lo, F::one()),
                Point::new(b.domain_x.hi, F::zero()),
                Point::new(b.domain_x.hi, F::one()),
            ];
            let mut target_corners = vec![
                Point::new(F::zero(), target_y.lo),
                Point::new(F::zero(), target_y.hi),
                Point::new(F::one(), target_y.lo),
                Point::new(F::one(), target_y.hi),
            ];
            let mut corner_err = F::zero();
            let mut all_hit = true;
            for c in corners {
                let img = b.apply(c);
                match target_corners
                    .iter()
                    .enumerate()
                    .min_by(|(_, p), (_, q)| {
                        img.dist(p).partial_cmp(&img.dist(q)).unwrap()
                    })
                    .map(|(i, p)| (i, img.dist(p)))
                {
                    Some((i, d)) if d <= tol => {
                        corner_err = corner_err.max(d);
                        target_corners.remove(i);
                    }
                    Some((_, d)) => {
                        corner_err = corner_err.max(d);
                        all_hit = false;
                    }
                    None => all_hit = false,
                }
            }
            report.push_margin(
                format!("branch {name}: corners map to corners"),
                all_hit && target_corners.is_empty(),
                corner_err.to_f64().unwrap(),
                format!("max corner error {:.3e}", corner_err.to_f64().unwrap()),
            );

            let mut v_err = F::zero();
            for i in 0..samples {
                let y = F::from_usize(i).unwrap() / F::from_usize(samples - 1).unwrap();
                for x in [b.domain_x.lo, b.domain_x.hi] {
                    let img = b.apply(Point::new(x, y));
                    let edge = img.x.min((F::one() - img.x).abs());
                    v_err = v_err.max(edge.abs());
                }
            }
            report.push_margin(
                format!("branch {name}: vertical boundaries stay vertical"),
                v_err <= tol,
                v_err.to_f64().unwrap(),
                String::new(),
            );

            let mut h_err = F::zero();
            for i in 0..samples {
                let x = b.domain_x.lo + b.domain_x.width() * F::from_usize(i).unwrap()
                    / F::from_usize(samples - 1).unwrap();
                for y in [F::zero(), F::one()] {
                    let img = b.apply(Point::new(x, y));
                    let d = (img.y - target_y.lo).abs().min((img.y - target_y.hi).abs());
                    h_err = h_err.max(d);
                }
            }
            report.push_margin(
                format!("branch {name}: horizontal boundaries stay horizontal"),
                h_err <= tol,
                h_err.to_f64().unwrap(),
                String::new(),
            );
        }

        let mut disjoint = true;
        let mut witness = String::new();
        for (i, a) in self.branches.iter().enumerate() {
            for b in &self.branches[i + 1..] {
                if !a.domain_x.disjoint_from(&b.domain_x) {
                    disjoint = false;
                    witness = format!(
                        "strips {} and {} overlap",
                        self.zip_system.s_name(a.label),
                        self.zip_system.s_name(b.label)
                    );
                }
            }
        }
        report.push("vertical strips pairwise disjoint", disjoint, witness);

        let h_a = self.h_interval(ZSymbol(0));
        let h_b = self.h_interval(ZSymbol(1));
        report.push(
            "horizontal strips disjoint",
            h_a.disjoint_from(&h_b),
            format!(
                "H_a = [{:.6}, {:.6}], H_b = [{:.6}, {:.6}]",
                h_a.lo.to_f64().unwrap(),
                h_a.hi.to_f64().unwrap(),
                h_b.lo.to_f64().unwrap(),
                h_b.hi.to_f64().unwrap()
            ),
        );
        report
    }

    /// Default certification constants: growth `mu = 1/alpha` (exact margin
    /// for the affine model) and cone apertures `mu_h = mu_v = 0.3`.
    pub fn default_cone_params(&self) -> ConeParams<F> {
        ConeParams { mu: self.params.beta(), mu_h: real(0.3), mu_v: real(0.3), grid_points: 5 }
    }

    /// Cone-invariance and growth verification. The derivative is constant
    /// on each affine branch, so one sample per branch is exhaustive.
    pub fn verify_cones(&self, params: &ConeParams<F>) -> Result<ConeReport, ModelError> {
        params.validate()?;
        Ok(cone_check(self.branches.iter().map(BranchMap::jacobian), params))
    }

    /// Strip refinement to the given depth: vertical strips indexed by
    /// S-words (pullbacks through branch inverses) and horizontal strips
    /// indexed by Z-words (pushforwards through the legs).
    pub fn refine(&self, depth: usize, cap: u64) -> Result<RefinementTree<F>, ModelError> {
        let s = self.zip_system.s_len() as u64;
        let required = s
            .checked_pow(depth as u32 + 1)
            .ok_or(ModelError::Cap { required: u64::MAX, cap })?;
        if required > cap {
            return Err(ModelError::Cap { required, cap });
        }

        let mut forward_levels: Vec<Vec<ForwardNode<F>>> = Vec::with_capacity(depth + 1);
        let base: Vec<ForwardNode<F>> = self
            .branches
            .iter()
            .map(|b| ForwardNode { word: vec![b.label], x: b.domain_x })
            .collect();
        forward_levels.push(base);
        for _ in 1..=depth {
            let prev = forward_levels.last().unwrap();
            let mut level = Vec::with_capacity(prev.len() * self.branches.len());
            for b in &self.branches {
                for node in prev {
                    let mut word = Vec::with_capacity(node.word.len() + 1);
                    word.push(b.label);
                    word.extend_from_slice(&node.word);
                    level.push(ForwardNode { word, x: b.pull_back_x(&node.x) });
                }
            }
            level.sort_by(|a, b| a.word.cmp(&b.word));
            forward_levels.push(level);
        }

        let mut backward_levels: Vec<Vec<BackwardNode<F>>> = Vec::with_capacity(depth + 1);
        let base: Vec<BackwardNode<F>> = self
            .zip_system
            .z_symbols()
            .map(|z| BackwardNode { word: vec![z], y: self.h_interval(z) })
            .collect();
        backward_levels.push(base);
        for _ in 1..=depth {
            let prev = backward_levels.last().unwrap();
            let mut level = Vec::with_capacity(prev.len() * 2);
            for node in prev {
                for z in self.zip_system.z_symbols() {
                    let mut word = node.word.clone();
                    word.push(z);
                    level.push(BackwardNode { word, y: self.push_forward_y(&node.y, z) });
                }
            }
            level.sort_by(|a, b| a.word.cmp(&b.word));
            backward_levels.push(level);
        }

        Ok(RefinementTree::from_levels(depth, forward_levels, backward_levels))
    }

    /// Image of a y-interval under the leg of `z`, intersected with `H_z`
    /// (the image always lands inside `H_z` for subsets of [0, 1]).
    pub(crate) fn push_forward_y(&self, y: &Interval<F>, z: ZSymbol) -> Interval<F> {
        let beta = self.params.beta();
        match z {
            ZSymbol(0) => y.affine_image(beta, self.params.y_a),
            _ => y.affine_image(-beta, self.params.y_b + beta),
        }
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            config: self.params.to_config(),
            alpha: self.params.alpha().to_f64().unwrap(),
            beta: self.params.beta().to_f64().unwrap(),
            delta0: self.params.delta0().to_f64().unwrap(),
            delta1: self.params.delta1().to_f64().unwrap(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchDump {
                    label: self.zip_system.s_name(b.label).to_string(),
                    fold: b.fold,
                    leg: b.leg,
                    domain_x: (
                        b.domain_x.lo.to_f64().unwrap(),
                        b.domain_x.hi.to_f64().unwrap(),
                    ),
                    a_x: b.a_x.to_f64().unwrap(),
                    b_x: b.b_x.to_f64().unwrap(),
                    a_y: b.a_y.to_f64().unwrap(),
                    b_y: b.b_y.to_f64().unwrap(),
                })
                .collect(),
            zip_system: self.zip_system.to_config(),
        }
    }
}

/// Induced symbolic system: S = strip labels (`1..N`, `1p..Np`), Z = {a, b},
/// tau maps a label to its leg.
pub fn induced_zip_system(n: usize) -> ZipSystem {
    let mut s_names: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    s_names.extend((1..=n).map(|k| format!("{k}p")));
    let mut tau = vec![0u16; n];
    tau.extend(vec![1u16; n]);
    ZipSystem::new(s_names, vec!["a".into(), "b".into()], tau)
        .expect("induced system is a valid zip system")
}

#[derive(Clone, Copy, Debug)]
pub struct ConeParams<F> {
    /// Growth constant: expansion factor must reach `1/mu`.
    pub mu: F,
    /// Aperture of the unstable cone about the x-axis.
    pub mu_h: F,
    /// Aperture of the stable cone about the y-axis.
    pub mu_v: F,
    pub grid_points: usize,
}

impl<F: Real> ConeParams<F> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.mu > F::zero() && self.mu < F::one() - self.mu_h * self.mu_v) {
            return Err(ModelError::Config(format!(
                "growth constant mu = {} must satisfy 0 < mu < 1 - mu_h*mu_v = {}",
                self.mu,
                F::one() - self.mu_h * self.mu_v
            )));
        }
        Ok(())
    }
}

/// Core cone computation over a set of sampled derivatives.
///
/// Unstable cone `{|eta| <= mu_h |xi|}` must map inside itself under each
/// derivative with `|xi|`-growth at least `1/mu`; the stable cone
/// `{|xi| <= mu_v |eta|}` must do the same under each inverse derivative
/// with `|eta|`-growth at least `1/mu`.
pub fn cone_check<F: Real>(
    jacobians: impl Iterator<Item = Jacobian<F>>,
    params: &ConeParams<F>,
) -> ConeReport {
    let tol = affine_tol::<F>();
    let mut unstable_margin = F::infinity();
    let mut unstable_growth = F::infinity();
    let mut stable_margin = F::infinity();
    let mut stable_growth = F::infinity();
    for m in jacobians {
        for t in [-params.mu_h, F::zero(), params.mu_h] {
            let (x, y) = m.apply((F::one(), t));
            unstable_margin = unstable_margin.min(params.mu_h * x.abs() - y.abs());
            unstable_growth = unstable_growth.min(x.abs() * params.mu);
        }
        let inv = m.inverse();
        for t in [-params.mu_v, F::zero(), params.mu_v] {
            let (x, y) = inv.apply((t, F::one()));
            stable_margin = stable_margin.min(params.mu_v * y.abs() - x.abs());
            stable_growth = stable_growth.min(y.abs() * params.mu);
        }
    }
    let passed = unstable_margin >= -tol
        && stable_margin >= -tol
        && unstable_growth >= F::one() - tol
        && stable_growth >= F::one() - tol;
    ConeReport {
        mu: params.mu.to_f64().unwrap(),
        mu_h: params.mu_h.to_f64().unwrap(),
        mu_v: params.mu_v.to_f64().unwrap(),
        unstable_aperture_margin: unstable_margin.to_f64().unwrap(),
        unstable_growth: unstable_growth.to_f64().unwrap(),
        stable_aperture_margin: stable_margin.to_f64().unwrap(),
        stable_growth: stable_growth.to_f64().unwrap(),
        passed,
    }
}

/// Vertical strip of points whose first `word.len()` iterates visit the
/// labeled strips in order; an exact x-interval in the affine model.
#[derive(Clone, Debug)]
pub struct ForwardNode<F> {
    pub word: Vec<SSymbol>,
    pub x: Interval<F>,
}

/// Horizontal strip of points lying in `f^{i-1}(H_{s_{-i}})` for each word
/// position; an exact y-interval in the affine model.
#[derive(Clone, Debug)]
pub struct BackwardNode<F> {
    pub word: Vec<ZSymbol>,
    pub y: Interval<F>,
}

/// Nested strip families `V^{s_0..s_k}`, `H_{s_{-k-1}..s_{-1}}` for depths
/// `0..=depth`, with the measured per-level contraction rates.
#[derive(Clone, Debug)]
pub struct RefinementTree<F> {
    pub depth: usize,
    pub forward_levels: Vec<Vec<ForwardNode<F>>>,
    pub backward_levels: Vec<Vec<BackwardNode<F>>>,
    pub alpha_v: Option<f64>,
    pub alpha_h: Option<f64>,
}

impl<F: Real> RefinementTree<F> {
    pub(crate) fn from_levels(
        depth: usize,
        forward_levels: Vec<Vec<ForwardNode<F>>>,
        backward_levels: Vec<Vec<BackwardNode<F>>>,
    ) -> Self {
        let widths = |level: &Vec<ForwardNode<F>>| -> f64 {
            level
                .iter()
                .map(|n| n.x.width().to_f64().unwrap())
                .fold(0.0, f64::max)
        };
        let heights = |level: &Vec<BackwardNode<F>>| -> f64 {
            level
                .iter()
                .map(|n| n.y.width().to_f64().unwrap())
                .fold(0.0, f64::max)
        };
        let ratio = |vals: Vec<f64>| {
            vals.windows(2)
                .map(|w| w[1] / w[0])
                .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
        };
        let alpha_v = ratio(forward_levels.iter().map(widths).collect());
        let alpha_h = ratio(backward_levels.iter().map(heights).collect());
        Self { depth, forward_levels, backward_levels, alpha_v, alpha_h }
    }

    pub fn deepest_forward(&self) -> &[ForwardNode<F>] {
        self.forward_levels.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn deepest_backward(&self) -> &[BackwardNode<F>] {
        self.backward_levels.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn forward_node(&self, word: &[SSymbol]) -> Option<&ForwardNode<F>> {
        let level = self.forward_levels.get(word.len().checked_sub(1)?)?;
        level.iter().find(|n| n.word == word)
    }
}

/// Serializable model dump with the derived branch coefficients.
#[derive(Clone, Debug, Serialize)]
pub struct ModelDump {
    pub config: HorseshoeConfig,
    pub alpha: f64,
    pub beta: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub branches: Vec<BranchDump>,
    pub zip_system: crate::symbolic::ZipSystemConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchDump {
    pub label: String,
    pub fold: usize,
    pub leg: Leg,
    pub domain_x: (f64, f64),
    pub a_x: f64,
    pub b_x: f64,
    pub a_y: f64,
    pub b_y: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::DEFAULT_ENUMERATION_CAP as CAP;
    use approx::assert_abs_diff_eq;

    fn model() -> HorseshoeModel<f64> {
        HorseshoeModel::build(HorseshoeParams::new(2, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn derived_parameters_match_closed_forms() {
        let p = model().params;
        assert_abs_diff_eq!(p.alpha(), 4.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta(), 1.0 / 4.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta0(), 0.05 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta1(), 1.0 + 0.1 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn first_strip_interval_matches_inversion() {
        let m = model();
        let v1 = m.branch(SSymbol(0)).unwrap().domain_x;
        // alpha x in [delta0, delta0 + 1].
        let d0 = 0.05 / 3.0;
        assert_abs_diff_eq!(v1.lo, d0 / 4.1, epsilon = 1e-15);
        assert_abs_diff_eq!(v1.hi, (d0 + 1.0) / 4.1, epsilon = 1e-15);
        assert_abs_diff_eq!(v1.lo, 0.004065040650406504, epsilon = 1e-12);
        assert_abs_diff_eq!(v1.hi, 0.24796747967479674, epsilon = 1e-12);
    }

    #[test]
    fn two_branches_per_leg() {
        let m = model();
        assert_eq!(m.branches.len(), 4);
        let onto_a = m.branches.iter().filter(|b| b.leg == Leg::A).count();
        assert_eq!(onto_a, 2);
        for b in &m.branches {
            let target = m.h_interval(b.leg.z_symbol());
            let img = b.image_y();
            assert_abs_diff_eq!(img.lo, target.lo, epsilon = 1e-15);
            assert_abs_diff_eq!(img.hi, target.hi, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_fold_gives_classical_horseshoe() {
        let m = HorseshoeModel::build(HorseshoeParams::new(1, 0.1).unwrap()).unwrap();
        assert_eq!(m.branches.len(), 2);
        assert_eq!(m.zip_system.s_len(), 2);
        assert_eq!(m.zip_system.z_len(), 2);
        // tau is a bijection here.
        for z in m.zip_system.z_symbols() {
            assert_eq!(m.zip_system.fiber(z).len(), 1);
        }
    }

    #[test]
    fn branch_fixed_point_is_fixed() {
        let m = model();
        let d0 = 0.05 / 3.0;
        let x = d0 / 3.1;
        let y = 0.2 / (1.0 - 1.0 / 4.1);
        assert_abs_diff_eq!(x, 0.005376344086021505, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 0.2645161290322581, epsilon = 1e-15);
        let (img, label) = m.apply(Point::new(x, y)).unwrap();
        assert_eq!(label, SSymbol(0));
        assert_abs_diff_eq!(img.x, x, epsilon = 1e-12);
        assert_abs_diff_eq!(img.y, y, epsilon = 1e-12);
    }

    #[test]
    fn image_heights_stay_in_target_strip() {
        let m = model();
        let b = m.branch(SSymbol(0)).unwrap();
        for i in 0..10 {
            let p = Point::new(
                b.domain_x.lo + b.domain_x.width() * (i as f64) / 9.0,
                (i as f64) / 9.0,
            );
            let (img, _) = m.apply(p).unwrap();
            assert!(img.y >= 0.2 - 1e-12 && img.y <= 0.2 + 1.0 / 4.1 + 1e-12);
        }
    }

    #[test]
    fn gap_point_escapes() {
        let m = model();
        assert!(matches!(m.apply(Point::new(0.5, 0.5)), Err(ModelError::Escape { .. })));
    }

    #[test]
    fn inverse_round_trips() {
        let m = model();
        for b in &m.branches {
            for i in 0..5 {
                for j in 0..5 {
                    let p = Point::new(
                        b.domain_x.lo + b.domain_x.width() * (i as f64) / 4.0,
                        (j as f64) / 4.0,
                    );
                    let (q, label) = m.apply(p).unwrap();
                    let back = m.apply_inverse(q, label).unwrap();
                    assert_abs_diff_eq!(back.x, p.x, epsilon = 1e-12);
                    assert_abs_diff_eq!(back.y, p.y, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn points_in_h_a_have_one_preimage_per_fold() {
        let m = model();
        let q = Point::new(0.37, 0.2 + 0.5 / 4.1);
        let mut labels = Vec::new();
        for b in &m.branches {
            if m.apply_inverse(q, b.label).is_ok() {
                labels.push(b.label);
            }
        }
        assert_eq!(labels.len(), 2);
        for label in labels {
            assert_eq!(m.zip_system.tau(label), ZSymbol(0));
        }
        // Wrong-leg inversion is a domain error.
        let q_b = Point::new(0.37, 0.75);
        assert!(m.apply_inverse(q_b, SSymbol(0)).is_err());
    }

    #[test]
    fn assumption1_passes_on_default_model() {
        let report = model().verify_assumption1();
        assert!(report.all_passed(), "failures: {:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn coinciding_h_strips_fail_disjointness() {
        let mut params = HorseshoeParams::new(2, 0.1).unwrap();
        params.y_b = params.y_a;
        let m = HorseshoeModel::build_unchecked(params);
        let report = m.verify_assumption1();
        assert!(!report.all_passed());
        assert!(report
            .failures()
            .any(|c| c.name.contains("horizontal strips disjoint")));
    }

    #[test]
    fn perturbed_offset_fails_corner_check() {
        let mut m = model();
        m.branches[0].b_x += 0.01;
        let report = m.verify_assumption1();
        assert!(report
            .failures()
            .any(|c| c.name.contains("corners") || c.name.contains("vertical")));
    }

    #[test]
    fn cones_pass_with_exact_margin_at_default_mu() {
        let m = model();
        let report = m.verify_cones(&m.default_cone_params()).unwrap();
        assert!(report.passed);
        // Growth factor alpha * mu = 1 exactly at mu = 1/alpha.
        assert_abs_diff_eq!(report.unstable_growth, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.stable_growth, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cone_mu_out_of_range_is_rejected() {
        let m = model();
        let params = ConeParams { mu: 0.999, mu_h: 0.5, mu_v: 0.5, grid_points: 3 };
        assert!(m.verify_cones(&params).is_err());
    }

    #[test]
    fn identity_derivative_fails_growth() {
        let params = ConeParams { mu: 1.0 / 4.1, mu_h: 0.3, mu_v: 0.3, grid_points: 1 };
        let report = cone_check([Jacobian::diagonal(1.0, 1.0)].into_iter(), &params);
        assert!(!report.passed);
        assert!(report.unstable_growth < 1.0);
    }

    #[test]
    fn refinement_counts_and_widths() {
        let m = model();
        let tree = m.refine(1, CAP).unwrap();
        assert_eq!(tree.forward_levels[0].len(), 4);
        assert_eq!(tree.forward_levels[1].len(), 16);
        assert_eq!(tree.backward_levels[1].len(), 4);
        let beta2 = (1.0f64 / 4.1).powi(2);
        for node in &tree.forward_levels[1] {
            assert_abs_diff_eq!(node.x.width(), beta2, epsilon = 1e-12);
        }
        for node in &tree.backward_levels[1] {
            assert_abs_diff_eq!(node.y.width(), beta2, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(tree.alpha_v.unwrap(), 1.0 / 4.1, epsilon = 1e-12);
        assert_abs_diff_eq!(tree.alpha_h.unwrap(), 1.0 / 4.1, epsilon = 1e-12);
    }

    #[test]
    fn children_nest_inside_parents() {
        let m = model();
        let tree = m.refine(3, CAP).unwrap();
        for level in 1..=3 {
            for node in &tree.forward_levels[level] {
                let parent = tree.forward_node(&node.word[..node.word.len() - 1]).unwrap();
                assert!(node.x.subset_of(&parent.x, 1e-14), "child escapes parent");
                assert!(node.x.width() < parent.x.width());
            }
        }
    }

    #[test]
    fn refinement_cap_is_enforced() {
        let m = model();
        assert!(matches!(m.refine(12, 1000), Err(ModelError::Cap { .. })));
    }

    #[test]
    fn forward_nodes_admit_their_word_as_orbit() {
        let m = model();
        let tree = m.refine(2, CAP).unwrap();
        for node in tree.deepest_forward() {
            for frac in [0.0, 0.5, 1.0] {
                // word.len() = depth + 1 successful applications: each iterate
                // f^0 .. f^depth lies in the labeled strip.
                let mut p = Point::new(node.x.lo + node.x.width() * frac, 0.3);
                for &expected in &node.word {
                    let (q, label) = m.apply(p).expect("stays in strips");
                    assert_eq!(label, expected);
                    p = q;
                }
            }
        }
    }

    #[test]
    fn default_anchors_fall_back_for_small_n() {
        let p = HorseshoeParams::<f64>::new(1, 0.1).unwrap();
        assert!(p.validate().is_ok());
        assert!(p.y_b + p.beta() < 1.0);
    }
}
