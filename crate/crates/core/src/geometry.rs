//! Lipschitz horizontal/vertical curves and strips on the unit square, the
//! contraction-mapping intersection of curve pairs, and the gap bound
//! between strip intersections.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{real, Real};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid strip: {0}")]
    InvalidStrip(String),
    #[error("not a contraction: mu_h * mu_v = {0} >= 1")]
    NotContraction(f64),
    #[error("fixed-point iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("strips are not nested: {0}")]
    NotNested(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Graph of `y = h(x)`.
    Horizontal,
    /// Graph of `x = v(y)`.
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Real> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Self) -> F {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Real> Interval<F> {
    pub fn new(a: F, b: F) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn unit() -> Self {
        Self { lo: F::zero(), hi: F::one() }
    }

    pub fn width(&self) -> F {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> F {
        (self.lo + self.hi) / real(2.0)
    }

    pub fn contains(&self, x: F, tol: F) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn subset_of(&self, other: &Self, tol: F) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn disjoint_from(&self, other: &Self) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }

    /// Image under the affine map `t -> a t + b` (endpoint order preserved).
    pub fn affine_image(&self, a: F, b: F) -> Self {
        Self::new(a * self.lo + b, a * self.hi + b)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<F> {
    pub x: Interval<F>,
    pub y: Interval<F>,
}

impl<F: Real> Rect<F> {
    pub fn new(x: Interval<F>, y: Interval<F>) -> Self {
        Self { x, y }
    }

    pub fn center(&self) -> Point<F> {
        Point::new(self.x.midpoint(), self.y.midpoint())
    }

    pub fn diagonal(&self) -> F {
        (self.x.width().powi(2) + self.y.width().powi(2)).sqrt()
    }

    pub fn contains(&self, p: &Point<F>, tol: F) -> bool {
        self.x.contains(p.x, tol) && self.y.contains(p.y, tol)
    }

    pub fn disjoint_from(&self, other: &Self) -> bool {
        self.x.disjoint_from(&other.x) || self.y.disjoint_from(&other.y)
    }
}

/// Uniform sample grid on `[0, 1]` used by curve validation and sup norms.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        // 2^10 + 1 points.
        Self { points: 1025 }
    }
}

impl GridSpec {
    pub fn coarse() -> Self {
        Self { points: 65 }
    }

    pub fn spacing<F: Real>(&self) -> F {
        F::one() / F::from_usize(self.points - 1).unwrap()
    }

    pub fn values<F: Real>(&self) -> impl Iterator<Item = F> + '_ {
        let n = self.points;
        (0..n).map(move |i| F::from_usize(i).unwrap() / F::from_usize(n - 1).unwrap())
    }
}

type Eval<F> = Arc<dyn Fn(F) -> F + Send + Sync>;

/// Graph of a Lipschitz function on `[0, 1]` with a declared bound on the
/// slope. Horizontal curves are `y = h(x)` (bound `mu_h`), vertical curves
/// `x = v(y)` (bound `mu_v`). Validity is checked on a sample grid.
#[derive(Clone)]
pub struct LipschitzCurve<F: Real> {
    orientation: Orientation,
    eval: Eval<F>,
    lipschitz: F,
}

impl<F: Real> std::fmt::Debug for LipschitzCurve<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LipschitzCurve")
            .field("orientation", &self.orientation)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl<F: Real> LipschitzCurve<F> {
    pub fn new(
        orientation: Orientation,
        eval: impl Fn(F) -> F + Send + Sync + 'static,
        lipschitz: F,
        grid: &GridSpec,
    ) -> Result<Self, GeometryError> {
        let curve = Self { orientation, eval: Arc::new(eval), lipschitz };
        curve.validate(grid)?;
        Ok(curve)
    }

    pub fn horizontal(
        eval: impl Fn(F) -> F + Send + Sync + 'static,
        mu: F,
        grid: &GridSpec,
    ) -> Result<Self, GeometryError> {
        Self::new(Orientation::Horizontal, eval, mu, grid)
    }

    pub fn vertical(
        eval: impl Fn(F) -> F + Send + Sync + 'static,
        mu: F,
        grid: &GridSpec,
    ) -> Result<Self, GeometryError> {
        Self::new(Orientation::Vertical, eval, mu, grid)
    }

    pub fn constant(orientation: Orientation, value: F) -> Self {
        Self { orientation, eval: Arc::new(move |_| value), lipschitz: F::zero() }
    }

    /// Piecewise-linear curve through equally spaced knot values.
    pub fn piecewise_linear(
        orientation: Orientation,
        knots: Vec<F>,
        lipschitz: F,
        grid: &GridSpec,
    ) -> Result<Self, GeometryError> {
        if knots.len() < 2 {
            return Err(GeometryError::InvalidCurve("need at least two knots".into()));
        }
        let knots = Arc::new(knots);
        let k = knots.clone();
        Self::new(orientation, move |t| interp_uniform(&k, t), lipschitz, grid)
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn lipschitz(&self) -> F {
        self.lipschitz
    }

    pub fn eval(&self, t: F) -> F {
        (self.eval)(t)
    }

    fn validate(&self, grid: &GridSpec) -> Result<(), GeometryError> {
        let tol = real::<F>(1e-9);
        let mut prev: Option<(F, F)> = None;
        for t in grid.values::<F>() {
            let v = self.eval(t);
            if !(v >= -tol && v <= F::one() + tol) {
                return Err(GeometryError::InvalidCurve(format!(
                    "value {v} at t = {t} leaves [0, 1]"
                )));
            }
            if let Some((t0, v0)) = prev {
                let quotient = (v - v0).abs() / (t - t0);
                if quotient > self.lipschitz * (F::one() + tol) + tol {
                    return Err(GeometryError::InvalidCurve(format!(
                        "difference quotient {quotient} exceeds bound {} near t = {t}",
                        self.lipschitz
                    )));
                }
            }
            prev = Some((t, v));
        }
        Ok(())
    }
}

/// Sup distance between two curves of the same orientation on a grid.
pub fn curve_sup_distance<F: Real>(a: &LipschitzCurve<F>, b: &LipschitzCurve<F>, grid: &GridSpec) -> F {
    grid.values::<F>()
        .map(|t| (a.eval(t) - b.eval(t)).abs())
        .fold(F::zero(), F::max)
}

/// Region between two non-intersecting curves of equal orientation.
#[derive(Clone, Debug)]
pub struct Strip<F: Real> {
    lower: LipschitzCurve<F>,
    upper: LipschitzCurve<F>,
}

impl<F: Real> Strip<F> {
    pub fn new(
        lower: LipschitzCurve<F>,
        upper: LipschitzCurve<F>,
        grid: &GridSpec,
    ) -> Result<Self, GeometryError> {
        if lower.orientation() != upper.orientation() {
            return Err(GeometryError::InvalidStrip("mixed orientations".into()));
        }
        for t in grid.values::<F>() {
            if lower.eval(t) >= upper.eval(t) {
                return Err(GeometryError::InvalidStrip(format!(
                    "boundaries not strictly ordered at t = {t}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Rectangle strip with constant boundaries.
    pub fn rectangle(orientation: Orientation, lo: F, hi: F, grid: &GridSpec) -> Result<Self, GeometryError> {
        Self::new(
            LipschitzCurve::constant(orientation, lo),
            LipschitzCurve::constant(orientation, hi),
            grid,
        )
    }

    pub fn orientation(&self) -> Orientation {
        self.lower.orientation()
    }

    pub fn lower(&self) -> &LipschitzCurve<F> {
        &self.lower
    }

    pub fn upper(&self) -> &LipschitzCurve<F> {
        &self.upper
    }

    pub fn lipschitz(&self) -> F {
        self.lower.lipschitz().max(self.upper.lipschitz())
    }

    /// Maximum boundary separation on the grid. The grid estimate is off by
    /// at most `(mu_lo + mu_up) * spacing` from the true maximum.
    pub fn width(&self, grid: &GridSpec) -> F {
        curve_sup_distance(&self.lower, &self.upper, grid)
    }

    pub fn width_slack(&self, grid: &GridSpec) -> F {
        (self.lower.lipschitz() + self.upper.lipschitz()) * grid.spacing()
    }

    /// Curve through the middle of the strip.
    pub fn midcurve(&self) -> LipschitzCurve<F> {
        let lo = self.lower.clone();
        let up = self.upper.clone();
        LipschitzCurve {
            orientation: self.orientation(),
            lipschitz: lo.lipschitz().max(up.lipschitz()),
            eval: Arc::new(move |t| (lo.eval(t) + up.eval(t)) / real(2.0)),
        }
    }

    /// Sampled-polyline form for serialization.
    pub fn to_sampled(&self, samples: usize) -> SampledStrip {
        let grid = GridSpec { points: samples.max(2) };
        let pair = |c: &LipschitzCurve<F>| {
            grid.values::<F>()
                .map(|t| (t.to_f64().unwrap(), c.eval(t).to_f64().unwrap()))
                .collect()
        };
        SampledStrip {
            orientation: self.orientation(),
            lower: pair(&self.lower),
            upper: pair(&self.upper),
            mu: self.lipschitz().to_f64().unwrap(),
        }
    }
}

/// Serialized strip: `{"orientation":"vertical","lower":[[t,x]..],"upper":..,"mu":..}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledStrip {
    pub orientation: Orientation,
    pub lower: Vec<(f64, f64)>,
    pub upper: Vec<(f64, f64)>,
    pub mu: f64,
}

/// Parameters of the fixed-point iteration for curve intersections.
#[derive(Clone, Copy, Debug)]
pub struct FixedPointParams<F> {
    pub tol: F,
    pub max_iter: usize,
}

impl<F: Real> Default for FixedPointParams<F> {
    fn default() -> Self {
        Self { tol: real::<F>(1e-12).max(F::epsilon() * real(100.0)), max_iter: 200 }
    }
}

/// Unique intersection of a horizontal and a vertical curve, computed as the
/// fixed point of `x -> v(h(x))`.
pub fn curve_intersection<F: Real>(
    h: &LipschitzCurve<F>,
    v: &LipschitzCurve<F>,
    params: &FixedPointParams<F>,
) -> Result<Point<F>, GeometryError> {
    curve_intersection_from(h, v, params, real(0.5))
}

/// Same as [`curve_intersection`] but with an explicit starting point, used
/// to confirm uniqueness from independent starts.
pub fn curve_intersection_from<F: Real>(
    h: &LipschitzCurve<F>,
    v: &LipschitzCurve<F>,
    params: &FixedPointParams<F>,
    start: F,
) -> Result<Point<F>, GeometryError> {
    debug_assert_eq!(h.orientation(), Orientation::Horizontal);
    debug_assert_eq!(v.orientation(), Orientation::Vertical);
    let mu = h.lipschitz() * v.lipschitz();
    if mu >= F::one() {
        return Err(GeometryError::NotContraction(mu.to_f64().unwrap_or(f64::NAN)));
    }
    let threshold = params.tol * (F::one() - mu) * real(0.5);
    let mut x = start;
    for _ in 0..params.max_iter {
        let next = v.eval(h.eval(x));
        let step = (next - x).abs();
        x = next;
        if step <= threshold {
            let y = h.eval(x);
            let residual = (x - v.eval(y)).abs();
            if residual <= params.tol {
                return Ok(Point::new(x, y));
            }
        }
    }
    Err(GeometryError::NoConvergence(params.max_iter))
}

/// Measured distance between paired strip intersections and its bound
/// `(||v - v'|| + ||h - h'||) / (1 - mu)`.
///
/// `gap` is the max-norm distance `max(|x1 - x2|, |y1 - y2|)`, the quantity
/// the contraction argument actually bounds: each coordinate difference
/// satisfies the inequality, but the Euclidean distance can exceed the
/// constant by up to sqrt(2) (take a near-zero-width vertical strip with a
/// steep `v`; then both component bounds are attained at once). The
/// Euclidean distance is reported alongside.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapBound {
    pub gap: f64,
    pub euclidean_gap: f64,
    pub bound: f64,
}

impl GapBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.gap <= self.bound + tol
    }
}

/// Intersects lower-with-lower and upper-with-upper boundaries of a
/// horizontal/vertical strip pair and compares the gap between `z1` and
/// `z2` against the contraction bound.
pub fn intersection_gap_bound<F: Real>(
    hs: &Strip<F>,
    vs: &Strip<F>,
    params: &FixedPointParams<F>,
    grid: &GridSpec,
) -> Result<GapBound, GeometryError> {
    if hs.orientation() != Orientation::Horizontal || vs.orientation() != Orientation::Vertical {
        return Err(GeometryError::InvalidStrip(
            "expected a horizontal strip and a vertical strip".into(),
        ));
    }
    let z1 = curve_intersection(hs.lower(), vs.lower(), params)?;
    let z2 = curve_intersection(hs.upper(), vs.upper(), params)?;
    let gap = (z1.x - z2.x).abs().max((z1.y - z2.y).abs());
    let mu = hs.lipschitz() * vs.lipschitz();
    let norm_h = hs.width(grid);
    let norm_v = vs.width(grid);
    let bound = (norm_v + norm_h) / (F::one() - mu);
    Ok(GapBound {
        gap: gap.to_f64().unwrap(),
        euclidean_gap: z1.dist(&z2).to_f64().unwrap(),
        bound: bound.to_f64().unwrap(),
    })
}

/// Limit of a nested sequence of strips with vanishing widths, approximated
/// by the midcurve of the last strip. Returns the curve and the error bound
/// `width/2 + grid slack`.
pub fn nested_limit<F: Real>(
    strips: &[Strip<F>],
    grid: &GridSpec,
) -> Result<(LipschitzCurve<F>, F), GeometryError> {
    let last = strips.last().ok_or_else(|| GeometryError::NotNested("no strips given".into()))?;
    let tol = real::<F>(1e-9);
    for (k, pair) in strips.windows(2).enumerate() {
        let (outer, inner) = (&pair[0], &pair[1]);
        if outer.orientation() != inner.orientation() {
            return Err(GeometryError::NotNested(format!("orientation changes at step {k}")));
        }
        for t in grid.values::<F>() {
            if inner.lower().eval(t) < outer.lower().eval(t) - tol
                || inner.upper().eval(t) > outer.upper().eval(t) + tol
            {
                return Err(GeometryError::NotNested(format!(
                    "strip {} leaves strip {k} at t = {t}",
                    k + 1
                )));
            }
        }
        if inner.width(grid) >= outer.width(grid) + tol {
            return Err(GeometryError::NotNested(format!("widths do not decrease at step {k}")));
        }
    }
    let error = last.width(grid) / real(2.0) + last.width_slack(grid) / real(2.0);
    Ok((last.midcurve(), error))
}

fn interp_uniform<F: Real>(knots: &[F], t: F) -> F {
    let n = knots.len();
    let pos = t.max(F::zero()).min(F::one()) * F::from_usize(n - 1).unwrap();
    let i = pos.floor().to_usize().unwrap_or(0).min(n - 2);
    let frac = pos - F::from_usize(i).unwrap();
    knots[i] + (knots[i + 1] - knots[i]) * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn rectangle_strip_width_is_constant_separation() {
        let s = Strip::rectangle(Orientation::Vertical, 0.1f64, 0.3, &grid()).unwrap();
        assert_abs_diff_eq!(s.width(&grid()), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn sloped_strip_width_attained_at_endpoint() {
        // v(y) = 0.1, v'(y) = 0.12 + 0.05 y: separation 0.02 + 0.05 y peaks
        // at y = 1.
        let lo = LipschitzCurve::vertical(|_: f64| 0.1, 0.0, &grid()).unwrap();
        let up = LipschitzCurve::vertical(|y: f64| 0.12 + 0.05 * y, 0.05, &grid()).unwrap();
        let s = Strip::new(lo, up, &grid()).unwrap();
        assert_abs_diff_eq!(s.width(&grid()), 0.07, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_strip_rejected() {
        let c = LipschitzCurve::constant(Orientation::Vertical, 0.4f64);
        assert!(Strip::new(c.clone(), c, &grid()).is_err());
    }

    #[test]
    fn lipschitz_violation_rejected() {
        let steep = LipschitzCurve::horizontal(|x: f64| (2.0 * x).min(1.0), 0.5, &grid());
        assert!(steep.is_err());
    }

    #[test]
    fn range_violation_rejected() {
        let out = LipschitzCurve::horizontal(|x: f64| 0.9 + 0.4 * x, 0.5, &grid());
        assert!(out.is_err());
    }

    #[test]
    fn constant_curves_intersect_immediately() {
        let h = LipschitzCurve::constant(Orientation::Horizontal, 0.5f64);
        let v = LipschitzCurve::constant(Orientation::Vertical, 0.25f64);
        let p = curve_intersection(&h, &v, &FixedPointParams::default()).unwrap();
        assert_abs_diff_eq!(p.x, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn linear_curves_intersect_at_origin() {
        let h = LipschitzCurve::horizontal(|x: f64| 0.5 * x, 0.5, &grid()).unwrap();
        let v = LipschitzCurve::vertical(|y: f64| 0.5 * y, 0.5, &grid()).unwrap();
        let p = curve_intersection(&h, &v, &FixedPointParams::default()).unwrap();
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-11);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn affine_curves_match_closed_form() {
        // x* solves x = 0.1 + 0.4 (0.2 + 0.3 x), i.e. x* = 0.18 / 0.88.
        let h = LipschitzCurve::horizontal(|x: f64| 0.2 + 0.3 * x, 0.3, &grid()).unwrap();
        let v = LipschitzCurve::vertical(|y: f64| 0.1 + 0.4 * y, 0.4, &grid()).unwrap();
        let p = curve_intersection(&h, &v, &FixedPointParams::default()).unwrap();
        assert_abs_diff_eq!(p.x, 0.18 / 0.88, epsilon = 1e-11);
        assert_abs_diff_eq!(p.y, 0.2 + 0.3 * (0.18 / 0.88), epsilon = 1e-11);
    }

    #[test]
    fn non_contraction_is_rejected() {
        let h = LipschitzCurve::horizontal(|x: f64| x, 1.0, &grid()).unwrap();
        let v = LipschitzCurve::vertical(|y: f64| y, 1.0, &grid()).unwrap();
        assert!(matches!(
            curve_intersection(&h, &v, &FixedPointParams::default()),
            Err(GeometryError::NotContraction(_))
        ));
    }

    #[test]
    fn gap_bound_for_rectangles() {
        // Constant boundaries: components (dx, dy) = (0.3, 0.3), bound dx + dy.
        let hs = Strip::rectangle(Orientation::Horizontal, 0.2f64, 0.5, &grid()).unwrap();
        let vs = Strip::rectangle(Orientation::Vertical, 0.1f64, 0.4, &grid()).unwrap();
        let gb =
            intersection_gap_bound(&hs, &vs, &FixedPointParams::default(), &grid()).unwrap();
        assert_abs_diff_eq!(gb.gap, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(gb.euclidean_gap, (0.09f64 + 0.09).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(gb.bound, 0.6, epsilon = 1e-12);
        assert!(gb.holds(1e-12));
        assert!(gb.euclidean_gap <= gb.bound + 1e-12);
    }

    #[test]
    fn euclidean_gap_can_exceed_the_componentwise_bound() {
        // Steep v with a near-degenerate vertical strip: both component
        // bounds are attained simultaneously, so the Euclidean distance
        // overshoots (V + H)/(1 - mu) while the max-norm gap respects it.
        let h = LipschitzCurve::horizontal(|x: f64| 0.1 * x, 0.1, &grid()).unwrap();
        let h2 = LipschitzCurve::horizontal(|x: f64| 0.1 * x + 0.2, 0.1, &grid()).unwrap();
        let v = LipschitzCurve::vertical(|y: f64| 0.6 * y + 0.1, 0.6, &grid()).unwrap();
        let v2 = LipschitzCurve::vertical(|y: f64| 0.6 * y + 0.1 + 1e-9, 0.6, &grid()).unwrap();
        let hs = Strip::new(h, h2, &grid()).unwrap();
        let vs = Strip::new(v, v2, &grid()).unwrap();
        let gb =
            intersection_gap_bound(&hs, &vs, &FixedPointParams::default(), &grid()).unwrap();
        assert!(gb.holds(1e-9));
        assert!(gb.euclidean_gap > gb.bound, "constructed overshoot must appear");
        assert!(gb.euclidean_gap <= std::f64::consts::SQRT_2 * gb.bound + 1e-9);
    }

    #[test]
    fn zero_width_pair_has_zero_gap() {
        let h = LipschitzCurve::horizontal(|x: f64| 0.4 + 0.1 * x, 0.1, &grid()).unwrap();
        let v = LipschitzCurve::vertical(|y: f64| 0.6 - 0.1 * y, 0.1, &grid()).unwrap();
        let z1 = curve_intersection(&h, &v, &FixedPointParams::default()).unwrap();
        let z2 = curve_intersection(&h, &v, &FixedPointParams::default()).unwrap();
        assert_abs_diff_eq!(z1.dist(&z2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn nested_rectangles_converge_to_midline() {
        let strips: Vec<Strip<f64>> = (0..12)
            .map(|k| {
                Strip::rectangle(
                    Orientation::Horizontal,
                    0.4,
                    0.4 + 0.5f64.powi(k),
                    &grid(),
                )
                .unwrap()
            })
            .collect();
        let (limit, err) = nested_limit(&strips, &grid()).unwrap();
        assert!(err <= 0.5f64.powi(11) / 2.0 + 1e-12);
        assert_abs_diff_eq!(limit.eval(0.3), 0.4 + 0.5f64.powi(11) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn non_nested_strips_rejected() {
        let a = Strip::rectangle(Orientation::Horizontal, 0.1f64, 0.3, &grid()).unwrap();
        let b = Strip::rectangle(Orientation::Horizontal, 0.5f64, 0.6, &grid()).unwrap();
        assert!(matches!(nested_limit(&[a, b], &grid()), Err(GeometryError::NotNested(_))));
    }

    #[test]
    fn generic_scalar_instantiates_in_f32() {
        let h = LipschitzCurve::<f32>::constant(Orientation::Horizontal, 0.5);
        let v = LipschitzCurve::<f32>::constant(Orientation::Vertical, 0.25);
        let p = curve_intersection(&h, &v, &FixedPointParams::default()).unwrap();
        assert!((p.x - 0.25).abs() < 1e-6);
    }
}
