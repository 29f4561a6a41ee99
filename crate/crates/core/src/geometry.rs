//! Half-plane geometry: points of the meridian plane, rotations about the
//! `y`-axis, generator curves with their differential frames, and the
//! right-most portion of a sampled set.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point `x + iy` of the closed right half-plane. `x` is the distance from
/// the rotation axis, `y` the height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Complex conjugate, i.e. the mirror image in the `x`-axis.
    pub fn conj(self) -> Self {
        Self::new(self.x, -self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for PlanePoint {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<PlanePoint> for [f64; 2] {
    fn from(p: PlanePoint) -> Self {
        [p.x, p.y]
    }
}

/// Cartesian point of 3-space; `y` is the rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacePoint {
    pub x: f64,
    pub y: f64,
    pub zeta: f64,
}

impl SpacePoint {
    pub const fn new(x: f64, y: f64, zeta: f64) -> Self {
        Self { x, y, zeta }
    }

    pub fn dist_sq(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.zeta - other.zeta;
        dx * dx + dy * dy + dz * dz
    }

    pub fn dist(self, other: Self) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Reflection `w_* = -conj(w)` in the rotation axis.
pub fn reflect(w: PlanePoint) -> PlanePoint {
    PlanePoint::new(-w.x, w.y)
}

/// Rotation about the `y`-axis through angle `t`.
pub fn rotate(p: SpacePoint, t: f64) -> SpacePoint {
    let (s, c) = t.sin_cos();
    SpacePoint::new(p.x * c - p.zeta * s, p.y, p.x * s + p.zeta * c)
}

/// Places the plane point `z` on the surface of revolution at angle `phi`.
pub fn lift_to_surface(z: PlanePoint, phi: f64) -> Result<SpacePoint> {
    if z.x < 0.0 {
        return Err(Error::NegativeAbscissa { x: z.x });
    }
    Ok(lift_unchecked(z, phi))
}

#[inline]
pub(crate) fn lift_unchecked(z: PlanePoint, phi: f64) -> SpacePoint {
    let (s, c) = phi.sin_cos();
    SpacePoint::new(z.x * c, z.y, z.x * s)
}

fn default_angles() -> [f64; 2] {
    [-PI, PI]
}

/// Generator curve `gamma: [a, b] -> H+` in its native parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorCurve {
    /// `center + radius (cos t, sin t)` for `t` in `angles`.
    Circle {
        center: PlanePoint,
        radius: f64,
        #[serde(default = "default_angles")]
        angles: [f64; 2],
    },
    /// `(abscissa, t)` for `t` in `range`.
    VerticalSegment { abscissa: f64, range: [f64; 2] },
    /// `center + (a cos t, b sin t)` for `t` in `angles`.
    Ellipse {
        center: PlanePoint,
        semi_axes: [f64; 2],
        #[serde(default = "default_angles")]
        angles: [f64; 2],
    },
    /// Piecewise linear through the vertices; `t = k` is vertex `k`.
    Polyline { vertices: Vec<PlanePoint> },
}

/// Unit tangent, unit normal and curvature with respect to arclength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveFrame {
    pub point: PlanePoint,
    pub tangent: [f64; 2],
    /// `None` on straight pieces, where `T' = 0`.
    pub normal: Option<[f64; 2]>,
    pub curvature: f64,
}

/// Curvature below this is treated as a straight piece.
const STRAIGHT_EPS: f64 = 1e-14;

impl GeneratorCurve {
    pub fn circle(center: PlanePoint, radius: f64) -> Self {
        Self::Circle { center, radius, angles: default_angles() }
    }

    pub fn circle_arc(center: PlanePoint, radius: f64, lo: f64, hi: f64) -> Self {
        Self::Circle { center, radius, angles: [lo, hi] }
    }

    pub fn vertical_segment(abscissa: f64, lo: f64, hi: f64) -> Self {
        Self::VerticalSegment { abscissa, range: [lo, hi] }
    }

    pub fn ellipse(center: PlanePoint, a: f64, b: f64) -> Self {
        Self::Ellipse { center, semi_axes: [a, b], angles: default_angles() }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Circle { .. } => "circle",
            Self::VerticalSegment { .. } => "vertical_segment",
            Self::Ellipse { .. } => "ellipse",
            Self::Polyline { .. } => "polyline",
        }
    }

    /// Parameter domain `[a, b]`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Circle { angles, .. } | Self::Ellipse { angles, .. } => (angles[0], angles[1]),
            Self::VerticalSegment { range, .. } => (range[0], range[1]),
            Self::Polyline { vertices } => (0.0, vertices.len().saturating_sub(1) as f64),
        }
    }

    /// True when the curve is closed and its parameter is periodic.
    pub fn is_closed(&self) -> bool {
        match self {
            Self::Circle { angles, .. } | Self::Ellipse { angles, .. } => {
                (angles[1] - angles[0] - TAU).abs() <= 1e-6
            }
            Self::VerticalSegment { .. } => false,
            Self::Polyline { vertices } => {
                vertices.len() > 2 && vertices.first() == vertices.last()
            }
        }
    }

    /// Checks the shape parameters and that the image stays in `H+`.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.domain();
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidCurve(format!("empty parameter domain [{a}, {b}]")));
        }
        match self {
            Self::Circle { center, radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.is_finite() {
                    return Err(Error::InvalidCurve(format!("circle radius {radius}")));
                }
            }
            Self::Ellipse { center, semi_axes, .. } => {
                if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) || !center.is_finite() {
                    return Err(Error::InvalidCurve(format!("ellipse semi-axes {semi_axes:?}")));
                }
            }
            Self::VerticalSegment { abscissa, .. } => {
                if !(*abscissa > 0.0 && abscissa.is_finite()) {
                    return Err(Error::InvalidCurve(format!("segment abscissa {abscissa}")));
                }
            }
            Self::Polyline { vertices } => {
                if vertices.len() < 2 {
                    return Err(Error::InvalidCurve("polyline needs two vertices".into()));
                }
            }
        }
        if b - a > TAU + 1e-6 && !matches!(self, Self::Polyline { .. } | Self::VerticalSegment { .. }) {
            return Err(Error::InvalidCurve("angle range exceeds one turn".into()));
        }
        let min_x = self.min_abscissa();
        if min_x < 0.0 {
            return Err(Error::InvalidCurve(format!("curve leaves H+ (min x = {min_x})")));
        }
        Ok(())
    }

    /// Smallest `x` over the parameter domain.
    pub fn min_abscissa(&self) -> f64 {
        match self {
            Self::Circle { center, radius, angles } => {
                center.x + radius * min_cos(angles[0], angles[1])
            }
            Self::Ellipse { center, semi_axes, angles } => {
                center.x + semi_axes[0] * min_cos(angles[0], angles[1])
            }
            Self::VerticalSegment { abscissa, .. } => *abscissa,
            Self::Polyline { vertices } => vertices.iter().map(|v| v.x).fold(f64::INFINITY, f64::min),
        }
    }

    fn check_param(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::ParameterOutOfDomain { t, lo, hi })
        }
    }

    /// `gamma(t)`.
    pub fn eval(&self, t: f64) -> Result<PlanePoint> {
        self.check_param(t)?;
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> PlanePoint {
        match self {
            Self::Circle { center, radius, .. } => {
                let (s, c) = t.sin_cos();
                PlanePoint::new(center.x + radius * c, center.y + radius * s)
            }
            Self::Ellipse { center, semi_axes, .. } => {
                let (s, c) = t.sin_cos();
                PlanePoint::new(center.x + semi_axes[0] * c, center.y + semi_axes[1] * s)
            }
            Self::VerticalSegment { abscissa, .. } => PlanePoint::new(*abscissa, t),
            Self::Polyline { vertices } => {
                let (k, f) = polyline_segment(vertices.len(), t);
                let p = vertices[k];
                let q = vertices[k + 1];
                PlanePoint::new(p.x + f * (q.x - p.x), p.y + f * (q.y - p.y))
            }
        }
    }

    /// First derivative `gamma'(t)` in the native parameter. Polylines use
    /// the segment to the right of a vertex (left at the final vertex).
    pub fn derivative(&self, t: f64) -> Result<[f64; 2]> {
        self.check_param(t)?;
        Ok(self.derivative_unchecked(t))
    }

    pub(crate) fn derivative_unchecked(&self, t: f64) -> [f64; 2] {
        match self {
            Self::Circle { radius, .. } => {
                let (s, c) = t.sin_cos();
                [-radius * s, radius * c]
            }
            Self::Ellipse { semi_axes, .. } => {
                let (s, c) = t.sin_cos();
                [-semi_axes[0] * s, semi_axes[1] * c]
            }
            Self::VerticalSegment { .. } => [0.0, 1.0],
            Self::Polyline { vertices } => {
                let (k, _) = polyline_segment(vertices.len(), t);
                [vertices[k + 1].x - vertices[k].x, vertices[k + 1].y - vertices[k].y]
            }
        }
    }

    /// Second derivative `gamma''(t)`; errors for polylines.
    pub fn second_derivative(&self, t: f64) -> Result<[f64; 2]> {
        self.check_param(t)?;
        match self {
            Self::Circle { radius, .. } => {
                let (s, c) = t.sin_cos();
                Ok([-radius * c, -radius * s])
            }
            Self::Ellipse { semi_axes, .. } => {
                let (s, c) = t.sin_cos();
                Ok([-semi_axes[0] * c, -semi_axes[1] * s])
            }
            Self::VerticalSegment { .. } => Ok([0.0, 0.0]),
            Self::Polyline { .. } => Err(Error::FrameUnavailable { kind: "polyline" }),
        }
    }

    /// Arclength frame at `t`. The normal is `T'/|T'|`, which for a
    /// counterclockwise circle points to the center.
    pub fn frame(&self, t: f64) -> Result<CurveFrame> {
        if let Self::Polyline { .. } = self {
            return Err(Error::FrameUnavailable { kind: "polyline" });
        }
        let point = self.eval(t)?;
        let d1 = self.derivative_unchecked(t);
        let d2 = self.second_derivative(t)?;
        let speed = d1[0].hypot(d1[1]);
        if speed == 0.0 || !speed.is_finite() {
            return Err(Error::DegenerateDerivative { t });
        }
        let tangent = [d1[0] / speed, d1[1] / speed];
        let signed = (d1[0] * d2[1] - d1[1] * d2[0]) / (speed * speed * speed);
        let curvature = signed.abs();
        let normal = if curvature <= STRAIGHT_EPS {
            None
        } else {
            let sgn = signed.signum();
            Some([-sgn * tangent[1], sgn * tangent[0]])
        };
        Ok(CurveFrame { point, tangent, normal, curvature })
    }

    /// `n` parameters spread over the domain. Open curves include both
    /// endpoints; closed curves use `n` cells of a full period, centered so
    /// that the set is mirror-symmetric about the domain midpoint.
    pub fn node_params(&self, n: usize) -> Vec<f64> {
        let (a, b) = self.domain();
        let mid = 0.5 * (a + b);
        if n == 1 {
            return vec![mid];
        }
        let half = (n as f64 - 1.0) / 2.0;
        let step = if self.is_closed() { (b - a) / n as f64 } else { (b - a) / (n as f64 - 1.0) };
        (0..n)
            .map(|k| {
                let t = mid + (k as f64 - half) * step;
                t.clamp(a, b)
            })
            .collect()
    }

    /// `x_A(y)`: the largest abscissa of the curve at height `y`, or `None`
    /// if the curve does not reach that height.
    pub fn rightmost_x(&self, y: f64) -> Option<f64> {
        const SLACK: f64 = 1e-12;
        match self {
            Self::Circle { center, radius, angles } => {
                conic_rightmost(center, *radius, *radius, *angles, y, SLACK)
            }
            Self::Ellipse { center, semi_axes, angles } => {
                conic_rightmost(center, semi_axes[0], semi_axes[1], *angles, y, SLACK)
            }
            Self::VerticalSegment { abscissa, range } => {
                (y >= range[0] - SLACK && y <= range[1] + SLACK).then_some(*abscissa)
            }
            Self::Polyline { vertices } => {
                let mut best: Option<f64> = None;
                for seg in vertices.windows(2) {
                    let (p, q) = (seg[0], seg[1]);
                    let (lo, hi) = (p.y.min(q.y), p.y.max(q.y));
                    if y < lo - SLACK || y > hi + SLACK {
                        continue;
                    }
                    let x = if (q.y - p.y).abs() <= SLACK {
                        p.x.max(q.x)
                    } else {
                        let f = ((y - p.y) / (q.y - p.y)).clamp(0.0, 1.0);
                        p.x + f * (q.x - p.x)
                    };
                    best = Some(best.map_or(x, |b: f64| b.max(x)));
                }
                best
            }
        }
    }
}

fn polyline_segment(n_vertices: usize, t: f64) -> (usize, f64) {
    let last = n_vertices - 2;
    let k = (t.floor().max(0.0) as usize).min(last);
    (k, t - k as f64)
}

/// Minimum of `cos t` over `[lo, hi]`.
fn min_cos(lo: f64, hi: f64) -> f64 {
    let mut m = lo.cos().min(hi.cos());
    // odd multiples of pi inside the range
    let k = ((lo - PI) / TAU).ceil();
    if PI + k * TAU <= hi {
        m = -1.0;
    }
    m
}

fn conic_rightmost(
    center: &PlanePoint,
    a: f64,
    b: f64,
    angles: [f64; 2],
    y: f64,
    slack: f64,
) -> Option<f64> {
    let q = (y - center.y) / b;
    if q.abs() > 1.0 + slack {
        return None;
    }
    let base = q.clamp(-1.0, 1.0).asin();
    let mut best: Option<f64> = None;
    for root in [base, PI - base] {
        let k_lo = ((angles[0] - slack - root) / TAU).ceil() as i64;
        let k_hi = ((angles[1] + slack - root) / TAU).floor() as i64;
        if k_lo <= k_hi {
            let x = center.x + a * root.cos();
            best = Some(best.map_or(x, |v: f64| v.max(x)));
        }
    }
    best
}

/// Right-most portion of a finite point set: for every height bin, the
/// point(s) with maximal abscissa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RightmostSet {
    /// `(y, x_A(y))`, one entry per bin, sorted by `y`.
    pub samples: Vec<(f64, f64)>,
    /// The retained input points (ties included), sorted by `(y, x)`.
    pub points: Vec<PlanePoint>,
    /// Sub-curve carrying the set, when it was extracted from a curve with a
    /// known right-most arc.
    pub as_curve: Option<GeneratorCurve>,
}

/// Default height-bin width for [`rightmost`].
pub const DEFAULT_Y_TOLERANCE: f64 = 1e-9;

/// Extracts `A_+` from a sampled set. Points whose heights chain within
/// `y_tol` of the first height of the bin share a bin.
pub fn rightmost(points: &[PlanePoint], y_tol: f64) -> Result<RightmostSet> {
    if points.is_empty() {
        return Err(Error::EmptyInput("rightmost needs at least one point"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|p, q| p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x)));

    let mut samples = Vec::new();
    let mut kept = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let y0 = sorted[start].y;
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].y - y0 <= y_tol {
            end += 1;
        }
        let bin = &sorted[start..end];
        let x_max = bin.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let mut best: Vec<PlanePoint> = bin.iter().copied().filter(|p| p.x == x_max).collect();
        best.sort_by(|p, q| p.y.partial_cmp(&q.y).unwrap_or(Ordering::Equal));
        samples.push((best[0].y, x_max));
        kept.extend(best);
        start = end;
    }
    Ok(RightmostSet { samples, points: kept, as_curve: None })
}

impl RightmostSet {
    /// Samples the curve at `n` parameters and extracts the right-most set;
    /// circles and segments also carry the exact right-most arc.
    pub fn from_curve(curve: &GeneratorCurve, n: usize, y_tol: f64) -> Result<Self> {
        curve.validate()?;
        let points: Vec<PlanePoint> =
            curve.node_params(n).into_iter().map(|t| curve.eval_unchecked(t)).collect();
        let mut set = rightmost(&points, y_tol)?;
        set.as_curve = match curve {
            GeneratorCurve::VerticalSegment { .. } => Some(curve.clone()),
            GeneratorCurve::Circle { center, radius, angles } => {
                if curve.is_closed() {
                    Some(GeneratorCurve::circle_arc(*center, *radius, -PI / 2.0, PI / 2.0))
                } else if angles[0] >= -PI / 2.0 && angles[1] <= PI / 2.0 {
                    Some(curve.clone())
                } else {
                    None
                }
            }
            _ => None,
        };
        Ok(set)
    }

    /// Largest stored abscissa at height `y` (within `y_tol`).
    pub fn x_at(&self, y: f64, y_tol: f64) -> Option<f64> {
        self.samples
            .iter()
            .filter(|(ys, _)| (ys - y).abs() <= y_tol)
            .map(|&(_, x)| x)
            .reduce(f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn reflect_examples() {
        assert_eq!(reflect(PlanePoint::new(1.0, 2.0)), PlanePoint::new(-1.0, 2.0));
        assert_eq!(reflect(PlanePoint::new(0.0, 5.0)).y, 5.0);
        assert_eq!(reflect(PlanePoint::new(0.0, 5.0)).x.abs(), 0.0);
        let w = PlanePoint::new(3.7, -1.2);
        assert_eq!(reflect(reflect(w)), w);
    }

    #[test]
    fn rotate_examples() {
        let p = rotate(SpacePoint::new(1.0, 0.0, 0.0), PI);
        assert_abs_diff_eq!(p.x, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.zeta, 0.0, epsilon = 1e-15);
        let q = SpacePoint::new(2.0, 3.0, 4.0);
        assert_eq!(rotate(q, 0.0), q);
        let z = SpacePoint::new(2.0, 1.0, 0.0);
        let w = SpacePoint::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(rotate(z, PI / 2.0).dist_sq(w), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn lift_examples() {
        let p = lift_to_surface(PlanePoint::new(4.0, 0.0), 0.0).unwrap();
        assert_eq!(p, SpacePoint::new(4.0, 0.0, 0.0));
        let p = lift_to_surface(PlanePoint::new(4.0, 0.0), PI).unwrap();
        assert_abs_diff_eq!(p.x, -4.0, epsilon = 1e-15);
        let p = lift_to_surface(PlanePoint::new(3.0, 1.0), PI / 2.0).unwrap();
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-15);
        assert_eq!(p.y, 1.0);
        assert_abs_diff_eq!(p.zeta, 3.0, epsilon = 1e-15);
        assert!(matches!(
            lift_to_surface(PlanePoint::new(-0.1, 0.0), 0.0),
            Err(Error::NegativeAbscissa { .. })
        ));
    }

    #[test]
    fn curve_eval_examples() {
        let c = GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0);
        assert_eq!(c.eval(0.0).unwrap(), PlanePoint::new(4.0, 0.0));
        let p = c.eval(PI / 2.0).unwrap();
        assert_abs_diff_eq!(p.x, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 1.0, epsilon = 1e-15);
        let s = GeneratorCurve::vertical_segment(2.0, 0.0, 1.0);
        assert_eq!(s.eval(0.5).unwrap(), PlanePoint::new(2.0, 0.5));
        assert!(matches!(s.eval(1.5), Err(Error::ParameterOutOfDomain { .. })));
    }

    #[test]
    fn polyline_eval() {
        let p = GeneratorCurve::Polyline {
            vertices: vec![[1.0, 0.0].into(), [2.0, 1.0].into(), [1.0, 2.0].into()],
        };
        assert_eq!(p.eval(0.5).unwrap(), PlanePoint::new(1.5, 0.5));
        assert_eq!(p.eval(2.0).unwrap(), PlanePoint::new(1.0, 2.0));
        assert_eq!(p.derivative(2.0).unwrap(), [-1.0, 1.0]);
        assert!(matches!(p.frame(0.5), Err(Error::FrameUnavailable { .. })));
        assert_eq!(p.rightmost_x(1.0), Some(2.0));
        assert_eq!(p.rightmost_x(0.25), Some(1.25));
        assert_eq!(p.rightmost_x(3.0), None);
    }

    #[test]
    fn frame_examples() {
        let c = GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0);
        let f = c.frame(0.0).unwrap();
        assert_abs_diff_eq!(f.curvature, 1.0, epsilon = 1e-15);
        let n = f.normal.unwrap();
        assert_abs_diff_eq!(n[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n[1], 0.0, epsilon = 1e-15);

        let s = GeneratorCurve::vertical_segment(2.0, 0.0, 1.0);
        let f = s.frame(0.3).unwrap();
        assert_eq!(f.curvature, 0.0);
        assert!(f.normal.is_none());

        let e = GeneratorCurve::ellipse(PlanePoint::new(3.0, 0.0), 2.0, 1.0);
        assert_abs_diff_eq!(e.frame(0.0).unwrap().curvature, 2.0, epsilon = 1e-14);
    }

    /// Arclength-normalized tangent differentiated numerically.
    fn fd_curvature(c: &GeneratorCurve, t: f64, h: f64) -> f64 {
        let unit = |t: f64| {
            let d = c.derivative_unchecked(t);
            let s = d[0].hypot(d[1]);
            ([d[0] / s, d[1] / s], s)
        };
        let (tp, _) = unit(t + h);
        let (tm, _) = unit(t - h);
        let (_, speed) = unit(t);
        let dx = (tp[0] - tm[0]) / (2.0 * h);
        let dy = (tp[1] - tm[1]) / (2.0 * h);
        dx.hypot(dy) / speed
    }

    #[test]
    fn ellipse_curvature_closed_form_and_fd() {
        let (a, b) = (2.0, 1.0);
        let e = GeneratorCurve::ellipse(PlanePoint::new(3.0, 0.0), a, b);
        for k in 0..50 {
            let t = -3.0 + 0.12 * k as f64;
            let (s, c) = t.sin_cos();
            let closed = a * b / (a * a * s * s + b * b * c * c).powf(1.5);
            let f = e.frame(t).unwrap();
            assert!((f.curvature - closed).abs() <= 1e-12 * closed);
            let fd = fd_curvature(&e, t, 1e-5);
            assert!((f.curvature - fd).abs() <= 1e-5 * closed);
        }
    }

    #[test]
    fn rightmost_examples() {
        let pts = [PlanePoint::new(1.0, 0.0), PlanePoint::new(2.0, 0.0), PlanePoint::new(0.5, 1.0)];
        let r = rightmost(&pts, 0.0).unwrap();
        assert_eq!(r.points, vec![PlanePoint::new(2.0, 0.0), PlanePoint::new(0.5, 1.0)]);

        let seg: Vec<_> = (0..20).map(|k| PlanePoint::new(2.0, k as f64 * 0.05)).collect();
        assert_eq!(rightmost(&seg, DEFAULT_Y_TOLERANCE).unwrap().points.len(), 20);

        assert!(matches!(rightmost(&[], 0.0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn rightmost_of_dense_circle_is_right_half() {
        let c = GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0);
        let n = 2000;
        let pts: Vec<_> = (0..n)
            .map(|k| c.eval_unchecked(-PI + TAU * k as f64 / n as f64))
            .collect();
        let r = rightmost(&pts, DEFAULT_Y_TOLERANCE).unwrap();
        // brute force: keep p iff no other sample at (nearly) the same height is further right
        let brute: usize = pts
            .iter()
            .filter(|p| !pts.iter().any(|q| (q.y - p.y).abs() <= 1e-9 && q.x > p.x))
            .count();
        assert_eq!(r.points.len(), brute);
        assert!(r.points.iter().all(|p| p.x >= 3.0 - 1e-12));
    }

    #[test]
    fn curve_rightmost_x() {
        let c = GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0);
        assert_abs_diff_eq!(c.rightmost_x(0.0).unwrap(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.rightmost_x(0.6).unwrap(), 3.8, epsilon = 1e-12);
        assert_eq!(c.rightmost_x(1.5), None);
        let left = GeneratorCurve::circle_arc(PlanePoint::new(3.0, 0.0), 1.0, PI / 2.0, 1.5 * PI);
        assert_abs_diff_eq!(left.rightmost_x(0.6).unwrap(), 2.2, epsilon = 1e-12);
    }

    #[test]
    fn node_params_are_symmetric() {
        let c = GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0);
        let t = c.node_params(401);
        for k in 0..401 {
            assert_eq!(t[k], -t[400 - k]);
        }
        assert!((t[1] - t[0] - TAU / 401.0).abs() < 1e-14);
        let s = GeneratorCurve::vertical_segment(2.0, 0.0, 1.0).node_params(201);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[200], 1.0);
    }

    #[test]
    fn validation() {
        assert!(GeneratorCurve::circle(PlanePoint::new(0.5, 0.0), 1.0).validate().is_err());
        assert!(GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0).validate().is_ok());
        assert!(GeneratorCurve::circle_arc(PlanePoint::new(0.5, 0.0), 1.0, -1.0, 1.0)
            .validate()
            .is_ok());
        assert!(GeneratorCurve::vertical_segment(0.0, 0.0, 1.0).validate().is_err());
        assert!(GeneratorCurve::ellipse(PlanePoint::new(3.0, 0.0), 0.0, 1.0).validate().is_err());
    }

    #[test]
    fn curve_json_shape() {
        let s = r#"{"kind": "circle", "center": [3.0, 0.0], "radius": 1.0, "angles": [-3.14159265, 3.14159265]}"#;
        let c: GeneratorCurve = serde_json::from_str(s).unwrap();
        assert!(c.is_closed());
        assert!(c.validate().is_ok());
        let seg: GeneratorCurve =
            serde_json::from_str(r#"{"kind":"vertical_segment","abscissa":2.0,"range":[0.0,1.0]}"#)
                .unwrap();
        assert_eq!(seg, GeneratorCurve::vertical_segment(2.0, 0.0, 1.0));
    }

    proptest! {
        #[test]
        fn rotation_preserves_axis_and_radius(
            x in -10.0..10.0f64, y in -10.0..10.0f64, z in -10.0..10.0f64, t in -7.0..7.0f64
        ) {
            let p = SpacePoint::new(x, y, z);
            let q = rotate(p, t);
            prop_assert_eq!(q.y, y);
            let r0 = x * x + z * z;
            prop_assert!((q.x * q.x + q.zeta * q.zeta - r0).abs() <= 1e-12 * r0.max(1.0));
        }

        #[test]
        fn rotated_distance_matches_cosine_law(
            x in 0.0..5.0f64, y in -3.0..3.0f64, u in 0.0..5.0f64, v in -3.0..3.0f64, t in 0.0..TAU
        ) {
            let p = rotate(lift_unchecked(PlanePoint::new(x, y), 0.0), t);
            let q = lift_unchecked(PlanePoint::new(u, v), 0.0);
            let law = x * x + u * u + (y - v) * (y - v) - 2.0 * x * u * t.cos();
            prop_assert!((p.dist_sq(q) - law).abs() <= 1e-12 * (1.0 + law.abs()));
        }

        #[test]
        fn frames_are_orthonormal(t in -PI..PI, kind in 0usize..3) {
            let c = match kind {
                0 => GeneratorCurve::circle(PlanePoint::new(3.0, 0.5), 1.3),
                1 => GeneratorCurve::ellipse(PlanePoint::new(3.0, 0.0), 1.2, 0.7),
                _ => GeneratorCurve::circle(PlanePoint::new(2.0, 0.0), 0.4),
            };
            let f = c.frame(t).unwrap();
            let n = f.normal.unwrap();
            prop_assert!((f.tangent[0].hypot(f.tangent[1]) - 1.0).abs() <= 1e-10);
            prop_assert!((n[0].hypot(n[1]) - 1.0).abs() <= 1e-10);
            prop_assert!((n[0] * f.tangent[0] + n[1] * f.tangent[1]).abs() <= 1e-10);
            let fd = fd_curvature(&c, t, 1e-5);
            prop_assert!((fd - f.curvature).abs() <= 1e-5 * f.curvature);
        }

        #[test]
        fn rightmost_is_permutation_stable(
            pts in proptest::collection::vec((0.0..5.0f64, -2i32..3), 1..40),
            seed in any::<u64>()
        ) {
            let pts: Vec<_> = pts.into_iter().map(|(x, y)| PlanePoint::new(x, y as f64 * 0.5)).collect();
            let mut shuffled = pts.clone();
            let n = shuffled.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(rightmost(&pts, 1e-9).unwrap(), rightmost(&shuffled, 1e-9).unwrap());
        }
    }
}
