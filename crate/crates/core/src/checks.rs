//! Numerical verification of the structural results on concrete instances.
//!
//! Every check returns a [`CheckReport`] whose `margin` is oriented so that
//! `margin >= 0` means satisfied. Strict inequalities are certified as a
//! floating-point margin above [`STRICT_MARGIN`]; this is a numerical
//! surrogate, not a proof.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{counting_measure, optimize_config, Configuration, SolverOptions};
use crate::equilibrium::{
    curve_nodes, quadratic_energy, solve_equilibrium, support_estimate,
    DiscreteMeasure, EquilibriumOptions,
};
use crate::error::{Error, Result};
use crate::geometry::{reflect, GeneratorCurve, PlanePoint};
use crate::kernels::{k_inf, reduced_k, KernelSpec};

/// Smallest margin accepted as "strictly positive".
pub const STRICT_MARGIN: f64 = 1e-10;

/// Largest variation accepted as "constant".
pub const CONSTANT_TOL: f64 = 1e-12;

/// Finite-difference step for second derivatives.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub instance: String,
    pub pass: bool,
    /// Worst-case slack; nonnegative iff the check passes.
    pub margin: f64,
    pub grid_resolution: String,
    /// Whether the instance is covered by a theorem (otherwise exploratory).
    pub guaranteed: bool,
    /// Named scalar results, sorted by key.
    pub metrics: BTreeMap<String, f64>,
    /// Failure locations and notes.
    pub details: Vec<String>,
}

impl CheckReport {
    fn new(name: &str, instance: String, grid_resolution: String, guaranteed: bool) -> Self {
        Self {
            name: name.into(),
            instance,
            pass: false,
            margin: f64::INFINITY,
            grid_resolution,
            guaranteed,
            metrics: BTreeMap::new(),
            details: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    fn slack(&mut self, v: f64) {
        self.margin = self.margin.min(v);
    }

    fn finish(mut self) -> Self {
        self.pass = self.margin >= 0.0;
        self
    }
}

/// Human-readable instance label.
pub fn describe_curve(curve: &GeneratorCurve) -> String {
    match curve {
        GeneratorCurve::Circle { center, radius, angles } => format!(
            "circle center ({}, {}) radius {} t in [{:.6}, {:.6}]",
            center.x, center.y, radius, angles[0], angles[1]
        ),
        GeneratorCurve::VerticalSegment { abscissa, range } => {
            format!("vertical segment x = {} y in [{}, {}]", abscissa, range[0], range[1])
        }
        GeneratorCurve::Ellipse { center, semi_axes, angles } => format!(
            "ellipse center ({}, {}) semi-axes ({}, {}) t in [{:.6}, {:.6}]",
            center.x, center.y, semi_axes[0], semi_axes[1], angles[0], angles[1]
        ),
        GeneratorCurve::Polyline { vertices } => format!("polyline with {} vertices", vertices.len()),
    }
}

/// Right half `[-pi/2, pi/2]` of a circle or ellipse; other curves unchanged.
pub fn right_half(curve: &GeneratorCurve) -> GeneratorCurve {
    match curve {
        GeneratorCurve::Circle { center, radius, .. } => {
            GeneratorCurve::circle_arc(*center, *radius, -FRAC_PI_2, FRAC_PI_2)
        }
        GeneratorCurve::Ellipse { center, semi_axes, .. } => {
            GeneratorCurve::Ellipse { center: *center, semi_axes: *semi_axes, angles: [-FRAC_PI_2, FRAC_PI_2] }
        }
        other => other.clone(),
    }
}

fn circle_within_right_half(curve: &GeneratorCurve) -> bool {
    matches!(curve, GeneratorCurve::Circle { angles, .. }
        if angles[0] >= -FRAC_PI_2 - 1e-12 && angles[1] <= FRAC_PI_2 + 1e-12)
}

/// Rays for [`check_horizontal_monotonicity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneGrid {
    pub rays: usize,
    pub samples: usize,
    pub x_max: f64,
    /// Minimal `|y - v|` on the strictly decreasing rays.
    pub min_height_gap: f64,
}

impl Default for MonotoneGrid {
    fn default() -> Self {
        Self { rays: 1000, samples: 1000, x_max: 10.0, min_height_gap: 0.05 }
    }
}

/// Strict decrease of `x -> k((x, y), w)` on rays with `y != v`, and
/// constant-then-decreasing on the ray through `w`.
pub fn check_horizontal_monotonicity(spec: KernelSpec, grid: &MonotoneGrid) -> Result<CheckReport> {
    if !matches!(spec, KernelSpec::ReducedK | KernelSpec::LimitKInf) {
        return Err(Error::InvalidKernel(format!("monotonicity is checked for K and Kinf, not {spec}")));
    }
    if grid.rays == 0 || grid.samples < 2 {
        return Err(Error::InvalidArgument("monotonicity grid needs rays and at least two samples".into()));
    }
    let mut rep = CheckReport::new(
        "monotone",
        format!("kernel {spec}, w in [0.5, 3] x [-1, 1], rays y in [-2, 2], x in [0, {}]", grid.x_max),
        format!("{} rays x {} samples", grid.rays, grid.samples),
        true,
    );
    let k = |z: PlanePoint, w: PlanePoint| match spec {
        KernelSpec::ReducedK => reduced_k(z, w).unwrap_or(f64::NAN),
        _ => k_inf(z, w),
    };
    // deterministic low-discrepancy ray family
    let ray = |r: usize| {
        let f = |a: f64| (0.5 + a * (r as f64 + 1.0)).fract();
        let w = PlanePoint::new(0.5 + 2.5 * f(0.618_033_988_749_894_9), -1.0 + 2.0 * f(0.754_877_666_246_692_7));
        let mut y = -2.0 + 4.0 * f(0.569_840_290_998_053_2);
        if (y - w.y).abs() < grid.min_height_gap {
            y = w.y + grid.min_height_gap.copysign(y - w.y);
        }
        (w, y)
    };
    let xs: Vec<f64> = (0..grid.samples).map(|i| grid.x_max * i as f64 / (grid.samples - 1) as f64).collect();

    let per_ray: Vec<(f64, f64, f64, usize)> = (0..grid.rays)
        .into_par_iter()
        .map(|r| {
            let (w, y) = ray(r);
            let mut strict = f64::INFINITY;
            let mut worst_at = 0;
            let mut prev = k(PlanePoint::new(xs[0], y), w);
            for (i, &x) in xs.iter().enumerate().skip(1) {
                let v = k(PlanePoint::new(x, y), w);
                if prev - v < strict {
                    strict = prev - v;
                    worst_at = i;
                }
                prev = v;
            }
            // the ray through w: constant on [0, u], decreasing after
            let base = k(PlanePoint::new(0.0, w.y), w);
            let mut variation: f64 = 0.0;
            let mut tail = f64::INFINITY;
            let mut prev_tail = k(w, w);
            for &x in &xs {
                let v = k(PlanePoint::new(x, w.y), w);
                if x <= w.x {
                    variation = variation.max((v - base).abs());
                } else {
                    tail = tail.min(prev_tail - v);
                    prev_tail = v;
                }
            }
            (strict, variation, tail, worst_at)
        })
        .collect();

    let mut strict_min = f64::INFINITY;
    let mut var_max: f64 = 0.0;
    let mut tail_min = f64::INFINITY;
    for (r, (strict, variation, tail, at)) in per_ray.into_iter().enumerate() {
        if strict <= STRICT_MARGIN || !strict.is_finite() {
            let (w, y) = ray(r);
            rep.details.push(format!("ray {r}: y = {y}, w = ({}, {}), decrease {strict} at x = {}", w.x, w.y, xs[at]));
        }
        if variation > CONSTANT_TOL {
            rep.details.push(format!("ray {r}: variation {variation} on the constant piece"));
        }
        strict_min = strict_min.min(strict);
        var_max = var_max.max(variation);
        tail_min = tail_min.min(tail);
    }
    rep.metric("min_decrease", strict_min);
    rep.metric("constant_variation", var_max);
    rep.metric("min_tail_decrease", tail_min);
    rep.slack(strict_min - STRICT_MARGIN);
    rep.slack(CONSTANT_TOL - var_max);
    rep.slack(tail_min - STRICT_MARGIN);
    Ok(rep.finish())
}

/// Closed-form `d^2/dt^2 k(gamma(t), gamma(s))` where known.
fn convexity_closed_form(curve: &GeneratorCurve, spec: KernelSpec, s: f64, t: f64) -> Option<f64> {
    match (curve, spec) {
        (GeneratorCurve::VerticalSegment { abscissa, .. }, KernelSpec::ReducedK) => {
            let d = s - t;
            Some(d.abs() / (4.0 * abscissa * abscissa + d * d).powf(1.5))
        }
        (GeneratorCurve::VerticalSegment { .. }, KernelSpec::LimitKInf) => Some(0.0),
        (GeneratorCurve::Circle { radius, .. }, KernelSpec::LimitKInf) => {
            Some(radius * (0.5 * ((s - t) / 2.0).sin().abs() + t.cos()))
        }
        _ => None,
    }
}

fn second_difference(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
}

/// Central second difference with Richardson extrapolation when the first
/// estimate is within `10 h^2` of zero.
pub fn second_derivative_fd(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let coarse = second_difference(&f, t, h);
    if coarse.abs() > 10.0 * h * h {
        return coarse;
    }
    let fine = second_difference(&f, t, h / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Strict convexity of `t -> k(gamma(t), gamma(s))` on `[a, s]` and `[s, b]`
/// over an `n x n` grid; pairs with `|s - t| < 2h` are skipped.
pub fn check_convexity(curve: &GeneratorCurve, spec: KernelSpec, n: usize) -> Result<CheckReport> {
    curve.validate()?;
    if !spec.is_planar() {
        return Err(Error::InvalidKernel(format!("{spec} is not a half-plane kernel")));
    }
    let (lo, hi) = curve.domain();
    curve.second_derivative(lo).map_err(|_| {
        Error::NonDifferentiable(format!("{} has no second derivative", curve.kind_name()))
    })?;
    if n < 2 {
        return Err(Error::InvalidArgument("convexity grid needs n >= 2".into()));
    }
    let guaranteed = match (curve, spec) {
        (GeneratorCurve::VerticalSegment { .. }, KernelSpec::ReducedK | KernelSpec::ScaledKR { .. }) => true,
        (GeneratorCurve::Circle { .. }, KernelSpec::ReducedK | KernelSpec::LimitKInf) => {
            circle_within_right_half(curve)
        }
        _ => false,
    };
    let mut rep = CheckReport::new(
        "convexity",
        format!("{} under {spec}", describe_curve(curve)),
        format!("{n}x{n} (s, t), h = {FD_STEP}"),
        guaranteed,
    );
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let h = FD_STEP;

    let rows: Vec<Result<(f64, f64, usize, Vec<String>)>> = grid
        .par_iter()
        .map(|&s| {
            let w = curve.eval_unchecked(s);
            let f = |t: f64| spec.plane(curve.eval_unchecked(t), w).unwrap_or(f64::NAN);
            let mut min = f64::INFINITY;
            let mut fd_err: f64 = 0.0;
            let mut skipped = 0;
            let mut fails = Vec::new();
            for &t in &grid {
                if (s - t).abs() < 2.0 * h {
                    skipped += 1;
                    continue;
                }
                let fd = second_derivative_fd(f, t, h);
                let v = match convexity_closed_form(curve, spec, s, t) {
                    Some(exact) => {
                        fd_err = fd_err.max((fd - exact).abs());
                        exact
                    }
                    None => fd,
                };
                if !(v > STRICT_MARGIN) {
                    fails.push(format!("s = {s}, t = {t}: second derivative {v}"));
                }
                min = min.min(v);
            }
            Ok((min, fd_err, skipped, fails))
        })
        .collect();

    let mut min = f64::INFINITY;
    let mut fd_err: f64 = 0.0;
    let mut skipped = 0;
    for row in rows {
        let (m, e, k, fails) = row?;
        min = min.min(m);
        fd_err = fd_err.max(e);
        skipped += k;
        rep.details.extend(fails.into_iter().take(8));
    }
    rep.metric("min_second_derivative", min);
    rep.metric("fd_vs_closed_form", fd_err);
    rep.metric("skipped_diagonal", skipped as f64);
    rep.details.push(format!("{skipped} pairs with |s - t| < {} skipped", 2.0 * h));
    rep.slack(min - STRICT_MARGIN);
    Ok(rep.finish())
}

/// The two quantities of the kappa condition at `t` for a given `w`:
/// `N(t) . u_w(t)` and `kappa(t) + N(t) . u_w(t) / r_w(t)`.
pub fn kappa_quantities(curve: &GeneratorCurve, t: f64, w: PlanePoint) -> Result<(f64, f64)> {
    let frame = curve.frame(t)?;
    let normal = frame.normal.ok_or_else(|| Error::Singular(format!("zero curvature at t = {t}")))?;
    let d = [frame.point.x - w.x, frame.point.y - w.y];
    let r = d[0].hypot(d[1]);
    if r == 0.0 {
        return Err(Error::Singular(format!("gamma(t) = w at t = {t}")));
    }
    let nu = (normal[0] * d[0] + normal[1] * d[1]) / r;
    Ok((nu, frame.curvature + nu / r))
}

/// Closed forms on a circle `c + r e^{it}`: `(N.u, bracket)` for
/// `w = gamma(s)` and for `w = gamma(s)_*`. Needs `c` real up to a vertical shift.
pub fn circle_kappa_closed_form(center_x: f64, radius: f64, s: f64, t: f64) -> [(f64, f64); 2] {
    let big_r = center_x / radius;
    let own = (-((s - t) / 2.0).sin().abs(), 0.5 / radius);
    let (ss, cs) = s.sin_cos();
    let (st, ct) = t.sin_cos();
    let q = (2.0 * big_r + cs + ct).powi(2) + (ss - st).powi(2);
    let nu = -(2.0 * big_r * ct + (s + t).cos() + 1.0) / q.sqrt();
    let bracket = 0.5 + 2.0 * big_r * (big_r + cs) / q;
    [own, (nu, bracket / radius)]
}

/// `N . u_w < 0` and `kappa + N . u_w / r_w > 0` for `w` in
/// `{gamma(s), gamma(s)_*}` over an `n x n` grid with `s != t`.
pub fn check_kappa(curve: &GeneratorCurve, n: usize) -> Result<CheckReport> {
    curve.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument("kappa grid needs n >= 2".into()));
    }
    let (lo, hi) = curve.domain();
    let probe = curve.frame(0.5 * (lo + hi))?;
    if probe.normal.is_none() {
        return Err(Error::Singular(format!("{} has zero curvature", curve.kind_name())));
    }
    let circle = match curve {
        GeneratorCurve::Circle { center, radius, .. } => Some((center.x, *radius)),
        _ => None,
    };
    let mut rep = CheckReport::new(
        "kappa",
        describe_curve(curve),
        format!("{n}x{n} (s, t)"),
        circle.is_some() && circle_within_right_half(curve),
    );
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();

    let rows: Vec<Result<(f64, f64, f64, Vec<String>)>> = grid
        .par_iter()
        .map(|&s| {
            let ws = curve.eval_unchecked(s);
            let targets = [ws, reflect(ws)];
            let mut neg = f64::INFINITY;
            let mut bracket = f64::INFINITY;
            let mut closed_err: f64 = 0.0;
            let mut fails = Vec::new();
            for &t in &grid {
                if t == s {
                    continue;
                }
                let closed = circle.map(|(cx, r)| circle_kappa_closed_form(cx, r, s, t));
                for (k, w) in targets.iter().enumerate() {
                    let (nu, br) = kappa_quantities(curve, t, *w)?;
                    if let Some(c) = closed {
                        closed_err = closed_err.max((nu - c[k].0).abs()).max((br - c[k].1).abs());
                    }
                    if !(-nu > STRICT_MARGIN && br > STRICT_MARGIN) && fails.len() < 8 {
                        let which = if k == 0 { "gamma(s)" } else { "gamma(s)_*" };
                        fails.push(format!("s = {s}, t = {t}, w = {which}: N.u = {nu}, bracket = {br}"));
                    }
                    neg = neg.min(-nu);
                    bracket = bracket.min(br);
                }
            }
            Ok((neg, bracket, closed_err, fails))
        })
        .collect();

    let mut neg = f64::INFINITY;
    let mut bracket = f64::INFINITY;
    let mut closed_err: f64 = 0.0;
    for row in rows {
        let (a, b, e, fails) = row?;
        neg = neg.min(a);
        bracket = bracket.min(b);
        closed_err = closed_err.max(e);
        rep.details.extend(fails);
    }
    rep.metric("min_neg_normal_dot", neg);
    rep.metric("min_bracket", bracket);
    rep.slack(neg - STRICT_MARGIN);
    rep.slack(bracket - STRICT_MARGIN);
    if circle.is_some() {
        rep.metric("closed_form_discrepancy", closed_err);
        rep.slack(1e-8 - closed_err);
    }
    Ok(rep.finish())
}

/// Result to test against the right-most set.
#[derive(Debug, Clone, Copy)]
pub enum SupportSubject<'a> {
    Configuration(&'a Configuration),
    /// Active nodes are those with weight above the threshold.
    Measure(&'a DiscreteMeasure, f64),
}

/// Tolerance in `x` for membership in the right-most set.
pub const APLUS_TOL: f64 = 1e-6;

/// Every optimized point or active node lies on `A_+` of `curve`.
pub fn check_support_in_aplus(subject: SupportSubject<'_>, curve: &GeneratorCurve) -> Result<CheckReport> {
    curve.validate()?;
    let (points, params, what): (Vec<PlanePoint>, Vec<f64>, &str) = match subject {
        SupportSubject::Configuration(c) => {
            (c.plane_points(), c.points.iter().map(|p| p.t).collect(), "optimized points")
        }
        SupportSubject::Measure(m, threshold) => {
            let idx: Vec<usize> = (0..m.len()).filter(|&i| m.weights[i] > threshold).collect();
            (idx.iter().map(|&i| m.nodes[i]).collect(), idx.iter().map(|&i| m.params[i]).collect(), "active nodes")
        }
    };
    if points.is_empty() {
        return Err(Error::EmptyInput("no points to test"));
    }
    let mut rep = CheckReport::new(
        "aplus",
        format!("{what} on {}", describe_curve(curve)),
        format!("{} points, x tolerance {APLUS_TOL}", points.len()),
        true,
    );
    for (p, t) in points.iter().zip(&params) {
        let Some(xa) = curve.rightmost_x(p.y) else {
            rep.details.push(format!("t = {t}: height {} not reached by the curve", p.y));
            rep.slack(-1.0);
            continue;
        };
        let slack = p.x - xa + APLUS_TOL;
        if slack < 0.0 {
            rep.details.push(format!("t = {t}: x = {} below x_A(y) = {xa}", p.x));
        }
        rep.slack(slack);
    }
    if let GeneratorCurve::Circle { .. } = curve {
        let max_angle = params.iter().map(|t| t.abs()).fold(0.0, f64::max);
        rep.metric("max_abs_angle", max_angle);
    }
    rep.metric("points", points.len() as f64);
    Ok(rep.finish())
}

/// Node parameters `{+-t}` for `|t|` in `[lo, hi]`, `per_arc` per side
/// (a single symmetric arc when `lo == 0`).
pub fn symmetric_arc_params(lo: f64, hi: f64, per_arc: usize) -> Result<Vec<f64>> {
    if !(0.0 <= lo && lo < hi) || per_arc < 2 {
        return Err(Error::InvalidArgument(format!("bad arc [{lo}, {hi}] with {per_arc} nodes")));
    }
    let side: Vec<f64> = (0..per_arc).map(|k| lo + (hi - lo) * k as f64 / (per_arc - 1) as f64).collect();
    let mut out: Vec<f64> = side.iter().rev().map(|t| -t).collect();
    let start = usize::from(lo == 0.0);
    out.extend(side[start..].iter().copied());
    Ok(out)
}

/// Mirror partner of each node about `y = axis`, or an error.
fn mirror_pairs(nodes: &[PlanePoint], axis: f64) -> Result<Vec<usize>> {
    let scale = nodes.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    nodes
        .iter()
        .map(|p| {
            nodes
                .iter()
                .position(|q| (q.x - p.x).abs() <= tol && (q.y + p.y - 2.0 * axis).abs() <= tol)
                .ok_or(Error::AsymmetricNodes { axis })
        })
        .collect()
}

/// Largest weight difference allowed between mirror nodes.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Support-angle bound for the limit kernel on a circle (or arcs of it)
/// with a node set symmetric about the horizontal line through the center.
pub fn check_pi3(curve: &GeneratorCurve, m: &DiscreteMeasure, threshold: f64) -> Result<CheckReport> {
    let GeneratorCurve::Circle { center, .. } = curve else {
        return Err(Error::InvalidCurve(format!("pi/3 check needs a circle, got {}", curve.kind_name())));
    };
    m.validate()?;
    let mirror = mirror_pairs(&m.nodes, center.y)?;
    let mut sorted: Vec<f64> = m.params.clone();
    sorted.sort_by(f64::total_cmp);
    // grid step: smallest gap between distinct node angles
    let spacing = sorted.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    let spacing = if spacing.is_finite() { spacing } else { 0.0 };
    // right-most part of the node set: angles within [-pi/2, pi/2]
    let in_aplus: Vec<f64> = m.params.iter().copied().filter(|t| t.abs() <= FRAC_PI_2 + 1e-12).collect();
    let theta_m = in_aplus.iter().map(|t| t.abs()).fold(f64::INFINITY, f64::min);
    let nonempty = theta_m <= FRAC_PI_3;
    let sup = support_estimate(m, threshold)?;
    let mut rep = CheckReport::new(
        "pi3",
        format!("{} nodes on {}", m.len(), describe_curve(curve)),
        format!("node spacing {spacing:.6e}, threshold {threshold:.3e}"),
        true,
    );
    let asym = (0..m.len()).map(|i| (m.weights[i] - m.weights[mirror[i]]).abs()).fold(0.0, f64::max);
    rep.metric("theta", sup.theta);
    rep.metric("theta_min", theta_m);
    rep.metric("spacing", spacing);
    rep.metric("mirror_asymmetry", asym);
    rep.slack(SYMMETRY_TOL - asym);
    if asym > SYMMETRY_TOL {
        rep.details.push(format!("mirror weights differ by {asym}"));
    }
    rep.metric("two_point_degenerate", if sup.two_point_degenerate { 1.0 } else { 0.0 });

    if nonempty {
        let bound = FRAC_PI_3 + 2.0 * spacing;
        rep.metric("theta_bound", bound);
        rep.slack(bound - sup.theta);
        if sup.theta > bound {
            rep.details.push(format!("theta {} exceeds {bound}", sup.theta));
        }
        // d/dt W(gamma(t)) between nodes on (pi/3, pi/2]
        let lo_t = FRAC_PI_3;
        let samples: Vec<f64> = sorted
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .filter(|t| *t > lo_t && *t <= FRAC_PI_2)
            .collect();
        let mut min_slope = f64::INFINITY;
        for t in &samples {
            let z = curve.eval_unchecked(*t);
            let d = curve.derivative_unchecked(*t);
            let mut acc = 0.0;
            for (node, w) in m.nodes.iter().zip(&m.weights) {
                if *w == 0.0 {
                    continue;
                }
                let g = KernelSpec::LimitKInf.plane_grad(z, *node)?;
                acc += w * (g[0] * d[0] + g[1] * d[1]);
            }
            if acc <= 0.0 {
                rep.details.push(format!("dW/dt = {acc} at t = {t}"));
            }
            min_slope = min_slope.min(acc);
        }
        if min_slope.is_finite() {
            rep.metric("min_potential_slope", min_slope);
            rep.slack(min_slope);
        }
    } else {
        let mut by_weight: Vec<usize> = (0..m.len()).collect();
        by_weight.sort_by(|&a, &b| m.weights[b].total_cmp(&m.weights[a]).then(a.cmp(&b)));
        let (a, b) = (by_weight[0], by_weight[1.min(m.len() - 1)]);
        let mass = m.weights[a] + if a != b { m.weights[b] } else { 0.0 };
        let at_theta_m = [a, b].iter().all(|&i| (m.params[i].abs() - theta_m).abs() <= 1e-12);
        let half_err = (m.weights[a] - 0.5).abs().max((m.weights[b] - 0.5).abs());
        rep.metric("two_point_mass", mass);
        rep.metric("max_deviation_from_half", half_err);
        rep.slack(mass - 0.99);
        rep.slack(0.01 - half_err);
        if !sup.two_point_degenerate || !at_theta_m {
            rep.details.push(format!(
                "expected two equal masses at +-{theta_m}, got t = {} and {}",
                m.params[a], m.params[b]
            ));
            rep.slack(-1.0);
        }
    }
    Ok(rep.finish())
}

/// Test grid for [`check_kr_limit`]: `z` and `w` both range over
/// `[0, 2] x [-1, 1]` with `per_axis` points per coordinate.
pub fn kr_grid(per_axis: usize) -> Vec<PlanePoint> {
    let n = per_axis.max(2);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = 2.0 * i as f64 / (n - 1) as f64;
            let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            out.push(PlanePoint::new(x, y));
        }
    }
    out
}

/// Sup-norm error of `K_R - K_inf` over all pairs of `grid`.
pub fn kr_sup_error(grid: &[PlanePoint], r: f64) -> Result<f64> {
    let spec = KernelSpec::ScaledKR { r };
    spec.validate()?;
    let rows: Vec<f64> = grid
        .par_iter()
        .map(|&z| {
            grid.iter()
                .map(|&w| spec.plane(z, w).map(|v| (v - k_inf(z, w)).abs()))
                .try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// First-order convergence `K_R -> K_inf`: consecutive error ratios in
/// `[0.4, 0.6]` for a doubling list, and `e(R) R` within a factor 2.
pub fn check_kr_limit(per_axis: usize, rs: &[f64]) -> Result<CheckReport> {
    if rs.len() < 2 || rs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("R list must be increasing with at least two entries".into()));
    }
    let grid = kr_grid(per_axis);
    let mut rep = CheckReport::new(
        "kr-limit",
        format!("z, w in [0, 2] x [-1, 1], R in {rs:?}"),
        format!("{per_axis}^2 points per argument"),
        true,
    );
    let errs: Vec<f64> = rs.iter().map(|&r| kr_sup_error(&grid, r)).collect::<Result<_>>()?;
    for (r, e) in rs.iter().zip(&errs) {
        rep.metric(&format!("error_R{r}"), *e);
    }
    for (w, e) in rs.windows(2).zip(errs.windows(2)) {
        let ratio = e[1] / e[0];
        rep.metric(&format!("ratio_R{}_R{}", w[1], w[0]), ratio);
        let expect = w[0] / w[1];
        let (lo, hi) = (0.8 * expect, 1.2 * expect);
        rep.slack((ratio - lo).min(hi - ratio));
        if !(lo..=hi).contains(&ratio) {
            rep.details.push(format!("e({})/e({}) = {ratio} outside [{lo}, {hi}]", w[1], w[0]));
        }
    }
    let scaled: Vec<f64> = rs.iter().zip(&errs).map(|(r, e)| r * e).collect();
    let spread = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.metric("scaled_error_spread", spread);
    rep.slack(2.0 - spread);
    Ok(rep.finish())
}

/// Total-variation distance between `K_R`- and `K_inf`-equilibrium weights
/// on a fixed node set must decrease along `rs`.
pub fn check_kr_weak_star(curve: &GeneratorCurve, nodes: usize, rs: &[f64]) -> Result<CheckReport> {
    if rs.len() < 2 || rs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("R list must be increasing with at least two entries".into()));
    }
    let (pts, params) = curve_nodes(curve, nodes)?;
    let opts = EquilibriumOptions::default();
    let (limit, _) = solve_equilibrium(&pts, &params, KernelSpec::LimitKInf, &opts)?;
    let mut rep = CheckReport::new(
        "kr-weak-star",
        format!("{nodes} nodes on {}, R in {rs:?}", describe_curve(curve)),
        format!("{nodes} nodes"),
        true,
    );
    let mut tvs = Vec::with_capacity(rs.len());
    for &r in rs {
        let (m, _) = solve_equilibrium(&pts, &params, KernelSpec::ScaledKR { r }, &opts)?;
        let tv = m.tv_distance(&limit);
        rep.metric(&format!("tv_R{r}"), tv);
        tvs.push(tv);
    }
    for (w, t) in rs.windows(2).zip(tvs.windows(2)) {
        rep.slack(t[0] - t[1]);
        if t[1] >= t[0] {
            rep.details.push(format!("TV did not decrease from R = {} to R = {}", w[0], w[1]));
        }
    }
    Ok(rep.finish())
}

/// One row of the sandwich table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub n: usize,
    pub energy: f64,
    /// `E / (N (N - 1))`.
    pub lower: f64,
    /// `E / N^2 + ||k||_A / N`.
    pub upper: f64,
    /// `J` of the counting measure minus the discretized `J`.
    pub counting_gap: f64,
}

/// Slack allowed for the node discretization of the continuous problem.
pub const SANDWICH_SLACK: f64 = 1e-3;

/// Node count of the discretized continuous problem in [`check_sandwich`].
pub const SANDWICH_NODES: usize = 401;

/// `E/(N(N-1)) <= J <= E/N^2 + ||k||_A / N` for optimized configurations,
/// with `J` from the discretized equilibrium problem.
pub fn check_sandwich(
    curve: &GeneratorCurve,
    spec: KernelSpec,
    ns: &[usize],
    seed: u64,
    opts: &SolverOptions,
) -> Result<(CheckReport, Vec<SandwichRow>)> {
    if !matches!(spec, KernelSpec::ReducedK | KernelSpec::ScaledKR { .. } | KernelSpec::LimitKInf) {
        return Err(Error::InvalidKernel(format!("sandwich needs a continuous half-plane kernel, not {spec}")));
    }
    if ns.is_empty() || ns.iter().any(|&n| n < 2) {
        return Err(Error::InvalidArgument("N list must be nonempty with N >= 2".into()));
    }
    let (nodes, params) = curve_nodes(curve, SANDWICH_NODES)?;
    let (_, eq) = solve_equilibrium(&nodes, &params, spec, &EquilibriumOptions::default())?;
    let j_hat = eq.j_value;
    // ||k||_A = sup k(z, z), sampled on a finer node set
    let fine = curve_nodes(curve, 4 * SANDWICH_NODES)?.0;
    let diag_sup = fine
        .iter()
        .map(|&z| spec.plane(z, z))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut rep = CheckReport::new(
        "sandwich",
        format!("{} under {spec}, N in {ns:?}, seed {seed}", describe_curve(curve)),
        format!("{SANDWICH_NODES} equilibrium nodes, slack {SANDWICH_SLACK}"),
        true,
    );
    rep.metric("j_hat", j_hat);
    rep.metric("kernel_diag_sup", diag_sup);
    rep.metric("equilibrium_gap", eq.wolfe_gap);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let (config, report) = optimize_config(curve, spec, n, seed, opts)?;
        let e = report.energy;
        let nf = n as f64;
        let lower = e / (nf * (nf - 1.0));
        let upper = e / (nf * nf) + diag_sup / nf;
        let counting = quadratic_energy(&counting_measure(&config), spec)?;
        let row = SandwichRow { n, energy: e, lower, upper, counting_gap: counting - j_hat };
        rep.slack(j_hat + SANDWICH_SLACK - lower);
        rep.slack(upper + SANDWICH_SLACK - j_hat);
        if lower > j_hat + SANDWICH_SLACK {
            rep.details.push(format!("N = {n}: lower bound {lower} exceeds J = {j_hat}"));
        }
        if j_hat > upper + SANDWICH_SLACK {
            rep.details.push(format!("N = {n}: J = {j_hat} exceeds upper bound {upper}"));
        }
        if !report.converged {
            rep.details.push(format!("N = {n}: optimizer stopped at gradient {}", report.gradient_norm));
        }
        rep.metric(&format!("lower_N{n}"), lower);
        rep.metric(&format!("upper_N{n}"), upper);
        rep.metric(&format!("counting_gap_N{n}"), row.counting_gap);
        rows.push(row);
    }
    // the gap may tie between neighbours up to rounding but must shrink overall
    for w in rows.windows(2) {
        let tie = 1e-12 * j_hat.abs().max(1.0);
        rep.slack(w[0].counting_gap - w[1].counting_gap + tie);
        if w[1].counting_gap > w[0].counting_gap + tie {
            rep.details.push(format!("counting gap grew from N = {} to N = {}", w[0].n, w[1].n));
        }
    }
    if let [first, .., last] = &rows[..] {
        rep.slack(first.counting_gap - last.counting_gap);
    }
    Ok((rep.finish(), rows))
}
