//! Deterministic SVG scatter plots: the generator half-plane with markers
//! scaled by weight, and an orthographic view of the surface of revolution.

use std::fmt::Write as _;

use crate::energy::{Configuration, Mode};
use crate::equilibrium::{lift_measure, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::geometry::{lift_unchecked, GeneratorCurve, PlanePoint, SpacePoint};
use crate::io::PlotInput;

const PANEL: f64 = 400.0;
const PAD: f64 = 24.0;
/// Marker radius for a weight equal to the uniform weight `1/N`.
const BASE_RADIUS: f64 = 3.0;
/// Camera elevation of the surface view, radians.
const ELEVATION: f64 = 0.5;
/// Rotation angles per node when lifting a measure.
const LIFT_SAMPLES: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotOptions {
    /// Add the orthographic surface panel.
    pub surface: bool,
    /// Weights at or below this are omitted.
    pub min_weight: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self { surface: true, min_weight: 0.0 }
    }
}

/// Marker as drawn in the plane panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub point: PlanePoint,
    pub weight: f64,
    pub radius: f64,
}

/// Plane-panel markers: area proportional to weight, empty weights dropped.
pub fn plane_markers(input: &PlotInput, min_weight: f64) -> Vec<Marker> {
    let (points, weights): (Vec<PlanePoint>, Vec<f64>) = match input {
        PlotInput::Configuration(c) => {
            let n = c.len();
            (c.plane_points(), vec![1.0 / n as f64; n])
        }
        PlotInput::Measure(m) => (m.nodes.clone(), m.weights.clone()),
    };
    let n = points.len().max(1) as f64;
    points
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w > min_weight)
        .map(|(point, weight)| Marker { point, weight, radius: BASE_RADIUS * (weight * n).sqrt() })
        .collect()
}

fn surface_points(input: &PlotInput) -> Result<Vec<(SpacePoint, f64)>> {
    match input {
        PlotInput::Configuration(c) if c.mode == Mode::Surface3D => {
            let w = 1.0 / c.len() as f64;
            Ok(c.space_points().into_iter().map(|p| (p, w)).collect())
        }
        PlotInput::Configuration(c) => {
            let m = DiscreteMeasure {
                nodes: c.plane_points(),
                params: c.points.iter().map(|p| p.t).collect(),
                weights: vec![1.0 / c.len() as f64; c.len()],
            };
            lift_measure(&m, LIFT_SAMPLES)
        }
        PlotInput::Measure(m) => lift_measure(m, LIFT_SAMPLES),
    }
}

/// Axis-aligned bounds `(x0, x1, y0, y1)` padded to a square.
fn square_bounds(pts: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9) * 1.1;
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    (cx - span / 2.0, cx + span / 2.0, cy - span / 2.0, cy + span / 2.0)
}

struct Frame {
    left: f64,
    b: (f64, f64, f64, f64),
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1, y0, y1) = self.b;
        let inner = PANEL - 2.0 * PAD;
        (self.left + PAD + (x - x0) / (x1 - x0) * inner, PAD + (y1 - y) / (y1 - y0) * inner)
    }
}

fn curve_samples(curve: &GeneratorCurve) -> Vec<PlanePoint> {
    if let GeneratorCurve::Polyline { vertices } = curve {
        return vertices.clone();
    }
    let (a, b) = curve.domain();
    (0..=256).map(|k| curve.eval_unchecked(a + (b - a) * k as f64 / 256.0)).collect()
}

fn input_curve(input: &PlotInput) -> Option<&GeneratorCurve> {
    match input {
        PlotInput::Configuration(c) => Some(&c.curve),
        PlotInput::Measure(_) => None,
    }
}

/// Renders the plot. Output depends only on the input values.
pub fn render_svg(input: &PlotInput, curve: Option<&GeneratorCurve>, opts: &PlotOptions) -> Result<String> {
    let markers = plane_markers(input, opts.min_weight);
    if markers.is_empty() {
        return Err(Error::EmptyInput("nothing to plot above the weight cutoff"));
    }
    let curve = curve.or(input_curve(input));
    let outline = curve.map(curve_samples).unwrap_or_default();
    let width = if opts.surface { 2.0 * PANEL } else { PANEL };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL:.0}" viewBox="0 0 {width:.0} {PANEL:.0}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let plane = Frame {
        left: 0.0,
        b: square_bounds(
            markers.iter().map(|m| (m.point.x, m.point.y)).chain(outline.iter().map(|p| (p.x, p.y))).chain([(0.0, 0.0)]),
        ),
    };
    let _ = writeln!(s, r#"<g id="plane">"#);
    let (ax, top) = plane.map(0.0, plane.b.3);
    let (_, bottom) = plane.map(0.0, plane.b.2);
    let _ = writeln!(s, r##"<line x1="{ax:.3}" y1="{top:.3}" x2="{ax:.3}" y2="{bottom:.3}" stroke="#888888" stroke-dasharray="4 3"/>"##);
    if !outline.is_empty() {
        let path: Vec<String> = outline
            .iter()
            .map(|p| {
                let (x, y) = plane.map(p.x, p.y);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#4060a0"/>"##, path.join(" "));
    }
    for m in &markers {
        let (x, y) = plane.map(m.point.x, m.point.y);
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="#c03020" fill-opacity="0.8"/>"##, m.radius);
    }
    let _ = writeln!(s, "</g>");

    if opts.surface {
        let (sin_e, cos_e) = ELEVATION.sin_cos();
        // view along -z tilted by the elevation; depth orders the markers
        let project = |p: SpacePoint| (p.x, p.y * cos_e - p.zeta * sin_e, p.y * sin_e + p.zeta * cos_e);
        let mut pts: Vec<((f64, f64, f64), f64)> = surface_points(input)?
            .into_iter()
            .filter(|(_, w)| *w > opts.min_weight)
            .map(|(p, w)| (project(p), w))
            .collect();
        pts.sort_by(|a, b| a.0 .2.total_cmp(&b.0 .2));
        let rim: Vec<(f64, f64, f64)> = outline
            .iter()
            .flat_map(|z| (0..4).map(move |k| lift_unchecked(*z, std::f64::consts::FRAC_PI_2 * k as f64)))
            .map(project)
            .collect();
        let surf = Frame {
            left: PANEL,
            b: square_bounds(pts.iter().map(|(q, _)| (q.0, q.1)).chain(rim.iter().map(|q| (q.0, q.1)))),
        };
        let wmax = pts.iter().map(|(_, w)| *w).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let _ = writeln!(s, r#"<g id="surface">"#);
        for ((x, y, _), w) in &pts {
            let (px, py) = surf.map(*x, *y);
            let _ = writeln!(
                s,
                r##"<circle cx="{px:.3}" cy="{py:.3}" r="{:.3}" fill="#2060c0" fill-opacity="{:.3}"/>"##,
                1.0 + 1.5 * (w / wmax).sqrt(),
                0.25 + 0.6 * (w / wmax).sqrt()
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Configuration overload used by tests and the CLI.
pub fn render_configuration(config: &Configuration, opts: &PlotOptions) -> Result<String> {
    render_svg(&PlotInput::Configuration(config.clone()), None, opts)
}
