//! Short instance strings such as `circle:3,0,1`.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use anyhow::{bail, Context, Result};
use revolve_core::checks::symmetric_arc_params;
use revolve_core::io::read_curve;
use revolve_core::{GeneratorCurve, PlanePoint};

/// A named test set: a generator curve, or the two mirror arcs
/// `|t| in [lo, hi]` of a circle.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Curve(GeneratorCurve),
    SplitArc { curve: GeneratorCurve, lo: f64, hi: f64 },
}

pub const INSTANCE_HELP: &str = "circle:CX,CY,R | arc:CX,CY,R,LO,HI | segment:X,Y0,Y1 | ellipse:CX,CY,A,B";

fn numbers(body: &str, count: usize, kind: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = body
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}` in {kind} instance")))
        .collect::<Result<_>>()?;
    if v.len() != count {
        bail!("{kind} instance takes {count} numbers, got {}", v.len());
    }
    Ok(v)
}

impl Instance {
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').with_context(|| format!("instance `{s}` lacks `kind:`; expected {INSTANCE_HELP}"))?;
        let inst = match kind {
            "circle" => {
                let v = numbers(body, 3, kind)?;
                Self::Curve(GeneratorCurve::circle(PlanePoint::new(v[0], v[1]), v[2]))
            }
            "arc" => {
                let v = numbers(body, 5, kind)?;
                let (lo, hi) = (v[3], v[4]);
                if !(0.0 <= lo && lo < hi && hi <= FRAC_PI_2 + 1e-12) {
                    bail!("arc angles must satisfy 0 <= LO < HI <= pi/2");
                }
                let center = PlanePoint::new(v[0], v[1]);
                if lo == 0.0 {
                    Self::Curve(GeneratorCurve::circle_arc(center, v[2], -hi, hi))
                } else {
                    Self::SplitArc { curve: GeneratorCurve::circle(center, v[2]), lo, hi }
                }
            }
            "segment" => {
                let v = numbers(body, 3, kind)?;
                Self::Curve(GeneratorCurve::vertical_segment(v[0], v[1], v[2]))
            }
            "ellipse" => {
                let v = numbers(body, 4, kind)?;
                Self::Curve(GeneratorCurve::ellipse(PlanePoint::new(v[0], v[1]), v[2], v[3]))
            }
            other => bail!("unknown instance kind `{other}`; expected {INSTANCE_HELP}"),
        };
        inst.curve().validate()?;
        Ok(inst)
    }

    /// The underlying curve; for split arcs, the full circle.
    pub fn curve(&self) -> &GeneratorCurve {
        match self {
            Self::Curve(c) | Self::SplitArc { curve: c, .. } => c,
        }
    }

    /// `n` nodes and their parameters. Split arcs get `n / 2` per side.
    pub fn nodes(&self, n: usize) -> Result<(Vec<PlanePoint>, Vec<f64>)> {
        match self {
            Self::Curve(c) => Ok(revolve_core::equilibrium::curve_nodes(c, n)?),
            Self::SplitArc { curve, lo, hi } => {
                let params = symmetric_arc_params(*lo, *hi, (n / 2).max(2))?;
                let nodes = params.iter().map(|&t| curve.eval(t)).collect::<revolve_core::Result<_>>()?;
                Ok((nodes, params))
            }
        }
    }
}

/// Curve from `--curve FILE` or `--instance SPEC`, exactly one of which is set.
pub fn resolve(curve: Option<&Path>, instance: Option<&str>) -> Result<Instance> {
    match (curve, instance) {
        (Some(p), None) => {
            let c = read_curve(p).with_context(|| format!("reading curve {}", p.display()))?;
            Ok(Instance::Curve(c))
        }
        (None, Some(s)) => Instance::parse(s),
        (None, None) => bail!("one of --curve or --instance is required"),
        (Some(_), Some(_)) => bail!("--curve and --instance are mutually exclusive"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_kinds() {
        let c = Instance::parse("circle:3,0,1").unwrap();
        assert_eq!(c.curve(), &GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0));
        let a = Instance::parse("arc:3,0,1,1.2471975511965976,1.5707963267948966").unwrap();
        assert!(matches!(a, Instance::SplitArc { .. }));
        let (nodes, params) = a.nodes(40).unwrap();
        assert_eq!(nodes.len(), 40);
        assert_eq!(params[0], -params[39]);
        assert!(matches!(Instance::parse("arc:3,0,1,0,1").unwrap(), Instance::Curve(_)));
        assert!(Instance::parse("segment:2,0,1").is_ok());
        assert!(Instance::parse("ellipse:3,0,1.2,1").is_ok());
    }

    #[test]
    fn rejects_bad_strings() {
        for s in ["circle:3,0", "torus:1,2,3", "circle", "circle:a,0,1", "circle:0.5,0,1", "arc:3,0,1,1,0.5"] {
            assert!(Instance::parse(s).is_err(), "{s}");
        }
    }
}
