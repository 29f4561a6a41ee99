//! Interaction kernels: the 3D Riesz and logarithmic kernels, the reduced
//! half-plane kernel `K` obtained by averaging the 3D log kernel over the
//! rotation angle, its rescaling `K_R` about the abscissa `R`, the limit
//! kernel `K_inf` and its conjugation-symmetrized form.

use std::f64::consts::{LN_2, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlanePoint, SpacePoint};
use crate::sum::CompensatedSum;

/// Which interaction kernel is in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelSpec {
    /// `|p - q|^-s`, `s > 0`.
    Riesz3D { s: f64 },
    /// `log(1/|p - q|)`.
    Log3D,
    /// Reduced kernel `K(z, w) = log(2 / (|z - w| + |z - w_*|))`.
    ReducedK,
    /// `K_R(z, w) = 2R (K(R + z, R + w) + log R)`.
    ScaledKR { r: f64 },
    /// `K_inf(z, w) = -(Re[z - w_*] + |z - w|)`.
    LimitKInf,
    /// `(K_inf(z, w) + K_inf(z, conj w)) / 2`.
    SymmetrizedKInf,
}

impl KernelSpec {
    /// Kernels acting on points of 3-space.
    pub fn is_spatial(&self) -> bool {
        matches!(self, Self::Riesz3D { .. } | Self::Log3D)
    }

    pub fn is_planar(&self) -> bool {
        !self.is_spatial()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Riesz3D { s } if !(s > 0.0 && s.is_finite()) => {
                Err(Error::InvalidKernel(format!("Riesz exponent must be positive, got {s}")))
            }
            Self::ScaledKR { r } if !(r > 0.0 && r.is_finite()) => {
                Err(Error::InvalidKernel(format!("K_R scale must be positive, got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Smallest abscissa a node may have under this planar kernel.
    pub fn min_abscissa(&self) -> f64 {
        match *self {
            Self::ScaledKR { r } => -r,
            Self::LimitKInf | Self::SymmetrizedKInf => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    /// Evaluates a planar kernel.
    pub fn plane(&self, z: PlanePoint, w: PlanePoint) -> Result<f64> {
        match *self {
            Self::ReducedK => reduced_k(z, w),
            Self::ScaledKR { r } => scaled_kr(z, w, r),
            Self::LimitKInf => Ok(k_inf(z, w)),
            Self::SymmetrizedKInf => Ok(k_inf_sym(z, w)),
            _ => Err(Error::InvalidKernel(format!("{self} is not a half-plane kernel"))),
        }
    }

    /// Gradient of a planar kernel in its first argument. At `z = w` the
    /// non-smooth `|z - w|` term contributes the subgradient 0.
    pub fn plane_grad(&self, z: PlanePoint, w: PlanePoint) -> Result<[f64; 2]> {
        match *self {
            Self::ReducedK => reduced_k_grad(z, w),
            Self::ScaledKR { r } => {
                check_kr_domain(z, w, r)?;
                let g = reduced_k_grad(
                    PlanePoint::new(r + z.x, z.y),
                    PlanePoint::new(r + w.x, w.y),
                )?;
                Ok([2.0 * r * g[0], 2.0 * r * g[1]])
            }
            Self::LimitKInf => Ok(k_inf_grad(z, w)),
            Self::SymmetrizedKInf => {
                let a = k_inf_grad(z, w);
                let b = k_inf_grad(z, w.conj());
                Ok([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
            }
            _ => Err(Error::InvalidKernel(format!("{self} is not a half-plane kernel"))),
        }
    }

    /// Evaluates a 3D kernel.
    pub fn space(&self, p: SpacePoint, q: SpacePoint) -> Result<f64> {
        kernel_3d(p, q, *self)
    }

    /// Gradient of a 3D kernel in its first argument.
    pub fn space_grad(&self, p: SpacePoint, q: SpacePoint) -> Result<[f64; 3]> {
        let d2 = p.dist_sq(q);
        if d2 == 0.0 {
            return Err(Error::Singular("coincident points in 3D kernel".into()));
        }
        let diff = [p.x - q.x, p.y - q.y, p.zeta - q.zeta];
        let scale = match *self {
            Self::Riesz3D { s } => -s * d2.powf(-0.5 * s - 1.0),
            Self::Log3D => -1.0 / d2,
            _ => return Err(Error::InvalidKernel(format!("{self} is not a 3D kernel"))),
        };
        Ok([scale * diff[0], scale * diff[1], scale * diff[2]])
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Riesz3D { s } => write!(f, "riesz:{s}"),
            Self::Log3D => f.write_str("log3d"),
            Self::ReducedK => f.write_str("K"),
            Self::ScaledKR { r } => write!(f, "KR:{r}"),
            Self::LimitKInf => f.write_str("Kinf"),
            Self::SymmetrizedKInf => f.write_str("Kinf-sym"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_param = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidKernel(format!("bad kernel parameter in `{s}`")))
        };
        let spec = match s.trim() {
            "log3d" => Self::Log3D,
            "K" => Self::ReducedK,
            "Kinf" => Self::LimitKInf,
            "Kinf-sym" => Self::SymmetrizedKInf,
            other => {
                if let Some(v) = other.strip_prefix("riesz:") {
                    Self::Riesz3D { s: parse_param(v)? }
                } else if let Some(v) = other.strip_prefix("KR:") {
                    Self::ScaledKR { r: parse_param(v)? }
                } else {
                    return Err(Error::InvalidKernel(format!("unknown kernel `{other}`")));
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for KernelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KernelSpec> for String {
    fn from(k: KernelSpec) -> Self {
        k.to_string()
    }
}

/// `|p - q|^-s` or `log(1/|p - q|)`.
pub fn kernel_3d(p: SpacePoint, q: SpacePoint, spec: KernelSpec) -> Result<f64> {
    let d2 = p.dist_sq(q);
    if d2 == 0.0 {
        return Err(Error::Singular("coincident points in 3D kernel".into()));
    }
    match spec {
        KernelSpec::Riesz3D { s } => Ok(d2.powf(-0.5 * s)),
        KernelSpec::Log3D => Ok(-0.5 * d2.ln()),
        other => Err(Error::InvalidKernel(format!("{other} is not a 3D kernel"))),
    }
}

/// Mean of `log(a + b cos t)` over one period, `log((a + sqrt(a^2 - b^2)) / 2)`.
pub fn log_trig_integral(a: f64, b: f64) -> Result<f64> {
    if !(a > b.abs()) {
        return Err(Error::InvalidTrigArguments { a, b });
    }
    let root = ((a - b) * (a + b)).sqrt();
    Ok(((a + root) / 2.0).ln())
}

fn check_half_plane(z: PlanePoint, w: PlanePoint) -> Result<()> {
    for p in [z, w] {
        if p.x < 0.0 {
            return Err(Error::NegativeAbscissa { x: p.x });
        }
    }
    Ok(())
}

/// `|z - w| + |z - w_*|`.
#[inline]
fn focal_sum(z: PlanePoint, w: PlanePoint) -> (f64, f64) {
    let d = (z.x - w.x).hypot(z.y - w.y);
    let e = (z.x + w.x).hypot(z.y - w.y);
    (d, e)
}

/// Reduced half-plane kernel `log(2 / (|z - w| + |z - w_*|))`.
pub fn reduced_k(z: PlanePoint, w: PlanePoint) -> Result<f64> {
    check_half_plane(z, w)?;
    let (d, e) = focal_sum(z, w);
    let s = d + e;
    if s == 0.0 {
        return Err(Error::Singular(format!("K at the axis point ({}, {})", z.x, z.y)));
    }
    Ok(LN_2 - s.ln())
}

fn reduced_k_grad(z: PlanePoint, w: PlanePoint) -> Result<[f64; 2]> {
    check_half_plane(z, w)?;
    let (d, e) = focal_sum(z, w);
    let s = d + e;
    if s == 0.0 || e == 0.0 {
        return Err(Error::Singular(format!("K gradient at the axis point ({}, {})", z.x, z.y)));
    }
    let mut g = [(z.x + w.x) / e, (z.y - w.y) / e];
    if d > 0.0 {
        g[0] += (z.x - w.x) / d;
        g[1] += (z.y - w.y) / d;
    }
    Ok([-g[0] / s, -g[1] / s])
}

/// Periodic trapezoid rule for the angular mean of `log(1/|sigma_t(z) - w|)`.
/// Nodes sit at cell midpoints so the diagonal singularity at `t = 0` is
/// never sampled.
pub fn reduced_k_quadrature(z: PlanePoint, w: PlanePoint, n: usize) -> Result<f64> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("quadrature needs n >= 16, got {n}")));
    }
    check_half_plane(z, w)?;
    if z.x == 0.0 && w.x == 0.0 && z.y == w.y {
        return Err(Error::Singular("K at an axis point".into()));
    }
    let a = z.x * z.x + w.x * w.x + (z.y - w.y) * (z.y - w.y);
    let b = -2.0 * z.x * w.x;
    let h = TAU / n as f64;
    let mut acc = CompensatedSum::new();
    for k in 0..n {
        let t = (k as f64 + 0.5) * h;
        acc.add(-0.5 * (a + b * t.cos()).ln());
    }
    Ok(acc.value() / n as f64)
}

fn check_kr_domain(z: PlanePoint, w: PlanePoint, r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::InvalidKernel(format!("K_R scale must be positive, got {r}")));
    }
    for p in [z, w] {
        if r + p.x < 0.0 {
            return Err(Error::NegativeAbscissa { x: r + p.x });
        }
    }
    Ok(())
}

/// Rescaled kernel `2R (K(R + z, R + w) + log R)`, evaluated without the
/// cancellation of the naive formula.
pub fn scaled_kr(z: PlanePoint, w: PlanePoint, r: f64) -> Result<f64> {
    check_kr_domain(z, w, r)?;
    let d = (z.x - w.x).hypot(z.y - w.y);
    let sx = z.x + w.x;
    let dy = z.y - w.y;
    let e = (2.0 * r + sx).hypot(dy);
    if d + e == 0.0 {
        return Err(Error::Singular("K_R at a shifted axis point".into()));
    }
    // e - 2R without cancellation
    let excess = (sx * (4.0 * r + sx) + dy * dy) / (e + 2.0 * r);
    Ok(-2.0 * r * ((d + excess) / (2.0 * r)).ln_1p())
}

/// Limit kernel `-(Re[z - w_*] + |z - w|)`; defined on the whole plane.
pub fn k_inf(z: PlanePoint, w: PlanePoint) -> f64 {
    -((z.x + w.x) + z.dist(w))
}

fn k_inf_grad(z: PlanePoint, w: PlanePoint) -> [f64; 2] {
    let d = z.dist(w);
    if d > 0.0 {
        [-1.0 - (z.x - w.x) / d, -(z.y - w.y) / d]
    } else {
        [-1.0, 0.0]
    }
}

/// Conjugation-symmetrized limit kernel.
pub fn k_inf_sym(z: PlanePoint, w: PlanePoint) -> f64 {
    0.5 * (k_inf(z, w) + k_inf(z, w.conj()))
}
