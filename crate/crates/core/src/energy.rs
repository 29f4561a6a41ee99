//! Discrete N-point energies on a generator curve, either lifted to the
//! surface of revolution (3D kernels) or kept in the half-plane (reduced
//! kernels), with analytic gradients and a multi-start projected-gradient
//! minimizer.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::geometry::{lift_unchecked, GeneratorCurve, PlanePoint, SpacePoint};
use crate::kernels::KernelSpec;
use crate::sum::{compensated, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Points `(t, phi)` on the revolved surface, 3D kernels.
    Surface3D,
    /// Points `t` on the generator curve, half-plane kernels.
    Curve1D,
}

impl Mode {
    pub fn for_kernel(spec: KernelSpec) -> Self {
        if spec.is_spatial() {
            Self::Surface3D
        } else {
            Self::Curve1D
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Surface3D => "surface",
            Self::Curve1D => "curve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigPoint {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

/// An N-point configuration `omega_N` described by curve parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub mode: Mode,
    pub curve: GeneratorCurve,
    pub points: Vec<ConfigPoint>,
}

impl Configuration {
    pub fn curve_points(curve: GeneratorCurve, t: &[f64]) -> Self {
        let points = t.iter().map(|&t| ConfigPoint { t, phi: None }).collect();
        Self { mode: Mode::Curve1D, curve, points }
    }

    pub fn surface_points(curve: GeneratorCurve, t: &[f64], phi: &[f64]) -> Self {
        let points = t
            .iter()
            .zip(phi)
            .map(|(&t, &phi)| ConfigPoint { t, phi: Some(phi) })
            .collect();
        Self { mode: Mode::Surface3D, curve, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        if self.points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a configuration needs N >= 2 points, got {}",
                self.points.len()
            )));
        }
        let (lo, hi) = self.curve.domain();
        for p in &self.points {
            if !(p.t >= lo && p.t <= hi) {
                return Err(Error::ParameterOutOfDomain { t: p.t, lo, hi });
            }
            match (self.mode, p.phi) {
                (Mode::Surface3D, Some(phi)) if (0.0..TAU).contains(&phi) => {}
                (Mode::Surface3D, phi) => {
                    return Err(Error::InvalidArgument(format!("rotation angle {phi:?} not in [0, 2pi)")))
                }
                (Mode::Curve1D, Some(_)) => {
                    return Err(Error::InvalidArgument("curve configurations carry no phi".into()))
                }
                (Mode::Curve1D, None) => {}
            }
        }
        Ok(())
    }

    /// Generator-plane images `gamma(t_i)`.
    pub fn plane_points(&self) -> Vec<PlanePoint> {
        self.points.iter().map(|p| self.curve.eval_unchecked(p.t)).collect()
    }

    /// Points of 3-space; curve configurations sit at `phi = 0`.
    pub fn space_points(&self) -> Vec<SpacePoint> {
        self.points
            .iter()
            .map(|p| lift_unchecked(self.curve.eval_unchecked(p.t), p.phi.unwrap_or(0.0)))
            .collect()
    }

    /// Free parameters: all `t_i`, followed by all `phi_i` in surface mode.
    pub fn params(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.points.iter().map(|p| p.t).collect();
        if self.mode == Mode::Surface3D {
            x.extend(self.points.iter().map(|p| p.phi.unwrap_or(0.0)));
        }
        x
    }

    fn with_params(&self, x: &[f64]) -> Self {
        let n = if self.mode == Mode::Surface3D { x.len() / 2 } else { x.len() };
        let points = (0..n)
            .map(|i| ConfigPoint {
                t: x[i],
                phi: (self.mode == Mode::Surface3D).then(|| x[n + i]),
            })
            .collect();
        Self { mode: self.mode, curve: self.curve.clone(), points }
    }
}

fn check_mode(mode: Mode, spec: KernelSpec) -> Result<()> {
    spec.validate()?;
    if Mode::for_kernel(spec) != mode {
        return Err(Error::KernelModeMismatch { kernel: spec.to_string(), mode: mode.name() });
    }
    Ok(())
}

/// Energy of a fixed curve/kernel pair as a function of the free parameters.
struct EnergyModel<'a> {
    curve: &'a GeneratorCurve,
    spec: KernelSpec,
    mode: Mode,
    n: usize,
}

/// Row `i` of the pair sum: value and gradient with respect to point `i`.
struct Row {
    potential: f64,
    grad: [f64; 3],
}

impl EnergyModel<'_> {
    fn rows(&self, x: &[f64], with_grad: bool) -> Result<Vec<Row>> {
        let n = self.n;
        match self.mode {
            Mode::Curve1D => {
                let z: Vec<PlanePoint> = x[..n].iter().map(|&t| self.curve.eval_unchecked(t)).collect();
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut pot = CompensatedSum::new();
                        let mut g = [CompensatedSum::new(), CompensatedSum::new()];
                        for j in (0..n).filter(|&j| j != i) {
                            pot.add(self.spec.plane(z[i], z[j]).map_err(|e| at_pair(e, i, j))?);
                            if with_grad {
                                let d = self.spec.plane_grad(z[i], z[j]).map_err(|e| at_pair(e, i, j))?;
                                g[0].add(d[0]);
                                g[1].add(d[1]);
                            }
                        }
                        Ok(Row { potential: pot.value(), grad: [g[0].value(), g[1].value(), 0.0] })
                    })
                    .collect()
            }
            Mode::Surface3D => {
                let p: Vec<SpacePoint> = (0..n)
                    .map(|i| lift_unchecked(self.curve.eval_unchecked(x[i]), x[n + i]))
                    .collect();
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut pot = CompensatedSum::new();
                        let mut g = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
                        for j in (0..n).filter(|&j| j != i) {
                            pot.add(self.spec.space(p[i], p[j]).map_err(|e| at_pair(e, i, j))?);
                            if with_grad {
                                let d = self.spec.space_grad(p[i], p[j]).map_err(|e| at_pair(e, i, j))?;
                                for (acc, v) in g.iter_mut().zip(d) {
                                    acc.add(v);
                                }
                            }
                        }
                        Ok(Row {
                            potential: pot.value(),
                            grad: [g[0].value(), g[1].value(), g[2].value()],
                        })
                    })
                    .collect()
            }
        }
    }

    fn energy(&self, x: &[f64]) -> Result<f64> {
        let rows = self.rows(x, false)?;
        Ok(compensated(rows.iter().map(|r| r.potential)))
    }

    /// Energy, per-point potentials and parameter gradient.
    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let rows = self.rows(x, true)?;
        let energy = compensated(rows.iter().map(|r| r.potential));
        let mut grad = vec![0.0; x.len()];
        for (i, row) in rows.iter().enumerate() {
            let d = self.curve.derivative_unchecked(x[i]);
            match self.mode {
                Mode::Curve1D => {
                    grad[i] = 2.0 * (row.grad[0] * d[0] + row.grad[1] * d[1]);
                }
                Mode::Surface3D => {
                    let z = self.curve.eval_unchecked(x[i]);
                    let (s, c) = x[n + i].sin_cos();
                    let dp_dt = [d[0] * c, d[1], d[0] * s];
                    let dp_dphi = [-z.x * s, 0.0, z.x * c];
                    let g = row.grad;
                    grad[i] = 2.0 * (g[0] * dp_dt[0] + g[1] * dp_dt[1] + g[2] * dp_dt[2]);
                    grad[n + i] = 2.0 * (g[0] * dp_dphi[0] + g[2] * dp_dphi[2]);
                }
            }
        }
        Ok((energy, rows.into_iter().map(|r| r.potential).collect(), grad))
    }
}

fn at_pair(e: Error, i: usize, j: usize) -> Error {
    match e {
        Error::Singular(msg) => Error::Singular(format!("{msg} (points {i} and {j})")),
        other => other,
    }
}

fn model<'a>(config: &'a Configuration, spec: KernelSpec) -> Result<EnergyModel<'a>> {
    check_mode(config.mode, spec)?;
    config.validate()?;
    Ok(EnergyModel { curve: &config.curve, spec, mode: config.mode, n: config.len() })
}

/// `E(omega_N) = sum_{i != j} k(x_i, x_j)`, each unordered pair counted
/// twice. Rows are accumulated with compensation in index order.
pub fn pair_energy(config: &Configuration, spec: KernelSpec) -> Result<f64> {
    model(config, spec)?.energy(&config.params())
}

/// Per-point potentials `sum_{j != i} k(x_i, x_j)`.
pub fn point_potentials(config: &Configuration, spec: KernelSpec) -> Result<Vec<f64>> {
    let m = model(config, spec)?;
    Ok(m.rows(&config.params(), false)?.into_iter().map(|r| r.potential).collect())
}

/// Gradient of [`pair_energy`] with respect to [`Configuration::params`].
pub fn energy_gradient(config: &Configuration, spec: KernelSpec) -> Result<Vec<f64>> {
    let m = model(config, spec)?;
    if config.curve.second_derivative(config.points[0].t).is_err() {
        // polylines: one-sided derivative, undefined exactly at interior vertices
        if let Some(p) = config.points.iter().find(|p| {
            let (lo, hi) = config.curve.domain();
            p.t > lo && p.t < hi && p.t.fract() == 0.0
        }) {
            return Err(Error::NonDifferentiable(format!("polyline vertex at t = {}", p.t)));
        }
    }
    Ok(m.evaluate(&config.params())?.2)
}

/// Uniform counting measure `(1/N) sum delta_{x_i}` on the generator plane.
pub fn counting_measure(config: &Configuration) -> DiscreteMeasure {
    let n = config.len();
    DiscreteMeasure {
        nodes: config.plane_points(),
        params: config.points.iter().map(|p| p.t).collect(),
        weights: vec![1.0 / n as f64; n],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below
    /// `grad_tol * max(1, |E| / N)`.
    pub grad_tol: f64,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { restarts: 8, max_iter: 100_000, grad_tol: 1e-9, armijo_shrink: 0.5, armijo_slope: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kernel: KernelSpec,
    pub energy: f64,
    pub potentials: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
    /// Final energy of each restart, in restart order.
    pub restart_energies: Vec<f64>,
    /// Accepted energies of the winning restart.
    pub history: Vec<f64>,
}

struct RunResult {
    x: Vec<f64>,
    energy: f64,
    potentials: Vec<f64>,
    pg_norm: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Parameter box: `t` clamped to the domain (wrapped on closed curves),
/// `phi` wrapped to `[0, 2pi)`.
struct ParamBox {
    lo: f64,
    hi: f64,
    closed: bool,
    n: usize,
}

impl ParamBox {
    fn project(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            if k < self.n {
                if self.closed {
                    *v = (self.lo + (*v - self.lo).rem_euclid(TAU)).min(self.hi);
                } else {
                    *v = v.clamp(self.lo, self.hi);
                }
            } else {
                *v = v.rem_euclid(TAU);
                if *v >= TAU {
                    *v = 0.0;
                }
            }
        }
    }

    /// `P(x - g) - x`, measured before wrapping.
    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (&xv, &gv))| {
                let step = if k < self.n && !self.closed {
                    (xv - gv).clamp(self.lo, self.hi) - xv
                } else {
                    -gv
                };
                step.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Clamps bounded `t` without wrapping, so steps stay differences of unwrapped values.
    fn clamp(&self, x: &mut [f64]) {
        if !self.closed {
            x[..self.n].iter_mut().for_each(|v| *v = v.clamp(self.lo, self.hi));
        }
    }

    fn free_mask(&self, x: &[f64], g: &[f64]) -> Vec<bool> {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (&xv, &gv))| {
                !(k < self.n && !self.closed && ((xv <= self.lo && gv > 0.0) || (xv >= self.hi && gv < 0.0)))
            })
            .collect()
    }

    fn step(&self, x: &[f64], g: &[f64], alpha: f64) -> Vec<f64> {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (&xv, &gv))| {
                let v = xv - alpha * gv;
                if k < self.n && !self.closed {
                    v.clamp(self.lo, self.hi) - xv
                } else {
                    v - xv
                }
            })
            .collect()
    }
}

/// Two-loop recursion: `-H g` for the limited-memory inverse Hessian.
fn lbfgs_direction(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) -> Vec<f64> {
    let masked = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(a, &f)| if f { *a } else { 0.0 }).collect() };
    let mut q = masked(g);
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qk, yk) in q.iter_mut().zip(y) {
            *qk -= a * yk;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qk, sk) in q.iter_mut().zip(s) {
            *qk += (a - b) * sk;
        }
    }
    masked(&q).into_iter().map(|v| -v).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const LBFGS_MEMORY: usize = 12;

fn descend(m: &EnergyModel<'_>, bx: &ParamBox, mut x: Vec<f64>, opts: &SolverOptions) -> Result<RunResult> {
    let n = m.n;
    bx.project(&mut x);
    let (mut f, mut pots, mut g) = m.evaluate(&x)?;
    let mut history = vec![f];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(LBFGS_MEMORY);
    let mut iterations = 0;
    let mut converged = false;
    let mut pg = bx.projected_gradient_norm(&x, &g);
    while iterations < opts.max_iter {
        let scale = (f.abs() / n as f64).max(1.0);
        if pg <= opts.grad_tol * scale {
            converged = true;
            break;
        }
        // variables pinned at a bound by the gradient stay out of the step
        let free = bx.free_mask(&x, &g);
        let mut d = if mem.is_empty() {
            let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
            bx.step(&x, &g, 1.0 / gmax)
        } else {
            lbfgs_direction(&g, &mem, &free)
        };
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            mem.clear();
            let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
            d = bx.step(&x, &g, 1.0 / gmax);
            slope = dot(&d, &g);
            if !(slope < 0.0) {
                break;
            }
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
            bx.clamp(&mut trial);
            if let Ok((ft, pt, gt)) = m.evaluate(&trial) {
                if ft <= f + opts.armijo_slope * lambda * slope {
                    accepted = Some((trial, ft, pt, gt));
                    break;
                }
                // below rounding level the energy cannot certify progress; the gradient can
                if fallback.is_none() && ft <= f && bx.projected_gradient_norm(&trial, &gt) < pg {
                    fallback = Some((trial, ft, pt, gt));
                }
            }
            lambda *= opts.armijo_shrink;
        }
        let Some((mut trial, ft, pt, gt)) = accepted.or(fallback) else {
            break;
        };
        let sv: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-12 * dot(&sv, &sv).sqrt() * dot(&yv, &yv).sqrt() {
            if mem.len() == LBFGS_MEMORY {
                mem.pop_front();
            }
            mem.push_back((sv, yv, 1.0 / sy));
        }
        bx.project(&mut trial);
        x = trial;
        f = ft;
        pots = pt;
        g = gt;
        history.push(f);
        iterations += 1;
        pg = bx.projected_gradient_norm(&x, &g);
    }
    Ok(RunResult { x, energy: f, potentials: pots, pg_norm: pg, iterations, converged, history })
}

/// Moves exactly coincident parameters apart by `1e-12`.
fn separate_coincident(x: &mut [f64], n: usize, mode: Mode) {
    let keys: Vec<(f64, f64)> =
        (0..n).map(|i| (x[i], if mode == Mode::Surface3D { x[n + i] } else { 0.0 })).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut run = 0.0;
    for w in order.windows(2) {
        if keys[w[0]] == keys[w[1]] {
            run += 1.0;
            x[w[1]] += run * 1e-12;
        } else {
            run = 0.0;
        }
    }
}

/// Minimizes the pair energy of `n` points on `curve` by projected descent
/// along L-BFGS directions with Armijo backtracking, from `opts.restarts`
/// random starts. Restart `r` draws from `ChaCha8(seed)` at stream `r`, so
/// the result is a pure function of `(curve, spec, n, seed, opts)`.
pub fn optimize_config(
    curve: &GeneratorCurve,
    spec: KernelSpec,
    n: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<(Configuration, EnergyReport)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("optimization needs N >= 2, got {n}")));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    curve.validate()?;
    let mode = Mode::for_kernel(spec);
    check_mode(mode, spec)?;
    let (lo, hi) = curve.domain();
    let bx = ParamBox { lo, hi, closed: curve.is_closed(), n };
    let m = EnergyModel { curve, spec, mode, n };

    let runs: Vec<Result<RunResult>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
            if mode == Mode::Surface3D {
                x.extend((0..n).map(|_| rng.gen_range(0.0..TAU)));
            }
            separate_coincident(&mut x, n, mode);
            descend(&m, &bx, x, opts)
        })
        .collect();

    let mut restart_energies = Vec::with_capacity(runs.len());
    let mut best: Option<RunResult> = None;
    for run in runs {
        let run = run?;
        restart_energies.push(run.energy);
        if best.as_ref().map_or(true, |b| run.energy < b.energy) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let template = Configuration { mode, curve: curve.clone(), points: Vec::new() };
    let config = template.with_params(&best.x);
    let report = EnergyReport {
        kernel: spec,
        energy: best.energy,
        potentials: best.potentials,
        gradient_norm: best.pg_norm,
        iterations: best.iterations,
        seed,
        converged: best.converged,
        restart_energies,
        history: best.history,
    };
    Ok((config, report))
}
