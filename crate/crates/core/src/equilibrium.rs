//! Discretized continuous problem: the quadratic energy of a probability
//! measure on a node set, its potential, a simplex-constrained minimizer,
//! support detection and the equilibrium (Frostman) conditions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lift_unchecked, GeneratorCurve, PlanePoint, SpacePoint};
use crate::kernels::KernelSpec;
use crate::sum::{compensated, CompensatedSum};

/// Probability measure on finitely many nodes. `params[i]` is the curve
/// parameter that produced `nodes[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub nodes: Vec<PlanePoint>,
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn point_mass(node: PlanePoint, param: f64) -> Self {
        Self { nodes: vec![node], params: vec![param], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyInput("measure has no nodes"));
        }
        if self.nodes.len() != self.weights.len() || self.nodes.len() != self.params.len() {
            return Err(Error::InvalidArgument("node, parameter and weight lists differ in length".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument("negative weight".into()));
        }
        let total = compensated(self.weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Nodes sampled from a curve at [`GeneratorCurve::node_params`].
    pub fn uniform_on(curve: &GeneratorCurve, n: usize) -> Self {
        let params = curve.node_params(n);
        let nodes = params.iter().map(|&t| curve.eval_unchecked(t)).collect();
        Self { nodes, params, weights: vec![1.0 / n as f64; n] }
    }

    /// Total-variation distance `sum |w_i - v_i| / 2` on a shared node set.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        0.5 * compensated(self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()))
    }
}

/// Node set of `n` curve samples, validated against `H+`.
pub fn curve_nodes(curve: &GeneratorCurve, n: usize) -> Result<(Vec<PlanePoint>, Vec<f64>)> {
    curve.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput("node count must be positive"));
    }
    let params = curve.node_params(n);
    let nodes = params.iter().map(|&t| curve.eval_unchecked(t)).collect();
    Ok((nodes, params))
}

/// Dense symmetric kernel matrix, row-major.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(nodes: &[PlanePoint], spec: KernelSpec) -> Result<Self> {
        if spec.is_spatial() {
            return Err(Error::InvalidKernel(format!("{spec} is not a half-plane kernel")));
        }
        let n = nodes.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| spec.plane(nodes[i], nodes[j])).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `K w`, each entry summed with compensation in index order.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let mut s = CompensatedSum::new();
                for (k, wj) in self.row(i).iter().zip(w) {
                    if *wj != 0.0 {
                        s.add(k * wj);
                    }
                }
                s.value()
            })
            .collect()
    }

    /// `w^T K w`.
    pub fn quadratic(&self, w: &[f64]) -> f64 {
        let kw = self.apply(w);
        compensated(w.iter().zip(&kw).map(|(a, b)| a * b))
    }
}

/// `J(m) = sum_i sum_j w_i w_j k(z_i, z_j)`, diagonal included.
pub fn quadratic_energy(m: &DiscreteMeasure, spec: KernelSpec) -> Result<f64> {
    let rows: Vec<f64> = (0..m.len())
        .into_par_iter()
        .map(|i| {
            let mut s = CompensatedSum::new();
            for j in 0..m.len() {
                s.add(m.weights[j] * spec.plane(m.nodes[i], m.nodes[j])?);
            }
            Ok(m.weights[i] * s.value())
        })
        .collect::<Result<_>>()?;
    Ok(compensated(rows))
}

/// Potential `W(z) = sum_j w_j k(z, z_j)`.
pub fn potential(m: &DiscreteMeasure, spec: KernelSpec, z: PlanePoint) -> Result<f64> {
    let mut s = CompensatedSum::new();
    for (node, w) in m.nodes.iter().zip(&m.weights) {
        s.add(w * spec.plane(z, *node)?);
    }
    Ok(s.value())
}

/// Potential values on a list of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    pub points: Vec<PlanePoint>,
    pub values: Vec<f64>,
    pub kernel: KernelSpec,
}

pub fn potential_field(m: &DiscreteMeasure, spec: KernelSpec, points: &[PlanePoint]) -> Result<PotentialField> {
    let values = points.par_iter().map(|&z| potential(m, spec, z)).collect::<Result<_>>()?;
    Ok(PotentialField { points: points.to_vec(), values, kernel: spec })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    /// Target Wolfe gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Refine the Frank-Wolfe iterate by exact solves on its active face.
    pub polish: bool,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200_000, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kernel: KernelSpec,
    pub j_value: f64,
    /// `<grad J, w - e_min>`, an upper bound on `J(w) - min J` over the simplex.
    pub wolfe_gap: f64,
    /// `max |W - J|` over nodes with positive weight.
    pub frostman_max_violation: f64,
    /// `min (W - J)` over all nodes.
    pub frostman_min_slack: f64,
    pub iterations: usize,
    pub polish_steps: usize,
    pub converged: bool,
    /// Objective after each Frank-Wolfe step.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Minimizes `w^T K w` over the probability simplex on `nodes` by
/// Frank-Wolfe with away steps and exact line search, then polishes on the
/// detected active face. Deterministic.
pub fn solve_equilibrium(
    nodes: &[PlanePoint],
    params: &[f64],
    spec: KernelSpec,
    opts: &EquilibriumOptions,
) -> Result<(DiscreteMeasure, EquilibriumReport)> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput("equilibrium needs at least one node"));
    }
    if params.len() != nodes.len() {
        return Err(Error::InvalidArgument("one parameter per node is required".into()));
    }
    spec.validate()?;
    if let Some(p) = nodes.iter().find(|p| p.x < 0.0 || !p.is_finite()) {
        return Err(Error::NegativeAbscissa { x: p.x });
    }
    let km = KernelMatrix::new(nodes, spec)?;
    let (weights, mut report) = minimize_on_simplex(&km, opts);
    report.kernel = spec;
    let m = DiscreteMeasure { nodes: nodes.to_vec(), params: params.to_vec(), weights };
    Ok((m, report))
}

/// Convenience wrapper: `n` nodes on `curve`.
pub fn solve_on_curve(
    curve: &GeneratorCurve,
    n: usize,
    spec: KernelSpec,
    opts: &EquilibriumOptions,
) -> Result<(DiscreteMeasure, EquilibriumReport)> {
    let (nodes, params) = curve_nodes(curve, n)?;
    solve_equilibrium(&nodes, &params, spec, opts)
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

fn objective(w: &[f64], kw: &[f64]) -> f64 {
    compensated(w.iter().zip(kw).filter(|(a, _)| **a != 0.0).map(|(a, b)| a * b))
}

fn minimize_on_simplex(km: &KernelMatrix, opts: &EquilibriumOptions) -> (Vec<f64>, EquilibriumReport) {
    let n = km.len();
    let diag: Vec<f64> = (0..n).map(|i| km.get(i, i)).collect();
    let start = argmin(&diag);
    let mut w = vec![0.0; n];
    w[start] = 1.0;
    let mut kw = km.row(start).to_vec();
    let mut f = diag[start];
    let mut history = vec![f];
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let s = argmin(&kw);
        let fw_gain = f - kw[s];
        if 2.0 * fw_gain <= opts.tol {
            break;
        }
        // away vertex: worst node in the support
        let mut a = usize::MAX;
        for i in 0..n {
            if w[i] > 0.0 && (a == usize::MAX || kw[i] > kw[a]) {
                a = i;
            }
        }
        let away_gain = kw[a] - f;
        let use_away = away_gain > fw_gain && w[a] < 1.0;
        if use_away {
            let wa = w[a];
            let gamma_max = wa / (1.0 - wa);
            let dq = f - kw[a];
            let curv = f - 2.0 * kw[a] + diag[a];
            let mut gamma = if curv > 0.0 { -dq / curv } else { gamma_max };
            gamma = gamma.clamp(0.0, gamma_max);
            let row = km.row(a);
            for i in 0..n {
                w[i] *= 1.0 + gamma;
                kw[i] = (1.0 + gamma) * kw[i] - gamma * row[i];
            }
            w[a] = if gamma >= gamma_max { 0.0 } else { w[a] - gamma };
        } else {
            let dq = kw[s] - f;
            let curv = diag[s] - 2.0 * kw[s] + f;
            let gamma = if curv > 0.0 { (-dq / curv).clamp(0.0, 1.0) } else { 1.0 };
            let row = km.row(s);
            for i in 0..n {
                w[i] *= 1.0 - gamma;
                kw[i] = (1.0 - gamma) * kw[i] + gamma * row[i];
            }
            w[s] += gamma;
        }
        for v in w.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        iterations += 1;
        if iterations % 512 == 0 {
            renormalize(&mut w);
            kw = km.apply(&w);
        }
        let f_new = objective(&w, &kw);
        if f_new > f && (f_new - f) > 1e-15 * f.abs().max(1.0) {
            // rounding drift; refresh and continue from the exact value
            kw = km.apply(&w);
        }
        f = objective(&w, &kw);
        history.push(f);
    }
    renormalize(&mut w);
    kw = km.apply(&w);
    f = objective(&w, &kw);

    let mut polish_steps = 0;
    if opts.polish {
        if let Some((pw, steps)) = polish(km, &w, opts.tol) {
            let pkw = km.apply(&pw);
            let pf = objective(&pw, &pkw);
            let gap_old = 2.0 * (f - kw[argmin(&kw)]);
            let gap_new = 2.0 * (pf - pkw[argmin(&pkw)]);
            if pf <= f + 1e-14 * f.abs().max(1.0) && gap_new <= gap_old.max(opts.tol) {
                w = pw;
                kw = pkw;
                f = pf;
                polish_steps = steps;
            }
        }
    }

    let gap = 2.0 * (f - kw[argmin(&kw)]);
    let mut max_violation: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for i in 0..n {
        let r = kw[i] - f;
        if w[i] > 0.0 {
            max_violation = max_violation.max(r.abs());
        }
        min_slack = min_slack.min(r);
    }
    let report = EquilibriumReport {
        kernel: KernelSpec::ReducedK,
        j_value: f,
        wolfe_gap: gap.max(0.0),
        frostman_max_violation: max_violation,
        frostman_min_slack: min_slack,
        iterations,
        polish_steps,
        converged: gap <= opts.tol,
        history,
    };
    (w, report)
}

fn renormalize(w: &mut [f64]) {
    let total = compensated(w.iter().copied());
    for v in w.iter_mut() {
        *v /= total;
    }
}

/// Minimizer of the quadratic on the face spanned by `support`, from the
/// bordered system `[2K 1; 1^T 0] [w; -mu] = [0; 1]`.
fn face_minimizer(km: &KernelMatrix, support: &[usize]) -> Option<Vec<f64>> {
    let m = support.len();
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[(r, c)] = 2.0 * km.get(i, j);
        }
        a[(r, m)] = 1.0;
        a[(m, r)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m + 1);
    b[m] = 1.0;
    let x = a.lu().solve(&b)?;
    let v: Vec<f64> = (0..m).map(|k| x[k]).collect();
    v.iter().all(|x| x.is_finite()).then_some(v)
}

/// Primal active-set refinement starting from a feasible `w`.
fn polish(km: &KernelMatrix, w0: &[f64], tol: f64) -> Option<(Vec<f64>, usize)> {
    let n = km.len();
    let cutoff = 1e-12 / n as f64;
    let mut w: Vec<f64> = w0.iter().map(|&v| if v > cutoff { v } else { 0.0 }).collect();
    renormalize(&mut w);
    let mut steps = 0;
    let max_steps = 4 * n + 20;
    while steps < max_steps {
        steps += 1;
        let support: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
        let v = face_minimizer(km, &support)?;
        if v.iter().all(|&x| x >= 0.0) {
            for (k, &i) in support.iter().enumerate() {
                w[i] = v[k];
            }
            renormalize(&mut w);
            let kw = km.apply(&w);
            let f = objective(&w, &kw);
            let s = argmin(&kw);
            if 2.0 * (f - kw[s]) <= 0.01 * tol || w[s] > 0.0 {
                return Some((w, steps));
            }
            // enter the most violated node with a tiny weight
            let eps = 1e-14;
            for v in w.iter_mut() {
                *v *= 1.0 - eps;
            }
            w[s] += eps;
        } else {
            // move toward the face minimizer until the first weight hits zero
            let mut tau: f64 = 1.0;
            for (k, &i) in support.iter().enumerate() {
                if v[k] < 0.0 {
                    tau = tau.min(w[i] / (w[i] - v[k]));
                }
            }
            for (k, &i) in support.iter().enumerate() {
                let nv = w[i] + tau * (v[k] - w[i]);
                w[i] = if nv <= 1e-300 || (v[k] < 0.0 && (w[i] / (w[i] - v[k]) - tau).abs() <= 1e-15) {
                    0.0
                } else {
                    nv
                };
            }
            if w.iter().all(|&x| x == 0.0) {
                return None;
            }
            renormalize(&mut w);
        }
    }
    None
}

/// Thresholded support of a solved measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub threshold: f64,
    /// Indices with weight above the threshold, ascending.
    pub active: Vec<usize>,
    /// Hull `[t1, t2]` of the active parameters.
    pub interval: (f64, f64),
    /// `max |t|` over active nodes; the arc half-angle for circle parameters.
    pub theta: f64,
    /// Number of index gaps inside the active run (0 means contiguous).
    pub index_gaps: usize,
    pub two_point_degenerate: bool,
    /// `min |t|` over all nodes.
    pub theta_min: f64,
}

/// Default support threshold `1e-6 / N` of the total mass.
pub fn default_threshold(n_nodes: usize) -> f64 {
    1e-6 / n_nodes.max(1) as f64
}

pub fn support_estimate(m: &DiscreteMeasure, threshold: f64) -> Result<SupportEstimate> {
    let active: Vec<usize> = (0..m.len()).filter(|&i| m.weights[i] > threshold).collect();
    if active.is_empty() {
        return Err(Error::EmptyInput("no node carries weight above the threshold"));
    }
    let t_lo = active.iter().map(|&i| m.params[i]).fold(f64::INFINITY, f64::min);
    let t_hi = active.iter().map(|&i| m.params[i]).fold(f64::NEG_INFINITY, f64::max);
    let theta = active.iter().map(|&i| m.params[i].abs()).fold(0.0, f64::max);
    let index_gaps = active.windows(2).filter(|p| p[1] != p[0] + 1).count();
    let theta_min = m.params.iter().map(|t| t.abs()).fold(f64::INFINITY, f64::min);

    let mut by_weight = active.clone();
    by_weight.sort_by(|&a, &b| m.weights[b].total_cmp(&m.weights[a]).then(a.cmp(&b)));
    let two_point_degenerate = by_weight.len() >= 2 && {
        let (a, b) = (m.nodes[by_weight[0]], m.nodes[by_weight[1]]);
        let mass = m.weights[by_weight[0]] + m.weights[by_weight[1]];
        let mirrored = (a.x - b.x).abs() <= 1e-9 * a.x.abs().max(1.0) && a.y != b.y;
        mirrored && mass >= 1.0 - 2.0 * threshold * m.len() as f64
    };
    Ok(SupportEstimate {
        threshold,
        active,
        interval: (t_lo, t_hi),
        theta,
        index_gaps,
        two_point_degenerate,
        theta_min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrostmanReport {
    pub j_value: f64,
    /// `max |W - J|` over the nodes with positive weight.
    pub max_violation: f64,
    /// `min (W - J)` over the candidate set.
    pub min_slack: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Checks `W = J` on the support and `W >= J` on the candidates.
pub fn frostman_check(
    m: &DiscreteMeasure,
    spec: KernelSpec,
    candidates: &[PlanePoint],
    tol: f64,
) -> Result<FrostmanReport> {
    let j = quadratic_energy(m, spec)?;
    let support: Vec<PlanePoint> =
        (0..m.len()).filter(|&i| m.weights[i] > 0.0).map(|i| m.nodes[i]).collect();
    let on_support = potential_field(m, spec, &support)?;
    let max_violation = on_support.values.iter().map(|v| (v - j).abs()).fold(0.0, f64::max);
    let field = potential_field(m, spec, candidates)?;
    let min_slack = field.values.iter().map(|v| v - j).fold(f64::INFINITY, f64::min);
    Ok(FrostmanReport {
        j_value: j,
        max_violation,
        min_slack,
        tol,
        pass: max_violation <= tol && min_slack >= -tol,
    })
}

/// Rotationally symmetric lift: each node spread over `m` equally spaced
/// angles with weight `w_j / m`.
pub fn lift_measure(m: &DiscreteMeasure, samples: usize) -> Result<Vec<(SpacePoint, f64)>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one angle sample".into()));
    }
    if let Some(p) = m.nodes.iter().find(|p| p.x < 0.0) {
        return Err(Error::NegativeAbscissa { x: p.x });
    }
    let mut out = Vec::with_capacity(m.len() * samples);
    for (node, w) in m.nodes.iter().zip(&m.weights) {
        for k in 0..samples {
            let phi = std::f64::consts::TAU * k as f64 / samples as f64;
            out.push((lift_unchecked(*node, phi), w / samples as f64));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{k_inf, reduced_k};
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y)
    }

    #[test]
    fn quadratic_energy_examples() {
        let m = DiscreteMeasure::point_mass(p(1.0, 0.0), 0.0);
        assert_eq!(quadratic_energy(&m, KernelSpec::ReducedK).unwrap(), 0.0);
        let m = DiscreteMeasure {
            nodes: vec![p(1.0, 0.0), p(1.0, 2.0)],
            params: vec![0.0, 2.0],
            weights: vec![0.5, 0.5],
        };
        assert!((quadratic_energy(&m, KernelSpec::LimitKInf).unwrap() + 3.0).abs() <= 1e-15);
        let axis = DiscreteMeasure::point_mass(p(0.0, 0.0), 0.0);
        assert!(matches!(quadratic_energy(&axis, KernelSpec::ReducedK), Err(Error::Singular(_))));
    }

    #[test]
    fn counting_measure_energy_identity() {
        use crate::energy::{counting_measure, pair_energy, Configuration};
        let curve = GeneratorCurve::circle(p(3.0, 0.0), 1.0);
        let c = Configuration::curve_points(curve, &[0.1, 0.7, -0.4, 1.9, 2.5]);
        let e = pair_energy(&c, KernelSpec::ReducedK).unwrap();
        let m = counting_measure(&c);
        let diag: f64 = m.nodes.iter().map(|z| reduced_k(*z, *z).unwrap()).sum();
        let j = quadratic_energy(&m, KernelSpec::ReducedK).unwrap();
        assert!((j - (e + diag) / 25.0).abs() <= 1e-14);
    }

    #[test]
    fn potential_examples() {
        let w = p(2.0, 0.5);
        let m = DiscreteMeasure::point_mass(w, 0.0);
        let z = p(1.0, -1.0);
        assert_eq!(potential(&m, KernelSpec::ReducedK, z).unwrap(), reduced_k(z, w).unwrap());
        let m2 = DiscreteMeasure {
            nodes: vec![w, p(3.0, 1.0)],
            params: vec![0.0, 1.0],
            weights: vec![0.25, 0.75],
        };
        let expect = 0.25 * k_inf(z, w) + 0.75 * k_inf(z, p(3.0, 1.0));
        assert!((potential(&m2, KernelSpec::LimitKInf, z).unwrap() - expect).abs() <= 1e-15);
    }

    #[test]
    fn potential_decreases_along_rays() {
        let curve = GeneratorCurve::circle(p(3.0, 0.0), 1.0);
        let m = DiscreteMeasure::uniform_on(&curve, 17);
        for r in 0..100 {
            let y = -2.0 + 4.0 * r as f64 / 99.0;
            let mut prev = f64::INFINITY;
            for k in 0..60 {
                let x = 0.1 * k as f64;
                let v = potential(&m, KernelSpec::ReducedK, p(x, y)).unwrap();
                assert!(v < prev, "ray y = {y}, x = {x}");
                prev = v;
            }
        }
    }

    #[test]
    fn single_node() {
        let (m, rep) =
            solve_equilibrium(&[p(2.0, 1.0)], &[1.0], KernelSpec::ReducedK, &Default::default()).unwrap();
        assert_eq!(m.weights, vec![1.0]);
        assert!((rep.j_value + 2f64.ln()).abs() <= 1e-15);
        assert!(rep.converged);
    }

    #[test]
    fn rejects_bad_input() {
        let o = EquilibriumOptions::default();
        assert!(solve_equilibrium(&[], &[], KernelSpec::ReducedK, &o).is_err());
        assert!(solve_equilibrium(&[p(-1.0, 0.0)], &[0.0], KernelSpec::LimitKInf, &o).is_err());
        assert!(solve_equilibrium(&[p(1.0, 0.0)], &[0.0], KernelSpec::Log3D, &o).is_err());
    }

    #[test]
    fn kinf_segment_degenerates_to_endpoints() {
        let seg = GeneratorCurve::vertical_segment(2.0, 0.0, 1.0);
        let (m, rep) = solve_on_curve(&seg, 200, KernelSpec::LimitKInf, &Default::default()).unwrap();
        let ends = m.weights[0] + m.weights[199];
        assert!(ends >= 0.99);
        assert!((m.weights[0] - 0.5).abs() <= 0.01);
        assert!((rep.j_value + 4.5).abs() <= 1e-9);
        let sup = support_estimate(&m, default_threshold(200)).unwrap();
        assert!(sup.two_point_degenerate);
    }

    #[test]
    fn k_circle_support_is_a_symmetric_arc() {
        let arc = GeneratorCurve::circle_arc(p(3.0, 0.0), 1.0, -PI / 2.0, PI / 2.0);
        let (m, rep) = solve_on_curve(&arc, 401, KernelSpec::ReducedK, &Default::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        let sup = support_estimate(&m, default_threshold(401)).unwrap();
        assert_eq!(sup.index_gaps, 0);
        assert!((sup.interval.0 + sup.interval.1).abs() <= 1e-12);
        let fr = frostman_check(&m, KernelSpec::ReducedK, &m.nodes, 1e-9).unwrap();
        assert!(fr.pass, "{fr:?}");
        let worst = rep.history.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 1e-12 * rep.j_value.abs().max(1.0), "objective rose by {worst}");
    }

    #[test]
    fn frostman_detects_perturbed_measure() {
        let seg = GeneratorCurve::vertical_segment(2.0, 0.0, 1.0);
        let (mut m, _) = solve_on_curve(&seg, 51, KernelSpec::ReducedK, &Default::default()).unwrap();
        assert!(frostman_check(&m, KernelSpec::ReducedK, &m.nodes, 1e-8).unwrap().pass);
        m.weights[10] += 0.05;
        m.weights[40] -= 0.05;
        assert!(!frostman_check(&m, KernelSpec::ReducedK, &m.nodes, 1e-8).unwrap().pass);
    }

    #[test]
    fn exact_two_point_solution_satisfies_frostman() {
        let m = DiscreteMeasure {
            nodes: vec![p(2.0, 0.0), p(2.0, 1.0)],
            params: vec![0.0, 1.0],
            weights: vec![0.5, 0.5],
        };
        let cands: Vec<_> = (0..=20).map(|k| p(2.0, k as f64 / 20.0)).collect();
        let fr = frostman_check(&m, KernelSpec::LimitKInf, &cands, 1e-14).unwrap();
        assert_eq!(fr.j_value, -4.5);
        assert_eq!(fr.max_violation, 0.0);
        assert!(fr.min_slack >= 0.0);
    }

    #[test]
    fn support_estimate_examples() {
        let m = DiscreteMeasure::point_mass(p(3.5, 0.3), -0.7);
        let s = support_estimate(&m, 1e-9).unwrap();
        assert_eq!(s.interval, (-0.7, -0.7));
        assert_eq!(s.theta, 0.7);
        assert!(support_estimate(&m, 2.0).is_err());
    }

    #[test]
    fn lift_examples() {
        let m = DiscreteMeasure::point_mass(p(4.0, 0.0), 0.0);
        let l = lift_measure(&m, 4).unwrap();
        assert_eq!(l.len(), 4);
        assert!(l.iter().all(|(_, w)| *w == 0.25));
        assert!((l[1].0.zeta - 4.0).abs() <= 1e-15 && l[1].0.x.abs() <= 1e-15);
        assert!((l[2].0.x + 4.0).abs() <= 1e-15);
        let total: f64 = l.iter().map(|(_, w)| w).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn lifted_log_energy_approaches_reduced_energy() {
        let curve = GeneratorCurve::circle(p(3.0, 0.0), 1.0);
        let m = DiscreteMeasure::uniform_on(&curve, 7);
        let j = quadratic_energy(&m, KernelSpec::ReducedK).unwrap();
        let mut prev = f64::INFINITY;
        for samples in [64, 128, 256] {
            let l = lift_measure(&m, samples).unwrap();
            // the self-pair of a lifted point is dropped; its mass vanishes as the sampling refines
            let mut e = 0.0;
            for (a, wa) in &l {
                for (b, wb) in &l {
                    let d = a.dist(*b);
                    if d > 0.0 {
                        e -= wa * wb * d.ln();
                    }
                }
            }
            let err = (e - j).abs();
            assert!(err < prev, "M = {samples}: {err}");
            prev = err;
        }
        assert!(prev < 0.05);
    }
}
