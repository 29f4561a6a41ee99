//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --show-output` to see them.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, LN_2, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revolve_core::checks::{
    check_horizontal_monotonicity, check_kappa, check_kr_limit, check_kr_weak_star, check_pi3, check_sandwich,
    right_half, symmetric_arc_params, MonotoneGrid,
};
use revolve_core::energy::{energy_gradient, optimize_config, pair_energy, Configuration, Mode, SolverOptions};
use revolve_core::equilibrium::{
    default_threshold, potential_field, solve_equilibrium, solve_on_curve, support_estimate, EquilibriumOptions,
};
use revolve_core::kernels::{k_inf, reduced_k, reduced_k_quadrature};
use revolve_core::{GeneratorCurve, KernelSpec, PlanePoint};

const C1_TOL: f64 = 1e-10;
const C1_NODES: usize = 1 << 14;
const C1_BUDGET: Duration = Duration::from_secs(5);
const C2_TOL: f64 = 1e-14;
const C3_STRICT: f64 = 1e-10;
const C3_CONSTANT: f64 = 1e-12;
const C4_REL_TOL: f64 = 1e-5;
const C4_FD_STEP: f64 = 1e-6;
const C5_ANGLE_SLACK: f64 = 1e-6;
const C5_BUDGET: Duration = Duration::from_secs(120);
const C6_REL_VARIATION: f64 = 1e-4;
const C6_PROBES: usize = 2000;
const C7_MASS: f64 = 0.99;
const C7_HALF: f64 = 0.01;
const C7_J_TOL: f64 = 1e-6;
const C8_SYMMETRY: f64 = 1e-8;
const C8_HALF: f64 = 0.01;
const C9_CLOSED_FORM: f64 = 1e-8;
const C10_RATIO: (f64, f64) = (0.4, 0.6);
const C11_SLACK: f64 = 1e-3;

fn verdict(criterion: u32, ok: bool, detail: String) {
    println!("{} criterion {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn torus() -> GeneratorCurve {
    GeneratorCurve::circle(PlanePoint::new(3.0, 0.0), 1.0)
}

fn segment() -> GeneratorCurve {
    GeneratorCurve::vertical_segment(2.0, 0.0, 1.0)
}

#[test]
fn criterion_01_kernel_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z = PlanePoint::new(rng.gen_range(0.5..5.0), rng.gen_range(-3.0..3.0));
        let w = PlanePoint::new(rng.gen_range(0.5..5.0), rng.gen_range(-3.0..3.0));
        let err = (reduced_k(z, w).unwrap() - reduced_k_quadrature(z, w, C1_NODES).unwrap()).abs();
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        worst <= C1_TOL && elapsed < C1_BUDGET,
        format!("max |K - quadrature| = {worst:.3e} (tol {C1_TOL:e}) over 100 pairs in {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_closed_form_spot_values() {
    let a = reduced_k(PlanePoint::new(2.0, 0.0), PlanePoint::new(1.0, 0.0)).unwrap();
    let b = k_inf(PlanePoint::new(1.0, 0.0), PlanePoint::new(0.0, 1.0));
    let ea = (a + LN_2).abs();
    let eb = (b + 1.0 + 2f64.sqrt()).abs();
    verdict(2, ea <= C2_TOL && eb <= C2_TOL, format!("K error {ea:.1e}, K_inf error {eb:.1e} (tol {C2_TOL:e})"));
}

#[test]
fn criterion_03_horizontal_monotonicity() {
    let grid = MonotoneGrid::default();
    let mut ok = grid.rays >= 1000;
    let mut parts = Vec::new();
    for spec in [KernelSpec::ReducedK, KernelSpec::LimitKInf] {
        let rep = check_horizontal_monotonicity(spec, &grid).unwrap();
        let dec = rep.metrics["min_decrease"];
        let var = rep.metrics["constant_variation"];
        ok &= rep.pass && dec > C3_STRICT && var <= C3_CONSTANT;
        parts.push(format!("{spec}: min decrease {dec:.3e}, constant variation {var:.1e}"));
    }
    verdict(3, ok, format!("{} rays; {}", grid.rays, parts.join("; ")));
}

fn random_params(curve: &GeneratorCurve, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (a, b) = curve.domain();
    (0..n)
        .map(|_| loop {
            let t = rng.gen_range(a + 0.01..b - 0.01);
            // polyline vertices are kinks; keep the stencil on one piece
            if !matches!(curve, GeneratorCurve::Polyline { .. }) || (t - t.round()).abs() > 1e-3 {
                break t;
            }
        })
        .collect()
}

fn fd_gradient(config: &Configuration, spec: KernelSpec) -> Vec<f64> {
    let n = config.len();
    let dim = if config.mode == Mode::Surface3D { 2 * n } else { n };
    (0..dim)
        .map(|k| {
            let shifted = |h: f64| {
                let mut c = config.clone();
                if k < n {
                    c.points[k].t += h;
                } else {
                    *c.points[k - n].phi.as_mut().unwrap() += h;
                }
                pair_energy(&c, spec).unwrap()
            };
            (shifted(C4_FD_STEP) - shifted(-C4_FD_STEP)) / (2.0 * C4_FD_STEP)
        })
        .collect()
}

#[test]
fn criterion_04_gradients_match_finite_differences() {
    let curves = [
        torus(),
        segment(),
        GeneratorCurve::ellipse(PlanePoint::new(3.0, 0.0), 1.2, 0.8),
        GeneratorCurve::Polyline {
            vertices: vec![PlanePoint::new(1.0, 0.0), PlanePoint::new(2.0, 0.5), PlanePoint::new(1.5, 1.5)],
        },
    ];
    let kernels = [
        KernelSpec::Riesz3D { s: 1.0 },
        KernelSpec::Log3D,
        KernelSpec::ReducedK,
        KernelSpec::ScaledKR { r: 10.0 },
        KernelSpec::LimitKInf,
        KernelSpec::SymmetrizedKInf,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for curve in &curves {
        for &spec in &kernels {
            for _ in 0..50 {
                let t = random_params(curve, 5, &mut rng);
                let config = if Mode::for_kernel(spec) == Mode::Surface3D {
                    let phi: Vec<f64> = (0..5).map(|_| rng.gen_range(0.01..TAU - 0.01)).collect();
                    Configuration::surface_points(curve.clone(), &t, &phi)
                } else {
                    Configuration::curve_points(curve.clone(), &t)
                };
                let g = energy_gradient(&config, spec).unwrap();
                let fd = fd_gradient(&config, spec);
                let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
                worst = worst.max(diff / norm);
                cases += 1;
            }
        }
    }
    verdict(
        4,
        worst <= C4_REL_TOL && cases == 4 * 6 * 50,
        format!("max relative gradient error {worst:.3e} (tol {C4_REL_TOL:e}) over {cases} configurations"),
    );
}

#[test]
fn criterion_05_torus_points_avoid_inner_half() {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [50, 100, 200] {
        let start = Instant::now();
        let (config, report) = optimize_config(&torus(), KernelSpec::Log3D, n, 42, &SolverOptions::default()).unwrap();
        let elapsed = start.elapsed();
        let max_t = config.points.iter().map(|p| p.t.abs()).fold(0.0, f64::max);
        ok &= max_t <= FRAC_PI_2 + C5_ANGLE_SLACK && report.converged;
        if n == 200 {
            ok &= elapsed < C5_BUDGET;
        }
        parts.push(format!("N={n}: max |t| {max_t:.4} in {elapsed:.1?}"));
    }
    verdict(5, ok, format!("{} (bound pi/2 + {C5_ANGLE_SLACK:e})", parts.join(", ")));
}

#[test]
fn criterion_06_segment_equilibrium_has_full_support() {
    let (m, report) = solve_on_curve(&segment(), 201, KernelSpec::ReducedK, &EquilibriumOptions::default()).unwrap();
    let min_w = m.weights.iter().copied().fold(f64::INFINITY, f64::min);
    let probe: Vec<PlanePoint> = (0..=C6_PROBES).map(|k| PlanePoint::new(2.0, k as f64 / C6_PROBES as f64)).collect();
    let field = potential_field(&m, KernelSpec::ReducedK, &probe).unwrap();
    let hi = field.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = field.values.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = hi - lo;
    let bound = C6_REL_VARIATION * report.j_value.abs();
    verdict(
        6,
        min_w > 0.0 && variation <= bound,
        format!("min weight {min_w:.3e}, potential variation {variation:.3e} over {} points (bound {bound:.3e}), J = {:.12}", C6_PROBES + 1, report.j_value),
    );
}

#[test]
fn criterion_07_limit_kernel_segment_degenerates() {
    let (m, report) = solve_on_curve(&segment(), 201, KernelSpec::LimitKInf, &EquilibriumOptions::default()).unwrap();
    let (w0, w1) = (m.weights[0], m.weights[200]);
    let j_err = (report.j_value + 4.5).abs();
    verdict(
        7,
        w0 + w1 >= C7_MASS && (w0 - 0.5).abs() <= C7_HALF && (w1 - 0.5).abs() <= C7_HALF && j_err <= C7_J_TOL,
        format!("endpoint masses {w0:.6}, {w1:.6}; |J + 4.5| = {j_err:.1e}"),
    );
}

#[test]
fn criterion_08_support_angle_bound() {
    let (m, _) = solve_on_curve(&torus(), 401, KernelSpec::LimitKInf, &EquilibriumOptions::default()).unwrap();
    let rep = check_pi3(&torus(), &m, default_threshold(m.len())).unwrap();
    let theta = rep.metrics["theta"];
    let asym = rep.metrics["mirror_asymmetry"];
    let bound = FRAC_PI_3 + 2.0 * (TAU / 401.0);
    let full_ok = rep.pass && theta <= bound && asym <= C8_SYMMETRY;

    // arcs |t| in [lo, pi/2] with lo > pi/3 carry no part of the bound region
    let lo = FRAC_PI_3 + 0.2;
    let params = symmetric_arc_params(lo, FRAC_PI_2, 100).unwrap();
    let nodes: Vec<PlanePoint> = params.iter().map(|&t| torus().eval(t).unwrap()).collect();
    let (arc, _) = solve_equilibrium(&nodes, &params, KernelSpec::LimitKInf, &EquilibriumOptions::default()).unwrap();
    let sup = support_estimate(&arc, default_threshold(arc.len())).unwrap();
    let arc_rep = check_pi3(&torus(), &arc, default_threshold(arc.len())).unwrap();
    let mut heavy = arc.weights.clone();
    heavy.sort_by(|a, b| b.total_cmp(a));
    let arc_ok = arc_rep.pass
        && sup.two_point_degenerate
        && (heavy[0] - 0.5).abs() <= C8_HALF
        && (heavy[1] - 0.5).abs() <= C8_HALF;
    verdict(
        8,
        full_ok && arc_ok,
        format!(
            "theta {theta:.4} <= {bound:.4}, mirror asymmetry {asym:.1e}; arc masses {:.6}, {:.6}, two-point flag {}",
            heavy[0], heavy[1], sup.two_point_degenerate
        ),
    );
}

#[test]
fn criterion_09_kappa_conditions_on_circle() {
    let rep = check_kappa(&right_half(&torus()), 201).unwrap();
    let closed = rep.metrics["closed_form_discrepancy"];
    let neg = rep.metrics["min_neg_normal_dot"];
    let bracket = rep.metrics["min_bracket"];
    verdict(
        9,
        rep.pass && closed <= C9_CLOSED_FORM && neg > 0.0 && bracket > 0.0,
        format!("201x201 grid: closed-form discrepancy {closed:.2e}, margins {neg:.3e} and {bracket:.3e}"),
    );
}

#[test]
fn criterion_10_kr_converges_to_limit() {
    let rep = check_kr_limit(9, &[50.0, 100.0, 200.0, 400.0]).unwrap();
    let ratios: BTreeMap<&str, f64> =
        rep.metrics.iter().filter(|(k, _)| k.starts_with("ratio_")).map(|(k, v)| (k.as_str(), *v)).collect();
    let ratios_ok = ratios.len() == 3 && ratios.values().all(|r| (C10_RATIO.0..=C10_RATIO.1).contains(r));
    let tv = check_kr_weak_star(&torus(), 201, &[10.0, 100.0, 1000.0]).unwrap();
    let tvs = [tv.metrics["tv_R10"], tv.metrics["tv_R100"], tv.metrics["tv_R1000"]];
    let tv_ok = tvs[0] > tvs[1] && tvs[1] > tvs[2];
    verdict(
        10,
        ratios_ok && tv_ok,
        format!("error ratios {:?}; TV distances {:.3e}, {:.3e}, {:.3e}", ratios.values().collect::<Vec<_>>(), tvs[0], tvs[1], tvs[2]),
    );
}

#[test]
fn criterion_11_energy_sandwich() {
    let (rep, rows) = check_sandwich(&torus(), KernelSpec::ReducedK, &[10, 50, 100], 42, &SolverOptions::default()).unwrap();
    let j = rep.metrics["j_hat"];
    let bounds_ok = rows.iter().all(|r| r.lower <= j + C11_SLACK && j <= r.upper + C11_SLACK);
    let gaps: Vec<f64> = rows.iter().map(|r| r.counting_gap).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("N={}: {:.6} <= {j:.6} <= {:.6}, gap {:.3e}", r.n, r.lower, r.upper, r.counting_gap))
        .collect();
    verdict(11, bounds_ok && decreasing && rows.len() == 3, table.join("; "));
}

fn run_cli(args: &[&str], out: &Path) {
    let o = Command::new(env!("CARGO_BIN_EXE_revolve"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        if e.path().is_dir() {
            for (k, v) in tree(&e.path()) {
                out.insert(format!("{}/{k}", e.file_name().to_string_lossy()), v);
            }
        } else {
            out.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap());
        }
    }
    out
}

#[test]
fn criterion_12_reruns_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let run_all = |base: &Path| {
        let opt = base.join("opt");
        run_cli(&["optimize", "--kernel", "log3d", "--instance", "circle:3,0,1", "-N", "30", "--seed", "42"], &opt);
        run_cli(&["equilibrium", "--kernel", "K", "--instance", "circle:3,0,1", "--nodes", "201"], &base.join("eq"));
        run_cli(&["verify", "--check", "pi3"], &base.join("verify"));
        let input = opt.join("config.json");
        run_cli(&["plot", "--input", input.to_str().unwrap()], &base.join("plot.svg"));
        tree(base)
    };
    let first = run_all(root.path());
    let second = run_all(root.path());
    let same = first == second;
    let files = first.len();
    let diffs: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    verdict(
        12,
        same && files == 9,
        format!("{files} output files across optimize, equilibrium, verify and plot; differing: {diffs:?}"),
    );
}
