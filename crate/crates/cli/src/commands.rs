use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use revolve_core::checks::{
    check_convexity, check_horizontal_monotonicity, check_kappa, check_kr_limit, check_kr_weak_star,
    check_pi3, check_sandwich, check_support_in_aplus, right_half, CheckReport, MonotoneGrid, SupportSubject,
};
use revolve_core::energy::{optimize_config, SolverOptions};
use revolve_core::equilibrium::{
    default_threshold, frostman_check, solve_equilibrium, support_estimate, EquilibriumOptions,
    EquilibriumReport, FrostmanReport, SupportEstimate,
};
use revolve_core::io::{self, RunManifest};
use revolve_core::kernels::reduced_k_quadrature;
use revolve_core::plot::{render_svg, PlotOptions};
use revolve_core::{GeneratorCurve, KernelSpec, PlanePoint, SpacePoint};

use crate::instance::{resolve, Instance};
use crate::{EquilibriumArgs, KernelEvalArgs, OptimizeArgs, Outcome, PlotArgs, VerifyArgs};

fn coords(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad coordinate `{v}` in `{s}`")))
        .collect()
}

fn plane(s: &str) -> Result<PlanePoint> {
    match coords(s)?[..] {
        [x, y] => Ok(PlanePoint::new(x, y)),
        _ => bail!("expected a half-plane point `x,y`, got `{s}`"),
    }
}

fn space(s: &str) -> Result<SpacePoint> {
    match coords(s)?[..] {
        [x, y, zeta] => Ok(SpacePoint::new(x, y, zeta)),
        _ => bail!("expected a space point `x,y,zeta`, got `{s}`"),
    }
}

pub fn kernel_eval(a: &KernelEvalArgs) -> Result<Outcome> {
    if a.z.len() != a.w.len() {
        bail!("--z given {} times but --w {} times", a.z.len(), a.w.len());
    }
    if a.oracle && a.kernel != KernelSpec::ReducedK {
        bail!("--oracle is only available for kernel K");
    }
    if a.oracle {
        println!("z\tw\tvalue\toracle\tdelta");
    } else {
        println!("z\tw\tvalue");
    }
    for (zs, ws) in a.z.iter().zip(&a.w) {
        let value = if a.kernel.is_spatial() {
            a.kernel.space(space(zs)?, space(ws)?)
        } else {
            a.kernel.plane(plane(zs)?, plane(ws)?)
        };
        let value = match value {
            Ok(v) => v,
            Err(e) => {
                println!("{zs}\t{ws}\terror: {e}");
                continue;
            }
        };
        if a.oracle {
            match reduced_k_quadrature(plane(zs)?, plane(ws)?, a.n) {
                Ok(q) => println!("{zs}\t{ws}\t{value}\t{q}\t{:e}", (value - q).abs()),
                Err(e) => println!("{zs}\t{ws}\t{value}\terror: {e}\t"),
            }
        } else {
            println!("{zs}\t{ws}\t{value}");
        }
    }
    Ok(Outcome::Success)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn curve_only(inst: Instance) -> Result<GeneratorCurve> {
    match inst {
        Instance::Curve(c) => Ok(c),
        Instance::SplitArc { .. } => bail!("a split arc is a node set, not a curve; use it with equilibrium or verify"),
    }
}

pub fn optimize(a: &OptimizeArgs, argv: Vec<String>) -> Result<Outcome> {
    let started = io::timestamp();
    let curve = curve_only(resolve(a.curve.curve.as_deref(), a.curve.instance.as_deref())?)?;
    let opts = SolverOptions { restarts: a.restarts, max_iter: a.max_iter, grad_tol: a.grad_tol, ..Default::default() };
    let (config, report) = optimize_config(&curve, a.kernel, a.n, a.seed, &opts)?;
    create_dir(&a.out)?;
    let outputs = ["config.json", "config.csv", "report.json"];
    io::write_json(&a.out.join(outputs[0]), &config)?;
    io::write_config_csv(&a.out.join(outputs[1]), &config)?;
    io::write_json(&a.out.join(outputs[2]), &report)?;
    let manifest = RunManifest {
        command: "optimize".into(),
        args: argv,
        curve,
        kernel: a.kernel.to_string(),
        count: a.n,
        seed: Some(a.seed),
        options: serde_json::to_value(opts)?,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: io::timestamp(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    io::write_manifest(&a.out, &manifest)?;
    println!(
        "energy {} gradient {:.3e} iterations {} converged {}",
        report.energy, report.gradient_norm, report.iterations, report.converged
    );
    Ok(if report.converged { Outcome::Success } else { Outcome::NotConverged })
}

#[derive(Debug, Serialize)]
struct RefineReport {
    nodes: usize,
    j_value: f64,
    drift: f64,
    /// `drift <= 1e-4 |J|`.
    within_tolerance: bool,
}

#[derive(Debug, Serialize)]
struct EquilibriumOutput {
    report: EquilibriumReport,
    support: SupportEstimate,
    frostman: FrostmanReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    refine: Option<RefineReport>,
}

pub fn equilibrium(a: &EquilibriumArgs, argv: Vec<String>) -> Result<Outcome> {
    let started = io::timestamp();
    let inst = resolve(a.curve.curve.as_deref(), a.curve.instance.as_deref())?;
    if !a.kernel.is_planar() {
        bail!("equilibrium needs a half-plane kernel, not {}", a.kernel);
    }
    let opts = EquilibriumOptions { tol: a.tol, max_iter: a.max_iter, ..Default::default() };
    let (nodes, params) = inst.nodes(a.nodes)?;
    let (m, report) = solve_equilibrium(&nodes, &params, a.kernel, &opts)?;
    let threshold = a.threshold.unwrap_or_else(|| default_threshold(m.len()));
    let support = support_estimate(&m, threshold)?;
    let frostman = frostman_check(&m, a.kernel, &m.nodes, (10.0 * report.wolfe_gap).max(a.tol))?;
    let refine = match a.refine {
        Some(k) if k >= 2 => {
            let (fine_nodes, fine_params) = inst.nodes(a.nodes * k)?;
            let (_, fine) = solve_equilibrium(&fine_nodes, &fine_params, a.kernel, &opts)?;
            let drift = (fine.j_value - report.j_value).abs();
            Some(RefineReport {
                nodes: fine_nodes.len(),
                j_value: fine.j_value,
                drift,
                within_tolerance: drift <= 1e-4 * report.j_value.abs(),
            })
        }
        Some(k) => bail!("--refine must be at least 2, got {k}"),
        None => None,
    };
    create_dir(&a.out)?;
    io::write_measure_csv(&a.out.join("measure.csv"), &m)?;
    let converged = report.converged;
    let out = EquilibriumOutput { report, support, frostman, refine };
    io::write_json(&a.out.join("report.json"), &out)?;
    let manifest = RunManifest {
        command: "equilibrium".into(),
        args: argv,
        curve: inst.curve().clone(),
        kernel: a.kernel.to_string(),
        count: m.len(),
        seed: None,
        options: serde_json::json!({ "solver": opts, "threshold": threshold, "refine": a.refine }),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: io::timestamp(),
        outputs: vec!["measure.csv".into(), "report.json".into()],
    };
    io::write_manifest(&a.out, &manifest)?;

    let s = &out.support;
    println!("J {} gap {:.3e} converged {}", out.report.j_value, out.report.wolfe_gap, converged);
    println!("support [{}, {}] theta {} active {} of {}", s.interval.0, s.interval.1, s.theta, s.active.len(), m.len());
    if s.two_point_degenerate {
        println!("two-point degenerate: mass at t = {} and t = {}", s.interval.0, s.interval.1);
    }
    println!(
        "frostman max violation {:.3e} min slack {:.3e} pass {}",
        out.frostman.max_violation, out.frostman.min_slack, out.frostman.pass
    );
    if let Some(r) = &out.refine {
        println!("refine {} nodes: J {} drift {:.3e} within 1e-4|J| {}", r.nodes, r.j_value, r.drift, r.within_tolerance);
    }
    Ok(if converged { Outcome::Success } else { Outcome::NotConverged })
}

const CHECK_NAMES: [&str; 7] = ["monotone", "convexity", "kappa", "aplus", "pi3", "kr-limit", "sandwich"];

/// Points used by the surface-support check.
const APLUS_POINTS: usize = 100;

fn run_check(name: &str, inst: &Instance, a: &VerifyArgs) -> Result<Vec<CheckReport>> {
    let eq_opts = EquilibriumOptions::default();
    let curve = inst.curve();
    let mut out = Vec::new();
    match name {
        "monotone" => {
            for spec in [KernelSpec::ReducedK, KernelSpec::LimitKInf] {
                out.push(check_horizontal_monotonicity(spec, &MonotoneGrid::default())?);
            }
        }
        "convexity" => {
            let c = right_half(curve);
            let kernels: &[KernelSpec] = match c {
                GeneratorCurve::Circle { .. } => &[KernelSpec::ReducedK, KernelSpec::LimitKInf],
                _ => &[KernelSpec::ReducedK],
            };
            for &spec in kernels {
                out.push(check_convexity(&c, spec, a.grid)?);
            }
        }
        "kappa" => {
            let c = right_half(curve);
            if let GeneratorCurve::VerticalSegment { .. } = c {
                eprintln!("kappa: skipped, a segment has zero curvature");
            } else {
                out.push(check_kappa(&c, a.grid)?);
            }
        }
        "aplus" => {
            if let Instance::Curve(c) = inst {
                let (config, _) = optimize_config(c, KernelSpec::Log3D, APLUS_POINTS, a.seed, &SolverOptions::default())?;
                out.push(check_support_in_aplus(SupportSubject::Configuration(&config), c)?);
            }
            let (nodes, params) = inst.nodes(401)?;
            let (m, _) = solve_equilibrium(&nodes, &params, KernelSpec::ReducedK, &eq_opts)?;
            out.push(check_support_in_aplus(SupportSubject::Measure(&m, default_threshold(m.len())), curve)?);
        }
        "pi3" => {
            if !matches!(curve, GeneratorCurve::Circle { .. }) {
                eprintln!("pi3: skipped, the instance is not a circle");
            } else {
                let (nodes, params) = inst.nodes(401)?;
                let (m, _) = solve_equilibrium(&nodes, &params, KernelSpec::LimitKInf, &eq_opts)?;
                out.push(check_pi3(curve, &m, default_threshold(m.len()))?);
            }
        }
        "kr-limit" => {
            out.push(check_kr_limit(9, &[50.0, 100.0, 200.0, 400.0])?);
            if let Instance::Curve(c) = inst {
                out.push(check_kr_weak_star(c, 201, &[10.0, 100.0, 1000.0])?);
            }
        }
        "sandwich" => {
            let c = curve_only(inst.clone())?;
            let (rep, rows) = check_sandwich(&c, KernelSpec::ReducedK, &a.n, a.seed, &SolverOptions::default())?;
            eprintln!("{:>6} {:>22} {:>22} {:>22} {:>14}", "N", "E/(N(N-1))", "J", "E/N^2 + |k|/N", "counting gap");
            for r in &rows {
                eprintln!(
                    "{:>6} {:>22.15e} {:>22.15e} {:>22.15e} {:>14.6e}",
                    r.n, r.lower, rep.metrics["j_hat"], r.upper, r.counting_gap
                );
            }
            out.push(rep);
        }
        other => bail!("unknown check `{other}`; expected one of {} or all", CHECK_NAMES.join(", ")),
    }
    Ok(out)
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    let inst = Instance::parse(&a.instance)?;
    let names: Vec<&str> = if a.check == "all" {
        CHECK_NAMES.to_vec()
    } else if CHECK_NAMES.contains(&a.check.as_str()) {
        vec![a.check.as_str()]
    } else {
        bail!("unknown check `{}`; expected one of {} or all", a.check, CHECK_NAMES.join(", "));
    };
    if let Some(dir) = &a.out {
        create_dir(dir)?;
    }
    let mut failed = false;
    for name in names {
        for (k, rep) in run_check(name, &inst, a)?.into_iter().enumerate() {
            println!("{}", serde_json::to_string(&rep)?);
            eprintln!(
                "{} {} margin {:.3e}{}",
                if rep.pass { "PASS" } else { "FAIL" },
                rep.name,
                rep.margin,
                if rep.guaranteed { "" } else { " (exploratory)" }
            );
            if let Some(dir) = &a.out {
                let file = if k == 0 { format!("{}.json", rep.name) } else { format!("{}-{k}.json", rep.name) };
                io::write_json(&dir.join(file), &rep)?;
            }
            failed |= rep.guaranteed && !rep.pass;
        }
    }
    Ok(if failed { Outcome::ChecksFailed } else { Outcome::Success })
}

pub fn plot(a: &PlotArgs) -> Result<Outcome> {
    let inst = match (&a.curve.curve, &a.curve.instance) {
        (None, None) => None,
        (c, i) => Some(resolve(c.as_deref(), i.as_deref())?),
    };
    let input = io::read_plot_input(&a.input, inst.as_ref().map(Instance::curve))
        .with_context(|| format!("reading {}", a.input.display()))?;
    let opts = PlotOptions { surface: !a.no_surface, min_weight: a.min_weight };
    let svg = render_svg(&input, inst.as_ref().map(Instance::curve), &opts)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(Outcome::Success)
}
