//! Task implementations. Each returns a [`TaskReport`]; nothing here writes
//! files.

use std::f64::consts::PI;
use std::sync::Arc;

use calorix_core::fd::apply_operator;
use calorix_core::kernel::{
    caloric_exponential, conormal_kernel_source, elliptic_conormal_kernel, elliptic_fundamental, fundamental_solution,
};
use calorix_core::poly::{apply_parabolic_operator, caloric_poly, moment_integral, PolynomialJson};
use calorix_core::potentials::{
    elliptic_gauss_identity, write_jump_csv, CaloricField, DensityField, DensityPoint, ExponentialField, JumpKind,
    LayerPotentials, StokesRepresentation, TranslatedKernel,
};
use calorix_core::trefftz::{
    completeness_study, cross_validate, evaluate_solution, interior_probe_grid, solve_dirichlet, BoundaryData,
    DEFAULT_RCOND,
};
use calorix_core::{
    CaloricBasis, CoefficientMatrix, CrossSection, CylinderMesh, FrequencyVector, Location, MultiIndex, Operator, Parity,
    Region, SpaceTimePoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{DataSpec, ExperimentConfig, TaskName};
use crate::error::CliError;
use crate::report::{num, point, Check, Table, TaskReport};

/// Tolerances of the verification suites.
pub const KERNEL_FD_TOLERANCE: f64 = 1e-5;
pub const CONORMAL_FD_TOLERANCE: f64 = 1e-6;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
pub const JUMP_TOLERANCE: f64 = 1e-2;
pub const REVERSAL_TOLERANCE: f64 = 1e-10;
pub const IDENTITY_TOLERANCE: f64 = 1e-6;
pub const INITIAL_LIMIT_TIME: f64 = 1e-4;
pub const INITIAL_LIMIT_TOLERANCE: f64 = 1e-3;
pub const SURFACE_TOLERANCE: f64 = 1e-3;
pub const ELLIPTIC_ORDER: usize = 64;
pub const MONOTONE_SLACK: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Runs `task` on a validated configuration.
pub fn run_task(task: TaskName, config: &ExperimentConfig) -> Result<TaskReport, CliError> {
    config.validate()?;
    config.validate_for(task)?;
    match task {
        TaskName::VerifyKernels => verify_kernels(config),
        TaskName::VerifyJumps => verify_jumps(config),
        TaskName::VerifyIdentities => verify_identities(config),
        TaskName::PolyTable => poly_table(config),
        TaskName::Solve => solve(config),
        TaskName::Completeness => completeness(config),
    }
}

/// Catalog printed by `calorix list-tasks`: name, purpose, parameters.
pub fn task_catalog() -> Vec<(TaskName, &'static str, &'static str)> {
    vec![
        (
            TaskName::VerifyKernels,
            "Heat kernel normalization, symmetry and causality; finite-difference checks that the kernel \
             and caloric exponentials solve H u = 0 / H* u = 0 and that the conormal kernels are the \
             conormal derivatives (fundamental solution of the parabolic operator).",
            "probes (default 20)",
        ),
        (
            TaskName::VerifyJumps,
            "Two-sided normal-line limits of the double layer and of the conormal derivative of the single \
             layer at lateral nodes, for random smooth densities; adjoint potentials checked by time reversal \
             (jump relations of parabolic layer potentials).",
            "densities (default 10), nodes (default 10), refine (default true)",
        ),
        (
            TaskName::VerifyIdentities,
            "Partition identity, Stokes representation for H and H*, initial limit of the cap potential and, \
             for n = 3, the elliptic Gauss identity (representation formulas and the initial-value limit).",
            "none",
        ),
        (
            TaskName::PolyTable,
            "Exact table of the caloric polynomials v_alpha or w_alpha with an annihilation check \
             (generating function of the caloric polynomials).",
            "max_degree (default 4)",
        ),
        (
            TaskName::Solve,
            "Least-squares fit of Dirichlet data on the parabolic boundary by caloric polynomials of \
             degree <= N (Trefftz realization of the completeness theorems).",
            "degree, data, rcond (default 1e-12), max_residual",
        ),
        (
            TaskName::Completeness,
            "Residual decay of nested Trefftz fits on a fixed mesh (completeness of {v_alpha} on the \
             lateral surface plus bottom, {w_alpha} on the lateral surface plus top).",
            "degrees, data, rcond (default 1e-12), max_residual, cross_validate (default false)",
        ),
    ]
}

fn rng(config: &ExperimentConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

#[allow(clippy::too_many_arguments)]
fn check_row(rows: &mut Vec<Vec<String>>, checks: &mut Vec<(String, f64, f64)>, name: &str, p: &[f64], t: f64, value: f64, reference: f64, error: f64, limit: f64) {
    rows.push(vec![
        name.to_string(),
        point(p),
        num(t),
        num(value),
        num(reference),
        num(error),
        num(limit),
        (error <= limit).to_string(),
    ]);
    checks.push((name.to_string(), error, limit));
}

/// Worst value per check name, in first-seen order.
fn worst_checks(raw: &[(String, f64, f64)]) -> Vec<Check> {
    let mut out: Vec<Check> = Vec::new();
    for (name, value, limit) in raw {
        match out.iter_mut().find(|c| &c.name == name) {
            Some(c) => {
                if value.is_nan() || *value > c.value {
                    *c = Check::at_most(name.clone(), *value, *limit);
                }
            }
            None => out.push(Check::at_most(name.clone(), *value, *limit)),
        }
    }
    out
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

fn verify_kernels(config: &ExperimentConfig) -> Result<TaskReport, CliError> {
    let a = config.coefficients()?;
    let n = a.dim();
    let probes = config.params.probes.unwrap_or(20);
    let mut rng = rng(config);
    let mut rows = Vec::new();
    let mut raw = Vec::new();

    let origin = vec![0.0; n];
    for tau in [0.1, 1.0] {
        let total = moment_integral(&a, &MultiIndex::zero(n), &SpaceTimePoint::new(origin.clone(), tau), 48);
        check_row(&mut rows, &mut raw, "normalization", &origin, tau, total, 1.0, (total - 1.0).abs(), NORMALIZATION_TOLERANCE);
    }
    for _ in 0..probes {
        let z = random_vec(&mut rng, n, -1.0, 1.0);
        let y = random_vec(&mut rng, n, -1.0, 1.0);
        let tau = rng.random_range(0.2..1.0);
        let s = rng.random_range(-0.5..0.5);
        let x: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a + b).collect();

        let g = fundamental_solution(&a, &z, tau);
        let minus: Vec<f64> = z.iter().map(|v| -v).collect();
        let g_minus = fundamental_solution(&a, &minus, tau);
        check_row(&mut rows, &mut raw, "symmetry", &z, tau, g_minus, g, (g - g_minus).abs(), 0.0);
        let causal = fundamental_solution(&a, &z, -tau).abs() + fundamental_solution(&a, &z, 0.0).abs();
        check_row(&mut rows, &mut raw, "causality", &z, -tau, causal, 0.0, causal, 0.0);

        let (ys, ss) = (y.clone(), s);
        let heat = apply_operator(
            |p: &SpaceTimePoint| {
                let d: Vec<f64> = p.x.iter().zip(&ys).map(|(a, b)| a - b).collect();
                fundamental_solution(&a, &d, p.t - ss)
            },
            &a,
            &SpaceTimePoint::new(x.clone(), s + tau),
            Operator::Heat,
            tau.sqrt(),
            tau,
        );
        check_row(&mut rows, &mut raw, "heat-annihilation", &x, s + tau, heat.value, 0.0, heat.relative(), KERNEL_FD_TOLERANCE);

        let (xs, ts) = (x.clone(), s + tau);
        let adjoint = apply_operator(
            |q: &SpaceTimePoint| {
                let d: Vec<f64> = xs.iter().zip(&q.x).map(|(a, b)| a - b).collect();
                fundamental_solution(&a, &d, ts - q.t)
            },
            &a,
            &SpaceTimePoint::new(y.clone(), s),
            Operator::Adjoint,
            tau.sqrt(),
            tau,
        );
        check_row(&mut rows, &mut raw, "adjoint-annihilation", &y, s, adjoint.value, 0.0, adjoint.relative(), KERNEL_FD_TOLERANCE);

        let mut nu = random_vec(&mut rng, n, -1.0, 1.0);
        let len = nu.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
        nu.iter_mut().for_each(|v| *v /= len);
        let mut conormal = vec![0.0; n];
        a.apply(&nu, &mut conormal);
        let closed = conormal_kernel_source(&a, &x, &y, &nu, tau);
        let shifted = |h: f64| {
            let d: Vec<f64> = (0..n).map(|i| x[i] - (y[i] + h * conormal[i])).collect();
            fundamental_solution(&a, &d, tau)
        };
        let diff = |h: f64| (shifted(h) - shifted(-h)) / (2.0 * h);
        let h = 1e-3 * tau.sqrt();
        let fd = (4.0 * diff(h / 2.0) - diff(h)) / 3.0;
        let scale = closed.abs().max(g * tau.powf(-0.5));
        check_row(&mut rows, &mut raw, "conormal-kernel", &y, tau, closed, fd, relative((closed - fd).abs(), scale), CONORMAL_FD_TOLERANCE);

        let xi = FrequencyVector(random_vec(&mut rng, n, -1.0, 1.0));
        for (which, name) in [(Operator::Heat, "exponential-heat"), (Operator::Adjoint, "exponential-adjoint")] {
            let r = apply_operator(
                |p: &SpaceTimePoint| caloric_exponential(&a, p, &xi, which),
                &a,
                &SpaceTimePoint::new(x.clone(), tau),
                which,
                1.0,
                1.0,
            );
            check_row(&mut rows, &mut raw, name, &x, tau, r.value, 0.0, r.relative(), KERNEL_FD_TOLERANCE);
        }

        if n >= 3 {
            let closed = elliptic_conormal_kernel(&a, &x, &y, &nu)?;
            let shifted = |h: f64| {
                let yy: Vec<f64> = (0..n).map(|i| y[i] + h * conormal[i]).collect();
                elliptic_fundamental(&a, &x, &yy)
            };
            let diff = |h: f64| -> Result<f64, CliError> { Ok((shifted(h)? - shifted(-h)?) / (2.0 * h)) };
            let fd = (4.0 * diff(5e-4)? - diff(1e-3)?) / 3.0;
            let scale = closed.abs().max(elliptic_fundamental(&a, &x, &y)?.abs());
            check_row(&mut rows, &mut raw, "elliptic-conormal", &y, 0.0, closed, fd, relative((closed - fd).abs(), scale), CONORMAL_FD_TOLERANCE);
        }
    }

    let mut report = TaskReport::new(TaskName::VerifyKernels);
    report.tables.push(Table::from_rows(
        "checks",
        &["check", "point", "t", "value", "reference", "error", "limit", "pass"],
        &rows,
    )?);
    report.checks = worst_checks(&raw);
    report.results = serde_json::json!({ "rows": rows.len() });
    Ok(report)
}

/// `c0 + <c, x> + c_s sin(<k, x> + w t) + c_t t^2` with seeded coefficients.
fn random_density(rng: &mut ChaCha8Rng, n: usize) -> impl Fn(&DensityPoint<'_>) -> f64 + Send + Sync + Clone + 'static {
    let c0 = rng.random_range(-1.0..1.0);
    let c = random_vec(rng, n, -1.0, 1.0);
    let k = random_vec(rng, n, -2.0, 2.0);
    let (cs, w, ct) = (rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
    move |p: &DensityPoint<'_>| {
        let lin: f64 = c.iter().zip(p.x).map(|(a, b)| a * b).sum();
        let arg: f64 = k.iter().zip(p.x).map(|(a, b)| a * b).sum::<f64>() + w * p.t;
        c0 + lin + cs * arg.sin() + ct * p.t * p.t
    }
}

/// Lateral node of `fine` closest to `node` of `coarse` in space-time.
fn matching_node(coarse: &CylinderMesh, fine: &CylinderMesh, node: usize) -> usize {
    let target = &coarse.lateral_nodes()[node].point;
    let dist = |p: &SpaceTimePoint| p.x.iter().zip(&target.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + (p.t - target.t).powi(2);
    fine.lateral_nodes()
        .iter()
        .enumerate()
        .min_by(|a, b| dist(&a.1.point).total_cmp(&dist(&b.1.point)))
        .map(|(i, _)| i)
        .expect("mesh has lateral nodes")
}

fn reflected_node(mesh: &CylinderMesh, node: usize) -> usize {
    let m_t = mesh.time_nodes().len();
    let l = &mesh.lateral_nodes()[node];
    l.boundary_index * m_t + (m_t - 1 - l.time_index)
}

struct JumpCase {
    density: usize,
    reports: Vec<calorix_core::potentials::JumpProbeReport>,
    refined: Vec<(JumpKind, f64, f64)>,
    reversal: Vec<(String, f64, f64)>,
}

fn verify_jumps(config: &ExperimentConfig) -> Result<TaskReport, CliError> {
    let mesh = config.mesh()?;
    let n = mesh.dim();
    let t_final = mesh.final_time();
    let densities = config.params.densities.unwrap_or(10);
    let nodes_per = config.params.nodes.unwrap_or(10);
    let refine = config.params.refine.unwrap_or(true);
    let fine = if refine { Some(config.mesh_with(config.mesh.refined())?) } else { None };
    let m_t = mesh.time_nodes().len();
    let admissible: Vec<usize> = (0..m_t)
        .filter(|&i| {
            let t = mesh.time_nodes()[i];
            t > 0.1 * t_final && t < 0.9 * t_final
        })
        .collect();
    if admissible.is_empty() {
        return Err(CliError::Config("no time nodes away from the corners; increase mesh.m_time".into()));
    }
    let boundary_len = mesh.boundary_points().len();

    let mut rng = rng(config);
    let mut cases = Vec::new();
    for d in 0..densities {
        let f = random_density(&mut rng, n);
        for _ in 0..nodes_per {
            let node = rng.random_range(0..boundary_len) * m_t + admissible[rng.random_range(0..admissible.len())];
            cases.push((d, f.clone(), node));
        }
    }

    let h0 = 0.05 * mesh.cross_section().diameter();
    let results: Vec<Result<JumpCase, CliError>> = cases
        .par_iter()
        .map(|(d, f, node)| {
            let pot = LayerPotentials::new(&mesh);
            let phi = DensityField::from_fn(&mesh, Region::Lateral, f.clone());
            let mut reports = Vec::new();
            for kind in JumpKind::ALL {
                reports.push(pot.jump_probe(&phi, *node, kind)?);
            }
            let mut refined = Vec::new();
            if let Some(fine) = &fine {
                let fpot = LayerPotentials::new(fine);
                let fphi = DensityField::from_fn(fine, Region::Lateral, f.clone());
                let fnode = matching_node(&mesh, fine, *node);
                for (i, kind) in [JumpKind::DoubleLayer, JumpKind::ConormalSingleLayer].into_iter().enumerate() {
                    refined.push((kind, reports[i].error, fpot.jump_probe(&fphi, fnode, kind)?.error));
                }
            }
            let reflected = phi.time_reflected(&mesh);
            let rnode = reflected_node(&mesh, *node);
            let scale = phi.max_abs().max(f64::MIN_POSITIVE);
            let mut reversal = Vec::new();
            for h in [h0 / 4.0, -h0 / 4.0, h0 / 64.0, -h0 / 64.0] {
                let star = pot.double_layer_star(&phi, &mesh.offset_point(*node, h)?)?;
                let plain = pot.double_layer(&reflected, &mesh.offset_point(rnode, h)?)?;
                reversal.push(("double-layer-star".to_string(), h, (star - plain).abs() / scale));
                let star = pot.conormal_derivative_single_layer_star(&phi, *node, h)?;
                let plain = pot.conormal_derivative_single_layer(&reflected, rnode, h)?;
                reversal.push(("conormal-single-layer-star".to_string(), h, (star - plain).abs() / scale));
            }
            Ok(JumpCase { density: *d, reports, refined, reversal })
        })
        .collect();
    let cases: Vec<JumpCase> = results.into_iter().collect::<Result<_, _>>()?;

    let mut report = TaskReport::new(TaskName::VerifyJumps);
    let all: Vec<_> = cases.iter().flat_map(|c| c.reports.iter().cloned()).collect();
    report.tables.push(Table::from_writer("probes", |w| write_jump_csv(&all, w))?);

    let mut ref_rows = Vec::new();
    let mut rev_rows = Vec::new();
    for c in &cases {
        let node = c.reports[0].node;
        for (kind, coarse, fine) in &c.refined {
            ref_rows.push(vec![c.density.to_string(), node.to_string(), kind.label().into(), num(*coarse), num(*fine)]);
        }
        for (kind, h, err) in &c.reversal {
            rev_rows.push(vec![c.density.to_string(), node.to_string(), kind.clone(), num(*h), num(*err)]);
        }
    }
    report.tables.push(Table::from_rows("refinement", &["density", "node", "kind", "coarse_error", "fine_error"], &ref_rows)?);
    report.tables.push(Table::from_rows("reversal", &["density", "node", "kind", "h", "error"], &rev_rows)?);

    let mut summary = serde_json::Map::new();
    for kind in JumpKind::ALL {
        let worst = all.iter().filter(|r| r.kind == kind).map(|r| r.error).fold(0.0, f64::max);
        report.checks.push(Check::at_most(format!("{}-jump", kind.label()), worst, JUMP_TOLERANCE));
        summary.insert(kind.label().into(), serde_json::json!(worst));
    }
    if refine {
        for kind in [JumpKind::DoubleLayer, JumpKind::ConormalSingleLayer] {
            let pairs: Vec<(f64, f64)> =
                cases.iter().flat_map(|c| c.refined.iter()).filter(|r| r.0 == kind).map(|r| (r.1, r.2)).collect();
            let coarse = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
            let fine = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
            report.checks.push(Check::at_most(format!("{}-refined", kind.label()), fine, coarse));
        }
    }
    let worst_rev = cases.iter().flat_map(|c| c.reversal.iter()).map(|r| r.2).fold(0.0, f64::max);
    report.checks.push(Check::at_most("time-reversal", worst_rev, REVERSAL_TOLERANCE));
    report.results = serde_json::json!({ "cases": cases.len(), "worst_error": summary, "time_reversal": worst_rev });
    Ok(report)
}

/// Point at radial coordinate `rho` in direction `j` of `count`.
fn section_point(cs: &CrossSection, rho: f64, j: usize, count: usize) -> Vec<f64> {
    let frac = (j as f64 + 0.5) / count as f64;
    let param = if cs.dim() == 2 { [2.0 * PI * frac, 0.0] } else { [PI * frac, 2.0 * PI * (frac * 7.0).fract()] };
    let (y, _) = cs.cap_point(rho, param);
    y[..cs.dim()].to_vec()
}

/// 24 interior and 24 exterior probes of the partition identity.
pub fn partition_probes(cs: &CrossSection, t_final: f64) -> Vec<SpaceTimePoint> {
    let mut out = Vec::new();
    for j in 0..24 {
        let rho = [0.0, 0.3, 0.6, 0.9][j % 4];
        let t = t_final * (0.1 + 0.8 * (j as f64 + 0.5) / 24.0);
        out.push(SpaceTimePoint::new(section_point(cs, rho, j, 24), t));
    }
    for j in 0..24 {
        let (rho, t) = match j % 4 {
            0 => (1.2, 0.5 * t_final),
            1 => (2.0, 0.3 * t_final),
            2 => (0.5, 1.3 * t_final),
            _ => (1.5, 0.8 * t_final),
        };
        out.push(SpaceTimePoint::new(section_point(cs, rho, j, 24), t));
    }
    out
}

/// 27 interior targets (3 radii x 3 directions x 3 times) and 8 exterior
/// ones for the representation formulas.
pub fn stokes_targets(cs: &CrossSection, t_final: f64) -> Vec<SpaceTimePoint> {
    let mut out = Vec::new();
    for (i, rho) in [0.2, 0.5, 0.8].into_iter().enumerate() {
        for j in 0..3 {
            for tl in [0.2, 0.5, 0.8] {
                out.push(SpaceTimePoint::new(section_point(cs, rho, 3 * i + j, 9), tl * t_final));
            }
        }
    }
    for j in 0..8 {
        let rho = if j % 2 == 0 { 1.3 } else { 1.8 };
        out.push(SpaceTimePoint::new(section_point(cs, rho, j, 8), 0.5 * t_final));
    }
    out
}

/// Smooth, caloric fields for the representation checks.
pub fn stokes_fields(a: &CoefficientMatrix, cs: &CrossSection, t_final: f64) -> Vec<(&'static str, Arc<dyn CaloricField>)> {
    let n = a.dim();
    let xi = FrequencyVector((0..n).map(|i| 0.3 + 0.1 * i as f64).collect());
    let pole = section_point(cs, 0.4, 1, 5);
    vec![
        ("exponential-heat", Arc::new(ExponentialField { a: a.clone(), xi: xi.clone(), which: Operator::Heat })),
        ("exponential-adjoint", Arc::new(ExponentialField { a: a.clone(), xi, which: Operator::Adjoint })),
        (
            "kernel-heat",
            Arc::new(TranslatedKernel { a: a.clone(), pole: SpaceTimePoint::new(pole.clone(), -0.3 * t_final), which: Operator::Heat }),
        ),
        (
            "kernel-adjoint",
            Arc::new(TranslatedKernel { a: a.clone(), pole: SpaceTimePoint::new(pole, 1.3 * t_final), which: Operator::Adjoint }),
        ),
    ]
}

/// Ten interior points for the initial limit of the cap potential.
pub fn initial_limit_points(cs: &CrossSection) -> Vec<Vec<f64>> {
    (0..10).map(|j| section_point(cs, [0.0, 0.2, 0.4, 0.6, 0.7][j % 5], j, 10)).collect()
}

/// `1 + sin(<c, x>) + x_1^2 / 2` sampled on the bottom cap.
pub fn initial_density(x: &[f64]) -> f64 {
    let arg: f64 = x.iter().enumerate().map(|(i, v)| v * [1.0, -0.5, 0.25][i % 3]).sum();
    1.0 + arg.sin() + 0.5 * x[0] * x[0]
}

fn identity_row(rows: &mut Vec<Vec<String>>, name: &str, p: &SpaceTimePoint, location: &str, expected: f64, value: f64, limit: f64) -> f64 {
    let err = (value - expected).abs();
    rows.push(vec![
        name.into(),
        point(&p.x),
        num(p.t),
        location.into(),
        num(expected),
        num(value),
        num(err),
        num(limit),
        (err <= limit).to_string(),
    ]);
    err
}

fn location_label(l: Location) -> &'static str {
    match l {
        Location::Interior => "interior",
        Location::Exterior => "exterior",
        Location::Boundary(_) => "boundary",
    }
}

fn verify_identities(config: &ExperimentConfig) -> Result<TaskReport, CliError> {
    let mesh = config.mesh()?;
    let a = config.coefficients()?;
    let cs = mesh.cross_section().clone();
    let t_final = mesh.final_time();
    let pot = LayerPotentials::new(&mesh);
    let mut rows = Vec::new();
    let mut raw: Vec<(String, f64, f64)> = Vec::new();

    let probes = partition_probes(&cs, t_final);
    let values = pot.evaluate_many(&probes, |p, x| p.partition_identity(x));
    for (p, v) in probes.iter().zip(values) {
        let loc = mesh.locate(p);
        let expected = if loc == Location::Interior { 1.0 } else { 0.0 };
        let err = identity_row(&mut rows, "partition", p, location_label(loc), expected, v?, IDENTITY_TOLERANCE);
        raw.push((format!("partition-{}", location_label(loc)), err, IDENTITY_TOLERANCE));
    }

    let targets = stokes_targets(&cs, t_final);
    for (name, field) in stokes_fields(&a, &cs, t_final) {
        let rep = StokesRepresentation::new(&pot, field);
        let reports: Vec<_> = targets.par_iter().map(|x| rep.check(x)).collect();
        for (p, r) in targets.iter().zip(reports) {
            let r = r?;
            let err = identity_row(&mut rows, name, p, location_label(r.location), r.expected, r.reconstruction, IDENTITY_TOLERANCE);
            raw.push((format!("stokes-{name}-{}", location_label(r.location)), err, IDENTITY_TOLERANCE));
        }
    }

    let phi = DensityField::from_fn(&mesh, Region::Bottom, |p| initial_density(p.x));
    let points: Vec<SpaceTimePoint> =
        initial_limit_points(&cs).into_iter().map(|x| SpaceTimePoint::new(x, INITIAL_LIMIT_TIME)).collect();
    let values = pot.evaluate_many(&points, |p, x| p.cap_potential(&phi, x));
    for (p, v) in points.iter().zip(values) {
        let err = identity_row(&mut rows, "initial-limit", p, "interior", initial_density(&p.x), v?, INITIAL_LIMIT_TOLERANCE);
        raw.push(("initial-limit".into(), err, INITIAL_LIMIT_TOLERANCE));
    }

    if a.dim() == 3 {
        for (x, expected, limit) in elliptic_probes(&cs) {
            let v = elliptic_gauss_identity(&cs, &a, &x, ELLIPTIC_ORDER)?;
            let p = SpaceTimePoint::new(x, 0.0);
            let label = if expected == 1.0 {
                "interior"
            } else if expected == 0.0 {
                "exterior"
            } else {
                "surface"
            };
            let err = identity_row(&mut rows, "elliptic-gauss", &p, label, expected, v, limit);
            raw.push((format!("elliptic-gauss-{label}"), err, limit));
        }
    }

    let mut report = TaskReport::new(TaskName::VerifyIdentities);
    report.tables.push(Table::from_rows(
        "identities",
        &["identity", "point", "t", "location", "expected", "value", "error", "limit", "pass"],
        &rows,
    )?);
    report.checks = worst_checks(&raw);
    report.results = serde_json::json!({ "rows": rows.len() });
    Ok(report)
}

/// `(x, expected, tolerance)` probes of the elliptic Gauss identity.
pub fn elliptic_probes(cs: &CrossSection) -> Vec<(Vec<f64>, f64, f64)> {
    let mut out = Vec::new();
    for j in 0..4 {
        out.push((section_point(cs, [0.0, 0.3, 0.6, 0.8][j], j, 4), 1.0, IDENTITY_TOLERANCE));
        out.push((section_point(cs, [1.2, 1.5, 2.0, 3.0][j], j, 4), 0.0, IDENTITY_TOLERANCE));
        out.push((section_point(cs, 1.0, j, 4), 0.5, SURFACE_TOLERANCE));
    }
    out
}

fn poly_table(config: &ExperimentConfig) -> Result<TaskReport, CliError> {
    let a = config.coefficients()?;
    let parity = config.operator.parity;
    let max_degree = config.params.max_degree.unwrap_or(4);
    let basis = CaloricBasis::new(&a, parity, max_degree)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut failures = 0.0;
    for alpha in basis.indices() {
        let member = basis.member(alpha).expect("index of the basis");
        let image = apply_parabolic_operator(&member.poly, &a, parity.operator())?;
        if !image.is_zero() {
            failures += 1.0;
        }
        let display = member.poly.to_string();
        rows.push(vec![
            alpha.to_string(),
            parity.label().into(),
            member.poly.degree_in_t().unwrap_or(0).to_string(),
            display.clone(),
            image.is_zero().to_string(),
        ]);
        let mut json = serde_json::to_value(PolynomialJson::from(&member)).expect("polynomial serializes");
        json["display"] = serde_json::Value::String(display);
        entries.push(json);
    }
    let mut report = TaskReport::new(TaskName::PolyTable);
    report.tables.push(Table::from_rows("polynomials", &["alpha", "parity", "t_degree", "polynomial", "annihilated"], &rows)?);
    report.checks.push(Check::at_most("non-annihilated members", failures, 0.0));
    report.results = serde_json::json!({ "count": entries.len(), "polynomials": entries });
    Ok(report)
}

/// Boundary data and, when it solves the configured equation, the exact
/// solution.
pub fn data_functions(spec: &DataSpec, a: &CoefficientMatrix, parity: Parity) -> Result<(ScalarFn, Option<ScalarFn>), CliError> {
    Ok(match spec {
        DataSpec::CaloricExponential { xi } => {
            let (a, xi) = (a.clone(), FrequencyVector(xi.clone()));
            let f: ScalarFn = Arc::new(move |x, t| caloric_exponential(&a, &SpaceTimePoint::new(x, t), &xi, parity.operator()));
            (f.clone(), Some(f))
        }
        DataSpec::CaloricPolynomial { alpha } => {
            let p = caloric_poly(a, &MultiIndex(alpha.clone()), parity)?.poly.to_float();
            let f: ScalarFn = Arc::new(move |x, t| p.evaluate(x, t));
            (f.clone(), Some(f))
        }
        DataSpec::Constant { value } => {
            let v = *value;
            let f: ScalarFn = Arc::new(move |_, _| v);
            (f.clone(), Some(f))
        }
        DataSpec::AbsCoordinate { index } => {
            let i = *index;
            (Arc::new(move |x, _| x[i].abs()), None)
        }
    })
}

fn data_label(spec: &DataSpec) -> &'static str {
    match spec {
        DataSpec::CaloricExponential { .. } => "caloric-exponential",
        DataSpec::CaloricPolynomial { .. } => "caloric-polynomial",
        DataSpec::AbsCoordinate { .. } => "abs-coordinate",
        DataSpec::Constant { .. } => "constant",
    }
}

fn solve(config: &ExperimentConfig) -> Result<TaskReport, CliError> {
    let mesh = config.mesh()?;
    let a = config.coefficients()?;
    let parity = config.operator.parity;
    let spec = config.params.data.as_ref().expect("validated");
    let degree = config.params.degree.expect("validated");
    let rcond = config.params.rcond.unwrap_or(DEFAULT_RCOND);
    let (f, exact) = data_functions(spec, &a, parity)?;
    let data = BoundaryData::from_fn(&mesh, parity, data_label(spec), |x, t| f(x, t))?;
    let approx = solve_dirichlet(&mesh, parity, degree, &data, rcond)?;

    let coeff_rows: Vec<Vec<String>> = approx
        .coefficient_table()
        .iter()
        .map(|e| vec![e.alpha.to_string(), num(e.coefficient), num(e.scale)])
        .collect();
    let probes = interior_probe_grid(&mesh);
    let values = evaluate_solution(&approx, &probes);
    let mut eval_rows = Vec::new();
    let mut worst = None::<f64>;
    for (p, v) in probes.iter().zip(&values) {
        let (reference, err) = match &exact {
            Some(u) => {
                let r = u(&p.x, p.t);
                worst = Some(worst.unwrap_or(0.0).max((v - r).abs()));
                (num(r), num((v - r).abs()))
            }
            None => ("NA".into(), "NA".into()),
        };
        eval_rows.push(vec![point(&p.x), num(p.t), num(*v), reference, err]);
    }

    let mut report = TaskReport::new(TaskName::Solve);
    report.tables.push(Table::from_rows("coefficients", &["alpha", "coefficient", "scale"], &coeff_rows)?);
    report.tables.push(Table::from_rows("evaluation", &["point", "t", "value", "exact", "error"], &eval_rows)?);
    if let Some(limit) = config.params.max_residual {
        report.checks.push(Check::at_most("residual", approx.residual, limit));
    }
    report.results = serde_json::json!({
        "parity": parity,
        "degree": degree,
        "residual": approx.residual,
        "rank": approx.rank,
        "condition": approx.condition,
        "mesh": approx.fingerprint,
        "coefficients": approx.coefficient_table(),
        "interior_max_error": worst,
    });
    Ok(report)
}

fn completeness(config: &ExperimentConfig) -> Result<TaskReport, CliError> {
    let mesh = config.mesh()?;
    let a = config.coefficients()?;
    let parity = config.operator.parity;
    let spec = config.params.data.as_ref().expect("validated");
    let degrees = config.params.degrees.clone().expect("validated");
    let rcond = config.params.rcond.unwrap_or(DEFAULT_RCOND);
    let (f, exact) = data_functions(spec, &a, parity)?;
    let data = BoundaryData::from_fn(&mesh, parity, data_label(spec), |x, t| f(x, t))?;
    let exact_point = exact.map(|u| move |p: &SpaceTimePoint| u(&p.x, p.t));
    let study = completeness_study(
        &mesh,
        parity,
        &data,
        &degrees,
        rcond,
        exact_point.as_ref().map(|u| u as &(dyn Fn(&SpaceTimePoint) -> f64 + Sync)),
    )?;

    let mut report = TaskReport::new(TaskName::Completeness);
    let timing = config.output.timing;
    report.tables.push(Table::from_writer("study", |w| study.write_csv(w, timing))?);
    report.checks.push(Check::at_most("residual increase", study.max_increase(), MONOTONE_SLACK));
    if let Some(limit) = config.params.max_residual {
        report.checks.push(Check::at_most("final residual", *study.residuals.last().expect("non-empty"), limit));
    }
    let mut cv_json = serde_json::Value::Null;
    if config.params.cross_validate.unwrap_or(false) {
        let fine = config.mesh_with(config.mesh.refined())?;
        let top = *degrees.last().expect("non-empty");
        let cv = cross_validate(&mesh, &fine, parity, top, |x: &[f64], t| f(x, t), rcond)?;
        report.checks.push(Check::at_most("cross-validation ratio", cv.fine_residual, 2.0 * cv.coarse_residual));
        cv_json = serde_json::to_value(cv).expect("serializes");
    }
    let mut study_json = serde_json::to_value(&study).expect("study serializes");
    if !timing {
        study_json["seconds"] = serde_json::Value::Null;
    }
    report.results = serde_json::json!({ "study": study_json, "cross_validation": cv_json });
    Ok(report)
}
