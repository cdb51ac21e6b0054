//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use calorix_cli::tasks::elliptic_probes;
use calorix_cli::{run_task, ExperimentConfig, TaskName, TaskReport};
use calorix_core::poly::{apply_parabolic_operator, caloric_poly, enumerate_basis, moment_integral};
use calorix_core::potentials::elliptic_gauss_identity;
use calorix_core::trefftz::{completeness_study, solve_dirichlet, BoundaryData, DEFAULT_RCOND};
use calorix_core::{
    build_mesh, CaloricBasis, CoefficientMatrix, CrossSection, MeshResolution, MultiIndex, Parity, Polynomial,
    SpaceTimePoint,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn aniso2() -> CoefficientMatrix {
    CoefficientMatrix::new(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
}

fn full3() -> CoefficientMatrix {
    CoefficientMatrix::new(3, &[vec![2.0, 0.5, 0.25], vec![0.5, 1.5, 0.5], vec![0.25, 0.5, 1.0]]).unwrap()
}

fn matrices() -> Vec<CoefficientMatrix> {
    vec![
        CoefficientMatrix::identity(1),
        CoefficientMatrix::identity(2),
        aniso2(),
        CoefficientMatrix::identity(3),
        CoefficientMatrix::diagonal(&[1.0, 2.0, 3.0]).unwrap(),
        full3(),
    ]
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_annihilation() -> Outcome {
    let mut count = 0;
    for a in matrices() {
        for parity in [Parity::V, Parity::W] {
            let basis = CaloricBasis::new(&a, parity, 8).map_err(|e| e.to_string())?;
            for (alpha, p) in basis.iter() {
                let image = apply_parabolic_operator(p, &a, parity.operator()).map_err(|e| e.to_string())?;
                if !image.is_zero() {
                    return Err(format!("{parity}{alpha} for A = {:?} leaves {image}", a.entries()));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} members annihilated exactly"))
}

fn initial_trace_and_degree() -> Outcome {
    let mut t_degrees: BTreeMap<u32, u32> = BTreeMap::new();
    let mut count = 0;
    for a in matrices() {
        let n = a.dim();
        for alpha in enumerate_basis(n, 8) {
            let v = caloric_poly(&a, &alpha, Parity::V).map_err(|e| e.to_string())?;
            if v.poly.at_time_zero() != Polynomial::monomial(&alpha) {
                return Err(format!("v{alpha}(x, 0) = {}", v.poly.at_time_zero()));
            }
            for j in 0..n {
                if v.poly.degree_in_x(j) != Some(alpha.0[j]) {
                    return Err(format!("v{alpha} has degree {:?} in x{}", v.poly.degree_in_x(j), j + 1));
                }
            }
            let td = v.poly.degree_in_t().unwrap_or(0);
            let top = t_degrees.entry(alpha.degree()).or_insert(0);
            *top = (*top).max(td);
            count += 1;
        }
    }
    let recorded: Vec<String> = t_degrees.iter().map(|(d, t)| format!("{d}:{t}")).collect();
    Ok(format!("{count} members; max t-degree by |alpha|: {}", recorded.join(" ")))
}

/// `alpha! [xi^alpha] exp(<x, xi> +- t <A xi, xi>)` from a truncated power
/// series in `xi` with polynomial coefficients in `(x, t)`.
fn series_member(a: &CoefficientMatrix, alpha: &MultiIndex, parity: Parity) -> Polynomial {
    let n = a.dim();
    let entries = a.exact_entries().unwrap();
    let sign = match parity {
        Parity::V => int(1),
        Parity::W => int(-1),
    };
    let deg = alpha.degree();
    let mut term: BTreeMap<Vec<u32>, Polynomial> = BTreeMap::from([(vec![0; n], Polynomial::one(n))]);
    let mut total = term.clone();
    for m in 1..=deg {
        let mut next: BTreeMap<Vec<u32>, Polynomial> = BTreeMap::new();
        let inv_m = BigRational::new(BigInt::one(), BigInt::from(m));
        for (beta, q) in &term {
            for j in 0..n {
                let mut b = beta.clone();
                b[j] += 1;
                if b.iter().sum::<u32>() <= deg {
                    next.entry(b).or_insert_with(|| Polynomial::zero(n)).add_scaled(&q.mul_x(j), &inv_m);
                }
            }
            let qt = q.mul_t();
            for h in 0..n {
                for k in 0..n {
                    let mut b = beta.clone();
                    b[h] += 1;
                    b[k] += 1;
                    if b.iter().sum::<u32>() <= deg {
                        let c = &sign * &entries[h * n + k] * &inv_m;
                        next.entry(b).or_insert_with(|| Polynomial::zero(n)).add_scaled(&qt, &c);
                    }
                }
            }
        }
        for (beta, q) in &next {
            total.entry(beta.clone()).or_insert_with(|| Polynomial::zero(n)).add_scaled(q, &BigRational::one());
        }
        term = next;
    }
    let fact = BigRational::from_integer(alpha.factorial());
    total.remove(&alpha.0).unwrap_or_else(|| Polynomial::zero(n)).scaled(&fact)
}

fn generating_function() -> Outcome {
    let mut count = 0;
    for a in matrices() {
        for parity in [Parity::V, Parity::W] {
            for alpha in enumerate_basis(a.dim(), 6) {
                let rec = caloric_poly(&a, &alpha, parity).map_err(|e| e.to_string())?;
                if rec.poly != series_member(&a, &alpha, parity) {
                    return Err(format!("{parity}{alpha} differs from the series coefficient"));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} members match the series exactly"))
}

fn moment_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [CoefficientMatrix::identity(2), aniso2()] {
        for alpha in enumerate_basis(2, 4) {
            let v = caloric_poly(&a, &alpha, Parity::V).map_err(|e| e.to_string())?;
            for t in [0.1, 1.0] {
                for x in [[0.0, 0.0], [0.3, -0.7], [1.2, 0.5]] {
                    let p = SpaceTimePoint::new(x.to_vec(), t);
                    worst = worst.max((moment_integral(&a, &alpha, &p, 48) - v.evaluate(&p)).abs());
                }
            }
        }
    }
    verdict(worst < 1e-8, format!("max error {worst:e} (limit 1e-8)"))
}

fn identities_config(cs: &str, matrix: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{ "operator": {{ "n": 2, "matrix": {matrix} }},
             "geometry": {{ "cross_section": {cs}, "final_time": 1.0 }}, "seed": 1 }}"#
    ))
    .unwrap()
}

fn identity_runs() -> Vec<(String, Result<TaskReport, String>)> {
    let mut out = Vec::new();
    for (cs_name, cs) in [("disk(1)", r#"{ "kind": "disk", "r": 1.0 }"#), ("ellipse(2,1)", r#"{ "kind": "ellipse", "a": 2.0, "b": 1.0 }"#)] {
        for (a_name, a) in [("I", "[[1, 0], [0, 1]]"), ("[[2,1],[1,2]]", "[[2, 1], [1, 2]]")] {
            let report = run_task(TaskName::VerifyIdentities, &identities_config(cs, a)).map_err(|e| e.to_string());
            out.push((format!("{cs_name} A={a_name}"), report));
        }
    }
    out
}

/// Worst check whose name starts with `prefix`, over all runs.
fn worst_of(runs: &[(String, Result<TaskReport, String>)], prefix: &str) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, report) in runs {
        let report = report.as_ref().map_err(|e| format!("{label}: {e}"))?;
        let checks: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with(prefix)).collect();
        if checks.is_empty() {
            return Err(format!("{label}: no {prefix} checks"));
        }
        let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
        ok &= checks.iter().all(|c| c.passed);
        lines.push(format!("{label} {worst:.1e}"));
    }
    verdict(ok, format!("worst error: {}", lines.join(", ")))
}

fn elliptic_gauss() -> Outcome {
    let mut worst = [0.0f64; 3];
    let mut ok = true;
    let sections = [CrossSection::Ball { r: 1.0 }, CrossSection::Ellipsoid { a: 1.5, b: 1.0, c: 0.75 }];
    for cs in &sections {
        for a in [CoefficientMatrix::diagonal(&[1.0, 2.0, 3.0]).unwrap(), full3()] {
            for (x, expected, limit) in elliptic_probes(cs) {
                let v = elliptic_gauss_identity(cs, &a, &x, 64).map_err(|e| e.to_string())?;
                let err = (v - expected).abs();
                let slot = if expected == 1.0 { 0 } else if expected == 0.0 { 1 } else { 2 };
                worst[slot] = worst[slot].max(err);
                ok &= err <= limit;
            }
        }
    }
    verdict(ok, format!("interior {:.1e}, exterior {:.1e}, surface {:.1e}", worst[0], worst[1], worst[2]))
}

fn jump_relations() -> Outcome {
    let config = ExperimentConfig::from_json(include_str!("../../../configs/verify-jumps.json")).unwrap();
    let report = run_task(TaskName::VerifyJumps, &config).map_err(|e| e.to_string())?;
    let detail: Vec<String> =
        report.checks.iter().map(|c| format!("{} {:.2e}/{:.2e}", c.name, c.value, c.limit)).collect();
    verdict(report.passed(), detail.join(", "))
}

fn trefftz_reproduction() -> Outcome {
    let cases = [(CrossSection::Disk { r: 1.0 }, CoefficientMatrix::identity(2)), (CrossSection::Ellipse { a: 2.0, b: 1.0 }, aniso2())];
    let mut worst: f64 = 0.0;
    for (cs, a) in cases {
        let mesh = build_mesh(&cs, &a, 1.0, MeshResolution::new(64, 16, 16)).map_err(|e| e.to_string())?;
        for parity in [Parity::V, Parity::W] {
            for degree in 0..=6u32 {
                let mut p = Polynomial::zero(2);
                for (k, alpha) in enumerate_basis(2, degree).iter().enumerate() {
                    let c = BigRational::new(BigInt::from((k as i64 % 7) - 3), BigInt::from(k as i64 % 4 + 1));
                    p.add_scaled(&caloric_poly(&a, alpha, parity).unwrap().poly, &c);
                }
                let top = MultiIndex(vec![0, degree]);
                p.add_scaled(&caloric_poly(&a, &top, parity).unwrap().poly, &int(1));
                let data = BoundaryData::from_polynomial(&mesh, parity, &p).map_err(|e| e.to_string())?;
                let fit = solve_dirichlet(&mesh, parity, degree, &data, DEFAULT_RCOND).map_err(|e| e.to_string())?;
                worst = worst.max(fit.residual);
            }
        }
    }
    verdict(worst < 1e-9, format!("max residual {worst:e} (limit 1e-9)"))
}

fn completeness_decay() -> Outcome {
    let config = ExperimentConfig::from_json(include_str!("../../../configs/completeness.json")).unwrap();
    let report = run_task(TaskName::Completeness, &config).map_err(|e| e.to_string())?;
    let study = &report.results["study"];
    let residuals: Vec<f64> = serde_json::from_value(study["residuals"].clone()).unwrap();
    let degrees: Vec<u32> = serde_json::from_value(study["degrees"].clone()).unwrap();
    let increase = residuals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let r12 = residuals[degrees.iter().position(|&d| d == 12).unwrap()];

    let a = CoefficientMatrix::identity(2);
    let mesh = build_mesh(&CrossSection::Disk { r: 1.0 }, &a, 0.5, MeshResolution::new(64, 16, 16)).unwrap();
    let abs = BoundaryData::from_fn(&mesh, Parity::V, "abs", |x, _| x[0].abs()).unwrap();
    let rough = completeness_study(&mesh, Parity::V, &abs, &[2, 10], DEFAULT_RCOND, None).map_err(|e| e.to_string())?;

    let xi = [0.3, 0.4];
    let exp = |x: &[f64], t: f64| (x[0] * xi[0] + x[1] * xi[1] + t * (xi[0] * xi[0] + xi[1] * xi[1])).exp();
    let v = BoundaryData::from_fn(&mesh, Parity::V, "exp", exp).unwrap();
    let w = BoundaryData::from_fn(&mesh, Parity::W, "exp", |x, t| exp(x, 0.5 - t)).unwrap();
    let all: Vec<u32> = (0..=12).collect();
    let sv = completeness_study(&mesh, Parity::V, &v, &all, DEFAULT_RCOND, None).map_err(|e| e.to_string())?;
    let sw = completeness_study(&mesh, Parity::W, &w, &all, DEFAULT_RCOND, None).map_err(|e| e.to_string())?;
    let mirror = sv.residuals.iter().zip(&sw.residuals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let ok = increase <= 1e-12 && r12 < 1e-6 && rough.residuals[1] < rough.residuals[0] / 2.0 && mirror < 1e-10;
    verdict(
        ok,
        format!(
            "max increase {increase:.1e}, residual(12) {r12:.1e}, |y1| {:.3e} -> {:.3e}, mirror {mirror:.1e}",
            rough.residuals[0], rough.residuals[1]
        ),
    )
}

fn csv_bodies(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let text = std::fs::read_to_string(&path).unwrap();
            let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
            out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), body);
        }
    }
    out
}

fn cli_determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for task in ["verify-kernels", "verify-identities", "poly-table", "solve", "completeness"] {
        let config = configs.join(format!("{task}.json"));
        let mut bodies = Vec::new();
        for (run, threads) in [(0, "1"), (1, "4")] {
            let out = tmp.path().join(format!("{task}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_calorix"))
                .args([task, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .env("CALORIX_THREADS", threads)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{task} exited with {}", status.status));
            }
            bodies.push(csv_bodies(&out));
        }
        if bodies[0].is_empty() || bodies[0] != bodies[1] {
            return Err(format!("{task}: CSV bodies differ between runs"));
        }
        compared += bodies[0].len();
    }
    Ok(format!("{compared} CSV files byte-identical across runs with 1 and 4 threads"))
}

fn main() {
    let identities = identity_runs();
    let criteria: Vec<Criterion<'_>> = vec![
        ("exact annihilation", Box::new(exact_annihilation)),
        ("initial trace and degree", Box::new(initial_trace_and_degree)),
        ("generating-function oracle", Box::new(generating_function)),
        ("moment identity", Box::new(moment_identity)),
        ("partition identity", Box::new(|| worst_of(&identities, "partition"))),
        ("elliptic Gauss identity", Box::new(elliptic_gauss)),
        ("jump relations", Box::new(jump_relations)),
        ("Stokes reconstruction", Box::new(|| worst_of(&identities, "stokes"))),
        ("initial limit", Box::new(|| worst_of(&identities, "initial-limit"))),
        ("Trefftz reproduction", Box::new(trefftz_reproduction)),
        ("completeness decay", Box::new(completeness_decay)),
        ("CLI determinism", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {:>2} {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
