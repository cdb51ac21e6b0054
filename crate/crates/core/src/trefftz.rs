//! Weighted least-squares approximation of Dirichlet data on the parabolic
//! boundary by caloric polynomials.
//!
//! The `H`-problem fits data on `Sigma_2 u Sigma_3` with `{v_alpha}`, the
//! `H*`-problem fits data on `Sigma_1 u Sigma_3` with `{w_alpha}`. Residuals
//! are measured in the discrete norm induced by the mesh weights, a
//! quadrature approximation of the `L^2` norm on the parabolic boundary.

use std::fmt;
use std::time::Instant;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CalorixError, Result};
use crate::geometry::{CylinderMesh, Region};
use crate::operator::SpaceTimePoint;
use crate::poly::{CaloricBasis, FloatPolynomial, MultiIndex, Parity, Polynomial};

/// Default relative singular value cutoff.
pub const DEFAULT_RCOND: f64 = 1e-12;

/// Regions carrying the data of a problem: the cap first, then `Sigma_3`.
pub fn parabolic_boundary(parity: Parity) -> [Region; 2] {
    match parity {
        Parity::V => [Region::Bottom, Region::Lateral],
        Parity::W => [Region::Top, Region::Lateral],
    }
}

/// Quadrature nodes `(point, weight)` of a problem's parabolic boundary, in
/// row order: cap nodes, then lateral nodes.
pub fn boundary_nodes(mesh: &CylinderMesh, parity: Parity) -> Vec<(SpaceTimePoint, f64)> {
    let cap_time = match parity {
        Parity::V => 0.0,
        Parity::W => mesh.final_time(),
    };
    mesh.cap_nodes()
        .iter()
        .map(|c| (SpaceTimePoint::new(c.y.clone(), cap_time), c.weight))
        .chain(mesh.lateral_nodes().iter().map(|l| (l.point.clone(), l.weight)))
        .collect()
}

/// Where boundary data came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    ClosedForm(String),
    Polynomial,
    Samples,
}

/// Dirichlet data sampled at the nodes of a parabolic boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    parity: Parity,
    values: Vec<f64>,
    source: DataSource,
}

impl BoundaryData {
    pub fn from_fn<F>(mesh: &CylinderMesh, parity: Parity, label: &str, f: F) -> Result<Self>
    where
        F: Fn(&[f64], f64) -> f64 + Sync,
    {
        let values: Vec<f64> = boundary_nodes(mesh, parity).par_iter().map(|(p, _)| f(&p.x, p.t)).collect();
        Self::checked(parity, values, DataSource::ClosedForm(label.to_string()))
    }

    /// Restriction of a polynomial in `(x, t)`.
    pub fn from_polynomial(mesh: &CylinderMesh, parity: Parity, p: &Polynomial) -> Result<Self> {
        if p.dim() != mesh.dim() {
            return Err(CalorixError::DimensionMismatch { expected: mesh.dim(), found: p.dim() });
        }
        let fp = p.to_float();
        let values = boundary_nodes(mesh, parity).iter().map(|(q, _)| fp.evaluate(&q.x, q.t)).collect();
        Self::checked(parity, values, DataSource::Polynomial)
    }

    /// Raw samples in row order (cap nodes, then lateral nodes).
    pub fn from_values(mesh: &CylinderMesh, parity: Parity, values: Vec<f64>) -> Result<Self> {
        let expected = mesh.region_len(Region::Bottom) + mesh.region_len(Region::Lateral);
        if values.len() != expected {
            return Err(CalorixError::DimensionMismatch { expected, found: values.len() });
        }
        Self::checked(parity, values, DataSource::Samples)
    }

    fn checked(parity: Parity, values: Vec<f64>, source: DataSource) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CalorixError::InvalidArgument("boundary data must be finite".into()));
        }
        Ok(Self { parity, values, source })
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn regions(&self) -> [Region; 2] {
        parabolic_boundary(self.parity)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> &DataSource {
        &self.source
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { parity: self.parity, values: self.values.iter().map(|v| lambda * v).collect(), source: self.source.clone() }
    }

    /// Data `f(x, T - t)` of the time-reflected problem, which lives on the
    /// other parabolic boundary. Gauss–Legendre time nodes are symmetric, so
    /// reflection permutes the lateral samples.
    pub fn time_reflected(&self, mesh: &CylinderMesh) -> Self {
        let caps = mesh.region_len(Region::Bottom);
        let m_t = mesh.time_nodes().len();
        let mut values = self.values.clone();
        for chunk in values[caps..].chunks_mut(m_t) {
            chunk.reverse();
        }
        let parity = match self.parity {
            Parity::V => Parity::W,
            Parity::W => Parity::V,
        };
        Self { parity, values, source: self.source.clone() }
    }
}

/// Column-scaled weighted design matrix.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub parity: Parity,
    pub degree: u32,
    pub indices: Vec<MultiIndex>,
    /// Rows `sqrt(w_i) v_alpha(node_i) / s_alpha`.
    pub matrix: Mat<f64>,
    /// Column scales `s_alpha = max(1, |sqrt(w) v_alpha|_2)`.
    pub scales: Vec<f64>,
    pub sqrt_weights: Vec<f64>,
}

impl DesignMatrix {
    /// The leading columns `|alpha| <= degree` (graded-lex order nests the
    /// bases).
    pub fn truncated(&self, degree: u32) -> DesignMatrix {
        let cols = self.indices.iter().take_while(|a| a.degree() <= degree).count();
        DesignMatrix {
            parity: self.parity,
            degree: degree.min(self.degree),
            indices: self.indices[..cols].to_vec(),
            matrix: self.matrix.subcols(0, cols).to_owned(),
            scales: self.scales[..cols].to_vec(),
            sqrt_weights: self.sqrt_weights.clone(),
        }
    }
}

/// Assembles the design matrix of the `parity` problem with `|alpha| <= degree`.
pub fn assemble_system(mesh: &CylinderMesh, parity: Parity, degree: u32) -> Result<DesignMatrix> {
    let basis = CaloricBasis::new(mesh.coefficients(), parity, degree)?;
    Ok(assemble_with_basis(mesh, &basis))
}

fn assemble_with_basis(mesh: &CylinderMesh, basis: &CaloricBasis) -> DesignMatrix {
    let nodes = boundary_nodes(mesh, basis.parity());
    let polys: Vec<FloatPolynomial> = basis.iter().map(|(_, p)| p.to_float()).collect();
    let cols = polys.len();
    let sqrt_weights: Vec<f64> = nodes.iter().map(|(_, w)| w.sqrt()).collect();
    let rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .zip(&sqrt_weights)
        .map(|((p, _), sw)| polys.iter().map(|q| sw * q.evaluate(&p.x, p.t)).collect())
        .collect();
    let scales: Vec<f64> =
        (0..cols).map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt().max(1.0)).collect();
    let matrix = Mat::from_fn(nodes.len(), cols, |i, j| rows[i][j] / scales[j]);
    DesignMatrix { parity: basis.parity(), degree: basis.max_degree(), indices: basis.indices().to_vec(), matrix, scales, sqrt_weights }
}

/// A fitted combination `sum c_alpha v_alpha` with solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaloricApproximant {
    pub parity: Parity,
    pub degree: u32,
    pub indices: Vec<MultiIndex>,
    /// Solution of the column-scaled system; the coefficient of `v_alpha`
    /// is `scaled_coefficients[i] / scales[i]`.
    pub scaled_coefficients: Vec<f64>,
    pub scales: Vec<f64>,
    /// Weighted misfit over weighted data norm (absolute misfit when the
    /// data vanish).
    pub residual: f64,
    pub rank: usize,
    /// `sigma_max / sigma_min` of the scaled design matrix.
    pub condition: f64,
    pub data_norm: f64,
    pub fingerprint: String,
    #[serde(skip)]
    polys: Vec<FloatPolynomial>,
}

impl CaloricApproximant {
    /// Coefficients `c_alpha` of `v_alpha` in graded-lex order.
    pub fn coefficients(&self) -> Vec<f64> {
        self.scaled_coefficients.iter().zip(&self.scales).map(|(c, s)| c / s).collect()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<f64> {
        self.indices.iter().position(|a| a == alpha).map(|i| self.scaled_coefficients[i] / self.scales[i])
    }

    /// `(alpha, c_alpha)` pairs for export alongside the basis metadata.
    pub fn coefficient_table(&self) -> Vec<CoefficientEntry> {
        self.indices
            .iter()
            .zip(self.coefficients())
            .zip(&self.scales)
            .map(|((alpha, coefficient), scale)| CoefficientEntry { alpha: alpha.clone(), coefficient, scale: *scale })
            .collect()
    }

    /// Rebuilds the evaluation polynomials (after deserialization).
    pub fn attach_basis(&mut self, mesh: &CylinderMesh) -> Result<()> {
        let basis = CaloricBasis::new(mesh.coefficients(), self.parity, self.degree)?;
        self.polys = basis.iter().map(|(_, p)| p.to_float()).collect();
        Ok(())
    }

    pub fn evaluate(&self, p: &SpaceTimePoint) -> f64 {
        self.polys
            .iter()
            .zip(self.scaled_coefficients.iter().zip(&self.scales))
            .map(|(q, (c, s))| if *c == 0.0 { 0.0 } else { c / s * q.evaluate(&p.x, p.t) })
            .sum()
    }
}

/// Coefficient of one basis member with its column scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub alpha: MultiIndex,
    pub coefficient: f64,
    pub scale: f64,
}

/// `sum_alpha c_alpha / s_alpha v_alpha(p)` at every point.
pub fn evaluate_solution(approx: &CaloricApproximant, points: &[SpaceTimePoint]) -> Vec<f64> {
    points.par_iter().map(|p| approx.evaluate(p)).collect()
}

/// Short description of the mesh a solve was run on.
pub fn mesh_fingerprint(mesh: &CylinderMesh) -> String {
    let r = mesh.resolution();
    format!(
        "{};T={};A={:?};m={}x{}x{}",
        mesh.cross_section(),
        mesh.final_time(),
        mesh.coefficients().entries(),
        r.m_angular,
        r.m_time,
        r.m_radial
    )
}

/// Least-squares solve by truncated SVD of the scaled design matrix.
pub fn solve_system(design: &DesignMatrix, f: &BoundaryData, rcond: f64, fingerprint: &str) -> Result<CaloricApproximant> {
    if f.parity() != design.parity {
        return Err(CalorixError::RegionMismatch(format!(
            "{} data cannot be fitted by the {} family",
            region_pair(f.parity()),
            design.parity.label()
        )));
    }
    if f.values().len() != design.matrix.nrows() {
        return Err(CalorixError::DimensionMismatch { expected: design.matrix.nrows(), found: f.values().len() });
    }
    if !(rcond > 0.0 && rcond < 1.0) {
        return Err(CalorixError::InvalidArgument(format!("rcond must lie in (0, 1), got {rcond}")));
    }
    if design.sqrt_weights.iter().all(|w| *w == 0.0) {
        return Err(CalorixError::DegenerateData);
    }
    let b: Vec<f64> = f.values().iter().zip(&design.sqrt_weights).map(|(v, w)| v * w).collect();
    let m = &design.matrix;
    let svd = m.thin_svd().map_err(|_| CalorixError::DegenerateData)?;
    let (u, sigma, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = sigma.nrows();
    let s_max = (0..k).map(|i| sigma[i]).fold(0.0, f64::max);
    let s_min = (0..k).map(|i| sigma[i]).fold(f64::INFINITY, f64::min);
    let cut = rcond * s_max;
    let mut coef = vec![0.0; m.ncols()];
    let mut rank = 0;
    for l in 0..k {
        if sigma[l] > cut && sigma[l] > 0.0 {
            rank += 1;
            let proj = (0..m.nrows()).map(|i| u[(i, l)] * b[i]).sum::<f64>() / sigma[l];
            for (j, c) in coef.iter_mut().enumerate() {
                *c += proj * v[(j, l)];
            }
        }
    }
    let misfit = (0..m.nrows())
        .map(|i| {
            let fit: f64 = coef.iter().enumerate().map(|(j, c)| m[(i, j)] * c).sum();
            (fit - b[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let data_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = if data_norm > 0.0 { misfit / data_norm } else { misfit };
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    Ok(CaloricApproximant {
        parity: design.parity,
        degree: design.degree,
        indices: design.indices.clone(),
        scaled_coefficients: coef,
        scales: design.scales.clone(),
        residual,
        rank,
        condition,
        data_norm,
        fingerprint: fingerprint.to_string(),
        polys: vec![],
    })
}

fn region_pair(parity: Parity) -> String {
    let [cap, lat] = parabolic_boundary(parity);
    format!("{} u {}", cap.label(), lat.label())
}

/// Fits `f` with `{v_alpha}` (or `{w_alpha}`), `|alpha| <= degree`.
pub fn solve_dirichlet(mesh: &CylinderMesh, parity: Parity, degree: u32, f: &BoundaryData, rcond: f64) -> Result<CaloricApproximant> {
    let basis = CaloricBasis::new(mesh.coefficients(), parity, degree)?;
    let design = assemble_with_basis(mesh, &basis);
    let mut approx = solve_system(&design, f, rcond, &mesh_fingerprint(mesh))?;
    approx.polys = basis.iter().map(|(_, p)| p.to_float()).collect();
    Ok(approx)
}

/// Residual decay over nested bases on one mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub parity: Parity,
    pub fingerprint: String,
    /// Set for `n = 2`, where completeness is not covered by the theory.
    pub exploratory: bool,
    pub degrees: Vec<u32>,
    pub residuals: Vec<f64>,
    pub ranks: Vec<usize>,
    pub conditions: Vec<f64>,
    /// Largest interior error on the probe grid, when an exact solution is known.
    pub interior_max_errors: Vec<Option<f64>>,
    pub seconds: Vec<f64>,
}

impl StudyReport {
    /// CSV with columns `degree,residual,rank,cond,interior_max_err,seconds`.
    /// Missing errors print as `NA`; timings too unless `timing` is set.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, timing: bool) -> std::io::Result<()> {
        writeln!(out, "degree,residual,rank,cond,interior_max_err,seconds")?;
        for i in 0..self.degrees.len() {
            let err = self.interior_max_errors[i].map_or("NA".to_string(), |e| format!("{e:e}"));
            let secs = if timing { format!("{:.6}", self.seconds[i]) } else { "NA".to_string() };
            writeln!(
                out,
                "{},{:e},{},{:e},{},{}",
                self.degrees[i], self.residuals[i], self.ranks[i], self.conditions[i], err, secs
            )?;
        }
        Ok(())
    }

    /// Largest increase `residual(N_{k+1}) - residual(N_k)`; non-positive for
    /// a monotone sequence.
    pub fn max_increase(&self) -> f64 {
        self.residuals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Interior probe grid: `rho in {.1,.3,.5,.7,.9}` times five directions
/// times `t in T {.1,.3,.5,.7,.9}`.
pub fn interior_probe_grid(mesh: &CylinderMesh) -> Vec<SpaceTimePoint> {
    let cs = mesh.cross_section();
    let n = mesh.dim();
    let levels = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut out = Vec::with_capacity(125);
    for rho in levels {
        for j in 0..5 {
            let param = if n == 2 {
                [2.0 * std::f64::consts::PI * j as f64 / 5.0, 0.0]
            } else {
                [std::f64::consts::PI * (j as f64 + 0.5) / 5.0, 2.0 * std::f64::consts::PI * j as f64 / 5.0]
            };
            let (y, _) = cs.cap_point(rho, param);
            for tl in levels {
                out.push(SpaceTimePoint::new(&y[..n], tl * mesh.final_time()));
            }
        }
    }
    out
}

type ExactSolution<'a> = &'a (dyn Fn(&SpaceTimePoint) -> f64 + Sync);

/// Solves on the same mesh for each degree (independent solves run in
/// parallel) and reports the residual sequence.
pub fn completeness_study(
    mesh: &CylinderMesh,
    parity: Parity,
    f: &BoundaryData,
    degrees: &[u32],
    rcond: f64,
    exact: Option<ExactSolution<'_>>,
) -> Result<StudyReport> {
    if degrees.is_empty() || degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CalorixError::InvalidArgument("degrees must be non-empty and strictly increasing".into()));
    }
    let top = *degrees.last().expect("non-empty");
    let basis = CaloricBasis::new(mesh.coefficients(), parity, top)?;
    let full = assemble_with_basis(mesh, &basis);
    let polys: Vec<FloatPolynomial> = basis.iter().map(|(_, p)| p.to_float()).collect();
    let fingerprint = mesh_fingerprint(mesh);
    let probes = interior_probe_grid(mesh);
    let runs: Vec<Result<(CaloricApproximant, Option<f64>, f64)>> = degrees
        .par_iter()
        .map(|&d| {
            let start = Instant::now();
            let design = full.truncated(d);
            let mut approx = solve_system(&design, f, rcond, &fingerprint)?;
            approx.polys = polys[..design.indices.len()].to_vec();
            let err = exact.map(|u| {
                probes.iter().map(|p| (approx.evaluate(p) - u(p)).abs()).fold(0.0, f64::max)
            });
            Ok((approx, err, start.elapsed().as_secs_f64()))
        })
        .collect();
    let mut report = StudyReport {
        parity,
        fingerprint,
        exploratory: mesh.dim() == 2,
        degrees: degrees.to_vec(),
        residuals: vec![],
        ranks: vec![],
        conditions: vec![],
        interior_max_errors: vec![],
        seconds: vec![],
    };
    for run in runs {
        let (approx, err, secs) = run?;
        report.residuals.push(approx.residual);
        report.ranks.push(approx.rank);
        report.conditions.push(approx.condition);
        report.interior_max_errors.push(err);
        report.seconds.push(secs);
    }
    Ok(report)
}

/// Coarse solve checked on a finer mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub coarse_residual: f64,
    pub fine_residual: f64,
    /// `fine / coarse`, `1` when both vanish.
    pub ratio: f64,
    /// Set when the fine residual exceeds twice the coarse one.
    pub flagged: bool,
}

impl fmt::Display for CrossValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "coarse {:e}, fine {:e}, ratio {:.3}", self.coarse_residual, self.fine_residual, self.ratio)
    }
}

/// Solves on `coarse` and measures the misfit of the same coefficients on
/// `fine`, sampling the closed-form data `f` on both meshes.
pub fn cross_validate<F>(coarse: &CylinderMesh, fine: &CylinderMesh, parity: Parity, degree: u32, f: F, rcond: f64) -> Result<CrossValidation>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    let data = BoundaryData::from_fn(coarse, parity, "cross-validation", &f)?;
    let approx = solve_dirichlet(coarse, parity, degree, &data, rcond)?;
    let nodes = boundary_nodes(fine, parity);
    let terms: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|(p, w)| {
            let v = f(&p.x, p.t);
            (w * (approx.evaluate(p) - v).powi(2), w * v * v)
        })
        .collect();
    let (misfit2, norm2) = terms.iter().fold((0.0, 0.0), |acc, t| (acc.0 + t.0, acc.1 + t.1));
    let fine_residual = if norm2 > 0.0 { (misfit2 / norm2).sqrt() } else { misfit2.sqrt() };
    let coarse_residual = approx.residual;
    let ratio = if coarse_residual > 0.0 {
        fine_residual / coarse_residual
    } else if fine_residual == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(CrossValidation { coarse_residual, fine_residual, ratio, flagged: fine_residual > 2.0 * coarse_residual })
}
