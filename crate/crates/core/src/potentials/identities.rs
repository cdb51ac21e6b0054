use std::f64::consts::PI;
use std::sync::Arc;

use super::density::DensityField;
use super::LayerPotentials;
use crate::error::{CalorixError, Result};
use crate::geometry::{CrossSection, Location, Region};
use crate::kernel::{caloric_exponential, elliptic_conormal_kernel, fundamental_solution, Operator};
use crate::operator::{CoefficientMatrix, FrequencyVector, SpaceTimePoint};
use crate::poly::{CaloricPolynomial, FloatPolynomial};
use crate::quadrature::GaussLegendre;

/// A closed-form solution of `H u = 0` or `H* u = 0` near the closed
/// cylinder, with its spatial gradient.
pub trait CaloricField: Send + Sync {
    /// The operator annihilating the field.
    fn operator(&self) -> Operator;
    fn value(&self, x: &[f64], t: f64) -> f64;
    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64>;
}

/// `u = c`.
#[derive(Debug, Clone)]
pub struct ConstantField {
    pub value: f64,
    pub dim: usize,
    pub which: Operator,
}

impl CaloricField for ConstantField {
    fn operator(&self) -> Operator {
        self.which
    }

    fn value(&self, _x: &[f64], _t: f64) -> f64 {
        self.value
    }

    fn gradient(&self, _x: &[f64], _t: f64) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

/// `exp(<x, xi> +- t <A xi, xi>)`.
#[derive(Debug, Clone)]
pub struct ExponentialField {
    pub a: CoefficientMatrix,
    pub xi: FrequencyVector,
    pub which: Operator,
}

impl CaloricField for ExponentialField {
    fn operator(&self) -> Operator {
        self.which
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        caloric_exponential(&self.a, &SpaceTimePoint::new(x, t), &self.xi, self.which)
    }

    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        let v = self.value(x, t);
        self.xi.0.iter().map(|k| k * v).collect()
    }
}

/// The fundamental solution with its pole moved off the closed cylinder:
/// `G(x - y0, t - s0)` (for `H`, needs `s0 < 0`) or `G(x0 - y, t0 - s)`
/// (for `H*`, needs `t0 > T`).
#[derive(Debug, Clone)]
pub struct TranslatedKernel {
    pub a: CoefficientMatrix,
    pub pole: SpaceTimePoint,
    pub which: Operator,
}

impl TranslatedKernel {
    fn lag(&self, x: &[f64], t: f64) -> (Vec<f64>, f64) {
        let z: Vec<f64> = x.iter().zip(&self.pole.x).map(|(a, b)| a - b).collect();
        let tau = match self.which {
            Operator::Heat => t - self.pole.t,
            Operator::Adjoint => self.pole.t - t,
        };
        (z, tau)
    }
}

impl CaloricField for TranslatedKernel {
    fn operator(&self) -> Operator {
        self.which
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        let (z, tau) = self.lag(x, t);
        fundamental_solution(&self.a, &z, tau)
    }

    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        let (z, tau) = self.lag(x, t);
        let g = fundamental_solution(&self.a, &z, tau);
        let n = z.len();
        let inv = self.a.inverse();
        // grad G(z) = -A^{-1} z / (2 tau) G
        (0..n).map(|h| -(0..n).map(|k| inv[h * n + k] * z[k]).sum::<f64>() / (2.0 * tau) * g).collect()
    }
}

/// A caloric polynomial `v_alpha` / `w_alpha` or any combination of them.
#[derive(Debug, Clone)]
pub struct PolynomialField {
    pub poly: FloatPolynomial,
    pub which: Operator,
}

impl From<&CaloricPolynomial> for PolynomialField {
    fn from(p: &CaloricPolynomial) -> Self {
        Self { poly: p.poly.to_float(), which: p.parity.operator() }
    }
}

impl CaloricField for PolynomialField {
    fn operator(&self) -> Operator {
        self.which
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        self.poly.evaluate(x, t)
    }

    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.poly.gradient(x, t)
    }
}

/// Outcome of one representation-formula check.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesReport {
    pub target: SpaceTimePoint,
    pub location: Location,
    /// `u(target)` inside the cylinder, `0` outside.
    pub expected: f64,
    pub reconstruction: f64,
    pub discrepancy: f64,
}

/// Boundary traces of a caloric field, ready to be fed into the
/// representation formula of its operator:
///
/// * `H`:  `DL[u] - SL[du/dnubar] + cap_2[u(., 0)] - cap_1[u(., T)]`,
/// * `H*`: `DL*[u] - SL*[du/dnubar] + cap_1*[u(., T)] - cap_2*[u(., 0)]`,
///
/// equal to `u` inside `Omega_T` and to `0` outside its closure.
pub struct StokesRepresentation<'p, 'm> {
    potentials: &'p LayerPotentials<'m>,
    which: Operator,
    field: Arc<dyn CaloricField>,
    trace: DensityField,
    flux: DensityField,
    bottom: DensityField,
    top: DensityField,
}

impl<'p, 'm> StokesRepresentation<'p, 'm> {
    pub fn new(potentials: &'p LayerPotentials<'m>, field: Arc<dyn CaloricField>) -> Self {
        let mesh = potentials.mesh();
        let u = field.clone();
        let trace = DensityField::from_fn(mesh, Region::Lateral, move |p| u.value(p.x, p.t));
        let u = field.clone();
        let flux = DensityField::from_fn(mesh, Region::Lateral, move |p| {
            let g = u.gradient(p.x, p.t);
            let conormal = p.conormal.expect("lateral density points carry a conormal");
            g.iter().zip(conormal).map(|(a, b)| a * b).sum()
        });
        let u = field.clone();
        let bottom = DensityField::from_fn(mesh, Region::Bottom, move |p| u.value(p.x, p.t));
        let u = field.clone();
        let top = DensityField::from_fn(mesh, Region::Top, move |p| u.value(p.x, p.t));
        Self { potentials, which: field.operator(), field, trace, flux, bottom, top }
    }

    /// Value of the representation formula at `target`.
    pub fn evaluate(&self, target: &SpaceTimePoint) -> Result<f64> {
        let p = self.potentials;
        let (dl, sl) = match self.which {
            Operator::Heat => (p.double_layer(&self.trace, target)?, p.single_layer(&self.flux, target)?),
            Operator::Adjoint => (p.double_layer_star(&self.trace, target)?, p.single_layer_star(&self.flux, target)?),
        };
        let (plus, minus) = match self.which {
            Operator::Heat => (&self.bottom, &self.top),
            Operator::Adjoint => (&self.top, &self.bottom),
        };
        let caps = p.cap_term(plus, target, self.which)? - p.cap_term(minus, target, self.which)?;
        Ok(dl - sl + caps)
    }

    /// Compares the reconstruction with `u` inside and with `0` outside.
    pub fn check(&self, target: &SpaceTimePoint) -> Result<StokesReport> {
        let location = self.potentials.mesh().locate(target);
        let expected = match location {
            Location::Interior => self.field.value(&target.x, target.t),
            Location::Exterior => 0.0,
            Location::Boundary(_) => {
                return Err(CalorixError::InvalidArgument("representation targets must be off the boundary".into()))
            }
        };
        let reconstruction = self.evaluate(target)?;
        Ok(StokesReport {
            target: target.clone(),
            location,
            expected,
            reconstruction,
            discrepancy: (reconstruction - expected).abs(),
        })
    }
}

/// `-int_{dOmega} ds(x, y)/dnubar_y dsigma_y` for a ball or ellipsoid:
/// `1` inside, `1/2` on the surface, `0` outside.
///
/// The surface is the image `y = D u` of the unit sphere with
/// `D = diag(a, b, c)`; the sphere is parametrized in polar coordinates
/// about `D^{-1} x / |D^{-1} x|`, Gauss in the polar angle and trapezoid in
/// azimuth. For `x` on the surface the kernel is `O(1/|x - y|)`, which the
/// polar area element cancels, so no singular correction is needed.
pub fn elliptic_gauss_identity(cs: &CrossSection, a: &CoefficientMatrix, x: &[f64], order: usize) -> Result<f64> {
    if a.dim() < 3 {
        return Err(CalorixError::DimensionTooSmall { n: a.dim() });
    }
    let semi = match *cs {
        CrossSection::Ball { r } => [r, r, r],
        CrossSection::Ellipsoid { a, b, c } => [a, b, c],
        _ => return Err(CalorixError::DimensionTooSmall { n: cs.dim() }),
    };
    if a.dim() != 3 || x.len() != 3 {
        return Err(CalorixError::DimensionMismatch { expected: 3, found: x.len().min(a.dim()) });
    }
    cs.validate()?;
    let pre: [f64; 3] = std::array::from_fn(|i| x[i] / semi[i]);
    let len = norm3(&pre);
    let pole = if len > 0.0 { pre.map(|v| v / len) } else { [0.0, 0.0, 1.0] };
    let (e1, e2) = orthonormal_complement(&pole);
    let det_d = semi[0] * semi[1] * semi[2];

    let polar = GaussLegendre::new(order.max(4));
    let m = 2 * order.max(4);
    let h = 2.0 * PI / m as f64;
    let mut acc = 0.0;
    for (theta, wt) in polar.mapped(0.0, PI) {
        let (st, ct) = theta.sin_cos();
        for j in 0..m {
            let (sl, cl) = (j as f64 * h).sin_cos();
            let u: [f64; 3] = std::array::from_fn(|i| ct * pole[i] + st * (cl * e1[i] + sl * e2[i]));
            let y: [f64; 3] = std::array::from_fn(|i| semi[i] * u[i]);
            // outward normal of the ellipsoid is parallel to D^{-1} u
            let grad: [f64; 3] = std::array::from_fn(|i| u[i] / semi[i]);
            let g = norm3(&grad);
            let nu = grad.map(|v| -v / g);
            let area = det_d * g * st;
            acc -= wt * h * area * elliptic_conormal_kernel(a, x, &y, &nu)?;
        }
    }
    Ok(acc)
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn orthonormal_complement(p: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let seed = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = seed[0] * p[0] + seed[1] * p[1] + seed[2] * p[2];
    let mut e1: [f64; 3] = std::array::from_fn(|i| seed[i] - d * p[i]);
    let l = norm3(&e1);
    e1.iter_mut().for_each(|v| *v /= l);
    let e2 = [p[1] * e1[2] - p[2] * e1[1], p[2] * e1[0] - p[0] * e1[2], p[0] * e1[1] - p[1] * e1[0]];
    (e1, e2)
}
