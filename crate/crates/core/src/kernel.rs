//! The anisotropic heat kernel `G`, its conormal derivatives, the caloric
//! exponentials and the elliptic fundamental solution `s(x, y)`.
//!
//! Every function here is pure. Parabolic kernels vanish identically for
//! non-positive time arguments; exponents below [`UNDERFLOW_EXPONENT`] are
//! flushed to zero.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CalorixError, Result};
use crate::operator::{CoefficientMatrix, FrequencyVector, SpaceTimePoint};

pub const UNDERFLOW_EXPONENT: f64 = -700.0;

/// Largest spatial dimension supported by the stack-allocated kernel paths.
pub const MAX_DIM: usize = 8;

/// Which of the two mutually adjoint operators is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    /// `H = E - d/dt`
    #[serde(rename = "H")]
    Heat,
    /// `H* = E + d/dt`
    #[serde(rename = "H*")]
    Adjoint,
}

#[inline]
fn guarded_exp(exponent: f64) -> f64 {
    if exponent < UNDERFLOW_EXPONENT {
        0.0
    } else {
        exponent.exp()
    }
}

/// `(4 pi)^{-n/2} |A|^{-1/2}`.
#[inline]
pub fn kernel_prefactor(a: &CoefficientMatrix) -> f64 {
    (4.0 * PI).powf(-(a.dim() as f64) / 2.0) / a.determinant().sqrt()
}

/// `G(z, tau) = (4 pi tau)^{-n/2} |A|^{-1/2} exp(-<A^{-1} z, z> / (4 tau))`
/// for `tau > 0`, zero otherwise.
pub fn fundamental_solution(a: &CoefficientMatrix, z: &[f64], tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let n = a.dim() as f64;
    let q = a.inverse_quadratic_form(z);
    guarded_exp(-q / (4.0 * tau)) * kernel_prefactor(a) * tau.powf(-n / 2.0)
}

/// Conormal derivative of `G(x - y, tau)` in the source point `y` along
/// `(A nu(y), 0)`:
/// `<nu(y), x - y> / (2 tau) * G(x - y, tau)`.
pub fn conormal_kernel_source(
    a: &CoefficientMatrix,
    x: &[f64],
    y: &[f64],
    nu_y: &[f64],
    tau: f64,
) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let n = a.dim();
    let mut buf = [0.0; MAX_DIM];
    let z = &mut buf[..n];
    let mut proj = 0.0;
    for i in 0..n {
        z[i] = x[i] - y[i];
        proj += z[i] * nu_y[i];
    }
    proj / (2.0 * tau) * fundamental_solution(a, z, tau)
}

/// Conormal derivative of `G(x - y, tau)` in the field point `x` along a
/// fixed conormal `(A nu0, 0)`:
/// `-<nu0, x - y> / (2 tau) * G(x - y, tau)`.
pub fn conormal_kernel_target(
    a: &CoefficientMatrix,
    x: &[f64],
    y: &[f64],
    nu0: &[f64],
    tau: f64,
) -> f64 {
    -conormal_kernel_source(a, x, y, nu0, tau)
}

/// `exp(<x, xi> + t <A xi, xi>)` for [`Operator::Heat`] (annihilated by `H`),
/// `exp(<x, xi> - t <A xi, xi>)` for [`Operator::Adjoint`] (annihilated by `H*`).
pub fn caloric_exponential(
    a: &CoefficientMatrix,
    p: &SpaceTimePoint,
    xi: &FrequencyVector,
    which: Operator,
) -> f64 {
    let dot: f64 = p.x.iter().zip(&xi.0).map(|(x, k)| x * k).sum();
    let q = a.quadratic_form(&xi.0);
    let sign = match which {
        Operator::Heat => 1.0,
        Operator::Adjoint => -1.0,
    };
    (dot + sign * p.t * q).exp()
}

/// Gradient in `x` of [`caloric_exponential`]: `xi * value`.
pub fn caloric_exponential_gradient(
    a: &CoefficientMatrix,
    p: &SpaceTimePoint,
    xi: &FrequencyVector,
    which: Operator,
) -> Vec<f64> {
    let v = caloric_exponential(a, p, xi, which);
    xi.0.iter().map(|k| k * v).collect()
}

/// `Gamma(k / 2)` for positive integers `k`.
pub fn gamma_half_integer(k: u32) -> f64 {
    assert!(k > 0, "Gamma(0) is undefined");
    if k.is_multiple_of(2) {
        // Gamma(m) = (m-1)!
        (1..k / 2).map(f64::from).product()
    } else {
        // Gamma(m + 1/2) = sqrt(pi) * prod_{j<m} (j + 1/2)
        let m = (k - 1) / 2;
        PI.sqrt() * (0..m).map(|j| f64::from(j) + 0.5).product::<f64>()
    }
}

/// Surface area of the unit sphere in `R^n`: `2 pi^{n/2} / Gamma(n/2)`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n as u32)
}

/// Fundamental solution of `E u = 0` for `n >= 3`:
/// `<A^{-1}(x-y), x-y>^{(2-n)/2} / ((2-n) omega_n |A|^{1/2})`.
pub fn elliptic_fundamental(a: &CoefficientMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = a.dim();
    if n < 3 {
        return Err(CalorixError::DimensionTooSmall { n });
    }
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let q = a.inverse_quadratic_form(&z);
    let nf = n as f64;
    Ok(q.powf((2.0 - nf) / 2.0) / ((2.0 - nf) * unit_sphere_area(n) * a.determinant().sqrt()))
}

/// `d s(x, y) / d nubar_y = -<nu(y), x - y> / (omega_n |A|^{1/2} <A^{-1}(x-y), x-y>^{n/2})`.
pub fn elliptic_conormal_kernel(
    a: &CoefficientMatrix,
    x: &[f64],
    y: &[f64],
    nu_y: &[f64],
) -> Result<f64> {
    let n = a.dim();
    if n < 3 {
        return Err(CalorixError::DimensionTooSmall { n });
    }
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let proj: f64 = z.iter().zip(nu_y).map(|(a, b)| a * b).sum();
    let q = a.inverse_quadratic_form(&z);
    Ok(-proj / (unit_sphere_area(n) * a.determinant().sqrt() * q.powf(n as f64 / 2.0)))
}
