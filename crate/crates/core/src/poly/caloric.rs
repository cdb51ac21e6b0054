use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{Monomial, MultiIndex, Polynomial};
use crate::error::{CalorixError, Result};
use crate::kernel::{fundamental_solution, Operator};
use crate::operator::{CoefficientMatrix, SpaceTimePoint};
use crate::quadrature::GaussLegendre;

/// Which caloric family: `v_alpha` (solutions of `H u = 0`) or `w_alpha`
/// (solutions of `H* u = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "v")]
    V,
    #[serde(rename = "w")]
    W,
}

impl Parity {
    /// The operator annihilating this family.
    pub fn operator(self) -> Operator {
        match self {
            Parity::V => Operator::Heat,
            Parity::W => Operator::Adjoint,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parity::V => "v",
            Parity::W => "w",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A member `v_alpha` or `w_alpha` of a caloric family.
#[derive(Debug, Clone, PartialEq)]
pub struct CaloricPolynomial {
    pub alpha: MultiIndex,
    pub parity: Parity,
    pub poly: Polynomial,
}

impl CaloricPolynomial {
    pub fn evaluate(&self, p: &SpaceTimePoint) -> f64 {
        self.poly.evaluate(&p.x, p.t)
    }

    pub fn evaluate_exact(&self, x: &[BigRational], t: &BigRational) -> BigRational {
        self.poly.evaluate_exact(x, t)
    }
}

/// All multi-indices of length `n` with `|alpha| <= max_degree`, in
/// graded-lex order. There are `C(n + max_degree, n)` of them.
pub fn enumerate_basis(n: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        let mut current = vec![0u32; n];
        compositions(d, 0, &mut current, &mut out);
    }
    out
}

fn compositions(remaining: u32, slot: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let n = current.len();
    if n == 0 {
        if remaining == 0 {
            out.push(MultiIndex(vec![]));
        }
        return;
    }
    if slot == n - 1 {
        current[slot] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[slot] = v;
        compositions(remaining - v, slot + 1, current, out);
    }
    current[slot] = 0;
}

/// The whole family `{v_alpha : |alpha| <= N}` (or `w_alpha`), generated by
/// `v_{alpha+e_j} = x_j v_alpha + 2t sum_k a_jk alpha_k v_{alpha-e_k}`
/// (`-2t` for the `w` family), starting from `v_0 = 1`.
#[derive(Debug, Clone)]
pub struct CaloricBasis {
    n: usize,
    parity: Parity,
    max_degree: u32,
    indices: Vec<MultiIndex>,
    polys: BTreeMap<MultiIndex, Polynomial>,
}

impl CaloricBasis {
    pub fn new(a: &CoefficientMatrix, parity: Parity, max_degree: u32) -> Result<Self> {
        let exact = a.exact_entries()?;
        Ok(Self::from_exact(a.dim(), &exact, parity, max_degree))
    }

    /// Builds from exact row-major entries of `A`.
    pub fn from_exact(n: usize, a: &[BigRational], parity: Parity, max_degree: u32) -> Self {
        assert_eq!(a.len(), n * n);
        let indices = enumerate_basis(n, max_degree);
        let two_t_sign = match parity {
            Parity::V => BigRational::from_integer(BigInt::from(2)),
            Parity::W => BigRational::from_integer(BigInt::from(-2)),
        };
        let mut polys: BTreeMap<MultiIndex, Polynomial> = BTreeMap::new();
        for alpha in &indices {
            let poly = if alpha.degree() == 0 {
                Polynomial::one(n)
            } else {
                let j = alpha.0.iter().rposition(|&e| e > 0).expect("nonzero index");
                let gamma = alpha.sub_unit(j).expect("positive entry");
                let mut p = polys[&gamma].mul_x(j);
                let mut tail = Polynomial::zero(n);
                for k in 0..n {
                    let gk = gamma.0[k];
                    if gk == 0 || a[j * n + k].is_zero() {
                        continue;
                    }
                    let lower = gamma.sub_unit(k).expect("positive entry");
                    let scale = &a[j * n + k] * BigRational::from_integer(BigInt::from(gk));
                    tail.add_scaled(&polys[&lower], &scale);
                }
                p.add_scaled(&tail.mul_t(), &two_t_sign);
                p
            };
            polys.insert(alpha.clone(), poly);
        }
        Self { n, parity, max_degree, indices, polys }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Basis indices in graded-lex order.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&Polynomial> {
        self.polys.get(alpha)
    }

    pub fn member(&self, alpha: &MultiIndex) -> Option<CaloricPolynomial> {
        self.polys.get(alpha).map(|p| CaloricPolynomial { alpha: alpha.clone(), parity: self.parity, poly: p.clone() })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Polynomial)> {
        self.indices.iter().map(move |a| (a, &self.polys[a]))
    }
}

/// `v_alpha` (parity `V`) or `w_alpha` (parity `W`) for the operator with
/// coefficient matrix `a`.
pub fn caloric_poly(a: &CoefficientMatrix, alpha: &MultiIndex, parity: Parity) -> Result<CaloricPolynomial> {
    if alpha.dim() != a.dim() {
        return Err(CalorixError::DimensionMismatch { expected: a.dim(), found: alpha.dim() });
    }
    let basis = CaloricBasis::new(a, parity, alpha.degree())?;
    Ok(basis.member(alpha).expect("alpha is in its own basis"))
}

/// Exact `sum a_hk d^2 p / dx_h dx_k - dp/dt` (`H`) or `... + dp/dt` (`H*`).
pub fn apply_parabolic_operator(p: &Polynomial, a: &CoefficientMatrix, which: Operator) -> Result<Polynomial> {
    let n = a.dim();
    if p.dim() != n {
        return Err(CalorixError::DimensionMismatch { expected: n, found: p.dim() });
    }
    let exact = a.exact_entries()?;
    let mut out = Polynomial::zero(n);
    for h in 0..n {
        let dh = p.diff_x(h);
        for k in 0..n {
            let c = &exact[h * n + k];
            if c.is_zero() {
                continue;
            }
            out.add_scaled(&dh.diff_x(k), c);
        }
    }
    let dt = p.diff_t();
    let sign = match which {
        Operator::Heat => -BigRational::one(),
        Operator::Adjoint => BigRational::one(),
    };
    out.add_scaled(&dt, &sign);
    Ok(out)
}

/// Expansion `p = sum c_alpha v_alpha` of a caloric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub parity: Parity,
    pub coefficients: BTreeMap<MultiIndex, BigRational>,
}

/// Reads `c_alpha` off the initial trace `p(x, 0) = sum c_alpha x^alpha`
/// (the `w` family likewise) and certifies that `p - sum c_alpha v_alpha`
/// vanishes identically.
pub fn decompose(p: &Polynomial, a: &CoefficientMatrix, parity: Parity) -> Result<Decomposition> {
    let n = a.dim();
    if p.dim() != n {
        return Err(CalorixError::DimensionMismatch { expected: n, found: p.dim() });
    }
    let trace = p.at_time_zero();
    let coefficients: BTreeMap<MultiIndex, BigRational> =
        trace.terms().map(|(mono, c)| (mono.beta.clone(), c.clone())).collect();
    let degree = coefficients.keys().map(MultiIndex::degree).max().unwrap_or(0);
    let basis = CaloricBasis::new(a, parity, degree)?;
    let mut residual = p.clone();
    for (alpha, c) in &coefficients {
        residual.add_scaled(basis.get(alpha).expect("index within degree"), &-c.clone());
    }
    if let Some((mono, c)) = residual.lowest_term() {
        return Err(CalorixError::NotCaloric { term: describe_term(mono, c) });
    }
    Ok(Decomposition { parity, coefficients })
}

fn describe_term(mono: &Monomial, c: &BigRational) -> String {
    format!("{c} * {mono}")
}

/// `int G(x - y, t) y^alpha dy` by tensor Gauss–Legendre quadrature on the
/// box where the Gaussian exceeds `1e-16` of its peak, in coordinates
/// `y = x + 2 sqrt(t) L u` (`A = L L^T`).
pub fn moment_integral(a: &CoefficientMatrix, alpha: &MultiIndex, p: &SpaceTimePoint, resolution: usize) -> f64 {
    let n = a.dim();
    assert!(p.t > 0.0, "moment identity needs t > 0");
    assert_eq!(alpha.dim(), n);
    // exp(-|u|^2) < 1e-16 outside |u| = 6.07
    let half = 6.1;
    let gl = GaussLegendre::new(resolution.max(2));
    let rule: Vec<(f64, f64)> = gl.mapped(-half, half).collect();
    let l = a.cholesky_factor();
    let scale = 2.0 * p.t.sqrt();
    let det_l: f64 = (0..n).map(|i| l[i * n + i]).product();
    let jac = scale.powi(n as i32) * det_l;

    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        let mut w = jac;
        for d in 0..n {
            w *= rule[idx[d]].1;
        }
        for i in 0..n {
            let mut lu = 0.0;
            for k in 0..=i {
                lu += l[i * n + k] * rule[idx[k]].0;
            }
            y[i] = p.x[i] + scale * lu;
            z[i] = p.x[i] - y[i];
        }
        let mono: f64 = y.iter().zip(&alpha.0).map(|(v, &e)| v.powi(e as i32)).product();
        total += w * fundamental_solution(a, &z, p.t) * mono;

        let mut d = 0;
        loop {
            if d == n {
                return total;
            }
            idx[d] += 1;
            if idx[d] < rule.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// `|int G(x - y, t) y^alpha dy - v_alpha(x, t)|`.
pub fn moment_identity_check(
    a: &CoefficientMatrix,
    alpha: &MultiIndex,
    p: &SpaceTimePoint,
    resolution: usize,
) -> Result<f64> {
    if p.t <= 0.0 {
        return Err(CalorixError::InvalidArgument("moment identity requires t > 0".into()));
    }
    let v = caloric_poly(a, alpha, Parity::V)?;
    Ok((moment_integral(a, alpha, p, resolution) - v.evaluate(p)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;

    fn aniso() -> CoefficientMatrix {
        CoefficientMatrix::new(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
    }

    #[test]
    fn basis_counts() {
        assert_eq!(enumerate_basis(2, 0), vec![MultiIndex(vec![0, 0])]);
        assert_eq!(enumerate_basis(2, 2).len(), 6);
        assert_eq!(enumerate_basis(3, 4).len(), 35);
        assert_eq!(enumerate_basis(1, 5).len(), 6);
        let b = enumerate_basis(3, 6);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn low_order_members() {
        let a = CoefficientMatrix::identity(2);
        let v0 = caloric_poly(&a, &MultiIndex(vec![0, 0]), Parity::V).unwrap();
        assert_eq!(v0.poly, Polynomial::one(2));
        let v10 = caloric_poly(&a, &MultiIndex(vec![1, 0]), Parity::V).unwrap();
        assert_eq!(v10.poly.to_string(), "x1");
        let v20 = caloric_poly(&a, &MultiIndex(vec![2, 0]), Parity::V).unwrap();
        assert_eq!(v20.poly.to_string(), "x1^2 + 2t");
        let w20 = caloric_poly(&a, &MultiIndex(vec![2, 0]), Parity::W).unwrap();
        assert_eq!(w20.poly.to_string(), "x1^2 - 2t");
        let v11 = caloric_poly(&aniso(), &MultiIndex(vec![1, 1]), Parity::V).unwrap();
        assert_eq!(v11.poly.to_string(), "x1 x2 + 2t");
    }

    #[test]
    fn operator_application() {
        let a = CoefficientMatrix::identity(2);
        let p = Polynomial::from_terms(2, [(vec![2, 0], 0, rational(1, 1)), (vec![0, 0], 1, rational(2, 1))]);
        assert!(apply_parabolic_operator(&p, &a, Operator::Heat).unwrap().is_zero());
        let q = Polynomial::from_terms(2, [(vec![2, 0], 0, rational(1, 1))]);
        assert_eq!(apply_parabolic_operator(&q, &a, Operator::Heat).unwrap(), Polynomial::constant(2, rational(2, 1)));
        let c = Polynomial::constant(2, rational(7, 3));
        assert!(apply_parabolic_operator(&c, &a, Operator::Heat).unwrap().is_zero());
        assert!(apply_parabolic_operator(&c, &a, Operator::Adjoint).unwrap().is_zero());
    }

    #[test]
    fn evaluation_examples() {
        let a = CoefficientMatrix::identity(2);
        let v20 = caloric_poly(&a, &MultiIndex(vec![2, 0]), Parity::V).unwrap();
        assert_eq!(v20.evaluate(&SpaceTimePoint::new(vec![3.0, -8.0], 0.5)), 10.0);
        let v0 = caloric_poly(&a, &MultiIndex(vec![0, 0]), Parity::V).unwrap();
        assert_eq!(v0.evaluate(&SpaceTimePoint::new(vec![1.5, 2.5], -3.0)), 1.0);
    }

    #[test]
    fn decomposition_examples() {
        let a = CoefficientMatrix::identity(2);
        let v20 = caloric_poly(&a, &MultiIndex(vec![2, 0]), Parity::V).unwrap();
        let d = decompose(&v20.poly, &a, Parity::V).unwrap();
        assert_eq!(d.coefficients.len(), 1);
        assert_eq!(d.coefficients[&MultiIndex(vec![2, 0])], rational(1, 1));

        let p = Polynomial::from_terms(
            2,
            [(vec![2, 0], 0, rational(1, 1)), (vec![0, 2], 0, rational(1, 1)), (vec![0, 0], 1, rational(4, 1))],
        );
        let d = decompose(&p, &a, Parity::V).unwrap();
        assert_eq!(d.coefficients.len(), 2);
        assert_eq!(d.coefficients[&MultiIndex(vec![0, 2])], rational(1, 1));

        let q = Polynomial::from_terms(2, [(vec![2, 0], 0, rational(1, 1))]);
        match decompose(&q, &a, Parity::V) {
            Err(CalorixError::NotCaloric { term }) => assert!(term.contains('t'), "{term}"),
            other => panic!("expected NotCaloric, got {other:?}"),
        }
    }

    #[test]
    fn moment_identity_examples() {
        let a = CoefficientMatrix::identity(2);
        let p = SpaceTimePoint::new(vec![0.0, 0.0], 1.0);
        assert!(moment_identity_check(&a, &MultiIndex(vec![0, 0]), &p, 64).unwrap() < 1e-10);
        let m = moment_integral(&a, &MultiIndex(vec![2, 0]), &p, 64);
        assert!((m - 2.0).abs() < 1e-10, "{m}");
        let m = moment_integral(&aniso(), &MultiIndex(vec![1, 1]), &p, 64);
        assert!((m - 2.0).abs() < 1e-10, "{m}");
    }
}
