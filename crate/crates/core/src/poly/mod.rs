//! Exact multivariate polynomials in `(x_1, ..., x_n, t)` over the rationals,
//! and the caloric families built on them.

mod caloric;
mod export;

pub use caloric::{
    apply_parabolic_operator, caloric_poly, decompose, enumerate_basis, moment_identity_check,
    moment_integral, CaloricBasis, CaloricPolynomial, Decomposition, Parity,
};
pub use export::{PolynomialJson, TermJson};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Multi-index `alpha = (alpha_1, ..., alpha_n)`.
///
/// Ordered graded-lexicographically: by total degree, then with larger
/// leading exponents first, so `(2,0) < (1,1) < (0,2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = vec![0; n];
        v[j] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|alpha|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `alpha!`.
    pub fn factorial(&self) -> BigInt {
        self.0
            .iter()
            .map(|&a| (1..=a).fold(BigInt::one(), |acc, k| acc * BigInt::from(k)))
            .product()
    }

    pub fn add_unit(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] += 1;
        Self(v)
    }

    pub fn sub_unit(&self, j: usize) -> Option<Self> {
        if self.0[j] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(Self(v))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Monomial `x^beta t^m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub beta: MultiIndex,
    pub m: u32,
}

impl Monomial {
    pub fn new(beta: Vec<u32>, m: u32) -> Self {
        Self { beta: MultiIndex(beta), m }
    }

    /// Parabolic grade `|beta| + 2m`.
    pub fn grade(&self) -> u32 {
        self.beta.degree() + 2 * self.m
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.grade()
            .cmp(&other.grade())
            .then_with(|| self.m.cmp(&other.m))
            .then_with(|| self.beta.cmp(&other.beta))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut put = |f: &mut fmt::Formatter<'_>, s: String| -> fmt::Result {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{s}")
        };
        for (j, &e) in self.beta.0.iter().enumerate() {
            match e {
                0 => {}
                1 => put(f, format!("x{}", j + 1))?,
                _ => put(f, format!("x{}^{}", j + 1, e))?,
            }
        }
        match self.m {
            0 => {}
            1 => put(f, "t".into())?,
            m => put(f, format!("t^{m}"))?,
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Sparse polynomial with rational coefficients. Zero coefficients are never
/// stored, so the zero polynomial is the empty term map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::new(vec![0; n], 0), c);
        p
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, BigRational::one())
    }

    /// Builds a polynomial from `(beta, m, coefficient)` triples.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, u32, BigRational)>) -> Self {
        let mut p = Self::zero(n);
        for (beta, m, c) in terms {
            assert_eq!(beta.len(), n, "monomial dimension");
            p.add_term(Monomial::new(beta, m), c);
        }
        p
    }

    /// The monomial `x^alpha` (no time dependence).
    pub fn monomial(alpha: &MultiIndex) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(Monomial { beta: alpha.clone(), m: 0 }, BigRational::one());
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mono: &Monomial) -> BigRational {
        self.terms.get(mono).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, mono: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Polynomial, scale: &BigRational) {
        assert_eq!(self.n, other.n);
        if scale.is_zero() {
            return;
        }
        for (mono, c) in &other.terms {
            self.add_term(mono.clone(), c * scale);
        }
    }

    pub fn scaled(&self, scale: &BigRational) -> Polynomial {
        let mut p = Polynomial::zero(self.n);
        p.add_scaled(self, scale);
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        p.add_scaled(other, &-BigRational::one());
        p
    }

    /// Multiplies by `x_j`.
    pub fn mul_x(&self, j: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|(mono, c)| (Monomial { beta: mono.beta.add_unit(j), m: mono.m }, c.clone()))
            .collect();
        Polynomial { n: self.n, terms }
    }

    /// Multiplies by `t`.
    pub fn mul_t(&self) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|(mono, c)| (Monomial { beta: mono.beta.clone(), m: mono.m + 1 }, c.clone()))
            .collect();
        Polynomial { n: self.n, terms }
    }

    /// `d/dx_j`.
    pub fn diff_x(&self, j: usize) -> Polynomial {
        let mut p = Polynomial::zero(self.n);
        for (mono, c) in &self.terms {
            if let Some(beta) = mono.beta.sub_unit(j) {
                let e = BigInt::from(mono.beta.0[j]);
                p.add_term(Monomial { beta, m: mono.m }, c * BigRational::from_integer(e));
            }
        }
        p
    }

    /// `d/dt`.
    pub fn diff_t(&self) -> Polynomial {
        let mut p = Polynomial::zero(self.n);
        for (mono, c) in &self.terms {
            if mono.m > 0 {
                let e = BigInt::from(mono.m);
                p.add_term(Monomial { beta: mono.beta.clone(), m: mono.m - 1 }, c * BigRational::from_integer(e));
            }
        }
        p
    }

    /// Restriction to `t = 0` (terms without `t`).
    pub fn at_time_zero(&self) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(mono, _)| mono.m == 0)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Polynomial { n: self.n, terms }
    }

    /// Degree in `x_j`.
    pub fn degree_in_x(&self, j: usize) -> Option<u32> {
        self.terms.keys().map(|m| m.beta.0[j]).max()
    }

    /// Degree in `t`.
    pub fn degree_in_t(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.m).max()
    }

    /// Maximal parabolic grade `|beta| + 2m`.
    pub fn parabolic_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::grade).max()
    }

    /// Lowest-grade term, used for diagnostics.
    pub fn lowest_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next()
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, x: &[BigRational], t: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (mono, c) in &self.terms {
            let mut term = c.clone();
            for (xi, &e) in x.iter().zip(&mono.beta.0) {
                term *= num_traits::pow(xi.clone(), e as usize);
            }
            term *= num_traits::pow(t.clone(), mono.m as usize);
            acc += term;
        }
        acc
    }

    /// Floating-point evaluation.
    pub fn evaluate(&self, x: &[f64], t: f64) -> f64 {
        self.to_float().evaluate(x, t)
    }

    pub fn to_float(&self) -> FloatPolynomial {
        FloatPolynomial::from(self)
    }
}

impl fmt::Display for Polynomial {
    /// Terms printed by descending grade, spatial monomials before `t`,
    /// e.g. `x1^2 + 2t`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|(a, _), (b, _)| {
            b.grade().cmp(&a.grade()).then_with(|| a.m.cmp(&b.m)).then_with(|| a.beta.0.cmp(&b.beta.0).reverse())
        });
        for (i, (mono, c)) in ordered.into_iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let is_const = mono.beta.degree() == 0 && mono.m == 0;
            let coeff = if mag.is_integer() { mag.numer().to_string() } else { format!("({})", mag) };
            let compact = mono.beta.degree() == 0 && !is_const;
            if is_const {
                write!(f, "{coeff}")?;
            } else if mag.is_one() {
                write!(f, "{mono}")?;
            } else if compact {
                write!(f, "{coeff}{mono}")?;
            } else {
                write!(f, "{coeff} {mono}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial compiled to `f64` coefficients for fast evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatPolynomial {
    n: usize,
    max_x: Vec<u32>,
    max_t: u32,
    terms: Vec<(Vec<u32>, u32, f64)>,
}

impl From<&Polynomial> for FloatPolynomial {
    fn from(p: &Polynomial) -> Self {
        let terms: Vec<(Vec<u32>, u32, f64)> = p
            .terms
            .iter()
            .map(|(mono, c)| (mono.beta.0.clone(), mono.m, c.to_f64().unwrap_or(f64::NAN)))
            .collect();
        let max_x = (0..p.n).map(|j| terms.iter().map(|t| t.0[j]).max().unwrap_or(0)).collect();
        let max_t = terms.iter().map(|t| t.1).max().unwrap_or(0);
        Self { n: p.n, max_x, max_t, terms }
    }
}

impl FloatPolynomial {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn evaluate(&self, x: &[f64], t: f64) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        let powers: Vec<Vec<f64>> = (0..self.n).map(|j| power_table(x[j], self.max_x[j])).collect();
        let tp = power_table(t, self.max_t);
        self.terms
            .iter()
            .map(|(beta, m, c)| {
                let mut v = *c * tp[*m as usize];
                for (j, &e) in beta.iter().enumerate() {
                    v *= powers[j][e as usize];
                }
                v
            })
            .sum()
    }

    /// Spatial gradient.
    pub fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        let powers: Vec<Vec<f64>> = (0..self.n).map(|j| power_table(x[j], self.max_x[j])).collect();
        let tp = power_table(t, self.max_t);
        let mut g = vec![0.0; self.n];
        for (beta, m, c) in &self.terms {
            for (d, gd) in g.iter_mut().enumerate() {
                if beta[d] == 0 {
                    continue;
                }
                let mut v = *c * tp[*m as usize] * f64::from(beta[d]);
                for (j, &e) in beta.iter().enumerate() {
                    let e = if j == d { e - 1 } else { e };
                    v *= powers[j][e as usize];
                }
                *gd += v;
            }
        }
        g
    }
}

fn power_table(x: f64, max: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(max as usize + 1);
    let mut acc = 1.0;
    for _ in 0..=max {
        out.push(acc);
        acc *= x;
    }
    out
}

#[cfg(test)]
pub(crate) fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
