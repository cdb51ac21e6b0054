use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{CaloricPolynomial, Monomial, MultiIndex, Parity, Polynomial};
use crate::error::{CalorixError, Result};

/// One term of the JSON export; arbitrary-precision integers are decimal
/// strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub beta: Vec<u32>,
    pub m: u32,
    pub num: String,
    pub den: String,
}

/// `{"parity":"v","alpha":[..],"terms":[{"beta":[..],"m":..,"num":"..","den":".."}]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialJson {
    pub parity: Parity,
    pub alpha: Vec<u32>,
    pub terms: Vec<TermJson>,
}

impl From<&CaloricPolynomial> for PolynomialJson {
    fn from(p: &CaloricPolynomial) -> Self {
        let terms = p
            .poly
            .terms()
            .map(|(mono, c)| TermJson {
                beta: mono.beta.0.clone(),
                m: mono.m,
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect();
        Self { parity: p.parity, alpha: p.alpha.0.clone(), terms }
    }
}

impl TryFrom<&PolynomialJson> for CaloricPolynomial {
    type Error = CalorixError;

    fn try_from(j: &PolynomialJson) -> Result<Self> {
        let n = j.alpha.len();
        let mut poly = Polynomial::zero(n);
        for term in &j.terms {
            if term.beta.len() != n {
                return Err(CalorixError::DimensionMismatch { expected: n, found: term.beta.len() });
            }
            let num: BigInt = term
                .num
                .parse()
                .map_err(|_| CalorixError::InvalidArgument(format!("bad numerator {:?}", term.num)))?;
            let den: BigInt = term
                .den
                .parse()
                .map_err(|_| CalorixError::InvalidArgument(format!("bad denominator {:?}", term.den)))?;
            if den == BigInt::from(0) {
                return Err(CalorixError::InvalidArgument("zero denominator".into()));
            }
            poly.add_term(Monomial::new(term.beta.clone(), term.m), BigRational::new(num, den));
        }
        Ok(CaloricPolynomial { alpha: MultiIndex(j.alpha.clone()), parity: j.parity, poly })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::CoefficientMatrix;
    use crate::poly::caloric_poly;

    #[test]
    fn json_shape() {
        let a = CoefficientMatrix::identity(2);
        let v = caloric_poly(&a, &MultiIndex(vec![2, 0]), Parity::V).unwrap();
        let j = serde_json::to_value(PolynomialJson::from(&v)).unwrap();
        assert_eq!(j["parity"], "v");
        assert_eq!(j["alpha"], serde_json::json!([2, 0]));
        let terms = j["terms"].as_array().unwrap();
        assert_eq!(terms.len(), 2);
        assert!(terms.iter().any(|t| t["m"] == 1 && t["num"] == "2" && t["den"] == "1"));
    }

    #[test]
    fn json_round_trip_with_big_coefficients() {
        let a = CoefficientMatrix::new(2, &[vec![0.3, 0.1], vec![0.1, 0.7]]).unwrap();
        let v = caloric_poly(&a, &MultiIndex(vec![3, 4]), Parity::W).unwrap();
        let text = serde_json::to_string(&PolynomialJson::from(&v)).unwrap();
        let back: PolynomialJson = serde_json::from_str(&text).unwrap();
        assert_eq!(CaloricPolynomial::try_from(&back).unwrap(), v);
    }
}
