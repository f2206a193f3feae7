use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |lambda + 1| at or below this selects the lambda = -1 case.
pub const BRANCH_TOL: f64 = 1e-12;
/// Generic-branch evaluations with |lambda + 1| below this are flagged.
pub const NEAR_BRANCH_TOL: f64 = 1e-6;
/// |lambda| at or below this counts as lambda = 0.
pub const ZERO_LAMBDA_TOL: f64 = 1e-12;

/// Statement whose hypotheses and conclusion an instance exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Theorem {
    T2_1,
    C2_2,
    C2_3,
    T2_4,
    C2_5,
    T3_1,
    C3_2,
    T3_3,
    C3_4,
    T3_5,
    C3_6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Group inverse of a sum `a + b`.
    Additive,
    /// Group invertibility of `M = [[A, C], [B, D]]`.
    Block,
}

impl Theorem {
    pub const ALL: [Theorem; 11] = [
        Theorem::T2_1,
        Theorem::C2_2,
        Theorem::C2_3,
        Theorem::T2_4,
        Theorem::C2_5,
        Theorem::T3_1,
        Theorem::C3_2,
        Theorem::T3_3,
        Theorem::C3_4,
        Theorem::T3_5,
        Theorem::C3_6,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Theorem::T2_1 => "T2.1",
            Theorem::C2_2 => "C2.2",
            Theorem::C2_3 => "C2.3",
            Theorem::T2_4 => "T2.4",
            Theorem::C2_5 => "C2.5",
            Theorem::T3_1 => "T3.1",
            Theorem::C3_2 => "C3.2",
            Theorem::T3_3 => "T3.3",
            Theorem::C3_4 => "C3.4",
            Theorem::T3_5 => "T3.5",
            Theorem::C3_6 => "C3.6",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Theorem::T2_1 | Theorem::C2_2 | Theorem::C2_3 | Theorem::T2_4 | Theorem::C2_5 => Family::Additive,
            _ => Family::Block,
        }
    }

    /// The statement this corollary is the transpose dual of.
    pub fn dual_parent(self) -> Option<Theorem> {
        match self {
            Theorem::C2_2 => Some(Theorem::T2_1),
            Theorem::C2_5 => Some(Theorem::T2_4),
            Theorem::C3_2 => Some(Theorem::T3_1),
            Theorem::C3_4 => Some(Theorem::T3_3),
            Theorem::C3_6 => Some(Theorem::T3_5),
            _ => None,
        }
    }

    /// Inverse of [`Theorem::dual_parent`].
    pub fn dual_child(self) -> Option<Theorem> {
        Theorem::ALL.into_iter().find(|t| t.dual_parent() == Some(self))
    }

    /// Rejects lambda values outside what the proofs support.
    ///
    /// Lambda = 0 is excluded for T2.1/C2.2/C2.3 (the derivation of the
    /// vanishing off-diagonal block divides by lambda; `[[0,1],[0,1]]`,
    /// `[[1,0],[0,0]]` is a counterexample). Lambda = -1 is excluded wherever
    /// the argument goes through T2.4.
    pub fn check_lambda(self, lambda: Complex64) -> Result<()> {
        if !lambda.is_finite() {
            return Err(Error::UnsupportedLambda {
                theorem: self.tag().into(),
                lambda,
                reason: "lambda must be finite".into(),
            });
        }
        match self {
            Theorem::T2_1 | Theorem::C2_2 | Theorem::C2_3 if lambda.norm() <= ZERO_LAMBDA_TOL => {
                Err(Error::UnsupportedLambda {
                    theorem: self.tag().into(),
                    lambda,
                    reason: "lambda = 0 leaves the off-diagonal Peirce block unconstrained; \
                             counterexample a = [[0,1],[0,1]], b = [[1,0],[0,0]]"
                        .into(),
                })
            }
            Theorem::T2_1 | Theorem::C2_2 | Theorem::C2_3 => Ok(()),
            _ if is_minus_one(lambda) => Err(Error::LambdaIsMinusOne {
                theorem: self.tag().into(),
            }),
            _ => Ok(()),
        }
    }

    /// Whether the lambda = -1 exclusion is not part of the statement
    /// itself but inherited from the T2.4 step of its proof.
    pub fn minus_one_is_inherited(self) -> bool {
        self.family() == Family::Block
    }
}

pub fn is_minus_one(lambda: Complex64) -> bool {
    (lambda + 1.0).norm() <= BRANCH_TOL
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', ".");
        Theorem::ALL
            .into_iter()
            .find(|t| t.tag() == norm)
            .ok_or_else(|| Error::UnknownTheorem(s.to_string()))
    }
}

impl Serialize for Theorem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for Theorem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Lambda serialized as `[re, im]`.
pub mod lambda_serde {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        let z = Complex64::new(re, im);
        if !z.is_finite() {
            return Err(serde::de::Error::custom("lambda must be finite"));
        }
        Ok(z)
    }
}

/// A named, non-negative residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: String,
    pub value: f64,
}

impl NamedResidual {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        NamedResidual {
            name: name.into(),
            value: crate::ginv::sanitize(value),
        }
    }
}

/// `‖lhs − rhs‖_F / max(1, scale)`.
pub(crate) fn normalized_defect(
    lhs: &crate::linalg::ComplexMatrix,
    rhs: &crate::linalg::ComplexMatrix,
    scale: f64,
) -> f64 {
    (lhs - rhs).frobenius_norm() / scale.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.tag().parse::<Theorem>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<Theorem>(&json).unwrap(), t);
        }
        assert_eq!("t2_1".parse::<Theorem>().unwrap(), Theorem::T2_1);
        assert!(matches!("T9.9".parse::<Theorem>(), Err(Error::UnknownTheorem(_))));
    }

    #[test]
    fn lambda_restrictions() {
        let zero = Complex64::new(0.0, 0.0);
        let m1 = Complex64::new(-1.0, 0.0);
        assert!(matches!(
            Theorem::T2_1.check_lambda(zero),
            Err(Error::UnsupportedLambda { .. })
        ));
        assert!(Theorem::T2_1.check_lambda(m1).is_ok());
        assert!(Theorem::T2_4.check_lambda(zero).is_ok());
        assert!(matches!(
            Theorem::T2_4.check_lambda(m1),
            Err(Error::LambdaIsMinusOne { .. })
        ));
        assert!(matches!(
            Theorem::T3_1.check_lambda(m1),
            Err(Error::LambdaIsMinusOne { .. })
        ));
        assert!(Theorem::T3_1.minus_one_is_inherited());
    }

    #[test]
    fn dual_pairs() {
        assert_eq!(Theorem::C3_4.dual_parent(), Some(Theorem::T3_3));
        assert_eq!(Theorem::T2_1.dual_child(), Some(Theorem::C2_2));
        assert_eq!(Theorem::C2_3.dual_parent(), None);
    }
}
