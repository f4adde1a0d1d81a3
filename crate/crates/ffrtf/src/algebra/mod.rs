//! Exact arithmetic kernels.

mod cyclo;
mod ext;
mod field;
mod laurent;
mod poly;
mod ratfunc;

pub use cyclo::CycloRat;
pub use ext::ExtField;
pub use field::{is_prime, PrimeField};
pub use laurent::{derivative_functional, parse_rational, BiLaurent, Coeff, Ring};
pub use poly::{Factorization, Poly};
pub use ratfunc::{QPoly, RatFunc1};

use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("field characteristic {0} is not an odd prime in 3..=13")]
    BadPrime(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot factor the zero polynomial")]
    ZeroPolynomial,
    #[error("modulus is not irreducible")]
    Reducible,
    #[error("operands live in different coefficient rings ({0} vs {1})")]
    MixedRings(Ring, Ring),
    #[error("parse error: {0}")]
    Parse(String),
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
