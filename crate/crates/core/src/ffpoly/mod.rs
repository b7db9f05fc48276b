//! Arithmetic in F_q and F_q[T].

mod field;
mod irreducible;
mod poly;

use thiserror::Error;

pub use field::{prime_power, Field, FieldElement, MAX_FIELD_SIZE};
pub use irreducible::{
    count_irreducibles_exact, count_irreducibles_f64, first_irreducible, irreducible_density, is_irreducible,
    mertens_product, mobius, primes_of_degree, Factorizer, PrimePoly,
};
pub use poly::{enumerate_monic, enumerate_monic_range, poly_mulmod, MonicPoly, MonicRange, Poly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("q = {0} has even characteristic; only odd q is supported")]
    EvenCharacteristic(u64),
    #[error("field size {0} exceeds the supported maximum")]
    FieldTooLarge(u64),
    #[error("field modulus must have degree at least 1")]
    ConstantModulus,
    #[error("field modulus is not a monic irreducible polynomial")]
    ModulusNotIrreducible,
    #[error("polynomial is not monic")]
    NotMonic,
    #[error("irreducibility is undefined for constant polynomials")]
    ConstantPolynomial,
    #[error("{0} is reducible")]
    Reducible(String),
    #[error("malformed coefficient digits {0:?}")]
    BadDigits(String),
}
