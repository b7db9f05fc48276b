//! The quadratic residue symbol on F_q[T] and the character `chi_P` of the
//! quadratic extension `k(sqrt P)`.

use serde::{Deserialize, Serialize};

use crate::ffpoly::{Field, MonicPoly, Poly, PrimePoly};

/// A value of a quadratic character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharacterValue {
    Minus,
    Zero,
    Plus,
}

impl CharacterValue {
    pub fn from_sign(v: i8) -> Self {
        match v.signum() {
            -1 => CharacterValue::Minus,
            0 => CharacterValue::Zero,
            _ => CharacterValue::Plus,
        }
    }

    pub fn value(self) -> i64 {
        match self {
            CharacterValue::Minus => -1,
            CharacterValue::Zero => 0,
            CharacterValue::Plus => 1,
        }
    }
}

impl std::ops::Mul for CharacterValue {
    type Output = CharacterValue;

    fn mul(self, rhs: Self) -> Self {
        CharacterValue::from_sign((self.value() * rhs.value()) as i8)
    }
}

/// Jacobi symbol `(a/b)` for monic `b`, by the Euclidean reduction that
/// quadratic reciprocity in F_q[T] allows:
///
/// * `(c/b) = chi_q(c)^{deg b}` for constants `c`,
/// * `(a/b) = (-1)^{(q-1)/2 * deg a * deg b} (b/a)` for monic coprime `a, b`.
pub fn jacobi_symbol(field: &Field, a: &Poly, b: &MonicPoly) -> i8 {
    let mut sign: i8 = 1;
    let mut top = a.rem(b.as_poly(), field);
    let mut bottom = b.as_poly().clone();
    loop {
        let db = bottom.degree().expect("monic divisor is nonzero");
        if db == 0 {
            return sign;
        }
        let Some(lead) = top.leading() else {
            return 0;
        };
        if db % 2 == 1 {
            sign *= field.quadratic_character(lead);
        }
        let monic = top.make_monic(field);
        let da = monic.degree().expect("nonzero");
        if da == 0 {
            return sign;
        }
        sign *= reciprocity_sign(field, da, db);
        top = bottom.rem(&monic, field);
        bottom = monic;
    }
}

/// `(-1)^{(q-1)/2 * deg f * deg P}`: the factor relating `(f/P)` and `(P/f)`
/// for monic `f`.
fn reciprocity_sign(field: &Field, deg_f: usize, deg_p: usize) -> i8 {
    let odd_half = (field.order() - 1) / 2 % 2 == 1;
    if odd_half && deg_f % 2 == 1 && deg_p % 2 == 1 {
        -1
    } else {
        1
    }
}

/// `chi_P(f)`: the quadratic character of `k(sqrt P)`, i.e. `(P/f)` on monic
/// `f`, extended to constants by `chi_P(c) = (c/P) = chi_q(c)^{deg P}`.
///
/// By reciprocity this is the Legendre symbol `(f/P)` whenever
/// `q = 1 mod 4` or `deg P` is even; otherwise the two differ by
/// `(-1)^{deg f}`. This is the character whose L-function satisfies the
/// class number formula.
pub fn chi(field: &Field, p: &PrimePoly, f: &Poly) -> CharacterValue {
    let Some(lead) = f.leading() else {
        return CharacterValue::Zero;
    };
    let monic = MonicPoly::new(f.make_monic(field)).expect("made monic");
    let mut v = jacobi_symbol(field, p.poly().as_poly(), &monic);
    if p.degree() % 2 == 1 {
        v *= field.quadratic_character(lead);
    }
    CharacterValue::from_sign(v)
}

/// The Legendre symbol `(f/P)` by Euler's criterion `f^{(|P|-1)/2} mod P`.
pub fn legendre_euler(field: &Field, p: &PrimePoly, f: &Poly) -> CharacterValue {
    let modulus = p.poly().as_poly();
    let norm = (field.order() as u128)
        .checked_pow(p.degree() as u32)
        .expect("|P| fits in 128 bits");
    let r = f.pow_mod((norm - 1) / 2, modulus, field);
    match r.coeffs() {
        [] => CharacterValue::Zero,
        [1] => CharacterValue::Plus,
        [c] if *c == field.neg(1) => CharacterValue::Minus,
        _ => unreachable!("Euler criterion gave a non-unit residue; P is not irreducible"),
    }
}

/// `chi_P(f)` from Euler's criterion and the reciprocity sign; the reference
/// route for [`chi`].
pub fn chi_euler(field: &Field, p: &PrimePoly, f: &Poly) -> CharacterValue {
    let legendre = legendre_euler(field, p, f);
    let deg_f = f.degree().unwrap_or(0);
    legendre * CharacterValue::from_sign(reciprocity_sign(field, deg_f, p.degree()))
}

/// Whether `chi(P, f h) = chi(P, f) chi(P, h)`.
pub fn chi_completely_multiplicative_check(field: &Field, p: &PrimePoly, f: &Poly, h: &Poly) -> bool {
    chi(field, p, &f.mul(h, field)) == chi(field, p, f) * chi(field, p, h)
}
