use std::fmt;

use serde::{Deserialize, Serialize};

use super::field::{Field, FieldElement};
use super::PolyError;

/// A polynomial over F_q, coefficients lowest degree first, with no trailing
/// zeros. The zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![1] }
    }

    /// The polynomial `T`.
    pub fn x() -> Self {
        Poly { coeffs: vec![0, 1] }
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<FieldElement> {
        self.coeffs.last().copied()
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == Some(1)
    }

    pub fn add(&self, other: &Poly, field: &Field) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0);
                let b = other.coeffs.get(i).copied().unwrap_or(0);
                field.add(a, b)
            })
            .collect();
        Poly::from_coeffs(coeffs)
    }

    pub fn sub(&self, other: &Poly, field: &Field) -> Poly {
        self.add(&other.neg(field), field)
    }

    pub fn neg(&self, field: &Field) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|&c| field.neg(c)).collect(),
        }
    }

    pub fn scale(&self, c: FieldElement, field: &Field) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&a| field.mul(a, c)).collect())
    }

    pub fn mul(&self, other: &Poly, field: &Field) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = field.add(out[i + j], field.mul(a, b));
            }
        }
        Poly::from_coeffs(out)
    }

    /// Quotient and remainder by a nonzero divisor.
    pub fn div_rem(&self, divisor: &Poly, field: &Field) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead_inv = field.inv(divisor.coeffs[dd]).expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![0; rem.len() - dd];
        for k in (dd..rem.len()).rev() {
            let c = field.mul(rem[k], lead_inv);
            if c == 0 {
                continue;
            }
            quot[k - dd] = c;
            for (i, &m) in divisor.coeffs.iter().enumerate() {
                let idx = k - dd + i;
                rem[idx] = field.sub(rem[idx], field.mul(c, m));
            }
        }
        rem.truncate(dd);
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    pub fn rem(&self, divisor: &Poly, field: &Field) -> Poly {
        if self.coeffs.len() < divisor.coeffs.len() {
            return self.clone();
        }
        self.div_rem(divisor, field).1
    }

    /// `(self * other) mod modulus`.
    pub fn mul_mod(&self, other: &Poly, modulus: &Poly, field: &Field) -> Poly {
        self.mul(other, field).rem(modulus, field)
    }

    /// `self^exp mod modulus` by square-and-multiply.
    pub fn pow_mod(&self, mut exp: u128, modulus: &Poly, field: &Field) -> Poly {
        let mut base = self.rem(modulus, field);
        let mut acc = Poly::one().rem(modulus, field);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_mod(&base, modulus, field);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul_mod(&base, modulus, field);
            }
        }
        acc
    }

    /// Monic greatest common divisor (zero if both inputs are zero).
    pub fn gcd(&self, other: &Poly, field: &Field) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b, field);
            a = b;
            b = r;
        }
        a.make_monic(field)
    }

    /// Divides by the leading coefficient.
    pub fn make_monic(&self, field: &Field) -> Poly {
        match self.leading() {
            None | Some(1) => self.clone(),
            Some(c) => self.scale(field.inv(c).expect("nonzero"), field),
        }
    }

    pub fn eval(&self, x: FieldElement, field: &Field) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| field.add(field.mul(acc, x), c))
    }

    /// Formats with coefficients as integers, e.g. `T^3 + 2T + 1`.
    pub fn display(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let coeff = if c == 1 && i > 0 { String::new() } else { c.to_string() };
            parts.push(match i {
                0 => coeff,
                1 => format!("{coeff}T"),
                _ => format!("{coeff}T^{i}"),
            });
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

/// `poly_mulmod`: `a * b mod m`, with `deg(m) >= 1`.
pub fn poly_mulmod(a: &Poly, b: &Poly, m: &MonicPoly, field: &Field) -> Poly {
    a.mul_mod(b, m.as_poly(), field)
}

/// A monic polynomial in F_q[T].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Poly", into = "Poly")]
pub struct MonicPoly(Poly);

impl TryFrom<Poly> for MonicPoly {
    type Error = PolyError;

    fn try_from(p: Poly) -> Result<Self, Self::Error> {
        MonicPoly::new(p)
    }
}

impl From<MonicPoly> for Poly {
    fn from(m: MonicPoly) -> Poly {
        m.0
    }
}

impl MonicPoly {
    pub fn new(poly: Poly) -> Result<Self, PolyError> {
        if poly.is_monic() {
            Ok(MonicPoly(poly))
        } else {
            Err(PolyError::NotMonic)
        }
    }

    pub fn one() -> Self {
        MonicPoly(Poly::one())
    }

    /// Monic polynomial from its non-leading coefficients, lowest first.
    pub fn from_lower(lower: &[FieldElement]) -> Self {
        let mut coeffs = lower.to_vec();
        coeffs.push(1);
        MonicPoly(Poly { coeffs })
    }

    /// The `index`-th monic polynomial of degree `n` in lexicographic order:
    /// the base-`q` digits of `index` are the coefficients of `T^0..T^{n-1}`.
    pub fn from_index(q: u32, n: usize, mut index: u64) -> Self {
        let mut coeffs = Vec::with_capacity(n + 1);
        for _ in 0..n {
            coeffs.push((index % q as u64) as u32);
            index /= q as u64;
        }
        coeffs.push(1);
        MonicPoly(Poly { coeffs })
    }

    /// Inverse of [`MonicPoly::from_index`].
    pub fn index(&self, q: u32) -> u64 {
        self.0.coeffs[..self.degree()]
            .iter()
            .rev()
            .fold(0u64, |acc, &c| acc * q as u64 + c as u64)
    }

    pub fn degree(&self) -> usize {
        self.0.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.0.coeffs
    }

    pub fn as_poly(&self) -> &Poly {
        &self.0
    }

    pub fn into_poly(self) -> Poly {
        self.0
    }

    /// The norm `|f| = q^deg(f)`.
    pub fn norm(&self, q: u32) -> u128 {
        (q as u128).pow(self.degree() as u32)
    }

    pub fn mul(&self, other: &MonicPoly, field: &Field) -> MonicPoly {
        MonicPoly(self.0.mul(&other.0, field))
    }

    pub fn is_one(&self) -> bool {
        self.degree() == 0
    }

    /// Non-leading coefficients as a digit string, highest first, one
    /// character per base-`q` digit (`0-9a-z`).
    pub fn to_digits(&self) -> String {
        self.0.coeffs[..self.degree()]
            .iter()
            .rev()
            .map(|&c| char::from_digit(c, 36).expect("digit below 36"))
            .collect()
    }

    /// Parses the format written by [`MonicPoly::to_digits`].
    pub fn from_digits(q: u32, digits: &str) -> Result<Self, PolyError> {
        let mut lower = Vec::with_capacity(digits.len());
        for ch in digits.chars().rev() {
            match ch.to_digit(36) {
                Some(d) if d < q => lower.push(d),
                _ => return Err(PolyError::BadDigits(digits.to_string())),
            }
        }
        Ok(Self::from_lower(&lower))
    }
}

impl fmt::Display for MonicPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `enumerate_monic`: all `q^n` monic polynomials of degree `n` in
/// lexicographic order.
pub fn enumerate_monic(q: u32, n: usize) -> MonicRange {
    let total = (q as u64).checked_pow(n as u32).expect("q^n fits in 64 bits");
    enumerate_monic_range(q, n, 0..total)
}

/// A shard of [`enumerate_monic`] by lexicographic index.
pub fn enumerate_monic_range(q: u32, n: usize, range: std::ops::Range<u64>) -> MonicRange {
    MonicRange {
        q,
        n,
        next: range.start,
        end: range.end,
    }
}

/// Iterator returned by [`enumerate_monic`].
#[derive(Clone, Debug)]
pub struct MonicRange {
    q: u32,
    n: usize,
    next: u64,
    end: u64,
}

impl Iterator for MonicRange {
    type Item = MonicPoly;

    fn next(&mut self) -> Option<MonicPoly> {
        if self.next >= self.end {
            return None;
        }
        let item = MonicPoly::from_index(self.q, self.n, self.next);
        self.next += 1;
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for MonicRange {}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Field {
        Field::new(3).unwrap()
    }

    #[test]
    fn mulmod_examples() {
        let f = f3();
        let t = Poly::x();
        let m = MonicPoly::from_lower(&[1, 0]); // T^2 + 1
        assert_eq!(poly_mulmod(&t, &t, &m, &f), Poly::constant(2));

        let g = Poly::from_coeffs(vec![2, 1, 1, 2]);
        assert_eq!(poly_mulmod(&g, &Poly::one(), &m, &f), g.rem(m.as_poly(), &f));

        // (T+1)(T+2) mod T^3 + 2T + 1 = T^2 + 2
        let m3 = MonicPoly::from_lower(&[1, 2, 0]);
        let a = Poly::from_coeffs(vec![1, 1]);
        let b = Poly::from_coeffs(vec![2, 1]);
        assert_eq!(poly_mulmod(&a, &b, &m3, &f), Poly::from_coeffs(vec![2, 0, 1]));
    }

    #[test]
    fn enumeration_order_and_count() {
        let one: Vec<_> = enumerate_monic(3, 0).collect();
        assert_eq!(one, vec![MonicPoly::one()]);
        let lin: Vec<String> = enumerate_monic(3, 1).map(|p| p.to_string()).collect();
        assert_eq!(lin, ["T", "T + 1", "T + 2"]);
        assert_eq!(enumerate_monic(3, 2).count(), 9);
        let all: std::collections::HashSet<_> = enumerate_monic(5, 3).collect();
        assert_eq!(all.len(), 125);
    }

    #[test]
    fn sharded_enumeration_concatenates() {
        let whole: Vec<_> = enumerate_monic(3, 4).collect();
        let mut shards: Vec<_> = enumerate_monic_range(3, 4, 0..40).collect();
        shards.extend(enumerate_monic_range(3, 4, 40..81));
        assert_eq!(whole, shards);
    }

    #[test]
    fn index_and_digits_roundtrip() {
        for (i, p) in enumerate_monic(5, 3).enumerate() {
            assert_eq!(p.index(5), i as u64);
            assert_eq!(MonicPoly::from_digits(5, &p.to_digits()).unwrap(), p);
        }
        assert!(MonicPoly::from_digits(3, "13").is_err());
    }

    #[test]
    fn division_identity() {
        let f = Field::new(5).unwrap();
        let a = Poly::from_coeffs(vec![3, 1, 4, 1, 0, 2]);
        let b = Poly::from_coeffs(vec![2, 0, 3]);
        let (qt, r) = a.div_rem(&b, &f);
        assert_eq!(qt.mul(&b, &f).add(&r, &f), a);
        assert!(r.degree() < b.degree());
    }

    #[test]
    fn gcd_is_monic_common_factor() {
        let f = f3();
        let a = Poly::from_coeffs(vec![1, 1]); // T + 1
        let b = Poly::from_coeffs(vec![2, 1]); // T + 2
        let c = Poly::from_coeffs(vec![1, 0, 1]); // T^2 + 1
        let g = a.mul(&c, &f).gcd(&b.mul(&c, &f).scale(2, &f), &f);
        assert_eq!(g, c);
    }

    #[test]
    fn monic_rejects_non_monic() {
        assert!(MonicPoly::new(Poly::from_coeffs(vec![1, 2])).is_err());
        assert!(MonicPoly::new(Poly::zero()).is_err());
    }
}
