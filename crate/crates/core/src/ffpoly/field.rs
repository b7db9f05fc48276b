//! Arithmetic in a finite field F_q of odd characteristic.
//!
//! Elements are plain integers in `[0, q)`. For prime `q` this is the residue
//! itself; for `q = p^e` it is the coefficient vector over F_p, packed as
//! base-`p` digits relative to the field modulus (digit `i` is the
//! coefficient of `x^i`).

use super::PolyError;

/// An element of F_q, encoded as described in the module docs.
pub type FieldElement = u32;

/// Largest supported field size.
pub const MAX_FIELD_SIZE: u32 = 1 << 16;

/// Extension fields up to this size keep a full addition table.
const ADD_TABLE_LIMIT: u32 = 1024;

#[derive(Clone, Debug)]
enum Repr {
    Prime,
    Extension {
        modulus: Vec<u32>,
        exp: Vec<u32>,
        log: Vec<u32>,
        add: Option<Vec<u16>>,
    },
}

/// The finite field F_q, q an odd prime power.
#[derive(Clone, Debug)]
pub struct Field {
    q: u32,
    p: u32,
    degree: u32,
    repr: Repr,
    /// Quadratic character of each element: 0, 1 or -1.
    quad: Vec<i8>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.modulus() == other.modulus()
    }
}

impl Eq for Field {}

/// Splits `q` into `(p, e)` with `q = p^e` and `p` prime.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q && !q.is_multiple_of(p) {
        p += 1;
    }
    if !q.is_multiple_of(p) {
        p = q;
    }
    let mut rest = q;
    let mut e = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p, e))
}

impl Field {
    /// F_q for an odd prime power `q`. Prime powers use the smallest monic
    /// irreducible modulus in lexicographic order.
    pub fn new(q: u64) -> Result<Self, PolyError> {
        let (p, e) = Self::check_size(q)?;
        if e == 1 {
            return Ok(Self::prime(p as u32));
        }
        let base = Self::prime(p as u32);
        let modulus = super::irreducible::first_irreducible(&base, e as usize)
            .expect("every degree has an irreducible polynomial");
        Self::extension(p as u32, modulus.coeffs().to_vec())
    }

    /// F_{p^e} built from an explicit monic modulus over F_p, lowest degree
    /// first.
    pub fn with_modulus(p: u64, modulus: &[u32]) -> Result<Self, PolyError> {
        let e = modulus.len().saturating_sub(1) as u32;
        if e == 0 {
            return Err(PolyError::ConstantModulus);
        }
        let q = p
            .checked_pow(e)
            .filter(|&q| q <= MAX_FIELD_SIZE as u64)
            .ok_or(PolyError::FieldTooLarge(u64::MAX))?;
        let (pp, _) = Self::check_size(q)?;
        if pp != p {
            return Err(PolyError::NotPrimePower(p));
        }
        if e == 1 {
            return Ok(Self::prime(p as u32));
        }
        let base = Self::prime(p as u32);
        let poly = super::Poly::from_coeffs(modulus.iter().map(|&c| c % p as u32).collect());
        if poly.leading() != Some(1) {
            return Err(PolyError::ModulusNotIrreducible);
        }
        let monic = super::MonicPoly::new(poly).expect("leading coefficient checked");
        if !super::is_irreducible(&base, &monic)? {
            return Err(PolyError::ModulusNotIrreducible);
        }
        Self::extension(p as u32, monic.coeffs().to_vec())
    }

    fn check_size(q: u64) -> Result<(u64, u32), PolyError> {
        let (p, e) = prime_power(q).ok_or(PolyError::NotPrimePower(q))?;
        if p == 2 {
            return Err(PolyError::EvenCharacteristic(q));
        }
        if q > MAX_FIELD_SIZE as u64 {
            return Err(PolyError::FieldTooLarge(q));
        }
        Ok((p, e))
    }

    fn prime(p: u32) -> Self {
        let mut field = Field {
            q: p,
            p,
            degree: 1,
            repr: Repr::Prime,
            quad: Vec::new(),
        };
        field.quad = field.build_quadratic_table();
        field
    }

    fn extension(p: u32, modulus: Vec<u32>) -> Result<Self, PolyError> {
        let e = (modulus.len() - 1) as u32;
        let q = p.pow(e);
        // multiply packed elements by polynomial arithmetic over F_p
        let unpack = |mut a: u32| -> Vec<u32> {
            (0..e)
                .map(|_| {
                    let d = a % p;
                    a /= p;
                    d
                })
                .collect()
        };
        let pack = |v: &[u32]| v.iter().rev().fold(0u32, |acc, &d| acc * p + d);
        let slow_mul = |a: u32, b: u32| -> u32 {
            let (a, b) = (unpack(a), unpack(b));
            let mut prod = vec![0u32; 2 * e as usize];
            for (i, &x) in a.iter().enumerate() {
                for (j, &y) in b.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p;
                }
            }
            for k in (e as usize..prod.len()).rev() {
                let c = prod[k];
                if c == 0 {
                    continue;
                }
                for (i, &m) in modulus.iter().enumerate().take(e as usize) {
                    let idx = k - e as usize + i;
                    prod[idx] = (prod[idx] + (p - c) * m) % p;
                }
                prod[k] = 0;
            }
            pack(&prod[..e as usize])
        };

        // find a generator of the multiplicative group
        let order = q - 1;
        let prime_factors = small_prime_factors(order as u64);
        let pow = |mut base: u32, mut exp: u64| -> u32 {
            let mut acc = 1u32;
            while exp > 0 {
                if exp & 1 == 1 {
                    acc = slow_mul(acc, base);
                }
                base = slow_mul(base, base);
                exp >>= 1;
            }
            acc
        };
        let generator = (2..q)
            .find(|&g| prime_factors.iter().all(|&l| pow(g, order as u64 / l) != 1))
            .ok_or(PolyError::ModulusNotIrreducible)?;

        let mut exp = vec![0u32; order as usize];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = x;
            log[x as usize] = i as u32;
            x = slow_mul(x, generator);
        }
        let add = (q <= ADD_TABLE_LIMIT).then(|| {
            let mut table = vec![0u16; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    table[(a * q + b) as usize] = digit_add(p, e, a, b) as u16;
                }
            }
            table
        });
        let mut field = Field {
            q,
            p,
            degree: e,
            repr: Repr::Extension { modulus, exp, log, add },
            quad: Vec::new(),
        };
        field.quad = field.build_quadratic_table();
        Ok(field)
    }

    fn build_quadratic_table(&self) -> Vec<i8> {
        let half = (self.q as u64 - 1) / 2;
        (0..self.q)
            .map(|a| match a {
                0 => 0,
                _ if self.pow(a, half) == 1 => 1,
                _ => -1,
            })
            .collect()
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    /// Degree of F_q over its prime field.
    pub fn extension_degree(&self) -> u32 {
        self.degree
    }

    pub fn is_prime_field(&self) -> bool {
        matches!(self.repr, Repr::Prime)
    }

    /// The field modulus over F_p, lowest degree first (empty for prime fields).
    pub fn modulus(&self) -> &[u32] {
        match &self.repr {
            Repr::Prime => &[],
            Repr::Extension { modulus, .. } => modulus,
        }
    }

    /// Embeds an element of the prime field F_p.
    pub fn from_prime_field(&self, a: u32) -> FieldElement {
        a % self.p
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.repr {
            Repr::Prime => {
                let s = a + b;
                if s >= self.q {
                    s - self.q
                } else {
                    s
                }
            }
            Repr::Extension { add: Some(t), .. } => t[(a * self.q + b) as usize] as u32,
            Repr::Extension { add: None, .. } => digit_add(self.p, self.degree, a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        match &self.repr {
            Repr::Prime => {
                if a == 0 {
                    0
                } else {
                    self.q - a
                }
            }
            Repr::Extension { .. } => {
                let mut rest = a;
                let mut out = 0;
                let mut scale = 1;
                for _ in 0..self.degree {
                    let d = rest % self.p;
                    rest /= self.p;
                    out += ((self.p - d) % self.p) * scale;
                    scale *= self.p;
                }
                out
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.repr {
            Repr::Prime => a * b % self.q,
            Repr::Extension { exp, log, .. } => {
                if a == 0 || b == 0 {
                    return 0;
                }
                let order = self.q - 1;
                let s = log[a as usize] + log[b as usize];
                exp[(if s >= order { s - order } else { s }) as usize]
            }
        }
    }

    pub fn pow(&self, mut base: FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a == 0 {
            return None;
        }
        Some(match &self.repr {
            Repr::Prime => self.pow(a, self.q as u64 - 2),
            Repr::Extension { exp, log, .. } => {
                let order = self.q - 1;
                exp[((order - log[a as usize]) % order) as usize]
            }
        })
    }

    /// The quadratic character of F_q: 0 at 0, 1 on squares, -1 otherwise.
    #[inline]
    pub fn quadratic_character(&self, a: FieldElement) -> i8 {
        self.quad[a as usize]
    }
}

fn digit_add(p: u32, e: u32, mut a: u32, mut b: u32) -> u32 {
    let mut out = 0;
    let mut scale = 1;
    for _ in 0..e {
        out += ((a % p + b % p) % p) * scale;
        a /= p;
        b /= p;
        scale *= p;
    }
    out
}

/// Distinct prime factors of `n` by trial division.
pub(crate) fn small_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
