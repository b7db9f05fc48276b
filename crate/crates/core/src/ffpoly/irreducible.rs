use serde::{Deserialize, Serialize};

use super::field::{small_prime_factors, Field};
use super::poly::{enumerate_monic, enumerate_monic_range, MonicPoly, Poly};
use super::PolyError;
use crate::parallel;

/// Whether `f` is irreducible over F_q.
///
/// Rabin's criterion: a monic `f` of degree `n` is irreducible iff
/// `T^{q^n} = T mod f` and `gcd(T^{q^{n/l}} - T, f) = 1` for each prime `l | n`.
pub fn is_irreducible(field: &Field, f: &MonicPoly) -> Result<bool, PolyError> {
    let n = f.degree();
    if n == 0 {
        return Err(PolyError::ConstantPolynomial);
    }
    if n == 1 {
        return Ok(true);
    }
    let modulus = f.as_poly();
    // a root in F_q means a linear factor; cheap rejection
    if (0..field.order()).any(|x| modulus.eval(x, field) == 0) {
        return Ok(false);
    }
    let q = field.order() as u128;
    let t = Poly::x();
    let mut frob = Vec::with_capacity(n + 1); // frob[i] = T^{q^i} mod f
    frob.push(t.rem(modulus, field));
    for i in 1..=n {
        let next = frob[i - 1].pow_mod(q, modulus, field);
        frob.push(next);
    }
    if frob[n] != frob[0] {
        return Ok(false);
    }
    for l in small_prime_factors(n as u64) {
        let h = frob[n / l as usize].sub(&t, field);
        if h.gcd(modulus, field).degree() != Some(0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest monic irreducible of degree `n` in lexicographic order.
pub fn first_irreducible(field: &Field, n: usize) -> Option<MonicPoly> {
    enumerate_monic(field.order(), n).find(|f| is_irreducible(field, f).unwrap_or(false))
}

/// The Möbius function.
pub fn mobius(mut n: u64) -> i64 {
    let mut sign = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// `count_irreducibles_exact`: `|P_n| = (1/n) sum_{d | n} mu(d) q^{n/d}`.
///
/// Panics if `q^n` overflows 128 bits.
pub fn count_irreducibles_exact(q: u64, n: u32) -> u128 {
    assert!(n >= 1, "degree must be positive");
    let mut total: i128 = 0;
    for d in divisors(n as u64) {
        let term = (q as i128).checked_pow(n / d as u32).expect("q^n overflows 128 bits");
        total += mobius(d) as i128 * term;
    }
    debug_assert_eq!(total % n as i128, 0);
    (total / n as i128) as u128
}

/// `|P_n| / q^n` in floating point, usable far beyond where `q^n` overflows.
pub fn irreducible_density(q: u64, n: u32) -> f64 {
    assert!(n >= 1, "degree must be positive");
    let qf = q as f64;
    let sum: f64 = divisors(n as u64)
        .into_iter()
        .map(|d| {
            let m = n / d as u32;
            mobius(d) as f64 * qf.powi(m as i32 - n as i32)
        })
        .sum();
    sum / n as f64
}

/// `|P_n|` as a float (exact below 2^53).
pub fn count_irreducibles_f64(q: u64, n: u32) -> f64 {
    if let Some(exact) = (q as u128)
        .checked_pow(n)
        .filter(|&v| v < (1u128 << 100))
        .map(|_| count_irreducibles_exact(q, n))
    {
        return exact as f64;
    }
    irreducible_density(q, n) * (q as f64).powi(n as i32)
}

/// `mertens_product`: `prod_{deg P <= x} (1 - 1/|P|)^{-1}`.
pub fn mertens_product(q: u64, x: u32) -> f64 {
    let log: f64 = (1..=x)
        .map(|d| {
            let y = (q as f64).powi(-(d as i32));
            -count_irreducibles_f64(q, d) * (-y).ln_1p()
        })
        .sum();
    log.exp()
}

/// A certified monic irreducible polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimePoly {
    poly: MonicPoly,
}

impl PrimePoly {
    pub fn new(field: &Field, poly: MonicPoly) -> Result<Self, PolyError> {
        if is_irreducible(field, &poly)? {
            Ok(PrimePoly { poly })
        } else {
            Err(PolyError::Reducible(poly.to_string()))
        }
    }

    /// Wraps a polynomial already known to be irreducible.
    pub(crate) fn new_unchecked(poly: MonicPoly) -> Self {
        PrimePoly { poly }
    }

    pub fn poly(&self) -> &MonicPoly {
        &self.poly
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    /// `g = floor((deg - 1) / 2)`.
    pub fn genus(&self) -> usize {
        (self.degree() - 1) / 2
    }

    /// Odd degree: the infinite place ramifies in `k(sqrt P)`.
    pub fn is_imaginary(&self) -> bool {
        self.degree() % 2 == 1
    }

    pub fn recheck(&self, field: &Field) -> bool {
        is_irreducible(field, &self.poly).unwrap_or(false)
    }
}

impl std::fmt::Display for PrimePoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.poly.fmt(f)
    }
}

/// All monic irreducibles of degree `n`, in lexicographic order.
pub fn primes_of_degree(field: &Field, n: usize) -> Vec<PrimePoly> {
    let q = field.order();
    let total = (q as u64).checked_pow(n as u32).expect("q^n fits in 64 bits");
    const CHUNK: u64 = 4096;
    let chunks = total.div_ceil(CHUNK) as usize;
    parallel::map_indices(chunks, |c| {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(total);
        enumerate_monic_range(q, n, start..end)
            .filter(|f| is_irreducible(field, f).expect("degree >= 1"))
            .map(PrimePoly::new_unchecked)
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Trial-division factorization into monic irreducibles, with the primes
/// used as divisors cached by degree.
#[derive(Debug)]
pub struct Factorizer<'a> {
    field: &'a Field,
    primes: Vec<Vec<MonicPoly>>,
}

impl<'a> Factorizer<'a> {
    pub fn new(field: &'a Field) -> Self {
        Factorizer {
            field,
            primes: vec![Vec::new()],
        }
    }

    fn primes_up_to(&mut self, d: usize) {
        while self.primes.len() <= d {
            let deg = self.primes.len();
            let list = primes_of_degree(self.field, deg).into_iter().map(|p| p.poly).collect();
            self.primes.push(list);
        }
    }

    /// Exponent pattern of `f`: pairs `(prime, multiplicity)` in increasing
    /// degree then lexicographic order.
    pub fn factor(&mut self, f: &MonicPoly) -> Vec<(MonicPoly, u32)> {
        let field = self.field;
        let mut rest = f.as_poly().clone();
        let mut out = Vec::new();
        let mut d = 1;
        while rest.degree().unwrap_or(0) >= 2 * d {
            self.primes_up_to(d);
            for p in &self.primes[d] {
                let mut e = 0;
                loop {
                    let (quot, rem) = rest.div_rem(p.as_poly(), field);
                    if !rem.is_zero() {
                        break;
                    }
                    rest = quot;
                    e += 1;
                }
                if e > 0 {
                    out.push((p.clone(), e));
                }
                if rest.degree().unwrap_or(0) < 2 * d {
                    break;
                }
            }
            d += 1;
        }
        if rest.degree().unwrap_or(0) >= 1 {
            let p = MonicPoly::new(rest).expect("cofactor of a monic polynomial is monic");
            match out.iter_mut().find(|(q, _)| *q == p) {
                Some((_, e)) => *e += 1,
                None => out.push((p, 1)),
            }
            out.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(a.0.cmp(&b.0)));
        }
        out
    }

    /// Multiplicities only, in the same order as [`Factorizer::factor`].
    pub fn exponents(&mut self, f: &MonicPoly) -> Vec<u32> {
        self.factor(f).into_iter().map(|(_, e)| e).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_irreducible(field: &Field, f: &MonicPoly) -> bool {
        let n = f.degree();
        let q = field.order();
        for d in 1..=n / 2 {
            for g in enumerate_monic(q, d) {
                if f.as_poly().rem(g.as_poly(), field).is_zero() {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn small_irreducibility_examples() {
        let f = Field::new(3).unwrap();
        assert!(is_irreducible(&f, &MonicPoly::from_lower(&[1, 0])).unwrap());
        assert!(!is_irreducible(&f, &MonicPoly::from_lower(&[2, 0])).unwrap());
        for c in 0..3 {
            assert!(is_irreducible(&f, &MonicPoly::from_lower(&[c])).unwrap());
        }
        assert!(matches!(
            is_irreducible(&f, &MonicPoly::one()),
            Err(PolyError::ConstantPolynomial)
        ));
    }

    #[test]
    fn rabin_matches_trial_division() {
        for q in [3u64, 5] {
            let field = Field::new(q).unwrap();
            for n in 1..=5 {
                if q == 5 && n == 5 {
                    continue;
                }
                for f in enumerate_monic(q as u32, n) {
                    assert_eq!(
                        is_irreducible(&field, &f).unwrap(),
                        brute_force_irreducible(&field, &f),
                        "{f} over F_{q}"
                    );
                }
            }
        }
    }

    #[test]
    fn quartic_without_roots_can_be_reducible() {
        // (T^2 + 1)^2 over F_3 has no roots but is reducible
        let f = Field::new(3).unwrap();
        let p = MonicPoly::from_lower(&[1, 0, 2, 0]);
        assert!(!is_irreducible(&f, &p).unwrap());
    }

    #[test]
    fn exact_counts() {
        assert_eq!(count_irreducibles_exact(3, 1), 3);
        assert_eq!(count_irreducibles_exact(3, 2), 3);
        assert_eq!(count_irreducibles_exact(5, 3), 40);
        assert_eq!(count_irreducibles_exact(3, 5), 48);
        assert_eq!(count_irreducibles_exact(5, 7), 11160);
        assert_eq!(count_irreducibles_exact(3, 4), 18);
    }

    #[test]
    fn necklace_identity_and_error_term() {
        for q in [3u64, 5, 7] {
            for n in 1..=10u32 {
                let total: u128 = (1..=n)
                    .filter(|d| n % d == 0)
                    .map(|d| d as u128 * count_irreducibles_exact(q, d))
                    .sum();
                assert_eq!(total, (q as u128).pow(n));
                let count = count_irreducibles_exact(q, n) as f64;
                let main = (q as f64).powi(n as i32) / n as f64;
                let err = 2.0 * (q as f64).powf(n as f64 / 2.0) / n as f64;
                assert!((count - main).abs() <= err, "q={q} n={n}");
                let dens = irreducible_density(q, n) * (q as f64).powi(n as i32);
                assert!((dens - count).abs() <= 1e-9 * count);
            }
        }
    }

    #[test]
    fn enumeration_matches_count() {
        for q in [3u64, 5] {
            let field = Field::new(q).unwrap();
            for n in 1..=4 {
                assert_eq!(
                    primes_of_degree(&field, n).len() as u128,
                    count_irreducibles_exact(q, n as u32)
                );
            }
        }
        let f9 = Field::new(9).unwrap();
        assert_eq!(primes_of_degree(&f9, 2).len() as u128, count_irreducibles_exact(9, 2));
    }

    #[test]
    fn mertens_values() {
        assert!((mertens_product(3, 1) - 27.0 / 8.0).abs() < 1e-12);
        let two = 27.0 / 8.0 * (1.0f64 - 1.0 / 9.0).powi(-3);
        assert!((mertens_product(3, 2) - two).abs() < 1e-12);
        assert!((mertens_product(3, 2) - 4.805).abs() < 1e-3);
        for x in 1..20 {
            assert!(mertens_product(5, x + 1) > mertens_product(5, x));
        }
    }

    #[test]
    fn factorization_reconstructs() {
        let field = Field::new(3).unwrap();
        let mut fz = Factorizer::new(&field);
        for n in 0..=5 {
            for f in enumerate_monic(3, n) {
                let parts = fz.factor(&f);
                let mut prod = MonicPoly::one();
                for (p, e) in &parts {
                    assert!(is_irreducible(&field, p).unwrap());
                    for _ in 0..*e {
                        prod = prod.mul(p, &field);
                    }
                }
                assert_eq!(prod, f);
            }
        }
    }

    #[test]
    fn mobius_values() {
        let got: Vec<i64> = (1..=12).map(mobius).collect();
        assert_eq!(got, [1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0]);
    }
}
