//! Generalized divisor functions `d_k`, `d_z`, their degree-wise sums, and
//! the constants `a_k = sum_f d_k(f^2)/|f|^2`, `B_k`, `zeta_A(s)`.
//!
//! Degree-wise sums of a multiplicative `h` whose value on prime powers
//! depends only on the exponent are coefficients of
//! `prod_d F(u^d)^{|P_d|}`, `F(t) = sum_r h(P^r) t^r`; the powers are taken
//! with the J.C.P. Miller recurrence so no enumeration is needed.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::ffpoly::{enumerate_monic, irreducible_density, mobius, Factorizer, Field, MonicPoly};

/// Binomial coefficient `C(n, r)`.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `d_k(P^r) = (k+r-1)! / ((k-1)! r!)`.
pub fn dk_prime_power(k: u32, r: u32) -> u128 {
    if k == 0 {
        return u128::from(r == 0);
    }
    binomial((k + r - 1) as u64, r as u64)
}

/// `d_z(Q^a) = Gamma(z+a) / (Gamma(z) a!) = prod_{j<a} (z+j) / a!`.
pub fn dz_prime_power(z: Complex64, a: u32) -> Complex64 {
    (0..a).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z + j as f64) / (j + 1) as f64)
}

/// `d_k` from the exponent pattern of a factorization.
pub fn d_k_from_exponents(exponents: &[u32], k: u32) -> u128 {
    exponents.iter().map(|&e| dk_prime_power(k, e)).product()
}

/// `d_z` from the exponent pattern of a factorization.
pub fn d_z_from_exponents(exponents: &[u32], z: Complex64) -> Complex64 {
    exponents
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &e| acc * dz_prime_power(z, e))
}

/// Number of ordered factorizations of `f` into `k` monic factors.
pub fn d_k(field: &Field, f: &MonicPoly, k: u32) -> u128 {
    d_k_from_exponents(&Factorizer::new(field).exponents(f), k)
}

/// The generalized divisor function at complex order `z`.
pub fn d_z(field: &Field, f: &MonicPoly, z: Complex64) -> Complex64 {
    d_z_from_exponents(&Factorizer::new(field).exponents(f), z)
}

/// Exponent patterns of every monic polynomial up to a degree, indexed by
/// `(degree, lexicographic index)`.
#[derive(Clone, Debug)]
pub struct DkTable {
    exponents: Vec<Vec<Vec<u32>>>,
}

impl DkTable {
    pub fn new(field: &Field, max_degree: usize) -> Self {
        let mut fz = Factorizer::new(field);
        let exponents = (0..=max_degree)
            .map(|n| enumerate_monic(field.order(), n).map(|f| fz.exponents(&f)).collect())
            .collect();
        DkTable { exponents }
    }

    pub fn max_degree(&self) -> usize {
        self.exponents.len() - 1
    }

    pub fn exponents(&self, degree: usize, index: usize) -> &[u32] {
        &self.exponents[degree][index]
    }

    pub fn d_k(&self, degree: usize, index: usize, k: u32) -> BigInt {
        BigInt::from(d_k_from_exponents(self.exponents(degree, index), k))
    }

    /// Whether the polynomial is a perfect square.
    pub fn is_square(&self, degree: usize, index: usize) -> bool {
        self.exponents(degree, index).iter().all(|e| e % 2 == 0)
    }
}

/// `|P_n|` exactly, with no size limit.
pub fn count_irreducibles_big(q: u64, n: u32) -> BigInt {
    let mut total = BigInt::zero();
    for d in (1..=n).filter(|d| n.is_multiple_of(*d)) {
        total += mobius(d as u64) * num_traits::pow(BigInt::from(q), (n / d) as usize);
    }
    total / n
}

/// Coefficients `g_0..g_{len-1}` of `F^e` for a series with `F(0) = 1`.
fn series_power_exact(f: &[BigInt], e: &BigInt, len: usize) -> Vec<BigInt> {
    let mut g = vec![BigInt::zero(); len];
    if len == 0 {
        return g;
    }
    g[0] = BigInt::one();
    let e1 = e + 1;
    for m in 1..len {
        let mut acc = BigInt::zero();
        for j in 1..=m.min(f.len() - 1) {
            if f[j].is_zero() || g[m - j].is_zero() {
                continue;
            }
            let w = &e1 * j - m;
            acc += w * &f[j] * &g[m - j];
        }
        debug_assert!((&acc % m).is_zero());
        g[m] = acc / m;
    }
    g
}

/// `sum_{deg f = n} h(f)` for `n = 0..=max_n`, with `h` multiplicative and
/// `h(P^r) = prime_power(r)` for every prime `P`.
pub fn degree_sums_exact(q: u64, max_n: usize, prime_power: impl Fn(u32) -> BigInt) -> Vec<BigInt> {
    let mut total = vec![BigInt::zero(); max_n + 1];
    total[0] = BigInt::one();
    for d in 1..=max_n {
        let len = max_n / d + 1;
        let local: Vec<BigInt> = (0..len as u32).map(&prime_power).collect();
        debug_assert!(local[0].is_one());
        let power = series_power_exact(&local, &count_irreducibles_big(q, d as u32), len);
        let mut next = vec![BigInt::zero(); max_n + 1];
        for (i, a) in total.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (r, b) in power.iter().enumerate() {
                let idx = i + r * d;
                if idx > max_n {
                    break;
                }
                next[idx] += a * b;
            }
        }
        total = next;
    }
    total
}

/// `sum_{deg f = n} d_k(f^2)` for `n = 0..=max_n`.
pub fn dk_square_sums(q: u64, k: u32, max_n: usize) -> Vec<BigInt> {
    degree_sums_exact(q, max_n, |r| BigInt::from(dk_prime_power(k, 2 * r)))
}

/// `sum_dk_squares`: `sum_{f monic, deg f = n} d_k(f^2)`.
pub fn sum_dk_squares(q: u64, k: u32, n: usize) -> BigInt {
    dk_square_sums(q, k, n).swap_remove(n)
}

/// `sum_{f monic, deg f = n} d_k(f)`.
pub fn sum_dk(q: u64, k: u32, n: usize) -> BigInt {
    degree_sums_exact(q, n, |r| BigInt::from(dk_prime_power(k, r))).swap_remove(n)
}

/// Scaled complex degree sums `q^{-2n} sum_{deg f = n} d_z(f^2)`,
/// `n = 0..=max_n`, in floating point.
pub fn dz_square_sums_scaled(q: u64, z: Complex64, max_n: usize) -> Vec<Complex64> {
    let qf = q as f64;
    let mut total = vec![Complex64::zero(); max_n + 1];
    total[0] = Complex64::one();
    for d in 1..=max_n {
        let len = max_n / d + 1;
        let density = irreducible_density(q, d as u32);
        // f_j = d_z(P^{2j}) q^{-2dj};  N f_j = density q^{-d(2j-1)} d_z(P^{2j})
        let coeff: Vec<Complex64> = (0..len as u32).map(|j| dz_prime_power(z, 2 * j)).collect();
        let f: Vec<Complex64> = (0..len).map(|j| coeff[j] * qf.powi(-2 * (d * j) as i32)).collect();
        let nf: Vec<Complex64> = (0..len)
            .map(|j| coeff[j] * density * qf.powf(-(d as f64) * ((2 * j) as f64 - 1.0)))
            .collect();
        let exact_count = (qf.powi(d as i32) < 1e15).then(|| crate::ffpoly::count_irreducibles_exact(q, d as u32));
        let g = match exact_count {
            // Miller's recurrence cancels once the series outgrows the exponent
            Some(count) if (count as usize) < len => series_power_binary(&f, count, len),
            _ => {
                let mut g = vec![Complex64::zero(); len];
                g[0] = Complex64::one();
                for m in 1..len {
                    let mut acc = Complex64::zero();
                    for j in 1..=m {
                        acc += (nf[j] * j as f64 + f[j] * (j as f64 - m as f64)) * g[m - j];
                    }
                    g[m] = acc / m as f64;
                }
                g
            }
        };
        let mut next = vec![Complex64::zero(); max_n + 1];
        for (i, a) in total.iter().enumerate() {
            for (r, b) in g.iter().enumerate() {
                let idx = i + r * d;
                if idx > max_n {
                    break;
                }
                next[idx] += a * b;
            }
        }
        total = next;
    }
    total
}

fn series_mul_truncated(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::zero(); len];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_power_binary(f: &[Complex64], mut e: u128, len: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::zero(); len];
    acc[0] = Complex64::one();
    let mut base = f.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            acc = series_mul_truncated(&acc, &base, len);
        }
        e >>= 1;
        if e > 0 {
            base = series_mul_truncated(&base, &base, len);
        }
    }
    acc
}

/// `zeta_A(s) = 1 / (1 - q^{1-s})`.
pub fn zeta_a(q: u64, s: u32) -> BigRational {
    assert!(s >= 2, "zeta_A(s) needs s >= 2 here");
    let qs = num_traits::pow(BigInt::from(q), (s - 1) as usize);
    BigRational::new(qs.clone(), qs - 1)
}

/// Truncated `a_k` for a positive integer `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorConstants {
    pub q: u64,
    pub k: u32,
    /// Truncation degree `D`.
    pub degree: usize,
    /// `sum_{deg f <= D} d_k(f^2) / |f|^2`.
    pub a_trunc: BigRational,
    /// Upper bound on the omitted terms.
    pub tail_bound: f64,
}

/// Truncated `a_z` for complex `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexDivisorConstants {
    pub q: u64,
    pub z: Complex64,
    pub degree: usize,
    pub a_trunc: Complex64,
    pub tail_bound: f64,
}

/// Tail bound from the growth of the degree-`n` terms,
/// `term_n <= C n^{K-1} q^{-n}` with `K = k(k+1)/2` and `C` the largest
/// observed ratio over `1 <= n <= D`.
///
/// `scaled_terms[n]` is `q^{-n} sum_{deg f = n} d_k(f^2)` (so `q^{-n}` times
/// the actual term).
fn growth_tail_bound(q: u64, k: u32, scaled_terms: &[f64], degree: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let exponent = (k * (k + 1) / 2 - 1) as i32;
    let qf = q as f64;
    let c = (1..=degree.max(1))
        .map(|n| scaled_terms[n] / (n as f64).powi(exponent))
        .fold(0.0f64, f64::max);
    // sum_{n > D} n^e q^{-n}, with a geometric bound on what is left
    let mut sum = 0.0;
    let mut n = degree + 1;
    loop {
        let term = (n as f64).powi(exponent) * qf.powi(-(n as i32));
        let ratio = ((n + 1) as f64 / n as f64).powi(exponent) / qf;
        sum += term;
        if ratio < 0.9 && term * ratio / (1.0 - ratio) <= 1e-18 * sum.max(f64::MIN_POSITIVE) {
            sum += term * ratio / (1.0 - ratio);
            break;
        }
        if term == 0.0 {
            break;
        }
        n += 1;
    }
    c * sum * (1.0 + 1e-12)
}

/// `a_k_truncated` for integer `k`: exact partial sum to degree `D` plus a
/// tail bound.
pub fn a_k_truncated(q: u64, k: u32, degree: usize) -> DivisorConstants {
    let sums = dk_square_sums(q, k, degree.max(1));
    let mut a_trunc = BigRational::zero();
    let mut scaled = Vec::with_capacity(degree + 1);
    for (n, s) in sums.iter().enumerate() {
        let qn = num_traits::pow(BigInt::from(q), n);
        if n <= degree {
            a_trunc += BigRational::new(s.clone(), &qn * &qn);
        }
        scaled.push(BigRational::new(s.clone(), qn).to_f64().unwrap_or(f64::INFINITY));
    }
    DivisorConstants {
        q,
        k,
        degree,
        a_trunc,
        tail_bound: growth_tail_bound(q, k, &scaled, degree),
    }
}

/// `B_k`: `a_k` truncated at degree `floor(k g / 2)`.
pub fn b_k(q: u64, k: u32, genus: usize) -> BigRational {
    a_k_truncated(q, k, k as usize * genus / 2).a_trunc
}

/// `a_z_truncated` for complex `z`. The tail is bounded with the integer
/// order `ceil(|z|)`, since `|d_z(f)| <= d_{|z|}(f)`.
pub fn a_z_truncated(q: u64, z: Complex64, degree: usize) -> ComplexDivisorConstants {
    let terms = dz_square_sums_scaled(q, z, degree);
    let majorant_degree = degree.max(1);
    let a_trunc = crate::parallel::pairwise_sum_complex(&terms);
    let k = z.norm().ceil() as u32;
    let tail_bound = if k == 0 {
        0.0
    } else {
        let majorant = dz_square_sums_scaled(q, Complex64::new(k as f64, 0.0), majorant_degree);
        let qf = q as f64;
        let scaled: Vec<f64> = majorant
            .iter()
            .enumerate()
            .map(|(n, t)| t.re * qf.powi(n as i32))
            .collect();
        growth_tail_bound(q, k, &scaled, degree)
    };
    ComplexDivisorConstants {
        q,
        z,
        degree,
        a_trunc,
        tail_bound,
    }
}

/// Smallest truncation degree whose tail bound is below `tol`.
pub fn default_truncation(q: u64, z: Complex64, tol: f64) -> usize {
    let k = z.norm().ceil() as u32;
    if k == 0 {
        return 0;
    }
    const MAX_DEGREE: usize = 2000;
    let majorant = dz_square_sums_scaled(q, Complex64::new(k as f64, 0.0), MAX_DEGREE);
    let qf = q as f64;
    let scaled: Vec<f64> = majorant
        .iter()
        .enumerate()
        .map(|(n, t)| t.re * qf.powi(n as i32))
        .collect();
    // the bound is not monotone in D (C can grow), so scan
    (1..MAX_DEGREE)
        .find(|&d| growth_tail_bound(q, k, &scaled, d) < tol)
        .unwrap_or(MAX_DEGREE)
}

/// `a_z` truncated where the tail bound drops below `1e-12`.
pub fn a_z_default(q: u64, z: Complex64) -> ComplexDivisorConstants {
    a_z_truncated(q, z, default_truncation(q, z, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffpoly::{enumerate_monic, Factorizer};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn prime_power_values() {
        assert_eq!(dk_prime_power(2, 2), 3);
        assert_eq!(dk_prime_power(3, 1), 3);
        assert_eq!(dk_prime_power(1, 7), 1);
        let half = dz_prime_power(Complex64::new(0.5, 0.0), 2);
        assert!((half.re - 0.375).abs() < 1e-15 && half.im == 0.0);
        let z = Complex64::new(0.3, -1.2);
        assert_eq!(dz_prime_power(z, 1), z);
    }

    /// Counts ordered k-tuples of monic factors by brute force.
    fn ordered_factorizations(field: &Field, f: &MonicPoly, k: u32) -> u128 {
        if k == 1 {
            return 1;
        }
        let mut count = 0;
        for d in 0..=f.degree() {
            for g in enumerate_monic(field.order(), d) {
                let (quot, rem) = f.as_poly().div_rem(g.as_poly(), field);
                if rem.is_zero() {
                    let quot = MonicPoly::new(quot).unwrap();
                    count += ordered_factorizations(field, &quot, k - 1);
                }
            }
        }
        count
    }

    #[test]
    fn d_k_matches_brute_force() {
        let field = Field::new(3).unwrap();
        for n in 0..=5 {
            for f in enumerate_monic(3, n) {
                for k in 1..=3 {
                    assert_eq!(d_k(&field, &f, k), ordered_factorizations(&field, &f, k), "{f}");
                }
            }
        }
    }

    #[test]
    fn d_k_is_multiplicative() {
        let field = Field::new(3).unwrap();
        let polys: Vec<MonicPoly> = (0..=2).flat_map(|d| enumerate_monic(3, d)).collect();
        for f in &polys {
            for h in &polys {
                let coprime = f.as_poly().gcd(h.as_poly(), &field).degree() == Some(0);
                if !coprime {
                    continue;
                }
                for k in 1..=3 {
                    assert_eq!(d_k(&field, &f.mul(h, &field), k), d_k(&field, f, k) * d_k(&field, h, k));
                }
            }
        }
    }

    #[test]
    fn d_z_at_two_is_d_2() {
        let field = Field::new(3).unwrap();
        let mut fz = Factorizer::new(&field);
        for n in 0..=6 {
            for f in enumerate_monic(3, n) {
                let e = fz.exponents(&f);
                let dz = d_z_from_exponents(&e, Complex64::new(2.0, 0.0));
                assert_eq!(dz, Complex64::new(d_k_from_exponents(&e, 2) as f64, 0.0));
            }
        }
    }

    #[test]
    fn sum_dk_squares_values() {
        assert_eq!(sum_dk_squares(3, 2, 0), BigInt::one());
        for q in [3u64, 5, 7] {
            assert_eq!(sum_dk_squares(q, 2, 1), BigInt::from(3 * q));
        }
        assert_eq!(sum_dk_squares(3, 2, 2), BigInt::from(51));
    }

    #[test]
    fn degree_sums_match_enumeration() {
        let field = Field::new(3).unwrap();
        let mut fz = Factorizer::new(&field);
        for n in 0..=6 {
            let mut brute = [0u128; 4];
            for f in enumerate_monic(3, n) {
                let e: Vec<u32> = fz.exponents(&f).into_iter().map(|x| 2 * x).collect();
                for k in 1..=3u32 {
                    brute[k as usize] += d_k_from_exponents(&e, k);
                }
            }
            for k in 1..=3u32 {
                assert_eq!(sum_dk_squares(3, k, n), BigInt::from(brute[k as usize]), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn plain_divisor_sums_are_binomial() {
        for k in 1..=3u32 {
            for n in 0..=10usize {
                let expected = BigInt::from(binomial((n + k as usize - 1) as u64, (k - 1) as u64))
                    * num_traits::pow(BigInt::from(5), n);
                assert_eq!(sum_dk(5, k, n), expected);
            }
        }
    }

    #[test]
    fn zeta_values() {
        assert_eq!(zeta_a(3, 2), rat(3, 2));
        assert_eq!(zeta_a(3, 4), rat(27, 26));
        let series: BigRational = (0..40)
            .map(|n| rat(1, 3i64.pow(n)))
            .fold(BigRational::zero(), |a, b| a + b);
        assert!(((zeta_a(3, 2) - series).to_f64().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn a_one_partial_sums_are_geometric() {
        for q in [3u64, 5] {
            for d in [0usize, 3, 10] {
                let c = a_k_truncated(q, 1, d);
                let limit = BigRational::new(q.into(), (q - 1).into());
                let exact_tail = (limit - &c.a_trunc).to_f64().unwrap();
                assert!(exact_tail >= 0.0 && exact_tail <= c.tail_bound);
                assert!(c.tail_bound <= exact_tail * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn truncations_are_monotone() {
        let mut prev = BigRational::zero();
        for d in 0..12 {
            let c = a_k_truncated(5, 3, d);
            assert!(c.a_trunc >= prev);
            prev = c.a_trunc;
        }
    }

    #[test]
    fn complex_truncation_matches_exact_at_integers() {
        for q in [3u64, 5] {
            for k in 1..=3u32 {
                let exact = a_k_truncated(q, k, 20).a_trunc.to_f64().unwrap();
                let approx = a_z_truncated(q, Complex64::new(k as f64, 0.0), 20).a_trunc;
                assert!((approx.re - exact).abs() < 1e-12 * exact, "q={q} k={k}");
                assert!(approx.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_order_is_one() {
        let c = a_z_truncated(5, Complex64::zero(), 10);
        assert_eq!(c.a_trunc, Complex64::one());
        assert_eq!(c.tail_bound, 0.0);
        assert_eq!(a_k_truncated(5, 0, 10).a_trunc, BigRational::one());
    }

    #[test]
    fn complex_conjugate_symmetry() {
        let z = Complex64::new(0.5, 0.7);
        let a = a_z_truncated(5, z, 30).a_trunc;
        let b = a_z_truncated(5, z.conj(), 30).a_trunc;
        assert_eq!(a.conj(), b);
    }

    #[test]
    fn default_truncation_meets_tolerance() {
        let z = Complex64::new(0.5, 0.5);
        let c = a_z_default(5, z);
        assert!(c.tail_bound < 1e-12);
        let k12 = default_truncation(3, Complex64::new(12.0, 0.0), 1e-12);
        assert!(k12 > 100 && k12 < 2000, "{k12}");
    }
}
