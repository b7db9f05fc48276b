//! `L(s, chi_P)` as the polynomial `L_{C_P}(u)`, `u = q^{-s}`; class
//! numbers; the point-counting oracle; the exact approximate functional
//! equation.
//!
//! Everything here is exact integer or rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::character::chi;
use crate::divisor::DkTable;
use crate::ffpoly::{enumerate_monic, Field, MonicPoly, PrimePoly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LFunctionError {
    #[error("the point-count oracle needs odd degree, got degree {0}")]
    EvenDegree(usize),
    #[error("the point-count oracle needs a prime field, q = {0} is a prime power")]
    PrimePowerField(u32),
    #[error("extension field of size {q}^{r} is too large for point counting")]
    ExtensionTooLarge { q: u32, r: usize },
    #[error("class number of {prime} is {value}, not a positive integer (arithmetic corruption)")]
    CorruptClassNumber { prime: String, value: String },
    #[error("L-polynomial of {0} has a_0 != 1")]
    BadConstantTerm(String),
}

pub(crate) fn q_pow(q: u32, e: usize) -> BigInt {
    num_traits::pow(BigInt::from(q), e)
}

/// Coefficients `a_0..a_d` of `L_{C_P}(u)` for a prime `P`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LPolynomial {
    prime: PrimePoly,
    q: u32,
    coeffs: Vec<i64>,
}

impl LPolynomial {
    /// Assembles an L-polynomial from stored coefficients (trailing zeros
    /// are dropped).
    pub fn from_parts(prime: PrimePoly, q: u32, mut coeffs: Vec<i64>) -> Result<Self, LFunctionError> {
        while coeffs.len() > 1 && coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.first() != Some(&1) {
            return Err(LFunctionError::BadConstantTerm(prime.to_string()));
        }
        Ok(LPolynomial { prime, q, coeffs })
    }

    pub fn prime(&self) -> &PrimePoly {
        &self.prime
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn genus(&self) -> usize {
        self.prime.genus()
    }

    /// `a_n = q^{n-g} a_{2g-n}` for all `0 <= n <= 2g` (odd-degree primes).
    pub fn satisfies_functional_equation(&self) -> bool {
        let g = self.genus();
        if !self.prime.is_imaginary() || self.coeffs.len() != 2 * g + 1 {
            return false;
        }
        (0..=2 * g).all(|n| {
            let lhs = BigInt::from(self.coeffs[n]);
            let rhs = BigInt::from(self.coeffs[2 * g - n]);
            if n >= g {
                lhs == rhs * q_pow(self.q, n - g)
            } else {
                lhs * q_pow(self.q, g - n) == rhs
            }
        })
    }

    /// `L_{C_P}(u)` at a rational point.
    pub fn eval(&self, u: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, &a| {
            acc * u + BigRational::from_integer(BigInt::from(a))
        })
    }

    /// Power sums `s_m = sum_i alpha_i^m` of the inverse roots, `m = 1..=count`,
    /// where `L(u) = prod_i (1 - alpha_i u)`.
    pub fn inverse_root_power_sums(&self, count: usize) -> Vec<BigInt> {
        // Newton: s_m = -m a_m - sum_{i=1}^{m-1} a_i s_{m-i}
        let a = |i: usize| BigInt::from(self.coeffs.get(i).copied().unwrap_or(0));
        let mut s: Vec<BigInt> = Vec::with_capacity(count + 1);
        s.push(BigInt::zero());
        for m in 1..=count {
            let mut v = -BigInt::from(m) * a(m);
            for i in 1..m {
                v -= a(i) * &s[m - i];
            }
            s.push(v);
        }
        s.remove(0);
        s
    }
}

/// `a_n = sum_{f monic, deg f = n} chi_P(f)` for `n = 0..=max_deg`.
pub fn character_sums(field: &Field, p: &PrimePoly, max_deg: usize) -> Vec<i64> {
    (0..=max_deg)
        .map(|n| {
            enumerate_monic(field.order(), n)
                .map(|f| chi(field, p, f.as_poly()).value())
                .sum()
        })
        .collect()
}

/// `l_polynomial`: odd degree `2g+1` computes `a_0..a_g` by character sums and
/// fills the rest from the functional equation; even degree `2g+2` computes
/// `a_0..a_{2g+1}` directly.
pub fn l_polynomial(field: &Field, p: &PrimePoly) -> LPolynomial {
    let q = field.order();
    let coeffs = if p.is_imaginary() {
        let g = p.genus();
        let mut c = character_sums(field, p, g);
        for n in g + 1..=2 * g {
            let v = q_pow(q, n - g) * BigInt::from(c[2 * g - n]);
            c.push(i64::try_from(v).expect("L-coefficient fits in i64"));
        }
        c
    } else {
        character_sums(field, p, p.degree() - 1)
    };
    LPolynomial::from_parts(p.clone(), q, coeffs).expect("a_0 = 1")
}

/// Every coefficient by raw character sums, no functional-equation fill-in.
pub fn l_polynomial_raw(field: &Field, p: &PrimePoly) -> LPolynomial {
    let coeffs = character_sums(field, p, p.degree() - 1);
    LPolynomial::from_parts(p.clone(), field.order(), coeffs).expect("a_0 = 1")
}

/// `l_eval_one`: `L(1, chi_P) = L_{C_P}(1/q)`.
pub fn l_eval_one(l: &LPolynomial) -> BigRational {
    l.eval(&BigRational::new(BigInt::one(), BigInt::from(l.q)))
}

/// `h_P` (odd degree) or `h_P R_P` (even degree, monic).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassNumber {
    Imaginary { h: BigInt },
    Real { h_times_regulator: BigRational },
}

impl ClassNumber {
    /// The value as a rational (`h` or `hR`).
    pub fn as_rational(&self) -> BigRational {
        match self {
            ClassNumber::Imaginary { h } => BigRational::from_integer(h.clone()),
            ClassNumber::Real { h_times_regulator } => h_times_regulator.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassNumberRecord {
    pub prime: PrimePoly,
    pub class_number: ClassNumber,
    pub l_one: BigRational,
}

impl ClassNumberRecord {
    /// Applies the class number formula to a computed L-polynomial:
    /// `L1 = h / q^g` for odd degree, `L1 = (q-1) hR / q^{g+1}` for even.
    pub fn from_lpoly(l: &LPolynomial) -> Result<Self, LFunctionError> {
        let l_one = l_eval_one(l);
        let g = l.genus();
        let corrupt = |value: String| LFunctionError::CorruptClassNumber {
            prime: l.prime.to_string(),
            value,
        };
        let class_number = if l.prime.is_imaginary() {
            let h = &l_one * BigRational::from_integer(q_pow(l.q, g));
            if !h.is_integer() || !h.is_positive() {
                return Err(corrupt(h.to_string()));
            }
            ClassNumber::Imaginary { h: h.to_integer() }
        } else {
            let hr = &l_one * BigRational::new(q_pow(l.q, g + 1), BigInt::from(l.q - 1));
            if !hr.is_positive() {
                return Err(corrupt(hr.to_string()));
            }
            ClassNumber::Real { h_times_regulator: hr }
        };
        Ok(ClassNumberRecord {
            prime: l.prime.clone(),
            class_number,
            l_one,
        })
    }
}

/// `class_number` for a prime `P`.
pub fn class_number(field: &Field, p: &PrimePoly) -> Result<ClassNumberRecord, LFunctionError> {
    ClassNumberRecord::from_lpoly(&l_polynomial(field, p))
}

/// `point_count_oracle`: the L-polynomial of `y^2 = P(x)` from affine point
/// counts over `F_{q^r}`, `r = 1..g`, Newton's identities and the functional
/// equation. Independent of character sums in F_q[T].
pub fn point_count_oracle(field: &Field, p: &PrimePoly) -> Result<LPolynomial, LFunctionError> {
    if !p.is_imaginary() {
        return Err(LFunctionError::EvenDegree(p.degree()));
    }
    let q = field.order();
    if !field.is_prime_field() {
        return Err(LFunctionError::PrimePowerField(q));
    }
    let g = p.genus();
    // s_r = q^r + 1 - N_r, N_r counting the single point at infinity
    let mut power_sums: Vec<i128> = Vec::with_capacity(g);
    for r in 1..=g {
        let size = (q as u64)
            .checked_pow(r as u32)
            .filter(|&s| s <= crate::ffpoly::MAX_FIELD_SIZE as u64)
            .ok_or(LFunctionError::ExtensionTooLarge { q, r })?;
        let ext = Field::new(size).map_err(|_| LFunctionError::ExtensionTooLarge { q, r })?;
        let coeffs: Vec<u32> = p.poly().coeffs().iter().map(|&c| ext.from_prime_field(c)).collect();
        let affine: i128 = (0..ext.order())
            .map(|x| {
                let y = coeffs.iter().rev().fold(0, |acc, &c| ext.add(ext.mul(acc, x), c));
                1 + ext.quadratic_character(y) as i128
            })
            .sum();
        power_sums.push(size as i128 + 1 - (affine + 1));
    }
    // e_j from j e_j = sum_{i=1}^j (-1)^{i-1} e_{j-i} s_i, then a_j = (-1)^j e_j
    let mut e: Vec<i128> = vec![1];
    for j in 1..=g {
        let mut acc = 0i128;
        for i in 1..=j {
            let term = e[j - i] * power_sums[i - 1];
            acc += if i % 2 == 1 { term } else { -term };
        }
        debug_assert_eq!(acc % j as i128, 0);
        e.push(acc / j as i128);
    }
    let mut coeffs: Vec<i64> = e
        .iter()
        .enumerate()
        .map(|(j, &v)| (if j % 2 == 0 { v } else { -v }) as i64)
        .collect();
    for n in g + 1..=2 * g {
        let v = q_pow(q, n - g) * BigInt::from(coeffs[2 * g - n]);
        coeffs.push(i64::try_from(v).expect("L-coefficient fits in i64"));
    }
    LPolynomial::from_parts(p.clone(), q, coeffs)
}

/// Both sides of the exact approximate functional equation
/// `L(1,chi_P)^k = sum_{deg f <= kg} chi_P(f) d_k(f) / |f|
///               + q^{-kg} sum_{deg f <= kg-1} chi_P(f) d_k(f)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AfeCheck {
    pub k: u32,
    pub lhs: BigRational,
    pub main_sum: BigRational,
    pub dual_sum: BigRational,
    /// `sum_{deg f = n} chi_P(f) d_k(f)` for `n = 0..=kg`, from divisor counts.
    pub weighted_sums: Vec<BigInt>,
    /// Whether those sums equal the coefficients of `L(u)^k`.
    pub coefficients_match: bool,
}

impl AfeCheck {
    pub fn holds(&self) -> bool {
        self.lhs == &self.main_sum + &self.dual_sum && self.coefficients_match
    }
}

/// `approx_functional_equation_check` for `P` of odd degree.
pub fn approx_functional_equation_check(field: &Field, p: &PrimePoly, k: u32) -> Result<AfeCheck, LFunctionError> {
    let table = DkTable::new(field, k as usize * p.genus());
    approx_functional_equation_check_with(field, &table, p, k)
}

/// As [`approx_functional_equation_check`], reusing a precomputed
/// factorization table covering degrees up to `k g`.
pub fn approx_functional_equation_check_with(
    field: &Field,
    table: &DkTable,
    p: &PrimePoly,
    k: u32,
) -> Result<AfeCheck, LFunctionError> {
    if !p.is_imaginary() {
        return Err(LFunctionError::EvenDegree(p.degree()));
    }
    let q = field.order();
    let l = l_polynomial(field, p);
    let kg = k as usize * p.genus();
    assert!(table.max_degree() >= kg, "divisor table too small");

    let weighted_sums: Vec<BigInt> = (0..=kg)
        .map(|n| {
            enumerate_monic(q, n)
                .enumerate()
                .map(|(i, f)| {
                    let c = chi(field, p, f.as_poly()).value();
                    BigInt::from(c) * table.d_k(n, i, k)
                })
                .sum()
        })
        .collect();

    let main_sum = weighted_sums
        .iter()
        .enumerate()
        .map(|(n, b)| BigRational::new(b.clone(), q_pow(q, n)))
        .fold(BigRational::zero(), |a, b| a + b);
    let dual_total: BigInt = weighted_sums.iter().take(kg).sum();
    let dual_sum = BigRational::new(dual_total, q_pow(q, kg));
    let lhs = num_traits::pow(l_eval_one(&l), k as usize);

    // coefficients of L(u)^k up to degree kg
    let mut power = vec![BigInt::one()];
    for _ in 0..k {
        let mut next = vec![BigInt::zero(); (power.len() + l.degree()).min(kg + 1)];
        for (i, a) in power.iter().enumerate() {
            for (j, &b) in l.coeffs().iter().enumerate() {
                if i + j < next.len() {
                    next[i + j] += a * b;
                }
            }
        }
        power = next;
    }
    power.resize(kg + 1, BigInt::zero());
    let coefficients_match = power == weighted_sums;

    Ok(AfeCheck {
        k,
        lhs,
        main_sum,
        dual_sum,
        weighted_sums,
        coefficients_match,
    })
}

/// The prime `T^3 + 2T + 1` over F_3 used in worked examples.
pub fn worked_example_prime(field: &Field) -> PrimePoly {
    PrimePoly::new(field, MonicPoly::from_lower(&[1, 2, 0])).expect("irreducible over F_3")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffpoly::primes_of_degree;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn worked_example() {
        let f = Field::new(3).unwrap();
        let p = worked_example_prime(&f);
        let l = l_polynomial(&f, &p);
        assert_eq!(l.coeffs(), &[1, 3, 3]);
        assert_eq!(l_eval_one(&l), rat(7, 3));
        let rec = class_number(&f, &p).unwrap();
        assert_eq!(rec.class_number, ClassNumber::Imaginary { h: 7.into() });
        let oracle = point_count_oracle(&f, &p).unwrap();
        assert_eq!(oracle, l);
    }

    #[test]
    fn linear_prime_has_trivial_l_polynomial() {
        let f = Field::new(5).unwrap();
        for p in primes_of_degree(&f, 1) {
            let l = l_polynomial(&f, &p);
            assert_eq!(l.coeffs(), &[1]);
            assert_eq!(
                class_number(&f, &p).unwrap().class_number,
                ClassNumber::Imaginary { h: 1.into() }
            );
            assert_eq!(point_count_oracle(&f, &p).unwrap(), l);
        }
    }

    #[test]
    fn even_degree_record_is_positive_rational() {
        let f = Field::new(5).unwrap();
        for p in primes_of_degree(&f, 4).iter().take(20) {
            let l = l_polynomial(&f, p);
            assert!(l.degree() <= 3);
            let rec = ClassNumberRecord::from_lpoly(&l).unwrap();
            let ClassNumber::Real { h_times_regulator } = &rec.class_number else {
                panic!("expected real case");
            };
            assert!(h_times_regulator.is_positive());
            // L1 = (q - 1) |P|^{-1/2} hR with |P|^{1/2} = q^2
            assert_eq!(rec.l_one, h_times_regulator * rat(4, 25));
            assert!(matches!(point_count_oracle(&f, p), Err(LFunctionError::EvenDegree(4))));
        }
    }

    #[test]
    fn raw_coefficients_satisfy_functional_equation() {
        let f = Field::new(3).unwrap();
        for n in [3, 5] {
            for p in primes_of_degree(&f, n) {
                let raw = l_polynomial_raw(&f, &p);
                assert_eq!(raw.degree(), 2 * p.genus(), "orthogonality truncates");
                assert!(raw.satisfies_functional_equation(), "{p}");
                assert_eq!(raw, l_polynomial(&f, &p));
            }
        }
    }

    #[test]
    fn afe_worked_example_and_degenerate_genus() {
        let f = Field::new(3).unwrap();
        let p = worked_example_prime(&f);
        let check = approx_functional_equation_check(&f, &p, 1).unwrap();
        assert_eq!(check.main_sum, rat(2, 1));
        assert_eq!(check.dual_sum, rat(1, 3));
        assert!(check.holds());
        let lin = &primes_of_degree(&f, 1)[0];
        for k in 1..=3 {
            let c = approx_functional_equation_check(&f, lin, k).unwrap();
            assert_eq!(c.lhs, rat(1, 1));
            assert_eq!(c.dual_sum, rat(0, 1));
            assert!(c.holds());
        }
    }

    #[test]
    fn power_sums_of_worked_example() {
        let f = Field::new(3).unwrap();
        let l = l_polynomial(&f, &worked_example_prime(&f));
        // 1 + 3u + 3u^2: s_1 = -3, s_2 = 9 - 6 = 3
        assert_eq!(l.inverse_root_power_sums(2), vec![BigInt::from(-3), BigInt::from(3)]);
    }

    #[test]
    fn oracle_rejects_prime_power_field() {
        let f = Field::new(9).unwrap();
        let p = primes_of_degree(&f, 3).remove(0);
        assert!(matches!(
            point_count_oracle(&f, &p),
            Err(LFunctionError::PrimePowerField(9))
        ));
        // the character-sum route still works
        assert!(l_polynomial(&f, &p).satisfies_functional_equation());
    }

    #[test]
    fn corrupt_class_number_detected() {
        let f = Field::new(3).unwrap();
        let p = worked_example_prime(&f);
        let bad = LPolynomial::from_parts(p, 3, vec![1, 3, 2]).unwrap();
        assert!(matches!(
            ClassNumberRecord::from_lpoly(&bad),
            Err(LFunctionError::CorruptClassNumber { .. })
        ));
    }
}
