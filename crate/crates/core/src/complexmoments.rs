//! Complex moments `L(1, chi_P)^z` through the truncated Euler product.
//!
//! For a truncation `M` far beyond what prime enumeration allows, the
//! numbers `c_d = sum_{deg Q = d} chi_P(Q)` are recovered from the
//! L-polynomial itself: comparing `ln L(u)` with its Euler product gives
//! `-s_m = sum_{d | m} d C_d(m/d)` where `s_m` are the inverse-root power sums,
//! `C_d(j) = c_d` for odd `j` and `e_d = #{deg Q = d, Q != P}` for even `j`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::character::chi;
use crate::divisor::{a_z_truncated, d_z_from_exponents, default_truncation, DkTable};
use crate::ffpoly::{count_irreducibles_exact, count_irreducibles_f64, primes_of_degree, Field, PrimePoly};
use crate::lfunction::LPolynomial;
use crate::moments::{format_complex, FamilyTable, TARGET_TAIL_TOLERANCE};
use crate::parallel::{map_slice, pairwise_sum, pairwise_sum_complex};

/// The truncation constant used when none is given.
pub const DEFAULT_N: f64 = 26.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexMomentError {
    #[error("truncation constant N = {0} must exceed 4")]
    SmallN(f64),
    #[error("|z| = {norm} exceeds the admissible radius {radius:.3e}; pass the override to run anyway")]
    OutOfRange { norm: f64, radius: f64 },
    #[error("degree n must be at least 1")]
    ZeroDegree,
    #[error("family table is for q = {got_q}, n = {got_n}, expected q = {q}, n = {n}")]
    TableMismatch { q: u64, n: usize, got_q: u64, got_n: usize },
}

/// `|z| <= log|P| / (260 log_2|P| ln log_2|P|)` with `log` base `q`, `|P| = q^n`.
pub fn admissible_radius(q: u64, n: usize) -> f64 {
    let log2_p = n as f64 * (q as f64).log2();
    n as f64 / (260.0 * log2_p * log2_p.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMomentConfig {
    pub q: u64,
    pub n: usize,
    pub z: Complex64,
    pub big_n: f64,
    /// Euler product truncation degree `M = ceil(N log_q n)`, at least 1.
    pub truncation: u32,
    /// `B = N/2 - 2`.
    pub b: f64,
    /// Outside the admissible radius (only allowed with the override).
    pub exploratory: bool,
}

impl ComplexMomentConfig {
    pub fn new(
        q: u64,
        n: usize,
        z: Complex64,
        big_n: f64,
        allow_out_of_range: bool,
    ) -> Result<Self, ComplexMomentError> {
        if big_n.is_nan() || big_n <= 4.0 {
            return Err(ComplexMomentError::SmallN(big_n));
        }
        if n == 0 {
            return Err(ComplexMomentError::ZeroDegree);
        }
        let radius = admissible_radius(q, n);
        let exploratory = z.norm() > radius;
        if exploratory && !allow_out_of_range {
            return Err(ComplexMomentError::OutOfRange { norm: z.norm(), radius });
        }
        let log_q_n = (n as f64).ln() / (q as f64).ln();
        let truncation = ((big_n * log_q_n).ceil() as u32).max(1);
        Ok(ComplexMomentConfig {
            q,
            n,
            z,
            big_n,
            truncation,
            b: big_n / 2.0 - 2.0,
            exploratory,
        })
    }

    /// The same run at another exponent.
    pub fn with_z(&self, z: Complex64) -> Self {
        ComplexMomentConfig { z, ..*self }
    }

    pub fn with_truncation(&self, truncation: u32) -> Self {
        ComplexMomentConfig {
            truncation: truncation.max(1),
            ..*self
        }
    }
}

/// `c_d` and `e_d` for `d = 1..=M`, from the L-polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeCharacterSums {
    /// `sum_{deg Q = d} chi(Q)`, index `d - 1`.
    pub sums: Vec<BigInt>,
    /// `#{Q : deg Q = d, chi(Q) != 0}`, index `d - 1`.
    pub nonzero: Vec<BigInt>,
}

pub fn prime_character_sums(l: &LPolynomial, truncation: u32) -> PrimeCharacterSums {
    let m_max = truncation as usize;
    let q = l.q() as u64;
    let deg_p = l.prime().degree();
    let nonzero: Vec<BigInt> = (1..=m_max)
        .map(|d| BigInt::from(count_irreducibles_exact(q, d as u32)) - BigInt::from((d == deg_p) as u8))
        .collect();
    let power_sums = l.inverse_root_power_sums(m_max);
    let mut sums: Vec<BigInt> = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut rest = -power_sums[m - 1].clone();
        for d in (1..m).filter(|d| m % d == 0) {
            let c = if (m / d) % 2 == 1 {
                &sums[d - 1]
            } else {
                &nonzero[d - 1]
            };
            rest -= BigInt::from(d) * c;
        }
        debug_assert!((&rest % BigInt::from(m)).is_zero());
        sums.push(rest / BigInt::from(m));
    }
    PrimeCharacterSums { sums, nonzero }
}

fn log_from_sign_counts(q: u64, plus_minus: impl Iterator<Item = (usize, f64, f64)>) -> f64 {
    let terms: Vec<f64> = plus_minus
        .map(|(d, plus, minus)| {
            let y = (q as f64).powi(-(d as i32));
            -(plus * (-y).ln_1p() + minus * y.ln_1p())
        })
        .collect();
    pairwise_sum(&terms)
}

/// `-sum_{deg Q <= M} ln(1 - chi_P(Q)/|Q|)` via the L-polynomial.
pub fn log_l_truncated(l: &LPolynomial, truncation: u32) -> f64 {
    let sums = prime_character_sums(l, truncation);
    let q = l.q() as u64;
    log_from_sign_counts(
        q,
        sums.sums.iter().zip(&sums.nonzero).enumerate().map(|(i, (c, e))| {
            let plus: BigInt = (e + c) / 2;
            let minus: BigInt = (e - c) / 2;
            let (plus, minus) = (plus.to_f64().expect("finite"), minus.to_f64().expect("finite"));
            (i + 1, plus, minus)
        }),
    )
}

/// The same sum by enumerating the primes `Q` (feasible only for small `M`).
pub fn log_l_truncated_direct(field: &Field, p: &PrimePoly, truncation: u32) -> f64 {
    let q = field.order() as u64;
    log_from_sign_counts(
        q,
        (1..=truncation as usize).map(|d| {
            let (mut plus, mut minus) = (0u64, 0u64);
            for prime in primes_of_degree(field, d) {
                match chi(field, p, prime.poly().as_poly()).value() {
                    1 => plus += 1,
                    -1 => minus += 1,
                    _ => {}
                }
            }
            (d, plus as f64, minus as f64)
        }),
    )
}

/// `exp(z * log_l_truncated)`; the Euler factors are positive reals, so the
/// principal logarithm is unambiguous.
pub fn l_pow_z(l: &LPolynomial, z: Complex64, truncation: u32) -> Complex64 {
    (z * log_l_truncated(l, truncation)).exp()
}

/// Rankin bound on `sum_{|f| > q^c, Q | f => deg Q <= M} d_k(f)/|f|`:
/// `q^{-c alpha} prod_{d <= M} (1 - q^{-d(1-alpha)})^{-k |P_d|}` with
/// `alpha = min(1/M, 1/2)` and `k = ceil(|z|) + 1`.
pub fn rankin_tail_bound(q: u64, z: Complex64, truncation: u32, cutoff_degree: f64) -> f64 {
    let m = truncation.max(1);
    let alpha = (1.0 / m as f64).min(0.5);
    let k = z.norm().ceil() + 1.0;
    let log_product: f64 = (1..=m)
        .map(|d| {
            let x = (q as f64).powf(-(d as f64) * (1.0 - alpha));
            -k * count_irreducibles_f64(q, d) * (-x).ln_1p()
        })
        .sum();
    (log_product - cutoff_degree * alpha * (q as f64).ln()).exp()
}

/// Square / non-square split of the family average of
/// `sum_{deg f <= floor(n/3)} d_z(f) chi_P(f) / |f|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareSplit {
    pub cutoff_degree: usize,
    pub s1: Complex64,
    pub s2: Complex64,
}

impl SquareSplit {
    pub fn ratio(&self) -> f64 {
        self.s2.norm() / self.s1.norm()
    }
}

pub fn square_split(field: &Field, table: &FamilyTable, z: Complex64) -> SquareSplit {
    let cutoff = table.n / 3;
    let divisors = DkTable::new(field, cutoff);
    let q = field.order();
    let count = table.len() as f64;
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for deg in 0..=cutoff {
        for (idx, f) in crate::ffpoly::enumerate_monic(q, deg).enumerate() {
            let dz = d_z_from_exponents(divisors.exponents(deg, idx), z);
            let chi_sum: i64 = map_slice(&table.records, |r| chi(field, r.prime(), f.as_poly()).value())
                .into_iter()
                .sum();
            let term = dz * (chi_sum as f64 / count) / (q as f64).powi(deg as i32);
            if divisors.is_square(deg, idx) {
                s1.push(term);
            } else {
                s2.push(term);
            }
        }
    }
    SquareSplit {
        cutoff_degree: cutoff,
        s1: pairwise_sum_complex(&s1),
        s2: pairwise_sum_complex(&s2),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMomentReport {
    pub q: u64,
    pub n: usize,
    pub z: String,
    pub big_n: f64,
    pub truncation: u32,
    pub b: f64,
    pub admissible_radius: f64,
    pub exploratory: bool,
    pub prime_count: usize,
    pub average: Complex64,
    pub target: Complex64,
    pub relative_error: f64,
    pub target_truncation: usize,
    pub target_tail_bound: f64,
    /// `(log_q |P|)^{-B}`, the multiplicative error scale of the truncation.
    pub truncation_envelope: f64,
    pub split: SquareSplit,
    pub split_ratio: f64,
    pub rankin_tail_bound: f64,
}

fn check_table(config: &ComplexMomentConfig, table: &FamilyTable) -> Result<(), ComplexMomentError> {
    if table.q != config.q || table.n != config.n {
        return Err(ComplexMomentError::TableMismatch {
            q: config.q,
            n: config.n,
            got_q: table.q,
            got_n: table.n,
        });
    }
    Ok(())
}

/// Family average of `L_pow_z` alone.
pub fn family_average(config: &ComplexMomentConfig, table: &FamilyTable) -> Result<Complex64, ComplexMomentError> {
    check_table(config, table)?;
    let logs = map_slice(&table.records, |r| log_l_truncated(&r.lpoly, config.truncation));
    Ok(average_from_logs(&logs, config.z))
}

fn average_from_logs(logs: &[f64], z: Complex64) -> Complex64 {
    let terms: Vec<Complex64> = logs.iter().map(|&x| (z * x).exp()).collect();
    pairwise_sum_complex(&terms) / logs.len() as f64
}

pub fn complex_moment_average(
    field: &Field,
    config: &ComplexMomentConfig,
    table: &FamilyTable,
) -> Result<ComplexMomentReport, ComplexMomentError> {
    let average = family_average(config, table)?;
    let (q, z) = (config.q, config.z);
    let degree = default_truncation(q, z, TARGET_TAIL_TOLERANCE);
    let a = a_z_truncated(q, z, degree);
    let split = square_split(field, table, z);
    Ok(ComplexMomentReport {
        q,
        n: config.n,
        z: format_complex(z),
        big_n: config.big_n,
        truncation: config.truncation,
        b: config.b,
        admissible_radius: admissible_radius(q, config.n),
        exploratory: config.exploratory,
        prime_count: table.len(),
        average,
        target: a.a_trunc,
        relative_error: (average / a.a_trunc - 1.0).norm(),
        target_truncation: degree,
        target_tail_bound: a.tail_bound,
        truncation_envelope: (config.n as f64).powf(-config.b),
        split,
        split_ratio: split.ratio(),
        rankin_tail_bound: rankin_tail_bound(q, z, config.truncation, config.n as f64 / 3.0),
    })
}

/// `|f'(z)| via real step - f'(z) via imaginary step|` for the family average,
/// central differences with step `h`.
pub fn cauchy_riemann_residual(
    config: &ComplexMomentConfig,
    table: &FamilyTable,
    h: f64,
) -> Result<f64, ComplexMomentError> {
    check_table(config, table)?;
    let logs = map_slice(&table.records, |r| log_l_truncated(&r.lpoly, config.truncation));
    let at = |dz: Complex64| average_from_logs(&logs, config.z + dz);
    let d_re = (at(Complex64::new(h, 0.0)) - at(Complex64::new(-h, 0.0))) / (2.0 * h);
    let d_im = (at(Complex64::new(0.0, h)) - at(Complex64::new(0.0, -h))) / Complex64::new(0.0, 2.0 * h);
    Ok((d_re - d_im).norm())
}

/// Per-prime `|log_l_truncated - ln L(1, chi_P)|`.
pub fn log_deviations(table: &FamilyTable, truncation: u32) -> Vec<f64> {
    map_slice(&table.records, |r| {
        let exact = r.l_one.to_f64().expect("finite").ln();
        (log_l_truncated(&r.lpoly, truncation) - exact).abs()
    })
}

/// Largest `|c_d|` seen, a sanity measure against the Weil-type bound.
pub fn max_abs_sum(sums: &PrimeCharacterSums) -> BigInt {
    sums.sums.iter().map(|c| c.abs()).max().unwrap_or_default()
}
