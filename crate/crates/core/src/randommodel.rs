//! The random Euler product `L(1, W) = prod_{deg P <= M} (1 - W_P/|P|)^{-1}`
//! with independent fair signs `W_P`, its exact moments, its characteristic
//! function, and Monte Carlo sampling.
//!
//! Signs are counter-based: `W_P` for sample `s` is bit `i % 64` of the word
//! `offset(deg P) + i / 64` of the ChaCha8 stream `s` keyed by the seed, where
//! `i` is the lexicographic rank of `P` among primes of its degree. Samples
//! are therefore identical however the work is split across threads.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Pow};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divisor::count_irreducibles_big;
use crate::ffpoly::{
    count_irreducibles_exact, count_irreducibles_f64, prime_power, primes_of_degree, Factorizer, Field, MonicPoly,
};
use crate::parallel::{map_indices, pairwise_sum, pairwise_sum_complex};
use crate::stats::{self, CdfTable, Histogram, MeanEstimate};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("q = {0} is not an odd prime power")]
    BadField(u64),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("truncation degree {0} is too large to sample")]
    TruncationTooLarge(u32),
    #[error("exact moment needs about {bits} bits; use the floating-point model_moment")]
    TooLarge { bits: u64 },
    #[error("{0} has a prime factor of degree above the truncation")]
    FactorBeyondTruncation(String),
}

/// Parameters of a Monte Carlo run. A truncation of 0 is the empty product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomProductConfig {
    pub q: u64,
    pub truncation: u32,
    pub samples: u64,
    pub seed: u64,
}

impl RandomProductConfig {
    pub fn new(q: u64, truncation: u32, samples: u64, seed: u64) -> Result<Self, ModelError> {
        let config = RandomProductConfig {
            q,
            truncation,
            samples,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.q < 3 || self.q.is_multiple_of(2) || prime_power(self.q).is_none() {
            return Err(ModelError::BadField(self.q));
        }
        if self.samples == 0 {
            return Err(ModelError::NoSamples);
        }
        // beyond this the sign table of a single sample exceeds ~1 GiB
        if (self.q as f64).powi(self.truncation as i32) > 1e10 {
            return Err(ModelError::TruncationTooLarge(self.truncation));
        }
        Ok(())
    }
}

/// One draw of the truncated product, with its logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSample {
    pub value: f64,
    pub log_value: f64,
}

/// Sign layout and per-degree log factors for a fixed `(q, M)`.
#[derive(Clone, Debug)]
pub struct RandomProduct {
    config: RandomProductConfig,
    counts: Vec<u64>,
    word_offsets: Vec<u64>,
    // ln(1 - q^-d) and ln(1 + q^-d), indexed by d - 1
    log_minus: Vec<f64>,
    log_plus: Vec<f64>,
}

impl RandomProduct {
    pub fn new(config: RandomProductConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let m = config.truncation as usize;
        let counts: Vec<u64> = (1..=m)
            .map(|d| count_irreducibles_exact(config.q, d as u32) as u64)
            .collect();
        let mut word_offsets = Vec::with_capacity(m);
        let mut offset = 0u64;
        for &n in &counts {
            word_offsets.push(offset);
            offset += n.div_ceil(64);
        }
        let y = |d: usize| (config.q as f64).powi(-(d as i32));
        Ok(RandomProduct {
            config,
            counts,
            word_offsets,
            log_minus: (1..=m).map(|d| (-y(d)).ln_1p()).collect(),
            log_plus: (1..=m).map(|d| y(d).ln_1p()).collect(),
        })
    }

    pub fn config(&self) -> &RandomProductConfig {
        &self.config
    }

    /// `|P_d|` for `d = 1..=M`.
    pub fn prime_counts(&self) -> &[u64] {
        &self.counts
    }

    fn stream(&self, sample: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(sample);
        rng
    }

    /// `W_P(sample)` for the prime of degree `degree` with lexicographic rank `rank`.
    pub fn sign(&self, sample: u64, degree: usize, rank: u64) -> i8 {
        assert!(degree >= 1 && degree <= self.counts.len(), "degree outside 1..=M");
        assert!(rank < self.counts[degree - 1], "rank out of range");
        let mut rng = self.stream(sample);
        // word positions count 32-bit words
        rng.set_word_pos(2 * (self.word_offsets[degree - 1] + rank / 64) as u128);
        if (rng.next_u64() >> (rank % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Number of `+1` signs among the degree-`d` primes of one sample,
    /// reading the stream sequentially.
    fn plus_counts(&self, sample: u64) -> Vec<u64> {
        let mut rng = self.stream(sample);
        self.counts
            .iter()
            .map(|&n| {
                let mut plus = 0u64;
                for _ in 0..n / 64 {
                    plus += rng.next_u64().count_ones() as u64;
                }
                let rem = n % 64;
                if rem > 0 {
                    plus += (rng.next_u64() & ((1u64 << rem) - 1)).count_ones() as u64;
                }
                plus
            })
            .collect()
    }

    fn sample_from_plus_counts(&self, plus: &[u64]) -> ModelSample {
        let terms: Vec<f64> = plus
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(i, (&p, &n))| -(p as f64 * self.log_minus[i] + (n - p) as f64 * self.log_plus[i]))
            .collect();
        let log_value = pairwise_sum(&terms);
        ModelSample {
            value: log_value.exp(),
            log_value,
        }
    }

    pub fn sample(&self, sample: u64) -> ModelSample {
        self.sample_from_plus_counts(&self.plus_counts(sample))
    }

    /// Sample `s` for `s = 0..S`, in order.
    pub fn samples(&self) -> Vec<ModelSample> {
        map_indices(self.config.samples as usize, |s| self.sample(s as u64))
    }

    /// The product with every sign forced to `sign`.
    pub fn forced(&self, sign: i8) -> ModelSample {
        let plus: Vec<u64> = if sign > 0 {
            self.counts.clone()
        } else {
            vec![0; self.counts.len()]
        };
        self.sample_from_plus_counts(&plus)
    }
}

/// `S` independent samples of the truncated product.
pub fn sample_l(config: &RandomProductConfig) -> Result<Vec<ModelSample>, ModelError> {
    Ok(RandomProduct::new(*config)?.samples())
}

/// Lexicographic rank of each prime among primes of its degree.
#[derive(Clone, Debug)]
pub struct PrimeIndex {
    q: u32,
    by_degree: Vec<Vec<u64>>,
}

impl PrimeIndex {
    pub fn new(field: &Field, max_degree: usize) -> Self {
        PrimeIndex {
            q: field.order(),
            by_degree: (1..=max_degree)
                .map(|d| {
                    primes_of_degree(field, d)
                        .iter()
                        .map(|p| p.poly().index(field.order()))
                        .collect()
                })
                .collect(),
        }
    }

    /// `(degree, rank)` of a monic irreducible, if within range.
    pub fn rank(&self, p: &MonicPoly) -> Option<(usize, u64)> {
        let d = p.degree();
        let list = self.by_degree.get(d.checked_sub(1)?)?;
        list.binary_search(&p.index(self.q)).ok().map(|r| (d, r as u64))
    }
}

/// `E[W_f]`: 1 if `f` is a square, 0 otherwise.
pub fn expected_w(field: &Field, f: &MonicPoly) -> u8 {
    let mut factorizer = Factorizer::new(field);
    factorizer.factor(f).iter().all(|(_, e)| e % 2 == 0) as u8
}

/// Monte Carlo mean of `W_f = prod W_P^{e_P}` over the configured samples.
pub fn monte_carlo_w(
    model: &RandomProduct,
    field: &Field,
    index: &PrimeIndex,
    f: &MonicPoly,
) -> Result<MeanEstimate, ModelError> {
    let mut factorizer = Factorizer::new(field);
    let odd: Vec<(usize, u64)> = factorizer
        .factor(f)
        .into_iter()
        .filter(|(_, e)| e % 2 == 1)
        .map(|(p, _)| {
            index
                .rank(&p)
                .ok_or_else(|| ModelError::FactorBeyondTruncation(f.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let values = map_indices(model.config.samples as usize, |s| {
        odd.iter()
            .map(|&(d, r)| model.sign(s as u64, d, r) as f64)
            .product::<f64>()
    });
    Ok(stats::mean_estimate(&values))
}

/// Closed form of `E[(1 - W/Q)^{-k}] = sum_n d_k(P^{2n}) Q^{-2n}` for `Q = |P|`:
/// `Q^k ((Q+1)^k + (Q-1)^k) / (2 (Q^2-1)^k)`, as (numerator, denominator).
pub fn model_moment_factor(norm: &BigInt, k: u32) -> (BigInt, BigInt) {
    let one = BigInt::one();
    let num = norm.pow(k) * ((norm + &one).pow(k) + (norm - &one).pow(k));
    let den = BigInt::from(2) * (norm * norm - one).pow(k);
    (num, den)
}

const EXACT_BIT_LIMIT: u64 = 1 << 26;

/// `prod_{deg P <= M} E[(1 - W_P/|P|)^{-k}]` exactly.
pub fn model_moment_exact(q: u64, truncation: u32, k: u32) -> Result<BigRational, ModelError> {
    let bits: f64 = (1..=truncation)
        .map(|d| count_irreducibles_f64(q, d) * (2 * k * d) as f64 * (q as f64).log2())
        .sum();
    if bits > EXACT_BIT_LIMIT as f64 {
        return Err(ModelError::TooLarge { bits: bits as u64 });
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for d in 1..=truncation {
        let norm = BigInt::from(q).pow(d);
        let (a, b) = model_moment_factor(&norm, k);
        let count = count_irreducibles_big(q, d)
            .to_u32_digits()
            .1
            .first()
            .copied()
            .unwrap_or(0);
        num *= a.pow(count);
        den *= b.pow(count);
    }
    Ok(BigRational::new(num, den))
}

/// `ln E[(1 - W y)^{-k}] = ln(((1-y)^{-k} + (1+y)^{-k}) / 2)`, accurate for tiny `y`.
fn ln_moment_factor(y: f64, k: f64) -> f64 {
    if y > 0.05 {
        return (0.5 * ((-k * (-y).ln_1p()).exp() + (-k * y.ln_1p()).exp())).ln();
    }
    // sum_{r>=1} C(k+2r-1, 2r) y^{2r}
    let y2 = y * y;
    let mut term = 1.0;
    let mut excess = 0.0;
    for r in 1..400 {
        let r = r as f64;
        term *= (k + 2.0 * r - 2.0) * (k + 2.0 * r - 1.0) / ((2.0 * r - 1.0) * (2.0 * r)) * y2;
        excess += term;
        if term.abs() < 1e-18 * excess.abs() {
            break;
        }
    }
    excess.ln_1p()
}

/// Floating-point model moment for real `k >= 0`; usable for any truncation.
pub fn model_moment(q: u64, truncation: u32, k: f64) -> f64 {
    let terms: Vec<f64> = (1..=truncation)
        .map(|d| count_irreducibles_f64(q, d) * ln_moment_factor((q as f64).powi(-(d as i32)), k))
        .collect();
    pairwise_sum(&terms).exp()
}

/// `E[exp(it ln L)] = prod_P (((1-1/|P|)^{-it} + (1+1/|P|)^{-it}) / 2)`.
pub fn model_charfn(q: u64, truncation: u32, t: f64) -> Complex64 {
    let mut phase = 0.0;
    let mut log_modulus = 0.0;
    let mut negative = false;
    for d in 1..=truncation {
        let y = (q as f64).powi(-(d as i32));
        let n = count_irreducibles_f64(q, d);
        // each factor is exp(-it ln(1-y^2)/2) cos(t atanh y)
        phase -= n * t * (-y * y).ln_1p() / 2.0;
        let x = t * y.atanh();
        let c = x.cos();
        if c == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let s = (x / 2.0).sin();
        log_modulus += n * if c > 0.5 { (-2.0 * s * s).ln_1p() } else { c.abs().ln() };
        if c < 0.0 && count_irreducibles_exact(q, d) % 2 == 1 {
            negative = !negative;
        }
    }
    let modulus = if negative {
        -log_modulus.exp()
    } else {
        log_modulus.exp()
    };
    Complex64::from_polar(modulus, phase)
}

/// `E[exp(itL)]` of the unlogged product, from its exact moment series
/// `sum_k E[L^k] (it)^k / k!` summed until the terms are negligible.
pub fn model_charfn_unlogged(q: u64, truncation: u32, t: f64) -> Complex64 {
    let mut total = Complex64::new(1.0, 0.0);
    let mut factor = Complex64::new(1.0, 0.0);
    let mut peaked = false;
    let mut last = f64::INFINITY;
    for k in 1..400u32 {
        factor *= Complex64::new(0.0, t) / k as f64;
        let term = factor * model_moment(q, truncation, k as f64);
        total += term;
        let size = term.norm();
        peaked |= size < last;
        if peaked && size < 1e-17 {
            break;
        }
        last = size;
    }
    total
}

/// `1 + sum_{k=1}^{K} a_k (it)^k / k!` from given moments `a_1..a_K`.
pub fn moment_series(moments: &[f64], t: f64) -> Complex64 {
    let mut total = Complex64::new(1.0, 0.0);
    let mut factor = Complex64::new(1.0, 0.0);
    for (i, a) in moments.iter().enumerate() {
        factor *= Complex64::new(0.0, t) / (i + 1) as f64;
        total += factor * a;
    }
    total
}

/// Empirical `E[exp(it X)]` with standard errors of the real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharfnEstimate {
    pub value: Complex64,
    pub std_error_re: f64,
    pub std_error_im: f64,
}

impl CharfnEstimate {
    /// Whether `other` lies within `sigmas` standard errors in both parts.
    pub fn agrees_with(&self, other: Complex64, sigmas: f64) -> bool {
        // floor guards the t = 0 case where both errors vanish
        let floor = 1e-12;
        (self.value.re - other.re).abs() <= sigmas * self.std_error_re + floor
            && (self.value.im - other.im).abs() <= sigmas * self.std_error_im + floor
    }
}

pub fn empirical_charfn(values: &[f64], t: f64) -> CharfnEstimate {
    let re: Vec<f64> = values.iter().map(|x| (t * x).cos()).collect();
    let im: Vec<f64> = values.iter().map(|x| (t * x).sin()).collect();
    let (re, im) = (stats::mean_estimate(&re), stats::mean_estimate(&im));
    CharfnEstimate {
        value: Complex64::new(re.mean, im.mean),
        std_error_re: re.std_error,
        std_error_im: im.std_error,
    }
}

/// Largest `c` with `|phi(t)| <= exp(-c t / ln(2+t))` on every grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    /// `(t, |phi(t)|)`
    pub points: Vec<(f64, f64)>,
}

impl DecayFit {
    pub fn bound(&self, t: f64) -> f64 {
        (-self.c * t.abs() / (2.0 + t.abs()).ln()).exp()
    }
}

pub fn fit_decay(q: u64, truncation: u32, ts: &[f64]) -> DecayFit {
    let points: Vec<(f64, f64)> = ts.iter().map(|&t| (t, model_charfn(q, truncation, t).norm())).collect();
    let c = points
        .iter()
        .map(|&(t, m)| -m.ln() * (2.0 + t.abs()).ln() / t.abs())
        .fold(f64::INFINITY, f64::min);
    DecayFit { c, points }
}

/// Model CDF on a grid, and the log-scale CDF `F~(x) = F(e^x)` evaluated
/// from the log samples at `ln x` for each positive grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCdf {
    pub cdf: CdfTable,
    pub log_cdf: CdfTable,
}

pub fn model_cdf_from_samples(samples: &[ModelSample], grid: &[f64]) -> ModelCdf {
    let values = stats::sorted(&samples.iter().map(|s| s.value).collect::<Vec<_>>());
    let logs = stats::sorted(&samples.iter().map(|s| s.log_value).collect::<Vec<_>>());
    let log_grid: Vec<f64> = grid.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
    ModelCdf {
        cdf: CdfTable::from_sorted(&values, grid),
        log_cdf: CdfTable::from_sorted(&logs, &log_grid),
    }
}

pub fn model_cdf(config: &RandomProductConfig, grid: &[f64]) -> Result<ModelCdf, ModelError> {
    Ok(model_cdf_from_samples(&sample_l(config)?, grid))
}

/// Histogram estimate of the density of `ln L`.
pub fn log_density_histogram(samples: &[ModelSample], bins: usize) -> Histogram {
    let logs: Vec<f64> = samples.iter().map(|s| s.log_value).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 1e-9).max(1e-12);
    stats::histogram(&logs, lo, hi + pad, bins)
}

/// Monte Carlo `E[L^k]` with standard error.
pub fn monte_carlo_moment(samples: &[ModelSample], k: u32) -> MeanEstimate {
    let values: Vec<f64> = samples.iter().map(|s| s.value.powi(k as i32)).collect();
    stats::mean_estimate(&values)
}

/// Empirical characteristic function of `ln L` at several `t`.
pub fn log_charfn_curve(samples: &[ModelSample], ts: &[f64]) -> Vec<CharfnEstimate> {
    let logs: Vec<f64> = samples.iter().map(|s| s.log_value).collect();
    ts.iter().map(|&t| empirical_charfn(&logs, t)).collect()
}

/// `sum_s exp(it ln L_s) / S`, summed pairwise.
pub fn mean_phase(samples: &[ModelSample], t: f64) -> Complex64 {
    let terms: Vec<Complex64> = samples
        .iter()
        .map(|s| Complex64::from_polar(1.0, t * s.log_value))
        .collect();
    pairwise_sum_complex(&terms) / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffpoly::mertens_product;
    use num_traits::ToPrimitive;

    fn model(q: u64, m: u32, s: u64, seed: u64) -> RandomProduct {
        RandomProduct::new(RandomProductConfig::new(q, m, s, seed).unwrap()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert_eq!(RandomProductConfig::new(4, 3, 1, 0), Err(ModelError::BadField(4)));
        assert_eq!(RandomProductConfig::new(6, 3, 1, 0), Err(ModelError::BadField(6)));
        assert_eq!(RandomProductConfig::new(5, 3, 0, 0), Err(ModelError::NoSamples));
        assert!(RandomProductConfig::new(9, 3, 1, 0).is_ok());
    }

    #[test]
    fn empty_product_is_one() {
        let m = model(5, 0, 20, 1);
        assert!(m.samples().iter().all(|s| s.value == 1.0 && s.log_value == 0.0));
    }

    #[test]
    fn forced_signs() {
        let m = model(5, 6, 1, 0);
        let plus = m.forced(1).value;
        assert!((plus / mertens_product(5, 6) - 1.0).abs() < 1e-13);
        let minus: f64 = (1..=6u32)
            .map(|d| (1.0 + 5f64.powi(-(d as i32))).powf(-(count_irreducibles_exact(5, d) as f64)))
            .product();
        assert!((m.forced(-1).value / minus - 1.0).abs() < 1e-11);
        for s in m.samples() {
            assert!(s.value > 0.0 && s.value <= plus * (1.0 + 1e-12) && s.value >= m.forced(-1).value * (1.0 - 1e-12));
        }
    }

    #[test]
    fn samples_are_reproducible_and_consistent_with_random_access() {
        let m = model(3, 5, 40, 7);
        assert_eq!(m.samples(), model(3, 5, 40, 7).samples());
        assert_ne!(m.samples(), model(3, 5, 40, 8).samples());
        for s in 0..40 {
            let plus: Vec<u64> = (1..=5usize)
                .map(|d| (0..m.prime_counts()[d - 1]).filter(|&r| m.sign(s, d, r) == 1).count() as u64)
                .collect();
            assert_eq!(m.sample_from_plus_counts(&plus), m.sample(s));
        }
    }

    #[test]
    fn moment_factor_closed_forms() {
        for q in [3i64, 5, 25, 125] {
            let norm = BigInt::from(q);
            let x = BigRational::new(BigInt::one(), norm.clone() * &norm);
            let one = BigRational::one();
            let (a, b) = model_moment_factor(&norm, 1);
            assert_eq!(BigRational::new(a, b), &one / (&one - &x));
            let (a, b) = model_moment_factor(&norm, 2);
            assert_eq!(BigRational::new(a, b), (&one + &x) / ((&one - &x) * (&one - &x)));
            // k = 3 against the series sum_n C(2n+2, 2) x^n truncated far out
            let (a, b) = model_moment_factor(&norm, 3);
            let exact = BigRational::new(a, b).to_f64().unwrap();
            let xf = 1.0 / (q * q) as f64;
            let series: f64 = (0..60)
                .map(|n| ((2 * n + 2) * (2 * n + 1) / 2) as f64 * xf.powi(n))
                .sum();
            assert!((exact / series - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_and_float_moments_agree() {
        for q in [3u64, 5] {
            for k in 1..=3 {
                for m in 1..=5 {
                    let exact = model_moment_exact(q, m, k).unwrap().to_f64().unwrap();
                    let float = model_moment(q, m, k as f64);
                    assert!((exact / float - 1.0).abs() < 1e-12, "q={q} k={k} m={m}");
                }
            }
        }
        assert!(matches!(model_moment_exact(5, 12, 3), Err(ModelError::TooLarge { .. })));
    }

    #[test]
    fn exact_moments_increase_in_truncation() {
        let mut last = BigRational::one();
        for m in 1..=6 {
            let v = model_moment_exact(3, m, 2).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn ln_factor_series_matches_direct() {
        for k in [0.5, 1.0, 2.0, 3.0, 7.5] {
            for y in [0.04f64, 0.01, 1e-3] {
                let direct = (0.5 * ((1.0 - y).powf(-k) + (1.0 + y).powf(-k))).ln();
                assert!((ln_moment_factor(y, k) - direct).abs() < 1e-13);
            }
        }
        assert_eq!(ln_moment_factor(1e-3, 0.0), 0.0);
    }

    #[test]
    fn charfn_basics() {
        assert_eq!(model_charfn(5, 6, 0.0), Complex64::new(1.0, 0.0));
        for t in [0.3, 1.0, 4.0, 17.0, -3.0] {
            assert!(model_charfn(5, 6, t).norm() <= 1.0 + 1e-15);
            assert!((model_charfn(5, 6, -t) - model_charfn(5, 6, t).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn charfn_matches_brute_force_product() {
        let (q, m, t) = (3u64, 4u32, 2.7);
        let mut direct = Complex64::new(1.0, 0.0);
        for d in 1..=m {
            let y = (q as f64).powi(-(d as i32));
            let factor =
                (Complex64::new(0.0, -t * (-y).ln_1p()).exp() + Complex64::new(0.0, -t * y.ln_1p()).exp()) / 2.0;
            direct *= factor.powu(count_irreducibles_exact(q, d) as u32);
        }
        assert!((direct - model_charfn(q, m, t)).norm() < 1e-13);
    }

    #[test]
    fn monte_carlo_moments_within_three_sigma() {
        let m = model(3, 4, 20_000, 11);
        let samples = m.samples();
        for k in 1..=3 {
            let est = monte_carlo_moment(&samples, k);
            let exact = model_moment_exact(3, 4, k).unwrap().to_f64().unwrap();
            assert!((est.mean - exact).abs() <= 3.0 * est.std_error, "k={k}");
        }
    }

    #[test]
    fn expected_w_parity() {
        let field = Field::new(3).unwrap();
        let q = MonicPoly::from_lower(&[1, 0]); // T^2 + 1
        assert_eq!(expected_w(&field, &q), 0);
        assert_eq!(expected_w(&field, &q.mul(&q, &field)), 1);
        assert_eq!(expected_w(&field, &MonicPoly::one()), 1);
    }

    #[test]
    fn monte_carlo_w_square_is_exact_and_nonsquare_is_centered() {
        let field = Field::new(3).unwrap();
        let index = PrimeIndex::new(&field, 3);
        let m = model(3, 3, 4000, 5);
        let p = MonicPoly::from_lower(&[1, 0]);
        let sq = p.mul(&p, &field);
        assert_eq!(monte_carlo_w(&m, &field, &index, &sq).unwrap().mean, 1.0);
        let est = monte_carlo_w(&m, &field, &index, &p).unwrap();
        assert!(est.mean.abs() <= 4.0 / (4000f64).sqrt());
        let high = crate::ffpoly::first_irreducible(&field, 4).unwrap();
        assert!(matches!(
            monte_carlo_w(&m, &field, &index, &high),
            Err(ModelError::FactorBeyondTruncation(_))
        ));
    }

    #[test]
    fn prime_index_ranks_are_lexicographic() {
        let field = Field::new(5).unwrap();
        let index = PrimeIndex::new(&field, 2);
        let primes = primes_of_degree(&field, 2);
        for (r, p) in primes.iter().enumerate() {
            assert_eq!(index.rank(p.poly()), Some((2, r as u64)));
        }
        assert_eq!(index.rank(&MonicPoly::from_lower(&[0, 0])), None);
    }

    #[test]
    fn cdf_edges_and_log_consistency() {
        let config = RandomProductConfig::new(5, 4, 2000, 3).unwrap();
        let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 1e300];
        let cdf = model_cdf(&config, &grid).unwrap();
        assert_eq!(cdf.cdf.rows[0].1, 0.0);
        assert_eq!(cdf.cdf.rows[5].1, 1.0);
        for ((_, f), (_, g)) in cdf.cdf.rows[1..].iter().zip(&cdf.log_cdf.rows) {
            assert!((f - g).abs() <= 1.0 / 2000.0 + 1e-12);
        }
    }

    #[test]
    fn unlogged_charfn_matches_monte_carlo() {
        let m = model(5, 3, 20_000, 2);
        let values: Vec<f64> = m.samples().iter().map(|s| s.value).collect();
        for t in [0.25, 0.5, 1.0] {
            let est = empirical_charfn(&values, t);
            assert!(est.agrees_with(model_charfn_unlogged(5, 3, t), 4.0), "t={t}");
        }
    }

    #[test]
    fn histogram_integrates_to_one() {
        let samples = model(3, 4, 3000, 9).samples();
        let h = log_density_histogram(&samples, 30);
        let width = (h.hi - h.lo) / 30.0;
        let total: f64 = h.density.iter().map(|d| d * width).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
