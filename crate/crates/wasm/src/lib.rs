//! Browser bindings. Each export takes plain numbers/strings and returns a
//! JSON string; errors become JS exceptions carrying the message.

use ffmoments_core::ffpoly::{Field, MonicPoly, PrimePoly};
use ffmoments_core::lfunction::{l_polynomial, ClassNumber, ClassNumberRecord};
use ffmoments_core::randommodel::{
    fit_decay, log_density_histogram, model_cdf_from_samples, model_charfn, model_moment, model_moment_exact,
    monte_carlo_moment, RandomProduct, RandomProductConfig,
};
use ffmoments_core::stats::linear_grid;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps an interactive page responsive.
pub const MAX_SAMPLES: u64 = 200_000;
pub const MAX_DEGREE: usize = 12;

#[derive(Serialize)]
struct LFunctionView {
    prime: String,
    degree: usize,
    genus: usize,
    imaginary: bool,
    coefficients: Vec<i64>,
    class_number: String,
    l_one: String,
    l_one_value: f64,
}

/// L-polynomial and class number of the prime with coefficients
/// `coeffs` (comma-separated, highest degree first, leading 1).
pub fn lfunction_json(q: u32, coeffs: &str) -> Result<String, String> {
    let field = Field::new(q as u64).map_err(|e| e.to_string())?;
    let digits = coeffs
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad coefficient '{}'", c.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if digits.first() != Some(&1) || digits.len() < 2 {
        return Err("enter a monic polynomial of degree at least 1, leading coefficient 1".into());
    }
    if digits.len() - 1 > MAX_DEGREE {
        return Err(format!("degree is limited to {MAX_DEGREE} here"));
    }
    if let Some(c) = digits.iter().find(|&&c| c >= q) {
        return Err(format!("coefficient {c} is not below q = {q}"));
    }
    let lower: Vec<u32> = digits[1..].iter().rev().copied().collect();
    let poly = MonicPoly::from_lower(&lower);
    let prime = PrimePoly::new(&field, poly.clone()).map_err(|_| format!("{poly} is not irreducible over F_{q}"))?;
    let l = l_polynomial(&field, &prime);
    let record = ClassNumberRecord::from_lpoly(&l).map_err(|e| e.to_string())?;
    let class_number = match &record.class_number {
        ClassNumber::Imaginary { h } => format!("h = {h}"),
        ClassNumber::Real { h_times_regulator } => format!("hR = {h_times_regulator}"),
    };
    let view = LFunctionView {
        prime: prime.to_string(),
        degree: prime.degree(),
        genus: prime.genus(),
        imaginary: prime.is_imaginary(),
        coefficients: l.coeffs().to_vec(),
        class_number,
        l_one: record.l_one.to_string(),
        l_one_value: num_traits::ToPrimitive::to_f64(&record.l_one).unwrap_or(f64::NAN),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct MomentView {
    k: u32,
    monte_carlo: f64,
    std_error: f64,
    model: f64,
}

#[derive(Serialize)]
struct ModelView {
    cdf: Vec<(f64, f64)>,
    log_density: Vec<(f64, f64)>,
    moments: Vec<MomentView>,
}

/// Random Euler product samples: CDF of `L`, histogram of `ln L`, and
/// Monte Carlo moments against the exact model moments.
pub fn model_json(q: u32, truncation: u32, samples: u32, seed: u32) -> Result<String, String> {
    let samples = (samples as u64).min(MAX_SAMPLES);
    let config = RandomProductConfig::new(q as u64, truncation, samples, seed as u64).map_err(|e| e.to_string())?;
    let model = RandomProduct::new(config).map_err(|e| e.to_string())?;
    let draws = model.samples();
    let values: Vec<f64> = draws.iter().map(|s| s.value).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cdf = model_cdf_from_samples(&draws, &linear_grid(lo, hi, 121)).cdf.rows;
    let hist = log_density_histogram(&draws, 60);
    let width = (hist.hi - hist.lo) / hist.density.len() as f64;
    let log_density = hist
        .density
        .iter()
        .enumerate()
        .map(|(i, &d)| (hist.lo + (i as f64 + 0.5) * width, d))
        .collect();
    let moments = (1..=3)
        .map(|k| {
            let est = monte_carlo_moment(&draws, k);
            let exact = model_moment_exact(q as u64, truncation, k)
                .ok()
                .and_then(|v| num_traits::ToPrimitive::to_f64(&v))
                .unwrap_or_else(|| model_moment(q as u64, truncation, k as f64));
            MomentView {
                k,
                monte_carlo: est.mean,
                std_error: est.std_error,
                model: exact,
            }
        })
        .collect();
    serde_json::to_string(&ModelView {
        cdf,
        log_density,
        moments,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CharfnView {
    /// `(t, |phi(t)|, fitted bound)`
    points: Vec<(f64, f64, f64)>,
    c: f64,
}

/// `|E[exp(it ln L)]|` of the model on `[0, t_max]`, with the
/// `exp(-c t / ln(2+t))` envelope fitted on `[5, t_max]`.
pub fn charfn_json(q: u32, truncation: u32, t_max: f64) -> Result<String, String> {
    if !(t_max > 5.0 && t_max <= 500.0) {
        return Err("t_max must lie in (5, 500]".into());
    }
    RandomProductConfig::new(q as u64, truncation, 1, 0).map_err(|e| e.to_string())?;
    let fit_grid: Vec<f64> = linear_grid(5.0, t_max, 100);
    let fit = fit_decay(q as u64, truncation, &fit_grid);
    let points = linear_grid(0.0, t_max, 400)
        .into_iter()
        .map(|t| (t, model_charfn(q as u64, truncation, t).norm(), fit.bound(t)))
        .collect();
    serde_json::to_string(&CharfnView { points, c: fit.c }).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn lfunction(q: u32, coeffs: &str) -> Result<String, JsValue> {
    lfunction_json(q, coeffs).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn random_model(q: u32, truncation: u32, samples: u32, seed: u32) -> Result<String, JsValue> {
    model_json(q, truncation, samples, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn charfn(q: u32, truncation: u32, t_max: f64) -> Result<String, JsValue> {
    charfn_json(q, truncation, t_max).map_err(|e| JsValue::from_str(&e))
}
