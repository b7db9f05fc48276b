//! Empirical CDFs, the two-sample Kolmogorov–Smirnov distance, and Monte
//! Carlo summaries.

use serde::{Deserialize, Serialize};

use crate::parallel::pairwise_sum;

/// Sorts a copy of `values` (NaN-free) ascending.
pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    v
}

/// Fraction of `sorted_values` that are `<= x`.
pub fn ecdf_at(sorted_values: &[f64], x: f64) -> f64 {
    if sorted_values.is_empty() {
        return 0.0;
    }
    sorted_values.partition_point(|&v| v <= x) as f64 / sorted_values.len() as f64
}

/// `sup_x |F_a(x) - F_b(x)|` for two sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs two nonempty samples");
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One row per grid point: `(x, F(x))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    pub rows: Vec<(f64, f64)>,
}

impl CdfTable {
    pub fn from_sorted(sorted_values: &[f64], grid: &[f64]) -> Self {
        CdfTable {
            rows: grid.iter().map(|&x| (x, ecdf_at(sorted_values, x))).collect(),
        }
    }

    /// `x,F(x)` lines with a header, ready for plotting tools.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = format!("x,{header}\n");
        for (x, f) in &self.rows {
            out.push_str(&format!("{x},{f}\n"));
        }
        out
    }
}

/// Evenly spaced grid of `points` values over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
}

pub fn mean_estimate(values: &[f64]) -> MeanEstimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if values.len() > 1 {
        pairwise_sum(&dev) / (n - 1.0)
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        std_error: (var / n).sqrt(),
    }
}

/// Fixed-width histogram of `values` over `[lo, hi)`, as densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub density: Vec<f64>,
}

pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if v >= lo && v < hi {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let total = values.len() as f64 * width;
    Histogram {
        lo,
        hi,
        density: counts.into_iter().map(|c| c as f64 / total).collect(),
    }
}
