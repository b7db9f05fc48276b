use ffmoments_core::complexmoments::{
    cauchy_riemann_residual, family_average, log_deviations, ComplexMomentConfig, DEFAULT_N,
};
use ffmoments_core::divisor::{a_k_truncated, a_z_default};
use ffmoments_core::ffpoly::Field;
use ffmoments_core::moments::{moment_report, FamilyTable};
use ffmoments_core::randommodel::{
    empirical_charfn, model_charfn, model_charfn_unlogged, model_moment_exact, moment_series, RandomProduct,
    RandomProductConfig,
};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;

fn table(q: u64, n: usize) -> FamilyTable {
    FamilyTable::compute(&Field::new(q).unwrap(), n)
}

#[test]
fn exact_lhs_is_identical_on_one_thread_and_many() {
    let field = Field::new(5).unwrap();
    let many = FamilyTable::compute(&field, 5);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let one = pool.install(|| FamilyTable::compute(&field, 5));
    assert_eq!(many, one);
    for k in 1..=3 {
        assert_eq!(moment_report(&many, k).unwrap(), moment_report(&one, k).unwrap());
    }
}

#[test]
fn moment_errors_shrink_with_degree_within_the_envelope() {
    for q in [3u64, 5] {
        let tables: Vec<FamilyTable> = [3, 5, 7].iter().map(|&n| table(q, n)).collect();
        for k in 1..=2 {
            let reports: Vec<_> = tables.iter().map(|t| moment_report(t, k).unwrap()).collect();
            for w in reports.windows(2) {
                assert!(w[1].relative_error < w[0].relative_error, "q={q} k={k}");
            }
            let last = reports.last().unwrap();
            assert!(last.relative_error <= last.envelope.unwrap(), "q={q} k={k}");
        }
    }
}

#[test]
fn second_moment_target_is_the_closed_form() {
    for q in [3i64, 5, 7, 9] {
        let zeta2 = BigRational::new(q.into(), (q - 1).into());
        let closed = &zeta2 * &zeta2 * BigRational::new((q * q + q + 1).into(), (q * q).into());
        let direct = BigRational::new((q * q + q + 1).into(), ((q - 1) * (q - 1)).into());
        assert_eq!(closed, direct);
        // and the truncated a_2 approaches it within its own tail bound
        let a = a_k_truncated(q as u64, 2, 25);
        let gap = (&direct - &a.a_trunc).to_f64().unwrap();
        assert!(gap >= 0.0 && gap <= a.tail_bound, "q={q}");
    }
}

#[test]
fn model_moments_increase_and_stay_below_the_limit() {
    for q in [3u64, 5] {
        for k in 1..=3 {
            let limit = a_z_default(q, Complex64::new(k as f64, 0.0)).a_trunc.re;
            let mut last = BigRational::from_integer(BigInt::from(1));
            for m in 1..=6 {
                let v = model_moment_exact(q, m, k).unwrap();
                assert!(v > last);
                assert!(v.to_f64().unwrap() < limit);
                last = v;
            }
        }
    }
}

#[test]
fn log_charfn_of_samples_matches_the_product_formula() {
    let model = RandomProduct::new(RandomProductConfig::new(5, 6, 100_000, 2024).unwrap()).unwrap();
    let logs: Vec<f64> = model.samples().iter().map(|s| s.log_value).collect();
    for t in [0.5, 1.0, 2.0, 5.0] {
        let est = empirical_charfn(&logs, t);
        assert!(est.agrees_with(model_charfn(5, 6, t), 3.0), "t={t}: {est:?}");
    }
}

#[test]
fn moment_series_determines_the_unlogged_charfn_near_zero() {
    let moments: Vec<f64> = (1..=8)
        .map(|k| a_z_default(5, Complex64::new(k as f64, 0.0)).a_trunc.re)
        .collect();
    for t in [-0.5, -0.2, 0.1, 0.3, 0.5] {
        let diff = (moment_series(&moments, t) - model_charfn_unlogged(5, 10, t)).norm();
        assert!(diff < 1e-3, "t={t}: {diff}");
    }
}

#[test]
fn truncated_log_deviation_fits_the_envelope() {
    let family = table(3, 5);
    let n = 5.0;
    let mut fitted = 0.0f64;
    let mut worst = Vec::new();
    for m in 2..=14u32 {
        let dev = log_deviations(&family, m).into_iter().fold(0.0, f64::max);
        worst.push(dev);
        fitted = fitted.max(dev * m as f64 * 3f64.powf(m as f64 / 2.0) / n);
    }
    println!("fitted envelope constant C = {fitted:.4}");
    assert!(fitted < 10.0);
    assert!(worst.last().unwrap() < &worst[0]);
}

#[test]
fn complex_average_at_integers_matches_exact_average() {
    for q in [3u64, 5] {
        for n in [5, 7] {
            let family = table(q, n);
            for k in 1..=2u32 {
                let z = Complex64::new(k as f64, 0.0);
                let config = ComplexMomentConfig::new(q, n, z, DEFAULT_N, true).unwrap();
                let avg = family_average(&config, &family).unwrap();
                let exact = (family.power_sum(k) / BigRational::from_integer(family.len().into()))
                    .to_f64()
                    .unwrap();
                assert!(
                    (avg.re / exact - 1.0).abs() < 1e-2 && avg.im == 0.0,
                    "q={q} n={n} k={k}"
                );
            }
        }
    }
}

#[test]
fn complex_average_is_holomorphic_and_converges() {
    let z = Complex64::new(0.5, 0.5);
    let mut last = f64::INFINITY;
    for n in [3, 5, 7] {
        let family = table(5, n);
        let config = ComplexMomentConfig::new(5, n, z, DEFAULT_N, true).unwrap();
        let target = a_z_default(5, z).a_trunc;
        let err = (family_average(&config, &family).unwrap() / target - 1.0).norm();
        assert!(err < last, "n={n}");
        last = err;
        let residual = cauchy_riemann_residual(&config.with_z(Complex64::new(0.5, 0.0)), &family, 1e-4).unwrap();
        assert!(residual < 1e-3);
    }
}
