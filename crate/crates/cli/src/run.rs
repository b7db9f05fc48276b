//! Dispatch of a validated [`RunConfig`] to the experiment layer.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ffmoments_core::complexmoments::{
    cauchy_riemann_residual, complex_moment_average, family_average, ComplexMomentConfig, ComplexMomentError,
};
use ffmoments_core::divisor::a_z_default;
use ffmoments_core::ffpoly::{count_irreducibles_exact, primes_of_degree, Field, MonicPoly, PrimePoly};
use ffmoments_core::lfunction::{l_polynomial, point_count_oracle, ClassNumber, ClassNumberRecord};
use ffmoments_core::moments::{
    class_number_moment_report, distribution_compare_table, even_degree_report, moment_report, Exponent, FamilyTable,
};
use ffmoments_core::randommodel::{
    fit_decay, log_charfn_curve, log_density_histogram, model_cdf_from_samples, model_charfn, model_moment,
    model_moment_exact, monte_carlo_moment, RandomProduct, RandomProductConfig,
};
use ffmoments_core::stats::linear_grid;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::cache::TableSource;
use crate::config::{CommandKind, RunConfig};
use crate::error::HarnessError;
use crate::report::{csv_table, CacheEvent, Meta, Report, RunOutput, Table};

/// Grid of `t` for the model's characteristic-function decay fit.
pub fn decay_grid() -> Vec<f64> {
    (0..=45).map(|i| 5.0 + i as f64).collect()
}

/// Cauchy–Riemann finite-difference step and pass threshold.
pub const CR_STEP: f64 = 1e-4;
pub const CR_TOLERANCE: f64 = 1e-6;

/// Executes `config` on a pool of `config.threads` workers (all cores when
/// unset). Nothing is written to disk except cache files.
pub fn run(config: &RunConfig) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = config.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().map_err(|e| HarnessError::Compute(e.to_string()))?;
    let start = Instant::now();
    let mut source = TableSource::new(config.cache_dir.clone(), config.strict_cache);
    let (payload, tables) = pool.install(|| dispatch(config, &mut source))?;
    let meta = Meta {
        runtime_seconds: start.elapsed().as_secs_f64(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        threads: pool.current_num_threads(),
        cache: source
            .statuses
            .iter()
            .map(|&(q, n, status)| CacheEvent { q, n, status })
            .collect(),
        warnings: source.warnings.clone(),
    };
    Ok(RunOutput {
        report: Report {
            command: config.command.name(),
            config: config.clone(),
            payload,
            meta,
        },
        tables,
    })
}

fn dispatch(config: &RunConfig, source: &mut TableSource) -> Result<(Value, Vec<Table>), HarnessError> {
    let field = Field::new(config.q)?;
    match config.command {
        CommandKind::Primes => primes(config, &field),
        CommandKind::Lfunc => lfunc(config, &field, source),
        CommandKind::Moments => moments(config, &field, source),
        CommandKind::Even => even(config, &field, source),
        CommandKind::Complex => complex(config, &field, source),
        CommandKind::Random => random(config),
        CommandKind::Distribution => distribution(config, &field, source),
    }
}

fn primes(config: &RunConfig, field: &Field) -> Result<(Value, Vec<Table>), HarnessError> {
    let q = config.q;
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for &n in &config.degrees {
        let list = primes_of_degree(field, n);
        let exact = count_irreducibles_exact(q, n as u32);
        let main = (q as f64).powi(n as i32) / n as f64;
        let bound = 2.0 * (q as f64).powf(n as f64 / 2.0) / n as f64;
        let mut row = json!({
            "n": n,
            "count": exact,
            "enumerated": list.len(),
            "main_term": main,
            "deviation": exact as f64 - main,
            "deviation_bound": bound,
            "within_bound": (exact as f64 - main).abs() <= bound,
        });
        if config.list {
            row["primes"] = list.iter().map(|p| Value::String(p.to_string())).collect();
            tables.push(Table {
                file_name: format!("primes_n{n}.csv"),
                contents: csv_table(
                    &["index", "digits", "poly"],
                    list.iter().map(|p| {
                        vec![
                            p.poly().index(q as u32).to_string(),
                            p.poly().to_digits(),
                            p.to_string(),
                        ]
                    }),
                )?,
            });
        }
        rows.push(row);
    }
    Ok((json!({ "q": q, "degrees": rows }), tables))
}

fn class_number_value(c: &ClassNumber) -> Value {
    match c {
        ClassNumber::Imaginary { h } => json!({ "h": h.to_string() }),
        ClassNumber::Real { h_times_regulator } => json!({ "h_times_regulator": h_times_regulator.to_string() }),
    }
}

fn lfunc(config: &RunConfig, field: &Field, source: &mut TableSource) -> Result<(Value, Vec<Table>), HarnessError> {
    if let Some(coeffs) = &config.poly {
        // highest degree first on the command line
        let lower: Vec<u32> = coeffs[1..].iter().rev().copied().collect();
        let poly = MonicPoly::from_lower(&lower);
        let prime = PrimePoly::new(field, poly.clone())
            .map_err(|_| HarnessError::Config(format!("{poly} is not irreducible over F_{}", config.q)))?;
        let l = l_polynomial(field, &prime);
        let record = ClassNumberRecord::from_lpoly(&l)?;
        let oracle = if prime.is_imaginary() && field.is_prime_field() {
            Some(point_count_oracle(field, &prime)? == l)
        } else {
            None
        };
        let payload = json!({
            "q": config.q,
            "prime": prime.to_string(),
            "degree": prime.degree(),
            "genus": prime.genus(),
            "imaginary": prime.is_imaginary(),
            "l_coefficients": l.coeffs(),
            "functional_equation": prime.is_imaginary().then(|| l.satisfies_functional_equation()),
            "class_number": class_number_value(&record.class_number),
            "l_one": record.l_one.to_string(),
            "l_one_value": record.l_one.to_f64(),
            "oracle_agrees": oracle,
        });
        return Ok((payload, Vec::new()));
    }
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for &n in &config.degrees {
        let table = source.table(field, n)?;
        let records: Vec<ClassNumberRecord> = table
            .records
            .iter()
            .map(|r| ClassNumberRecord::from_lpoly(&r.lpoly))
            .collect::<Result<_, _>>()?;
        let values: Vec<f64> = table.l_one_values();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut row = json!({
            "n": n,
            "prime_count": table.len(),
            "genus": table.genus(),
            "l_one_min": min,
            "l_one_max": max,
        });
        if config.list {
            row["records"] = records
                .iter()
                .zip(&table.records)
                .map(|(c, r)| {
                    json!({
                        "prime": c.prime.to_string(),
                        "l_coefficients": r.lpoly.coeffs(),
                        "class_number": class_number_value(&c.class_number),
                        "l_one": c.l_one.to_string(),
                    })
                })
                .collect();
        }
        tables.push(Table {
            file_name: format!("lfunc_n{n}.csv"),
            contents: csv_table(
                &["poly", "coeffs", "class_number", "l_one", "l_one_value"],
                records.iter().zip(&table.records).map(|(c, r)| {
                    let coeffs: Vec<String> = r.lpoly.coeffs().iter().map(i64::to_string).collect();
                    vec![
                        c.prime.poly().to_digits(),
                        coeffs.join(" "),
                        c.class_number.as_rational().to_string(),
                        c.l_one.to_string(),
                        format!("{}", c.l_one.to_f64().unwrap_or(f64::NAN)),
                    ]
                }),
            )?,
        });
        rows.push(row);
    }
    Ok((json!({ "q": config.q, "families": rows }), tables))
}

fn tables_for(config: &RunConfig, field: &Field, source: &mut TableSource) -> Result<Vec<FamilyTable>, HarnessError> {
    config.degrees.iter().map(|&n| source.table(field, n)).collect()
}

/// Relative errors across degrees, and whether they decrease strictly.
fn trend(errors: &[f64]) -> Value {
    json!({
        "relative_errors": errors,
        "strictly_decreasing": errors.windows(2).all(|w| w[1] < w[0]),
    })
}

fn moments(config: &RunConfig, field: &Field, source: &mut TableSource) -> Result<(Value, Vec<Table>), HarnessError> {
    let families = tables_for(config, field, source)?;
    let mut reports = Vec::new();
    let mut trends = Vec::new();
    let mut class_reports = Vec::new();
    for &k in &config.ks {
        let rs: Vec<_> = families.iter().map(|t| moment_report(t, k)).collect::<Result<_, _>>()?;
        let last = rs.last().expect("at least one degree");
        let mut t = trend(&rs.iter().map(|r| r.relative_error).collect::<Vec<_>>());
        t["k"] = json!(k);
        t["within_envelope_at_largest_n"] = json!(last.envelope.map(|e| last.relative_error <= e));
        trends.push(t);
        reports.extend(rs);
        if config.class_number {
            for t in &families {
                class_reports.push(class_number_moment_report(t, k)?);
            }
        }
    }
    let mut payload = json!({ "reports": reports, "trends": trends });
    if config.class_number {
        payload["class_number_reports"] = serde_json::to_value(&class_reports)?;
    }
    Ok((payload, Vec::new()))
}

fn even(config: &RunConfig, field: &Field, source: &mut TableSource) -> Result<(Value, Vec<Table>), HarnessError> {
    let families = tables_for(config, field, source)?;
    let mut exponents: Vec<Exponent> = config.ks.iter().map(|&k| Exponent::Integer(k)).collect();
    if let Some(z) = config.z {
        exponents = vec![Exponent::Complex(z)];
    }
    let mut reports = Vec::new();
    let mut trends = Vec::new();
    for exponent in exponents {
        let rs: Vec<_> = families
            .iter()
            .map(|t| even_degree_report(t, exponent))
            .collect::<Result<_, _>>()?;
        let mut t = trend(&rs.iter().map(|r| r.relative_error).collect::<Vec<_>>());
        t["exponent"] = json!(exponent.label());
        trends.push(t);
        reports.extend(rs);
    }
    Ok((json!({ "reports": reports, "trends": trends }), Vec::new()))
}

fn complex(config: &RunConfig, field: &Field, source: &mut TableSource) -> Result<(Value, Vec<Table>), HarnessError> {
    let z = config.z_or_default();
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    for &n in &config.degrees {
        let table = source.table(field, n)?;
        let cm =
            ComplexMomentConfig::new(config.q, n, z, config.big_n, config.allow_out_of_range).map_err(|e| match e {
                ComplexMomentError::OutOfRange { .. } => HarnessError::Config(format!("{e} (--allow-out-of-range)")),
                other => other.into(),
            })?;
        let report = complex_moment_average(field, &cm, &table)?;
        let conjugate = family_average(&cm.with_z(z.conj()), &table)?;
        let conjugate_residual = (conjugate - report.average.conj()).norm();
        let cr = cauchy_riemann_residual(&cm, &table, CR_STEP)?;
        checks.push(json!({
            "n": n,
            "conjugate_symmetry_residual": conjugate_residual,
            "cauchy_riemann_residual": cr,
            "cauchy_riemann_step": CR_STEP,
            "cauchy_riemann_tolerance": CR_TOLERANCE,
            "passes": conjugate_residual <= 1e-12 * report.average.norm().max(1.0) && cr <= CR_TOLERANCE,
        }));
        reports.push(report);
    }
    let errors: Vec<f64> = reports.iter().map(|r| r.relative_error).collect();
    let payload = json!({
        "reports": reports,
        "checks": checks,
        "trend": trend(&errors),
        "exploratory": reports.iter().any(|r| r.exploratory),
    });
    Ok((payload, Vec::new()))
}

fn model_config(config: &RunConfig) -> Result<RandomProductConfig, HarnessError> {
    Ok(RandomProductConfig::new(
        config.q,
        config.model_m,
        config.samples,
        config.seed,
    )?)
}

fn random(config: &RunConfig) -> Result<(Value, Vec<Table>), HarnessError> {
    let mc = model_config(config)?;
    let model = RandomProduct::new(mc)?;
    let samples = model.samples();
    let (q, m) = (config.q, config.model_m);
    let moments: Vec<Value> = config
        .ks
        .iter()
        .map(|&k| {
            let estimate = monte_carlo_moment(&samples, k);
            let exact = model_moment_exact(q, m, k).ok();
            let model_value = exact
                .as_ref()
                .and_then(|e| e.to_f64())
                .unwrap_or_else(|| model_moment(q, m, k as f64));
            let limit = a_z_default(q, Complex64::new(k as f64, 0.0)).a_trunc.re;
            json!({
                "k": k,
                "monte_carlo": estimate.mean,
                "std_error": estimate.std_error,
                "model_exact": exact.map(|e| e.to_string()),
                "model_value": model_value,
                "z_score": (estimate.mean - model_value) / estimate.std_error,
                "a_k": limit,
                "model_to_a_k": model_value / limit,
            })
        })
        .collect();
    let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
    let charfn: Vec<Value> = log_charfn_curve(&samples, &ts)
        .into_iter()
        .zip(&ts)
        .map(|(est, &t)| {
            let exact = model_charfn(q, m, t);
            json!({
                "t": t,
                "empirical": est.value,
                "std_error_re": est.std_error_re,
                "std_error_im": est.std_error_im,
                "product_formula": exact,
                "within_3_se": est.agrees_with(exact, 3.0),
            })
        })
        .collect();
    let decay = fit_decay(q, m, &decay_grid());

    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cdf = model_cdf_from_samples(&samples, &linear_grid(lo, hi, 201));
    let hist = log_density_histogram(&samples, 100);
    let width = (hist.hi - hist.lo) / hist.density.len() as f64;
    let mut tables = vec![
        Table {
            file_name: "model_cdf.csv".into(),
            contents: cdf.cdf.to_csv("model_cdf"),
        },
        Table {
            file_name: "model_log_cdf.csv".into(),
            contents: cdf.log_cdf.to_csv("model_log_cdf"),
        },
        Table {
            file_name: "log_density.csv".into(),
            contents: csv_table(
                &["bin_center", "density"],
                hist.density
                    .iter()
                    .enumerate()
                    .map(|(i, d)| vec![(hist.lo + (i as f64 + 0.5) * width).to_string(), d.to_string()]),
            )?,
        },
    ];
    if config.dump_samples {
        tables.push(Table {
            file_name: "samples.csv".into(),
            contents: csv_table(
                &["sample", "value", "log_value"],
                samples
                    .iter()
                    .enumerate()
                    .map(|(i, s)| vec![i.to_string(), s.value.to_string(), s.log_value.to_string()]),
            )?,
        });
    }
    let payload = json!({
        "model": mc,
        "prime_counts": model.prime_counts(),
        "moments": moments,
        "log_charfn": charfn,
        "decay_fit": decay,
        "sample_range": [lo, hi],
    });
    Ok((payload, tables))
}

fn distribution(
    config: &RunConfig,
    field: &Field,
    source: &mut TableSource,
) -> Result<(Value, Vec<Table>), HarnessError> {
    let mc = model_config(config)?;
    let mut summaries = Vec::new();
    let mut tables = Vec::new();
    let mut distances = Vec::new();
    for &n in &config.degrees {
        let table = source.table(field, n)?;
        let report = distribution_compare_table(&table, &mc)?;
        distances.push(report.ks_distance);
        summaries.push(json!({
            "q": report.q,
            "n": report.n,
            "prime_count": report.prime_count,
            "ks_distance": report.ks_distance,
            "ks_distance_log": report.ks_distance_log,
            "degenerate": report.degenerate,
        }));
        tables.push(Table {
            file_name: format!("family_cdf_n{n}.csv"),
            contents: report.family_cdf.to_csv("family_cdf"),
        });
        tables.push(Table {
            file_name: format!("model_cdf_n{n}.csv"),
            contents: report.model_cdf.to_csv("model_cdf"),
        });
    }
    let payload = json!({
        "model": mc,
        "comparisons": summaries,
        "trend": {
            "ks_distances": distances,
            "strictly_decreasing": distances.windows(2).all(|w| w[1] < w[0]),
        },
    });
    Ok((payload, tables))
}
