//! End-to-end acceptance suite. Each numbered criterion prints one
//! PASS/FAIL line; the test fails if any criterion fails. Monte Carlo
//! criteria pin their seeds and tolerances here, so reruns are exact.

use std::process::Command;

use betmv::eprocess::{gree_lambda, BettingStrategy, EProcess};
use betmv::evidence::{
    e_value, e_value_two_sided, p_value, Hypothesis, MeanVarSpec, ShapeClass,
};
use betmv::monitor::{self, LossSeries};
use betmv::pcombine::{chi2_sf, fisher_combine, PVector};
use betmv::sim::{self, dist, Generator, Method, SimConfig};
use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type CheckResult = Result<String, String>;

fn one_sided(mu: f64, sigma: f64, shape: ShapeClass) -> Hypothesis<f64> {
    Hypothesis::one_sided(MeanVarSpec::new(mu, sigma).unwrap(), shape)
}

fn rate_of(
    generator: Generator,
    n: usize,
    runs: usize,
    threshold: f64,
    seed: u64,
    method: Method,
    hypothesis: Hypothesis<f64>,
) -> (f64, f64) {
    let config = SimConfig::new(generator, n, runs, threshold, seed, method, hypothesis);
    let result = sim::run_rejection_experiment(&config).expect("experiment config is valid");
    (result.rejection_rate, result.standard_error)
}

/// 1. The worked closed forms at z = 3 for all four shape classes.
fn criterion_01() -> CheckResult {
    let cases: &[(ShapeClass, f64, f64)] = &[
        (ShapeClass::Plain, 9.0, 0.1),
        (ShapeClass::Symmetric, 18.0, 1.0 / 18.0),
        (ShapeClass::Unimodal, 9.0, 2.0 / 45.0),
        (ShapeClass::UnimodalSymmetric, 18.0, 2.0 / 81.0),
    ];
    for &(shape, e_want, p_want) in cases {
        let e = e_value(3.0, shape);
        let p = p_value(3.0, shape);
        if (e - e_want).abs() > 1e-12 || (p - p_want).abs() > 1e-12 {
            return Err(format!(
                "shape {}: e {e} want {e_want}, p {p} want {p_want}",
                shape.name()
            ));
        }
    }
    Ok("all eight values exact to 1e-12".to_string())
}

/// 2. Formula branches meet continuously at their switch points.
fn criterion_02() -> CheckResult {
    let mut worst: f64 = 0.0;
    // Symmetric: 1/(2 z^2) meets the Cantelli bound at z = 1.
    {
        let z: f64 = 1.0;
        let left = 1.0 / (2.0 * z * z);
        let right = 1.0 / (1.0 + z * z);
        worst = worst.max((left - right).abs());
    }
    // Unimodal: (4/9) P0 meets (4 P0 - 1)/3 at z = sqrt(5/3).
    {
        let z = (5.0f64 / 3.0).sqrt();
        let p0 = 1.0 / (1.0 + z * z);
        let left = 4.0 / 9.0 * p0;
        let right = (4.0 * p0 - 1.0) / 3.0;
        worst = worst.max((left - right).abs());
    }
    // Unimodal-symmetric: 2/(9 e) meets (3 - sqrt(3 e))/6 at e = z^2 = 4/3.
    {
        let z = (4.0f64 / 3.0).sqrt();
        let e = z * z;
        let left = 2.0 / (9.0 * e);
        let right = (3.0 - (3.0 * e).sqrt()) / 6.0;
        worst = worst.max((left - right).abs());
    }
    if worst < 1e-12 {
        Ok(format!("max branch gap {worst:.2e}"))
    } else {
        Err(format!("branch gap {worst:e} exceeds 1e-12"))
    }
}

/// 3. Rejection-rate table: Normal-Laplace alternative with mean 0.5 and
/// variance 2, n = 100, 1000 runs, threshold 20. The reference e-mixture
/// and e-GREE rates for the plain hypothesis correspond to evaluating the
/// terminal wealth M_n rather than the running maximum this library uses
/// (terminal evaluation matches the e-GREE reference exactly), so those two
/// rows fail under the anytime rejection rule implemented here. All rows
/// are measured and reported either way.
fn criterion_03() -> CheckResult {
    let generator = Generator::NormalLaplace {
        mean: 0.5,
        variance: 2.0,
    };
    let rows: &[(Method, ShapeClass, f64, f64, u64)] = &[
        (Method::EMixture, ShapeClass::Plain, 0.419, 0.047, 301),
        (Method::EMixture, ShapeClass::Symmetric, 0.998, 0.010, 302),
        (Method::EGree, ShapeClass::Plain, 0.274, 0.045, 303),
        (Method::EGree, ShapeClass::Symmetric, 0.990, 0.015, 304),
        (Method::EBatch, ShapeClass::Plain, 0.639, 0.046, 305),
        (Method::PBatch, ShapeClass::Plain, 0.664, 0.045, 306),
    ];
    let mut in_band = Vec::new();
    let mut out_of_band = Vec::new();
    for &(method, shape, target, tolerance, seed) in rows {
        let (rate, _) = rate_of(
            generator.clone(),
            100,
            1000,
            20.0,
            seed,
            method,
            one_sided(0.0, 1.0, shape),
        );
        let label = format!("{}/{}", method.name(), shape.name());
        if (rate - target).abs() > tolerance {
            out_of_band.push(format!("{label} {rate:.3} vs {target}+-{tolerance}"));
        } else {
            in_band.push(format!("{label}:{rate:.3}"));
        }
    }
    for (method, seed) in [(Method::PFisher, 307u64), (Method::PSimes, 308u64)] {
        let (rate, _) = rate_of(
            generator.clone(),
            100,
            1000,
            20.0,
            seed,
            method,
            one_sided(0.0, 1.0, ShapeClass::Plain),
        );
        if rate > 0.01 {
            out_of_band.push(format!("{} {rate:.3} vs <=0.01", method.name()));
        } else {
            in_band.push(format!("{}:{rate:.3}", method.name()));
        }
    }
    if out_of_band.is_empty() {
        Ok(in_band.join(" "))
    } else {
        Err(format!(
            "out of band: {}; in band: {}",
            out_of_band.join(", "),
            in_band.join(" ")
        ))
    }
}

/// 4. Ville calibration: standard null data, every applicable e-process
/// method rejects at threshold 20 with frequency at most 0.05 + 3 se.
/// (The raw-bet GRAPA strategies need bounded data; their null calibration
/// runs on a beta null in the sequential test suite.)
fn criterion_04() -> CheckResult {
    let generator = Generator::NormalLaplace {
        mean: 0.0,
        variance: 1.0,
    };
    let one = one_sided(0.0, 1.0, ShapeClass::Plain);
    let two = Hypothesis::two_sided(0.0, 0.0, 1.0).unwrap();
    let cases: &[(Method, Hypothesis<f64>, u64)] = &[
        (Method::EMixture, one, 401),
        (Method::EGree, one, 402),
        (Method::EMixture2s, two, 403),
        (Method::EGree2s, two, 404),
    ];
    let mut details = Vec::new();
    for &(method, hypothesis, seed) in cases {
        let (rate, se) = rate_of(generator.clone(), 100, 2000, 20.0, seed, method, hypothesis);
        let bound = 0.05 + 3.0 * se;
        if rate > bound {
            return Err(format!(
                "{}: rate {rate} exceeds Ville bound {bound}",
                method.name()
            ));
        }
        details.push(format!("{}:{rate:.4}", method.name()));
    }
    Ok(details.join(" "))
}

/// 5. Supermartingale property: mean wealth at t in {10, 50, 100} stays at
/// or below one (within 3 se) under each extremal null generator.
fn criterion_05() -> CheckResult {
    let runs = 5000usize;
    let checkpoints = [10usize, 50, 100];
    let cases: &[(Generator, ShapeClass, u64)] = &[
        (Generator::ExtremalPlain { alpha: 0.2 }, ShapeClass::Plain, 501),
        (
            Generator::ExtremalSymmetric { alpha: 0.25 },
            ShapeClass::Symmetric,
            502,
        ),
        (
            Generator::ExtremalUnimodal { a: 0.5 },
            ShapeClass::Unimodal,
            503,
        ),
        (
            Generator::ExtremalUnimodalSymmetric { p: 0.25 },
            ShapeClass::UnimodalSymmetric,
            504,
        ),
    ];
    let mut worst_margin = f64::NEG_INFINITY;
    for &(ref generator, shape, seed) in cases {
        for strategy in [BettingStrategy::default_mixture(), BettingStrategy::egree()] {
            // wealth[k][r]: wealth at checkpoint k in run r
            let mut wealth = vec![Vec::with_capacity(runs); checkpoints.len()];
            for run in 0..runs {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(run as u64);
                let mut process =
                    EProcess::new(one_sided(0.0, 1.0, shape), strategy.clone()).unwrap();
                for i in 1..=100 {
                    let w = process.update(generator.sample(i, &mut rng)).unwrap();
                    if let Some(k) = checkpoints.iter().position(|&t| t == i) {
                        wealth[k].push(w);
                    }
                }
            }
            for (k, t) in checkpoints.iter().enumerate() {
                let n = wealth[k].len() as f64;
                let mean = wealth[k].iter().sum::<f64>() / n;
                let var = wealth[k]
                    .iter()
                    .map(|w| (w - mean) * (w - mean))
                    .sum::<f64>()
                    / (n - 1.0);
                let se = (var / n).sqrt();
                let margin = mean - (1.0 + 3.0 * se);
                worst_margin = worst_margin.max(margin);
                if margin > 0.0 {
                    return Err(format!(
                        "{} t={t}: mean wealth {mean} exceeds 1 + 3 se (se {se})",
                        generator.name()
                    ));
                }
            }
        }
    }
    Ok(format!("worst mean-1-3se margin {worst_margin:.4}"))
}

/// 6. Semi-precision: under the extremal constructions the frequency of
/// {p <= alpha} equals alpha (3 se tolerance; the atom sits exactly at the
/// level, so the comparison allows 1e-9 of float slack).
fn criterion_06() -> CheckResult {
    let n = 200_000usize;
    let mut details = Vec::new();
    for &alpha in &[0.05f64, 0.25, 0.5] {
        let cases: Vec<(Generator, ShapeClass, &str)> = vec![
            (Generator::ExtremalPlain { alpha }, ShapeClass::Plain, "plain"),
            (
                Generator::ExtremalSymmetric { alpha },
                ShapeClass::Symmetric,
                "sym",
            ),
            (
                Generator::ExtremalUnimodalSymmetric {
                    p: if alpha <= 1.0 / 6.0 { 3.0 * alpha } else { 0.5 },
                },
                ShapeClass::UnimodalSymmetric,
                "us",
            ),
        ];
        for (generator, shape, label) in cases {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + (alpha * 1000.0) as u64);
            let mut hits = 0usize;
            for i in 1..=n {
                let z = generator.sample(i, &mut rng);
                if p_value(z, shape) <= alpha + 1e-9 {
                    hits += 1;
                }
            }
            let freq = hits as f64 / n as f64;
            let se = (alpha * (1.0 - alpha) / n as f64).sqrt();
            if (freq - alpha).abs() > 3.0 * se {
                return Err(format!(
                    "{label} alpha={alpha}: frequency {freq} vs {alpha} (se {se})"
                ));
            }
            details.push(format!("{label}@{alpha}:{freq:.4}"));
        }
    }
    Ok(details.join(" "))
}

/// 7. Growth-optimal stake against a fine grid search plus the analytic
/// examples.
fn criterion_07() -> CheckResult {
    let flat: f64 = gree_lambda(&[0.0, 0.0, 0.0], 0.5).unwrap();
    if flat.abs() > 1e-6 {
        return Err(format!("zero history stake {flat}"));
    }
    let capped: f64 = gree_lambda(&[2.0], 0.5).unwrap();
    if (capped - 0.5).abs() > 1e-6 {
        return Err(format!("capped stake {capped}"));
    }
    let interior: f64 = gree_lambda(&[0.0, 3.0], 0.5).unwrap();
    if (interior - 0.25).abs() > 1e-6 {
        return Err(format!("interior stake {interior}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let len = 1 + case % 25;
        let history: Vec<f64> = (0..len)
            .map(|_| {
                let z = dist::std_normal_quantile(dist::uniform_open01(&mut rng)) + 0.4;
                z.max(0.0).powi(2)
            })
            .collect();
        let got = gree_lambda(&history, 0.5).unwrap();
        let mut best_l = 0.0;
        let mut best_f = f64::NEG_INFINITY;
        for i in 0..=50_000 {
            let l = i as f64 * 1e-5;
            let f: f64 = history.iter().map(|&e| (1.0 - l + l * e).ln()).sum();
            if f > best_f {
                best_f = f;
                best_l = l;
            }
        }
        let diff = (got - best_l).abs();
        worst = worst.max(diff);
        if diff > 1e-4 {
            return Err(format!("case {case}: {got} vs grid {best_l}"));
        }
    }
    Ok(format!("max |stake - grid argmax| {worst:.2e}"))
}

/// 8. Fisher combination against closed forms and the chi-square survival
/// function against the Poisson-sum oracle at 20 points.
fn criterion_08() -> CheckResult {
    let two_tenths: f64 = fisher_combine(&PVector::new(vec![0.1, 0.1]).unwrap());
    if (two_tenths - 0.0560517).abs() > 1e-6 {
        return Err(format!("fisher([0.1, 0.1]) = {two_tenths}"));
    }
    let single: f64 = fisher_combine(&PVector::new(vec![0.5]).unwrap());
    if (single - 0.5).abs() > 1e-12 {
        return Err(format!("fisher([0.5]) = {single}"));
    }

    let poisson_oracle = |x: f64, df: usize| -> f64 {
        let y = x / 2.0;
        let mut term = (-y).exp();
        let mut sum = term;
        for j in 1..df / 2 {
            term *= y / j as f64;
            sum += term;
        }
        sum
    };
    let points: &[(f64, usize)] = &[
        (0.1, 2),
        (1.0, 2),
        (3.0, 2),
        (8.0, 2),
        (0.5, 4),
        (2.0, 4),
        (5.0, 4),
        (12.0, 4),
        (3.0, 6),
        (9.0, 6),
        (24.0, 6),
        (4.0, 10),
        (11.0, 10),
        (30.0, 10),
        (60.0, 10),
        (12.0, 20),
        (22.0, 20),
        (45.0, 20),
        (35.0, 40),
        (80.0, 40),
    ];
    let mut worst: f64 = 0.0;
    for &(x, df) in points {
        let got: f64 = chi2_sf(x, df).unwrap();
        let want = poisson_oracle(x, df);
        let err = ((got - want) / want).abs();
        worst = worst.max(err);
        if err > 1e-10 {
            return Err(format!("chi2_sf({x}, {df}): rel err {err:e}"));
        }
    }
    Ok(format!("20 points, max rel err {worst:.2e}"))
}

/// 9. Power ordering on beta alternatives (mean one sigma above the tested
/// bound, n = 20, 1000 runs, threshold 20): the adaptive e-GREE stake beats
/// the fixed mixture everywhere, beats the bounded-support GRAPA bet when
/// the variance is small, and loses to it when the variance is large.
/// Known exception: at sigma = 0.1 the aGRAPA stake clamp c/mu = 2.5 sits
/// near the growth optimum gap/(sigma^2+gap^2) = 5, so aGRAPA decisively
/// beats e-GREE there (confirmed by an independent replication of both
/// methods, with and without regularized moment estimates, under both the
/// running-maximum and terminal rejection rules). That comparison fails.
fn criterion_09() -> CheckResult {
    let mu = 0.2;
    let mut details = Vec::new();
    let mut rates = std::collections::HashMap::new();
    for (s_idx, &sigma) in [0.05f64, 0.1, 0.3].iter().enumerate() {
        let generator = Generator::BetaMeanVar {
            mean: mu + sigma,
            variance: sigma * sigma,
        };
        for (m_idx, method) in [Method::EGree, Method::EMixture, Method::Agrapa]
            .into_iter()
            .enumerate()
        {
            let seed = 900 + (s_idx * 3 + m_idx) as u64;
            let (rate, se) = rate_of(
                generator.clone(),
                20,
                1000,
                20.0,
                seed,
                method,
                one_sided(mu, sigma, ShapeClass::Plain),
            );
            rates.insert((s_idx, method.name()), (rate, se));
            details.push(format!("{}@{sigma}:{rate:.3}", method.name()));
        }
    }
    let pooled = |a: (f64, f64), b: (f64, f64)| (a.1 * a.1 + b.1 * b.1).sqrt();
    let mut violations = Vec::new();
    for (s_idx, sigma) in [0.05f64, 0.1, 0.3].into_iter().enumerate() {
        let egree = rates[&(s_idx, "e-gree")];
        let mixture = rates[&(s_idx, "e-mixture")];
        let agrapa = rates[&(s_idx, "agrapa")];
        if egree.0 < mixture.0 - 3.0 * pooled(egree, mixture) {
            violations.push(format!(
                "sigma {sigma}: e-gree {:.3} below e-mixture {:.3}",
                egree.0, mixture.0
            ));
        }
        if s_idx < 2 && egree.0 < agrapa.0 - 3.0 * pooled(egree, agrapa) {
            violations.push(format!(
                "sigma {sigma}: e-gree {:.3} below agrapa {:.3}",
                egree.0, agrapa.0
            ));
        }
        if s_idx == 2 && agrapa.0 < egree.0 - 3.0 * pooled(egree, agrapa) {
            violations.push(format!(
                "sigma {sigma}: agrapa {:.3} below e-gree {:.3}",
                agrapa.0, egree.0
            ));
        }
    }
    if violations.is_empty() {
        Ok(details.join(" "))
    } else {
        Err(format!(
            "{}; all rates: {}",
            violations.join(", "),
            details.join(" ")
        ))
    }
}

/// 10. The interval e-value with a collapsed interval equals the two-sided
/// point statistic exactly on a 1000-point grid.
fn criterion_10() -> CheckResult {
    let mu = 0.3;
    let sigma = 0.7;
    for i in 0..1000 {
        let x = -5.0 + 10.0 * i as f64 / 999.0;
        let got = e_value_two_sided(x, mu, mu, sigma).unwrap();
        let d = x - mu;
        let want = d * d / (sigma * sigma);
        if got.to_bits() != want.to_bits() {
            return Err(format!("x = {x}: {got} != {want}"));
        }
    }
    Ok("bit-exact at all 1000 grid points".to_string())
}

/// 11. Synthetic regime shift: a null regime estimated from 400 points,
/// then the loss mean jumps by two estimated standard deviations; e-GREE
/// at threshold 20 must detect within the 500 post-break points in at
/// least 95% of 200 seeded runs. (Measured rate reported for calibration;
/// real market-data day counts are out of scope without the data.)
fn criterion_11() -> CheckResult {
    let mu0 = 0.0005;
    let sigma0 = 0.01;
    let runs = 200usize;
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let mut detections = 0usize;
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(1100);
        rng.set_stream(run as u64);
        let pre: Vec<f64> = (0..400)
            .map(|_| dist::sample_normal(&mut rng, mu0, sigma0))
            .collect();
        let pre_dates: Vec<NaiveDate> = (0..400).map(|i| start + Days::new(i)).collect();
        let pre_series = LossSeries::from_parts(pre_dates, pre).unwrap();
        let estimate = monitor::estimate_null(
            &pre_series,
            start,
            start + Days::new(399),
        )
        .unwrap();

        let shifted_mean = estimate.mu_hat + 2.0 * estimate.sigma_hat;
        let post: Vec<f64> = (0..500)
            .map(|_| dist::sample_normal(&mut rng, shifted_mean, sigma0))
            .collect();
        let post_dates: Vec<NaiveDate> =
            (0..500).map(|i| start + Days::new(400 + i)).collect();
        let post_series = LossSeries::from_parts(post_dates, post).unwrap();

        let report = monitor::detect(
            &post_series,
            &estimate,
            BettingStrategy::egree(),
            ShapeClass::Plain,
            &[20.0],
        )
        .unwrap();
        if report.crossings[0].is_some() {
            detections += 1;
        }
    }
    let rate = detections as f64 / runs as f64;
    if rate >= 0.95 {
        Ok(format!("detection rate {rate:.3} over {runs} runs"))
    } else {
        Err(format!("detection rate {rate} below 0.95"))
    }
}

/// 12. The simulate command is byte-deterministic in its seed, including
/// across thread counts.
fn criterion_12() -> CheckResult {
    let exe = env!("CARGO_BIN_EXE_betmv");
    let run = |jobs: &str| -> Result<Vec<u8>, String> {
        let output = Command::new(exe)
            .args([
                "--seed",
                "42",
                "--jobs",
                jobs,
                "simulate",
                "--method",
                "e-gree",
                "--gen",
                "nl",
                "--gen-mean",
                "0.5",
                "--gen-var",
                "2.0",
                "--n",
                "50",
                "--runs",
                "200",
                "--threshold",
                "20",
            ])
            .output()
            .map_err(|e| format!("spawn failed: {e}"))?;
        if !output.status.success() {
            return Err(format!(
                "exit {:?}: {}",
                output.status.code(),
                String::from_utf8_lossy(&output.stderr)
            ));
        }
        Ok(output.stdout)
    };
    let first = run("1")?;
    let second = run("1")?;
    let threaded = run("3")?;
    if first.is_empty() {
        return Err("no output produced".to_string());
    }
    if first != second {
        return Err("same seed, same jobs: outputs differ".to_string());
    }
    if first != threaded {
        return Err("same seed, different jobs: outputs differ".to_string());
    }
    Ok(format!(
        "byte-identical across reruns and thread counts ({} bytes)",
        first.len()
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(usize, &str, fn() -> CheckResult)> = vec![
        (1, "closed-form evidence at z = 3", criterion_01),
        (2, "p-value branch continuity", criterion_02),
        (3, "rejection-rate table reproduction", criterion_03),
        (4, "null calibration via Ville's inequality", criterion_04),
        (5, "supermartingale mean under extremal nulls", criterion_05),
        (6, "semi-precision of extremal p-value levels", criterion_06),
        (7, "growth-optimal stake vs grid-search oracle", criterion_07),
        (8, "Fisher and chi-square survival oracles", criterion_08),
        (9, "power ordering on beta alternatives", criterion_09),
        (10, "interval e-value point reduction", criterion_10),
        (11, "synthetic regime-shift detection", criterion_11),
        (12, "simulate determinism by seed", criterion_12),
    ];
    let mut failures = Vec::new();
    for (number, name, check) in criteria {
        match check() {
            Ok(detail) => println!("criterion {number:2} PASS {name} [{detail}]"),
            Err(reason) => {
                println!("criterion {number:2} FAIL {name}: {reason}");
                failures.push(number);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
