//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Positional arguments filter by criterion id,
//! e.g. `cargo test --test acceptance -- A2 A7`.

use std::collections::BTreeMap;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qasa_core::analysis::{build_report, fit_log_trend, orientation_split, AnnealSweepPoint, Parameter, SummaryOptions};
use qasa_core::estimate::{empirical_estimates, fit_chip, fit_qubit, FitConfig};
use qasa_core::io::{format_params, format_raw, read_raw, write_raw};
use qasa_core::model::{density_matrix_expectation, effective_field, outcome_probability, spin_expectation};
use qasa_core::simulate::{default_sweep, presets, sample_counts, simulate_chip, ChipTruth, CountRow, RawCounts, SweepDesign};
use qasa_core::{ChimeraSpec, QubitParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

type Verdict = (bool, String);

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap()
}

/// A1: closed form against the density-matrix oracle.
fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let h = rng.random_range(-1.0..=1.0);
        let p = QubitParams::new(
            rng.random_range(1.0..=20.0),
            rng.random_range(-0.05..=0.05),
            rng.random_range(0.0..=0.1),
            rng.random_range(0.0..=0.05),
        )
        .unwrap();
        let d = (spin_expectation(h, &p).unwrap() - density_matrix_expectation(h, &p).unwrap()).abs();
        worst = worst.max(d);
    }
    (worst <= 1e-12, format!("max |closed form - oracle| = {worst:.3e} over 1000 draws"))
}

fn recovered(truth: &QubitParams, fit: &QubitParams) -> bool {
    (fit.beta - truth.beta).abs() / truth.beta <= 0.02
        && (fit.b - truth.b).abs() <= 0.002
        && (fit.eta - truth.eta).abs() <= 0.005
        && (fit.gamma - truth.gamma).abs() <= 0.003
}

/// A2: single-qubit recovery at full sample size, checked on every one of 20 seeds.
fn single_qubit_recovery() -> Verdict {
    let truth = presets::QUBIT_305;
    let mut worst = [0.0f64; 4];
    let mut passed = 0;
    for seed in 0..20 {
        let design = default_sweep().with_seed(seed);
        let minus = sample_counts(&truth, &design, 305).unwrap();
        let rows = design
            .fields()
            .iter()
            .zip(minus)
            .map(|(&h, m)| CountRow { h, samples: design.samples_per_field(), minus: vec![m] })
            .collect();
        let counts = RawCounts::new(vec![305], rows).unwrap();
        let fit = fit_qubit(&counts, 305, &FitConfig::default()).unwrap();
        let p = fit.params;
        worst[0] = worst[0].max((p.beta - truth.beta).abs() / truth.beta);
        worst[1] = worst[1].max((p.b - truth.b).abs());
        worst[2] = worst[2].max((p.eta - truth.eta).abs());
        worst[3] = worst[3].max((p.gamma - truth.gamma).abs());
        if fit.converged && recovered(&truth, &p) {
            passed += 1;
        }
    }
    (
        passed == 20,
        format!(
            "{passed}/20 seeds within tolerance; worst |dbeta|/beta {:.4} |db| {:.5} |deta| {:.5} |dgamma| {:.5}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

/// A3: simulate, fit and analyze a 32-qubit chip on four workers.
fn desk_chip_pipeline() -> Verdict {
    let spec = ChimeraSpec::full(2).unwrap();
    let truth = ChipTruth::uniform(&spec, presets::MEDIAN).unwrap();
    let design = default_sweep().with_samples(100_000).unwrap().with_seed(3);
    let (fits, report) = pool(4).install(|| {
        let counts = simulate_chip(&truth, &design).unwrap();
        let fits = fit_chip(&counts, &FitConfig::default());
        let report = build_report(&fits.results, &spec, &SummaryOptions::default()).unwrap();
        (fits, report)
    });
    let converged = fits.results.values().filter(|r| r.converged).count();
    let median = report.summaries[0].median;
    let rel = (median - 10.54).abs() / 10.54;
    (
        fits.failures.is_empty() && converged == 32 && rel <= 0.05,
        format!("{converged}/32 converged, {} failed; median beta {median:.4} (rel. error {rel:.4})", fits.failures.len()),
    )
}

/// A4: orientation split recovery over 20 seeds.
fn orientation_split_detection() -> Verdict {
    let spec = ChimeraSpec::full(4).unwrap();
    let truth = ChipTruth::orientation_split(&spec, presets::HORIZONTAL, presets::VERTICAL).unwrap();
    let targets = [
        (Parameter::Beta, presets::HORIZONTAL.beta - presets::VERTICAL.beta),
        (Parameter::Gamma, presets::HORIZONTAL.gamma - presets::VERTICAL.gamma),
    ];
    let mut good = 0;
    let mut worst = [0.0f64; 2];
    for seed in 0..20 {
        let design = default_sweep().with_samples(1_000_000).unwrap().with_seed(seed);
        let counts = simulate_chip(&truth, &design).unwrap();
        let fits = fit_chip(&counts, &FitConfig::default());
        let mut ok = fits.failures.is_empty();
        for (i, (parameter, target)) in targets.iter().enumerate() {
            let split = orientation_split(&fits.results, &spec, *parameter, &SummaryOptions::default()).unwrap();
            let rel = (split.median_difference - target).abs() / target.abs();
            worst[i] = worst[i].max(rel);
            ok &= split.median_difference.signum() == target.signum() && rel <= 0.5;
        }
        if ok {
            good += 1;
        }
    }
    (
        good >= 19,
        format!(
            "{good}/20 seeds recover both splits; worst rel. error beta {:.3} gamma {:.3}",
            worst[0], worst[1]
        ),
    )
}

/// A5: misalignment probability at unit-free field 5.
fn misalignment_rate() -> Verdict {
    let p = outcome_probability(5.0).unwrap().minus;
    let target = 1.0 / 22026.0;
    let rel = (p - target).abs() / target;
    (rel <= 0.01, format!("p_minus = {p:.6e}, rel. deviation from 1/22026 = {rel:.2e}"))
}

/// A6: noiseless, bias-free, transverse-free qubits follow the linear law.
fn classical_limit() -> Verdict {
    let mut worst = 0.0f64;
    for beta in [1.0, 10.0, 100.0] {
        let p = QubitParams::classical(beta).unwrap();
        for &h in default_sweep().fields() {
            worst = worst.max((effective_field(h, &p).unwrap() - beta * h).abs());
        }
    }
    (worst <= 1e-12, format!("max |h_eff - beta*h| = {worst:.3e} over 3 x 81 fields"))
}

/// A7: interval coverage over 10^4 binomial replicates per field.
fn interval_coverage() -> Verdict {
    let samples = 100_000u64;
    let replicates = 10_000u32;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut all = true;
    let mut detail = Vec::new();
    for h_eff in [0.0, 1.0, 2.0] {
        let binomial = Binomial::new(samples, outcome_probability(h_eff).unwrap().minus).unwrap();
        let minus: Vec<u64> = (0..replicates).map(|_| binomial.sample(&mut rng)).collect();
        let counts = RawCounts::new((0..replicates).collect(), vec![CountRow { h: h_eff, samples, minus }]).unwrap();
        let covered = (0..replicates)
            .filter(|&q| {
                let e = &empirical_estimates(&counts, q, 0.9973).unwrap()[0];
                e.ci_low <= h_eff && h_eff <= e.ci_high
            })
            .count();
        let freq = covered as f64 / replicates as f64;
        all &= (0.99..=1.0).contains(&freq);
        detail.push(format!("h_eff={h_eff}: {freq:.4}"));
    }
    (all, format!("coverage {}", detail.join(", ")))
}

/// A8: two-point logarithmic trend.
fn two_point_trend() -> Verdict {
    let point = |t: f64, beta: f64| {
        let results = BTreeMap::from([(0u32, QubitParams::new(beta, 0.0, 0.03, 0.02).unwrap())]);
        AnnealSweepPoint::from_results(t, &results).unwrap()
    };
    let fit = fit_log_trend(&[point(1.0, 10.5), point(125.0, 15.7)], Parameter::Beta).unwrap();
    let expected = 5.2 / 125f64.ln();
    let d = (fit.c1 - expected).abs();
    (d <= 1e-12, format!("c1 = {:.15}, |c1 - 5.2/ln 125| = {d:.2e}", fit.c1))
}

/// Re-emits canonical text with rows split into duplicate-field pairs and
/// both rows and spin columns shuffled.
fn scramble(counts: &RawCounts, rng: &mut ChaCha8Rng) -> String {
    let mut order: Vec<usize> = (0..counts.qubits().len()).collect();
    order.shuffle(rng);
    let mut lines = Vec::new();
    for row in counts.rows() {
        let first = row.samples / 2;
        let parts: Vec<(u64, Vec<u64>)> = if first == 0 {
            vec![(row.samples, row.minus.clone())]
        } else {
            let a: Vec<u64> = row.minus.iter().map(|&m| m.min(first)).collect();
            let b = row.minus.iter().zip(&a).map(|(m, a)| m - a).collect();
            vec![(first, a), (row.samples - first, b)]
        };
        for (samples, minus) in parts {
            let cells: Vec<String> = order.iter().map(|&i| minus[i].to_string()).collect();
            lines.push(format!("{},{samples},{}", row.h, cells.join(",")));
        }
    }
    lines.shuffle(rng);
    let header: Vec<String> = order.iter().map(|&i| format!("spin_{}", counts.qubits()[i])).collect();
    format!("h,samples,{}\n{}\n", header.join(","), lines.join("\n"))
}

/// A9: canonical CSV round trip over a generated corpus.
fn format_fidelity() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let files = 120;
    let mut failures = Vec::new();
    let (one, four) = (pool(1), pool(4));
    for i in 0..files {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let grid = rng.random_range(1..=2u32);
        let capacity = 8 * grid * grid;
        let missing: Vec<u32> = (0..rng.random_range(0..=4)).map(|_| rng.random_range(0..capacity)).collect();
        let spec = ChimeraSpec::without(grid, missing).unwrap();
        let params = spec
            .operational()
            .iter()
            .map(|&id| {
                // Every fifth qubit is saturated so whole columns are 0 or M.
                let beta = if id % 5 == 0 { 100.0 } else { rng.random_range(1.0..20.0) };
                let p = QubitParams::new(beta, rng.random_range(-0.01..0.01), rng.random_range(0.0..0.1), rng.random_range(0.0..0.05));
                (id, p.unwrap())
            })
            .collect();
        let truth = ChipTruth::new(&spec, params).unwrap();
        let step = [0.025, 0.05, 0.1, 0.25][rng.random_range(0..4)];
        let samples = [1, 7, 1000, 100_000][rng.random_range(0..4)];
        let design = SweepDesign::uniform(-1.0, 1.0, step, samples, i, "").unwrap();

        let a = one.install(|| simulate_chip(&truth, &design)).unwrap();
        let b = four.install(|| simulate_chip(&truth, &design)).unwrap();
        let again = four.install(|| simulate_chip(&truth, &design)).unwrap();
        let text = format_raw(&a);
        if text != format_raw(&b) || text != format_raw(&again) {
            failures.push(format!("file {i}: output depends on worker count or run"));
            continue;
        }

        let canonical = dir.path().join(format!("canonical_{i}.csv"));
        write_raw(&a, &canonical).unwrap();
        let back = read_raw(&canonical).unwrap();
        let rewritten = dir.path().join(format!("rewritten_{i}.csv"));
        write_raw(&back, &rewritten).unwrap();
        if back != a || fs::read(&canonical).unwrap() != fs::read(&rewritten).unwrap() {
            failures.push(format!("file {i}: canonical round trip differs"));
            continue;
        }

        let messy = dir.path().join(format!("messy_{i}.csv"));
        fs::write(&messy, scramble(&a, &mut rng)).unwrap();
        let merged = read_raw(&messy).unwrap();
        if merged != a || format_raw(&merged) != text {
            failures.push(format!("file {i}: duplicate rows or column order not canonicalized"));
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!("{files} files round-trip byte-identically across runs and 1/4 workers")
    } else {
        format!("{} of {files} files failed; first: {}", failures.len(), failures[0])
    };
    (ok, detail)
}

/// A10: full-chip simulate and fit; parameter table identical for 1 and 8 workers.
fn full_chip_throughput() -> Verdict {
    let missing: Vec<u32> = (0..16).map(|i| i * 128 + 37).collect();
    let spec = ChimeraSpec::without(16, missing).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2032);
    let params: BTreeMap<u32, QubitParams> = spec
        .operational()
        .iter()
        .map(|&id| {
            let m = presets::MEDIAN;
            let p = QubitParams::new(
                m.beta * rng.random_range(0.9..1.1),
                m.b + rng.random_range(-0.002..0.002),
                m.eta * rng.random_range(0.8..1.2),
                m.gamma * rng.random_range(0.8..1.2),
            );
            (id, p.unwrap())
        })
        .collect();
    let truth = ChipTruth::new(&spec, params).unwrap();
    let design = default_sweep().with_seed(16);

    let tables: Vec<(String, usize, Duration)> = [8, 1]
        .into_iter()
        .map(|workers| {
            let t = Instant::now();
            let (table, converged) = pool(workers).install(|| {
                let counts = simulate_chip(&truth, &design).unwrap();
                let fits = fit_chip(&counts, &FitConfig::default());
                let converged = fits.results.values().filter(|r| r.converged).count();
                (format_params(&fits.results, &spec).unwrap(), converged)
            });
            (table, converged, t.elapsed())
        })
        .collect();
    let (eight, one) = (&tables[0], &tables[1]);
    let rows = eight.0.lines().count() - 1;
    let identical = eight.0 == one.0;
    (
        identical && rows == 2032 && eight.2 < Duration::from_secs(30 * 60),
        format!(
            "{rows} qubits ({} converged); 8 workers {:.1}s, 1 worker {:.1}s; tables identical: {identical}",
            eight.1,
            eight.2.as_secs_f64(),
            one.2.as_secs_f64()
        ),
    )
}

struct Criterion {
    id: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: "A1", limit: Some(Duration::from_secs(1)), run: oracle_equivalence },
        Criterion { id: "A2", limit: Some(Duration::from_secs(60)), run: single_qubit_recovery },
        Criterion { id: "A3", limit: Some(Duration::from_secs(120)), run: desk_chip_pipeline },
        Criterion { id: "A4", limit: Some(Duration::from_secs(600)), run: orientation_split_detection },
        Criterion { id: "A5", limit: Some(Duration::from_secs(1)), run: misalignment_rate },
        Criterion { id: "A6", limit: Some(Duration::from_secs(1)), run: classical_limit },
        Criterion { id: "A7", limit: Some(Duration::from_secs(60)), run: interval_coverage },
        Criterion { id: "A8", limit: Some(Duration::from_secs(1)), run: two_point_trend },
        Criterion { id: "A9", limit: Some(Duration::from_secs(60)), run: format_fidelity },
        Criterion { id: "A10", limit: None, run: full_chip_throughput },
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filters.is_empty() || filters.iter().any(|f| f == c.id)) {
        let start = Instant::now();
        let (ok, detail) = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.limit.is_none_or(|limit| elapsed < limit);
        let status = if ok && in_time { "PASS" } else { "FAIL" };
        let budget = match c.limit {
            Some(limit) if !in_time => format!(", over the {}s limit", limit.as_secs()),
            _ => String::new(),
        };
        println!("{:<4}{status}  {detail} [{:.2}s{budget}]", c.id, elapsed.as_secs_f64());
        if status == "FAIL" {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
