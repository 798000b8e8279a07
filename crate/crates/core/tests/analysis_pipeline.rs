use std::collections::BTreeMap;

use qasa_core::analysis::{build_report, orientation_split, spatial_report, summarize, Parameter, SummaryOptions};
use qasa_core::estimate::{fit_chip, FitConfig, FitResult};
use qasa_core::io::format_report;
use qasa_core::simulate::{default_sweep, presets, simulate_chip, ChipTruth};
use qasa_core::{ChimeraSpec, Orientation, QubitParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn fit_truth(spec: &ChimeraSpec, truth: &ChipTruth, samples: u64, seed: u64) -> BTreeMap<u32, FitResult> {
    let design = default_sweep().with_samples(samples).unwrap().with_seed(seed);
    let fits = fit_chip(&simulate_chip(truth, &design).unwrap(), &FitConfig::default());
    assert!(fits.failures.is_empty(), "{:?}", fits.failures);
    assert_eq!(fits.results.len(), spec.operational().len());
    fits.results
}

#[test]
fn noise_median_recovered_from_truncated_normal() {
    let normal = Normal::new(presets::MEDIAN.eta, 0.01).unwrap();
    let seeds = 100;
    let mut hits = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = BTreeMap::new();
        while params.len() < 2032 {
            let eta = normal.sample(&mut rng);
            if eta >= 0.0 {
                let p = QubitParams { eta, ..presets::MEDIAN };
                params.insert(params.len() as u32, p);
            }
        }
        let s = summarize(&params, Parameter::Eta, &SummaryOptions::default()).unwrap();
        if (s.median - presets::MEDIAN.eta).abs() <= 0.002 {
            hits += 1;
        }
    }
    assert!(hits as f64 >= 0.95 * seeds as f64, "{hits}/{seeds}");
}

#[test]
fn orientation_split_survives_fitting_with_jitter() {
    let spec = ChimeraSpec::full(4).unwrap();
    let jitter = Normal::new(0.0, 0.002).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let params = spec
        .operational()
        .iter()
        .map(|&id| {
            let base = match spec.site_of(id).unwrap().orientation {
                Orientation::Horizontal => presets::HORIZONTAL,
                Orientation::Vertical => presets::VERTICAL,
            };
            let gamma = (base.gamma + jitter.sample(&mut rng)).max(0.0);
            (id, QubitParams { gamma, ..base })
        })
        .collect();
    let truth = ChipTruth::new(&spec, params).unwrap();
    let results = fit_truth(&spec, &truth, 1_000_000, 5);
    let options = SummaryOptions::default();

    let gamma = orientation_split(&results, &spec, Parameter::Gamma, &options).unwrap();
    assert!((gamma.horizontal.median - presets::HORIZONTAL.gamma).abs() <= 0.001, "{}", gamma.horizontal.median);
    assert!((gamma.vertical.median - presets::VERTICAL.gamma).abs() <= 0.001, "{}", gamma.vertical.median);
    let (h, v) = spec.orientation_groups();
    assert_eq!(gamma.horizontal.count, h.len());
    assert_eq!(gamma.vertical.count, v.len());

    let beta = orientation_split(&results, &spec, Parameter::Beta, &options).unwrap();
    let target = presets::HORIZONTAL.beta - presets::VERTICAL.beta;
    assert!((beta.median_difference - target).abs() <= 0.05, "{}", beta.median_difference);
}

#[test]
fn striped_truth_shows_in_heatmap_cells() {
    let spec = ChimeraSpec::full(4).unwrap();
    let truth = ChipTruth::orientation_split(&spec, presets::HORIZONTAL, presets::VERTICAL).unwrap();
    let results = fit_truth(&spec, &truth, 1_000_000, 9);
    let records = spatial_report(&results, &spec, Parameter::Gamma).unwrap();
    let mut cells: BTreeMap<(u32, u32), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let entry = cells.entry((r.row, r.col)).or_default();
        match r.orientation {
            Orientation::Horizontal => entry.0.push(r.value.unwrap()),
            Orientation::Vertical => entry.1.push(r.value.unwrap()),
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let striped = cells.values().filter(|(h, v)| mean(h) > mean(v)).count();
    assert!(striped as f64 >= 0.95 * cells.len() as f64, "{striped}/{}", cells.len());
}

#[test]
fn split_sign_is_stable_across_seeds() {
    let spec = ChimeraSpec::full(2).unwrap();
    let truth = ChipTruth::orientation_split(&spec, presets::HORIZONTAL, presets::VERTICAL).unwrap();
    for seed in 0..20 {
        let results = fit_truth(&spec, &truth, 100_000, seed);
        for parameter in [Parameter::Beta, Parameter::Gamma] {
            let split = orientation_split(&results, &spec, parameter, &SummaryOptions::default()).unwrap();
            assert!(split.median_difference > 0.0, "seed {seed} {parameter}: {}", split.median_difference);
        }
    }
}

#[test]
fn report_is_stable_and_ordered() {
    let spec = ChimeraSpec::without(1, [6]).unwrap();
    let truth = ChipTruth::uniform(&spec, presets::MEDIAN).unwrap();
    let results = fit_truth(&spec, &truth, 100_000, 2);
    let report = build_report(&results, &spec, &SummaryOptions { bins: 5, ..Default::default() }).unwrap();
    let text = format_report(&report).unwrap();
    assert_eq!(text, format_report(&build_report(&results, &spec, &SummaryOptions { bins: 5, ..Default::default() }).unwrap()).unwrap());
    let keys = ["\"schema_version\"", "\"chip\"", "\"orientation_convention\"", "\"n_qubits\"", "\"bins\"", "\"summaries\"", "\"orientation_splits\"", "\"heatmaps\"", "\"trends\""];
    let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let records = json["heatmaps"][0]["records"].as_array().unwrap();
    assert_eq!(records.len(), 8);
    assert!(records[6]["value"].is_null());
    assert_eq!(records.iter().filter(|r| !r["value"].is_null()).count(), 7);
}
