//! Simulate-then-fit a single qubit over many seeds and report the spread
//! of the recovered parameters.
//!
//! cargo run --release -p qasa-core --example calibrate -- [samples] [seeds]

use std::time::Instant;

use qasa_core::{default_sweep, fit_qubit, presets, sample_counts, CountRow, FitConfig, RawCounts};

fn main() {
    let mut args = std::env::args().skip(1);
    let samples: u64 = args.next().map_or(5_000_000, |s| s.parse().expect("samples"));
    let seeds: u64 = args.next().map_or(20, |s| s.parse().expect("seeds"));
    let truth = presets::QUBIT_305;
    let config = FitConfig::default();
    let mut worst = [0.0f64; 4];
    let start = Instant::now();
    for seed in 0..seeds {
        let design = default_sweep().with_samples(samples).unwrap().with_seed(seed);
        let minus = sample_counts(&truth, &design, 305).unwrap();
        let rows = design
            .fields()
            .iter()
            .zip(minus)
            .map(|(&h, c)| CountRow { h, samples, minus: vec![c] })
            .collect();
        let counts = RawCounts::new(vec![305], rows).unwrap();
        let fit = fit_qubit(&counts, 305, &config).unwrap();
        let p = fit.params;
        let err = [
            (p.beta - truth.beta).abs() / truth.beta,
            (p.b - truth.b).abs(),
            (p.eta - truth.eta).abs(),
            (p.gamma - truth.gamma).abs(),
        ];
        for (w, e) in worst.iter_mut().zip(err) {
            *w = w.max(e);
        }
        println!(
            "seed {seed:3}: beta {:.4} b {:.5} eta {:.5} gamma {:.5} | converged {} start {} evals {}",
            p.beta, p.b, p.eta, p.gamma, fit.converged, fit.start_index, fit.diagnostics.evaluations
        );
    }
    println!(
        "worst: |dbeta|/beta {:.4}  |db| {:.5}  |deta| {:.5}  |dgamma| {:.5}  ({:.2?} total)",
        worst[0],
        worst[1],
        worst[2],
        worst[3],
        start.elapsed()
    );
}
