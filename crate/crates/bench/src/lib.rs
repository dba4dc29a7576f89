//! Shared fixtures for the benchmark targets.

use iqa_core::image::ImageTensor;
use iqa_core::rng::Rng;

/// Deterministic test image for the distortion benchmarks.
pub fn bench_image(side: usize) -> ImageTensor {
    iqa_core::synth::synth_image(side, side, 0xBE7C)
}

/// Paired random score vectors for the loss and metric benchmarks.
pub fn score_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = Rng::from_seed(seed);
    let a = (0..n).map(|_| rng.next_f64()).collect();
    let b = (0..n).map(|_| rng.next_f64()).collect();
    (a, b)
}

/// A planted prediction matrix for the meta-learner benchmark.
pub fn planted_matrix(
    predictors: usize,
    samples: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = Rng::from_seed(seed);
    let columns: Vec<Vec<f64>> = (0..predictors)
        .map(|_| (0..samples).map(|_| rng.next_f64()).collect())
        .collect();
    let target = (0..samples)
        .map(|i| 0.5 * columns[0][i] + 0.3 * columns[1 % predictors][i] + 0.02 * rng.next_f64())
        .collect();
    (columns, target)
}
