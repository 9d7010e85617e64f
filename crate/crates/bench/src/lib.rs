//! Inputs shared by the benchmarks.

use brfp::baseline::IrregularSamples;
use brfp::experiments::{sum_of_sines, JointSetup};
use brfp::{KernelSpec, TimeGrid};

/// A smooth SE prior on an index grid of length `n`, observed on 2% of each
/// domain with noise variance 0.2.
pub fn joint_setup(n: usize) -> JointSetup {
    let grid = TimeGrid::index(n).expect("n >= 2");
    let spec = KernelSpec::squared_exponential(1.0, 0.001);
    JointSetup::generate(&grid, &spec, 0.02, 0.02, 0.2, 0.2, 0).expect("valid setup")
}

/// The sum of sines sampled at `count` evenly spread points of `[0, 10)`.
pub fn sine_samples(count: usize) -> IrregularSamples {
    let times: Vec<f64> = (0..count).map(|i| 10.0 * (i as f64 + 0.5) / count as f64).collect();
    let values = times.iter().map(|&t| sum_of_sines(t)).collect();
    IrregularSamples::new(times, values).expect("at least four samples")
}
