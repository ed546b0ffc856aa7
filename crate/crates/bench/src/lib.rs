//! Shared setup for the kernel benchmarks.

use oscil_core::problems::{duffing_initial, duffing_system};
use oscil_core::truncation::{select_params, DEFAULT_EPSILON};
use oscil_core::{HamiltonianSystem, SpectralParams};

/// The stiff Duffing benchmark configuration at its most efficient step
/// count (`N = 1000`, `omega h` near 10).
pub fn duffing_setup() -> (HamiltonianSystem, Vec<f64>, f64, SpectralParams) {
    let sys = duffing_system(7.0, 500.0).expect("duffing system");
    let y0 = duffing_initial(7.0, 500.0);
    let h = 20.0 / 1000.0;
    let params = select_params(sys.omega, h, sys.nu, DEFAULT_EPSILON).expect("params");
    (sys, y0, h, params)
}
