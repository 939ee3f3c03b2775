//! Benchmark fixtures shared by the criterion targets.

use cfsl_core::Problem;

/// Random smooth potential with Robin data, the workhorse fixture.
pub fn fixture(alpha: f64) -> Problem {
    Problem::random_smooth(7, alpha, 6, 0.4, -0.3).expect("valid fixture")
}
