//! Shared fixtures for the benchmarks.

use defect_forge::profile::{solve_unchecked, RadialGrid, RadialProfile, SolveOptions, DEFAULT_RATIO};

/// Solved alpha = 8, k = 1 profile on (0, 20] with `n` nodes.
pub fn unit_profile(n: usize) -> RadialProfile {
    let grid = RadialGrid::geometric_near_zero(n, 20.0, DEFAULT_RATIO).expect("valid grid");
    solve_unchecked(8.0, 1, grid, &SolveOptions::default())
        .expect("reference solve")
        .0
}
