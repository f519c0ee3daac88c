//! Shared fixtures for the benchmarks: the attractive BCS model at
//! chemical potential 0.2 and unit coupling on one-dimensional windows.

use mflab_core::{c64, models, FockContext, ThermoGame};

/// BCS game on the window of half-width `l` with two spins.
pub fn bcs_game(l: usize, beta: f64) -> ThermoGame {
    let ctx = FockContext::new(1, l, &["up", "dn"]).expect("valid window");
    ThermoGame::new(models::bcs(1, 0.2, 1.0, "up", "dn"), ctx, beta).expect("valid game")
}

/// A point near the paired gap solution.
pub fn paired_point() -> Vec<c64> {
    vec![c64::new(0.45, 0.05), c64::new(0.45, -0.05)]
}
