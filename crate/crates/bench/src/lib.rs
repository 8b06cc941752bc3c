//! Fixtures shared by the criterion benchmarks in `benches/`.

use waveuc_core::{PrecondChoice, Preset, SpaceTimeSystem};

/// `gcc1d` system with `h = Δt` and full dual orders.
pub fn gcc_system(k: usize, n_slabs: usize) -> SpaceTimeSystem {
    Preset::Gcc1d
        .config(k, k, n_slabs, PrecondChoice::Mf)
        .build_system()
        .expect("preset configurations are valid")
}

/// Deterministic non-trivial input vector.
pub fn probe_vector(len: usize) -> Vec<f64> {
    (0..len).map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0).collect()
}
