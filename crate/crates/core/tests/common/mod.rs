#![allow(dead_code)]

use bouncer::wavefield::{GaussianSlitMode, WavefieldState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` slits with random centers, widths, velocities and phases.
pub fn random_slits(rng: &mut ChaCha8Rng, n: usize) -> Vec<GaussianSlitMode> {
    (0..n)
        .map(|_| {
            GaussianSlitMode::new(
                rng.gen_range(-6.0..6.0),
                rng.gen_range(0.3..1.5),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
            .unwrap()
        })
        .collect()
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> WavefieldState {
    WavefieldState::from_modes(0.0, random_slits(rng, n))
}

/// Two slits at `+-d`, mirror images of each other.
pub fn double_slit(d: f64, sigma0: f64, v0: f64) -> WavefieldState {
    WavefieldState::from_modes(
        0.0,
        [
            GaussianSlitMode::new(-d, sigma0, v0, 0.0).unwrap(),
            GaussianSlitMode::new(d, sigma0, -v0, 0.0).unwrap(),
        ],
    )
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
