#![allow(dead_code)]

use iab_sim::linalg::{CMat, C64};
use iab_sim::montecarlo::SimConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with i.i.d. real and imaginary parts uniform on [−1, 1).
pub fn random_cmat(n: usize, m: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(n, m, |_, _| {
        C64::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        )
    })
}

pub fn cmat_from_parts(n: usize, m: usize, parts: &[f64]) -> CMat {
    CMat::from_fn(n, m, |i, j| {
        let at = 2 * (i * m + j);
        C64::new(parts[at], parts[at + 1])
    })
}

pub fn fro_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// A configuration small enough for hundreds of trials per test.
pub fn small_config() -> SimConfig {
    let mut cfg = SimConfig {
        n_gnb: 8,
        n_iab_tx: 8,
        n_iab_rx: 8,
        n_ue: 4,
        ..SimConfig::default()
    };
    cfg.channel.subcarriers = 8;
    cfg.channel.taps = 4;
    cfg.channel.cp_len = 2;
    cfg
}

/// Eigenvalues of a Hermitian matrix through its real symmetric embedding
/// `[[Re, −Im], [Im, Re]]`, whose spectrum repeats each eigenvalue twice.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    let real = nalgebra::DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = a[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = real.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.into_iter().step_by(2).collect()
}
