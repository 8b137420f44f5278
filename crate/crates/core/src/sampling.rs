//! Deterministic random phase-space samples for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{norm, PhaseState};

/// Box from which positions and momenta are drawn.
#[derive(Debug, Clone, Copy)]
pub struct SampleBox {
    pub q_half_width: f64,
    pub p_half_width: f64,
    /// Positions with `|q|` below this are redrawn.
    pub min_radius: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { q_half_width: 2.0, p_half_width: 1.5, min_radius: 0.3 }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize, bounds: &SampleBox) -> PhaseState {
    let q = loop {
        let q: Vec<f64> =
            (0..dim).map(|_| rng.random_range(-bounds.q_half_width..bounds.q_half_width)).collect();
        if norm(&q) >= bounds.min_radius {
            break q;
        }
    };
    let p = (0..dim).map(|_| rng.random_range(-bounds.p_half_width..bounds.p_half_width)).collect();
    PhaseState { q, p }
}

pub fn random_states(seed: u64, dim: usize, count: usize, bounds: &SampleBox) -> Vec<PhaseState> {
    let mut rng = rng(seed);
    (0..count).map(|_| random_state(&mut rng, dim, bounds)).collect()
}
