//! Brownian increments on the fine mesh.
//!
//! Per-path streams: a ChaCha8 generator keyed by the master seed, with the
//! stream id set to the path index. Path `k` therefore sees the same numbers
//! no matter which thread draws it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    increments: Vec<f64>,
    substeps: usize,
    noise_modes: usize,
    h_fine: f64,
}

/// Generator for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

impl NoisePath {
    /// i.i.d. `N(0, h_fine)` entries, substep-major.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        substeps: usize,
        noise_modes: usize,
        h_fine: f64,
    ) -> Self {
        let sd = h_fine.sqrt();
        let increments = (0..substeps * noise_modes)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        NoisePath {
            increments,
            substeps,
            noise_modes,
            h_fine,
        }
    }

    pub fn for_path(seed: u64, index: u64, substeps: usize, noise_modes: usize, h_fine: f64) -> Self {
        NoisePath::sample(&mut path_rng(seed, index), substeps, noise_modes, h_fine)
    }

    pub fn zeros(substeps: usize, noise_modes: usize, h_fine: f64) -> Self {
        NoisePath {
            increments: vec![0.0; substeps * noise_modes],
            substeps,
            noise_modes,
            h_fine,
        }
    }

    /// Builds a path from explicit increments, `substeps * noise_modes` long.
    pub fn from_increments(increments: Vec<f64>, noise_modes: usize, h_fine: f64) -> Self {
        assert!(noise_modes > 0 && increments.len().is_multiple_of(noise_modes));
        NoisePath {
            substeps: increments.len() / noise_modes,
            increments,
            noise_modes,
            h_fine,
        }
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn noise_modes(&self) -> usize {
        self.noise_modes
    }

    pub fn h_fine(&self) -> f64 {
        self.h_fine
    }

    /// Increments `dW_k` of substep `j`.
    pub fn increment(&self, j: usize) -> &[f64] {
        &self.increments[j * self.noise_modes..(j + 1) * self.noise_modes]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `a * self + b * other`, for superposition checks.
    pub fn combine(&self, a: f64, other: &NoisePath, b: f64) -> NoisePath {
        assert_eq!(self.increments.len(), other.increments.len());
        NoisePath {
            increments: self
                .increments
                .iter()
                .zip(&other.increments)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = NoisePath::for_path(7, 3, 10, 4, 0.01);
        let b = NoisePath::for_path(7, 3, 10, 4, 0.01);
        let c = NoisePath::for_path(7, 4, 10, 4, 0.01);
        let d = NoisePath::for_path(8, 3, 10, 4, 0.01);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn increments_have_variance_h() {
        let h = 0.01;
        let p = NoisePath::for_path(1, 0, 20_000, 5, h);
        let n = p.increments().len() as f64;
        let mean = p.increments().iter().sum::<f64>() / n;
        let var = p.increments().iter().map(|x| x * x).sum::<f64>() / n;
        // sd of the variance estimate is h sqrt(2/n) ~ 1e-4
        assert!(mean.abs() < 4.0 * (h / n).sqrt());
        assert!((var - h).abs() < 4.0 * h * (2.0 / n).sqrt());
        // neighbouring modes and substeps are uncorrelated
        let lag: f64 = p
            .increments()
            .windows(2)
            .map(|w| w[0] * w[1])
            .sum::<f64>()
            / (n - 1.0);
        assert!(lag.abs() < 4.0 * h / n.sqrt());
    }

    #[test]
    fn layout_is_substep_major() {
        let p = NoisePath::from_increments(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 0.5);
        assert_eq!(p.substeps(), 2);
        assert_eq!(p.increment(1), &[4.0, 5.0, 6.0]);
    }
}
