//! Systems heterogeneity: each client's affordable workload is redrawn every
//! round from a Gaussian whose parameters are fixed when the client is created.

use rand::Rng;
use rand_distr::StandardNormal;

pub const MU_RANGE: std::ops::Range<f64> = 5.0..10.0;

/// Parameters of a client's affordable-epoch distribution `N(mu, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityProfile {
    pub mu: f64,
    pub sigma: f64,
}

impl CapacityProfile {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }
}

/// `mu ~ U[5, 10)`, then `sigma ~ U[mu/4, mu/2)`.
pub fn sample_profile<R: Rng + ?Sized>(rng: &mut R) -> CapacityProfile {
    let mu = rng.random_range(MU_RANGE);
    let sigma = rng.random_range(mu / 4.0..mu / 2.0);
    CapacityProfile { mu, sigma }
}

/// Epochs the client can actually afford this round. Negative draws clamp to 0.
pub fn draw_capacity<R: Rng + ?Sized>(profile: &CapacityProfile, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (profile.mu + profile.sigma * z).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_ranges_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let profiles: Vec<_> = (0..10_000).map(|_| sample_profile(&mut rng)).collect();
        for p in &profiles {
            assert!(MU_RANGE.contains(&p.mu));
            let ratio = p.sigma / p.mu;
            assert!((0.25..0.5).contains(&ratio), "ratio {ratio}");
        }
        let mean = profiles.iter().map(|p| p.mu).sum::<f64>() / profiles.len() as f64;
        assert!((7.4..=7.6).contains(&mean), "mean mu {mean}");
    }

    #[test]
    fn profiles_are_reproducible() {
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..20).map(|_| sample_profile(&mut rng)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<_> = (0..20).map(|_| sample_profile(&mut rng)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn capacity_mean_with_clamp() {
        let p = CapacityProfile::new(7.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let draws: Vec<f64> = (0..50_000).map(|_| draw_capacity(&p, &mut rng)).collect();
        assert!(draws.iter().all(|&e| e >= 0.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((6.9..=7.2).contains(&mean), "mean {mean}");
    }

    #[test]
    fn degenerate_profile_is_constant() {
        let p = CapacityProfile::new(6.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..100).all(|_| draw_capacity(&p, &mut rng) == 6.5));
    }

    #[test]
    fn heavy_spread_never_negative() {
        let p = CapacityProfile::new(1.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..10_000).all(|_| draw_capacity(&p, &mut rng) >= 0.0));
    }
}
