use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{FilterConfig, FilterError};

/// What [`ParticleSet::update`] did to the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Reweighted,
    Resampled,
    /// No usable likelihood; weights were reset to uniform.
    Degenerate,
}

/// Particle approximation of a track's box center.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    particles: Vec<[f64; 2]>,
    weights: Vec<f64>,
    rng: ChaCha8Rng,
}

fn jitter(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite positive sigma"))
}

impl ParticleSet {
    /// Draws `n_particles` around `center` with std `process_sigma`.
    pub fn new(center: (f64, f64), cfg: &FilterConfig, seed: u64) -> Self {
        let n = cfg.n_particles.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = jitter(cfg.process_sigma);
        let particles = (0..n)
            .map(|_| match &noise {
                Some(d) => [center.0 + d.sample(&mut rng), center.1 + d.sample(&mut rng)],
                None => [center.0, center.1],
            })
            .collect();
        Self { particles, weights: vec![1.0 / n as f64; n], rng }
    }

    /// Builds a set from explicit particles and (unnormalized) weights.
    pub fn from_parts(particles: Vec<[f64; 2]>, weights: Vec<f64>, seed: u64) -> Self {
        assert_eq!(particles.len(), weights.len(), "one weight per particle");
        assert!(!particles.is_empty(), "particle set must not be empty");
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        Self { particles, weights, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[[f64; 2]] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Shifts every particle by the sampled flow velocity plus jitter.
    pub fn predict(&mut self, velocity: (f64, f64), cfg: &FilterConfig) -> Result<(), FilterError> {
        if !(velocity.0.is_finite() && velocity.1.is_finite()) {
            return Err(FilterError::InvalidVelocity(velocity.0, velocity.1));
        }
        let noise = jitter(cfg.process_sigma);
        for p in &mut self.particles {
            p[0] += velocity.0;
            p[1] += velocity.1;
            if let Some(d) = &noise {
                p[0] += d.sample(&mut self.rng);
                p[1] += d.sample(&mut self.rng);
            }
        }
        Ok(())
    }

    /// Gaussian reweighting toward `observation`, followed by systematic
    /// resampling when the effective sample size is too small.
    pub fn update(&mut self, observation: (f64, f64), cfg: &FilterConfig) -> UpdateOutcome {
        let n = self.particles.len();
        let inv_two_var = 1.0 / (2.0 * cfg.meas_sigma * cfg.meas_sigma);
        // Log domain so a distant observation still ranks particles.
        let log_w: Vec<f64> = self
            .particles
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| {
                let dx = p[0] - observation.0;
                let dy = p[1] - observation.1;
                w.ln() - (dx * dx + dy * dy) * inv_two_var
            })
            .collect();
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            self.weights.fill(1.0 / n as f64);
            return UpdateOutcome::Degenerate;
        }
        let mut total = 0.0;
        for (w, lw) in self.weights.iter_mut().zip(&log_w) {
            *w = (lw - max).exp();
            total += *w;
        }
        for w in &mut self.weights {
            *w /= total;
        }

        let ess = 1.0 / self.weights.iter().map(|w| w * w).sum::<f64>();
        if ess < cfg.resample_threshold * n as f64 {
            self.resample_systematic();
            UpdateOutcome::Resampled
        } else {
            UpdateOutcome::Reweighted
        }
    }

    fn resample_systematic(&mut self) {
        let n = self.particles.len();
        let step = 1.0 / n as f64;
        let mut u = self.rng.random::<f64>() * step;
        let mut cumulative = self.weights[0];
        let mut i = 0;
        let mut next = Vec::with_capacity(n);
        for _ in 0..n {
            while u > cumulative && i + 1 < n {
                i += 1;
                cumulative += self.weights[i];
            }
            next.push(self.particles[i]);
            u += step;
        }
        self.particles = next;
        self.weights.fill(step);
    }

    /// Weighted mean of the particles.
    pub fn estimate(&self) -> (f64, f64) {
        self.particles
            .iter()
            .zip(&self.weights)
            .fold((0.0, 0.0), |(x, y), (p, w)| (x + w * p[0], y + w * p[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noiseless() -> FilterConfig {
        FilterConfig { process_sigma: 0.0, ..FilterConfig::default() }
    }

    #[test]
    fn zero_noise_init_sits_on_center() {
        let ps = ParticleSet::new((12.0, -3.0), &noiseless(), 1);
        assert_eq!(ps.len(), 100);
        assert!(ps.particles().iter().all(|p| *p == [12.0, -3.0]));
        assert!(ps.weights().iter().all(|w| *w == 0.01));
    }

    #[test]
    fn init_is_seeded() {
        let cfg = FilterConfig::default();
        let a = ParticleSet::new((0.0, 0.0), &cfg, 42);
        let b = ParticleSet::new((0.0, 0.0), &cfg, 42);
        let c = ParticleSet::new((0.0, 0.0), &cfg, 43);
        assert_eq!(a.particles(), b.particles());
        assert_ne!(a.particles(), c.particles());
    }

    #[test]
    fn init_mean_within_monte_carlo_bound() {
        let cfg = FilterConfig::default();
        let bound = 3.0 * cfg.process_sigma / (cfg.n_particles as f64).sqrt();
        let inside = (0..100)
            .filter(|&seed| {
                let (x, y) = ParticleSet::new((50.0, 80.0), &cfg, seed).estimate();
                (x - 50.0).abs() <= bound && (y - 80.0).abs() <= bound
            })
            .count();
        // per axis the 3-sigma bound fails with p ≈ 0.0027
        assert!(inside >= 97, "{inside}/100 within bound");
    }

    #[test]
    fn noiseless_predict_translates() {
        let cfg = noiseless();
        let mut ps = ParticleSet::from_parts(vec![[0.0, 0.0], [1.0, 2.0]], vec![1.0, 1.0], 0);
        ps.predict((3.0, -1.0), &cfg).unwrap();
        assert_eq!(ps.particles(), &[[3.0, -1.0], [4.0, 1.0]]);
        ps.predict((0.0, 0.0), &cfg).unwrap();
        assert_eq!(ps.particles(), &[[3.0, -1.0], [4.0, 1.0]]);
        assert!(matches!(ps.predict((f64::NAN, 0.0), &cfg), Err(FilterError::InvalidVelocity(..))));
    }

    #[test]
    fn jittered_predict_mean_displacement() {
        let cfg = FilterConfig { n_particles: 1000, ..FilterConfig::default() };
        let mut ps = ParticleSet::new((0.0, 0.0), &FilterConfig { process_sigma: 0.0, ..cfg.clone() }, 9);
        ps.predict((3.0, -1.0), &cfg).unwrap();
        let (x, y) = ps.estimate();
        assert!((x - 3.0).abs() < 0.5 && (y + 1.0).abs() < 0.5, "({x}, {y})");
        // law of large numbers over independent seeds: std of the mean is 5/√1000 ≈ 0.16
        let mut within = 0;
        for seed in 0..50 {
            let mut ps = ParticleSet::new((0.0, 0.0), &FilterConfig { process_sigma: 0.0, ..cfg.clone() }, seed);
            ps.predict((3.0, -1.0), &cfg).unwrap();
            let (x, y) = ps.estimate();
            within += ((x - 3.0).abs() < 0.5 && (y + 1.0).abs() < 0.5) as usize;
        }
        assert!(within >= 49);
    }

    #[test]
    fn symmetric_update_keeps_weights() {
        let cfg = FilterConfig { resample_threshold: 0.1, ..FilterConfig::default() };
        let mut ps = ParticleSet::from_parts(vec![[0.0, 0.0], [2.0, 0.0]], vec![1.0, 1.0], 0);
        assert_eq!(ps.update((1.0, 0.0), &cfg), UpdateOutcome::Reweighted);
        assert_eq!(ps.weights(), &[0.5, 0.5]);
        assert_eq!(ps.estimate(), (1.0, 0.0));
    }

    #[test]
    fn sharp_observation_collapses_weight() {
        let cfg = FilterConfig { meas_sigma: 0.05, resample_threshold: 1e-9, ..FilterConfig::default() };
        let mut ps = ParticleSet::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![1.0; 3], 0);
        ps.update((1.0, 0.0), &cfg);
        assert!((ps.weights()[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn resampling_resets_uniform_weights() {
        let cfg = FilterConfig { meas_sigma: 0.5, ..FilterConfig::default() };
        let mut ps = ParticleSet::from_parts((0..10).map(|i| [i as f64, 0.0]).collect(), vec![1.0; 10], 3);
        assert_eq!(ps.update((9.0, 0.0), &cfg), UpdateOutcome::Resampled);
        assert!(ps.weights().iter().all(|w| *w == 0.1));
        // mass concentrated on the particles nearest the observation
        assert!(ps.particles().iter().all(|p| p[0] >= 7.0));
    }

    #[test]
    fn non_finite_observation_is_degenerate() {
        let cfg = FilterConfig::default();
        let mut ps = ParticleSet::from_parts(vec![[0.0, 0.0], [1.0, 0.0]], vec![3.0, 1.0], 0);
        assert_eq!(ps.update((f64::NAN, 0.0), &cfg), UpdateOutcome::Degenerate);
        assert_eq!(ps.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn single_particle_estimate() {
        let ps = ParticleSet::from_parts(vec![[4.0, 7.0]], vec![1.0], 0);
        assert_eq!(ps.estimate(), (4.0, 7.0));
    }

    #[test]
    fn exact_tracking_without_process_noise() {
        let cfg = noiseless();
        let mut ps = ParticleSet::new((10.0, 10.0), &cfg, 5);
        let mut truth = (10.0, 10.0);
        for t in 0..30 {
            let v = ((t as f64 * 0.3).sin() * 4.0, 1.5);
            truth = (truth.0 + v.0, truth.1 + v.1);
            ps.predict(v, &cfg).unwrap();
            ps.update(truth, &cfg);
            let (x, y) = ps.estimate();
            assert!((x - truth.0).abs() < 1e-9 && (y - truth.1).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn weights_stay_normalized(
            pts in proptest::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..60),
            obs in (-300.0..300.0f64, -300.0..300.0f64),
            sigma in 0.1..50.0f64,
            threshold in 0.01..1.0f64,
        ) {
            let cfg = FilterConfig { meas_sigma: sigma, resample_threshold: threshold, ..FilterConfig::default() };
            let n = pts.len();
            let mut ps = ParticleSet::from_parts(pts.into_iter().map(|(x, y)| [x, y]).collect(), vec![1.0; n], 1);
            for _ in 0..3 {
                ps.update(obs, &cfg);
                let total: f64 = ps.weights().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                prop_assert!(ps.weights().iter().all(|w| *w >= 0.0));
                ps.predict((1.0, -1.0), &cfg).unwrap();
            }
        }
    }
}
