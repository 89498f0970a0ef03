//! Particle filter on a noisy stationary target, Kalman filter on its size.

use flowtrack::filters::{FilterConfig, KalmanSW, ParticleSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    // A stationary target wants little process noise; the tracker default
    // (5 px) is sized for moving objects with imperfect flow.
    let cfg = FilterConfig { process_sigma: 1.0, ..FilterConfig::default() };
    let truth = (320.0, 180.0);
    let noise = Normal::new(0.0, cfg.meas_sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut pf = ParticleSet::new((300.0, 200.0), &cfg, 11);
    let mut kf = KalmanSW::new(1500.0, 40.0, &cfg).unwrap();
    for frame in 1..=50 {
        pf.predict((0.0, 0.0), &cfg).unwrap();
        let obs = (truth.0 + noise.sample(&mut rng), truth.1 + noise.sample(&mut rng));
        pf.update(obs, &cfg);
        kf.predict();
        kf.update(1600.0, 40.0).unwrap();
        if frame % 10 == 0 {
            let (x, y) = pf.estimate();
            println!(
                "frame {frame:>2}: center error {:>5.2} px  size {:>7.1}  width {:>5.2}",
                (x - truth.0).hypot(y - truth.1),
                kf.size(),
                kf.width()
            );
        }
    }
}
