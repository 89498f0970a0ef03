//! Neighbor ranking, per-pair location models and Gaussian fusion.

use std::collections::BTreeMap;

use flowtrack::rla::{fit_pair_model, fuse_estimates, rla_estimate, Axis, PairHistories, RlaConfig};
use flowtrack::TrackId;

fn main() {
    let (target, n1, n2) = (TrackId(1), TrackId(2), TrackId(3));
    let mut h = PairHistories::new(300);
    // n1 co-active in frames 2, 3, 5; n2 in 5, 6 (more recent).
    for f in [2, 3, 5] {
        h.record_pair(target, n1, f, (100.0 + f as f64, 50.0), (80.0 + f as f64, 40.0 + 0.1 * f as f64));
    }
    for f in [5, 6] {
        h.record_pair(target, n2, f, (100.0 + f as f64, 50.0), (130.0 + f as f64, 52.0 + 0.1 * f as f64));
    }
    for n in [n1, n2] {
        let (r, count) = h.get(target, n).unwrap().rank_before(7);
        println!("R({n}) = {r} over {count} frames");
    }
    println!("ranked: {:?}", h.rank_neighbors(target, 7));

    let model = fit_pair_model(&h.get(target, n1).unwrap().samples(Axis::X), 3).unwrap();
    println!("x model vs {n1}: c0 {:.3} c1 {:.3} var {:.3}", model.c0, model.c1, model.var);

    let active = BTreeMap::from([(n1, (90.0, 40.7)), (n2, (140.0, 52.7))]);
    let cfg = RlaConfig { m_min: 2, ..RlaConfig::default() };
    let proxy = rla_estimate(target, 7, &h, &active, &cfg).unwrap();
    println!("proxy center ({:.2}, {:.2}) from {:?}", proxy.center.0, proxy.center.1, proxy.neighbors);
    println!("fused x: mu {:.2} var {:.3}", proxy.x.mu, proxy.x.var);

    let f = fuse_estimates(&[proxy.x, proxy.x]).unwrap();
    println!("fusing x with itself halves the variance: {:.3}", f.var);
}
