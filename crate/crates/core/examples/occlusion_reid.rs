//! One object of a drifting cluster disappears for a long stretch. With
//! neighbor-based re-identification its track survives; without, the
//! returning object gets a new id.

use flowtrack::eval::clear_and_id_metrics;
use flowtrack::synth::{generate_scene, occlusion_scene};
use flowtrack::{run_sequence, TrackerConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let cfg = occlusion_scene(seed);
    let scene = generate_scene(&cfg).expect("preset is valid");
    let w = cfg.occlusions[0];
    println!(
        "{} objects, object {} hidden in frames {}..={} ({} frames)",
        cfg.objects.len(),
        w.object,
        w.first,
        w.last,
        w.last - w.first + 1
    );

    for enabled in [true, false] {
        let mut tc = TrackerConfig::default();
        tc.rla.enabled = enabled;
        let r = run_sequence(&scene.meta, &mut scene.flow(), &scene.detections_by_frame(), &tc, seed).unwrap();
        let m = clear_and_id_metrics(&scene.ground_truth, &r.rows, 0.5).report();
        println!(
            "rla {:<3}  counted {}  IDsw {}  IDF1 {:.3}",
            if enabled { "on" } else { "off" },
            r.unique_count,
            m.id_switches,
            m.idf1
        );
    }
}
