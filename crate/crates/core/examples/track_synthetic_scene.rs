//! Track a generated scene in memory and score it.
//!
//! cargo run --example track_synthetic_scene -- [objects] [seed]

use flowtrack::eval::clear_and_id_metrics;
use flowtrack::synth::{clean_scene, generate_scene};
use flowtrack::{run_sequence, TrackerConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let objects: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(12);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let scene = generate_scene(&clean_scene(objects, seed)).expect("preset is valid");
    let result = run_sequence(&scene.meta, &mut scene.flow(), &scene.detections_by_frame(), &TrackerConfig::default(), seed)
        .expect("tracking succeeds");

    let m = clear_and_id_metrics(&scene.ground_truth, &result.rows, 0.5).report();
    println!("{}: {} frames", scene.meta.name, scene.meta.frame_count);
    println!("objects {}  counted {}", scene.object_count(), result.unique_count);
    println!("MOTA {:.3}  MOTP {:.3}  IDF1 {:.3}  IDsw {}", m.mota, m.motp, m.idf1, m.id_switches);
}
