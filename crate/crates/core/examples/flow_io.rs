//! Write a synthetic flow field to `.flo`, read it back, sample box velocities.

use flowtrack::flow::{read_flow_file, DenseFlow, sample_box_velocity, synthetic_flow, write_flow_file, MotionLayer, SceneMotion};
use flowtrack::BBox;

fn main() {
    let motion = SceneMotion {
        pan: (-2.0, 0.0),
        layers: vec![MotionLayer { region: BBox::new(40.0, 20.0, 30.0, 30.0).unwrap(), local: (0.5, -1.0) }],
    };
    let field = synthetic_flow(&motion, 128, 64);
    let bytes = write_flow_file(&field);
    println!("encoded {}x{} field in {} bytes", field.width(), field.height(), bytes.len());

    let back = read_flow_file(&bytes).expect("valid flo");
    assert_eq!(back, field);

    for (x, y) in [(10.0, 10.0), (55.0, 35.0), (70.0, 35.0), (-2.0, 30.0)] {
        let v = sample_box_velocity(&back, x, y).expect("inside the border band");
        println!("velocity at ({x:>5.1}, {y:>5.1}) = ({:+.2}, {:+.2})", v.0, v.1);
    }
    println!("{}", sample_box_velocity(&back, 200.0, 10.0).unwrap_err());
}
