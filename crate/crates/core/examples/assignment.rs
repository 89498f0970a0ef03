//! Thresholded minimum-cost assignment and two-stage association.

use flowtrack::assoc::{associate_two_stage, solve_assignment, AssocConfig, CostMatrix};
use flowtrack::{BBox, Detection};

fn main() {
    let cost = CostMatrix::from_rows(&[vec![0.1, 0.7, 0.9], vec![0.2, 0.3, 0.95], vec![0.9, 0.9, 0.9]]);
    let a = solve_assignment(&cost, 0.5);
    println!("matches {:?}  free rows {:?}  free cols {:?}", a.matches, a.unmatched_rows, a.unmatched_cols);

    let b = |l: f64| BBox::new(l, 10.0, 20.0, 20.0).unwrap();
    let tracks = [(1u64, b(0.0)), (2, b(40.0)), (3, b(80.0))];
    let dets = [
        Detection::from_box(5, &b(2.0), 0.95).unwrap(),
        Detection::from_box(5, &b(43.0), 0.35).unwrap(),
        Detection::from_box(5, &b(160.0), 0.9).unwrap(),
    ];
    let r = associate_two_stage(&tracks, &dets, &AssocConfig::default());
    println!("matched {:?}", r.matches);
    println!("dormant {:?}", r.dormant);
    println!("may start tracks {:?}", r.unmatched_high);
}
