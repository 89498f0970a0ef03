//! Parse and re-emit MOT17-style sequence files.

use flowtrack::mot::{parse_detections, parse_ground_truth, parse_seqinfo, write_detections, write_ground_truth};

const SEQINFO: &str = "[Sequence]\nname=demo\nimDir=img1\nframeRate=30\nseqLength=3\nimWidth=3840\nimHeight=2160\nimExt=.jpg\n";
const DET: &str = "1,-1,100,200,40,40,0.91\r\n2,-1,104,200,40,41,0.55\r\n\r\n3,-1,108.5,201,40,40,0.88\r\n";
const GT: &str = "1,1,100,200,40,40,1,1,1.0\n2,1,104,200,40,40,1,1,0.8\n3,1,108,200,40,40,0,1,1.0\n";

fn main() {
    let meta = parse_seqinfo(SEQINFO).unwrap();
    println!("{} {}x{} {} frames", meta.name, meta.image_width, meta.image_height, meta.frame_count);

    let dets = parse_detections(DET).unwrap();
    for d in &dets {
        println!("frame {} center ({:.1}, {:.1}) area {:.0} width {:.0} conf {:.2}", d.frame, d.cx, d.cy, d.s, d.w, d.conf);
    }
    print!("{}", write_detections(&dets));

    let gt = parse_ground_truth(GT).unwrap();
    let scored = gt.iter().filter(|g| g.flag != 0).count();
    println!("{} gt rows, {scored} scored", gt.len());
    print!("{}", write_ground_truth(&gt));
}
