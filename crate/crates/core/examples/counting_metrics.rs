//! Counting error and paired t-tests over the shipped published counts.

use flowtrack::cli::{counting_reports, parse_table, t_tests};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let counts = parse_table(&std::fs::read_to_string(format!("{dir}/cotton_counts.csv")).unwrap()).unwrap();
    for r in counting_reports(&counts, None).unwrap() {
        println!("{:<12} MAPE {:>6.2}%  RMSE {:>7.2}", r.method, r.mape * 100.0, r.rmse);
    }

    let errors = parse_table(&std::fs::read_to_string(format!("{dir}/cotton_count_errors.csv")).unwrap()).unwrap();
    for row in t_tests(&errors, "ntrack").unwrap() {
        let verdict = if row.test.p < 0.05 { "reject" } else { "keep" };
        println!("ntrack < {:<12} t {:>6.3}  p {:.3e}  {verdict}", row.versus, row.test.t, row.test.p);
    }
}
