//! Wall time of one energy distance between two 3-d batches of the
//! given size (default 10^5 points each).

use gibbs_core::metrics::{energy_distance_sq, EmpiricalBatch};
use gibbs_core::rng::{stream, uniform};
fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(100_000);
    let mut r = stream(1);
    let a: Vec<f64> = (0..3 * n).map(|_| uniform(&mut r)).collect();
    let b: Vec<f64> = (0..3 * n).map(|_| uniform(&mut r).sqrt()).collect();
    let p = EmpiricalBatch::new(3, a, "a").unwrap();
    let q = EmpiricalBatch::new(3, b, "b").unwrap();
    let t = std::time::Instant::now();
    let v = energy_distance_sq(&p, &q).unwrap();
    println!("{v} in {:?}", t.elapsed());
}
