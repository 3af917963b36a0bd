//! Nanoseconds per evaluation for the softmax samplers on a 3-d target.

use std::time::Instant;

use gibbs_core::rng::stream;
use gibbs_core::samplers::{mc_sampling, PcMcSampler};
use gibbs_core::target::LinearSum;

fn main() {
    let f = LinearSum::new(15.0, 3);
    let n = 32768;
    let draws = 300;
    let mut rng = stream(1);
    let start = Instant::now();
    let mut acc = 0.0;
    for _ in 0..draws {
        acc += mc_sampling(&f, n, &mut rng).unwrap().point[0];
    }
    let per = start.elapsed().as_nanos() as f64 / (draws * n) as f64;
    println!("mc: {per:.1} ns/eval ({acc:.3})");
    let s = PcMcSampler::new(&f, n).unwrap();
    let start = Instant::now();
    for _ in 0..draws {
        acc += s.sample(&mut rng).unwrap().point[0];
    }
    let per = start.elapsed().as_nanos() as f64 / (draws * n) as f64;
    println!("pc+mc: {per:.1} ns/eval ({acc:.3})");
}
