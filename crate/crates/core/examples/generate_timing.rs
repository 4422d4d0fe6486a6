//! Times one run of the grid generator: `cargo run --release --example generate_timing -- N P RHO_D A2`.

use std::time::Instant;

use spa_core::generator::generate;
use spa_core::model::diagonal_layout;
use spa_core::ModelParams64;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let p: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.7);
    let rho_d: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.6);
    let a2: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let params = ModelParams64::new(0.7, a2, p, 2, n).expect("params");
    let layout = diagonal_layout(rho_d).expect("layout");
    let start = Instant::now();
    let g = generate(&params, &layout, 1).expect("generate");
    let max_in = g.nodes().iter().map(|v| v.in_deg).max().unwrap_or(0);
    println!("n={n} edges={} max_in={max_in} elapsed={:.2?}", g.edges().len(), start.elapsed());
}
