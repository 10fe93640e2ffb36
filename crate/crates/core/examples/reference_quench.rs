//! Runs the reference quench (domain wall, half filling, two cells) and
//! prints the long-time averages next to the equilibrium entropy.
//!
//! `cargo run --release -p obsent-core --example reference_quench [sites]`

use std::time::Instant;

use obsent_core::thermo::{run_quench, EntropyId, QuenchConfig, QuenchScenario};

fn main() -> obsent_core::Result<()> {
    let sites = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(12);
    let start = Instant::now();
    let scenario = QuenchScenario::new(QuenchConfig::reference(sites))?;
    let built = start.elapsed();
    let result = run_quench(&scenario)?;
    let meta = &result.metadata;
    println!(
        "L={sites} dim={} ln_dim={:.6} boundary_norm={:.4} widths={:?}",
        meta.dim, meta.ln_dim, meta.boundary_remainder_norm, meta.shell_widths
    );
    println!("model built in {built:.2?}, total {:.2?}", start.elapsed());
    for id in EntropyId::ALL {
        let series = result.series(id);
        let first = series.first().map_or(f64::NAN, |x| x.1);
        let last = series.last().map_or(f64::NAN, |x| x.1);
        let avg = result.final_window_average(id).unwrap_or(f64::NAN);
        println!("{id:>3}: t0={first:.6} final={last:.6} window_avg={avg:.6}");
    }
    let s1c = result
        .final_window_average(EntropyId::GlobalNumberEnergy)
        .unwrap_or(f64::NAN);
    let s2c = result
        .final_window_average(EntropyId::LocalNumberEnergy)
        .unwrap_or(f64::NAN);
    println!(
        "2c/1c = {:.4}, gap = {:.6}, 0.05 ln dim = {:.6}",
        s2c / s1c,
        s1c - s2c,
        0.05 * meta.ln_dim
    );
    Ok(())
}
