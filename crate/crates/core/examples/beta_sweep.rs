//! Multiplier as a function of the moment target, written as CSV.
//! The multiplier grows without bound as the target approaches either
//! extreme label; with a cap those points are reported as not converged.
//!
//! `cargo run --example beta_sweep -- [out.csv]`

use meupdate::cli::sweep_csv;
use meupdate::model::Problem;
use meupdate::solver::{sweep, sweep_with, SolverOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 2.3)?;
    let points = sweep(&p, 1.05, 2.95, 101)?;
    let csv = sweep_csv(&points);
    match std::env::args().nth(1) {
        Some(path) => {
            std::fs::write(&path, &csv)?;
            println!("wrote {} rows to {path}", points.len());
        }
        None => print!("{csv}"),
    }

    let capped = sweep_with(
        &p,
        1.05,
        2.95,
        101,
        &SolverOptions {
            beta_cap: 100.0,
            ..Default::default()
        },
    )?;
    let lost: Vec<String> = capped
        .iter()
        .filter(|pt| !pt.converged)
        .map(|pt| format!("{:.3}", pt.target))
        .collect();
    eprintln!("with |beta| <= 100, no solution at F = {}", lost.join(", "));
    Ok(())
}
