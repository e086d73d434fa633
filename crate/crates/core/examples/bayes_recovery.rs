//! Without an informative moment constraint the update is Bayes' rule: when
//! the target equals the Bayesian posterior expectation, the multiplier is
//! zero and the means are the Dirichlet posterior means.
//!
//! `cargo run --example bayes_recovery`

use meupdate::model::{bayes_posterior_mean, Problem};
use meupdate::solver::{full_update, DEFAULT_TOL};

fn main() -> meupdate::Result<()> {
    let labels = vec![1.0, 2.0, 3.0];
    let counts = vec![11, 2, 7];
    let bayes = bayes_posterior_mean(&Problem::flat(labels.clone(), counts.clone(), 2.0)?);
    let target: f64 = bayes.iter().zip(&labels).map(|(m, f)| m * f).sum();
    println!(
        "Bayes expectation of f = {target:.15} (42/23 = {:.15})",
        42.0 / 23.0
    );

    let post = full_update(&Problem::flat(labels, counts, target)?, DEFAULT_TOL)?;
    println!("beta = {:.3e}", post.beta);
    for (i, (m, b)) in post.means.iter().zip(&bayes).enumerate() {
        println!("theta_{}: updated {m:.15}  Bayes {b:.15}", i + 1);
    }

    // Labels that are all equal carry no information at all.
    let flat = Problem::flat(vec![2.0; 3], vec![4, 1, 0], 2.0)?;
    let post = full_update(&flat, DEFAULT_TOL)?;
    println!(
        "degenerate labels: beta = {}, means = {:.6?}",
        post.beta, post.means
    );
    Ok(())
}
