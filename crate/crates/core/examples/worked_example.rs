//! Three outcomes with labels 1, 2, 3, counts (11, 2, 7), a flat prior and
//! the requirement that the posterior expectation of `f` be 2.3.
//!
//! `cargo run --example worked_example`

use meupdate::model::{bayes_posterior_mean, Problem};
use meupdate::solver::{full_update, DEFAULT_TOL};

fn main() -> meupdate::Result<()> {
    let p = Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 2.3)?;
    let post = full_update(&p, DEFAULT_TOL)?;

    println!("beta          = {:.10}", post.beta);
    println!("zeta          = {:.6}", post.zeta());
    let n = p.data().n() as f64;
    let ln_multinomial = libm::lgamma(n + 1.0)
        - p.data()
            .counts()
            .iter()
            .map(|&m| libm::lgamma(m as f64 + 1.0))
            .sum::<f64>();
    println!(
        "zeta * n!/prod m_i! = {:.6e}",
        (post.log_zeta + ln_multinomial).exp()
    );
    println!("means         = {:.6?}", post.means);
    println!("Var[f]        = {:.6}", post.variance_of_f);
    println!(
        "|E[f] - F|    = {:.2e} after {} evaluations",
        post.residual, post.iterations
    );
    println!("Bayes means   = {:.6?}", bayes_posterior_mean(&p));
    Ok(())
}
