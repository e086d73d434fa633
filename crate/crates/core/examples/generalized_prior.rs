//! Non-uniform Dirichlet priors, including fractional pseudo-counts, and the
//! case with no data where only the moment constraint acts.
//!
//! `cargo run --example generalized_prior`

use meupdate::model::{bayes_posterior_mean, CountData, OutcomeModel, PriorSpec, Problem};
use meupdate::solver::{full_update, DEFAULT_TOL};

fn main() -> meupdate::Result<()> {
    let model = OutcomeModel::new(vec![0.0, 1.0, 2.5, 4.0])?;
    let prior = PriorSpec::new(vec![0.5, 0.5, 2.0, 1.0])?;
    let p = Problem::new(model.clone(), CountData::new(vec![3, 0, 5, 1]), prior, 1.4)?;
    let post = full_update(&p, DEFAULT_TOL)?;
    println!("informative prior, 9 observations, E[f] = 1.4");
    println!("  Bayes means   {:.5?}", bayes_posterior_mean(&p));
    println!(
        "  updated means {:.5?}  beta = {:.6}",
        post.means, post.beta
    );

    let none = Problem::new(model, CountData::new(vec![0; 4]), PriorSpec::flat(4), 1.4)?;
    let post = full_update(&none, DEFAULT_TOL)?;
    println!("no data, flat prior, E[f] = 1.4");
    println!("  means {:.5?}  beta = {:.6}", post.means, post.beta);
    Ok(())
}
