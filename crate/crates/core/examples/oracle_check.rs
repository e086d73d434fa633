//! Cross-check the series normalization against adaptive quadrature and
//! importance sampling.
//!
//! `cargo run --release --example oracle_check`

use meupdate::model::Problem;
use meupdate::normalization::{log_zeta, posterior_mean};
use meupdate::oracle::{montecarlo_moments, quadrature_zeta, DEFAULT_QUAD_TOL};

fn main() -> meupdate::Result<()> {
    let p = Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 2.3)?;
    for beta in [-8.0, 0.0, 14.1166] {
        let series = log_zeta(&p, beta)?;
        let quad = quadrature_zeta(&p, beta, DEFAULT_QUAD_TOL)?;
        println!(
            "beta {beta:>8}: ln zeta series {:.15}  quadrature {:.15}  ({} terms, {} evaluations)",
            series.log_value, quad.log_value, series.terms_used, quad.samples_or_evals
        );
    }

    let beta = 5.0;
    let exact = posterior_mean(&p, beta)?;
    let mc = montecarlo_moments(&p, beta, 1_000_000, 1)?;
    println!(
        "\nbeta {beta}, 10^6 samples, seed 1, ESS {:.0}",
        mc.effective_sample_size
    );
    for (i, ((e, m), se)) in exact
        .iter()
        .zip(&mc.means)
        .zip(&mc.mean_std_errors)
        .enumerate()
    {
        println!("theta_{}: series {e:.6}  sampled {m:.6} +- {se:.6}", i + 1);
    }
    Ok(())
}
