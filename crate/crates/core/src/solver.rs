//! Solving for the moment multiplier and assembling the updated posterior.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{bayes_posterior_mean, Problem};
use crate::normalization::{moments_raw, posterior_moments};
use crate::root::solve_increasing;

/// Default bound on `|E[f] - F|` at the returned multiplier.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default bound on `|beta|` before the target is declared unreachable.
pub const DEFAULT_BETA_CAP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub beta_cap: f64,
    pub initial_guess: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            beta_cap: DEFAULT_BETA_CAP,
            initial_guess: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Multiplier together with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSolution {
    pub beta: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Solved update: multiplier, normalization and posterior summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MEPosterior {
    pub problem: Problem,
    pub beta: f64,
    pub log_zeta: f64,
    pub means: Vec<f64>,
    pub variance_of_f: f64,
    /// `|E[f] - F|` at `beta`.
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

impl MEPosterior {
    pub fn zeta(&self) -> f64 {
        self.log_zeta.exp()
    }
}

/// One point of a multiplier-versus-target sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub target: f64,
    /// NaN when the point did not converge.
    pub beta: f64,
    pub converged: bool,
}

/// Solve `d ln zeta / d beta = F` for `beta`.
pub fn solve_beta(p: &Problem, tol: f64, beta_cap: f64) -> Result<f64> {
    let opts = SolverOptions {
        tol,
        beta_cap,
        initial_guess: 0.0,
    };
    solve_beta_with(p, &opts).map(|s| s.beta)
}

pub fn solve_beta_with(p: &Problem, opts: &SolverOptions) -> Result<BetaSolution> {
    if p.is_degenerate() {
        return Err(Error::DegenerateLabels {
            label: p.labels()[0],
            target: p.moment_target(),
        });
    }
    let c = p.dirichlet_params();
    let f = p.labels();
    let target = p.moment_target();
    let report = solve_increasing(
        |beta| {
            let m = moments_raw(&c, f, beta)?;
            Ok((m.moment - target, m.variance))
        },
        opts.initial_guess,
        opts.tol,
        opts.beta_cap,
    )?;
    Ok(BetaSolution {
        beta: report.root,
        residual: report.residual.abs(),
        iterations: report.iterations,
        bracket: report.bracket,
    })
}

/// Solve the multiplier and summarize the resulting posterior.
pub fn full_update(p: &Problem, tol: f64) -> Result<MEPosterior> {
    full_update_with(p, &SolverOptions::with_tol(tol))
}

pub fn full_update_with(p: &Problem, opts: &SolverOptions) -> Result<MEPosterior> {
    let solution = if p.is_degenerate() {
        // The constraint holds for every posterior, so nothing moves.
        BetaSolution {
            beta: 0.0,
            residual: 0.0,
            iterations: 0,
            bracket: (0.0, 0.0),
        }
    } else {
        solve_beta_with(p, opts)?
    };
    let moments = posterior_moments(p, solution.beta)?;
    let means = if p.is_degenerate() {
        bayes_posterior_mean(p)
    } else {
        moments.means
    };
    Ok(MEPosterior {
        problem: p.clone(),
        beta: solution.beta,
        log_zeta: moments.log_zeta,
        means,
        variance_of_f: moments.variance,
        residual: (moments.moment - p.moment_target()).abs(),
        iterations: solution.iterations,
        bracket: solution.bracket,
    })
}

/// Uniform grid of `steps` targets from `f_min` to `f_max` inclusive.
pub fn sweep_grid(f_min: f64, f_max: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                f_max
            } else {
                f_min + (f_max - f_min) * (i as f64 / last)
            }
        })
        .collect()
}

/// Multiplier as a function of the moment target, for the counts and prior
/// of `p`.
pub fn sweep(p: &Problem, f_min: f64, f_max: f64, steps: usize) -> Result<Vec<SweepPoint>> {
    sweep_with(p, f_min, f_max, steps, &SolverOptions::default())
}

/// Grid points are solved independently from `opts.initial_guess`, in
/// parallel; the result does not depend on scheduling. A point that fails
/// to converge is reported with `converged = false` and does not abort the
/// sweep.
pub fn sweep_with(
    p: &Problem,
    f_min: f64,
    f_max: f64,
    steps: usize,
    opts: &SolverOptions,
) -> Result<Vec<SweepPoint>> {
    let (lo, hi) = (p.model().min_label(), p.model().max_label());
    if !(lo < f_min && f_min < f_max && f_max < hi) || steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "sweep needs {lo} < min < max < {hi} and at least 2 steps \
             (got min={f_min}, max={f_max}, steps={steps})"
        )));
    }
    let points = sweep_grid(f_min, f_max, steps)
        .into_par_iter()
        .map(|target| {
            let solved = p
                .with_target(target)
                .and_then(|q| solve_beta_with(&q, opts));
            match solved {
                Ok(s) => SweepPoint {
                    target,
                    beta: s.beta,
                    converged: true,
                },
                Err(_) => SweepPoint {
                    target,
                    beta: f64::NAN,
                    converged: false,
                },
            }
        })
        .collect();
    Ok(points)
}
