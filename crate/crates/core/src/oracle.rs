//! Independent checks on the series normalization.
//!
//! Two routes that share nothing with [`crate::normalization`] beyond the
//! problem definition:
//!
//! * iterated adaptive Gauss-Kronrod quadrature over the simplex in reduced
//!   coordinates (`theta_k = 1 - sum_{i<k} theta_i`), for `k <= 4`;
//! * self-normalized importance sampling with the unmodified Dirichlet
//!   posterior as proposal, which is exact to sample and gives weights
//!   `exp(beta f.theta)` bounded on the simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Problem;

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const MAX_QUAD_DIM: usize = 4;
pub const MIN_SAMPLES: usize = 1_000;
/// Effective sample size below which an estimate is flagged.
pub const MIN_ESS: f64 = 100.0;
/// Monte Carlo work is split into this many independently seeded streams.
pub const MC_BATCHES: usize = 32;

const MAX_SEGMENTS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEstimate {
    /// Estimate of `ln zeta`.
    pub log_value: f64,
    /// Standard error of `log_value`; zero for quadrature.
    pub std_error: f64,
    pub method: OracleMethod,
    pub samples_or_evals: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloMoments {
    pub estimate: OracleEstimate,
    pub means: Vec<f64>,
    pub mean_std_errors: Vec<f64>,
    pub effective_sample_size: f64,
    /// Set when the effective sample size is below [`MIN_ESS`]; the
    /// estimates are still returned, with wide error bars.
    pub low_ess: bool,
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss-Kronrod panel, with the QUADPACK error heuristic.
fn gk15<F>(g: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = g(center - dx)?;
        let f2 = g(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    asc *= half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    error = error.max(50.0 * f64::EPSILON * (kronrod * half).abs());
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error,
    })
}

/// Globally adaptive integration of `g` over `[a, b]` to relative `rel_tol`.
fn adaptive<F>(mut g: F, a: f64, b: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let first = gk15(&mut g, a, b)?;
    let (mut value, mut error) = (first.value, first.error);
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > rel_tol * value.abs() {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::ToleranceNotMet {
                requested: rel_tol,
                achieved: error / value.abs(),
            });
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&mut g, worst.a, mid)?;
        let right = gk15(&mut g, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let total: f64 = heap.iter().map(|s| s.value).sum();
    let err: f64 = heap.iter().map(|s| s.error).sum();
    Ok((total, err))
}

struct SimplexIntegrand<'a> {
    exponents: Vec<f64>,
    labels: &'a [f64],
    beta: f64,
    shift: f64,
    inner_tol: f64,
    evals: u64,
}

impl SimplexIntegrand<'_> {
    fn coord(&self, i: usize, x: f64) -> f64 {
        let e = self.exponents[i];
        let power = if e == 0.0 { 0.0 } else { e * x.ln() };
        power + self.beta * self.labels[i] * x
    }

    /// Integral over coordinate `d` in `[0, rest]`, the remaining coordinates
    /// `d+1..` sharing whatever `d` leaves.
    fn integrate(&mut self, d: usize, rest: f64, partial: f64, tol: f64) -> Result<f64> {
        let k = self.exponents.len();
        let last = d + 2 == k;
        let (value, _) = adaptive(
            |x| {
                let here = partial + self.coord(d, x);
                if last {
                    self.evals += 1;
                    Ok((here + self.coord(k - 1, rest - x) - self.shift).exp())
                } else {
                    let inner_tol = self.inner_tol;
                    self.integrate(d + 1, rest - x, here, inner_tol)
                }
            },
            0.0,
            rest,
            tol,
        )?;
        Ok(value)
    }
}

/// `ln zeta` by iterated adaptive quadrature over the simplex.
pub fn quadrature_zeta(p: &Problem, beta: f64, rel_tol: f64) -> Result<OracleEstimate> {
    let k = p.k();
    if k > MAX_QUAD_DIM {
        return Err(Error::DimensionTooHigh(k));
    }
    if rel_tol.is_nan() || rel_tol <= 0.0 || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need rel_tol > 0 and finite beta (rel_tol={rel_tol}, beta={beta})"
        )));
    }
    let labels = p.labels();
    let shift = labels
        .iter()
        .map(|f| beta * f)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut integrand = SimplexIntegrand {
        exponents: p.dirichlet_params().iter().map(|c| c - 1.0).collect(),
        labels,
        beta,
        shift,
        inner_tol: rel_tol * 0.1,
        evals: 0,
    };
    let value = integrand.integrate(0, 1.0, 0.0, rel_tol)?;
    Ok(OracleEstimate {
        log_value: value.ln() + shift,
        std_error: 0.0,
        method: OracleMethod::Quadrature,
        samples_or_evals: integrand.evals,
        seed: None,
    })
}

#[derive(Debug, Clone, Default)]
struct Partial {
    count: u64,
    sum_w: f64,
    sum_w2: f64,
    sum_wt: Vec<f64>,
    sum_w2t: Vec<f64>,
    sum_w2t2: Vec<f64>,
}

fn run_batch(
    gammas: &[Gamma<f64>],
    labels: &[f64],
    beta: f64,
    shift: f64,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Partial {
    let k = gammas.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut acc = Partial {
        sum_wt: vec![0.0; k],
        sum_w2t: vec![0.0; k],
        sum_w2t2: vec![0.0; k],
        ..Default::default()
    };
    let mut theta = vec![0.0; k];
    for _ in 0..samples {
        let mut total = 0.0;
        for (t, g) in theta.iter_mut().zip(gammas) {
            *t = g.sample(&mut rng);
            total += *t;
        }
        let mut tilt = 0.0;
        for (t, f) in theta.iter_mut().zip(labels) {
            *t /= total;
            tilt += f * *t;
        }
        let w = (beta * tilt - shift).exp();
        let w2 = w * w;
        acc.count += 1;
        acc.sum_w += w;
        acc.sum_w2 += w2;
        for (i, &t) in theta.iter().enumerate() {
            acc.sum_wt[i] += w * t;
            acc.sum_w2t[i] += w2 * t;
            acc.sum_w2t2[i] += w2 * t * t;
        }
    }
    acc
}

/// Importance-sampling estimates of `ln zeta` and the posterior means.
///
/// Reproducible per `seed`: the work is split into [`MC_BATCHES`] streams of
/// a ChaCha8 generator and the partial sums are combined in stream order.
pub fn montecarlo_moments(
    p: &Problem,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloMoments> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite, got {beta}"
        )));
    }
    let c = p.dirichlet_params();
    let k = c.len();
    let labels = p.labels();
    let gammas: Vec<Gamma<f64>> = c
        .iter()
        .map(|&ci| Gamma::new(ci, 1.0).expect("positive shape"))
        .collect();
    let shift = labels
        .iter()
        .map(|f| beta * f)
        .fold(f64::NEG_INFINITY, f64::max);

    let per = samples / MC_BATCHES;
    let extra = samples % MC_BATCHES;
    let partials: Vec<Partial> = (0..MC_BATCHES)
        .into_par_iter()
        .map(|b| {
            let n = per + usize::from(b < extra);
            run_batch(&gammas, labels, beta, shift, n, seed, b as u64)
        })
        .collect();

    let mut total = Partial {
        sum_wt: vec![0.0; k],
        sum_w2t: vec![0.0; k],
        sum_w2t2: vec![0.0; k],
        ..Default::default()
    };
    for part in &partials {
        total.count += part.count;
        total.sum_w += part.sum_w;
        total.sum_w2 += part.sum_w2;
        for i in 0..k {
            total.sum_wt[i] += part.sum_wt[i];
            total.sum_w2t[i] += part.sum_w2t[i];
            total.sum_w2t2[i] += part.sum_w2t2[i];
        }
    }

    let n = total.count as f64;
    let means: Vec<f64> = total.sum_wt.iter().map(|s| s / total.sum_w).collect();
    let mean_std_errors: Vec<f64> = (0..k)
        .map(|i| {
            let m = means[i];
            let spread = total.sum_w2t2[i] - 2.0 * m * total.sum_w2t[i] + m * m * total.sum_w2;
            spread.max(0.0).sqrt() / total.sum_w
        })
        .collect();
    let mean_w = total.sum_w / n;
    let var_w = (total.sum_w2 / n - mean_w * mean_w).max(0.0) * n / (n - 1.0);
    let ln_dirichlet: f64 =
        c.iter().map(|&ci| libm::lgamma(ci)).sum::<f64>() - libm::lgamma(c.iter().sum());
    let ess = total.sum_w * total.sum_w / total.sum_w2;
    Ok(MonteCarloMoments {
        estimate: OracleEstimate {
            log_value: shift + mean_w.ln() + ln_dirichlet,
            std_error: var_w.sqrt() / (mean_w * n.sqrt()),
            method: OracleMethod::MonteCarlo,
            samples_or_evals: total.count,
            seed: Some(seed),
        },
        means,
        mean_std_errors,
        effective_sample_size: ess,
        low_ess: ess < MIN_ESS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> Problem {
        Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 2.3).unwrap()
    }

    #[test]
    fn panel_is_exact_for_polynomials() {
        // K15 integrates degree 22 exactly
        let mut g = |x: f64| Ok(x.powi(20) * 21.0);
        let seg = gk15(&mut g, 0.0, 1.0).unwrap();
        assert!((seg.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let (v, _) = adaptive(|x: f64| Ok(1.0 / x.sqrt()), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn quadrature_dirichlet_integral() {
        let est = quadrature_zeta(&worked(), 0.0, DEFAULT_QUAD_TOL).unwrap();
        let expected = -21.750_564_964_335_98;
        assert!(((est.log_value - expected) / expected).abs() < 1e-10);
        assert_eq!(est.method, OracleMethod::Quadrature);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn quadrature_two_outcome_closed_form() {
        let p = Problem::flat(vec![0.0, 1.0], vec![1, 1], 0.5).unwrap();
        let est = quadrature_zeta(&p, 1.0, DEFAULT_QUAD_TOL).unwrap();
        let expected = (3.0 - std::f64::consts::E).ln();
        assert!(((est.log_value - expected) / expected).abs() < 1e-10);
    }

    #[test]
    fn quadrature_worked_example() {
        let est = quadrature_zeta(&worked(), 14.1166, DEFAULT_QUAD_TOL).unwrap();
        let expected = 7.535_809_108_501_712;
        assert!(((est.log_value - expected) / expected).abs() < 1e-10);
    }

    #[test]
    fn quadrature_is_deterministic() {
        let a = quadrature_zeta(&worked(), 5.0, DEFAULT_QUAD_TOL).unwrap();
        let b = quadrature_zeta(&worked(), 5.0, DEFAULT_QUAD_TOL).unwrap();
        assert_eq!(a.log_value.to_bits(), b.log_value.to_bits());
    }

    #[test]
    fn quadrature_dimension_limit() {
        let p = Problem::flat(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![1; 5], 3.0).unwrap();
        assert_eq!(
            quadrature_zeta(&p, 1.0, DEFAULT_QUAD_TOL).unwrap_err(),
            Error::DimensionTooHigh(5)
        );
    }

    #[test]
    fn montecarlo_unweighted_means() {
        let mc = montecarlo_moments(&worked(), 0.0, 1_000_000, 1).unwrap();
        for ((m, se), e) in
            mc.means
                .iter()
                .zip(&mc.mean_std_errors)
                .zip([12.0 / 23.0, 3.0 / 23.0, 8.0 / 23.0])
        {
            assert!((m - e).abs() < 3.0 * se, "{m} vs {e} (se {se})");
        }
        // all weights equal
        assert!((mc.effective_sample_size - 1_000_000.0).abs() < 1e-4);
        let expected = -21.750_564_964_335_98;
        assert!((mc.estimate.log_value - expected).abs() < 1e-12);
    }

    #[test]
    fn montecarlo_is_reproducible() {
        let a = montecarlo_moments(&worked(), 14.1166, 20_000, 1).unwrap();
        let b = montecarlo_moments(&worked(), 14.1166, 20_000, 1).unwrap();
        assert_eq!(a, b);
        let c = montecarlo_moments(&worked(), 14.1166, 20_000, 2).unwrap();
        assert_ne!(a.means, c.means);
        assert_eq!(a.estimate.seed, Some(1));
    }

    #[test]
    fn montecarlo_closed_form_two_outcomes() {
        let p = Problem::flat(vec![0.0, 1.0], vec![1, 1], 0.5).unwrap();
        let mc = montecarlo_moments(&p, 1.0, 200_000, 11).unwrap();
        let expected = (3.0 - std::f64::consts::E).ln();
        assert!((mc.estimate.log_value - expected).abs() < 3.0 * mc.estimate.std_error);
    }

    #[test]
    fn low_ess_flag() {
        // A strongly tilted two-outcome problem with a tiny sample.
        let p = Problem::flat(vec![0.0, 1.0], vec![30, 0], 0.5).unwrap();
        let mc = montecarlo_moments(&p, 400.0, 1_000, 3).unwrap();
        assert!(mc.low_ess);
        assert!(mc.means.iter().all(|m| m.is_finite()));
    }

    #[test]
    fn montecarlo_rejects_tiny_runs() {
        assert!(montecarlo_moments(&worked(), 0.0, 999, 1).is_err());
    }
}
