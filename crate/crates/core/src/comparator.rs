//! Method-of-types comparison: the empirical frequencies tilted exponentially
//! until they satisfy the moment constraint,
//! `theta*_i ∝ nu_i exp(eta f_i)`.
//!
//! This treats the sample frequencies as if they were the true
//! probabilities, which is only justified asymptotically; the entropic
//! update above converges to it as the counts grow with fixed frequencies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CountData, Problem};
use crate::root::solve_increasing;
use crate::solver::{full_update_with, SolverOptions};

pub const DEFAULT_TILT_TOL: f64 = 1e-12;
const TILT_CAP: f64 = 1e6;
/// Below this sample size the report warns about frequencies standing in
/// for probabilities.
pub const SMALL_SAMPLE: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedEmpirical {
    pub frequencies: Vec<f64>,
    pub eta: f64,
    pub probabilities: Vec<f64>,
}

/// Side-by-side view of the entropic update and the tilted frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub me_means: Vec<f64>,
    pub tilted: TiltedEmpirical,
    /// `tilted - me_means`, componentwise.
    pub differences: Vec<f64>,
    pub l1: f64,
    pub linf: f64,
    pub beta: f64,
    pub eta: f64,
    pub annotations: Vec<String>,
}

/// `nu_i = m'_i / n`.
pub fn empirical_frequencies(data: &CountData) -> Result<Vec<f64>> {
    let n = data.n();
    if n == 0 {
        return Err(Error::NoData);
    }
    Ok(data.counts().iter().map(|&m| m as f64 / n as f64).collect())
}

fn tilt(nu: &[f64], f: &[f64], eta: f64) -> Vec<f64> {
    let logs: Vec<f64> = nu
        .iter()
        .zip(f)
        .map(|(&v, &fi)| {
            if v > 0.0 {
                v.ln() + eta * fi
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Tilt `nu` so that `sum_i f_i theta*_i = target`.
pub fn solve_tilt(nu: &[f64], f: &[f64], target: f64, tol: f64) -> Result<TiltedEmpirical> {
    if nu.len() != f.len() {
        return Err(Error::LengthMismatch {
            what: "frequencies",
            expected: f.len(),
            got: nu.len(),
        });
    }
    let sum: f64 = nu.iter().sum();
    if nu.iter().any(|&v| v.is_nan() || v < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "frequencies must be a probability vector (sum {sum})"
        )));
    }
    let support = || {
        nu.iter()
            .zip(f)
            .filter(|(&v, _)| v > 0.0)
            .map(|(_, &fi)| fi)
    };
    let lo = support().fold(f64::INFINITY, f64::min);
    let hi = support().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi && target == lo {
        return Ok(TiltedEmpirical {
            frequencies: nu.to_vec(),
            eta: 0.0,
            probabilities: nu.to_vec(),
        });
    }
    if !(target > lo && target < hi) {
        let all_lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let all_hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(if target > all_lo && target < all_hi {
            Error::ZeroSupport { target }
        } else {
            Error::MomentOutOfRange {
                target,
                min: all_lo,
                max: all_hi,
            }
        });
    }
    let report = solve_increasing(
        |eta| {
            let theta = tilt(nu, f, eta);
            let mean: f64 = theta.iter().zip(f).map(|(t, fi)| t * fi).sum();
            let var: f64 = theta
                .iter()
                .zip(f)
                .map(|(t, fi)| t * (fi - mean) * (fi - mean))
                .sum();
            Ok((mean - target, var))
        },
        0.0,
        tol,
        TILT_CAP,
    )?;
    Ok(TiltedEmpirical {
        frequencies: nu.to_vec(),
        eta: report.root,
        probabilities: tilt(nu, f, report.root),
    })
}

/// Solve both the entropic update and the tilted frequencies for `p`.
pub fn compare(p: &Problem) -> Result<Comparison> {
    compare_with(p, &SolverOptions::default(), DEFAULT_TILT_TOL)
}

pub fn compare_with(p: &Problem, opts: &SolverOptions, tilt_tol: f64) -> Result<Comparison> {
    let nu = empirical_frequencies(p.data())?;
    let tilted = solve_tilt(&nu, p.labels(), p.moment_target(), tilt_tol)?;
    let me = full_update_with(p, opts)?;
    let differences: Vec<f64> = tilted
        .probabilities
        .iter()
        .zip(&me.means)
        .map(|(t, m)| t - m)
        .collect();
    let l1 = differences.iter().map(|d| d.abs()).sum();
    let linf = differences.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));

    let mut annotations = Vec::new();
    let n = p.data().n();
    if n < SMALL_SAMPLE {
        annotations.push(format!(
            "frequencies from a finite sample (n = {n}) are used as probabilities"
        ));
    }
    if nu.contains(&0.0) {
        annotations.push(
            "unobserved categories have zero frequency and stay at zero after tilting".to_string(),
        );
    }
    Ok(Comparison {
        me_means: me.means,
        eta: tilted.eta,
        tilted,
        differences,
        l1,
        linf,
        beta: me.beta,
        annotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: [f64; 3] = [1.0, 2.0, 3.0];

    #[test]
    fn frequencies() {
        let nu = empirical_frequencies(&CountData::new(vec![11, 2, 7])).unwrap();
        assert_eq!(nu, vec![0.55, 0.10, 0.35]);
        let nu = empirical_frequencies(&CountData::new(vec![5, 5])).unwrap();
        assert_eq!(nu, vec![0.5, 0.5]);
        assert_eq!(
            empirical_frequencies(&CountData::new(vec![0, 0, 0])).unwrap_err(),
            Error::NoData
        );
    }

    #[test]
    fn worked_example_tilt() {
        let t = solve_tilt(&[0.55, 0.10, 0.35], &F, 2.3, DEFAULT_TILT_TOL).unwrap();
        for (p, e) in t.probabilities.iter().zip([0.3015, 0.0971, 0.6015]) {
            assert!((p - e).abs() < 5e-4);
        }
        // For labels 1,2,3 the moment equation is the quadratic
        // 0.245 x^2 - 0.03 x - 0.715 = 0 in x = e^eta.
        let x = (0.03 + (0.03f64 * 0.03 + 4.0 * 0.245 * 0.715).sqrt()) / (2.0 * 0.245);
        assert!((t.eta.exp() - x).abs() < 1e-10);
        let mean: f64 = t.probabilities.iter().zip(F).map(|(p, f)| p * f).sum();
        assert!((mean - 2.3).abs() < 1e-12);
        assert!((t.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn untilted_when_target_is_the_empirical_mean() {
        let nu = [0.55, 0.10, 0.35];
        let target: f64 = nu.iter().zip(F).map(|(v, f)| v * f).sum();
        let t = solve_tilt(&nu, &F, target, DEFAULT_TILT_TOL).unwrap();
        assert!(t.eta.abs() <= DEFAULT_TILT_TOL);
        for (p, v) in t.probabilities.iter().zip(nu) {
            assert!((p - v).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_frequencies_stay_zero() {
        let t = solve_tilt(&[0.5, 0.0, 0.5], &F, 2.5, DEFAULT_TILT_TOL).unwrap();
        assert_eq!(t.probabilities[1], 0.0);
        let err = solve_tilt(&[0.5, 0.5, 0.0], &F, 2.5, DEFAULT_TILT_TOL).unwrap_err();
        assert_eq!(err.code(), "ZeroSupport");
        let err = solve_tilt(&[0.5, 0.2, 0.3], &F, 3.5, DEFAULT_TILT_TOL).unwrap_err();
        assert_eq!(err.code(), "MomentOutOfRange");
    }

    #[test]
    fn worked_example_comparison() {
        let p = Problem::flat(F.to_vec(), vec![11, 2, 7], 2.3).unwrap();
        let c = compare(&p).unwrap();
        assert!((c.linf - 0.0144).abs() < 1e-3);
        assert!(!c.annotations.is_empty());
        assert!((c.beta - 14.1166).abs() < 5e-4);
    }

    #[test]
    fn comparison_needs_data() {
        let p = Problem::flat(F.to_vec(), vec![0, 0, 0], 2.3).unwrap();
        assert_eq!(compare(&p).unwrap_err(), Error::NoData);
    }
}
