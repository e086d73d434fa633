//! Normalizing constant of the modified posterior and the moments derived
//! from it.
//!
//! ```text
//! zeta = ∫_simplex prod_i theta_i^(c_i - 1) exp(beta f_i theta_i) dtheta,   c_i = m'_i + alpha_i
//! ```
//!
//! One outcome `r` is eliminated through `theta_r = 1 - sum_{i != r} theta_i`
//! and the remaining coordinates are integrated one at a time. Each step
//! produces a Beta factor times a confluent hypergeometric series, so the
//! whole integral is a nested series
//!
//! ```text
//! zeta = e^(beta f_r) I_1(I_2(...I_{k-1}))
//! I_j  = B(a_j, b_j - a_j) sum_q (a_j)_q / (b_j)_q  t_j^q / q!  I_{j+1}
//! ```
//!
//! with `a_j` the Dirichlet parameter of the coordinate integrated at level
//! `j`, `t_j = beta (f_j - f_r)` and `b_j` growing with the summation indices
//! of the enclosing levels. The innermost level is Kummer's `M(a; b; t)`
//! in closed form.
//!
//! The eliminated outcome is the one minimizing `beta f_i`, which makes every
//! `t_j >= 0` so all terms are positive. Everything is kept in log domain:
//! `e^(beta f_r)` alone overflows for moderately large multipliers.
//!
//! Moments follow from ratios of normalizations with shifted parameters,
//! e.g. `E[theta_i] = zeta(c + e_i) / zeta(c)`.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::model::Problem;

/// Relative size below which a series term is considered negligible.
pub const TRUNCATION_EPS: f64 = 1e-15;
/// Number of consecutive negligible terms before a series is cut.
pub const NEGLIGIBLE_RUN: usize = 3;
/// Hard cap on terms per series level.
pub const MAX_TERMS: usize = 1_000_000;

const RESCALE: f64 = 1e280;

/// Parameters of one level of the nested series, with all enclosing
/// summation indices at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    pub level: usize,
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

/// Logarithm of a normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogZeta {
    pub log_value: f64,
    pub converged: bool,
    /// Total series terms summed over all levels.
    pub terms_used: usize,
}

/// Moments of the modified posterior at a fixed multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMoments {
    pub log_zeta: f64,
    pub means: Vec<f64>,
    /// `sum_i f_i E[theta_i]`, the derivative of `ln zeta` in `beta`.
    pub moment: f64,
    /// `Var(sum_i f_i theta_i)`, the second derivative of `ln zeta`.
    pub variance: f64,
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn ln_beta(x: f64, y: f64) -> f64 {
    ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)
}

/// `ln M(a; b; t)` for Kummer's confluent hypergeometric function
/// `M(a; b; t) = sum_q (a)_q / (b)_q t^q / q!`.
///
/// Requires `b > a > 0`. Negative arguments below -1 go through Kummer's
/// transformation `M(a; b; t) = e^t M(b - a; b; -t)` so the summed terms are
/// positive; for `-1 <= t < 0` the alternating series is summed directly,
/// since there the `e^t` factor would cancel most of the digits instead.
pub fn kummer_m_log(a: f64, b: f64, t: f64) -> Result<f64> {
    if !(a > 0.0 && b > a && a.is_finite() && b.is_finite() && t.is_finite()) {
        return Err(Error::InvalidSeriesParams { a, b, t });
    }
    kummer_m_log_unchecked(a, b, t).map(|(v, _)| v)
}

fn kummer_m_log_unchecked(a: f64, b: f64, t: f64) -> Result<(f64, usize)> {
    if t == 0.0 {
        return Ok((0.0, 1));
    }
    if t < -1.0 {
        return positive_series(b - a, b, -t).map(|(v, n)| (v + t, n));
    }
    if t < 0.0 {
        return small_negative_series(a, b, t);
    }
    positive_series(a, b, t)
}

fn small_negative_series(a: f64, b: f64, t: f64) -> Result<(f64, usize)> {
    let mut term = 1.0;
    let mut tail = 0.0;
    let mut negligible = 0;
    for q in 0..MAX_TERMS {
        let qf = q as f64;
        term *= (a + qf) / (b + qf) * t / (qf + 1.0);
        tail += term;
        if term.abs() < TRUNCATION_EPS * (1.0 + tail).abs() {
            negligible += 1;
            if negligible >= NEGLIGIBLE_RUN {
                return Ok((tail.ln_1p(), q + 2));
            }
        } else {
            negligible = 0;
        }
    }
    Err(Error::NoConvergence { terms: MAX_TERMS })
}

/// Sum of `(a)_q/(b)_q t^q/q!` for `t > 0`, returned as a logarithm.
fn positive_series(a: f64, b: f64, t: f64) -> Result<(f64, usize)> {
    // The leading 1 is kept apart so that ln_1p keeps full precision for small t.
    let mut head = 1.0;
    let mut term = 1.0;
    let mut tail = 0.0;
    let mut ln_scale = 0.0;
    let mut negligible = 0;
    for q in 0..MAX_TERMS {
        let qf = q as f64;
        let ratio = (a + qf) / (b + qf) * t / (qf + 1.0);
        term *= ratio;
        tail += term;
        if tail > RESCALE {
            head /= RESCALE;
            tail /= RESCALE;
            term /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        if ratio < 1.0 && term < TRUNCATION_EPS * (head + tail) {
            negligible += 1;
            if negligible >= NEGLIGIBLE_RUN {
                let value = if ln_scale == 0.0 {
                    tail.ln_1p()
                } else {
                    (head + tail).ln() + ln_scale
                };
                return Ok((value, q + 2));
            }
        } else {
            negligible = 0;
        }
    }
    Err(Error::NoConvergence { terms: MAX_TERMS })
}

/// Streaming `ln(sum exp(x_i))`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Nested series over the non-eliminated outcomes, outermost level first.
struct Nested {
    a: Vec<f64>,
    t: Vec<f64>,
    terms: Cell<usize>,
}

impl Nested {
    /// Log of level `j` given the exponent `carry` accumulated by the
    /// eliminated coordinate and all enclosing levels.
    fn level(&self, j: usize, carry: f64) -> Result<f64> {
        let a = self.a[j];
        let t = self.t[j];
        let b = a + carry;
        let prefactor = ln_beta(a, carry);
        if j + 1 == self.a.len() {
            let (m, n) = kummer_m_log_unchecked(a, b, t)?;
            self.terms.set(self.terms.get() + n);
            return Ok(prefactor + m);
        }
        if t == 0.0 {
            // Singular point of the series: only the q = 0 term survives.
            self.terms.set(self.terms.get() + 1);
            return Ok(prefactor + self.level(j + 1, b)?);
        }
        let ln_eps = TRUNCATION_EPS.ln();
        let mut coef = prefactor;
        let mut acc = LogSum::new();
        let mut prev = f64::NEG_INFINITY;
        let mut negligible = 0;
        for q in 0..MAX_TERMS {
            let qf = q as f64;
            let term = coef + self.level(j + 1, b + qf)?;
            acc.add(term);
            if term < prev && term - acc.value() < ln_eps {
                negligible += 1;
                if negligible >= NEGLIGIBLE_RUN {
                    self.terms.set(self.terms.get() + q + 1);
                    return Ok(acc.value());
                }
            } else {
                negligible = 0;
            }
            prev = term;
            coef += ((a + qf) / (b + qf) * t / (qf + 1.0)).ln();
        }
        Err(Error::NoConvergence { terms: MAX_TERMS })
    }
}

/// `ln zeta` for Dirichlet parameters `c` and labels `f`.
pub(crate) fn log_zeta_raw(c: &[f64], f: &[f64], beta: f64) -> Result<LogZeta> {
    debug_assert_eq!(c.len(), f.len());
    debug_assert!(c.len() >= 2);
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite, got {beta}"
        )));
    }
    let r = (0..f.len())
        .min_by(|&i, &j| (beta * f[i]).total_cmp(&(beta * f[j])))
        .unwrap();
    let mut others: Vec<(f64, f64)> = (0..f.len())
        .filter(|&i| i != r)
        .map(|i| (c[i], beta * (f[i] - f[r])))
        .collect();
    // Large arguments go innermost, where the series is summed in closed form.
    others.sort_by(|x, y| x.1.total_cmp(&y.1));
    let nested = Nested {
        a: others.iter().map(|o| o.0).collect(),
        t: others.iter().map(|o| o.1.max(0.0)).collect(),
        terms: Cell::new(0),
    };
    let series = nested.level(0, c[r])?;
    Ok(LogZeta {
        log_value: beta * f[r] + series,
        converged: true,
        terms_used: nested.terms.get(),
    })
}

/// Level parameters in the as-written ordering: the last outcome is
/// eliminated and level `j` integrates outcome `k - j`.
pub fn series_levels(p: &Problem, beta: f64) -> Vec<SeriesParams> {
    let c = p.dirichlet_params();
    let f = p.labels();
    let k = c.len();
    let mut carry = c[k - 1];
    (1..k)
        .map(|j| {
            let i = k - 1 - j;
            let a = c[i];
            let level = SeriesParams {
                level: j,
                a,
                b: a + carry,
                t: beta * (f[i] - f[k - 1]),
            };
            carry += a;
            level
        })
        .collect()
}

/// `ln zeta` of the modified posterior at multiplier `beta`.
pub fn log_zeta(p: &Problem, beta: f64) -> Result<LogZeta> {
    log_zeta_raw(&p.dirichlet_params(), p.labels(), beta)
}

pub(crate) fn means_raw(c: &[f64], f: &[f64], beta: f64) -> Result<(f64, Vec<f64>)> {
    let base = log_zeta_raw(c, f, beta)?.log_value;
    let mut shifted = c.to_vec();
    let mut means = Vec::with_capacity(c.len());
    for i in 0..c.len() {
        shifted[i] += 1.0;
        means.push((log_zeta_raw(&shifted, f, beta)?.log_value - base).exp());
        shifted[i] -= 1.0;
    }
    Ok((base, means))
}

pub(crate) fn moments_raw(c: &[f64], f: &[f64], beta: f64) -> Result<PosteriorMoments> {
    let (base, means) = means_raw(c, f, beta)?;
    let moment: f64 = f.iter().zip(&means).map(|(fi, mi)| fi * mi).sum();
    let degenerate = f.iter().all(|&fi| fi == f[0]);
    let variance = if degenerate {
        0.0
    } else {
        // Centering at the mean keeps the double sum free of large cancellation.
        let g: Vec<f64> = f.iter().map(|fi| fi - moment).collect();
        let mut shifted = c.to_vec();
        let mut second = 0.0;
        for i in 0..c.len() {
            for j in i..c.len() {
                shifted[i] += 1.0;
                shifted[j] += 1.0;
                let cross = (log_zeta_raw(&shifted, f, beta)?.log_value - base).exp();
                shifted[i] -= 1.0;
                shifted[j] -= 1.0;
                let weight = if i == j { 1.0 } else { 2.0 };
                second += weight * g[i] * g[j] * cross;
            }
        }
        let first: f64 = g.iter().zip(&means).map(|(gi, mi)| gi * mi).sum();
        (second - first * first).max(0.0)
    };
    Ok(PosteriorMoments {
        log_zeta: base,
        means,
        moment,
        variance,
    })
}

/// Posterior means `E[theta_i]` under the modified posterior.
pub fn posterior_mean(p: &Problem, beta: f64) -> Result<Vec<f64>> {
    means_raw(&p.dirichlet_params(), p.labels(), beta).map(|(_, m)| m)
}

/// `E[sum_i f_i theta_i] = d ln zeta / d beta`.
pub fn moment_of_f(p: &Problem, beta: f64) -> Result<f64> {
    let (_, means) = means_raw(&p.dirichlet_params(), p.labels(), beta)?;
    Ok(p.labels().iter().zip(&means).map(|(f, m)| f * m).sum())
}

/// `Var(sum_i f_i theta_i) = d^2 ln zeta / d beta^2`.
pub fn variance_of_f(p: &Problem, beta: f64) -> Result<f64> {
    moments_raw(&p.dirichlet_params(), p.labels(), beta).map(|m| m.variance)
}

/// Normalization, means, moment and variance in one pass.
pub fn posterior_moments(p: &Problem, beta: f64) -> Result<PosteriorMoments> {
    moments_raw(&p.dirichlet_params(), p.labels(), beta)
}
