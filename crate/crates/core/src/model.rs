//! Problem definition: outcome labels, observed counts, a Dirichlet-style
//! prior and the target value of the linear moment `sum_i f_i theta_i`.
//!
//! The posterior density on the simplex is
//!
//! ```text
//! p(theta) ∝ prod_i theta_i^(m_i + alpha_i - 1) * exp(beta * f_i * theta_i)
//! ```
//!
//! i.e. the multinomial likelihood times the prior, modified by the
//! exponential factor carrying the moment information. With a flat prior
//! (`alpha_i = 1`) the exponents are exactly the observed counts.

use crate::error::{Error, Result};

/// Absolute tolerance on `sum theta_i = 1` for points on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Outcome labels `f_1..f_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    labels: Vec<f64>,
}

impl OutcomeModel {
    pub fn new(labels: Vec<f64>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::TooFewOutcomes(labels.len()));
        }
        if let Some(index) = labels.iter().position(|f| !f.is_finite()) {
            return Err(Error::NonFiniteLabel { index });
        }
        Ok(OutcomeModel { labels })
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    /// All labels equal: the moment constraint carries no information.
    pub fn is_degenerate(&self) -> bool {
        self.labels.iter().all(|&f| f == self.labels[0])
    }

    pub fn min_label(&self) -> f64 {
        self.labels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_label(&self) -> f64 {
        self.labels
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Observed counts `m'_1..m'_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountData {
    counts: Vec<u64>,
}

impl CountData {
    pub fn new(counts: Vec<u64>) -> Self {
        CountData { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Dirichlet pseudo-counts of the prior. All ones is the flat prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pseudo_counts: Vec<f64>,
}

impl PriorSpec {
    pub fn flat(k: usize) -> Self {
        PriorSpec {
            pseudo_counts: vec![1.0; k],
        }
    }

    pub fn new(pseudo_counts: Vec<f64>) -> Result<Self> {
        for (index, &value) in pseudo_counts.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositivePseudoCount { index, value });
            }
        }
        Ok(PriorSpec { pseudo_counts })
    }

    pub fn pseudo_counts(&self) -> &[f64] {
        &self.pseudo_counts
    }

    pub fn is_flat(&self) -> bool {
        self.pseudo_counts.iter().all(|&a| a == 1.0)
    }
}

/// A validated update problem. Construct with [`validate_problem`] or
/// [`Problem::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    model: OutcomeModel,
    data: CountData,
    prior: PriorSpec,
    moment_target: f64,
}

impl Problem {
    pub fn new(
        model: OutcomeModel,
        data: CountData,
        prior: PriorSpec,
        moment_target: f64,
    ) -> Result<Self> {
        validate_problem(model, data, prior, moment_target)
    }

    /// Flat-prior convenience constructor.
    pub fn flat(labels: Vec<f64>, counts: Vec<u64>, moment_target: f64) -> Result<Self> {
        let model = OutcomeModel::new(labels)?;
        let prior = PriorSpec::flat(model.k());
        validate_problem(model, CountData::new(counts), prior, moment_target)
    }

    pub fn model(&self) -> &OutcomeModel {
        &self.model
    }

    pub fn data(&self) -> &CountData {
        &self.data
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn labels(&self) -> &[f64] {
        self.model.labels()
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn moment_target(&self) -> f64 {
        self.moment_target
    }

    pub fn is_degenerate(&self) -> bool {
        self.model.is_degenerate()
    }

    /// Dirichlet parameters of the unmodified posterior, `m'_i + alpha_i`.
    pub fn dirichlet_params(&self) -> Vec<f64> {
        self.data
            .counts()
            .iter()
            .zip(self.prior.pseudo_counts())
            .map(|(&m, &a)| m as f64 + a)
            .collect()
    }

    /// Same counts and prior with a different moment target.
    pub fn with_target(&self, moment_target: f64) -> Result<Self> {
        validate_problem(
            self.model.clone(),
            self.data.clone(),
            self.prior.clone(),
            moment_target,
        )
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    theta: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(i) = theta.iter().position(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::NotOnSimplex(format!(
                "theta[{i}] = {} is negative or not finite",
                theta[i]
            )));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotOnSimplex(format!("components sum to {sum}")));
        }
        Ok(SimplexPoint { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

/// Check every constraint on a problem and assemble it.
pub fn validate_problem(
    model: OutcomeModel,
    data: CountData,
    prior: PriorSpec,
    moment_target: f64,
) -> Result<Problem> {
    let k = model.k();
    if data.len() != k {
        return Err(Error::LengthMismatch {
            what: "counts",
            expected: k,
            got: data.len(),
        });
    }
    if prior.pseudo_counts().len() != k {
        return Err(Error::LengthMismatch {
            what: "pseudo_counts",
            expected: k,
            got: prior.pseudo_counts().len(),
        });
    }
    if model.is_degenerate() {
        let label = model.labels()[0];
        if moment_target != label {
            return Err(Error::DegenerateLabels {
                label,
                target: moment_target,
            });
        }
    } else {
        let (min, max) = (model.min_label(), model.max_label());
        if !(moment_target > min && moment_target < max) {
            return Err(Error::MomentOutOfRange {
                target: moment_target,
                min,
                max,
            });
        }
    }
    Ok(Problem {
        model,
        data,
        prior,
        moment_target,
    })
}

/// Log of the unnormalized posterior density at `theta`:
/// `sum_i (m'_i + alpha_i - 1) ln theta_i + beta f_i theta_i`.
pub fn log_unnormalized_density(p: &Problem, beta: f64, theta: &SimplexPoint) -> Result<f64> {
    let theta = theta.theta();
    if theta.len() != p.k() {
        return Err(Error::LengthMismatch {
            what: "theta",
            expected: p.k(),
            got: theta.len(),
        });
    }
    let mut acc = 0.0;
    for (i, ((&t, &c), &f)) in theta
        .iter()
        .zip(&p.dirichlet_params())
        .zip(p.labels())
        .enumerate()
    {
        let exponent = c - 1.0;
        if t == 0.0 {
            if exponent < 0.0 {
                return Err(Error::OutOfSupport { index: i, exponent });
            }
            // 0 * ln 0 := 0; a positive exponent sends the density to zero.
            if exponent > 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
        } else {
            acc += exponent * t.ln();
        }
        acc += beta * f * t;
    }
    Ok(acc)
}

/// Posterior mean without the moment constraint: the conjugate Dirichlet mean
/// `(m'_i + alpha_i) / (n + sum alpha)`.
pub fn bayes_posterior_mean(p: &Problem) -> Vec<f64> {
    let c = p.dirichlet_params();
    let total: f64 = c.iter().sum();
    c.iter().map(|&ci| ci / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> Problem {
        Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 2.3).unwrap()
    }

    #[test]
    fn validates_worked_example() {
        let p = worked();
        assert_eq!(p.k(), 3);
        assert_eq!(p.data().n(), 20);
        assert!(!p.is_degenerate());
        assert!(p.prior().is_flat());
    }

    #[test]
    fn rejects_boundary_target() {
        let err = Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 3.0).unwrap_err();
        assert_eq!(err.code(), "MomentOutOfRange");
        let err = Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 1.0).unwrap_err();
        assert_eq!(err.code(), "MomentOutOfRange");
        let err = Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], f64::NAN).unwrap_err();
        assert_eq!(err.code(), "MomentOutOfRange");
    }

    #[test]
    fn degenerate_labels() {
        let p = Problem::flat(vec![2.0, 2.0, 2.0], vec![1, 1, 1], 2.0).unwrap();
        assert!(p.is_degenerate());
        let err = Problem::flat(vec![2.0, 2.0, 2.0], vec![1, 1, 1], 2.1).unwrap_err();
        assert_eq!(err.code(), "DegenerateLabels");
    }

    #[test]
    fn length_and_prior_errors() {
        let model = OutcomeModel::new(vec![1.0, 2.0, 3.0]).unwrap();
        let err = validate_problem(
            model.clone(),
            CountData::new(vec![1, 2]),
            PriorSpec::flat(3),
            2.0,
        )
        .unwrap_err();
        assert_eq!(err.code(), "LengthMismatch");
        let err = validate_problem(
            model,
            CountData::new(vec![1, 2, 3]),
            PriorSpec::flat(2),
            2.0,
        )
        .unwrap_err();
        assert_eq!(err.code(), "LengthMismatch");
        assert_eq!(
            PriorSpec::new(vec![1.0, 0.0]).unwrap_err().code(),
            "NonPositivePseudoCount"
        );
        assert_eq!(
            OutcomeModel::new(vec![1.0]).unwrap_err().code(),
            "TooFewOutcomes"
        );
        assert_eq!(
            OutcomeModel::new(vec![1.0, f64::INFINITY])
                .unwrap_err()
                .code(),
            "NonFiniteLabel"
        );
    }

    #[test]
    fn zero_counts_allowed() {
        let p = Problem::flat(vec![1.0, 2.0, 3.0], vec![0, 0, 0], 2.3).unwrap();
        assert_eq!(p.data().n(), 0);
        let mean = bayes_posterior_mean(&p);
        for m in mean {
            assert!((m - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn simplex_point_checks() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexPoint::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn density_examples() {
        let p = worked();
        let third = SimplexPoint::new(vec![1.0 / 3.0; 3]).unwrap();
        let at0 = log_unnormalized_density(&p, 0.0, &third).unwrap();
        assert!((at0 - 20.0 * (1.0f64 / 3.0).ln()).abs() < 1e-12);
        let at = log_unnormalized_density(&p, 14.1166, &third).unwrap();
        assert!((at - (20.0 * (1.0f64 / 3.0).ln() + 28.2332)).abs() < 1e-12);

        let p2 = Problem::flat(vec![0.0, 1.0], vec![0, 0], 0.5).unwrap();
        let half = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        assert!((log_unnormalized_density(&p2, 5.0, &half).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn density_at_faces() {
        // zero exponent: 0 ln 0 = 0
        let p = Problem::flat(vec![0.0, 1.0], vec![0, 3], 0.5).unwrap();
        let corner = SimplexPoint::new(vec![0.0, 1.0]).unwrap();
        assert!((log_unnormalized_density(&p, 2.0, &corner).unwrap() - 2.0).abs() < 1e-15);
        let other = SimplexPoint::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            log_unnormalized_density(&p, 2.0, &other).unwrap(),
            f64::NEG_INFINITY
        );

        let sparse = Problem::new(
            OutcomeModel::new(vec![0.0, 1.0]).unwrap(),
            CountData::new(vec![0, 0]),
            PriorSpec::new(vec![0.5, 0.5]).unwrap(),
            0.5,
        )
        .unwrap();
        assert_eq!(
            log_unnormalized_density(&sparse, 1.0, &corner)
                .unwrap_err()
                .code(),
            "OutOfSupport"
        );
    }

    #[test]
    fn bayes_mean_examples() {
        let mean = bayes_posterior_mean(&worked());
        let expected = [12.0 / 23.0, 3.0 / 23.0, 8.0 / 23.0];
        for (m, e) in mean.iter().zip(expected) {
            assert!((m - e).abs() < 1e-15);
        }
        let f0: f64 = mean.iter().zip([1.0, 2.0, 3.0]).map(|(m, f)| m * f).sum();
        assert!((f0 - 42.0 / 23.0).abs() < 1e-15);
        assert!((f0 - 1.826087).abs() < 1e-6);
    }
}
