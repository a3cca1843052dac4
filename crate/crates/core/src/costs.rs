//! Random holding costs, running-mean estimators and confidence radii.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar::{Real, Scalar};

/// Stream id reserved for instance generation.
pub const GENERATOR_STREAM: u64 = u64::MAX;

/// Per-job stream carrying the holding-cost draws of job `i`.
pub fn cost_stream(job: usize) -> u64 {
    2 * job as u64
}

/// Per-job stream carrying the geometric completion draws of job `i`.
pub fn completion_stream(job: usize) -> u64 {
    2 * job as u64 + 1
}

/// Independent generator for `(seed, stream)`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `X in {0, 1}` with `P[X = 1] = c_i`.
    Bernoulli,
    /// `N(c_i, sigma^2)`, unclipped.
    Gaussian,
    /// `X in {0, mu_i}` with `P[X = mu_i] = c_i`; the observed mean is `c_i mu_i`.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub kind: CostKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::bernoulli()
    }
}

impl CostModel {
    pub fn bernoulli() -> Self {
        CostModel {
            kind: CostKind::Bernoulli,
            sigma: 1.0,
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        let model = CostModel {
            kind: CostKind::Gaussian,
            sigma,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn two_point() -> Self {
        CostModel {
            kind: CostKind::TwoPoint,
            sigma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == CostKind::Gaussian && !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian sigma must lie in (0, 1], got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// One holding-cost draw for a job with mean cost `cost` and rate `rate`.
    pub fn sample<R: Rng + ?Sized>(&self, cost: f64, rate: f64, rng: &mut R) -> f64 {
        match self.kind {
            CostKind::Bernoulli => {
                if rng.random::<f64>() < cost {
                    1.0
                } else {
                    0.0
                }
            }
            CostKind::Gaussian => Normal::new(cost, self.sigma)
                .expect("sigma validated")
                .sample(rng),
            CostKind::TwoPoint => {
                if rng.random::<f64>() < cost {
                    rate
                } else {
                    0.0
                }
            }
        }
    }

    /// Multiplier turning an estimated mean into a c-mu index.
    ///
    /// Under [`CostKind::TwoPoint`] the observations already average to
    /// `c_i mu_i`, so the raw running mean is the index.
    pub fn index_weights<S: Scalar>(&self, inst: &Instance<S>) -> Vec<S> {
        match self.kind {
            CostKind::TwoPoint => vec![S::one(); inst.n()],
            _ => inst.index_rates().to_vec(),
        }
    }
}

/// Draw one holding cost for `job` of `inst`.
pub fn sample_cost<S: Scalar, R: Rng + ?Sized>(
    job: usize,
    inst: &Instance<S>,
    model: &CostModel,
    rng: &mut R,
) -> f64 {
    model.sample(
        inst.costs()[job].lossy_f64(),
        inst.rates()[job].lossy_f64(),
        rng,
    )
}

/// Running sums and empirical means `c_hat_{i,t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState<S = f64> {
    sums: Vec<S>,
    counts: Vec<u64>,
    means: Vec<S>,
}

impl<S: Scalar> EstimatorState<S> {
    pub fn new(n: usize) -> Self {
        EstimatorState {
            sums: vec![S::zero(); n],
            counts: vec![0; n],
            means: vec![S::zero(); n],
        }
    }

    pub fn observe(&mut self, job: usize, x: S) {
        self.sums[job] = self.sums[job] + x;
        self.counts[job] += 1;
        self.means[job] = self.sums[job] / S::from_count(self.counts[job]);
    }

    pub fn mean(&self, job: usize) -> S {
        self.means[job]
    }

    pub fn means(&self) -> &[S] {
        &self.means
    }

    pub fn count(&self, job: usize) -> u64 {
        self.counts[job]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[S] {
        &self.sums
    }
}

/// `x_t = sqrt((2 / t) ln(N T / mu_min))`.
pub fn confidence_radius<S: Real>(t: u64, n: usize, t_scale: u64, mu_min: S) -> Result<S> {
    if t == 0 {
        return Err(Error::InvalidArgument("t must be >= 1".into()));
    }
    let ratio = S::from_count(n as u64) * S::from_count(t_scale) / mu_min;
    if !(ratio > S::one()) {
        return Err(Error::InvalidArgument(format!(
            "N T / mu_min must exceed 1, got {:?}",
            ratio
        )));
    }
    let two = S::one() + S::one();
    Ok((two / S::from_count(t) * ratio.ln()).sqrt())
}
