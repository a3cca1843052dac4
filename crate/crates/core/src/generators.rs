//! Instance families: uniform cost bands, Pareto service lengths and the
//! two-sided lower-bound construction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{substream, CostModel, GENERATOR_STREAM};
use crate::error::{Error, Result};
use crate::instance::{Instance, ServiceKind};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    UniformBand,
    ParetoService,
    LowerBoundPair,
    LowerBoundBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LowerBoundSide {
    Base,
    Side1,
    Side2,
}

fn default_shape() -> f64 {
    0.7
}

fn default_side() -> u8 {
    1
}

/// Parameters for one instance family. `seed` is ignored by the harness,
/// which derives a fresh seed per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    pub t_scale: u64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_shape")]
    pub pareto_shape: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_side")]
    pub which_side: u8,
    /// Rates for the lower-bound families; all ones when absent.
    #[serde(default)]
    pub rates: Option<Vec<f64>>,
    #[serde(default = "default_service")]
    pub service: ServiceKind,
}

fn default_service() -> ServiceKind {
    ServiceKind::Deterministic
}

impl GeneratorSpec {
    pub fn uniform_band(n: usize, t_scale: u64, epsilon: f64) -> Self {
        GeneratorSpec {
            family: Family::UniformBand,
            n,
            t_scale,
            epsilon: Some(epsilon),
            pareto_shape: default_shape(),
            seed: 0,
            which_side: 1,
            rates: None,
            service: ServiceKind::Deterministic,
        }
    }

    pub fn with_service(mut self, service: ServiceKind) -> Self {
        self.service = service;
        self
    }

    pub fn epsilon_or_default(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| match self.family {
            Family::LowerBoundPair | Family::LowerBoundBase => {
                let rates = self.rates.clone().unwrap_or_else(|| vec![1.0; self.n]);
                default_lower_bound_epsilon(&rates, self.t_scale)
            }
            _ => 0.0,
        })
    }

    /// Cost model the family is meant to be simulated with.
    pub fn default_cost_model(&self) -> CostModel {
        match self.family {
            Family::LowerBoundPair | Family::LowerBoundBase => CostModel::two_point(),
            _ => CostModel::bernoulli(),
        }
    }

    pub fn generate<S: Real>(&self, seed: u64) -> Result<Instance<S>> {
        let inst = match self.family {
            Family::UniformBand => {
                gen_uniform_band::<S>(self.n, self.t_scale, self.epsilon_or_default(), seed)?
            }
            Family::ParetoService => gen_pareto_instance::<S>(
                self.n,
                self.epsilon_or_default(),
                self.pareto_shape,
                seed,
            )?,
            Family::LowerBoundPair | Family::LowerBoundBase => {
                let side = match (self.family, self.which_side) {
                    (Family::LowerBoundBase, _) => LowerBoundSide::Base,
                    (_, 1) => LowerBoundSide::Side1,
                    (_, 2) => LowerBoundSide::Side2,
                    (_, s) => {
                        return Err(Error::InvalidArgument(format!(
                            "which_side must be 1 or 2, got {s}"
                        )))
                    }
                };
                let rates = self.rates.clone().unwrap_or_else(|| vec![1.0; self.n]);
                gen_lower_bound::<S>(
                    self.n,
                    self.epsilon_or_default(),
                    side,
                    &rates,
                    self.t_scale,
                )?
            }
        };
        if inst.service() == self.service {
            Ok(inst)
        } else {
            inst.with_service(self.service)
        }
    }
}

fn from_f64<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("finite value")
}

/// `c_i ~ U[0.5 - eps, 0.5 + eps)`, `mu_i = 1`, deterministic service.
pub fn gen_uniform_band<S: Real>(
    n: usize,
    t_scale: u64,
    epsilon: f64,
    seed: u64,
) -> Result<Instance<S>> {
    let costs = uniform_band_costs(n, epsilon, &mut substream(seed, GENERATOR_STREAM))?;
    Instance::new(
        t_scale,
        costs.into_iter().map(from_f64).collect(),
        vec![S::one(); n],
        ServiceKind::Deterministic,
    )
}

pub fn uniform_band_costs<R: Rng + ?Sized>(
    n: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 0.5], got {epsilon}"
        )));
    }
    let lo = 0.5 - epsilon;
    let width = 2.0 * epsilon;
    Ok((0..n).map(|_| lo + width * rng.random::<f64>()).collect())
}

/// `x = (1 - u)^{-1/shape}` for `u ~ U[0, 1)`: Pareto on `[1, inf)` with
/// density `shape / x^{shape + 1}`.
pub fn pareto_inverse_cdf(u: f64, shape: f64) -> f64 {
    (1.0 - u).powf(-1.0 / shape)
}

/// Service length `99 + floor(x)`, at least 100.
pub fn pareto_service_length(u: f64, shape: f64) -> u64 {
    // `as` saturates for the astronomically large tail.
    (99.0 + pareto_inverse_cdf(u, shape).floor()) as u64
}

pub fn gen_pareto_services<R: Rng + ?Sized>(n: usize, shape: f64, rng: &mut R) -> Result<Vec<u64>> {
    if !(shape > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shape must be > 0, got {shape}"
        )));
    }
    Ok((0..n)
        .map(|_| pareto_service_length(rng.random::<f64>(), shape))
        .collect())
}

/// Instance with the given service lengths: `T = max_i len_i` and
/// `mu_i = T / len_i`, so `ceil(T / mu_i)` reproduces every length.
pub fn instance_from_service_lengths<S: Real>(
    costs: Vec<S>,
    lengths: &[u64],
) -> Result<Instance<S>> {
    let t_scale = *lengths
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no service lengths".into()))?;
    let t = from_f64::<S>(t_scale as f64);
    let rates = lengths
        .iter()
        .map(|&len| t / from_f64::<S>(len as f64))
        .collect();
    let inst = Instance::new(t_scale, costs, rates, ServiceKind::Deterministic)?;
    debug_assert_eq!(inst.service_lengths(), lengths);
    Ok(inst)
}

/// Pareto service lengths with uniform-band costs.
pub fn gen_pareto_instance<S: Real>(
    n: usize,
    epsilon: f64,
    shape: f64,
    seed: u64,
) -> Result<Instance<S>> {
    let mut rng = substream(seed, GENERATOR_STREAM);
    let lengths = gen_pareto_services(n, shape, &mut rng)?;
    let costs = uniform_band_costs(n, epsilon, &mut rng)?;
    instance_from_service_lengths(costs.into_iter().map(from_f64).collect(), &lengths)
}

/// Jobs in `L_1` (odd 1-based positions, i.e. even 0-based indices).
pub fn in_first_half(job: usize) -> bool {
    job.is_multiple_of(2)
}

/// `eps = (mu_min mu_max)^{1/3} N^{-1/3} T^{-1/3}`.
pub fn default_lower_bound_epsilon(rates: &[f64], t_scale: u64) -> f64 {
    let mu_min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mu_min * mu_max / (rates.len() as f64 * t_scale as f64)).cbrt()
}

/// Lower-bound family: `c_i = (1 + eps) / (2 mu_i)` on the chosen side,
/// `1 / (2 mu_i)` elsewhere.
pub fn gen_lower_bound<S: Real>(
    n: usize,
    epsilon: f64,
    which: LowerBoundSide,
    rates: &[f64],
    t_scale: u64,
) -> Result<Instance<S>> {
    if rates.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n} rates, got {}",
            rates.len()
        )));
    }
    if which != LowerBoundSide::Base && n < 2 {
        return Err(Error::InvalidArgument(
            "two-sided instances need N >= 2".into(),
        ));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let boosted = |job: usize| match which {
        LowerBoundSide::Base => false,
        LowerBoundSide::Side1 => in_first_half(job),
        LowerBoundSide::Side2 => !in_first_half(job),
    };
    let mut costs = Vec::with_capacity(n);
    for (i, &mu) in rates.iter().enumerate() {
        let c = if boosted(i) {
            (1.0 + epsilon) / (2.0 * mu)
        } else {
            1.0 / (2.0 * mu)
        };
        if c > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon {epsilon} pushes costs[{i}] above 1"
            )));
        }
        costs.push(from_f64(c));
    }
    Instance::new(
        t_scale,
        costs,
        rates.iter().map(|&m| from_f64(m)).collect(),
        ServiceKind::Deterministic,
    )
}
