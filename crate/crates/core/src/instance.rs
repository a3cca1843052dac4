//! Job instances: holding-cost means, service rates and the horizon scale.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::{preemption_length, TsRule};
use crate::scalar::Scalar;

/// How long a job occupies the server once started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServiceKind {
    /// Job `i` needs exactly `ceil(T / mu_i)` slots of service.
    #[serde(rename = "det")]
    Deterministic,
    /// Each served slot completes job `i` with probability `mu_i / T`.
    #[serde(rename = "geo")]
    Geometric,
}

impl ServiceKind {
    pub fn label(self) -> &'static str {
        match self {
            ServiceKind::Deterministic => "deterministic",
            ServiceKind::Geometric => "geometric",
        }
    }
}

/// Non-fatal conditions detected while validating an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceWarning {
    /// `mu_i > (T / ln(NT))^{1/3} / 2`; regret guarantees assume otherwise.
    RateAboveAssumption { job: usize, rate: f64, bound: f64 },
    /// The default preemption phase is longer than half the shortest job.
    PreemptionExceedsHalfService { t_s: u64, half_min_service: f64 },
}

impl fmt::Display for InstanceWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceWarning::RateAboveAssumption { job, rate, bound } => write!(
                f,
                "rates[{job}] = {rate} exceeds (T/ln(NT))^(1/3)/2 = {bound:.4}"
            ),
            InstanceWarning::PreemptionExceedsHalfService {
                t_s,
                half_min_service,
            } => write!(
                f,
                "preemption length {t_s} exceeds half the shortest service ({half_min_service})"
            ),
        }
    }
}

/// On-disk form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub t_scale: u64,
    pub costs: Vec<f64>,
    pub rates: Vec<f64>,
    pub service: ServiceKind,
}

/// A validated scheduling instance.
///
/// Construction goes through [`Instance::new`], which enforces
/// `N >= 1`, `T >= 1`, `c_i in [0, 1]` and `mu_i >= 1`, and precomputes the
/// integral service lengths `ceil(T / mu_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S = f64> {
    t_scale: u64,
    costs: Vec<S>,
    rates: Vec<S>,
    service: ServiceKind,
    service_len: Vec<u64>,
    index_rates: Vec<S>,
    warnings: Vec<InstanceWarning>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(t_scale: u64, costs: Vec<S>, rates: Vec<S>, service: ServiceKind) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::instance("n", "at least one job is required"));
        }
        if t_scale < 1 {
            return Err(Error::instance("t_scale", "must be >= 1"));
        }
        if rates.len() != costs.len() {
            return Err(Error::instance(
                "rates",
                format!("expected {} entries, found {}", costs.len(), rates.len()),
            ));
        }
        let zero = S::zero();
        let one = S::one();
        for (i, &c) in costs.iter().enumerate() {
            // NaN fails both comparisons.
            if !(c >= zero && c <= one) {
                return Err(Error::instance(
                    format!("costs[{i}]"),
                    format!("{:?} is outside [0, 1]", c),
                ));
            }
        }
        let t = S::from_count(t_scale);
        let mut service_len = Vec::with_capacity(rates.len());
        for (i, &mu) in rates.iter().enumerate() {
            if !(mu >= one) {
                return Err(Error::instance(
                    format!("rates[{i}]"),
                    format!("{:?} is below 1", mu),
                ));
            }
            if service == ServiceKind::Geometric && mu > t {
                return Err(Error::instance(
                    format!("rates[{i}]"),
                    format!(
                        "{:?} exceeds t_scale, completion probability would be > 1",
                        mu
                    ),
                ));
            }
            let len = (t / mu).ceil_u64().ok_or_else(|| {
                Error::instance(format!("rates[{i}]"), "service length is not finite")
            })?;
            service_len.push(len.max(1));
        }
        let index_rates = match service {
            ServiceKind::Deterministic => service_len
                .iter()
                .map(|&len| t / S::from_count(len))
                .collect(),
            ServiceKind::Geometric => rates.clone(),
        };
        let mut inst = Instance {
            t_scale,
            costs,
            rates,
            service,
            service_len,
            index_rates,
            warnings: Vec::new(),
        };
        inst.warnings = inst.collect_warnings();
        Ok(inst)
    }

    fn collect_warnings(&self) -> Vec<InstanceWarning> {
        let mut out = Vec::new();
        let n = self.n() as f64;
        let t = self.t_scale as f64;
        let log_nt = (n * t).ln();
        if log_nt > 0.0 {
            let bound = (t / log_nt).cbrt() / 2.0;
            for (job, mu) in self.rates.iter().enumerate() {
                let rate = mu.lossy_f64();
                if rate > bound {
                    out.push(InstanceWarning::RateAboveAssumption { job, rate, bound });
                }
            }
        }
        if let Ok(t_s) = preemption_length(
            TsRule::General,
            1.0,
            self.n(),
            self.t_scale,
            self.mu_min().lossy_f64(),
        ) {
            let min_len = *self.service_len.iter().min().expect("n >= 1");
            let half = min_len as f64 / 2.0;
            if t_s as f64 > half {
                out.push(InstanceWarning::PreemptionExceedsHalfService {
                    t_s,
                    half_min_service: half,
                });
            }
        }
        out
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        if file.n != file.costs.len() {
            return Err(Error::instance(
                "n",
                format!("n = {} but costs has {} entries", file.n, file.costs.len()),
            ));
        }
        let conv = |field: &str, v: &[f64]| -> Result<Vec<S>> {
            v.iter()
                .enumerate()
                .map(|(i, &x)| {
                    S::from_f64(x).ok_or_else(|| {
                        Error::instance(format!("{field}[{i}]"), "not representable")
                    })
                })
                .collect()
        };
        Instance::new(
            file.t_scale,
            conv("costs", &file.costs)?,
            conv("rates", &file.rates)?,
            file.service,
        )
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n(),
            t_scale: self.t_scale,
            costs: self.costs.iter().map(|c| c.lossy_f64()).collect(),
            rates: self.rates.iter().map(|m| m.lossy_f64()).collect(),
            service: self.service,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::instance("json", e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    /// Same rates and service kind with different mean costs.
    pub fn with_costs(&self, costs: Vec<S>) -> Result<Self> {
        Instance::new(self.t_scale, costs, self.rates.clone(), self.service)
    }

    /// Same instance with a different service model.
    pub fn with_service(&self, service: ServiceKind) -> Result<Self> {
        Instance::new(
            self.t_scale,
            self.costs.clone(),
            self.rates.clone(),
            service,
        )
    }

    pub fn n(&self) -> usize {
        self.costs.len()
    }

    pub fn t_scale(&self) -> u64 {
        self.t_scale
    }

    pub fn costs(&self) -> &[S] {
        &self.costs
    }

    pub fn rates(&self) -> &[S] {
        &self.rates
    }

    pub fn service(&self) -> ServiceKind {
        self.service
    }

    pub fn warnings(&self) -> &[InstanceWarning] {
        &self.warnings
    }

    /// Integral service lengths `ceil(T / mu_i)`.
    pub fn service_lengths(&self) -> &[u64] {
        &self.service_len
    }

    /// Sum of integral service lengths; the length of every deterministic run.
    pub fn total_service(&self) -> u64 {
        self.service_len.iter().sum()
    }

    /// Expected number of service slots for job `i`.
    pub fn mean_service(&self, i: usize) -> S {
        match self.service {
            ServiceKind::Deterministic => S::from_count(self.service_len[i]),
            ServiceKind::Geometric => S::from_count(self.t_scale) / self.rates[i],
        }
    }

    /// Rate used in the c-mu index. For deterministic service this is
    /// `T / ceil(T / mu_i)`, which equals `mu_i` whenever `T / mu_i` is integral.
    pub fn index_rate(&self, i: usize) -> S {
        self.index_rates[i]
    }

    pub fn index_rates(&self) -> &[S] {
        &self.index_rates
    }

    /// Per-slot completion probability under geometric service.
    pub fn completion_prob(&self, i: usize) -> f64 {
        (self.rates[i] / S::from_count(self.t_scale)).lossy_f64()
    }

    /// `M = sum_i 1 / mu_i`.
    pub fn m(&self) -> S {
        self.rates
            .iter()
            .fold(S::zero(), |acc, &mu| acc + S::one() / mu)
    }

    pub fn mu_min(&self) -> S {
        self.rates
            .iter()
            .copied()
            .fold(self.rates[0], |a, b| if b < a { b } else { a })
    }

    pub fn mu_max(&self) -> S {
        self.rates
            .iter()
            .copied()
            .fold(self.rates[0], |a, b| if b > a { b } else { a })
    }

    /// Jobs sorted by decreasing `c_i * index_rate_i`, lowest index first on ties.
    pub fn cmu_order(&self) -> Vec<usize> {
        let keys: Vec<S> = (0..self.n())
            .map(|i| self.costs[i] * self.index_rates[i])
            .collect();
        descending_order(&keys)
    }
}

/// Indices sorted by decreasing key; ties keep ascending index order.
pub(crate) fn descending_order<S: Scalar>(keys: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        keys[b]
            .partial_cmp(&keys[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}
