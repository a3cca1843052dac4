//! Replicated experiments, parameter sweeps and CSV tables.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{loglog_slope, SlopeFit};
use crate::costs::CostModel;
use crate::engine::simulate;
use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::instance::{Instance, ServiceKind};
use crate::policies::PolicyConfig;
use crate::regret::{benchmark_cost, decision_regret, regret};

/// Header of every result table.
pub const CSV_HEADER: [&str; 6] = [
    "axis",
    "policy",
    "mean_regret",
    "std_err",
    "mean_rel_regret",
    "reps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    T,
    N,
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

fn default_reps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub policies: Vec<PolicyConfig>,
    /// Defaults to the generator family's model.
    #[serde(default)]
    pub cost_model: Option<CostModel>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidArgument("reps must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one policy is required".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::InvalidArgument("sweep has no values".into()));
            }
            if sweep.values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument(
                    "sweep values must be strictly increasing".into(),
                ));
            }
            if matches!(sweep.axis, Axis::T | Axis::N)
                && sweep.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0)
            {
                return Err(Error::InvalidArgument(
                    "T and N sweep values must be positive integers".into(),
                ));
            }
        }
        self.cost_model().validate()
    }

    pub fn cost_model(&self) -> CostModel {
        self.cost_model
            .unwrap_or_else(|| self.generator.default_cost_model())
    }

    /// `(axis value, generator)` for every sweep point.
    pub fn points(&self) -> Vec<(f64, GeneratorSpec)> {
        match &self.sweep {
            None => vec![(self.generator.t_scale as f64, self.generator.clone())],
            Some(sweep) => sweep
                .values
                .iter()
                .map(|&v| {
                    let mut g = self.generator.clone();
                    match sweep.axis {
                        Axis::T => g.t_scale = v as u64,
                        Axis::N => g.n = v as usize,
                        Axis::Epsilon => g.epsilon = Some(v),
                    }
                    (v, g)
                })
                .collect(),
        }
    }
}

/// Seed for replication `rep` of sweep point `point`; injective in
/// `(point, rep)` for indices below `2^32`.
pub fn replication_seed(seed_base: u64, point: usize, rep: usize) -> u64 {
    debug_assert!(point < (1 << 32) && rep < (1 << 32));
    seed_base.wrapping_add(((point as u64) << 32) | rep as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub policy: String,
    pub mean_regret: f64,
    pub std_err: f64,
    pub mean_relative_regret: f64,
    pub reps: usize,
}

/// Regret and relative regret of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepOutcome {
    pub regret: f64,
    pub relative: f64,
}

/// Per-replication regret used by the harness.
///
/// Deterministic service reports the realized regret. Geometric service
/// reports the expected regret of the decisions taken along the path
/// (see [`decision_regret`]), which shares the realized regret's mean.
pub fn replication_regret(
    inst: &Instance,
    model: &CostModel,
    policy: &PolicyConfig,
    seed: u64,
) -> Result<RepOutcome> {
    let sim = simulate(inst, model, policy, seed)?;
    let bench = benchmark_cost(inst);
    let r = match inst.service() {
        ServiceKind::Deterministic => regret(&sim.trace, inst)?.regret,
        ServiceKind::Geometric => decision_regret(&sim.trace, inst)?,
    };
    Ok(RepOutcome {
        regret: r,
        relative: if bench > 0.0 { r / bench } else { 0.0 },
    })
}

/// Sample mean and standard error (`sd / sqrt(k)`, zero for one sample).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `sqrt(se_a^2 + se_b^2)`.
pub fn pooled_std_err(a: &ResultRow, b: &ResultRow) -> f64 {
    a.std_err.hypot(b.std_err)
}

/// All replication outcomes, indexed `[point][rep][policy]`.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<Vec<Vec<Vec<RepOutcome>>>> {
    cfg.validate()?;
    let model = cfg.cost_model();
    let points = cfg.points();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.reps).map(move |k| (p, k)))
        .collect();
    let flat: Vec<Vec<RepOutcome>> = tasks
        .par_iter()
        .map(|&(p, k)| {
            let seed = replication_seed(cfg.seed_base, p, k);
            let inst: Instance = points[p].1.generate(seed)?;
            cfg.policies
                .iter()
                .map(|policy| replication_regret(&inst, &model, policy, seed))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(points.len());
    let mut it = flat.into_iter();
    for _ in 0..points.len() {
        out.push(it.by_ref().take(cfg.reps).collect());
    }
    Ok(out)
}

fn aggregate(
    axis_value: f64,
    policies: &[PolicyConfig],
    reps: &[Vec<RepOutcome>],
) -> Vec<ResultRow> {
    policies
        .iter()
        .enumerate()
        .map(|(j, policy)| {
            let regrets: Vec<f64> = reps.iter().map(|r| r[j].regret).collect();
            let rel: Vec<f64> = reps.iter().map(|r| r[j].relative).collect();
            let (mean_regret, std_err) = mean_and_stderr(&regrets);
            ResultRow {
                axis_value,
                policy: policy.label().to_string(),
                mean_regret,
                std_err,
                mean_relative_regret: mean_and_stderr(&rel).0,
                reps: reps.len(),
            }
        })
        .collect()
}

/// One row per sweep point and policy, in sweep then policy order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let outcomes = run_replications(cfg)?;
    Ok(cfg
        .points()
        .iter()
        .zip(&outcomes)
        .flat_map(|((v, _), reps)| aggregate(*v, &cfg.policies, reps))
        .collect())
}

/// Replicate cost randomness on one fixed instance.
pub fn run_instance(
    inst: &Instance,
    model: &CostModel,
    policies: &[PolicyConfig],
    reps: usize,
    seed_base: u64,
) -> Result<Vec<ResultRow>> {
    if reps < 1 {
        return Err(Error::InvalidArgument("reps must be >= 1".into()));
    }
    model.validate()?;
    let outcomes = (0..reps)
        .into_par_iter()
        .map(|k| {
            let seed = replication_seed(seed_base, 0, k);
            policies
                .iter()
                .map(|p| replication_regret(inst, model, p, seed))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(inst.t_scale() as f64, policies, &outcomes))
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis_value.to_string(),
            r.policy.clone(),
            r.mean_regret.to_string(),
            r.std_err.to_string(),
            r.mean_relative_regret.to_string(),
            r.reps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidArgument(format!(
            "unexpected CSV header; expected {}",
            CSV_HEADER.join(",")
        )));
    }
    let num = |s: &str, field: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::InvalidArgument(format!("bad {field} value {s:?}")))
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ResultRow {
                axis_value: num(&rec[0], "axis")?,
                policy: rec[1].to_string(),
                mean_regret: num(&rec[2], "mean_regret")?,
                std_err: num(&rec[3], "std_err")?,
                mean_relative_regret: num(&rec[4], "mean_rel_regret")?,
                reps: rec[5]
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad reps value {:?}", &rec[5])))?,
            })
        })
        .collect()
}

pub fn find_row<'a>(rows: &'a [ResultRow], axis_value: f64, policy: &str) -> Option<&'a ResultRow> {
    rows.iter()
        .find(|r| r.axis_value == axis_value && r.policy == policy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub fit: SlopeFit,
    /// Axis values dropped for nonpositive mean regret.
    pub excluded: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

/// Log-log fit of `policy`'s mean regret against the axis.
pub fn sweep_slope(rows: &[ResultRow], policy: &str) -> Result<SlopeReport> {
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for r in rows.iter().filter(|r| r.policy == policy) {
        if r.mean_regret > 0.0 {
            points.push((r.axis_value, r.mean_regret));
        } else {
            excluded.push(r.axis_value);
        }
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "policy {policy} has {} usable axis values (excluded: {excluded:?})",
            xs.len()
        )));
    }
    Ok(SlopeReport {
        fit: loglog_slope(&points)?,
        excluded,
        points,
    })
}

/// T-axis slope; needs at least four T values spanning two decades.
pub fn sweep_t_slope(rows: &[ResultRow], policy: &str) -> Result<SlopeReport> {
    let ts: Vec<f64> = rows
        .iter()
        .filter(|r| r.policy == policy)
        .map(|r| r.axis_value)
        .collect();
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if ts.len() < 4 || !(hi / lo >= 100.0) {
        return Err(Error::DegenerateFit(format!(
            "T sweep needs >= 4 values spanning >= 2 decades, got {ts:?}"
        )));
    }
    sweep_slope(rows, policy)
}

/// N-axis slope; needs at least two distinct N values.
pub fn sweep_n_slope(rows: &[ResultRow], policy: &str) -> Result<SlopeReport> {
    sweep_slope(rows, policy)
}
