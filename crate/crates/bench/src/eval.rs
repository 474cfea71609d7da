//! Evaluation harness: runs each planner on each scenario for a number of
//! trials with derived seeds, collects per-query records, and aggregates
//! the summary report.
//!
//! Statistics for samples, path length and time are success-conditioned
//! (failures contribute only to the success rate); the population rule is
//! recorded in every report row.

use crate::error::BenchError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use silrrt_core::autodiff::Tensor;
use silrrt_core::env::Scenario;
use silrrt_core::planner::{
    bi_rrt_star, rrt_star, LearnedSampler, PlanResult, PlannerConfig, SamplerKind,
    UniformSampler,
};
use silrrt_core::sampler::SamplerModel;
use silrrt_core::seed::{derive_seed, rng_for, tag};
use silrrt_core::train::scenario_cloud;
use std::time::Instant;

pub const POPULATION_RULE: &str = "success_conditioned";

/// A planner under evaluation.
pub enum PlannerChoice {
    /// Uniform-sampling RRT* baseline.
    RrtStar,
    /// Learned bidirectional planner with a pretrained checkpoint.
    SilRrt(Box<SamplerModel>),
    /// Learned bidirectional planner with a WSIL-finetuned checkpoint.
    SilRrtWsil(Box<SamplerModel>),
}

impl PlannerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerChoice::RrtStar => "rrtstar",
            PlannerChoice::SilRrt(_) => "silrrt",
            PlannerChoice::SilRrtWsil(_) => "silrrt-wsil",
        }
    }

    fn sampler_kind(&self) -> SamplerKind {
        match self {
            PlannerChoice::RrtStar => SamplerKind::Uniform,
            _ => SamplerKind::Learned,
        }
    }

    fn model(&self) -> Option<&SamplerModel> {
        match self {
            PlannerChoice::RrtStar => None,
            PlannerChoice::SilRrt(m) | PlannerChoice::SilRrtWsil(m) => Some(m),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub trials: u64,
    pub master_seed: u64,
    /// Overrides the per-planner default budget when set.
    pub max_samples: Option<u64>,
    pub point_cloud_size: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            trials: 3,
            master_seed: 0,
            max_samples: None,
            point_cloud_size: silrrt_core::env::DEFAULT_POINT_CLOUD_SIZE,
        }
    }
}

/// One planning query's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub planner: String,
    pub scenario_id: usize,
    pub trial: u64,
    pub seed: u64,
    pub success: bool,
    pub samples_generated: u64,
    pub path_length: f64,
    pub collision_checks: u64,
    pub wall_time_s: f64,
}

/// Full per-query dump for audit replay and rendering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryDump {
    pub planner: String,
    pub scenario_id: usize,
    pub trial: u64,
    pub seed: u64,
    pub config: PlannerConfig,
    pub result: PlanResult,
}

/// Aggregated per-planner row of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub scenarios: usize,
    pub trials: u64,
    pub attempts: usize,
    pub successes: usize,
    pub success_rate_pct: f64,
    pub avg_samples: f64,
    pub std_samples: f64,
    pub avg_path_length: f64,
    pub std_path_length: f64,
    pub avg_time_s: f64,
    pub std_time_s: f64,
    pub population: String,
}

pub struct EvalOutput {
    pub records: Vec<QueryRecord>,
    pub summaries: Vec<PlannerSummary>,
    pub dumps: Vec<QueryDump>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the evaluation matrix. Queries run in parallel across
/// (planner, scenario, trial) with independent derived seeds; outputs are
/// ordered deterministically.
pub fn evaluate(
    scenarios: &[Scenario],
    planners: &[PlannerChoice],
    options: &EvalOptions,
) -> Result<EvalOutput, BenchError> {
    if scenarios.is_empty() {
        return Err(BenchError::Config("no scenarios to evaluate".into()));
    }
    for (p_idx, planner) in planners.iter().enumerate() {
        if let Some(model) = planner.model() {
            for sc in scenarios {
                if model.config.space != sc.space.tag() {
                    return Err(BenchError::Config(format!(
                        "planner {} was trained for {:?} but scenario uses {:?}",
                        planner.name(),
                        model.config.space,
                        sc.space.tag()
                    )));
                }
            }
        }
        let _ = p_idx;
    }

    // Normalized clouds and, per learned planner, cached latents.
    let clouds: Vec<Tensor> = scenarios
        .par_iter()
        .map(|sc| scenario_cloud(sc, options.point_cloud_size))
        .collect();
    let latents: Vec<Option<Vec<Tensor>>> = planners
        .iter()
        .map(|p| {
            p.model().map(|m| {
                clouds
                    .par_iter()
                    .map(|c| m.encode_state_space(c))
                    .collect::<Vec<_>>()
            })
        })
        .collect();

    let space = scenarios[0].space.tag();
    let mut tasks = Vec::new();
    for (p_idx, planner) in planners.iter().enumerate() {
        let mut config = PlannerConfig::default_for(space, planner.sampler_kind());
        if let Some(max) = options.max_samples {
            config.max_samples = max;
        }
        for s_idx in 0..scenarios.len() {
            for trial in 0..options.trials {
                tasks.push((p_idx, s_idx, trial, config.clone()));
            }
        }
    }

    let mut results: Vec<(usize, QueryRecord, QueryDump)> = tasks
        .par_iter()
        .enumerate()
        .map(|(task_idx, (p_idx, s_idx, trial, config))| {
            let planner = &planners[*p_idx];
            let scenario = &scenarios[*s_idx];
            let seed = derive_seed(
                options.master_seed,
                &[*p_idx as u64, *s_idx as u64, *trial],
            );
            let mut rng = rng_for(seed, &[tag::PLAN]);
            let t0 = Instant::now();
            let result = match planner.model() {
                None => {
                    let mut sampler =
                        UniformSampler::new(scenario.goal.clone(), config.goal_bias);
                    rrt_star(scenario, &mut sampler, config, &mut rng)
                }
                Some(model) => {
                    let z_p = latents[*p_idx].as_ref().unwrap()[*s_idx].clone();
                    let mut fwd = LearnedSampler::with_cached_latents(
                        model,
                        scenario,
                        &scenario.goal,
                        z_p.clone(),
                    )
                    .expect("space checked above");
                    let mut bwd = LearnedSampler::with_cached_latents(
                        model,
                        scenario,
                        &scenario.start,
                        z_p,
                    )
                    .expect("space checked above");
                    bi_rrt_star(scenario, &mut fwd, &mut bwd, config, &mut rng)
                }
            };
            let wall = t0.elapsed().as_secs_f64();
            let record = QueryRecord {
                planner: planner.name().to_string(),
                scenario_id: *s_idx,
                trial: *trial,
                seed,
                success: result.success,
                samples_generated: result.samples_generated,
                path_length: result.path_length,
                collision_checks: result.collision_checks,
                wall_time_s: wall,
            };
            let dump = QueryDump {
                planner: planner.name().to_string(),
                scenario_id: *s_idx,
                trial: *trial,
                seed,
                config: config.clone(),
                result,
            };
            (task_idx, record, dump)
        })
        .collect();
    results.sort_by_key(|(task_idx, _, _)| *task_idx);

    let records: Vec<QueryRecord> = results.iter().map(|(_, r, _)| r.clone()).collect();
    let dumps: Vec<QueryDump> = results.into_iter().map(|(_, _, d)| d).collect();
    let summaries = summarize(&records, scenarios.len(), options.trials);
    Ok(EvalOutput {
        records,
        summaries,
        dumps,
    })
}

/// Aggregates per-query records into per-planner summary rows.
pub fn summarize(records: &[QueryRecord], scenarios: usize, trials: u64) -> Vec<PlannerSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.planner.as_str()) {
            order.push(&r.planner);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let rows: Vec<&QueryRecord> =
                records.iter().filter(|r| r.planner == name).collect();
            let successes: Vec<&&QueryRecord> = rows.iter().filter(|r| r.success).collect();
            let samples: Vec<f64> = successes
                .iter()
                .map(|r| r.samples_generated as f64)
                .collect();
            let lengths: Vec<f64> = successes.iter().map(|r| r.path_length).collect();
            let times: Vec<f64> = successes.iter().map(|r| r.wall_time_s).collect();
            let (avg_samples, std_samples) = mean_std(&samples);
            let (avg_path_length, std_path_length) = mean_std(&lengths);
            let (avg_time_s, std_time_s) = mean_std(&times);
            PlannerSummary {
                planner: name.to_string(),
                scenarios,
                trials,
                attempts: rows.len(),
                successes: successes.len(),
                success_rate_pct: 100.0 * successes.len() as f64 / rows.len() as f64,
                avg_samples,
                std_samples,
                avg_path_length,
                std_path_length,
                avg_time_s,
                std_time_s,
                population: POPULATION_RULE.to_string(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn records_csv(records: &[QueryRecord]) -> String {
    let mut out = String::from(
        "planner,scenario_id,trial,seed,success,samples_generated,path_length,collision_checks,wall_time_s\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.planner,
            r.scenario_id,
            r.trial,
            r.seed,
            r.success,
            r.samples_generated,
            fmt(r.path_length),
            r.collision_checks,
            fmt(r.wall_time_s),
        ));
    }
    out
}

pub fn summary_csv(summaries: &[PlannerSummary]) -> String {
    let mut out = String::from(
        "planner,scenarios,trials,attempts,successes,success_rate_pct,avg_samples,std_samples,avg_path_length,std_path_length,avg_time_s,std_time_s,population\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.planner,
            s.scenarios,
            s.trials,
            s.attempts,
            s.successes,
            fmt(s.success_rate_pct),
            fmt(s.avg_samples),
            fmt(s.std_samples),
            fmt(s.avg_path_length),
            fmt(s.std_path_length),
            fmt(s.avg_time_s),
            fmt(s.std_time_s),
            s.population,
        ));
    }
    out
}

/// Parses a records CSV back into rows (used by the consistency checks).
pub fn parse_records_csv(text: &str) -> Result<Vec<QueryRecord>, BenchError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(BenchError::parse(
                "records csv",
                format!("line {} has {} columns", i + 1, cols.len()),
            ));
        }
        let parse_f = |s: &str| -> f64 {
            if s.is_empty() {
                f64::NAN
            } else {
                s.parse().unwrap_or(f64::NAN)
            }
        };
        rows.push(QueryRecord {
            planner: cols[0].to_string(),
            scenario_id: cols[1].parse().map_err(|e| BenchError::parse("records csv", e))?,
            trial: cols[2].parse().map_err(|e| BenchError::parse("records csv", e))?,
            seed: cols[3].parse().map_err(|e| BenchError::parse("records csv", e))?,
            success: cols[4] == "true",
            samples_generated: cols[5].parse().map_err(|e| BenchError::parse("records csv", e))?,
            path_length: parse_f(cols[6]),
            collision_checks: cols[7].parse().map_err(|e| BenchError::parse("records csv", e))?,
            wall_time_s: parse_f(cols[8]),
        });
    }
    Ok(rows)
}
