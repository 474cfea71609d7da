//! Dataset generation and the on-disk dataset/scenario formats.
//!
//! `gen-data` produces three files in the output directory:
//! `manifest.json` (enough to regenerate everything bit-identically),
//! `scenarios.json` (every generated scenario, planning outcome or not) and
//! `dataset.json` (manifest + entries holding the successfully collected
//! paths).

use crate::error::BenchError;
use serde::{Deserialize, Serialize};
use silrrt_core::env::{
    generate_scenario, generate_workspace, AgentGeometry, Scenario, ScenarioFile,
    DEFAULT_GOAL_RADIUS,
};
use silrrt_core::geometry::{SpaceTag, State};
use silrrt_core::planner::{path_cost, rrt_star, PlannerConfig, UniformSampler};
use silrrt_core::seed::{derive_seed, rng_for, tag};
use silrrt_core::train::TrainSample;
use silrrt_core::wsil::{DemoSource, DemonstrationRecord, ReplayBuffer};
use std::path::Path;

pub const DATASET_FORMAT_VERSION: u32 = 1;
/// Default sample budget when collecting demonstration paths.
pub const DEFAULT_COLLECT_BUDGET: u64 = 2000;

/// Everything needed to regenerate a dataset bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub env: String,
    pub workspaces: usize,
    pub scenarios_per: usize,
    pub obstacles: usize,
    pub seed: u64,
    pub bounds: Vec<[f64; 2]>,
    pub size_range: [f64; 2],
    pub goal_radius: f64,
    pub collect_max_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub scenario: ScenarioFile,
    pub path: Vec<Vec<f64>>,
    pub c_real: f64,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub manifest: DatasetManifest,
    /// Fraction of generated scenarios the collection planner solved.
    pub collection_success_rate: f64,
    pub entries: Vec<DatasetEntry>,
}

/// Generation settings for [`generate_dataset`].
#[derive(Debug, Clone)]
pub struct GenDataConfig {
    pub space: SpaceTag,
    pub workspaces: usize,
    pub scenarios_per: usize,
    pub obstacles: usize,
    pub seed: u64,
    pub size_range: [f64; 2],
    pub goal_radius: f64,
    pub collect_max_samples: u64,
}

impl GenDataConfig {
    pub fn new(space: SpaceTag, workspaces: usize, scenarios_per: usize, obstacles: usize, seed: u64) -> Self {
        GenDataConfig {
            space,
            workspaces,
            scenarios_per,
            obstacles,
            seed,
            size_range: [1.0, 4.0],
            goal_radius: DEFAULT_GOAL_RADIUS,
            collect_max_samples: DEFAULT_COLLECT_BUDGET,
        }
    }

    fn bounds(&self) -> Vec<[f64; 2]> {
        vec![[0.0, 40.0]; self.space.ambient_dim()]
    }

    fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            format_version: DATASET_FORMAT_VERSION,
            env: self.space.name().to_string(),
            workspaces: self.workspaces,
            scenarios_per: self.scenarios_per,
            obstacles: self.obstacles,
            seed: self.seed,
            bounds: self.bounds(),
            size_range: self.size_range,
            goal_radius: self.goal_radius,
            collect_max_samples: self.collect_max_samples,
        }
    }
}

/// Output of dataset generation, before hitting the filesystem.
pub struct GeneratedData {
    pub dataset: DatasetFile,
    pub scenarios: Vec<Scenario>,
}

/// Generates workspaces and scenarios, runs uniform RRT* with a generous
/// budget on each, and keeps the successful paths. Scenario generation
/// failures (over-dense workspaces) are skipped deterministically.
pub fn generate_dataset(config: &GenDataConfig) -> GeneratedData {
    let bounds = config.bounds();
    let agent = AgentGeometry::default_for(config.space);
    let plan_config = PlannerConfig::default().with_max_samples(config.collect_max_samples);

    let mut scenarios = Vec::new();
    let mut entries = Vec::new();
    let mut attempts = 0usize;
    for w in 0..config.workspaces {
        let ws_seed = derive_seed(config.seed, &[w as u64, 0x57]);
        let Ok(workspace) = generate_workspace(ws_seed, &bounds, config.obstacles, config.size_range)
        else {
            continue;
        };
        for s in 0..config.scenarios_per {
            let sc_seed = derive_seed(config.seed, &[w as u64, s as u64, 0x5c]);
            let Ok(scenario) = generate_scenario(
                sc_seed,
                workspace.clone(),
                config.space,
                agent,
                config.goal_radius,
            ) else {
                continue;
            };
            attempts += 1;
            let mut sampler = UniformSampler::new(scenario.goal.clone(), plan_config.goal_bias);
            let mut rng = rng_for(sc_seed, &[tag::PLAN]);
            let result = rrt_star(&scenario, &mut sampler, &plan_config, &mut rng);
            if let Some(path) = result.path {
                entries.push(DatasetEntry {
                    scenario: ScenarioFile::from(&scenario),
                    path: path.iter().map(|st| st.coords.clone()).collect(),
                    c_real: path_cost(&scenario.space, &path),
                    split: "train".to_string(),
                });
            }
            scenarios.push(scenario);
        }
    }
    let success_rate = if attempts == 0 {
        0.0
    } else {
        entries.len() as f64 / attempts as f64
    };
    GeneratedData {
        dataset: DatasetFile {
            manifest: config.manifest(),
            collection_success_rate: success_rate,
            entries,
        },
        scenarios,
    }
}

/// Converts dataset entries back into training samples.
pub fn entries_to_samples(file: &DatasetFile) -> Result<Vec<TrainSample>, BenchError> {
    file.entries
        .iter()
        .map(|e| {
            let scenario = e
                .scenario
                .clone()
                .into_scenario()
                .map_err(|err| BenchError::parse("dataset entry", err))?;
            Ok(TrainSample {
                scenario,
                path: e.path.iter().cloned().map(State::new).collect(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Replay-buffer dump/restore (reuses the dataset entry format; the entry's
// `split` field carries the demonstration source so the schema stays fixed)
// ---------------------------------------------------------------------------

fn source_tag(source: DemoSource) -> &'static str {
    match source {
        DemoSource::Rrt => "buffer:rrt",
        DemoSource::SilRrtStar => "buffer:silrrt",
    }
}

/// Serializes a replay buffer against its scenario set, oldest record
/// first.
pub fn buffer_to_entries(buffer: &ReplayBuffer, scenarios: &[Scenario]) -> Vec<DatasetEntry> {
    buffer
        .iter()
        .map(|r| DatasetEntry {
            scenario: ScenarioFile::from(&scenarios[r.scenario_id]),
            path: r.path.iter().map(|s| s.coords.clone()).collect(),
            c_real: r.c_real,
            split: source_tag(r.source).to_string(),
        })
        .collect()
}

/// Rebuilds a replay buffer from dumped entries. Each entry's scenario is
/// matched back to the run's scenario set by its generation seed.
pub fn entries_to_buffer(
    entries: &[DatasetEntry],
    scenarios: &[Scenario],
    capacity: usize,
) -> Result<ReplayBuffer, BenchError> {
    let mut buffer = ReplayBuffer::new(capacity);
    for e in entries {
        let scenario_id = scenarios
            .iter()
            .position(|sc| sc.seed == e.scenario.seed && ScenarioFile::from(sc) == e.scenario)
            .ok_or_else(|| {
                BenchError::Config(format!(
                    "buffer record for scenario seed {} has no match in the scenario set",
                    e.scenario.seed
                ))
            })?;
        let source = match e.split.as_str() {
            "buffer:silrrt" => DemoSource::SilRrtStar,
            _ => DemoSource::Rrt,
        };
        buffer.push(DemonstrationRecord {
            scenario_id,
            path: e.path.iter().cloned().map(State::new).collect(),
            c_real: e.c_real,
            source,
        });
    }
    Ok(buffer)
}

// ---------------------------------------------------------------------------
// Filesystem helpers
// ---------------------------------------------------------------------------

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| BenchError::parse(path.display().to_string(), e))?;
    std::fs::write(path, text).map_err(|e| BenchError::io(path.display().to_string(), e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| BenchError::parse(path.display().to_string(), e))
}

/// Writes the three generated files into `out_dir`.
pub fn write_generated(out_dir: &Path, data: &GeneratedData) -> Result<(), BenchError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| BenchError::io(out_dir.display().to_string(), e))?;
    write_json(&out_dir.join("manifest.json"), &data.dataset.manifest)?;
    let scenario_files: Vec<ScenarioFile> =
        data.scenarios.iter().map(ScenarioFile::from).collect();
    write_json(&out_dir.join("scenarios.json"), &scenario_files)?;
    write_json(&out_dir.join("dataset.json"), &data.dataset)
}

/// Loads a scenario list file (either a bare array of scenarios or a full
/// dataset file).
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::io(path.display().to_string(), e))?;
    let files: Vec<ScenarioFile> = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(_) => {
            let ds: DatasetFile = serde_json::from_str(&text)
                .map_err(|e| BenchError::parse(path.display().to_string(), e))?;
            ds.entries.into_iter().map(|e| e.scenario).collect()
        }
    };
    files
        .into_iter()
        .map(|f| {
            f.into_scenario()
                .map_err(|e| BenchError::parse(path.display().to_string(), e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_bit_identical_under_a_seed() {
        let config = GenDataConfig::new(SpaceTag::Point2D, 2, 3, 3, 42);
        let a = generate_dataset(&config);
        let b = generate_dataset(&config);
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(
            serde_json::to_string(&a.dataset).unwrap(),
            serde_json::to_string(&b.dataset).unwrap()
        );
    }

    #[test]
    fn entries_hold_valid_paths() {
        let config = GenDataConfig::new(SpaceTag::Point2D, 2, 2, 3, 7);
        let data = generate_dataset(&config);
        assert!(data.dataset.collection_success_rate > 0.0);
        let samples = entries_to_samples(&data.dataset).unwrap();
        for s in &samples {
            assert!(s.path.len() >= 2);
            assert_eq!(s.path[0], s.scenario.start);
            assert!(s.scenario.in_goal_region(s.path.last().unwrap()));
        }
    }

    #[test]
    fn buffer_dump_restore_roundtrip() {
        let config = GenDataConfig::new(SpaceTag::Point2D, 1, 3, 2, 17);
        let data = generate_dataset(&config);
        let scenarios = data.scenarios;
        let mut buffer = ReplayBuffer::new(8);
        for (i, sc) in scenarios.iter().enumerate() {
            buffer.push(DemonstrationRecord {
                scenario_id: i,
                path: vec![sc.start.clone(), sc.goal.clone()],
                c_real: sc.space.distance(&sc.start, &sc.goal),
                source: if i % 2 == 0 { DemoSource::Rrt } else { DemoSource::SilRrtStar },
            });
        }
        let entries = buffer_to_entries(&buffer, &scenarios);
        let restored = entries_to_buffer(&entries, &scenarios, 8).unwrap();
        assert_eq!(restored.len(), buffer.len());
        for (a, b) in restored.iter().zip(buffer.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_obstacle_config_generates() {
        let config = GenDataConfig::new(SpaceTag::Point2D, 1, 2, 0, 9);
        let data = generate_dataset(&config);
        assert_eq!(data.scenarios.len(), 2);
        assert!(data.scenarios.iter().all(|s| s.workspace.obstacles.is_empty()));
    }
}
