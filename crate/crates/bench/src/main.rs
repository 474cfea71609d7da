//! `silrrt` command line: dataset generation, pretraining, WSIL
//! fine-tuning, evaluation and SVG rendering.
//!
//! Exit codes: 0 ok, 2 i/o, 3 config/checkpoint, 4 unsupported input.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use silrrt_bench::dataset::{
    entries_to_samples, generate_dataset, load_scenarios, read_json, write_generated, write_json,
    DatasetFile, GenDataConfig, DEFAULT_COLLECT_BUDGET,
};
use silrrt_bench::eval::{
    evaluate, records_csv, summary_csv, EvalOptions, PlannerChoice, QueryDump,
};
use silrrt_bench::render::render_svg;
use silrrt_bench::{with_thread_cap, BenchError};
use silrrt_core::autodiff::Checkpoint;
use silrrt_core::env::{ScenarioFile, DEFAULT_GOAL_RADIUS, DEFAULT_POINT_CLOUD_SIZE};
use silrrt_core::estimator::{EstimatorConfig, EstimatorModel};
use silrrt_core::geometry::SpaceTag;
use silrrt_core::planner::PlannerConfig;
use silrrt_core::sampler::{SamplerConfig, SamplerModel};
use silrrt_core::train::{pretrain_sampler, PretrainConfig};
use silrrt_core::wsil::{run_wsil, WsilConfig, WsilLogRow};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "silrrt", version, about = "Motion-planning workbench harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate workspaces/scenarios and collect demonstration paths.
    GenData(GenDataArgs),
    /// Pretrain the sampler on a collected dataset.
    Pretrain(PretrainArgs),
    /// Fine-tune a pretrained sampler with weighted self-imitation.
    Finetune(FinetuneArgs),
    /// Benchmark planners over a scenario set.
    Evaluate(EvaluateArgs),
    /// Render a scenario (and optionally a planning result) to SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// State space: 2d | rigid | 3d | snake
    #[arg(long)]
    env: String,
    #[arg(long, default_value_t = 20)]
    workspaces: usize,
    #[arg(long = "scenarios-per", default_value_t = 25)]
    scenarios_per: usize,
    #[arg(long, default_value_t = 5)]
    obstacles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for manifest.json, scenarios.json, dataset.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "size-min", default_value_t = 1.0)]
    size_min: f64,
    #[arg(long = "size-max", default_value_t = 4.0)]
    size_max: f64,
    #[arg(long = "collect-budget", default_value_t = DEFAULT_COLLECT_BUDGET)]
    collect_budget: u64,
    #[arg(long = "goal-radius", default_value_t = DEFAULT_GOAL_RADIUS)]
    goal_radius: f64,
}

#[derive(Args)]
struct PretrainArgs {
    /// dataset.json produced by gen-data.
    #[arg(long)]
    data: PathBuf,
    /// Optional JSON file with training overrides (same keys as the flags).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "out-checkpoint")]
    out_checkpoint: PathBuf,
    /// Resume from an existing checkpoint instead of a fresh init.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Training-log CSV path (defaults next to the checkpoint).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long = "d-model")]
    d_model: Option<usize>,
    #[arg(long = "latent-len")]
    latent_len: Option<usize>,
    #[arg(long = "n-heads")]
    n_heads: Option<usize>,
    #[arg(long = "encoder-layers")]
    encoder_layers: Option<usize>,
    #[arg(long = "decoder-layers")]
    decoder_layers: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long = "point-cloud-size")]
    point_cloud_size: Option<usize>,
    /// Use the plain gradient step instead of Adam.
    #[arg(long = "plain-sgd", default_value_t = false)]
    plain_sgd: bool,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PretrainFileConfig {
    d_model: Option<usize>,
    latent_len: Option<usize>,
    n_heads: Option<usize>,
    encoder_layers: Option<usize>,
    decoder_layers: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    point_cloud_size: Option<usize>,
    plain_sgd: Option<bool>,
}

#[derive(Args)]
struct FinetuneArgs {
    /// scenarios.json (or dataset.json) with the training scenarios.
    #[arg(long = "data-scenarios")]
    data_scenarios: PathBuf,
    /// Pretrained sampler checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long = "out-checkpoint")]
    out_checkpoint: PathBuf,
    /// Resume an existing estimator instead of a fresh init.
    #[arg(long = "estimator-checkpoint")]
    estimator_checkpoint: Option<PathBuf>,
    #[arg(long = "out-estimator-checkpoint")]
    out_estimator_checkpoint: Option<PathBuf>,
    /// Optional JSON file holding a full WsilConfig.
    #[arg(long = "wsil-config")]
    wsil_config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    log: Option<PathBuf>,
    /// Planner sample budget during collection.
    #[arg(long = "max-samples")]
    max_samples: Option<u64>,
    #[arg(long = "point-cloud-size")]
    point_cloud_size: Option<usize>,
    /// Resume the replay buffer from a previous --dump-buffer file.
    #[arg(long = "restore-buffer")]
    restore_buffer: Option<PathBuf>,
    /// Write the final replay buffer for later resumption.
    #[arg(long = "dump-buffer")]
    dump_buffer: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    scenarios: PathBuf,
    /// Comma-separated: rrtstar,silrrt,silrrt-wsil
    #[arg(long)]
    planners: String,
    /// Pretrained sampler checkpoint (for silrrt).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Finetuned sampler checkpoint (for silrrt-wsil).
    #[arg(long = "wsil-checkpoint")]
    wsil_checkpoint: Option<PathBuf>,
    /// Budget override (defaults: 200; 400 for uniform RRT* in 3D).
    #[arg(long = "max-samples")]
    max_samples: Option<u64>,
    #[arg(long, default_value_t = 3)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "out-csv")]
    out_csv: PathBuf,
    /// Per-query records CSV (defaults to <out-csv>.records.csv).
    #[arg(long = "records-csv")]
    records_csv: Option<PathBuf>,
    /// Directory for full per-query JSON dumps (for render/audit).
    #[arg(long = "dump-results")]
    dump_results: Option<PathBuf>,
    #[arg(long = "point-cloud-size", default_value_t = DEFAULT_POINT_CLOUD_SIZE)]
    point_cloud_size: usize,
}

#[derive(Args)]
struct RenderArgs {
    /// Scenario JSON (single object or array).
    #[arg(long)]
    scenario: PathBuf,
    /// Index into a scenario array.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Optional per-query JSON dump from `evaluate --dump-results`.
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::GenData(args) => cmd_gen_data(args),
        Command::Pretrain(args) => cmd_pretrain(args),
        Command::Finetune(args) => cmd_finetune(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Render(args) => cmd_render(args),
    };
    match status {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code() as i32);
        }
    }
}

fn parse_space(name: &str) -> Result<SpaceTag, BenchError> {
    SpaceTag::parse(name)
        .ok_or_else(|| BenchError::Config(format!("unknown environment {name:?}")))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, BenchError> {
    Checkpoint::load(path)
        .map_err(|e| BenchError::Config(format!("checkpoint {}: {e}", path.display())))
}

fn load_sampler(path: &Path) -> Result<SamplerModel, BenchError> {
    SamplerModel::from_checkpoint(&load_checkpoint(path)?)
        .map_err(|e| BenchError::Config(format!("checkpoint {}: {e}", path.display())))
}

fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), BenchError> {
    ck.save(path)
        .map_err(|e| BenchError::io(path.display().to_string(), std::io::Error::other(e)))
}

fn write_text(path: &Path, text: &str) -> Result<(), BenchError> {
    std::fs::write(path, text).map_err(|e| BenchError::io(path.display().to_string(), e))
}

fn cmd_gen_data(args: GenDataArgs) -> Result<(), BenchError> {
    let space = parse_space(&args.env)?;
    if args.size_min <= 0.0 || args.size_min > args.size_max {
        return Err(BenchError::Config("invalid obstacle size range".into()));
    }
    let mut config = GenDataConfig::new(
        space,
        args.workspaces,
        args.scenarios_per,
        args.obstacles,
        args.seed,
    );
    config.size_range = [args.size_min, args.size_max];
    config.goal_radius = args.goal_radius;
    config.collect_max_samples = args.collect_budget;
    let data = generate_dataset(&config);
    write_generated(&args.out, &data)?;
    println!(
        "generated {} scenarios; collected {} paths (success rate {:.1}%)",
        data.scenarios.len(),
        data.dataset.entries.len(),
        100.0 * data.dataset.collection_success_rate
    );
    Ok(())
}

fn cmd_pretrain(args: PretrainArgs) -> Result<(), BenchError> {
    let dataset: DatasetFile = read_json(&args.data)?;
    let samples = entries_to_samples(&dataset)?;
    if samples.is_empty() {
        return Err(BenchError::Config("dataset holds no paths".into()));
    }
    let space = parse_space(&dataset.manifest.env)?;

    let file_cfg: PretrainFileConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => PretrainFileConfig::default(),
    };

    let mut model = match &args.checkpoint {
        Some(path) => {
            let model = load_sampler(path)?;
            if model.config.space != space {
                return Err(BenchError::Config(format!(
                    "checkpoint space {:?} does not match dataset env {:?}",
                    model.config.space, space
                )));
            }
            model
        }
        None => {
            let mut mc = SamplerConfig::for_space(space);
            if let Some(v) = args.d_model.or(file_cfg.d_model) {
                mc.d_model = v;
            }
            if let Some(v) = args.latent_len.or(file_cfg.latent_len) {
                mc.latent_len = v;
            }
            if let Some(v) = args.n_heads.or(file_cfg.n_heads) {
                mc.n_heads = v;
            }
            if let Some(v) = args.encoder_layers.or(file_cfg.encoder_layers) {
                mc.encoder_self_layers = v;
            }
            if let Some(v) = args.decoder_layers.or(file_cfg.decoder_layers) {
                mc.decoder_self_layers = v;
            }
            if mc.d_model % mc.n_heads != 0 {
                return Err(BenchError::Config(
                    "d_model must be divisible by n_heads".into(),
                ));
            }
            SamplerModel::init(mc, args.seed)
        }
    };

    let config = PretrainConfig {
        iterations: args.iters,
        batch: args.batch.or(file_cfg.batch).unwrap_or(16),
        lr: args.lr.or(file_cfg.lr).unwrap_or(1e-3),
        plain_sgd: args.plain_sgd || file_cfg.plain_sgd.unwrap_or(false),
        reverse_prob: 0.5,
        point_cloud_size: args
            .point_cloud_size
            .or(file_cfg.point_cloud_size)
            .unwrap_or(DEFAULT_POINT_CLOUD_SIZE),
        seed: args.seed,
    };
    let log = pretrain_sampler(&mut model, &samples, &config)
        .map_err(|e| BenchError::Config(format!("training failed: {e}")))?;

    save_checkpoint(&model.to_checkpoint(), &args.out_checkpoint)?;
    let log_path = args
        .log
        .unwrap_or_else(|| args.out_checkpoint.with_extension("train.csv"));
    let mut csv = String::from("iteration,loss\n");
    for row in &log {
        csv.push_str(&format!("{},{}\n", row.iteration, row.loss));
    }
    write_text(&log_path, &csv)?;
    if let Some(last) = log.last() {
        println!("pretrained {} iterations; final loss {:.6}", log.len(), last.loss);
    } else {
        println!("checkpoint passthrough (0 iterations)");
    }
    Ok(())
}

fn wsil_log_csv(log: &[WsilLogRow]) -> String {
    let mut csv =
        String::from("iteration,epsilon,K,buffer_len,success,mean_weight,sampler_loss,estimator_loss\n");
    for r in log {
        let opt = |v: f64| if v.is_nan() { String::new() } else { format!("{v}") };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iteration,
            r.epsilon,
            r.k,
            r.buffer_len,
            r.success,
            opt(r.mean_weight),
            opt(r.sampler_loss),
            opt(r.estimator_loss),
        ));
    }
    csv
}

fn cmd_finetune(args: FinetuneArgs) -> Result<(), BenchError> {
    let scenarios = load_scenarios(&args.data_scenarios)?;
    if scenarios.is_empty() {
        return Err(BenchError::Config("no scenarios to fine-tune on".into()));
    }
    let mut sampler = load_sampler(&args.checkpoint)?;

    let mut estimator = match &args.estimator_checkpoint {
        Some(path) => EstimatorModel::from_checkpoint(&load_checkpoint(path)?)
            .map_err(|e| BenchError::Config(format!("checkpoint {}: {e}", path.display())))?,
        None => {
            let ec = EstimatorConfig {
                space: sampler.config.space,
                d_model: sampler.config.d_model,
                latent_len: sampler.config.latent_len,
                n_heads: sampler.config.n_heads,
                encoder_self_layers: sampler.config.encoder_self_layers,
                mlp_mult: sampler.config.mlp_mult,
            };
            EstimatorModel::init(ec, args.seed)
        }
    };
    if estimator.config.space != sampler.config.space {
        return Err(BenchError::Config(
            "sampler and estimator checkpoints disagree on the state space".into(),
        ));
    }

    let mut wsil_config: WsilConfig = match &args.wsil_config {
        Some(path) => read_json(path)?,
        None => WsilConfig::default(),
    };
    wsil_config.total_iterations = args.iters;
    if let Some(v) = args.point_cloud_size {
        wsil_config.point_cloud_size = v;
    }

    let space = scenarios[0].space.tag();
    let mut planner_config =
        PlannerConfig::default_for(space, silrrt_core::planner::SamplerKind::Learned);
    if let Some(v) = args.max_samples {
        planner_config.max_samples = v;
    }

    let initial_buffer = match &args.restore_buffer {
        Some(path) => {
            let file: DatasetFile = read_json(path)?;
            Some(silrrt_bench::dataset::entries_to_buffer(
                &file.entries,
                &scenarios,
                wsil_config.buffer_capacity,
            )?)
        }
        None => None,
    };
    let (log, buffer) = run_wsil(
        &scenarios,
        &mut sampler,
        &mut estimator,
        &wsil_config,
        &planner_config,
        args.seed,
        initial_buffer,
    )
    .map_err(|e| BenchError::Config(format!("fine-tuning failed: {e}")))?;

    save_checkpoint(&sampler.to_checkpoint(), &args.out_checkpoint)?;
    if let Some(path) = &args.out_estimator_checkpoint {
        save_checkpoint(&estimator.to_checkpoint(), path)?;
    }
    if let Some(path) = &args.dump_buffer {
        let file = DatasetFile {
            manifest: silrrt_bench::dataset::DatasetManifest {
                format_version: silrrt_bench::dataset::DATASET_FORMAT_VERSION,
                env: scenarios[0].space.tag().name().to_string(),
                workspaces: 0,
                scenarios_per: 0,
                obstacles: 0,
                seed: args.seed,
                bounds: scenarios[0].workspace.bounds.clone(),
                size_range: [0.0, 0.0],
                goal_radius: scenarios[0].goal_radius,
                collect_max_samples: planner_config.max_samples,
            },
            collection_success_rate: f64::NAN,
            entries: silrrt_bench::dataset::buffer_to_entries(&buffer, &scenarios),
        };
        write_json(path, &file)?;
    }
    let log_path = args
        .log
        .unwrap_or_else(|| args.out_checkpoint.with_extension("wsil.csv"));
    write_text(&log_path, &wsil_log_csv(&log))?;
    let successes = log.iter().filter(|r| r.success).count();
    println!(
        "fine-tuned {} iterations; {} successful collections",
        log.len(),
        successes
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), BenchError> {
    let scenarios = load_scenarios(&args.scenarios)?;
    let mut planners = Vec::new();
    for name in args.planners.split(',').filter(|s| !s.is_empty()) {
        match name {
            "rrtstar" => planners.push(PlannerChoice::RrtStar),
            "silrrt" => {
                let path = args.checkpoint.as_ref().ok_or_else(|| {
                    BenchError::Config("planner silrrt requires --checkpoint".into())
                })?;
                planners.push(PlannerChoice::SilRrt(Box::new(load_sampler(path)?)));
            }
            "silrrt-wsil" => {
                let path = args.wsil_checkpoint.as_ref().ok_or_else(|| {
                    BenchError::Config("planner silrrt-wsil requires --wsil-checkpoint".into())
                })?;
                planners.push(PlannerChoice::SilRrtWsil(Box::new(load_sampler(path)?)));
            }
            other => {
                return Err(BenchError::Config(format!("unknown planner {other:?}")));
            }
        }
    }
    if planners.is_empty() {
        return Err(BenchError::Config("no planners selected".into()));
    }

    let options = EvalOptions {
        trials: args.trials,
        master_seed: args.seed,
        max_samples: args.max_samples,
        point_cloud_size: args.point_cloud_size,
    };
    let output = with_thread_cap(|| evaluate(&scenarios, &planners, &options))?;

    write_text(&args.out_csv, &summary_csv(&output.summaries))?;
    let records_path = args.records_csv.unwrap_or_else(|| {
        let mut name = args.out_csv.as_os_str().to_owned();
        name.push(".records.csv");
        PathBuf::from(name)
    });
    write_text(&records_path, &records_csv(&output.records))?;

    if let Some(dir) = &args.dump_results {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir.display().to_string(), e))?;
        for dump in &output.dumps {
            let path = dir.join(format!(
                "query_{}_{:04}_{}.json",
                dump.planner, dump.scenario_id, dump.trial
            ));
            write_json(&path, dump)?;
        }
    }

    for s in &output.summaries {
        println!(
            "{}: success {:.2}% | samples {:.2} +/- {:.2} | length {:.2} +/- {:.2} | time {:.3}s +/- {:.3}",
            s.planner,
            s.success_rate_pct,
            s.avg_samples,
            s.std_samples,
            s.avg_path_length,
            s.std_path_length,
            s.avg_time_s,
            s.std_time_s
        );
    }
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), BenchError> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| BenchError::io(args.scenario.display().to_string(), e))?;
    let file: ScenarioFile = match serde_json::from_str(&text) {
        Ok(single) => single,
        Err(_) => {
            let list: Vec<ScenarioFile> = serde_json::from_str(&text)
                .map_err(|e| BenchError::parse(args.scenario.display().to_string(), e))?;
            list.into_iter().nth(args.index).ok_or_else(|| {
                BenchError::Config(format!("scenario index {} out of range", args.index))
            })?
        }
    };
    if !(2..=3).contains(&file.bounds.len()) {
        return Err(BenchError::Unsupported(format!(
            "cannot render an ambient dimension of {}",
            file.bounds.len()
        )));
    }
    let scenario = file
        .into_scenario()
        .map_err(|e| BenchError::parse(args.scenario.display().to_string(), e))?;
    let dump: Option<QueryDump> = match &args.result {
        Some(path) => Some(read_json(path)?),
        None => None,
    };
    let svg = render_svg(&scenario, dump.as_ref())?;
    write_text(&args.out, &svg)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
