use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use occlutrack::frame::BoundingBox;
use occlutrack::harness::config::{as_validation, manifest_path, Manifest, ToolConfig};
use occlutrack::harness::datasets::{constant_velocity, mixed_motion, sinusoidal};
use occlutrack::harness::io::{
    read_results, read_trajectories, read_truth, write_results, write_rows, ResultRow, VerdictRow,
};
use occlutrack::harness::suite::{
    crossing_suite, crossing_training_set, free_motion, unoccluded_suite,
};
use occlutrack::harness::{
    evaluate, parse_values, post_occlusion_hits, read_sequence, simulate, sweep, write_scenario,
    write_sweep_csv, ConstantVelocity, ScenarioSpec, SweepParam,
};
use occlutrack::pipeline::run_sequence;
use occlutrack::predictor::{
    evaluate_ade, load_predictor, observation_length_study, save_predictor, train_gan,
    PredictorFile, TrajSplit, Trajectory, TrajectoryPredictor,
};
use occlutrack::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "occlutrack",
    version,
    about = "Anti-occlusion single-target tracking on synthetic sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON config file; missing sections take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config value, e.g. `pipeline.occlusion.mix_weight=0.5`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    /// Textured target hidden by a block that rides along with it.
    Crossing,
    /// The crossing layout and free-moving targets, never covered.
    Unoccluded,
    /// One target drifting on an empty field.
    Free,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    /// Straight tracks at the crossing-suite target speeds.
    Crossing,
    /// Unit-speed straight lines.
    Constant,
    Sinusoidal,
    /// Lines, sinusoids and single turns in rotation.
    Mixed,
}

#[derive(Args)]
struct DataArgs {
    /// Trajectory CSV with columns traj_id,frame,x,y.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Generate the training set instead of reading one.
    #[arg(long, value_enum)]
    synthetic: Option<Dataset>,
    #[arg(long, default_value_t = 400)]
    count: usize,
    /// Points per synthetic trajectory (defaults to t_obs + n_pred, or 12 for the study).
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scenario to PGM frames plus truth.csv.
    Simulate {
        /// Scenario spec as JSON.
        #[arg(long, conflicts_with = "suite")]
        spec: Option<PathBuf>,
        /// Built-in scenario family instead of a spec file.
        #[arg(long, value_enum)]
        suite: Option<Suite>,
        #[arg(long, default_value_t = 100)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track the target through a sequence directory.
    Track {
        /// Directory of PGM frames, optionally with truth.csv.
        #[arg(long)]
        seq: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Predictor parameter file; constant-velocity extrapolation when omitted.
        #[arg(long)]
        predictor: Option<PathBuf>,
        /// Initial box `cx,cy,w,h`; defaults to the first truth row.
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-frame occlusion verdicts.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Train the trajectory generator adversarially.
    TrainPredictor {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-step losses as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Store the discriminator alongside the generator.
        #[arg(long)]
        keep_discriminator: bool,
    },
    /// Score tracking results against ground truth.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Write the report as JSON instead of printing only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario suite under every value of one occlusion parameter.
    Sweep {
        /// d_t, s_t, epsilon_t or i.
        #[arg(long)]
        param: String,
        /// `start:end:step` or a comma list.
        #[arg(long)]
        values: String,
        /// Scenario spec files; the crossing suite when omitted.
        #[arg(long = "spec")]
        specs: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 100)]
        seed: u64,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        predictor: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Held-out ADE of predictors trained with different observation lengths.
    StudyObsLength {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "2,3,4,5,6")]
        lengths: String,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_LOST: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Validation(_) | Error::InvalidArgument(_) => EXIT_VALIDATION,
                Error::TrackingFailure(_) => EXIT_LOST,
                _ => 1,
            })
        }
    }
}

/// Applies `a.b.c=value` to the JSON form of the config; the path must exist.
fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Validation(format!("override {spec:?} is not PATH=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for key in path.split('.') {
        node = node
            .get_mut(key)
            .ok_or_else(|| Error::Validation(format!("unknown config key {path}")))?;
    }
    *node = value;
    Ok(())
}

fn load_config(args: &ConfigArgs) -> Result<ToolConfig> {
    let base = match &args.config {
        Some(p) => ToolConfig::load(p)?,
        None => ToolConfig::default(),
    };
    let mut value = serde_json::to_value(&base)?;
    for o in &args.overrides {
        apply_override(&mut value, o)?;
    }
    let cfg: ToolConfig =
        serde_json::from_value(value).map_err(|e| Error::Validation(format!("config: {e}")))?;
    cfg.validate().map_err(as_validation)?;
    Ok(cfg)
}

fn manifest(command: &str, cfg: &ToolConfig) -> Result<Manifest> {
    Ok(Manifest::new(
        command,
        std::env::args().skip(1).collect(),
        serde_json::to_value(cfg)?,
    ))
}

fn finish(mut m: Manifest, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    m.inputs = inputs.iter().map(|p| p.display().to_string()).collect();
    m.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    m.write(manifest_path(outputs[0]))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn predictor_for(path: Option<&Path>, cfg: &ToolConfig) -> Result<Box<dyn TrajectoryPredictor>> {
    Ok(match path {
        Some(p) => Box::new(load_predictor(p)?.generator),
        None => Box::new(
            ConstantVelocity::new(cfg.train.t_obs, cfg.train.n_pred).map_err(as_validation)?,
        ),
    })
}

fn parse_box(text: &str) -> Result<BoundingBox> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Validation(format!("bad box {text:?}: {e}")))?;
    match v[..] {
        [cx, cy, w, h] => BoundingBox::new(cx, cy, w, h).map_err(as_validation),
        _ => Err(Error::Validation(format!("box {text:?} needs cx,cy,w,h"))),
    }
}

fn trajectories(d: &DataArgs, field: f64, default_len: usize) -> Result<Vec<Trajectory>> {
    let len = d.len.unwrap_or(default_len);
    match (&d.data, d.synthetic) {
        (Some(p), _) => read_trajectories(File::open(p)?),
        (None, Some(Dataset::Constant)) => constant_velocity(d.count, len, field, 1.0, d.data_seed),
        (None, Some(Dataset::Sinusoidal)) => sinusoidal(d.count, len, field, d.data_seed),
        (None, Some(Dataset::Mixed)) => mixed_motion(d.count, len, field, d.data_seed),
        (None, Some(Dataset::Crossing)) => unreachable!("crossing windows are built directly"),
        (None, None) => Err(Error::Validation("give --data or --synthetic".into())),
    }
}

/// Every window of `t_obs + n_pred` consecutive points.
fn all_windows(trajs: &[Trajectory], t_obs: usize, n_pred: usize) -> Result<Vec<TrajSplit>> {
    let span = t_obs + n_pred;
    let mut out = Vec::new();
    for t in trajs {
        for start in 0..(t.len() + 1).saturating_sub(span) {
            out.push(TrajSplit::from_window(t, start, t_obs, n_pred)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Validation(format!(
            "no trajectory has {span} points"
        )));
    }
    Ok(out)
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Simulate {
            spec: spec_file,
            suite,
            seed,
            out,
        } => {
            let spec: ScenarioSpec = match (&spec_file, suite) {
                (Some(p), _) => serde_json::from_str(&fs::read_to_string(p)?)
                    .map_err(|e| Error::Validation(format!("scenario spec: {e}")))?,
                (None, Some(Suite::Crossing)) => crossing_suite(1, seed).remove(0),
                (None, Some(Suite::Unoccluded)) => unoccluded_suite(1, seed).remove(0),
                (None, Some(Suite::Free)) => free_motion(seed),
                (None, None) => return Err(Error::Validation("give --spec or --suite".into())),
            };
            let scenario = simulate(&spec).map_err(as_validation)?;
            write_scenario(&out, &scenario)?;
            fs::write(
                out.join("scenario.json"),
                serde_json::to_string_pretty(&spec)? + "\n",
            )?;
            let mut m = Manifest::new(
                "simulate",
                std::env::args().skip(1).collect(),
                serde_json::to_value(&spec)?,
            );
            m.seeds.insert("scenario".into(), spec.seed);
            let inputs: Vec<&Path> = spec_file.as_deref().into_iter().collect();
            finish(m, &inputs, &[&out])?;
            println!(
                "{} frames written to {}",
                scenario.frames.len(),
                out.display()
            );
            Ok(0)
        }
        Command::Track {
            seq,
            cfg,
            predictor,
            init,
            out,
            verdicts,
        } => {
            let cfg = load_config(&cfg)?;
            let (frames, truth) = read_sequence(&seq)?;
            let init_box = match (&init, &truth) {
                (Some(t), _) => parse_box(t)?,
                (None, Some(t)) if !t.is_empty() => t[0].bbox(),
                _ => {
                    return Err(Error::Validation(
                        "no --init box and no truth.csv in the sequence".into(),
                    ))
                }
            };
            let p = predictor_for(predictor.as_deref(), &cfg)?;
            let truth_boxes: Option<Vec<BoundingBox>> =
                truth.as_ref().map(|t| t.iter().map(|r| r.bbox()).collect());
            let results = run_sequence(
                &frames,
                init_box,
                p.as_ref(),
                &cfg.pipeline,
                truth_boxes.as_deref(),
            )
            .map_err(as_validation)?;
            let rows: Vec<ResultRow> = results.iter().map(ResultRow::from).collect();
            write_results(create(&out)?, &rows)?;
            let mut outputs = vec![out.as_path()];
            if let Some(v) = &verdicts {
                let vr: Vec<VerdictRow> =
                    results.iter().filter_map(VerdictRow::from_result).collect();
                write_rows(create(v)?, &vr)?;
                outputs.push(v);
            }
            let mut m = manifest("track", &cfg)?;
            m.seeds.insert("pipeline".into(), cfg.pipeline.seed);
            let mut inputs = vec![seq.as_path()];
            inputs.extend(predictor.as_deref());
            finish(m, &inputs, &outputs)?;
            if let Some(t) = &truth {
                let report = evaluate(&rows, t)?;
                println!("{}", serde_json::to_string(&report)?);
            }
            let lost = results.iter().filter(|r| r.lost).count();
            if lost > 0 {
                eprintln!("target lost on {lost} frames");
                return Ok(EXIT_LOST);
            }
            Ok(0)
        }
        Command::TrainPredictor {
            data,
            cfg,
            out,
            log,
            keep_discriminator,
        } => {
            let cfg = load_config(&cfg)?;
            let t = &cfg.train;
            let splits = match data.synthetic {
                Some(Dataset::Crossing) if data.data.is_none() => {
                    crossing_training_set(data.count, t, data.data_seed).map_err(as_validation)?
                }
                _ => all_windows(
                    &trajectories(&data, t.field_size, t.t_obs + t.n_pred)?,
                    t.t_obs,
                    t.n_pred,
                )?,
            };
            let gan = train_gan(&splits, t).map_err(as_validation)?;
            let ade = evaluate_ade(
                &gan.generator,
                &splits,
                &mut ChaCha8Rng::seed_from_u64(t.seed),
            )?;
            let file = PredictorFile {
                generator: gan.generator,
                discriminator: keep_discriminator.then_some(gan.discriminator),
            };
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            save_predictor(&out, &file)?;
            let mut outputs = vec![out.as_path()];
            if let Some(l) = &log {
                write_rows(create(l)?, &gan.log)?;
                outputs.push(l);
            }
            let mut m = manifest("train-predictor", &cfg)?;
            m.seeds.insert("train".into(), t.seed);
            if data.data.is_none() {
                m.seeds.insert("data".into(), data.data_seed);
            }
            let inputs: Vec<&Path> = data.data.as_deref().into_iter().collect();
            finish(m, &inputs, &outputs)?;
            println!(
                "trained on {} windows, training-set ADE {ade:.4} px",
                splits.len()
            );
            Ok(0)
        }
        Command::Eval {
            results,
            truth,
            out,
        } => {
            let rows = read_results(File::open(&results)?)?;
            let t = read_truth(File::open(&truth)?)?;
            let report = evaluate(&rows, &t).map_err(as_validation)?;
            let (hits, total) = post_occlusion_hits(&rows, &t, 0.5).map_err(as_validation)?;
            let mut json = serde_json::to_value(report)?;
            json["post_occlusion_success"] = if total > 0 {
                Value::from(hits as f64 / total as f64)
            } else {
                Value::Null
            };
            let text = serde_json::to_string_pretty(&json)?;
            println!("{text}");
            if let Some(o) = &out {
                if let Some(parent) = o.parent().filter(|p| !p.as_os_str().is_empty()) {
                    fs::create_dir_all(parent)?;
                }
                fs::write(o, text + "\n")?;
                let m = Manifest::new("eval", std::env::args().skip(1).collect(), Value::Null);
                finish(m, &[&results, &truth], &[o])?;
            }
            Ok(0)
        }
        Command::Sweep {
            param,
            values,
            specs,
            count,
            seed,
            cfg,
            predictor,
            out,
        } => {
            let cfg = load_config(&cfg)?;
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            let scenarios: Vec<ScenarioSpec> = if specs.is_empty() {
                crossing_suite(count, seed)
            } else {
                specs
                    .iter()
                    .map(|p| {
                        serde_json::from_str(&fs::read_to_string(p)?)
                            .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))
                    })
                    .collect::<Result<_>>()?
            };
            let p = predictor_for(predictor.as_deref(), &cfg)?;
            let rows = sweep(&scenarios, param, &values, &cfg.pipeline, p.as_ref())
                .map_err(as_validation)?;
            write_sweep_csv(create(&out)?, param, &rows)?;
            let mut m = manifest("sweep", &cfg)?;
            if specs.is_empty() {
                m.seeds.insert("suite".into(), seed);
            }
            let mut inputs: Vec<&Path> = specs.iter().map(PathBuf::as_path).collect();
            inputs.extend(predictor.as_deref());
            finish(m, &inputs, &[&out])?;
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(0)
        }
        Command::StudyObsLength {
            data,
            lengths,
            cfg,
            out,
        } => {
            let cfg = load_config(&cfg)?;
            let lengths: Vec<usize> = lengths
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Validation(format!("bad --lengths: {e}")))?;
            if matches!(data.synthetic, Some(Dataset::Crossing)) {
                return Err(Error::Validation(
                    "the study needs long trajectories; use constant, sinusoidal or mixed".into(),
                ));
            }
            let data_args = DataArgs {
                synthetic: data.synthetic.or(Some(Dataset::Mixed)),
                ..data
            };
            let trajs = trajectories(&data_args, cfg.train.field_size, 12)?;
            let rows =
                observation_length_study(&trajs, &lengths, &cfg.train).map_err(as_validation)?;
            write_rows(create(&out)?, &rows)?;
            let mut m = manifest("study-obs-length", &cfg)?;
            m.seeds.insert("train".into(), cfg.train.seed);
            if data_args.data.is_none() {
                m.seeds.insert("data".into(), data_args.data_seed);
            }
            let inputs: Vec<&Path> = data_args.data.as_deref().into_iter().collect();
            finish(m, &inputs, &[&out])?;
            for r in &rows {
                println!(
                    "t_obs {}: ADE {:.4} over {} training windows",
                    r.t_obs, r.mean_ade, r.sample_count
                );
            }
            Ok(0)
        }
    }
}
