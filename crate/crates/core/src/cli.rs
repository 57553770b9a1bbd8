//! Command-line front end. `run_from_args` is what the binary calls.
//!
//! Settings resolve as: command-line flag, then `--config` TOML file, then
//! built-in default. `eps` and `min_pts` have no default.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::datagen::{generate, ScenarioSpec};
use crate::error::{Error, Result};
use crate::eval::{
    build_test_cases, evaluate, sweep_observable_length, ConstantVelocity, FixedModels, ModelSource, PerfectOracle,
    SelectPerLength,
};
use crate::io::{read_trajectories_file, write_points, write_trajectories};
use crate::persist::ModelDocument;
use crate::predict::{select_model, CandidateGrid};
use crate::preprocess::{preprocess_all, DbscanParams};
use crate::trajectory::{split_dataset, GridSpec, TrackPoint, Trajectory, TrajectorySegment};
use crate::vbgmm::{effective_components, FitOptions, HyperOverrides, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Weight below which a component is not counted in the train summary.
pub const EFFECTIVE_WEIGHT_FLOOR: f64 = 0.01;

// Offsets added to --seed for each stage that draws random numbers.
const SPLIT_STAGE: u64 = 0;
const FIT_STAGE: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "trajvgmm",
    version,
    about = "Trajectory prediction with variational Gaussian mixtures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic trajectories from a scenario TOML file.
    Gen(GenArgs),
    /// Denoise and segment trajectories.
    Preprocess(PreprocessArgs),
    /// Preprocess, select (K, H) on a validation split and save the model.
    Train(TrainArgs),
    /// Predict the next positions of one trajectory.
    Predict(PredictArgs),
    /// Compare a model with the constant-velocity baseline on test data.
    Eval(EvalArgs),
    /// Error and accuracy for a range of observable lengths.
    Sweep(SweepArgs),
}

/// Comma-separated counts; `a..b` and `a..b:step` expand inclusively.
#[derive(Debug, Clone, PartialEq)]
pub struct CountList(pub Vec<usize>);

impl FromStr for CountList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{}`: {e}", t.trim()));
        let mut out = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            match part.split_once("..") {
                Some((a, rest)) => {
                    let (b, step) = match rest.split_once(':') {
                        Some((b, st)) => (num(b)?, num(st)?),
                        None => (num(rest)?, 1),
                    };
                    if step == 0 {
                        return Err("range step must be >= 1".into());
                    }
                    out.extend((num(a)?..=b).step_by(step));
                }
                None => out.push(num(part)?),
            }
        }
        if out.is_empty() {
            return Err("expected at least one value".into());
        }
        Ok(CountList(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Origin(pub f64, pub f64);

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (x, y) = s.split_once(',').ok_or("expected `x,y`")?;
        let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", t.trim()));
        Ok(Origin(p(x)?, p(y)?))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineFlags {
    /// TOML file with any of the settings below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// DBSCAN radius in meters.
    #[arg(long)]
    pub eps: Option<f64>,
    /// DBSCAN neighbor count, including the point itself.
    #[arg(long)]
    pub min_pts: Option<usize>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    /// Grid origin as `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_origin: Option<Origin>,
    /// Candidate component counts, e.g. `1,2,4` or `1..8:2`.
    #[arg(long)]
    pub k_values: Option<CountList>,
    /// Candidate history lengths, e.g. `2..6:2`.
    #[arg(long)]
    pub h_values: Option<CountList>,
    /// Prediction horizon F in steps.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use `dof / (1 + beta) * W` as the predictive precision.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub eta_paper_exact: Option<bool>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub eps: Option<f64>,
    pub min_pts: Option<usize>,
    pub cell_size: Option<f64>,
    pub grid_origin: Option<[f64; 2]>,
    pub k_values: Option<Vec<usize>>,
    pub h_values: Option<Vec<usize>>,
    pub horizon: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub eta_paper_exact: Option<bool>,
    pub alpha0: Option<f64>,
    pub beta0: Option<f64>,
    pub v0: Option<f64>,
    /// Fraction of training segments held out for model selection.
    pub validation_fraction: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eps: Option<f64>,
    pub min_pts: Option<usize>,
    pub grid_origin: (f64, f64),
    pub cell_size: f64,
    pub k_values: Vec<usize>,
    pub h_values: Vec<usize>,
    pub horizon: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub eta_paper_exact: bool,
    pub hyper: HyperOverrides,
    pub validation_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eps: None,
            min_pts: None,
            grid_origin: (0.0, 0.0),
            cell_size: 1.0,
            k_values: vec![1, 2, 4],
            h_values: vec![2, 4, 6],
            horizon: 5,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            eta_paper_exact: false,
            hyper: HyperOverrides::default(),
            validation_fraction: 0.2,
        }
    }
}

impl RunConfig {
    pub fn resolve(flags: &PipelineFlags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let d = Self::default();
        Ok(Self {
            eps: flags.eps.or(file.eps),
            min_pts: flags.min_pts.or(file.min_pts),
            grid_origin: flags
                .grid_origin
                .map(|o| (o.0, o.1))
                .or(file.grid_origin.map(|[x, y]| (x, y)))
                .unwrap_or(d.grid_origin),
            cell_size: flags.cell_size.or(file.cell_size).unwrap_or(d.cell_size),
            k_values: flags
                .k_values
                .clone()
                .map(|c| c.0)
                .or(file.k_values)
                .unwrap_or(d.k_values),
            h_values: flags
                .h_values
                .clone()
                .map(|c| c.0)
                .or(file.h_values)
                .unwrap_or(d.h_values),
            horizon: flags.horizon.or(file.horizon).unwrap_or(d.horizon),
            tol: flags.tol.or(file.tol).unwrap_or(d.tol),
            max_iter: flags.max_iter.or(file.max_iter).unwrap_or(d.max_iter),
            seed: flags.seed.or(file.seed).unwrap_or(d.seed),
            eta_paper_exact: flags
                .eta_paper_exact
                .or(file.eta_paper_exact)
                .unwrap_or(d.eta_paper_exact),
            hyper: HyperOverrides {
                alpha0: flags.alpha0.or(file.alpha0),
                beta0: flags.beta0.or(file.beta0),
                v0: flags.v0.or(file.v0),
            },
            validation_fraction: file.validation_fraction.unwrap_or(d.validation_fraction),
        })
    }

    pub fn dbscan(&self) -> Result<DbscanParams> {
        let eps = self
            .eps
            .ok_or_else(|| Error::Config("eps is required (pass --eps or set `eps` in the config file)".into()))?;
        let min_pts = self.min_pts.ok_or_else(|| {
            Error::Config("min_pts is required (pass --min-pts or set `min_pts` in the config file)".into())
        })?;
        DbscanParams::new(eps, min_pts)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_origin.0, self.grid_origin.1, self.cell_size)
    }

    pub fn candidates(&self) -> Result<CandidateGrid> {
        CandidateGrid::new(self.k_values.clone(), self.h_values.clone(), self.horizon, self.hyper)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed.wrapping_add(FIT_STAGE),
        }
    }

    /// Splits segments into (train, validation). With fewer than two
    /// segments both roles use the full set.
    pub fn split(&self, segments: Vec<TrajectorySegment>) -> Result<(Vec<TrajectorySegment>, Vec<TrajectorySegment>)> {
        let (train, val) = split_dataset(&segments, self.validation_fraction, self.seed.wrapping_add(SPLIT_STAGE))?;
        if train.is_empty() || val.is_empty() {
            return Ok((segments.clone(), segments));
        }
        Ok((train, val))
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Scenario TOML: `points_per_traj` plus a `[scenario]` table.
    pub spec: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    pub data: PathBuf,
    #[command(flatten)]
    pub flags: PipelineFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub data: PathBuf,
    #[command(flatten)]
    pub flags: PipelineFlags,
    /// Where to write the model JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub model: PathBuf,
    /// CSV holding the recent points of a single object.
    pub recent: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub model: PathBuf,
    /// Test trajectories; each is used whole.
    pub test: PathBuf,
    #[command(flatten)]
    pub flags: PipelineFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    ConstantVelocity,
    /// Returns the true future; checks the harness itself.
    Oracle,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Test trajectories; each is used whole.
    #[arg(long)]
    pub test: PathBuf,
    /// Training CSV; a model is selected per observable length.
    #[arg(long, conflicts_with_all = ["model", "baseline"])]
    pub train: Option<PathBuf>,
    /// Saved models, one per observable length.
    #[arg(long, conflicts_with = "baseline")]
    pub model: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    #[command(flatten)]
    pub flags: PipelineFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenFile {
    points_per_traj: usize,
    scenario: ScenarioSpec,
}

fn emit(out: Option<&Path>, content: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, content)?,
        None => stdout.write_all(content.as_bytes())?,
    }
    Ok(())
}

fn to_csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn as_segments(trajs: &[Trajectory]) -> Vec<TrajectorySegment> {
    trajs.iter().map(TrajectorySegment::whole).collect()
}

fn load_segments(path: &Path, cfg: &RunConfig) -> Result<Vec<TrajectorySegment>> {
    let params = cfg.dbscan()?;
    let trajs = read_trajectories_file(path)?;
    let segs = preprocess_all(&trajs, &params, &params);
    if segs.is_empty() {
        return Err(Error::NoSegments);
    }
    Ok(segs)
}

fn cmd_gen(args: &GenArgs, stdout: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)?;
    let mut file: GenFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", args.spec.display())))?;
    if let Some(s) = args.seed {
        file.scenario.seed = s;
    }
    let trajs = generate(&file.scenario, file.points_per_traj)?;
    let csv = to_csv_string(|b| write_trajectories(b, &trajs))?;
    emit(args.out.as_deref(), &csv, stdout)
}

fn cmd_preprocess(args: &PreprocessArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(&args.flags)?;
    let segs = load_segments(&args.data, &cfg)?;
    let points: Vec<TrackPoint> = segs
        .iter()
        .flat_map(|s| {
            let id = format!("{}:{}", s.parent_id, s.index);
            s.points().iter().map(move |p| TrackPoint {
                object_id: id.clone(),
                ..p.clone()
            })
        })
        .collect();
    let csv = to_csv_string(|b| write_points(b, &points))?;
    emit(args.out.as_deref(), &csv, stdout)
}

fn cmd_train(args: &TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(&args.flags)?;
    let segs = load_segments(&args.data, &cfg)?;
    let (train, val) = cfg.split(segs)?;
    let sel = select_model(
        &train,
        &val,
        &cfg.candidates()?,
        &cfg.fit_options(),
        cfg.eta_paper_exact,
    )?;
    ModelDocument::from_predictor(&sel.predictor, Some(sel.score)).save(&args.out)?;
    writeln!(
        stdout,
        "K={} H={} elbo={:.6} score={:.6} effective={}",
        sel.k,
        sel.h,
        sel.predictor.model.elbo(),
        sel.score,
        effective_components(&sel.predictor.model, EFFECTIVE_WEIGHT_FLOOR)
    )?;
    Ok(())
}

fn cmd_predict(args: &PredictArgs, stdout: &mut dyn Write) -> Result<()> {
    let predictor = ModelDocument::load(&args.model)?.to_predictor()?;
    let trajs = read_trajectories_file(&args.recent)?;
    let [recent] = trajs.as_slice() else {
        return Err(Error::Config(format!(
            "recent CSV must hold exactly one object, found {}",
            trajs.len()
        )));
    };
    let pred = predictor.predict_future(recent.points(), args.steps)?;
    let mut s = String::from("step,x,y\n");
    for (i, p) in pred.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", i + 1, p.x, p.y);
    }
    emit(args.out.as_deref(), &s, stdout)
}

fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(&args.flags)?;
    let predictor = ModelDocument::load(&args.model)?.to_predictor()?;
    let test = as_segments(&read_trajectories_file(&args.test)?);
    let cases = build_test_cases(&test, predictor.history_len, predictor.horizon);
    let grid = cfg.grid()?;
    let mut s = String::from("method,observable_length,rmse,accuracy,n_cases\n");
    for (name, f) in [
        ("vgmm", &predictor as &dyn crate::eval::Forecaster),
        ("constant_velocity", &ConstantVelocity),
    ] {
        let (e, a) = evaluate(f, &cases, &grid)?;
        let _ = writeln!(s, "{name},{},{e:.6},{a:.6},{}", predictor.history_len, cases.len());
    }
    emit(args.out.as_deref(), &s, stdout)
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(&args.flags)?;
    let test = as_segments(&read_trajectories_file(&args.test)?);
    if test.is_empty() {
        return Err(Error::NoTestCases);
    }
    let grid = cfg.grid()?;
    let run = |source: &dyn ModelSource| {
        sweep_observable_length(
            source,
            &test,
            &cfg.h_values,
            cfg.horizon,
            &grid,
            cfg.seed.wrapping_add(FIT_STAGE),
        )
    };
    let report = if let Some(train_path) = &args.train {
        let (train, val) = cfg.split(load_segments(train_path, &cfg)?)?;
        run(&SelectPerLength {
            train: &train,
            validation: &val,
            candidates: cfg.candidates()?,
            opts: cfg.fit_options(),
            eta_paper_exact: cfg.eta_paper_exact,
        })?
    } else if !args.model.is_empty() {
        let models = args
            .model
            .iter()
            .map(|p| ModelDocument::load(p)?.to_predictor())
            .collect::<Result<Vec<_>>>()?;
        run(&FixedModels(models))?
    } else {
        match args.baseline {
            Some(Baseline::ConstantVelocity) => run(&ConstantVelocity)?,
            Some(Baseline::Oracle) => run(&PerfectOracle)?,
            None => return Err(Error::Config("sweep needs --train, --model or --baseline".into())),
        }
    };
    emit(args.out.as_deref(), &report.to_csv(), stdout)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, stdout),
        Command::Preprocess(a) => cmd_preprocess(a, stdout),
        Command::Train(a) => cmd_train(a, stdout),
        Command::Predict(a) => cmd_predict(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
