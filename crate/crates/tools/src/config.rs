//! TOML configuration.
//!
//! A run file names one file per subsystem, each path relative to the run
//! file; an omitted entry uses the built-in default (the berline, the
//! reference sampling settings, the default fit and planner settings).
//!
//! ```toml
//! seed = 0
//! out = "out"
//! vehicle = "berline.toml"
//! sampling = "sampling.toml"
//! fit = "fit.toml"
//! planner = "planner.toml"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use vdyn_core::envelope::FitConfig;
use vdyn_core::planner::{BicycleParams, LoopConfig, Obstacle, PlanConfig, Track};
use vdyn_core::{EnvelopeModel, SamplingConfig, VehicleParams};

use crate::error::{CliError, Result};
use crate::formats;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    seed: Option<u64>,
    out: Option<PathBuf>,
    vehicle: Option<PathBuf>,
    sampling: Option<PathBuf>,
    fit: Option<PathBuf>,
    planner: Option<PathBuf>,
}

/// Which track a planner run drives on.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrackSpec {
    /// The pinned 240 m × 120 m rounded-rectangle circuit.
    #[default]
    ReferenceCircuit,
    /// The pinned radius-50 m loop.
    ReferenceCircle,
    /// Open straight along +X.
    Straight { length: f64, half_width: f64 },
    /// Centerline CSV (see [`formats::read_track`]), relative to the planner file.
    File(PathBuf),
}

/// The planning model of `plan`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    /// Double integrator constrained by the fitted envelope.
    #[default]
    Envelope,
    /// Kinematic bicycle baseline.
    Kinematic,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PlannerFile {
    /// Envelope file relative to the planner file; the reference constants
    /// when omitted.
    envelope: Option<PathBuf>,
    model: ModelChoice,
    track: TrackSpec,
    obstacles: Vec<Obstacle>,
    optimizer: PlanConfig,
    closed_loop: LoopConfig,
    bicycle: BicycleParams,
}

/// Default start on the reference circuit: on its first straight, clear of the
/// corner that closes the loop, so a standing start is not counted as a
/// corner speed.
pub const REFERENCE_START_S: f64 = 20.0;

/// Everything a planner run needs, with files resolved and validated.
#[derive(Debug, Clone)]
pub struct PlannerSetup {
    pub envelope: EnvelopeModel,
    pub model: ModelChoice,
    pub track: Track,
    pub obstacles: Vec<Obstacle>,
    pub optimizer: PlanConfig,
    pub closed_loop: LoopConfig,
    pub bicycle: BicycleParams,
}

impl Default for PlannerSetup {
    fn default() -> Self {
        Self {
            envelope: EnvelopeModel::reference(),
            model: ModelChoice::default(),
            track: Track::reference_circuit(),
            obstacles: Vec::new(),
            optimizer: PlanConfig::default(),
            closed_loop: LoopConfig { start_s: REFERENCE_START_S, ..LoopConfig::default() },
            bicycle: BicycleParams::default(),
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub vehicle: VehicleParams,
    pub sampling: SamplingConfig,
    pub fit: FitConfig,
    pub planner: PlannerSetup,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            vehicle: VehicleParams::berline(),
            sampling: SamplingConfig::default(),
            fit: FitConfig::default(),
            planner: PlannerSetup::default(),
        }
    }
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn relative(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn dir_of(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn load_vehicle(path: &Path) -> Result<VehicleParams> {
    let v: VehicleParams = read_toml(path)?;
    v.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(v)
}

pub fn load_sampling(path: &Path) -> Result<SamplingConfig> {
    let s: SamplingConfig = read_toml(path)?;
    s.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(s)
}

pub fn load_fit(path: &Path) -> Result<FitConfig> {
    let f: FitConfig = read_toml(path)?;
    f.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(f)
}

pub fn load_planner(path: &Path) -> Result<PlannerSetup> {
    let f: PlannerFile = read_toml(path)?;
    let base = dir_of(path);
    let bad = |what: String| CliError::Config(format!("{}: {what}", path.display()));
    let envelope = match &f.envelope {
        Some(p) => formats::read_envelope(&relative(&base, p))?,
        None => EnvelopeModel::reference(),
    };
    let track = match &f.track {
        TrackSpec::ReferenceCircuit => Track::reference_circuit(),
        TrackSpec::ReferenceCircle => Track::reference_circle(),
        TrackSpec::Straight { length, half_width } => {
            Track::straight(*length, 1.0, *half_width).map_err(|e| bad(format!("track: {e}")))?
        }
        TrackSpec::File(p) => formats::read_track(&relative(&base, p))?,
    };
    let obstacles = f
        .obstacles
        .iter()
        .map(|o| Obstacle::new(o.x, o.y, o.radius))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad(format!("obstacles: {e}")))?;
    f.optimizer.steps().map_err(|e| bad(e.to_string()))?;
    if f.closed_loop.replan_period.is_nan() || f.closed_loop.replan_period <= 0.0 {
        return Err(bad("closed_loop.replan_period must be positive".into()));
    }
    Ok(PlannerSetup {
        envelope,
        model: f.model,
        track,
        obstacles,
        optimizer: f.optimizer,
        closed_loop: f.closed_loop,
        bicycle: f.bicycle,
    })
}

impl RunConfig {
    /// Reads a run file and the subsystem files it names.
    pub fn load(path: &Path) -> Result<Self> {
        let run: RunFile = read_toml(path)?;
        let base = dir_of(path);
        let mut cfg = RunConfig::default();
        if let Some(p) = &run.vehicle {
            cfg.vehicle = load_vehicle(&relative(&base, p))?;
        }
        if let Some(p) = &run.sampling {
            cfg.sampling = load_sampling(&relative(&base, p))?;
        }
        if let Some(p) = &run.fit {
            cfg.fit = load_fit(&relative(&base, p))?;
        }
        if let Some(p) = &run.planner {
            cfg.planner = load_planner(&relative(&base, p))?;
        }
        if let Some(out) = &run.out {
            cfg.out = relative(&base, out);
        }
        cfg.seed = run.seed.unwrap_or(cfg.sampling.seed);
        cfg.sampling.seed = cfg.seed;
        Ok(cfg)
    }

    /// The run file at `path`, or the defaults when there is none.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Applies the command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<&Path>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
            self.sampling.seed = s;
        }
        if let Some(o) = out {
            self.out = o.to_path_buf();
        }
        self
    }

    /// Creates the output directory.
    pub fn ensure_out(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        Ok(&self.out)
    }
}
