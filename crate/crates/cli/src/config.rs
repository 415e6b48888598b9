use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use micropolar::dynamics::{make_forcing, read_checkpoint, Forcing, Params, ProfileSpec, State};
use micropolar::estimates::ConstantOverrides;
use micropolar::spectral::{make_grid, Grid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// RNG streams derived from the one configured seed.
const STREAM_INITIAL: u64 = 1;
const STREAM_PERTURBED: u64 = 2;
const STREAM_GAP: u64 = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub params: Params,
    /// Absent or `null` for `f = g = 0`.
    #[serde(default)]
    pub forcing: Option<ProfileSpec>,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub constants: ConstantOverrides,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    /// Sample every `stride` steps.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Random state on the disc `|k| ≤ kmax`, energy split evenly.
    Random {
        #[serde(default = "default_kmax")]
        kmax: i64,
        #[serde(default = "unit")]
        energy: f64,
    },
    Zero,
    Checkpoint { path: PathBuf },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Random {
            kmax: default_kmax(),
            energy: unit(),
        }
    }
}

fn default_kmax() -> i64 {
    4
}

fn unit() -> f64 {
    1.0
}

/// Perturbed twin: random over `|k| ≤ kmax` (whole dealiased disc by
/// default).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub kmax: Option<i64>,
    #[serde(default = "unit")]
    pub energy: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            kmax: None,
            energy: 1.0,
        }
    }
}

/// Extra forcing on the perturbed twin, decaying like `exp(−rate t)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingGap {
    pub forcing: ProfileSpec,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Simulate,
    VerifyEstimates {
        #[serde(default)]
        rel_slack: Option<f64>,
        #[serde(default)]
        transient_horizon: Option<f64>,
        #[serde(default)]
        transient_band: Option<f64>,
        #[serde(default)]
        min_average_window: Option<f64>,
    },
    Bounds,
    SyncModes {
        /// Mode counts to sweep; the exact-eigenvalue bound when absent.
        #[serde(default)]
        m: Option<Vec<usize>>,
        #[serde(default)]
        spinup: f64,
        #[serde(default)]
        perturbation: PerturbationConfig,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_sustained")]
        sustained_fraction: f64,
        #[serde(default)]
        forcing_gap: Option<ForcingGap>,
        #[serde(default = "unit")]
        gronwall_window: f64,
    },
    SyncNodes {
        per_side: Vec<usize>,
        /// Default `k₁λ₁N/(2c)` for each node count.
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default)]
        spinup: f64,
        #[serde(default)]
        perturbation: PerturbationConfig,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_sustained")]
        sustained_fraction: f64,
    },
    Lyapunov {
        #[serde(default = "default_exponents")]
        exponents: usize,
        /// Ten steps when absent.
        #[serde(default)]
        reorth_interval: Option<f64>,
        #[serde(default)]
        velocity_only: bool,
        #[serde(default)]
        spinup: f64,
    },
}

fn default_threshold() -> f64 {
    1e-10
}

fn default_sustained() -> f64 {
    0.1
}

fn default_exponents() -> usize {
    8
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::VerifyEstimates { .. } => "verify_estimates",
            Experiment::Bounds => "bounds",
            Experiment::SyncModes { .. } => "sync_modes",
            Experiment::SyncNodes { .. } => "sync_nodes",
            Experiment::Lyapunov { .. } => "lyapunov",
        }
    }
}

/// A parsed configuration with its digest and the directory it was read
/// from (relative checkpoint paths resolve against it).
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub hash: String,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let hash = config_hash(&value);
    let config: RunConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(Loaded {
        config,
        hash,
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

/// SHA-256 of the compact JSON with sorted keys, leaving out `output` so the
/// destination does not change the digest.
pub fn config_hash(value: &Value) -> String {
    let mut v = value.clone();
    if let Value::Object(map) = &mut v {
        map.remove("output");
    }
    // serde_json's default map is ordered by key
    let canonical = serde_json::to_string(&v).expect("JSON values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        let i = &self.integrator;
        if !(i.dt.is_finite() && i.dt > 0.0) {
            return Err(CliError::Config(format!("integrator.dt must be positive, got {}", i.dt)));
        }
        if !(i.t_end.is_finite() && i.t_end >= 0.0) {
            return Err(CliError::Config(format!(
                "integrator.t_end must be nonnegative, got {}",
                i.t_end
            )));
        }
        if i.stride == 0 {
            return Err(CliError::Config("integrator.stride must be at least 1".into()));
        }
        if let InitialConfig::Random { energy, .. } = self.initial {
            if !(energy.is_finite() && energy >= 0.0) {
                return Err(CliError::Config(format!("initial.energy must be nonnegative, got {energy}")));
            }
        }
        match &self.experiment {
            Some(Experiment::SyncModes { spinup, threshold, .. })
            | Some(Experiment::SyncNodes { spinup, threshold, .. }) => {
                nonnegative("experiment.spinup", *spinup)?;
                if !(*threshold > 0.0) {
                    return Err(CliError::Config("experiment.threshold must be positive".into()));
                }
            }
            Some(Experiment::Lyapunov { spinup, .. }) => nonnegative("experiment.spinup", *spinup)?,
            _ => {}
        }
        if let Some(Experiment::SyncNodes { per_side, .. }) = &self.experiment {
            if per_side.is_empty() {
                return Err(CliError::Config("experiment.per_side must list at least one count".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>, CliError> {
        Ok(make_grid(self.grid.n, self.grid.length)?)
    }

    pub fn forcing(&self, grid: &Arc<Grid>) -> Result<Forcing, CliError> {
        match &self.forcing {
            Some(spec) => Ok(make_forcing(spec, grid, self.integrator.seed)?),
            None => Ok(Forcing::zero(grid)),
        }
    }

    /// Forcing of the perturbed twin: the shared forcing plus the decaying gap.
    pub fn gap_forcing(&self, grid: &Arc<Grid>, gap: &ForcingGap) -> Result<Forcing, CliError> {
        let extra = make_forcing(&gap.forcing, grid, self.integrator.seed ^ STREAM_GAP)?;
        let mut out = self.forcing(grid)?;
        for part in extra.parts() {
            out.push(
                part.f.clone(),
                part.g.clone(),
                micropolar::dynamics::Envelope::Exp { rate: -gap.rate },
            )?;
        }
        Ok(out)
    }

    pub fn initial_state(&self, grid: &Arc<Grid>, base_dir: &Path) -> Result<State, CliError> {
        match &self.initial {
            InitialConfig::Random { kmax, energy } => {
                Ok(State::random(grid, *kmax, *energy, &mut self.rng(STREAM_INITIAL))?)
            }
            InitialConfig::Zero => Ok(State::zeros(grid)),
            InitialConfig::Checkpoint { path } => {
                let path = base_dir.join(path);
                let file = fs::File::open(&path)
                    .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
                let (state, _) = read_checkpoint(std::io::BufReader::new(file))?;
                if **state.grid() != **grid {
                    return Err(CliError::Config(format!(
                        "checkpoint {} is on a different grid",
                        path.display()
                    )));
                }
                Ok(state)
            }
        }
    }

    pub fn perturbed_state(
        &self,
        grid: &Arc<Grid>,
        p: &PerturbationConfig,
    ) -> Result<State, CliError> {
        let kmax = p.kmax.unwrap_or(grid.dealias_cutoff());
        Ok(State::random(grid, kmax, p.energy, &mut self.rng(STREAM_PERTURBED))?)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.integrator.seed);
        rng.set_stream(stream);
        rng
    }
}

fn nonnegative(what: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} must be nonnegative, got {v}")))
    }
}
