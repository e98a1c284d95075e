//! Experiment configuration: a hand-editable TOML tree with typed scalars,
//! arrays, and nested tables. `schema_version` is mandatory; unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admm::DualUpdate;
use crate::models::PhantomSpec;

use super::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub iterstudy: IterStudyConfig,
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    #[serde(default)]
    pub phantom: PhantomConfig,
    /// For `kind = "data"`: path to a serialized measurement array.
    #[serde(default)]
    pub data_path: Option<PathBuf>,
    /// Optional ground-truth stack for metrics in data mode.
    #[serde(default)]
    pub reference_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Phantom,
    Data,
}

/// Phantom parameters; the block moves in a straight line from
/// `block_start` by `block_step` pixels per frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomConfig {
    pub image_size: usize,
    pub n_frames: usize,
    pub disc_center: [f64; 2],
    pub disc_radius: f64,
    pub disc_intensity: f64,
    pub block_size: usize,
    pub block_intensity: f64,
    pub block_start: [i64; 2],
    pub block_step: [i64; 2],
    pub mask_radius: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig {
            image_size: 32,
            n_frames: 16,
            disc_center: [16.0, 16.0],
            disc_radius: 12.0,
            disc_intensity: 0.5,
            block_size: 4,
            block_intensity: 1.0,
            block_start: [14, 7],
            block_step: [0, 1],
            mask_radius: 14.0,
        }
    }
}

impl PhantomConfig {
    pub fn to_spec(&self) -> PhantomSpec {
        let positions = (0..self.n_frames as i64)
            .map(|t| {
                (
                    self.block_start[0] + t * self.block_step[0],
                    self.block_start[1] + t * self.block_step[1],
                )
            })
            .collect();
        PhantomSpec {
            image_size: self.image_size,
            n_frames: self.n_frames,
            disc_center: (self.disc_center[0], self.disc_center[1]),
            disc_radius: self.disc_radius,
            disc_intensity: self.disc_intensity,
            block_size: self.block_size,
            block_intensity: self.block_intensity,
            block_positions: positions,
            mask_radius: self.mask_radius,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    pub kind: ForwardKind,
    #[serde(default)]
    pub tomo: TomoConfig,
    #[serde(default)]
    pub fourier: FourierConfig,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            kind: ForwardKind::Tomo,
            tomo: TomoConfig::default(),
            fourier: FourierConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForwardKind {
    Tomo,
    Fourier,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomoConfig {
    /// Detector bins; 0 means "same as image size".
    pub n_detectors: usize,
    pub angles_per_frame: usize,
}

impl Default for TomoConfig {
    fn default() -> Self {
        TomoConfig {
            n_detectors: 0,
            angles_per_frame: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierConfig {
    pub pattern: FourierPattern,
    /// For `rows`: keep every `step`-th frequency row.
    pub step: usize,
    /// For `random`: fraction of frequencies kept.
    pub fraction: f64,
    pub pattern_seed: u64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            pattern: FourierPattern::Rows,
            step: 4,
            fraction: 0.25,
            pattern_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FourierPattern {
    Full,
    Rows,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma: f64,
    /// Interpret sigma as a fraction of the peak |data| value.
    pub relative_to_peak: bool,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma: 0.0,
            relative_to_peak: false,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default)]
    pub ias: IasSolverConfig,
    #[serde(default)]
    pub admm: AdmmSolverConfig,
    #[serde(default)]
    pub lsq: LsqSolverConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverKind::Ias,
            ias: IasSolverConfig::default(),
            admm: AdmmSolverConfig::default(),
            lsq: LsqSolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ias,
    Admm,
    Lsq,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverKind::Ias => write!(f, "ias"),
            SolverKind::Admm => write!(f, "admm"),
            SolverKind::Lsq => write!(f, "lsq"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IasSolverConfig {
    pub eta: f64,
    pub theta_scale: f64,
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    pub inner_max_iters: usize,
    pub inner_atol: f64,
    pub inner_btol: f64,
}

impl Default for IasSolverConfig {
    fn default() -> Self {
        IasSolverConfig {
            eta: 1e-8,
            theta_scale: 1e-1,
            outer_tol: 1e-8,
            max_outer_iters: 10,
            inner_max_iters: 50,
            inner_atol: 1e-8,
            inner_btol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmSolverConfig {
    pub mu_s: f64,
    pub mu_t: f64,
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_outer_iters: usize,
    pub inner_max_iters: usize,
    pub inner_atol: f64,
    pub inner_btol: f64,
    pub dual_update: DualUpdate,
}

impl Default for AdmmSolverConfig {
    fn default() -> Self {
        AdmmSolverConfig {
            mu_s: 1e-2,
            mu_t: 1e-2,
            rho: 1.0,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            max_outer_iters: 10,
            inner_max_iters: 50,
            inner_atol: 1e-8,
            inner_btol: 1e-8,
            dual_update: DualUpdate::Verbatim,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsqSolverConfig {
    /// Tikhonov weight; the solve uses LSMR with damp = sqrt(lambda).
    pub lambda: f64,
    pub max_iters: usize,
    pub atol: f64,
    pub btol: f64,
}

impl Default for LsqSolverConfig {
    fn default() -> Self {
        LsqSolverConfig {
            lambda: 1e-3,
            max_iters: 200,
            atol: 1e-8,
            btol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DictionaryConfig {
    pub haar_levels: usize,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig { haar_levels: 3 }
    }
}

/// Hyper-parameter grids as base-10 exponents.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub eta_log10: Vec<f64>,
    #[serde(default)]
    pub theta_log10: Vec<f64>,
    #[serde(default)]
    pub mu_s_log10: Vec<f64>,
    #[serde(default)]
    pub mu_t_log10: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterStudyConfig {
    pub inner_caps: Vec<usize>,
    pub max_outer_iters: usize,
}

impl Default for IterStudyConfig {
    fn default() -> Self {
        IterStudyConfig {
            inner_caps: vec![10, 50, 150, 300],
            max_outer_iters: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub k1: f64,
    pub k2: f64,
    pub gaussian_sigma: f64,
    pub window_size: usize,
    #[serde(default)]
    pub data_range: Option<f64>,
    /// Restrict SSIM and previews to the phantom field-of-view mask.
    pub use_phantom_mask: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            k1: 0.1,
            k2: 0.1,
            gaussian_sigma: 1.5,
            window_size: 11,
            data_range: None,
            use_phantom_mask: true,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.problem.kind {
            ProblemKind::Phantom => {
                self.problem
                    .phantom
                    .to_spec()
                    .validate()
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            ProblemKind::Data => {
                if self.problem.data_path.is_none() {
                    return Err(HarnessError::Config(
                        "problem.kind = \"data\" requires problem.data_path".into(),
                    ));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            let (a, b) = match self.solver.kind {
                SolverKind::Ias => (&sweep.eta_log10, &sweep.theta_log10),
                SolverKind::Admm => (&sweep.mu_s_log10, &sweep.mu_t_log10),
                SolverKind::Lsq => {
                    return Err(HarnessError::Config(
                        "sweep is not defined for the lsq solver".into(),
                    ))
                }
            };
            if a.is_empty() || b.is_empty() {
                return Err(HarnessError::Config(
                    "sweep grids must be nonempty for the active solver".into(),
                ));
            }
        }
        if self.metrics.window_size < 3 || self.metrics.window_size % 2 == 0 {
            return Err(HarnessError::Config(format!(
                "metrics.window_size must be odd and >= 3, got {}",
                self.metrics.window_size
            )));
        }
        Ok(())
    }

    /// Stable content hash over the resolved configuration (FNV-1a 64).
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in canon.as_bytes() {
            h ^= *byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        format!("{h:016x}")
    }
}
