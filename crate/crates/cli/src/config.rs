//! Experiment configuration files and per-command parameter schemas.

use std::path::PathBuf;

use fblab_core::damped_wave::DecayModel;
use fblab_core::inequality::NtOptions;
use fblab_core::measure::{SetSpec, DEFAULT_T_MAX};
use fblab_core::pls::PlsConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    KernelCheck,
    Density,
    TransformCheck,
    PlsSweep,
    Multiband,
    NazarovTuran,
    Bernstein,
    DampedWave,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Density => "density",
            Command::TransformCheck => "transform-check",
            Command::PlsSweep => "pls-sweep",
            Command::Multiband => "multiband",
            Command::NazarovTuran => "nazarov-turan",
            Command::Bernstein => "bernstein",
            Command::DampedWave => "damped-wave",
        }
    }
}

/// Contents of a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

/// Typed parameters, one variant per command.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    KernelCheck(KernelCheckParams),
    Density(DensityParams),
    TransformCheck(TransformCheckParams),
    PlsSweep(PlsSweepParams),
    Multiband(MultibandParams),
    NazarovTuran(NazarovTuranParams),
    Bernstein(BernsteinParams),
    DampedWave(DampedWaveParams),
}

impl Params {
    pub fn parse(command: Command, value: serde_json::Value) -> serde_json::Result<Self> {
        use serde_json::from_value as v;
        Ok(match command {
            Command::KernelCheck => Params::KernelCheck(v(value)?),
            Command::Density => Params::Density(v(value)?),
            Command::TransformCheck => Params::TransformCheck(v(value)?),
            Command::PlsSweep => Params::PlsSweep(v(value)?),
            Command::Multiband => Params::Multiband(v(value)?),
            Command::NazarovTuran => Params::NazarovTuran(v(value)?),
            Command::Bernstein => Params::Bernstein(v(value)?),
            Command::DampedWave => Params::DampedWave(v(value)?),
        })
    }
}

fn default_half_set() -> SetSpec {
    SetSpec::Periodic {
        period: 1.0,
        blocks: vec![[0.0, 0.5]],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelCheckParams {
    pub m_max: u32,
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
}

impl Default for KernelCheckParams {
    fn default() -> Self {
        KernelCheckParams {
            m_max: 3,
            s_min: 1.0,
            s_max: 50.0,
            samples: 500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityParams {
    pub alpha: f64,
    pub set: SetSpec,
    pub t_max: f64,
    pub window: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        DensityParams {
            alpha: 0.5,
            set: default_half_set(),
            t_max: DEFAULT_T_MAX,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformCheckParams {
    pub alpha: f64,
    /// Bands `[b, b+1]` for `b < r`.
    pub r: usize,
    pub t_max: f64,
    pub degree: usize,
    pub profiles: usize,
    /// Defaults to the smallest order resolving `t_max`.
    pub nodes_per_band: Option<usize>,
}

impl Default for TransformCheckParams {
    fn default() -> Self {
        TransformCheckParams {
            alpha: 0.5,
            r: 8,
            t_max: 200.0,
            degree: 3,
            profiles: 4,
            nodes_per_band: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlsSweepParams {
    pub alpha: f64,
    pub set: SetSpec,
    pub set_t_max: f64,
    pub r_list: Vec<f64>,
    pub pls: PlsConfig,
}

impl Default for PlsSweepParams {
    fn default() -> Self {
        PlsSweepParams {
            alpha: 0.5,
            set: default_half_set(),
            set_t_max: DEFAULT_T_MAX,
            r_list: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            pls: PlsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPositions {
    pub n: usize,
    pub count: usize,
    pub max_position: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultibandParams {
    pub alpha: f64,
    pub set: SetSpec,
    pub set_t_max: f64,
    /// Explicit band positions; exclusive with `random`.
    pub positions: Option<Vec<Vec<f64>>>,
    pub random: Option<RandomPositions>,
    pub pls: PlsConfig,
}

impl Default for MultibandParams {
    fn default() -> Self {
        MultibandParams {
            alpha: 0.5,
            set: default_half_set(),
            set_t_max: DEFAULT_T_MAX,
            positions: Some(vec![vec![2.0, 40.0], vec![2.0, 400.0], vec![100.0, 103.0]]),
            random: None,
            pls: PlsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NazarovTuranParams {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub interval: [f64; 2],
    /// Defaults to the left half of the interval.
    pub set: Option<SetSpec>,
    pub p: f64,
    pub max_lambda: f64,
    pub options: NtOptions,
}

impl Default for NazarovTuranParams {
    fn default() -> Self {
        NazarovTuranParams {
            n: 2,
            m: 2,
            trials: 1000,
            interval: [0.0, 1.0],
            set: None,
            p: 2.0,
            max_lambda: 5.0,
            options: NtOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BernsteinParams {
    pub alpha: f64,
    pub r: f64,
    pub k_list: Vec<u32>,
    pub profiles: usize,
    pub degree: usize,
    pub t_max: f64,
    pub nodes_per_band: Option<usize>,
}

impl Default for BernsteinParams {
    fn default() -> Self {
        BernsteinParams {
            alpha: 0.5,
            r: 2.0,
            k_list: vec![1, 2],
            profiles: 20,
            degree: 4,
            t_max: 40.0,
            nodes_per_band: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DampedWaveParams {
    pub d: u32,
    pub s: f64,
    pub damping: SetSpec,
    pub c0: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub modes: usize,
    pub t_final: f64,
    pub output_dt: f64,
    /// Defaults to `exp` for `s ≥ 2`, `poly` otherwise.
    pub model: Option<DecayModel>,
    pub abscissa: bool,
}

impl Default for DampedWaveParams {
    fn default() -> Self {
        DampedWaveParams {
            d: 3,
            s: 2.0,
            damping: default_half_set(),
            c0: 1.0,
            l: 40.0,
            modes: 64,
            t_final: 100.0,
            output_dt: 0.5,
            model: None,
            abscissa: false,
        }
    }
}
