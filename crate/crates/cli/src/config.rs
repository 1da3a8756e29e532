//! Effective parameters: flag, then config file, then built-in default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trendhmm::{
    BinningMode, BinningSpec, EmissionPairing, EstimateConfig, StationaryMethod, ZeroPolicy,
    DEFAULT_TOLERANCE,
};

use crate::args::{
    BinningArg, BinningArgs, Format, MethodArg, PairingArg, SmoothingArgs, ZeroPolicyArg,
};
use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "TRENDHMM_SEED";

/// Values a `--config` file may set. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub tolerance: Option<f64>,
    pub k: Option<usize>,
    pub binning: Option<BinningArg>,
    pub thresholds: Option<Vec<f64>>,
    pub zero_policy: Option<ZeroPolicyArg>,
    pub smoothing: Option<f64>,
    pub pairing: Option<PairingArg>,
    pub method: Option<MethodArg>,
    pub seed: Option<u64>,
    pub length: Option<usize>,
    pub trials: Option<usize>,
    pub include_start: Option<bool>,
    pub max_iter: Option<usize>,
    pub loglik_tol: Option<f64>,
    pub floor: Option<f64>,
    pub reference_tolerance: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Config,
    Env,
    Random,
}

/// Everything a run used, echoed under `--verbose`.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub inputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub format: Format,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binning: Option<BinningSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_source: Option<SeedSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_start: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglik_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_tolerance: Option<f64>,
}

impl RunConfig {
    pub fn new(
        subcommand: &'static str,
        format: Format,
        tolerance: f64,
        output: Option<PathBuf>,
    ) -> Self {
        Self {
            subcommand,
            inputs: Vec::new(),
            output,
            format,
            tolerance,
            k: None,
            binning: None,
            estimate: None,
            method: None,
            seed: None,
            seed_source: None,
            length: None,
            trials: None,
            include_start: None,
            max_iter: None,
            loglik_tol: None,
            floor: None,
            reference_tolerance: None,
        }
    }
}

pub fn tolerance(flag: Option<f64>, file: &FileConfig) -> CliResult<f64> {
    let tol = flag.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--tolerance must be positive, got {tol}"
        )));
    }
    Ok(tol)
}

pub fn lag(flag: Option<usize>, file: &FileConfig) -> CliResult<usize> {
    let k = flag.or(file.k).unwrap_or(1);
    if k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    Ok(k)
}

pub fn binning(args: &BinningArgs, file: &FileConfig) -> CliResult<BinningSpec> {
    let mode = args
        .binning
        .or(file.binning)
        .unwrap_or(BinningArg::EqualWidth);
    let thresholds = args.thresholds.clone().or_else(|| file.thresholds.clone());
    let mode = match (mode, thresholds) {
        (BinningArg::Explicit, Some(t)) => {
            let cuts: [f64; 5] = t.try_into().map_err(|t: Vec<f64>| {
                CliError::Usage(format!("--thresholds needs 5 values, got {}", t.len()))
            })?;
            BinningMode::Explicit(cuts)
        }
        (BinningArg::Explicit, None) => {
            return Err(CliError::Usage(
                "--binning explicit needs --thresholds".into(),
            ))
        }
        (_, Some(_)) => {
            return Err(CliError::Usage(
                "--thresholds requires --binning explicit".into(),
            ))
        }
        (BinningArg::EqualWidth, None) => BinningMode::EqualWidth,
        (BinningArg::Quantile, None) => BinningMode::Quantile,
    };
    let zero_policy = match args.zero_policy.or(file.zero_policy) {
        None | Some(ZeroPolicyArg::Decrease) => ZeroPolicy::Decrease,
        Some(ZeroPolicyArg::Increase) => ZeroPolicy::Increase,
        Some(ZeroPolicyArg::Reject) => ZeroPolicy::Reject,
    };
    Ok(BinningSpec { mode, zero_policy })
}

pub fn estimate_config(args: &SmoothingArgs, file: &FileConfig) -> CliResult<EstimateConfig> {
    let smoothing = args.smoothing.or(file.smoothing).unwrap_or(0.0);
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(CliError::Usage(format!(
            "--smoothing must be >= 0, got {smoothing}"
        )));
    }
    let pairing = match args.pairing.or(file.pairing) {
        None | Some(PairingArg::SameStep) => EmissionPairing::SameStep,
        Some(PairingArg::NextStep) => EmissionPairing::NextStep,
    };
    Ok(EstimateConfig { smoothing, pairing })
}

pub fn method(flag: Option<MethodArg>, file: &FileConfig) -> MethodArg {
    flag.or(file.method).unwrap_or(MethodArg::Linear)
}

pub fn stationary_method(method: MethodArg) -> StationaryMethod {
    match method {
        MethodArg::Linear => StationaryMethod::Linear,
        MethodArg::Power => StationaryMethod::Power,
    }
}

/// `--seed`, then the config file, then `$TRENDHMM_SEED`, then OS entropy.
pub fn seed(flag: Option<u64>, file: &FileConfig) -> CliResult<(Option<u64>, SeedSource)> {
    if let Some(s) = flag {
        return Ok((Some(s), SeedSource::Flag));
    }
    if let Some(s) = file.seed {
        return Ok((Some(s), SeedSource::Config));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(|s| (Some(s), SeedSource::Env))
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a u64 seed"))),
        Err(_) => Ok((None, SeedSource::Random)),
    }
}

pub fn positive(name: &str, value: usize) -> CliResult<usize> {
    if value == 0 {
        return Err(CliError::Usage(format!("--{name} must be at least 1")));
    }
    Ok(value)
}

pub fn non_negative(name: &str, value: f64) -> CliResult<f64> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(CliError::Usage(format!(
            "--{name} must be >= 0, got {value}"
        )));
    }
    Ok(value)
}
