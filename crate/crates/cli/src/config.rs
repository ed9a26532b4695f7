//! Effective-configuration resolution: defaults, then config-file keys,
//! then command-line flags, highest last.

use std::path::Path;

use serde::Deserialize;
use tnet_core::dissim::DissimWeights;
use tnet_core::error::{Error, Result};
use tnet_core::estimate::{GridSpec, ThetaGrid};
use tnet_core::ingest::MissingPolicy;
use tnet_core::rolling::{MatrixNorm, WindowSpec};
use tnet_core::synth::{RegimeSpec, SynthConfig};

/// Config-file schema; every key mirrors a flag of the same name.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub width: Option<usize>,
    pub step: Option<usize>,
    pub return_interval: Option<usize>,
    pub missing_policy: Option<String>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub theta_step: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub norm: Option<String>,
    pub workers: Option<usize>,
    pub cluster_bins: Option<usize>,
    pub theta: Option<f64>,
    // synth keys
    pub n: Option<usize>,
    pub days: Option<usize>,
    pub seed: Option<u64>,
    pub idio_vol: Option<f64>,
    /// `[[start_day, loading], ...]`
    pub regimes: Option<Vec<(usize, f64)>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig {
            reason: format!("{}: {e}", path.display()),
        })
    }
}

/// Flag values as parsed; `None` means "not given on the command line".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub width: Option<usize>,
    pub step: Option<usize>,
    pub return_interval: Option<usize>,
    pub missing_policy: Option<String>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub theta_step: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub norm: Option<String>,
    pub workers: Option<usize>,
    pub cluster_bins: Option<usize>,
    pub theta: Option<f64>,
    pub n: Option<usize>,
    pub days: Option<usize>,
    pub seed: Option<u64>,
    pub idio_vol: Option<f64>,
    pub regimes: Option<String>,
}

/// Fully resolved analysis configuration.
#[derive(Debug, Clone)]
pub struct Effective {
    pub width: usize,
    pub step: usize,
    pub return_interval: usize,
    pub missing_policy: MissingPolicy,
    pub theta_min: Option<f64>,
    pub theta_max: f64,
    pub theta_step: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub norm: MatrixNorm,
    pub workers: Option<usize>,
    pub cluster_bins: usize,
    pub theta: Option<f64>,
    pub n: usize,
    pub days: usize,
    pub seed: u64,
    pub idio_vol: f64,
    pub regimes: Vec<RegimeSpec>,
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>, default: T) -> T {
    flag.clone().or_else(|| file.clone()).unwrap_or(default)
}

fn pick_opt<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

pub fn parse_missing_policy(s: &str) -> Result<MissingPolicy> {
    match s {
        "drop-date" => Ok(MissingPolicy::DropDate),
        "forward-fill" => Ok(MissingPolicy::ForwardFill),
        other => Err(Error::InvalidConfig {
            reason: format!("unknown missing policy '{other}' (expected drop-date|forward-fill)"),
        }),
    }
}

/// Parses `start:loading,start:loading,...`.
pub fn parse_regimes(s: &str) -> Result<Vec<RegimeSpec>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let (start, loading) = part.split_once(':').ok_or_else(|| Error::InvalidConfig {
            reason: format!("regime '{part}' is not start:loading"),
        })?;
        let start_day = start.trim().parse().map_err(|_| Error::InvalidConfig {
            reason: format!("regime start '{start}' is not an integer"),
        })?;
        let loading = loading.trim().parse().map_err(|_| Error::InvalidConfig {
            reason: format!("regime loading '{loading}' is not a number"),
        })?;
        out.push(RegimeSpec { start_day, loading });
    }
    Ok(out)
}

pub fn resolve(file: &FileConfig, flags: &Overrides) -> Result<Effective> {
    let missing = pick(
        &flags.missing_policy,
        &file.missing_policy,
        "drop-date".into(),
    );
    let norm = pick(&flags.norm, &file.norm, "frobenius".into());
    let regimes = match (&flags.regimes, &file.regimes) {
        (Some(s), _) => parse_regimes(s)?,
        (None, Some(pairs)) => pairs
            .iter()
            .map(|&(start_day, loading)| RegimeSpec { start_day, loading })
            .collect(),
        (None, None) => vec![
            RegimeSpec {
                start_day: 0,
                loading: 0.2,
            },
            RegimeSpec {
                start_day: pick(&flags.days, &file.days, 600) / 2,
                loading: 0.7,
            },
        ],
    };
    Ok(Effective {
        width: pick(&flags.width, &file.width, 250),
        step: pick(&flags.step, &file.step, 5),
        return_interval: pick(&flags.return_interval, &file.return_interval, 1),
        missing_policy: parse_missing_policy(&missing)?,
        theta_min: pick_opt(&flags.theta_min, &file.theta_min),
        theta_max: pick(&flags.theta_max, &file.theta_max, 1.0),
        theta_step: pick(&flags.theta_step, &file.theta_step, 0.01),
        alpha: pick(&flags.alpha, &file.alpha, 0.45),
        beta: pick(&flags.beta, &file.beta, 0.45),
        gamma: pick(&flags.gamma, &file.gamma, 0.1),
        norm: MatrixNorm::parse(&norm)?,
        workers: pick_opt(&flags.workers, &file.workers),
        cluster_bins: pick(&flags.cluster_bins, &file.cluster_bins, 20),
        theta: pick_opt(&flags.theta, &file.theta),
        n: pick(&flags.n, &file.n, 40),
        days: pick(&flags.days, &file.days, 600),
        seed: pick(&flags.seed, &file.seed, 1),
        idio_vol: pick(&flags.idio_vol, &file.idio_vol, 0.02),
        regimes,
    })
}

impl Effective {
    pub fn window(&self) -> Result<WindowSpec> {
        WindowSpec::new(self.width, self.step)
    }

    pub fn weights(&self) -> Result<DissimWeights> {
        DissimWeights::new(self.alpha, self.beta, self.gamma)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        match self.theta_min {
            Some(min) => Ok(GridSpec::Explicit(ThetaGrid::new(
                min,
                self.theta_max,
                self.theta_step,
            )?)),
            None => Ok(GridSpec::Auto {
                step: self.theta_step,
            }),
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            instruments: self.n,
            days: self.days,
            regimes: self.regimes.clone(),
            idio_vol: self.idio_vol,
            seed: self.seed,
        }
    }

    /// `key = value` lines of the analysis parameters, in a fixed order.
    /// Excludes the worker count: it never affects results and must not
    /// perturb output bytes.
    pub fn echo_analysis(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("width", self.width.to_string()),
            ("step", self.step.to_string()),
            ("return_interval", self.return_interval.to_string()),
            (
                "missing_policy",
                match self.missing_policy {
                    MissingPolicy::DropDate => "drop-date".into(),
                    MissingPolicy::ForwardFill => "forward-fill".into(),
                },
            ),
            (
                "theta_min",
                self.theta_min
                    .map_or_else(|| "auto".into(), |v| v.to_string()),
            ),
            ("theta_max", self.theta_max.to_string()),
            ("theta_step", self.theta_step.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("gamma", self.gamma.to_string()),
            ("norm", self.norm.as_str().to_string()),
            ("cluster_bins", self.cluster_bins.to_string()),
        ];
        if let Some(theta) = self.theta {
            out.push(("theta", theta.to_string()));
        }
        out
    }

    pub fn echo_synth(&self) -> Vec<(&'static str, String)> {
        let regimes = self
            .regimes
            .iter()
            .map(|r| format!("{}:{}", r.start_day, r.loading))
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("n", self.n.to_string()),
            ("days", self.days.to_string()),
            ("seed", self.seed.to_string()),
            ("idio_vol", self.idio_vol.to_string()),
            ("regimes", regimes),
            ("generator", tnet_core::rng::GENERATOR_ID.to_string()),
        ]
    }
}
